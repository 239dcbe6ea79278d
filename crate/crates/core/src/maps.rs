//! Holomorphic maps: unitaries, the ellipsoid normalizer L, the slit-ball
//! automorphisms, the collapse map Φ(z) = (z′zₙ, zₙ), the fibered
//! automorphisms (A(z′), T(z′)^{1/n} zₙ) and representative coordinates.
//!
//! Jacobians follow the column convention `J[(i, j)] = ∂fᵢ/∂zⱼ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffgeo::{bergman_metric, log_kernel_jet, DerivativeMethod};
use crate::error::{BergmanError, Result};
use crate::kernels::{KernelModel, KernelSpec};
use crate::types::{inf_norm, CMatrix, ComplexPoint, HermitianForm, C64};

/// Tolerance on ‖U*U − I‖_∞ for unitary input.
pub const UNITARY_TOL: f64 = 1e-12;

pub trait HolomorphicMap: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint>;

    /// Complex Jacobian at z; defaults to [`numerical_jacobian`].
    fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        numerical_jacobian(self, z, 1e-3)
    }

    fn jacobian_det(&self, z: &ComplexPoint) -> Result<C64> {
        Ok(self.jacobian(z)?.determinant())
    }
}

/// Cauchy-circle Jacobian: ∂f/∂zⱼ ≈ (1/(Mh)) Σₘ f(z + hωᵐeⱼ)·ω⁻ᵐ with M = 8,
/// exact up to O(h⁸) for holomorphic f.
pub fn numerical_jacobian<F: HolomorphicMap + ?Sized>(f: &F, z: &ComplexPoint, h: f64) -> Result<CMatrix> {
    const M: usize = 8;
    let n = f.dim();
    let mut jac = CMatrix::zeros(n, n);
    for j in 0..n {
        for m in 0..M {
            let omega = C64::from_polar(1.0, 2.0 * PI * m as f64 / M as f64);
            let fz = f.apply(&z.shifted(j, omega * h))?;
            for i in 0..n {
                jac[(i, j)] += fz.coords()[i] * omega.conj() / (M as f64 * h);
            }
        }
    }
    Ok(jac)
}

/// Largest entrywise gap between the analytic and numerical Jacobians.
pub fn jacobian_consistency(f: &dyn HolomorphicMap, z: &ComplexPoint) -> Result<f64> {
    let a = f.jacobian(z)?;
    let b = numerical_jacobian(f, z, 1e-3)?;
    Ok(inf_norm(&(a - b)))
}

#[derive(Debug, Clone)]
pub struct IdentityMap {
    n: usize,
}

impl IdentityMap {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl HolomorphicMap for IdentityMap {
    fn name(&self) -> String {
        format!("identity(n={})", self.n)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        Ok(z.clone())
    }

    fn jacobian(&self, _: &ComplexPoint) -> Result<CMatrix> {
        Ok(CMatrix::identity(self.n, self.n))
    }

    fn jacobian_det(&self, _: &ComplexPoint) -> Result<C64> {
        Ok(C64::new(1.0, 0.0))
    }
}

/// z ↦ M·z on column vectors.
#[derive(Debug, Clone)]
pub struct LinearMap {
    m: CMatrix,
    det: C64,
    label: String,
}

impl LinearMap {
    pub fn new(m: CMatrix, label: impl Into<String>) -> Result<Self> {
        if !m.is_square() {
            return Err(BergmanError::Parameter("linear map must be square".into()));
        }
        let det = m.clone().determinant();
        Ok(Self {
            m,
            det,
            label: label.into(),
        })
    }

    /// Fails unless ‖U*U − I‖_∞ ≤ 1e−12.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let n = u.nrows();
        if !u.is_square() {
            return Err(BergmanError::Parameter("unitary must be square".into()));
        }
        let defect = inf_norm(&(u.adjoint() * &u - CMatrix::identity(n, n)));
        if !(defect <= UNITARY_TOL) {
            return Err(BergmanError::Parameter(format!(
                "matrix is not unitary: ‖U*U − I‖∞ = {defect:e}"
            )));
        }
        Self::new(u, format!("unitary(n={n})"))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }
}

impl HolomorphicMap for LinearMap {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        Ok(ComplexPoint::from_vector(&(&self.m * z.to_vector())))
    }

    fn jacobian(&self, _: &ComplexPoint) -> Result<CMatrix> {
        Ok(self.m.clone())
    }

    fn jacobian_det(&self, _: &ComplexPoint) -> Result<C64> {
        Ok(self.det)
    }
}

pub fn unitary_map(u: CMatrix) -> Result<LinearMap> {
    LinearMap::unitary(u)
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of R's diagonal moved into Q.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Σ ζᵢ h_{ij̄} ζ̄ⱼ < n + 1.
pub fn ellipsoid_membership(h: &HermitianForm, zeta: &ComplexPoint) -> bool {
    h.quadratic(zeta) < (h.dim() + 1) as f64
}

/// L(ζ) = (n+1)^{−1/2}·ζA for the row vector ζ, where H = AA*; it carries
/// E_H onto 𝔹ⁿ. As a column map this is w = Aᵀζ/√(n+1).
pub fn ellipsoid_normalizer(h: &HermitianForm) -> Result<LinearMap> {
    let a = crate::types::hermitian_sqrt(h)?;
    let n = h.dim();
    let m = a.transpose() / C64::new(((n + 1) as f64).sqrt(), 0.0);
    LinearMap::new(m, format!("ellipsoid-normalizer(n={n})"))
}

/// (z₁, z₂) ↦ ((a − z₁)/(1 − āz₁), √(1 − |a|²)·z₂/(1 − āz₁)), an automorphism
/// of 𝔹² that keeps {z₂ = 0} invariant.
#[derive(Debug, Clone)]
pub struct SlitBallAutomorphism {
    pub a: C64,
}

impl SlitBallAutomorphism {
    pub fn new(a: C64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(BergmanError::Parameter(format!("need |a| < 1, got |a| = {}", a.norm())));
        }
        Ok(Self { a })
    }
}

impl HolomorphicMap for SlitBallAutomorphism {
    fn name(&self) -> String {
        format!("slit-ball-automorphism(a={})", self.a)
    }

    fn dim(&self) -> usize {
        2
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        check_dim(z, 2)?;
        let [z1, z2] = [z.coords()[0], z.coords()[1]];
        let d = C64::new(1.0, 0.0) - self.a.conj() * z1;
        let s = (1.0 - self.a.norm_sqr()).sqrt();
        Ok(ComplexPoint::new(vec![(self.a - z1) / d, z2 * s / d]))
    }

    fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        check_dim(z, 2)?;
        let [z1, z2] = [z.coords()[0], z.coords()[1]];
        let ab = self.a.conj();
        let d = C64::new(1.0, 0.0) - ab * z1;
        let s = (1.0 - self.a.norm_sqr()).sqrt();
        let d2 = d * d;
        Ok(CMatrix::from_row_slice(
            2,
            2,
            &[
                (self.a * ab - 1.0) / d2,
                C64::new(0.0, 0.0),
                z2 * s * ab / d2,
                C64::new(s, 0.0) / d,
            ],
        ))
    }

    fn jacobian_det(&self, z: &ComplexPoint) -> Result<C64> {
        check_dim(z, 2)?;
        let d = C64::new(1.0, 0.0) - self.a.conj() * z.coords()[0];
        let s2 = 1.0 - self.a.norm_sqr();
        Ok(-(s2.powf(1.5)) / (d * d * d))
    }
}

/// Φ(z) = (z′zₙ, zₙ), from the slit ball onto the collapsed slit ball.
#[derive(Debug, Clone)]
pub struct CollapseMap {
    n: usize,
}

/// Φ⁻¹(w) = (w′/wₙ, wₙ).
#[derive(Debug, Clone)]
pub struct CollapseInverse {
    n: usize,
}

impl CollapseMap {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(BergmanError::Parameter("collapse map needs n ≥ 2".into()));
        }
        Ok(Self { n })
    }

    pub fn inverse(&self) -> CollapseInverse {
        CollapseInverse { n: self.n }
    }
}

impl CollapseInverse {
    pub fn new(n: usize) -> Result<Self> {
        Ok(CollapseMap::new(n)?.inverse())
    }
}

fn last_nonzero(z: &ComplexPoint) -> Result<C64> {
    let last = z.coords()[z.dim() - 1];
    if last == C64::new(0.0, 0.0) {
        return Err(BergmanError::Domain(format!("last coordinate of {z} is zero")));
    }
    Ok(last)
}

impl HolomorphicMap for CollapseMap {
    fn name(&self) -> String {
        format!("collapse(n={})", self.n)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        check_dim(z, self.n)?;
        let zn = last_nonzero(z)?;
        let mut out = z.clone();
        for c in &mut out.coords_mut()[..self.n - 1] {
            *c *= zn;
        }
        Ok(out)
    }

    fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        check_dim(z, self.n)?;
        let n = self.n;
        let zn = z.coords()[n - 1];
        let mut j = CMatrix::identity(n, n);
        for i in 0..n - 1 {
            j[(i, i)] = zn;
            j[(i, n - 1)] = z.coords()[i];
        }
        Ok(j)
    }

    fn jacobian_det(&self, z: &ComplexPoint) -> Result<C64> {
        check_dim(z, self.n)?;
        Ok(z.coords()[self.n - 1].powu(self.n as u32 - 1))
    }
}

impl HolomorphicMap for CollapseInverse {
    fn name(&self) -> String {
        format!("collapse-inverse(n={})", self.n)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, w: &ComplexPoint) -> Result<ComplexPoint> {
        check_dim(w, self.n)?;
        let wn = last_nonzero(w)?;
        let mut out = w.clone();
        for c in &mut out.coords_mut()[..self.n - 1] {
            *c /= wn;
        }
        Ok(out)
    }

    fn jacobian(&self, w: &ComplexPoint) -> Result<CMatrix> {
        check_dim(w, self.n)?;
        let n = self.n;
        let wn = last_nonzero(w)?;
        let mut j = CMatrix::identity(n, n);
        for i in 0..n - 1 {
            j[(i, i)] = wn.inv();
            j[(i, n - 1)] = -w.coords()[i] / (wn * wn);
        }
        Ok(j)
    }

    fn jacobian_det(&self, w: &ComplexPoint) -> Result<C64> {
        check_dim(w, self.n)?;
        Ok(last_nonzero(w)?.powu(self.n as u32 - 1).inv())
    }
}

/// A = U∘φ_a on 𝔹ᵐ with the involution
/// φ_a(z) = (a − P_a z − s_a Q_a z)/(1 − ⟨z, a⟩), s_a = √(1 − |a|²).
#[derive(Debug, Clone)]
pub struct BallAutomorphism {
    pub a: ComplexPoint,
    pub u: CMatrix,
    det_u: C64,
}

impl BallAutomorphism {
    pub fn new(a: ComplexPoint, u: CMatrix) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(BergmanError::Parameter(format!("need |a| < 1, got {}", a.norm())));
        }
        let lin = LinearMap::unitary(u)?;
        if lin.dim() != a.dim() {
            return Err(BergmanError::Parameter("unitary and a differ in dimension".into()));
        }
        let det_u = lin.det;
        Ok(Self { a, u: lin.m, det_u })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            a: ComplexPoint::zeros(m),
            u: CMatrix::identity(m, m),
            det_u: C64::new(1.0, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// B = P_a + s_a(I − P_a).
    fn b_matrix(&self) -> CMatrix {
        let m = self.dim();
        let a2 = self.a.norm_sqr();
        let s = (1.0 - a2).sqrt();
        let av = self.a.to_vector();
        let p = if a2 > 0.0 {
            &av * av.adjoint() / C64::new(a2, 0.0)
        } else {
            CMatrix::zeros(m, m)
        };
        &p + (CMatrix::identity(m, m) - &p) * C64::new(s, 0.0)
    }

    /// 1 − ⟨z, a⟩.
    fn denom(&self, z: &ComplexPoint) -> C64 {
        C64::new(1.0, 0.0) - z.inner(&self.a)
    }

    pub fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        check_dim(z, self.dim())?;
        if self.a.norm_sqr() == 0.0 {
            return Ok(ComplexPoint::from_vector(&(&self.u * z.to_vector())));
        }
        let num = self.a.to_vector() - self.b_matrix() * z.to_vector();
        let phi = num / self.denom(z);
        Ok(ComplexPoint::from_vector(&(&self.u * phi)))
    }

    pub fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        check_dim(z, self.dim())?;
        if self.a.norm_sqr() == 0.0 {
            return Ok(self.u.clone());
        }
        let d = self.denom(z);
        let b = self.b_matrix();
        let num = self.a.to_vector() - &b * z.to_vector();
        let abar = self.a.conj().to_vector();
        let dphi = (-(b * d) + num * abar.transpose()) / (d * d);
        Ok(&self.u * dphi)
    }

    /// det dA(z) = det U·(−1)ᵐ(1 − |a|²)^{(m+1)/2}/(1 − ⟨z, a⟩)^{m+1}.
    pub fn jacobian_det(&self, z: &ComplexPoint) -> Result<C64> {
        check_dim(z, self.dim())?;
        Ok(self.det_constant() / self.denom(z).powu(self.dim() as u32 + 1))
    }

    fn det_constant(&self) -> C64 {
        let m = self.dim();
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.det_u * sign * (1.0 - self.a.norm_sqr()).powf((m + 1) as f64 / 2.0)
    }
}

/// φ(z) = (A(z′), T(z′)^{1/n}·zₙ) on 𝔹ⁿ with T = det dA. The root is the
/// principal n-th root of T's constant factor times (1 − ⟨z′, a⟩)^{−1}, the
/// continuation of the principal branch at z′ = 0.
#[derive(Debug, Clone)]
pub struct FiberedAutomorphism {
    pub base: BallAutomorphism,
    root_const: C64,
}

impl FiberedAutomorphism {
    pub fn new(base: BallAutomorphism) -> Result<Self> {
        let c = base.det_constant();
        if c.norm() == 0.0 {
            return Err(BergmanError::Parameter(
                "Jacobian determinant vanishes; no root branch".into(),
            ));
        }
        let n = base.dim() + 1;
        let root_const = c.powf(1.0 / n as f64);
        Ok(Self { base, root_const })
    }

    fn n(&self) -> usize {
        self.base.dim() + 1
    }

    fn split(&self, z: &ComplexPoint) -> Result<(ComplexPoint, C64)> {
        check_dim(z, self.n())?;
        let m = self.base.dim();
        Ok((ComplexPoint::new(z.coords()[..m].to_vec()), z.coords()[m]))
    }

    pub fn t(&self, zp: &ComplexPoint) -> Result<C64> {
        self.base.jacobian_det(zp)
    }

    pub fn t_root(&self, zp: &ComplexPoint) -> Result<C64> {
        check_dim(zp, self.base.dim())?;
        Ok(self.root_const / self.base.denom(zp))
    }

    /// |(1 − |z′|²)ⁿ|T(z′)|² − (1 − |A(z′)|²)ⁿ|.
    pub fn determinant_identity_residual(&self, zp: &ComplexPoint) -> Result<f64> {
        let n = self.n() as i32;
        let lhs = (1.0 - zp.norm_sqr()).powi(n) * self.t(zp)?.norm_sqr();
        let rhs = (1.0 - self.base.apply(zp)?.norm_sqr()).powi(n);
        Ok((lhs - rhs).abs())
    }
}

impl HolomorphicMap for FiberedAutomorphism {
    fn name(&self) -> String {
        format!("fibered-automorphism(n={})", self.n())
    }

    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        let (zp, zn) = self.split(z)?;
        let mut out = self.base.apply(&zp)?.into_inner();
        out.push(self.t_root(&zp)? * zn);
        Ok(ComplexPoint::new(out))
    }

    fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        let (zp, zn) = self.split(z)?;
        let m = self.base.dim();
        let da = self.base.jacobian(&zp)?;
        let d = self.base.denom(&zp);
        let mut j = CMatrix::zeros(m + 1, m + 1);
        j.view_mut((0, 0), (m, m)).copy_from(&da);
        for k in 0..m {
            j[(m, k)] = self.root_const * self.base.a.coords()[k].conj() / (d * d) * zn;
        }
        j[(m, m)] = self.root_const / d;
        Ok(j)
    }

    fn jacobian_det(&self, z: &ComplexPoint) -> Result<C64> {
        let (zp, _) = self.split(z)?;
        Ok(self.base.jacobian_det(&zp)? * self.t_root(&zp)?)
    }
}

/// T_p(z) = conj(g(p))⁻¹·[∂_ζ̄ log K(z, ζ) − ∂_ζ̄ log K(ζ, ζ)]_{ζ=p}, with the
/// inverse oriented so that dT_p(p) = I.
#[derive(Debug, Clone)]
pub struct RepresentativeMap {
    kernel: KernelModel,
    p: ComplexPoint,
    metric: HermitianForm,
    /// conj(g(p))⁻¹
    pull: CMatrix,
    offset: Vec<C64>,
}

impl RepresentativeMap {
    pub fn new(kernel: KernelModel, p: ComplexPoint) -> Result<Self> {
        let g = bergman_metric(&kernel, &p)?;
        let pull =
            g.g.matrix()
                .map(|x| x.conj())
                .try_inverse()
                .ok_or_else(|| BergmanError::Parameter(format!("metric at {p} is singular")))?;
        let offset = wbar_gradient(&kernel, &p, &p)?;
        Ok(Self {
            kernel,
            p,
            metric: g.g,
            pull,
            offset,
        })
    }

    pub fn base_point(&self) -> &ComplexPoint {
        &self.p
    }

    /// g(p); the image of T_p sits in the ellipsoid E_{g(p)}.
    pub fn metric(&self) -> &HermitianForm {
        &self.metric
    }

    pub fn kernel(&self) -> &KernelModel {
        &self.kernel
    }
}

/// ∂_{w̄ⱼ} log K(z, w) for all j.
fn wbar_gradient(k: &KernelModel, z: &ComplexPoint, w: &ComplexPoint) -> Result<Vec<C64>> {
    let jet = log_kernel_jet(k, z, w, false, DerivativeMethod::Auto)?;
    Ok((0..z.dim()).map(|j| jet.d(&[], &[j])).collect())
}

impl HolomorphicMap for RepresentativeMap {
    fn name(&self) -> String {
        format!("representative-coordinates(p={}, {})", self.p, self.kernel.label())
    }

    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn apply(&self, z: &ComplexPoint) -> Result<ComplexPoint> {
        check_dim(z, self.dim())?;
        let grad = wbar_gradient(&self.kernel, z, &self.p)?;
        let a = nalgebra::DVector::from_iterator(grad.len(), grad.iter().zip(&self.offset).map(|(x, y)| x - y));
        Ok(ComplexPoint::from_vector(&(&self.pull * a)))
    }

    fn jacobian(&self, z: &ComplexPoint) -> Result<CMatrix> {
        check_dim(z, self.dim())?;
        let n = self.dim();
        let jet = log_kernel_jet(&self.kernel, z, &self.p, true, DerivativeMethod::Auto)?;
        let d = CMatrix::from_fn(n, n, |j, k| jet.d(&[k], &[j]));
        Ok(&self.pull * d)
    }
}

pub fn representative_coordinates(k: &KernelModel, p: &ComplexPoint, z: &ComplexPoint) -> Result<ComplexPoint> {
    RepresentativeMap::new(k.clone(), p.clone())?.apply(z)
}

fn check_dim(z: &ComplexPoint, n: usize) -> Result<()> {
    if z.dim() != n {
        return Err(BergmanError::Parameter(format!(
            "expected a point of ℂ^{n}, got dimension {}",
            z.dim()
        )));
    }
    Ok(())
}

/// Map descriptor for scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Identity {
        n: usize,
    },
    #[serde(rename = "mobius_5_1")]
    SlitBallAutomorphism {
        #[serde(with = "crate::wire::cx")]
        a: C64,
    },
    #[serde(rename = "phi_5_2")]
    Collapse {
        #[serde(default = "two")]
        n: usize,
    },
    #[serde(rename = "phi_5_2_inverse")]
    CollapseInverse {
        #[serde(default = "two")]
        n: usize,
    },
    Unitary {
        #[serde(with = "crate::wire::cx_matrix")]
        matrix: CMatrix,
    },
    EllipsoidNormalizer {
        h: HermitianForm,
    },
    #[serde(rename = "family_5_3")]
    Fibered {
        a: ComplexPoint,
        #[serde(with = "crate::wire::cx_matrix")]
        unitary: CMatrix,
    },
    RepCoords {
        p: ComplexPoint,
        kernel: Box<KernelSpec>,
    },
}

fn two() -> usize {
    2
}

impl MapSpec {
    pub fn build(&self) -> Result<Arc<dyn HolomorphicMap>> {
        Ok(match self {
            MapSpec::Identity { n } => Arc::new(IdentityMap::new(*n)),
            MapSpec::SlitBallAutomorphism { a } => Arc::new(SlitBallAutomorphism::new(*a)?),
            MapSpec::Collapse { n } => Arc::new(CollapseMap::new(*n)?),
            MapSpec::CollapseInverse { n } => Arc::new(CollapseInverse::new(*n)?),
            MapSpec::Unitary { matrix } => Arc::new(LinearMap::unitary(matrix.clone())?),
            MapSpec::EllipsoidNormalizer { h } => Arc::new(ellipsoid_normalizer(h)?),
            MapSpec::Fibered { a, unitary } => Arc::new(FiberedAutomorphism::new(BallAutomorphism::new(
                a.clone(),
                unitary.clone(),
            )?)?),
            MapSpec::RepCoords { p, kernel } => Arc::new(RepresentativeMap::new(kernel.build()?, p.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{substream, DomainDescriptor};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_point<R: Rng>(rng: &mut R, n: usize, radius: f64) -> ComplexPoint {
        crate::domain::uniform_in_ball(rng, &ComplexPoint::zeros(n), radius)
    }

    #[test]
    fn slit_automorphism_values() {
        let f = SlitBallAutomorphism::new(c(0.5, 0.0)).unwrap();
        assert_eq!(
            f.apply(&ComplexPoint::zeros(2)).unwrap(),
            ComplexPoint::new(vec![c(0.5, 0.0), c(0.0, 0.0)])
        );
        let id = SlitBallAutomorphism::new(c(0.0, 0.0)).unwrap();
        let z = ComplexPoint::new(vec![c(0.2, 0.1), c(-0.3, 0.4)]);
        assert_eq!(
            id.apply(&z).unwrap(),
            ComplexPoint::new(vec![c(-0.2, -0.1), c(-0.3, 0.4)])
        );
        assert!(matches!(
            SlitBallAutomorphism::new(c(1.0, 0.0)),
            Err(BergmanError::Parameter(_))
        ));
    }

    #[test]
    fn slit_automorphism_orbit_accumulates_at_boundary() {
        let mut last = 1.0;
        for j in [2u32, 10, 100, 10_000] {
            let f = SlitBallAutomorphism::new(c(1.0 - 1.0 / j as f64, 0.0)).unwrap();
            let img = f.apply(&ComplexPoint::zeros(2)).unwrap();
            let gap = img.sub(&ComplexPoint::from_re(&[1.0, 0.0])).norm();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn slit_automorphism_preserves_ball_and_slit() {
        let mut rng = substream(11, 0);
        for _ in 0..500 {
            let a = random_point(&mut rng, 1, 0.99).coords()[0];
            let f = SlitBallAutomorphism::new(a).unwrap();
            let z = random_point(&mut rng, 2, 1.0);
            assert!(f.apply(&z).unwrap().norm_sqr() < 1.0);
            let on_slit = ComplexPoint::new(vec![z.coords()[0], c(0.0, 0.0)]);
            assert_eq!(f.apply(&on_slit).unwrap().coords()[1], c(0.0, 0.0));
            assert!(jacobian_consistency(&f, &z.scale(c(0.5, 0.0))).unwrap() < 1e-8);
            let det = f.jacobian(&z).unwrap().determinant();
            assert!((det - f.jacobian_det(&z).unwrap()).norm() < 1e-12 * (1.0 + det.norm()));
        }
    }

    #[test]
    fn collapse_map_example_and_round_trip() {
        let phi = CollapseMap::new(2).unwrap();
        let w = phi.apply(&ComplexPoint::from_re(&[0.5, 0.5])).unwrap();
        assert_eq!(w, ComplexPoint::from_re(&[0.25, 0.5]));
        let d2 = DomainDescriptor::collapsed_slit_ball(2).unwrap();
        assert!(d2.contains(&w));
        let q = phi.apply(&ComplexPoint::from_re(&[1.0, 0.0]));
        assert!(matches!(q, Err(BergmanError::Domain(_))));
        // Φ(1, t) → (0, 0) as t → 0
        let near = phi.apply(&ComplexPoint::from_re(&[1.0, 1e-9])).unwrap();
        assert!(near.norm() < 2e-9);
        let d1 = DomainDescriptor::slit_ball(2).unwrap();
        let inv = phi.inverse();
        for z in d1.sample(1000, 3).unwrap() {
            let w = phi.apply(&z).unwrap();
            assert!(d2.contains(&w));
            assert!(inv.apply(&w).unwrap().sub(&z).norm() <= 1e-14);
            assert!(jacobian_consistency(&phi, &z).unwrap() < 1e-8);
        }
    }

    #[test]
    fn ball_automorphism_determinant_and_jacobian() {
        let mut rng = substream(5, 1);
        for m in 1..=3 {
            for _ in 0..20 {
                let a = random_point(&mut rng, m, 0.9);
                let u = random_unitary(m, &mut rng);
                let f = BallAutomorphism::new(a.clone(), u).unwrap();
                let z = random_point(&mut rng, m, 0.9);
                let img = f.apply(&z).unwrap();
                assert!(img.norm_sqr() < 1.0);
                let jac = f.jacobian(&z).unwrap();
                assert!((jac.determinant() - f.jacobian_det(&z).unwrap()).norm() < 1e-10);
                // φ_a swaps a and 0
                let origin = f.apply(&a).unwrap();
                assert!(origin.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fibered_determinant_identity() {
        let base = BallAutomorphism::new(ComplexPoint::from_re(&[0.5]), CMatrix::identity(1, 1)).unwrap();
        let f = FiberedAutomorphism::new(base).unwrap();
        let zp = ComplexPoint::new(vec![c(0.3, -0.2)]);
        // T = (|a|² − 1)/(1 − āz′)²
        let d = c(1.0, 0.0) - c(0.5, 0.0) * zp.coords()[0];
        assert!((f.t(&zp).unwrap() - c(-0.75, 0.0) / (d * d)).norm() < 1e-15);
        assert!(f.determinant_identity_residual(&zp).unwrap() < 1e-12);
        let root = f.t_root(&zp).unwrap();
        assert!((root * root - f.t(&zp).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn fibered_identity_and_preservation() {
        let id = FiberedAutomorphism::new(BallAutomorphism::identity(2)).unwrap();
        let z = ComplexPoint::new(vec![c(0.1, 0.2), c(-0.3, 0.1), c(0.2, 0.2)]);
        assert!(id.apply(&z).unwrap().sub(&z).norm() < 1e-15);
        let mut rng = substream(9, 2);
        for n in 2..=3usize {
            let a = random_point(&mut rng, n - 1, 0.8);
            let u = random_unitary(n - 1, &mut rng);
            let f = FiberedAutomorphism::new(BallAutomorphism::new(a, u).unwrap()).unwrap();
            for _ in 0..200 {
                let z = random_point(&mut rng, n, 1.0);
                let w = f.apply(&z).unwrap();
                assert!(w.norm_sqr() < 1.0);
                let mut slit = z.clone();
                slit.coords_mut()[n - 1] = c(0.0, 0.0);
                assert_eq!(f.apply(&slit).unwrap().coords()[n - 1], c(0.0, 0.0));
                let zp = ComplexPoint::new(z.coords()[..n - 1].to_vec());
                assert!(f.determinant_identity_residual(&zp).unwrap() < 1e-10);
                assert!(jacobian_consistency(&f, &z.scale(c(0.5, 0.0))).unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn unitary_validation_and_haar_samples() {
        assert!(LinearMap::unitary(CMatrix::identity(2, 2) * c(1.1, 0.0)).is_err());
        let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(-1.0, 0.0)]));
        let f = LinearMap::unitary(phases).unwrap();
        let z = ComplexPoint::new(vec![c(0.5, 0.0), c(0.2, 0.3)]);
        assert_eq!(
            f.apply(&z).unwrap(),
            ComplexPoint::new(vec![c(0.0, 0.5), c(-0.2, -0.3)])
        );
        let mut rng = substream(1, 7);
        let u = LinearMap::unitary(random_unitary(3, &mut rng)).unwrap();
        assert!((u.jacobian_det(&z).unwrap().norm() - 1.0).abs() < 1e-12);
        let ball = DomainDescriptor::unit_ball(3);
        for z in ball.sample(1000, 4).unwrap() {
            let w = u.apply(&z).unwrap();
            assert!((w.norm() - z.norm()).abs() < 1e-14);
            assert!(w.norm_sqr() < 1.0);
        }
    }

    #[test]
    fn ellipsoid_membership_examples() {
        let h = HermitianForm::scaled_identity(1, 4.0);
        assert!(ellipsoid_membership(&h, &ComplexPoint::from_re(&[0.7])));
        assert!(!ellipsoid_membership(&h, &ComplexPoint::from_re(&[0.71])));
        let b = HermitianForm::scaled_identity(2, 3.0);
        assert!(ellipsoid_membership(&b, &ComplexPoint::from_re(&[0.6, 0.79])));
        assert!(!ellipsoid_membership(&b, &ComplexPoint::from_re(&[0.6, 0.81])));
    }

    #[test]
    fn ellipsoid_normalizer_examples() {
        let l = ellipsoid_normalizer(&HermitianForm::scaled_identity(3, 4.0)).unwrap();
        assert!((l.matrix() - CMatrix::identity(3, 3)).iter().all(|x| x.norm() < 1e-15));
        let l1 = ellipsoid_normalizer(&HermitianForm::scaled_identity(1, 4.0)).unwrap();
        let w = l1.apply(&ComplexPoint::from_re(&[0.5])).unwrap();
        assert!((w.coords()[0].re - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let h = HermitianForm::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        ))
        .unwrap();
        let l = ellipsoid_normalizer(&h).unwrap();
        let e = DomainDescriptor::ellipsoid(h.clone()).unwrap();
        for z in e.sample(1000, 8).unwrap() {
            let w = l.apply(&z).unwrap();
            assert!(w.norm_sqr() < 1.0);
            assert!((w.norm_sqr() - h.quadratic(&z) / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn map_spec_wire_format() {
        let s = r#"{"kind":"mobius_5_1","a":{"re":0.5,"im":0.0}}"#;
        let m: MapSpec = serde_json::from_str(s).unwrap();
        assert_eq!(m, MapSpec::SlitBallAutomorphism { a: c(0.5, 0.0) });
        let phi: MapSpec = serde_json::from_str(r#"{"kind":"phi_5_2"}"#).unwrap();
        assert_eq!(phi.build().unwrap().dim(), 2);
        let u: MapSpec = serde_json::from_str(r#"{"kind":"unitary","matrix":[[{"re":0,"im":1}]]}"#).unwrap();
        assert_eq!(u.build().unwrap().name(), "unitary(n=1)");
        let rep: MapSpec =
            serde_json::from_str(r#"{"kind":"rep_coords","p":[{"re":0.5}],"kernel":{"kind":"ball","n":1}}"#).unwrap();
        let t = rep.build().unwrap();
        assert_eq!(t.apply(&ComplexPoint::from_re(&[0.5])).unwrap(), ComplexPoint::zeros(1));
        let bad: std::result::Result<MapSpec, _> = serde_json::from_str(r#"{"kind":"unitary","matrix":[[{"re":2}]]}"#);
        assert!(bad.unwrap().build().is_err());
    }
}
