//! Bounded domains in ℂⁿ: membership, seeded samplers and quadrature rules
//! for Lebesgue measure.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BergmanError, Result};
use crate::types::{hermitian_sqrt, CMatrix, ComplexPoint, HermitianForm, C64};
use crate::wire::cx_matrix;

/// Samples drawn per independently seeded sub-stream.
pub const SAMPLE_CHUNK: usize = 4096;

/// Shape of a built-in domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// 𝔹ⁿ(center, radius); the center defaults to the origin.
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<ComplexPoint>,
        #[serde(default = "one")]
        radius: f64,
    },
    /// 𝔹ⁿ minus the hyperplane {zₙ = 0}.
    SlitBall,
    /// 𝔹ⁿ minus {|z′|² + (Re zₙ)² ≤ ε, Im zₙ = 0}.
    HartogsComplement { epsilon: f64 },
    /// {|z′|² + |zₙ|²(|zₙ|² − 1) < 0}, the image of the slit ball under
    /// (z′, zₙ) ↦ (z′zₙ, zₙ).
    CollapsedSlitBall,
    /// {ζ : ζHζ* < n + 1}.
    Ellipsoid { h: HermitianForm },
    /// {inner < |z| < 1} ⊂ ℂ.
    Annulus { inner: f64 },
    /// U(base) for a unitary U.
    UnitaryImage {
        base: Box<DomainDescriptor>,
        #[serde(with = "cx_matrix")]
        unitary: CMatrix,
    },
}

fn one() -> f64 {
    1.0
}

/// A bounded domain together with its reference measure machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub n: usize,
    #[serde(flatten)]
    pub kind: DomainKind,
}

impl DomainDescriptor {
    pub fn new(n: usize, kind: DomainKind) -> Result<Self> {
        let d = Self { n, kind };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_ball(n: usize) -> Self {
        Self {
            n,
            kind: DomainKind::Ball {
                center: None,
                radius: 1.0,
            },
        }
    }

    pub fn ball(center: ComplexPoint, radius: f64) -> Result<Self> {
        Self::new(
            center.dim(),
            DomainKind::Ball {
                center: Some(center),
                radius,
            },
        )
    }

    /// The centered ball of the given radius.
    pub fn scaled_ball(n: usize, radius: f64) -> Result<Self> {
        Self::new(n, DomainKind::Ball { center: None, radius })
    }

    pub fn slit_ball(n: usize) -> Result<Self> {
        Self::new(n, DomainKind::SlitBall)
    }

    pub fn hartogs_complement(n: usize, epsilon: f64) -> Result<Self> {
        Self::new(n, DomainKind::HartogsComplement { epsilon })
    }

    pub fn collapsed_slit_ball(n: usize) -> Result<Self> {
        Self::new(n, DomainKind::CollapsedSlitBall)
    }

    pub fn ellipsoid(h: HermitianForm) -> Result<Self> {
        Self::new(h.dim(), DomainKind::Ellipsoid { h })
    }

    pub fn annulus(inner: f64) -> Result<Self> {
        Self::new(1, DomainKind::Annulus { inner })
    }

    pub fn unitary_image(base: DomainDescriptor, unitary: CMatrix) -> Result<Self> {
        Self::new(
            base.n,
            DomainKind::UnitaryImage {
                base: Box::new(base),
                unitary,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BergmanError::Parameter(m));
        if self.n == 0 {
            return bad("domain dimension must be at least 1".into());
        }
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
                if let Some(c) = center {
                    if c.dim() != self.n {
                        return bad("ball center has the wrong dimension".into());
                    }
                }
            }
            DomainKind::SlitBall | DomainKind::CollapsedSlitBall => {
                if self.n < 2 {
                    return bad("slit domains need n ≥ 2".into());
                }
            }
            DomainKind::HartogsComplement { epsilon } => {
                if self.n < 2 || !(*epsilon > 0.0 && *epsilon < 1.0) {
                    return bad("Hartogs complement needs n ≥ 2 and 0 < ε < 1".into());
                }
            }
            DomainKind::Ellipsoid { h } => {
                if h.dim() != self.n {
                    return bad("ellipsoid matrix has the wrong dimension".into());
                }
                hermitian_sqrt(h)?;
            }
            DomainKind::Annulus { inner } => {
                if self.n != 1 || !(*inner > 0.0 && *inner < 1.0) {
                    return bad("annulus needs n = 1 and 0 < r < 1".into());
                }
            }
            DomainKind::UnitaryImage { base, unitary } => {
                base.validate()?;
                if base.n != self.n || unitary.nrows() != self.n || !unitary.is_square() {
                    return bad("unitary image dimension mismatch".into());
                }
                let defect = unitary.adjoint() * unitary - CMatrix::identity(self.n, self.n);
                if crate::types::inf_norm(&defect) > 1e-12 {
                    return bad("matrix is not unitary".into());
                }
            }
        }
        Ok(())
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            DomainKind::Ball { center: None, radius } if *radius == 1.0 => format!("ball(n={})", self.n),
            DomainKind::Ball { radius, .. } => format!("ball(n={}, r={radius})", self.n),
            DomainKind::SlitBall => format!("slit-ball(n={})", self.n),
            DomainKind::HartogsComplement { epsilon } => format!("hartogs-complement(n={}, eps={epsilon})", self.n),
            DomainKind::CollapsedSlitBall => format!("collapsed-slit-ball(n={})", self.n),
            DomainKind::Ellipsoid { .. } => format!("ellipsoid(n={})", self.n),
            DomainKind::Annulus { inner } => format!("annulus(r={inner})"),
            DomainKind::UnitaryImage { base, .. } => format!("U({})", base.label()),
        }
    }

    pub fn contains(&self, z: &ComplexPoint) -> bool {
        if z.dim() != self.n || !z.is_finite() {
            return false;
        }
        let c = z.coords();
        match &self.kind {
            DomainKind::Ball { center, radius } => match center {
                Some(c0) => z.sub(c0).norm_sqr() < radius * radius,
                None => z.norm_sqr() < radius * radius,
            },
            DomainKind::SlitBall => z.norm_sqr() < 1.0 && c[self.n - 1] != C64::new(0.0, 0.0),
            DomainKind::HartogsComplement { epsilon } => {
                let last = c[self.n - 1];
                let head: f64 = c[..self.n - 1].iter().map(|x| x.norm_sqr()).sum();
                let removed = last.im == 0.0 && head + last.re * last.re <= *epsilon;
                z.norm_sqr() < 1.0 && !removed
            }
            DomainKind::CollapsedSlitBall => collapsed_defining(c) < 0.0,
            DomainKind::Ellipsoid { h } => h.quadratic(z) < (self.n + 1) as f64,
            DomainKind::Annulus { inner } => {
                let r2 = c[0].norm_sqr();
                r2 > inner * inner && r2 < 1.0
            }
            DomainKind::UnitaryImage { base, unitary } => {
                let pre = unitary.adjoint() * z.to_vector();
                base.contains(&ComplexPoint::from_vector(&pre))
            }
        }
    }

    /// Center and radius of a ball containing the domain.
    pub fn bounding_ball(&self) -> (ComplexPoint, f64) {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                (center.clone().unwrap_or_else(|| ComplexPoint::zeros(self.n)), *radius)
            }
            DomainKind::SlitBall
            | DomainKind::HartogsComplement { .. }
            | DomainKind::Annulus { .. }
            // |z′|² + |zₙ|² < |zₙ|²(2 − |zₙ|²) ≤ 1
            | DomainKind::CollapsedSlitBall => (ComplexPoint::zeros(self.n), 1.0),
            DomainKind::Ellipsoid { h } => {
                let lmin = h.eigenvalues()[0];
                (ComplexPoint::zeros(self.n), ((self.n + 1) as f64 / lmin).sqrt())
            }
            DomainKind::UnitaryImage { base, unitary } => {
                let (c, r) = base.bounding_ball();
                (ComplexPoint::from_vector(&(unitary * c.to_vector())), r)
            }
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        let (c, r) = self.bounding_ball();
        c.norm() + r
    }

    /// Lebesgue volume of the bounding ball.
    pub fn bounding_volume(&self) -> f64 {
        ball_volume(self.n, self.bounding_ball().1)
    }

    /// Distance from z to the complement (a lower bound for the ellipsoid,
    /// a first-order estimate for the collapsed slit ball). Non-positive
    /// outside the domain.
    pub fn boundary_distance(&self, z: &ComplexPoint) -> f64 {
        if !self.contains(z) {
            return 0.0;
        }
        let c = z.coords();
        match &self.kind {
            DomainKind::Ball { center, radius } => match center {
                Some(c0) => radius - z.sub(c0).norm(),
                None => radius - z.norm(),
            },
            DomainKind::SlitBall => (1.0 - z.norm()).min(c[self.n - 1].norm()),
            DomainKind::HartogsComplement { epsilon } => {
                let last = c[self.n - 1];
                let head: f64 = c[..self.n - 1].iter().map(|x| x.norm_sqr()).sum();
                let planar = (head + last.re * last.re).sqrt();
                let outside = (planar - epsilon.sqrt()).max(0.0);
                (1.0 - z.norm()).min((last.im * last.im + outside * outside).sqrt())
            }
            DomainKind::CollapsedSlitBall => {
                let rho = collapsed_defining(c);
                let last = c[self.n - 1];
                let grad2: f64 = c[..self.n - 1].iter().map(|x| 4.0 * x.norm_sqr()).sum::<f64>()
                    + (2.0 * last.norm() * (2.0 * last.norm_sqr() - 1.0)).powi(2);
                0.5 * (-rho) / grad2.sqrt().max(1e-300)
            }
            DomainKind::Ellipsoid { h } => {
                let lmax = *h.eigenvalues().last().expect("non-empty");
                (((self.n + 1) as f64).sqrt() - h.quadratic(z).max(0.0).sqrt()) / lmax.sqrt()
            }
            DomainKind::Annulus { inner } => {
                let r = c[0].norm();
                (r - inner).min(1.0 - r)
            }
            DomainKind::UnitaryImage { base, unitary } => {
                let pre = unitary.adjoint() * z.to_vector();
                base.boundary_distance(&ComplexPoint::from_vector(&pre))
            }
        }
    }

    /// `count` i.i.d. uniform points of the domain, by acceptance filtering
    /// of uniform draws from the bounding ball. Chunk k of the output comes
    /// from ChaCha stream k of `seed`, so the stream is reproducible and
    /// chunks can be generated in parallel.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<ComplexPoint>> {
        let (center, radius) = self.bounding_ball();
        let chunks = count.div_ceil(SAMPLE_CHUNK);
        let parts: Vec<Result<Vec<ComplexPoint>>> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let want = SAMPLE_CHUNK.min(count - k * SAMPLE_CHUNK);
                let mut rng = substream(seed, k as u64);
                let mut out = Vec::with_capacity(want);
                let mut tries = 0usize;
                while out.len() < want {
                    tries += 1;
                    if tries > 1000 * want + 10_000 {
                        return Err(BergmanError::Sampling(format!(
                            "acceptance rate too low for {}",
                            self.label()
                        )));
                    }
                    let z = uniform_in_ball(&mut rng, &center, radius);
                    if self.contains(&z) {
                        out.push(z);
                    }
                }
                Ok(out)
            })
            .collect();
        let mut all = Vec::with_capacity(count);
        for p in parts {
            all.extend(p?);
        }
        Ok(all)
    }

    /// Quadrature nodes and weights for Lebesgue measure m_{2n}; nodes
    /// outside the domain are dropped.
    pub fn quadrature(&self, spec: &QuadratureSpec) -> Result<Vec<(ComplexPoint, f64)>> {
        if spec.order < 2 {
            return Err(BergmanError::Parameter("quadrature order must be at least 2".into()));
        }
        let rule = match (spec.kind, &self.kind) {
            (QuadratureKind::Box, _) => box_rule(self, spec.order)?,
            (_, DomainKind::Ball { .. }) | (_, DomainKind::SlitBall) | (_, DomainKind::HartogsComplement { .. }) => {
                let (c, r) = self.bounding_ball();
                polar_ball_rule(self.n, &c, r, spec.order, spec.angular())?
            }
            (_, DomainKind::Annulus { inner }) => annulus_rule(*inner, spec.order, spec.angular())?,
            (_, DomainKind::Ellipsoid { h }) => {
                // ζ = √(n+1)·w·A⁻¹ maps 𝔹ⁿ onto E_H with |det|² = (n+1)ⁿ/det H
                let n = self.n;
                let a = hermitian_sqrt(h)?;
                let a_inv = a
                    .try_inverse()
                    .ok_or_else(|| BergmanError::Parameter("singular H".into()))?;
                let scale = ((n + 1) as f64).sqrt();
                let jac = ((n + 1) as f64).powi(n as i32) / h.determinant();
                polar_ball_rule(n, &ComplexPoint::zeros(n), 1.0, spec.order, spec.angular())?
                    .into_iter()
                    .map(|(w, wt)| {
                        let row = w.to_vector().transpose() * &a_inv;
                        let zeta: Vec<C64> = row.iter().map(|x| x * scale).collect();
                        (ComplexPoint::new(zeta), wt * jac)
                    })
                    .collect()
            }
            (_, DomainKind::CollapsedSlitBall) => {
                // image of the ball under (z′, zₙ) ↦ (z′zₙ, zₙ); |det J|² = |zₙ|^{2(n−1)}
                let n = self.n;
                polar_ball_rule(n, &ComplexPoint::zeros(n), 1.0, spec.order, spec.angular())?
                    .into_iter()
                    .map(|(w, wt)| {
                        let c = w.coords();
                        let last = c[n - 1];
                        let mut img: Vec<C64> = c[..n - 1].iter().map(|x| x * last).collect();
                        img.push(last);
                        (ComplexPoint::new(img), wt * last.norm_sqr().powi(n as i32 - 1))
                    })
                    .collect()
            }
            (_, DomainKind::UnitaryImage { base, unitary }) => base
                .quadrature(spec)?
                .into_iter()
                .map(|(w, wt)| (ComplexPoint::from_vector(&(unitary * w.to_vector())), wt))
                .collect(),
        };
        Ok(rule.into_iter().filter(|(z, _)| self.contains(z)).collect())
    }
}

fn collapsed_defining(c: &[C64]) -> f64 {
    let n = c.len();
    let last = c[n - 1].norm_sqr();
    let head: f64 = c[..n - 1].iter().map(|x| x.norm_sqr()).sum();
    head + last * (last - 1.0)
}

/// πⁿ r²ⁿ / n!.
pub fn ball_volume(n: usize, radius: f64) -> f64 {
    let mut v = radius.powi(2 * n as i32);
    for k in 1..=n {
        v *= PI / k as f64;
    }
    v
}

/// Independent ChaCha stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point of the Euclidean ball in ℂⁿ ≅ ℝ²ⁿ.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &ComplexPoint, radius: f64) -> ComplexPoint {
    let n = center.dim();
    let g: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: f64 = rng.gen();
    let r = radius * u.powf(1.0 / (2 * n) as f64) / norm;
    ComplexPoint::new(
        (0..n)
            .map(|j| center.coords()[j] + C64::new(g[2 * j] * r, g[2 * j + 1] * r))
            .collect(),
    )
}

/// Which quadrature family to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    /// The domain's natural rule (polar for ball-like domains, mapped polar
    /// for ellipsoids and the collapsed slit ball).
    #[default]
    Auto,
    /// Product Gauss–Legendre on the bounding box with membership masking.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    #[serde(default)]
    pub kind: QuadratureKind,
    /// Gauss–Legendre points per radial (or box) axis.
    pub order: usize,
    /// Trapezoid points per angle; defaults to 2·order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<usize>,
}

impl QuadratureSpec {
    pub fn auto(order: usize) -> Self {
        Self {
            kind: QuadratureKind::Auto,
            order,
            angular: None,
        }
    }

    pub fn with_angular(order: usize, angular: usize) -> Self {
        Self {
            kind: QuadratureKind::Auto,
            order,
            angular: Some(angular),
        }
    }

    pub fn boxed(order: usize) -> Self {
        Self {
            kind: QuadratureKind::Box,
            order,
            angular: None,
        }
    }

    pub fn angular(&self) -> usize {
        self.angular.unwrap_or(2 * self.order)
    }

    /// A strictly coarser rule of the same family, for error estimates.
    pub fn coarser(&self) -> Self {
        let order = (self.order * 2 / 3).max(2);
        let angular = self.angular.map(|a| (a / 3 * 2).max(2));
        Self {
            kind: self.kind,
            order,
            angular,
        }
    }
}

fn gauss_legendre_unit(order: usize) -> Result<Vec<(f64, f64)>> {
    let gl = GaussLegendre::new(order).map_err(|e| BergmanError::Parameter(format!("Gauss–Legendre rule: {e}")))?;
    Ok(gl.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect())
}

/// Half-offset trapezoid angles: never 0 or π for even counts.
fn angles(count: usize) -> Vec<(C64, f64)> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
            (C64::new(t.cos(), t.sin()), 2.0 * PI / count as f64)
        })
        .collect()
}

/// Exact-for-polynomials rule on 𝔹ⁿ(center, radius):
/// zⱼ = cⱼ + r·√tⱼ·e^{iθⱼ} with (tⱼ) on the simplex, collapsed to the unit
/// cube, dm = r²ⁿ Π ½ dtⱼ dθⱼ.
pub fn polar_ball_rule(
    n: usize,
    center: &ComplexPoint,
    radius: f64,
    radial: usize,
    angular: usize,
) -> Result<Vec<(ComplexPoint, f64)>> {
    let gl = gauss_legendre_unit(radial)?;
    let th = angles(angular);
    // simplex points t with weights (including the Duffy Jacobian)
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(simplex.len() * gl.len());
        for (t, w) in &simplex {
            let used: f64 = t.iter().sum();
            let rest = 1.0 - used;
            for &(u, wu) in &gl {
                let mut tt = t.clone();
                tt.push(rest * u);
                next.push((tt, w * wu * rest));
            }
        }
        simplex = next;
    }
    let vol = radius.powi(2 * n as i32) * 0.5f64.powi(n as i32);
    let mut out = Vec::with_capacity(simplex.len() * angular.pow(n as u32));
    let mut idx = vec![0usize; n];
    for (t, wt) in &simplex {
        let rad: Vec<f64> = t.iter().map(|x| x.max(0.0).sqrt() * radius).collect();
        idx.iter_mut().for_each(|i| *i = 0);
        loop {
            let mut coords = Vec::with_capacity(n);
            let mut w = wt * vol;
            for j in 0..n {
                let (e, wa) = th[idx[j]];
                coords.push(center.coords()[j] + e * rad[j]);
                w *= wa;
            }
            out.push((ComplexPoint::new(coords), w));
            // odometer over angle indices
            let mut j = 0;
            while j < n {
                idx[j] += 1;
                if idx[j] < angular {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
    }
    Ok(out)
}

/// Polar rule on {r < |z| < 1}: Gauss–Legendre in ρ, trapezoid in θ.
fn annulus_rule(inner: f64, radial: usize, angular: usize) -> Result<Vec<(ComplexPoint, f64)>> {
    let gl = gauss_legendre_unit(radial)?;
    let th = angles(angular);
    let span = 1.0 - inner;
    let mut out = Vec::with_capacity(radial * angular);
    for &(u, wu) in &gl {
        let rho = inner + span * u;
        for &(e, wa) in &th {
            out.push((ComplexPoint::new(vec![e * rho]), wu * span * rho * wa));
        }
    }
    Ok(out)
}

/// Product Gauss–Legendre on the bounding box of the bounding ball.
fn box_rule(d: &DomainDescriptor, order: usize) -> Result<Vec<(ComplexPoint, f64)>> {
    let (c, r) = d.bounding_ball();
    let gl = gauss_legendre_unit(order)?;
    let axis: Vec<(f64, f64)> = gl.iter().map(|&(u, w)| (-r + 2.0 * r * u, 2.0 * r * w)).collect();
    let dims = 2 * d.n;
    let total = order.pow(dims as u32);
    let mut out = Vec::new();
    let mut idx = vec![0usize; dims];
    for _ in 0..total {
        let mut coords = Vec::with_capacity(d.n);
        let mut w = 1.0;
        for j in 0..d.n {
            let (x, wx) = axis[idx[2 * j]];
            let (y, wy) = axis[idx[2 * j + 1]];
            coords.push(c.coords()[j] + C64::new(x, y));
            w *= wx * wy;
        }
        out.push((ComplexPoint::new(coords), w));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < order {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_domains() -> Vec<DomainDescriptor> {
        let h = HermitianForm::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
            ],
        ))
        .unwrap();
        vec![
            DomainDescriptor::unit_ball(2),
            DomainDescriptor::ball(ComplexPoint::from_re(&[0.2, -0.1]), 0.5).unwrap(),
            DomainDescriptor::slit_ball(2).unwrap(),
            DomainDescriptor::hartogs_complement(2, 0.01).unwrap(),
            DomainDescriptor::collapsed_slit_ball(2).unwrap(),
            DomainDescriptor::ellipsoid(h).unwrap(),
            DomainDescriptor::annulus(0.5).unwrap(),
        ]
    }

    #[test]
    fn samples_pass_membership_and_repeat() {
        for d in all_domains() {
            let a = d.sample(100_000, 17).unwrap();
            assert_eq!(a.len(), 100_000);
            assert!(a.iter().all(|z| d.contains(z)), "{}", d.label());
            let b = d.sample(100_000, 17).unwrap();
            assert_eq!(a, b);
            let c = d.sample(1000, 18).unwrap();
            assert_ne!(a[..1000], c[..]);
        }
    }

    #[test]
    fn polar_rule_volumes() {
        for n in 1..=3 {
            let rule = polar_ball_rule(n, &ComplexPoint::zeros(n), 1.0, 4, 4).unwrap();
            let v: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((v / ball_volume(n, 1.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn polar_rule_integrates_monomials_exactly() {
        // ∫_{𝔹²} |z₁|⁴|z₂|² dm = π²·2!·1!/5!
        let d = DomainDescriptor::unit_ball(2);
        let rule = d.quadrature(&QuadratureSpec::auto(6)).unwrap();
        let v: f64 = rule
            .iter()
            .map(|(z, w)| w * z.coords()[0].norm_sqr().powi(2) * z.coords()[1].norm_sqr())
            .sum();
        let exact = PI * PI * 2.0 / 120.0;
        assert!((v / exact - 1.0).abs() < 1e-13, "{v} {exact}");
    }

    #[test]
    fn mapped_rules_have_right_volume() {
        for d in all_domains() {
            let rule = d.quadrature(&QuadratureSpec::auto(10)).unwrap();
            let v: f64 = rule.iter().map(|(_, w)| w).sum();
            let expected = match &d.kind {
                DomainKind::Ball { radius, .. } => ball_volume(2, *radius),
                DomainKind::Ellipsoid { h } => ball_volume(2, 1.0) * 9.0 / h.determinant(),
                DomainKind::Annulus { inner } => PI * (1.0 - inner * inner),
                // ∫_{𝔹²}|z₂|² dm = π²/6
                DomainKind::CollapsedSlitBall => PI * PI / 6.0,
                _ => ball_volume(2, 1.0),
            };
            assert!((v / expected - 1.0).abs() < 1e-12, "{}: {v} vs {expected}", d.label());
        }
    }

    #[test]
    fn box_rule_converges_slowly_but_surely() {
        let d = DomainDescriptor::unit_ball(1);
        let v: f64 = d
            .quadrature(&QuadratureSpec::boxed(200))
            .unwrap()
            .iter()
            .map(|(_, w)| w)
            .sum();
        assert!((v - PI).abs() < 1e-2);
    }

    #[test]
    fn hartogs_set_is_excluded() {
        let d = DomainDescriptor::hartogs_complement(2, 0.01).unwrap();
        assert!(!d.contains(&ComplexPoint::from_re(&[0.05, 0.05])));
        assert!(d.contains(&ComplexPoint::new(vec![C64::new(0.05, 0.0), C64::new(0.05, 1e-9)])));
        assert!(d.contains(&ComplexPoint::from_re(&[0.2, 0.05])));
    }

    #[test]
    fn descriptor_json_round_trip() {
        for d in all_domains() {
            let s = serde_json::to_string(&d).unwrap();
            let back: DomainDescriptor = serde_json::from_str(&s).unwrap();
            assert_eq!(d, back);
        }
        let d: DomainDescriptor = serde_json::from_str(r#"{"n":2,"kind":"ball"}"#).unwrap();
        assert_eq!(d, DomainDescriptor::unit_ball(2));
    }
}
