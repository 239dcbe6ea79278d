//! Bergman kernels: closed forms for the ball, ellipsoids and the annulus,
//! the powered family φ(z)·conj(φ(w))·K_𝔹ⁿ^λ, orthonormal-series and
//! Gram-matrix estimates, and kernels transported along holomorphic maps.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::DomainDescriptor;
use crate::error::{BergmanError, Result};
use crate::integrate::{integrate_many, Engine};
use crate::maps::{HolomorphicMap, MapSpec};
use crate::moments::c_alpha;
use crate::types::{enumerate_multiindices, CMatrix, ComplexPoint, HermitianForm, MultiIndex, C64};

/// n!/πⁿ, the value of K_𝔹ⁿ at the origin.
pub fn ball_constant(n: usize) -> f64 {
    (1..=n).map(|k| k as f64 / PI).product()
}

/// Explicit holomorphic weight φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    Constant {
        #[serde(with = "crate::wire::cx")]
        value: C64,
    },
    /// φ(w) = w_index (0-based).
    Coordinate { index: usize },
}

impl Default for Phi {
    fn default() -> Self {
        Phi::one()
    }
}

impl Phi {
    pub fn one() -> Self {
        Phi::Constant {
            value: C64::new(1.0, 0.0),
        }
    }

    pub fn eval(&self, w: &ComplexPoint) -> C64 {
        match self {
            Phi::Constant { value } => *value,
            Phi::Coordinate { index } => w.coords()[*index],
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Phi::Constant { value } if *value == C64::new(1.0, 0.0))
    }
}

/// K(z, w) = c·φ(z)·conj(φ(w))·(1 − zQw̄)^{−μ}: the ball, its powers and
/// ellipsoids all have this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFamily {
    pub constant: f64,
    pub mu: f64,
    pub q: CMatrix,
    pub phi: Phi,
}

impl QuadraticFamily {
    /// 1 − Σ zᵢ Q_{ij} w̄ⱼ.
    pub fn s(&self, z: &ComplexPoint, w: &ComplexPoint) -> C64 {
        let (z, w) = (z.coords(), w.coords());
        let n = z.len();
        let mut acc = C64::new(1.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc -= z[i] * self.q[(i, j)] * w[j].conj();
            }
        }
        acc
    }

    pub fn eval(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<C64> {
        let s = self.s(z, w);
        if s.norm() < 1e-300 {
            return Err(BergmanError::Singularity(format!(
                "1 − ⟨z, w⟩ vanishes at z = {z}, w = {w}"
            )));
        }
        // principal branch; Re s > 0 on the domain
        let power = (-self.mu * s.ln()).exp();
        Ok(self.phi.eval(z) * self.phi.eval(w).conj() * power * self.constant)
    }
}

/// Monomials with integer (possibly negative) exponents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDictionary {
    pub exponents: Vec<Vec<i32>>,
}

impl BasisDictionary {
    /// w^α for |α| ≤ degree, in graded-lex order.
    pub fn monomials(n: usize, degree: u32) -> Self {
        Self {
            exponents: enumerate_multiindices(n, degree)
                .into_iter()
                .map(|a| a.entries().iter().map(|&x| x as i32).collect())
                .collect(),
        }
    }

    /// wᵏ for k in `lo..=hi` on a planar domain.
    pub fn laurent(lo: i32, hi: i32) -> Self {
        Self {
            exponents: (lo..=hi).map(|k| vec![k]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.exponents.first().map_or(0, |e| e.len())
    }

    pub fn eval_into(&self, w: &ComplexPoint, out: &mut [C64]) {
        for (slot, e) in out.iter_mut().zip(&self.exponents) {
            *slot = e
                .iter()
                .zip(w.coords())
                .fold(C64::new(1.0, 0.0), |acc, (&k, z)| acc * z.powi(k));
        }
    }

    pub fn eval(&self, w: &ComplexPoint) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        self.eval_into(w, &mut out);
        out
    }
}

/// Orthonormal coefficients c_α of a truncated series kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub n: usize,
    pub lambda: f64,
    pub degree: u32,
    pub coeffs: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub alpha: MultiIndex,
    pub c: f64,
}

impl CoefficientTable {
    /// c_{α,λ} for all |α| ≤ degree.
    pub fn powered_ball(n: usize, lambda: f64, degree: u32) -> Result<Self> {
        let coeffs = enumerate_multiindices(n, degree)
            .into_iter()
            .map(|alpha| {
                Ok(CoefficientEntry {
                    c: c_alpha(&alpha, lambda, n)?,
                    alpha,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            lambda,
            degree,
            coeffs,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        crate::wire::to_json_string(self, false)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Σ_{|α| ≤ N} c_α²·φ(z)z^α·conj(φ(w))·w̄^α.
pub fn series_kernel(table: &CoefficientTable, phi: &Phi, degree: u32, z: &ComplexPoint, w: &ComplexPoint) -> C64 {
    let prod: Vec<C64> = z.coords().iter().zip(w.coords()).map(|(a, b)| a * b.conj()).collect();
    let sum: C64 = table
        .coeffs
        .iter()
        .filter(|e| e.alpha.degree() <= degree)
        .map(|e| {
            let mono = e
                .alpha
                .entries()
                .iter()
                .zip(&prod)
                .fold(C64::new(1.0, 0.0), |acc, (&a, p)| acc * p.powu(a));
            mono * e.c * e.c
        })
        .sum();
    phi.eval(z) * phi.eval(w).conj() * sum
}

/// Smallest N with Σ_{k>N} (k+1)^{n+⌈μ⌉} ρ^{2k}·(n!/πⁿ)^λ below `tol / 2`,
/// bounding the tail of the powered series for ‖z‖, ‖w‖ ≤ ρ.
pub fn series_truncation_degree(n: usize, lambda: f64, rho: f64, tol: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&rho) || !(tol > 0.0) {
        return Err(BergmanError::Parameter("need 0 ≤ ρ < 1 and tol > 0".into()));
    }
    let mu = (n + 1) as f64 * lambda;
    let p = n as i32 + mu.ceil() as i32;
    let scale = ball_constant(n).powf(lambda).max(1.0);
    let r2 = rho * rho;
    let term = |k: u32| scale * ((k + 1) as f64).powi(p) * r2.powi(k as i32);
    for big_n in 0..100_000u32 {
        // tail bound: terms decrease geometrically beyond their peak
        let next = term(big_n + 1);
        let ratio = term(big_n + 2) / next.max(f64::MIN_POSITIVE);
        if ratio < 1.0 {
            let tail = next / (1.0 - ratio);
            if tail < tol / 2.0 {
                return Ok(big_n);
            }
        }
    }
    Err(BergmanError::Parameter("series truncation did not converge".into()))
}

/// Kernel of an orthonormalized dictionary: K(z, w) = Σ f_a(z)·M_{ab}·conj(f_b(w))
/// with M = (Gᵀ)⁻¹, G_{ab} = ∫ f_a f̄_b.
#[derive(Debug, Clone)]
pub struct GramKernel {
    pub domain: DomainDescriptor,
    pub dictionary: BasisDictionary,
    /// Lower Cholesky factor of Gᵀ.
    chol: CMatrix,
    pub gram: CMatrix,
    pub integration_error: f64,
    pub eigen_ratio: f64,
}

/// Threshold on λ_min/λ_max for an admissible Gram matrix.
pub const GRAM_CONDITION_THRESHOLD: f64 = 1e-10;

impl GramKernel {
    fn coefficients(&self, z: &ComplexPoint) -> nalgebra::DVector<C64> {
        let v = self.dictionary.eval(z);
        let rhs = nalgebra::DVector::from_iterator(v.len(), v.into_iter().map(|x| x.conj()));
        self.chol
            .solve_lower_triangular(&rhs)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn eval(&self, z: &ComplexPoint, w: &ComplexPoint) -> C64 {
        let x = self.coefficients(z);
        let y = self.coefficients(w);
        x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Builds the Gram estimate of the Bergman kernel from `dict` over `domain`.
pub fn gram_kernel_estimate(domain: &DomainDescriptor, dict: &BasisDictionary, engine: &Engine) -> Result<KernelModel> {
    let m = dict.len();
    if m == 0 || dict.dim() != domain.n {
        return Err(BergmanError::Parameter(
            "dictionary is empty or has the wrong dimension".into(),
        ));
    }
    let entries = integrate_many(domain, engine, m * m, |z, out| {
        let mut v = vec![C64::new(0.0, 0.0); m];
        dict.eval_into(z, &mut v);
        for a in 0..m {
            for b in 0..m {
                out[a * m + b] = v[a] * v[b].conj();
            }
        }
    })?;
    let integration_error = entries.iter().map(|e| e.stderr).fold(0.0, f64::max);
    let raw = CMatrix::from_fn(m, m, |a, b| entries[a * m + b].value);
    let gram = HermitianForm::from_nearly_hermitian(&raw);
    let ev = gram.eigenvalues();
    let (lo, hi) = (ev[0], ev[m - 1]);
    let ratio = if hi > 0.0 { lo / hi } else { f64::NEG_INFINITY };
    if !(ratio > GRAM_CONDITION_THRESHOLD) {
        return Err(BergmanError::Conditioning {
            ratio,
            threshold: GRAM_CONDITION_THRESHOLD,
        });
    }
    let gt = HermitianForm::from_nearly_hermitian(&gram.matrix().transpose());
    let chol = crate::types::hermitian_sqrt(&gt)?;
    Ok(KernelModel::Gram(Arc::new(GramKernel {
        domain: domain.clone(),
        dictionary: dict.clone(),
        chol,
        gram: gram.matrix().clone(),
        integration_error,
        eigen_ratio: ratio,
    })))
}

/// Annulus {r < |z| < 1}: Σ_{k≠−1} (k+1)(zw̄)ᵏ/(π(1−r^{2k+2})) + (zw̄)⁻¹/(2π log(1/r)).
pub fn annulus_kernel(inner: f64, z: C64, w: C64) -> Result<C64> {
    if !(inner > 0.0 && inner < 1.0) {
        return Err(BergmanError::Parameter(format!(
            "annulus inner radius must lie in (0,1), got {inner}"
        )));
    }
    for (name, p) in [("z", z), ("w", w)] {
        let r = p.norm();
        if !(r > inner && r < 1.0) {
            return Err(BergmanError::Domain(format!(
                "{name} = {p} is outside the annulus r = {inner}"
            )));
        }
    }
    let x = z * w.conj();
    let r2 = inner * inner;
    let mut acc = x.inv() / (2.0 * PI * (1.0 / inner).ln());
    // k ≥ 0
    let mut xk = C64::new(1.0, 0.0);
    let mut r2k2 = r2;
    for k in 0..ANNULUS_MAX_TERMS {
        let term = xk * ((k + 1) as f64 / (PI * (1.0 - r2k2)));
        acc += term;
        if term.norm() <= 1e-17 * acc.norm() && k > 2 {
            break;
        }
        xk *= x;
        r2k2 *= r2;
    }
    // k = −(m+1), m ≥ 1: m/(π(1−r^{2m}))·(r²/x)^m / x
    let q = x.inv() * r2;
    let mut qm = q;
    let mut r2m = r2;
    for m in 1..ANNULUS_MAX_TERMS {
        let term = qm * (m as f64 / (PI * (1.0 - r2m))) / x;
        acc += term;
        if term.norm() <= 1e-17 * acc.norm() && m > 2 {
            break;
        }
        qm *= q;
        r2m *= r2;
    }
    Ok(acc)
}

const ANNULUS_MAX_TERMS: usize = 200_000;

/// Closed-form ball kernel (n!/πⁿ)(1 − ⟨z, w⟩)^{−(n+1)}.
pub fn ball_kernel(n: usize, z: &ComplexPoint, w: &ComplexPoint) -> Result<C64> {
    KernelModel::ball(n).eval(z, w)
}

/// φ(z)·conj(φ(w))·K_𝔹ⁿ(z, w)^λ on the principal branch.
pub fn powered_kernel(n: usize, lambda: f64, phi: &Phi, z: &ComplexPoint, w: &ComplexPoint) -> Result<C64> {
    KernelModel::powered(n, lambda, phi.clone())?.eval(z, w)
}

/// ∂^β/∂z^β at z = 0 of K_𝔹ⁿ(z, w)^λ: (n!/πⁿ)^λ·μ(μ+1)⋯(μ+|β|−1)·w̄^β.
pub fn deriv_power_kernel(beta: &MultiIndex, lambda: f64, n: usize, w: &ComplexPoint) -> Result<C64> {
    if !(lambda > 0.0) {
        return Err(BergmanError::Parameter(format!("λ must be positive, got {lambda}")));
    }
    if beta.dim() != n || w.dim() != n {
        return Err(BergmanError::Parameter("dimension mismatch".into()));
    }
    let mu = (n + 1) as f64 * lambda;
    let rising = crate::types::pochhammer(mu, beta.degree());
    Ok(beta.monomial(&w.conj()) * ball_constant(n).powf(lambda) * rising)
}

/// K_{E_H}(ζ, ζ) = C/(1 − ζHζ*/(n+1))^{n+1}, C = (n!/πⁿ)·det H/(n+1)ⁿ.
pub fn ellipsoid_kernel(h: &HermitianForm, zeta: &ComplexPoint) -> Result<f64> {
    let k = KernelModel::ellipsoid(h.clone())?;
    Ok(k.eval(zeta, zeta)?.re)
}

/// C = (n!/πⁿ)·det H/(n+1)ⁿ.
pub fn ellipsoid_constant(h: &HermitianForm) -> f64 {
    let n = h.dim();
    ball_constant(n) * h.determinant() / ((n + 1) as f64).powi(n as i32)
}

/// An evaluatable Bergman kernel, holomorphic in z and anti-holomorphic in w.
#[derive(Clone)]
pub enum KernelModel {
    BallClosedForm {
        n: usize,
    },
    EllipsoidClosedForm {
        h: HermitianForm,
    },
    Powered {
        n: usize,
        lambda: f64,
        phi: Phi,
    },
    TruncatedSeries {
        table: Arc<CoefficientTable>,
        phi: Phi,
        degree: u32,
    },
    Gram(Arc<GramKernel>),
    AnnulusClosedForm {
        inner: f64,
    },
    /// detJ_f(z)·K_base(f(z), f(w))·conj(detJ_f(w)) on `source`.
    Pullback {
        base: Box<KernelModel>,
        map: Arc<dyn HolomorphicMap>,
        source: DomainDescriptor,
    },
    /// `base` evaluated on the smaller domain `domain`.
    Restricted {
        base: Box<KernelModel>,
        domain: DomainDescriptor,
    },
}

impl fmt::Debug for KernelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl KernelModel {
    pub fn ball(n: usize) -> Self {
        KernelModel::BallClosedForm { n }
    }

    pub fn powered(n: usize, lambda: f64, phi: Phi) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(BergmanError::Parameter(format!("λ must be positive, got {lambda}")));
        }
        if let Phi::Coordinate { index } = phi {
            if index >= n {
                return Err(BergmanError::Parameter(format!(
                    "φ coordinate {index} out of range for n = {n}"
                )));
            }
        }
        Ok(KernelModel::Powered { n, lambda, phi })
    }

    pub fn ellipsoid(h: HermitianForm) -> Result<Self> {
        crate::types::hermitian_sqrt(&h)?;
        Ok(KernelModel::EllipsoidClosedForm { h })
    }

    pub fn annulus(inner: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < 1.0) {
            return Err(BergmanError::Parameter(format!(
                "annulus inner radius must lie in (0,1), got {inner}"
            )));
        }
        Ok(KernelModel::AnnulusClosedForm { inner })
    }

    pub fn series(table: CoefficientTable, phi: Phi, degree: u32) -> Self {
        KernelModel::TruncatedSeries {
            table: Arc::new(table),
            phi,
            degree,
        }
    }

    pub fn restricted(base: KernelModel, domain: DomainDescriptor) -> Self {
        KernelModel::Restricted {
            base: Box::new(base),
            domain,
        }
    }

    pub fn pullback(base: KernelModel, map: Arc<dyn HolomorphicMap>, source: DomainDescriptor) -> Self {
        KernelModel::Pullback {
            base: Box::new(base),
            map,
            source,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelModel::BallClosedForm { n } | KernelModel::Powered { n, .. } => *n,
            KernelModel::EllipsoidClosedForm { h } => h.dim(),
            KernelModel::TruncatedSeries { table, .. } => table.n,
            KernelModel::Gram(g) => g.domain.n,
            KernelModel::AnnulusClosedForm { .. } => 1,
            KernelModel::Pullback { source, .. } => source.n,
            KernelModel::Restricted { domain, .. } => domain.n,
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelModel::BallClosedForm { n } => format!("ball-kernel(n={n})"),
            KernelModel::EllipsoidClosedForm { h } => format!("ellipsoid-kernel(n={})", h.dim()),
            KernelModel::Powered { n, lambda, .. } => format!("powered-kernel(n={n}, lambda={lambda})"),
            KernelModel::TruncatedSeries { table, degree, .. } => {
                format!("series-kernel(n={}, lambda={}, N={degree})", table.n, table.lambda)
            }
            KernelModel::Gram(g) => format!("gram-kernel({}, {} functions)", g.domain.label(), g.dictionary.len()),
            KernelModel::AnnulusClosedForm { inner } => format!("annulus-kernel(r={inner})"),
            KernelModel::Pullback { base, map, .. } => format!("pullback({} via {})", base.label(), map.name()),
            KernelModel::Restricted { base, domain } => format!("{} on {}", base.label(), domain.label()),
        }
    }

    /// The domain on which the kernel is defined.
    pub fn contains(&self, z: &ComplexPoint) -> bool {
        if z.dim() != self.dim() || !z.is_finite() {
            return false;
        }
        match self {
            KernelModel::BallClosedForm { .. } | KernelModel::Powered { .. } | KernelModel::TruncatedSeries { .. } => {
                z.norm_sqr() < 1.0
            }
            KernelModel::EllipsoidClosedForm { h } => h.quadratic(z) < (h.dim() + 1) as f64,
            KernelModel::Gram(g) => g.domain.contains(z),
            KernelModel::AnnulusClosedForm { inner } => {
                let r = z.coords()[0].norm();
                r > *inner && r < 1.0
            }
            KernelModel::Pullback { source, .. } => source.contains(z),
            KernelModel::Restricted { base, domain } => domain.contains(z) && base.contains(z),
        }
    }

    /// Closed-form structure, when the kernel has the quadratic shape.
    pub fn quadratic_family(&self) -> Option<QuadraticFamily> {
        match self {
            KernelModel::BallClosedForm { n } => Some(QuadraticFamily {
                constant: ball_constant(*n),
                mu: (n + 1) as f64,
                q: CMatrix::identity(*n, *n),
                phi: Phi::one(),
            }),
            KernelModel::Powered { n, lambda, phi } => Some(QuadraticFamily {
                constant: ball_constant(*n).powf(*lambda),
                mu: (n + 1) as f64 * lambda,
                q: CMatrix::identity(*n, *n),
                phi: phi.clone(),
            }),
            KernelModel::EllipsoidClosedForm { h } => {
                let n = h.dim();
                Some(QuadraticFamily {
                    constant: ellipsoid_constant(h),
                    mu: (n + 1) as f64,
                    q: h.matrix() / C64::new((n + 1) as f64, 0.0),
                    phi: Phi::one(),
                })
            }
            KernelModel::Restricted { base, .. } => base.quadratic_family(),
            _ => None,
        }
    }

    /// K(z, w); both points must lie in the kernel's domain.
    pub fn eval(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<C64> {
        for (name, p) in [("z", z), ("w", w)] {
            if !self.contains(p) {
                return Err(BergmanError::Domain(format!(
                    "{name} = {p} is outside the domain of {}",
                    self.label()
                )));
            }
        }
        self.eval_unchecked(z, w)
    }

    fn eval_unchecked(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<C64> {
        match self {
            KernelModel::TruncatedSeries { table, phi, degree } => Ok(series_kernel(table, phi, *degree, z, w)),
            KernelModel::Gram(g) => Ok(g.eval(z, w)),
            KernelModel::AnnulusClosedForm { inner } => annulus_kernel(*inner, z.coords()[0], w.coords()[0]),
            KernelModel::Pullback { base, map, .. } => {
                let (fz, fw) = (map.apply(z)?, map.apply(w)?);
                let (jz, jw) = (map.jacobian_det(z)?, map.jacobian_det(w)?);
                Ok(jz * base.eval(&fz, &fw)? * jw.conj())
            }
            KernelModel::Restricted { base, .. } => base.eval(z, w),
            _ => self.quadratic_family().expect("closed forms are quadratic").eval(z, w),
        }
    }

    /// K(z, z), which is real and positive on the domain.
    pub fn eval_diag(&self, z: &ComplexPoint) -> Result<f64> {
        Ok(self.eval(z, z)?.re)
    }
}

impl KernelModel {
    /// The domain descriptor the kernel lives on.
    pub fn domain(&self) -> DomainDescriptor {
        match self {
            KernelModel::BallClosedForm { n } | KernelModel::Powered { n, .. } => DomainDescriptor::unit_ball(*n),
            KernelModel::TruncatedSeries { table, .. } => DomainDescriptor::unit_ball(table.n),
            KernelModel::EllipsoidClosedForm { h } => {
                DomainDescriptor::ellipsoid(h.clone()).expect("validated at construction")
            }
            KernelModel::Gram(g) => g.domain.clone(),
            KernelModel::AnnulusClosedForm { inner } => {
                DomainDescriptor::annulus(*inner).expect("validated at construction")
            }
            KernelModel::Pullback { source, .. } => source.clone(),
            KernelModel::Restricted { domain, .. } => domain.clone(),
        }
    }

    pub fn boundary_distance(&self, z: &ComplexPoint) -> f64 {
        match self {
            KernelModel::Restricted { base, domain } => domain.boundary_distance(z).min(base.boundary_distance(z)),
            _ => self.domain().boundary_distance(z),
        }
    }
}

/// Kernel descriptor for scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Ball {
        n: usize,
    },
    Ellipsoid {
        h: HermitianForm,
    },
    Powered {
        n: usize,
        lambda: f64,
        #[serde(default)]
        phi: Phi,
    },
    Series {
        n: usize,
        lambda: f64,
        degree: u32,
        #[serde(default)]
        phi: Phi,
    },
    Annulus {
        inner: f64,
    },
    Gram {
        domain: DomainDescriptor,
        dictionary: BasisDictionary,
        engine: Engine,
    },
    Restricted {
        base: Box<KernelSpec>,
        domain: DomainDescriptor,
    },
    Pullback {
        base: Box<KernelSpec>,
        map: MapSpec,
        source: DomainDescriptor,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelModel> {
        match self {
            KernelSpec::Ball { n } => {
                if *n == 0 {
                    return Err(BergmanError::Parameter("dimension must be at least 1".into()));
                }
                Ok(KernelModel::ball(*n))
            }
            KernelSpec::Ellipsoid { h } => KernelModel::ellipsoid(h.clone()),
            KernelSpec::Powered { n, lambda, phi } => KernelModel::powered(*n, *lambda, phi.clone()),
            KernelSpec::Series { n, lambda, degree, phi } => Ok(KernelModel::series(
                CoefficientTable::powered_ball(*n, *lambda, *degree)?,
                phi.clone(),
                *degree,
            )),
            KernelSpec::Annulus { inner } => KernelModel::annulus(*inner),
            KernelSpec::Gram {
                domain,
                dictionary,
                engine,
            } => {
                domain.validate()?;
                gram_kernel_estimate(domain, dictionary, engine)
            }
            KernelSpec::Restricted { base, domain } => {
                domain.validate()?;
                Ok(KernelModel::restricted(base.build()?, domain.clone()))
            }
            KernelSpec::Pullback { base, map, source } => {
                source.validate()?;
                Ok(KernelModel::pullback(base.build()?, map.build()?, source.clone()))
            }
        }
    }
}

/// |lhs − rhs|/(1 + |lhs|) for K_src(z,w) = detJ_f(z)·K_tgt(f(z),f(w))·conj(detJ_f(w)).
pub fn transformation_law_residual(
    f: &dyn HolomorphicMap,
    src: &KernelModel,
    tgt: &KernelModel,
    z: &ComplexPoint,
    w: &ComplexPoint,
) -> Result<f64> {
    let lhs = src.eval(z, w)?;
    let (fz, fw) = (f.apply(z)?, f.apply(w)?);
    for p in [&fz, &fw] {
        if !tgt.contains(p) {
            return Err(BergmanError::Domain(format!(
                "map sends a point to {p}, outside {}",
                tgt.label()
            )));
        }
    }
    let rhs = f.jacobian_det(z)? * tgt.eval(&fz, &fw)? * f.jacobian_det(w)?.conj();
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::QuadratureSpec;
    use crate::maps::{IdentityMap, LinearMap};

    fn pt(re: &[f64]) -> ComplexPoint {
        ComplexPoint::from_re(re)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn ball_kernel_values() {
        assert!(close(
            ball_kernel(1, &pt(&[0.0]), &pt(&[0.0])).unwrap().re,
            1.0 / PI,
            1e-15
        ));
        assert!(close(
            ball_kernel(2, &pt(&[0.0, 0.0]), &pt(&[0.0, 0.0])).unwrap().re,
            2.0 / (PI * PI),
            1e-15
        ));
        assert!(close(
            ball_kernel(1, &pt(&[0.5]), &pt(&[0.5])).unwrap().re,
            16.0 / (9.0 * PI),
            1e-15
        ));
    }

    #[test]
    fn ball_kernel_rejects_boundary() {
        assert!(matches!(
            ball_kernel(1, &pt(&[1.0]), &pt(&[1.0])),
            Err(BergmanError::Domain(_))
        ));
        let fam = KernelModel::ball(1).quadratic_family().unwrap();
        assert!(matches!(
            fam.eval(&pt(&[1.0]), &pt(&[1.0])),
            Err(BergmanError::Singularity(_))
        ));
    }

    #[test]
    fn powered_kernel_values() {
        let o = pt(&[0.0]);
        assert!(close(
            powered_kernel(1, 1.0, &Phi::one(), &o, &o).unwrap().re,
            1.0 / PI,
            1e-15
        ));
        assert!(close(
            powered_kernel(1, 2.0, &Phi::one(), &o, &o).unwrap().re,
            1.0 / (PI * PI),
            1e-15
        ));
        let z = pt(&[0.5, 0.0]);
        let v = powered_kernel(2, 1.0, &Phi::Coordinate { index: 0 }, &z, &z).unwrap();
        assert!(close(v.re, 0.25 * ball_kernel(2, &z, &z).unwrap().re, 1e-15));
        assert!(matches!(
            KernelModel::powered(1, 0.0, Phi::one()),
            Err(BergmanError::Parameter(_))
        ));
    }

    #[test]
    fn powered_reduces_to_ball() {
        let z = ComplexPoint::new(vec![C64::new(0.3, -0.2), C64::new(0.1, 0.4)]);
        let w = ComplexPoint::new(vec![C64::new(-0.5, 0.1), C64::new(0.2, 0.2)]);
        let a = powered_kernel(2, 1.0, &Phi::one(), &z, &w).unwrap();
        let b = ball_kernel(2, &z, &w).unwrap();
        assert!((a - b).norm() < 1e-15 * b.norm());
    }

    #[test]
    fn derivative_formula_values() {
        let w = pt(&[0.3]);
        let d1 = deriv_power_kernel(&MultiIndex::new(vec![1]), 1.0, 1, &w).unwrap();
        assert!(close(d1.re, 0.6 / PI, 1e-14));
        let d2 = deriv_power_kernel(&MultiIndex::new(vec![2]), 1.0, 1, &w).unwrap();
        assert!(close(d2.re, 6.0 * 0.09 / PI, 1e-14));
        let zero = deriv_power_kernel(&MultiIndex::new(vec![1, 2]), 1.5, 2, &pt(&[0.0, 0.0])).unwrap();
        assert_eq!(zero, C64::new(0.0, 0.0));
    }

    /// Central differences of K^λ(·, w) at 0, independent of the closed form.
    #[test]
    fn derivative_formula_matches_finite_differences() {
        let n = 2;
        let w = ComplexPoint::new(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.25)]);
        for &lambda in &[1.0, 1.5, 2.0] {
            let k = |z: &ComplexPoint| powered_kernel(n, lambda, &Phi::one(), z, &w).unwrap();
            let h = 1e-3;
            let o = ComplexPoint::zeros(n);
            for j in 0..n {
                let fd1 = (k(&o.shifted(j, C64::new(h, 0.0))) - k(&o.shifted(j, C64::new(-h, 0.0)))) / (2.0 * h);
                let exact = deriv_power_kernel(&MultiIndex::unit(n, j), lambda, n, &w).unwrap();
                assert!((fd1 - exact).norm() <= 1e-6 * exact.norm(), "λ={lambda} j={j}");
            }
            let fd2 =
                (k(&o.shifted(0, C64::new(h, 0.0))) - k(&o) * 2.0 + k(&o.shifted(0, C64::new(-h, 0.0)))) / (h * h);
            let exact = deriv_power_kernel(&MultiIndex::new(vec![2, 0]), lambda, n, &w).unwrap();
            assert!((fd2 - exact).norm() <= 1e-6 * exact.norm());
            let hh = |a: f64, b: f64| k(&o.shifted(0, C64::new(a, 0.0)).shifted(1, C64::new(b, 0.0)));
            let fd11 = (hh(h, h) - hh(h, -h) - hh(-h, h) + hh(-h, -h)) / (4.0 * h * h);
            let exact = deriv_power_kernel(&MultiIndex::new(vec![1, 1]), lambda, n, &w).unwrap();
            assert!((fd11 - exact).norm() <= 1e-6 * exact.norm());
        }
    }

    #[test]
    fn series_matches_closed_form() {
        let t1 = CoefficientTable::powered_ball(1, 1.0, 60).unwrap();
        let z = pt(&[0.5]);
        let v = series_kernel(&t1, &Phi::one(), 60, &z, &z);
        assert!((v.re - 16.0 / (9.0 * PI)).abs() < 1e-8);
        let o = pt(&[0.0]);
        assert!(close(series_kernel(&t1, &Phi::one(), 0, &o, &o).re, 1.0 / PI, 1e-15));
        let t2 = CoefficientTable::powered_ball(2, 1.0, 40).unwrap();
        let z = pt(&[0.3, 0.4]);
        let v = series_kernel(&t2, &Phi::one(), 40, &z, &z);
        assert!((v - ball_kernel(2, &z, &z).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn series_agrees_for_fractional_powers() {
        for n in 1..=2usize {
            for &lambda in &[1.0, 1.5, 2.0] {
                let table = CoefficientTable::powered_ball(n, lambda, 60).unwrap();
                let z = ComplexPoint::new((0..n).map(|j| C64::new(0.3 - 0.1 * j as f64, 0.2)).collect());
                let w = ComplexPoint::new((0..n).map(|j| C64::new(-0.1, 0.35 - 0.2 * j as f64)).collect());
                let s = series_kernel(&table, &Phi::one(), 60, &z, &w);
                let c = powered_kernel(n, lambda, &Phi::one(), &z, &w).unwrap();
                assert!((s - c).norm() <= 1e-8 * c.norm(), "n={n} λ={lambda}");
            }
        }
    }

    #[test]
    fn truncation_degree_is_sufficient() {
        let big_n = series_truncation_degree(2, 1.5, 0.5, 1e-8).unwrap();
        let table = CoefficientTable::powered_ball(2, 1.5, big_n).unwrap();
        let z = pt(&[0.3, 0.4]);
        let s = series_kernel(&table, &Phi::one(), big_n, &z, &z);
        let c = powered_kernel(2, 1.5, &Phi::one(), &z, &z).unwrap();
        assert!((s - c).norm() < 0.5e-8, "N={big_n}");
    }

    #[test]
    fn coefficient_table_json_shape() {
        let t = CoefficientTable::powered_ball(2, 1.0, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["degree"], 1);
        assert_eq!(v["coeffs"][1]["alpha"], serde_json::json!([1, 0]));
        assert!((v["coeffs"][1]["c"].as_f64().unwrap() - 6f64.sqrt() / PI).abs() < 1e-15);
        let back = CoefficientTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn annulus_values() {
        // k = 0 coefficient
        let c0 = 1.0 / (PI * (1.0 - 0.25));
        assert!((c0 - 0.424_413_181_578_387_6).abs() < 1e-12);
        let z = C64::new(0.6, 0.0);
        let w = C64::new(0.0, 0.7);
        let a = annulus_kernel(0.5, z, w).unwrap();
        let b = annulus_kernel(0.5, w, z).unwrap();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm());
        assert!(matches!(
            annulus_kernel(0.5, C64::new(0.4, 0.0), z),
            Err(BergmanError::Domain(_))
        ));
    }

    /// The only non-vanishing r → 0 correction is the logarithmic k = −1 term.
    #[test]
    fn annulus_degenerates_to_disk() {
        let z = C64::new(0.5, 0.0);
        let disk = 1.0 / (PI * 0.75 * 0.75);
        let mut last = f64::INFINITY;
        for &r in &[1e-3, 1e-12, 1e-100] {
            let k = annulus_kernel(r, z, z).unwrap().re;
            let log_term = 1.0 / (0.25 * 2.0 * PI * (1.0 / r).ln());
            assert!((k - disk - log_term).abs() < 1e-5);
            let gap = (k - disk).abs();
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn ellipsoid_values() {
        for n in 1..=3 {
            let h = HermitianForm::scaled_identity(n, (n + 1) as f64);
            let o = ComplexPoint::zeros(n);
            assert!(close(ellipsoid_kernel(&h, &o).unwrap(), ball_constant(n), 1e-15));
            let z = ComplexPoint::new((0..n).map(|j| C64::new(0.2, 0.1 * j as f64)).collect());
            let b = ball_kernel(n, &z, &z).unwrap().re;
            assert!(close(ellipsoid_kernel(&h, &z).unwrap(), b, 1e-14));
        }
        let h = HermitianForm::scaled_identity(1, 4.0);
        assert!(close(ellipsoid_kernel(&h, &pt(&[0.0])).unwrap(), 2.0 / PI, 1e-15));
        assert!(close(ellipsoid_kernel(&h, &pt(&[0.5])).unwrap(), 8.0 / PI, 1e-14));
        assert!(matches!(
            ellipsoid_kernel(&h, &pt(&[0.71])),
            Err(BergmanError::Domain(_))
        ));
    }

    #[test]
    fn monomial_gram_on_ball_is_the_series() {
        let d = DomainDescriptor::unit_ball(2);
        let dict = BasisDictionary::monomials(2, 6);
        let g = gram_kernel_estimate(&d, &dict, &Engine::Quadrature(QuadratureSpec::with_angular(9, 18))).unwrap();
        let table = CoefficientTable::powered_ball(2, 1.0, 6).unwrap();
        let z = ComplexPoint::new(vec![C64::new(0.3, 0.2), C64::new(-0.1, 0.5)]);
        let w = ComplexPoint::new(vec![C64::new(0.1, -0.4), C64::new(0.6, 0.0)]);
        let a = g.eval(&z, &w).unwrap();
        let b = series_kernel(&table, &Phi::one(), 6, &z, &w);
        assert!((a - b).norm() < 1e-10 * b.norm(), "{a} {b}");
    }

    #[test]
    fn gram_reports_ill_conditioning() {
        // w and 2w span a one-dimensional space
        let d = DomainDescriptor::unit_ball(1);
        let dict = BasisDictionary {
            exponents: vec![vec![1], vec![1]],
        };
        let err = gram_kernel_estimate(&d, &dict, &Engine::Quadrature(QuadratureSpec::auto(6))).unwrap_err();
        assert!(matches!(err, BergmanError::Conditioning { .. }), "{err}");
    }

    #[test]
    fn transformation_law_for_identity_and_unitary() {
        let k = KernelModel::ball(2);
        let z = ComplexPoint::new(vec![C64::new(0.3, 0.2), C64::new(-0.1, 0.5)]);
        let w = ComplexPoint::new(vec![C64::new(0.1, -0.4), C64::new(0.6, 0.0)]);
        assert_eq!(
            transformation_law_residual(&IdentityMap::new(2), &k, &k, &z, &w).unwrap(),
            0.0
        );
        let t = 0.7f64;
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(t.cos(), 0.0),
                C64::new(0.0, t.sin()),
                C64::new(0.0, t.sin()),
                C64::new(t.cos(), 0.0),
            ],
        );
        let map = LinearMap::unitary(u).unwrap();
        assert!(transformation_law_residual(&map, &k, &k, &z, &w).unwrap() <= 1e-12);
    }
}
