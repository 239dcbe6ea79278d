//! Shared vocabulary: multi-indices, points of ℂⁿ, Hermitian forms and the
//! tolerance policy used by every check in the crate.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BergmanError, Result};
use crate::wire::Cx;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Conjugate-symmetry tolerance for Hermitian input matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Multi-index α ∈ ℕⁿ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// Unit index e_j.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// α! with checked arithmetic; `None` once the product leaves `u128`.
    pub fn factorial_exact(&self) -> Option<u128> {
        let mut acc: u128 = 1;
        for &a in &self.0 {
            for k in 2..=a as u128 {
                acc = acc.checked_mul(k)?;
            }
        }
        Some(acc)
    }

    /// ln α!.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&a| ln_factorial(a)).sum()
    }

    /// α! as a float: exact product for |α| ≤ 20, exponentiated log otherwise.
    pub fn factorial(&self) -> f64 {
        if self.degree() <= 20 {
            self.factorial_exact().expect("20! fits in u128") as f64
        } else {
            self.ln_factorial().exp()
        }
    }

    /// w^α.
    pub fn monomial(&self, w: &ComplexPoint) -> C64 {
        debug_assert_eq!(self.dim(), w.dim());
        self.0
            .iter()
            .zip(w.coords())
            .fold(C64::new(1.0, 0.0), |acc, (&a, z)| acc * z.powu(a))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// All α ∈ ℕⁿ with |α| ≤ `max_degree`, graded by total degree and ordered
/// lexicographically (largest leading entry first) within a degree.
pub fn enumerate_multiindices(n: usize, max_degree: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut buf = vec![0u32; n];
    for d in 0..=max_degree {
        compositions(d, 0, &mut buf, &mut out);
    }
    out
}

fn compositions(remaining: u32, slot: usize, buf: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        out.push(MultiIndex(buf.clone()));
        return;
    }
    for a in (0..=remaining).rev() {
        buf[slot] = a;
        compositions(remaining - a, slot + 1, buf, out);
    }
}

/// ln k!.
pub fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// ln of the rising factorial μ(μ+1)⋯(μ+m−1); zero for m = 0.
pub fn ln_pochhammer(mu: f64, m: u32) -> f64 {
    (0..m).map(|k| (mu + k as f64).ln()).sum()
}

/// μ(μ+1)⋯(μ+m−1), multiplied directly for m ≤ 20 and through logs beyond.
pub fn pochhammer(mu: f64, m: u32) -> f64 {
    if m <= 20 {
        (0..m).map(|k| mu + k as f64).product()
    } else {
        ln_pochhammer(mu, m).exp()
    }
}

/// Binomial coefficient as f64 (exact for the sizes used here).
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// A point z = (z₁,…,zₙ) of ℂⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Cx>", from = "Vec<Cx>")]
pub struct ComplexPoint(Vec<C64>);

impl ComplexPoint {
    pub fn new(coords: Vec<C64>) -> Self {
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_re(re: &[f64]) -> Self {
        Self(re.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ⟨z, w⟩ = Σ zⱼ w̄ⱼ.
    pub fn inner(&self, w: &ComplexPoint) -> C64 {
        debug_assert_eq!(self.dim(), w.dim());
        self.0.iter().zip(&w.0).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &ComplexPoint) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ComplexPoint) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    /// z + t·e_j.
    pub fn shifted(&self, j: usize, t: C64) -> Self {
        let mut c = self.clone();
        c.0[j] += t;
        c
    }

    /// Column vector view, for matrix products.
    pub fn to_vector(&self) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_column_slice(&self.0)
    }

    pub fn from_vector(v: &nalgebra::DVector<C64>) -> Self {
        Self(v.iter().copied().collect())
    }
}

impl fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, z) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, ")")
    }
}

impl From<Vec<C64>> for ComplexPoint {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}

/// Hermitian n×n matrix H = (h_{ij̄}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<Cx>>", try_from = "Vec<Vec<Cx>>")]
pub struct HermitianForm {
    m: CMatrix,
}

impl HermitianForm {
    /// Rejects matrices that are not square or not conjugate-symmetric.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(BergmanError::Parameter(format!(
                "Hermitian form must be a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(BergmanError::Parameter(format!("matrix is not Hermitian at ({i},{j})")));
                }
            }
        }
        Ok(Self { m })
    }

    /// Symmetrizes (M + M*)/2; for matrices Hermitian up to rounding.
    pub fn from_nearly_hermitian(m: &CMatrix) -> Self {
        Self {
            m: (m + m.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self {
            m: CMatrix::identity(n, n) * C64::new(c, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Σ ζᵢ h_{ij̄} ζ̄ⱼ, with ζ read as a row vector.
    pub fn quadratic(&self, zeta: &ComplexPoint) -> f64 {
        let z = zeta.coords();
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += z[i] * self.m[(i, j)] * z[j].conj();
            }
        }
        acc.re
    }

    /// Σ zᵢ h_{ij̄} w̄ⱼ.
    pub fn sesquilinear(&self, z: &ComplexPoint, w: &ComplexPoint) -> C64 {
        let (z, w) = (z.coords(), w.coords());
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += z[i] * self.m[(i, j)] * w[j].conj();
            }
        }
        acc
    }

    pub fn determinant(&self) -> f64 {
        self.m.clone().determinant().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn is_positive_definite(&self) -> bool {
        hermitian_sqrt(self).is_ok()
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.m
            .clone()
            .try_inverse()
            .ok_or_else(|| BergmanError::Parameter("singular Hermitian form".into()))
    }
}

/// Lower-triangular A with positive real diagonal and H = A·A*.
///
/// Fails with the index of the first non-positive pivot.
pub fn hermitian_sqrt(h: &HermitianForm) -> Result<CMatrix> {
    let n = h.dim();
    let m = h.matrix();
    let mut a = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= a[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(BergmanError::Definiteness { pivot: j, value: d });
        }
        let djj = d.sqrt();
        a[(j, j)] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)].conj();
            }
            a[(i, j)] = s / djj;
        }
    }
    Ok(a)
}

/// Which family of check a tolerance applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckClass {
    ClosedForm,
    FiniteDifference,
    MonteCarlo,
}

/// Tolerances per check class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub closed_form: f64,
    pub finite_difference: f64,
    /// Monte Carlo acceptance in units of the estimated standard error.
    pub monte_carlo_sigmas: f64,
    /// Monte Carlo relative floor.
    pub monte_carlo_relative: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            closed_form: 1e-12,
            finite_difference: 1e-6,
            monte_carlo_sigmas: 3.0,
            monte_carlo_relative: 0.01,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("closed-form", self.closed_form),
            ("finite-difference", self.finite_difference),
            ("monte-carlo sigmas", self.monte_carlo_sigmas),
            ("monte-carlo relative", self.monte_carlo_relative),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BergmanError::Parameter(format!(
                    "tolerance `{name}` must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn for_class(&self, class: CheckClass) -> f64 {
        match class {
            CheckClass::ClosedForm => self.closed_form,
            CheckClass::FiniteDifference => self.finite_difference,
            CheckClass::MonteCarlo => self.monte_carlo_relative,
        }
    }

    /// Allowed deviation of a Monte Carlo estimate from `target`.
    pub fn monte_carlo_bound(&self, stderr: f64, target: f64) -> f64 {
        (self.monte_carlo_sigmas * stderr).max(self.monte_carlo_relative * target.abs())
    }

    /// Applies a `class=value` override, e.g. `finite-difference=1e-5`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| BergmanError::Parameter(format!("expected class=value, got `{spec}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| BergmanError::Parameter(format!("not a number: `{value}`")))?;
        match key.trim() {
            "closed-form" => self.closed_form = v,
            "finite-difference" => self.finite_difference = v,
            "monte-carlo-sigmas" => self.monte_carlo_sigmas = v,
            "monte-carlo-relative" => self.monte_carlo_relative = v,
            other => {
                return Err(BergmanError::Parameter(format!(
                    "unknown tolerance class `{other}` (expected closed-form, finite-difference, \
                     monte-carlo-sigmas or monte-carlo-relative)"
                )))
            }
        }
        self.validate()
    }
}

/// ‖M‖_∞ as the max absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
