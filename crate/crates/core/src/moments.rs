//! Moment data ∫ w^α w̄^β dη of weighted measures, the orthonormality
//! constants c_{α,λ}, even moments of Re z₁ and the support-reach root test.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainDescriptor, DomainKind, QuadratureSpec};
use crate::error::{BergmanError, Result};
use crate::integrate::{integrate, integrate_many, Engine, IntegralEstimate};
use crate::kernels::Phi;
use crate::types::{
    enumerate_multiindices, ln_factorial, ln_pochhammer, ComplexPoint, MultiIndex, TolerancePolicy, C64,
};

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln(n!/πⁿ).
fn ln_ball_constant(n: usize) -> f64 {
    ln_factorial(n as u32) - n as f64 * PI.ln()
}

/// c_{α,λ} = √((n!/πⁿ)^λ·μ(μ+1)⋯(μ+|α|−1)/α!), μ = (n+1)λ.
pub fn c_alpha(alpha: &MultiIndex, lambda: f64, n: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BergmanError::Parameter(format!("λ must be positive, got {lambda}")));
    }
    if alpha.dim() != n {
        return Err(BergmanError::Parameter(format!(
            "multi-index {alpha} is not of length {n}"
        )));
    }
    let mu = (n + 1) as f64 * lambda;
    let ln = lambda * ln_ball_constant(n) + ln_pochhammer(mu, alpha.degree()) - alpha.ln_factorial();
    Ok((0.5 * ln).exp())
}

/// Density of a moment measure with respect to Lebesgue measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    #[default]
    Uniform,
    /// |φ|².
    PhiSquared { phi: Phi },
    /// The radial weight on 𝔹ⁿ whose moments are δ_{αβ}/c²_{α,λ}:
    /// (πⁿ/n!)^λ·Γ(μ)/(πⁿΓ(μ−n))·(1 − |w|²)^{μ−n−1}; needs μ > n.
    Radial { lambda: f64 },
}

impl Density {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Density::Uniform => Ok(()),
            Density::PhiSquared { phi } => match phi {
                Phi::Coordinate { index } if *index >= n => {
                    Err(BergmanError::Parameter(format!("φ coordinate {index} out of range")))
                }
                _ => Ok(()),
            },
            Density::Radial { lambda } => {
                if (n + 1) as f64 * lambda > n as f64 {
                    Ok(())
                } else {
                    Err(BergmanError::Parameter(format!(
                        "radial density needs (n+1)λ > n, got λ = {lambda}"
                    )))
                }
            }
        }
    }

    pub fn eval(&self, w: &ComplexPoint) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::PhiSquared { phi } => phi.eval(w).norm_sqr(),
            Density::Radial { lambda } => {
                let n = w.dim();
                let mu = (n + 1) as f64 * lambda;
                let ln_c = -lambda * ln_ball_constant(n) + ln_gamma(mu) - n as f64 * PI.ln() - ln_gamma(mu - n as f64);
                let r = (1.0 - w.norm_sqr()).max(0.0);
                (ln_c + (mu - n as f64 - 1.0) * r.ln()).exp()
            }
        }
    }
}

/// A nonnegative measure η whose moments are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentMeasure {
    Weighted {
        domain: DomainDescriptor,
        #[serde(default)]
        density: Density,
        engine: Engine,
    },
    PointMass {
        at: ComplexPoint,
        #[serde(default = "unit_mass")]
        mass: f64,
    },
}

fn unit_mass() -> f64 {
    1.0
}

impl MomentMeasure {
    pub fn lebesgue(domain: DomainDescriptor, engine: Engine) -> Self {
        MomentMeasure::Weighted {
            domain,
            density: Density::Uniform,
            engine,
        }
    }

    pub fn weighted(domain: DomainDescriptor, density: Density, engine: Engine) -> Self {
        MomentMeasure::Weighted {
            domain,
            density,
            engine,
        }
    }

    pub fn point_mass(at: ComplexPoint) -> Self {
        MomentMeasure::PointMass { at, mass: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            MomentMeasure::Weighted { domain, .. } => domain.n,
            MomentMeasure::PointMass { at, .. } => at.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MomentMeasure::Weighted { domain, density, .. } => {
                domain.validate()?;
                density.validate(domain.n)
            }
            MomentMeasure::PointMass { at, mass } => {
                if !(at.is_finite() && *mass >= 0.0 && mass.is_finite()) {
                    return Err(BergmanError::Parameter(
                        "point mass needs a finite location and mass ≥ 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MomentMeasure::Weighted { domain, density, .. } => match density {
                Density::Uniform => domain.label(),
                Density::PhiSquared { .. } => format!("|φ|² on {}", domain.label()),
                Density::Radial { lambda } => format!("radial(λ={lambda}) on {}", domain.label()),
            },
            MomentMeasure::PointMass { at, .. } => format!("point-mass({at})"),
        }
    }

    pub fn engine_tag(&self) -> String {
        match self {
            MomentMeasure::Weighted { engine, .. } => engine.tag(),
            MomentMeasure::PointMass { .. } => "exact".into(),
        }
    }

    /// ∫ f dη for `width` integrands at once.
    fn integrate_many<F>(&self, width: usize, f: F) -> Result<Vec<IntegralEstimate>>
    where
        F: Fn(&ComplexPoint, &mut [C64]) + Sync,
    {
        self.validate()?;
        match self {
            MomentMeasure::Weighted {
                domain,
                density,
                engine,
            } => integrate_many(domain, engine, width, |w, out| {
                f(w, out);
                let rho = density.eval(w);
                for v in out.iter_mut() {
                    *v *= rho;
                }
            }),
            MomentMeasure::PointMass { at, mass } => {
                let mut out = vec![C64::new(0.0, 0.0); width];
                f(at, &mut out);
                Ok(out
                    .into_iter()
                    .map(|v| IntegralEstimate {
                        value: v * *mass,
                        stderr: 0.0,
                        engine: "exact".into(),
                    })
                    .collect())
            }
        }
    }
}

/// ∫ w^α w̄^β dη.
pub fn moment_integral(measure: &MomentMeasure, alpha: &MultiIndex, beta: &MultiIndex) -> Result<IntegralEstimate> {
    let n = measure.dim();
    if alpha.dim() != n || beta.dim() != n {
        return Err(BergmanError::Parameter("multi-index dimension mismatch".into()));
    }
    let mut v = measure.integrate_many(1, |w, out| out[0] = alpha.monomial(w) * beta.monomial(&w.conj()))?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    #[serde(with = "crate::wire::cx")]
    pub value: C64,
    pub stderr: f64,
    pub engine: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub measure: String,
    pub max_degree: u32,
    pub entries: Vec<MomentEntry>,
}

/// All moments with |α|, |β| ≤ N from one pass over the nodes or samples.
pub fn moment_table(measure: &MomentMeasure, max_degree: u32) -> Result<MomentTable> {
    let n = measure.dim();
    let idx = enumerate_multiindices(n, max_degree);
    let m = idx.len();
    let est = measure.integrate_many(m * m, |w, out| {
        let mono: Vec<C64> = idx.iter().map(|a| a.monomial(w)).collect();
        for a in 0..m {
            for b in 0..m {
                out[a * m + b] = mono[a] * mono[b].conj();
            }
        }
    })?;
    let mut entries = Vec::with_capacity(m * m);
    for (k, e) in est.into_iter().enumerate() {
        entries.push(MomentEntry {
            alpha: idx[k / m].clone(),
            beta: idx[k % m].clone(),
            value: e.value,
            stderr: e.stderr,
            engine: e.engine,
        });
    }
    Ok(MomentTable {
        measure: measure.label(),
        max_degree,
        entries,
    })
}

impl MomentTable {
    pub fn get(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Option<&MomentEntry> {
        self.entries.iter().find(|e| &e.alpha == alpha && &e.beta == beta)
    }

    /// Largest |s_{αβ} − conj(s_{βα})| in units of the combined standard error
    /// (absolute when both errors vanish).
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.entries {
            if let Some(t) = self.get(&e.beta, &e.alpha) {
                let gap = (e.value - t.value.conj()).norm();
                let scale = e.stderr + t.stderr;
                worst = worst.max(if scale > 0.0 { gap / scale } else { gap });
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        crate::wire::to_json_string(self, true)
    }

    /// Columns alpha, beta, re, im, stderr, engine; indices as `1;0`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "beta", "re", "im", "stderr", "engine"])?;
        let join = |a: &MultiIndex| a.entries().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        for e in &self.entries {
            w.write_record([
                join(&e.alpha),
                join(&e.beta),
                crate::wire::fmt17(e.value.re),
                crate::wire::fmt17(e.value.im),
                crate::wire::fmt17(e.stderr),
                e.engine.clone(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| BergmanError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "moments of {} (|α|,|β| ≤ {})", self.measure, self.max_degree);
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>24} {:>24} {:>10}",
            "alpha", "beta", "re", "im", "stderr"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:>10} {:>10} {:>24.16e} {:>24.16e} {:>10.3e}",
                e.alpha.to_string(),
                e.beta.to_string(),
                e.value.re,
                e.value.im,
                e.stderr
            );
        }
        out
    }
}

/// How well a table reproduces s_{αβ} = δ_{αβ}/c²_{α,λ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResidual {
    /// max |est − target|/(stderr + target).
    pub normalized: f64,
    /// max |est − target|/stderr (infinite when an exact engine misses).
    pub sigmas: f64,
    /// max |est − target|/bound with bound = max(k·stderr, rel·|target|) from
    /// the tolerance policy; the identity holds when this is ≤ 1.
    pub excess: f64,
    pub worst_alpha: MultiIndex,
    pub worst_beta: MultiIndex,
    pub cells: usize,
}

impl MomentResidual {
    pub fn holds(&self) -> bool {
        self.excess <= 1.0
    }
}

/// δ_{αβ}/c²_{α,λ}.
pub fn moment_target(alpha: &MultiIndex, beta: &MultiIndex, lambda: f64) -> Result<f64> {
    if alpha != beta {
        return Ok(0.0);
    }
    let c = c_alpha(alpha, lambda, alpha.dim())?;
    Ok(1.0 / (c * c))
}

pub fn moment_identity_residual(measure: &MomentMeasure, lambda: f64, max_degree: u32) -> Result<MomentResidual> {
    let table = moment_table(measure, max_degree)?;
    table_identity_residual(&table, lambda, &TolerancePolicy::default())
}

pub fn table_identity_residual(table: &MomentTable, lambda: f64, policy: &TolerancePolicy) -> Result<MomentResidual> {
    let mut r = MomentResidual {
        normalized: 0.0,
        sigmas: 0.0,
        excess: 0.0,
        worst_alpha: MultiIndex::zeros(0),
        worst_beta: MultiIndex::zeros(0),
        cells: table.entries.len(),
    };
    for e in &table.entries {
        let target = moment_target(&e.alpha, &e.beta, lambda)?;
        let gap = (e.value - target).norm();
        r.normalized = r.normalized.max(gap / (e.stderr + target));
        let sig = if e.stderr > 0.0 {
            gap / e.stderr
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        r.sigmas = r.sigmas.max(sig);
        let bound = policy.monte_carlo_bound(e.stderr, target);
        let ex = if bound > 0.0 {
            gap / bound
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if ex >= r.excess {
            r.excess = ex;
            r.worst_alpha = e.alpha.clone();
            r.worst_beta = e.beta.clone();
        }
    }
    Ok(r)
}

/// ∫_{𝔹ⁿ} Re(z₁)^{2m} dη_λ = (πⁿ/n!)^λ·2^{−2m}·(2m)!/(m!·μ(μ+1)⋯(μ+m−1)).
pub fn even_moment_closed_form(m: u32, lambda: f64, n: usize) -> Result<f64> {
    Ok(ln_even_moment(m, lambda, n)?.exp())
}

fn ln_even_moment(m: u32, lambda: f64, n: usize) -> Result<f64> {
    if !(lambda > 0.0) || n == 0 {
        return Err(BergmanError::Parameter("need λ > 0 and n ≥ 1".into()));
    }
    let mu = (n + 1) as f64 * lambda;
    Ok(
        -lambda * ln_ball_constant(n) - 2.0 * m as f64 * 2f64.ln() + ln_factorial(2 * m)
            - ln_factorial(m)
            - ln_pochhammer(mu, m),
    )
}

/// ∫ Re(z₁)^{2m} dη with the measure's own engine.
pub fn even_moment_integral(measure: &MomentMeasure, m: u32) -> Result<IntegralEstimate> {
    let mut v = measure.integrate_many(1, |w, out| out[0] = C64::new(w.coords()[0].re.powi(2 * m as i32), 0.0))?;
    Ok(v.remove(0))
}

/// (m/(μ+m))^m for m = 1, …, m_max; decreases to e^{−μ}.
pub fn stirling_ratio_sequence(mu: f64, m_max: u32) -> Result<Vec<f64>> {
    if !(mu > 0.0) || m_max == 0 {
        return Err(BergmanError::Parameter("need μ > 0 and m_max ≥ 1".into()));
    }
    Ok((1..=m_max)
        .map(|m| (m as f64 * (m as f64 / (mu + m as f64)).ln()).exp())
        .collect())
}

/// Closed-form ln of the m-th even moment and of the mass, when η is a
/// ball measure (up to a null set) with uniform or radial density.
fn closed_form_moments(measure: &MomentMeasure, m: u32) -> Option<Result<(f64, f64)>> {
    let MomentMeasure::Weighted { domain, density, .. } = measure else {
        return None;
    };
    let lambda = match density {
        Density::Uniform => 1.0,
        Density::Radial { lambda } => *lambda,
        Density::PhiSquared { .. } => return None,
    };
    let n = domain.n;
    let radius = match &domain.kind {
        DomainKind::Ball { center: None, radius } => *radius,
        DomainKind::SlitBall | DomainKind::HartogsComplement { .. } => 1.0,
        _ => return None,
    };
    if radius != 1.0 && !matches!(density, Density::Uniform) {
        return None;
    }
    // dilation by R multiplies the m-th moment by R^{2m+2n}
    let shift = |k: u32| (2 * k as usize + 2 * n) as f64 * radius.ln();
    Some((|| {
        Ok((
            ln_even_moment(m, lambda, n)? + shift(m),
            ln_even_moment(0, lambda, n)? + shift(0),
        ))
    })())
}

/// (∫Re(z₁)^{2m}dη / η(ℂⁿ))^{1/(2m)} at m = m_max, which increases to
/// sup |Re z₁| over the support. Closed forms are used on balls; other
/// measures are integrated with a quadrature rule sized for degree 2m_max.
pub fn support_reach_estimate(measure: &MomentMeasure, m_max: u32) -> Result<f64> {
    if m_max == 0 {
        return Err(BergmanError::Parameter("m_max must be at least 1".into()));
    }
    if let MomentMeasure::PointMass { at, mass } = measure {
        if *mass == 0.0 {
            return Err(BergmanError::Diagnostic("measure has zero mass".into()));
        }
        return Ok(at.coords()[0].re.abs());
    }
    if let Some(cf) = closed_form_moments(measure, m_max) {
        let (ln_top, ln_mass) = cf?;
        return Ok(((ln_top - ln_mass) / (2.0 * m_max as f64)).exp().min(1.0));
    }
    let MomentMeasure::Weighted { domain, density, .. } = measure else {
        unreachable!()
    };
    let spec = QuadratureSpec::with_angular(m_max as usize / 2 + 8, 2 * m_max as usize + 8);
    let quad = MomentMeasure::Weighted {
        domain: domain.clone(),
        density: density.clone(),
        engine: Engine::Quadrature(spec),
    };
    let top = even_moment_integral(&quad, m_max)?.value.re;
    let mass = integrate(domain, &Engine::Quadrature(spec), |w| C64::new(density.eval(w), 0.0))?
        .value
        .re;
    if !(top >= 0.0) || !(mass > 0.0) {
        return Err(BergmanError::Diagnostic(format!(
            "negative or empty moment (top {top:e}, mass {mass:e}); the root test needs nonnegative data"
        )));
    }
    Ok((top / mass).powf(1.0 / (2.0 * m_max as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(order: usize) -> Engine {
        Engine::Quadrature(QuadratureSpec::auto(order))
    }

    #[test]
    fn log_gamma_matches_factorials() {
        for k in 1..30u32 {
            assert!((ln_gamma(k as f64 + 1.0) - ln_factorial(k)).abs() < 1e-12 * (1.0 + ln_factorial(k)));
        }
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn c_alpha_values() {
        assert!((c_alpha(&MultiIndex::zeros(1), 1.0, 1).unwrap() - (1.0 / PI).sqrt()).abs() < 1e-15);
        assert!((c_alpha(&MultiIndex::new(vec![2]), 1.0, 1).unwrap() - (3.0 / PI).sqrt()).abs() < 1e-15);
        assert!((c_alpha(&MultiIndex::new(vec![1, 0]), 1.0, 2).unwrap() - 6f64.sqrt() / PI).abs() < 1e-15);
        assert!(c_alpha(&MultiIndex::zeros(1), 0.0, 1).is_err());
    }

    #[test]
    fn c_alpha_reduces_to_factorial_form() {
        for n in 1..=3usize {
            for a in enumerate_multiindices(n, 6) {
                let direct = (ln_ball_constant(n) + ln_factorial(a.degree() + n as u32)
                    - ln_factorial(n as u32)
                    - a.ln_factorial())
                .exp()
                .sqrt();
                assert!((c_alpha(&a, 1.0, n).unwrap() / direct - 1.0).abs() < 1e-13);
            }
            let zero = c_alpha(&MultiIndex::zeros(n), 2.5, n).unwrap();
            assert!((zero - (ln_ball_constant(n) * 1.25).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn moment_integral_examples() {
        let disk = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(8));
        let one = MultiIndex::new(vec![1]);
        let v = moment_integral(&disk, &one, &one).unwrap();
        assert!((v.value.re - PI / 2.0).abs() < 1e-13);
        let off = moment_integral(&disk, &one, &MultiIndex::zeros(1)).unwrap();
        assert!(off.value.norm() < 1e-14);
        let ball = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(2), quad(6));
        let vol = moment_integral(&ball, &MultiIndex::zeros(2), &MultiIndex::zeros(2)).unwrap();
        assert!((vol.value.re - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn moment_identity_exact_by_quadrature() {
        for n in 1..=2usize {
            let ball = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(n), quad(8));
            let radial = MomentMeasure::weighted(
                DomainDescriptor::unit_ball(n),
                Density::Radial { lambda: 2.0 },
                quad(12),
            );
            for (m, lambda, tol) in [(ball, 1.0, 1e-12), (radial, 2.0, 1e-10)] {
                let table = moment_table(&m, 4).unwrap();
                for e in &table.entries {
                    let t = moment_target(&e.alpha, &e.beta, lambda).unwrap();
                    assert!(
                        (e.value - t).norm() <= tol * (1.0 + t),
                        "{:?} {:?} {} {t}",
                        e.alpha,
                        e.beta,
                        e.value
                    );
                }
                assert!(table_identity_residual(&table, lambda, &TolerancePolicy::default())
                    .unwrap()
                    .holds());
            }
        }
    }

    #[test]
    fn radial_density_is_one_at_lambda_one() {
        let w = ComplexPoint::from_re(&[0.3, 0.4]);
        assert!((Density::Radial { lambda: 1.0 }.eval(&w) - 1.0).abs() < 1e-13);
        assert!(Density::Radial { lambda: 0.5 }.validate(2).is_err());
    }

    #[test]
    fn uniform_measure_fails_the_squared_identity() {
        let ball = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(8));
        let r = moment_identity_residual(&ball, 2.0, 2).unwrap();
        assert!(!r.holds());
    }

    #[test]
    fn shrunken_ball_fails_identity() {
        let small = MomentMeasure::lebesgue(DomainDescriptor::scaled_ball(1, 0.9).unwrap(), quad(8));
        let r = moment_identity_residual(&small, 1.0, 3).unwrap();
        assert!(!r.holds());
        // diagonal moments shrink by 0.9^{2|α|+2}
        let t = moment_table(&small, 1).unwrap();
        let a = MultiIndex::new(vec![1]);
        assert!((t.get(&a, &a).unwrap().value.re - 0.9f64.powi(4) * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn even_moment_values() {
        assert!((even_moment_closed_form(1, 1.0, 1).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((even_moment_closed_form(2, 1.0, 1).unwrap() - PI / 8.0).abs() < 1e-15);
        assert!((even_moment_closed_form(1, 2.0, 1).unwrap() - PI * PI / 8.0).abs() < 1e-14);
        let disk = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(10));
        for m in 1..=5 {
            let q = even_moment_integral(&disk, m).unwrap().value.re;
            let cf = even_moment_closed_form(m, 1.0, 1).unwrap();
            assert!((q / cf - 1.0).abs() < 1e-12);
        }
        // no overflow at m = 200
        assert!(even_moment_closed_form(200, 1.5, 2).unwrap() > 0.0);
    }

    #[test]
    fn stirling_sequence() {
        let s = stirling_ratio_sequence(2.0, 200).unwrap();
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert!((s[199] - (-2f64).exp()).abs() < 0.02);
        let s3 = stirling_ratio_sequence(3.0, 200).unwrap();
        assert!((s3[199] - (-3f64).exp()).abs() < 0.02);
        for m_max in [10u32, 100, 1000] {
            let v = *stirling_ratio_sequence(2.0, m_max).unwrap().last().unwrap();
            assert!((v - (-2f64).exp()).abs() <= 4.0 * (-2f64).exp() / m_max as f64);
        }
    }

    #[test]
    fn support_reach_separates() {
        let ball = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(8));
        assert!(support_reach_estimate(&ball, 200).unwrap() >= 0.95);
        let small = MomentMeasure::lebesgue(DomainDescriptor::scaled_ball(1, 0.8).unwrap(), quad(8));
        assert!(support_reach_estimate(&small, 200).unwrap() <= 0.82);
        let point = MomentMeasure::point_mass(ComplexPoint::zeros(1));
        assert_eq!(support_reach_estimate(&point, 200).unwrap(), 0.0);
        let radial = MomentMeasure::weighted(DomainDescriptor::unit_ball(1), Density::Radial { lambda: 2.0 }, quad(4));
        assert!(support_reach_estimate(&radial, 200).unwrap() >= 0.95);
    }

    #[test]
    fn support_reach_radial_converges_slowly() {
        // the boundary weight (1-|w|²)^3 costs a factor m^(-5.5/2m)
        let radial = MomentMeasure::weighted(DomainDescriptor::unit_ball(2), Density::Radial { lambda: 2.0 }, quad(4));
        let e: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&m| support_reach_estimate(&radial, m).unwrap())
            .collect();
        assert!(e[0] < e[1] && e[1] < e[2] && e[2] > 0.9 && e[2] < 1.0, "{e:?}");
    }

    #[test]
    fn support_reach_by_quadrature_matches_closed_form() {
        // a weight of |w|² forces the quadrature branch
        let disk = DomainDescriptor::unit_ball(1);
        let weighted = MomentMeasure::weighted(
            disk.clone(),
            Density::PhiSquared {
                phi: Phi::Coordinate { index: 0 },
            },
            quad(4),
        );
        let est = support_reach_estimate(&weighted, 60).unwrap();
        assert!(est > 0.9 && est < 1.0);
        let small = MomentMeasure::weighted(
            DomainDescriptor::scaled_ball(1, 0.8).unwrap(),
            Density::PhiSquared {
                phi: Phi::Coordinate { index: 0 },
            },
            quad(4),
        );
        assert!(support_reach_estimate(&small, 200).unwrap() <= 0.8);
    }

    #[test]
    fn table_exports() {
        let disk = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(6));
        let t = moment_table(&disk, 3).unwrap();
        assert_eq!(t.entries.len(), 16);
        assert!(t.hermitian_defect() < 1e-12);
        let csv = t.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "alpha,beta,re,im,stderr,engine");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..2], &["0", "0"]);
        let back: MomentTable = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.entries.len(), 16);
    }

    #[test]
    fn monte_carlo_table_is_hermitian() {
        let d1 = MomentMeasure::lebesgue(
            DomainDescriptor::slit_ball(2).unwrap(),
            Engine::MonteCarlo {
                samples: 50_000,
                seed: 3,
            },
        );
        let t = moment_table(&d1, 2).unwrap();
        assert!(t.hermitian_defect() < 1e-12);
    }
}
