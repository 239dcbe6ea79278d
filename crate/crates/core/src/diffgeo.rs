//! Bergman metric, curvature tensor and holomorphic sectional curvature.
//!
//! Everything is built from mixed Wirtinger derivatives of F(z, w) = log K(z, w)
//! treated as a holomorphic function of (z, w̄). Kernels of the form
//! c·φ(z)conj(φ(w))·(1 − zQw̄)^{−μ} are differentiated exactly; all others go
//! through a Cauchy-circle stencil in every variable with two-level Richardson
//! extrapolation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainDescriptor;
use crate::error::{BergmanError, Result};
use crate::kernels::{KernelModel, Phi, QuadraticFamily};
use crate::maps::HolomorphicMap;
use crate::types::{CMatrix, ComplexPoint, HermitianForm, C64};

/// Largest finite-difference step.
pub const STEP_CAP: f64 = 0.05;
/// Step as a fraction of the distance to the boundary.
pub const STEP_FRACTION: f64 = 0.1;
/// Nodes per variable on each stencil circle.
const NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    /// Exact formulas when the kernel admits them, stencils otherwise.
    #[default]
    Auto,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Z(usize),
    W(usize),
}

/// Mixed derivatives ∂_z^{…}∂_w̄^{…} log K at a fixed pair (z, w).
#[derive(Debug, Clone)]
pub struct LogKernelJet {
    z: ComplexPoint,
    w: ComplexPoint,
    inner: JetInner,
}

#[derive(Debug, Clone)]
enum JetInner {
    Analytic(QuadraticFamily),
    Stencil(Stencil),
}

#[derive(Debug, Clone)]
struct Stencil {
    perturb_z: bool,
    n: usize,
    h: f64,
    coarse: Vec<C64>,
    fine: Vec<C64>,
}

/// h = min(0.05, 0.1·distance to the boundary).
pub fn default_step(k: &KernelModel, z: &ComplexPoint, w: &ComplexPoint) -> f64 {
    let d = k.boundary_distance(z).min(k.boundary_distance(w));
    STEP_CAP.min(STEP_FRACTION * d)
}

/// Jet of log K at (z, w). The stencil moves w always and z only when
/// `perturb_z` is set, so only derivatives in perturbed variables are
/// available from it.
pub fn log_kernel_jet(
    k: &KernelModel,
    z: &ComplexPoint,
    w: &ComplexPoint,
    perturb_z: bool,
    method: DerivativeMethod,
) -> Result<LogKernelJet> {
    for p in [z, w] {
        if !k.contains(p) {
            return Err(BergmanError::Domain(format!(
                "{p} is outside the domain of {}",
                k.label()
            )));
        }
    }
    if let (DerivativeMethod::Auto, Some(fam)) = (method, k.quadratic_family()) {
        if fam.s(z, w).norm() == 0.0 {
            return Err(BergmanError::Singularity(format!("1 − zQw̄ vanishes at ({z}, {w})")));
        }
        return Ok(LogKernelJet {
            z: z.clone(),
            w: w.clone(),
            inner: JetInner::Analytic(fam),
        });
    }
    let h = default_step(k, z, w);
    if !(h > 0.0) {
        return Err(BergmanError::Geometry {
            point: z.to_string(),
            step: h,
        });
    }
    let coarse = stencil_values(k, z, w, perturb_z, h)?;
    let fine = stencil_values(k, z, w, perturb_z, h / 2.0)?;
    Ok(LogKernelJet {
        z: z.clone(),
        w: w.clone(),
        inner: JetInner::Stencil(Stencil {
            perturb_z,
            n: z.dim(),
            h,
            coarse,
            fine,
        }),
    })
}

/// Jet of log K(z, z) on the diagonal, up to fourth mixed order.
pub fn log_kernel_derivatives(k: &KernelModel, z: &ComplexPoint, method: DerivativeMethod) -> Result<LogKernelJet> {
    log_kernel_jet(k, z, z, true, method)
}

fn root(m: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * m as f64 / NODES as f64)
}

fn stencil_values(k: &KernelModel, z0: &ComplexPoint, w0: &ComplexPoint, perturb_z: bool, h: f64) -> Result<Vec<C64>> {
    let n = z0.dim();
    let vars = if perturb_z { 2 * n } else { n };
    let size = NODES.pow(vars as u32);
    let k0 = k.eval(z0, w0)?;
    if k0.norm() == 0.0 {
        return Err(BergmanError::ZeroDivisor(z0.to_string()));
    }
    let node = |idx: usize| {
        let mut z = z0.clone();
        let mut w = w0.clone();
        let mut rest = idx;
        for v in 0..vars {
            let m = rest % NODES;
            rest /= NODES;
            let step = root(m) * h;
            if perturb_z && v < n {
                z.coords_mut()[v] += step;
            } else {
                let j = if perturb_z { v - n } else { v };
                // w̄ moves by hωᵐ
                w.coords_mut()[j] += step.conj();
            }
        }
        (z, w)
    };
    (0..size)
        .into_par_iter()
        .map(|idx| {
            let (z, w) = node(idx);
            for p in [&z, &w] {
                if !k.contains(p) {
                    return Err(BergmanError::Geometry {
                        point: p.to_string(),
                        step: h,
                    });
                }
            }
            let kz = k.eval(&z, &w)?;
            if kz.norm() == 0.0 {
                return Err(BergmanError::ZeroDivisor(z.to_string()));
            }
            Ok((kz / k0).ln())
        })
        .collect()
}

impl LogKernelJet {
    pub fn base(&self) -> (&ComplexPoint, &ComplexPoint) {
        (&self.z, &self.w)
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.inner, JetInner::Analytic(_))
    }

    /// Stencil radius when finite differences were used.
    pub fn step(&self) -> Option<f64> {
        match &self.inner {
            JetInner::Analytic(_) => None,
            JetInner::Stencil(s) => Some(s.h),
        }
    }

    /// ∂_{z_{dz[0]}}⋯∂_{w̄_{dw[0]}}⋯ log K at the base pair.
    ///
    /// # Panics
    /// If a z-derivative is requested from a stencil that kept z fixed, or a
    /// variable is differentiated more than three times on a stencil.
    pub fn d(&self, dz: &[usize], dw: &[usize]) -> C64 {
        let ops: Vec<Op> = dz
            .iter()
            .map(|&i| Op::Z(i))
            .chain(dw.iter().map(|&j| Op::W(j)))
            .collect();
        match &self.inner {
            JetInner::Analytic(fam) => analytic_derivative(fam, &self.z, &self.w, &ops),
            JetInner::Stencil(s) => s.derivative(&ops),
        }
    }
}

impl Stencil {
    fn derivative(&self, ops: &[Op]) -> C64 {
        let vars = if self.perturb_z { 2 * self.n } else { self.n };
        let mut gamma = vec![0usize; vars];
        for op in ops {
            let v = match *op {
                Op::Z(i) => {
                    assert!(self.perturb_z, "z-derivative requested from a w-only stencil");
                    i
                }
                Op::W(j) => {
                    if self.perturb_z {
                        self.n + j
                    } else {
                        j
                    }
                }
            };
            gamma[v] += 1;
        }
        assert!(
            gamma.iter().all(|&g| g < NODES),
            "stencil supports at most {} derivatives per variable",
            NODES - 1
        );
        let order = ops.len() as i32;
        let weight: f64 = gamma.iter().map(|&g| (1..=g).product::<usize>() as f64).product();
        let coefficient = |values: &[C64], h: f64| {
            let mut acc = C64::new(0.0, 0.0);
            for (idx, f) in values.iter().enumerate() {
                let mut rest = idx;
                let mut phase = 0usize;
                for &g in &gamma {
                    phase += (rest % NODES) * g;
                    rest /= NODES;
                }
                acc += f * root((NODES - phase % NODES) % NODES);
            }
            acc * weight / (values.len() as f64 * h.powi(order))
        };
        let coarse = coefficient(&self.coarse, self.h);
        let fine = coefficient(&self.fine, self.h / 2.0);
        let r = (1u32 << NODES) as f64;
        (fine * r - coarse) / (r - 1.0)
    }
}

fn analytic_derivative(fam: &QuadraticFamily, z: &ComplexPoint, w: &ComplexPoint, ops: &[Op]) -> C64 {
    if ops.is_empty() {
        return fam.eval(z, w).map(|k| k.ln()).unwrap_or(C64::new(f64::NAN, f64::NAN));
    }
    let n = z.dim();
    let s = fam.s(z, w);
    let wbar: Vec<C64> = w.coords().iter().map(|x| x.conj()).collect();
    // ∂s/∂zᵢ and ∂s/∂w̄ⱼ
    let dz: Vec<C64> = (0..n)
        .map(|i| -(0..n).map(|j| fam.q[(i, j)] * wbar[j]).sum::<C64>())
        .collect();
    let dw: Vec<C64> = (0..n)
        .map(|j| -(0..n).map(|i| z.coords()[i] * fam.q[(i, j)]).sum::<C64>())
        .collect();
    let ctx = LogS { s, dz, dw, q: &fam.q };
    let mut used = vec![false; ops.len()];
    let mut acc = C64::new(0.0, 0.0);
    ctx.partitions(ops, &mut used, 0, C64::new(1.0, 0.0), &mut acc);
    let mut value = -acc * fam.mu;
    if let Phi::Coordinate { index } = fam.phi {
        let d = ops.len() as i32;
        let coef = if d % 2 == 1 { 1.0 } else { -1.0 } * (1..d).product::<i32>() as f64;
        if ops.iter().all(|op| matches!(op, Op::Z(i) if *i == index)) {
            value += coef / z.coords()[index].powi(d);
        } else if ops.iter().all(|op| matches!(op, Op::W(j) if *j == index)) {
            value += coef / wbar[index].powi(d);
        }
    }
    value
}

/// Derivatives of log s for s bilinear in (z, w̄): a sum over set partitions
/// of the operators into singletons and (z, w̄) pairs.
struct LogS<'a> {
    s: C64,
    dz: Vec<C64>,
    dw: Vec<C64>,
    q: &'a CMatrix,
}

impl LogS<'_> {
    fn partitions(&self, ops: &[Op], used: &mut [bool], blocks: i32, prod: C64, acc: &mut C64) {
        let Some(first) = used.iter().position(|u| !u) else {
            let sign = if blocks % 2 == 1 { 1.0 } else { -1.0 };
            let fact = (1..blocks).product::<i32>() as f64;
            *acc += prod * sign * fact / self.s.powi(blocks);
            return;
        };
        used[first] = true;
        let single = match ops[first] {
            Op::Z(i) => self.dz[i],
            Op::W(j) => self.dw[j],
        };
        self.partitions(ops, used, blocks + 1, prod * single, acc);
        for other in first + 1..ops.len() {
            if used[other] {
                continue;
            }
            let pair = match (ops[first], ops[other]) {
                (Op::Z(i), Op::W(j)) | (Op::W(j), Op::Z(i)) => -self.q[(i, j)],
                _ => continue,
            };
            used[other] = true;
            self.partitions(ops, used, blocks + 1, prod * pair, acc);
            used[other] = false;
        }
        used[first] = false;
    }
}

/// g_{ij̄}(z) with its inverse.
#[derive(Debug, Clone)]
pub struct MetricValue {
    pub z: ComplexPoint,
    pub g: HermitianForm,
    pub inverse: CMatrix,
    pub analytic: bool,
}

impl MetricValue {
    /// ‖g·g⁻¹ − I‖_∞.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.z.dim();
        crate::types::inf_norm(&(self.g.matrix() * &self.inverse - CMatrix::identity(n, n)))
    }
}

fn metric_from_jet(jet: &LogKernelJet) -> Result<MetricValue> {
    let n = jet.z.dim();
    let raw = CMatrix::from_fn(n, n, |i, j| jet.d(&[i], &[j]));
    let g = HermitianForm::from_nearly_hermitian(&raw);
    let ev = g.eigenvalues();
    if !(ev[0] > 0.0) {
        return Err(BergmanError::IndefiniteMetric(ev));
    }
    let inverse = g.inverse()?;
    Ok(MetricValue {
        z: jet.z.clone(),
        g,
        inverse,
        analytic: jet.is_analytic(),
    })
}

pub fn bergman_metric(k: &KernelModel, z: &ComplexPoint) -> Result<MetricValue> {
    bergman_metric_with(k, z, DerivativeMethod::Auto)
}

pub fn bergman_metric_with(k: &KernelModel, z: &ComplexPoint, method: DerivativeMethod) -> Result<MetricValue> {
    metric_from_jet(&log_kernel_derivatives(k, z, method)?)
}

/// R_{ij̄kl̄} at z, stored with index ((i·n + j)·n + k)·n + l.
#[derive(Debug, Clone)]
pub struct CurvatureValue {
    pub z: ComplexPoint,
    pub metric: MetricValue,
    pub r: Vec<C64>,
}

impl CurvatureValue {
    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let n = self.dim();
        self.r[((i * n + j) * n + k) * n + l]
    }

    /// Largest violation of R_{ij̄kl̄} = R_{kj̄il̄} = R_{il̄kj̄}, relative to max(1, max|R|).
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim();
        let scale = self.r.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        worst = worst
                            .max((r - self.get(k, j, i, l)).norm())
                            .max((r - self.get(i, l, k, j)).norm());
                    }
                }
            }
        }
        worst / scale
    }

    /// R(X, X̄, X, X̄)/g(X, X̄)² before discarding the imaginary part.
    pub fn sectional_complex(&self, x: &ComplexPoint) -> Result<C64> {
        let n = self.dim();
        if x.dim() != n || x.norm() == 0.0 || !x.is_finite() {
            return Err(BergmanError::Parameter(
                "tangent vector must be nonzero and of matching dimension".into(),
            ));
        }
        let xs = x.coords();
        let mut num = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let xij = xs[i] * xs[j].conj();
                for k in 0..n {
                    for l in 0..n {
                        num += self.get(i, j, k, l) * xij * xs[k] * xs[l].conj();
                    }
                }
            }
        }
        let g = self.metric.g.sesquilinear(x, x);
        Ok(num / (g * g))
    }

    pub fn sectional(&self, x: &ComplexPoint) -> Result<f64> {
        Ok(self.sectional_complex(x)?.re)
    }
}

pub fn curvature_tensor(k: &KernelModel, z: &ComplexPoint) -> Result<CurvatureValue> {
    curvature_tensor_with(k, z, DerivativeMethod::Auto)
}

/// R_{ij̄kl̄} = −∂_k∂_l̄ g_{ij̄} + Σ g^{qp̄}(∂_k g_{iq̄})(∂_l̄ g_{pj̄}).
pub fn curvature_tensor_with(k: &KernelModel, z: &ComplexPoint, method: DerivativeMethod) -> Result<CurvatureValue> {
    let jet = log_kernel_derivatives(k, z, method)?;
    let metric = metric_from_jet(&jet)?;
    let n = z.dim();
    let dg: Vec<CMatrix> = (0..n)
        .map(|k| CMatrix::from_fn(n, n, |i, q| jet.d(&[i, k], &[q])))
        .collect();
    let dbg: Vec<CMatrix> = (0..n)
        .map(|l| CMatrix::from_fn(n, n, |p, j| jet.d(&[p], &[j, l])))
        .collect();
    let mut r = vec![C64::new(0.0, 0.0); n.pow(4)];
    for k in 0..n {
        for l in 0..n {
            let quad = &dg[k] * &metric.inverse * &dbg[l];
            for i in 0..n {
                for j in 0..n {
                    r[((i * n + j) * n + k) * n + l] = quad[(i, j)] - jet.d(&[i, k], &[j, l]);
                }
            }
        }
    }
    Ok(CurvatureValue {
        z: z.clone(),
        metric,
        r,
    })
}

pub fn sectional_curvature(k: &KernelModel, z: &ComplexPoint, x: &ComplexPoint) -> Result<f64> {
    if x.norm() == 0.0 {
        return Err(BergmanError::Parameter("tangent vector X must be nonzero".into()));
    }
    curvature_tensor(k, z)?.sectional(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Points closer than this to the complement are rejected.
    pub clearance: f64,
    /// Spread at or below which the curvature counts as constant.
    pub tolerance: f64,
    pub method: DerivativeMethod,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            clearance: 2.0 * STEP_CAP,
            tolerance: 1e-6,
            method: DerivativeMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub z: ComplexPoint,
    pub x: ComplexPoint,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kernel: String,
    pub domain: String,
    pub seed: u64,
    pub options: ScanOptions,
    pub samples: Vec<CurvatureSample>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub spread: f64,
    pub constant: bool,
}

/// Seeded points of `domain` at least `clearance` from its complement.
pub fn scan_points(domain: &DomainDescriptor, count: usize, seed: u64, clearance: f64) -> Result<Vec<ComplexPoint>> {
    let mut out = Vec::with_capacity(count);
    for round in 0..64u64 {
        let batch = domain.sample(4 * count.max(16), seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
        out.extend(batch.into_iter().filter(|z| domain.boundary_distance(z) >= clearance));
        if out.len() >= count {
            out.truncate(count);
            return Ok(out);
        }
    }
    Err(BergmanError::Sampling(format!(
        "too few points of {} with clearance {clearance}",
        domain.label()
    )))
}

/// Complex Gaussian tangent directions, seeded.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<ComplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    (0..count)
        .map(|_| {
            ComplexPoint::new(
                (0..n)
                    .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect(),
            )
        })
        .collect()
}

pub fn curvature_scan(
    k: &KernelModel,
    domain: &DomainDescriptor,
    samples: usize,
    seed: u64,
    options: &ScanOptions,
) -> Result<CurvatureReport> {
    if samples == 0 {
        return Err(BergmanError::Parameter(
            "curvature scan needs at least one sample".into(),
        ));
    }
    let points = scan_points(domain, samples, seed, options.clearance)?;
    let dirs = random_directions(domain.n, samples, seed);
    let values: Vec<f64> = points
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(z, x)| curvature_tensor_with(k, z, options.method)?.sectional(x))
        .collect::<Result<_>>()?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = max - min;
    Ok(CurvatureReport {
        kernel: k.label(),
        domain: domain.label(),
        seed,
        options: options.clone(),
        samples: points
            .into_iter()
            .zip(dirs)
            .zip(&values)
            .map(|((z, x), &h)| CurvatureSample { z, x, h })
            .collect(),
        min,
        max,
        mean,
        spread,
        constant: spread <= options.tolerance,
    })
}

impl CurvatureReport {
    pub fn to_json(&self) -> Result<String> {
        crate::wire::to_json_string(self, true)
    }

    /// One row per sample, then a footer record with the summary statistics.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.samples.first().map_or(0, |s| s.z.dim());
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let mut header = Vec::new();
        for prefix in ["z", "x"] {
            for j in 1..=n {
                header.push(format!("{prefix}{j}_re"));
                header.push(format!("{prefix}{j}_im"));
            }
        }
        header.push("H".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = Vec::with_capacity(header.len());
            for p in [&s.z, &s.x] {
                for c in p.coords() {
                    row.push(crate::wire::fmt17(c.re));
                    row.push(crate::wire::fmt17(c.im));
                }
            }
            row.push(crate::wire::fmt17(s.h));
            w.write_record(&row)?;
        }
        let f = crate::wire::fmt17;
        w.write_record([
            "#summary".to_string(),
            format!("min={}", f(self.min)),
            format!("max={}", f(self.max)),
            format!("mean={}", f(self.mean)),
            format!("spread={}", f(self.spread)),
        ])?;
        let bytes = w.into_inner().map_err(|e| BergmanError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }

    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} on {} (seed {})", self.kernel, self.domain, self.seed);
        let _ = writeln!(out, "{:>5}  {:>24}  {:>10}", "#", "H(z,X)", "|z|");
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:>5}  {:>24.16e}  {:>10.6}", i, s.h, s.z.norm());
        }
        let _ = writeln!(
            out,
            "min {:.16e}  max {:.16e}  mean {:.16e}  spread {:.3e}  constant: {}",
            self.min, self.max, self.mean, self.spread, self.constant
        );
        out
    }
}

/// ‖g_src(z) − Jᵀ·g_tgt(T(z))·J̄‖_F / ‖g_src(z)‖_F with J = dT(z).
pub fn isometry_residual(
    t: &dyn HolomorphicMap,
    src: &KernelModel,
    tgt: &KernelModel,
    z: &ComplexPoint,
) -> Result<f64> {
    let g_src = bergman_metric(src, z)?;
    let tz = t.apply(z)?;
    if !tgt.contains(&tz) {
        return Err(BergmanError::Domain(format!(
            "T(z) = {tz} is outside the domain of {}",
            tgt.label()
        )));
    }
    let g_tgt = bergman_metric(tgt, &tz)?;
    let j = t.jacobian(z)?;
    let pulled = j.transpose() * g_tgt.g.matrix() * j.map(|x| x.conj());
    Ok((g_src.g.matrix() - pulled).norm() / g_src.g.matrix().norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::substream;
    use crate::maps::{IdentityMap, LinearMap};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fd(k: &KernelModel, z: &ComplexPoint) -> LogKernelJet {
        log_kernel_derivatives(k, z, DerivativeMethod::FiniteDifference).unwrap()
    }

    /// g for the ball, written out independently of the jet machinery.
    fn ball_metric_oracle(z: &ComplexPoint) -> CMatrix {
        let n = z.dim();
        let r = 1.0 - z.norm_sqr();
        CMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { r } else { 0.0 };
            (C64::new(delta, 0.0) + z.coords()[i].conj() * z.coords()[j]) * ((n + 1) as f64) / (r * r)
        })
    }

    #[test]
    fn metric_at_origin() {
        for n in 1..=3 {
            let k = KernelModel::ball(n);
            let o = ComplexPoint::zeros(n);
            for jet in [
                log_kernel_derivatives(&k, &o, DerivativeMethod::Auto).unwrap(),
                fd(&k, &o),
            ] {
                for i in 0..n {
                    for j in 0..n {
                        let want = if i == j { (n + 1) as f64 } else { 0.0 };
                        assert!((jet.d(&[i], &[j]) - want).norm() < 1e-8);
                    }
                }
            }
        }
        let p = KernelModel::powered(2, 1.5, Phi::one()).unwrap();
        let g = bergman_metric(&p, &ComplexPoint::zeros(2)).unwrap();
        assert!((g.g.matrix()[(0, 0)].re - 4.5).abs() < 1e-14);
    }

    #[test]
    fn disk_metric_value() {
        let g = bergman_metric(&KernelModel::ball(1), &ComplexPoint::from_re(&[0.5])).unwrap();
        assert!((g.g.matrix()[(0, 0)].re - 32.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn analytic_and_stencil_metrics_match_closed_form() {
        let mut rng = substream(3, 0);
        for n in 1..=3 {
            let k = KernelModel::ball(n);
            for _ in 0..10 {
                let z = crate::domain::uniform_in_ball(&mut rng, &ComplexPoint::zeros(n), 0.7);
                let oracle = ball_metric_oracle(&z);
                let a = bergman_metric(&k, &z).unwrap();
                let f = bergman_metric_with(&k, &z, DerivativeMethod::FiniteDifference).unwrap();
                let scale = oracle.norm();
                assert!((a.g.matrix() - &oracle).norm() <= 1e-12 * scale);
                assert!(
                    (f.g.matrix() - &oracle).norm() <= 1e-8 * scale,
                    "{}",
                    (f.g.matrix() - &oracle).norm() / scale
                );
                assert!(a.inverse_defect() <= 1e-10);
            }
        }
    }

    #[test]
    fn ellipsoid_metric_at_center_is_h() {
        let h = HermitianForm::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, 1.0), c(0.5, -1.0), c(3.0, 0.0)],
        ))
        .unwrap();
        let k = KernelModel::ellipsoid(h.clone()).unwrap();
        let g = bergman_metric(&k, &ComplexPoint::zeros(2)).unwrap();
        assert!((g.g.matrix() - h.matrix()).norm() < 1e-14);
        let f = bergman_metric_with(&k, &ComplexPoint::zeros(2), DerivativeMethod::FiniteDifference).unwrap();
        assert!((f.g.matrix() - h.matrix()).norm() < 1e-8);
    }

    #[test]
    fn tensor_at_origin() {
        for n in 1..=3 {
            let r = curvature_tensor(&KernelModel::ball(n), &ComplexPoint::zeros(n)).unwrap();
            let mu = (n + 1) as f64;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                            let want = -mu * (d(i, j) * d(k, l) + d(i, l) * d(j, k));
                            assert!((r.get(i, j, k, l) - want).norm() < 1e-12);
                        }
                    }
                }
            }
        }
        let r1 = curvature_tensor(&KernelModel::ball(1), &ComplexPoint::zeros(1)).unwrap();
        assert!((r1.get(0, 0, 0, 0) - c(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ball_sectional_curvature_is_constant() {
        let mut rng = substream(4, 1);
        for n in 1..=3usize {
            let k = KernelModel::ball(n);
            let want = -2.0 / (n + 1) as f64;
            for t in 0..10 {
                let z = crate::domain::uniform_in_ball(&mut rng, &ComplexPoint::zeros(n), 0.7);
                let x = random_directions(n, 1, t)[0].clone();
                let a = curvature_tensor(&k, &z).unwrap();
                assert!((a.sectional(&x).unwrap() - want).abs() < 1e-10);
                assert!(a.sectional_complex(&x).unwrap().im.abs() < 1e-10);
                assert!(a.symmetry_residual() < 1e-12);
                let f = curvature_tensor_with(&k, &z, DerivativeMethod::FiniteDifference).unwrap();
                assert!((f.sectional(&x).unwrap() - want).abs() < 1e-6, "n={n} z={z}");
                assert!(f.symmetry_residual() < 1e-8);
            }
        }
    }

    #[test]
    fn lambda_power_scales_curvature() {
        let z = ComplexPoint::new(vec![c(0.2, 0.1), c(-0.3, 0.2)]);
        let x = ComplexPoint::new(vec![c(1.0, 0.5), c(-0.2, 1.0)]);
        for &lambda in &[0.5, 1.5, 2.0, 3.0] {
            let k = KernelModel::powered(2, lambda, Phi::one()).unwrap();
            let h = sectional_curvature(&k, &z, &x).unwrap();
            assert!((h - (-2.0 / (3.0 * lambda))).abs() < 1e-10);
        }
        // |φ|² is pluriharmonic, so a coordinate weight leaves the metric alone
        let k = KernelModel::powered(2, 1.0, Phi::Coordinate { index: 0 }).unwrap();
        assert!((sectional_curvature(&k, &z, &x).unwrap() + 2.0 / 3.0).abs() < 1e-10);
        let f = curvature_tensor_with(&k, &z, DerivativeMethod::FiniteDifference).unwrap();
        assert!((f.sectional(&x).unwrap() + 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn scaling_invariance_of_direction() {
        let k = KernelModel::ball(3);
        let mut rng = substream(8, 0);
        let dirs = random_directions(3, 100, 5);
        for x in dirs {
            let z = crate::domain::uniform_in_ball(&mut rng, &ComplexPoint::zeros(3), 0.8);
            let t = curvature_tensor(&k, &z).unwrap();
            let s = c(-1.7, 0.4);
            assert!((t.sectional(&x).unwrap() - t.sectional(&x.scale(s)).unwrap()).abs() < 1e-10);
        }
        let t = curvature_tensor(&k, &ComplexPoint::zeros(3)).unwrap();
        assert!(matches!(
            t.sectional(&ComplexPoint::zeros(3)),
            Err(BergmanError::Parameter(_))
        ));
    }

    #[test]
    fn stencil_reports_geometry_error() {
        let k = KernelModel::restricted(KernelModel::ball(2), DomainDescriptor::slit_ball(2).unwrap());
        // restricted kernels keep the exact path, so force the stencil
        let z = ComplexPoint::new(vec![c(0.3, 0.0), c(0.0, 0.0)]);
        assert!(log_kernel_derivatives(&k, &z, DerivativeMethod::FiniteDifference).is_err());
        let near = ComplexPoint::new(vec![c(0.3, 0.0), c(1e-3, 0.0)]);
        let jet = log_kernel_derivatives(&k, &near, DerivativeMethod::FiniteDifference).unwrap();
        assert!(jet.step().unwrap() <= 1e-4);
    }

    #[test]
    fn annulus_curvature_matches_oracle() {
        // H(|z|) for r = 0.3, from 90-digit radial differentiation of the Laurent series.
        let k = KernelModel::annulus(0.3).unwrap();
        let x = ComplexPoint::from_re(&[1.0]);
        for (rad, want) in [
            (0.35, -1.000_000_388_440_741_8),
            (0.5, -1.000_006_255_038_795_4),
            (0.8, -0.999_999_818_596_986_3),
        ] {
            let t = curvature_tensor(&k, &ComplexPoint::from_re(&[rad])).unwrap();
            let h = t.sectional(&x).unwrap();
            assert!((h - want).abs() < 1e-8, "{rad}: {h}");
        }
    }

    #[test]
    fn annulus_half_radius_is_nearly_constant() {
        // Deviation from -1 is O(1e-10) at r = 0.5, below stencil noise.
        let k = KernelModel::annulus(0.5).unwrap();
        let d = DomainDescriptor::annulus(0.5).unwrap();
        let report = curvature_scan(&k, &d, 40, 2, &ScanOptions::default()).unwrap();
        assert!(report.spread < 1e-6, "{}", report.spread);
        assert!((report.mean + 1.0).abs() < 1e-7);
    }

    #[test]
    fn scan_report_formats() {
        let k = KernelModel::ball(2);
        let d = DomainDescriptor::unit_ball(2);
        let r = curvature_scan(&k, &d, 20, 9, &ScanOptions::default()).unwrap();
        assert!(r.constant && r.spread <= 1e-6);
        assert!((r.mean + 2.0 / 3.0).abs() < 1e-10);
        let again = curvature_scan(&k, &d, 20, 9, &ScanOptions::default()).unwrap();
        assert_eq!(r, again);
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "z1_re,z1_im,z2_re,z2_im,x1_re,x1_im,x2_re,x2_im,H");
        assert_eq!(lines.len(), 22);
        assert!(lines[21].starts_with("#summary,min="));
        let back: CurvatureReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.samples.len(), 20);
    }

    #[test]
    fn isometry_residual_examples() {
        let k = KernelModel::ball(2);
        let z = ComplexPoint::new(vec![c(0.3, 0.2), c(-0.1, 0.4)]);
        assert!(isometry_residual(&IdentityMap::new(2), &k, &k, &z).unwrap() < 1e-15);
        let mut rng = substream(2, 2);
        let u = LinearMap::unitary(crate::maps::random_unitary(2, &mut rng)).unwrap();
        assert!(isometry_residual(&u, &k, &k, &z).unwrap() < 1e-10);
    }
}
