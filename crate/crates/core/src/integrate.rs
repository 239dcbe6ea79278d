//! Integration engines over a [`DomainDescriptor`]: masked quadrature and
//! uniform-rejection Monte Carlo. Every estimate carries the engine that
//! produced it and an error estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{substream, uniform_in_ball, DomainDescriptor, QuadratureSpec};
use crate::error::{BergmanError, Result};
use crate::types::{ComplexPoint, C64};

const MC_CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "kebab-case")]
pub enum Engine {
    Quadrature(QuadratureSpec),
    MonteCarlo { samples: usize, seed: u64 },
}

impl Engine {
    pub fn tag(&self) -> String {
        match self {
            Engine::Quadrature(q) => format!("quadrature({:?},order={},angular={})", q.kind, q.order, q.angular()),
            Engine::MonteCarlo { samples, .. } => format!("monte-carlo({samples})"),
        }
    }
}

/// An integral with its error estimate: the standard error for Monte Carlo,
/// the fine-minus-coarse difference for quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    #[serde(with = "crate::wire::cx")]
    pub value: C64,
    pub stderr: f64,
    pub engine: String,
}

/// Integrates `width` functions at once; `f` writes the integrand values at
/// a point into its output slice.
pub fn integrate_many<F>(
    domain: &DomainDescriptor,
    engine: &Engine,
    width: usize,
    f: F,
) -> Result<Vec<IntegralEstimate>>
where
    F: Fn(&ComplexPoint, &mut [C64]) + Sync,
{
    match engine {
        Engine::Quadrature(spec) => {
            let fine = quadrature_sum(domain, spec, width, &f)?;
            let coarse = quadrature_sum(domain, &spec.coarser(), width, &f)?;
            // rounding floor keeps exact zeros from reporting a zero error
            let floor = f64::EPSILON * (fine.nodes as f64).sqrt();
            Ok((0..width)
                .map(|i| IntegralEstimate {
                    value: fine.sum[i],
                    stderr: (fine.sum[i] - coarse.sum[i]).norm() + floor * fine.abs[i],
                    engine: engine.tag(),
                })
                .collect())
        }
        Engine::MonteCarlo { samples, seed } => monte_carlo(domain, *samples, *seed, width, &f, engine.tag()),
    }
}

pub fn integrate<F>(domain: &DomainDescriptor, engine: &Engine, f: F) -> Result<IntegralEstimate>
where
    F: Fn(&ComplexPoint) -> C64 + Sync,
{
    let mut v = integrate_many(domain, engine, 1, |z, out| out[0] = f(z))?;
    Ok(v.remove(0))
}

struct QuadSum {
    sum: Vec<C64>,
    abs: Vec<f64>,
    nodes: usize,
}

fn quadrature_sum<F>(domain: &DomainDescriptor, spec: &QuadratureSpec, width: usize, f: &F) -> Result<QuadSum>
where
    F: Fn(&ComplexPoint, &mut [C64]) + Sync,
{
    let rule = domain.quadrature(spec)?;
    if rule.is_empty() {
        return Err(BergmanError::Sampling(format!(
            "no quadrature nodes inside {}",
            domain.label()
        )));
    }
    let partials: Vec<(Vec<C64>, Vec<f64>)> = rule
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![C64::new(0.0, 0.0); width];
            let mut abs = vec![0.0; width];
            let mut buf = vec![C64::new(0.0, 0.0); width];
            for (z, w) in chunk {
                f(z, &mut buf);
                for i in 0..width {
                    acc[i] += buf[i] * w;
                    abs[i] += buf[i].norm() * w.abs();
                }
            }
            (acc, abs)
        })
        .collect();
    let mut out = QuadSum {
        sum: vec![C64::new(0.0, 0.0); width],
        abs: vec![0.0; width],
        nodes: rule.len(),
    };
    for (acc, abs) in partials {
        for i in 0..width {
            out.sum[i] += acc[i];
            out.abs[i] += abs[i];
        }
    }
    Ok(out)
}

struct McPartial {
    sum: Vec<C64>,
    sq_re: Vec<f64>,
    sq_im: Vec<f64>,
    accepted: usize,
}

fn monte_carlo<F>(
    domain: &DomainDescriptor,
    samples: usize,
    seed: u64,
    width: usize,
    f: &F,
    tag: String,
) -> Result<Vec<IntegralEstimate>>
where
    F: Fn(&ComplexPoint, &mut [C64]) + Sync,
{
    if samples < 2 {
        return Err(BergmanError::Parameter("Monte Carlo needs at least 2 samples".into()));
    }
    let (center, radius) = domain.bounding_ball();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<McPartial> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut rng = substream(seed, k as u64);
            let mut p = McPartial {
                sum: vec![C64::new(0.0, 0.0); width],
                sq_re: vec![0.0; width],
                sq_im: vec![0.0; width],
                accepted: 0,
            };
            let mut buf = vec![C64::new(0.0, 0.0); width];
            for _ in 0..count {
                let z = uniform_in_ball(&mut rng, &center, radius);
                if !domain.contains(&z) {
                    continue;
                }
                p.accepted += 1;
                f(&z, &mut buf);
                for i in 0..width {
                    p.sum[i] += buf[i];
                    p.sq_re[i] += buf[i].re * buf[i].re;
                    p.sq_im[i] += buf[i].im * buf[i].im;
                }
            }
            p
        })
        .collect();
    let mut total = McPartial {
        sum: vec![C64::new(0.0, 0.0); width],
        sq_re: vec![0.0; width],
        sq_im: vec![0.0; width],
        accepted: 0,
    };
    for p in partials {
        total.accepted += p.accepted;
        for i in 0..width {
            total.sum[i] += p.sum[i];
            total.sq_re[i] += p.sq_re[i];
            total.sq_im[i] += p.sq_im[i];
        }
    }
    if total.accepted == 0 {
        return Err(BergmanError::Sampling(format!(
            "no Monte Carlo samples landed in {}",
            domain.label()
        )));
    }
    let vol = domain.bounding_volume();
    let nf = samples as f64;
    Ok((0..width)
        .map(|i| {
            let mean = total.sum[i] / nf;
            let var_re = (total.sq_re[i] / nf - mean.re * mean.re).max(0.0);
            let var_im = (total.sq_im[i] / nf - mean.im * mean.im).max(0.0);
            let stderr = vol * ((var_re + var_im) / (nf - 1.0)).sqrt();
            IntegralEstimate {
                value: mean * vol,
                stderr,
                engine: tag.clone(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_moments_by_quadrature() {
        let d = DomainDescriptor::unit_ball(1);
        let e = Engine::Quadrature(QuadratureSpec::auto(8));
        for k in 0..4 {
            let v = integrate(&d, &e, |z| C64::new(z.coords()[0].norm_sqr().powi(k), 0.0)).unwrap();
            assert!((v.value.re - PI / (k as f64 + 1.0)).abs() < 1e-13);
            assert!(v.stderr < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_is_seeded_and_honest() {
        let d = DomainDescriptor::slit_ball(2).unwrap();
        let e = Engine::MonteCarlo {
            samples: 200_000,
            seed: 5,
        };
        let a = integrate(&d, &e, |_| C64::new(1.0, 0.0)).unwrap();
        let b = integrate(&d, &e, |_| C64::new(1.0, 0.0)).unwrap();
        assert_eq!(a, b);
        // bounding ball = domain up to a null set, so the volume is exact
        assert!((a.value.re - PI * PI / 2.0).abs() < 1e-12);
        let m = integrate(&d, &e, |z| C64::new(z.coords()[0].norm_sqr(), 0.0)).unwrap();
        // ∫_{𝔹²}|z₁|² = π²/6
        assert!((m.value.re - PI * PI / 6.0).abs() < 4.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn rejection_in_small_domain() {
        let d = DomainDescriptor::annulus(0.5).unwrap();
        let e = Engine::MonteCarlo {
            samples: 400_000,
            seed: 1,
        };
        let v = integrate(&d, &e, |_| C64::new(1.0, 0.0)).unwrap();
        assert!((v.value.re - 0.75 * PI).abs() < 4.0 * v.stderr);
    }
}
