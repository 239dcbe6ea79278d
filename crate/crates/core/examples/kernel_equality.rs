// Removing a small compact set from 𝔹² leaves the kernel unchanged; cutting
// a hole in the disk does not.

use std::f64::consts::PI;

use bergman_lab::domain::QuadratureSpec;
use bergman_lab::integrate::Engine;
use bergman_lab::kernels::{annulus_kernel, gram_kernel_estimate, BasisDictionary, KernelModel};
use bergman_lab::verify::kernel_equality_check;
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, Result, C64};

pub fn run_example() -> Result<()> {
    let hartogs = DomainDescriptor::hartogs_complement(2, 0.01)?;
    let gram = gram_kernel_estimate(
        &hartogs,
        &BasisDictionary::monomials(2, 10),
        &Engine::Quadrature(QuadratureSpec::with_angular(12, 24)),
    )?;
    let points = DomainDescriptor::scaled_ball(2, 0.25)?.sample(100, 1)?;
    let gap = kernel_equality_check(&gram, &KernelModel::ball(2), &points)?;
    println!("{}: max normalized gap to the ball kernel {gap:.1e}", hartogs.label());

    let annulus = DomainDescriptor::annulus(0.5)?;
    let laurent = gram_kernel_estimate(
        &annulus,
        &BasisDictionary::laurent(-10, 10),
        &Engine::Quadrature(QuadratureSpec::with_angular(16, 48)),
    )?;
    let ring: Vec<ComplexPoint> = (0..8)
        .map(|k| ComplexPoint::new(vec![C64::from_polar(0.6, k as f64 * 0.785)]))
        .collect();
    let vs_disk = kernel_equality_check(&laurent, &KernelModel::ball(1), &ring)?;
    // the Gram kernel of z^k, -10 ≤ k ≤ 10, is the truncated Laurent sum
    // Σ |z|^{2k}/‖z^k‖² with ‖z^k‖² = π(1 − r^{2k+2})/(k+1), or 2π ln(1/r) at k = −1
    let truncated = |t: f64| -> f64 {
        (-10..=10i32)
            .map(|k| {
                let norm2 = if k == -1 {
                    2.0 * PI * 2f64.ln()
                } else {
                    PI * (1.0 - 0.25f64.powi(k + 1)) / (k + 1) as f64
                };
                t.powi(k) / norm2
            })
            .sum()
    };
    let mut vs_truncated: f64 = 0.0;
    let mut vs_closed: f64 = 0.0;
    for z in &ring {
        let t = z.norm_sqr();
        let est = laurent.eval(z, z)?.re;
        vs_truncated = vs_truncated.max((est - truncated(t)).abs() / est);
        vs_closed = vs_closed.max((est - annulus_kernel(0.5, z.coords()[0], z.coords()[0])?.re).abs() / est);
    }
    println!("annulus Laurent Gram at |z| = 0.6: gap to disk {vs_disk:.3}");
    println!("  relative error vs truncated Laurent sum {vs_truncated:.1e}, vs full closed form {vs_closed:.1e} (truncation)");
    if gap > 1e-8 || vs_disk < 0.05 || vs_truncated > 1e-8 {
        return Err(BergmanError::Diagnostic("kernel equality checks failed".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
