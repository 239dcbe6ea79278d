// Holomorphic sectional curvature of the ball, analytically and by
// Richardson-extrapolated Cauchy stencils.

use bergman_lab::diffgeo::{bergman_metric_with, curvature_scan, curvature_tensor_with, DerivativeMethod, ScanOptions};
use bergman_lab::kernels::{KernelModel, Phi};
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, Result, C64};

pub fn run_example() -> Result<()> {
    for n in 1..=3usize {
        let k = KernelModel::ball(n);
        let domain = DomainDescriptor::scaled_ball(n, 0.7)?;
        let analytic = curvature_scan(
            &k,
            &domain,
            50,
            11,
            &ScanOptions {
                clearance: 0.0,
                ..Default::default()
            },
        )?;
        let fd = curvature_scan(
            &k,
            &domain,
            20,
            11,
            &ScanOptions {
                clearance: 0.0,
                method: DerivativeMethod::FiniteDifference,
                ..Default::default()
            },
        )?;
        let target = -2.0 / (n + 1) as f64;
        println!(
            "n={n}: target {target:.6}  analytic mean {:.12} spread {:.1e}  stencil mean {:.12} spread {:.1e}",
            analytic.mean, analytic.spread, fd.mean, fd.spread
        );
        if (analytic.mean - target).abs() > 1e-6 || (fd.mean - target).abs() > 1e-5 {
            return Err(BergmanError::Diagnostic(format!("n={n}: curvature off target")));
        }
    }

    // one point in detail
    let z = ComplexPoint::new(vec![C64::new(0.4, -0.1), C64::new(0.1, 0.3)]);
    let k = KernelModel::ball(2);
    let exact = bergman_metric_with(&k, &z, DerivativeMethod::Auto)?;
    let approx = bergman_metric_with(&k, &z, DerivativeMethod::FiniteDifference)?;
    let gap = (exact.g.matrix() - approx.g.matrix()).norm();
    println!("metric at {z}: stencil error {gap:.2e}");
    let r = curvature_tensor_with(&k, &z, DerivativeMethod::FiniteDifference)?;
    println!(
        "R_1111 = {:.8}, Kähler symmetry residual {:.1e}",
        r.get(0, 0, 0, 0),
        r.symmetry_residual()
    );

    // K^λ scales the curvature by 1/λ
    let k3 = KernelModel::powered(2, 3.0, Phi::one())?;
    let x = ComplexPoint::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
    let h = bergman_lab::diffgeo::sectional_curvature(&k3, &z, &x)?;
    println!("λ = 3: H = {h:.12} (expected {:.12})", -2.0 / 9.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
