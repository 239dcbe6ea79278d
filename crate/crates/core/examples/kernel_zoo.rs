// Closed-form, series and Gram-estimated kernels side by side.

use bergman_lab::domain::QuadratureSpec;
use bergman_lab::integrate::Engine;
use bergman_lab::kernels::{
    annulus_kernel, gram_kernel_estimate, series_truncation_degree, BasisDictionary, CoefficientTable, KernelModel, Phi,
};
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, HermitianForm, Result, C64};

fn ensure(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(BergmanError::Diagnostic(what.into()))
    }
}

pub fn run_example() -> Result<()> {
    let z = ComplexPoint::new(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.25)]);
    let w = ComplexPoint::new(vec![C64::new(0.1, -0.3), C64::new(0.4, 0.0)]);

    let ball = KernelModel::ball(2);
    let kb = ball.eval(&z, &w)?;
    println!("{:<32} {kb:.12}", ball.label());

    // K^2 of the ball, by closed form and by its power series
    let powered = KernelModel::powered(2, 2.0, Phi::one())?;
    let degree = series_truncation_degree(2, 2.0, z.norm().max(w.norm()), 1e-12)?;
    let series = KernelModel::series(CoefficientTable::powered_ball(2, 2.0, degree)?, Phi::one(), degree);
    let (kp, ks) = (powered.eval(&z, &w)?, series.eval(&z, &w)?);
    println!("{:<32} {kp:.12}", powered.label());
    println!("{:<32} {ks:.12}  (degree {degree})", "series");
    ensure(
        (kp - ks).norm() <= 1e-10 * kp.norm(),
        "series disagrees with closed form",
    )?;
    ensure((kp - kb * kb).norm() <= 1e-12 * kp.norm(), "powered kernel is not K^2")?;

    // an ellipsoid with H = (n+1)I is the ball
    let e = KernelModel::ellipsoid(HermitianForm::scaled_identity(2, 3.0))?;
    ensure(
        (e.eval(&z, &w)? - kb).norm() < 1e-13,
        "ellipsoid with H = 3I is not the ball",
    )?;

    // Gram estimate from monomials on the ball
    let gram = gram_kernel_estimate(
        &DomainDescriptor::unit_ball(2),
        &BasisDictionary::monomials(2, 12),
        &Engine::Quadrature(QuadratureSpec::with_angular(14, 28)),
    )?;
    let kg = gram.eval(&z, &w)?;
    println!("{:<32} {kg:.12}", "gram (monomials ≤ 12)");
    ensure((kg - kb).norm() < 1e-6, "Gram estimate far from the ball kernel")?;

    // the annulus kernel blows up near the hole; the disk kernel does not
    for r in [0.55, 0.7, 0.9] {
        let x = C64::new(r, 0.0);
        let ka = annulus_kernel(0.5, x, x)?.re;
        let kd = KernelModel::ball(1).eval_diag(&ComplexPoint::new(vec![x]))?;
        println!("|z| = {r}: annulus {ka:10.4}  disk {kd:10.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
