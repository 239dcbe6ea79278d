// Root test on high even moments of Re z₁ and the ratio (m/(μ+m))^m.

use bergman_lab::domain::QuadratureSpec;
use bergman_lab::integrate::Engine;
use bergman_lab::moments::{
    even_moment_closed_form, even_moment_integral, stirling_ratio_sequence, support_reach_estimate, MomentMeasure,
};
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, Result};

pub fn run_example() -> Result<()> {
    let quad = Engine::Quadrature(QuadratureSpec::auto(12));
    let disk = MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad.clone());
    for m in 0..=5 {
        let q = even_moment_integral(&disk, m)?.value.re;
        let c = even_moment_closed_form(m, 1.0, 1)?;
        println!("m={m}: quadrature {q:.15}  closed form {c:.15}");
    }
    for mu in [2.0f64, 3.0, 4.0] {
        let last = *stirling_ratio_sequence(mu, 200)?.last().expect("nonempty");
        println!("μ={mu}: (200/(μ+200))^200 = {last:.6}, e^-μ = {:.6}", (-mu).exp());
    }
    let small = MomentMeasure::lebesgue(DomainDescriptor::scaled_ball(1, 0.8)?, quad);
    let point = MomentMeasure::point_mass(ComplexPoint::zeros(1));
    println!("{:>6} {:>10} {:>10} {:>10}", "m", "disk", "0.8·disk", "point");
    for m in [10, 50, 200] {
        println!(
            "{m:>6} {:>10.6} {:>10.6} {:>10.6}",
            support_reach_estimate(&disk, m)?,
            support_reach_estimate(&small, m)?,
            support_reach_estimate(&point, m)?
        );
    }
    if support_reach_estimate(&disk, 200)? < 0.95 || support_reach_estimate(&small, 200)? > 0.82 {
        return Err(BergmanError::Diagnostic("support reach does not discriminate".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
