// Automorphisms (A(z′), T(z′)^{1/n}·zₙ) built from ball automorphisms A of
// 𝔹ⁿ⁻¹ with T = det dA.

use bergman_lab::domain::{substream, uniform_in_ball};
use bergman_lab::maps::{random_unitary, BallAutomorphism, FiberedAutomorphism, HolomorphicMap};
use bergman_lab::{BergmanError, ComplexPoint, Result};

pub fn run_example() -> Result<()> {
    let mut rng = substream(42, 0);
    for n in [2usize, 3] {
        let mut residual: f64 = 0.0;
        let mut max_norm: f64 = 0.0;
        for _ in 0..200 {
            let a = uniform_in_ball(&mut rng, &ComplexPoint::zeros(n - 1), 0.9);
            let u = random_unitary(n - 1, &mut rng);
            let phi = FiberedAutomorphism::new(BallAutomorphism::new(a, u)?)?;
            let zp = uniform_in_ball(&mut rng, &ComplexPoint::zeros(n - 1), 1.0);
            residual = residual.max(phi.determinant_identity_residual(&zp)?);
            let z = uniform_in_ball(&mut rng, &ComplexPoint::zeros(n), 1.0);
            max_norm = max_norm.max(phi.apply(&z)?.norm());
        }
        println!("n={n}: determinant identity residual {residual:.1e}, largest image norm {max_norm:.6}");
        if residual > 1e-10 || max_norm >= 1.0 {
            return Err(BergmanError::Diagnostic(format!("n={n}: fibered identity failed")));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
