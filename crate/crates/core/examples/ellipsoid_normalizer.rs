// E_H = {ζHζ* < n + 1} is a linear image of the ball; its kernel is the
// ball kernel pulled back by the normalizer L.

use bergman_lab::kernels::{ball_kernel, ellipsoid_constant, ellipsoid_kernel};
use bergman_lab::maps::{ellipsoid_normalizer, HolomorphicMap};
use bergman_lab::types::CMatrix;
use bergman_lab::{BergmanError, ComplexPoint, HermitianForm, Result, C64};

pub fn run_example() -> Result<()> {
    let h = HermitianForm::new(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(2.0, 0.0),
            C64::new(0.3, -0.4),
            C64::new(0.3, 0.4),
            C64::new(1.0, 0.0),
        ],
    ))?;
    let l = ellipsoid_normalizer(&h)?;
    let det2 = l.matrix().determinant().norm_sqr();
    println!("H = {}", h.matrix());
    println!("L = {}", l.matrix());
    println!(
        "C = {:.15}, |det L|²·2/π² = {:.15}",
        ellipsoid_constant(&h),
        det2 * 2.0 / std::f64::consts::PI.powi(2)
    );
    for zeta in [
        ComplexPoint::new(vec![C64::new(0.2, 0.1), C64::new(-0.3, 0.4)]),
        ComplexPoint::new(vec![C64::new(0.9, 0.0), C64::new(0.0, -0.5)]),
    ] {
        let lhs = ellipsoid_kernel(&h, &zeta)?;
        let lz = l.apply(&zeta)?;
        let rhs = det2 * ball_kernel(2, &lz, &lz)?.re;
        println!("ζ = {zeta}: K_E = {lhs:.12}, pulled back {rhs:.12}");
        if (lhs - rhs).abs() > 1e-12 * lhs {
            return Err(BergmanError::Diagnostic("normalizer identity failed".into()));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
