// Representative coordinates T_p of the ball kernel: T_p(p) = 0,
// dT_p(p) = I, image in the ellipsoid of g(p), and local isometry.

use bergman_lab::diffgeo::isometry_residual;
use bergman_lab::kernels::KernelModel;
use bergman_lab::maps::{HolomorphicMap, RepresentativeMap};
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, Result, C64};

pub fn run_example() -> Result<()> {
    let k = KernelModel::ball(2);
    let p = ComplexPoint::new(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.15)]);
    let t = RepresentativeMap::new(k.clone(), p.clone())?;
    let g = t.metric().clone();
    let target = KernelModel::ellipsoid(g.clone())?;
    println!("g(p) eigenvalues {:?}", g.eigenvalues());
    println!("T_p(p) = {}", t.apply(&p)?);
    println!("dT_p(p) = {}", t.jacobian(&p)?);

    let samples = DomainDescriptor::unit_ball(2).sample(1000, 17)?;
    let mut max_form: f64 = 0.0;
    for z in &samples {
        max_form = max_form.max(g.quadratic(&t.apply(z)?) / 3.0);
    }
    let mut max_iso: f64 = 0.0;
    for z in samples.iter().filter(|z| z.norm() < 0.7).take(50) {
        max_iso = max_iso.max(isometry_residual(&t, &k, &target, z)?);
    }
    println!("max ζg(p)ζ*/(n+1) over 1000 images: {max_form:.6}");
    println!("isometry residual over 50 points: {max_iso:.1e}");

    let t0 = RepresentativeMap::new(k, ComplexPoint::zeros(2))?;
    let gap = samples
        .iter()
        .map(|z| Ok(t0.apply(z)?.sub(z).norm()))
        .collect::<Result<Vec<f64>>>()?;
    println!("T_0 - id: {:.1e}", gap.into_iter().fold(0.0, f64::max));
    if max_form >= 1.0 || max_iso > 1e-6 {
        return Err(BergmanError::Diagnostic(
            "representative coordinates check failed".into(),
        ));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
