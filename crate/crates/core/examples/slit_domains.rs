// The slit ball, its automorphisms, and the collapse map onto
// {|z₁|² + |z₂|²(|z₂|² − 1) < 0}.

use std::sync::Arc;

use bergman_lab::diffgeo::{curvature_scan, ScanOptions};
use bergman_lab::kernels::{transformation_law_residual, KernelModel};
use bergman_lab::maps::{CollapseMap, HolomorphicMap, SlitBallAutomorphism};
use bergman_lab::{BergmanError, DomainDescriptor, Result, C64};

pub fn run_example() -> Result<()> {
    let slit = DomainDescriptor::slit_ball(2)?;
    let k_slit = KernelModel::restricted(KernelModel::ball(2), slit.clone());
    let scan = curvature_scan(
        &k_slit,
        &slit,
        50,
        5,
        &ScanOptions {
            clearance: 0.05,
            ..Default::default()
        },
    )?;
    println!("slit ball: mean H {:.12}, spread {:.1e}", scan.mean, scan.spread);

    // the orbit of 0 under φ_a runs to the boundary point (1, 0)
    for j in [2u32, 10, 100, 1000] {
        let f = SlitBallAutomorphism::new(C64::new(1.0 - 1.0 / j as f64, 0.0))?;
        let img = f.apply(&bergman_lab::ComplexPoint::zeros(2))?;
        println!("a = 1 - 1/{j:<4}: φ_a(0) = {img}");
    }
    let f = SlitBallAutomorphism::new(C64::new(0.3, 0.4))?;
    let pts = slit.sample(10, 3)?;
    let worst = pts
        .iter()
        .zip(pts.iter().rev())
        .map(|(z, w)| transformation_law_residual(&f, &k_slit, &k_slit, z, w))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("transformation law residual of φ_a: {worst:.1e}");

    // pull the slit-ball kernel back to the collapsed domain
    let phi = CollapseMap::new(2)?;
    let collapsed = DomainDescriptor::collapsed_slit_ball(2)?;
    let round_trip = slit
        .sample(1000, 9)?
        .iter()
        .map(|z| Ok(phi.inverse().apply(&phi.apply(z)?)?.sub(z).norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("collapse round trip on 1000 samples: {round_trip:.1e}");
    let k_collapsed = KernelModel::pullback(k_slit, Arc::new(phi.inverse()), collapsed.clone());
    let scan = curvature_scan(
        &k_collapsed,
        &collapsed,
        10,
        5,
        &ScanOptions {
            clearance: 0.02,
            ..Default::default()
        },
    )?;
    println!("collapsed domain: mean H {:.9}, spread {:.1e}", scan.mean, scan.spread);
    if (scan.mean + 2.0 / 3.0).abs() > 1e-5 || round_trip > 1e-14 {
        return Err(BergmanError::Diagnostic("collapsed domain check failed".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
