// Moments ∫ z^α z̄^β dη against δ_{αβ}/c²_{α,λ}, and what happens when the
// measure is wrong.

use bergman_lab::domain::QuadratureSpec;
use bergman_lab::integrate::Engine;
use bergman_lab::moments::{moment_identity_residual, moment_table, table_identity_residual, Density, MomentMeasure};
use bergman_lab::types::TolerancePolicy;
use bergman_lab::{BergmanError, DomainDescriptor, Result};

pub fn run_example() -> Result<()> {
    let disk = MomentMeasure::lebesgue(
        DomainDescriptor::unit_ball(1),
        Engine::Quadrature(QuadratureSpec::auto(8)),
    );
    print!("{}", moment_table(&disk, 3)?.to_table());

    let mc = |domain: DomainDescriptor, density: Density| {
        MomentMeasure::weighted(
            domain,
            density,
            Engine::MonteCarlo {
                samples: 200_000,
                seed: 7,
            },
        )
    };
    let policy = TolerancePolicy::default();
    let cases = [
        (
            "uniform on B², λ=1",
            mc(DomainDescriptor::unit_ball(2), Density::Uniform),
            1.0,
            true,
        ),
        (
            "radial on B², λ=2",
            mc(DomainDescriptor::unit_ball(2), Density::Radial { lambda: 2.0 }),
            2.0,
            true,
        ),
        (
            "uniform on slit B², λ=1",
            mc(DomainDescriptor::slit_ball(2)?, Density::Uniform),
            1.0,
            true,
        ),
        (
            "uniform on B², λ=2",
            mc(DomainDescriptor::unit_ball(2), Density::Uniform),
            2.0,
            false,
        ),
        (
            "uniform on 0.9·B², λ=1",
            mc(DomainDescriptor::scaled_ball(2, 0.9)?, Density::Uniform),
            1.0,
            false,
        ),
    ];
    for (label, measure, lambda, should_hold) in cases {
        let table = moment_table(&measure, 3)?;
        let r = table_identity_residual(&table, lambda, &policy)?;
        println!(
            "{label:<26} excess {:8.3}  sigmas {:>10.3e}  hermitian defect {:.1e}",
            r.excess,
            r.sigmas,
            table.hermitian_defect()
        );
        if r.holds() != should_hold {
            return Err(BergmanError::Diagnostic(format!("{label}: unexpected verdict")));
        }
    }
    let exact = moment_identity_residual(&disk, 1.0, 4)?;
    println!("quadrature on the disk: excess {:.1e}", exact.excess);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
