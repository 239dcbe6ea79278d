// Running registry scenarios and a hand-written scenario file.

use bergman_lab::verify::{built_in_suite, parse_scenarios, run_suite, RunOptions, DEFAULT_SEED};
use bergman_lab::{BergmanError, Result};

const CUSTOM: &str = r#"[
  {
    "name": "powered-ball-curvature",
    "check": {
      "kind": "curvature-constancy",
      "kernel": {"kind": "powered", "n": 2, "lambda": 2.0},
      "domain": {"n": 2, "kind": "ball", "radius": 0.8},
      "samples": 30
    },
    "expected": [
      {"statistic": "mean", "relation": "within", "value": -0.3333333333333333, "tolerance": 1e-8, "provenance": "derived"}
    ]
  },
  {
    "name": "stirling-mu5",
    "check": {"kind": "stirling-limit", "mu": 5.0, "m": 400},
    "expected": [{"statistic": "gap", "relation": "at-most", "value": 0.01, "provenance": "elementary"}]
  }
]"#;

pub fn run_example() -> Result<()> {
    let opts = RunOptions::with_seed(DEFAULT_SEED);
    let wanted = [
        "ball-curvature-n2",
        "stirling-mu2",
        "repcoords-isometry-ball",
        "annulus-gram-vs-disk",
    ];
    let subset: Vec<_> = built_in_suite()
        .into_iter()
        .filter(|s| wanted.contains(&s.name.as_str()))
        .collect();
    let report = run_suite(&subset, &opts);
    print!("{}", report.to_table());

    let custom = run_suite(&parse_scenarios(CUSTOM)?, &opts);
    print!("{}", custom.to_table());
    if !report.pass || !custom.pass {
        return Err(BergmanError::Diagnostic("scenario failures".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
