use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bergman_lab::diffgeo::{curvature_scan, DerivativeMethod, ScanOptions};
use bergman_lab::domain::QuadratureSpec;
use bergman_lab::integrate::Engine;
use bergman_lab::kernels::{KernelModel, KernelSpec, Phi};
use bergman_lab::maps::{HolomorphicMap, MapSpec, RepresentativeMap};
use bergman_lab::moments::{moment_table, support_reach_estimate, Density, MomentMeasure};
use bergman_lab::verify::{built_in_suite, load_scenarios, run_suite, RunOptions, DEFAULT_SEED, REPORT_SCHEMA};
use bergman_lab::wire::{to_json_string, Cx};
use bergman_lab::{BergmanError, ComplexPoint, DomainDescriptor, C64};

/// Bergman kernel laboratory: curvature, moments, representative
/// coordinates and a seeded verification suite.
#[derive(Debug, Parser)]
#[command(name = "bergman-lab", version, about, long_about = None)]
struct Cli {
    /// Master seed (default 0x00423352474D414E, "B3RGMAN")
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,

    /// Tolerance override CLASS=VALUE (closed-form, finite-difference,
    /// monte-carlo-sigmas, monte-carlo-relative); repeatable
    #[arg(long = "tol", global = true, value_name = "CLASS=VALUE")]
    tol: Vec<String>,

    /// Output directory for data files [env: BERGMAN_LAB_OUT, default: bergman-lab-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Format written to standard output
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario suite and write a verification report
    Verify(VerifyArgs),
    /// Scan holomorphic sectional curvature over random points and directions
    Curvature(CurvatureArgs),
    /// Compute a moment table of a measure
    Moments(MomentsArgs),
    /// Evaluate a kernel at a pair of points
    KernelEval(KernelEvalArgs),
    /// Evaluate representative coordinates T_p(z) of the ball kernel
    Repcoords(RepcoordsArgs),
    /// Estimate the support reach from high even moments
    SupportReach(SupportReachArgs),
    /// Run the identity checks of the worked examples
    Examples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteName {
    Builtin,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Built-in suite to run
    #[arg(long, value_enum, conflicts_with = "scenario")]
    suite: Option<SuiteName>,
    /// Scenario JSON file; repeatable
    #[arg(long, value_name = "FILE")]
    scenario: Vec<PathBuf>,
    /// Run only scenarios with these names; repeatable
    #[arg(long, value_name = "NAME")]
    only: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DomainArg {
    Ball,
    SlitBall,
    CollapsedSlitBall,
    Hartogs,
    Annulus,
}

#[derive(Debug, Args)]
struct DomainOpts {
    /// Domain
    #[arg(long, value_enum, default_value_t = DomainArg::Ball)]
    domain: DomainArg,
    /// Complex dimension
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Ball radius
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Annulus inner radius
    #[arg(long, default_value_t = 0.5)]
    inner: f64,
    /// Size of the removed set of the Hartogs domain
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
}

impl DomainOpts {
    fn domain(&self) -> bergman_lab::Result<DomainDescriptor> {
        match self.domain {
            DomainArg::Ball => DomainDescriptor::scaled_ball(self.n, self.radius),
            DomainArg::SlitBall => DomainDescriptor::slit_ball(self.n),
            DomainArg::CollapsedSlitBall => DomainDescriptor::collapsed_slit_ball(self.n),
            DomainArg::Hartogs => DomainDescriptor::hartogs_complement(self.n, self.epsilon),
            DomainArg::Annulus => DomainDescriptor::annulus(self.inner),
        }
    }

    /// The closed-form kernel of the domain, raised to the power λ.
    fn kernel(&self, lambda: f64) -> bergman_lab::Result<KernelModel> {
        let base = || -> bergman_lab::Result<KernelModel> {
            if lambda == 1.0 {
                Ok(KernelModel::ball(self.n))
            } else {
                KernelModel::powered(self.n, lambda, Phi::one())
            }
        };
        let only_unit = |what: &str| {
            if lambda != 1.0 {
                return Err(BergmanError::Parameter(format!(
                    "--lambda is not available for the {what}"
                )));
            }
            Ok(())
        };
        match self.domain {
            DomainArg::Ball => {
                if self.radius != 1.0 {
                    return Err(BergmanError::Parameter("closed-form kernels need --radius 1".into()));
                }
                base()
            }
            DomainArg::SlitBall | DomainArg::Hartogs => Ok(KernelModel::restricted(base()?, self.domain()?)),
            DomainArg::CollapsedSlitBall => {
                only_unit("collapsed slit ball")?;
                let spec = KernelSpec::Pullback {
                    base: Box::new(KernelSpec::Restricted {
                        base: Box::new(KernelSpec::Ball { n: self.n }),
                        domain: DomainDescriptor::slit_ball(self.n)?,
                    }),
                    map: MapSpec::CollapseInverse { n: self.n },
                    source: self.domain()?,
                };
                spec.build()
            }
            DomainArg::Annulus => {
                only_unit("annulus")?;
                KernelModel::annulus(self.inner)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    FiniteDifference,
}

#[derive(Debug, Args)]
struct CurvatureArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Kernel power λ
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Number of random (z, X) pairs
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Derivative method
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Minimum distance of sample points to the complement
    #[arg(long)]
    clearance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Largest |α| and |β|
    #[arg(long, default_value_t = 3)]
    max_degree: u32,
    /// Use the radial density realizing the λ-moments
    #[arg(long)]
    lambda: Option<f64>,
    /// Integration engine
    #[arg(long, value_enum, default_value_t = EngineArg::Quadrature)]
    engine: EngineArg,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Radial quadrature order
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Debug, Args)]
struct KernelEvalArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Kernel power λ
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// First point, as re,im pairs separated by ';'
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// Second point; defaults to z
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
}

#[derive(Debug, Args)]
struct RepcoordsArgs {
    /// Complex dimension
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Base point p; defaults to the origin
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Point z; repeatable
    #[arg(long, allow_hyphen_values = true, required = true)]
    z: Vec<String>,
}

#[derive(Debug, Args)]
struct SupportReachArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Moment order m
    #[arg(long, default_value_t = 200)]
    m_max: u32,
    /// Use the radial density realizing the λ-moments
    #[arg(long)]
    lambda: Option<f64>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

fn parse_point(s: &str) -> bergman_lab::Result<ComplexPoint> {
    let coords = s
        .split(';')
        .map(|c| {
            let parts: Vec<&str> = c.split(',').map(str::trim).collect();
            let num = |p: &str| {
                p.parse::<f64>()
                    .map_err(|_| BergmanError::Parameter(format!("bad number `{p}` in point `{s}`")))
            };
            match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => Err(BergmanError::Parameter(format!("expected re,im in `{c}`"))),
            }
        })
        .collect::<bergman_lab::Result<Vec<_>>>()?;
    Ok(ComplexPoint::new(coords))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    seed: u64,
    report: &'a T,
}

struct Output {
    dir: PathBuf,
    format: Format,
    seed: u64,
}

impl Output {
    fn write_file(&self, name: &str, contents: &str) -> bergman_lab::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        std::fs::write(self.dir.join(name), contents)?;
        Ok(())
    }

    /// Writes `<stem>.json` and `<stem>.csv` and prints the chosen format.
    fn emit<T: Serialize>(&self, stem: &str, report: &T, csv: &str, table: &str) -> bergman_lab::Result<()> {
        let json = to_json_string(
            &Envelope {
                schema: REPORT_SCHEMA,
                command: stem,
                seed: self.seed,
                report,
            },
            true,
        )?;
        self.write_file(&format!("{stem}.json"), &json)?;
        self.write_file(&format!("{stem}.csv"), csv)?;
        match self.format {
            Format::Json => println!("{json}"),
            Format::Csv => print!("{csv}"),
            Format::Table => print!("{table}"),
        }
        Ok(())
    }
}

fn weighted(domain: DomainDescriptor, lambda: Option<f64>, engine: Engine) -> MomentMeasure {
    match lambda {
        Some(l) if l != 1.0 => MomentMeasure::weighted(domain, Density::Radial { lambda: l }, engine),
        _ => MomentMeasure::lebesgue(domain, engine),
    }
}

/// Ok(true) when every check passed.
fn run(cli: &Cli) -> bergman_lab::Result<bool> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut opts = RunOptions::with_seed(seed);
    for t in &cli.tol {
        opts.apply_override(t)?;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("BERGMAN_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bergman-lab-out"));
    let out = Output {
        dir,
        format: cli.format,
        seed,
    };
    match &cli.command {
        Command::Verify(args) => {
            let mut scenarios = if args.scenario.is_empty() {
                built_in_suite()
            } else {
                let mut all = Vec::new();
                for path in &args.scenario {
                    all.extend(load_scenarios(path).map_err(|e| match e {
                        BergmanError::Io(io) => BergmanError::Malformed(format!("{}: {io}", path.display())),
                        other => other,
                    })?);
                }
                all
            };
            if !args.only.is_empty() {
                if let Some(unknown) = args.only.iter().find(|n| !scenarios.iter().any(|s| &&s.name == n)) {
                    return Err(BergmanError::Parameter(format!("no scenario named `{unknown}`")));
                }
                scenarios.retain(|s| args.only.contains(&s.name));
            }
            verify(&out, &scenarios, &opts, "verify-report")
        }
        Command::Examples => {
            let names = [
                "slit-ball-curvature",
                "slit-kernel-equality",
                "mobius-transformation-law",
                "collapse-round-trip",
                "collapsed-slit-curvature",
                "fibered-identity-n2",
                "fibered-identity-n3",
                "fibered-into-ball",
            ];
            let scenarios: Vec<_> = built_in_suite()
                .into_iter()
                .filter(|s| names.contains(&s.name.as_str()))
                .collect();
            verify(&out, &scenarios, &opts, "examples-report")
        }
        Command::Curvature(args) => {
            let domain = args.domain.domain()?;
            let k = args.domain.kernel(args.lambda)?;
            let mut options = ScanOptions {
                method: match args.method {
                    MethodArg::Auto => DerivativeMethod::Auto,
                    MethodArg::FiniteDifference => DerivativeMethod::FiniteDifference,
                },
                tolerance: opts.policy.finite_difference,
                ..ScanOptions::default()
            };
            if let Some(c) = args.clearance {
                options.clearance = c;
            }
            let r = curvature_scan(&k, &domain, args.samples, seed, &options)?;
            out.emit("curvature", &r, &r.to_csv()?, &r.to_table())?;
            Ok(true)
        }
        Command::Moments(args) => {
            let domain = args.domain.domain()?;
            let engine = match args.engine {
                EngineArg::Quadrature => Engine::Quadrature(QuadratureSpec::auto(args.order)),
                EngineArg::MonteCarlo => Engine::MonteCarlo {
                    samples: args.samples,
                    seed,
                },
            };
            let measure = weighted(domain, args.lambda, engine);
            measure.validate()?;
            let t = moment_table(&measure, args.max_degree)?;
            out.emit("moments", &t, &t.to_csv()?, &t.to_table())?;
            Ok(true)
        }
        Command::KernelEval(args) => {
            let k = args.domain.kernel(args.lambda)?;
            let z = parse_point(&args.z)?;
            let w = args
                .w
                .as_deref()
                .map(parse_point)
                .transpose()?
                .unwrap_or_else(|| z.clone());
            let v = k.eval(&z, &w)?;
            #[derive(Serialize)]
            struct KernelValue {
                kernel: String,
                z: Vec<Cx>,
                w: Vec<Cx>,
                value: Cx,
            }
            let r = KernelValue {
                kernel: k.label(),
                z: z.clone().into(),
                w: w.clone().into(),
                value: v.into(),
            };
            let csv = format!(
                "re,im\n{},{}\n",
                bergman_lab::wire::fmt17(v.re),
                bergman_lab::wire::fmt17(v.im)
            );
            let table = format!("K({z}, {w}) = {} {:+}i  [{}]\n", v.re, v.im, k.label());
            out.emit("kernel-eval", &r, &csv, &table)?;
            Ok(true)
        }
        Command::Repcoords(args) => {
            let p = args
                .p
                .as_deref()
                .map(parse_point)
                .transpose()?
                .unwrap_or_else(|| ComplexPoint::zeros(args.n));
            let t = RepresentativeMap::new(KernelModel::ball(args.n), p.clone())?;
            #[derive(Serialize)]
            struct Image {
                z: Vec<Cx>,
                t: Vec<Cx>,
            }
            let mut rows = Vec::new();
            let mut csv = String::from("point,coordinate,z_re,z_im,t_re,t_im\n");
            let mut table = format!("T_p with p = {p} on the unit ball\n");
            for (i, s) in args.z.iter().enumerate() {
                let z = parse_point(s)?;
                let img = t.apply(&z)?;
                for (j, (a, b)) in z.coords().iter().zip(img.coords()).enumerate() {
                    csv.push_str(&format!(
                        "{i},{j},{},{},{},{}\n",
                        bergman_lab::wire::fmt17(a.re),
                        bergman_lab::wire::fmt17(a.im),
                        bergman_lab::wire::fmt17(b.re),
                        bergman_lab::wire::fmt17(b.im)
                    ));
                }
                table.push_str(&format!("{z} -> {img}\n"));
                rows.push(Image {
                    z: z.into(),
                    t: img.into(),
                });
            }
            out.emit("repcoords", &rows, &csv, &table)?;
            Ok(true)
        }
        Command::SupportReach(args) => {
            let order = (args.m_max as usize / 2 + 8).max(8);
            let domain = args.domain.domain()?;
            let measure = weighted(domain, args.lambda, Engine::Quadrature(QuadratureSpec::auto(order)));
            measure.validate()?;
            let est = support_reach_estimate(&measure, args.m_max)?;
            #[derive(Serialize)]
            struct Reach {
                measure: String,
                m_max: u32,
                estimate: f64,
            }
            let r = Reach {
                measure: measure.label(),
                m_max: args.m_max,
                estimate: est,
            };
            let csv = format!("m_max,estimate\n{},{}\n", args.m_max, bergman_lab::wire::fmt17(est));
            let table = format!("support reach of {} at m = {}: {est:.6}\n", r.measure, args.m_max);
            out.emit("support-reach", &r, &csv, &table)?;
            Ok(true)
        }
    }
}

fn verify(
    out: &Output,
    scenarios: &[bergman_lab::verify::Scenario],
    opts: &RunOptions,
    stem: &str,
) -> bergman_lab::Result<bool> {
    let report = run_suite(scenarios, opts);
    let json = report.to_json()?;
    out.write_file(&format!("{stem}.json"), &json)?;
    out.write_file(&format!("{stem}.csv"), &report.to_csv()?)?;
    match out.format {
        Format::Json => println!("{json}"),
        Format::Csv => print!("{}", report.to_csv()?),
        Format::Table => print!("{}", report.to_table()),
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let usage = matches!(
                e,
                BergmanError::Parameter(_)
                    | BergmanError::Validation { .. }
                    | BergmanError::Malformed(_)
                    | BergmanError::Io(_)
                    | BergmanError::Json(_)
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
