//! `npcflow` command-line front end.
//!
//! Exit status: 0 when every audit passes, 1 when any audit fails (or a
//! replay finds a mismatch), 2 on errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use npcflow::flow::read_trace;
use npcflow::scenario::{
    execute, replay, run_scenario, write_outputs, Check, GridConfig, InitialData, LipschitzSpec, ScenarioConfig,
    SolverBlock, VerifyBlock, WedBlock,
};
use npcflow::verify::{frequency_profile, lipschitz_scan, CylinderCenter};
use npcflow::{Error, SolverOptions, TargetSpace, VerifierReport};

#[derive(Parser)]
#[command(name = "npcflow", version, about = "Harmonic map heat flow into CAT(0) spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the proximal (minimizing-movement) flow and any requested checks.
    Simulate(ScenarioArgs),
    /// Minimize the WED functional and run any requested checks.
    Wed(ScenarioArgs),
    /// Run a full scenario: every block of the config and its checks.
    Verify(ScenarioArgs),
    /// Frequency profile N(R) of a stored trace at one space-time point.
    Frequency(FrequencyArgs),
    /// Lipschitz scaling scan, either over a stored WED trace or with one
    /// WED solve per radius (eps = r^2) from a scenario.
    ScanLipschitz(LipschitzArgs),
    /// Recompute the diagnostics of a trace file and compare bit for bit.
    Replay(ReplayArgs),
    /// WED-to-flow convergence study over a descending epsilon list.
    Sweep(ScenarioArgs),
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Scenario config (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain dimension n (1 or 2).
    #[arg(long)]
    n: Option<usize>,
    /// Nodes per axis N.
    #[arg(long = "nodes", short = 'N')]
    nodes: Option<usize>,
    /// Torus side length L.
    #[arg(long = "length", short = 'L')]
    length: Option<f64>,
    /// Target: `euclidean:D`, `spider:K`, `hyperbolic2`, or a JSON descriptor.
    #[arg(long)]
    space: Option<String>,
    /// Initial data: `constant`, `linear_core`, `two_ray_step`,
    /// `three_ray_symmetric`, `random_smooth:SEED:CORR[:AMP]`, or JSON.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated, descending.
    #[arg(long, value_delimiter = ',')]
    epsilon_list: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    /// WED horizon (single epsilon) or comparison time (epsilon list).
    #[arg(long = "horizon", short = 'T')]
    horizon: Option<f64>,
    /// Check to run (repeatable); `all` selects every check the config can
    /// support.
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Lipschitz scan base radius (enables `verify.lipschitz`).
    #[arg(long)]
    r0: Option<f64>,
    /// Compare against the dense linear oracles (Euclidean targets).
    #[arg(long)]
    oracle: bool,
    /// Solver stopping tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "out", short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FrequencyArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    node: usize,
    #[arg(long)]
    t0: f64,
    /// Ascending radii, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct LipschitzArgs {
    /// Stored WED trace; scans `--radii` around `--centers` at `--time`.
    #[arg(long, conflicts_with = "config")]
    trace: Option<PathBuf>,
    /// Radii to scan; without `--trace` only the first (r0) is used, halved
    /// `--levels` times.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Cylinder center nodes.
    #[arg(long, value_delimiter = ',')]
    centers: Option<Vec<usize>>,
    /// Cylinder center time.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Print the full replay report as JSON.
    #[arg(long)]
    json: bool,
}

fn parse_space(s: &str) -> Result<TargetSpace, Error> {
    if s.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    let bad = || Error::Config { path: "space".into(), reason: format!("cannot parse `{s}`") };
    let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
    let num = |a: Option<&str>| a.and_then(|a| a.parse::<usize>().ok()).ok_or_else(bad);
    match kind {
        "euclidean" => Ok(TargetSpace::Euclidean { dim: num(arg)? }),
        "spider" => Ok(TargetSpace::Spider { num_rays: num(arg)? }),
        "hyperbolic2" if arg.is_none() => Ok(TargetSpace::Hyperbolic2),
        _ => Err(bad()),
    }
}

fn parse_initial(s: &str) -> Result<InitialData, Error> {
    if s.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    let bad = || Error::Config { path: "initial_data".into(), reason: format!("cannot parse `{s}`") };
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["constant"] => InitialData::Constant { value: None },
        ["linear_core"] => InitialData::LinearCore { slope: 1.0 },
        ["two_ray_step"] => InitialData::TwoRayStep { amplitude: 1.0 },
        ["three_ray_symmetric"] => InitialData::ThreeRaySymmetric { amplitude: 1.0 },
        ["random_smooth", seed, corr, rest @ ..] if rest.len() <= 1 => InitialData::RandomSmooth {
            seed: seed.parse().map_err(|_| bad())?,
            correlation_length: corr.parse().map_err(|_| bad())?,
            amplitude: rest.first().map_or(Ok(1.0), |a| a.parse().map_err(|_| bad()))?,
        },
        _ => return Err(bad()),
    })
}

fn missing(path: &str) -> Error {
    Error::Config { path: path.into(), reason: "missing (give --config or the flag)".into() }
}

fn build_config(a: &ScenarioArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let cfg: ScenarioConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Config { path: path.display().to_string(), reason: e.to_string() })?;
            cfg
        }
        None => ScenarioConfig {
            name: None,
            grid: GridConfig {
                n: a.n.ok_or_else(|| missing("grid.n"))?,
                nodes: a.nodes.ok_or_else(|| missing("grid.N"))?,
                length: a.length.ok_or_else(|| missing("grid.L"))?,
            },
            space: parse_space(a.space.as_deref().ok_or_else(|| missing("space"))?)?,
            initial_data: parse_initial(a.initial.as_deref().ok_or_else(|| missing("initial_data"))?)?,
            solver: None,
            wed: None,
            verify: VerifyBlock::default(),
            options: SolverOptions::default(),
            oracle: false,
            output_dir: PathBuf::from("out"),
            seed: 0,
        },
    };
    if let Some(n) = a.n {
        cfg.grid.n = n;
    }
    if let Some(n) = a.nodes {
        cfg.grid.nodes = n;
    }
    if let Some(l) = a.length {
        cfg.grid.length = l;
    }
    if let Some(s) = &a.space {
        cfg.space = parse_space(s)?;
    }
    if let Some(s) = &a.initial {
        cfg.initial_data = parse_initial(s)?;
    }
    if a.tau.is_some() || a.steps.is_some() {
        let s = cfg.solver.get_or_insert(SolverBlock { tau: f64::NAN, steps: 0 });
        s.tau = a.tau.unwrap_or(s.tau);
        s.steps = a.steps.unwrap_or(s.steps);
    }
    if a.epsilon.is_some() || a.epsilon_list.is_some() || a.dt.is_some() || a.horizon.is_some() {
        let w = cfg.wed.get_or_insert(WedBlock { epsilon: None, epsilon_list: None, dt: f64::NAN, horizon: f64::NAN });
        if let Some(e) = a.epsilon {
            w.epsilon = Some(e);
            w.epsilon_list = None;
        }
        if let Some(list) = &a.epsilon_list {
            w.epsilon_list = Some(list.clone());
            w.epsilon = None;
        }
        w.dt = a.dt.unwrap_or(w.dt);
        w.horizon = a.horizon.unwrap_or(w.horizon);
    }
    if let Some(r0) = a.r0 {
        let l = cfg.verify.lipschitz.get_or_insert(LipschitzSpec { r0, levels: 3, time: None, nodes: None });
        l.r0 = r0;
    }
    if a.oracle {
        cfg.oracle = true;
    }
    if let Some(t) = a.tolerance {
        cfg.options.tolerance = t;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    if !a.checks.is_empty() {
        cfg.verify.checks = parse_checks(&a.checks, &cfg)?;
    }
    Ok(cfg)
}

fn parse_checks(names: &[String], cfg: &ScenarioConfig) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            out.extend(Check::ALL.into_iter().filter(|c| supported(*c, cfg)));
        } else {
            out.push(Check::parse(name).ok_or_else(|| Error::Config {
                path: "verify.checks".into(),
                reason: format!("unknown check `{name}`"),
            })?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn supported(c: Check, cfg: &ScenarioConfig) -> bool {
    let single = cfg.wed.as_ref().is_some_and(|w| w.epsilon.is_some());
    let list = cfg.wed.as_ref().is_some_and(|w| w.epsilon_list.is_some());
    match c {
        Check::WedWeak | Check::WedEnergyBound => single,
        Check::Convergence => list,
        Check::Lipschitz => cfg.verify.lipschitz.is_some(),
        _ => cfg.solver.is_some(),
    }
}

fn print_reports(reports: &[VerifierReport]) {
    for r in reports {
        println!("{} {} worst={:e} tolerance={:e}", r.status(), r.id, r.worst_value, r.tolerance);
    }
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn scenario(cfg: ScenarioConfig) -> Result<ExitCode, Error> {
    let summary = run_scenario(&cfg)?;
    print_reports(&summary.reports);
    println!("manifest: {}", summary.output_dir.join("manifest.json").display());
    Ok(status(summary.passed()))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate(a) => {
            let mut cfg = build_config(&a)?;
            cfg.wed = None;
            let checks = cfg.verify.checks.iter().copied().filter(|c| supported(*c, &cfg)).collect();
            cfg.verify.checks = checks;
            scenario(cfg)
        }
        Command::Wed(a) => {
            let mut cfg = build_config(&a)?;
            cfg.solver = None;
            let checks = cfg.verify.checks.iter().copied().filter(|c| supported(*c, &cfg)).collect();
            cfg.verify.checks = checks;
            scenario(cfg)
        }
        Command::Verify(a) => scenario(build_config(&a)?),
        Command::Sweep(a) => {
            let mut cfg = build_config(&a)?;
            if cfg.wed.as_ref().map_or(true, |w| w.epsilon_list.is_none()) {
                return Err(missing("wed.epsilon_list"));
            }
            cfg.solver = None;
            cfg.verify.checks = vec![Check::Convergence];
            scenario(cfg)
        }
        Command::Frequency(a) => {
            let file = std::io::BufReader::new(fs::File::open(&a.trace)?);
            let trace = read_trace(file)?.into_flow_trace()?;
            let report = frequency_profile(&trace, a.node, a.t0, &a.radii)?;
            for p in &report.series {
                println!("R={} N={}", p[0], p[1]);
            }
            print_reports(std::slice::from_ref(&report));
            if let Some(path) = a.report {
                report.write_json(fs::File::create(path)?)?;
            }
            Ok(status(report.pass))
        }
        Command::ScanLipschitz(a) => {
            if let Some(path) = &a.trace {
                let file = std::io::BufReader::new(fs::File::open(path)?);
                let st = read_trace(file)?.into_space_time_map()?;
                let radii = a.radii.clone().ok_or_else(|| missing("radii"))?;
                let time = a.time.ok_or_else(|| missing("time"))?;
                let nodes = a.centers.clone().ok_or_else(|| missing("centers"))?;
                let centers: Vec<_> = nodes.into_iter().map(|node| CylinderCenter { node, time }).collect();
                let report = lipschitz_scan(&st, &centers, &radii)?;
                print_reports(std::slice::from_ref(&report));
                return Ok(status(report.pass));
            }
            let mut cfg = build_config(&a.scenario)?;
            let spec = cfg.verify.lipschitz.get_or_insert(LipschitzSpec { r0: f64::NAN, levels: 3, time: None, nodes: None });
            if let Some(r) = a.radii.as_ref().and_then(|r| r.first()) {
                spec.r0 = *r;
            }
            if let Some(l) = a.levels {
                spec.levels = l;
            }
            if a.time.is_some() {
                spec.time = a.time;
            }
            if a.centers.is_some() {
                spec.nodes = a.centers.clone();
            }
            if cfg.solver.is_none() && cfg.wed.is_none() {
                // The scan runs its own WED solves; a one-step flow keeps the
                // config valid and costs nothing.
                cfg.solver = Some(SolverBlock { tau: 1e-3, steps: 1 });
            }
            cfg.verify.checks = vec![Check::Lipschitz];
            let outcome = execute(&cfg)?;
            write_outputs(&outcome, &cfg.output_dir)?;
            print_reports(&outcome.reports);
            Ok(status(outcome.passed()))
        }
        Command::Replay(a) => {
            let report = replay(&a.trace)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else if report.matches {
                println!("match: {} slices recomputed bit for bit", report.slices);
            } else {
                println!("MISMATCH: {} value(s) differ", report.mismatches.len());
                for m in &report.mismatches {
                    let node = m.node.map(|x| format!(" node {x}")).unwrap_or_default();
                    println!("slice {}{node} {}: stored {:e}, recomputed {:e}", m.slice, m.quantity, m.stored, m.recomputed);
                }
            }
            Ok(status(report.matches))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
