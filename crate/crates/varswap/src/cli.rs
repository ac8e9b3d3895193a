//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input (flags, files, parameters),
//! 3 for numerical failures (resonance, non-convergence, rejected
//! simulations).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use varswap_core::mc::{self, ClockSpec, McEstimate, SimConfig};
use varswap_core::model::DEFAULT_GRID_POINTS;
use varswap_core::ratio::RatioModel;
use varswap_core::replication::{replicate_european, synthetic_black_smile, vs_strike_from_smile};
use varswap_core::solvers::{
    residual, solve_model, Solution, SolutionKind, DEFAULT_SERIES_ORDER, DEFAULT_TAIL_TOL,
};
use varswap_core::LevyKernel;

use crate::error::{Error, Result};
use crate::figures::{payoff_figure, RatioCurve, DEFAULT_POINTS};
use crate::io::{self, Table};
use crate::manifest::RunManifest;
use crate::runner;

#[derive(Debug, Parser)]
#[command(
    name = "varswap",
    version,
    about = "Variance swap pricing on time-changed exponential Markov processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the payoff G of a model and write its table.
    Solve(SolveArgs),
    /// Replicate a payoff from a call/put smile and report the VS strike.
    Replicate(ReplicateArgs),
    /// Simulate paths and test QV against G(X_T) − G(x0).
    Simulate(SimulateArgs),
    /// Ratio of VS to log-contract values for the downward-jump mixture.
    Ratio(RatioArgs),
    /// Data for the reference figures 1 to 5.
    Figures(FiguresArgs),
    /// Write a parity-exact Black smile.
    SynthSmile(SynthSmileArgs),
}

#[derive(Debug, Args, Serialize)]
struct SeriesArgs {
    /// Tail tolerance for mixture series truncation.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    tol: f64,
    /// Largest mixture series order.
    #[arg(long = "N", default_value_t = DEFAULT_SERIES_ORDER)]
    order: usize,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    series: SeriesArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReplicateArgs {
    #[arg(long)]
    smile: PathBuf,
    /// Payoff JSON file; exclusive with --model.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    payoff: Option<PathBuf>,
    /// Model JSON file whose solved payoff is replicated.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Put/call split strike; defaults to the forward.
    #[arg(long)]
    kappa: Option<f64>,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// `identity`, `activity:v0=..,kappa=..,theta=..,eta=..,rho=..` or a JSON file.
    #[arg(long, default_value = "identity")]
    clock: String,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    /// Euler steps per unit calendar time.
    #[arg(long, default_value_t = 1000)]
    steps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Initial log-forward.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 1.5)]
    thinning_safety: f64,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RatioArgs {
    #[arg(long, default_value_t = 0.3)]
    omega: f64,
    #[arg(long, default_value_t = 0.395)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Jump atom `size:rate`; repeatable. Defaults to `-1:1`.
    #[arg(long = "atom", allow_hyphen_values = true)]
    atoms: Vec<String>,
    #[arg(long = "N", default_value_t = 35)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    f0_min: f64,
    #[arg(long, default_value_t = 20.0)]
    f0_max: f64,
    #[arg(long, default_value_t = 77)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FiguresArgs {
    /// Figure number, 1 to 5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    which: u8,
    /// Abscissa points (payoff figures default to 400, the ratio figure to 77).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SynthSmileArgs {
    #[arg(long, default_value_t = 10.0)]
    forward: f64,
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    expiry: f64,
    /// Lowest strike; defaults to forward / 5.
    #[arg(long)]
    k_lo: Option<f64>,
    /// Highest strike; defaults to 5 × forward.
    #[arg(long)]
    k_hi: Option<f64>,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::Replicate(a) => replicate(a),
        Command::Simulate(a) => simulate(a),
        Command::Ratio(a) => ratio(a),
        Command::Figures(a) => figures(a),
        Command::SynthSmile(a) => synth_smile(a),
    }
}

fn config<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn out_dir(out: &Option<PathBuf>) -> Result<Option<&Path>> {
    match out {
        Some(d) => {
            fs::create_dir_all(d).map_err(Error::io(d))?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn write_table(dir: &Path, name: &str, table: &Table, manifest: &mut RunManifest) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    manifest.output(&path)
}

fn describe(sol: &Solution) -> String {
    match &sol.kind {
        SolutionKind::Proportional { q } => format!("family: constant relative intensity\nQ = {q}"),
        SolutionKind::FractionalLinear(fl) => format!(
            "family: fractional linear\nalpha = {}, beta = {}, z0 = {}, gamma1 = {}, gamma2 = {}",
            fl.alpha, fl.beta, fl.z0, fl.gamma1, fl.gamma2
        ),
        SolutionKind::Mixture { coefficients, n_used, tail } => format!(
            "family: mixture\nQ0 = {}\nQ1 = {}\nseries terms = {n_used}, first dropped term sup = {tail:e}",
            coefficients.q0, coefficients.q1
        ),
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let report = model.validate(&model.grid(DEFAULT_GRID_POINTS));
    for w in report.warnings() {
        println!(
            "warning: {} {} (sup {:e} at x = {})",
            w.name, w.note, w.sup, w.witness
        );
    }
    if !report.passed() {
        let failed: Vec<&str> = report
            .entries
            .iter()
            .filter(|e| e.status == varswap_core::model::CheckStatus::Fail)
            .map(|e| e.name)
            .collect();
        return Err(
            varswap_core::Error::Model(format!("checks failed: {}", failed.join(", "))).into(),
        );
    }
    let sol = solve_model(&model, a.series.tol, a.series.order)?;
    let (res, qv) = residual(&model, &sol.payoff, &model.grid(DEFAULT_GRID_POINTS))?;
    println!("{}", describe(&sol));
    println!("max |A G - qv| = {res:e} (max qv {qv:e})");

    if let Some(dir) = out_dir(&a.out)? {
        let mut m = RunManifest::new("solve", config(&a));
        m.input(&a.model)?;
        let payoff_path = dir.join("payoff.json");
        io::write_json(&payoff_path, &sol.payoff)?;
        m.output(&payoff_path)?;
        let mut t = Table::new(&["x", "G", "dG", "d2G"]);
        for x in model.grid(DEFAULT_GRID_POINTS) {
            t.push(vec![
                x,
                sol.payoff.value(x),
                sol.payoff.d1(x),
                sol.payoff.d2(x),
            ]);
        }
        write_table(dir, "payoff.csv", &t, &mut m)?;
        if let SolutionKind::Mixture {
            coefficients: co,
            n_used,
            ..
        } = &sol.kind
        {
            let mut t = Table::new(&["n", "a_n", "phi_nc", "chi_nc", "term_sup"])
                .meta("series_terms", n_used);
            for n in 1..=co.order() {
                t.push(vec![
                    n as f64,
                    co.a[n - 1],
                    co.phi[n - 1],
                    co.chi[n - 1],
                    co.term_sup(n, model.domain),
                ]);
            }
            write_table(dir, "coefficients.csv", &t, &mut m)?;
        }
        m.write(dir)?;
    }
    Ok(())
}

fn replicate(a: ReplicateArgs) -> Result<()> {
    let smile = io::parse_smile(&a.smile)?;
    let payoff = match (&a.payoff, &a.model) {
        (Some(p), _) => io::read_payoff(p)?,
        (None, Some(m)) => solve_model(&io::read_model(m)?, a.series.tol, a.series.order)?.payoff,
        (None, None) => {
            return Err(Error::Usage(
                "one of --payoff or --model is required".into(),
            ))
        }
    };
    let rep = match a.kappa {
        None => vs_strike_from_smile(&payoff, &smile)?,
        Some(k) => replicate_european(&payoff.to_price_space(smile.forward(), None)?, &smile, k)?,
    };
    let warnings: Vec<String> = smile
        .shape_warnings(1e-8)
        .into_iter()
        .map(|w| format!("row {}: {}", w.row, w.message))
        .collect();
    let block = json!({
        "vs_strike": rep.value,
        "parity_residual_max": rep.parity_max,
        "tail_bound": rep.tail_bound,
        "kappa": rep.kappa,
        "forward": smile.forward(),
        "warnings": warnings,
    });
    println!("{}", serde_json::to_string_pretty(&block).expect("json"));
    if let Some(dir) = out_dir(&a.out)? {
        let mut m = RunManifest::new("replicate", config(&a));
        m.input(&a.smile)?;
        for p in [&a.payoff, &a.model].into_iter().flatten() {
            m.input(p)?;
        }
        let path = dir.join("replication.json");
        io::write_json(&path, &block)?;
        m.output(&path)?;
        m.write(dir)?;
    }
    Ok(())
}

/// Parses `identity`, `activity:k=v,...` or a JSON clock file.
fn parse_clock(spec: &str) -> Result<(ClockSpec, Option<PathBuf>)> {
    if spec == "identity" {
        return Ok((ClockSpec::Identity, None));
    }
    if let Some(rest) = spec.strip_prefix("activity:") {
        let (mut v0, mut kappa, mut theta, mut eta, mut rho) = (1.0, 1.0, 1.0, 0.0, 0.0);
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("clock parameter `{kv}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("clock parameter `{kv}` is not a number")))?;
            match k.trim() {
                "v0" => v0 = v,
                "kappa" => kappa = v,
                "theta" => theta = v,
                "eta" => eta = v,
                "rho" => rho = v,
                other => return Err(Error::Usage(format!("unknown clock parameter `{other}`"))),
            }
        }
        let c = ClockSpec::ActivityRate {
            v0,
            kappa,
            theta,
            eta,
            rho,
        };
        c.check()?;
        return Ok((c, None));
    }
    let path = PathBuf::from(spec);
    let c: ClockSpec = io::read_json(&path)?;
    c.check()?;
    Ok((c, Some(path)))
}

#[derive(Debug, Serialize)]
struct SimReport {
    identity_gap: McEstimate,
    gap_within_3se: bool,
    mean_qv: McEstimate,
    mean_tau: McEstimate,
    expected_tau: f64,
    ratio: Option<McEstimate>,
    jumps: u64,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let (clock, clock_file) = parse_clock(&a.clock)?;
    let cfg = SimConfig {
        paths: a.paths,
        steps_per_unit: a.steps,
        horizon: a.horizon,
        seed: a.seed,
        thinning_safety: a.thinning_safety,
        ..SimConfig::default()
    };
    let sol = solve_model(&model, a.series.tol, a.series.order)?;
    let records = runner::simulate(&model, &clock, a.x0, &cfg, runner::workers_from_env()?)?;
    mc::check_records(&records)?;
    let gap = mc::identity_gap(&records, &sol.payoff, a.x0);
    let report = SimReport {
        identity_gap: gap,
        gap_within_3se: gap.within(0.0, 3.0),
        mean_qv: McEstimate::from_samples(records.iter().map(|r| r.qv)),
        mean_tau: McEstimate::from_samples(records.iter().map(|r| r.tau)),
        expected_tau: clock.expected_tau(a.horizon),
        ratio: mc::mc_ratio(&records, a.x0).ok(),
        jumps: records.iter().map(|r| r.jumps as u64).sum(),
    };
    println!("{}", describe(&sol));
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));

    if let Some(dir) = out_dir(&a.out)? {
        let mut m = RunManifest::new("simulate", config(&a));
        m.seed = Some(a.seed);
        m.input(&a.model)?;
        if let Some(p) = &clock_file {
            m.input(p)?;
        }
        let mut t = Table::new(&["path", "X_T", "QV", "tau_T", "jumps"]);
        for (i, r) in records.iter().enumerate() {
            t.push(vec![i as f64, r.x_t, r.qv, r.tau, r.jumps as f64]);
        }
        write_table(dir, "paths.csv", &t, &mut m)?;
        let path = dir.join("report.json");
        io::write_json(&path, &report)?;
        m.output(&path)?;
        m.write(dir)?;
    }
    Ok(())
}

fn parse_atoms(atoms: &[String]) -> Result<LevyKernel> {
    if atoms.is_empty() {
        return Ok(LevyKernel::dirac(-1.0, 1.0)?);
    }
    let pairs = atoms
        .iter()
        .map(|s| {
            let (z, w) = s
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("atom `{s}` is not size:rate")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("atom `{s}` is not numeric")))
            };
            Ok((num(z)?, num(w)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevyKernel::from_atoms(&pairs)?)
}

fn emit(
    table: &Table,
    out: &Option<PathBuf>,
    name: &str,
    sub: &str,
    cfg: serde_json::Value,
) -> Result<()> {
    match out_dir(out)? {
        Some(dir) => {
            let mut m = RunManifest::new(sub, cfg);
            write_table(dir, name, table, &mut m)?;
            m.write(dir)?;
            println!("wrote {}", dir.join(name).display());
        }
        None => print!("{}", table.to_csv_string()),
    }
    Ok(())
}

fn ratio(a: RatioArgs) -> Result<()> {
    if a.points < 1 || !(a.f0_min > 0.0 && a.f0_min <= a.f0_max) {
        return Err(varswap_core::Error::Parameter(
            "need 0 < f0-min ≤ f0-max and at least one point".into(),
        )
        .into());
    }
    let model = RatioModel::new(a.omega, a.c, a.delta, parse_atoms(&a.atoms)?, a.order)?;
    let curve = RatioCurve {
        model,
        horizon: a.horizon,
        f0: varswap_core::model::linspace(a.f0_min, a.f0_max, a.points),
    };
    emit(&curve.table()?, &a.out, "ratio.csv", "ratio", config(&a))
}

fn figures(a: FiguresArgs) -> Result<()> {
    let table = if a.which == 5 {
        RatioCurve::figure(a.points.unwrap_or(77))?.table()?
    } else {
        payoff_figure(a.which, a.points.unwrap_or(DEFAULT_POINTS))?
    };
    emit(
        &table,
        &a.out,
        &format!("figure{}.csv", a.which),
        "figures",
        config(&a),
    )
}

fn synth_smile(a: SynthSmileArgs) -> Result<()> {
    let smile = synthetic_black_smile(
        a.forward,
        a.sigma,
        a.expiry,
        a.k_lo.unwrap_or(a.forward / 5.0),
        a.k_hi.unwrap_or(5.0 * a.forward),
        a.n,
    )?;
    let text = io::smile_to_string(&smile);
    match out_dir(&a.out)? {
        Some(dir) => {
            let path = dir.join("smile.csv");
            fs::write(&path, &text).map_err(Error::io(&path))?;
            let mut m = RunManifest::new("synth-smile", config(&a));
            m.output(&path)?;
            m.write(dir)?;
            println!(
                "wrote {} (parity residual max {:e})",
                path.display(),
                smile.parity_max()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}
