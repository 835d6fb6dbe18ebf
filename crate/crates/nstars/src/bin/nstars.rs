//! Command-line entry point: parameter derivation, analytic tables,
//! simulation runs, log-log moment fits and analytic-vs-empirical
//! comparisons, all emitted as plot-ready CSV plus a key=value manifest.

use clap::{Args, Parser, Subcommand};
use nstars::analytic::{
    self, expectation_closed, joint_table, marginal_closed, second_moment_closed,
    tail_coefficients, taylor_constant, MomentValue,
};
use nstars::params::{check_conditions, derive, DerivedParams, ModelParams};
use nstars::simulator::{run, SimConfig};
use nstars::stats::{conditional_moments, empirical_joint, loglog_fit, Axis, FitError, MomentRow};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "nstars", version, about = "N-stars network evolution model toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the derived constants and moment-finiteness conditions.
    Derive(DeriveArgs),
    /// Evaluate the limit distribution and moments; write CSV tables.
    Analytic(AnalyticArgs),
    /// Run the evolution process; write empirical CSV tables.
    Simulate(SimulateArgs),
    /// Fit the log-log moment curve from a moments CSV.
    Fit(FitArgs),
    /// Join analytic and empirical moments with relative errors.
    Compare(CompareArgs),
}

/// Model parameter flags, optionally backed by a key=value config file.
#[derive(Args)]
struct ParamArgs {
    /// Config file of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Star size N (>= 3).
    #[arg(long = "N")]
    n: Option<u32>,
    /// Probability of a new-vertex step.
    #[arg(long)]
    p: Option<f64>,
    /// Probability of preferential choice within old-vertex steps.
    #[arg(long)]
    q: Option<f64>,
    /// Probability of preferential choice within new-vertex steps.
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args)]
struct DeriveArgs {
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Largest central weight in the table.
    #[arg(long, default_value_t = 256)]
    w1max: usize,
    /// Largest peripheral weight in the table.
    #[arg(long, default_value_t = 4096)]
    w2max: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated seed list for a batch of independent runs.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Smallest bin population kept in the moment tables.
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Moments CSV (columns w,count,marginal,mean,second_moment).
    #[arg(long)]
    moments: PathBuf,
    #[arg(long, default_value_t = 30)]
    min_count: u64,
    /// Optional model parameters; when given, the theoretical constant is
    /// reported alongside the fit.
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 30)]
    min_count: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

enum CliError {
    Invalid(String),
    Insufficient(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(2),
            CliError::Insufficient(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Insufficient(m) | CliError::Io(m) => m,
        }
    }
}

impl From<nstars::params::ParamError> for CliError {
    fn from(e: nstars::params::ParamError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<analytic::AnalyticError> for CliError {
    fn from(e: analytic::AnalyticError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Insufficient(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!("{}:{}: expected key=value", path.display(), lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_config<T: FromStr>(cfg: &HashMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    match cfg.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("config key {key}: cannot parse {raw:?}"))),
    }
}

impl ParamArgs {
    fn config(&self) -> Result<HashMap<String, String>, CliError> {
        match &self.config {
            Some(path) => load_config(path),
            None => Ok(HashMap::new()),
        }
    }

    fn model(&self) -> Result<ModelParams, CliError> {
        let cfg = self.config()?;
        let n = match self.n {
            Some(v) => v,
            None => from_config(&cfg, "N")?
                .ok_or_else(|| CliError::Invalid("missing --N".into()))?,
        };
        let mut probs = [0.0f64; 3];
        for (slot, (flag, key)) in
            probs.iter_mut().zip([(self.p, "p"), (self.q, "q"), (self.r, "r")])
        {
            *slot = match flag {
                Some(v) => v,
                None => from_config(&cfg, key)?
                    .ok_or_else(|| CliError::Invalid(format!("missing --{key}")))?,
            };
        }
        Ok(ModelParams { n, p: probs[0], q: probs[1], r: probs[2] })
    }

    /// Parameters are optional for `fit`; None when no flag and no config.
    fn model_optional(&self) -> Result<Option<ModelParams>, CliError> {
        if self.n.is_none() && self.config.is_none() {
            return Ok(None);
        }
        self.model().map(Some)
    }
}

/// 17 significant digits, '.' decimal separator.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_moment(m: &Result<MomentValue, analytic::AnalyticError>) -> String {
    match m {
        Ok(MomentValue::Finite(v)) => fmt17(*v),
        Ok(MomentValue::Divergent) => "div".into(),
        Err(_) => "div".into(),
    }
}

struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut m = Manifest { lines: Vec::new() };
        m.push("command", command);
        m.push("tool_version", VERSION);
        m
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn push_params(&mut self, p: &ModelParams) {
        self.push("N", p.n);
        self.push("p", fmt17(p.p));
        self.push("q", fmt17(p.q));
        self.push("r", fmt17(p.r));
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        for (k, v) in &self.lines {
            writeln!(out, "{k}={v}").expect("string write");
        }
        fs::write(path, out)?;
        Ok(())
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)?;
    Ok(())
}

fn cmd_derive(args: &DeriveArgs) -> Result<(), CliError> {
    let params = args.params.model()?;
    let d = derive(params)?;
    let c = check_conditions(&d);
    println!("N={}", params.n);
    println!("p={}", fmt17(params.p));
    println!("q={}", fmt17(params.q));
    println!("r={}", fmt17(params.r));
    println!("alpha11={}", fmt17(d.a11));
    println!("alpha12={}", fmt17(d.a12));
    println!("alpha1={}", fmt17(d.a1));
    println!("alpha2={}", fmt17(d.a2));
    println!("beta1={}", fmt17(d.b1));
    println!("beta2={}", fmt17(d.b2));
    println!("alpha={}", fmt17(d.a));
    println!("beta={}", fmt17(d.b));
    println!("e_finite={}", c.e_finite);
    println!("m_finite={}", c.m_finite);
    println!("m_finite_swapped={}", c.m_finite_swapped);
    println!("e_exponent={}", fmt17(c.e_exponent));
    println!("m_exponent={}", fmt17(c.m_exponent));
    Ok(())
}

/// Analytic moment rows for w1 = 0..=w1max under a (possibly role-swapped)
/// parameter view.
fn analytic_moment_csv(d: &DerivedParams, w1max: usize) -> Result<String, CliError> {
    let mut out = String::from("w1,marginal,E,M\n");
    for w1 in 0..=w1max as u64 {
        let marginal = marginal_closed(d, w1)?;
        let e = match expectation_closed(d, w1) {
            Ok(v) => fmt17(v),
            Err(analytic::AnalyticError::DivergentMoment(_)) => "div".into(),
            Err(e) => return Err(e.into()),
        };
        let m = fmt_moment(&second_moment_closed(d, w1));
        writeln!(out, "{w1},{},{e},{m}", fmt17(marginal)).expect("string write");
    }
    Ok(out)
}

fn cmd_analytic(args: &AnalyticArgs) -> Result<(), CliError> {
    let params = args.params.model()?;
    params.validate_analytic()?;
    let d = derive(params)?;
    fs::create_dir_all(&args.out_dir)?;

    let table = joint_table(&d, args.w1max, args.w2max)?;
    let mut joint = String::from("w1,w2,x\n");
    for (w1, w2, v) in table.iter() {
        writeln!(joint, "{w1},{w2},{}", fmt17(v)).expect("string write");
    }
    write_file(&args.out_dir.join("joint.csv"), &joint)?;

    write_file(&args.out_dir.join("moments.csv"), &analytic_moment_csv(&d, args.w1max)?)?;

    let mut tails = String::from("index,A,C\n");
    for i in 0..=args.w1max.max(args.w2max) as u64 {
        let t = tail_coefficients(&d, i, i)?;
        let a = if i <= args.w2max as u64 { fmt17(t.a_of_w2) } else { String::new() };
        let c = if i <= args.w1max as u64 { fmt17(t.c_of_w1) } else { String::new() };
        writeln!(tails, "{i},{a},{c}").expect("string write");
    }
    write_file(&args.out_dir.join("tails.csv"), &tails)?;

    let mut manifest = Manifest::new("analytic");
    manifest.push_params(&params);
    manifest.push("w1max", args.w1max);
    manifest.push("w2max", args.w2max);
    manifest.push("taylor_constant", fmt_moment(&taylor_constant(&d)));
    manifest.write(&args.out_dir.join("manifest.txt"))?;
    Ok(())
}

fn moment_rows_csv(rows: &[MomentRow]) -> String {
    let mut out = String::from("w,count,marginal,mean,second_moment\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.w,
            r.count,
            fmt17(r.marginal),
            fmt17(r.mean),
            fmt17(r.second_moment)
        )
        .expect("string write");
    }
    out
}

fn simulate_one(
    params: ModelParams,
    steps: u64,
    seed: u64,
    min_count: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let (state, summary) = run(&SimConfig::new(params, steps, seed))?;
    let joint = empirical_joint(&state);

    let mut joint_csv = String::from("w1,w2,count\n");
    for (&(w1, w2), &count) in &joint.counts {
        writeln!(joint_csv, "{w1},{w2},{count}").expect("string write");
    }
    write_file(&out_dir.join("empirical_joint.csv"), &joint_csv)?;

    let rows_w1 = conditional_moments(&joint, Axis::FixW1, min_count);
    write_file(&out_dir.join("moments_w1.csv"), &moment_rows_csv(&rows_w1))?;
    let rows_w2 = conditional_moments(&joint, Axis::FixW2, min_count);
    write_file(&out_dir.join("moments_w2.csv"), &moment_rows_csv(&rows_w2))?;

    let mut manifest = Manifest::new("simulate");
    manifest.push_params(&params);
    manifest.push("steps", steps);
    manifest.push("seed", seed);
    manifest.push("min_count", min_count);
    manifest.push("vertices", summary.vertices);
    let branch_names = ["new_vertex_preferential", "new_vertex_uniform", "old_preferential", "old_uniform"];
    for (name, count) in branch_names.iter().zip(summary.branch_counts) {
        manifest.push(&format!("branch_{name}"), count);
    }
    manifest.push("nstar_count", summary.nstar_count);
    manifest.push("substar_count", summary.substar_count);
    manifest.push("digest", format!("{:016x}", summary.digest));
    manifest.write(&out_dir.join("manifest.txt"))?;
    eprintln!(
        "seed {seed}: {} vertices, digest {:016x}, {:.2}s",
        summary.vertices, summary.digest, summary.elapsed_secs
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let params = args.params.model()?;
    let cfg = args.params.config()?;
    let steps = match args.steps {
        Some(v) => v,
        None => from_config(&cfg, "steps")?
            .ok_or_else(|| CliError::Invalid("missing --steps".into()))?,
    };
    if args.seeds.is_empty() {
        let seed = match args.seed {
            Some(v) => v,
            None => from_config(&cfg, "seed")?
                .ok_or_else(|| CliError::Invalid("missing --seed".into()))?,
        };
        return simulate_one(params, steps, seed, args.min_count, &args.out_dir);
    }
    // batch mode: one independent state per worker
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let queue = std::sync::Mutex::new(args.seeds.clone().into_iter());
    let failures = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(args.seeds.len()) {
            scope.spawn(|| loop {
                let seed = match queue.lock().unwrap().next() {
                    Some(s) => s,
                    None => break,
                };
                let dir = args.out_dir.join(format!("seed-{seed}"));
                if let Err(e) = simulate_one(params, steps, seed, args.min_count, &dir) {
                    failures.lock().unwrap().push(format!("seed {seed}: {}", e.message()));
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Io(failures.join("; ")))
    }
}

fn parse_moment_csv(path: &Path) -> Result<Vec<MomentRow>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Invalid(format!("{}: empty file", path.display())))?;
    if header.trim() != "w,count,marginal,mean,second_moment" {
        return Err(CliError::Invalid(format!(
            "{}: expected header w,count,marginal,mean,second_moment",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Invalid(format!(
                "{}:{}: expected 5 fields",
                path.display(),
                lineno + 2
            )));
        }
        let parse_err =
            |f: &str| CliError::Invalid(format!("{}:{}: bad field {f:?}", path.display(), lineno + 2));
        rows.push(MomentRow {
            w: fields[0].parse().map_err(|_| parse_err(fields[0]))?,
            count: fields[1].parse().map_err(|_| parse_err(fields[1]))?,
            marginal: fields[2].parse().map_err(|_| parse_err(fields[2]))?,
            mean: fields[3].parse().map_err(|_| parse_err(fields[3]))?,
            second_moment: fields[4].parse().map_err(|_| parse_err(fields[4]))?,
        });
    }
    Ok(rows)
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let rows = parse_moment_csv(&args.moments)?;
    let fit = loglog_fit(&rows, args.min_count)?;
    println!("slope={}", fmt17(fit.slope));
    println!("intercept={}", fmt17(fit.intercept));
    println!("r_squared={}", fmt17(fit.r_squared));
    println!("points_used={}", fit.points_used);
    if let Some(params) = args.params.model_optional()? {
        params.validate_analytic()?;
        let d = derive(params)?;
        println!("theoretical_C={}", fmt_moment(&taylor_constant(&d)));
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let params = args.params.model()?;
    params.validate_analytic()?;
    let cfg = args.params.config()?;
    let steps = match args.steps {
        Some(v) => v,
        None => from_config(&cfg, "steps")?
            .ok_or_else(|| CliError::Invalid("missing --steps".into()))?,
    };
    let seed = match args.seed {
        Some(v) => v,
        None => from_config(&cfg, "seed")?
            .ok_or_else(|| CliError::Invalid("missing --seed".into()))?,
    };
    let d = derive(params)?;
    fs::create_dir_all(&args.out_dir)?;
    let (state, summary) = run(&SimConfig::new(params, steps, seed))?;
    let joint = empirical_joint(&state);
    let rows = conditional_moments(&joint, Axis::FixW1, args.min_count);
    if rows.len() < 2 {
        return Err(CliError::Insufficient(format!(
            "only {} bins survive min_count={}",
            rows.len(),
            args.min_count
        )));
    }

    let rel = |emp: f64, ana: f64| fmt17((emp - ana).abs() / ana.abs());
    let mut out = String::from(
        "w1,analytic_marginal,empirical_marginal,rel_err,analytic_E,empirical_E,rel_err_E,analytic_M,empirical_M,rel_err_M\n",
    );
    for row in &rows {
        let ana_marginal = marginal_closed(&d, row.w)?;
        let (ana_e, rel_e) = match expectation_closed(&d, row.w) {
            Ok(v) => (fmt17(v), rel(row.mean, v)),
            Err(analytic::AnalyticError::DivergentMoment(_)) => ("div".into(), String::new()),
            Err(e) => return Err(e.into()),
        };
        let (ana_m, rel_m) = match second_moment_closed(&d, row.w)? {
            MomentValue::Finite(v) => (fmt17(v), rel(row.second_moment, v)),
            MomentValue::Divergent => ("div".into(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.w,
            fmt17(ana_marginal),
            fmt17(row.marginal),
            rel(row.marginal, ana_marginal),
            ana_e,
            fmt17(row.mean),
            rel_e,
            ana_m,
            fmt17(row.second_moment),
            rel_m,
        )
        .expect("string write");
    }
    write_file(&args.out_dir.join("compare.csv"), &out)?;

    let mut manifest = Manifest::new("compare");
    manifest.push_params(&params);
    manifest.push("steps", steps);
    manifest.push("seed", seed);
    manifest.push("min_count", args.min_count);
    manifest.push("digest", format!("{:016x}", summary.digest));
    manifest.push("taylor_constant", fmt_moment(&taylor_constant(&d)));
    manifest.write(&args.out_dir.join("manifest.txt"))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Derive(args) => cmd_derive(args),
        Cmd::Analytic(args) => cmd_analytic(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
