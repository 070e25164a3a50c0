use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use rft_core::coupling::{verify_distance_bound_auto, verify_leaf_proximity, CoupledPair};
use rft_core::estimators::replica_exponent_fit;
use rft_core::experiment::{read_snapshot_csv, run, CSV_SCHEMA};
use rft_core::oracle::{self, TreeStatistic};
use rft_core::{
    check_all, grow, Error, ExperimentPlan, GrowthTree, ModelSpec, RngStream, Schedule, StatSnapshot, StatsConfig,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "rft", version, about = "Grow, verify and enumerate random friend trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// friend | redirect | urrt | pa
    #[arg(long, default_value = "friend")]
    model: String,
    /// Walk length for the friend model
    #[arg(long)]
    k: Option<u32>,
    /// Probability of keeping the uniform vertex in the redirect model
    #[arg(long)]
    p: Option<f64>,
}

impl ModelArgs {
    fn spec(&self) -> anyhow::Result<ModelSpec> {
        Ok(ModelSpec::from_parts(&self.model, self.k, self.p)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grow one tree and write it in the frozen format
    Grow {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream index under the seed
        #[arg(long, default_value_t = 0)]
        replica: u64,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot schedule, e.g. `geometric:128:2` or `100,1000`
        #[arg(long)]
        schedule: Option<String>,
        /// Snapshot statistics: all | census | comma-separated list
        #[arg(long, default_value = "census")]
        stats: String,
        /// Write the snapshot CSV here
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Run an experiment plan file
    Experiment {
        plan: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Override the plan's output directory
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u32>,
        /// Override the tracked vertices, comma-separated
        #[arg(long, value_delimiter = ',')]
        track: Option<Vec<u32>>,
    },
    /// Grow a coupled friend tree / recursive tree pair and check both coupling guarantees
    Couple {
        #[arg(long)]
        n: u32,
        /// Sampled vertex pairs for the distance check (exhaustive below 500 vertices)
        #[arg(long, default_value_t = 100_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact expectations by enumeration, optionally checked against Monte Carlo
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: u32,
        /// diam | leaves | nonleaves | x_geq:K | leaf_depth | y | edge_cover | max_degree | youngest_geq:L | drift_geq:K
        #[arg(long)]
        stat: Option<String>,
        /// Monte Carlo replicas to compare against
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full outcome table (parents, probability) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-law fit of a census column over snapshot CSVs
    Fit {
        /// Snapshot CSV files or experiment output directories
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "x_geq_2")]
        column: String,
        /// Ignore snapshots below this size
        #[arg(long, default_value_t = 1)]
        min_n: u64,
    },
    /// Load a frozen tree and run every exact invariant on it
    Verify { tree: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvariantViolation(_) | Error::CouplingViolation(_) | Error::OracleMismatch(_) => EXIT_VIOLATION,
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_USAGE,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Grow { model, n, seed, replica, out, schedule, stats, snapshots } => {
            cmd_grow(model.spec()?, n, seed, replica, out, schedule, &stats, snapshots)
        }
        Command::Experiment { plan, threads, out, seed, replicas, track } => {
            cmd_experiment(&plan, threads, out, seed, replicas, track)
        }
        Command::Couple { n, pairs, seed } => cmd_couple(n, pairs, seed),
        Command::Oracle { model, n, stat, replicas, seed, out } => {
            cmd_oracle(model.spec()?, n, stat.as_deref(), replicas, seed, out)
        }
        Command::Fit { inputs, column, min_n } => cmd_fit(&inputs, &column, min_n),
        Command::Verify { tree } => cmd_verify(&tree),
    }
}

fn write_output(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })?,
        None => io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_grow(
    model: ModelSpec,
    n: u32,
    seed: u64,
    replica: u64,
    out: Option<PathBuf>,
    schedule: Option<String>,
    stats: &str,
    snapshots: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let schedule = match schedule {
        Some(s) => Schedule::parse(&s)?,
        None => Schedule::Explicit { points: vec![n as u64] },
    };
    let cfg = StatsConfig::parse(stats)?;
    let mut rng = RngStream::new(seed, replica);
    let growth = grow(&model, n, &mut rng, &schedule, &cfg, &mut [])?;
    if let Some(path) = snapshots {
        let mut csv = format!("{CSV_SCHEMA} model={} replica={replica} master_seed={seed}\n", model.label());
        csv.push_str(&StatSnapshot::csv_columns(cfg.degree_cap).join(","));
        csv.push('\n');
        for s in &growth.snapshots {
            csv.push_str(&s.csv_row());
            csv.push('\n');
        }
        write_output(Some(&path), &csv)?;
    }
    write_output(out.as_deref(), &growth.tree.to_frozen_string())?;
    let t = &growth.tree;
    eprintln!(
        "{model}: n = {}, leaves = {}, non-leaves = {}, max degree = {}",
        t.n(),
        t.leaves(),
        t.count_degree_at_least(2),
        t.max_degree()
    );
    if let Some(report) = growth.snapshots.iter().filter_map(|s| s.invariants.as_ref()).find(|r| !r.is_clean()) {
        let (check, msg) = report.first_violation().expect("report is not clean");
        return Err(Error::InvariantViolation(format!("{}: {msg}", check.name())).into());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(
    plan_path: &Path,
    threads: usize,
    out: Option<PathBuf>,
    seed: Option<u64>,
    replicas: Option<u32>,
    track: Option<Vec<u32>>,
) -> anyhow::Result<ExitCode> {
    let mut plan = ExperimentPlan::load(plan_path).with_context(|| format!("reading plan {}", plan_path.display()))?;
    if let Some(o) = out {
        plan.out_dir = o;
    }
    if let Some(s) = seed {
        plan.master_seed = s;
    }
    if let Some(r) = replicas {
        plan.replicas = r;
    }
    if let Some(t) = track {
        plan.tracked_vertices = t;
    }
    let result = run(&plan, threads)?;
    println!("wrote {} snapshot files to {}", result.snapshot_files.len(), plan.out_dir.display());
    if let Some(last) = result.aggregates.last() {
        if let Some(lf) = last.leaf_fraction {
            println!("n = {}: leaf fraction {:.6} ± {:.6}", last.n, lf.mean, lf.std_err);
        }
    }
    if let Some(fit) = &result.non_leaf_fit {
        println!(
            "X^{{>=2}} exponent {:.4} (r^2 = {:.4}) over n in [{}, {}]",
            fit.pooled.slope, fit.pooled.r_squared, fit.pooled.n_range.0, fit.pooled.n_range.1
        );
    }
    if let Some(inv) = &result.invariants {
        println!("invariant checks: {}, violations: {}", inv.checks(), inv.violations());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_couple(n: u32, pairs: u64, seed: u64) -> anyhow::Result<ExitCode> {
    let mut rng = RngStream::new(seed, 0);
    let pair = CoupledPair::grow(n, &mut rng)?;
    let dist = verify_distance_bound_auto(&pair, pairs, &mut rng)?;
    let leaves = verify_leaf_proximity(&pair)?;
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "distance": dist, "leaves": leaves }))?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(
    model: ModelSpec,
    n: u32,
    stat: Option<&str>,
    replicas: Option<u64>,
    seed: u64,
    out: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    if stat.is_none() || out.is_some() {
        let atoms = oracle::enumerate(&model, n)?;
        let mut buf = Vec::new();
        oracle::write_table(&atoms, &mut buf)?;
        write_output(out.as_deref(), std::str::from_utf8(&buf)?)?;
    }
    let Some(stat) = stat else {
        if replicas.is_some() {
            bail!("--replicas needs --stat");
        }
        return Ok(ExitCode::SUCCESS);
    };
    let stat: TreeStatistic = stat.parse()?;
    match replicas {
        None => println!("{}", oracle::oracle_expectation(&model, n, stat)?),
        Some(r) => {
            let cmp = oracle::compare_many(&model, n, &[stat], r, seed)?.remove(0);
            println!("{}", cmp.exact);
            println!(
                "monte carlo: {:.6} ± {:.6} over {} trees, z = {:.2}",
                cmp.estimate.mean, cmp.estimate.std_err, cmp.estimate.samples, cmp.z
            );
            if !cmp.passed {
                return Err(Error::OracleMismatch(format!("{model}, n = {n}, {stat}: z = {:.2}", cmp.z)).into());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn snapshot_files(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<(u32, PathBuf)> = Vec::new();
            for entry in fs::read_dir(p).map_err(|e| Error::Io { path: p.clone(), source: e })? {
                let path = entry?.path();
                let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
                if let Some(idx) = name.strip_prefix("snapshots_replica_").and_then(|s| s.strip_suffix(".csv")) {
                    if let Ok(i) = idx.parse() {
                        found.push((i, path));
                    }
                }
            }
            found.sort();
            files.extend(found.into_iter().map(|(_, p)| p));
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no snapshot files found");
    }
    Ok(files)
}

fn cmd_fit(inputs: &[PathBuf], column: &str, min_n: u64) -> anyhow::Result<ExitCode> {
    let mut series = Vec::new();
    for path in snapshot_files(inputs)? {
        let (cols, rows) = read_snapshot_csv(&path)?;
        let idx = |name: &str| {
            cols.iter().position(|c| c == name).with_context(|| format!("{}: no column `{name}`", path.display()))
        };
        let (n_col, v_col) = (idx("n")?, idx(column)?);
        let mut s = Vec::new();
        for row in &rows {
            let n: u64 = row[n_col].parse().with_context(|| format!("{}: bad n `{}`", path.display(), row[n_col]))?;
            if n < min_n || row[v_col].is_empty() {
                continue;
            }
            let v: f64 = row[v_col].parse().with_context(|| format!("{}: bad value `{}`", path.display(), row[v_col]))?;
            s.push((n, v));
        }
        series.push(s);
    }
    let fit = replica_exponent_fit(&series)?;
    println!(
        "slope {:.6} intercept {:.6} r^2 {:.6} over n in [{}, {}] ({} replicas)",
        fit.pooled.slope,
        fit.pooled.intercept,
        fit.pooled.r_squared,
        fit.pooled.n_range.0,
        fit.pooled.n_range.1,
        fit.per_replica.len()
    );
    for (i, f) in fit.per_replica.iter().enumerate() {
        println!("replica {i}: slope {:.6}", f.slope);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(path: &Path) -> anyhow::Result<ExitCode> {
    let tree = GrowthTree::load(path)?;
    tree.check_consistency()?;
    let report = check_all(&tree);
    for t in &report.tallies {
        println!("{:<32} checks {:>10}  violations {}", t.check.name(), t.checks, t.violations);
    }
    println!("n = {}: {} checks, {} violations", tree.n(), report.checks(), report.violations());
    if let Some((check, msg)) = report.first_violation() {
        return Err(Error::InvariantViolation(format!("{}: {msg}", check.name())).into());
    }
    Ok(ExitCode::SUCCESS)
}
