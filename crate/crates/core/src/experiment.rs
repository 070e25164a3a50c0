//! Plan files, replica-parallel runs and on-disk results.
//!
//! A plan is a flat TOML document:
//!
//! ```toml
//! model = "friend"        # friend | redirect | urrt | pa
//! k = 1                   # walk length for friend
//! # p = 0.5               # redirect probability
//! n_target = 100000
//! schedule = "geometric:128:2"   # or "1000,10000,100000"
//! replicas = 4
//! master_seed = 42
//! track = [1, 2, 3]
//! stats = "all"           # all | census | comma-separated toggles
//! degree_cap = 64         # census columns x_1 .. x_64
//! out_dir = "out"
//! ```
//!
//! Running a plan writes `snapshots_replica_<i>.csv` per replica,
//! `result.json` and `manifest.json` into `out_dir`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    edge_degree_minima, hub_count, replica_exponent_fit, top_degree_mass, ReplicaFit, Trajectory,
    TrajectoryTracker,
};
use crate::invariants::InvariantReport;
use crate::models::{grow, ModelSpec, Observer};
use crate::rng::RngStream;
use crate::schedule::Schedule;
use crate::stats::{StatSnapshot, StatsConfig};
use crate::tree::{GrowthTree, Vertex};

pub const CSV_SCHEMA: &str = "# rft-snapshot v1";
pub const HUB_THRESHOLD: f64 = 0.001;
pub const TOP_DEGREES: usize = 100;

/// The on-disk form of a plan. Every key is a scalar or a flat list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    n_target: u32,
    #[serde(default = "default_schedule")]
    schedule: String,
    #[serde(default = "default_replicas")]
    replicas: u32,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    track: Vec<Vertex>,
    #[serde(default = "default_stats")]
    stats: String,
    #[serde(default = "default_degree_cap")]
    degree_cap: u32,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
}

fn default_schedule() -> String {
    "geometric:128:2".into()
}
fn default_replicas() -> u32 {
    1
}
fn default_stats() -> String {
    "all".into()
}
fn default_degree_cap() -> u32 {
    StatsConfig::default().degree_cap
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: ModelSpec,
    pub n_target: u32,
    pub schedule: Schedule,
    pub replicas: u32,
    pub master_seed: u64,
    pub tracked_vertices: Vec<Vertex>,
    pub stats: StatsConfig,
    pub out_dir: PathBuf,
}

impl ExperimentPlan {
    pub fn new(model: ModelSpec, n_target: u32) -> Self {
        ExperimentPlan {
            model,
            n_target,
            schedule: Schedule::default(),
            replicas: 1,
            master_seed: 0,
            tracked_vertices: Vec::new(),
            stats: StatsConfig::default(),
            out_dir: default_out_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.schedule.validate()?;
        if self.n_target < 2 {
            return Err(Error::invalid(format!("n_target must be >= 2, got {}", self.n_target)));
        }
        if self.stats.degree_cap < 2 {
            return Err(Error::invalid("degree_cap must be >= 2"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be >= 1"));
        }
        let first = self.first_snapshot()?;
        if let Some(&v) = self.tracked_vertices.iter().find(|&&v| v == 0 || v as u64 > first) {
            return Err(Error::invalid(format!(
                "tracked vertex {v} does not exist at the first snapshot (n = {first})"
            )));
        }
        Ok(())
    }

    fn first_snapshot(&self) -> Result<u64> {
        Ok(self.schedule.points(self.n_target as u64)?[0])
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(s).map_err(|e| {
            let line = e.span().map(|r| s[..r.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })?;
        let field = |name: &str, e: Error| Error::Parse { line: 0, message: format!("field `{name}`: {e}") };
        let plan = ExperimentPlan {
            model: ModelSpec::from_parts(&file.model, file.k, file.p).map_err(|e| field("model", e))?,
            n_target: file.n_target,
            schedule: Schedule::parse(&file.schedule).map_err(|e| field("schedule", e))?,
            replicas: file.replicas,
            master_seed: file.master_seed,
            tracked_vertices: file.track,
            stats: StatsConfig {
                degree_cap: file.degree_cap,
                ..StatsConfig::parse(&file.stats).map_err(|e| field("stats", e))?
            },
            out_dir: file.out_dir,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// The plan in the flat file format; parses back to an equal plan.
    pub fn to_toml_string(&self) -> String {
        let (model, k, p) = match self.model {
            ModelSpec::Friend { k } => ("friend", Some(k), None),
            ModelSpec::Redirect { p } => ("redirect", None, Some(p)),
            ModelSpec::Urrt => ("urrt", None, None),
            ModelSpec::Pa => ("pa", None, None),
        };
        let schedule = match &self.schedule {
            Schedule::Geometric { n0, ratio } => format!("geometric:{n0}:{ratio}"),
            Schedule::Explicit { points } => {
                points.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
            }
        };
        let s = &self.stats;
        let mut toggles: Vec<&str> = Vec::new();
        for (on, name) in [
            (s.drift, "drift"),
            (s.y, "y"),
            (s.diameter, "diameter"),
            (s.leaf_depth, "leaf_depth"),
            (s.branchpoint_depth, "branchpoint_depth"),
            (s.edge_cover, "edge_cover"),
            (s.invariants, "invariants"),
        ] {
            if on {
                toggles.push(name);
            }
        }
        let file = PlanFile {
            model: model.into(),
            k,
            p,
            n_target: self.n_target,
            schedule,
            replicas: self.replicas,
            master_seed: self.master_seed,
            track: self.tracked_vertices.clone(),
            stats: if toggles.is_empty() { "census".into() } else { toggles.join(",") },
            degree_cap: s.degree_cap,
            out_dir: self.out_dir.clone(),
        };
        toml::to_string(&file).expect("plan serializes")
    }

    pub fn csv_path(&self, replica: u32) -> PathBuf {
        self.out_dir.join(format!("snapshots_replica_{replica}.csv"))
    }
}

/// Stops recording at the first snapshot with an invariant violation and
/// keeps a frozen copy of the tree at that moment.
#[derive(Default)]
struct ViolationCatcher {
    found: Option<(u64, String, String)>,
}

impl Observer for ViolationCatcher {
    fn observe(&mut self, tree: &GrowthTree, snapshot: &StatSnapshot) {
        if self.found.is_some() {
            return;
        }
        if let Some(report) = &snapshot.invariants {
            if let Some((check, msg)) = report.first_violation() {
                self.found = Some((snapshot.n, format!("{}: {msg}", check.name()), tree.to_frozen_string()));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: u32,
    pub final_n: u64,
    pub hub_count: u64,
    pub hub_threshold: f64,
    pub min_edge_degree: f64,
    pub top_degree_mass: f64,
    pub trajectories: Vec<TrajectorySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub vertex: Vertex,
    pub final_normalized_degree: Option<f64>,
    pub oscillation_last_decade: Option<f64>,
}

struct ReplicaOutput {
    csv: String,
    snapshots: Vec<StatSnapshot>,
    summary: ReplicaSummary,
    trajectories: Vec<Trajectory>,
}

fn run_replica(plan: &ExperimentPlan, replica: u32) -> Result<ReplicaOutput> {
    let mut rng = RngStream::new(plan.master_seed, replica as u64);
    let mut tracker = TrajectoryTracker::new(&plan.tracked_vertices, plan.first_snapshot()?)?;
    let mut catcher = ViolationCatcher::default();
    let growth = grow(
        &plan.model,
        plan.n_target,
        &mut rng,
        &plan.schedule,
        &plan.stats,
        &mut [&mut tracker, &mut catcher],
    )?;
    if let Some((n, msg, frozen)) = catcher.found {
        let path = plan.out_dir.join(format!("violation_replica_{replica}_n{n}.tree"));
        fs::create_dir_all(&plan.out_dir).map_err(|e| Error::io(&plan.out_dir, e))?;
        fs::write(&path, frozen).map_err(|e| Error::io(&path, e))?;
        return Err(Error::InvariantViolation(format!(
            "replica {replica} at n = {n}: {msg} (tree dumped to {})",
            path.display()
        )));
    }

    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "{CSV_SCHEMA} model={} replica={replica} master_seed={}",
        plan.model.label(),
        plan.master_seed
    );
    csv.push_str(&StatSnapshot::csv_columns(plan.stats.degree_cap).join(","));
    csv.push('\n');
    for s in &growth.snapshots {
        csv.push_str(&s.csv_row());
        csv.push('\n');
    }

    let tree = &growth.tree;
    let trajectories = tracker.into_trajectories();
    let summary = ReplicaSummary {
        replica,
        final_n: tree.n() as u64,
        hub_count: hub_count(tree, HUB_THRESHOLD)?,
        hub_threshold: HUB_THRESHOLD,
        min_edge_degree: edge_degree_minima(tree).min,
        top_degree_mass: top_degree_mass(tree, TOP_DEGREES),
        trajectories: trajectories
            .iter()
            .map(|t| TrajectorySummary {
                vertex: t.vertex,
                final_normalized_degree: t.final_normalized_degree(),
                oscillation_last_decade: t.oscillation_last_decade(),
            })
            .collect(),
    };
    Ok(ReplicaOutput { csv, snapshots: growth.snapshots, summary, trajectories })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std_err: f64,
    pub count: u32,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Option<MeanStd> {
        if xs.is_empty() {
            return None;
        }
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
        Some(MeanStd { mean, std_err: (var / m).sqrt(), count: xs.len() as u32 })
    }
}

/// Replica averages at one snapshot size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: u64,
    pub leaf_fraction: Option<MeanStd>,
    pub max_degree: Option<MeanStd>,
    pub non_leaf_fraction: Option<MeanStd>,
    pub y: Option<MeanStd>,
    pub diameter: Option<MeanStd>,
    pub leaf_depth: Option<MeanStd>,
    pub branchpoint_depth: Option<MeanStd>,
    pub min_edge_cover: Option<MeanStd>,
}

fn aggregate(outputs: &[ReplicaOutput]) -> Vec<AggregateRow> {
    let rows = outputs[0].snapshots.len();
    (0..rows)
        .map(|i| {
            let col = |f: &dyn Fn(&StatSnapshot) -> Option<f64>| {
                let xs: Vec<f64> = outputs.iter().filter_map(|o| f(&o.snapshots[i])).collect();
                MeanStd::of(&xs)
            };
            AggregateRow {
                n: outputs[0].snapshots[i].n,
                leaf_fraction: col(&|s| Some(s.leaf_fraction)),
                max_degree: col(&|s| Some(s.max_degree as f64)),
                non_leaf_fraction: col(&|s| Some(s.x_geq(2) as f64 / s.n as f64)),
                y: col(&|s| s.y),
                diameter: col(&|s| s.diameter.map(f64::from)),
                leaf_depth: col(&|s| s.leaf_depth.map(f64::from)),
                branchpoint_depth: col(&|s| s.branchpoint_depth.map(f64::from)),
                min_edge_cover: col(&|s| s.min_edge_cover.map(|c| c as f64)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: ModelSpec,
    pub n_target: u32,
    pub replicas: u32,
    pub master_seed: u64,
    /// Relative to the plan's `out_dir`.
    pub snapshot_files: Vec<PathBuf>,
    pub aggregates: Vec<AggregateRow>,
    /// Power-law fit of `X^{>=2}` over the snapshot sizes; absent with fewer than 3 usable sizes.
    pub non_leaf_fit: Option<ReplicaFit>,
    pub invariants: Option<InvariantReport>,
    pub replica_summaries: Vec<ReplicaSummary>,
    pub trajectories: Vec<Vec<Trajectory>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub csv_schema: String,
    pub plan: ExperimentPlan,
    /// The plan in file form; `experiment` on this text reproduces the run.
    pub plan_toml: String,
}

fn non_leaf_fit(outputs: &[ReplicaOutput]) -> Option<ReplicaFit> {
    let series: Vec<Vec<(u64, f64)>> = outputs
        .iter()
        .map(|o| o.snapshots.iter().filter(|s| s.n >= 8).map(|s| (s.n, s.x_geq(2) as f64)).collect())
        .collect();
    if series[0].len() < 3 {
        return None;
    }
    replica_exponent_fit(&series).ok()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs every replica on a pool of `threads` workers and writes the outputs.
/// Results are merged in replica order, so files do not depend on `threads`.
pub fn run(plan: &ExperimentPlan, threads: usize) -> Result<ExperimentResult> {
    plan.validate()?;
    fs::create_dir_all(&plan.out_dir).map_err(|e| Error::io(&plan.out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outputs: Vec<ReplicaOutput> = pool.install(|| {
        (0..plan.replicas).into_par_iter().map(|r| run_replica(plan, r)).collect::<Result<Vec<_>>>()
    })?;

    let mut snapshot_files = Vec::with_capacity(outputs.len());
    for (r, o) in outputs.iter().enumerate() {
        let path = plan.csv_path(r as u32);
        write_file(&path, &o.csv)?;
        snapshot_files.push(PathBuf::from(path.file_name().expect("csv path has a file name")));
    }

    let mut invariants: Option<InvariantReport> = None;
    for s in outputs.iter().flat_map(|o| &o.snapshots) {
        if let Some(r) = &s.invariants {
            invariants.get_or_insert_with(InvariantReport::default).merge(r);
        }
    }

    let result = ExperimentResult {
        model: plan.model,
        n_target: plan.n_target,
        replicas: plan.replicas,
        master_seed: plan.master_seed,
        snapshot_files,
        aggregates: aggregate(&outputs),
        non_leaf_fit: non_leaf_fit(&outputs),
        invariants,
        replica_summaries: outputs.iter().map(|o| o.summary.clone()).collect(),
        trajectories: outputs.into_iter().map(|o| o.trajectories).collect(),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        csv_schema: CSV_SCHEMA.trim_start_matches("# ").into(),
        plan: plan.clone(),
        plan_toml: plan.to_toml_string(),
    };
    write_file(&plan.out_dir.join("result.json"), &to_json(&result))?;
    write_file(&plan.out_dir.join("manifest.json"), &to_json(&manifest))?;
    Ok(result)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("result serializes") + "\n"
}

/// Reads a snapshot CSV written by [`run`]: the column names and the rows as
/// raw fields. Unknown trailing columns are kept.
pub fn read_snapshot_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing CSV header".into() })?;
    let cols: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, l) in lines {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() < cols.len() {
            return Err(Error::Parse { line: i + 1, message: format!("expected {} fields, got {}", cols.len(), row.len()) });
        }
        rows.push(row);
    }
    Ok((cols, rows))
}
