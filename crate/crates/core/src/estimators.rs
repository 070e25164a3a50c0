//! Finite-size estimators for the large-n behaviour of a growing tree:
//! degree trajectories of fixed vertices, power-law fits of census series,
//! survival of degree-k vertices, hub counts and normalized edge degrees.
//!
//! Limits such as `lim D_n(v) / n` cannot be observed; every quantity here
//! is the finite-n proxy (`D_n(v) / n` at the last snapshot, thresholds on
//! normalized degree, and so on).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{grow_into, ModelSpec, Observer};
use crate::rng::RngStream;
use crate::stats::StatSnapshot;
use crate::tree::{GrowthTree, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub n: u64,
    pub degree: u32,
    pub leaf_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vertex: Vertex,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// `D_n(v) / n` at the last sample.
    pub fn final_normalized_degree(&self) -> Option<f64> {
        self.samples.last().map(|s| s.degree as f64 / s.n as f64)
    }

    /// Max minus min of `D_n(v) / n` over samples with `n` within a factor 10
    /// of the last sample. Small values indicate a settled path.
    pub fn oscillation_last_decade(&self) -> Option<f64> {
        let last = self.samples.last()?.n;
        let (lo, hi) = self
            .samples
            .iter()
            .filter(|s| s.n * 10 >= last)
            .map(|s| s.degree as f64 / s.n as f64)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Some(hi - lo)
    }
}

/// Records `(n, D_n(v), L_n(v))` for a fixed set of vertices at every snapshot.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryTracker {
    trajectories: Vec<Trajectory>,
    /// Largest `|D - L| - X^{>=2}` seen; positive means the sandwich failed.
    sandwich_excess: i64,
}

impl TrajectoryTracker {
    /// Every label must exist by the first snapshot, i.e. lie in `1..=first_snapshot_n`.
    pub fn new(vertices: &[Vertex], first_snapshot_n: u64) -> Result<Self> {
        if let Some(&v) = vertices.iter().find(|&&v| v == 0 || v as u64 > first_snapshot_n) {
            return Err(Error::VertexOutOfRange { vertex: v as u64, n: first_snapshot_n });
        }
        Ok(TrajectoryTracker {
            trajectories: vertices.iter().map(|&vertex| Trajectory { vertex, samples: Vec::new() }).collect(),
            sandwich_excess: i64::MIN,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn into_trajectories(self) -> Vec<Trajectory> {
        self.trajectories
    }

    /// True when `|D_n(v) - L_n(v)| <= X^{>=2}_n` held at every recorded sample.
    pub fn sandwich_holds(&self) -> bool {
        self.sandwich_excess <= 0
    }
}

impl Observer for TrajectoryTracker {
    fn observe(&mut self, tree: &GrowthTree, snapshot: &StatSnapshot) {
        let non_leaves = tree.count_degree_at_least(2) as i64;
        for t in &mut self.trajectories {
            let v = t.vertex;
            let s = TrajectorySample { n: snapshot.n, degree: tree.degree(v), leaf_count: tree.leaf_count(v) };
            self.sandwich_excess =
                self.sandwich_excess.max((s.degree as i64 - s.leaf_count as i64).abs() - non_leaves);
            t.samples.push(s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (u64, u64),
}

/// Least-squares fit of `log(count)` against `log(n)`.
pub fn exponent_fit(series: &[(u64, f64)]) -> Result<FitResult> {
    if series.len() < 3 {
        return Err(Error::invalid(format!("exponent fit needs at least 3 points, got {}", series.len())));
    }
    if let Some(&(n, c)) = series.iter().find(|&&(n, c)| c.is_nan() || c <= 0.0 || n == 0) {
        return Err(Error::invalid(format!("exponent fit needs positive data, got ({n}, {c})")));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(n, c)| ((n as f64).ln(), c.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("exponent fit needs at least two distinct n"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let lo = series.iter().map(|p| p.0).min().unwrap_or(0);
    let hi = series.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(FitResult { slope, intercept: my - slope * mx, r_squared, n_range: (lo, hi) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaFit {
    /// Fit of the replica-averaged `log(count)`.
    pub pooled: FitResult,
    pub per_replica: Vec<FitResult>,
}

/// Averages `log(count)` across replicas at each `n`, then fits. All replicas
/// must share the same `n` values.
pub fn replica_exponent_fit(series: &[Vec<(u64, f64)>]) -> Result<ReplicaFit> {
    let first = series.first().ok_or_else(|| Error::invalid("no replicas to fit"))?;
    let mut per_replica = Vec::with_capacity(series.len());
    let mut log_sum = vec![0.0; first.len()];
    for s in series {
        if s.len() != first.len() || s.iter().zip(first).any(|(a, b)| a.0 != b.0) {
            return Err(Error::invalid("replica series have different snapshot sizes"));
        }
        per_replica.push(exponent_fit(s)?);
        for (acc, &(_, c)) in log_sum.iter_mut().zip(s) {
            *acc += c.ln();
        }
    }
    let k = series.len() as f64;
    let pooled: Vec<(u64, f64)> = first.iter().zip(&log_sum).map(|(&(n, _), &l)| (n, (l / k).exp())).collect();
    Ok(ReplicaFit { pooled: exponent_fit(&pooled)?, per_replica })
}

/// Degree-`k` vertices marked at `n0` and the fraction still at degree `k`
/// at each later checkpoint.
fn survival_replica(
    model: &ModelSpec,
    k: u32,
    n0: u32,
    checkpoints: &[u32],
    rng: &mut RngStream,
    tree: &mut GrowthTree,
) -> Result<Vec<f64>> {
    tree.reset();
    grow_into(tree, model, n0, rng);
    let marked: Vec<Vertex> = tree.vertices().filter(|&v| tree.degree(v) == k).collect();
    if marked.is_empty() {
        return Err(Error::Undefined(format!("no vertex of degree {k} at n = {n0}")));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        grow_into(tree, model, n, rng);
        let alive = marked.iter().filter(|&&v| tree.degree(v) == k).count();
        out.push(alive as f64 / marked.len() as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub k: u32,
    pub n0: u32,
    pub checkpoints: Vec<u32>,
    /// Mean surviving fraction at each checkpoint over the replicas used.
    pub mean: Vec<f64>,
    pub replicas_used: u32,
    pub warnings: Vec<String>,
}

/// Fraction of degree-`k` vertices at `n0` whose degree is still `k` at each
/// checkpoint, averaged over replicas `0..replicas` of `master_seed`.
/// Replicas with no degree-`k` vertex at `n0` are excluded with a warning.
pub fn survival_curve(
    model: &ModelSpec,
    k: u32,
    n0: u32,
    checkpoints: &[u32],
    replicas: u32,
    master_seed: u64,
) -> Result<SurvivalCurve> {
    model.validate()?;
    if k < 1 || n0 < 2 || replicas == 0 {
        return Err(Error::invalid("survival needs k >= 1, n0 >= 2 and at least one replica"));
    }
    if checkpoints.windows(2).any(|w| w[0] > w[1]) || checkpoints.first().is_some_and(|&c| c < n0) {
        return Err(Error::invalid("survival checkpoints must be sorted and >= n0"));
    }
    let mut tree = GrowthTree::with_capacity(checkpoints.last().copied().unwrap_or(n0) as usize);
    let mut sum = vec![0.0; checkpoints.len()];
    let mut used = 0;
    let mut warnings = Vec::new();
    for r in 0..replicas {
        let mut rng = RngStream::new(master_seed, r as u64);
        match survival_replica(model, k, n0, checkpoints, &mut rng, &mut tree) {
            Ok(fr) => {
                used += 1;
                sum.iter_mut().zip(fr).for_each(|(s, f)| *s += f);
            }
            Err(Error::Undefined(msg)) => warnings.push(format!("replica {r} excluded: {msg}")),
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::Undefined(format!("no replica had a vertex of degree {k} at n = {n0}")));
    }
    Ok(SurvivalCurve {
        k,
        n0,
        checkpoints: checkpoints.to_vec(),
        mean: sum.iter().map(|s| s / used as f64).collect(),
        replicas_used: used,
        warnings,
    })
}

/// Single-checkpoint form of [`survival_curve`].
pub fn survival_estimate(
    model: &ModelSpec,
    k: u32,
    n0: u32,
    n1: u32,
    replicas: u32,
    master_seed: u64,
) -> Result<f64> {
    Ok(survival_curve(model, k, n0, &[n1], replicas, master_seed)?.mean[0])
}

/// `#{v : D_n(v) / n > threshold}`.
pub fn hub_count(tree: &GrowthTree, threshold: f64) -> Result<u64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("hub threshold must lie in (0, 1), got {threshold}")));
    }
    let n = tree.n() as f64;
    Ok(tree.vertices().filter(|&v| tree.degree(v) as f64 / n > threshold).count() as u64)
}

/// Sum of `D_n(v) / n` over the `m` largest degrees.
pub fn top_degree_mass(tree: &GrowthTree, m: usize) -> f64 {
    let mut deg: Vec<u32> = tree.vertices().map(|v| tree.degree(v)).collect();
    let m = m.min(deg.len());
    if m == 0 {
        return 0.0;
    }
    deg.select_nth_unstable_by(m - 1, |a, b| b.cmp(a));
    deg[..m].iter().map(|&d| d as u64).sum::<u64>() as f64 / tree.n() as f64
}

pub const EDGE_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDegreeSummary {
    /// `min over edges {u, v}` of `(D_n(u) + D_n(v)) / n`.
    pub min: f64,
    /// Counts of per-edge normalized degree in `EDGE_HISTOGRAM_BINS` equal bins over `(0, 1]`.
    pub histogram: Vec<u64>,
}

fn edge_weight(tree: &GrowthTree, child: Vertex, parent: Vertex) -> f64 {
    (tree.degree(child) + tree.degree(parent)) as f64 / tree.n() as f64
}

/// Normalized edge degrees over the whole tree. Adjacent degrees sum to at
/// most `n`, so every value lies in `(0, 1]`.
pub fn edge_degree_minima(tree: &GrowthTree) -> EdgeDegreeSummary {
    let mut min = f64::INFINITY;
    let mut histogram = vec![0u64; EDGE_HISTOGRAM_BINS];
    for (c, p) in tree.edges() {
        let x = edge_weight(tree, c, p);
        min = min.min(x);
        let bin = ((x * EDGE_HISTOGRAM_BINS as f64).ceil() as usize).clamp(1, EDGE_HISTOGRAM_BINS) - 1;
        histogram[bin] += 1;
    }
    EdgeDegreeSummary { min, histogram }
}

/// Normalized degrees of the edges created before the tree had `before` vertices.
pub fn early_edge_degrees(tree: &GrowthTree, before: Vertex) -> Vec<f64> {
    tree.edges().filter(|&(c, _)| c <= before).map(|(c, p)| edge_weight(tree, c, p)).collect()
}
