//! Exact statistics of a frozen tree.
//!
//! Everything here is a deterministic function of the tree. Conditional
//! expectations of the next friend-tree step are computed from the closed-form
//! attachment law `π(w) = (1/n) Σ_{u ~ w} 1/deg(u)`, not by simulation.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{self, InvariantReport};
use crate::rng::RngStream;
use crate::tree::{GrowthTree, Vertex};

const UNREACHED: u32 = u32::MAX;

/// `P(W_n = w | T_n)` for the one-step friend tree, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct AttachDistribution {
    probs: Vec<f64>,
}

impl AttachDistribution {
    #[inline]
    pub fn prob(&self, v: Vertex) -> f64 {
        self.probs[v as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.probs.iter().copied().enumerate().skip(1).map(|(v, p)| (v as Vertex, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probabilities for labels `1..=n` in order.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs[1..]
    }
}

/// `Σ_{u ~ v} 1/deg(u)` for every `v`, i.e. `n · π(v)`.
pub(crate) fn inverse_degree_sums(tree: &GrowthTree) -> Vec<f64> {
    let mut s = vec![0.0; tree.n() as usize + 1];
    for (c, p) in tree.edges() {
        s[p as usize] += 1.0 / tree.degree(c) as f64;
        s[c as usize] += 1.0 / tree.degree(p) as f64;
    }
    s
}

pub fn attach_distribution(tree: &GrowthTree) -> AttachDistribution {
    let n = tree.n() as f64;
    let mut probs = inverse_degree_sums(tree);
    probs.iter_mut().for_each(|x| *x /= n);
    AttachDistribution { probs }
}

/// `E[ΔX^{≥k} | T_n]` for every `k` in `0..=max_degree + 1`.
///
/// The count of vertices of degree at least `k` grows by one exactly when the
/// new vertex attaches to a vertex of degree `k - 1`. For `k <= 1` the change
/// is always one (the new leaf).
pub fn drifts(tree: &GrowthTree) -> Vec<f64> {
    let pi = attach_distribution(tree);
    let mut out = vec![0.0; tree.max_degree() as usize + 2];
    for (w, p) in pi.iter() {
        out[tree.degree(w) as usize + 1] += p;
    }
    out[0] = 1.0;
    out[1] = 1.0;
    out
}

/// `E[ΔX^{≥k} | T_n]` for a single `k >= 2`.
pub fn drift_x_geq(tree: &GrowthTree, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("drift is defined for k >= 2, got {k}")));
    }
    Ok(drifts(tree).get(k as usize).copied().unwrap_or(0.0))
}

/// Degree-`k` vertices split by how many neighbours have degree at least `k + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedCount {
    /// At most one such neighbour.
    pub at_most_one: u64,
    /// At least two such neighbours.
    pub at_least_two: u64,
}

/// Refined counts for every `k` in `0..=max_degree`.
pub fn refined_census_all(tree: &GrowthTree) -> Vec<RefinedCount> {
    let mut out = vec![RefinedCount::default(); tree.max_degree() as usize + 1];
    for v in tree.vertices() {
        let d = tree.degree(v);
        let higher = tree.neighbours(v).filter(|&u| tree.degree(u) > d).take(2).count();
        let slot = &mut out[d as usize];
        if higher <= 1 {
            slot.at_most_one += 1;
        } else {
            slot.at_least_two += 1;
        }
    }
    out
}

pub fn refined_census(tree: &GrowthTree, k: u32) -> Result<RefinedCount> {
    if k < 1 {
        return Err(Error::invalid("refined census needs k >= 1"));
    }
    Ok(refined_census_all(tree)
        .get(k as usize)
        .copied()
        .unwrap_or_default())
}

/// `Y_n = E[deg(W_n) | T_n] = (1/n) Σ_i (1/deg i) Σ_{j ~ i} deg j`.
pub fn expected_y(tree: &GrowthTree) -> f64 {
    degree_ratio_sum(tree) / tree.n() as f64
}

/// `Σ_i Σ_{j ~ i} deg(j) / deg(i)`, which is `n · Y_n`.
pub(crate) fn degree_ratio_sum(tree: &GrowthTree) -> f64 {
    tree.edges()
        .map(|(c, p)| {
            let (dc, dp) = (tree.degree(c) as f64, tree.degree(p) as f64);
            dc / dp + dp / dc
        })
        .sum()
}

/// `E[(n+1) Y_{n+1} | T_n]`, summing the exact change of `Σ_i Σ_{j~i} deg j / deg i`
/// over every possible attachment target weighted by `π`.
pub fn expected_next_scaled_y(tree: &GrowthTree) -> f64 {
    let n = tree.n() as f64;
    let inv = inverse_degree_sums(tree);
    let mut nbr_deg = vec![0.0f64; tree.n() as usize + 1];
    for (c, p) in tree.edges() {
        nbr_deg[p as usize] += tree.degree(c) as f64;
        nbr_deg[c as usize] += tree.degree(p) as f64;
    }
    let mut expected_change = 0.0;
    for w in tree.vertices() {
        let d = tree.degree(w) as f64;
        let b = inv[w as usize];
        let delta = 1.0 / (d + 1.0) - (1.0 / d - 1.0 / (d + 1.0)) * nbr_deg[w as usize]
            + d
            + 1.0
            + b;
        expected_change += (b / n) * delta;
    }
    degree_ratio_sum(tree) + expected_change
}

/// `E[L_{n+1}(v) | T_n]` for the one-step friend tree.
pub fn expected_next_leaf_count(tree: &GrowthTree, v: Vertex) -> Result<f64> {
    if !tree.contains(v) {
        return Err(Error::VertexOutOfRange { vertex: v as u64, n: tree.n() as u64 });
    }
    let pi = attach_distribution(tree);
    Ok(expected_next_leaf_count_with(tree, &pi, v))
}

pub(crate) fn expected_next_leaf_count_with(
    tree: &GrowthTree,
    pi: &AttachDistribution,
    v: Vertex,
) -> f64 {
    let n = tree.n() as f64;
    let l = tree.leaf_count(v) as f64;
    let d = tree.degree(v) as f64;
    // gains a leaf when chosen, loses one when the walk goes v -> leaf neighbour
    l - l / (n * d) + pi.prob(v)
}

/// Breadth-first distances from a set of sources.
pub fn bfs_distances(tree: &GrowthTree, sources: impl IntoIterator<Item = Vertex>) -> Vec<u32> {
    let mut dist = vec![UNREACHED; tree.n() as usize + 1];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s as usize] == UNREACHED {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for w in tree.neighbours(u) {
            if dist[w as usize] == UNREACHED {
                dist[w as usize] = du + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

fn farthest(dist: &[u32]) -> (Vertex, u32) {
    dist.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &d)| d != UNREACHED)
        .fold((1, 0), |best, (v, &d)| if d > best.1 { (v as Vertex, d) } else { best })
}

/// Exact diameter by two breadth-first sweeps.
pub fn diameter(tree: &GrowthTree) -> u32 {
    let (a, _) = farthest(&bfs_distances(tree, [1]));
    farthest(&bfs_distances(tree, [a])).1
}

/// Largest distance from any vertex to its nearest leaf.
pub fn leaf_depth(tree: &GrowthTree) -> u32 {
    let dist = bfs_distances(tree, tree.vertices().filter(|&v| tree.is_leaf(v)));
    farthest(&dist).1
}

/// Largest distance from a leaf to its nearest vertex of degree at least 3,
/// or `None` when the tree is a path.
pub fn branchpoint_depth(tree: &GrowthTree) -> Option<u32> {
    if tree.max_degree() < 3 {
        return None;
    }
    let dist = bfs_distances(tree, tree.vertices().filter(|&v| tree.degree(v) >= 3));
    tree.vertices()
        .filter(|&v| tree.is_leaf(v))
        .map(|v| dist[v as usize])
        .max()
}

/// Minimum number of vertices touching every edge.
///
/// Children always carry larger labels than their parent, so a sweep in
/// decreasing label order visits every subtree before its root.
pub fn min_edge_cover(tree: &GrowthTree) -> u64 {
    let n = tree.n() as usize;
    // with[v]: v selected; without[v]: v not selected (all child edges covered by children)
    let mut with = vec![1u64; n + 1];
    let mut without = vec![0u64; n + 1];
    for v in (2..=n).rev() {
        let p = tree.parent(v as Vertex).unwrap() as usize;
        with[p] += with[v].min(without[v]);
        without[p] += with[v];
    }
    with[1].min(without[1])
}

/// Size of the subtree hanging from the largest-labelled neighbour of `v`.
pub fn youngest_subtree_size(tree: &GrowthTree, v: Vertex) -> Result<u64> {
    if !tree.contains(v) {
        return Err(Error::VertexOutOfRange { vertex: v as u64, n: tree.n() as u64 });
    }
    let Some(&youngest) = tree.children(v).last() else {
        return Err(Error::Undefined(format!("vertex {v} has no neighbour with a larger label")));
    };
    let mut size = 0u64;
    let mut stack = vec![youngest];
    while let Some(u) = stack.pop() {
        size += 1;
        stack.extend_from_slice(tree.children(u));
    }
    Ok(size)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// `pairs[d]`: sampled pairs `(U, V)` at distance `d`.
    pub pairs: Vec<u64>,
    /// `from_root[d]`: samples `U` at distance `d` from vertex 1.
    pub from_root: Vec<u64>,
}

impl DistanceHistogram {
    fn bump(h: &mut Vec<u64>, d: u32) {
        let d = d as usize;
        if h.len() <= d {
            h.resize(d + 1, 0);
        }
        h[d] += 1;
    }

    pub fn samples(&self) -> u64 {
        self.pairs.iter().sum()
    }

    pub fn pair_fraction(&self, d: usize) -> f64 {
        self.pairs.get(d).copied().unwrap_or(0) as f64 / self.samples().max(1) as f64
    }

    pub fn root_fraction_at_most(&self, d: usize) -> f64 {
        let total: u64 = self.from_root.iter().sum();
        let within: u64 = self.from_root.iter().take(d + 1).sum();
        within as f64 / total.max(1) as f64
    }
}

/// Distances between `m` independent uniform pairs, and from vertex 1 to the first of each.
pub fn typical_distance_sample(
    tree: &GrowthTree,
    rng: &mut RngStream,
    m: u64,
) -> Result<DistanceHistogram> {
    if m == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut h = DistanceHistogram::default();
    for _ in 0..m {
        let u = tree.sample_uniform_vertex(rng);
        let v = tree.sample_uniform_vertex(rng);
        DistanceHistogram::bump(&mut h.pairs, tree.distance_unchecked(u, v));
        DistanceHistogram::bump(&mut h.from_root, tree.depth(u));
    }
    Ok(h)
}

/// Which snapshot statistics to compute. The degree census is always included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub degree_cap: u32,
    pub drift: bool,
    pub y: bool,
    pub diameter: bool,
    pub leaf_depth: bool,
    pub branchpoint_depth: bool,
    pub edge_cover: bool,
    pub invariants: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            degree_cap: 64,
            drift: true,
            y: true,
            diameter: true,
            leaf_depth: true,
            branchpoint_depth: true,
            edge_cover: true,
            invariants: true,
        }
    }
}

impl StatsConfig {
    pub const TOGGLES: [&'static str; 7] = [
        "drift",
        "y",
        "diameter",
        "leaf_depth",
        "branchpoint_depth",
        "edge_cover",
        "invariants",
    ];

    pub fn census_only() -> Self {
        StatsConfig {
            drift: false,
            y: false,
            diameter: false,
            leaf_depth: false,
            branchpoint_depth: false,
            edge_cover: false,
            invariants: false,
            ..Default::default()
        }
    }

    /// `all`, `census`, or a comma-separated subset of [`Self::TOGGLES`].
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => return Ok(Self::default()),
            "census" | "" => return Ok(Self::census_only()),
            _ => {}
        }
        let mut cfg = Self::census_only();
        for item in s.split(',').map(str::trim) {
            let flag = match item {
                "census" => continue,
                "drift" => &mut cfg.drift,
                "y" => &mut cfg.y,
                "diameter" | "diam" => &mut cfg.diameter,
                "leaf_depth" => &mut cfg.leaf_depth,
                "branchpoint_depth" => &mut cfg.branchpoint_depth,
                "edge_cover" => &mut cfg.edge_cover,
                "invariants" => &mut cfg.invariants,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown statistic `{other}` (expected one of {})",
                        Self::TOGGLES.join(", ")
                    )))
                }
            };
            *flag = true;
        }
        Ok(cfg)
    }
}

/// All statistics of one tree at one size.
///
/// Optional fields are `None` when disabled in the [`StatsConfig`];
/// `branchpoint_depth` is also `None` when the tree has no vertex of degree 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSnapshot {
    pub n: u64,
    pub degree_cap: u32,
    /// Exact degree histogram, `degree_histogram[k] = X^k`.
    pub degree_histogram: Vec<u64>,
    pub max_degree: u32,
    pub leaf_fraction: f64,
    /// `refined[k] = (X^{k,≤k}, X^{k,>k})` for `k` in `0..=max_degree`.
    pub refined: Vec<RefinedCount>,
    /// `drift[k] = E[ΔX^{≥k} | T_n]` for `k` in `0..=max_degree + 1`.
    pub drift: Option<Vec<f64>>,
    pub y: Option<f64>,
    pub diameter: Option<u32>,
    pub leaf_depth: Option<u32>,
    pub branchpoint_depth: Option<u32>,
    pub min_edge_cover: Option<u64>,
    pub invariants: Option<InvariantReport>,
}

impl StatSnapshot {
    pub fn compute(tree: &GrowthTree, cfg: &StatsConfig) -> Self {
        let census = tree.census().to_vec();
        StatSnapshot {
            n: tree.n() as u64,
            degree_cap: cfg.degree_cap.max(2),
            max_degree: tree.max_degree(),
            leaf_fraction: census[1] as f64 / tree.n() as f64,
            degree_histogram: census,
            refined: refined_census_all(tree),
            drift: cfg.drift.then(|| drifts(tree)),
            y: cfg.y.then(|| expected_y(tree)),
            diameter: cfg.diameter.then(|| diameter(tree)),
            leaf_depth: cfg.leaf_depth.then(|| leaf_depth(tree)),
            branchpoint_depth: if cfg.branchpoint_depth { branchpoint_depth(tree) } else { None },
            min_edge_cover: cfg.edge_cover.then(|| min_edge_cover(tree)),
            invariants: cfg.invariants.then(|| invariants::check_all(tree)),
        }
    }

    /// `X^k`.
    pub fn x(&self, k: u32) -> u64 {
        self.degree_histogram.get(k as usize).copied().unwrap_or(0)
    }

    /// `X^{≥k}`.
    pub fn x_geq(&self, k: u32) -> u64 {
        let k = (k as usize).max(1);
        self.degree_histogram.get(k..).map_or(0, |s| s.iter().sum())
    }

    pub fn refined(&self, k: u32) -> RefinedCount {
        self.refined.get(k as usize).copied().unwrap_or_default()
    }

    pub fn drift_geq(&self, k: u32) -> Option<f64> {
        self.drift.as_ref().map(|d| d.get(k as usize).copied().unwrap_or(0.0))
    }

    /// CSV column names for a given degree cap, in output order.
    pub fn csv_columns(cap: u32) -> Vec<String> {
        let mut cols: Vec<String> = [
            "n",
            "leaf_fraction",
            "max_degree",
            "y",
            "diameter",
            "leaf_depth",
            "branchpoint_depth",
            "min_edge_cover",
            "invariant_checks",
            "invariant_violations",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend((1..=cap).map(|k| format!("x_{k}")));
        cols.push(format!("x_over_{cap}"));
        cols.extend((1..=cap).map(|k| format!("x_geq_{k}")));
        cols.extend((1..=cap).map(|k| format!("x_le_{k}")));
        cols.extend((1..=cap).map(|k| format!("x_gt_{k}")));
        cols.extend((2..=cap).map(|k| format!("drift_geq_{k}")));
        cols
    }

    pub fn csv_header(&self) -> String {
        Self::csv_columns(self.degree_cap).join(",")
    }

    /// One CSV row in [`Self::csv_columns`] order. Disabled statistics are empty fields.
    pub fn csv_row(&self) -> String {
        fn opt<T: std::fmt::Display>(out: &mut String, v: Option<T>) {
            if let Some(v) = v {
                let _ = write!(out, "{v}");
            }
            out.push(',');
        }
        let cap = self.degree_cap;
        let mut out = String::new();
        let _ = write!(out, "{},{},{},", self.n, self.leaf_fraction, self.max_degree);
        opt(&mut out, self.y);
        opt(&mut out, self.diameter);
        opt(&mut out, self.leaf_depth);
        opt(&mut out, self.branchpoint_depth);
        opt(&mut out, self.min_edge_cover);
        opt(&mut out, self.invariants.as_ref().map(|r| r.checks()));
        opt(&mut out, self.invariants.as_ref().map(|r| r.violations()));
        for k in 1..=cap {
            let _ = write!(out, "{},", self.x(k));
        }
        let _ = write!(out, "{},", self.x_geq(cap + 1));
        for k in 1..=cap {
            let _ = write!(out, "{},", self.x_geq(k));
        }
        for k in 1..=cap {
            let _ = write!(out, "{},", self.refined(k).at_most_one);
        }
        for k in 1..=cap {
            let _ = write!(out, "{},", self.refined(k).at_least_two);
        }
        for k in 2..=cap {
            opt(&mut out, self.drift_geq(k));
        }
        out.pop();
        out
    }
}
