//! Deterministic inequalities that every tree must satisfy.
//!
//! Each check compares exactly computed conditional expectations of the next
//! friend-tree step (see [`crate::stats`]) with bounds written in terms of the
//! degree census. They hold for every tree, whatever model grew it, so a single
//! violation means a bug in the statistics or in the tree bookkeeping.

use serde::{Deserialize, Serialize};

use crate::stats::{
    attach_distribution, degree_ratio_sum, drifts, expected_next_leaf_count_with,
    expected_next_scaled_y, min_edge_cover, refined_census_all,
};
use crate::tree::GrowthTree;

/// Relative slack for floating-point comparisons: `lhs <= rhs + TOL * (1 + |rhs|)`.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `Σ_w π(w) = 1`.
    AttachProbabilitySum,
    /// `E[ΔX^{≥2}] ≤ (X^{≥2} + X^{≥3}) / 2n` for `n ≥ 4`.
    LeafDriftUpper,
    /// `E[ΔX^{≥2}] ≥ X^{≥3} / 3n` for `n ≥ 3`.
    LeafDriftLower,
    /// `E[ΔX^{≥3}] ≤ 4 X^2 / 3n` for `n ≥ 5`.
    DegreeThreeDriftUpper,
    /// `X^k = X^{k,≤k} + X^{k,>k}`.
    RefinedPartition,
    /// `X^{≥k+1} ≥ X^{k,>k}`.
    RefinedBound,
    /// `E[ΔX^{≥k+1}] ≥ (k-1)/(kn) · X^{k,≤k}` for `k ≥ 2`, `n ≥ 3`.
    RefinedDriftLower,
    /// `E[ΔX^{≥k+1}] ≤ (k - 1/2)/n · X^k` for `n ≥ k + 2`.
    DegreeDriftUpper,
    /// Minimum edge cover is at least half the number of non-leaves.
    EdgeCoverHalfNonLeaves,
    /// `E[(L_{n+1}(v) - 1)/(n+1) | T_n] ≥ (L_n(v) - 1)/n` for every `v`.
    LeafCountSubmartingale,
    /// `E[(n+1) Y_{n+1} | T_n] ≤ (n+2) Y_n + 1`.
    AttachDegreeSupermartingale,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::AttachProbabilitySum,
        Check::LeafDriftUpper,
        Check::LeafDriftLower,
        Check::DegreeThreeDriftUpper,
        Check::RefinedPartition,
        Check::RefinedBound,
        Check::RefinedDriftLower,
        Check::DegreeDriftUpper,
        Check::EdgeCoverHalfNonLeaves,
        Check::LeafCountSubmartingale,
        Check::AttachDegreeSupermartingale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::AttachProbabilitySum => "attach_probability_sum",
            Check::LeafDriftUpper => "leaf_drift_upper",
            Check::LeafDriftLower => "leaf_drift_lower",
            Check::DegreeThreeDriftUpper => "degree_three_drift_upper",
            Check::RefinedPartition => "refined_partition",
            Check::RefinedBound => "refined_bound",
            Check::RefinedDriftLower => "refined_drift_lower",
            Check::DegreeDriftUpper => "degree_drift_upper",
            Check::EdgeCoverHalfNonLeaves => "edge_cover_half_non_leaves",
            Check::LeafCountSubmartingale => "leaf_count_submartingale",
            Check::AttachDegreeSupermartingale => "attach_degree_supermartingale",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub check: Check,
    pub checks: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub tallies: Vec<Tally>,
}

impl Default for InvariantReport {
    fn default() -> Self {
        InvariantReport {
            tallies: Check::ALL
                .iter()
                .map(|&check| Tally {
                    check,
                    checks: 0,
                    violations: 0,
                    first_violation: None,
                })
                .collect(),
        }
    }
}

impl InvariantReport {
    fn tally(&mut self, check: Check) -> &mut Tally {
        let i = Check::ALL.iter().position(|&c| c == check).unwrap();
        &mut self.tallies[i]
    }

    fn record(&mut self, check: Check, ok: bool, detail: impl FnOnce() -> String) {
        let t = self.tally(check);
        t.checks += 1;
        if !ok {
            t.violations += 1;
            if t.first_violation.is_none() {
                t.first_violation = Some(detail());
            }
        }
    }

    fn leq(&mut self, check: Check, lhs: f64, rhs: f64, ctx: impl FnOnce() -> String) {
        let ok = lhs <= rhs + TOL * (1.0 + rhs.abs());
        self.record(check, ok, || format!("{}: {lhs} > {rhs}", ctx()));
    }

    pub fn get(&self, check: Check) -> &Tally {
        &self.tallies[Check::ALL.iter().position(|&c| c == check).unwrap()]
    }

    pub fn checks(&self) -> u64 {
        self.tallies.iter().map(|t| t.checks).sum()
    }

    pub fn violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.violations() == 0
    }

    pub fn merge(&mut self, other: &InvariantReport) {
        for (mine, theirs) in self.tallies.iter_mut().zip(&other.tallies) {
            mine.checks += theirs.checks;
            mine.violations += theirs.violations;
            if mine.first_violation.is_none() {
                mine.first_violation.clone_from(&theirs.first_violation);
            }
        }
    }

    /// First recorded violation, if any.
    pub fn first_violation(&self) -> Option<(Check, &str)> {
        self.tallies
            .iter()
            .find_map(|t| t.first_violation.as_deref().map(|m| (t.check, m)))
    }
}

/// Runs every check on `tree`.
pub fn check_all(tree: &GrowthTree) -> InvariantReport {
    let mut r = InvariantReport::default();
    let n = tree.n() as u64;
    let nf = n as f64;
    let census = tree.census();
    let x = |k: u32| census.get(k as usize).copied().unwrap_or(0);
    let max_deg = tree.max_degree();
    // geq[k] = X^{>=k}, for k in 0..=max_deg + 1
    let mut geq = vec![0u64; census.len() + 1];
    for k in (0..census.len()).rev() {
        geq[k] = geq[k + 1] + census[k];
    }
    let x_geq = |k: u32| geq.get(k as usize).copied().unwrap_or(0);

    let pi = attach_distribution(tree);
    let total = pi.total();
    r.record(Check::AttachProbabilitySum, (total - 1.0).abs() <= TOL, || {
        format!("n = {n}: Σπ = {total}")
    });

    let drift = drifts(tree);
    let drift_at = |k: u32| drift.get(k as usize).copied().unwrap_or(0.0);

    if n >= 4 {
        let rhs = (x_geq(2) + x_geq(3)) as f64 / (2.0 * nf);
        r.leq(Check::LeafDriftUpper, drift_at(2), rhs, || format!("n = {n}"));
    }
    if n >= 3 {
        let rhs = x_geq(3) as f64 / (3.0 * nf);
        r.leq(Check::LeafDriftLower, rhs, drift_at(2), || format!("n = {n}"));
    }
    if n >= 5 {
        let rhs = 4.0 * x(2) as f64 / (3.0 * nf);
        r.leq(Check::DegreeThreeDriftUpper, drift_at(3), rhs, || format!("n = {n}"));
    }

    let refined = refined_census_all(tree);
    for k in 1..=max_deg {
        let c = refined[k as usize];
        r.record(
            Check::RefinedPartition,
            c.at_most_one + c.at_least_two == x(k),
            || format!("n = {n}, k = {k}: {} + {} != {}", c.at_most_one, c.at_least_two, x(k)),
        );
        r.record(Check::RefinedBound, x_geq(k + 1) >= c.at_least_two, || {
            format!("n = {n}, k = {k}: X^(>=k+1) = {} < {}", x_geq(k + 1), c.at_least_two)
        });
        if k >= 2 && n >= 3 {
            let kf = k as f64;
            let rhs = (kf - 1.0) / (kf * nf) * c.at_most_one as f64;
            r.leq(Check::RefinedDriftLower, rhs, drift_at(k + 1), || {
                format!("n = {n}, k = {k}")
            });
        }
        if n >= k as u64 + 2 {
            let rhs = (k as f64 - 0.5) / nf * x(k) as f64;
            r.leq(Check::DegreeDriftUpper, drift_at(k + 1), rhs, || {
                format!("n = {n}, k = {k}")
            });
        }
    }

    let cover = min_edge_cover(tree);
    r.record(Check::EdgeCoverHalfNonLeaves, 2 * cover >= x_geq(2), || {
        format!("n = {n}: cover {cover} < {}/2", x_geq(2))
    });

    for v in tree.vertices() {
        let l = tree.leaf_count(v) as f64;
        let next = expected_next_leaf_count_with(tree, &pi, v);
        r.leq(
            Check::LeafCountSubmartingale,
            (l - 1.0) / nf,
            (next - 1.0) / (nf + 1.0),
            || format!("n = {n}, v = {v}"),
        );
    }

    let scaled_y = degree_ratio_sum(tree);
    let y = scaled_y / nf;
    r.leq(
        Check::AttachDegreeSupermartingale,
        expected_next_scaled_y(tree),
        (nf + 2.0) * y + 1.0,
        || format!("n = {n}"),
    );

    r
}
