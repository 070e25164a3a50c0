//! Exact distributions of small trees by enumerating every growth history.
//!
//! A growth history is identified by its parent sequence `(W_1, …, W_{n-1})`;
//! histories are not merged up to isomorphism, so every probability is the
//! exact product of per-step probabilities, carried as a big rational.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng::RngStream;
use crate::stats;
use crate::tree::{GrowthTree, Vertex};

/// Largest tree size the enumeration accepts.
pub const MAX_N: u32 = 8;
/// Largest size for the joint enumeration of the coupled pair.
pub const MAX_COUPLED_N: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeAtom {
    /// `parents[i]` is the parent of vertex `i + 2`.
    pub parents: Vec<Vertex>,
    pub probability: BigRational,
}

impl OutcomeAtom {
    pub fn tree(&self) -> GrowthTree {
        GrowthTree::from_parents(&self.parents).expect("atoms hold valid parent sequences")
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn model_probability(p: f64) -> Result<BigRational> {
    BigRational::from_float(p).ok_or_else(|| Error::InvalidModel(format!("p = {p} is not finite")))
}

/// Exact law of the attachment target under `model`, indexed by label.
pub fn step_law(model: &ModelSpec, tree: &GrowthTree) -> Result<Vec<BigRational>> {
    model.validate()?;
    let n = tree.n() as usize;
    let uniform = || {
        let mut v = vec![BigRational::zero(); n + 1];
        for x in &mut v[1..] {
            *x = ratio(1, n as u64);
        }
        v
    };
    let walk = |mut dist: Vec<BigRational>, steps: u32| {
        for _ in 0..steps {
            let mut next = vec![BigRational::zero(); n + 1];
            for u in tree.vertices() {
                let mass = &dist[u as usize];
                if mass.is_zero() {
                    continue;
                }
                let share = mass / BigInt::from(tree.degree(u));
                for w in tree.neighbours(u) {
                    next[w as usize] += &share;
                }
            }
            dist = next;
        }
        dist
    };
    Ok(match *model {
        ModelSpec::Friend { k } => walk(uniform(), k),
        ModelSpec::Urrt => uniform(),
        ModelSpec::Pa => {
            let total = 2 * (n as u64 - 1);
            let mut v = vec![BigRational::zero(); n + 1];
            for w in tree.vertices() {
                v[w as usize] = ratio(tree.degree(w) as u64, total);
            }
            v
        }
        ModelSpec::Redirect { p } => {
            let p = model_probability(p)?;
            let q = BigRational::one() - &p;
            let stay = uniform();
            let moved = walk(uniform(), 1);
            stay.iter().zip(&moved).map(|(a, b)| &p * a + &q * b).collect()
        }
    })
}

/// Every growth history of an `n`-vertex tree with its exact probability,
/// sorted by parent sequence.
pub fn enumerate(model: &ModelSpec, n: u32) -> Result<Vec<OutcomeAtom>> {
    model.validate()?;
    if !(2..=MAX_N).contains(&n) {
        return Err(Error::invalid(format!("enumeration needs 2 <= n <= {MAX_N}, got {n}")));
    }
    let mut level: BTreeMap<Vec<Vertex>, BigRational> = BTreeMap::new();
    level.insert(vec![1], BigRational::one());
    for _ in 2..n {
        let mut next = BTreeMap::new();
        for (parents, prob) in &level {
            let tree = GrowthTree::from_parents(parents)?;
            for (w, pw) in step_law(model, &tree)?.into_iter().enumerate().skip(1) {
                if pw.is_zero() {
                    continue;
                }
                let mut seq = parents.clone();
                seq.push(w as Vertex);
                *next.entry(seq).or_insert_with(BigRational::zero) += prob * pw;
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(parents, probability)| OutcomeAtom { parents, probability })
        .collect())
}

/// Statistics that can be evaluated exactly on a frozen tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeStatistic {
    Diameter,
    /// `X^1`.
    Leaves,
    /// `X^{≥2}`.
    NonLeaves,
    /// `X^{≥k}`.
    DegreeAtLeast(u32),
    LeafDepth,
    /// `E[deg(W_n) | T_n]`.
    Y,
    MinEdgeCover,
    MaxDegree,
    /// Indicator that the subtree of the youngest child of vertex 1 has at least `ℓ` vertices.
    YoungestSubtreeAtLeast(u64),
    /// `E[ΔX^{≥k} | T_n]` under the one-step friend tree.
    DriftAtLeast(u32),
}

impl TreeStatistic {
    /// Exact value. Everything is rational; `Y` and drifts are computed in
    /// rational arithmetic directly from degrees.
    pub fn exact(&self, tree: &GrowthTree) -> BigRational {
        let int = |x: u64| BigRational::from_integer(BigInt::from(x));
        match *self {
            TreeStatistic::Diameter => int(stats::diameter(tree) as u64),
            TreeStatistic::Leaves => int(tree.leaves()),
            TreeStatistic::NonLeaves => int(tree.count_degree_at_least(2)),
            TreeStatistic::DegreeAtLeast(k) => int(tree.count_degree_at_least(k)),
            TreeStatistic::LeafDepth => int(stats::leaf_depth(tree) as u64),
            TreeStatistic::Y => {
                let mut sum = BigRational::zero();
                for (c, p) in tree.edges() {
                    let (dc, dp) = (tree.degree(c) as u64, tree.degree(p) as u64);
                    sum += ratio(dc, dp) + ratio(dp, dc);
                }
                sum / BigInt::from(tree.n())
            }
            TreeStatistic::MinEdgeCover => int(stats::min_edge_cover(tree)),
            TreeStatistic::MaxDegree => int(tree.max_degree() as u64),
            TreeStatistic::YoungestSubtreeAtLeast(l) => {
                let size = stats::youngest_subtree_size(tree, 1).expect("vertex 1 always has a child");
                int((size >= l) as u64)
            }
            TreeStatistic::DriftAtLeast(k) => {
                let n = tree.n() as u64;
                let mut sum = BigRational::zero();
                for w in tree.vertices().filter(|&w| tree.degree(w) + 1 == k) {
                    for u in tree.neighbours(w) {
                        sum += ratio(1, n * tree.degree(u) as u64);
                    }
                }
                sum
            }
        }
    }

    /// Floating-point value through the production statistics code.
    pub fn value(&self, tree: &GrowthTree) -> f64 {
        match *self {
            TreeStatistic::Diameter => stats::diameter(tree) as f64,
            TreeStatistic::Leaves => tree.leaves() as f64,
            TreeStatistic::NonLeaves => tree.count_degree_at_least(2) as f64,
            TreeStatistic::DegreeAtLeast(k) => tree.count_degree_at_least(k) as f64,
            TreeStatistic::LeafDepth => stats::leaf_depth(tree) as f64,
            TreeStatistic::Y => stats::expected_y(tree),
            TreeStatistic::MinEdgeCover => stats::min_edge_cover(tree) as f64,
            TreeStatistic::MaxDegree => tree.max_degree() as f64,
            TreeStatistic::YoungestSubtreeAtLeast(l) => {
                (stats::youngest_subtree_size(tree, 1).expect("vertex 1 always has a child") >= l) as u8
                    as f64
            }
            TreeStatistic::DriftAtLeast(k) => {
                stats::drifts(tree).get(k as usize).copied().unwrap_or(0.0)
            }
        }
    }
}

impl fmt::Display for TreeStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeStatistic::Diameter => f.write_str("diam"),
            TreeStatistic::Leaves => f.write_str("leaves"),
            TreeStatistic::NonLeaves => f.write_str("nonleaves"),
            TreeStatistic::DegreeAtLeast(k) => write!(f, "x_geq:{k}"),
            TreeStatistic::LeafDepth => f.write_str("leaf_depth"),
            TreeStatistic::Y => f.write_str("y"),
            TreeStatistic::MinEdgeCover => f.write_str("edge_cover"),
            TreeStatistic::MaxDegree => f.write_str("max_degree"),
            TreeStatistic::YoungestSubtreeAtLeast(l) => write!(f, "youngest_geq:{l}"),
            TreeStatistic::DriftAtLeast(k) => write!(f, "drift_geq:{k}"),
        }
    }
}

impl FromStr for TreeStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<u64> {
            a.and_then(|a| a.parse().ok())
                .ok_or_else(|| Error::invalid(format!("statistic `{s}` needs a numeric argument")))
        };
        Ok(match name {
            "diam" | "diameter" => TreeStatistic::Diameter,
            "leaves" | "x1" => TreeStatistic::Leaves,
            "nonleaves" | "x_geq_2" => TreeStatistic::NonLeaves,
            "x_geq" => TreeStatistic::DegreeAtLeast(num(arg)? as u32),
            "leaf_depth" | "m" => TreeStatistic::LeafDepth,
            "y" => TreeStatistic::Y,
            "edge_cover" => TreeStatistic::MinEdgeCover,
            "max_degree" => TreeStatistic::MaxDegree,
            "youngest_geq" => TreeStatistic::YoungestSubtreeAtLeast(num(arg)?),
            "drift_geq" => TreeStatistic::DriftAtLeast(num(arg)? as u32),
            _ => return Err(Error::invalid(format!("unknown statistic `{s}`"))),
        })
    }
}

/// `Σ_atoms P(atom) · statistic(tree(atom))`, exactly.
pub fn oracle_expectation(model: &ModelSpec, n: u32, statistic: TreeStatistic) -> Result<BigRational> {
    Ok(enumerate(model, n)?
        .iter()
        .map(|a| &a.probability * statistic.exact(&a.tree()))
        .sum())
}

/// Exact probability that `event` holds for the `n`-vertex tree.
pub fn oracle_probability<F>(model: &ModelSpec, n: u32, event: F) -> Result<BigRational>
where
    F: Fn(&GrowthTree) -> bool,
{
    Ok(enumerate(model, n)?
        .iter()
        .filter(|a| event(&a.tree()))
        .map(|a| a.probability.clone())
        .sum())
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

/// Monte Carlo means of several statistics over independent `n`-vertex trees.
/// Replica `r` uses stream `r` of `master_seed`.
pub fn monte_carlo_means(
    model: &ModelSpec,
    n: u32,
    statistics: &[TreeStatistic],
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<MeanEstimate>> {
    model.validate()?;
    if n < 2 || replicas < 2 {
        return Err(Error::invalid("need n >= 2 and at least two replicas"));
    }
    let mut sums = vec![(0.0f64, 0.0f64); statistics.len()];
    let mut tree = GrowthTree::with_capacity(n as usize);
    // one long stream; replicas are consecutive blocks of draws
    let mut rng = RngStream::new(master_seed, 0);
    for _ in 0..replicas {
        tree.reset();
        crate::models::grow_into(&mut tree, model, n, &mut rng);
        for (s, stat) in sums.iter_mut().zip(statistics) {
            let x = stat.value(&tree);
            s.0 += x;
            s.1 += x * x;
        }
    }
    let r = replicas as f64;
    Ok(sums
        .into_iter()
        .map(|(s, ss)| {
            let mean = s / r;
            let var = ((ss - r * mean * mean) / (r - 1.0)).max(0.0);
            MeanEstimate { mean, std_err: (var / r).sqrt(), samples: replicas }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloComparison {
    pub model: ModelSpec,
    pub n: u32,
    pub statistic: TreeStatistic,
    pub exact: String,
    pub exact_value: f64,
    pub estimate: MeanEstimate,
    /// `|mean - exact| / std_err` (0 when both agree exactly).
    pub z: f64,
    pub passed: bool,
}

/// Agreement rule: within four standard errors, or exact agreement when the
/// statistic has no variance.
pub const Z_LIMIT: f64 = 4.0;

fn judge(model: &ModelSpec, n: u32, statistic: TreeStatistic, exact: &BigRational, est: MeanEstimate) -> MonteCarloComparison {
    let exact_value = to_f64(exact);
    let diff = (est.mean - exact_value).abs();
    let (z, passed) = if est.std_err > 0.0 {
        let z = diff / est.std_err;
        (z, z <= Z_LIMIT)
    } else {
        // a constant statistic: only floating-point rounding separates the two
        (0.0, diff <= 1e-9 * (1.0 + exact_value.abs()))
    };
    MonteCarloComparison {
        model: *model,
        n,
        statistic,
        exact: exact.to_string(),
        exact_value,
        estimate: est,
        z,
        passed,
    }
}

/// Compares Monte Carlo means against the enumeration for several statistics at once.
pub fn compare_many(
    model: &ModelSpec,
    n: u32,
    statistics: &[TreeStatistic],
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<MonteCarloComparison>> {
    let atoms = enumerate(model, n)?;
    let trees: Vec<GrowthTree> = atoms.iter().map(OutcomeAtom::tree).collect();
    let estimates = monte_carlo_means(model, n, statistics, replicas, master_seed)?;
    Ok(statistics
        .iter()
        .zip(estimates)
        .map(|(&stat, est)| {
            let exact: BigRational = atoms
                .iter()
                .zip(&trees)
                .map(|(a, t)| &a.probability * stat.exact(t))
                .sum();
            judge(model, n, stat, &exact, est)
        })
        .collect())
}

/// Monte Carlo mean of `statistic` must match the exact expectation within
/// four standard errors; a mismatch signals a simulator bug.
pub fn compare_to_monte_carlo(
    model: &ModelSpec,
    n: u32,
    statistic: TreeStatistic,
    replicas: u64,
    master_seed: u64,
) -> Result<MonteCarloComparison> {
    let cmp = compare_many(model, n, &[statistic], replicas, master_seed)?.remove(0);
    if cmp.passed {
        Ok(cmp)
    } else {
        Err(Error::OracleMismatch(format!(
            "{model}, n = {n}, {statistic}: mean {} ± {} vs exact {} (z = {:.2})",
            cmp.estimate.mean, cmp.estimate.std_err, cmp.exact, cmp.z
        )))
    }
}

/// Writes `parents,probability` rows, parents space-separated and
/// probabilities as exact fractions.
pub fn write_table<W: Write>(atoms: &[OutcomeAtom], mut w: W) -> std::io::Result<()> {
    writeln!(w, "parents,probability")?;
    for a in atoms {
        let parents: Vec<String> = a.parents.iter().map(|p| p.to_string()).collect();
        writeln!(w, "{},{}", parents.join(" "), a.probability)?;
    }
    w.flush()
}

/// Reads a table written by [`write_table`].
pub fn read_table(s: &str) -> Result<Vec<OutcomeAtom>> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, "parents,probability")) => {}
        _ => return Err(Error::Parse { line: 1, message: "expected `parents,probability` header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse { line: i + 1, message: format!("{m}: `{line}`") };
        let (parents, prob) = line.split_once(',').ok_or_else(|| err("missing comma"))?;
        let parents = parents
            .split_ascii_whitespace()
            .map(|p| p.parse::<Vertex>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| err("bad parent"))?;
        let probability: BigRational = prob.trim().parse().map_err(|_| err("bad probability"))?;
        out.push(OutcomeAtom { parents, probability });
    }
    Ok(out)
}

/// One joint history of the coupled friend tree / recursive tree pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledAtom {
    pub rft_parents: Vec<Vertex>,
    pub urrt_parents: Vec<Vertex>,
    pub probability: BigRational,
}

/// Exact joint law of the coupled pair at size `n <= MAX_COUPLED_N`.
pub fn enumerate_coupled(n: u32) -> Result<Vec<CoupledAtom>> {
    if !(2..=MAX_COUPLED_N).contains(&n) {
        return Err(Error::invalid(format!(
            "coupled enumeration needs 2 <= n <= {MAX_COUPLED_N}, got {n}"
        )));
    }
    type Key = (Vec<Vertex>, Vec<Vertex>);
    let mut level: BTreeMap<Key, BigRational> = BTreeMap::new();
    level.insert((vec![1], vec![1]), BigRational::one());
    for m in 2..n {
        let mut next: BTreeMap<Key, BigRational> = BTreeMap::new();
        for ((rp, up), prob) in &level {
            let rft = GrowthTree::from_parents(rp)?;
            for v in 1..=m {
                for w in rft.neighbours(v) {
                    let p = prob * ratio(1, m as u64 * rft.degree(v) as u64);
                    let mut rp2 = rp.clone();
                    rp2.push(w);
                    let mut up2 = up.clone();
                    up2.push(v);
                    *next.entry((rp2, up2)).or_insert_with(BigRational::zero) += p;
                }
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|((rft_parents, urrt_parents), probability)| CoupledAtom {
            rft_parents,
            urrt_parents,
            probability,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    const MODELS: [ModelSpec; 5] = [
        ModelSpec::Friend { k: 1 },
        ModelSpec::Friend { k: 2 },
        ModelSpec::Redirect { p: 0.5 },
        ModelSpec::Urrt,
        ModelSpec::Pa,
    ];

    #[test]
    fn friend_n3_two_atoms() {
        let atoms = enumerate(&ModelSpec::friend(), 3).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].parents, vec![1, 1]);
        assert_eq!(atoms[1].parents, vec![1, 2]);
        assert!(atoms.iter().all(|a| a.probability == q(1, 2)));
    }

    #[test]
    fn urrt_n3_two_atoms() {
        let atoms = enumerate(&ModelSpec::Urrt, 3).unwrap();
        assert_eq!(atoms.len(), 2);
        assert!(atoms.iter().all(|a| a.probability == q(1, 2)));
    }

    #[test]
    fn friend_n4_diameter_three_has_probability_one_third() {
        let p = oracle_probability(&ModelSpec::friend(), 4, |t| stats::diameter(t) == 3).unwrap();
        assert_eq!(p, q(1, 3));
        // independent hand count: from the 3-path, only V = centre (prob 1/3)
        // sends W to an end vertex and extends the path
        let e = oracle_expectation(&ModelSpec::friend(), 4, TreeStatistic::Diameter).unwrap();
        assert_eq!(e, q(7, 3));
    }

    #[test]
    fn friend_n4_expected_nonleaves() {
        let e = oracle_expectation(&ModelSpec::friend(), 4, TreeStatistic::NonLeaves).unwrap();
        assert_eq!(e, q(4, 3));
    }

    #[test]
    fn deterministic_small_diameter() {
        for model in MODELS {
            let e = oracle_expectation(&model, 3, TreeStatistic::Diameter).unwrap();
            assert_eq!(e, q(2, 1), "{model}");
        }
    }

    #[test]
    fn youngest_subtree_law_n3() {
        let e = oracle_expectation(&ModelSpec::Urrt, 3, TreeStatistic::YoungestSubtreeAtLeast(2)).unwrap();
        assert_eq!(e, q(1, 2));
    }

    #[test]
    fn youngest_subtree_law_exact_up_to_eight() {
        // P(|subtree of youngest child of 1| >= l) = 1/l for l < n; the subtree excludes vertex 1
        for n in 2..=MAX_N {
            let e = oracle_expectation(&ModelSpec::Urrt, n, TreeStatistic::YoungestSubtreeAtLeast(n as u64)).unwrap();
            assert!(e.is_zero());
            for l in 1..n as u64 {
                let e = oracle_expectation(&ModelSpec::Urrt, n, TreeStatistic::YoungestSubtreeAtLeast(l)).unwrap();
                assert_eq!(e, q(1, l as i64), "n = {n}, l = {l}");
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        for model in MODELS {
            for n in 2..=MAX_N {
                if matches!(model, ModelSpec::Friend { k: 2 }) && n == MAX_N {
                    continue; // covered below n = 8 and slow in rational arithmetic
                }
                let atoms = enumerate(&model, n).unwrap();
                let total: BigRational = atoms.iter().map(|a| a.probability.clone()).sum();
                assert_eq!(total, BigRational::one(), "{model}, n = {n}");
                for a in &atoms {
                    assert_eq!(a.parents.len(), n as usize - 1);
                    for (i, &w) in a.parents.iter().enumerate() {
                        assert!(w >= 1 && w as usize <= i + 1);
                    }
                }
            }
        }
    }

    #[test]
    fn urrt_atoms_are_all_recursive_trees() {
        let atoms = enumerate(&ModelSpec::Urrt, 6).unwrap();
        assert_eq!(atoms.len(), 120);
        assert!(atoms.iter().all(|a| a.probability == q(1, 120)));
    }

    #[test]
    fn enumeration_bounds() {
        assert!(enumerate(&ModelSpec::friend(), 9).is_err());
        assert!(enumerate(&ModelSpec::friend(), 1).is_err());
        assert!(enumerate(&ModelSpec::Friend { k: 0 }, 4).is_err());
    }

    #[test]
    fn step_law_matches_attach_distribution() {
        let t = GrowthTree::from_parents(&[1, 1, 2, 2, 3, 1]).unwrap();
        let exact = step_law(&ModelSpec::friend(), &t).unwrap();
        let pi = stats::attach_distribution(&t);
        for v in t.vertices() {
            assert!((to_f64(&exact[v as usize]) - pi.prob(v)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_y_matches_float_y() {
        for a in enumerate(&ModelSpec::friend(), 7).unwrap() {
            let t = a.tree();
            let exact = to_f64(&TreeStatistic::Y.exact(&t));
            assert!((exact - stats::expected_y(&t)).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_consistency_between_levels() {
        // E[X^{≥2}_4] - E[X^{≥2}_3] equals the average exact drift over the n = 3 atoms
        let model = ModelSpec::friend();
        for n in 3..=6 {
            let lhs = oracle_expectation(&model, n + 1, TreeStatistic::NonLeaves).unwrap()
                - oracle_expectation(&model, n, TreeStatistic::NonLeaves).unwrap();
            let rhs = oracle_expectation(&model, n, TreeStatistic::DriftAtLeast(2)).unwrap();
            assert_eq!(lhs, rhs, "n = {n}");
            let float: f64 = enumerate(&model, n)
                .unwrap()
                .iter()
                .map(|a| to_f64(&a.probability) * stats::drift_x_geq(&a.tree(), 2).unwrap())
                .sum();
            assert!((float - to_f64(&rhs)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_round_trip() {
        let atoms = enumerate(&ModelSpec::friend(), 5).unwrap();
        let mut buf = Vec::new();
        write_table(&atoms, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("parents,probability\n1 1 1 1,"));
        assert_eq!(read_table(&text).unwrap(), atoms);
    }

    #[test]
    fn coupled_marginals_match_model_laws() {
        for n in 3..=MAX_COUPLED_N {
            let joint = enumerate_coupled(n).unwrap();
            let mut rft: BTreeMap<Vec<Vertex>, BigRational> = BTreeMap::new();
            let mut urrt: BTreeMap<Vec<Vertex>, BigRational> = BTreeMap::new();
            for a in &joint {
                *rft.entry(a.rft_parents.clone()).or_insert_with(BigRational::zero) += &a.probability;
                *urrt.entry(a.urrt_parents.clone()).or_insert_with(BigRational::zero) += &a.probability;
            }
            let friend: BTreeMap<_, _> = enumerate(&ModelSpec::friend(), n)
                .unwrap()
                .into_iter()
                .map(|a| (a.parents, a.probability))
                .collect();
            let uniform: BTreeMap<_, _> = enumerate(&ModelSpec::Urrt, n)
                .unwrap()
                .into_iter()
                .map(|a| (a.parents, a.probability))
                .collect();
            assert_eq!(rft, friend, "n = {n}");
            assert_eq!(urrt, uniform, "n = {n}");
        }
    }

    #[test]
    fn coupled_guarantees_hold_on_every_joint_history() {
        use crate::coupling::{verify_distance_bound_exhaustive, verify_leaf_proximity, CoupledPair};
        for a in enumerate_coupled(MAX_COUPLED_N).unwrap() {
            let pair = CoupledPair {
                rft: GrowthTree::from_parents(&a.rft_parents).unwrap(),
                urrt: GrowthTree::from_parents(&a.urrt_parents).unwrap(),
            };
            verify_distance_bound_exhaustive(&pair).unwrap();
            verify_leaf_proximity(&pair).unwrap();
        }
    }

    #[test]
    fn monte_carlo_agrees_on_small_cases() {
        let stats = [TreeStatistic::Diameter, TreeStatistic::Leaves, TreeStatistic::Y];
        for model in MODELS {
            for cmp in compare_many(&model, 5, &stats, 20_000, 1).unwrap() {
                assert!(cmp.passed, "{cmp:?}");
            }
        }
    }

    #[test]
    fn deterministic_statistic_needs_exact_match() {
        let cmp = compare_to_monte_carlo(&ModelSpec::friend(), 3, TreeStatistic::Diameter, 100, 0).unwrap();
        assert_eq!(cmp.estimate.std_err, 0.0);
        assert!(cmp.passed);
    }

    #[test]
    fn statistic_parsing() {
        for s in ["diam", "leaves", "nonleaves", "leaf_depth", "y", "youngest_geq:3", "x_geq:3", "drift_geq:2"] {
            let stat: TreeStatistic = s.parse().unwrap();
            let again: TreeStatistic = stat.to_string().parse().unwrap();
            assert_eq!(stat, again);
        }
        assert!("youngest_geq".parse::<TreeStatistic>().is_err());
        assert!("bogus".parse::<TreeStatistic>().is_err());
    }
}
