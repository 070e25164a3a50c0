//! Joint growth of a random friend tree and a uniform recursive tree.
//!
//! Both trees share the uniform vertex `V` drawn at every step: the recursive
//! tree attaches the newcomer to `V`, the friend tree to a uniform neighbour
//! of `V` in the friend tree. Under this construction friend-tree distances
//! are at most twice the recursive-tree distances, and every leaf of the
//! recursive tree is within distance one of a leaf of the friend tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::bfs_distances;
use crate::tree::{GrowthTree, Vertex};

/// Pairs are checked exhaustively below this size.
pub const EXHAUSTIVE_BELOW: u32 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoupledPair {
    pub rft: GrowthTree,
    pub urrt: GrowthTree,
}

impl CoupledPair {
    pub fn seed() -> Self {
        CoupledPair { rft: GrowthTree::seed(), urrt: GrowthTree::seed() }
    }

    pub fn n(&self) -> u32 {
        self.rft.n()
    }

    /// Adds vertex `n + 1` to both trees; returns `(W, V)`.
    pub fn step(&mut self, rng: &mut RngStream) -> (Vertex, Vertex) {
        let v = self.urrt.sample_uniform_vertex(rng);
        let w = self.rft.sample_uniform_neighbour(v, rng);
        self.rft.attach_unchecked(w);
        self.urrt.attach_unchecked(v);
        (w, v)
    }

    pub fn grow(n: u32, rng: &mut RngStream) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("coupled growth needs n >= 2, got {n}")));
        }
        let mut pair = CoupledPair {
            rft: GrowthTree::with_capacity(n as usize),
            urrt: GrowthTree::with_capacity(n as usize),
        };
        while pair.n() < n {
            pair.step(rng);
        }
        Ok(pair)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceBoundReport {
    pub n: u32,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub violations: u64,
    /// Largest `d_rft / d_urrt` over distinct checked pairs.
    pub max_ratio: f64,
}

fn check_pair(pair: &CoupledPair, i: Vertex, j: Vertex, report: &mut DistanceBoundReport) -> Result<()> {
    let d = pair.rft.distance_unchecked(i, j);
    let d_urrt = pair.urrt.distance_unchecked(i, j);
    report.pairs_checked += 1;
    if d > 2 * d_urrt {
        report.violations += 1;
        return Err(Error::CouplingViolation(format!(
            "d_rft({i}, {j}) = {d} > 2 * d_urrt({i}, {j}) = {}",
            2 * d_urrt
        )));
    }
    if d_urrt > 0 {
        report.max_ratio = report.max_ratio.max(d as f64 / d_urrt as f64);
    }
    Ok(())
}

/// Checks `d_rft(i, j) <= 2 d_urrt(i, j)` on `samples` uniform pairs.
pub fn verify_distance_bound(
    pair: &CoupledPair,
    samples: u64,
    rng: &mut RngStream,
) -> Result<DistanceBoundReport> {
    let mut report = DistanceBoundReport { n: pair.n(), ..Default::default() };
    for _ in 0..samples {
        let i = pair.rft.sample_uniform_vertex(rng);
        let j = pair.rft.sample_uniform_vertex(rng);
        check_pair(pair, i, j, &mut report)?;
    }
    Ok(report)
}

/// Checks the distance bound on every unordered pair.
pub fn verify_distance_bound_exhaustive(pair: &CoupledPair) -> Result<DistanceBoundReport> {
    let mut report = DistanceBoundReport { n: pair.n(), exhaustive: true, ..Default::default() };
    for i in 1..=pair.n() {
        for j in i..=pair.n() {
            check_pair(pair, i, j, &mut report)?;
        }
    }
    Ok(report)
}

/// Exhaustive below [`EXHAUSTIVE_BELOW`], sampled otherwise.
pub fn verify_distance_bound_auto(
    pair: &CoupledPair,
    samples: u64,
    rng: &mut RngStream,
) -> Result<DistanceBoundReport> {
    if pair.n() < EXHAUSTIVE_BELOW {
        verify_distance_bound_exhaustive(pair)
    } else {
        verify_distance_bound(pair, samples, rng)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafProximityReport {
    pub n: u32,
    pub urrt_leaves: u64,
    /// URRT leaves that are not leaves of the friend tree.
    pub non_leaf_in_rft: u64,
    pub violations: u64,
    pub max_distance: u32,
}

/// Checks that every URRT leaf is within distance one of a friend-tree leaf.
pub fn verify_leaf_proximity(pair: &CoupledPair) -> Result<LeafProximityReport> {
    let rft = &pair.rft;
    let dist = bfs_distances(rft, rft.vertices().filter(|&v| rft.is_leaf(v)));
    let mut report = LeafProximityReport { n: pair.n(), ..Default::default() };
    let mut first = None;
    for l in pair.urrt.vertices().filter(|&v| pair.urrt.is_leaf(v)) {
        report.urrt_leaves += 1;
        let d = dist[l as usize];
        if d > 0 {
            report.non_leaf_in_rft += 1;
        }
        report.max_distance = report.max_distance.max(d);
        if d > 1 {
            report.violations += 1;
            first.get_or_insert(l);
        }
    }
    match first {
        Some(l) => Err(Error::CouplingViolation(format!(
            "URRT leaf {l} is at distance {} from the nearest friend-tree leaf",
            dist[l as usize]
        ))),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::attach_distribution;

    #[test]
    fn first_step_from_seed() {
        for seed in 0..20 {
            let mut pair = CoupledPair::seed();
            let mut rng = RngStream::new(seed, 0);
            let (w, v) = pair.step(&mut rng);
            assert_eq!(w, 3 - v, "W is the other endpoint of the seed edge");
            assert_eq!(pair.urrt.parent(3), Some(v));
            assert_eq!(pair.rft.parent(3), Some(w));
        }
    }

    #[test]
    fn sizes_after_many_steps() {
        let mut pair = CoupledPair::seed();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..10_000 {
            pair.step(&mut rng);
        }
        assert_eq!(pair.rft.n(), 10_002);
        assert_eq!(pair.urrt.n(), 10_002);
        assert_eq!(rng.position(), 20_000);
    }

    #[test]
    fn deterministic() {
        let a = CoupledPair::grow(5000, &mut RngStream::new(9, 4)).unwrap();
        let b = CoupledPair::grow(5000, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn n3_exhaustive() {
        for seed in 0..10 {
            let pair = CoupledPair::grow(3, &mut RngStream::new(seed, 0)).unwrap();
            let r = verify_distance_bound_exhaustive(&pair).unwrap();
            assert_eq!(r.pairs_checked, 6);
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn seed_pair_leaves() {
        let r = verify_leaf_proximity(&CoupledPair::seed()).unwrap();
        assert_eq!(r.urrt_leaves, 2);
        assert_eq!(r.max_distance, 0);
    }

    #[test]
    fn guarantees_on_many_small_pairs() {
        for seed in 0..200 {
            let pair = CoupledPair::grow(2 + (seed as u32 % 300), &mut RngStream::new(seed, 1)).unwrap();
            verify_distance_bound_exhaustive(&pair).unwrap();
            let r = verify_leaf_proximity(&pair).unwrap();
            assert!(r.max_distance <= 1);
        }
    }

    #[test]
    fn non_rft_leaves_have_leaf_neighbours() {
        let pair = CoupledPair::grow(20_000, &mut RngStream::new(5, 0)).unwrap();
        let r = verify_leaf_proximity(&pair).unwrap();
        assert!(r.non_leaf_in_rft > 0, "the case split is exercised");
        for l in pair.urrt.vertices().filter(|&v| pair.urrt.is_leaf(v)) {
            if !pair.rft.is_leaf(l) {
                assert!(pair.rft.neighbours(l).any(|u| pair.rft.is_leaf(u)), "vertex {l}");
            }
        }
    }

    #[test]
    fn broken_pair_is_detected() {
        // a path against a star: d_rft(1, 6) = 5 > 2, and vertex 3 is two steps from any path leaf
        let rft = GrowthTree::from_parents(&[1, 2, 3, 4, 5]).unwrap();
        let urrt = GrowthTree::from_parents(&[1, 1, 1, 1, 1]).unwrap();
        let pair = CoupledPair { rft, urrt };
        assert!(matches!(
            verify_distance_bound_exhaustive(&pair),
            Err(Error::CouplingViolation(_))
        ));
        assert!(matches!(verify_leaf_proximity(&pair), Err(Error::CouplingViolation(_))));
    }

    #[test]
    fn marginal_of_rft_component_is_friend_law() {
        // one coupled step from a fixed pair: W must follow the friend-tree law
        let mut rng = RngStream::new(17, 0);
        let base = CoupledPair::grow(30, &mut rng).unwrap();
        let pi = attach_distribution(&base.rft);
        let trials = 400_000u64;
        let mut counts = vec![0u64; 31];
        for _ in 0..trials {
            let mut p = base.clone();
            let (w, _) = p.step(&mut rng);
            counts[w as usize] += 1;
        }
        for v in 1..=30 {
            let p = pi.prob(v);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let f = counts[v as usize] as f64 / trials as f64;
            assert!((f - p).abs() <= 4.0 * sigma + 1e-12, "vertex {v}: {f} vs {p}");
        }
    }
}
