//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! Floors and bands marked "pilot" were calibrated on 30 friend trees at
//! n = 10^6 (master seeds 1000..1030, disjoint from the seeds used here) and
//! then frozen.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rft_core::coupling::{
    verify_distance_bound, verify_distance_bound_exhaustive, verify_leaf_proximity, CoupledPair,
};
use rft_core::estimators::{hub_count, replica_exponent_fit};
use rft_core::experiment::{run, ExperimentPlan};
use rft_core::models::grow_into;
use rft_core::oracle::{self, compare_many, TreeStatistic};
use rft_core::stats::{diameter, typical_distance_sample, youngest_subtree_size};
use rft_core::{grow, Check, GrowthTree, InvariantReport, ModelSpec, RngStream, Schedule, StatsConfig};

/// Agreement with exact values, in standard errors.
const ORACLE_Z: f64 = 4.0;
const DRIFT_BUDGET: Duration = Duration::from_secs(120);
const EXPONENT_BUDGET: Duration = Duration::from_secs(30 * 60);
const EXPONENT_WINDOW: (f64, f64) = (0.101, 0.914);
const CONJECTURED_EXPONENT: f64 = 0.566;
const DIAMETER_BAND: (f64, f64) = (0.8, 4.0 * std::f64::consts::E);
/// pilot: observed 0.38..0.72
const LEAF_DEPTH_BAND: (f64, f64) = (0.2, 2.0);
/// pilot: smallest of 30 was 0.085
const DISTANCE_TWO_FLOOR: f64 = 0.02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ln_ratio(n: u64) -> f64 {
    let l = (n as f64).ln();
    l / l.ln()
}

fn drift_suite() -> Outcome {
    const CHECKS: [Check; 8] = [
        Check::LeafDriftUpper,
        Check::LeafDriftLower,
        Check::DegreeThreeDriftUpper,
        Check::RefinedPartition,
        Check::RefinedBound,
        Check::RefinedDriftLower,
        Check::DegreeDriftUpper,
        Check::AttachProbabilitySum,
    ];
    let start = Instant::now();
    let schedule = Schedule::Geometric { n0: 8, ratio: 1.5 };
    let cfg = StatsConfig { invariants: true, ..StatsConfig::census_only() };
    let mut total = InvariantReport::default();
    let mut snapshots = 0;
    for seed in 1..=50 {
        let g = grow(&ModelSpec::friend(), 100_000, &mut RngStream::new(seed, 0), &schedule, &cfg, &mut []).unwrap();
        for s in &g.snapshots {
            total.merge(s.invariants.as_ref().unwrap());
            snapshots += 1;
        }
    }
    let elapsed = start.elapsed();
    let checks: u64 = CHECKS.iter().map(|&c| total.get(c).checks).sum();
    let violations: u64 = CHECKS.iter().map(|&c| total.get(c).violations).sum();
    let all_exercised = CHECKS.iter().all(|&c| total.get(c).checks > 0);
    outcome(
        violations == 0 && total.is_clean() && all_exercised && elapsed < DRIFT_BUDGET,
        format!(
            "50 runs to n=1e5, {snapshots} snapshots, {checks} drift/census checks, {violations} violations \
             ({} over all checks), {:.1}s",
            total.violations(),
            elapsed.as_secs_f64()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    const REPLICAS: u64 = 1_000_000;
    let models = [
        ModelSpec::friend(),
        ModelSpec::Friend { k: 2 },
        ModelSpec::Redirect { p: 0.5 },
        ModelSpec::Urrt,
        ModelSpec::Pa,
    ];
    let stats = [
        TreeStatistic::Diameter,
        TreeStatistic::Leaves,
        TreeStatistic::NonLeaves,
        TreeStatistic::LeafDepth,
        TreeStatistic::Y,
    ];
    let mut compared = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (i, model) in models.iter().enumerate() {
        for n in 3..=6 {
            for c in compare_many(model, n, &stats, REPLICAS, 200 + 10 * i as u64 + n as u64).unwrap() {
                compared += 1;
                worst = worst.max(c.z);
                if !c.passed {
                    failures.push(format!("{model} n={n} {}: z={:.2}", c.statistic, c.z));
                }
            }
        }
    }

    // the two headline values for the friend tree at n = 4
    let friend = ModelSpec::friend();
    let p_exact = oracle::oracle_probability(&friend, 4, |t| diameter(t) == 3).unwrap();
    let e_exact = oracle::oracle_expectation(&friend, 4, TreeStatistic::NonLeaves).unwrap();
    let third = BigRational::new(1.into(), 3.into());
    let headline_exact = p_exact == third && e_exact == BigRational::new(4.into(), 3.into());
    let mut rng = RngStream::new(299, 0);
    let mut tree = GrowthTree::with_capacity(4);
    let (mut hits, mut sum, mut sq) = (0u64, 0.0, 0.0);
    for _ in 0..REPLICAS {
        tree.reset();
        grow_into(&mut tree, &friend, 4, &mut rng);
        hits += (diameter(&tree) == 3) as u64;
        let x = tree.count_degree_at_least(2) as f64;
        sum += x;
        sq += x * x;
    }
    let r = REPLICAS as f64;
    let p = hits as f64 / r;
    let z_p = (p - 1.0 / 3.0).abs() / ((1.0 / 3.0) * (2.0 / 3.0) / r).sqrt();
    let mean = sum / r;
    let se = ((sq / r - mean * mean) / (r - 1.0)).sqrt();
    let z_e = (mean - 4.0 / 3.0).abs() / se;
    let pass = failures.is_empty() && headline_exact && z_p <= ORACLE_Z && z_e <= ORACLE_Z;
    outcome(
        pass,
        format!(
            "{compared} model/n/statistic means at 1e6 replicas, max z={worst:.2}; \
             friend n=4: P(Diam=3)={p:.5} vs {p_exact} (z={z_p:.2}), E[X>=2]={mean:.5} vs {e_exact} (z={z_e:.2}){}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn coupling_guarantees() -> Outcome {
    let mut rng = RngStream::new(300, 0);
    let pair = CoupledPair::grow(100_000, &mut rng).unwrap();
    let dist = verify_distance_bound(&pair, 100_000, &mut rng);
    let leaves = verify_leaf_proximity(&pair);
    let small = CoupledPair::grow(500, &mut RngStream::new(301, 0)).unwrap();
    let exhaustive = verify_distance_bound_exhaustive(&small);
    let small_leaves = verify_leaf_proximity(&small);
    let detail = match (&dist, &leaves, &exhaustive) {
        (Ok(d), Ok(l), Ok(e)) => format!(
            "n=1e5: {} sampled pairs, 0 distance violations (max ratio {:.2}); {} URRT leaves, {} not friend-tree leaves, \
             0 farther than 1; n=500 exhaustive: {} pairs, 0 violations",
            d.pairs_checked, d.max_ratio, l.urrt_leaves, l.non_leaf_in_rft, e.pairs_checked
        ),
        _ => format!("{:?} / {:?} / {:?}", dist.as_ref().err(), leaves.as_ref().err(), exhaustive.as_ref().err()),
    };
    outcome(dist.is_ok() && leaves.is_ok() && exhaustive.is_ok() && small_leaves.is_ok(), detail)
}

fn urrt_baselines() -> Outcome {
    let mut ok = true;
    let mut tree = GrowthTree::with_capacity(100_000);
    let mut leaf_fractions = Vec::new();
    let mut degree_fraction = [0.0f64; 6];
    for r in 0..20 {
        tree.reset();
        grow_into(&mut tree, &ModelSpec::Urrt, 100_000, &mut RngStream::new(400, r));
        let n = tree.n() as f64;
        let lf = tree.leaves() as f64 / n;
        ok &= (lf - 0.5).abs() <= 0.01;
        leaf_fractions.push(lf);
        for (k, acc) in degree_fraction.iter_mut().enumerate().skip(1) {
            *acc += tree.count_degree_at_least(k as u32) as f64 / n / 20.0;
        }
    }
    let mut degree_detail = Vec::new();
    for (k, &f) in degree_fraction.iter().enumerate().skip(1) {
        let target = 0.5f64.powi(k as i32 - 1);
        ok &= (f / target - 1.0).abs() <= 0.2;
        degree_detail.push(format!("k={k}: {f:.4}/{target:.4}"));
    }

    // youngest-subtree law at n = 1000
    const R: u64 = 100_000;
    let mut at_least = [0u64; 11];
    let mut rng = RngStream::new(401, 0);
    let mut small = GrowthTree::with_capacity(1000);
    for _ in 0..R {
        small.reset();
        grow_into(&mut small, &ModelSpec::Urrt, 1000, &mut rng);
        let s = youngest_subtree_size(&small, 1).unwrap() as usize;
        for c in at_least.iter_mut().take(s.min(10) + 1).skip(1) {
            *c += 1;
        }
    }
    let mut worst = 0.0f64;
    for (l, &c) in at_least.iter().enumerate().skip(1) {
        let p = 1.0 / l as f64;
        let f = c as f64 / R as f64;
        let sigma = (p * (1.0 - p) / R as f64).sqrt();
        if sigma == 0.0 {
            ok &= f == p;
        } else {
            worst = worst.max((f - p).abs() / sigma);
            ok &= (f - p).abs() <= 3.0 * sigma;
        }
    }
    let (lo, hi) = leaf_fractions.iter().fold((1.0f64, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    outcome(
        ok,
        format!(
            "n=1e5 x20: leaf fraction in [{lo:.4}, {hi:.4}]; degree>=k {}; youngest subtree l<=10 at n=1000 x1e5: max {worst:.2} sigma",
            degree_detail.join(" ")
        ),
    )
}

fn exponent_window() -> Outcome {
    let start = Instant::now();
    let points: Vec<u64> = (10..=23).map(|e| 1u64 << e).collect();
    let schedule = Schedule::Explicit { points: points.clone() };
    let cfg = StatsConfig::census_only();
    let mut series = Vec::new();
    for r in 0..20 {
        let g = grow(&ModelSpec::friend(), 1 << 23, &mut RngStream::new(500, r), &schedule, &cfg, &mut []).unwrap();
        series.push(g.snapshots.iter().map(|s| (s.n, s.x_geq(2) as f64)).collect::<Vec<_>>());
    }
    let fit = replica_exponent_fit(&series).unwrap();
    let elapsed = start.elapsed();
    let (lo, hi) = fit.per_replica.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), f| (a.min(f.slope), b.max(f.slope)));
    let slope = fit.pooled.slope;
    outcome(
        slope > EXPONENT_WINDOW.0 && slope < EXPONENT_WINDOW.1 && elapsed < EXPONENT_BUDGET,
        format!(
            "slope {slope:.4} (r^2 {:.4}) over n=2^10..2^23, 20 replicas (per-replica {lo:.3}..{hi:.3}); \
             window ({}, {}), conjectured {CONJECTURED_EXPONENT}; {:.1}s",
            fit.pooled.r_squared,
            EXPONENT_WINDOW.0,
            EXPONENT_WINDOW.1,
            elapsed.as_secs_f64()
        ),
    )
}

/// Shared large runs for the diameter, leaf-depth, typical-distance and hub criteria.
struct LargeRun {
    diameter_ratio: f64,
    /// `(n, M_n / (log n / log log n))` at 1e4, 1e5, 1e6.
    leaf_depth_ratios: Vec<(u64, f64)>,
    p_distance_two: f64,
    /// `(n, min edge cover, X^{>=2}, hub count)` at every snapshot.
    cover: Vec<(u64, u64, u64, u64)>,
}

fn large_runs() -> Vec<LargeRun> {
    const N: u32 = 1_000_000;
    let mut points: Vec<u64> = (0..10).map(|i| 1000u64 << i).collect();
    points.extend([10_000, 100_000, N as u64]);
    let schedule = Schedule::Explicit { points };
    let cfg = StatsConfig { leaf_depth: true, edge_cover: true, ..StatsConfig::census_only() };
    (0..20)
        .map(|r| {
            let mut rng = RngStream::new(600, r);
            let mut cover = Vec::new();
            let mut on_snapshot = |t: &GrowthTree, s: &rft_core::StatSnapshot| {
                cover.push((s.n, s.min_edge_cover.unwrap(), s.x_geq(2), hub_count(t, 0.001).unwrap()));
            };
            let g = grow(&ModelSpec::friend(), N, &mut rng, &schedule, &cfg, &mut [&mut on_snapshot]).unwrap();
            let leaf_depth_ratios = g
                .snapshots
                .iter()
                .filter(|s| [10_000, 100_000, 1_000_000].contains(&s.n))
                .map(|s| (s.n, s.leaf_depth.unwrap() as f64 / ln_ratio(s.n)))
                .collect();
            let h = typical_distance_sample(&g.tree, &mut rng.fork(1), 100_000).unwrap();
            LargeRun {
                diameter_ratio: diameter(&g.tree) as f64 / (N as f64).ln(),
                leaf_depth_ratios,
                p_distance_two: h.pair_fraction(2),
                cover,
            }
        })
        .collect()
}

fn diameter_envelope(runs: &[LargeRun]) -> Outcome {
    let ratios: Vec<f64> = runs.iter().map(|r| r.diameter_ratio).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    outcome(
        ratios.iter().all(|&x| x >= DIAMETER_BAND.0 && x <= DIAMETER_BAND.1),
        format!("Diam/log n at n=1e6 x20 in [{lo:.3}, {hi:.3}], band [{}, {:.3}]", DIAMETER_BAND.0, DIAMETER_BAND.1),
    )
}

fn leaf_depth_scaling(runs: &[LargeRun]) -> Outcome {
    let all: Vec<f64> = runs.iter().flat_map(|r| r.leaf_depth_ratios.iter().map(|x| x.1)).collect();
    let in_band = all.len() == 3 * runs.len() && all.iter().all(|&x| x >= LEAF_DEPTH_BAND.0 && x <= LEAF_DEPTH_BAND.1);
    let means: Vec<String> = [10_000u64, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let xs: Vec<f64> = runs.iter().flat_map(|r| r.leaf_depth_ratios.iter().filter(|x| x.0 == n).map(|x| x.1)).collect();
            format!("n={n}: {:.3}", xs.iter().sum::<f64>() / xs.len() as f64)
        })
        .collect();
    outcome(
        in_band,
        format!(
            "M_n/(log n/log log n) mean {}; all {} values in [{}, {}]",
            means.join(", "),
            all.len(),
            LEAF_DEPTH_BAND.0,
            LEAF_DEPTH_BAND.1
        ),
    )
}

fn typical_distance(runs: &[LargeRun]) -> Outcome {
    let ps: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.p_distance_two)).collect();
    outcome(
        runs.iter().all(|r| r.p_distance_two > DISTANCE_TWO_FLOOR),
        format!("P(d=2) at n=1e6, 1e5 pairs per replica: [{}]; floor {DISTANCE_TWO_FLOOR}", ps.join(" ")),
    )
}

fn hub_lower_bound(runs: &[LargeRun]) -> Outcome {
    let mut checked = 0;
    let mut ok = true;
    for r in runs {
        for &(_, cover, non_leaves, _) in &r.cover {
            checked += 1;
            ok &= 2 * cover >= non_leaves;
        }
    }
    let curve: Vec<String> = runs[0]
        .cover
        .iter()
        .map(|&(n, ..)| {
            let mean = runs.iter().map(|r| r.cover.iter().find(|c| c.0 == n).unwrap().3 as f64).sum::<f64>() / runs.len() as f64;
            format!("{n}:{:.1}", mean / (n as f64).powf(0.1))
        })
        .collect();
    outcome(
        ok,
        format!(
            "min edge cover >= X>=2/2 on {checked} snapshots; mean hubs(D/n>0.001)/n^0.1 by n: {}",
            curve.join(" ")
        ),
    )
}

fn determinism() -> Outcome {
    let base = tempfile::tempdir().unwrap();
    let mut plan = ExperimentPlan {
        replicas: 6,
        master_seed: 1000,
        tracked_vertices: vec![1, 2, 3],
        ..ExperimentPlan::new(ModelSpec::friend(), 100_000)
    };
    let mut outputs = Vec::new();
    for threads in [1, 4, 16] {
        plan.out_dir = base.path().join(format!("t{threads}"));
        run(&plan, threads).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for r in 0..plan.replicas {
            let p = plan.csv_path(r);
            files.push((p.file_name().unwrap().to_string_lossy().into(), fs::read(&p).unwrap()));
        }
        files.push(("result.json".into(), fs::read(plan.out_dir.join("result.json")).unwrap()));
        outputs.push(files);
    }
    let bytes: usize = outputs[0].iter().map(|f| f.1.len()).sum();
    outcome(
        outputs[1] == outputs[0] && outputs[2] == outputs[0],
        format!("{} files ({bytes} bytes) identical under 1, 4 and 16 threads", outputs[0].len()),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, o: Outcome| {
        println!("{} {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as u32;
    };
    report(1, "exact drift suite", drift_suite());
    report(2, "oracle equivalence", oracle_equivalence());
    report(3, "coupling guarantees", coupling_guarantees());
    report(4, "URRT baselines", urrt_baselines());
    report(5, "exponent window", exponent_window());
    let runs = large_runs();
    report(6, "diameter envelope", diameter_envelope(&runs));
    report(7, "leaf-depth scaling", leaf_depth_scaling(&runs));
    report(8, "typical distance", typical_distance(&runs));
    report(9, "hub lower bound", hub_lower_bound(&runs));
    report(10, "determinism", determinism());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
