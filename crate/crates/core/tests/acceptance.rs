//! Acceptance gate. Runs without the libtest harness so that every
//! criterion prints its `PASS`/`FAIL` line even under plain `cargo test`;
//! the process exits nonzero if any criterion fails.
//!
//! Criterion 6 needs the published Bundesliga/NBA style data. Point
//! `ABLE2RANK_PUBLISHED_DATA` at a directory holding `b.schema`, `b2.csv`,
//! `b3.csv`, `n.schema`, `n1.csv`, `n2.csv` to run it; otherwise it is
//! reported as skipped.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use able2rank::aggregate::{btl_fit, btl_fit_traced, BtlParams, Ranking};
use able2rank::analogy::{boolean_proportion, ProportionMeasure, DEFAULT_EPSILON};
use able2rank::dataset::{load_with_schema, FeatureSchema, RankingInstance};
use able2rank::eval::{ranking_loss, run_experiment, ExperimentConfig, ExperimentReport};
use able2rank::pairwise::ComparisonMatrix;

// Pinned tolerances and budgets.
const AXIOM_TOL: f64 = 1e-12;
const AXIOM_SAMPLES: usize = 10_000;
const BTL_TWO_ITEM_TOL: f64 = 1e-6;
const BTL_PLANTED_TOL: f64 = 1e-3;
const SYNTHETIC_ABLE2RANK_MAX: f64 = 0.05;
const PUBLISHED_TOL_B: f64 = 0.01;
const PUBLISHED_TOL_N: f64 = 0.02;

const FAST_BUDGET: Duration = Duration::from_secs(1);
const SHORT_BUDGET: Duration = Duration::from_secs(5);
const SYNTHETIC_BUDGET: Duration = Duration::from_secs(60);
const PUBLISHED_BUDGET: Duration = Duration::from_secs(600);

fn report(criterion: u32, title: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("{status} criterion {criterion} ({title}): {detail}");
}

fn bits(mask: u8) -> [bool; 4] {
    [mask & 8 != 0, mask & 4 != 0, mask & 2 != 0, mask & 1 != 0]
}

fn criterion_1_boolean_correctness() -> Option<bool> {
    let start = Instant::now();
    let table: Vec<[bool; 4]> = (0..16).map(bits).filter(|b| boolean_proportion(b[0], b[1], b[2], b[3])).collect();
    let expected_table = vec![
        [false, false, false, false],
        [false, false, true, true],
        [false, true, false, true],
        [true, false, true, false],
        [true, true, false, false],
        [true, true, true, true],
    ];
    let mut mismatches = Vec::new();
    if table != expected_table {
        mismatches.push(format!("boolean table {table:?}"));
    }
    for m in [
        ProportionMeasure::Arithmetic,
        ProportionMeasure::ArithmeticStrict,
        ProportionMeasure::MinMax,
    ] {
        for mask in 0..16 {
            let b = bits(mask);
            let x = b.map(|v| if v { 1.0 } else { 0.0 });
            let got = m.degree(x[0], x[1], x[2], x[3]);
            let want = if boolean_proportion(b[0], b[1], b[2], b[3]) { 1.0 } else { 0.0 };
            if got != want {
                mismatches.push(format!("{m} on {x:?}: {got}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < FAST_BUDGET;
    report(
        1,
        "boolean correctness",
        ok,
        format!("{} mismatches over 16 patterns x 3 measures in {elapsed:.2?}", mismatches.len()),
    );
    Some(ok)
}

fn criterion_2_axioms() -> Option<bool> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for m in ProportionMeasure::all(DEFAULT_EPSILON).unwrap() {
        for _ in 0..AXIOM_SAMPLES {
            let [a, b, c, d]: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..=1.0));
            let sym = (m.degree(a, b, c, d) - m.degree(c, d, a, b)).abs();
            // the geometric measure is reflexive only away from a*b = 0
            let refl = if matches!(m, ProportionMeasure::Geometric) && a * b == 0.0 {
                0.0
            } else {
                (m.degree(a, b, a, b) - 1.0).abs()
            };
            let err = sym.max(refl);
            worst = worst.max(err);
            if err > AXIOM_TOL {
                failures.push(format!("{m} at ({a}, {b}, {c}, {d}): sym {sym:e}, refl {refl:e}"));
                break;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < SHORT_BUDGET;
    report(
        2,
        "reflexivity and symmetry",
        ok,
        format!("6 measures x {AXIOM_SAMPLES} samples, max deviation {worst:e}, {elapsed:.2?}"),
    );
    Some(ok)
}

fn brute_force_loss(p: &[usize], q: &[usize]) -> f64 {
    let n = p.len();
    let mut inversions = 0;
    for i in 0..n {
        for j in 0..n {
            if p[i] < p[j] && q[i] > q[j] {
                inversions += 1;
            }
        }
    }
    inversions as f64 / (n * (n - 1) / 2) as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_3_loss_oracle() -> Option<bool> {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut compare = |p: &[usize], q: &[usize]| {
        let a = Ranking::from_positions(p.to_vec()).unwrap();
        let b = Ranking::from_positions(q.to_vec()).unwrap();
        checked += 1;
        if ranking_loss(&a, &b).unwrap() != brute_force_loss(p, q) {
            mismatches += 1;
        }
    };
    for n in 2..=5 {
        let perms = permutations(n);
        for p in &perms {
            for q in &perms {
                compare(p, q);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let mut p: Vec<usize> = (0..8).collect();
        let mut q = p.clone();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        compare(&p, &q);
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && elapsed < SHORT_BUDGET;
    report(
        3,
        "loss oracle",
        ok,
        format!("{mismatches} mismatches in {checked} ranking pairs, {elapsed:.2?}"),
    );
    Some(ok)
}

fn criterion_4_btl_oracle() -> Option<bool> {
    let start = Instant::now();
    let exact = BtlParams {
        smoothing: 0.0,
        tol: 1e-12,
        ..BtlParams::default()
    };

    let mut two_item_err = 0.0f64;
    for (c12, c21) in [(3.0, 1.0), (7.0, 2.0), (1.0, 1.0), (2.0, 9.0)] {
        let c = ComparisonMatrix::from_counts(vec![vec![0.0, c12], vec![c21, 0.0]]).unwrap();
        let t = btl_fit(&c, &exact).unwrap();
        two_item_err = two_item_err.max((t.theta[0] / t.theta[1] - c12 / c21).abs());
    }

    let planted = [0.6, 0.3, 0.1];
    let counts: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| if i == j { 0.0 } else { 1000.0 * planted[i] / (planted[i] + planted[j]) })
                .collect()
        })
        .collect();
    let c = ComparisonMatrix::from_counts(counts).unwrap();
    let (fit, trace) = btl_fit_traced(&c, &exact).unwrap();
    let planted_err = fit
        .theta
        .iter()
        .zip(planted)
        .map(|(t, p)| (t - p).abs())
        .fold(0.0, f64::max);

    // monotonicity on a smoothed, irregular matrix too
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut monotone = trace.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    for _ in 0..20 {
        let n = 6;
        let counts: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { rng.gen_range(0..20) as f64 }).collect())
            .collect();
        let c = ComparisonMatrix::from_counts(counts).unwrap();
        let (_, trace) = btl_fit_traced(&c, &BtlParams::default()).unwrap();
        monotone &= trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    }

    let elapsed = start.elapsed();
    let ok = two_item_err < BTL_TWO_ITEM_TOL && planted_err < BTL_PLANTED_TOL && monotone && elapsed < SHORT_BUDGET;
    report(
        4,
        "BTL oracle",
        ok,
        format!(
            "two-item ratio error {two_item_err:e}, planted error {planted_err:e}, monotone {monotone}, {elapsed:.2?}"
        ),
    );
    Some(ok)
}

/// Objects with uniform features, ranked by a fixed linear utility.
fn linear_utility_data(seed: u64) -> (RankingInstance, RankingInstance) {
    let d = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut sample = |name: &str, n: usize| {
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
        let utility = |r: &Vec<f64>| r.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>();
        rows.sort_by(|a, b| utility(b).total_cmp(&utility(a)));
        RankingInstance::from_rows(name, rows).unwrap()
    };
    let train = sample("train", 30);
    let test = sample("test", 20);
    (train, test)
}

const SYNTHETIC_SEED: u64 = 20;

fn synthetic_run(threads: usize) -> ExperimentReport {
    let (train, test) = linear_utility_data(SYNTHETIC_SEED);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(&[train], &test, &ExperimentConfig::default()).unwrap())
}

fn criterion_5_synthetic_recovery() -> Option<bool> {
    let start = Instant::now();
    let r = synthetic_run(4);
    let elapsed = start.elapsed();
    let ok = r.able2rank_loss <= SYNTHETIC_ABLE2RANK_MAX && r.err_loss == 0.0 && elapsed < SYNTHETIC_BUDGET;
    report(
        5,
        "synthetic recovery",
        ok,
        format!(
            "(v*, k*) = ({}, {}), able2rank {:.4} (max {SYNTHETIC_ABLE2RANK_MAX}), ERR {:.4} (must be 0), {elapsed:.2?}",
            r.best_measure, r.best_k, r.able2rank_loss, r.err_loss
        ),
    );
    Some(ok)
}

fn published_dir() -> Option<PathBuf> {
    std::env::var_os("ABLE2RANK_PUBLISHED_DATA").map(PathBuf::from)
}

fn published_experiment(dir: &Path, schema: &str, train: &str, test: &str) -> (ExperimentReport, Duration) {
    let start = Instant::now();
    let schema = Arc::new(FeatureSchema::from_file(dir.join(schema)).unwrap());
    let train = load_with_schema(dir.join(train), schema.clone()).unwrap();
    let test = load_with_schema(dir.join(test), schema).unwrap();
    let r = run_experiment(&[train], &test, &ExperimentConfig::default()).unwrap();
    (r, start.elapsed())
}

fn criterion_6_published_results() -> Option<bool> {
    let Some(dir) = published_dir() else {
        println!("SKIPPED criterion 6 (published results): ABLE2RANK_PUBLISHED_DATA not set");
        return None;
    };
    let (b, tb) = published_experiment(&dir, "b.schema", "b3.csv", "b2.csv");
    let (n, tn) = published_experiment(&dir, "n.schema", "n1.csv", "n2.csv");
    let ok = (b.able2rank_loss - 0.000).abs() <= PUBLISHED_TOL_B
        && (b.err_loss - 0.033).abs() <= PUBLISHED_TOL_B
        && (n.able2rank_loss - 0.013).abs() <= PUBLISHED_TOL_N
        && tb < PUBLISHED_BUDGET
        && tn < PUBLISHED_BUDGET;
    report(
        6,
        "published results",
        ok,
        format!(
            "B3 -> B2 able2rank {:.3} ERR {:.3} ({tb:.1?}); N1 -> N2 able2rank {:.3} ({tn:.1?})",
            b.able2rank_loss, b.err_loss, n.able2rank_loss
        ),
    );
    Some(ok)
}

fn criterion_7_determinism() -> Option<bool> {
    let first = synthetic_run(1).csv_string();
    let second = synthetic_run(1).csv_string();
    let parallel = synthetic_run(4).csv_string();
    let ok = first == second && first == parallel;
    report(
        7,
        "determinism",
        ok,
        format!("1-thread runs identical {}, 1 vs 4 threads identical {}", first == second, first == parallel),
    );
    Some(ok)
}

fn main() {
    let criteria: [fn() -> Option<bool>; 7] = [
        criterion_1_boolean_correctness,
        criterion_2_axioms,
        criterion_3_loss_oracle,
        criterion_4_btl_oracle,
        criterion_5_synthetic_recovery,
        criterion_6_published_results,
        criterion_7_determinism,
    ];
    let outcomes: Vec<Option<bool>> = criteria
        .iter()
        .map(|run| std::panic::catch_unwind(run).unwrap_or(Some(false)))
        .collect();
    let count = |o: Option<bool>| outcomes.iter().filter(|&&x| x == o).count();
    let failed = count(Some(false));
    println!(
        "acceptance: {} passed, {failed} failed, {} skipped",
        count(Some(true)),
        count(None)
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
