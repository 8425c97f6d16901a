//! Built-in sanity checks for the numeric kernels, run by `able2rank selftest`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregate::{btl_fit, BtlParams, Ranking};
use crate::analogy::{boolean_proportion, ProportionMeasure, DEFAULT_EPSILON};
use crate::eval::ranking_loss;
use crate::pairwise::ComparisonMatrix;

/// Scalar proportion kernel under test.
pub type Kernel<'a> = dyn Fn(&ProportionMeasure, f64, f64, f64, f64) -> f64 + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "ok" } else { "FAILED" };
            if c.detail.is_empty() {
                writeln!(f, "{:<40} {status}", c.name)?;
            } else {
                writeln!(f, "{:<40} {status} ({})", c.name, c.detail)?;
            }
        }
        Ok(())
    }
}

const BOOLEAN_MEASURES: [ProportionMeasure; 3] = [
    ProportionMeasure::Arithmetic,
    ProportionMeasure::ArithmeticStrict,
    ProportionMeasure::MinMax,
];

fn check(name: impl Into<String>, failure: Option<String>) -> Check {
    Check {
        name: name.into(),
        passed: failure.is_none(),
        detail: failure.unwrap_or_default(),
    }
}

fn boolean_reduction(kernel: &Kernel, m: &ProportionMeasure) -> Option<String> {
    for bits in 0u8..16 {
        let b = [bits & 8 != 0, bits & 4 != 0, bits & 2 != 0, bits & 1 != 0];
        let x = b.map(|v| if v { 1.0 } else { 0.0 });
        let got = kernel(m, x[0], x[1], x[2], x[3]);
        let want = if boolean_proportion(b[0], b[1], b[2], b[3]) { 1.0 } else { 0.0 };
        if got != want {
            return Some(format!("{x:?} gave {got}, expected {want}"));
        }
    }
    None
}

fn axioms(kernel: &Kernel, m: &ProportionMeasure, rng: &mut ChaCha8Rng) -> Option<String> {
    for _ in 0..2000 {
        // strictly positive so the geometric measure is reflexive too
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.01..=1.0));
        let [a, b, c, d] = q;
        let v = kernel(m, a, b, c, d);
        if !(0.0..=1.0).contains(&v) {
            return Some(format!("range: {q:?} gave {v}"));
        }
        let sym = kernel(m, c, d, a, b);
        if sym != v {
            return Some(format!("symmetry: {q:?} gave {v} vs {sym}"));
        }
        let refl = kernel(m, a, b, a, b);
        if refl != 1.0 {
            return Some(format!("reflexivity: ({a}, {b}) gave {refl}"));
        }
    }
    None
}

fn btl_two_items() -> Option<String> {
    let c = ComparisonMatrix::from_counts(vec![vec![0.0, 3.0], vec![1.0, 0.0]]).ok()?;
    let params = BtlParams {
        smoothing: 0.0,
        ..BtlParams::default()
    };
    match btl_fit(&c, &params) {
        Ok(t) if (t.theta[0] - 0.75).abs() < 1e-6 && (t.theta[1] - 0.25).abs() < 1e-6 => None,
        Ok(t) => Some(format!("theta {:?}, expected [0.75, 0.25]", t.theta)),
        Err(e) => Some(e.to_string()),
    }
}

fn loss_examples() -> Option<String> {
    let id = Ranking::identity(3);
    let swap = Ranking::from_positions(vec![1, 0, 2]).ok()?;
    let cases = [(id.clone(), 0.0), (id.reversed(), 1.0), (swap, 1.0 / 3.0)];
    for (other, want) in cases {
        match ranking_loss(&id, &other) {
            Ok(got) if got == want => {}
            Ok(got) => return Some(format!("{other} gave {got}, expected {want}")),
            Err(e) => return Some(e.to_string()),
        }
    }
    None
}

/// Run every check against the given proportion kernel.
pub fn run_selftest_with(kernel: &Kernel) -> SelftestReport {
    let mut checks = Vec::new();
    for m in &BOOLEAN_MEASURES {
        checks.push(check(format!("boolean reduction {m}"), boolean_reduction(kernel, m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for m in ProportionMeasure::all(DEFAULT_EPSILON).expect("default epsilon is valid") {
        checks.push(check(format!("range/symmetry/reflexivity {m}"), axioms(kernel, &m, &mut rng)));
    }
    checks.push(check("BTL two-item fit", btl_two_items()));
    checks.push(check("ranking loss examples", loss_examples()));
    SelftestReport { checks }
}

pub fn run_selftest() -> SelftestReport {
    run_selftest_with(&|m, a, b, c, d| m.degree(a, b, c, d))
}
