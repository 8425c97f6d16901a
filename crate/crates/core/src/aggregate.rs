//! Rank aggregation with the Bradley-Terry-Luce model.
//!
//! `P(i > j) = theta_i / (theta_i + theta_j)`. The maximum-likelihood
//! `theta` for a comparison matrix is found with minorization-maximization
//! fixed-point sweeps, which increase the likelihood monotonically and need
//! no step size. Additive smoothing keeps the estimate finite when an item
//! wins every comparison.

use std::fmt;

use crate::analogy::ProportionMeasure;
use crate::dataset::{ObjectVector, PreferenceStore, RankingInstance};
use crate::error::{Error, Result};
use crate::pairwise::{app_top_k, comparison_matrix, ComparisonMatrix, PairwiseSupport};
use crate::preprocess::preprocess_for_able2rank;

/// Lower bound for any utility; keeps every entry positive when an item has
/// no (smoothed) wins.
const THETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtlParams {
    pub tol: f64,
    pub max_iter: usize,
    /// Pseudo-count added to every off-diagonal entry of the matrix.
    pub smoothing: f64,
}

impl Default for BtlParams {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            smoothing: 0.1,
        }
    }
}

/// Estimated utilities, normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Smoothed counts `c_ij + smoothing` as a dense row-major matrix.
fn smoothed(c: &ComparisonMatrix, smoothing: f64) -> Vec<f64> {
    let n = c.n();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i * n + j] = c.get(i, j) + smoothing;
            }
        }
    }
    w
}

fn log_likelihood_dense(w: &[f64], n: usize, theta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = w[i * n + j];
            if i != j && c > 0.0 {
                ll += c * (theta[i].ln() - (theta[i] + theta[j]).ln());
            }
        }
    }
    ll
}

/// Smoothed log-likelihood of `theta` for the comparison matrix.
pub fn btl_log_likelihood(c: &ComparisonMatrix, theta: &[f64], smoothing: f64) -> f64 {
    log_likelihood_dense(&smoothed(c, smoothing), c.n(), theta)
}

fn check_params(c: &ComparisonMatrix, params: &BtlParams) -> Result<()> {
    if c.n() < 2 {
        return Err(Error::TooFewObjects {
            required: 2,
            got: c.n(),
        });
    }
    if !params.smoothing.is_finite() || params.smoothing < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing must be a finite non-negative number, got {}",
            params.smoothing
        )));
    }
    if !params.tol.is_finite() || params.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            params.tol
        )));
    }
    Ok(())
}

pub fn btl_fit(c: &ComparisonMatrix, params: &BtlParams) -> Result<ThetaVector> {
    fit(c, params, None)
}

/// [`btl_fit`] that also records the log-likelihood before the first sweep
/// and after every sweep.
pub fn btl_fit_traced(c: &ComparisonMatrix, params: &BtlParams) -> Result<(ThetaVector, Vec<f64>)> {
    let mut trace = Vec::new();
    let theta = fit(c, params, Some(&mut trace))?;
    Ok((theta, trace))
}

fn fit(c: &ComparisonMatrix, params: &BtlParams, mut trace: Option<&mut Vec<f64>>) -> Result<ThetaVector> {
    check_params(c, params)?;
    let n = c.n();
    let w = smoothed(c, params.smoothing);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("comparison counts"));
    }
    let wins: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| w[i * n + j]).sum())
        .collect();

    let mut theta = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut last_ll = log_likelihood_dense(&w, n, &theta);
    if let Some(t) = trace.as_deref_mut() {
        t.push(last_ll);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        for i in 0..n {
            let mut denom = 0.0;
            for j in 0..n {
                if i != j {
                    let games = w[i * n + j] + w[j * n + i];
                    if games > 0.0 {
                        denom += games / (theta[i] + theta[j]);
                    }
                }
            }
            next[i] = if denom > 0.0 {
                (wins[i] / denom).max(THETA_FLOOR)
            } else {
                theta[i]
            };
        }
        let total: f64 = next.iter().sum();
        let mut change: f64 = 0.0;
        for (t, &v) in theta.iter_mut().zip(&next) {
            let v = (v / total).max(THETA_FLOOR);
            change = change.max((v - *t).abs());
            *t = v;
        }

        if cfg!(debug_assertions) || trace.is_some() {
            let ll = log_likelihood_dense(&w, n, &theta);
            debug_assert!(
                ll >= last_ll - 1e-9 * last_ll.abs().max(1.0),
                "log-likelihood decreased: {last_ll} -> {ll}"
            );
            last_ll = ll;
            if let Some(t) = trace.as_deref_mut() {
                t.push(ll);
            }
        }

        if change < params.tol {
            converged = true;
            break;
        }
    }

    Ok(ThetaVector {
        theta,
        iterations,
        converged,
    })
}

/// A total order over `n` items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    /// `order[p]` is the item at position `p` (0 = best).
    order: Vec<usize>,
    /// `positions[item]` is the item's position.
    positions: Vec<usize>,
}

impl Ranking {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            positions: (0..n).collect(),
        }
    }

    /// Build from an ordering (position to item); must be a permutation.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut positions = vec![usize::MAX; n];
        for (p, &item) in order.iter().enumerate() {
            if item >= n || positions[item] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "ordering is not a permutation of 0..{n}"
                )));
            }
            positions[item] = p;
        }
        Ok(Self { order, positions })
    }

    /// Build from positions (item to position); must be a permutation.
    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        let inverse = Self::from_order(positions)?;
        Ok(Self {
            order: inverse.positions,
            positions: inverse.order,
        })
    }

    /// Items sorted by ascending key; ties keep ascending item index.
    pub fn by_ascending_key(keys: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..keys.len()).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        Self::from_order(order).expect("sorted indices form a permutation")
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn position_of(&self, item: usize) -> usize {
        self.positions[item]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Self::from_order(order).expect("reversal of a permutation")
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (p, item) in self.order.iter().enumerate() {
            if p > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", item + 1)?;
        }
        f.write_str(")")
    }
}

/// Items sorted by descending utility; equal utilities keep ascending index.
pub fn rank_from_scores(theta: &ThetaVector) -> Ranking {
    let mut order: Vec<usize> = (0..theta.theta.len()).collect();
    order.sort_by(|&a, &b| theta.theta[b].total_cmp(&theta.theta[a]));
    Ranking::from_order(order).expect("sorted indices form a permutation")
}

/// Everything produced while ranking one query set.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub ranking: Ranking,
    pub theta: ThetaVector,
    pub matrix: ComparisonMatrix,
}

/// The analogy-based ranker: a proportion measure, the number `k` of
/// best-scoring training preferences consulted per query pair, and the BTL
/// fitting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Able2Rank {
    pub measure: ProportionMeasure,
    pub k: usize,
    pub btl: BtlParams,
}

impl Able2Rank {
    pub fn new(measure: ProportionMeasure, k: usize) -> Self {
        Self {
            measure,
            k,
            btl: BtlParams::default(),
        }
    }

    /// Rank `query` using already-normalized training preferences.
    pub fn predict(&self, store: &PreferenceStore, query: &[ObjectVector]) -> Result<Prediction> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let support = app_top_k(store, query, &self.measure, self.k)?;
        self.aggregate(&support)
    }

    /// Rank from support lists holding at least `k` entries each.
    pub fn aggregate(&self, support: &PairwiseSupport) -> Result<Prediction> {
        let matrix = comparison_matrix(support, self.k)?;
        let theta = btl_fit(&matrix, &self.btl)?;
        Ok(Prediction {
            ranking: rank_from_scores(&theta),
            theta,
            matrix,
        })
    }

    /// Preprocess raw training rankings and query set, then rank the query.
    pub fn predict_raw(&self, train: &[RankingInstance], query: &RankingInstance) -> Result<Prediction> {
        let prepared = preprocess_for_able2rank(train, query)?;
        let store = PreferenceStore::from_instances(&prepared.train);
        self.predict(&store, prepared.test.objects())
    }
}

/// Predicted ranking of `query` (raw features) from raw training rankings.
pub fn able2rank_predict(
    train: &[RankingInstance],
    query: &RankingInstance,
    measure: ProportionMeasure,
    k: usize,
) -> Result<Ranking> {
    Able2Rank::new(measure, k)
        .predict_raw(train, query)
        .map(|p| p.ranking)
}
