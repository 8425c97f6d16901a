//! Expected rank regression: each object's target is its normalized rank
//! position `r / (n + 1)`, and a linear model is fit to those targets by
//! least squares. Smaller predictions rank higher.

use nalgebra::{DMatrix, DVector};

use crate::aggregate::Ranking;
use crate::dataset::{ObjectVector, RankingInstance};
use crate::error::{Error, Result};
use crate::preprocess::preprocess_for_baseline;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Objects paired with their expected-rank targets, in rank order.
pub fn err_targets(instance: &RankingInstance) -> Vec<(ObjectVector, f64)> {
    let denom = (instance.len() + 1) as f64;
    instance
        .objects()
        .iter()
        .enumerate()
        .map(|(p, o)| (o.clone(), (p + 1) as f64 / denom))
        .collect()
}

/// Ordinary least squares with intercept over the pooled training targets.
///
/// Features are centered and the weights solved through an SVD, so a
/// rank-deficient design yields the minimum-norm weight vector.
pub fn err_fit(train: &[RankingInstance]) -> Result<LinearModel> {
    let points: Vec<(ObjectVector, f64)> = train.iter().flat_map(err_targets).collect();
    if points.is_empty() {
        return Err(Error::TooFewObjects {
            required: 1,
            got: 0,
        });
    }
    let n = points.len();
    let d = points[0].0.len();
    if let Some((o, _)) = points.iter().find(|(o, _)| o.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: o.len(),
        });
    }

    let y_mean = points.iter().map(|(_, y)| y).sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = (0..d)
        .map(|k| points.iter().map(|(o, _)| o[k]).sum::<f64>() / n as f64)
        .collect();
    if d == 0 {
        return Ok(LinearModel {
            weights: Vec::new(),
            intercept: y_mean,
        });
    }

    let x = DMatrix::from_fn(n, d, |i, k| points[i].0[k] - x_mean[k]);
    let y = DVector::from_fn(n, |i, _| points[i].1 - y_mean);
    let svd = x.svd(true, true);
    let largest = svd.singular_values.max();
    let cutoff = largest * n.max(d) as f64 * f64::EPSILON;
    let weights = if largest > 0.0 {
        svd.solve(&y, cutoff)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
    } else {
        DVector::zeros(d)
    };

    let weights: Vec<f64> = weights.iter().copied().collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("regression weights"));
    }
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel { weights, intercept })
}

/// Items sorted by ascending predicted rank; ties keep ascending index.
pub fn err_predict(model: &LinearModel, query: &[ObjectVector]) -> Ranking {
    let scores: Vec<f64> = query.iter().map(|o| model.predict(o)).collect();
    Ranking::by_ascending_key(&scores)
}

/// Standardize with training statistics, fit, and rank the query.
pub fn err_rank_raw(train: &[RankingInstance], query: &RankingInstance) -> Result<Ranking> {
    let prepared = preprocess_for_baseline(train, query)?;
    let model = err_fit(&prepared.train)?;
    Ok(err_predict(&model, prepared.test.objects()))
}
