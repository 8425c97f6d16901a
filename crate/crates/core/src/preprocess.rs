//! Feature preprocessing.
//!
//! The analogy-based ranker needs every real-valued feature in `[0, 1]`: a
//! column is first log-transformed when that makes it less skewed, then
//! min-max normalized. The log decision is taken on the training data and
//! replayed on the test data, while the min-max statistics are computed on
//! each split on its own. The regression baseline instead standardizes with
//! training statistics.
//!
//! Binary and ordinal columns are already encoded in `[0, 1]` and pass
//! through unchanged in both pipelines.

use std::fmt;

use crate::dataset::{FeatureKind, RankingInstance};
use crate::error::{Error, Result};

/// Adjusted Fisher-Pearson sample skewness `G1 = g1 * sqrt(n(n-1)) / (n-2)`.
///
/// Returns 0 for fewer than three values or a constant column.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let (lo, hi) = min_max(values);
    if lo == hi {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let dev = v - mean;
        m2 += dev * dev;
        m3 += dev * dev * dev;
    }
    m2 /= nf;
    m3 /= nf;
    if m2 <= 0.0 {
        return 0.0;
    }
    let g1 = m3 / m2.powf(1.5);
    g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
}

/// Natural-log transform of a strictly positive column, kept only when it
/// lowers the absolute skewness.
pub fn maybe_log_transform(column: &[f64]) -> (Vec<f64>, bool) {
    if !prefers_log(column) {
        return (column.to_vec(), false);
    }
    (column.iter().map(|v| v.ln()).collect(), true)
}

fn prefers_log(column: &[f64]) -> bool {
    if column.is_empty() || column.iter().any(|&v| v <= 0.0) {
        return false;
    }
    let logged: Vec<f64> = column.iter().map(|v| v.ln()).collect();
    skewness(&logged).abs() < skewness(column).abs()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn apply_min_max(column: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if hi == lo {
        return vec![0.5; column.len()];
    }
    let span = hi - lo;
    column
        .iter()
        .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

/// `(x - min) / (max - min)`; a constant column maps to 0.5 everywhere.
pub fn min_max_normalize(column: &[f64]) -> Vec<f64> {
    let (lo, hi) = min_max(column);
    apply_min_max(column, lo, hi)
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn apply_standardize(column: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; column.len()];
    }
    column.iter().map(|v| (v - mean) / sd).collect()
}

/// `(x - mean) / sd` with the sample standard deviation; constant columns
/// map to zeros.
pub fn standardize(column: &[f64]) -> Vec<f64> {
    let (mean, sd) = mean_and_sd(column);
    apply_standardize(column, mean, sd)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnTransform {
    PassThrough,
    MinMax { log_applied: bool, min: f64, max: f64 },
    Standardize { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub name: String,
    pub kind: &'static str,
    pub transform: ColumnTransform,
}

/// What was done to each column of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub split: String,
    pub columns: Vec<ColumnReport>,
}

impl PreprocessReport {
    pub fn log_applied(&self, column: usize) -> bool {
        matches!(
            self.columns[column].transform,
            ColumnTransform::MinMax {
                log_applied: true,
                ..
            }
        )
    }
}

impl fmt::Display for PreprocessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            let key = format!("{}.{}", self.split, c.name);
            writeln!(f, "{key}.kind={}", c.kind)?;
            match c.transform {
                ColumnTransform::PassThrough => writeln!(f, "{key}.transform=none")?,
                ColumnTransform::MinMax {
                    log_applied,
                    min,
                    max,
                } => {
                    writeln!(f, "{key}.transform=minmax")?;
                    writeln!(f, "{key}.log_applied={log_applied}")?;
                    writeln!(f, "{key}.min={min}")?;
                    writeln!(f, "{key}.max={max}")?;
                }
                ColumnTransform::Standardize { mean, sd } => {
                    writeln!(f, "{key}.transform=standardize")?;
                    writeln!(f, "{key}.mean={mean}")?;
                    writeln!(f, "{key}.sd={sd}")?;
                }
            }
        }
        Ok(())
    }
}

/// Transformed training instances and test instance, with one report per split.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub train: Vec<RankingInstance>,
    pub test: RankingInstance,
    pub train_report: PreprocessReport,
    pub test_report: PreprocessReport,
}

fn check_schemas(train: &[RankingInstance], test: &RankingInstance) -> Result<()> {
    if train.is_empty() {
        return Err(Error::InvalidParameter("no training instances".into()));
    }
    for t in train {
        t.schema().ensure_compatible(test.schema())?;
    }
    Ok(())
}

fn pooled_column(instances: &[RankingInstance], k: usize) -> Vec<f64> {
    instances.iter().flat_map(|inst| inst.column(k)).collect()
}

/// Splits a pooled column back into per-instance columns.
fn unpool(instances: &[RankingInstance], pooled: Vec<f64>) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(instances.len());
    let mut rest = pooled.as_slice();
    for inst in instances {
        let (head, tail) = rest.split_at(inst.len());
        out.push(head.to_vec());
        rest = tail;
    }
    out
}

struct Builder<'a> {
    instances: &'a [RankingInstance],
    // columns[instance][feature]
    columns: Vec<Vec<Vec<f64>>>,
}

impl<'a> Builder<'a> {
    fn new(instances: &'a [RankingInstance]) -> Self {
        Self {
            instances,
            columns: vec![Vec::new(); instances.len()],
        }
    }

    fn push(&mut self, pooled: Vec<f64>) {
        for (slot, col) in self
            .columns
            .iter_mut()
            .zip(unpool(self.instances, pooled))
        {
            slot.push(col);
        }
    }

    fn finish(self) -> Vec<RankingInstance> {
        self.instances
            .iter()
            .zip(&self.columns)
            .map(|(inst, cols)| inst.with_columns(cols))
            .collect()
    }
}

/// Log-transform decision learned on the pooled training data and replayed
/// on the test split; min-max statistics computed per split.
///
/// A test column whose train decision was "log" but which holds a
/// non-positive value is left in its raw scale (reported as
/// `log_applied=false`).
pub fn preprocess_for_able2rank(train: &[RankingInstance], test: &RankingInstance) -> Result<Preprocessed> {
    check_schemas(train, test)?;
    let schema = test.schema();
    let mut train_builder = Builder::new(train);
    let test_slice = std::slice::from_ref(test);
    let mut test_builder = Builder::new(test_slice);
    let mut train_cols = Vec::new();
    let mut test_cols = Vec::new();

    for (k, column) in schema.columns().iter().enumerate() {
        let train_raw = pooled_column(train, k);
        let test_raw = test.column(k);
        if !column.kind.is_numeric() {
            train_builder.push(train_raw);
            test_builder.push(test_raw);
            for cols in [&mut train_cols, &mut test_cols] {
                cols.push(ColumnReport {
                    name: column.name.clone(),
                    kind: column.kind.name(),
                    transform: ColumnTransform::PassThrough,
                });
            }
            continue;
        }

        let (train_vals, log_applied) = maybe_log_transform(&train_raw);
        let test_log = log_applied && test_raw.iter().all(|&v| v > 0.0);
        let test_vals: Vec<f64> = if test_log {
            test_raw.iter().map(|v| v.ln()).collect()
        } else {
            test_raw
        };

        for (vals, log, builder, cols) in [
            (train_vals, log_applied, &mut train_builder, &mut train_cols),
            (test_vals, test_log, &mut test_builder, &mut test_cols),
        ] {
            let (min, max) = min_max(&vals);
            builder.push(apply_min_max(&vals, min, max));
            cols.push(ColumnReport {
                name: column.name.clone(),
                kind: column.kind.name(),
                transform: ColumnTransform::MinMax {
                    log_applied: log,
                    min,
                    max,
                },
            });
        }
    }

    Ok(Preprocessed {
        train: train_builder.finish(),
        test: test_builder.finish().remove(0),
        train_report: PreprocessReport {
            split: "train".into(),
            columns: train_cols,
        },
        test_report: PreprocessReport {
            split: "test".into(),
            columns: test_cols,
        },
    })
}

/// Standardization of numeric columns with training mean and sample
/// standard deviation, applied to both splits.
pub fn preprocess_for_baseline(train: &[RankingInstance], test: &RankingInstance) -> Result<Preprocessed> {
    check_schemas(train, test)?;
    let schema = test.schema();
    let mut train_builder = Builder::new(train);
    let test_slice = std::slice::from_ref(test);
    let mut test_builder = Builder::new(test_slice);
    let mut reports = Vec::new();

    for (k, column) in schema.columns().iter().enumerate() {
        let train_raw = pooled_column(train, k);
        let test_raw = test.column(k);
        let transform = if matches!(column.kind, FeatureKind::Numeric) {
            let (mean, sd) = mean_and_sd(&train_raw);
            train_builder.push(apply_standardize(&train_raw, mean, sd));
            test_builder.push(apply_standardize(&test_raw, mean, sd));
            ColumnTransform::Standardize { mean, sd }
        } else {
            train_builder.push(train_raw);
            test_builder.push(test_raw);
            ColumnTransform::PassThrough
        };
        reports.push(ColumnReport {
            name: column.name.clone(),
            kind: column.kind.name(),
            transform,
        });
    }

    Ok(Preprocessed {
        train: train_builder.finish(),
        test: test_builder.finish().remove(0),
        train_report: PreprocessReport {
            split: "train".into(),
            columns: reports.clone(),
        },
        test_report: PreprocessReport {
            split: "test".into(),
            columns: reports,
        },
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::E;
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{Column, FeatureSchema, ObjectVector};

    // Reference values from scipy.stats.skew(..., bias=False).
    const SKEW_1_2_3_4_100: f64 = 2.232395911636458;
    const SKEW_EXP_COLUMN: f64 = 2.2360679774997902;
    const SKEW_LOG_EXP_COLUMN: f64 = 2.2324700284062664;
    const SKEW_LOG_1_TO_5: f64 = -0.8726837769015968;

    #[test]
    fn skewness_matches_reference() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0.0);
        assert_eq!(skewness(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(skewness(&[1.0, 2.0]), 0.0);
        assert_abs_diff_eq!(skewness(&[1.0, 2.0, 3.0, 4.0, 100.0]), SKEW_1_2_3_4_100, epsilon = 1e-12);
        let logs: Vec<f64> = [1.0f64, 2.0, 3.0, 4.0, 5.0].iter().map(|v| v.ln()).collect();
        assert_abs_diff_eq!(skewness(&logs), SKEW_LOG_1_TO_5, epsilon = 1e-12);
    }

    #[test]
    fn log_applied_for_extreme_right_skew() {
        let col = [1.0, E, E.powi(2), E.powi(3), E.powi(100)];
        assert_abs_diff_eq!(skewness(&col), SKEW_EXP_COLUMN, epsilon = 1e-9);
        let logs: Vec<f64> = col.iter().map(|v| v.ln()).collect();
        assert_abs_diff_eq!(skewness(&logs), SKEW_LOG_EXP_COLUMN, epsilon = 1e-9);
        let (out, applied) = maybe_log_transform(&col);
        assert!(applied);
        assert_abs_diff_eq!(out[4], 100.0, epsilon = 1e-12);
    }

    #[test]
    fn log_skipped_for_nonpositive_or_symmetric() {
        let (out, applied) = maybe_log_transform(&[0.0, 1.0, 1000.0, 2.0]);
        assert!(!applied);
        assert_eq!(out, vec![0.0, 1.0, 1000.0, 2.0]);
        assert!(!maybe_log_transform(&[-1.0, 5.0, 100.0]).1);
        let (out, applied) = maybe_log_transform(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(!applied);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn min_max_examples() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[7.0, 7.0, 7.0]), vec![0.5; 3]);
        let out = min_max_normalize(&[0.0, 1.0, 3.0]);
        assert_eq!(out[0], 0.0);
        assert_abs_diff_eq!(out[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(out[2], 1.0);
    }

    #[test]
    fn standardize_examples() {
        let out = standardize(&[1.0, 3.0]);
        assert_abs_diff_eq!(out[0], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(standardize(&[5.0, 5.0, 5.0]), vec![0.0; 3]);
        assert_eq!(standardize(&[5.0]), vec![0.0]);
    }

    fn mixed_instance(name: &str, rows: Vec<[f64; 2]>) -> RankingInstance {
        let schema = FeatureSchema::new(vec![
            Column {
                name: "x".into(),
                kind: FeatureKind::Numeric,
            },
            Column {
                name: "flag".into(),
                kind: FeatureKind::Binary {
                    values: ["n".into(), "y".into()],
                },
            },
        ])
        .unwrap();
        RankingInstance::new(
            name,
            Arc::new(schema),
            rows.into_iter().map(|r| ObjectVector::new(r.to_vec())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn log_decision_propagates_from_train_to_test() {
        // Train: strongly right-skewed, so log wins.
        let train = mixed_instance(
            "train",
            vec![[1.0, 0.0], [E, 1.0], [E.powi(2), 0.0], [E.powi(3), 1.0], [E.powi(100), 0.0]],
        );
        // Test on its own would not prefer the log.
        let test_raw = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(!maybe_log_transform(&test_raw).1);
        let test = mixed_instance("test", test_raw.iter().map(|&v| [v, 1.0]).collect());

        let out = preprocess_for_able2rank(&[train], &test).unwrap();
        assert!(out.train_report.log_applied(0));
        assert!(out.test_report.log_applied(0));
        let expected = min_max_normalize(&test_raw.map(f64::ln));
        assert_eq!(out.test.column(0), expected);
        // binary column untouched
        assert_eq!(out.test.column(1), vec![1.0; 5]);
        assert_eq!(out.train[0].column(1), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn test_split_with_nonpositive_values_skips_log() {
        let train = mixed_instance(
            "train",
            vec![[1.0, 0.0], [E, 1.0], [E.powi(2), 0.0], [E.powi(3), 1.0], [E.powi(100), 0.0]],
        );
        let test = mixed_instance("test", vec![[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]]);
        let out = preprocess_for_able2rank(&[train], &test).unwrap();
        assert!(out.train_report.log_applied(0));
        assert!(!out.test_report.log_applied(0));
        assert_eq!(out.test.column(0), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn all_binary_is_identity() {
        let schema = Arc::new(FeatureSchema::parse("a,binary,0,1\nb,binary,f,t").unwrap());
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let inst = RankingInstance::new(
            "b",
            schema,
            rows.into_iter().map(ObjectVector::new).collect(),
        )
        .unwrap();
        let out = preprocess_for_able2rank(std::slice::from_ref(&inst), &inst).unwrap();
        assert_eq!(out.train[0], inst);
        assert_eq!(out.test, inst);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let a = RankingInstance::from_rows("a", vec![vec![1.0, 2.0]]).unwrap();
        let b = RankingInstance::from_rows("b", vec![vec![1.0]]).unwrap();
        assert!(matches!(
            preprocess_for_able2rank(std::slice::from_ref(&a), &b),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(preprocess_for_baseline(&[a], &b).is_err());
    }

    #[test]
    fn baseline_uses_training_statistics() {
        let train = RankingInstance::from_rows("tr", vec![vec![1.0], vec![3.0]]).unwrap();
        let test = RankingInstance::from_rows("te", vec![vec![5.0], vec![2.0]]).unwrap();
        let out = preprocess_for_baseline(&[train], &test).unwrap();
        let sd = 2f64.sqrt();
        assert_eq!(out.test.column(0), vec![3.0 / sd, 0.0]);
        assert_eq!(
            out.train_report.columns[0].transform,
            ColumnTransform::Standardize { mean: 2.0, sd }
        );
    }

    #[test]
    fn multiple_training_instances_are_pooled() {
        let a = RankingInstance::from_rows("a", vec![vec![0.0], vec![2.0]]).unwrap();
        let b = RankingInstance::from_rows("b", vec![vec![4.0]]).unwrap();
        let q = RankingInstance::from_rows("q", vec![vec![1.0], vec![3.0]]).unwrap();
        let out = preprocess_for_able2rank(&[a, b], &q).unwrap();
        assert_eq!(out.train[0].column(0), vec![0.0, 0.5]);
        assert_eq!(out.train[1].column(0), vec![1.0]);
        assert_eq!(out.test.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn report_is_key_value_text() {
        let a = RankingInstance::from_rows("a", vec![vec![2.0], vec![4.0], vec![6.0]]).unwrap();
        let out = preprocess_for_able2rank(std::slice::from_ref(&a), &a).unwrap();
        let text = out.train_report.to_string();
        assert_eq!(
            text,
            "train.x1.kind=numeric\ntrain.x1.transform=minmax\ntrain.x1.log_applied=false\ntrain.x1.min=2\ntrain.x1.max=6\n"
        );
    }

    proptest! {
        #[test]
        fn min_max_in_unit_interval_and_monotone(col in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let out = min_max_normalize(&col);
            for (i, &a) in out.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&a));
                for (j, &b) in out.iter().enumerate() {
                    if col[i] < col[j] {
                        prop_assert!(a <= b);
                    }
                }
            }
        }

        #[test]
        fn log_transform_preserves_order(col in prop::collection::vec(1e-3f64..1e6, 3..30)) {
            let (out, _) = maybe_log_transform(&col);
            for i in 0..col.len() {
                for j in 0..col.len() {
                    if col[i] < col[j] {
                        prop_assert!(out[i] < out[j]);
                    }
                }
            }
        }

        #[test]
        fn standardize_moments(col in prop::collection::vec(-1e3f64..1e3, 2..50)) {
            let out = standardize(&col);
            let n = out.len() as f64;
            let mean = out.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let (lo, hi) = min_max(&col);
            if hi > lo {
                let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn min_max_idempotent_on_normalized(mut col in prop::collection::vec(0f64..1.0, 2..30)) {
            col.push(0.0);
            col.push(1.0);
            let once = min_max_normalize(&col);
            let twice = min_max_normalize(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
