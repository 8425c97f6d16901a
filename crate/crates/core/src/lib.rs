//! Analogy-based object ranking.
//!
//! Training rankings are turned into preference pairs; for each pair of query
//! objects, the training pairs in strongest analogical proportion vote on
//! which query object should come first, and the votes are aggregated into a
//! full ranking with a Bradley-Terry-Luce model.

pub mod aggregate;
pub mod analogy;
pub mod baseline;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod pairwise;
pub mod preprocess;
pub mod selftest;

pub use aggregate::{able2rank_predict, btl_fit, Able2Rank, BtlParams, Ranking, ThetaVector};
pub use analogy::{vector_proportion, Aggregation, ProportionMeasure, DEFAULT_EPSILON};
pub use baseline::{err_fit, err_predict, err_rank_raw, LinearModel};
pub use dataset::{
    extract_pairs, load_dataset, FeatureKind, FeatureSchema, ObjectVector, PreferencePair, PreferenceStore,
    RankingInstance,
};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{grid_search_cv, ranking_loss, run_experiment, ExperimentConfig, ExperimentReport, GridConfig};
pub use pairwise::{app, app_top_k, comparison_matrix, ComparisonMatrix, PairwiseSupport};
