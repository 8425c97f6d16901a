//! Ranking loss, cross-validated selection of the proportion measure and `k`,
//! and the train-to-test experiment runner.
//!
//! All randomness comes from ChaCha streams keyed by the configured seed and
//! the repeat/fold index, never from scheduling order, so results are
//! bit-identical across thread counts.

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregate::{Able2Rank, BtlParams, Ranking};
use crate::analogy::{ProportionMeasure, DEFAULT_EPSILON};
use crate::baseline::{err_fit, err_predict};
use crate::dataset::{ObjectVector, PreferenceStore, RankingInstance};
use crate::error::{Error, Result};
use crate::pairwise::{app_top_k, PairwiseSupport};
use crate::preprocess::{preprocess_for_able2rank, preprocess_for_baseline, PreprocessReport};

/// Fraction of item pairs ordered differently by the two rankings.
pub fn ranking_loss(pi: &Ranking, pi_prime: &Ranking) -> Result<f64> {
    let n = pi.len();
    if pi_prime.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pi_prime.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewObjects { required: 2, got: n });
    }
    let (p, q) = (pi.positions(), pi_prime.positions());
    let mut discordant = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if (p[i] < p[j]) != (q[i] < q[j]) {
                discordant += 1;
            }
        }
    }
    Ok(discordant as f64 / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub measures: Vec<ProportionMeasure>,
    pub ks: Vec<usize>,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub btl: BtlParams,
    /// Present query objects in a seeded random order so that index-based
    /// tie-breaking cannot leak the ground truth.
    pub shuffle_queries: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            measures: ProportionMeasure::all(DEFAULT_EPSILON).expect("default epsilon is valid"),
            ks: vec![10, 15, 20],
            folds: 2,
            repeats: 5,
            seed: 42,
            btl: BtlParams::default(),
            shuffle_queries: true,
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return Err(Error::InvalidParameter("no proportion measures given".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::InvalidParameter("k values must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter("need at least 2 folds".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("need at least 1 repeat".into()));
        }
        Ok(())
    }

    fn sorted_ks(&self) -> Vec<usize> {
        let mut ks = self.ks.clone();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub measure: ProportionMeasure,
    pub k: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_measure: ProportionMeasure,
    pub best_k: usize,
    /// One cell per (measure, k), measures in configured order, `k` ascending.
    pub cv_table: Vec<CvCell>,
}

// RNG stream tags
const STREAM_PARTITION: u64 = 1 << 32;
const STREAM_CV_QUERY: u64 = 2 << 32;
const STREAM_TEST_QUERY: u64 = 3 << 32;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Split training data into `folds` groups of ranking instances.
///
/// A single ranking (or fewer rankings than folds) is split by objects,
/// each fold inheriting the induced sub-rankings. With at least as many
/// rankings as folds, whole rankings are dealt round-robin.
fn make_folds(train: &[RankingInstance], folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<RankingInstance>> {
    let mut out = vec![Vec::new(); folds];
    if train.len() >= folds {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(rng);
        for (slot, idx) in order.into_iter().enumerate() {
            out[slot % folds].push(train[idx].clone());
        }
        return out;
    }
    for inst in train {
        let mut positions: Vec<usize> = (0..inst.len()).collect();
        positions.shuffle(rng);
        for (f, fold) in out.iter_mut().enumerate() {
            let chosen: Vec<usize> = positions.iter().skip(f).step_by(folds).copied().collect();
            if !chosen.is_empty() {
                fold.push(inst.subset(&chosen));
            }
        }
    }
    out
}

fn check_cv_size(train: &[RankingInstance], folds: usize) -> Result<()> {
    let required = 2 * folds;
    if train.len() >= folds {
        return Ok(());
    }
    for inst in train {
        if inst.len() < required {
            return Err(Error::TooFewObjects {
                required,
                got: inst.len(),
            });
        }
    }
    Ok(())
}

fn shuffled(objects: &[ObjectVector], perm: &[usize]) -> Vec<ObjectVector> {
    perm.iter().map(|&p| objects[p].clone()).collect()
}

fn permutation(n: usize, rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if let Some(rng) = rng {
        perm.shuffle(rng);
    }
    perm
}

/// Loss of a ranking over presented (possibly shuffled) objects against the
/// ground truth, which is the identity over the original order.
fn loss_against_truth(predicted: &Ranking, perm: &[usize]) -> Result<f64> {
    let order: Vec<usize> = predicted.order().iter().map(|&q| perm[q]).collect();
    ranking_loss(&Ranking::identity(perm.len()), &Ranking::from_order(order)?)
}

/// One validation query of one CV split, prepared for every measure.
struct ValidationTask {
    store: PreferenceStore,
    query: Vec<ObjectVector>,
    perm: Vec<usize>,
}

/// Losses of every k (ascending) for one measure on one validation task.
fn score_task(task: &ValidationTask, measure: ProportionMeasure, ks: &[usize], btl: BtlParams) -> Result<Vec<f64>> {
    let kmax = *ks.last().expect("non-empty k grid");
    let support = app_top_k(&task.store, &task.query, &measure, kmax)?;
    ks.iter()
        .map(|&k| {
            let model = Able2Rank { measure, k, btl };
            let prediction = model.aggregate(&support)?;
            loss_against_truth(&prediction.ranking, &task.perm)
        })
        .collect()
}

/// Repeated K-fold cross-validation over the measure x k grid.
///
/// The cell minimizing the mean validation loss wins; ties go to the smaller
/// `k`, then to the earlier measure in the configured list.
pub fn grid_search_cv(train: &[RankingInstance], config: &GridConfig) -> Result<GridSearchResult> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidParameter("no training instances".into()));
    }
    check_cv_size(train, config.folds)?;
    let ks = config.sorted_ks();

    // (split index, task) for every validation ranking of every split
    let mut tasks: Vec<(usize, ValidationTask)> = Vec::new();
    let mut split = 0;
    for repeat in 0..config.repeats {
        let mut part_rng = rng(config.seed, STREAM_PARTITION + repeat as u64);
        let folds = make_folds(train, config.folds, &mut part_rng);
        for f in 0..config.folds {
            let fold_train: Vec<RankingInstance> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, insts)| insts.iter().cloned())
                .collect();
            let mut query_rng = rng(config.seed, STREAM_CV_QUERY + split as u64);
            for val in folds[f].iter().filter(|v| v.len() >= 2) {
                let prepared = preprocess_for_able2rank(&fold_train, val)?;
                let perm = permutation(val.len(), config.shuffle_queries.then_some(&mut query_rng));
                tasks.push((
                    split,
                    ValidationTask {
                        store: PreferenceStore::from_instances(&prepared.train),
                        query: shuffled(prepared.test.objects(), &perm),
                        perm,
                    },
                ));
            }
            split += 1;
        }
    }
    let splits = split;

    let jobs: Vec<(usize, usize)> = (0..tasks.len())
        .flat_map(|t| (0..config.measures.len()).map(move |m| (t, m)))
        .collect();
    let losses: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(t, m)| score_task(&tasks[t].1, config.measures[m], &ks, config.btl))
        .collect::<Result<_>>()?;

    // per split: sum of losses and number of validation rankings, per cell
    let cells = config.measures.len() * ks.len();
    let mut split_sum = vec![vec![0.0; cells]; splits];
    let mut split_count = vec![0usize; splits];
    for (&(t, m), row) in jobs.iter().zip(&losses) {
        let s = tasks[t].0;
        if m == 0 {
            split_count[s] += 1;
        }
        for (ki, loss) in row.iter().enumerate() {
            split_sum[s][m * ks.len() + ki] += loss;
        }
    }
    let scored_splits: Vec<usize> = (0..splits).filter(|&s| split_count[s] > 0).collect();
    if scored_splits.is_empty() {
        return Err(Error::TooFewObjects { required: 2, got: 1 });
    }

    let mut cv_table = Vec::with_capacity(cells);
    for (m, &measure) in config.measures.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            let total: f64 = scored_splits
                .iter()
                .map(|&s| split_sum[s][m * ks.len() + ki] / split_count[s] as f64)
                .sum();
            cv_table.push(CvCell {
                measure,
                k,
                mean_loss: total / scored_splits.len() as f64,
            });
        }
    }

    let mut best: Option<&CvCell> = None;
    for ki in 0..ks.len() {
        for m in 0..config.measures.len() {
            let cell = &cv_table[m * ks.len() + ki];
            if best.is_none_or(|b| cell.mean_loss < b.mean_loss) {
                best = Some(cell);
            }
        }
    }
    let best = best.expect("non-empty grid");
    Ok(GridSearchResult {
        best_measure: best.measure,
        best_k: best.k,
        cv_table,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    /// Externally obtained SVM-Rank loss, reported verbatim.
    pub svm_loss: Option<f64>,
    /// Keep the top-k* support lists of the final prediction.
    pub keep_support: bool,
}


#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub grid_search: Duration,
    pub able2rank: Duration,
    pub err: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub best_measure: ProportionMeasure,
    pub best_k: usize,
    pub able2rank_loss: f64,
    pub err_loss: f64,
    pub svm_loss: Option<f64>,
    pub cv_table: Vec<CvCell>,
    pub able2rank_ranking: Ranking,
    pub err_ranking: Ranking,
    pub train_preprocess: PreprocessReport,
    pub test_preprocess: PreprocessReport,
    pub support: Option<PairwiseSupport>,
    pub timings: PhaseTimings,
}

pub const REPORT_CSV_HEADER: [&str; 6] = ["experiment", "v*", "k*", "able2rank", "err", "svm"];

impl ExperimentReport {
    /// CSV report: header plus one row. Timings are left out so that
    /// identical runs produce identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("writing report: {e}"));
        w.write_record(REPORT_CSV_HEADER).map_err(io)?;
        w.write_record([
            self.name.clone(),
            self.best_measure.to_string(),
            self.best_k.to_string(),
            format!("{:.6}", self.able2rank_loss),
            format!("{:.6}", self.err_loss),
            self.svm_loss.map(|v| format!("{v:.6}")).unwrap_or_default(),
        ])
        .map_err(io)?;
        w.flush().map_err(|e| Error::InvalidParameter(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("report is UTF-8")
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = format!("{}, {}", self.best_measure, self.best_k);
        let svm = self
            .svm_loss
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        let name_w = self.name.chars().count().max("train → test".chars().count());
        let param_w = params.len().max("(v*, k*)".len());
        writeln!(
            f,
            "{:<name_w$}  {:<param_w$}  {:>9}  {:>6}  {:>6}",
            "train → test", "(v*, k*)", "able2rank", "ERR", "SVM"
        )?;
        writeln!(
            f,
            "{:<name_w$}  {:<param_w$}  {:>9.3}  {:>6.3}  {:>6}",
            self.name, params, self.able2rank_loss, self.err_loss, svm
        )?;
        writeln!(
            f,
            "time: grid search {:.2?}, able2rank {:.2?}, ERR {:.2?}",
            self.timings.grid_search, self.timings.able2rank, self.timings.err
        )
    }
}

fn experiment_name(train: &[RankingInstance], test: &RankingInstance) -> String {
    let names: Vec<&str> = train.iter().map(|t| t.name()).collect();
    format!("{} → {}", names.join("+"), test.name())
}

/// Select `(v*, k*)` on the training data, then rank the test set with
/// able2rank (using all training data) and with the ERR baseline.
pub fn run_experiment(
    train: &[RankingInstance],
    test: &RankingInstance,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    config.grid.validate()?;
    if test.len() < 2 {
        return Err(Error::TooFewObjects {
            required: 2,
            got: test.len(),
        });
    }

    let started = Instant::now();
    let single_cell = config.grid.measures.len() == 1 && config.grid.sorted_ks().len() == 1;
    let (best_measure, best_k, cv_table) = if single_cell {
        (config.grid.measures[0], config.grid.ks[0], Vec::new())
    } else {
        let grid = grid_search_cv(train, &config.grid)?;
        (grid.best_measure, grid.best_k, grid.cv_table)
    };
    let grid_time = started.elapsed();

    let mut test_rng = rng(config.grid.seed, STREAM_TEST_QUERY);
    let perm = permutation(test.len(), config.grid.shuffle_queries.then_some(&mut test_rng));

    let started = Instant::now();
    let prepared = preprocess_for_able2rank(train, test)?;
    let store = PreferenceStore::from_instances(&prepared.train);
    let query = shuffled(prepared.test.objects(), &perm);
    let model = Able2Rank {
        measure: best_measure,
        k: best_k,
        btl: config.grid.btl,
    };
    let support = app_top_k(&store, &query, &model.measure, model.k)?;
    let prediction = model.aggregate(&support)?;
    let able2rank_loss = loss_against_truth(&prediction.ranking, &perm)?;
    let able2rank_time = started.elapsed();

    let started = Instant::now();
    let standardized = preprocess_for_baseline(train, test)?;
    let linear = err_fit(&standardized.train)?;
    let err_ranking = err_predict(&linear, &shuffled(standardized.test.objects(), &perm));
    let err_loss = loss_against_truth(&err_ranking, &perm)?;
    let err_time = started.elapsed();

    let unshuffle = |r: &Ranking| -> Result<Ranking> {
        Ranking::from_order(r.order().iter().map(|&q| perm[q]).collect())
    };

    Ok(ExperimentReport {
        name: experiment_name(train, test),
        best_measure,
        best_k,
        able2rank_loss,
        err_loss,
        svm_loss: config.svm_loss,
        cv_table,
        able2rank_ranking: unshuffle(&prediction.ranking)?,
        err_ranking: unshuffle(&err_ranking)?,
        train_preprocess: prepared.train_report,
        test_preprocess: prepared.test_report,
        support: config.keep_support.then_some(support),
        timings: PhaseTimings {
            grid_search: grid_time,
            able2rank: able2rank_time,
            err: err_time,
        },
    })
}
