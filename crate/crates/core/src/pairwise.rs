//! Analogical transfer of training preferences onto query pairs.
//!
//! For every query pair `{x_i, x_j}` each training preference `z > z'` is
//! scored in both orientations, `s_ij = v(z, z', x_i, x_j)` and
//! `s_ji = v(z, z', x_j, x_i)`. The entry keeps the larger score and
//! supports `x_i > x_j` iff `s_ij > s_ji`; an exact tie counts as support for
//! `x_j`. The `k` best-scoring entries of each pair then vote in a
//! comparison matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::analogy::{oriented_degrees, ProportionMeasure};
use crate::dataset::{ObjectVector, PreferenceStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEntry {
    pub score: f64,
    pub supports_i_over_j: bool,
    /// Position of the training pair in the preference store.
    pub training_index: usize,
}

/// Scored training preferences for one query pair `(i, j)`, `i < j`, best
/// first. Equal scores keep training-store order.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportList {
    pub i: usize,
    pub j: usize,
    pub entries: Vec<SupportEntry>,
}

/// Support lists for all query pairs, in `(i, j)` lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseSupport {
    n: usize,
    /// Number of training pairs scored per query pair.
    candidates: usize,
    lists: Vec<SupportList>,
}

impl PairwiseSupport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn lists(&self) -> &[SupportList] {
        &self.lists
    }

    /// Number of scalar proportion evaluations performed.
    pub fn evaluations(&self, dimension: usize) -> usize {
        self.lists.len() * self.candidates * 2 * dimension
    }

    /// One CSV row per retained entry:
    /// `pair_i,pair_j,rank_in_list,score,supports_i` (indices 1-based).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "pair_i,pair_j,rank_in_list,score,supports_i")?;
        for list in &self.lists {
            for (rank, e) in list.entries.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    list.i + 1,
                    list.j + 1,
                    rank + 1,
                    e.score,
                    u8::from(e.supports_i_over_j)
                )?;
            }
        }
        Ok(())
    }
}

fn validate_vectors<'a>(vectors: impl Iterator<Item = &'a ObjectVector>, dim: usize) -> Result<()> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if let Some((position, &value)) = v.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfRange { value, position });
        }
    }
    Ok(())
}

fn validate(store: &PreferenceStore, query: &[ObjectVector]) -> Result<usize> {
    let first = store.pairs().first().ok_or(Error::EmptyStore)?;
    if query.len() < 2 {
        return Err(Error::TooFewObjects {
            required: 2,
            got: query.len(),
        });
    }
    let dim = first.preferred.len();
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    validate_vectors(
        store
            .pairs()
            .iter()
            .flat_map(|p| [&p.preferred, &p.dispreferred]),
        dim,
    )?;
    validate_vectors(query.iter(), dim)?;
    Ok(dim)
}

fn query_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect()
}

fn score_pair<'a>(
    store: &'a PreferenceStore,
    m: &'a ProportionMeasure,
    x: &'a [f64],
    y: &'a [f64],
) -> impl Iterator<Item = SupportEntry> + 'a {
    store.pairs().iter().enumerate().map(move |(idx, pair)| {
        let (s_ij, s_ji) = oriented_degrees(m, &pair.preferred, &pair.dispreferred, x, y);
        SupportEntry {
            score: s_ij.max(s_ji),
            supports_i_over_j: s_ij > s_ji,
            training_index: idx,
        }
    })
}

/// Entry wrapper ordered so that the heap's maximum is the worst entry:
/// lowest score, then latest training index.
struct Worst(SupportEntry);

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .score
            .total_cmp(&self.0.score)
            .then(self.0.training_index.cmp(&other.0.training_index))
    }
}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

/// Best `keep` entries, in the same order a full stable descending sort
/// would give.
fn select_top(entries: impl Iterator<Item = SupportEntry>, keep: usize) -> Vec<SupportEntry> {
    if keep == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(keep + 1);
    for e in entries {
        if heap.len() < keep {
            heap.push(Worst(e));
        } else if let Some(worst) = heap.peek() {
            if Worst(e).cmp(worst) == Ordering::Less {
                heap.pop();
                heap.push(Worst(e));
            }
        }
    }
    heap.into_sorted_vec().into_iter().map(|w| w.0).collect()
}

fn sort_descending(entries: &mut [SupportEntry]) {
    entries.sort_by(|a, b| b.score.total_cmp(&a.score));
}

/// Full support lists: every training pair scored for every query pair.
pub fn app(store: &PreferenceStore, query: &[ObjectVector], m: &ProportionMeasure) -> Result<PairwiseSupport> {
    run(store, query, m, None)
}

/// Like [`app`] but retains only the best `keep` entries of each list.
pub fn app_top_k(
    store: &PreferenceStore,
    query: &[ObjectVector],
    m: &ProportionMeasure,
    keep: usize,
) -> Result<PairwiseSupport> {
    run(store, query, m, Some(keep))
}

fn run(
    store: &PreferenceStore,
    query: &[ObjectVector],
    m: &ProportionMeasure,
    keep: Option<usize>,
) -> Result<PairwiseSupport> {
    validate(store, query)?;
    let lists = query_pairs(query.len())
        .into_par_iter()
        .map(|(i, j)| {
            let scored = score_pair(store, m, &query[i], &query[j]);
            let entries = match keep {
                Some(k) => select_top(scored, k),
                None => {
                    let mut all: Vec<_> = scored.collect();
                    sort_descending(&mut all);
                    all
                }
            };
            SupportList { i, j, entries }
        })
        .collect();
    Ok(PairwiseSupport {
        n: query.len(),
        candidates: store.len(),
        lists,
    })
}

/// Pairwise vote counts; `get(i, j)` is the support for `i > j`.
///
/// Counts produced by [`comparison_matrix`] are whole numbers, but any finite
/// non-negative weights are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    n: usize,
    counts: Vec<f64>,
    k_effective: usize,
}

impl ComparisonMatrix {
    pub fn from_counts(counts: Vec<Vec<f64>>) -> Result<Self> {
        let n = counts.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in counts.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("comparison counts"));
            }
            if row.iter().any(|&c| c < 0.0) {
                return Err(Error::InvalidParameter("negative comparison count".into()));
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidParameter("non-zero diagonal count".into()));
            }
            flat.extend_from_slice(row);
        }
        let k_effective = if n >= 2 {
            (counts[0][1] + counts[1][0]).round() as usize
        } else {
            0
        };
        Ok(Self {
            n,
            counts: flat,
            k_effective,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.n + j]
    }

    /// Votes per query pair, `min(k, |D_pair|)`.
    pub fn k_effective(&self) -> usize {
        self.k_effective
    }

    /// `c_ij / (c_ij + c_ji)`, or `None` when the pair has no votes.
    pub fn preference_degree(&self, i: usize, j: usize) -> Option<f64> {
        let total = self.get(i, j) + self.get(j, i);
        (total > 0.0).then(|| self.get(i, j) / total)
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            n: self.n,
            counts: self.counts.iter().map(|c| c * f64::from(factor)).collect(),
            k_effective: self.k_effective * factor as usize,
        }
    }
}

/// Count the top `min(k, candidates)` entries of every support list.
pub fn comparison_matrix(support: &PairwiseSupport, k: usize) -> Result<ComparisonMatrix> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let n = support.n;
    let k_effective = k.min(support.candidates);
    let mut counts = vec![0.0; n * n];
    for list in &support.lists {
        if list.entries.len() < k_effective {
            return Err(Error::InvalidParameter(format!(
                "support list holds {} entries, {} needed",
                list.entries.len(),
                k_effective
            )));
        }
        let wins = list.entries[..k_effective]
            .iter()
            .filter(|e| e.supports_i_over_j)
            .count();
        counts[list.i * n + list.j] += wins as f64;
        counts[list.j * n + list.i] += (k_effective - wins) as f64;
    }
    Ok(ComparisonMatrix {
        n,
        counts,
        k_effective,
    })
}
