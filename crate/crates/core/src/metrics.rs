//! Edit distances, rank correlation, topographic similarity and
//! referential-game accuracy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedCorpus;
use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Sample};

/// Exact pair enumeration is used up to this many pairs (2,000 samples).
pub const DEFAULT_MAX_PAIRS: usize = 2000 * 1999 / 2;

/// Insert/delete/substitute distance, each operation costing 1.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Number of attributes (hyperattributes excluded) whose values differ.
pub fn attribute_edit_distance(s1: &Sample, s2: &Sample, schema: &AttributeSchema) -> Result<usize> {
    for s in [s1, s2] {
        Sample::from_values(schema, s.id.clone(), s.values().to_vec())?;
    }
    Ok(s1.values().iter().zip(s2.values()).filter(|(a, b)| a != b).count())
}

/// Average ranks, 1-based; tied values share the mean of their rank range.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance("a sequence is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance(format!("need at least 2 observations, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Config("NaN in correlation input".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopSimReport {
    pub rho: f64,
    pub pair_count: usize,
    pub sampled: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopSimOptions {
    /// Pairs beyond this are subsampled; defaults to [`DEFAULT_MAX_PAIRS`].
    pub max_pairs: Option<usize>,
    pub seed: Option<u64>,
}

/// Maps a linear index over the pairs `(i, j)`, `i < j < n`, enumerated
/// row by row, back to the pair.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

/// Spearman correlation between attribute edit distances and Levenshtein
/// distances of representative messages, over sample pairs.
pub fn topsim(corpus: &AnnotatedCorpus, options: &TopSimOptions) -> Result<TopSimReport> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::Config(format!("topsim needs at least 2 samples, got {n}")));
    }
    let total = n * (n - 1) / 2;
    let max_pairs = options.max_pairs.unwrap_or(DEFAULT_MAX_PAIRS);
    let entries = corpus.entries();
    let reps: Vec<_> = entries.iter().map(|e| e.representative()).collect();

    let (pairs, sampled): (Vec<(usize, usize)>, bool) = if total > max_pairs {
        let seed = options
            .seed
            .ok_or_else(|| Error::Config(format!("{total} pairs exceed max_pairs {max_pairs}; a seed is required")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, total, max_pairs).into_vec();
        picked.sort_unstable();
        let mut pairs = Vec::with_capacity(picked.len());
        // walk rows once since `picked` is sorted
        let (mut row, mut row_start) = (0usize, 0usize);
        for k in picked {
            while k >= row_start + (n - row - 1) {
                row_start += n - row - 1;
                row += 1;
            }
            pairs.push((row, row + 1 + (k - row_start)));
        }
        (pairs, true)
    } else {
        ((0..total).map(|k| unrank_pair(k, n)).collect(), false)
    };

    let schema = corpus.schema();
    let distances: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let input = attribute_edit_distance(entries[i].sample(), entries[j].sample(), schema)?;
            let message = levenshtein(reps[i].tokens(), reps[j].tokens());
            Ok((input as f64, message as f64))
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = distances.into_iter().unzip();
    let rho = spearman(&xs, &ys)?;
    Ok(TopSimReport { rho, pair_count: pairs.len(), sampled, seed: if sampled { options.seed } else { None } })
}

/// Success rates of every (speaker, listener) pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    /// `values[speaker][listener]`, each in `[0, 1]`.
    pub values: Vec<Vec<f64>>,
    pub episodes_per_cell: usize,
}

impl AccuracyMatrix {
    pub fn speakers(&self) -> usize {
        self.values.len()
    }

    pub fn listeners(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Mean accuracy each speaker obtains over all listeners.
pub fn accuracy_per_speaker(matrix: &AccuracyMatrix) -> Vec<f64> {
    matrix
        .values
        .iter()
        .map(|row| if row.is_empty() { 0.0 } else { row.iter().sum::<f64>() / row.len() as f64 })
        .collect()
}
