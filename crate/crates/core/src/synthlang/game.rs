use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{AnnotatedCorpus, Message};
use crate::error::{Error, Result};
use crate::metrics::AccuracyMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub candidate_count: usize,
    pub episodes: usize,
    pub seed: u64,
    pub speakers: usize,
    pub listeners: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig { candidate_count: 20, episodes: 10_000, seed: 0, speakers: 1, listeners: 1 }
    }
}

/// Empirical message distribution per attribute combination. Serves both
/// as a speaker (sampling) and a listener (likelihood decoding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    table: BTreeMap<Vec<String>, Vec<(Message, u64)>>,
}

impl Language {
    /// Pools the messages of all samples sharing a combination.
    pub fn from_corpus(corpus: &AnnotatedCorpus) -> Self {
        let mut pooled: BTreeMap<Vec<String>, BTreeMap<Message, u64>> = BTreeMap::new();
        for entry in corpus.entries() {
            let slot = pooled.entry(entry.sample().values().to_vec()).or_default();
            for (m, c) in entry.messages() {
                *slot.entry(m.clone()).or_insert(0) += c;
            }
        }
        Language { table: pooled.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect() }
    }

    fn speak<R: Rng>(&self, combination: &[String], rng: &mut R) -> Option<&Message> {
        let options = self.table.get(combination)?;
        let total: u64 = options.iter().map(|(_, c)| c).sum();
        let mut pick = rng.gen_range(0..total);
        for (m, c) in options {
            if pick < *c {
                return Some(m);
            }
            pick -= c;
        }
        unreachable!("pick is below the total count")
    }

    /// `(count, total)`: the likelihood of `message` given `combination`
    /// as an exact fraction; `(0, 1)` for unseen combinations.
    fn likelihood(&self, combination: &[String], message: &Message) -> (u64, u64) {
        match self.table.get(combination) {
            Some(options) => {
                let total = options.iter().map(|(_, c)| c).sum();
                let count = options.iter().find(|(m, _)| m == message).map_or(0, |(_, c)| *c);
                (count, total)
            }
            None => (0, 1),
        }
    }
}

/// Plays the game with populations of identical agents speaking the
/// corpus language.
pub fn run_lewis_game(corpus: &AnnotatedCorpus, config: &GameConfig) -> Result<AccuracyMatrix> {
    let language = Language::from_corpus(corpus);
    let speakers = vec![language.clone(); config.speakers];
    let listeners = vec![language; config.listeners];
    run_population_game(corpus, &speakers, &listeners, config)
}

/// Plays `config.episodes` rounds for every (speaker, listener) pair.
///
/// Each round draws `candidate_count` distinct samples, the first being
/// the target. The speaker samples a message for the target's combination
/// and the listener picks the candidate under which that message is most
/// likely, preferring the smallest sample id on ties. Cell `(s, l)` uses
/// its own ChaCha stream `s * listeners + l` of `config.seed`.
pub fn run_population_game(
    corpus: &AnnotatedCorpus,
    speakers: &[Language],
    listeners: &[Language],
    config: &GameConfig,
) -> Result<AccuracyMatrix> {
    let n = corpus.len();
    if config.candidate_count < 2 {
        return Err(Error::Config("at least 2 candidates are required".into()));
    }
    if config.candidate_count > n {
        return Err(Error::Config(format!("{} candidates exceed {n} samples", config.candidate_count)));
    }
    if config.episodes == 0 {
        return Err(Error::Config("at least one episode is required".into()));
    }
    if speakers.is_empty() || listeners.is_empty() {
        return Err(Error::Config("populations must not be empty".into()));
    }
    let combos: Vec<&[String]> = corpus.entries().iter().map(|e| e.sample().values()).collect();
    for (i, speaker) in speakers.iter().enumerate() {
        if let Some(c) = combos.iter().find(|c| !speaker.table.contains_key(**c)) {
            return Err(Error::Config(format!("speaker {i} has no message for combination {c:?}")));
        }
    }

    let cells: Vec<(usize, usize)> =
        (0..speakers.len()).flat_map(|s| (0..listeners.len()).map(move |l| (s, l))).collect();
    let hits: Vec<usize> = cells
        .par_iter()
        .map(|&(s, l)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((s * listeners.len() + l) as u64);
            let (speaker, listener) = (&speakers[s], &listeners[l]);
            let mut hits = 0;
            for _ in 0..config.episodes {
                let mut candidates = rand::seq::index::sample(&mut rng, n, config.candidate_count).into_vec();
                let target = candidates[0];
                let message = speaker.speak(combos[target], &mut rng).expect("checked above");
                candidates.sort_unstable();
                let mut best = candidates[0];
                let mut best_score = listener.likelihood(combos[best], message);
                for &c in &candidates[1..] {
                    let score = listener.likelihood(combos[c], message);
                    // a/b > c/d  <=>  a*d > c*b
                    if score.0 as u128 * best_score.1 as u128 > best_score.0 as u128 * score.1 as u128 {
                        best = c;
                        best_score = score;
                    }
                }
                if best == target {
                    hits += 1;
                }
            }
            hits
        })
        .collect();

    let values = hits
        .chunks(listeners.len())
        .map(|row| row.iter().map(|&h| h as f64 / config.episodes as f64).collect())
        .collect();
    Ok(AccuracyMatrix { values, episodes_per_cell: config.episodes })
}
