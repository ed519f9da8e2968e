//! Weight tuning by coordinate ascent on corpus BLEU over accumulated n-best lists.
//!
//! Each line search is exact: along one weight every candidate's model score
//! is a line, the per-sentence winners are read off the upper envelope, and
//! BLEU is evaluated once per interval between envelope breakpoints.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::ParallelCorpus;
use crate::decoder::{Decoder, DecoderParams, FeatureVector, FeatureWeights, Models, NUM_FEATURES, OOV};
use crate::eval::{bleu, brevity_penalty};

use super::HarnessError;

const ORDER: usize = 4;
const MIN_GAIN: f64 = 1e-4;
const MAX_SWEEPS: usize = 10;

/// Sufficient statistics for corpus BLEU: matches and totals per order, then lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; ORDER],
    pub totals: [usize; ORDER],
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn of(cand: &[String], refs: &[Vec<String>]) -> Self {
        let b = bleu::<f64, _>(&[cand.to_vec()], &[refs.to_vec()], ORDER).expect("one sentence with references");
        let mut s = BleuStats {
            cand_len: b.cand_len,
            ref_len: b.ref_len,
            ..Default::default()
        };
        s.matches.copy_from_slice(&b.matches);
        s.totals.copy_from_slice(&b.totals);
        s
    }

    fn add(&mut self, o: &Self) {
        for k in 0..ORDER {
            self.matches[k] += o.matches[k];
            self.totals[k] += o.totals[k];
        }
        self.cand_len += o.cand_len;
        self.ref_len += o.ref_len;
    }

    fn sub(&mut self, o: &Self) {
        for k in 0..ORDER {
            self.matches[k] -= o.matches[k];
            self.totals[k] -= o.totals[k];
        }
        self.cand_len -= o.cand_len;
        self.ref_len -= o.ref_len;
    }

    pub fn score(&self) -> f64 {
        if self.matches.contains(&0) {
            return 0.0;
        }
        let log_p: f64 = (0..ORDER)
            .map(|k| (self.matches[k] as f64 / self.totals[k] as f64).ln())
            .sum::<f64>()
            / ORDER as f64;
        brevity_penalty::<f64>(self.cand_len, self.ref_len) * log_p.exp()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    features: FeatureVector,
    stats: BleuStats,
}

/// Distinct n-best entries per dev sentence, accumulated across rounds.
#[derive(Debug, Clone, Default)]
pub struct NbestPool {
    sentences: Vec<Vec<Candidate>>,
    seen: Vec<HashSet<(Vec<String>, [u64; NUM_FEATURES])>>,
}

impl NbestPool {
    pub fn new(n: usize) -> Self {
        Self {
            sentences: vec![Vec::new(); n],
            seen: vec![HashSet::new(); n],
        }
    }

    /// Whether the entry was new.
    pub fn add(&mut self, sent: usize, translation: Vec<String>, features: FeatureVector, refs: &[Vec<String>]) -> bool {
        let key = (translation, features.map(f64::to_bits));
        if !self.seen[sent].insert(key.clone()) {
            return false;
        }
        let stats = BleuStats::of(&key.0, refs);
        self.sentences[sent].push(Candidate { features, stats });
        true
    }

    pub fn len(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn best_index(&self, sent: usize, w: &FeatureWeights) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, c) in self.sentences[sent].iter().enumerate() {
            let s = w.dot(&c.features);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }

    /// Corpus BLEU of the model-best candidate of each sentence under `w`.
    pub fn bleu(&self, w: &FeatureWeights) -> f64 {
        let mut total = BleuStats::default();
        for s in 0..self.sentences.len() {
            if !self.sentences[s].is_empty() {
                total.add(&self.sentences[s][self.best_index(s, w)].stats);
            }
        }
        total.score()
    }

    /// Winning candidate along `w + t * e_k`: `(breakpoint, candidate)` pairs,
    /// the first breakpoint being negative infinity.
    fn envelope(&self, sent: usize, w: &FeatureWeights, k: usize) -> Vec<(f64, usize)> {
        let mut lines: Vec<(f64, f64, usize)> = self.sentences[sent]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let slope = c.features[k];
                (slope, w.dot(&c.features) - w.0[k] * slope, i)
            })
            .collect();
        // by slope, then the higher intercept first so equal slopes keep the best line
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        lines.dedup_by(|b, a| a.0 == b.0);
        let mut hull: Vec<(f64, f64, usize, f64)> = Vec::new();
        for (m, c, i) in lines {
            let mut start = f64::NEG_INFINITY;
            while let Some(&(m0, c0, _, s0)) = hull.last() {
                let x = (c0 - c) / (m - m0);
                if x <= s0 {
                    hull.pop();
                } else {
                    start = x;
                    break;
                }
            }
            hull.push((m, c, i, start));
        }
        hull.into_iter().map(|(_, _, i, s)| (s, i)).collect()
    }

    /// Best value for weight `k` holding the others fixed; `None` when no value beats the current one.
    fn line_search(&self, w: &FeatureWeights, k: usize) -> Option<(f64, f64)> {
        let envs: Vec<Vec<(f64, usize)>> = (0..self.sentences.len())
            .map(|s| if self.sentences[s].is_empty() { Vec::new() } else { self.envelope(s, w, k) })
            .collect();
        let mut stats = BleuStats::default();
        let mut events: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (s, env) in envs.iter().enumerate() {
            if let Some(&(_, first)) = env.first() {
                stats.add(&self.sentences[s][first].stats);
            }
            for pair in env.windows(2) {
                events.push((pair[1].0, s, pair[0].1, pair[1].1));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let current = self.bleu(w);
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |value: f64, score: f64| {
            if score > current + 1e-12 && best.is_none_or(|(_, b)| score > b + 1e-12) {
                best = Some((value, score));
            }
        };
        let first = events.first()?.0;
        consider(first - 1.0, stats.score());
        let mut i = 0;
        while i < events.len() {
            let x = events[i].0;
            while i < events.len() && events[i].0 == x {
                let (_, s, from, to) = events[i];
                stats.sub(&self.sentences[s][from].stats);
                stats.add(&self.sentences[s][to].stats);
                i += 1;
            }
            let next = events.get(i).map_or(x + 2.0, |e| e.0);
            consider((x + next) / 2.0, stats.score());
        }
        best
    }

    /// Coordinate ascent from `init`; never returns weights with lower pool BLEU.
    pub fn optimize(&self, init: &FeatureWeights, rng: &mut ChaCha8Rng) -> FeatureWeights {
        let mut w = *init;
        let mut dims: Vec<usize> = (0..NUM_FEATURES).filter(|&k| k != OOV).collect();
        for _ in 0..MAX_SWEEPS {
            dims.shuffle(rng);
            let mut improved = false;
            for &k in &dims {
                if let Some((v, _)) = self.line_search(&w, k) {
                    w.0[k] = v;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TuneConfig {
    pub rounds: usize,
    pub nbest: usize,
    pub seed: u64,
    pub params: DecoderParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub weights: FeatureWeights,
    /// Dev BLEU of the 1-best output under the initial weights, then after each round.
    pub history: Vec<f64>,
    pub best_bleu: f64,
}

fn decode_dev(dev: &ParallelCorpus, models: Models, w: FeatureWeights, params: &DecoderParams) -> Vec<Vec<(Vec<String>, FeatureVector)>> {
    let decoder = Decoder::new(models, w);
    dev.pairs
        .par_iter()
        .map(|p| {
            decoder
                .decode(&p.src, params)
                .nbest
                .into_iter()
                .map(|d| (d.translation(), d.features))
                .collect()
        })
        .collect()
}

/// Re-decodes `dev` each round, grows the n-best pool and re-optimizes on it.
/// Returns the weights whose 1-best dev output scored highest, `init` included.
pub fn tune_weights(dev: &ParallelCorpus, models: Models, init: FeatureWeights, cfg: &TuneConfig) -> Result<TuneOutcome, HarnessError> {
    if dev.is_empty() {
        return Err(HarnessError::EmptyDev);
    }
    let refs: Vec<Vec<Vec<String>>> = dev.pairs.iter().map(|p| vec![p.tgt.clone()]).collect();
    let mut params = cfg.params;
    params.nbest = cfg.nbest.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pool = NbestPool::new(dev.len());

    let absorb = |pool: &mut NbestPool, w: FeatureWeights| -> f64 {
        let lists = decode_dev(dev, models, w, &params);
        let mut one_best = BleuStats::default();
        for (s, list) in lists.into_iter().enumerate() {
            if let Some((t, _)) = list.first() {
                one_best.add(&BleuStats::of(t, &refs[s]));
            }
            for (t, f) in list {
                pool.add(s, t, f, &refs[s]);
            }
        }
        one_best.score()
    };

    let first = absorb(&mut pool, init);
    let mut history = vec![first];
    let (mut best_w, mut best_bleu) = (init, first);
    let mut w = init;
    for _ in 0..cfg.rounds {
        w = pool.optimize(&w, &mut rng);
        let b = absorb(&mut pool, w);
        let prev = *history.last().unwrap_or(&first);
        history.push(b);
        if b > best_bleu {
            best_w = w;
            best_bleu = b;
        }
        if b - prev < MIN_GAIN {
            break;
        }
    }
    Ok(TuneOutcome {
        weights: best_w,
        history,
        best_bleu,
    })
}
