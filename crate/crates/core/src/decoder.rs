//! Phrase-based stack decoder with a log-linear model over fourteen features.
//!
//! Hypotheses are grouped into stacks by the number of covered source words.
//! Two hypotheses recombine when their coverage, last translation option and
//! language model state agree: everything scored later depends only on those.
//! The last option matters twice, through its source span (distortion and
//! orientation) and through its backward reordering distribution, which is
//! charged when the next phrase is placed.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lm::{NGramModel, WordId, BOS_ID, EOS_ID};
use crate::phrase::{spans_orientation, Direction, Orientation, PhraseScores, PhraseTable, ReorderingModel, Span};

pub const NUM_FEATURES: usize = 14;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "phi_ts",
    "phi_st",
    "lex_ts",
    "lex_st",
    "lm",
    "fwd_m",
    "fwd_s",
    "fwd_d",
    "bwd_m",
    "bwd_s",
    "bwd_d",
    "distortion",
    "word_penalty",
    "oov",
];

const LM: usize = 4;
const FWD: usize = 5;
const BWD: usize = 8;
const DISTORTION: usize = 11;
const WORD_PENALTY: usize = 12;
pub const OOV: usize = 13;

/// Natural-log cost charged for each source word copied through untranslated.
pub const OOV_LOG_PENALTY: f64 = -23.025850929940457; // ln 1e-10

const LN_10: f64 = std::f64::consts::LN_10;

pub type FeatureVector = [f64; NUM_FEATURES];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("line {line}: {message}")]
    BadWeights { line: usize, message: String },
}

/// Log-linear weights, one per feature in `FEATURE_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights(pub FeatureVector);

impl Default for FeatureWeights {
    fn default() -> Self {
        let mut w = [0.0; NUM_FEATURES];
        w[..4].copy_from_slice(&[0.2; 4]);
        w[LM] = 0.5;
        w[FWD..FWD + 6].copy_from_slice(&[0.3; 6]);
        w[DISTORTION] = 0.3;
        // the word penalty feature is negative, so a negative weight rewards length
        w[WORD_PENALTY] = -1.0;
        w[OOV] = 1.0;
        FeatureWeights(w)
    }
}

impl FeatureWeights {
    pub fn zero() -> Self {
        FeatureWeights([0.0; NUM_FEATURES])
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), DecodeError> {
        let i = FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| DecodeError::UnknownFeature(name.to_string()))?;
        self.0[i] = value;
        Ok(())
    }

    pub fn dot(&self, h: &FeatureVector) -> f64 {
        self.0.iter().zip(h).map(|(w, x)| w * x).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        FeatureWeights(self.0.map(|w| w * k))
    }

    /// `name=value` lines in feature order.
    pub fn to_cfg(&self) -> String {
        FEATURE_NAMES
            .iter()
            .zip(self.0)
            .map(|(n, w)| format!("{n}={w}\n"))
            .collect()
    }

    /// Parses `name=value` lines; `#` starts a comment, unnamed features keep their defaults.
    pub fn from_cfg(text: &str) -> Result<Self, DecodeError> {
        let mut w = FeatureWeights::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| DecodeError::BadWeights { line: n + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected name=value".into()))?;
            let v: f64 = v.trim().parse().map_err(|e| bad(format!("{e}")))?;
            if !v.is_finite() {
                return Err(bad("weight must be finite".into()));
            }
            w.set(k.trim(), v)?;
        }
        Ok(w)
    }
}

impl fmt::Display for FeatureWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cfg())
    }
}

impl FromStr for FeatureWeights {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, DecodeError> {
        Self::from_cfg(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderParams {
    /// Hypotheses kept per stack; `usize::MAX` disables pruning.
    pub beam_size: usize,
    /// Largest allowed jump; `None` for unlimited reordering.
    pub distortion_limit: Option<usize>,
    pub nbest: usize,
    /// Translation options kept per source span, best estimated first.
    pub max_options: usize,
}

impl Default for DecoderParams {
    fn default() -> Self {
        Self {
            beam_size: 100,
            distortion_limit: Some(6),
            nbest: 1,
            max_options: 20,
        }
    }
}

impl DecoderParams {
    /// No pruning of any kind.
    pub fn exact() -> Self {
        Self {
            beam_size: usize::MAX,
            distortion_limit: None,
            nbest: 1,
            max_options: usize::MAX,
        }
    }
}

/// Trained models shared by every decode call.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub phrases: &'a PhraseTable,
    pub reordering: &'a ReorderingModel,
    /// `None` turns the language model feature off.
    pub lm: Option<&'a NGramModel<f64>>,
}

/// One phrase of a derivation: which source span it covers and what it emits.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub src_span: Span,
    pub tgt: Vec<String>,
    /// Copied through because the source word has no translation.
    pub oov: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub steps: Vec<Step>,
    pub features: FeatureVector,
    pub score: f64,
}

impl Derivation {
    pub fn translation(&self) -> Vec<String> {
        self.steps.iter().flat_map(|s| s.tgt.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeResult {
    /// Best first; empty only for an empty input.
    pub nbest: Vec<Derivation>,
    pub hypotheses_created: usize,
    /// `score + future cost` of every hypothesis on the best derivation, initial one first.
    pub best_path_bounds: Vec<f64>,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&Derivation> {
        self.nbest.first()
    }

    pub fn translation(&self) -> Vec<String> {
        self.best().map(Derivation::translation).unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
struct TransOption {
    span: Span,
    tgt: Vec<String>,
    tgt_ids: Vec<WordId>,
    /// Phrase, word penalty and OOV features.
    static_feats: FeatureVector,
    fwd: [f64; 3],
    bwd: [f64; 3],
    oov: bool,
    /// Admissible upper bound on everything this option can contribute.
    estimate: f64,
}

fn ln_probs(rm: &ReorderingModel, src: &str, tgt: &str, dir: Direction) -> [f64; 3] {
    Orientation::ALL.map(|o| rm.prob(src, tgt, dir, o).ln())
}

fn phrase_feats(sc: &PhraseScores) -> [f64; 4] {
    sc.as_array().map(f64::ln)
}

/// Small fixed-width bit set over source positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set_span(&mut self, s: Span) {
        for i in s.start..=s.end {
            self.0[i / 64] |= 1 << (i % 64);
        }
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    prev: Option<usize>,
    option: Option<usize>,
    coverage: Bits,
    covered: usize,
    lm_state: Vec<WordId>,
    delta: FeatureVector,
    feats: FeatureVector,
    score: f64,
    future: f64,
    /// Hypotheses recombined into this one.
    losers: Vec<usize>,
}

type RecombKey = (Bits, Option<usize>, Vec<WordId>);

/// `score + future` and creation order, worst first.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ranked(f64, Reverse<usize>);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Ranked {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

pub struct Decoder<'a> {
    models: Models<'a>,
    weights: FeatureWeights,
    /// Per LM vocabulary id, an upper bound on its log10 probability.
    lm_bound: Vec<f64>,
    max_phrase_len: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(models: Models<'a>, weights: FeatureWeights) -> Self {
        Self {
            lm_bound: models.lm.map(NGramModel::optimistic_logprobs).unwrap_or_default(),
            max_phrase_len: models.phrases.max_src_len().max(1),
            models,
            weights,
        }
    }

    pub fn weights(&self) -> &FeatureWeights {
        &self.weights
    }

    fn lm_id(&self, w: &str) -> WordId {
        self.models.lm.map_or(0, |lm| lm.vocab().id(w))
    }

    fn make_option(&self, span: Span, src_text: &str, tgt: Vec<String>, sc: Option<&PhraseScores>) -> TransOption {
        let mut f = [0.0; NUM_FEATURES];
        if let Some(sc) = sc {
            f[..4].copy_from_slice(&phrase_feats(sc));
        } else {
            f[OOV] = OOV_LOG_PENALTY * span.len() as f64;
        }
        f[WORD_PENALTY] = -(tgt.len() as f64);
        let tgt_text = tgt.join(" ");
        let fwd = ln_probs(self.models.reordering, src_text, &tgt_text, Direction::Forward);
        let bwd = ln_probs(self.models.reordering, src_text, &tgt_text, Direction::Backward);
        let tgt_ids: Vec<WordId> = tgt.iter().map(|w| self.lm_id(w)).collect();
        let w = &self.weights.0;
        let mut estimate = self.weights.dot(&f);
        if self.models.lm.is_some() {
            estimate += w[LM] * LN_10 * tgt_ids.iter().map(|&id| self.lm_bound[id as usize]).sum::<f64>();
        }
        estimate += (0..3).map(|o| w[FWD + o] * fwd[o]).fold(f64::NEG_INFINITY, f64::max);
        estimate += (0..3).map(|o| w[BWD + o] * bwd[o]).fold(f64::NEG_INFINITY, f64::max);
        TransOption {
            span,
            tgt,
            tgt_ids,
            static_feats: f,
            fwd,
            bwd,
            oov: sc.is_none(),
            estimate,
        }
    }

    /// Options per span, plus the span each option list belongs to.
    fn collect_options(&self, src: &[String], max_options: usize) -> (Vec<TransOption>, Vec<Vec<Vec<usize>>>) {
        let n = src.len();
        let mut options = Vec::new();
        let mut by_span = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in i..n.min(i + self.max_phrase_len) {
                let text = src[i..=j].join(" ");
                let mut opts: Vec<TransOption> = match self.models.phrases.options(&text) {
                    Some(row) => row
                        .iter()
                        .map(|(t, sc)| self.make_option(Span::new(i, j), &text, t.split(' ').map(String::from).collect(), Some(sc)))
                        .collect(),
                    None => Vec::new(),
                };
                if i == j && opts.is_empty() {
                    opts.push(self.make_option(Span::new(i, i), &text, vec![src[i].clone()], None));
                }
                opts.sort_by(|a, b| b.estimate.total_cmp(&a.estimate));
                opts.truncate(max_options);
                for o in opts {
                    by_span[i][j].push(options.len());
                    options.push(o);
                }
            }
        }
        (options, by_span)
    }

    /// Best estimate for covering each span `[i, j]` with any segmentation.
    fn future_table(&self, n: usize, options: &[TransOption], by_span: &[Vec<Vec<usize>>]) -> Vec<Vec<f64>> {
        let mut fc = vec![vec![f64::NEG_INFINITY; n]; n];
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len - 1;
                let mut best = by_span[i][j]
                    .iter()
                    .map(|&k| options[k].estimate)
                    .fold(f64::NEG_INFINITY, f64::max);
                for k in i..j {
                    best = best.max(fc[i][k] + fc[k + 1][j]);
                }
                fc[i][j] = best;
            }
        }
        fc
    }

    fn future_of(&self, coverage: &Bits, n: usize, fc: &[Vec<f64>], end_bound: f64) -> f64 {
        let mut total = end_bound;
        let mut i = 0;
        while i < n {
            if coverage.get(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && !coverage.get(i) {
                i += 1;
            }
            total += fc[start][i - 1];
        }
        total
    }

    fn lm_order(&self) -> usize {
        self.models.lm.map_or(1, NGramModel::order)
    }

    /// Features added by placing `opt` after hypothesis `h`.
    fn extend_delta(&self, h: &Hyp, last: Option<&TransOption>, opt: &TransOption) -> (FeatureVector, Vec<WordId>) {
        let mut d = opt.static_feats;
        let prev_end: isize = last.map_or(-1, |o| o.span.end as isize);
        d[DISTORTION] = -((opt.span.start as isize - prev_end - 1).abs() as f64);
        let orient = match last {
            Some(l) => spans_orientation(l.span, opt.span),
            None if opt.span.start == 0 => Orientation::Monotone,
            None => Orientation::Discontinuous,
        };
        d[FWD + orient.index()] += opt.fwd[orient.index()];
        if let Some(l) = last {
            d[BWD + orient.index()] += l.bwd[orient.index()];
        }
        let mut state = h.lm_state.clone();
        if let Some(lm) = self.models.lm {
            let keep = self.lm_order() - 1;
            for &w in &opt.tgt_ids {
                d[LM] += lm.logprob_ids(&state, w) * LN_10;
                state.push(w);
                if state.len() > keep {
                    state.remove(0);
                }
            }
        }
        (d, state)
    }

    /// End-of-sentence features: `</s>` and the backward orientation of the last phrase.
    fn end_delta(&self, h: &Hyp, last: Option<&TransOption>, n: usize) -> FeatureVector {
        let mut d = [0.0; NUM_FEATURES];
        if let Some(lm) = self.models.lm {
            d[LM] = lm.logprob_ids(&h.lm_state, EOS_ID) * LN_10;
        }
        if let Some(l) = last {
            let o = if l.span.end + 1 == n {
                Orientation::Monotone
            } else {
                Orientation::Discontinuous
            };
            d[BWD + o.index()] = l.bwd[o.index()];
        }
        d
    }

    pub fn decode<S: AsRef<str>>(&self, sentence: &[S], params: &DecoderParams) -> DecodeResult {
        let src: Vec<String> = sentence.iter().map(|s| s.as_ref().to_string()).collect();
        let n = src.len();
        if n == 0 {
            return DecodeResult {
                nbest: vec![Derivation {
                    steps: Vec::new(),
                    features: [0.0; NUM_FEATURES],
                    score: 0.0,
                }],
                hypotheses_created: 0,
                best_path_bounds: Vec::new(),
            };
        }
        let (options, by_span) = self.collect_options(&src, params.max_options);
        let fc = self.future_table(n, &options, &by_span);
        let end_bound = self.end_bound();

        let mut arena: Vec<Hyp> = Vec::new();
        let init_state = if self.models.lm.is_some() && self.lm_order() > 1 {
            vec![BOS_ID]
        } else {
            Vec::new()
        };
        let init_cov = Bits::new(n);
        arena.push(Hyp {
            prev: None,
            option: None,
            future: self.future_of(&init_cov, n, &fc, end_bound),
            coverage: init_cov,
            covered: 0,
            lm_state: init_state,
            delta: [0.0; NUM_FEATURES],
            feats: [0.0; NUM_FEATURES],
            score: 0.0,
            losers: Vec::new(),
        });
        let mut stacks: Vec<HashMap<RecombKey, usize>> = vec![HashMap::new(); n + 1];
        stacks[0].insert((arena[0].coverage.clone(), None, arena[0].lm_state.clone()), 0);
        // a subset of each stack's current best `beam_size` entries; once full, anything
        // not above its minimum would be pruned anyway
        let bounded = params.beam_size < usize::MAX;
        let mut tops: Vec<BTreeSet<Ranked>> = vec![BTreeSet::new(); n + 1];

        for k in 0..n {
            let mut ids: Vec<usize> = stacks[k].values().copied().collect();
            ids.sort_by(|&a, &b| {
                let (ha, hb) = (&arena[a], &arena[b]);
                (hb.score + hb.future).total_cmp(&(ha.score + ha.future)).then(a.cmp(&b))
            });
            ids.truncate(params.beam_size);
            for hid in ids {
                let last_opt = arena[hid].option.map(|o| &options[o]);
                let prev_end: isize = last_opt.map_or(-1, |o| o.span.end as isize);
                for i in 0..n {
                    if arena[hid].coverage.get(i) {
                        continue;
                    }
                    if let Some(limit) = params.distortion_limit {
                        if (i as isize - prev_end - 1).unsigned_abs() > limit {
                            continue;
                        }
                    }
                    for j in i..n.min(i + self.max_phrase_len) {
                        if arena[hid].coverage.get(j) {
                            break;
                        }
                        for &oid in &by_span[i][j] {
                            let opt = &options[oid];
                            let h = &arena[hid];
                            let (delta, lm_state) = self.extend_delta(h, last_opt, opt);
                            let mut coverage = h.coverage.clone();
                            coverage.set_span(opt.span);
                            let mut feats = h.feats;
                            for (f, d) in feats.iter_mut().zip(&delta) {
                                *f += d;
                            }
                            let score = self.weights.dot(&feats);
                            let future = self.future_of(&coverage, n, &fc, end_bound);
                            let stack = h.covered + opt.span.len();
                            let top = &mut tops[stack];
                            if bounded && top.len() >= params.beam_size && top.first().is_some_and(|r| score + future <= r.0) {
                                continue;
                            }
                            let new = Hyp {
                                prev: Some(hid),
                                option: Some(oid),
                                future,
                                covered: stack,
                                coverage,
                                lm_state,
                                delta,
                                score,
                                feats,
                                losers: Vec::new(),
                            };
                            let key = (new.coverage.clone(), new.option, new.lm_state.clone());
                            let new_id = arena.len();
                            arena.push(new);
                            let winner = match stacks[stack].get(&key).copied() {
                                None => {
                                    stacks[stack].insert(key, new_id);
                                    true
                                }
                                Some(old) if arena[old].score >= score => {
                                    arena[old].losers.push(new_id);
                                    false
                                }
                                Some(old) => {
                                    let mut losers = std::mem::take(&mut arena[old].losers);
                                    losers.push(old);
                                    arena[new_id].losers = losers;
                                    stacks[stack].insert(key, new_id);
                                    top.remove(&Ranked(arena[old].score + arena[old].future, Reverse(old)));
                                    true
                                }
                            };
                            if bounded && winner {
                                top.insert(Ranked(score + future, Reverse(new_id)));
                                if top.len() > params.beam_size {
                                    top.pop_first();
                                }
                            }
                        }
                    }
                }
            }
        }

        let mut finals: Vec<(usize, FeatureVector, f64)> = stacks[n]
            .values()
            .map(|&id| {
                let h = &arena[id];
                let end = self.end_delta(h, h.option.map(|o| &options[o]), n);
                let total = self.weights.dot(&end) + h.score;
                (id, end, total)
            })
            .collect();
        finals.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));

        let nbest = self.extract_nbest(&arena, &options, &finals, params.nbest.max(1));
        let best_path_bounds = finals
            .first()
            .map(|&(id, _, _)| {
                let mut chain = Vec::new();
                let mut cur = Some(id);
                while let Some(c) = cur {
                    chain.push(arena[c].score + arena[c].future);
                    cur = arena[c].prev;
                }
                chain.reverse();
                chain
            })
            .unwrap_or_default();
        DecodeResult {
            nbest,
            hypotheses_created: arena.len(),
            best_path_bounds,
        }
    }

    fn end_bound(&self) -> f64 {
        let w = &self.weights.0;
        let mut b = 0.0;
        if self.models.lm.is_some() {
            b += w[LM] * LN_10 * self.lm_bound[EOS_ID as usize];
        }
        b
    }

    /// Best derivations in score order, enumerating detours through recombined hypotheses.
    fn extract_nbest(
        &self,
        arena: &[Hyp],
        options: &[TransOption],
        finals: &[(usize, FeatureVector, f64)],
        nbest: usize,
    ) -> Vec<Derivation> {
        #[derive(PartialEq)]
        struct Cand {
            total: f64,
            seq: usize,
            /// Hypotheses from the final one back to the initial one.
            path: Vec<usize>,
            end: FeatureVector,
            /// Detours are only taken at positions from here on.
            from: usize,
        }
        impl Eq for Cand {}
        impl PartialOrd for Cand {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Cand {
            fn cmp(&self, o: &Self) -> Ordering {
                self.total.total_cmp(&o.total).then(o.seq.cmp(&self.seq))
            }
        }
        let chain = |mut id: usize| {
            let mut v = vec![id];
            while let Some(p) = arena[id].prev {
                v.push(p);
                id = p;
            }
            v
        };
        let mut heap = BinaryHeap::new();
        let mut seq = 0;
        for &(id, end, total) in finals {
            heap.push(Cand {
                total,
                seq,
                path: chain(id),
                end,
                from: 0,
            });
            seq += 1;
        }
        let mut out = Vec::new();
        while let Some(c) = heap.pop() {
            for p in c.from..c.path.len() {
                let h = c.path[p];
                for &alt in &arena[h].losers {
                    let mut path = c.path[..p].to_vec();
                    path.extend(chain(alt));
                    heap.push(Cand {
                        total: c.total - arena[h].score + arena[alt].score,
                        seq,
                        path,
                        end: c.end,
                        from: p + 1,
                    });
                    seq += 1;
                }
            }
            let mut features = c.end;
            let mut steps = Vec::new();
            for &h in c.path.iter().rev() {
                for (f, d) in features.iter_mut().zip(&arena[h].delta) {
                    *f += d;
                }
                if let Some(o) = arena[h].option {
                    let o = &options[o];
                    steps.push(Step {
                        src_span: o.span,
                        tgt: o.tgt.clone(),
                        oov: o.oov,
                    });
                }
            }
            out.push(Derivation {
                steps,
                score: self.weights.dot(&features),
                features,
            });
            if out.len() == nbest {
                break;
            }
        }
        out
    }
}

/// Per-feature contributions of a scored derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    /// `(name, weight, feature value, weight * value)`
    pub contributions: Vec<(&'static str, f64, f64, f64)>,
    pub total: f64,
}

/// Recomputes the features of a complete derivation from scratch.
pub fn derivation_features<S: AsRef<str>>(sentence: &[S], steps: &[Step], models: &Models) -> FeatureVector {
    let n = sentence.len();
    let mut f = [0.0; NUM_FEATURES];
    let mut target: Vec<&str> = Vec::new();
    let mut prev: Option<&Step> = None;
    let prob = |s: &Step, dir: Direction, o: Orientation| {
        let src = sentence[s.src_span.start..=s.src_span.end]
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        models.reordering.prob(&src, &s.tgt.join(" "), dir, o).ln()
    };
    for s in steps {
        let src = sentence[s.src_span.start..=s.src_span.end]
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        if s.oov {
            f[OOV] += OOV_LOG_PENALTY * s.src_span.len() as f64;
        } else if let Some(sc) = models.phrases.get(&src, &s.tgt.join(" ")) {
            for (k, v) in phrase_feats(sc).into_iter().enumerate() {
                f[k] += v;
            }
        }
        f[WORD_PENALTY] -= s.tgt.len() as f64;
        let prev_end = prev.map_or(-1, |p| p.src_span.end as isize);
        f[DISTORTION] -= (s.src_span.start as isize - prev_end - 1).abs() as f64;
        let o = match prev {
            Some(p) => spans_orientation(p.src_span, s.src_span),
            None if s.src_span.start == 0 => Orientation::Monotone,
            None => Orientation::Discontinuous,
        };
        f[FWD + o.index()] += prob(s, Direction::Forward, o);
        if let Some(p) = prev {
            f[BWD + o.index()] += prob(p, Direction::Backward, o);
        }
        target.extend(s.tgt.iter().map(String::as_str));
        prev = Some(s);
    }
    if let Some(p) = prev {
        let o = if p.src_span.end + 1 == n {
            Orientation::Monotone
        } else {
            Orientation::Discontinuous
        };
        f[BWD + o.index()] += prob(p, Direction::Backward, o);
    }
    if let Some(lm) = models.lm {
        f[LM] = lm.sentence_logprob(&target) * LN_10;
    }
    f
}

pub fn score_hypothesis<S: AsRef<str>>(sentence: &[S], steps: &[Step], models: &Models, w: &FeatureWeights) -> ScoreBreakdown {
    let f = derivation_features(sentence, steps, models);
    let contributions: Vec<_> = FEATURE_NAMES
        .iter()
        .zip(w.0.iter().zip(f))
        .map(|(&name, (&wk, hk))| (name, wk, hk, wk * hk))
        .collect();
    let total = contributions.iter().map(|c| c.3).sum();
    ScoreBreakdown { contributions, total }
}

/// `id ||| translation ||| name:value ... ||| total`
pub fn format_nbest(sent_id: usize, d: &Derivation) -> String {
    let feats: Vec<String> = FEATURE_NAMES
        .iter()
        .zip(d.features)
        .map(|(n, v)| format!("{n}:{v:.6}"))
        .collect();
    format!("{sent_id} ||| {} ||| {} ||| {:.6}", d.translation().join(" "), feats.join(" "), d.score)
}

/// Parsed n-best line: sentence id, translation tokens, feature vector, total.
pub fn parse_nbest(line: &str) -> Option<(usize, Vec<String>, FeatureVector, f64)> {
    let parts: Vec<&str> = line.split("|||").map(str::trim).collect();
    let [id, text, feats, total] = parts.as_slice() else {
        return None;
    };
    let mut f = [0.0; NUM_FEATURES];
    for item in feats.split_whitespace() {
        let (name, v) = item.split_once(':')?;
        let k = FEATURE_NAMES.iter().position(|n| *n == name)?;
        f[k] = v.parse().ok()?;
    }
    Some((
        id.parse().ok()?,
        text.split_whitespace().map(String::from).collect(),
        f,
        total.parse().ok()?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{train_kn, TrainConfig};
    use crate::phrase::PhraseScores;

    fn table(entries: &[(&str, &str, f64)]) -> PhraseTable {
        let mut pt = PhraseTable::default();
        for &(s, t, p) in entries {
            pt.entries.entry(s.into()).or_default().insert(
                t.into(),
                PhraseScores {
                    phi_t_given_s: p,
                    phi_s_given_t: p,
                    lex_t_given_s: p,
                    lex_s_given_t: p,
                },
            );
        }
        pt
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn empty_and_single_word() {
        let pt = table(&[("kot", "cat", 1.0)]);
        let rm = ReorderingModel::default();
        let models = Models {
            phrases: &pt,
            reordering: &rm,
            lm: None,
        };
        let d = Decoder::new(models, FeatureWeights::default());
        let empty: [&str; 0] = [];
        assert!(d.decode(&empty, &DecoderParams::default()).translation().is_empty());
        assert_eq!(d.decode(&["kot"], &DecoderParams::default()).translation(), toks("cat"));
    }

    #[test]
    fn oov_copies_through() {
        let pt = table(&[("kot", "cat", 1.0)]);
        let rm = ReorderingModel::default();
        let models = Models {
            phrases: &pt,
            reordering: &rm,
            lm: None,
        };
        let r = Decoder::new(models, FeatureWeights::default()).decode(&toks("zzz yyy"), &DecoderParams::default());
        assert_eq!(r.translation(), toks("zzz yyy"));
        let best = r.best().unwrap();
        assert!(best.steps.iter().all(|s| s.oov));
        assert_eq!(best.features[OOV], 2.0 * OOV_LOG_PENALTY);
    }

    #[test]
    fn scores_match_recomputation() {
        let pt = table(&[
            ("a", "x", 0.6),
            ("a", "w", 0.4),
            ("b", "y", 1.0),
            ("a b", "y x", 0.5),
            ("c", "z", 1.0),
        ]);
        let rm = ReorderingModel::default();
        let lm = train_kn::<f64, _>(&[toks("x y z"), toks("y x z"), toks("w y")], &TrainConfig::with_order(3)).unwrap();
        let models = Models {
            phrases: &pt,
            reordering: &rm,
            lm: Some(&lm),
        };
        let w = FeatureWeights::default();
        let src = toks("a b c");
        let params = DecoderParams {
            nbest: 10,
            ..DecoderParams::exact()
        };
        let r = Decoder::new(models, w).decode(&src, &params);
        assert!(r.nbest.len() > 1);
        for pair in r.nbest.windows(2) {
            assert!(pair[0].score >= pair[1].score - 1e-9);
        }
        for d in &r.nbest {
            let b = score_hypothesis(&src, &d.steps, &models, &w);
            assert!((b.total - d.score).abs() < 1e-9);
            let sum: f64 = b.contributions.iter().map(|c| c.3).sum();
            assert!((sum - b.total).abs() < 1e-9);
        }
        let zero = score_hypothesis(&src, &r.nbest[0].steps, &models, &FeatureWeights::zero());
        assert_eq!(zero.total, 0.0);
    }

    #[test]
    fn nbest_has_distinct_derivations() {
        let pt = table(&[("a", "x", 0.5), ("a", "y", 0.5), ("b", "z", 1.0), ("b", "q", 0.2)]);
        let rm = ReorderingModel::default();
        let models = Models {
            phrases: &pt,
            reordering: &rm,
            lm: None,
        };
        let params = DecoderParams {
            nbest: 100,
            ..DecoderParams::exact()
        };
        let r = Decoder::new(models, FeatureWeights::default()).decode(&toks("a b"), &params);
        // 2 x 2 option choices x 2 orders
        assert_eq!(r.nbest.len(), 8);
        let mut seen: Vec<Vec<Step>> = r.nbest.iter().map(|d| d.steps.clone()).collect();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn weights_cfg_round_trip() {
        let mut w = FeatureWeights::default();
        w.set("lm", 0.75).unwrap();
        assert_eq!(FeatureWeights::from_cfg(&w.to_cfg()).unwrap(), w);
        let partial = FeatureWeights::from_cfg("# comment\nlm = 2\n").unwrap();
        assert_eq!(partial.get("lm"), Some(2.0));
        assert_eq!(partial.get("distortion"), Some(0.3));
        assert!(FeatureWeights::from_cfg("bogus=1").is_err());
        assert!(FeatureWeights::from_cfg("lm").is_err());
    }

    #[test]
    fn nbest_line_round_trip() {
        let d = Derivation {
            steps: vec![Step {
                src_span: Span::new(0, 0),
                tgt: toks("the cat"),
                oov: false,
            }],
            features: [0.5; NUM_FEATURES],
            score: -1.25,
        };
        let line = format_nbest(3, &d);
        assert!(line.starts_with("3 ||| the cat ||| phi_ts:0.500000 "));
        let (id, text, f, total) = parse_nbest(&line).unwrap();
        assert_eq!((id, text, f, total), (3, toks("the cat"), [0.5; NUM_FEATURES], -1.25));
    }
}
