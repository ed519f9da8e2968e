//! Automatic evaluation metrics: BLEU, NIST, METEOR and TER.
//!
//! Every metric takes pre-tokenized sentences. Candidates are a slice of
//! token sequences; references are, per candidate, a set of token sequences.

use std::collections::{HashMap, HashSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no candidates to score")]
    EmptyInput,
    #[error("{0} candidates but {1} reference sets")]
    CountMismatch(usize, usize),
    #[error("candidate {0} has no references")]
    NoReferences(usize),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;

fn check<S>(cands: &[Vec<S>], refs: &[Vec<Vec<S>>]) -> Result<()> {
    if cands.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if cands.len() != refs.len() {
        return Err(EvalError::CountMismatch(cands.len(), refs.len()));
    }
    if let Some(i) = refs.iter().position(|r| r.is_empty()) {
        return Err(EvalError::NoReferences(i));
    }
    Ok(())
}

fn strs<S: AsRef<str>>(s: &[S]) -> Vec<&str> {
    s.iter().map(AsRef::as_ref).collect()
}

fn ngram_counts<'a>(toks: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut out = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *out.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// Max count of each n-gram over a reference set.
fn max_ref_counts<'a>(refs: &[Vec<&'a str>], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut out: HashMap<Vec<&str>, usize> = HashMap::new();
    for r in refs {
        for (g, c) in ngram_counts(r, n) {
            let e = out.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuComponents<F> {
    pub max_order: usize,
    pub precisions: Vec<F>,
    pub weights: Vec<F>,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub cand_len: usize,
    pub ref_len: usize,
    pub brevity_penalty: F,
    pub score: F,
}

/// `1` when the candidate is at least as long as the reference, else `e^(1 - r/c)`.
pub fn brevity_penalty<F: Scalar>(c: usize, r: usize) -> F {
    if c >= r {
        F::one()
    } else if c == 0 {
        F::zero()
    } else {
        (F::one() - F::of_usize(r) / F::of_usize(c)).exp()
    }
}

/// Reference length closest to `c`; the shorter one on ties.
fn closest_ref_len(c: usize, refs: &[Vec<&str>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(c), r))
        .unwrap_or(0)
}

/// Corpus-level BLEU with clipped counts, closest reference length and uniform weights.
pub fn bleu<F: Scalar, S: AsRef<str>>(cands: &[Vec<S>], refs: &[Vec<Vec<S>>], max_order: usize) -> Result<BleuComponents<F>> {
    check(cands, refs)?;
    let mut matches = vec![0usize; max_order];
    let mut totals = vec![0usize; max_order];
    let (mut c, mut r) = (0, 0);
    for (cand, rs) in cands.iter().zip(refs) {
        let cand = strs(cand);
        let rs: Vec<Vec<&str>> = rs.iter().map(|x| strs(x)).collect();
        c += cand.len();
        r += closest_ref_len(cand.len(), &rs);
        for n in 1..=max_order {
            let maxref = max_ref_counts(&rs, n);
            for (g, k) in ngram_counts(&cand, n) {
                matches[n - 1] += k.min(maxref.get(&g).copied().unwrap_or(0));
                totals[n - 1] += k;
            }
        }
    }
    let precisions: Vec<F> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| if t == 0 { F::zero() } else { F::of_usize(m) / F::of_usize(t) })
        .collect();
    let weights = vec![F::one() / F::of_usize(max_order); max_order];
    let bp = brevity_penalty::<F>(c, r);
    let score = if precisions.iter().all(|&p| p > F::zero()) {
        let log_sum: F = precisions.iter().zip(&weights).map(|(&p, &w)| w * p.ln()).sum();
        bp * log_sum.exp()
    } else {
        F::zero()
    };
    Ok(BleuComponents {
        max_order,
        precisions,
        weights,
        matches,
        totals,
        cand_len: c,
        ref_len: r,
        brevity_penalty: bp,
        score,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NistComponents<F> {
    pub max_order: usize,
    /// Information-weighted matches per candidate n-gram, one value per order.
    pub order_scores: Vec<F>,
    pub cand_len: usize,
    /// Sum over sentences of the mean reference length.
    pub ref_len: F,
    pub brevity_factor: F,
    pub score: F,
}

/// NIST brevity factor: 1 at or above the reference length, 0.5 at two thirds of it.
pub fn nist_brevity<F: Scalar>(c: F, r: F) -> F {
    if r <= F::zero() {
        return F::one();
    }
    let ratio = (c / r).min(F::one());
    if ratio <= F::zero() {
        return F::zero();
    }
    let beta = -F::of(2.0).ln() / F::of(1.5).ln().powi(2);
    (beta * ratio.ln().powi(2)).exp()
}

pub fn nist<F: Scalar, S: AsRef<str>>(cands: &[Vec<S>], refs: &[Vec<Vec<S>>], max_order: usize) -> Result<NistComponents<F>> {
    check(cands, refs)?;
    let refs: Vec<Vec<Vec<&str>>> = refs.iter().map(|rs| rs.iter().map(|r| strs(r)).collect()).collect();

    // reference n-gram counts pooled over every reference of every sentence
    let mut pooled: Vec<HashMap<Vec<&str>, usize>> = vec![HashMap::new(); max_order + 1];
    let mut ref_words = 0usize;
    for r in refs.iter().flatten() {
        ref_words += r.len();
        for n in 1..=max_order {
            for (g, k) in ngram_counts(r, n) {
                *pooled[n].entry(g).or_insert(0) += k;
            }
        }
    }
    let info = |g: &[&str]| -> F {
        let count = pooled[g.len()].get(g).copied().unwrap_or(0);
        if count == 0 {
            return F::zero();
        }
        let prefix = if g.len() == 1 {
            ref_words
        } else {
            pooled[g.len() - 1][&g[..g.len() - 1]]
        };
        (F::of_usize(prefix) / F::of_usize(count)).log2()
    };

    let mut gained = vec![F::zero(); max_order];
    let mut totals = vec![0usize; max_order];
    let mut c = 0usize;
    let mut r = F::zero();
    for (cand, rs) in cands.iter().zip(&refs) {
        let cand = strs(cand);
        c += cand.len();
        r += F::of_usize(rs.iter().map(Vec::len).sum()) / F::of_usize(rs.len());
        for n in 1..=max_order {
            let maxref = max_ref_counts(rs, n);
            let mut grams: Vec<_> = ngram_counts(&cand, n).into_iter().collect();
            grams.sort_unstable();
            for (g, k) in grams {
                totals[n - 1] += k;
                let m = k.min(maxref.get(&g).copied().unwrap_or(0));
                if m > 0 {
                    gained[n - 1] += F::of_usize(m) * info(&g);
                }
            }
        }
    }
    let order_scores: Vec<F> = gained
        .iter()
        .zip(&totals)
        .map(|(&g, &t)| if t == 0 { F::zero() } else { g / F::of_usize(t) })
        .collect();
    let bf = nist_brevity(F::of_usize(c), r);
    let score = order_scores.iter().copied().sum::<F>() * bf;
    Ok(NistComponents {
        max_order,
        order_scores,
        cand_len: c,
        ref_len: r,
        brevity_factor: bf,
        score,
    })
}

/// Shape of the fragmentation penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyShape {
    /// `0.5 * C / M`
    #[default]
    Linear,
    /// `0.5 * (C / M)^3`
    Cubed,
}

/// Matching resources for the stem and synonym stages. Both default to empty, which disables the stage.
#[derive(Debug, Clone, Default)]
pub struct MeteorConfig {
    pub penalty: PenaltyShape,
    /// Surface form to stem.
    pub stems: HashMap<String, String>,
    /// Each word maps to the ids of the synonym sets it belongs to.
    pub synonyms: HashMap<String, Vec<usize>>,
}

impl MeteorConfig {
    /// Reads a synonym table: one set of mutually synonymous words per line.
    pub fn with_synonym_lines<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, lines: I) -> Self {
        for (id, line) in lines.into_iter().enumerate() {
            for w in line.as_ref().split_whitespace() {
                self.synonyms.entry(w.to_string()).or_default().push(id);
            }
        }
        self
    }

    fn stem_match(&self, a: &str, b: &str) -> bool {
        match (self.stems.get(a), self.stems.get(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    fn synonym_match(&self, a: &str, b: &str) -> bool {
        match (self.synonyms.get(a), self.synonyms.get(b)) {
            (Some(x), Some(y)) => x.iter().any(|s| y.contains(s)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeteorComponents<F> {
    pub precision: F,
    pub recall: F,
    pub fmean: F,
    pub chunks: usize,
    pub matches: usize,
    pub cand_len: usize,
    pub ref_len: usize,
    pub penalty: F,
    pub score: F,
}

impl<F: Scalar> MeteorComponents<F> {
    fn from_counts(matches: usize, chunks: usize, cand_len: usize, ref_len: usize, shape: PenaltyShape) -> Self {
        if matches == 0 {
            return Self {
                precision: F::zero(),
                recall: F::zero(),
                fmean: F::zero(),
                chunks: 0,
                matches: 0,
                cand_len,
                ref_len,
                penalty: F::zero(),
                score: F::zero(),
            };
        }
        let m = F::of_usize(matches);
        let p = m / F::of_usize(cand_len);
        let r = m / F::of_usize(ref_len);
        let fmean = F::of(10.0) * p * r / (r + F::of(9.0) * p);
        let frag = F::of_usize(chunks) / m;
        let penalty = F::of(0.5)
            * match shape {
                PenaltyShape::Linear => frag,
                PenaltyShape::Cubed => frag.powi(3),
            };
        Self {
            precision: p,
            recall: r,
            fmean,
            chunks,
            matches,
            cand_len,
            ref_len,
            penalty,
            score: fmean * (F::one() - penalty),
        }
    }
}

const SEARCH_BUDGET: usize = 200_000;

struct StageSearch<'a> {
    options: Vec<(usize, Vec<usize>)>,
    fixed: &'a [(usize, usize)],
    ref_used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_crossings: usize,
    best_chunks: usize,
    nodes: usize,
}

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && a.1 > b.1) || (a.0 > b.0 && a.1 < b.1)
}

impl StageSearch<'_> {
    fn crossings(&self, links: &[(usize, usize)]) -> usize {
        let mut n = 0;
        for (k, &a) in links.iter().enumerate() {
            n += links[k + 1..].iter().filter(|&&b| crosses(a, b)).count();
            n += self.fixed.iter().filter(|&&b| crosses(a, b)).count();
        }
        n
    }

    fn chunks(&self, links: &[(usize, usize)]) -> usize {
        let all: Vec<_> = links.iter().chain(self.fixed).copied().collect();
        count_chunks(&all)
    }

    fn run(&mut self, k: usize, crossings: usize) {
        self.nodes += 1;
        if self.current.len() + (self.options.len() - k) < self.best.len() {
            return;
        }
        if k == self.options.len() {
            let chunks = self.chunks(&self.current);
            let better = self.current.len() > self.best.len()
                || (crossings, chunks) < (self.best_crossings, self.best_chunks);
            if better {
                self.best = self.current.clone();
                self.best_crossings = crossings;
                self.best_chunks = chunks;
            }
            return;
        }
        if self.nodes > SEARCH_BUDGET {
            return;
        }
        let (i, ref choices) = self.options[k];
        for j in choices.clone() {
            if self.ref_used[j] {
                continue;
            }
            let added = self.current.iter().chain(self.fixed).filter(|&&b| crosses((i, j), b)).count();
            if self.current.len() + 1 + (self.options.len() - k - 1) == self.best.len()
                && crossings + added > self.best_crossings
            {
                continue;
            }
            self.ref_used[j] = true;
            self.current.push((i, j));
            self.run(k + 1, crossings + added);
            self.current.pop();
            self.ref_used[j] = false;
        }
        self.run(k + 1, crossings);
    }
}

/// Maximum matching between unmapped positions under `allowed`, preferring
/// the fewest crossings with each other and with the links of earlier stages.
fn stage_alignment(
    cand: &[&str],
    refr: &[&str],
    fixed: &[(usize, usize)],
    allowed: impl Fn(&str, &str) -> bool,
) -> Vec<(usize, usize)> {
    let cand_used: HashSet<usize> = fixed.iter().map(|l| l.0).collect();
    let ref_fixed: HashSet<usize> = fixed.iter().map(|l| l.1).collect();
    let options: Vec<(usize, Vec<usize>)> = (0..cand.len())
        .filter(|i| !cand_used.contains(i))
        .map(|i| {
            let js = (0..refr.len())
                .filter(|j| !ref_fixed.contains(j) && allowed(cand[i], refr[*j]))
                .collect::<Vec<_>>();
            (i, js)
        })
        .filter(|(_, js)| !js.is_empty())
        .collect();
    if options.is_empty() {
        return Vec::new();
    }
    // seed with the left-to-right greedy matching
    let mut ref_used = vec![false; refr.len()];
    let mut greedy = Vec::new();
    for (i, js) in &options {
        if let Some(&j) = js.iter().find(|&&j| !ref_used[j]) {
            ref_used[j] = true;
            greedy.push((*i, j));
        }
    }
    let mut search = StageSearch {
        options,
        fixed,
        ref_used: vec![false; refr.len()],
        current: Vec::new(),
        best: Vec::new(),
        best_crossings: usize::MAX,
        best_chunks: usize::MAX,
        nodes: 0,
    };
    search.best_crossings = search.crossings(&greedy);
    search.best_chunks = search.chunks(&greedy);
    search.best = greedy;
    search.run(0, 0);
    search.best
}

/// Exact, stem and synonym matching in that order, each stage only touching words left unmapped.
pub fn meteor_alignment<S: AsRef<str>>(cand: &[S], refr: &[S], cfg: &MeteorConfig) -> Vec<(usize, usize)> {
    let cand = strs(cand);
    let refr = strs(refr);
    let mut links = stage_alignment(&cand, &refr, &[], |a, b| a == b);
    if !cfg.stems.is_empty() {
        let more = stage_alignment(&cand, &refr, &links, |a, b| cfg.stem_match(a, b));
        links.extend(more);
    }
    if !cfg.synonyms.is_empty() {
        let more = stage_alignment(&cand, &refr, &links, |a, b| cfg.synonym_match(a, b));
        links.extend(more);
    }
    links.sort_unstable();
    links
}

/// Number of maximal runs that are contiguous and in the same order on both sides.
pub fn count_chunks(links: &[(usize, usize)]) -> usize {
    let mut sorted = links.to_vec();
    sorted.sort_unstable();
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j) in &sorted {
        match prev {
            Some((pi, pj)) if i == pi + 1 && j == pj + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((i, j));
    }
    chunks
}

/// Sentence METEOR against the best-scoring reference.
pub fn meteor_sentence<F: Scalar, S: AsRef<str>>(cand: &[S], refs: &[Vec<S>], cfg: &MeteorConfig) -> MeteorComponents<F> {
    let mut best: Option<MeteorComponents<F>> = None;
    for r in refs {
        let links = meteor_alignment(cand, r, cfg);
        let m = MeteorComponents::from_counts(links.len(), count_chunks(&links), cand.len(), r.len(), cfg.penalty);
        if best.as_ref().is_none_or(|b| m.score > b.score) {
            best = Some(m);
        }
    }
    best.unwrap_or_else(|| MeteorComponents::from_counts(0, 0, cand.len(), 0, cfg.penalty))
}

/// Corpus METEOR: per-sentence best references, with matches, chunks and lengths summed before scoring.
pub fn meteor<F: Scalar, S: AsRef<str>>(cands: &[Vec<S>], refs: &[Vec<Vec<S>>], cfg: &MeteorConfig) -> Result<MeteorComponents<F>> {
    check(cands, refs)?;
    let (mut m, mut ch, mut c, mut r) = (0, 0, 0, 0);
    for (cand, rs) in cands.iter().zip(refs) {
        let s = meteor_sentence::<F, S>(cand, rs, cfg);
        m += s.matches;
        ch += s.chunks;
        c += s.cand_len;
        r += s.ref_len;
    }
    Ok(MeteorComponents::from_counts(m, ch, c, r, cfg.penalty))
}

/// Word-level Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Longest span a single shift may move.
pub const MAX_SHIFT_LEN: usize = 10;

/// Moves `toks[start..start + len]` so that it begins at index `dest` of the remaining sequence.
pub fn apply_shift<T: Clone>(toks: &[T], start: usize, len: usize, dest: usize) -> Vec<T> {
    let mut rest: Vec<T> = toks[..start].to_vec();
    rest.extend_from_slice(&toks[start + len..]);
    let mut out = rest[..dest].to_vec();
    out.extend_from_slice(&toks[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// Greedy shift search: repeatedly applies the shift that lowers the edit
/// distance the most, while some shift lowers it at all.
/// Returns the number of shifts and the final edit distance.
///
/// Not exact: a pair of shifts that only pays off together is never found,
/// e.g. `b c b a c` against `a b c c b` costs 3 here but 2 by two shifts.
pub fn ter_edits(cand: &[&str], refr: &[&str]) -> (usize, usize) {
    let ref_spans: HashSet<&[&str]> = (1..=MAX_SHIFT_LEN.min(refr.len()))
        .flat_map(|n| refr.windows(n))
        .collect();
    let mut cur = cand.to_vec();
    let mut dist = edit_distance(&cur, refr);
    let mut shifts = 0;
    loop {
        let mut best: Option<(usize, Vec<&str>)> = None;
        for start in 0..cur.len() {
            for len in 1..=MAX_SHIFT_LEN.min(cur.len() - start) {
                if !ref_spans.contains(&cur[start..start + len]) {
                    continue;
                }
                for dest in 0..=cur.len() - len {
                    if dest == start {
                        continue;
                    }
                    let moved = apply_shift(&cur, start, len, dest);
                    let d = edit_distance(&moved, refr);
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, moved));
                    }
                }
            }
        }
        match best {
            Some((d, moved)) if d < dist => {
                cur = moved;
                dist = d;
                shifts += 1;
            }
            _ => return (shifts, dist),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerComponents<F> {
    pub shifts: usize,
    pub edits: usize,
    pub avg_ref_len: F,
    pub score: F,
}

impl<F: Scalar> TerComponents<F> {
    fn new(shifts: usize, edits: usize, avg_ref_len: F) -> Self {
        let e = F::of_usize(edits);
        let score = if avg_ref_len > F::zero() {
            e / avg_ref_len
        } else if edits == 0 {
            F::zero()
        } else {
            F::infinity()
        };
        Self {
            shifts,
            edits,
            avg_ref_len,
            score,
        }
    }
}

/// Sentence TER: the cheapest reference, divided by the mean reference length.
pub fn ter_sentence<F: Scalar, S: AsRef<str>>(cand: &[S], refs: &[Vec<S>]) -> TerComponents<F> {
    let cand = strs(cand);
    let (shifts, edits) = refs
        .iter()
        .map(|r| {
            let (s, d) = ter_edits(&cand, &strs(r));
            (s + d, s)
        })
        .min()
        .map(|(total, s)| (s, total))
        .unwrap_or((0, cand.len()));
    let avg = if refs.is_empty() {
        F::zero()
    } else {
        F::of_usize(refs.iter().map(Vec::len).sum()) / F::of_usize(refs.len())
    };
    TerComponents::new(shifts, edits, avg)
}

/// Corpus TER: total edits over the total mean reference length.
pub fn ter<F: Scalar, S: AsRef<str>>(cands: &[Vec<S>], refs: &[Vec<Vec<S>>]) -> Result<TerComponents<F>> {
    check(cands, refs)?;
    let (mut shifts, mut edits, mut len) = (0, 0, F::zero());
    for (c, rs) in cands.iter().zip(refs) {
        let t = ter_sentence::<F, S>(c, rs);
        shifts += t.shifts;
        edits += t.edits;
        len += t.avg_ref_len;
    }
    Ok(TerComponents::new(shifts, edits, len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Bleu,
    Nist,
    Meteor,
    Ter,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bleu, Metric::Nist, Metric::Meteor, Metric::Ter];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bleu => "bleu",
            Metric::Nist => "nist",
            Metric::Meteor => "meteor",
            Metric::Ter => "ter",
        }
    }

    /// `all` expands to every metric.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(Metric::ALL),
                "bleu" => out.push(Metric::Bleu),
                "nist" => out.push(Metric::Nist),
                "meteor" => out.push(Metric::Meteor),
                "ter" => out.push(Metric::Ter),
                other => return Err(EvalError::UnknownMetric(other.to_string())),
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

impl std::str::FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match Metric::parse_list(s)?.as_slice() {
            [m] => Ok(*m),
            _ => Err(EvalError::UnknownMetric(s.to_string())),
        }
    }
}

/// One metric result: a headline score plus its named components.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub metric: Metric,
    pub score: f64,
    pub components: Value,
}

impl MetricScore {
    pub fn to_json_line(&self) -> String {
        json!({ "name": self.metric.name(), "score": self.score, "components": self.components }).to_string()
    }
}

fn f(v: impl Scalar) -> f64 {
    v.as_f64()
}

/// Runs one metric on a corpus, returning an `f64` summary.
pub fn score_corpus<S: AsRef<str>>(metric: Metric, cands: &[Vec<S>], refs: &[Vec<Vec<S>>], meteor_cfg: &MeteorConfig) -> Result<MetricScore> {
    let (score, components) = match metric {
        Metric::Bleu => {
            let b = bleu::<f64, S>(cands, refs, 4)?;
            let comps = json!({
                "precisions": b.precisions, "matches": b.matches, "totals": b.totals,
                "cand_len": b.cand_len, "ref_len": b.ref_len, "brevity_penalty": b.brevity_penalty,
            });
            (b.score, comps)
        }
        Metric::Nist => {
            let n = nist::<f64, S>(cands, refs, 5)?;
            let comps = json!({
                "order_scores": n.order_scores, "cand_len": n.cand_len,
                "ref_len": f(n.ref_len), "brevity_factor": n.brevity_factor,
            });
            (n.score, comps)
        }
        Metric::Meteor => {
            let m = meteor::<f64, S>(cands, refs, meteor_cfg)?;
            let comps = json!({
                "precision": m.precision, "recall": m.recall, "fmean": m.fmean, "chunks": m.chunks,
                "matches": m.matches, "penalty": m.penalty,
            });
            (m.score, comps)
        }
        Metric::Ter => {
            let t = ter::<f64, S>(cands, refs)?;
            let comps = json!({ "shifts": t.shifts, "edits": t.edits, "ref_len": t.avg_ref_len });
            (t.score, comps)
        }
    };
    Ok(MetricScore {
        metric,
        score,
        components,
    })
}
