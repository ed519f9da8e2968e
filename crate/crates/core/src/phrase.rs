//! Phrase pair extraction, phrase table scoring and the lexicalized
//! (monotone / swap / discontinuous) reordering model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::align::{AlignmentMatrix, NULL_WORD};
use crate::corpus::{ParallelCorpus, SentencePair};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhraseError {
    #[error("alignment is {0:?} but the sentence pair is {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("{0} sentence pairs but {1} alignments")]
    CountMismatch(usize, usize),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, PhraseError>;

pub const DEFAULT_MAX_PHRASE_LEN: usize = 7;
pub const REORDERING_SMOOTHING: f64 = 0.5;

/// Inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhrasePair {
    pub src_span: Span,
    pub tgt_span: Span,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    /// Links inside the box, relative to the span starts.
    pub links: Vec<(usize, usize)>,
}

impl PhrasePair {
    pub fn src_text(&self) -> String {
        self.src.join(" ")
    }

    pub fn tgt_text(&self) -> String {
        self.tgt.join(" ")
    }
}

fn check_dims(pair: &SentencePair, a: &AlignmentMatrix) -> Result<()> {
    let want = (pair.src.len(), pair.tgt.len());
    if a.dims() != want {
        return Err(PhraseError::DimensionMismatch(a.dims(), want));
    }
    Ok(())
}

/// Per-position alignment summaries used by the consistency checks.
struct Coverage {
    /// For each target position, min and max aligned source position.
    tgt_src: Vec<Option<(usize, usize)>>,
    /// For each source position, min and max aligned target position.
    src_tgt: Vec<Option<(usize, usize)>>,
}

fn widen(slot: &mut Option<(usize, usize)>, x: usize) {
    *slot = Some(match *slot {
        None => (x, x),
        Some((lo, hi)) => (lo.min(x), hi.max(x)),
    });
}

impl Coverage {
    fn new(a: &AlignmentMatrix) -> Self {
        let mut c = Coverage {
            tgt_src: vec![None; a.tgt_len],
            src_tgt: vec![None; a.src_len],
        };
        for (i, j) in a.links() {
            widen(&mut c.tgt_src[j], i);
            widen(&mut c.src_tgt[i], j);
        }
        c
    }

    /// Target range linked from `[s1, s2]`, if any link exists.
    fn tgt_range(&self, s1: usize, s2: usize) -> Option<(usize, usize)> {
        let mut out = None;
        for (lo, hi) in self.src_tgt[s1..=s2].iter().flatten() {
            widen(&mut out, *lo);
            widen(&mut out, *hi);
        }
        out
    }

    /// No target in `[t1, t2]` links outside `[s1, s2]`.
    fn closed(&self, s1: usize, s2: usize, t1: usize, t2: usize) -> bool {
        self.tgt_src[t1..=t2]
            .iter()
            .flatten()
            .all(|&(lo, hi)| lo >= s1 && hi <= s2)
    }

    fn tgt_unaligned(&self, j: usize) -> bool {
        self.tgt_src[j].is_none()
    }
}

/// All alignment-consistent phrase pairs with both sides at most `max_len` tokens.
pub fn extract_phrases(pair: &SentencePair, a: &AlignmentMatrix, max_len: usize) -> Result<Vec<PhrasePair>> {
    check_dims(pair, a)?;
    let cov = Coverage::new(a);
    let (n, m) = a.dims();
    let mut out = Vec::new();
    for s1 in 0..n {
        for s2 in s1..n.min(s1 + max_len) {
            let Some((tmin, tmax)) = cov.tgt_range(s1, s2) else {
                continue;
            };
            if tmax - tmin + 1 > max_len || !cov.closed(s1, s2, tmin, tmax) {
                continue;
            }
            // extend over unaligned target words on either side
            let mut t1 = tmin;
            loop {
                let mut t2 = tmax;
                loop {
                    if t2 - t1 + 1 > max_len {
                        break;
                    }
                    out.push(make_pair(pair, a, Span::new(s1, s2), Span::new(t1, t2)));
                    t2 += 1;
                    if t2 >= m || !cov.tgt_unaligned(t2) {
                        break;
                    }
                }
                if t1 == 0 || !cov.tgt_unaligned(t1 - 1) || tmax - (t1 - 1) + 1 > max_len {
                    break;
                }
                t1 -= 1;
            }
        }
    }
    out.sort();
    Ok(out)
}

fn make_pair(pair: &SentencePair, a: &AlignmentMatrix, s: Span, t: Span) -> PhrasePair {
    PhrasePair {
        src_span: s,
        tgt_span: t,
        src: pair.src[s.start..=s.end].to_vec(),
        tgt: pair.tgt[t.start..=t.end].to_vec(),
        links: a
            .links()
            .filter(|&(i, j)| s.contains(i) && t.contains(j))
            .map(|(i, j)| (i - s.start, j - t.start))
            .collect(),
    }
}

/// Word translation probabilities estimated from aligned corpus counts;
/// unaligned words count as aligned to NULL.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexicalTable {
    t_given_s: HashMap<(String, String), f64>,
    s_given_t: HashMap<(String, String), f64>,
}

impl LexicalTable {
    pub fn from_alignments(corpus: &ParallelCorpus, alignments: &[AlignmentMatrix]) -> Result<Self> {
        if corpus.len() != alignments.len() {
            return Err(PhraseError::CountMismatch(corpus.len(), alignments.len()));
        }
        let mut joint: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut src_tot: HashMap<String, f64> = HashMap::new();
        let mut tgt_tot: HashMap<String, f64> = HashMap::new();
        let mut bump = |s: &str, t: &str| {
            *joint.entry((s.to_string(), t.to_string())).or_default() += 1.0;
            *src_tot.entry(s.to_string()).or_default() += 1.0;
            *tgt_tot.entry(t.to_string()).or_default() += 1.0;
        };
        for (p, a) in corpus.pairs.iter().zip(alignments) {
            check_dims(p, a)?;
            let cov = Coverage::new(a);
            for (i, j) in a.links() {
                bump(&p.src[i], &p.tgt[j]);
            }
            for (i, s) in p.src.iter().enumerate() {
                if cov.src_tgt[i].is_none() {
                    bump(s, NULL_WORD);
                }
            }
            for (j, t) in p.tgt.iter().enumerate() {
                if cov.tgt_src[j].is_none() {
                    bump(NULL_WORD, t);
                }
            }
        }
        let mut lex = LexicalTable::default();
        for ((s, t), c) in joint {
            lex.t_given_s.insert((s.clone(), t.clone()), c / src_tot[&s]);
            lex.s_given_t.insert((s.clone(), t.clone()), c / tgt_tot[&t]);
        }
        Ok(lex)
    }

    pub fn t_given_s(&self, s: &str, t: &str) -> f64 {
        self.t_given_s
            .get(&(s.to_string(), t.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn s_given_t(&self, s: &str, t: &str) -> f64 {
        self.s_given_t
            .get(&(s.to_string(), t.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(lex(t|s), lex(s|t))` for one phrase pair under its internal alignment.
    pub fn phrase_weights(&self, p: &PhrasePair) -> (f64, f64) {
        let mut ts = 1.0;
        for (j, t) in p.tgt.iter().enumerate() {
            let srcs: Vec<&str> = p.links.iter().filter(|l| l.1 == j).map(|l| p.src[l.0].as_str()).collect();
            ts *= if srcs.is_empty() {
                self.t_given_s(NULL_WORD, t)
            } else {
                srcs.iter().map(|s| self.t_given_s(s, t)).sum::<f64>() / srcs.len() as f64
            };
        }
        let mut st = 1.0;
        for (i, s) in p.src.iter().enumerate() {
            let tgts: Vec<&str> = p.links.iter().filter(|l| l.0 == i).map(|l| p.tgt[l.1].as_str()).collect();
            st *= if tgts.is_empty() {
                self.s_given_t(s, NULL_WORD)
            } else {
                tgts.iter().map(|t| self.s_given_t(s, t)).sum::<f64>() / tgts.len() as f64
            };
        }
        (ts, st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseScores {
    pub phi_t_given_s: f64,
    pub phi_s_given_t: f64,
    pub lex_t_given_s: f64,
    pub lex_s_given_t: f64,
}

impl PhraseScores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.phi_t_given_s, self.phi_s_given_t, self.lex_t_given_s, self.lex_s_given_t]
    }
}

/// Source phrase text → target phrase text → scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseTable {
    pub entries: BTreeMap<String, BTreeMap<String, PhraseScores>>,
}

impl PhraseTable {
    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, src: &str, tgt: &str) -> Option<&PhraseScores> {
        self.entries.get(src)?.get(tgt)
    }

    pub fn options(&self, src: &str) -> Option<&BTreeMap<String, PhraseScores>> {
        self.entries.get(src)
    }

    pub fn max_src_len(&self) -> usize {
        self.entries.keys().map(|k| k.split(' ').count()).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, row) in &self.entries {
            for (t, sc) in row {
                let [a, b, c, d] = sc.as_array();
                out.push_str(&format!("{s} ||| {t} ||| {a:.6} {b:.6} {c:.6} {d:.6}\n"));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pt = PhraseTable::default();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (s, t, vals) = split_entry(line, n + 1)?;
            let [a, b, c, d] = parse_reals::<4>(vals, n + 1)?;
            pt.entries.entry(s).or_default().insert(
                t,
                PhraseScores {
                    phi_t_given_s: a,
                    phi_s_given_t: b,
                    lex_t_given_s: c,
                    lex_s_given_t: d,
                },
            );
        }
        Ok(pt)
    }
}

fn split_entry(line: &str, n: usize) -> Result<(String, String, &str)> {
    let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
    match fields.as_slice() {
        [s, t, v] if !s.is_empty() && !t.is_empty() => Ok((s.to_string(), t.to_string(), v)),
        _ => Err(PhraseError::Malformed {
            line: n,
            message: "expected `src ||| tgt ||| scores`".into(),
        }),
    }
}

fn parse_reals<const N: usize>(vals: &str, n: usize) -> Result<[f64; N]> {
    let parsed: Vec<f64> = vals
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| PhraseError::Malformed {
            line: n,
            message: format!("{e}"),
        })?;
    parsed.try_into().map_err(|v: Vec<f64>| PhraseError::Malformed {
        line: n,
        message: format!("expected {N} scores, found {}", v.len()),
    })
}

/// Relative-frequency phrase probabilities plus lexical weights (the
/// highest weight seen for each pair when its internal alignment varies).
pub fn score_table(extracted: &[PhrasePair], lex: &LexicalTable) -> PhraseTable {
    let mut joint: BTreeMap<(String, String), (usize, f64, f64)> = BTreeMap::new();
    let mut src_n: HashMap<String, usize> = HashMap::new();
    let mut tgt_n: HashMap<String, usize> = HashMap::new();
    for p in extracted {
        let (s, t) = (p.src_text(), p.tgt_text());
        let (lts, lst) = lex.phrase_weights(p);
        let e = joint.entry((s.clone(), t.clone())).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(lts);
        e.2 = e.2.max(lst);
        *src_n.entry(s).or_default() += 1;
        *tgt_n.entry(t).or_default() += 1;
    }
    let mut pt = PhraseTable::default();
    for ((s, t), (c, lts, lst)) in joint {
        let scores = PhraseScores {
            phi_t_given_s: c as f64 / src_n[&s] as f64,
            phi_s_given_t: c as f64 / tgt_n[&t] as f64,
            lex_t_given_s: lts,
            lex_s_given_t: lst,
        };
        pt.entries.entry(s).or_default().insert(t, scores);
    }
    pt
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Monotone,
    Swap,
    Discontinuous,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Monotone, Orientation::Swap, Orientation::Discontinuous];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Monotone => "M",
            Orientation::Swap => "S",
            Orientation::Discontinuous => "D",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Orientation of a phrase relative to the one translated just before it.
    Forward,
    /// Orientation of a phrase relative to the one translated just after it.
    Backward,
}

/// Orientation of `cur` with respect to `neighbor`, which directly precedes
/// it in target order for `Forward` and directly follows it for `Backward`.
/// Phrases that are not target-adjacent are discontinuous.
pub fn classify_orientation(neighbor: &PhrasePair, cur: &PhrasePair, a: &AlignmentMatrix, direction: Direction) -> Orientation {
    debug_assert!(neighbor.src_span.end < a.src_len && cur.src_span.end < a.src_len);
    let (first, second) = match direction {
        Direction::Forward => (neighbor, cur),
        Direction::Backward => (cur, neighbor),
    };
    if first.tgt_span.end + 1 != second.tgt_span.start {
        return Orientation::Discontinuous;
    }
    spans_orientation(first.src_span, second.src_span)
}

/// Orientation of `second` after `first` in target order, from source spans alone.
pub fn spans_orientation(first: Span, second: Span) -> Orientation {
    if second.start == first.end + 1 {
        Orientation::Monotone
    } else if second.end + 1 == first.start {
        Orientation::Swap
    } else {
        Orientation::Discontinuous
    }
}

/// Whether some consistent block has its source end at `s_end` (start at
/// `s_start` when `anchor_start`) and its target end at `t_end`.
fn block_ending_at_target(cov: &Coverage, src_fixed: usize, anchor_start: bool, t_end: usize, n: usize) -> bool {
    let ranges: Box<dyn Iterator<Item = (usize, usize)>> = if anchor_start {
        Box::new((src_fixed..n).map(move |e| (src_fixed, e)))
    } else {
        Box::new((0..=src_fixed).rev().map(move |s| (s, src_fixed)))
    };
    for (s1, s2) in ranges {
        let Some((tmin, tmax)) = cov.tgt_range(s1, s2) else {
            continue;
        };
        if tmax > t_end {
            continue;
        }
        if (tmax + 1..=t_end).all(|j| cov.tgt_unaligned(j)) && cov.closed(s1, s2, tmin, tmax) {
            return true;
        }
    }
    false
}

/// Mirror of `block_ending_at_target` for blocks starting at target `t_start`.
fn block_starting_at_target(cov: &Coverage, src_fixed: usize, anchor_start: bool, t_start: usize, n: usize) -> bool {
    let ranges: Box<dyn Iterator<Item = (usize, usize)>> = if anchor_start {
        Box::new((src_fixed..n).map(move |e| (src_fixed, e)))
    } else {
        Box::new((0..=src_fixed).rev().map(move |s| (s, src_fixed)))
    };
    for (s1, s2) in ranges {
        let Some((tmin, tmax)) = cov.tgt_range(s1, s2) else {
            continue;
        };
        if tmin < t_start {
            continue;
        }
        if (t_start..tmin).all(|j| cov.tgt_unaligned(j)) && cov.closed(s1, s2, tmin, tmax) {
            return true;
        }
    }
    false
}

/// Training-time orientation of an extracted phrase: monotone or swap when a
/// consistent block of any size sits at the matching corner, sentence edges
/// counting as monotone.
pub fn training_orientation(p: &PhrasePair, a: &AlignmentMatrix, direction: Direction) -> Orientation {
    let cov = Coverage::new(a);
    training_orientation_with(p, &cov, a.dims(), direction)
}

fn training_orientation_with(p: &PhrasePair, cov: &Coverage, (n, m): (usize, usize), direction: Direction) -> Orientation {
    let (s, t) = (p.src_span, p.tgt_span);
    match direction {
        Direction::Forward => {
            if t.start == 0 {
                return if s.start == 0 {
                    Orientation::Monotone
                } else {
                    Orientation::Discontinuous
                };
            }
            if s.start > 0 && block_ending_at_target(cov, s.start - 1, false, t.start - 1, n) {
                Orientation::Monotone
            } else if s.end + 1 < n && block_ending_at_target(cov, s.end + 1, true, t.start - 1, n) {
                Orientation::Swap
            } else {
                Orientation::Discontinuous
            }
        }
        Direction::Backward => {
            if t.end + 1 == m {
                return if s.end + 1 == n {
                    Orientation::Monotone
                } else {
                    Orientation::Discontinuous
                };
            }
            if s.end + 1 < n && block_starting_at_target(cov, s.end + 1, true, t.end + 1, n) {
                Orientation::Monotone
            } else if s.start > 0 && block_starting_at_target(cov, s.start - 1, false, t.end + 1, n) {
                Orientation::Swap
            } else {
                Orientation::Discontinuous
            }
        }
    }
}

/// One extracted phrase pair with its forward and backward orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationEvent {
    pub src: String,
    pub tgt: String,
    pub forward: Orientation,
    pub backward: Orientation,
}

/// Smoothed M/S/D distributions, forward then backward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReorderingModel {
    pub entries: BTreeMap<(String, String), [f64; 6]>,
}

impl ReorderingModel {
    pub fn get(&self, src: &str, tgt: &str) -> Option<&[f64; 6]> {
        self.entries.get(&(src.to_string(), tgt.to_string()))
    }

    /// Probability for a phrase pair, falling back to a uniform distribution for unseen pairs.
    pub fn prob(&self, src: &str, tgt: &str, direction: Direction, o: Orientation) -> f64 {
        match self.get(src, tgt) {
            Some(row) => {
                let base = if direction == Direction::Forward { 0 } else { 3 };
                row[base + o.index()]
            }
            None => 1.0 / 3.0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((s, t), p) in &self.entries {
            let vals: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
            out.push_str(&format!("{s} ||| {t} ||| {}\n", vals.join(" ")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rm = ReorderingModel::default();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (s, t, vals) = split_entry(line, n + 1)?;
            rm.entries.insert((s, t), parse_reals::<6>(vals, n + 1)?);
        }
        Ok(rm)
    }
}

/// Per-pair relative frequencies with add-`alpha` smoothing in each direction.
pub fn train_reordering(events: &[OrientationEvent], alpha: f64) -> ReorderingModel {
    let mut counts: BTreeMap<(String, String), [usize; 6]> = BTreeMap::new();
    for e in events {
        let c = counts.entry((e.src.clone(), e.tgt.clone())).or_insert([0; 6]);
        c[e.forward.index()] += 1;
        c[3 + e.backward.index()] += 1;
    }
    let entries = counts
        .into_iter()
        .map(|(k, c)| {
            let mut p = [0.0; 6];
            for base in [0, 3] {
                let n: usize = c[base..base + 3].iter().sum();
                for o in 0..3 {
                    p[base + o] = (c[base + o] as f64 + alpha) / (n as f64 + 3.0 * alpha);
                }
            }
            (k, p)
        })
        .collect();
    ReorderingModel { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseConfig {
    pub max_len: usize,
}

impl Default for PhraseConfig {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_PHRASE_LEN,
        }
    }
}

/// Extraction, scoring and reordering training over a word-aligned corpus.
pub fn train_phrase_model(
    corpus: &ParallelCorpus,
    alignments: &[AlignmentMatrix],
    cfg: &PhraseConfig,
) -> Result<(PhraseTable, ReorderingModel)> {
    let lex = LexicalTable::from_alignments(corpus, alignments)?;
    let mut extracted = Vec::new();
    let mut events = Vec::new();
    for (p, a) in corpus.pairs.iter().zip(alignments) {
        let cov = Coverage::new(a);
        for pp in extract_phrases(p, a, cfg.max_len)? {
            events.push(OrientationEvent {
                src: pp.src_text(),
                tgt: pp.tgt_text(),
                forward: training_orientation_with(&pp, &cov, a.dims(), Direction::Forward),
                backward: training_orientation_with(&pp, &cov, a.dims(), Direction::Backward),
            });
            extracted.push(pp);
        }
    }
    Ok((score_table(&extracted, &lex), train_reordering(&events, REORDERING_SMOOTHING)))
}

/// Distinct `(source text, target text)` keys of an extraction, sorted.
pub fn phrase_keys(extracted: &[PhrasePair]) -> BTreeSet<(String, String)> {
    extracted.iter().map(|p| (p.src_text(), p.tgt_text())).collect()
}

impl FromStr for Orientation {
    type Err = PhraseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(Orientation::Monotone),
            "S" | "s" => Ok(Orientation::Swap),
            "D" | "d" => Ok(Orientation::Discontinuous),
            other => Err(PhraseError::Malformed {
                line: 0,
                message: format!("unknown orientation `{other}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(s: &str, t: &str) -> SentencePair {
        SentencePair::from_text(s, t, 1)
    }

    fn m(n: usize, k: usize, links: &[(usize, usize)]) -> AlignmentMatrix {
        AlignmentMatrix::new(n, k, links.iter().copied()).unwrap()
    }

    fn spans(v: &[PhrasePair]) -> Vec<((usize, usize), (usize, usize))> {
        v.iter()
            .map(|p| ((p.src_span.start, p.src_span.end), (p.tgt_span.start, p.tgt_span.end)))
            .collect()
    }

    #[test]
    fn extraction_examples() {
        let one = extract_phrases(&pair("a", "x"), &m(1, 1, &[(0, 0)]), 7).unwrap();
        assert_eq!(one.len(), 1);

        let diag = extract_phrases(&pair("a b", "x y"), &m(2, 2, &[(0, 0), (1, 1)]), 2).unwrap();
        assert_eq!(spans(&diag), vec![((0, 0), (0, 0)), ((0, 1), (0, 1)), ((1, 1), (1, 1))]);

        assert!(extract_phrases(&pair("a b", "x y"), &m(2, 2, &[]), 7).unwrap().is_empty());
        assert!(matches!(
            extract_phrases(&pair("a b", "x"), &m(2, 2, &[]), 7),
            Err(PhraseError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn unaligned_words_extend_boxes() {
        // target "y" is unaligned, so "a" pairs with "x" and with "x y"
        let got = extract_phrases(&pair("a", "x y"), &m(1, 2, &[(0, 0)]), 7).unwrap();
        assert_eq!(spans(&got), vec![((0, 0), (0, 0)), ((0, 0), (0, 1))]);
        // and the length limit applies to the extension
        let got = extract_phrases(&pair("a", "x y"), &m(1, 2, &[(0, 0)]), 1).unwrap();
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn phrase_probabilities() {
        let p1 = make_pair(&pair("a", "x"), &m(1, 1, &[(0, 0)]), Span::new(0, 0), Span::new(0, 0));
        let p2 = make_pair(&pair("a", "y"), &m(1, 1, &[(0, 0)]), Span::new(0, 0), Span::new(0, 0));
        let pt = score_table(std::slice::from_ref(&p1), &LexicalTable::default());
        assert_eq!(pt.get("a", "x").unwrap().phi_t_given_s, 1.0);
        let pt = score_table(&[p1, p2], &LexicalTable::default());
        assert_eq!(pt.get("a", "x").unwrap().phi_t_given_s, 0.5);
        assert_eq!(pt.get("a", "y").unwrap().phi_t_given_s, 0.5);
        assert_eq!(pt.get("a", "y").unwrap().phi_s_given_t, 1.0);
    }

    #[test]
    fn lexical_weights() {
        let c = ParallelCorpus::from_lines("pl", "en", [("a b", "x y z"), ("a", "x")]);
        let aligns = vec![m(2, 3, &[(0, 0), (1, 1)]), m(1, 1, &[(0, 0)])];
        let lex = LexicalTable::from_alignments(&c, &aligns).unwrap();
        assert_eq!(lex.t_given_s("a", "x"), 1.0);
        assert_eq!(lex.t_given_s(NULL_WORD, "z"), 1.0);
        assert_eq!(lex.s_given_t("a", "x"), 1.0);
        let whole = make_pair(&c.pairs[0], &aligns[0], Span::new(0, 1), Span::new(0, 2));
        assert_eq!(lex.phrase_weights(&whole), (1.0, 1.0));
    }

    #[test]
    fn table_text_round_trip() {
        let c = ParallelCorpus::from_lines("pl", "en", [("a b", "x y"), ("b a", "x y")]);
        let aligns = vec![m(2, 2, &[(0, 0), (1, 1)]), m(2, 2, &[(0, 1), (1, 0)])];
        let (pt, rm) = train_phrase_model(&c, &aligns, &PhraseConfig::default()).unwrap();
        let text = pt.to_text();
        assert!(text.lines().any(|l| l == "a ||| x ||| 1.000000 1.000000 1.000000 1.000000"));
        assert_eq!(PhraseTable::from_text(&text).unwrap(), pt);
        assert_eq!(ReorderingModel::from_text(&rm.to_text()).unwrap().to_text(), rm.to_text());
        assert!(PhraseTable::from_text("a ||| x ||| 1 2").is_err());
        assert!(PhraseTable::from_text("a ||| x").is_err());
    }

    #[test]
    fn orientation_examples() {
        let a = m(4, 4, &[(0, 0), (1, 1), (3, 3)]);
        let p = |s: usize, t: usize| PhrasePair {
            src_span: Span::new(s, s),
            tgt_span: Span::new(t, t),
            src: vec![],
            tgt: vec![],
            links: vec![(0, 0)],
        };
        use Direction::*;
        use Orientation::*;
        assert_eq!(classify_orientation(&p(0, 0), &p(1, 1), &a, Forward), Monotone);
        assert_eq!(classify_orientation(&p(1, 0), &p(0, 1), &a, Forward), Swap);
        assert_eq!(classify_orientation(&p(0, 0), &p(3, 1), &a, Forward), Discontinuous);
        // backward: the neighbor comes after cur
        assert_eq!(classify_orientation(&p(1, 1), &p(0, 0), &a, Backward), Monotone);
        assert_eq!(classify_orientation(&p(0, 1), &p(1, 0), &a, Backward), Swap);
        // not target-adjacent
        assert_eq!(classify_orientation(&p(0, 0), &p(1, 2), &a, Forward), Discontinuous);
    }

    #[test]
    fn training_orientations() {
        use Direction::*;
        use Orientation::*;
        // a b c -> z y x : fully inverted
        let sp = pair("a b c", "z y x");
        let a = m(3, 3, &[(0, 2), (1, 1), (2, 0)]);
        let ph = extract_phrases(&sp, &a, 1).unwrap();
        let orient: Vec<_> = ph
            .iter()
            .map(|p| (p.src_text(), training_orientation(p, &a, Forward), training_orientation(p, &a, Backward)))
            .collect();
        assert_eq!(
            orient,
            vec![
                ("a".into(), Swap, Discontinuous),
                ("b".into(), Swap, Swap),
                ("c".into(), Discontinuous, Swap),
            ]
        );
        // monotone sentence
        let a = m(3, 3, &[(0, 0), (1, 1), (2, 2)]);
        for p in extract_phrases(&pair("a b c", "x y z"), &a, 2).unwrap() {
            assert_eq!(training_orientation(&p, &a, Forward), Monotone);
            assert_eq!(training_orientation(&p, &a, Backward), Monotone);
        }
    }

    #[test]
    fn reordering_smoothing() {
        let ev = |f, b| OrientationEvent {
            src: "a".into(),
            tgt: "x".into(),
            forward: f,
            backward: b,
        };
        let events = vec![ev(Orientation::Monotone, Orientation::Swap); 4];
        let rm = train_reordering(&events, REORDERING_SMOOTHING);
        let row = rm.get("a", "x").unwrap();
        assert_eq!(row[0], 4.5 / 5.5);
        assert_eq!(row[1], 0.5 / 5.5);
        assert_eq!(row[4], 4.5 / 5.5);
        assert!((row[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((row[3..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(rm.prob("q", "r", Direction::Forward, Orientation::Swap), 1.0 / 3.0);
    }

    proptest! {
        #[test]
        fn monotone_swap_mirror(s1 in 0usize..6, l1 in 1usize..3, l2 in 1usize..3) {
            let a = Span::new(s1, s1 + l1 - 1);
            let b = Span::new(a.end + 1, a.end + l2);
            prop_assert_eq!(spans_orientation(a, b), Orientation::Monotone);
            prop_assert_eq!(spans_orientation(b, a), Orientation::Swap);
        }

        #[test]
        fn tables_normalize(links in proptest::collection::vec((0usize..5, 0usize..5), 1..10)) {
            let sp = pair("a b c a b", "x y x z y");
            let a = m(5, 5, &links);
            let c = ParallelCorpus { pairs: vec![sp], src_lang: "pl".into(), tgt_lang: "en".into() };
            let (pt, rm) = train_phrase_model(&c, &[a], &PhraseConfig::default()).unwrap();
            for row in pt.entries.values() {
                let s: f64 = row.values().map(|x| x.phi_t_given_s).sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                for sc in row.values() {
                    for v in sc.as_array() {
                        prop_assert!(v > 0.0 && v <= 1.0);
                    }
                }
            }
            for p in rm.entries.values() {
                prop_assert!(p.iter().all(|&x| x > 0.0));
                prop_assert!((p[..3].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
