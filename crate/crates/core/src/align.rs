//! IBM Model 1 word alignment and symmetrization of directional alignments.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::ParallelCorpus;
use crate::Scalar;

/// Source-side token standing for "aligned to nothing".
pub const NULL_WORD: &str = "NULL";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("alignment dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("link {0}-{1} is outside a {2}x{3} sentence pair")]
    LinkOutOfRange(usize, usize, usize, usize),
    #[error("bad alignment point `{0}`")]
    BadPoint(String),
    #[error("unknown symmetrization heuristic `{0}`")]
    UnknownHeuristic(String),
}

pub type Result<T> = std::result::Result<T, AlignError>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    fn get(&self, w: &str) -> Option<u32> {
        self.ids.get(w).copied()
    }
}

/// Lexical translation probabilities `t(target | source)`.
///
/// Source id 0 is the NULL word. Each source row sums to one over the
/// target words it co-occurred with.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable<F> {
    src: Interner,
    tgt: Interner,
    probs: HashMap<(u32, u32), F>,
    use_null: bool,
    /// Free-form tag such as `pl-en`.
    pub direction: String,
}

impl<F: Scalar> TranslationTable<F> {
    pub fn prob(&self, src: &str, tgt: &str) -> F {
        match (self.src.get(src), self.tgt.get(tgt)) {
            (Some(s), Some(t)) => self.probs.get(&(s, t)).copied().unwrap_or_else(F::zero),
            _ => F::zero(),
        }
    }

    pub fn null_prob(&self, tgt: &str) -> F {
        if !self.use_null {
            return F::zero();
        }
        self.prob(NULL_WORD, tgt)
    }

    pub fn uses_null(&self) -> bool {
        self.use_null
    }

    /// Sum of each source row, keyed by source word (NULL included).
    pub fn row_sums(&self) -> Vec<(String, F)> {
        let mut sums = vec![F::zero(); self.src.words.len()];
        let mut keys: Vec<_> = self.probs.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            sums[k.0 as usize] += self.probs[&k];
        }
        self.src
            .words
            .iter()
            .cloned()
            .zip(sums)
            .filter(|(w, _)| self.use_null || w != NULL_WORD)
            .collect()
    }

    /// `(source, target, probability)` triples sorted by source then target word.
    pub fn entries(&self) -> Vec<(&str, &str, F)> {
        let mut out: Vec<_> = self
            .probs
            .iter()
            .map(|(&(s, t), &p)| (self.src.words[s as usize].as_str(), self.tgt.words[t as usize].as_str(), p))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Posterior `P(a_j = i | pair)` for every target position `j` (rows) over
    /// NULL followed by the source positions (columns).
    pub fn link_posteriors<S: AsRef<str>>(&self, src: &[S], tgt: &[S]) -> Vec<Vec<F>> {
        tgt.iter()
            .map(|t| {
                let t = t.as_ref();
                let mut row: Vec<F> = std::iter::once(self.null_prob(t))
                    .chain(src.iter().map(|s| self.prob(s.as_ref(), t)))
                    .collect();
                let z: F = row.iter().copied().sum();
                if z > F::zero() {
                    row.iter_mut().for_each(|p| *p /= z);
                }
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ibm1Config {
    pub iterations: usize,
    pub use_null: bool,
}

impl Default for Ibm1Config {
    fn default() -> Self {
        Self {
            iterations: 5,
            use_null: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ibm1Training<F> {
    pub table: TranslationTable<F>,
    /// Corpus log-likelihood (natural log) under the initial parameters and
    /// after every iteration; `iterations + 1` values.
    pub log_likelihood: Vec<F>,
}

struct Encoded {
    pairs: Vec<(Vec<u32>, Vec<u32>)>,
    src: Interner,
    tgt: Interner,
}

fn encode(corpus: &ParallelCorpus) -> Encoded {
    let mut src = Interner::default();
    let mut tgt = Interner::default();
    src.intern(NULL_WORD);
    let pairs = corpus
        .pairs
        .iter()
        .map(|p| {
            let s = std::iter::once(0).chain(p.src.iter().map(|w| src.intern(w))).collect();
            let t = p.tgt.iter().map(|w| tgt.intern(w)).collect();
            (s, t)
        })
        .collect();
    Encoded { pairs, src, tgt }
}

fn log_likelihood<F: Scalar>(pairs: &[(Vec<u32>, Vec<u32>)], probs: &HashMap<(u32, u32), F>, first: usize) -> F {
    let mut ll = F::zero();
    for (s, t) in pairs {
        let sources = &s[first..];
        let norm = F::of_usize(sources.len()).ln();
        for &tw in t {
            let z: F = sources.iter().map(|&sw| probs[&(sw, tw)]).sum();
            ll += z.ln() - norm;
        }
    }
    ll
}

/// Trains `t(target | source)` with IBM Model 1 EM from a uniform start over co-occurring pairs.
pub fn train_ibm1<F: Scalar>(corpus: &ParallelCorpus, cfg: &Ibm1Config) -> Result<Ibm1Training<F>> {
    if corpus.pairs.iter().all(|p| p.src.is_empty() || p.tgt.is_empty()) {
        return Err(AlignError::EmptyCorpus);
    }
    let enc = encode(corpus);
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = enc
        .pairs
        .into_iter()
        .filter(|(s, t)| s.len() > 1 && !t.is_empty())
        .collect();
    // NULL sits at index 0 of every source sentence
    let first = usize::from(!cfg.use_null);

    let mut cooc: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (s, t) in &pairs {
        for &sw in &s[first..] {
            for &tw in t {
                cooc.insert((sw, tw));
            }
        }
    }
    let mut fanout = vec![0usize; enc.src.words.len()];
    for &(s, _) in &cooc {
        fanout[s as usize] += 1;
    }
    let mut probs: HashMap<(u32, u32), F> = cooc
        .iter()
        .map(|&(s, t)| ((s, t), F::one() / F::of_usize(fanout[s as usize])))
        .collect();

    let mut ll_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut counts: HashMap<(u32, u32), F> = HashMap::with_capacity(probs.len());
    let mut totals = vec![F::zero(); enc.src.words.len()];
    for _ in 0..cfg.iterations {
        counts.clear();
        totals.iter_mut().for_each(|t| *t = F::zero());
        let mut ll = F::zero();
        for (s, t) in &pairs {
            let sources = &s[first..];
            let norm = F::of_usize(sources.len()).ln();
            for &tw in t {
                let z: F = sources.iter().map(|&sw| probs[&(sw, tw)]).sum();
                ll += z.ln() - norm;
                for &sw in sources {
                    let c = probs[&(sw, tw)] / z;
                    *counts.entry((sw, tw)).or_insert_with(F::zero) += c;
                    totals[sw as usize] += c;
                }
            }
        }
        ll_trace.push(ll);
        for (key, p) in probs.iter_mut() {
            *p = counts[key] / totals[key.0 as usize];
        }
    }
    ll_trace.push(log_likelihood(&pairs, &probs, first));

    Ok(Ibm1Training {
        table: TranslationTable {
            src: enc.src,
            tgt: enc.tgt,
            probs,
            use_null: cfg.use_null,
            direction: format!("{}-{}", corpus.src_lang, corpus.tgt_lang),
        },
        log_likelihood: ll_trace,
    })
}

/// Set of `(source, target)` links for one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignmentMatrix {
    pub src_len: usize,
    pub tgt_len: usize,
    links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn empty(src_len: usize, tgt_len: usize) -> Self {
        Self {
            src_len,
            tgt_len,
            links: BTreeSet::new(),
        }
    }

    pub fn new(src_len: usize, tgt_len: usize, links: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Self::empty(src_len, tgt_len);
        for (i, j) in links {
            if i >= src_len || j >= tgt_len {
                return Err(AlignError::LinkOutOfRange(i, j, src_len, tgt_len));
            }
            m.links.insert((i, j));
        }
        Ok(m)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.src_len, self.tgt_len)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn is_subset(&self, other: &AlignmentMatrix) -> bool {
        self.links.is_subset(&other.links)
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> Self {
        Self {
            src_len: self.tgt_len,
            tgt_len: self.src_len,
            links: self.links.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    /// Pharaoh format: space-separated 0-based `i-j` pairs.
    pub fn to_pharaoh(&self) -> String {
        self.links
            .iter()
            .map(|(i, j)| format!("{i}-{j}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_pharaoh(line: &str, src_len: usize, tgt_len: usize) -> Result<Self> {
        let links = line
            .split_whitespace()
            .map(|p| {
                p.split_once('-')
                    .and_then(|(i, j)| Some((i.parse().ok()?, j.parse().ok()?)))
                    .ok_or_else(|| AlignError::BadPoint(p.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(src_len, tgt_len, links)
    }
}

/// Links each target word to its most probable source word, or to nothing
/// when NULL wins. Ties go to the lowest position, with NULL ranked first.
pub fn viterbi_align<F: Scalar, S: AsRef<str>>(table: &TranslationTable<F>, src: &[S], tgt: &[S]) -> AlignmentMatrix {
    let mut m = AlignmentMatrix::empty(src.len(), tgt.len());
    for (j, t) in tgt.iter().enumerate() {
        let t = t.as_ref();
        let mut best: Option<usize> = None;
        let mut best_p = if table.use_null {
            table.null_prob(t)
        } else {
            F::neg_infinity()
        };
        for (i, s) in src.iter().enumerate() {
            let p = table.prob(s.as_ref(), t);
            if p > best_p {
                best = Some(i);
                best_p = p;
            }
        }
        if let Some(i) = best.filter(|_| best_p > F::zero()) {
            m.links.insert((i, j));
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetrizationHeuristic {
    Intersection,
    Union,
    GrowDiag,
    GrowDiagFinal,
    GrowDiagFinalAnd,
}

impl SymmetrizationHeuristic {
    pub const ALL: [SymmetrizationHeuristic; 5] = [
        SymmetrizationHeuristic::Intersection,
        SymmetrizationHeuristic::Union,
        SymmetrizationHeuristic::GrowDiag,
        SymmetrizationHeuristic::GrowDiagFinal,
        SymmetrizationHeuristic::GrowDiagFinalAnd,
    ];
}

impl FromStr for SymmetrizationHeuristic {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "intersection" | "intersect" => Self::Intersection,
            "union" => Self::Union,
            "grow-diag" => Self::GrowDiag,
            "grow-diag-final" => Self::GrowDiagFinal,
            "grow-diag-final-and" => Self::GrowDiagFinalAnd,
            other => return Err(AlignError::UnknownHeuristic(other.to_string())),
        })
    }
}

impl fmt::Display for SymmetrizationHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Intersection => "intersection",
            Self::Union => "union",
            Self::GrowDiag => "grow-diag",
            Self::GrowDiagFinal => "grow-diag-final",
            Self::GrowDiagFinalAnd => "grow-diag-final-and",
        })
    }
}

/// Horizontal and vertical neighbors first, then diagonals.
pub(crate) const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];

struct Grower {
    links: BTreeSet<(usize, usize)>,
    src_aligned: Vec<bool>,
    tgt_aligned: Vec<bool>,
}

impl Grower {
    fn new(src_len: usize, tgt_len: usize, start: &BTreeSet<(usize, usize)>) -> Self {
        let mut g = Grower {
            links: BTreeSet::new(),
            src_aligned: vec![false; src_len],
            tgt_aligned: vec![false; tgt_len],
        };
        for &(i, j) in start {
            g.add(i, j);
        }
        g
    }

    fn add(&mut self, i: usize, j: usize) {
        self.links.insert((i, j));
        self.src_aligned[i] = true;
        self.tgt_aligned[j] = true;
    }

    /// Row-major scans adding union neighbors of current points until nothing changes.
    fn grow(&mut self, union: &BTreeSet<(usize, usize)>, neighbors: &[(isize, isize)]) {
        let (n, m) = (self.src_aligned.len(), self.tgt_aligned.len());
        loop {
            let mut added = false;
            for i in 0..n {
                for j in 0..m {
                    if !self.links.contains(&(i, j)) {
                        continue;
                    }
                    for &(di, dj) in neighbors {
                        let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else {
                            continue;
                        };
                        if ni >= n || nj >= m || self.links.contains(&(ni, nj)) || !union.contains(&(ni, nj)) {
                            continue;
                        }
                        if !self.src_aligned[ni] || !self.tgt_aligned[nj] {
                            self.add(ni, nj);
                            added = true;
                        }
                    }
                }
            }
            if !added {
                break;
            }
        }
    }

    fn finalize(&mut self, union: &BTreeSet<(usize, usize)>, both_unaligned: bool) {
        for &(i, j) in union {
            if self.links.contains(&(i, j)) {
                continue;
            }
            let ok = if both_unaligned {
                !self.src_aligned[i] && !self.tgt_aligned[j]
            } else {
                !self.src_aligned[i] || !self.tgt_aligned[j]
            };
            if ok {
                self.add(i, j);
            }
        }
    }
}

pub(crate) fn symmetrize_with(
    fwd: &AlignmentMatrix,
    bwd: &AlignmentMatrix,
    h: SymmetrizationHeuristic,
    neighbors: &[(isize, isize)],
) -> Result<AlignmentMatrix> {
    if fwd.dims() != bwd.dims() {
        return Err(AlignError::DimensionMismatch(fwd.dims(), bwd.dims()));
    }
    let inter: BTreeSet<_> = fwd.links.intersection(&bwd.links).copied().collect();
    let union: BTreeSet<_> = fwd.links.union(&bwd.links).copied().collect();
    let links = match h {
        SymmetrizationHeuristic::Intersection => inter,
        SymmetrizationHeuristic::Union => union,
        _ => {
            let mut g = Grower::new(fwd.src_len, fwd.tgt_len, &inter);
            g.grow(&union, neighbors);
            match h {
                SymmetrizationHeuristic::GrowDiagFinal => g.finalize(&union, false),
                SymmetrizationHeuristic::GrowDiagFinalAnd => g.finalize(&union, true),
                _ => {}
            }
            g.links
        }
    };
    Ok(AlignmentMatrix {
        src_len: fwd.src_len,
        tgt_len: fwd.tgt_len,
        links,
    })
}

/// Merges a forward and a backward alignment (both source-major).
pub fn symmetrize(fwd: &AlignmentMatrix, bwd: &AlignmentMatrix, h: SymmetrizationHeuristic) -> Result<AlignmentMatrix> {
    symmetrize_with(fwd, bwd, h, &NEIGHBORS)
}

/// Trains both directions and returns symmetrized alignments for every pair.
pub fn align_corpus<F: Scalar>(
    corpus: &ParallelCorpus,
    cfg: &Ibm1Config,
    heuristic: SymmetrizationHeuristic,
) -> Result<BidirectionalAlignment<F>> {
    let fwd = train_ibm1::<F>(corpus, cfg)?;
    let bwd = train_ibm1::<F>(&corpus.reversed(), cfg)?;
    let mut forward = Vec::with_capacity(corpus.len());
    let mut backward = Vec::with_capacity(corpus.len());
    let mut merged = Vec::with_capacity(corpus.len());
    for p in &corpus.pairs {
        let f = viterbi_align(&fwd.table, &p.src, &p.tgt);
        let b = viterbi_align(&bwd.table, &p.tgt, &p.src).transposed();
        merged.push(symmetrize(&f, &b, heuristic)?);
        forward.push(f);
        backward.push(b);
    }
    Ok(BidirectionalAlignment {
        fwd_table: fwd.table,
        bwd_table: bwd.table,
        forward,
        backward,
        symmetrized: merged,
    })
}

#[derive(Debug, Clone)]
pub struct BidirectionalAlignment<F> {
    pub fwd_table: TranslationTable<F>,
    pub bwd_table: TranslationTable<F>,
    pub forward: Vec<AlignmentMatrix>,
    /// Already transposed to source-major orientation.
    pub backward: Vec<AlignmentMatrix>,
    pub symmetrized: Vec<AlignmentMatrix>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SymmetrizationHeuristic::*;

    fn m(n: usize, k: usize, links: &[(usize, usize)]) -> AlignmentMatrix {
        AlignmentMatrix::new(n, k, links.iter().copied()).unwrap()
    }

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        ParallelCorpus::from_lines("de", "en", pairs.iter().copied())
    }

    #[test]
    fn single_pair_one_iteration() {
        let c = corpus(&[("a", "x")]);
        let with_null = train_ibm1::<f64>(&c, &Ibm1Config { iterations: 1, use_null: true }).unwrap();
        let post = with_null.table.link_posteriors(&["a"], &["x"]);
        assert_eq!(post, vec![vec![0.5, 0.5]]);
        assert_eq!(with_null.table.prob("a", "x"), 1.0);
        let no_null = train_ibm1::<f64>(&c, &Ibm1Config { iterations: 1, use_null: false }).unwrap();
        assert_eq!(no_null.table.prob("a", "x"), 1.0);
        assert_eq!(no_null.table.link_posteriors(&["a"], &["x"]), vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn classic_corpus() {
        let c = corpus(&[("das haus", "the house"), ("das buch", "the book")]);
        let cfg = Ibm1Config { iterations: 20, use_null: false };
        let a = train_ibm1::<f64>(&c, &cfg).unwrap();
        assert!(a.table.prob("das", "the") > 0.9);
        let again = train_ibm1::<f64>(&c, &cfg).unwrap();
        assert_eq!(a.table, again.table);
        for (_, s) in a.table.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(a.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(
            train_ibm1::<f64>(&corpus(&[]), &Ibm1Config::default()).unwrap_err(),
            AlignError::EmptyCorpus
        );
    }

    #[test]
    fn viterbi_examples() {
        let c = corpus(&[("a", "x"), ("b", "y")]);
        let t = train_ibm1::<f64>(&c, &Ibm1Config { iterations: 3, use_null: false }).unwrap().table;
        assert_eq!(viterbi_align(&t, &["a", "b"], &["x", "y"]), m(2, 2, &[(0, 0), (1, 1)]));
        assert!(viterbi_align(&t, &["q"], &["z"]).is_empty());

        let tie = train_ibm1::<f64>(&corpus(&[("a b", "x")]), &Ibm1Config { iterations: 2, use_null: false })
            .unwrap()
            .table;
        assert_eq!(tie.prob("a", "x"), tie.prob("b", "x"));
        assert_eq!(viterbi_align(&tie, &["a", "b"], &["x"]), m(2, 1, &[(0, 0)]));
    }

    #[test]
    fn null_preference_leaves_word_unaligned() {
        // "x" appears with NULL everywhere, "a" only once
        let c = corpus(&[("a", "x"), ("b", "x y"), ("c", "x z")]);
        let t = train_ibm1::<f64>(&c, &Ibm1Config { iterations: 10, use_null: true }).unwrap().table;
        assert!(t.null_prob("x") > t.prob("b", "x"));
        assert!(!viterbi_align(&t, &["b"], &["x"]).contains(0, 0));
    }

    #[test]
    fn pharaoh_format() {
        let a = m(3, 2, &[(2, 1), (0, 0)]);
        assert_eq!(a.to_pharaoh(), "0-0 2-1");
        assert_eq!(AlignmentMatrix::parse_pharaoh("0-0 2-1", 3, 2).unwrap(), a);
        assert_eq!(AlignmentMatrix::parse_pharaoh("", 1, 1).unwrap(), m(1, 1, &[]));
        assert!(AlignmentMatrix::parse_pharaoh("0-5", 1, 1).is_err());
        assert!(AlignmentMatrix::parse_pharaoh("0:1", 1, 2).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let fwd = m(2, 2, &[(0, 0)]);
        let bwd = m(2, 2, &[(0, 0), (1, 1)]);
        assert_eq!(symmetrize(&fwd, &bwd, Intersection).unwrap(), m(2, 2, &[(0, 0)]));
        assert_eq!(symmetrize(&fwd, &bwd, GrowDiagFinalAnd).unwrap(), m(2, 2, &[(0, 0), (1, 1)]));

        let a = m(3, 3, &[(0, 1), (2, 2)]);
        for h in SymmetrizationHeuristic::ALL {
            assert_eq!(symmetrize(&a, &a, h).unwrap(), a);
        }

        let f = m(2, 2, &[(0, 0)]);
        let b = m(2, 2, &[(1, 1)]);
        assert!(symmetrize(&f, &b, Intersection).unwrap().is_empty());
        assert_eq!(symmetrize(&f, &b, Union).unwrap(), m(2, 2, &[(0, 0), (1, 1)]));

        assert!(matches!(
            symmetrize(&m(2, 2, &[]), &m(2, 3, &[]), Union),
            Err(AlignError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn final_and_is_stricter() {
        // (1,0) joins word 1 to the already aligned target 0
        let fwd = m(2, 1, &[(0, 0)]);
        let bwd = m(2, 1, &[(0, 0), (1, 0)]);
        // grow-diag already adds (1,0): source 1 is unaligned and it neighbors (0,0)
        assert_eq!(symmetrize(&fwd, &bwd, GrowDiag).unwrap().len(), 2);
        // far-away point: only reachable through the final step
        let fwd = m(3, 3, &[(0, 0)]);
        let bwd = m(3, 3, &[(0, 0), (2, 0)]);
        assert_eq!(symmetrize(&fwd, &bwd, GrowDiag).unwrap(), m(3, 3, &[(0, 0)]));
        assert_eq!(symmetrize(&fwd, &bwd, GrowDiagFinal).unwrap(), m(3, 3, &[(0, 0), (2, 0)]));
        assert_eq!(symmetrize(&fwd, &bwd, GrowDiagFinalAnd).unwrap(), m(3, 3, &[(0, 0)]));
    }

    #[test]
    fn growing_depends_on_neighbor_order() {
        // From (1,1), visiting (1,2) before (2,2) admits both; visiting the
        // diagonal first aligns target 2 and source 2, which then blocks (1,2).
        let fwd = m(3, 3, &[(0, 0)]);
        let bwd = m(3, 3, &[(0, 0), (1, 1), (1, 2), (2, 2)]);
        let standard = symmetrize(&fwd, &bwd, GrowDiag).unwrap();
        assert_eq!(standard, m(3, 3, &[(0, 0), (1, 1), (1, 2), (2, 2)]));
        let mut diag_first = NEIGHBORS;
        diag_first.rotate_left(4);
        let other = symmetrize_with(&fwd, &bwd, GrowDiag, &diag_first).unwrap();
        assert_eq!(other, m(3, 3, &[(0, 0), (1, 1), (2, 2)]));
    }

    #[test]
    fn final_and_can_admit_a_point_final_skips() {
        let fwd = m(2, 2, &[(1, 0), (1, 1)]);
        let bwd = m(2, 2, &[(0, 0), (0, 1)]);
        let gdf = symmetrize(&fwd, &bwd, GrowDiagFinal).unwrap();
        let gdfa = symmetrize(&fwd, &bwd, GrowDiagFinalAnd).unwrap();
        assert_eq!(gdf, m(2, 2, &[(0, 0), (0, 1), (1, 0)]));
        assert_eq!(gdfa, m(2, 2, &[(0, 0), (1, 1)]));
        assert!(!gdfa.is_subset(&gdf));
    }

    fn arb_pair() ->impl Strategy<Value = (AlignmentMatrix, AlignmentMatrix)> {
        (1usize..6, 1usize..6).prop_flat_map(|(n, k)| {
            let links = proptest::collection::vec((0..n, 0..k), 0..(n * k));
            (links.clone(), links).prop_map(move |(a, b)| (m(n, k, &a), m(n, k, &b)))
        })
    }

    proptest! {
        #[test]
        fn results_between_intersection_and_union((fwd, bwd) in arb_pair()) {
            let inter = symmetrize(&fwd, &bwd, Intersection).unwrap();
            let union = symmetrize(&fwd, &bwd, Union).unwrap();
            for h in SymmetrizationHeuristic::ALL {
                let r = symmetrize(&fwd, &bwd, h).unwrap();
                prop_assert!(inter.is_subset(&r) && r.is_subset(&union));
            }
            let gd = symmetrize(&fwd, &bwd, GrowDiag).unwrap();
            prop_assert!(gd.is_subset(&symmetrize(&fwd, &bwd, GrowDiagFinal).unwrap()));
            prop_assert!(gd.is_subset(&symmetrize(&fwd, &bwd, GrowDiagFinalAnd).unwrap()));
        }

        #[test]
        fn pharaoh_round_trip((a, _) in arb_pair()) {
            prop_assert_eq!(AlignmentMatrix::parse_pharaoh(&a.to_pharaoh(), a.src_len, a.tgt_len).unwrap(), a);
        }
    }
}
