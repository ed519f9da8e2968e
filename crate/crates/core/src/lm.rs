//! Interpolated Kneser-Ney n-gram language model with ARPA serialization.
//!
//! Counting follows the usual modified-count scheme: the highest order and
//! every n-gram that starts with `<s>` keep raw counts, all other orders use
//! continuation counts (number of distinct left extensions). Each order has a
//! single discount `D = n1 / (n1 + 2 n2)` from its counts-of-counts.
//!
//! For a context `h` with adjusted counts `a(h·)`:
//!
//! ```text
//! P(w | h) = max(a(hw) - D, 0) / S(h) + D * T(h) / S(h) * P(w | h')
//! ```
//!
//! where `S(h)` is the total and `T(h)` the number of distinct continuations.
//! The unigram level interpolates with the uniform distribution over the
//! predictable vocabulary (every word except `<s>`). Stored log probabilities
//! are base 10; the interpolation weight `D T(h) / S(h)` is stored as the
//! back-off weight of `h`, which makes the back-off query exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use crate::Scalar;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub type WordId = u32;
pub const BOS_ID: WordId = 0;
pub const EOS_ID: WordId = 1;
pub const UNK_ID: WordId = 2;

/// Log probability written for `<s>`, which is never predicted.
const BOS_LOGPROB: f64 = -99.0;
const FALLBACK_DISCOUNT: f64 = 0.75;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("order {0} has no n-grams")]
    DegenerateCounts(usize),
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("malformed ARPA file at line {line}: {message}")]
    MalformedArpa { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LmError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, WordId>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Vocab {
            words: Vec::new(),
            ids: HashMap::new(),
        };
        for w in [BOS, EOS, UNK] {
            v.intern(w);
        }
        v
    }
}

impl Vocab {
    pub fn intern(&mut self, word: &str) -> WordId {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    /// Id of `word`, with unknown words mapped to `<unk>`.
    pub fn id(&self, word: &str) -> WordId {
        self.ids.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Every id except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = WordId> + '_ {
        (0..self.words.len() as WordId).filter(|&id| id != BOS_ID)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry<F> {
    pub logprob: F,
    /// Present only for n-grams that are contexts of a higher order.
    pub backoff: Option<F>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    /// Map training words seen exactly once to `<unk>`.
    pub unk_singletons: bool,
    /// Use this discount at every order instead of estimating it.
    pub fixed_discount: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            order: 5,
            unk_singletons: false,
            fixed_discount: None,
        }
    }
}

impl TrainConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel<F> {
    order: usize,
    vocab: Vocab,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<HashMap<Vec<WordId>, Entry<F>>>,
    /// Per-order discounts; empty for models loaded from ARPA.
    discounts: Vec<F>,
}

type Counts = BTreeMap<Vec<WordId>, u64>;

fn estimate_discount(adjusted: &Counts) -> f64 {
    let n1 = adjusted.values().filter(|&&c| c == 1).count() as f64;
    let n2 = adjusted.values().filter(|&&c| c == 2).count() as f64;
    let d = n1 / (n1 + 2.0 * n2);
    if n1 == 0.0 || n2 == 0.0 || !(d > 0.0 && d < 1.0) {
        FALLBACK_DISCOUNT
    } else {
        d
    }
}

/// Trains an interpolated Kneser-Ney model on tokenized sentences.
pub fn train_kn<F: Scalar, S: AsRef<str>>(sentences: &[Vec<S>], cfg: &TrainConfig) -> Result<NGramModel<F>> {
    if cfg.order == 0 {
        return Err(LmError::InvalidOrder);
    }
    if sentences.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let order = cfg.order;

    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for s in sentences {
        for w in s {
            *freq.entry(w.as_ref()).or_default() += 1;
        }
    }
    let mut vocab = Vocab::default();
    let mut padded: Vec<Vec<WordId>> = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut ids = Vec::with_capacity(s.len() + 2);
        ids.push(BOS_ID);
        for w in s {
            let w = w.as_ref();
            ids.push(if cfg.unk_singletons && freq[w] == 1 {
                UNK_ID
            } else {
                vocab.intern(w)
            });
        }
        ids.push(EOS_ID);
        padded.push(ids);
    }

    // raw counts of every k-gram whose last word is predicted
    let mut raw: Vec<Counts> = vec![Counts::new(); order];
    for ids in &padded {
        for end in 1..ids.len() {
            for k in 1..=order.min(end + 1) {
                *raw[k - 1].entry(ids[end + 1 - k..=end].to_vec()).or_default() += 1;
            }
        }
    }
    if let Some(k) = raw.iter().position(|c| c.is_empty()) {
        return Err(LmError::DegenerateCounts(k + 1));
    }

    // continuation counts for the lower orders
    let mut adjusted: Vec<Counts> = raw.clone();
    for k in 1..order {
        let lower = &mut adjusted[k - 1];
        for (gram, count) in lower.iter_mut() {
            if gram[0] != BOS_ID {
                *count = 0;
            }
        }
        for gram in raw[k].keys() {
            let suffix = &gram[1..];
            if suffix[0] != BOS_ID {
                *lower.get_mut(suffix).expect("suffix of a counted n-gram is counted") += 1;
            }
        }
    }

    let discounts: Vec<F> = adjusted
        .iter()
        .map(|a| F::of(cfg.fixed_discount.unwrap_or_else(|| estimate_discount(a))))
        .collect();

    let mut model = NGramModel {
        order,
        vocab,
        tables: vec![HashMap::new(); order],
        discounts: discounts.clone(),
    };

    // unigrams
    let uni = &adjusted[0];
    let total: u64 = uni.values().sum();
    let types = uni.values().filter(|&&c| c > 0).count();
    let d = discounts[0];
    let uniform = F::one() / F::of_usize(model.vocab.len() - 1);
    let (total_f, types_f) = (F::of(total as f64), F::of_usize(types));
    let interp = d * types_f / total_f;
    for w in model.vocab.predictable().collect::<Vec<_>>() {
        let a = F::of(uni.get(&vec![w]).copied().unwrap_or(0) as f64);
        let p = (a - d).max(F::zero()) / total_f + interp * uniform;
        model.tables[0].insert(
            vec![w],
            Entry {
                logprob: p.log10(),
                backoff: None,
            },
        );
    }
    model.tables[0].insert(
        vec![BOS_ID],
        Entry {
            logprob: F::of(BOS_LOGPROB),
            backoff: None,
        },
    );

    for k in 2..=order {
        let grams = &adjusted[k - 1];
        let d = discounts[k - 1];
        // per-context totals and distinct continuations, in key order
        let mut ctx_stats: BTreeMap<&[WordId], (u64, u64)> = BTreeMap::new();
        for (gram, &a) in grams {
            let e = ctx_stats.entry(&gram[..k - 1]).or_default();
            e.0 += a;
            if a > 0 {
                e.1 += 1;
            }
        }
        let mut new_entries = Vec::with_capacity(grams.len());
        for (gram, &a) in grams {
            let (s, t) = ctx_stats[&gram[..k - 1]];
            let s_f = F::of(s as f64);
            let lower = F::of(10.0).powf(model.logprob_ids(&gram[1..k - 1], gram[k - 1]));
            let p = (F::of(a as f64) - d).max(F::zero()) / s_f + d * F::of(t as f64) / s_f * lower;
            new_entries.push((gram.clone(), p.log10()));
        }
        for (ctx, (s, t)) in &ctx_stats {
            let bow = d * F::of(*t as f64) / F::of(*s as f64);
            model.tables[k - 2]
                .get_mut(*ctx)
                .expect("context is a counted n-gram")
                .backoff = Some(bow.log10());
        }
        for (gram, lp) in new_entries {
            model.tables[k - 1].insert(
                gram,
                Entry {
                    logprob: lp,
                    backoff: None,
                },
            );
        }
    }
    Ok(model)
}

impl<F: Scalar> NGramModel<F> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn discounts(&self) -> &[F] {
        &self.discounts
    }

    /// Stored k-grams (1-based `k`).
    pub fn entries(&self, k: usize) -> &HashMap<Vec<WordId>, Entry<F>> {
        &self.tables[k - 1]
    }

    /// Back-off query over word ids; the context is truncated to `order - 1` words.
    pub fn logprob_ids(&self, context: &[WordId], word: WordId) -> F {
        let word = if word == BOS_ID { UNK_ID } else { word };
        let keep = context.len().min(self.order - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut acc = F::zero();
        let mut key: Vec<WordId> = Vec::with_capacity(self.order);
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(&key) {
                return acc + e.logprob;
            }
            if ctx.is_empty() {
                return acc + self.tables[0][&vec![UNK_ID]].logprob;
            }
            if let Some(bow) = self.tables[ctx.len() - 1].get(ctx).and_then(|e| e.backoff) {
                acc += bow;
            }
            ctx = &ctx[1..];
        }
    }

    /// Log10 probability of `word` after `context`; unknown words score as `<unk>`.
    pub fn logprob<S: AsRef<str>>(&self, context: &[S], word: &str) -> F {
        let ctx: Vec<WordId> = context.iter().map(|w| self.vocab.id(w.as_ref())).collect();
        self.logprob_ids(&ctx, self.vocab.id(word))
    }

    /// Log10 probability of a whole sentence including `</s>`.
    pub fn sentence_logprob<S: AsRef<str>>(&self, sentence: &[S]) -> F {
        let mut ctx = vec![BOS_ID];
        let mut total = F::zero();
        for w in sentence {
            let id = self.vocab.id(w.as_ref());
            total += self.logprob_ids(&ctx, id);
            ctx.push(id);
        }
        total + self.logprob_ids(&ctx, EOS_ID)
    }

    /// Upper bound on the log probability of each vocabulary id in any context.
    pub fn optimistic_logprobs(&self) -> Vec<F> {
        let mut best: Vec<F> = (0..self.vocab.len() as WordId).map(|w| self.logprob_ids(&[], w)).collect();
        let mut max_bow = F::zero();
        for t in &self.tables {
            for (g, e) in t {
                let w = *g.last().expect("n-grams are non-empty") as usize;
                best[w] = best[w].max(e.logprob);
                if let Some(b) = e.backoff {
                    max_bow = max_bow.max(b);
                }
            }
        }
        let lift = max_bow * F::of_usize(self.order - 1);
        best.into_iter().map(|b| b + lift).collect()
    }

    pub fn perplexity<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> Result<F> {
        if sentences.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let tokens: usize = sentences.iter().map(|s| s.len() + 1).sum();
        let total: F = sentences.iter().map(|s| self.sentence_logprob(s)).sum();
        Ok(F::of(10.0).powf(-total / F::of_usize(tokens)))
    }

    fn sorted(&self, k: usize) -> Vec<(&Vec<WordId>, &Entry<F>)> {
        let mut v: Vec<_> = self.tables[k - 1].iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// ARPA text: `\data\` header, then `logprob<TAB>ngram[<TAB>backoff]` per order.
    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for k in 1..=self.order {
            let _ = writeln!(out, "ngram {}={}", k, self.tables[k - 1].len());
        }
        for k in 1..=self.order {
            let _ = write!(out, "\n\\{k}-grams:\n");
            for (gram, e) in self.sorted(k) {
                let words: Vec<&str> = gram.iter().map(|&id| self.vocab.word(id)).collect();
                let _ = write!(out, "{:.6}\t{}", e.logprob.as_f64(), words.join(" "));
                if let Some(b) = e.backoff {
                    let _ = write!(out, "\t{:.6}", b.as_f64());
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn from_arpa<R: BufRead>(input: R) -> Result<Self> {
        ArpaReader::default().read(input)
    }
}

#[derive(Default)]
struct ArpaReader {
    line: usize,
}

impl ArpaReader {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(LmError::MalformedArpa {
            line: self.line,
            message: message.into(),
        })
    }

    fn number<F: Scalar>(&self, s: &str) -> Result<F> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(F::of(v)),
            _ => self.err(format!("invalid number `{s}`")),
        }
    }

    fn read<F: Scalar, R: BufRead>(mut self, input: R) -> Result<NGramModel<F>> {
        #[derive(PartialEq)]
        enum State {
            Preamble,
            Header,
            Section(usize),
            Done,
        }
        let mut state = State::Preamble;
        let mut declared: Vec<usize> = Vec::new();
        let mut vocab = Vocab::default();
        let mut tables: Vec<HashMap<Vec<WordId>, Entry<F>>> = Vec::new();

        for line in input.lines() {
            let line = line?;
            self.line += 1;
            let t = line.trim();
            if state == State::Done {
                if t.is_empty() {
                    continue;
                }
                return self.err("content after \\end\\");
            }
            if t == "\\data\\" {
                if state != State::Preamble {
                    return self.err("repeated \\data\\");
                }
                state = State::Header;
                continue;
            }
            if t == "\\end\\" {
                if !matches!(state, State::Section(_)) {
                    return self.err("\\end\\ before any n-gram section");
                }
                state = State::Done;
                continue;
            }
            if let Some(k) = t
                .strip_prefix('\\')
                .and_then(|r| r.strip_suffix("-grams:"))
            {
                let k: usize = match k.parse() {
                    Ok(k) if k >= 1 && k <= declared.len() => k,
                    _ => return self.err(format!("unexpected section `{t}`")),
                };
                let expected = match state {
                    State::Header => 1,
                    State::Section(prev) => prev + 1,
                    _ => return self.err("section outside the body"),
                };
                if k != expected {
                    return self.err(format!("expected section {expected}, found {k}"));
                }
                if k > 1 && tables[k - 2].len() != declared[k - 2] {
                    return self.err(format!("order {} has fewer entries than declared", k - 1));
                }
                state = State::Section(k);
                continue;
            }
            if t.is_empty() {
                continue;
            }
            match state {
                State::Preamble => continue,
                State::Header => {
                    let Some((k, n)) = t.strip_prefix("ngram ").and_then(|r| r.split_once('=')) else {
                        return self.err(format!("expected `ngram k=n`, found `{t}`"));
                    };
                    match (k.trim().parse::<usize>(), n.trim().parse::<usize>()) {
                        (Ok(k), Ok(n)) if k == declared.len() + 1 => {
                            declared.push(n);
                            tables.push(HashMap::with_capacity(n));
                        }
                        _ => return self.err(format!("bad count line `{t}`")),
                    }
                }
                State::Section(k) => {
                    let fields: Vec<&str> = line.split('\t').collect();
                    let (lp, gram, bow) = match fields.as_slice() {
                        [lp, gram] => (lp, gram, None),
                        [lp, gram, bow] => (lp, gram, Some(bow)),
                        _ => return self.err("expected `logprob<TAB>ngram[<TAB>backoff]`"),
                    };
                    let words: Vec<&str> = gram.split(' ').filter(|w| !w.is_empty()).collect();
                    if words.len() != k {
                        return self.err(format!("expected a {k}-gram, found `{gram}`"));
                    }
                    let ids: Vec<WordId> = words.iter().map(|w| vocab.intern(w)).collect();
                    let entry = Entry {
                        logprob: self.number(lp.trim())?,
                        backoff: bow.map(|b| self.number(b.trim())).transpose()?,
                    };
                    tables[k - 1].insert(ids, entry);
                }
                State::Done => unreachable!(),
            }
        }
        if state != State::Done {
            return self.err("missing \\end\\ (truncated file)");
        }
        if let Some(k) = (0..declared.len()).find(|&k| tables[k].len() != declared[k]) {
            return self.err(format!("order {} has {} entries, {} declared", k + 1, tables[k].len(), declared[k]));
        }
        if declared.is_empty() {
            return self.err("no n-gram orders declared");
        }
        tables[0].entry(vec![UNK_ID]).or_insert(Entry {
            logprob: F::of(BOS_LOGPROB),
            backoff: None,
        });
        tables[0].entry(vec![EOS_ID]).or_insert(Entry {
            logprob: F::of(BOS_LOGPROB),
            backoff: None,
        });
        // words interned only in higher orders still need a unigram for the back-off floor
        for id in 0..vocab.len() as WordId {
            tables[0].entry(vec![id]).or_insert(Entry {
                logprob: F::of(BOS_LOGPROB),
                backoff: None,
            });
        }
        Ok(NGramModel {
            order: declared.len(),
            vocab,
            tables,
            discounts: Vec::new(),
        })
    }
}
