//! Parallel corpus loading, tokenization, cleaning and splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line count mismatch: source has {0} lines, target has {1}")]
    LineCountMismatch(usize, usize),
    #[error("{path}: invalid UTF-8 on line {line}")]
    EncodingError { path: PathBuf, line: usize },
    #[error("requested {requested} held-out pairs from a corpus of {available}")]
    InsufficientData { requested: usize, available: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown length unit `{0}`")]
    UnknownLengthUnit(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentencePair {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    /// 1-based line number in the input files.
    pub origin_line: usize,
}

impl SentencePair {
    pub fn new(src: Vec<String>, tgt: Vec<String>, origin_line: usize) -> Self {
        Self {
            src,
            tgt,
            origin_line,
        }
    }

    /// Builds a pair by tokenizing both sides.
    pub fn from_text(src: &str, tgt: &str, origin_line: usize) -> Self {
        Self::new(tokenize(src), tokenize(tgt), origin_line)
    }

    fn same_text(&self, other: &SentencePair) -> bool {
        self.src == other.src && self.tgt == other.tgt
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub src_lang: String,
    pub tgt_lang: String,
}

impl ParallelCorpus {
    pub fn new(src_lang: impl Into<String>, tgt_lang: impl Into<String>) -> Self {
        Self {
            pairs: Vec::new(),
            src_lang: src_lang.into(),
            tgt_lang: tgt_lang.into(),
        }
    }

    /// Tokenizes parallel lines; `origin_line` is the 1-based index.
    pub fn from_lines<S: AsRef<str>, T: AsRef<str>>(
        src_lang: &str,
        tgt_lang: &str,
        lines: impl IntoIterator<Item = (S, T)>,
    ) -> Self {
        let pairs = lines
            .into_iter()
            .enumerate()
            .map(|(i, (s, t))| SentencePair::from_text(s.as_ref(), t.as_ref(), i + 1))
            .collect();
        Self {
            pairs,
            src_lang: src_lang.to_string(),
            tgt_lang: tgt_lang.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn with_pairs(&self, pairs: Vec<SentencePair>) -> Self {
        Self {
            pairs,
            src_lang: self.src_lang.clone(),
            tgt_lang: self.tgt_lang.clone(),
        }
    }

    /// Swaps the source and target sides.
    pub fn reversed(&self) -> Self {
        Self {
            pairs: self
                .pairs
                .iter()
                .map(|p| SentencePair::new(p.tgt.clone(), p.src.clone(), p.origin_line))
                .collect(),
            src_lang: self.tgt_lang.clone(),
            tgt_lang: self.src_lang.clone(),
        }
    }

    pub fn src_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.pairs.iter().map(|p| p.src.join(" "))
    }

    pub fn tgt_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.pairs.iter().map(|p| p.tgt.join(" "))
    }

    /// Writes `<prefix>.<src_lang>` and `<prefix>.<tgt_lang>`, tokens joined by single spaces.
    pub fn write(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        let src_path = with_suffix(prefix, &self.src_lang);
        let tgt_path = with_suffix(prefix, &self.tgt_lang);
        write_lines(&src_path, self.src_lines())?;
        write_lines(&tgt_path, self.tgt_lines())?;
        Ok((src_path, tgt_path))
    }
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes one line per item, each terminated by LF.
pub fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out = Vec::new();
    for line in lines {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Reads a UTF-8 file as LF-separated lines. A trailing newline does not open a new line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(&bytes);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            String::from_utf8(raw.to_vec()).map_err(|_| CorpusError::EncodingError {
                path: path.to_path_buf(),
                line: i + 1,
            })
        })
        .collect()
}

fn lang_of(path: &Path, fallback: &str) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_string)
        .unwrap_or_else(|| fallback.to_string())
}

/// Joins line `i` of the source file with line `i` of the target file.
///
/// Language codes are taken from the file extensions (`train.pl` gives `pl`).
pub fn load_parallel(src_path: &Path, tgt_path: &Path) -> Result<ParallelCorpus> {
    let src = read_lines(src_path)?;
    let tgt = read_lines(tgt_path)?;
    if src.len() != tgt.len() {
        return Err(CorpusError::LineCountMismatch(src.len(), tgt.len()));
    }
    Ok(ParallelCorpus::from_lines(
        &lang_of(src_path, "src"),
        &lang_of(tgt_path, "tgt"),
        src.iter().zip(tgt.iter()),
    ))
}

const DETACHED_PUNCT: [char; 6] = ['.', ',', '!', '?', ';', ':'];

/// Whitespace tokenization with sentence and clause punctuation split off.
///
/// Hyphens and apostrophes stay inside their words.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in line.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if DETACHED_PUNCT.contains(&c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthUnit {
    Characters,
    Tokens,
}

impl FromStr for LengthUnit {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chars" | "characters" => Ok(LengthUnit::Characters),
            "tokens" => Ok(LengthUnit::Tokens),
            other => Err(CorpusError::UnknownLengthUnit(other.to_string())),
        }
    }
}

impl fmt::Display for LengthUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LengthUnit::Characters => "chars",
            LengthUnit::Tokens => "tokens",
        })
    }
}

/// Characters kept by the non-language symbol filter.
///
/// Latin letters (including Polish diacritics), digits and ASCII punctuation
/// are always allowed; `extra` adds language-specific characters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    pub extra: String,
}

impl Alphabet {
    pub fn allows(&self, c: char) -> bool {
        is_latin_letter(c) || c.is_ascii_digit() || c.is_ascii_punctuation() || self.extra.contains(c)
    }
}

fn is_latin_letter(c: char) -> bool {
    if !c.is_alphabetic() {
        return false;
    }
    matches!(c as u32,
        0x0041..=0x005A | 0x0061..=0x007A | 0x00C0..=0x00D6 | 0x00D8..=0x00F6
        | 0x00F8..=0x024F | 0x1E00..=0x1EFF)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleaningConfig {
    pub max_len: usize,
    pub len_unit: LengthUnit,
    pub strip_markup: bool,
    pub drop_repetitions: bool,
    pub drop_nonlanguage_symbols: bool,
    pub lowercase: bool,
    /// Per-language alphabets; languages without an entry use the default Latin set.
    pub alphabets: BTreeMap<String, Alphabet>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            max_len: 80,
            len_unit: LengthUnit::Characters,
            strip_markup: true,
            drop_repetitions: true,
            drop_nonlanguage_symbols: true,
            lowercase: false,
            alphabets: BTreeMap::new(),
        }
    }
}

impl CleaningConfig {
    /// A configuration that only lowercases.
    pub fn lowercase_only() -> Self {
        Self {
            max_len: usize::MAX,
            len_unit: LengthUnit::Tokens,
            strip_markup: false,
            drop_repetitions: false,
            drop_nonlanguage_symbols: false,
            lowercase: true,
            alphabets: BTreeMap::new(),
        }
    }

    fn alphabet(&self, lang: &str) -> Alphabet {
        self.alphabets.get(lang).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    TooLong,
    Empty,
    DuplicatePair,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::TooLong => "TooLong",
            DropReason::Empty => "Empty",
            DropReason::DuplicatePair => "DuplicatePair",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Src,
    Tgt,
    Both,
}

impl Side {
    fn from_flags(src: bool, tgt: bool) -> Option<Side> {
        match (src, tgt) {
            (true, true) => Some(Side::Both),
            (true, false) => Some(Side::Src),
            (false, true) => Some(Side::Tgt),
            (false, false) => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Src => "src",
            Side::Tgt => "tgt",
            Side::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropRecord {
    pub line: usize,
    pub reason: DropReason,
    pub side: Side,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleaningLog {
    pub records: Vec<DropRecord>,
}

impl CleaningLog {
    /// One `LINE<TAB>REASON<TAB>SIDE` record per line.
    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|r| format!("{}\t{}\t{}\n", r.line, r.reason, r.side))
            .collect()
    }
}

fn strip_tags(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let mut out = String::with_capacity(current.len());
        let mut rest = current.as_str();
        while let Some(open) = rest.find('<') {
            match rest[open + 1..].find(['<', '>']) {
                Some(k) if rest.as_bytes()[open + 1 + k] == b'>' => {
                    out.push_str(&rest[..open]);
                    out.push(' ');
                    rest = &rest[open + k + 2..];
                }
                Some(k) => {
                    // a nested '<' starts the next candidate tag
                    out.push_str(&rest[..open + 1 + k]);
                    rest = &rest[open + 1 + k..];
                }
                None => break,
            }
        }
        out.push_str(rest);
        if out == current {
            return out;
        }
        current = out;
    }
}

fn collapse_runs(tokens: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i + 1;
        while j < tokens.len() && tokens[j] == tokens[i] {
            j += 1;
        }
        let run = j - i;
        let keep = if run >= 3 { 1 } else { run };
        out.extend(tokens[i..i + keep].iter().cloned());
        i = j;
    }
    out
}

fn clean_side(tokens: &[String], cfg: &CleaningConfig, alphabet: &Alphabet) -> Vec<String> {
    let mut toks: Vec<String> = tokens.to_vec();
    if cfg.strip_markup && toks.iter().any(|t| t.contains('<')) {
        toks = tokenize(&strip_tags(&toks.join(" ")));
    }
    if cfg.lowercase {
        toks = toks.into_iter().map(|t| t.to_lowercase()).collect();
    }
    if cfg.drop_nonlanguage_symbols {
        toks = toks
            .into_iter()
            .map(|t| t.chars().filter(|&c| alphabet.allows(c)).collect::<String>())
            .filter(|t| !t.is_empty())
            .collect();
    }
    if cfg.drop_repetitions {
        toks = collapse_runs(toks);
    }
    toks
}

fn side_len(tokens: &[String], unit: LengthUnit) -> usize {
    match unit {
        LengthUnit::Tokens => tokens.len(),
        LengthUnit::Characters => {
            let chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
            chars + tokens.len().saturating_sub(1)
        }
    }
}

/// Applies the cleaning rules and returns the surviving pairs in input order.
pub fn clean(corpus: &ParallelCorpus, cfg: &CleaningConfig) -> (ParallelCorpus, CleaningLog) {
    let src_alpha = cfg.alphabet(&corpus.src_lang);
    let tgt_alpha = cfg.alphabet(&corpus.tgt_lang);
    let mut log = CleaningLog::default();
    let mut kept: Vec<SentencePair> = Vec::with_capacity(corpus.len());

    for pair in &corpus.pairs {
        let cleaned = SentencePair::new(
            clean_side(&pair.src, cfg, &src_alpha),
            clean_side(&pair.tgt, cfg, &tgt_alpha),
            pair.origin_line,
        );
        let mut drop = |reason, side| {
            log.records.push(DropRecord {
                line: pair.origin_line,
                reason,
                side,
            })
        };
        if let Some(side) = Side::from_flags(cleaned.src.is_empty(), cleaned.tgt.is_empty()) {
            drop(DropReason::Empty, side);
            continue;
        }
        let too_long = Side::from_flags(
            side_len(&cleaned.src, cfg.len_unit) > cfg.max_len,
            side_len(&cleaned.tgt, cfg.len_unit) > cfg.max_len,
        );
        if let Some(side) = too_long {
            drop(DropReason::TooLong, side);
            continue;
        }
        if cfg.drop_repetitions && kept.last().is_some_and(|prev| prev.same_text(&cleaned)) {
            drop(DropReason::DuplicatePair, Side::Both);
            continue;
        }
        kept.push(cleaned);
    }
    (corpus.with_pairs(kept), log)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VocabStats {
    pub src_unique: usize,
    pub tgt_unique: usize,
    pub src_total: usize,
    pub tgt_total: usize,
    pub line_count: usize,
}

pub fn vocab_stats(corpus: &ParallelCorpus) -> VocabStats {
    let mut src: HashSet<&str> = HashSet::new();
    let mut tgt: HashSet<&str> = HashSet::new();
    let mut stats = VocabStats {
        line_count: corpus.len(),
        ..VocabStats::default()
    };
    for pair in &corpus.pairs {
        stats.src_total += pair.src.len();
        stats.tgt_total += pair.tgt.len();
        src.extend(pair.src.iter().map(String::as_str));
        tgt.extend(pair.tgt.iter().map(String::as_str));
    }
    stats.src_unique = src.len();
    stats.tgt_unique = tgt.len();
    stats
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: ParallelCorpus,
    pub dev: ParallelCorpus,
    pub test: ParallelCorpus,
    /// Training pairs removed because they also occur in dev or test.
    pub overlap_removed: usize,
}

/// Random dev/test selection; train loses every pair that also occurs in dev or test.
pub fn split_random(corpus: &ParallelCorpus, dev_n: usize, test_n: usize, seed: u64) -> Result<Split> {
    let requested = dev_n + test_n;
    if requested >= corpus.len() {
        return Err(CorpusError::InsufficientData {
            requested,
            available: corpus.len(),
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut dev_idx = order[..dev_n].to_vec();
    let mut test_idx = order[dev_n..requested].to_vec();
    dev_idx.sort_unstable();
    test_idx.sort_unstable();
    let mut held_out = vec![false; corpus.len()];
    for &i in dev_idx.iter().chain(&test_idx) {
        held_out[i] = true;
    }

    let pick = |idx: &[usize]| -> Vec<SentencePair> { idx.iter().map(|&i| corpus.pairs[i].clone()).collect() };
    let dev = pick(&dev_idx);
    let test = pick(&test_idx);

    let held_text: HashSet<(&[String], &[String])> = dev
        .iter()
        .chain(&test)
        .map(|p| (p.src.as_slice(), p.tgt.as_slice()))
        .collect();
    let mut overlap_removed = 0;
    let mut train = Vec::with_capacity(corpus.len() - requested);
    for (i, pair) in corpus.pairs.iter().enumerate() {
        if held_out[i] {
            continue;
        }
        if held_text.contains(&(pair.src.as_slice(), pair.tgt.as_slice())) {
            overlap_removed += 1;
            continue;
        }
        train.push(pair.clone());
    }

    Ok(Split {
        train: corpus.with_pairs(train),
        dev: corpus.with_pairs(dev),
        test: corpus.with_pairs(test),
        overlap_removed,
    })
}

/// Writes the cleaned corpus and its log next to `out_prefix`.
pub fn write_cleaned(corpus: &ParallelCorpus, log: &CleaningLog, out_prefix: &Path) -> Result<()> {
    corpus.write(out_prefix)?;
    let log_path = with_suffix(out_prefix, "log");
    let mut f = fs::File::create(&log_path).map_err(io_err(&log_path))?;
    f.write_all(log.to_text().as_bytes()).map_err(io_err(&log_path))
}
