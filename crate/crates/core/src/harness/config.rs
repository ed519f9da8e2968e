//! Flat `key = value` experiment configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::align::SymmetrizationHeuristic;
use crate::corpus::{CleaningConfig, LengthUnit};
use crate::decoder::DecoderParams;
use crate::eval::Metric;
use crate::morpho::VariantKind;

use super::{HarnessError, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingVariant {
    Original,
    Cleaned,
    Morpho(VariantKind),
}

impl TrainingVariant {
    pub fn is_cleaned(self) -> bool {
        self != TrainingVariant::Original
    }
}

impl FromStr for TrainingVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(TrainingVariant::Original),
            "cleaned" => Ok(TrainingVariant::Cleaned),
            other => other
                .parse::<VariantKind>()
                .map(TrainingVariant::Morpho)
                .map_err(|_| format!("unknown training variant `{s}`")),
        }
    }
}

impl fmt::Display for TrainingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainingVariant::Original => f.write_str("original"),
            TrainingVariant::Cleaned => f.write_str("cleaned"),
            TrainingVariant::Morpho(k) => write!(f, "{}", k.to_string().to_uppercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LmSource {
    /// Target side of the training split.
    TrainTarget,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub training: TrainingVariant,
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    /// Tagger XML for the source side, one sentence per line of `train_src`.
    pub annotations: Option<PathBuf>,
    /// Concatenated in order; empty disables the language model.
    pub lm_sources: Vec<LmSource>,
    pub lm_order: usize,
    pub tuning: usize,
    pub test: usize,
    pub seed: u64,
    pub cleaning: CleaningConfig,
    pub align_iterations: usize,
    pub heuristic: SymmetrizationHeuristic,
    pub max_phrase_len: usize,
    pub decoder: DecoderParams,
    pub tune_rounds: usize,
    pub tune_nbest: usize,
    pub init_weights: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub lm_label: Option<String>,
    pub tuning_label: Option<String>,
    pub test_label: Option<String>,
    pub out_dir: PathBuf,
}

pub const KEYS: &[&str] = &[
    "id",
    "direction",
    "training",
    "train.src",
    "train.tgt",
    "train.annotations",
    "lm",
    "lm.order",
    "tuning",
    "test",
    "seed",
    "cleaning.max_len",
    "cleaning.len_unit",
    "cleaning.strip_markup",
    "cleaning.drop_repetitions",
    "cleaning.drop_nonlanguage_symbols",
    "align.iterations",
    "align.heuristic",
    "phrase.max_len",
    "decoder.beam_size",
    "decoder.distortion_limit",
    "decoder.max_options",
    "tune.rounds",
    "tune.nbest",
    "tune.weights",
    "metrics",
    "label.lm",
    "label.tuning",
    "label.test",
    "out_dir",
];

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a number, got `{v}`"))
}

/// `none`, `unlimited` and `inf` map to `None`.
fn parse_limit(v: &str) -> Result<Option<usize>, String> {
    match v {
        "none" | "unlimited" | "inf" => Ok(None),
        _ => parse_num(v).map(Some),
    }
}

impl ExperimentConfig {
    /// Defaults for everything except the identifier and the training files.
    pub fn new(id: &str, train_src: impl Into<PathBuf>, train_tgt: impl Into<PathBuf>) -> Self {
        Self {
            id: id.to_string(),
            src_lang: "pl".into(),
            tgt_lang: "en".into(),
            training: TrainingVariant::Cleaned,
            train_src: train_src.into(),
            train_tgt: train_tgt.into(),
            annotations: None,
            lm_sources: vec![LmSource::TrainTarget],
            lm_order: 3,
            tuning: 50,
            test: 100,
            seed: 1,
            cleaning: CleaningConfig::default(),
            align_iterations: 5,
            heuristic: SymmetrizationHeuristic::GrowDiagFinalAnd,
            max_phrase_len: 7,
            decoder: DecoderParams::default(),
            tune_rounds: 3,
            tune_nbest: 20,
            init_weights: None,
            metrics: Metric::ALL.to_vec(),
            lm_label: None,
            tuning_label: None,
            test_label: None,
            out_dir: PathBuf::from("runs"),
        }
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut seen = BTreeSet::new();
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Config { line: n + 1, message };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(format!("unknown key `{k}`")));
            }
            if !seen.insert(k.to_string()) {
                return Err(err(format!("duplicate key `{k}`")));
            }
            pairs.push((n + 1, k, v));
        }
        let get = |key: &str| pairs.iter().find(|p| p.1 == key).map(|p| p.2);
        let required = |key: &'static str| get(key).ok_or(HarnessError::MissingKey(key));
        let path = |v: &str| base.join(v);

        let mut cfg = ExperimentConfig::new(required("id")?, path(required("train.src")?), path(required("train.tgt")?));
        for &(line, k, v) in &pairs {
            let err = |message: String| HarnessError::Config { line, message };
            match k {
                "direction" => {
                    let (s, t) = v.split_once('-').ok_or_else(|| err(format!("expected src-tgt, got `{v}`")))?;
                    cfg.src_lang = s.trim().to_string();
                    cfg.tgt_lang = t.trim().to_string();
                }
                "training" => cfg.training = v.parse().map_err(err)?,
                "train.annotations" => cfg.annotations = Some(path(v)),
                "lm" => {
                    cfg.lm_sources = if v == "none" {
                        Vec::new()
                    } else {
                        v.split(',')
                            .map(str::trim)
                            .map(|p| if p == "train" { LmSource::TrainTarget } else { LmSource::File(path(p)) })
                            .collect()
                    }
                }
                "lm.order" => cfg.lm_order = parse_num(v).map_err(err)?,
                "tuning" => cfg.tuning = parse_num(v).map_err(err)?,
                "test" => cfg.test = parse_num(v).map_err(err)?,
                "seed" => cfg.seed = parse_num(v).map_err(err)?,
                "cleaning.max_len" => cfg.cleaning.max_len = parse_num(v).map_err(err)?,
                "cleaning.len_unit" => {
                    cfg.cleaning.len_unit = v.parse::<LengthUnit>().map_err(|e| err(e.to_string()))?
                }
                "cleaning.strip_markup" => cfg.cleaning.strip_markup = parse_bool(v).map_err(err)?,
                "cleaning.drop_repetitions" => cfg.cleaning.drop_repetitions = parse_bool(v).map_err(err)?,
                "cleaning.drop_nonlanguage_symbols" => {
                    cfg.cleaning.drop_nonlanguage_symbols = parse_bool(v).map_err(err)?
                }
                "align.iterations" => cfg.align_iterations = parse_num(v).map_err(err)?,
                "align.heuristic" => cfg.heuristic = v.parse().map_err(|e: crate::align::AlignError| err(e.to_string()))?,
                "phrase.max_len" => cfg.max_phrase_len = parse_num(v).map_err(err)?,
                "decoder.beam_size" => cfg.decoder.beam_size = parse_limit(v).map_err(err)?.unwrap_or(usize::MAX),
                "decoder.distortion_limit" => cfg.decoder.distortion_limit = parse_limit(v).map_err(err)?,
                "decoder.max_options" => cfg.decoder.max_options = parse_num(v).map_err(err)?,
                "tune.rounds" => cfg.tune_rounds = parse_num(v).map_err(err)?,
                "tune.nbest" => cfg.tune_nbest = parse_num(v).map_err(err)?,
                "tune.weights" => cfg.init_weights = Some(path(v)),
                "metrics" => cfg.metrics = Metric::parse_list(v).map_err(|e| err(e.to_string()))?,
                "label.lm" => cfg.lm_label = Some(v.to_string()),
                "label.tuning" => cfg.tuning_label = Some(v.to_string()),
                "label.test" => cfg.test_label = Some(v.to_string()),
                "out_dir" => cfg.out_dir = path(v),
                _ => {}
            }
        }
        cfg.check_values()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|_| HarnessError::MissingPath {
            stage: Stage::Config,
            path: path.to_path_buf(),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn check_values(&self) -> Result<(), HarnessError> {
        let bad = |message: &str| Err(HarnessError::Invalid(format!("{}: {message}", self.id)));
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return bad("id must be a non-empty file name");
        }
        if self.lm_order == 0 || self.max_phrase_len == 0 || self.decoder.beam_size == 0 {
            return bad("lm.order, phrase.max_len and decoder.beam_size must be positive");
        }
        if self.tuning == 0 || self.test == 0 {
            return bad("tuning and test sets must be non-empty");
        }
        if matches!(self.training, TrainingVariant::Morpho(_)) && self.annotations.is_none() {
            return bad("morphological variants need train.annotations");
        }
        Ok(())
    }

    /// Every input file, tagged with the stage that reads it; fails on the first missing one.
    pub fn check_paths(&self) -> Result<(), HarnessError> {
        let mut inputs = vec![(Stage::Tokenize, &self.train_src), (Stage::Tokenize, &self.train_tgt)];
        if let Some(a) = &self.annotations {
            inputs.push((Stage::Morpho, a));
        }
        for s in &self.lm_sources {
            if let LmSource::File(p) = s {
                inputs.push((Stage::Lm, p));
            }
        }
        if let Some(w) = &self.init_weights {
            inputs.push((Stage::Tune, w));
        }
        for (stage, p) in inputs {
            if !p.is_file() {
                return Err(HarnessError::MissingPath { stage, path: p.clone() });
            }
        }
        Ok(())
    }

    pub fn lm_label(&self) -> String {
        if let Some(l) = &self.lm_label {
            return l.clone();
        }
        if self.lm_sources.is_empty() {
            return "none".into();
        }
        self.lm_sources
            .iter()
            .map(|s| match s {
                LmSource::TrainTarget => "train".to_string(),
                LmSource::File(p) => p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()),
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn tuning_label(&self) -> String {
        self.tuning_label.clone().unwrap_or_else(|| format!("dev{}", self.tuning))
    }

    pub fn test_label(&self) -> String {
        self.test_label.clone().unwrap_or_else(|| format!("test{}", self.test))
    }

    /// Word-for-word system on the same data and split: single-word phrases, no language model.
    pub fn word_for_word(&self) -> Self {
        let mut b = self.clone();
        b.id = format!("{}-wfw", self.id);
        b.max_phrase_len = 1;
        b.lm_sources.clear();
        b.lm_label = None;
        b
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.id)
    }
}
