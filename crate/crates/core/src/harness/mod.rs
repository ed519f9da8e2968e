//! Experiment runner: clean, split, train, tune, decode and score from one config.

pub mod config;
pub mod report;
pub mod toy;
pub mod tune;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::align::{align_corpus, Ibm1Config};
use crate::corpus::{self, clean, load_parallel, split_random, CleaningConfig, ParallelCorpus, SentencePair};
use crate::decoder::{Decoder, FeatureWeights, Models};
use crate::eval::{score_corpus, MeteorConfig, Metric};
use crate::lm::{train_kn, TrainConfig};
use crate::morpho::{parse_annotations, variant_tokens, VariantOptions};
use crate::phrase::{train_phrase_model, PhraseConfig};

pub use config::{ExperimentConfig, LmSource, TrainingVariant};
pub use report::{parse_tsv, render_report, ReportRow};
pub use tune::{tune_weights, TuneConfig, TuneOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Config,
    Tokenize,
    Clean,
    Lowercase,
    Split,
    FinalClean,
    Morpho,
    Lm,
    Align,
    Symmetrize,
    Phrases,
    Tune,
    Decode,
    Evaluate,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 14] = [
        Stage::Tokenize,
        Stage::Clean,
        Stage::Lowercase,
        Stage::Split,
        Stage::FinalClean,
        Stage::Morpho,
        Stage::Lm,
        Stage::Align,
        Stage::Symmetrize,
        Stage::Phrases,
        Stage::Tune,
        Stage::Decode,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Tokenize => "tokenize",
            Stage::Clean => "clean",
            Stage::Lowercase => "lowercase",
            Stage::Split => "split",
            Stage::FinalClean => "final-clean",
            Stage::Morpho => "morpho",
            Stage::Lm => "lm",
            Stage::Align => "align",
            Stage::Symmetrize => "symmetrize",
            Stage::Phrases => "phrases",
            Stage::Tune => "tune",
            Stage::Decode => "decode",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config: missing key `{0}`")]
    MissingKey(&'static str),
    #[error("config: {0}")]
    Invalid(String),
    #[error("[{stage}] no such file: {}", path.display())]
    MissingPath { stage: Stage, path: PathBuf },
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: BoxError,
    },
    #[error("tuning set is empty")]
    EmptyDev,
    #[error("no report rows")]
    EmptyReport,
    #[error("report line {line}: {message}")]
    BadReport { line: usize, message: String },
}

impl HarnessError {
    /// 2 for configuration problems, 3 for failures while running a stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. }
            | HarnessError::MissingKey(_)
            | HarnessError::Invalid(_)
            | HarnessError::MissingPath { .. } => 2,
            _ => 3,
        }
    }
}

fn stage_err<E: Into<BoxError>>(stage: Stage) -> impl FnOnce(E) -> HarnessError {
    move |e| HarnessError::Stage {
        stage,
        source: e.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: Stage,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub row: ReportRow,
    pub stages: Vec<StageRecord>,
    pub dir: PathBuf,
    pub weights: FeatureWeights,
}

struct Run {
    dir: PathBuf,
    stages: Vec<StageRecord>,
}

impl Run {
    fn log(&mut self, stage: Stage, detail: impl Into<String>) {
        self.stages.push(StageRecord {
            stage,
            detail: detail.into(),
        });
    }

    fn write(&self, stage: Stage, name: &str, content: &str) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| HarnessError::Stage {
            stage,
            source: format!("{}: {e}", path.display()).into(),
        })
    }

    fn write_corpus(&self, stage: Stage, name: &str, c: &ParallelCorpus) -> Result<(), HarnessError> {
        c.write(&self.dir.join(name)).map(|_| ()).map_err(stage_err(stage))
    }
}

fn lines(tokens: impl IntoIterator<Item = Vec<String>>) -> String {
    tokens.into_iter().map(|t| t.join(" ") + "\n").collect()
}

fn without_lowercase(cfg: &CleaningConfig) -> CleaningConfig {
    CleaningConfig {
        lowercase: false,
        ..cfg.clone()
    }
}

fn substitute_source(c: &ParallelCorpus, variant: &[Vec<String>]) -> ParallelCorpus {
    let mut out = c.clone();
    for p in &mut out.pairs {
        p.src = variant[p.origin_line - 1].clone();
    }
    out
}

/// Runs every stage and writes all artifacts under `cfg.run_dir()`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.check_paths()?;
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir).map_err(stage_err(Stage::Config))?;
    let mut run = Run { dir, stages: Vec::new() };

    let mut corpus = load_parallel(&cfg.train_src, &cfg.train_tgt).map_err(stage_err(Stage::Tokenize))?;
    corpus.src_lang = cfg.src_lang.clone();
    corpus.tgt_lang = cfg.tgt_lang.clone();
    let raw_lines = corpus.len();
    run.log(Stage::Tokenize, format!("{raw_lines} pairs"));

    let cleaning = without_lowercase(&cfg.cleaning);
    let mut clean_log = String::new();
    if cfg.training.is_cleaned() {
        let (c, log) = clean(&corpus, &cleaning);
        run.log(Stage::Clean, format!("{} pairs kept, {} dropped", c.len(), corpus.len() - c.len()));
        clean_log.push_str(&log.to_text());
        corpus = c;
    } else {
        run.log(Stage::Clean, "skipped");
    }

    corpus = clean(&corpus, &CleaningConfig::lowercase_only()).0;
    run.log(Stage::Lowercase, format!("{} pairs", corpus.len()));

    let split = split_random(&corpus, cfg.tuning, cfg.test, cfg.seed).map_err(stage_err(Stage::Split))?;
    run.log(
        Stage::Split,
        format!(
            "train {} dev {} test {} overlap removed {}",
            split.train.len(),
            split.dev.len(),
            split.test.len(),
            split.overlap_removed
        ),
    );
    let (mut train, mut dev, mut test) = (split.train, split.dev, split.test);

    if cfg.training.is_cleaned() {
        let (c, log) = clean(&train, &cleaning);
        run.log(Stage::FinalClean, format!("{} training pairs kept", c.len()));
        clean_log.push_str(&log.to_text());
        train = c;
    } else {
        run.log(Stage::FinalClean, "skipped");
    }
    run.write(Stage::FinalClean, "clean.log", &clean_log)?;

    if let TrainingVariant::Morpho(kind) = cfg.training {
        let path = cfg.annotations.as_ref().expect("checked with the config");
        let file = fs::File::open(path).map_err(stage_err(Stage::Morpho))?;
        let sentences = parse_annotations(std::io::BufReader::new(file)).map_err(stage_err(Stage::Morpho))?;
        if sentences.len() != raw_lines {
            return Err(stage_err(Stage::Morpho)(format!(
                "{} annotated sentences for {raw_lines} source lines",
                sentences.len()
            )));
        }
        let variant: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| {
                variant_tokens(s, kind, VariantOptions::default())
                    .into_iter()
                    .map(|t| t.to_lowercase())
                    .collect()
            })
            .collect();
        train = substitute_source(&train, &variant);
        dev = substitute_source(&dev, &variant);
        test = substitute_source(&test, &variant);
        run.log(Stage::Morpho, format!("{kind} source side"));
    } else {
        run.log(Stage::Morpho, "skipped");
    }
    run.write_corpus(Stage::Split, "train", &train)?;
    run.write_corpus(Stage::Split, "dev", &dev)?;
    run.write_corpus(Stage::Split, "test", &test)?;

    let lm = if cfg.lm_sources.is_empty() {
        run.log(Stage::Lm, "none");
        None
    } else {
        let mut sentences: Vec<Vec<String>> = Vec::new();
        for src in &cfg.lm_sources {
            match src {
                LmSource::TrainTarget => sentences.extend(train.pairs.iter().map(|p| p.tgt.clone())),
                LmSource::File(path) => {
                    let text = corpus::read_lines(path).map_err(stage_err(Stage::Lm))?;
                    sentences.extend(text.iter().map(|l| corpus::tokenize(&l.to_lowercase())));
                }
            }
        }
        let model = train_kn::<f64, _>(&sentences, &TrainConfig::with_order(cfg.lm_order)).map_err(stage_err(Stage::Lm))?;
        run.write(Stage::Lm, "lm.arpa", &model.to_arpa())?;
        run.log(Stage::Lm, format!("order {} on {} sentences", cfg.lm_order, sentences.len()));
        Some(model)
    };

    let ibm = Ibm1Config {
        iterations: cfg.align_iterations,
        use_null: true,
    };
    let aligned = align_corpus::<f64>(&train, &ibm, cfg.heuristic).map_err(stage_err(Stage::Align))?;
    let pharaoh = |ms: &[crate::align::AlignmentMatrix]| -> String { ms.iter().map(|m| m.to_pharaoh() + "\n").collect() };
    run.write(Stage::Align, "align.fwd", &pharaoh(&aligned.forward))?;
    run.write(Stage::Align, "align.bwd", &pharaoh(&aligned.backward))?;
    run.log(Stage::Align, format!("ibm1 {} iterations both directions", cfg.align_iterations));
    run.write(Stage::Symmetrize, "align.sym", &pharaoh(&aligned.symmetrized))?;
    let links: usize = aligned.symmetrized.iter().map(|m| m.len()).sum();
    run.log(Stage::Symmetrize, format!("{} {links} links", cfg.heuristic));

    let (phrases, reordering) = train_phrase_model(
        &train,
        &aligned.symmetrized,
        &PhraseConfig {
            max_len: cfg.max_phrase_len,
        },
    )
    .map_err(stage_err(Stage::Phrases))?;
    run.write(Stage::Phrases, "phrase-table", &phrases.to_text())?;
    run.write(Stage::Phrases, "reordering-table", &reordering.to_text())?;
    run.log(Stage::Phrases, format!("{} phrase pairs", phrases.len()));

    let models = Models {
        phrases: &phrases,
        reordering: &reordering,
        lm: lm.as_ref(),
    };
    let init = match &cfg.init_weights {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(stage_err(Stage::Tune))?;
            FeatureWeights::from_cfg(&text).map_err(stage_err(Stage::Tune))?
        }
        None => FeatureWeights::default(),
    };
    let tuned = tune_weights(
        &dev,
        models,
        init,
        &TuneConfig {
            rounds: cfg.tune_rounds,
            nbest: cfg.tune_nbest,
            seed: cfg.seed,
            params: cfg.decoder,
        },
    )
    .map_err(stage_err(Stage::Tune))?;
    run.write(Stage::Tune, "weights.cfg", &tuned.weights.to_cfg())?;
    let history: Vec<String> = tuned.history.iter().map(|b| format!("{b:.4}")).collect();
    run.log(Stage::Tune, format!("dev bleu {}", history.join(" ")));

    let decoder = Decoder::new(models, tuned.weights);
    let hyps: Vec<Vec<String>> = test
        .pairs
        .par_iter()
        .map(|p| decoder.decode(&p.src, &cfg.decoder).translation())
        .collect();
    run.write(Stage::Decode, "test.hyp", &lines(hyps.iter().cloned()))?;
    run.log(Stage::Decode, format!("{} sentences", hyps.len()));

    let refs: Vec<Vec<Vec<String>>> = test.pairs.iter().map(|p: &SentencePair| vec![p.tgt.clone()]).collect();
    let meteor_cfg = MeteorConfig::default();
    let mut row = ReportRow {
        id: cfg.id.clone(),
        training: cfg.training.to_string(),
        lm: cfg.lm_label(),
        tuning: cfg.tuning_label(),
        test: cfg.test_label(),
        bleu: None,
        nist: None,
        meteor: None,
        ter: None,
    };
    let mut jsonl = String::new();
    for &m in &cfg.metrics {
        let s = score_corpus(m, &hyps, &refs, &meteor_cfg).map_err(stage_err(Stage::Evaluate))?;
        jsonl.push_str(&s.to_json_line());
        jsonl.push('\n');
        let slot = match m {
            Metric::Bleu => &mut row.bleu,
            Metric::Nist => &mut row.nist,
            Metric::Meteor => &mut row.meteor,
            Metric::Ter => &mut row.ter,
        };
        *slot = Some(s.score);
    }
    run.write(Stage::Evaluate, "scores.jsonl", &jsonl)?;
    run.log(Stage::Evaluate, cfg.metrics.iter().map(|m| m.name()).collect::<Vec<_>>().join(","));

    let (text, tsv) = render_report(std::slice::from_ref(&row))?;
    run.write(Stage::Report, "report.txt", &text)?;
    run.write(Stage::Report, "report", &tsv)?;
    run.log(Stage::Report, "report");

    let stage_text: String = run
        .stages
        .iter()
        .map(|r| format!("{}\t{}\n", r.stage, r.detail))
        .collect();
    run.write(Stage::Report, "stages.log", &stage_text)?;
    Ok(RunOutput {
        row,
        stages: run.stages,
        dir: run.dir,
        weights: tuned.weights,
    })
}

/// Loads every `*.cfg` in `dir` (sorted by name); identifiers must be unique.
pub fn load_batch(dir: &Path) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|_| HarnessError::MissingPath {
        stage: Stage::Config,
        path: dir.to_path_buf(),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    paths.sort();
    let configs = paths.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
    let mut ids = BTreeSet::new();
    for c in &configs {
        if !ids.insert((c.out_dir.clone(), c.id.clone())) {
            return Err(HarnessError::Invalid(format!("duplicate experiment id `{}`", c.id)));
        }
    }
    Ok(configs)
}

/// Runs experiments in parallel, each in its own directory; results keep the input order.
pub fn run_batch(configs: &[ExperimentConfig]) -> Vec<Result<RunOutput, HarnessError>> {
    configs.par_iter().map(run_experiment).collect()
}

/// Writes the bundled toy corpus files (`toy.pl`, `toy.en`, `toy.pl.xml`) into `dir`.
pub fn write_toy_data(dir: &Path, n: usize, seed: u64) -> std::io::Result<()> {
    let c = toy::generate(n, seed);
    fs::create_dir_all(dir)?;
    fs::write(dir.join("toy.pl"), c.src.join("\n") + "\n")?;
    fs::write(dir.join("toy.en"), c.tgt.join("\n") + "\n")?;
    fs::write(dir.join("toy.pl.xml"), crate::morpho::to_xml(&c.annotations))
}
