use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use smtkit::align::{align_corpus, symmetrize, AlignmentMatrix, Ibm1Config, SymmetrizationHeuristic};
use smtkit::corpus::{self, clean, load_parallel, write_cleaned, CleaningConfig, LengthUnit};
use smtkit::decoder::{format_nbest, Decoder, DecoderParams, FeatureWeights, Models};
use smtkit::eval::{score_corpus, MeteorConfig, Metric, PenaltyShape};
use smtkit::harness::{self, parse_tsv, render_report, ExperimentConfig, HarnessError};
use smtkit::lm::{train_kn, TrainConfig};
use smtkit::morpho::{convert_encoding, make_variant, parse_annotations, EncodingDirection, VariantKind, VariantOptions};
use smtkit::phrase::{train_phrase_model, PhraseConfig, PhraseTable, ReorderingModel};
use smtkit::LanguageModel;

#[derive(Parser)]
#[command(name = "smt", version, about = "Phrase-based SMT workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a parallel corpus and write it with a drop log.
    Clean(CleanArgs),
    /// Tagger annotations and encodings.
    #[command(subcommand)]
    Morpho(MorphoCommand),
    /// Kneser-Ney language models.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Word alignment and symmetrization.
    #[command(subcommand)]
    Align(AlignCommand),
    /// Phrase and reordering tables.
    #[command(subcommand)]
    Phrase(PhraseCommand),
    /// Translate tokenized input, one sentence per line.
    Decode(DecodeArgs),
    /// Score candidates against references.
    Eval(EvalArgs),
    /// Run configured experiments end to end.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Combine experiment reports into one table.
    Report {
        #[arg(long, default_value = "runs/*/report")]
        glob: String,
        /// Also write the combined tab-separated table here.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Write the synthetic toy corpus with annotations.
    ToyData {
        #[arg(long, default_value = "data/toy")]
        out: PathBuf,
        #[arg(long, default_value_t = 1500)]
        size: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Output prefix; language codes are appended.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "pl")]
    src_lang: String,
    #[arg(long, default_value = "en")]
    tgt_lang: String,
    #[arg(long, default_value_t = 80)]
    max_len: usize,
    #[arg(long, default_value = "chars")]
    len_unit: String,
    #[arg(long)]
    lowercase: bool,
    #[arg(long)]
    keep_markup: bool,
    #[arg(long)]
    keep_repetitions: bool,
    #[arg(long)]
    keep_symbols: bool,
}

#[derive(Subcommand)]
enum MorphoCommand {
    /// Produce a plain-text variant (inf, svo, inf+svo) from tagger XML.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Append the end-of-line marker where the input had one.
        #[arg(long)]
        marker: bool,
        #[arg(long)]
        verbs_only: bool,
    },
    /// Convert between Windows-1250 and UTF-8.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        to: Encoding,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Utf8,
    Cp1250,
}

#[derive(Subcommand)]
enum LmCommand {
    Train {
        /// Text files, concatenated in order.
        #[arg(long, required = true, num_args = 1..)]
        text: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        output: PathBuf,
    },
    Ppl {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        text: PathBuf,
    },
}

#[derive(Subcommand)]
enum AlignCommand {
    /// IBM Model 1 in both directions plus symmetrization; writes `<out>.fwd`, `<out>.bwd`, `<out>.sym`.
    Train {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, visible_alias = "iters", default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value = "grow-diag-final-and")]
        heuristic: String,
    },
    /// Merge two source-major Pharaoh alignment files.
    Symmetrize {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        fwd: PathBuf,
        #[arg(long)]
        bwd: PathBuf,
        #[arg(long, default_value = "grow-diag-final-and")]
        heuristic: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PhraseCommand {
    /// Extract and score phrases; writes `<out>.phrases` and `<out>.reordering`.
    Train {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        max_len: usize,
    },
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    phrase_table: PathBuf,
    #[arg(long)]
    reordering: Option<PathBuf>,
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// n-best list size; the list goes to `--nbest-out`.
    #[arg(long, default_value_t = 1)]
    nbest: usize,
    #[arg(long)]
    nbest_out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    beam_size: usize,
    /// Maximum jump; omit the limit with `--distortion-limit none`.
    #[arg(long, default_value = "6")]
    distortion_limit: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// `all` or a comma-separated list of bleu, nist, meteor, ter.
    #[arg(long, default_value = "all")]
    metric: String,
    #[arg(long)]
    cand: PathBuf,
    /// Reference files, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    refs: Vec<PathBuf>,
    /// Cube the METEOR fragmentation ratio.
    #[arg(long)]
    meteor_cubed: bool,
    /// Synonym sets, one per line.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Write JSON lines here instead of after the plain-text scores.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every `*.cfg` in a directory in parallel.
    Batch {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn read_tokenized(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(corpus::read_lines(path)?.iter().map(|l| corpus::tokenize(l)).collect())
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| p.display().to_string()),
        None => io::stdout().write_all(text.as_bytes()).map_err(Into::into),
    }
}

fn heuristic(s: &str) -> Result<SymmetrizationHeuristic> {
    Ok(s.parse()?)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pharaoh(ms: &[AlignmentMatrix]) -> String {
    ms.iter().map(|m| m.to_pharaoh() + "\n").collect()
}

fn cmd_clean(a: CleanArgs) -> Result<()> {
    let mut c = load_parallel(&a.src, &a.tgt)?;
    c.src_lang = a.src_lang;
    c.tgt_lang = a.tgt_lang;
    let cfg = CleaningConfig {
        max_len: a.max_len,
        len_unit: a.len_unit.parse::<LengthUnit>()?,
        strip_markup: !a.keep_markup,
        drop_repetitions: !a.keep_repetitions,
        drop_nonlanguage_symbols: !a.keep_symbols,
        lowercase: a.lowercase,
        ..CleaningConfig::default()
    };
    let (cleaned, log) = clean(&c, &cfg);
    write_cleaned(&cleaned, &log, &a.out)?;
    eprintln!("kept {} of {} pairs", cleaned.len(), c.len());
    Ok(())
}

fn cmd_morpho(cmd: MorphoCommand) -> Result<()> {
    match cmd {
        MorphoCommand::Extract {
            input,
            kind,
            output,
            marker,
            verbs_only,
        } => {
            let kind: VariantKind = kind.parse()?;
            let file = fs::File::open(&input).with_context(|| input.display().to_string())?;
            let sentences = parse_annotations(BufReader::new(file))?;
            let lines = make_variant(&sentences, kind, VariantOptions { marker, verbs_only });
            write_out(output.as_deref(), &lines.iter().map(|l| format!("{l}\n")).collect::<String>())
        }
        MorphoCommand::Convert { input, output, to } => {
            let bytes = fs::read(&input).with_context(|| input.display().to_string())?;
            let direction = match to {
                Encoding::Utf8 => EncodingDirection::Cp1250ToUtf8,
                Encoding::Cp1250 => EncodingDirection::Utf8ToCp1250,
            };
            fs::write(&output, convert_encoding(&bytes, direction)?)?;
            Ok(())
        }
    }
}

fn cmd_lm(cmd: LmCommand) -> Result<()> {
    match cmd {
        LmCommand::Train { text, order, output } => {
            let mut sentences = Vec::new();
            for t in &text {
                sentences.extend(read_tokenized(t)?);
            }
            let model = train_kn::<f64, _>(&sentences, &TrainConfig::with_order(order))?;
            fs::write(&output, model.to_arpa())?;
            Ok(())
        }
        LmCommand::Ppl { lm, text } => {
            let model = load_lm(&lm)?;
            println!("perplexity {:.4}", model.perplexity(&read_tokenized(&text)?)?);
            Ok(())
        }
    }
}

fn load_lm(path: &Path) -> Result<LanguageModel> {
    let file = fs::File::open(path).with_context(|| path.display().to_string())?;
    Ok(LanguageModel::from_arpa(BufReader::new(file))?)
}

fn cmd_align(cmd: AlignCommand) -> Result<()> {
    match cmd {
        AlignCommand::Train {
            src,
            tgt,
            out,
            iterations,
            heuristic: h,
        } => {
            let c = load_parallel(&src, &tgt)?;
            let cfg = Ibm1Config {
                iterations,
                use_null: true,
            };
            let a = align_corpus::<f64>(&c, &cfg, heuristic(&h)?)?;
            fs::write(suffixed(&out, ".fwd"), pharaoh(&a.forward))?;
            fs::write(suffixed(&out, ".bwd"), pharaoh(&a.backward))?;
            fs::write(suffixed(&out, ".sym"), pharaoh(&a.symmetrized))?;
            Ok(())
        }
        AlignCommand::Symmetrize {
            src,
            tgt,
            fwd,
            bwd,
            heuristic: h,
            output,
        } => {
            let c = load_parallel(&src, &tgt)?;
            let h = heuristic(&h)?;
            let (f, b) = (corpus::read_lines(&fwd)?, corpus::read_lines(&bwd)?);
            if f.len() != c.len() || b.len() != c.len() {
                bail!("alignment files must have one line per sentence pair ({})", c.len());
            }
            let mut text = String::new();
            for (k, p) in c.pairs.iter().enumerate() {
                let (n, m) = (p.src.len(), p.tgt.len());
                let sym = symmetrize(
                    &AlignmentMatrix::parse_pharaoh(&f[k], n, m)?,
                    &AlignmentMatrix::parse_pharaoh(&b[k], n, m)?,
                    h,
                )?;
                text.push_str(&sym.to_pharaoh());
                text.push('\n');
            }
            write_out(output.as_deref(), &text)
        }
    }
}

fn cmd_phrase(cmd: PhraseCommand) -> Result<()> {
    let PhraseCommand::Train {
        src,
        tgt,
        alignment,
        out,
        max_len,
    } = cmd;
    let c = load_parallel(&src, &tgt)?;
    let lines = corpus::read_lines(&alignment)?;
    if lines.len() != c.len() {
        bail!("{} alignment lines for {} sentence pairs", lines.len(), c.len());
    }
    let alignments = c
        .pairs
        .iter()
        .zip(&lines)
        .map(|(p, l)| AlignmentMatrix::parse_pharaoh(l, p.src.len(), p.tgt.len()))
        .collect::<Result<Vec<_>, _>>()?;
    let (pt, ro) = train_phrase_model(&c, &alignments, &PhraseConfig { max_len })?;
    fs::write(suffixed(&out, ".phrases"), pt.to_text())?;
    fs::write(suffixed(&out, ".reordering"), ro.to_text())?;
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let phrases = PhraseTable::from_text(&fs::read_to_string(&a.phrase_table)?)?;
    let reordering = match &a.reordering {
        Some(p) => ReorderingModel::from_text(&fs::read_to_string(p)?)?,
        None => ReorderingModel::default(),
    };
    let lm = a.lm.as_deref().map(load_lm).transpose()?;
    let weights = match &a.weights {
        Some(p) => FeatureWeights::from_cfg(&fs::read_to_string(p)?)?,
        None => FeatureWeights::default(),
    };
    let params = DecoderParams {
        beam_size: a.beam_size,
        distortion_limit: match a.distortion_limit.as_str() {
            "none" | "unlimited" => None,
            v => Some(v.parse().context("distortion limit")?),
        },
        nbest: a.nbest.max(1),
        ..DecoderParams::default()
    };
    let decoder = Decoder::new(
        Models {
            phrases: &phrases,
            reordering: &reordering,
            lm: lm.as_ref(),
        },
        weights,
    );
    let input = read_tokenized(&a.input)?;
    let results: Vec<_> = input.par_iter().map(|s| decoder.decode(s, &params)).collect();
    let best: String = results.iter().map(|r| r.translation().join(" ") + "\n").collect();
    write_out(a.output.as_deref(), &best)?;
    if let Some(p) = &a.nbest_out {
        let mut text = String::new();
        for (i, r) in results.iter().enumerate() {
            for d in &r.nbest {
                text.push_str(&format_nbest(i, d));
                text.push('\n');
            }
        }
        fs::write(p, text)?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let metrics = Metric::parse_list(&a.metric)?;
    let cands = read_tokenized(&a.cand)?;
    let ref_sets = a.refs.iter().map(|p| read_tokenized(p)).collect::<Result<Vec<_>>>()?;
    for (p, r) in a.refs.iter().zip(&ref_sets) {
        if r.len() != cands.len() {
            bail!("{}: {} lines, candidate has {}", p.display(), r.len(), cands.len());
        }
    }
    let refs: Vec<Vec<Vec<String>>> = (0..cands.len()).map(|i| ref_sets.iter().map(|r| r[i].clone()).collect()).collect();
    let mut cfg = MeteorConfig {
        penalty: if a.meteor_cubed { PenaltyShape::Cubed } else { PenaltyShape::Linear },
        ..MeteorConfig::default()
    };
    if let Some(p) = &a.synonyms {
        cfg = cfg.with_synonym_lines(corpus::read_lines(p)?);
    }
    let mut text = String::new();
    let mut json = String::new();
    for m in metrics {
        let s = score_corpus(m, &cands, &refs, &cfg)?;
        text.push_str(&format!("{:<7}{:.4}\n", m.name().to_uppercase(), s.score));
        json.push_str(&s.to_json_line());
        json.push('\n');
    }
    match &a.json {
        Some(p) => {
            fs::write(p, json)?;
            print!("{text}");
        }
        None => print!("{text}{json}"),
    }
    Ok(())
}

fn print_runs(results: &[Result<harness::RunOutput, HarnessError>]) -> Result<(), HarnessError> {
    let rows: Vec<_> = results.iter().filter_map(|r| r.as_ref().ok().map(|o| o.row.clone())).collect();
    if !rows.is_empty() {
        print!("{}", render_report(&rows)?.0);
    }
    Ok(())
}

fn cmd_experiment(cmd: ExperimentCommand) -> Result<(), HarnessError> {
    let results = match cmd {
        ExperimentCommand::Run { config } => vec![harness::run_experiment(&ExperimentConfig::load(&config)?)],
        ExperimentCommand::Batch { dir } => {
            let configs = harness::load_batch(&dir)?;
            for c in &configs {
                c.check_paths()?;
            }
            harness::run_batch(&configs)
        }
    };
    print_runs(&results)?;
    let mut errors = results.into_iter().filter_map(Result::err);
    let first = errors.next();
    for e in errors {
        eprintln!("error: {e}");
    }
    first.map_or(Ok(()), Err)
}

fn cmd_report(pattern: &str, tsv: Option<PathBuf>) -> Result<()> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)?.collect::<Result<_, _>>()?;
    paths.sort();
    let mut rows = Vec::new();
    for p in &paths {
        rows.extend(parse_tsv(&fs::read_to_string(p)?)?);
    }
    let (text, delimited) = render_report(&rows)?;
    print!("{text}");
    if let Some(p) = tsv {
        fs::write(p, delimited)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(cmd) => {
            return match cmd_experiment(cmd) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
        Command::Clean(a) => cmd_clean(a),
        Command::Morpho(c) => cmd_morpho(c),
        Command::Lm(c) => cmd_lm(c),
        Command::Align(c) => cmd_align(c),
        Command::Phrase(c) => cmd_phrase(c),
        Command::Decode(a) => cmd_decode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Report { glob, tsv } => cmd_report(&glob, tsv),
        Command::ToyData { out, size, seed } => harness::write_toy_data(&out, size, seed).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
