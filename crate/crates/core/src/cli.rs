//! Command-line front end.
//!
//! Settings resolve as flag, then config file, then built-in default. The
//! config file is TOML: `seed` and `out_dir` at top level, everything else in
//! per-command tables (`[preprocess]`, `[train]`, `[select_k]`, `[infer]`,
//! `[evaluate]`, `[simulate]`, `[export]`). `select-k` also reads the sampler
//! settings of `[train]`; `infer` and `evaluate` read the text settings of
//! `[preprocess]` so test text is normalized like the training corpus.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::coherence::{sweep_k, write_sweep_csv, DEFAULT_TOP_M};
use crate::corpus::{
    build_corpus, english_stopwords, load_stopwords, read_delimited_documents, read_line_documents,
    Corpus, NormalizerKind, PreprocessConfig, Preprocessor, Review,
};
use crate::error::{Error, ErrorClass, Result};
use crate::evaluation::{
    default_fractions, load_semeval, sweep_masking, write_detail_csv,
    write_sweep_csv as write_eval_csv, EvalConfig,
};
use crate::lda::{fold_in, rank_aspects, train, AspectModel, FoldInConfig, TrainConfig};
use crate::similarity::{Taxonomy, DEFAULT_PSEUDO_COUNT};
use crate::synthetic::{generate, GenerativeMode, SyntheticConfig, TopicSupport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

const DEFAULT_K: usize = 30;
const DEFAULT_TOP_WORDS: usize = 10;
const DEFAULT_INFER_WORDS: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "latent-aspects",
    version,
    about = "Latent aspect detection for reviews with collapsed-Gibbs LDA"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Base seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory receiving output files (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize, filter and normalize raw reviews into corpus.json.
    Preprocess(PreprocessArgs),
    /// Train an aspect model on a corpus into model.json and top_words.csv.
    Train(TrainArgs),
    /// Train one model per K and write coherence.csv.
    SelectK(SelectKArgs),
    /// Rank the aspects of unseen text.
    Infer(InferArgs),
    /// Run the masking sweep against SemEval test files.
    Evaluate(EvaluateArgs),
    /// Write a synthetic corpus with its planted ground truth.
    Simulate(SimulateArgs),
    /// Write the top words of every aspect of a model.
    ExportTopWords(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// One review per line; ids are line numbers.
    Lines,
    /// Tab-separated with `review_id` and `text` columns.
    Tsv,
    /// Comma-separated with `review_id` and `text` columns.
    Csv,
}

#[derive(Debug, Args, Default)]
pub struct TextArgs {
    /// Stopword file, one word per line (default: built-in English list).
    #[arg(long, value_name = "FILE", conflicts_with = "no_stopwords")]
    pub stopwords: Option<PathBuf>,
    /// Keep stopwords.
    #[arg(long)]
    pub no_stopwords: bool,
    #[arg(long, value_enum)]
    pub normalizer: Option<NormalizerKind>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Raw review file.
    pub input: PathBuf,
    /// Input layout (default: from the extension, `lines` otherwise).
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Drop words found in fewer reviews (default 2).
    #[arg(long)]
    pub min_doc_freq: Option<usize>,
    #[command(flatten)]
    pub text: TextArgs,
}

#[derive(Debug, Args, Default)]
pub struct SamplerArgs {
    /// Dirichlet prior on aspect mixtures (default 5/K).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dirichlet prior on aspect word distributions (default 0.01).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Gibbs sweeps (default 1000).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Sweeps discarded before averaging (default 200).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Sweeps between averaged samples (default 10).
    #[arg(long)]
    pub sample_lag: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus file written by `preprocess` or `simulate`.
    pub corpus: PathBuf,
    /// Number of aspects (default 30).
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Words per aspect in top_words.csv (default 10).
    #[arg(long)]
    pub top_words: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    pub corpus: PathBuf,
    /// Smallest K of the range (default 5).
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest K of the range (default 100).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Range step (default 5).
    #[arg(long)]
    pub k_step: Option<usize>,
    /// Explicit K values; overrides the range.
    #[arg(long, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Top words per aspect scored for coherence (default 20).
    #[arg(long)]
    pub top_m: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct FoldInArgs {
    /// Fold-in sweeps per review (default 200).
    #[arg(long)]
    pub fold_in_iterations: Option<usize>,
    /// Fold-in sweeps discarded before averaging (default 100).
    #[arg(long)]
    pub fold_in_burn_in: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["text", "input"])))]
pub struct InferArgs {
    pub model: PathBuf,
    /// A single review.
    #[arg(long)]
    pub text: Option<String>,
    /// One review per line.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Words listed per aspect (default 5).
    #[arg(long)]
    pub top_words: Option<usize>,
    #[command(flatten)]
    pub fold_in: FoldInArgs,
    #[command(flatten)]
    pub text_args: TextArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// SemEval XML files; each gets its own report.
    #[arg(required = true)]
    pub testsets: Vec<PathBuf>,
    /// Masking fractions (default 0,0.1,...,1).
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Taxonomy TSV for matching out-of-vocabulary gold terms.
    #[arg(long, value_name = "FILE")]
    pub taxonomy: Option<PathBuf>,
    /// Added to every concept frequency of the taxonomy (default 1).
    #[arg(long)]
    pub pseudo_count: Option<f64>,
    /// Aspect words searched for a gold term (default 5).
    #[arg(long)]
    pub top_k_words: Option<usize>,
    /// Cutoff of recall, nDCG and hit (default 5).
    #[arg(long)]
    pub metric_k: Option<usize>,
    #[command(flatten)]
    pub fold_in: FoldInArgs,
    #[command(flatten)]
    pub text_args: TextArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of aspects (default 4).
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    /// Vocabulary size (default 40).
    #[arg(long)]
    pub v: Option<usize>,
    /// Number of reviews (default 500).
    #[arg(long)]
    pub n_docs: Option<usize>,
    /// Tokens per review (default 40).
    #[arg(long)]
    pub doc_len: Option<usize>,
    /// Concentration of review aspect mixtures (default 5/K).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Concentration of aspect word distributions (default 0.1).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<GenerativeMode>,
    #[arg(long, value_enum)]
    pub support: Option<TopicSupport>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub model: PathBuf,
    /// Words per aspect (default 10).
    #[arg(long)]
    pub top_words: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub select_k: SelectKSection,
    #[serde(default)]
    pub infer: InferSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub export: ExportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub format: Option<InputFormat>,
    pub min_doc_freq: Option<usize>,
    /// A path, or `"none"` to keep stopwords.
    pub stopwords: Option<String>,
    pub normalizer: Option<NormalizerKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub sample_lag: Option<usize>,
    pub top_words: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectKSection {
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub k_step: Option<usize>,
    pub k_values: Option<Vec<usize>>,
    pub top_m: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferSection {
    pub top_words: Option<usize>,
    pub fold_in_iterations: Option<usize>,
    pub fold_in_burn_in: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub fractions: Option<Vec<f64>>,
    pub taxonomy: Option<PathBuf>,
    pub pseudo_count: Option<f64>,
    pub top_k_words: Option<usize>,
    pub metric_k: Option<usize>,
    pub fold_in_iterations: Option<usize>,
    pub fold_in_burn_in: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub k: Option<usize>,
    pub v: Option<usize>,
    pub n_docs: Option<usize>,
    pub doc_len: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub mode: Option<GenerativeMode>,
    pub support: Option<TopicSupport>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    pub top_words: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidParameter(msg) => {
                Error::InvalidParameter(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }
}

/// Flag, then config file, then default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Write `bytes` to `path` through a temporary file in the same directory, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

struct Context {
    seed: u64,
    out_dir: PathBuf,
    out_dir_given: bool,
    file: FileConfig,
}

impl Context {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn preprocessor(
    text: &TextArgs,
    section: &PreprocessSection,
    min_doc_freq: usize,
) -> Result<Preprocessor> {
    let stopwords = if text.no_stopwords {
        Default::default()
    } else if let Some(path) = &text.stopwords {
        load_stopwords(path)?
    } else {
        match section.stopwords.as_deref() {
            Some("none") => Default::default(),
            Some(path) => load_stopwords(Path::new(path))?,
            None => english_stopwords(),
        }
    };
    Ok(Preprocessor::new(PreprocessConfig {
        min_doc_freq,
        stopwords,
        normalizer: pick(
            text.normalizer,
            section.normalizer,
            NormalizerKind::default(),
        ),
    }))
}

fn train_config(k: usize, sampler: &SamplerArgs, section: &TrainSection, seed: u64) -> TrainConfig {
    let defaults = TrainConfig::new(k);
    TrainConfig {
        k,
        alpha: sampler.alpha.or(section.alpha),
        beta: pick(sampler.beta, section.beta, defaults.beta),
        iterations: pick(sampler.iterations, section.iterations, defaults.iterations),
        burn_in: pick(sampler.burn_in, section.burn_in, defaults.burn_in),
        sample_lag: pick(sampler.sample_lag, section.sample_lag, defaults.sample_lag),
        seed,
    }
}

fn fold_in_config(
    args: &FoldInArgs,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<FoldInConfig> {
    let defaults = FoldInConfig::default();
    let cfg = FoldInConfig {
        iterations: pick(args.fold_in_iterations, iterations, defaults.iterations),
        burn_in: pick(args.fold_in_burn_in, burn_in, defaults.burn_in),
        seed,
    };
    if cfg.iterations <= cfg.burn_in {
        return Err(Error::InvalidParameter(format!(
            "fold-in iterations ({}) must exceed its burn-in ({})",
            cfg.iterations, cfg.burn_in
        )));
    }
    Ok(cfg)
}

fn cmd_preprocess(ctx: &Context, args: &PreprocessArgs) -> Result<()> {
    let section = &ctx.file.preprocess;
    let format = args.format.or(section.format).unwrap_or_else(|| {
        match args.input.extension().and_then(|e| e.to_str()) {
            Some("tsv") => InputFormat::Tsv,
            Some("csv") => InputFormat::Csv,
            _ => InputFormat::Lines,
        }
    });
    let docs = match format {
        InputFormat::Lines => read_line_documents(&args.input)?,
        InputFormat::Tsv => read_delimited_documents(&args.input, b'\t')?,
        InputFormat::Csv => read_delimited_documents(&args.input, b',')?,
    };
    let min_doc_freq = pick(
        args.min_doc_freq,
        section.min_doc_freq,
        PreprocessConfig::default().min_doc_freq,
    );
    let pre = preprocessor(&args.text, section, min_doc_freq)?;
    let source = args
        .input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (corpus, report) = build_corpus(&docs, &pre, &source)?;
    log::info!(
        "{} reviews, {} tokens, vocabulary {}",
        corpus.len(),
        corpus.total_tokens(),
        corpus.vocabulary.len()
    );
    write_atomic(&ctx.out("corpus.json"), corpus.to_json()?.as_bytes())?;
    let mut report_json = serde_json::to_string_pretty(&report)?;
    report_json.push('\n');
    write_atomic(&ctx.out("preprocess_report.json"), report_json.as_bytes())
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let section = &ctx.file.train;
    let corpus = Corpus::load(&args.corpus)?;
    let k = pick(args.k, section.k, DEFAULT_K);
    let cfg = train_config(k, &args.sampler, section, ctx.seed);
    log::info!(
        "training K={k} for {} sweeps on {} reviews",
        cfg.iterations,
        corpus.len()
    );
    let model = train(&corpus, &cfg)?;
    let top = pick(args.top_words, section.top_words, DEFAULT_TOP_WORDS);
    let csv = csv_bytes(|b| model.write_top_words_csv(top, b))?;
    write_atomic(&ctx.out("model.json"), model.to_json()?.as_bytes())?;
    write_atomic(&ctx.out("top_words.csv"), &csv)
}

fn k_values(args: &SelectKArgs, section: &SelectKSection) -> Result<Vec<usize>> {
    if let Some(v) = args.k_values.clone().or_else(|| section.k_values.clone()) {
        if v.is_empty() {
            return Err(Error::InvalidParameter("empty K list".into()));
        }
        return Ok(v);
    }
    let lo = pick(args.k_min, section.k_min, 5);
    let hi = pick(args.k_max, section.k_max, 100);
    let step = pick(args.k_step, section.k_step, 5);
    if step == 0 || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "bad K range {lo}..={hi} step {step}"
        )));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn cmd_select_k(ctx: &Context, args: &SelectKArgs) -> Result<()> {
    let section = &ctx.file.select_k;
    let corpus = Corpus::load(&args.corpus)?;
    let ks = k_values(args, section)?;
    let base = train_config(ks[0], &args.sampler, &ctx.file.train, ctx.seed);
    let top_m = pick(args.top_m, section.top_m, DEFAULT_TOP_M);
    log::info!("coherence sweep over K = {ks:?}");
    let rows = sweep_k(&corpus, &ks, &base, top_m)?;
    let csv = csv_bytes(|b| write_sweep_csv(&rows, b))?;
    write_atomic(&ctx.out("coherence.csv"), &csv)?;
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("K={}: {e}", r.k)))
        .collect();
    for f in &failed {
        log::warn!("{f}");
    }
    if failed.len() == rows.len() {
        return Err(Error::InvalidData(format!(
            "every K failed: {}",
            failed.join("; ")
        )));
    }
    Ok(())
}

/// Tab-separated aspect ranking of each review: K rows per review, best
/// aspect first.
pub fn format_inference(
    model: &AspectModel,
    reviews: &[Review],
    top_words: usize,
    fold: &FoldInConfig,
) -> String {
    let words = model.top_words(top_words);
    let mut out = String::from("review_id\trank\taspect_id\ttheta\tall_oov\ttop_words\n");
    for (i, review) in reviews.iter().enumerate() {
        let dist = fold_in(model, review, &fold.for_review(i));
        if dist.all_oov {
            log::warn!(
                "review {}: no token is in the model vocabulary, aspect mixture is uniform",
                review.review_id
            );
        }
        for (rank, (aspect, theta)) in rank_aspects(&dist).into_iter().enumerate() {
            let list: Vec<&str> = words[aspect]
                .iter()
                .map(|&(w, _)| model.vocabulary().word(w))
                .collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{}\t{}",
                review.review_id,
                rank + 1,
                aspect,
                theta,
                dist.all_oov,
                list.join(" ")
            );
        }
    }
    out
}

fn cmd_infer(ctx: &Context, args: &InferArgs) -> Result<()> {
    let section = &ctx.file.infer;
    let model = AspectModel::load(&args.model)?;
    let pre = preprocessor(&args.text_args, &ctx.file.preprocess, 1)?;
    let raw: Vec<(String, String)> = match (&args.text, &args.input) {
        (Some(t), _) => vec![("0".into(), t.clone())],
        (None, Some(path)) => read_line_documents(path)?
            .into_iter()
            .map(|d| (d.id, d.text))
            .collect(),
        (None, None) => return Err(Error::InvalidParameter("give --text or --input".into())),
    };
    let reviews: Vec<Review> = raw
        .into_iter()
        .map(|(id, text)| {
            let (tokens, _) = model.vocabulary().encode(&pre.process(&text));
            Review {
                review_id: id,
                raw: text,
                tokens,
            }
        })
        .collect();
    let fold = fold_in_config(
        &args.fold_in,
        section.fold_in_iterations,
        section.fold_in_burn_in,
        ctx.seed,
    )?;
    let top = pick(args.top_words, section.top_words, DEFAULT_INFER_WORDS);
    let table = format_inference(&model, &reviews, top, &fold);
    if ctx.out_dir_given {
        write_atomic(&ctx.out("inference.tsv"), table.as_bytes())
    } else {
        std::io::stdout()
            .write_all(table.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    }
}

fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let section = &ctx.file.evaluate;
    let model = AspectModel::load(&args.model)?;
    let pre = preprocessor(&args.text_args, &ctx.file.preprocess, 1)?;
    let fractions = args
        .fractions
        .clone()
        .or_else(|| section.fractions.clone())
        .unwrap_or_else(default_fractions);
    let taxonomy = match args.taxonomy.as_ref().or(section.taxonomy.as_ref()) {
        Some(path) => Some(Taxonomy::load(
            path,
            pick(
                args.pseudo_count,
                section.pseudo_count,
                DEFAULT_PSEUDO_COUNT,
            ),
        )?),
        None => None,
    };
    let defaults = EvalConfig::default();
    let config = EvalConfig {
        top_k_words: pick(args.top_k_words, section.top_k_words, defaults.top_k_words),
        metric_k: pick(args.metric_k, section.metric_k, defaults.metric_k),
        fold_in: fold_in_config(
            &args.fold_in,
            section.fold_in_iterations,
            section.fold_in_burn_in,
            ctx.seed,
        )?,
        seed: ctx.seed,
    };

    let mut stems = std::collections::HashSet::new();
    for path in &args.testsets {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !stems.insert(stem.clone()) {
            return Err(Error::InvalidParameter(format!(
                "two test files share the name {stem:?}"
            )));
        }
    }
    for path in &args.testsets {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let testset = load_semeval(path, &pre)?;
        log::info!("{}: {} sentences", path.display(), testset.len());
        let reports = sweep_masking(&model, &testset, &fractions, taxonomy.as_ref(), &config)?;
        let summary = csv_bytes(|b| write_eval_csv(&reports, b))?;
        let detail = csv_bytes(|b| write_detail_csv(&reports, b))?;
        write_atomic(&ctx.out(&format!("{stem}.eval.csv")), &summary)?;
        write_atomic(&ctx.out(&format!("{stem}.eval_detail.csv")), &detail)?;
    }
    Ok(())
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let s = &ctx.file.simulate;
    let k = pick(args.k, s.k, 4);
    let cfg = SyntheticConfig {
        k,
        v: pick(args.v, s.v, 40),
        n_docs: pick(args.n_docs, s.n_docs, 500),
        doc_len: pick(args.doc_len, s.doc_len, 40),
        alpha: pick(args.alpha, s.alpha, 5.0 / k.max(1) as f64),
        beta: pick(args.beta, s.beta, 0.1),
        mode: pick(args.mode, s.mode, GenerativeMode::PerWord),
        support: pick(args.support, s.support, TopicSupport::Full),
        seed: ctx.seed,
    };
    let (corpus, truth) = generate(&cfg)?;
    let manifest = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["review_id", "n_tokens"])?;
        for r in &corpus.reviews {
            w.write_record([r.review_id.clone(), r.tokens.len().to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<manifest>", e))
    })?;
    write_atomic(&ctx.out("corpus.json"), corpus.to_json()?.as_bytes())?;
    write_atomic(&ctx.out("ground_truth.json"), truth.to_json()?.as_bytes())?;
    write_atomic(&ctx.out("manifest.csv"), &manifest)
}

fn cmd_export(ctx: &Context, args: &ExportArgs) -> Result<()> {
    let model = AspectModel::load(&args.model)?;
    let top = pick(args.top_words, ctx.file.export.top_words, DEFAULT_TOP_WORDS);
    let csv = csv_bytes(|b| model.write_top_words_csv(top, b))?;
    write_atomic(&ctx.out("top_words.csv"), &csv)
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let out_dir_given = cli.global.out_dir.is_some() || file.out_dir.is_some();
    let ctx = Context {
        seed: pick(cli.global.seed, file.seed, 0),
        out_dir: pick(
            cli.global.out_dir.clone(),
            file.out_dir.clone(),
            PathBuf::from("."),
        ),
        out_dir_given,
        file,
    };
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::SelectK(a) => cmd_select_k(&ctx, a),
        Command::Infer(a) => cmd_infer(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::ExportTopWords(a) => cmd_export(&ctx, a),
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Internal => EXIT_INTERNAL,
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = if cli.global.quiet {
        log::LevelFilter::Error
    } else {
        match cli.global.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec!["la", "preprocess", "in.txt", "--min-doc-freq", "3"],
            vec!["la", "train", "c.json", "-k", "10", "--seed", "4"],
            vec!["la", "select-k", "c.json", "--k-values", "5,10"],
            vec!["la", "infer", "m.json", "--text", "great sushi"],
            vec![
                "la",
                "evaluate",
                "--model",
                "m.json",
                "a.xml",
                "b.xml",
                "--fractions",
                "0,0.5",
            ],
            vec![
                "la",
                "simulate",
                "--mode",
                "per-review",
                "--support",
                "disjoint",
            ],
            vec!["la", "export-top-words", "m.json", "--quiet"],
        ] {
            Cli::try_parse_from(&args).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        }
    }

    #[test]
    fn infer_needs_a_source() {
        assert!(Cli::try_parse_from(["la", "infer", "m.json"]).is_err());
        assert!(
            Cli::try_parse_from(["la", "infer", "m.json", "--text", "a", "--input", "f"]).is_err()
        );
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(["la", "bogus"]), EXIT_USAGE);
        assert_eq!(main_with_args(["la", "train"]), EXIT_USAGE);
        assert_eq!(main_with_args(["la", "--help"]), EXIT_OK);
    }

    #[test]
    fn config_sections_parse_and_reject_unknown_keys() {
        let cfg = FileConfig::parse(
            "seed = 9\n[train]\nk = 12\nbeta = 0.05\n[preprocess]\nnormalizer = \"identity\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.train.k, Some(12));
        assert_eq!(cfg.preprocess.normalizer, Some(NormalizerKind::Identity));
        assert!(matches!(
            FileConfig::parse("[train]\nkk = 1\n"),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn flags_override_config_which_overrides_defaults() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
        let section = TrainSection {
            beta: Some(0.05),
            iterations: Some(50),
            ..Default::default()
        };
        let sampler = SamplerArgs {
            iterations: Some(70),
            ..Default::default()
        };
        let cfg = train_config(8, &sampler, &section, 1);
        assert_eq!((cfg.beta, cfg.iterations, cfg.burn_in), (0.05, 70, 200));
        assert_eq!(cfg.alpha(), 5.0 / 8.0);
    }

    #[test]
    fn k_range_defaults_to_five_through_hundred() {
        let args = SelectKArgs {
            corpus: PathBuf::new(),
            k_min: None,
            k_max: None,
            k_step: None,
            k_values: None,
            sampler: SamplerArgs::default(),
            top_m: None,
        };
        let ks = k_values(&args, &SelectKSection::default()).unwrap();
        assert_eq!(ks.len(), 20);
        assert_eq!((ks[0], ks[19]), (5, 100));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(
            std::fs::read_dir(dir.path().join("sub")).unwrap().count(),
            1
        );
    }
}
