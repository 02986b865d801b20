//! Command-line front end: load → normalize → retrofit → hubness → score.
//!
//! Every flag has a matching key in an optional TOML config file
//! (`--config`); flags given on the command line override the file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::embedding::{load_embeddings, CaseFolding, EmbeddingSpace};
use crate::error::{Error, Result, StageContext};
use crate::evaluation::{evaluate, heuristic_combine, load_questions, EvaluationReport, Measure, MeasureConfig, Scorer};
use crate::hubness::{
    koccurrence_skewness, localized_center, shifted_koccurrence_skewness, CenteringMode, HubnessConfig, Sample,
};
use crate::lexicon::load_lexicon;
use crate::retrofit::{retrofit, RetrofitConfig, RetrofitVariant};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HrMode {
    #[default]
    Off,
    /// Localized centering applied to the vectors.
    Vector,
    /// Localized centering applied as a similarity penalty.
    Simshift,
}

/// Fixed exponent, or the measured k-occurrence skewness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRepr", into = "GammaRepr")]
pub enum Gamma {
    Auto,
    Value(f64),
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Value(9.0)
    }
}

impl FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Gamma::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Gamma::Value(v)),
            _ => Err(format!("expected a number or \"auto\", got {s:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = String;

    fn try_from(r: GammaRepr) -> std::result::Result<Self, String> {
        match r {
            GammaRepr::Number(v) => Ok(Gamma::Value(v)),
            GammaRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Auto => GammaRepr::Text("auto".into()),
            Gamma::Value(v) => GammaRepr::Number(v),
        }
    }
}

/// Full pipeline settings, as read from a config file and/or flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PipelineConfig {
    pub embeddings: Option<PathBuf>,
    pub dim: Option<usize>,
    pub normalize: bool,
    pub lowercase: bool,
    pub lexicon: Option<PathBuf>,
    pub retrofit: RetrofitVariant,
    pub retrofit_iters: usize,
    pub alpha: f64,
    pub beta: f64,
    pub hr: HrMode,
    pub gamma: Gamma,
    pub knn_k: usize,
    pub measure: Measure,
    pub score_k: f64,
    pub top_n: Option<usize>,
    pub questions: Vec<PathBuf>,
    pub heuristic: bool,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embeddings: None,
            dim: None,
            normalize: false,
            lowercase: false,
            lexicon: None,
            retrofit: RetrofitVariant::None,
            retrofit_iters: 10,
            alpha: 1.0,
            beta: 1.0,
            hr: HrMode::Off,
            gamma: Gamma::default(),
            knn_k: 10,
            measure: Measure::Cosine,
            score_k: 10.0,
            top_n: None,
            questions: Vec::new(),
            heuristic: false,
            out: None,
            threads: None,
            sample: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.embeddings.is_none() {
            return Err(Error::Config("no embeddings file given (--embeddings)".into()));
        }
        if self.retrofit != RetrofitVariant::None && self.lexicon.is_none() {
            return Err(Error::Config("retrofitting needs a lexicon (--lexicon)".into()));
        }
        if self.heuristic && self.hr == HrMode::Off {
            return Err(Error::Config(
                "--heuristic combines runs with and without hubness reduction; set --hr".into(),
            ));
        }
        if self.hr == HrMode::Simshift && self.measure != Measure::Cosine {
            return Err(Error::Config("--hr simshift works with --measure cosine only".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be positive".into()));
        }
        Ok(())
    }

    fn folding(&self) -> CaseFolding {
        if self.lowercase {
            CaseFolding::Lowercase
        } else {
            CaseFolding::Exact
        }
    }

    fn sample(&self) -> Option<Sample> {
        self.sample.map(|size| Sample { size, seed: self.seed })
    }

    fn measure_config(&self, shift: Option<HubnessConfig>) -> MeasureConfig {
        MeasureConfig {
            measure: self.measure,
            score_k: self.score_k,
            top_n: self.top_n,
            folding: self.folding(),
            shift,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "resm", version, about = "Post-process word embeddings and score synonym tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer multiple-choice synonym question sets and write reports.
    Evaluate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Question file (TSV); repeatable.
        #[arg(long = "questions")]
        questions: Vec<PathBuf>,
        /// Also run without hubness reduction and combine both by mean rank.
        #[arg(long)]
        heuristic: bool,
        /// Directory for report files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the configured similarity of two words.
    Sim {
        #[command(flatten)]
        pipeline: PipelineArgs,
        word_a: String,
        word_b: String,
        /// Context words for RESM.
        context: Vec<String>,
    },
    /// Write the post-processed space in the embedding text format.
    Transform {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the k-occurrence skewness of the (retrofitted) space.
    Skewness {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// TOML file with pipeline settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Expected vector dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Scale every vector to unit length before anything else.
    #[arg(long)]
    pub normalize: bool,
    /// Lowercase query words before lookup.
    #[arg(long)]
    pub lowercase: bool,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub retrofit: Option<RetrofitVariant>,
    #[arg(long)]
    pub retrofit_iters: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub hr: Option<HrMode>,
    /// Centering exponent, or `auto` for the measured skewness.
    #[arg(long)]
    pub gamma: Option<Gamma>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long, value_enum)]
    pub measure: Option<Measure>,
    #[arg(long)]
    pub score_k: Option<f64>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long, env = "RESM_THREADS")]
    pub threads: Option<usize>,
    /// Estimate skewness from this many sampled query points.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl PipelineArgs {
    /// Config file contents (if any) with command-line values on top.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
                PipelineConfig::from_toml(&text)?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone().into(); })*
            };
        }
        take!(embeddings, dim, lexicon, top_n, threads, sample);
        take!(retrofit, retrofit_iters, alpha, beta, hr, gamma, knn_k, measure, score_k, seed);
        cfg.normalize |= self.normalize;
        cfg.lowercase |= self.lowercase;
        Ok(cfg)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Loads the space and applies normalization and retrofitting.
pub fn prepare_space(cfg: &PipelineConfig) -> Result<EmbeddingSpace> {
    let path = cfg
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::Config("no embeddings file given".into()))?;
    let (mut space, summary) = open(path)
        .and_then(|r| load_embeddings(r, cfg.dim))
        .stage("loading embeddings")?;
    log::info!(
        "loaded {} vectors of dimension {} ({} duplicate tokens skipped)",
        summary.words,
        space.dim(),
        summary.duplicates
    );
    if cfg.normalize {
        space = space.l2_normalize().stage("normalizing")?;
    }
    if cfg.retrofit != RetrofitVariant::None {
        let path = cfg
            .lexicon
            .as_deref()
            .ok_or_else(|| Error::Config("retrofitting needs a lexicon".into()))?;
        let (lexicon, summary) = open(path).and_then(load_lexicon).stage("loading lexicon")?;
        let (lexicon, dropped) = lexicon.restrict_to_vocab(&space);
        log::info!(
            "lexicon: {} heads kept, {} lines skipped, {} heads and {} synonyms outside the vocabulary",
            lexicon.len(),
            summary.skipped_lines,
            dropped.heads_dropped,
            dropped.synonyms_dropped
        );
        let rcfg = RetrofitConfig {
            iterations: cfg.retrofit_iters,
            alpha: cfg.alpha,
            beta: cfg.beta,
            variant: cfg.retrofit,
        };
        space = retrofit(&space, &lexicon, &rcfg).stage("retrofitting")?;
    }
    Ok(space)
}

/// Hubness settings for the configured mode, measuring γ when `auto`.
fn hubness_config(cfg: &PipelineConfig, space: &EmbeddingSpace, out: &mut dyn Write) -> Result<Option<HubnessConfig>> {
    let mode = match cfg.hr {
        HrMode::Off => return Ok(None),
        HrMode::Vector => CenteringMode::VectorLiteral,
        HrMode::Simshift => CenteringMode::SimilarityShift,
    };
    let gamma = match cfg.gamma {
        Gamma::Value(v) => v,
        Gamma::Auto => {
            let skew = koccurrence_skewness(space, cfg.knn_k, cfg.sample()).stage("measuring skewness")?;
            write_line(out, &format!("skewness={:.6}", skew.value))?;
            skew.value
        }
    };
    Ok(Some(HubnessConfig {
        knn_k: cfg.knn_k,
        gamma,
        mode,
    }))
}

/// A space ready for scoring plus the shift settings, if any.
struct Stage {
    space: EmbeddingSpace,
    shift: Option<HubnessConfig>,
}

fn apply_hubness(space: &EmbeddingSpace, hub: Option<HubnessConfig>) -> Result<Stage> {
    match hub {
        None => Ok(Stage {
            space: space.clone(),
            shift: None,
        }),
        Some(h) if h.mode == CenteringMode::VectorLiteral => Ok(Stage {
            space: localized_center(space, &h).stage("localized centering")?,
            shift: None,
        }),
        Some(h) => {
            h.validate(space)?;
            Ok(Stage {
                space: space.clone(),
                shift: Some(h),
            })
        }
    }
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("stdout", e))
}

fn set_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "questions".into())
}

pub fn cmd_evaluate(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    cfg.validate()?;
    if cfg.questions.is_empty() {
        return Err(Error::Config("no question sets given (--questions)".into()));
    }
    let sets = cfg
        .questions
        .iter()
        .map(|p| open(p).and_then(|r| load_questions(r, &set_name(p))))
        .collect::<Result<Vec<_>>>()
        .stage("loading questions")?;
    let base = prepare_space(cfg)?;
    let hub = hubness_config(cfg, &base, out)?;
    let main = apply_hubness(&base, hub)?;
    let main_scorer = Scorer::new(&main.space, cfg.measure_config(main.shift))?;
    let plain_scorer = if cfg.heuristic {
        Some(Scorer::new(&base, cfg.measure_config(None))?)
    } else {
        None
    };

    for set in &sets {
        let mut reports: Vec<(String, EvaluationReport)> = Vec::new();
        let main_report = evaluate(set, &main_scorer).stage("evaluating")?;
        match &plain_scorer {
            Some(plain) => {
                let plain_report = evaluate(set, plain).stage("evaluating")?;
                let combined = heuristic_combine(&plain_report, &main_report)?;
                reports.push((format!("{}.base", set.name), plain_report));
                reports.push((format!("{}.hr", set.name), main_report));
                reports.push((format!("{}.heuristic", set.name), combined));
            }
            None => reports.push((set.name.clone(), main_report)),
        }
        for (label, report) in reports {
            log::info!(
                "{label}: accuracy {:.4}, average rank {:.4}",
                report.accuracy(),
                report.average_rank()
            );
            match &cfg.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
                    let path = dir.join(format!("{label}.txt"));
                    std::fs::write(&path, report.render()).map_err(|e| Error::io(path.display().to_string(), e))?;
                }
                None => {
                    write_line(out, &format!("== {label} =="))?;
                    out.write_all(report.render().as_bytes())
                        .map_err(|e| Error::io("stdout", e))?;
                }
            }
        }
    }
    Ok(())
}

/// Similarity of two words under the configured pipeline.
pub fn similarity_value(cfg: &PipelineConfig, word_a: &str, word_b: &str, context: &[String]) -> Result<f64> {
    cfg.validate()?;
    let base = prepare_space(cfg)?;
    let hub = hubness_config(cfg, &base, &mut std::io::sink())?;
    let stage = apply_hubness(&base, hub)?;
    let scorer = Scorer::new(&stage.space, cfg.measure_config(stage.shift))?;
    let a = scorer.lookup(word_a)?;
    let b = scorer.lookup(word_b)?;
    let ctx = context.iter().map(|w| scorer.lookup(w)).collect::<Result<Vec<_>>>()?;
    scorer.score_pair(a, b, &ctx)
}

pub fn cmd_sim(cfg: &PipelineConfig, word_a: &str, word_b: &str, context: &[String], out: &mut dyn Write) -> Result<()> {
    let value = similarity_value(cfg, word_a, word_b, context)?;
    write_line(out, &format!("{value:.6}"))
}

pub fn cmd_transform(cfg: &PipelineConfig, output: &Path, out: &mut dyn Write) -> Result<()> {
    cfg.validate()?;
    if cfg.hr == HrMode::Simshift {
        return Err(Error::Config(
            "--hr simshift changes scoring, not vectors; use --hr vector to transform".into(),
        ));
    }
    let base = prepare_space(cfg)?;
    let hub = hubness_config(cfg, &base, out)?;
    let stage = apply_hubness(&base, hub)?;
    let file = File::create(output).map_err(|e| Error::io(output.display().to_string(), e))?;
    stage
        .space
        .write_to(BufWriter::new(file))
        .map_err(|e| Error::io(output.display().to_string(), e))
}

pub fn cmd_skewness(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    cfg.validate()?;
    let base = prepare_space(cfg)?;
    let before = koccurrence_skewness(&base, cfg.knn_k, cfg.sample())?;
    write_line(out, &format!("skewness={:.6}", before.value))?;
    if let Some(h) = hubness_config(cfg, &base, &mut std::io::sink())? {
        let h = match cfg.gamma {
            Gamma::Auto => HubnessConfig { gamma: before.value, ..h },
            Gamma::Value(_) => h,
        };
        let after = match h.mode {
            CenteringMode::VectorLiteral => koccurrence_skewness(&localized_center(&base, &h)?, h.knn_k, cfg.sample())?,
            CenteringMode::SimilarityShift => shifted_koccurrence_skewness(&base, &h, cfg.sample())?,
        };
        write_line(out, &format!("skewness_after={:.6}", after.value))?;
    }
    Ok(())
}

fn run_command(command: Command, out: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Evaluate {
            pipeline,
            questions,
            heuristic,
            out: dir,
        } => {
            let mut cfg = pipeline.resolve()?;
            if !questions.is_empty() {
                cfg.questions = questions;
            }
            cfg.heuristic |= heuristic;
            if dir.is_some() {
                cfg.out = dir;
            }
            with_threads(cfg.threads, || cmd_evaluate(&cfg, out))
        }
        Command::Sim {
            pipeline,
            word_a,
            word_b,
            context,
        } => {
            let cfg = pipeline.resolve()?;
            with_threads(cfg.threads, || cmd_sim(&cfg, &word_a, &word_b, &context, out))
        }
        Command::Transform { pipeline, output } => {
            let cfg = pipeline.resolve()?;
            with_threads(cfg.threads, || cmd_transform(&cfg, &output, out))
        }
        Command::Skewness { pipeline } => {
            let cfg = pipeline.resolve()?;
            with_threads(cfg.threads, || cmd_skewness(&cfg, out))
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_command(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
