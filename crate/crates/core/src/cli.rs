//! Command-line driver behind the `rle` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::decompose::{partition_image, tokenize_text, DecomposeError, Modality, RawInput};
use crate::eval::{self, slic_segment, AttributionMethod, EvalError, IrofRecord, SlicParams};
use crate::explain::{
    self, ElementDoc, ExplainConfig, ExplainError, Explanation, ExplanationDocument, Permutations,
    RelationalExplanation, DEFAULT_GRID_SIDE,
};
use crate::image::{ImageBuffer, ImageError};
use crate::models::{handshake_timeout_from_env, parse_builtin, spawn_bridge, ModelError, ModelHandle};
use crate::perturb::PermuteMode;
use crate::render::{self, RenderError, RenderStyle};
use crate::surrogate::{Penalty, SurrogateSettings};

const EXIT_CODES: &str = "\
Exit codes:
   0  success
   2  invalid arguments or configuration
   3  file read/write failure
   4  image decode/encode failure
   5  input decomposition failed (grid does not divide the image, too few tokens)
   6  perturbation failure
   7  surrogate fit failure
   8  explanation failure (matrix, permutation count, modality)
   9  bridge process could not be spawned
  10  bridge handshake timed out (RLE_BRIDGE_TIMEOUT_SECS, default 30)
  11  model unavailable (bridge exited or closed its output)
  12  bridge protocol error
  13  model returned a non-finite score
  14  invalid model spec or model input
  15  IROF evaluation failure (segmentation, zero original score)
  16  rendering failure
  17  malformed explanation document";

#[derive(Debug, Parser)]
#[command(name = "rle", version, about = "Relational local explanations for black-box models", after_help = EXIT_CODES)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain a model's score for one image.
    ExplainImage {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explain: ExplainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Explain a model's score for one sentence.
    ExplainText {
        #[arg(long)]
        text: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explain: ExplainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// IROF benchmark over a set of images, one JSON line per image, method and seed.
    EvalIrof {
        /// Directory of .png/.ppm images, evaluated in file-name order.
        #[arg(long, required_unless_present = "image")]
        corpus: Option<PathBuf>,
        /// Individual images (repeatable).
        #[arg(long)]
        image: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "rle,random")]
        methods: Vec<AttributionMethod>,
        /// Seeds per (image, method), starting at --seed.
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 100)]
        slic_k: usize,
        #[arg(long, default_value_t = 10.0)]
        slic_compactness: f64,
        #[arg(long, default_value_t = 10)]
        slic_iters: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explain: ExplainArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-render figures from a saved explanation.json.
    Render {
        #[arg(long)]
        explanation: PathBuf,
        /// Original image (image explanations only).
        #[arg(long)]
        image: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// builtin:<spec> or bridge:<command>
    #[arg(long)]
    pub model: String,
    #[arg(long = "class", default_value_t = 0)]
    pub target_class: usize,
    #[arg(long, default_value_t = crate::models::DEFAULT_BATCH_SIZE, value_parser = parse_positive)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long = "grid", default_value_t = DEFAULT_GRID_SIDE)]
    pub grid_side: usize,
    /// `auto` (5000 image / 2000 text) or a count.
    #[arg(long = "perms", default_value = "auto", value_parser = parse_permutations)]
    pub permutations: Permutations,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = PenaltyArg::L1)]
    pub penalty: PenaltyArg,
    #[arg(long, value_enum, default_value_t = PermuteModeArg::Replacement)]
    pub permute_mode: PermuteModeArg,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ImageFormat::Png)]
    pub format: ImageFormat,
    /// Fraction of max |e| below which elements stay unhighlighted.
    #[arg(long, default_value_t = 0.2)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PermuteModeArg {
    Replacement,
    Shuffle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Ppm => "ppm",
        }
    }
}

impl clap::ValueEnum for AttributionMethod {
    fn value_variants<'a>() -> &'a [Self] {
        &[AttributionMethod::Rle, AttributionMethod::Random]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected a positive count, got `{s}`")),
    }
}

fn parse_permutations(s: &str) -> Result<Permutations, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Permutations::Auto);
    }
    match s.parse::<usize>() {
        Ok(m) if m >= 1 => Ok(Permutations::Fixed(m)),
        _ => Err(format!("expected `auto` or a positive count, got `{s}`")),
    }
}

impl ExplainArgs {
    pub fn to_config(&self, target_class: usize) -> Result<ExplainConfig, CliError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(CliError::Usage(format!("--lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(ExplainConfig {
            target_class,
            grid_side: self.grid_side,
            permutations: self.permutations,
            seed: self.seed,
            permute_mode: match self.permute_mode {
                PermuteModeArg::Replacement => PermuteMode::Replacement,
                PermuteModeArg::Shuffle => PermuteMode::Shuffle,
            },
            surrogate: SurrogateSettings {
                lambda: self.lambda,
                penalty: match self.penalty {
                    PenaltyArg::L1 => Penalty::L1,
                    PenaltyArg::L2 => Penalty::L2,
                },
                ..SurrogateSettings::default()
            },
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("malformed explanation document: {0}")]
    Document(String),
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> Self {
        CliError::Explain(e.into())
    }
}

fn model_exit_code(e: &ModelError) -> u8 {
    match e {
        ModelError::SpawnFailed { .. } => 9,
        ModelError::HandshakeTimeout(_) => 10,
        ModelError::ModelUnavailable(_) => 11,
        ModelError::ProtocolError(_) => 12,
        ModelError::ScoreNotFinite { .. } => 13,
        ModelError::InvalidInput(_) | ModelError::InvalidSpec { .. } => 14,
    }
}

fn explain_exit_code(e: &ExplainError) -> u8 {
    match e {
        ExplainError::Decompose(_) => 5,
        ExplainError::Perturb(_) => 6,
        ExplainError::Surrogate(_) => 7,
        ExplainError::Model(m) => model_exit_code(m),
        ExplainError::InsufficientPermutations(_)
        | ExplainError::KOutOfRange { .. }
        | ExplainError::ModalityMismatch { .. }
        | ExplainError::InvalidMatrix(_) => 8,
    }
}

impl CliError {
    /// Process exit status; the table is printed by `rle --help`.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Image(_) => 4,
            CliError::Explain(e) => explain_exit_code(e),
            CliError::Model(e) => model_exit_code(e),
            CliError::Eval(EvalError::Model(e)) => model_exit_code(e),
            CliError::Eval(EvalError::Explain(e)) => explain_exit_code(e),
            CliError::Eval(_) => 15,
            CliError::Render(_) => 16,
            CliError::Document(_) => 17,
        }
    }
}

/// Files written and a short report for stdout.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub written: Vec<PathBuf>,
    pub report: String,
}

pub fn open_model(spec: &str, batch_size: usize) -> Result<ModelHandle, CliError> {
    let handle = if let Some(builtin) = spec.strip_prefix("builtin:") {
        parse_builtin(builtin)?
    } else if let Some(command) = spec.strip_prefix("bridge:") {
        spawn_bridge(command, handshake_timeout_from_env())?
    } else {
        return Err(CliError::Usage(format!(
            "--model must start with builtin: or bridge:, got `{spec}`"
        )));
    };
    Ok(handle.with_batch_size(batch_size))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })
}

fn write_file(path: PathBuf, contents: &[u8], out: &mut RunOutput) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    out.written.push(path);
    Ok(())
}

fn save_image(img: &ImageBuffer, path: PathBuf, out: &mut RunOutput) -> Result<(), CliError> {
    img.save(&path)?;
    out.written.push(path);
    Ok(())
}

fn write_figures(
    explanation: &Explanation,
    args: &OutputArgs,
    out: &mut RunOutput,
) -> Result<(), CliError> {
    let style = RenderStyle {
        threshold: args.threshold,
        ..RenderStyle::default()
    };
    let decomp = &explanation.decomposition;
    let rel = &explanation.relational;
    match decomp.modality() {
        Modality::Image => {
            let figs = render::render_image_explanation(rel, decomp, &style)?;
            let ext = args.format.extension();
            save_image(&figs.overlay, args.out.join(format!("local.{ext}")), out)?;
            save_image(&figs.heatmap, args.out.join(format!("relations.{ext}")), out)?;
        }
        Modality::Text => {
            let figs = render::render_text_explanation(rel, decomp, &style)?;
            write_file(args.out.join("explanation.html"), figs.html.as_bytes(), out)?;
            write_file(args.out.join("explanation.ansi"), figs.ansi.as_bytes(), out)?;
            out.report.push_str(&figs.ansi);
        }
    }
    Ok(())
}

fn run_explain(
    input: RawInput,
    model: &ModelArgs,
    explain_args: &ExplainArgs,
    output: &OutputArgs,
) -> Result<RunOutput, CliError> {
    let config = explain_args.to_config(model.target_class)?;
    let mut handle = open_model(&model.model, model.batch_size)?;
    let explanation = explain::explain(&mut handle, &input, &config)?;
    let doc = ExplanationDocument::new(&explanation, &config, &handle.describe());

    let mut out = RunOutput::default();
    create_dir(&output.out)?;
    write_file(output.out.join("explanation.json"), doc.to_json().as_bytes(), &mut out)?;
    write_figures(&explanation, output, &mut out)?;
    let top = explanation.relational.top_pairs(1)?[0];
    out.report.push_str(&format!(
        "n={} m={} top pair ({}, {}) weight {:.6}\n",
        doc.n, doc.settings.m, top.u, top.v, top.weight
    ));
    Ok(out)
}

fn corpus_images(corpus: Option<&Path>, images: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = images.to_vec();
    if let Some(dir) = corpus {
        let io_err = |source| CliError::Io {
            path: dir.to_owned(),
            source,
        };
        let mut found = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if matches!(ext.as_deref(), Some("png" | "ppm" | "pnm")) {
                found.push(path);
            }
        }
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(CliError::Usage("no images to evaluate".into()));
    }
    Ok(paths)
}

#[allow(clippy::too_many_arguments)]
fn run_eval_irof(
    corpus: Option<&Path>,
    images: &[PathBuf],
    methods: &[AttributionMethod],
    runs: u64,
    slic: SlicParams,
    model: &ModelArgs,
    explain_args: &ExplainArgs,
    out_dir: &Path,
) -> Result<RunOutput, CliError> {
    if methods.is_empty() || runs == 0 {
        return Err(CliError::Usage("need at least one method and one run".into()));
    }
    let config = explain_args.to_config(model.target_class)?;
    let paths = corpus_images(corpus, images)?;
    let mut handle = open_model(&model.model, model.batch_size)?;

    let mut records = Vec::new();
    for path in &paths {
        let image = ImageBuffer::open(path)?;
        let image_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let seg = slic_segment(&image, &slic)?;
        for &method in methods {
            for r in 0..runs {
                let seed = explain_args.seed.wrapping_add(r);
                let report = eval::evaluate_method(&mut handle, &image, &seg, method, &config, seed)?;
                records.push(IrofRecord {
                    image_id: image_id.clone(),
                    segment_count: report.segment_count,
                    curve: report.curve,
                    irof: report.irof,
                    method,
                    seed,
                });
            }
        }
    }

    let summaries = eval::summarize(&records);
    let mut jsonl = String::new();
    for r in &records {
        jsonl.push_str(&serde_json::to_string(r).expect("records serialize"));
        jsonl.push('\n');
    }
    let mut report = String::new();
    for s in &summaries {
        jsonl.push_str(&serde_json::to_string(s).expect("summaries serialize"));
        jsonl.push('\n');
        report.push_str(&format!(
            "{}: {:.3}±{:.3} (n={})\n",
            s.method.as_str(),
            s.mean,
            s.std,
            s.count
        ));
    }
    let mut out = RunOutput::default();
    create_dir(out_dir)?;
    write_file(out_dir.join("irof.jsonl"), jsonl.as_bytes(), &mut out)?;
    out.report = report;
    Ok(out)
}

fn run_render(
    explanation: &Path,
    image: Option<&Path>,
    output: &OutputArgs,
) -> Result<RunOutput, CliError> {
    let text = fs::read_to_string(explanation).map_err(|source| CliError::Io {
        path: explanation.to_owned(),
        source,
    })?;
    let doc: ExplanationDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Document(e.to_string()))?;
    let relational: RelationalExplanation = doc.relational()?;
    let decomposition = match doc.modality {
        Modality::Image => {
            let path = image.ok_or_else(|| CliError::Usage("--image is required for image explanations".into()))?;
            let grid = doc
                .settings
                .grid_side
                .ok_or_else(|| CliError::Document("image explanation without grid_side".into()))?;
            partition_image(&ImageBuffer::open(path)?, grid)?
        }
        Modality::Text => {
            let tokens: Vec<&str> = doc
                .elements
                .iter()
                .map(|e| match e {
                    ElementDoc::Token(t) => Ok(t.as_str()),
                    ElementDoc::Patch(_) => Err(CliError::Document("patch element in text explanation".into())),
                })
                .collect::<Result<_, _>>()?;
            tokenize_text(&tokens.join(" "))?
        }
    };
    if decomposition.len() != doc.n {
        return Err(CliError::Document(format!(
            "document has {} elements, input decomposes into {}",
            doc.n,
            decomposition.len()
        )));
    }
    let mut out = RunOutput::default();
    create_dir(&output.out)?;
    write_figures(
        &Explanation {
            decomposition,
            relational,
        },
        output,
        &mut out,
    )?;
    Ok(out)
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    match &config.command {
        Command::ExplainImage {
            image,
            model,
            explain,
            output,
        } => run_explain(RawInput::Image(ImageBuffer::open(image)?), model, explain, output),
        Command::ExplainText {
            text,
            model,
            explain,
            output,
        } => run_explain(RawInput::Text(text.clone()), model, explain, output),
        Command::EvalIrof {
            corpus,
            image,
            methods,
            runs,
            slic_k,
            slic_compactness,
            slic_iters,
            model,
            explain,
            out,
        } => run_eval_irof(
            corpus.as_deref(),
            image,
            methods,
            *runs,
            SlicParams {
                k: *slic_k,
                compactness: *slic_compactness,
                iters: *slic_iters,
            },
            model,
            explain,
            out,
        ),
        Command::Render {
            explanation,
            image,
            output,
        } => run_render(explanation, image.as_deref(), output),
    }
}
