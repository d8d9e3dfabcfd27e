//! `bcs`: train, apply and evaluate learned block compressed sensing models.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration or spec mismatch,
//! 3 data error, 4 numeric abort during training.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcs_core::pipeline::{SweepTable, DEFAULT_PATCH_COUNT};
use bcs_core::{
    evaluate, load_image_dir, load_model, load_pgm, reconstruct, save_model, save_pgm, sense,
    sweep, time_reconstruction, train, ArchSpec, Error, MeasurementSet, SweepAxis, TrainConfig,
};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use log::info;

#[derive(Parser, Debug)]
#[command(
    name = "bcs",
    version,
    about = "Block compressed sensing with a learned sensing matrix"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train a model on patches sampled from a directory of PGM images.
    Train(TrainArgs),
    /// Measure an image with a model's sensing layer.
    Sense(SenseArgs),
    /// Reconstruct an image from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Report PSNR / SSIM of sense + reconstruct over a directory of images.
    Evaluate(EvaluateArgs),
    /// Train and evaluate one model per value of a single hyperparameter.
    Sweep(SweepArgs),
    /// Median wall-clock time of in-memory sense + reconstruct.
    Time(TimeArgs),
}

#[derive(Args, Debug, Clone)]
struct ArchArgs {
    #[arg(long, default_value_t = 16)]
    block_size: usize,
    #[arg(long, default_value_t = 0.25)]
    rate: f64,
    /// Number of ReLU reconstruction layers (K).
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Width multiplier of the reconstruction layers (T).
    #[arg(long, default_value_t = 8)]
    redundancy: usize,
    /// Freeze the sensing-layer bias at zero.
    #[arg(long)]
    linear_sensing: bool,
}

#[derive(Args, Debug, Clone)]
struct OptimArgs {
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_PATCH_COUNT)]
    patches: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Flat key=value file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss history (CSV); defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Save the model to `--out` every N epochs while training.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    optim: OptimArgs,
}

#[derive(Args, Debug)]
struct SenseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Input PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Output measurement file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Input measurement file.
    #[arg(long)]
    input: PathBuf,
    /// Output PGM image.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Directory of PGM test images.
    #[arg(long)]
    images: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write the report here (JSON if the extension is .json, else CSV).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    images: PathBuf,
    /// block_size, redundancy, layers or rate.
    #[arg(long)]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Also write the table here as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    arch: ArchArgs,
    #[command(flatten)]
    optim: OptimArgs,
}

#[derive(Args, Debug)]
struct TimeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Input PGM image.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSpec(_) | Error::InvalidConfig(_) | Error::SpecMismatch { .. } => 2,
            Error::NonFiniteGradient { .. } | Error::NonFiniteLoss { .. } => 4,
            Error::DimensionMismatch { .. }
            | Error::UnsupportedFormat(_)
            | Error::CorruptHeader(_)
            | Error::Truncated { .. }
            | Error::VersionMismatch { .. }
            | Error::Data(_)
            | Error::Io(_) => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: format!("cannot write output: {e}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn train_config(arch: &ArchArgs, optim: &OptimArgs) -> bcs_core::Result<TrainConfig> {
    let spec = ArchSpec::new(arch.block_size, arch.rate, arch.layers, arch.redundancy)?
        .with_linear_sensing(arch.linear_sensing);
    let mut cfg = TrainConfig::new(spec);
    cfg.epochs = optim.epochs;
    cfg.batch_size = optim.batch;
    cfg.learning_rate = optim.lr;
    cfg.patch_count = optim.patches;
    cfg.seed = optim.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn default_history_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".history.csv");
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> bcs_core::Result<()> {
    fs::write(path, contents).map_err(Error::from)
}

fn cmd_train(a: TrainArgs, out: &mut impl Write) -> CmdResult {
    let mut cfg = train_config(&a.arch, &a.optim)?;
    cfg.corpus = Some(a.corpus.clone());
    if let Some(n) = a.checkpoint_every {
        cfg.checkpoint_every = Some(n);
        cfg.checkpoint_path = Some(a.out.clone());
    }
    cfg.validate()?;
    info!("training {} on {}", cfg.spec, a.corpus.display());
    let (model, history) = train(&cfg)?;
    save_model(&model, &a.out)?;
    let history_path = a.history.unwrap_or_else(|| default_history_path(&a.out));
    write_file(&history_path, history.to_csv())?;
    writeln!(out, "model={}", a.out.display())?;
    writeln!(out, "history={}", history_path.display())?;
    writeln!(
        out,
        "final_loss={:e}",
        history.epoch_losses.last().copied().unwrap_or(f64::NAN)
    )?;
    writeln!(out, "sha256={}", history.model_checksum)?;
    Ok(())
}

fn cmd_sense(a: SenseArgs, out: &mut impl Write) -> CmdResult {
    let model = load_model(&a.model)?;
    let image = load_pgm(&a.input)?;
    let m = sense(&model, &image)?;
    m.save(&a.out)?;
    writeln!(out, "{} blocks={}", m.describe(), m.block_count())?;
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs, out: &mut impl Write) -> CmdResult {
    let model = load_model(&a.model)?;
    let m = MeasurementSet::load(&a.input)?;
    let image = reconstruct(&model, &m)?;
    save_pgm(&image, &a.out)?;
    writeln!(out, "{} -> {}", m.describe(), a.out.display())?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut impl Write) -> CmdResult {
    let model = load_model(&a.model)?;
    let images = load_image_dir(&a.images)?;
    let report = evaluate(&model, &images)?;
    let json = || serde_json::to_string_pretty(&report.to_json()).expect("report is valid JSON");
    match a.format {
        Format::Csv => write!(out, "{}", report.to_csv())?,
        Format::Json => writeln!(out, "{}", json())?,
    }
    if let Some(path) = a.report {
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let text = if is_json {
            json() + "\n"
        } else {
            report.to_csv()
        };
        write_file(&path, text)?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut impl Write) -> CmdResult {
    let axis: SweepAxis = a.axis.parse()?;
    let mut cfg = train_config(&a.arch, &a.optim)?;
    cfg.corpus = Some(a.corpus.clone());
    let corpus: Vec<_> = load_image_dir(&a.corpus)?
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    let tests = load_image_dir(&a.images)?;

    let mut report = match &a.report {
        Some(p) => Some(fs::File::create(p).map_err(Error::from)?),
        None => None,
    };
    let header = SweepTable::csv_header(axis);
    write!(out, "{header}")?;
    out.flush()?;
    if let Some(f) = report.as_mut() {
        f.write_all(header.as_bytes())?;
    }
    let mut io_err = None;
    let result = sweep(&cfg, &corpus, axis, &a.values, &tests, |row| {
        let line = SweepTable::csv_row(row);
        let mut emit = || -> io::Result<()> {
            write!(out, "{line}")?;
            out.flush()?;
            if let Some(f) = report.as_mut() {
                f.write_all(line.as_bytes())?;
                f.flush()?;
            }
            Ok(())
        };
        if let Err(e) = emit() {
            io_err.get_or_insert(e);
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    result?;
    Ok(())
}

fn cmd_time(a: TimeArgs, out: &mut impl Write) -> CmdResult {
    let model = load_model(&a.model)?;
    let image = load_pgm(&a.input)?;
    info!("timing sense + reconstruct in memory (block extraction and assembly included, file I/O excluded)");
    let timing = time_reconstruction(&model, &image, a.reps)?;
    writeln!(out, "image={}x{}", image.width(), image.height())?;
    writeln!(out, "spec={}", model.spec())?;
    writeln!(out, "reps={}", timing.samples.len())?;
    let samples: Vec<String> = timing.samples.iter().map(|s| format!("{s:.6}")).collect();
    writeln!(out, "samples_s={}", samples.join(","))?;
    writeln!(out, "median_s={:.6}", timing.median())?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Cmd::Train(a) => cmd_train(a, &mut out),
        Cmd::Sense(a) => cmd_sense(a, &mut out),
        Cmd::Reconstruct(a) => cmd_reconstruct(a, &mut out),
        Cmd::Evaluate(a) => cmd_evaluate(a, &mut out),
        Cmd::Sweep(a) => cmd_sweep(a, &mut out),
        Cmd::Time(a) => cmd_time(a, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let command = Cli::command().args_override_self(true);
    let args = match config::expand_args(&command, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match command
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
