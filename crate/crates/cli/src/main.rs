//! `deident`: privacy measurement and de-identification for person-specific
//! attribute tables, with adversarial-perturbation and image-obfuscation
//! companions.
//!
//! Every subcommand emits JSON with a `provenance` header recording the tool
//! version, the seed actually used (when randomness is involved), and the
//! resolved parameters, so any output can be reproduced exactly.
//!
//! Exit codes: 0 on success, 1 for bad arguments or malformed/invalid input
//! content, 2 for file-system errors.

mod commands;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
enum CliError {
    /// Bad flags, malformed content, or validation failures: exit 1.
    Usage(anyhow::Error),
    /// Missing or unreadable/unwritable files: exit 2.
    Io(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "deident",
    version,
    about = "Measure and reduce re-identification risk in attribute tables; \
             craft adversarial perturbations; obfuscate and score images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a validated table from an annotation file and an identity list
    Ingest(IngestArgs),
    /// Report k-anonymity, entropy l-diversity and t-closeness of a table
    Report(ReportArgs),
    /// Obfuscate a table and report privacy before and after
    Anonymize(AnonymizeArgs),
    /// Simulate populations of linkage adversaries before/after obfuscation
    Attack(AttackArgs),
    /// Search for a universal adversarial perturbation against an affine classifier
    Perturb(PerturbArgs),
    /// Obfuscate images and measure their fidelity
    #[command(subcommand)]
    Img(ImgCommand),
}

#[derive(Args)]
struct IngestArgs {
    /// Annotation file: row count, attribute names, then `image_id ±1 ...` rows
    #[arg(long)]
    attrs: PathBuf,
    /// Identity list: one `image_id identity_id` pair per line
    #[arg(long)]
    identities: PathBuf,
    /// Where to write the table JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Table JSON produced by `ingest` or `anonymize`
    #[arg(long)]
    table: PathBuf,
    /// Comma-separated quasi-identifier attributes
    #[arg(long)]
    quasi: String,
    /// Comma-separated sensitive attributes (may be empty for k-only reports)
    #[arg(long, default_value = "")]
    sensitive: String,
    /// Ground distance for t-closeness: binary, uniform, or ordinal
    #[arg(long, default_value = "binary")]
    ground_distance: String,
    /// Output style: json or text
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Table JSON to obfuscate
    #[arg(long)]
    table: PathBuf,
    /// Obfuscator config JSON: {"t": .., "epsilon": ..|"inf",
    /// "quasi_policy": .., "reference": {attr: p1, ..}}
    #[arg(long)]
    config: PathBuf,
    /// Seed for randomized response; generated and recorded if omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for table.json, trace.jsonl and the two reports
    #[arg(long)]
    out_dir: PathBuf,
    /// Quasi-identifiers for the before/after reports
    /// (default: every non-sensitive attribute)
    #[arg(long)]
    quasi: Option<String>,
    /// Sensitive attributes for the before/after reports
    #[arg(long, default_value = "")]
    sensitive: String,
    /// Ground distance for t-closeness in the reports
    #[arg(long, default_value = "binary")]
    ground_distance: String,
}

#[derive(Args)]
struct AttackArgs {
    /// Original table JSON
    #[arg(long)]
    before: PathBuf,
    /// Obfuscated table JSON (may equal --before to probe a single table)
    #[arg(long)]
    after: PathBuf,
    /// Adversary knowledge subsets: attributes comma-separated, subsets
    /// semicolon-separated, e.g. "Male,Black_Hair;Big_Nose"
    #[arg(long)]
    subsets: String,
    /// Adversaries simulated per subset
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Where adversaries observed their targets: original or obfuscated
    #[arg(long, default_value = "original")]
    view: String,
    /// Seed for target sampling; generated and recorded if omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Write the summary here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Classifier JSON: {"labels": [..], "weights": [[..],..], "biases": [..]}
    #[arg(long)]
    classifier: PathBuf,
    /// Points JSON: an array of equal-length number arrays
    #[arg(long)]
    points: PathBuf,
    /// Radius of the norm ball the perturbation must stay inside
    #[arg(long)]
    xi: f64,
    /// Stop once at least (1 - delta) of the points are fooled
    #[arg(long)]
    delta: f64,
    /// Ball norm: l2 or linf
    #[arg(long, default_value = "l2")]
    norm: String,
    /// Boundary-crossing nudge applied to each step
    #[arg(long, default_value_t = 0.02)]
    overshoot: f64,
    /// Maximum passes over the points
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    /// Optional cap on each per-point update's norm
    #[arg(long)]
    step_cap: Option<f64>,
    /// Seed for the pass order; generated and recorded if omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ImgCommand {
    /// Apply blur, pixelate, or mask to a PGM/PPM image
    Obfuscate(ImgObfuscateArgs),
    /// PSNR, SSIM and multi-scale SSIM between two images
    Quality(ImgQualityArgs),
}

#[derive(Args)]
struct ImgObfuscateArgs {
    /// Input image (binary PGM or PPM, 8-bit)
    #[arg(long)]
    input: PathBuf,
    /// Output image path
    #[arg(long)]
    output: PathBuf,
    /// blur, pixelate, or mask
    #[arg(long)]
    method: String,
    /// Blur spread (blur only)
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Odd kernel size in pixels (blur only)
    #[arg(long, default_value_t = 5)]
    kernel: usize,
    /// Tile size in pixels (pixelate only)
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Rectangle `x,y,width,height` (mask only)
    #[arg(long)]
    rect: Option<String>,
    /// Fill color, one byte per channel, e.g. `0` or `255,0,0` (mask only)
    #[arg(long)]
    color: Option<String>,
}

#[derive(Args)]
struct ImgQualityArgs {
    /// Reference image
    #[arg(long)]
    reference: PathBuf,
    /// Image to score against the reference
    #[arg(long)]
    test: PathBuf,
    /// SSIM window size in pixels
    #[arg(long, default_value_t = 8)]
    window: usize,
    /// Number of scales for multi-scale SSIM
    #[arg(long, default_value_t = 1)]
    levels: usize,
    /// Comma-separated per-scale weights; defaults to 1.0 for one scale and
    /// the conventional five-scale weights for five
    #[arg(long)]
    weights: Option<String>,
    /// Write the scores here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Report(args) => commands::report(args),
        Command::Anonymize(args) => commands::anonymize(args),
        Command::Attack(args) => commands::attack(args),
        Command::Perturb(args) => commands::perturb(args),
        Command::Img(ImgCommand::Obfuscate(args)) => commands::img_obfuscate(args),
        Command::Img(ImgCommand::Quality(args)) => commands::img_quality(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
