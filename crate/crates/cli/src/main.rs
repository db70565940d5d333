//! `salq`: choose salient weights, quantize the rest, compare heuristics.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use salient_quant::saliency::Method;

const DEFAULTS: &str = "Defaults: bits=4, clip=2.5, rank=8, damping=0.01, seed=0, \
budgets=1,16,64,256,1024,4096 (sweep configs). Exit codes: 0 success, 1 invalid \
input, 2 runtime failure.";

#[derive(Parser, Debug)]
#[command(name = "salq", version, about = "Mixed-precision salient weight protection for 4-bit layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Protect the top-k weights of one layer and quantize the rest.
    #[command(after_help = DEFAULTS)]
    Quantize(QuantizeArgs),
    /// Compare the selections of two or more heuristics by IoU.
    #[command(after_help = DEFAULTS)]
    Overlap(OverlapArgs),
    /// Run every (layer, method, budget) cell of a JSON config.
    #[command(after_help = DEFAULTS)]
    Sweep(SweepArgs),
    /// Plot a sweep.csv as an SVG chart and print a summary table.
    #[command(after_help = DEFAULTS)]
    Report(ReportArgs),
}

/// Grid and scorer settings shared by `quantize` and `overlap`.
#[derive(Args, Debug, Clone)]
struct Knobs {
    /// Calibration activations (NPY, samples × d_in); needed by awq and spqr.
    #[arg(long, value_name = "PATH")]
    calib: Option<PathBuf>,
    /// Bit width of the quantized residual, 2..=8.
    #[arg(long, default_value_t = 4)]
    bits: u8,
    /// Clip threshold in population standard deviations of the layer.
    #[arg(long, default_value_t = 2.5)]
    clip: f32,
    /// Rank of the principal structure used by svd.
    #[arg(long, default_value_t = 8)]
    rank: usize,
    /// Relative Hessian damping used by spqr.
    #[arg(long, default_value_t = 0.01)]
    damping: f64,
    /// Seed for random selection and the randomized SVD sketch.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    /// Layer weights (NPY, float32, d_out × d_in).
    #[arg(long, value_name = "PATH")]
    weights: PathBuf,
    /// One of random, awq, spqr, svd, none.
    #[arg(long, value_name = "NAME", value_parser = parse_method)]
    method: Method,
    /// Number of weights kept at full precision.
    #[arg(long, value_name = "K")]
    budget: usize,
    /// Output directory for codes.npy, salient.npy, meta.json and the mask.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args, Debug)]
struct OverlapArgs {
    /// Layer weights (NPY, float32, d_out × d_in).
    #[arg(long, value_name = "PATH")]
    weights: PathBuf,
    /// Comma-separated heuristics to compare, e.g. svd,spqr.
    #[arg(long, value_name = "A,B", value_delimiter = ',', required = true, value_parser = parse_method)]
    methods: Vec<Method>,
    /// Budget, or comma-separated budgets.
    #[arg(long, value_name = "K", value_delimiter = ',', required = true)]
    budget: Vec<usize>,
    /// Also write overlap.csv into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep config; absent fields take the defaults below.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory for sweep.csv, overlap.csv and report.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Fill the wall_ms column of sweep.csv (makes it run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// sweep.csv produced by `salq sweep`.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// SVG file to write [default: the input path with an .svg extension].
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Column to plot: frob_rel or out_rel.
    #[arg(long, default_value = "frob_rel", value_parser = ["frob_rel", "out_rel"])]
    metric: String,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version go to stdout and are not failures
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Quantize(a) => commands::quantize(a),
        Command::Overlap(a) => commands::overlap(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("salq: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
