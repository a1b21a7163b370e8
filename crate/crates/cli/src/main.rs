use std::path::PathBuf;
use std::process::ExitCode;

use carpetslice::{parse_spec, run, RunError, RunOptions, Status};
use carpetslice_core::slicer::DEFAULT_NODE_BUDGET;
use clap::Parser;

/// Exact slicing and dimension experiments on self-affine carpets.
#[derive(Parser, Debug)]
#[command(name = "carpetslice", version)]
struct Args {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for the JSON report and CSV table.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Node budget for each exact cover count.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    budget: u64,
    /// Bits of precision for certified decimals.
    #[arg(long, default_value_t = 128)]
    precision: u32,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(w) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let opts = RunOptions { out_dir: args.out, budget: args.budget, precision: args.precision, seed: args.seed };
    let result = parse_spec(&args.spec).map_err(RunError::from).and_then(|s| run(&s, &opts).map(|o| (s, o)));
    match result {
        Ok((spec, outcome)) => {
            let verdict = match outcome.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "INFO",
            };
            let files: Vec<String> = outcome.artifacts.iter().map(|p| p.display().to_string()).collect();
            println!("{} {} -> {}", spec.kind.name(), verdict, files.join(", "));
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Resource { report: Some(p), .. } = &e {
                eprintln!("partial results written to {}", p.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
