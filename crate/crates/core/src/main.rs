use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use able2rank::aggregate::BtlParams;
use able2rank::analogy::{ProportionMeasure, DEFAULT_EPSILON};
use able2rank::dataset::{load_with_schema, FeatureSchema, RankingInstance};
use able2rank::error::{Error, ErrorCategory, Result};
use able2rank::eval::{run_experiment, ExperimentConfig, GridConfig};
use able2rank::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "able2rank", version, about = "Analogy-based object ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select parameters on training rankings and rank a test set.
    Rank(Box<RankArgs>),
    /// Check the numeric kernels against known values.
    Selftest,
}

#[derive(clap::Args)]
struct RankArgs {
    /// Training ranking (CSV, best object first); repeat for several.
    #[arg(long = "train", required = true)]
    train: Vec<PathBuf>,

    /// Feature schema of the training files.
    #[arg(long)]
    schema: PathBuf,

    /// Test ranking (CSV, best object first).
    #[arg(long)]
    test: PathBuf,

    /// Schema of the test file, if different from --schema.
    #[arg(long)]
    test_schema: Option<PathBuf>,

    /// Candidate proportion measures, e.g. `A,A-strict,G,MM,AE,AE-graded:eps=0.2`.
    #[arg(long, value_delimiter = ',', default_value = "A,A-strict,G,MM,AE,AE-graded")]
    measures: Vec<String>,

    /// Candidate numbers of supporting training pairs.
    #[arg(long, value_delimiter = ',', default_value = "10,15,20")]
    ks: Vec<usize>,

    /// Threshold of the approximate-equality measures.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value_t = 2)]
    folds: usize,

    #[arg(long, default_value_t = 5)]
    repeats: usize,

    /// BTL convergence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,

    /// Pseudo-count added to every comparison count.
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,

    /// SVM-Rank loss obtained elsewhere, copied into the report.
    #[arg(long)]
    svm: Option<f64>,

    /// Write the CSV report here.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the preprocessing decisions (key=value lines) here.
    #[arg(long)]
    dump_preprocess: Option<PathBuf>,

    /// Write the selected supporting training pairs of the final run here.
    #[arg(long)]
    dump_support: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, env = "ABLE2RANK_THREADS")]
    threads: Option<usize>,

    /// Print the cross-validation table.
    #[arg(short, long)]
    verbose: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn measures(args: &RankArgs) -> Result<Vec<ProportionMeasure>> {
    args.measures
        .iter()
        .map(|s| ProportionMeasure::parse_with_epsilon(s.trim(), args.epsilon))
        .collect()
}

fn rank(args: RankArgs) -> Result<()> {
    let schema = Arc::new(FeatureSchema::from_file(&args.schema)?);
    let train: Vec<RankingInstance> = args
        .train
        .iter()
        .map(|p| load_with_schema(p, schema.clone()))
        .collect::<Result<_>>()?;
    let test_schema = match &args.test_schema {
        Some(p) => Arc::new(FeatureSchema::from_file(p)?),
        None => schema,
    };
    let test = load_with_schema(&args.test, test_schema)?;

    let config = ExperimentConfig {
        grid: GridConfig {
            measures: measures(&args)?,
            ks: args.ks.clone(),
            folds: args.folds,
            repeats: args.repeats,
            seed: args.seed,
            btl: BtlParams {
                tol: args.tol,
                max_iter: args.max_iter,
                smoothing: args.smoothing,
            },
            shuffle_queries: true,
        },
        svm_loss: args.svm,
        keep_support: args.dump_support.is_some(),
    };

    let report = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_experiment(&train, &test, &config))?,
        None => run_experiment(&train, &test, &config)?,
    };

    if args.verbose {
        for cell in &report.cv_table {
            println!("cv {:<12} k={:<4} loss={:.4}", cell.measure.to_string(), cell.k, cell.mean_loss);
        }
    }
    print!("{report}");

    if let Some(path) = &args.out {
        let mut w = create(path)?;
        report.write_csv(&mut w)?;
        w.flush().map_err(io_error(path))?;
    }
    if let Some(path) = &args.dump_preprocess {
        let mut w = create(path)?;
        write!(w, "{}{}", report.train_preprocess, report.test_preprocess).map_err(io_error(path))?;
        w.flush().map_err(io_error(path))?;
    }
    if let (Some(path), Some(support)) = (&args.dump_support, &report.support) {
        let mut w = create(path)?;
        support.write_csv(&mut w).map_err(io_error(path))?;
        w.flush().map_err(io_error(path))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Io => 3,
        ErrorCategory::Parse => 4,
        ErrorCategory::Validation => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Selftest => {
            let report = run_selftest();
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Rank(args) => match rank(*args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
    }
}
