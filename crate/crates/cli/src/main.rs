use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dialect_core::decompose;
use dialect_core::ingest::{
    aggregate_counts, invert_frequent_messages, load_pattern_counts, run_harness, save_matrix,
    write_pattern_counts_with, write_sparse_json, HarnessConfig,
};
use dialect_core::model::{synthesize_matrix, MixtureSpec};
use dialect_core::report::{
    decompose_report, dialect_reports, hasse_dot, oracle_verdict, pattern_table, Annotations,
    OutputFormat, SortOrder, DEFAULT_MIN_COUNT,
};

#[derive(Parser)]
#[command(
    name = "dialects",
    version,
    about = "Infer file format dialects from parser message patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => OutputFormat::Text,
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sort {
    Discovery,
    Count,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured parsers over files and write the message matrix.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        /// Files or directories (searched recursively). Repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Matrix destination; `.csv` writes dense CSV, anything else sparse
        /// JSON. Sparse JSON goes to stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Invert messages seen in more than this fraction of files
        /// (defaults to the config's `inversion_threshold`).
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        no_inversion: bool,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Pattern counts, most common first.
    Patterns {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
        min_count: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Greedy monotonic decomposition reported as dialects.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
        min_count: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Sort::Discovery)]
        sort: Sort,
        /// JSON object mapping comma-joined required messages to text.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Hasse diagram of the observed patterns in DOT.
    Hasse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample a synthetic corpus from a mixture spec.
    Synth {
        /// Mixture spec JSON.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n_files: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write pattern counts instead of the matrix.
        #[arg(long)]
        counts: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the greedy decomposition with every small decomposition.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        /// Largest decomposition enumerated (default: total count).
        #[arg(long)]
        max_terms: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

fn emit(output: Option<&Path>, data: &str) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, data).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn collect_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("reading directory {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out)?;
            } else {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, &mut files)?;
        } else if input.exists() {
            files.push(input.clone());
        } else {
            bail!("no such file or directory: {}", input.display());
        }
    }
    Ok(files)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            config,
            inputs,
            output,
            threshold,
            no_inversion,
            workers,
        } => {
            let config = HarnessConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let files = collect_files(&inputs)?;
            let mut matrix = run_harness(&config, &files, workers)?;
            if let Some(failures) = matrix.provenance().get("execution_failures") {
                let n = failures.as_array().map_or(0, Vec::len);
                eprintln!("warning: {n} parser execution(s) failed or timed out; see provenance");
            }
            if !no_inversion {
                let threshold = threshold.unwrap_or(config.inversion_threshold);
                let (inverted, names) = invert_frequent_messages(&matrix, threshold)?;
                if !names.is_empty() {
                    eprintln!("inverted: {}", names.join(", "));
                }
                matrix = inverted;
            }
            match output {
                Some(path) => save_matrix(&matrix, &path)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => emit(None, &write_sparse_json(&matrix))?,
            }
        }
        Command::Patterns {
            input,
            min_count,
            format,
            output,
        } => {
            let (_, f) = load_counts(&input)?;
            emit(
                output.as_deref(),
                &pattern_table(&f, min_count).render(format.into())?,
            )?;
        }
        Command::Decompose {
            input,
            min_count,
            format,
            sort,
            annotations,
            output,
        } => {
            let (_, f) = load_counts(&input)?;
            let annotations = match annotations {
                Some(path) => Annotations::from_json_str(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => Annotations::default(),
            };
            let sort = match sort {
                Sort::Discovery => SortOrder::Discovery,
                Sort::Count => SortOrder::Count,
            };
            let d = decompose(&f);
            let report = decompose_report(&d, min_count, sort, &annotations);
            let all = dialect_reports(&d, &annotations);
            for key in annotations.unused(&all) {
                eprintln!("warning: annotation `{key}` matches no dialect");
            }
            if matches!(format, Format::Csv) {
                eprintln!("{}", report.summary_line());
            }
            emit(output.as_deref(), &report.render(format.into())?)?;
        }
        Command::Hasse { input, output } => {
            let (_, f) = load_counts(&input)?;
            emit(output.as_deref(), &hasse_dot(&f))?;
        }
        Command::Synth {
            input,
            n_files,
            seed,
            counts,
            output,
        } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let spec = MixtureSpec::from_json_str(&text)?;
            let matrix = synthesize_matrix(&spec, n_files, seed);
            if counts {
                let (_, f) = aggregate_counts(&matrix);
                emit(
                    output.as_deref(),
                    &write_pattern_counts_with(&f, matrix.provenance().clone()),
                )?;
            } else {
                match output {
                    Some(path) => save_matrix(&matrix, &path)
                        .with_context(|| format!("writing {}", path.display()))?,
                    None => emit(None, &write_sparse_json(&matrix))?,
                }
            }
        }
        Command::Oracle {
            input,
            max_terms,
            format,
            output,
        } => {
            let (_, f) = load_counts(&input)?;
            let verdict = oracle_verdict(&f, max_terms).map_err(|e| match e {
                dialect_core::DecompError::TooLarge { .. } => anyhow::anyhow!(
                    "{e}; the oracle enumerates every decomposition and is meant for desk-scale instances"
                ),
                other => other.into(),
            })?;
            let text = match format {
                Format::Json => verdict.to_json(),
                Format::Text => verdict.to_text(),
                Format::Csv => bail!("the oracle verdict has no CSV form"),
            };
            emit(output.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn load_counts(
    path: &Path,
) -> Result<(
    std::sync::Arc<dialect_core::PatternPoset>,
    dialect_core::CountFunction<u64>,
)> {
    load_pattern_counts(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
