use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cluster_entropy::cli::{emit_figure_data, load_results, run_pipeline, Figure, PipelineConfig, PipelineError};
use cluster_entropy::series_io::{write_series_csv, NANOS_PER_SECOND};
use cluster_entropy::synth::GeneratorSpec;

#[derive(Parser)]
#[command(name = "cluster-entropy", version, about = "DMA cluster entropy and entropy-based portfolio weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full sweep described by a JSON config.
    Analyze { config: PathBuf },
    /// Emit a synthetic series in the sampled-series cache format.
    Synth {
        /// Generator spec: a JSON file path or an inline JSON object.
        spec: String,
        #[arg(long, default_value_t = 0)]
        start_ns: i64,
        #[arg(long, default_value_t = NANOS_PER_SECOND)]
        delta_ns: i64,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write plot-ready files from a finished run directory.
    Figures {
        run_dir: PathBuf,
        /// `entropy_curves`, `weights_vs_horizon` or `all`.
        #[arg(long, default_value = "all")]
        figure: String,
        /// Defaults to `<run_dir>/figures`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn synth(spec: &str, start_ns: i64, delta_ns: i64, out: Option<PathBuf>) -> Result<(), PipelineError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| PipelineError::Input(format!("{spec}: {e}")))?
    };
    let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    let series = spec
        .generate()
        .and_then(|s| s.retimed(start_ns, delta_ns))
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    match out {
        Some(path) => write_series_csv(std::io::BufWriter::new(std::fs::File::create(path)?), &series)?,
        None => write_series_csv(std::io::stdout().lock(), &series)?,
    }
    Ok(())
}

fn figures(run_dir: PathBuf, figure: &str, out: Option<PathBuf>) -> Result<(), PipelineError> {
    let which: Vec<Figure> = if figure == "all" { Figure::ALL.to_vec() } else { vec![figure.parse()?] };
    let results = load_results(&run_dir)?;
    let out = out.unwrap_or_else(|| run_dir.join("figures"));
    for f in which {
        for path in emit_figure_data(&results, f, &out)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { config } => PipelineConfig::from_path(&config).and_then(|c| {
            let outcome = run_pipeline(&c)?;
            eprintln!("wrote {} files to {} ({} warnings)", outcome.files.len(), outcome.output_dir.display(), outcome.warnings.len());
            Ok(())
        }),
        Command::Synth { spec, start_ns, delta_ns, out } => synth(&spec, start_ns, delta_ns, out),
        Command::Figures { run_dir, figure, out } => figures(run_dir, &figure, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
