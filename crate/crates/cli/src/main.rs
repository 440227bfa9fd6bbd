use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hmtm::diagnostics::ChibOptions;
use hmtm::{degree_correct, ErrorKind, HmtmConfig, IndexBase, NullKind, Scenario};
use hmtm_cli::commands::{self, ExportWhat};
use hmtm_cli::config::parse_override;
use hmtm_cli::error::AtStage;
use hmtm_cli::files::{load_corrected, load_input, write_json, Loaded, TraceFile};
use hmtm_cli::{run_pipeline, CliError, CliResult, RunConfig, Stage};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hmtm", version, about = "Change-point detection in longitudinal networks")]
struct Cli {
    /// Print a machine-readable JSON summary instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a block network with planted changes.
    Generate {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Block unit size; scenarios use blocks of n and 2n nodes.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long = "T", default_value_t = 40)]
        layers: usize,
        #[arg(long, default_value_t = 0.5)]
        p_in: f64,
        #[arg(long, default_value_t = 0.05)]
        p_out: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subtract a per-layer null model from a raw tensor.
    Correct {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long = "null", default_value = "eigen", value_parser = parse_null)]
        null: NullKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sampler for one break count.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// Correction applied when the input is a raw tensor.
        #[arg(long = "null", default_value = "eigen", value_parser = parse_null)]
        null: NullKind,
        #[arg(long, default_value_t = 1)]
        breaks: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        #[arg(long, default_value_t = 1000)]
        mcmc: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "normal", value_parser = parse_error)]
        error: ErrorKind,
        #[arg(long)]
        intercept: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnose and rank fitted models.
    Compare {
        /// Trace files, one per candidate model.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// The data the traces were fitted to; needed for the marginal likelihood.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long = "null", default_value = "eigen", value_parser = parse_null)]
        null: NullKind,
        #[arg(long)]
        skip_marglik: bool,
        #[arg(long)]
        reduced_mcmc: Option<usize>,
        /// Write the JSON report here and the text report next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot-ready CSVs from a trace.
    Export {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum)]
        what: ExportWhat,
        /// Number of k-means clusters for the latent positions.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set seed=3`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct InputArgs {
    /// Tensor JSON, corrected tensor JSON, or an `i,j,t,value` edge list.
    #[arg(long)]
    input: PathBuf,
    /// Index base of an edge list (0 or 1).
    #[arg(long, default_value_t = 0)]
    index_base: u8,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    n_layers: Option<usize>,
}

impl InputArgs {
    fn base(&self) -> CliResult<IndexBase> {
        match self.index_base {
            0 => Ok(IndexBase::Zero),
            1 => Ok(IndexBase::One),
            b => Err(CliError::new(Stage::Config, format!("index base must be 0 or 1, got {b}"))),
        }
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: hmtm::HmtmError| e.to_string())
}

fn parse_null(s: &str) -> Result<NullKind, String> {
    s.parse().map_err(|e: hmtm::HmtmError| e.to_string())
}

fn parse_error(s: &str) -> Result<ErrorKind, String> {
    s.parse().map_err(|e: hmtm::HmtmError| e.to_string())
}

fn paths(ps: &[PathBuf]) -> Value {
    json!(ps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

/// Runs a subcommand and returns (JSON summary, text summary).
fn run(command: Command) -> CliResult<(Value, String)> {
    match command {
        Command::Generate { scenario, n, layers, p_in, p_out, seed, out } => {
            let y = commands::generate(scenario, n, layers, p_in, p_out, seed)?;
            write_json(&out, &y.to_dump())?;
            let text = format!("wrote {} ({} nodes, {} layers)", out.display(), y.n_nodes(), y.n_layers());
            Ok((json!({"out": out, "n_nodes": y.n_nodes(), "n_layers": y.n_layers()}), text))
        }
        Command::Correct { input, null, out } => {
            let y = match load_input(&input.input, input.base()?, input.n_nodes, input.n_layers)? {
                Loaded::Raw(y) => y,
                Loaded::Corrected(_) => return Err(CliError::new(Stage::Input, "input is already corrected")),
            };
            let b = degree_correct(&y, null).at(Stage::Correct)?;
            write_json(&out, &b.to_dump())?;
            Ok((json!({"out": out, "correction": null}), format!("wrote {}", out.display())))
        }
        Command::Fit {
            input,
            null,
            breaks,
            rank,
            burnin,
            mcmc,
            thin,
            seed,
            error,
            intercept,
            out,
        } => {
            let b = load_corrected(&input.input, input.base()?, input.n_nodes, input.n_layers, null)?;
            let mut config = HmtmConfig::new(breaks, rank).with_run(burnin, mcmc, thin).with_seed(seed);
            config.error_kind = error;
            config.with_intercept = intercept;
            config.validate(b.n_nodes(), b.n_layers()).at(Stage::Config)?;
            let trace = commands::fit(&b, &config)?;
            write_json(&out, &trace)?;
            let s = &trace.summary;
            let breaks_text: Vec<String> = s.breakpoints.iter().map(|x| format!("{:.1} (sd {:.2})", x.mean, x.sd)).collect();
            let text = format!(
                "wrote {}: {} draws, WAIC {:.1}, breaks [{}]",
                out.display(),
                s.n_draws,
                s.waic,
                breaks_text.join(", ")
            );
            Ok((json!({"out": out, "summary": s}), text))
        }
        Command::Compare { traces, data, null, skip_marglik, reduced_mcmc, out } => {
            let files = traces.iter().map(|p| TraceFile::read(p)).collect::<CliResult<Vec<_>>>()?;
            let b = match (&data, skip_marglik) {
                (Some(p), _) => Some(load_corrected(p, IndexBase::Zero, None, None, null)?),
                (None, true) => None,
                (None, false) => {
                    return Err(CliError::new(Stage::Config, "--data is required unless --skip-marglik is given"))
                }
            };
            let chib = ChibOptions {
                reduced_mcmc,
                ..ChibOptions::default()
            };
            let report = commands::compare(&files, b.as_ref(), (!skip_marglik).then_some(&chib))?;
            let text = commands::render_text(&report);
            if let Some(out) = &out {
                write_json(out, &report)?;
                std::fs::write(out.with_extension("txt"), &text).at(Stage::Io)?;
            }
            Ok((serde_json::to_value(&report).at(Stage::Io)?, text.trim_end().to_string()))
        }
        Command::Export { trace, what, k, restarts, out } => {
            let file = TraceFile::read(&trace)?;
            let written = commands::export(&file, what, k, restarts, &out)?;
            let text = written.iter().map(|p| format!("wrote {}", p.display())).collect::<Vec<_>>().join("\n");
            Ok((json!({"files": paths(&written)}), text))
        }
        Command::Pipeline { config, set, out_dir } => {
            let mut overrides = set.iter().map(|s| parse_override(s)).collect::<CliResult<Vec<_>>>()?;
            if let Some(dir) = out_dir {
                overrides.push(("out_dir".into(), dir.display().to_string()));
            }
            let cfg = RunConfig::load(&config, &overrides)?;
            let outcome = run_pipeline(&cfg)?;
            let mut text = String::new();
            if let Some(r) = &outcome.report {
                text.push_str(&commands::render_text(r));
            }
            text.push_str(&format!(
                "manifest: {}",
                Path::new(&outcome.out_dir).join("manifest.json").display()
            ));
            Ok((json!({"out_dir": outcome.out_dir, "manifest": outcome.manifest, "report": outcome.report}), text))
        }
    }
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_mode = cli.json;
    match run(cli.command) {
        Ok((value, text)) => {
            if json_mode {
                emit(&serde_json::to_string_pretty(&value).expect("JSON values serialize"));
            } else if !text.is_empty() {
                emit(&text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if json_mode {
                emit(&json!({"error": e.message, "stage": e.stage}).to_string());
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
