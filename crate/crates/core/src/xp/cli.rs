//! Command-line front end: `dproj <experiment> --config FILE` and
//! `dproj models list|show`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{Experiment, ExperimentConfig};
use super::experiments::run_experiment;
use super::table::write_outputs;
use super::XpError;
use crate::models::{zoo_model, zoo_names};

#[derive(Debug, Parser)]
#[command(name = "dproj", version, about = "Dissipation-projected dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance to the effective evolution as T grows.
    Scaling(RunArgs),
    /// Eigenvalues of the projected evolution map as T grows.
    Spectrum(RunArgs),
    /// Projection strings against their closed-form limit.
    Holonomy(RunArgs),
    /// Classification of candidate perturbations.
    Robustness(RunArgs),
    /// Time series of one density-matrix element.
    Trace(RunArgs),
    /// First-order error bound and projector derivative check.
    Kato(RunArgs),
    /// Built-in models.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
}

#[derive(Debug, Subcommand)]
enum ModelsAction {
    /// Names of the built-in models.
    List,
    /// Full JSON description of one model.
    Show { name: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; the JSON sidecar goes next to it. Overrides
    /// `output_path` in the config. Without either, CSV goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also report the largest distance over a 16-point grid on [0, T].
    #[arg(long)]
    sup_grid: bool,
    /// Seed for randomized steps (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute eigenvalue tolerance for the kernel (overrides the config).
    #[arg(long)]
    tol_kernel: Option<f64>,
    /// No progress messages on stderr (errors are still reported).
    #[arg(long)]
    quiet: bool,
}

impl Command {
    fn experiment(&self) -> Option<(Experiment, &RunArgs)> {
        match self {
            Command::Scaling(a) => Some((Experiment::Scaling, a)),
            Command::Spectrum(a) => Some((Experiment::Spectrum, a)),
            Command::Holonomy(a) => Some((Experiment::Holonomy, a)),
            Command::Robustness(a) => Some((Experiment::Robustness, a)),
            Command::Trace(a) => Some((Experiment::Trace, a)),
            Command::Kato(a) => Some((Experiment::Kato, a)),
            Command::Models { .. } => None,
        }
    }
}

/// Runs the CLI against the process's standard streams and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit output streams and returns the exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for numerical or
/// output failures.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "dproj: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), XpError> {
    let Some((experiment, args)) = command.experiment() else {
        let Command::Models { action } = command else {
            unreachable!("every other command is an experiment")
        };
        return models(action, out);
    };
    let cfg = load_config(experiment, args)?;
    let result = run_experiment(&cfg)?;
    let csv = result.to_csv()?;
    let model_name = cfg.model.resolve()?.name;
    match args.output.clone().or_else(|| cfg.output_path.clone()) {
        Some(path) => {
            let sidecar = result.sidecar(&model_name, cfg.seed, &cfg.tolerances);
            let side = write_outputs(&path, &csv, &sidecar)?;
            if !args.quiet {
                let _ = writeln!(
                    err,
                    "wrote {} ({} rows) and {}",
                    path.display(),
                    result.rows.len(),
                    side.display()
                );
                if let Some(fit) = &result.fit {
                    let _ = writeln!(err, "fit slope {} over {} points", fit.slope, fit.points_used);
                }
            }
        }
        None => out.write_all(&csv).map_err(XpError::output)?,
    }
    Ok(())
}

fn load_config(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, XpError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| XpError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if cfg.experiment != experiment {
        return Err(XpError::Config(format!(
            "config describes a {} experiment, not {}",
            cfg.experiment.name(),
            experiment.name()
        )));
    }
    cfg.sup_grid |= args.sup_grid;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = args.tol_kernel {
        cfg.tolerances.kernel = Some(tol);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn models(action: &ModelsAction, out: &mut dyn Write) -> Result<(), XpError> {
    match action {
        ModelsAction::List => {
            for name in zoo_names() {
                writeln!(out, "{name}").map_err(XpError::output)?;
            }
        }
        ModelsAction::Show { name } => {
            let spec = zoo_model(name).map_err(|e| XpError::Config(e.to_string()))?;
            let mut text = serde_json::to_string_pretty(&spec).map_err(XpError::output)?;
            text.push('\n');
            out.write_all(text.as_bytes()).map_err(XpError::output)?;
        }
    }
    Ok(())
}
