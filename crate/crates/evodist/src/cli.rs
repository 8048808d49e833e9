//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, configuration, or i/o
//! problems, 2 when the solver itself fails to converge.

use crate::error::{Error, Result};
use crate::io::{load_config, snapshot_csv, summary_text, write_text};
use crate::model::{Convention, ModelParams};
use crate::oracle::{mms_convergence, MmsCase};
use crate::runner::{
    eps_sweep, experiment_preset, run_configured, RunResult, SweepResult, SWEEP_BC, SWEEP_EPS,
};
use crate::stepper::BcMode;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "evodist",
    version,
    about = "Finite-element solver for two-population evolutionary distribution systems"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run a configuration file and write snapshot.csv and summary.txt.
    Run {
        /// Path to a `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if absent).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a named experiment: 1 or 2 write a snapshot and summary,
    /// 3 runs the regularization sweep.
    Experiment {
        /// Experiment number (1, 2 or 3).
        number: usize,
        /// Output directory (created if absent).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a regularization sweep against the degenerate reference.
    Sweep {
        /// Comma-separated regularization strengths.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Comma-separated boundary variants (dirichlet, mixed).
        #[arg(long, value_delimiter = ',', required = true)]
        bc: Vec<String>,
        /// Base configuration file; defaults to the experiment 3 preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (created if absent).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the manufactured-solution convergence study and print the
    /// error table.
    Mms {
        /// Number of refinement levels (at least 2).
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

/// Parses `argv` and executes the selected action, translating every
/// outcome into a process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.action) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::PicardDiverged { .. }
        | Error::StationaryNotReached { .. }
        | Error::LinearSolveDiverged { .. } => 2,
        _ => 1,
    }
}

fn dispatch(action: Action) -> Result<()> {
    match action {
        Action::Run { config, out } => cmd_run(&config, &out),
        Action::Experiment { number, out } => cmd_experiment(number, &out),
        Action::Sweep { eps, bc, config, out } => cmd_sweep(&eps, &bc, config.as_deref(), &out),
        Action::Mms { levels } => cmd_mms(levels),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_result_files(out: &Path, stem: &str, result: &RunResult) -> Result<()> {
    let snapshot = out.join(format!("{stem}snapshot.csv"));
    write_text(&snapshot, &snapshot_csv(&result.mesh, &result.output.state))?;
    let summary = out.join(format!("{stem}summary.txt"));
    write_text(&summary, &summary_text(result))?;
    println!("wrote {}", snapshot.display());
    println!("wrote {}", summary.display());
    Ok(())
}

fn report_run(result: &RunResult) {
    println!(
        "finished: steps = {}, t = {}, picard total = {}, wall = {:.3}s",
        result.output.steps(),
        result.output.state.t,
        result.output.total_picard(),
        result.wall_time.as_secs_f64()
    );
}

fn cmd_run(config_path: &Path, out: &Path) -> Result<()> {
    let config = load_config(config_path)?;
    ensure_dir(out)?;
    let result = run_configured(&config)?;
    report_run(&result);
    write_result_files(out, "", &result)
}

fn cmd_experiment(number: usize, out: &Path) -> Result<()> {
    let config = experiment_preset(number)?;
    ensure_dir(out)?;
    if number == 3 {
        let sweep = eps_sweep(&config, &SWEEP_EPS, &SWEEP_BC)?;
        return write_sweep_files(out, &sweep);
    }
    let result = run_configured(&config)?;
    report_run(&result);
    write_result_files(out, &format!("experiment{number}_"), &result)
}

fn parse_bc_list(tokens: &[String]) -> Result<Vec<BcMode>> {
    tokens.iter().map(|t| t.parse()).collect()
}

fn bc_tag(bc: BcMode) -> &'static str {
    match bc {
        BcMode::Dirichlet => "dbc",
        BcMode::Mixed => "mbc",
    }
}

fn write_sweep_files(out: &Path, sweep: &SweepResult) -> Result<()> {
    let reference = out.join("exp3_reference.csv");
    write_text(
        &reference,
        &snapshot_csv(&sweep.reference.mesh, &sweep.reference.output.state),
    )?;
    println!("wrote {}", reference.display());

    let mut metrics = String::from("# eps bc global_linf interior_linf band_linf\n");
    for entry in &sweep.entries {
        let path = out.join(format!("exp3_eps{:e}_{}.csv", entry.eps, bc_tag(entry.bc)));
        write_text(&path, &snapshot_csv(&entry.result.mesh, &entry.result.output.state))?;
        println!("wrote {}", path.display());
        writeln!(
            metrics,
            "{:e} {} {:.6e} {:.6e} {:.6e}",
            entry.eps,
            entry.bc,
            entry.diff.global_linf,
            entry.diff.interior_linf,
            entry.diff.band_linf
        )
        .unwrap();
    }
    let metrics_path = out.join("exp3_metrics.txt");
    write_text(&metrics_path, &metrics)?;
    println!("wrote {}", metrics_path.display());
    Ok(())
}

fn cmd_sweep(eps: &[f64], bc: &[String], config: Option<&Path>, out: &Path) -> Result<()> {
    let base = match config {
        Some(path) => load_config(path)?,
        None => experiment_preset(3)?,
    };
    let bc_list = parse_bc_list(bc)?;
    ensure_dir(out)?;
    let sweep = eps_sweep(&base, eps, &bc_list)?;
    write_sweep_files(out, &sweep)
}

/// Parameter set the study runs with: equal diffusion, mild
/// regularization, the default competition model.
fn mms_study_params() -> ModelParams {
    ModelParams {
        c1: 0.1,
        c2: 0.1,
        eps: 0.05,
        alpha: [5.0, 4.0],
        beta: [[3.0, 2.0], [2.0, 2.0]],
        convention: Convention::Logistic,
    }
}

fn cmd_mms(levels: usize) -> Result<()> {
    let case = MmsCase::sine_mixed(mms_study_params())?;
    let table = mms_convergence(&case, levels)?;
    println!("transient sine study, mixed faces, {} levels:", levels);
    println!("{:>5} {:>10} {:>12} {:>14} {:>7}", "nx", "h", "tau", "l2_error", "rate");
    for level in &table {
        let rate = match level.rate {
            Some(r) => format!("{r:.3}"),
            None => "--".to_string(),
        };
        println!(
            "{:>5} {:>10.6} {:>12.4e} {:>14.6e} {:>7}",
            level.nx, level.h, level.tau, level.l2_error, rate
        );
    }

    let steady = MmsCase::linear_source(0.1, 0.2)?;
    let check = mms_convergence(&steady, 2)?;
    let worst = check.iter().map(|l| l.max_error).fold(0.0_f64, f64::max);
    println!("steady linear-source check: max nodal error = {worst:.3e}");
    Ok(())
}
