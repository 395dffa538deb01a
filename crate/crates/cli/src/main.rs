//! Command-line front end: single scenario runs, the full study matrix, the
//! bias/SD sensitivity sweep, CSV/JSON export, and SVG figures.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime diagnostic.

mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use glosa_core::{
    baseline_trajectory, default_sweep_combos, default_sweep_levels, run_scenario,
    savings_proportion_surface, sensitivity_sweep, table_matrix, trajectory, ExperimentConfig,
    GradeDirection, RunResult, ScenarioKind, ScenarioSpec, SignalTiming, Trajectory,
};

#[derive(Parser)]
#[command(name = "glosa", version, about = "Minimum-fuel intersection approach simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute scenarios or sweeps and write results
    Run(RunArgs),
    /// Check every configuration invariant without running
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Uninformed,
    Det,
    Stoch,
    Matrix,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GradeArg {
    Down,
    Up,
}

impl GradeArg {
    fn direction(self) -> GradeDirection {
        match self {
            GradeArg::Down => GradeDirection::Downhill,
            GradeArg::Up => GradeDirection::Uphill,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    /// 5 slices x 8 bias x 8 SD levels = 320 cells
    Default,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (TOML); defaults are built in
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario kind for a single cell, or the full study matrix
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Switching time (time to green), s
    #[arg(long)]
    ttg: Option<f64>,
    #[arg(long, value_enum)]
    grade: Option<GradeArg>,
    /// Initial speed, m/s
    #[arg(long)]
    v0: Option<f64>,
    /// Prediction bias, s (stochastic scenarios)
    #[arg(long)]
    bias: Option<f64>,
    /// Prediction standard deviation, s (stochastic scenarios)
    #[arg(long)]
    sd: Option<f64>,
    /// Monte Carlo replications per stochastic cell
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run a bias/SD sensitivity sweep instead of a scenario
    #[arg(long, value_enum)]
    sweep: Option<SweepArg>,
    /// Emit SVG figures next to the CSV/JSON outputs
    #[arg(long)]
    plots: bool,
    /// Output directory (default from the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-step planning traces
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (kind, message, code) = match self {
            CliError::Config(m) => ("config", m, 2),
            CliError::Runtime(m) => ("runtime", m, 3),
        };
        eprintln!(
            "{}",
            serde_json::json!({ "error": { "kind": kind, "message": message } })
        );
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let problems = config.validate();
    println!("# effective configuration\n{}", config.to_toml());
    if problems.is_empty() {
        println!("configuration valid");
        Ok(())
    } else {
        for p in &problems {
            println!("violation: {p}");
        }
        Err(CliError::Config(problems.join("; ")))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if args.verbose {
        config.verbose = true;
    }
    config
        .ensure_valid()
        .map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Config(format!("output directory: {e}")))?;

    if args.sweep.is_some() {
        run_sweep(&args, &config)
    } else if args.scenario == Some(ScenarioArg::Matrix) {
        run_matrix(&args, &config)
    } else {
        run_single(&args, &config)
    }
}

fn run_sweep(args: &RunArgs, config: &ExperimentConfig) -> Result<(), CliError> {
    let combos = default_sweep_combos();
    let levels = default_sweep_levels();
    let reps = args.reps.unwrap_or(50);
    let v0 = args.v0.unwrap_or(17.88);
    let results = sensitivity_sweep(
        &combos,
        &levels,
        &levels,
        v0,
        reps,
        config.master_seed,
        &config.optimizer,
        &config.baseline,
        &config.vehicle,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let proportions =
        savings_proportion_surface(&results, &config.optimizer, &config.baseline, &config.vehicle)
            .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut csv = Vec::new();
    glosa_core::report::write_results_csv(&mut csv, &results)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&config.out_dir.join("sweep.csv"), &csv)?;
    write_file(
        &config.out_dir.join("summary.json"),
        glosa_core::report::summary_json(config.master_seed, &results, Some(&proportions))
            .as_bytes(),
    )?;

    if args.plots {
        for (ci, combo) in combos.iter().enumerate() {
            let slice: Vec<&RunResult> =
                results[ci * 64..(ci + 1) * 64].iter().collect();
            let tag = format!("{}_ttg{}", combo.grade.label(), combo.ttg_s);
            let fuel_svg = plot::fuel_heatmap(
                &format!("mean fuel [mL], {} TTG={} s", combo.grade.label(), combo.ttg_s),
                &levels,
                &levels,
                &slice,
            );
            write_file(&config.out_dir.join(format!("sensitivity_{tag}.svg")), fuel_svg.as_bytes())?;
            let prop_slice: Vec<&glosa_core::ProportionCell> =
                proportions[ci * 64..(ci + 1) * 64].iter().collect();
            let prop_svg = plot::proportion_heatmap(
                &format!("savings proportion, {} TTG={} s", combo.grade.label(), combo.ttg_s),
                &levels,
                &levels,
                &prop_slice,
            );
            write_file(&config.out_dir.join(format!("proportion_{tag}.svg")), prop_svg.as_bytes())?;
        }
    }
    println!(
        "sweep complete: {} cells x {reps} replications -> {}",
        results.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn run_matrix(args: &RunArgs, config: &ExperimentConfig) -> Result<(), CliError> {
    let specs = if config.scenarios.is_empty() {
        table_matrix(
            args.v0.unwrap_or(17.88),
            args.bias.unwrap_or(2.0),
            args.sd.unwrap_or(2.0),
            args.reps.unwrap_or(50),
            config.master_seed,
        )
    } else {
        config.scenarios.clone()
    };
    let mut results = Vec::with_capacity(specs.len());
    for spec in &specs {
        results.push(
            run_scenario(spec, &config.optimizer, &config.baseline, &config.vehicle)
                .map_err(|e| CliError::Runtime(e.to_string()))?,
        );
    }

    let mut csv = Vec::new();
    glosa_core::report::write_results_csv(&mut csv, &results)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&config.out_dir.join("results.csv"), &csv)?;
    write_file(
        &config.out_dir.join("summary.json"),
        glosa_core::report::summary_json(config.master_seed, &results, None).as_bytes(),
    )?;

    if args.plots {
        // grouped savings bars per (grade, ttg)
        let mut groups: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        for r in &results {
            if r.spec.kind == ScenarioKind::Uninformed {
                continue;
            }
            let group = format!("{}/ttg{}", r.spec.grade.label(), r.spec.ttg_s);
            let series = (
                r.spec.kind.label().to_string(),
                r.savings_vs_baseline_pct.unwrap_or(0.0),
            );
            match groups.iter_mut().find(|(g, _)| *g == group) {
                Some((_, bars)) => bars.push(series),
                None => groups.push((group, vec![series])),
            }
        }
        let svg = plot::savings_bars("fuel savings vs uninformed driver", &groups);
        write_file(&config.out_dir.join("savings.svg"), svg.as_bytes())?;
    }
    println!("matrix complete: {} cells -> {}", results.len(), config.out_dir.display());
    Ok(())
}

fn run_single(args: &RunArgs, config: &ExperimentConfig) -> Result<(), CliError> {
    let kind = match args.scenario {
        Some(ScenarioArg::Uninformed) => ScenarioKind::Uninformed,
        Some(ScenarioArg::Stoch) => ScenarioKind::Stochastic,
        _ => ScenarioKind::Deterministic,
    };
    let stochastic = kind == ScenarioKind::Stochastic;
    let spec = ScenarioSpec {
        kind,
        grade: args.grade.unwrap_or(GradeArg::Down).direction(),
        initial_speed_mps: args.v0.unwrap_or(17.88),
        ttg_s: args.ttg.unwrap_or(15.0),
        bias_s: if stochastic { args.bias.unwrap_or(0.0) } else { 0.0 },
        sd_s: if stochastic { args.sd.unwrap_or(0.0) } else { 0.0 },
        replications: args.reps.unwrap_or(1),
        seed: config.master_seed,
    };
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    let result = run_scenario(&spec, &config.optimizer, &config.baseline, &config.vehicle)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    // export the first replication plus the uninformed reference
    let base = baseline_trajectory(
        &SignalTiming::red_until(spec.ttg_s),
        spec.initial_speed_mps,
        &config.baseline,
        &config.optimizer,
        &config.vehicle,
        &spec.road(),
    );
    let run_id = result.spec.cell_id();
    let mut runs: Vec<(String, &Trajectory)> =
        vec![(run_id.clone(), &result.trajectories[0])];
    if spec.kind != ScenarioKind::Uninformed {
        runs.push((format!("uninformed_{}_ttg{}", spec.grade.label(), spec.ttg_s), &base));
    }
    let mut csv = Vec::new();
    trajectory::write_trajectories_csv(&mut csv, &runs)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&config.out_dir.join("trajectories.csv"), &csv)?;
    write_file(
        &config.out_dir.join("summary.json"),
        glosa_core::report::summary_json(config.master_seed, &[result.clone()], None).as_bytes(),
    )?;

    if config.verbose {
        write_file(
            &config.out_dir.join("trace.csv"),
            trace_csv(&result.trajectories[0]).as_bytes(),
        )?;
    }
    if args.plots {
        let svg = plot::trajectory_panel(
            &format!("{} vs uninformed, TTG={} s", spec.kind.label(), spec.ttg_s),
            &runs,
            spec.ttg_s,
        );
        write_file(&config.out_dir.join("trajectory.svg"), svg.as_bytes())?;
    }
    println!(
        "run complete: {} ({} replications, mean fuel {:.4} L{}) -> {}",
        run_id,
        spec.replications,
        result.mean_fuel_l,
        result
            .savings_vs_baseline_pct
            .map(|s| format!(", savings {s:.1}%"))
            .unwrap_or_default(),
        config.out_dir.display()
    );
    Ok(())
}

/// Per-step planning trace: state, control, prediction, and the planner's
/// upstream/downstream fuel estimates for the chosen policy.
fn trace_csv(traj: &Trajectory) -> String {
    let mut out = String::from(
        "t,x,v,a,control_kind,control_value,forced,predicted_switch_s,upstream_cost_l,downstream_cost_l\n",
    );
    for s in &traj.steps {
        let (u, d) = s
            .planned_cost_l
            .map(|(u, d)| (u.to_string(), d.to_string()))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.state.time_s,
            s.state.position_m,
            s.state.speed_mps,
            s.state.accel_mps2,
            s.state.control.kind_str(),
            s.state.control.value(),
            s.forced_brake,
            s.predicted_switch_s.map(|p| p.to_string()).unwrap_or_default(),
            u,
            d
        );
    }
    out
}
