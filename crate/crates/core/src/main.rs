use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cbf_transit::constraints::SoftminSet;
use cbf_transit::harness::{
    compare_modes, continuity_metric, emit_outputs, load_scenario, run, HarnessError, Mode, OutputOptions,
    Scenario, Termination,
};

#[derive(Parser)]
#[command(name = "cbf-transit", version, about = "Sequential reach-avoid simulation with smooth CBF task transitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Integration step [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time limit [s].
    #[arg(long)]
    tmax: Option<f64>,
    /// Restrict the composite softmin to barriers with positive weight.
    #[arg(long)]
    active_only_softmin: bool,
    /// Relax the reachability row instead of stopping when the QP is infeasible.
    #[arg(long)]
    slack_on_infeasible: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write the CSV, events and plots.
    Run {
        /// Scenario JSON file, or the name of a bundled scenario.
        scenario: String,
        #[arg(long, default_value = "smooth")]
        mode: Mode,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (default: out/<scenario>-<mode>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write measured QP solve times to the qp_us column.
        #[arg(long)]
        timing: bool,
    },
    /// Run both modes at dt and dt/2 and print the control-jump table.
    Compare {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write comparison.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled scenarios.
    List,
}

fn resolve(arg: &str) -> Result<Scenario, HarnessError> {
    if Path::new(arg).exists() || !Scenario::BUNDLED.contains(&arg) {
        load_scenario(arg)
    } else {
        Scenario::bundled(arg)
    }
}

fn apply(scenario: &mut Scenario, o: &Overrides) -> Result<(), HarnessError> {
    if let Some(dt) = o.dt {
        scenario.dt = dt;
    }
    if let Some(t) = o.tmax {
        scenario.t_max = t;
    }
    if o.active_only_softmin {
        scenario.softmin_set = SoftminSet::ActiveOnly;
    }
    if o.slack_on_infeasible {
        scenario.slack_on_infeasible = true;
    }
    scenario.validate()
}

fn exit_code(t: Termination) -> ExitCode {
    match t {
        Termination::Completed => ExitCode::SUCCESS,
        Termination::Infeasible => ExitCode::from(2),
        Termination::TimedOut => ExitCode::from(3),
    }
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::List => {
            for name in Scenario::BUNDLED {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { scenario, mode, overrides, out, timing } => {
            let mut s = resolve(&scenario)?;
            apply(&mut s, &overrides)?;
            let log = run(&s, mode)?;
            let report = continuity_metric(&log);
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(format!("{}-{mode}", s.name)));
            let paths = emit_outputs(&log, &report, &s, &out, OutputOptions { include_timing: timing })?;
            println!("scenario     {}", s.name);
            println!("mode         {mode}");
            println!("termination  {:?}", log.termination);
            println!("records      {}", log.len());
            println!("arrivals     {:?}", log.arrival_times());
            println!("max jump     {:.6}", report.max_jump);
            for (name, min) in s.safety_barriers.iter().zip(log.safety_minima()) {
                println!("min {:<8} {min:.6}", name.name);
            }
            println!("mean QP      {:.1} us", log.mean_qp_seconds() * 1e6);
            println!("output       {}", paths.trajectory_csv.parent().unwrap_or(&out).display());
            Ok(exit_code(log.termination))
        }
        Command::Compare { scenario, overrides, out } => {
            let mut s = resolve(&scenario)?;
            apply(&mut s, &overrides)?;
            let mut half = s.clone();
            half.dt /= 2.0;
            let logs = [
                run(&s, Mode::Discrete)?,
                run(&half, Mode::Discrete)?,
                run(&s, Mode::Smooth)?,
                run(&half, Mode::Smooth)?,
            ];
            let cmp = compare_modes(&logs.iter().collect::<Vec<_>>());
            print!("{}", cmp.to_table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
                let path = dir.join("comparison.json");
                let json = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
                std::fs::write(&path, json + "\n").map_err(|source| HarnessError::Io { path, source })?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
