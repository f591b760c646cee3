use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use stt_core::io::{load_tube_csv, parse_scenario, save_json, Scenario};
use stt_core::pipeline::{compare, run_closed_loop, synthesize, write_run, write_synthesis, RunMetadata};
use stt_core::stt::{smoothness_check, verify_tube};
use stt_core::SttError;

const OK: u8 = 0;
const INVALID: u8 = 2;
const GUARANTEE: u8 = 3;
const RUNTIME: u8 = 4;

/// Smooth spatiotemporal tubes for prescribed-time reach-avoid-stay control.
#[derive(Parser)]
#[command(name = "stt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan detours, integrate the tube and verify it.
    Synthesize(Common),
    /// Synthesize, then run the closed loop.
    Simulate(Common),
    /// Verify a tube CSV against the scenario's task.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Tube CSV to check (defaults to <out>/tube.csv).
        #[arg(long)]
        tube: Option<PathBuf>,
    },
    /// Control effort of the smooth tube against the reconstructed abrupt one.
    Compare(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file.
    #[arg(value_name = "SCENARIO", conflicts_with_all = ["scenario", "batch"])]
    path: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Run every *.scenario file in a directory, in parallel.
    #[arg(long, value_name = "DIR")]
    batch: Option<PathBuf>,
    /// Output directory (overrides the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disturbance seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step of the closed loop (overrides the file).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stay_horizon: Option<f64>,
}

fn exit_code(e: &SttError) -> u8 {
    match e {
        SttError::TubeViolation { .. } => GUARANTEE,
        SttError::Io(_) | SttError::Csv(_) | SttError::SynthesisFailure { .. } | SttError::EmptyTrace => RUNTIME,
        _ => INVALID,
    }
}

fn load(path: &Path, c: &Common, batch: bool) -> Result<Scenario, SttError> {
    let mut sc = parse_scenario(path)?;
    if let Some(s) = c.seed {
        sc.disturbance.seed = s;
    }
    if let Some(dt) = c.dt {
        if !(dt > 0.0) {
            return Err(SttError::Config(vec![stt_core::error::FieldError::new("--dt", "must be positive")]));
        }
        sc.sim.dt = dt;
        sc.compare_dt = dt;
    }
    if let Some(h) = c.stay_horizon {
        if !(h >= 0.0) {
            return Err(SttError::Config(vec![stt_core::error::FieldError::new("--stay-horizon", "must be non-negative")]));
        }
        sc.sim.stay_horizon = h;
    }
    if let Some(out) = &c.out {
        sc.output_dir = if batch { out.join(&sc.name) } else { out.clone() };
    }
    Ok(sc)
}

fn run_one(cmd: &Command, path: &Path, batch: bool) -> Result<u8, SttError> {
    let (common, tube_path) = match cmd {
        Command::Synthesize(c) | Command::Simulate(c) | Command::Compare(c) => (c, None),
        Command::Verify { common, tube } => (common, tube.clone()),
    };
    let sc = load(path, common, batch)?;
    let out = sc.output_dir.clone();
    match cmd {
        Command::Synthesize(_) => {
            let syn = synthesize(&sc)?;
            write_synthesis(&out, &syn)?;
            let r = &syn.report;
            println!(
                "{}: {} detour(s), tube {} ({} samples), smoothness flags {}",
                sc.name,
                syn.plans.len(),
                if r.verification.pass() { "verified" } else { "FAILED verification" },
                r.verification.samples,
                r.smoothness.flagged_count
            );
            Ok(if r.pass() { OK } else { GUARANTEE })
        }
        Command::Simulate(_) => {
            let syn = synthesize(&sc)?;
            write_synthesis(&out, &syn)?;
            let trace = run_closed_loop(&sc, &syn, &syn.tube, &sc.sim)?;
            let meta = RunMetadata::new(&sc, &trace);
            write_run(&out, &trace, &meta)?;
            let f = &meta.flags;
            println!(
                "{}: reached={} safe={} contained={} stayed={} energy={:.6} peak={:.6}",
                sc.name, f.reached, f.safe, f.contained, f.stayed, meta.effort.energy, meta.effort.peak
            );
            if let Some(fail) = &meta.failure {
                eprintln!("{}: run failed at t = {}: {}", sc.name, fail.t, fail.reason);
            }
            Ok(if meta.pass() && syn.report.pass() { OK } else { GUARANTEE })
        }
        Command::Verify { .. } => {
            let tube_path = tube_path.unwrap_or_else(|| out.join("tube.csv"));
            let tube = load_tube_csv(&tube_path)?;
            let verification = verify_tube(&tube, &sc.task)?;
            let smoothness = smoothness_check(&tube);
            std::fs::create_dir_all(&out)?;
            save_json(
                &serde_json::json!({ "scenario": sc.name, "tube": tube_path, "verification": verification, "smoothness": smoothness }),
                &out.join("verification.json"),
            )?;
            let names = [
                ("initial containment", verification.starts_in_initial.pass),
                ("target containment", verification.ends_in_target.pass),
                ("obstacle avoidance", verification.avoids_unsafe.pass),
                ("ordering", verification.well_ordered.pass),
                ("smoothness", smoothness.pass()),
            ];
            for (name, ok) in names {
                println!("{}: {name}: {}", sc.name, if ok { "pass" } else { "FAIL" });
            }
            Ok(if verification.pass() && smoothness.pass() { OK } else { GUARANTEE })
        }
        Command::Compare(_) => {
            let syn = synthesize(&sc)?;
            let cmp = compare(&sc, &syn)?;
            std::fs::create_dir_all(&out)?;
            save_json(&cmp, &out.join("comparison.json"))?;
            println!(
                "{}: energy ratio {:.6}, peak ratio {:.6}, l1 ratio {:.6} (smooth / {})",
                sc.name, cmp.energy_ratio, cmp.peak_ratio, cmp.l1_ratio, cmp.baseline_label
            );
            Ok(if cmp.smooth_wins() { OK } else { GUARANTEE })
        }
    }
}

fn report(path: &Path, r: Result<u8, SttError>) -> u8 {
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Synthesize(c) | Command::Simulate(c) | Command::Compare(c) => c,
        Command::Verify { common, .. } => common,
    };
    if let Some(dir) = &common.batch {
        let mut files: Vec<PathBuf> = match std::fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "scenario"))
                .collect(),
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(RUNTIME);
            }
        };
        files.sort();
        if files.is_empty() {
            eprintln!("{}: no .scenario files", dir.display());
            return ExitCode::from(INVALID);
        }
        let worst = files
            .par_iter()
            .map(|p| report(p, run_one(&cli.command, p, true)))
            .collect::<Vec<_>>()
            .into_iter()
            .max()
            .unwrap_or(OK);
        return ExitCode::from(worst);
    }
    let Some(path) = common.path.clone().or_else(|| common.scenario.clone()) else {
        eprintln!("no scenario given (pass a path, --scenario or --batch)");
        return ExitCode::from(INVALID);
    };
    ExitCode::from(report(&path, run_one(&cli.command, &path, false)))
}
