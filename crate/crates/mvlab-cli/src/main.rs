//! Experiment orchestrator: runs named, reproducible experiments over the
//! mvlab library from a JSON config, writing CSV/JSON artifacts plus a run
//! manifest with the config hash, seed and wall time.

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mvlab::coupling::{build_distance_profile, simulate_coupling, CouplingOptions};
use mvlab::homogenize::{corrector_1d, non_commutativity_report, EffectiveDiffusion};
use mvlab::io::{write_atomic, write_frames, DensityDump};
use mvlab::particles::{
    fluctuation_modes, gibbs_sample, interaction_fluctuation_energy, msd_diffusivity,
    partition_function_small_n, simulate_msd_ensemble, GibbsOptions,
};
use mvlab::pde::{convergence_audit, evolve_mv};
use mvlab::special::bessel_i;
use mvlab::stationary::{
    amplitude_roots, bifurcation_csv, bifurcation_scan, critical_beta, solve_stationary,
};
use mvlab::{CosineSeries, DensityField, MvError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_STATISTICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "mvlab", about = "Mean-field particle laboratory on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file
    Run {
        config: PathBuf,
        /// Override config entries, e.g. --set beta=2.5 --set grid=256
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a named acceptance suite with hard tolerances
    Check { suite: String },
    /// Print the config schema
    Schema,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExperimentConfig {
    experiment: String,
    #[serde(default)]
    parameters: Map<String, Value>,
    output_dir: PathBuf,
}

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn f64(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| format!("parameter '{key}' must be a number")),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, String> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| format!("parameter '{key}' must be a nonnegative integer")),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, String> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| format!("parameter '{key}' must be a nonnegative integer")),
        }
    }
}

enum RunError {
    Validation(String),
    Numerical(String),
    Statistical(String),
}

impl From<MvError> for RunError {
    fn from(e: MvError) -> Self {
        match e {
            MvError::AcceptanceOutOfRange { .. } => RunError::Statistical(e.to_string()),
            MvError::InvalidParameter(_) | MvError::LengthMismatch { .. } => {
                RunError::Validation(e.to_string())
            }
            other => RunError::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("MVLAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        }
    }
    let outcome = match cli.command {
        Command::Run { config, overrides } => run_command(&config, &overrides),
        Command::Check { suite } => check_command(&suite),
        Command::Schema => {
            println!("{}", schema_json());
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(RunError::Statistical(msg)) => {
            eprintln!("statistical check failed: {msg}");
            ExitCode::from(EXIT_STATISTICAL)
        }
    }
}

fn schema_json() -> String {
    serde_json::to_string_pretty(&json!({
        "type": "object",
        "required": ["experiment", "output_dir"],
        "properties": {
            "experiment": {
                "type": "string",
                "enum": ["bifurcation", "evolve", "homogenize", "noncommute",
                         "fluctuations", "msd", "gibbs", "couple", "audit"]
            },
            "parameters": {
                "type": "object",
                "description": "experiment-specific numeric parameters",
                "properties": {
                    "beta": {"type": "number"},
                    "eta": {"type": "number"},
                    "amplitude": {"type": "number"},
                    "grid": {"type": "integer"},
                    "dt": {"type": "number"},
                    "t_final": {"type": "number"},
                    "n": {"type": "integer"},
                    "paths": {"type": "integer"},
                    "replicas": {"type": "integer"},
                    "samples": {"type": "integer"},
                    "thinning": {"type": "integer"},
                    "delta": {"type": "number"},
                    "seed": {"type": "integer"},
                    "beta_min": {"type": "number"},
                    "beta_max": {"type": "number"},
                    "steps": {"type": "integer"}
                }
            },
            "output_dir": {"type": "string"}
        }
    }))
    .expect("static schema serialises")
}

fn run_command(config_path: &Path, overrides: &[String]) -> Result<(), RunError> {
    let raw = std::fs::read_to_string(config_path)
        .map_err(|e| RunError::Validation(format!("cannot read config: {e}")))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&raw).map_err(|e| RunError::Validation(format!("bad config: {e}")))?;
    for ov in overrides {
        let (key, value) = ov
            .split_once('=')
            .ok_or_else(|| RunError::Validation(format!("override '{ov}' is not KEY=VALUE")))?;
        let parsed: Value = serde_json::from_str(value).unwrap_or(Value::String(value.into()));
        match key {
            "experiment" => {
                config.experiment = parsed
                    .as_str()
                    .ok_or_else(|| RunError::Validation("experiment must be a string".into()))?
                    .to_string()
            }
            "output_dir" => {
                config.output_dir = PathBuf::from(
                    parsed
                        .as_str()
                        .map(str::to_string)
                        .unwrap_or_else(|| value.to_string()),
                )
            }
            _ => {
                config.parameters.insert(key.to_string(), parsed);
            }
        }
    }
    run_experiment(&config)
}

fn run_experiment(config: &ExperimentConfig) -> Result<(), RunError> {
    let started = Instant::now();
    let out = &config.output_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| RunError::Validation(format!("cannot create output dir: {e}")))?;
    let p = Params(&config.parameters);
    let seed = p.u64("seed", 0).map_err(RunError::Validation)?;

    match config.experiment.as_str() {
        "bifurcation" => bifurcation_experiment(&p, out)?,
        "evolve" => evolve_experiment(&p, out)?,
        "homogenize" => homogenize_experiment(&p, out)?,
        "noncommute" => noncommute_experiment(&p, out)?,
        "fluctuations" => fluctuations_experiment(&p, out)?,
        "msd" => msd_experiment(&p, out)?,
        "gibbs" => gibbs_experiment(&p, out)?,
        "couple" => couple_experiment(&p, out)?,
        "audit" => audit_experiment(&p, out)?,
        other => {
            return Err(RunError::Validation(format!("unknown experiment '{other}'")));
        }
    }

    let canonical = serde_json::to_string(config).expect("config serialises");
    let hash: String = Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let manifest = json!({
        "experiment": config.experiment,
        "config": config,
        "config_sha256": hash,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    write_atomic(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)
            .expect("manifest serialises")
            .as_bytes(),
    )
    .map_err(|e| RunError::Numerical(e.to_string()))?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<(), RunError> {
    write_atomic(path, serde_json::to_string_pretty(value).expect("serialises").as_bytes())
        .map_err(|e| RunError::Numerical(e.to_string()))
}

fn potentials(p: &Params) -> Result<(CosineSeries, CosineSeries, f64), RunError> {
    let beta = p.f64("beta", 1.0).map_err(RunError::Validation)?;
    let eta = p.f64("eta", 0.0).map_err(RunError::Validation)?;
    if beta <= 0.0 {
        return Err(RunError::Validation("beta must be positive".into()));
    }
    Ok((CosineSeries::confinement(eta), CosineSeries::kuramoto(), beta))
}

fn bifurcation_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let eta = p.f64("eta", 0.0).map_err(RunError::Validation)?;
    let lo = p.f64("beta_min", 0.5).map_err(RunError::Validation)?;
    let hi = p.f64("beta_max", 4.0).map_err(RunError::Validation)?;
    let steps = p.usize("steps", 64).map_err(RunError::Validation)?;
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        return Err(RunError::Validation(
            "need 0 < beta_min < beta_max and steps >= 2".into(),
        ));
    }
    let grid: Vec<f64> = (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let rows = bifurcation_scan(&grid, eta);
    write_atomic(&out.join("bifurcation.csv"), bifurcation_csv(&rows).as_bytes())
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    write_json(
        &out.join("bifurcation.json"),
        &json!({ "eta": eta, "beta_c": critical_beta(eta) }),
    )
}

fn evolve_setup(p: &Params) -> Result<(DensityField, CosineSeries, CosineSeries, f64, f64, f64), RunError> {
    let (v, w, beta) = potentials(p)?;
    let grid = p.usize("grid", 128).map_err(RunError::Validation)?;
    let amp = p.f64("amplitude", 0.0).map_err(RunError::Validation)?;
    let nu0 = if amp == 0.0 {
        DensityField::uniform(grid)
    } else {
        DensityField::from_amplitude(amp, grid).map_err(RunError::from)?
    };
    let h = 1.0 / grid as f64;
    let dt = p
        .f64("dt", 0.2 * h * h * beta)
        .map_err(RunError::Validation)?;
    let t_final = p.f64("t_final", 10.0).map_err(RunError::Validation)?;
    Ok((nu0, v, w, beta, dt, t_final))
}

fn evolve_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let (nu0, v, w, beta, dt, t_final) = evolve_setup(p)?;
    let stride = ((t_final / dt) as usize / 200).max(1);
    let (final_nu, trace) = evolve_mv(&nu0, &v, &w, beta, dt, t_final, stride, None)?;
    write_atomic(&out.join("trace.csv"), trace.to_csv().as_bytes())
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    let dump = DensityDump::from_field(&final_nu);
    write_json(
        &out.join("final_density.json"),
        &serde_json::to_value(&dump).expect("dump serialises"),
    )
}

fn audit_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let (nu0, v, w, beta, dt, t_final) = evolve_setup(p)?;
    let stride = ((t_final / dt) as usize / 200).max(1);
    let (_, trace) = evolve_mv(&nu0, &v, &w, beta, dt, t_final, stride, None)?;
    let report = convergence_audit(&trace);
    write_json(
        &out.join("audit.json"),
        &json!({
            "monotone": report.monotone,
            "fitted_rate": report.fitted_rate,
            "algebraic_exponent": report.algebraic_exponent,
            "energy_dissipation_error": report.energy_dissipation_error,
        }),
    )
}

fn homogenize_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let beta = p.f64("beta", 1.0).map_err(RunError::Validation)?;
    let a = p.f64("amplitude", 1.0).map_err(RunError::Validation)?;
    let grid = p.usize("grid", 256).map_err(RunError::Validation)?;
    let nu = DensityField::from_amplitude(a, grid).map_err(RunError::from)?;
    let (corrector, diffusion) = corrector_1d(&nu, beta).map_err(RunError::from)?;
    let analytic = EffectiveDiffusion::analytic_bessel(a, beta).map_err(RunError::from)?;
    write_json(
        &out.join("homogenize.json"),
        &json!({
            "beta": beta,
            "amplitude": a,
            "diffusivity": diffusion.value,
            "lower_bound": diffusion.lower_bound,
            "upper_bound": diffusion.upper_bound,
            "analytic": analytic.value,
            "corrector_nodes": corrector.psi.len(),
        }),
    )
}

fn noncommute_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let eta = p.f64("eta", 0.5).map_err(RunError::Validation)?;
    let beta = p
        .f64("beta", critical_beta(eta) + 1.0)
        .map_err(RunError::Validation)?;
    let report = non_commutativity_report(eta, beta).map_err(RunError::from)?;
    write_json(
        &out.join("noncommute.json"),
        &serde_json::to_value(&report).expect("report serialises"),
    )
}

fn fluctuations_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let (v, w, beta) = potentials(p)?;
    let n = p.usize("n", 256).map_err(RunError::Validation)?;
    let samples = p.usize("samples", 20_000).map_err(RunError::Validation)?;
    let seed = p.u64("seed", 0).map_err(RunError::Validation)?;
    let opts = GibbsOptions {
        n_samples: samples,
        thinning: p.usize("thinning", 5).map_err(RunError::Validation)?,
        seed,
        ..Default::default()
    };
    let gibbs = gibbs_sample(n, &v, &w, beta, &opts).map_err(RunError::from)?;
    let eta = p.f64("eta", 0.0).map_err(RunError::Validation)?;
    let grid = p.usize("grid", 256).map_err(RunError::Validation)?;
    let reference = solve_stationary(&v, &w, beta, &DensityField::uniform(grid), None, 500)
        .map_err(RunError::from)?;
    let modes = fluctuation_modes(&gibbs.configs, &[1, -1, 2, -2], &reference.density);
    let (energy, energy_se) = interaction_fluctuation_energy(&gibbs.configs, &w, &reference.density);
    let mode_json: Vec<Value> = modes
        .iter()
        .map(|m| {
            json!({
                "mode": m.mode_index,
                "variance": m.variance,
                "stderr": m.stderr,
            })
        })
        .collect();
    write_json(
        &out.join("fluctuations.json"),
        &json!({
            "beta": beta,
            "eta": eta,
            "n": n,
            "acceptance": gibbs.acceptance,
            "modes": mode_json,
            "interaction_energy": energy,
            "interaction_energy_stderr": energy_se,
        }),
    )
}

fn msd_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let beta = p.f64("beta", 4.0).map_err(RunError::Validation)?;
    let a = p.f64("amplitude", 0.0).map_err(RunError::Validation)?;
    let paths = p.usize("paths", 1000).map_err(RunError::Validation)?;
    let dt = p.f64("dt", 1e-3).map_err(RunError::Validation)?;
    let t_final = p.f64("t_final", 50.0).map_err(RunError::Validation)?;
    let seed = p.u64("seed", 0).map_err(RunError::Validation)?;
    let grid = p.usize("grid", 256).map_err(RunError::Validation)?;
    let v = CosineSeries::zero();
    let w = CosineSeries::kuramoto();
    let nu = if a == 0.0 {
        None
    } else {
        Some(DensityField::from_amplitude(a, grid).map_err(RunError::from)?)
    };
    let curve = simulate_msd_ensemble(1, paths, &v, &w, beta, dt, t_final, nu.as_ref(), seed, 100)
        .map_err(RunError::from)?;
    let fit = msd_diffusivity(&curve);
    let mut csv = String::from("time,msd\n");
    for (t, m) in curve.times.iter().zip(&curve.msd) {
        csv.push_str(&format!("{t},{m}\n"));
    }
    write_atomic(&out.join("msd.csv"), csv.as_bytes())
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    write_json(
        &out.join("msd.json"),
        &json!({
            "beta": beta,
            "amplitude": a,
            "paths": paths,
            "a_hat": fit.a_hat,
            "stderr": fit.stderr,
            "fit_r2": fit.fit_r2,
        }),
    )
}

fn gibbs_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let (v, w, beta) = potentials(p)?;
    let n = p.usize("n", 64).map_err(RunError::Validation)?;
    let samples = p.usize("samples", 5_000).map_err(RunError::Validation)?;
    let seed = p.u64("seed", 0).map_err(RunError::Validation)?;
    let opts = GibbsOptions {
        n_samples: samples,
        thinning: p.usize("thinning", 5).map_err(RunError::Validation)?,
        seed,
        ..Default::default()
    };
    let gibbs = gibbs_sample(n, &v, &w, beta, &opts).map_err(RunError::from)?;
    let flat: Vec<f64> = gibbs.configs.iter().flatten().copied().collect();
    write_frames(&out.join("configs.bin"), &flat, samples, n, seed)
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    write_json(
        &out.join("gibbs.json"),
        &json!({
            "beta": beta,
            "n": n,
            "samples": samples,
            "acceptance": gibbs.acceptance,
            "step": gibbs.step,
        }),
    )
}

fn couple_experiment(p: &Params, out: &Path) -> Result<(), RunError> {
    let (v, w, beta) = potentials(p)?;
    let grid = p.usize("grid", 128).map_err(RunError::Validation)?;
    let target = solve_stationary(&v, &w, beta, &DensityField::uniform(grid), None, 500)
        .map_err(RunError::from)?;
    let opts = CouplingOptions {
        delta: p.f64("delta", 1e-3).map_err(RunError::Validation)?,
        dt: p.f64("dt", 1e-4).map_err(RunError::Validation)?,
        t_final: p.f64("t_final", 0.5).map_err(RunError::Validation)?,
        replicas: p.usize("replicas", 1000).map_err(RunError::Validation)?,
        seed: p.u64("seed", 0).map_err(RunError::Validation)?,
        n_records: p.usize("records", 100).map_err(RunError::Validation)?,
        frozen_target_dynamics: p.usize("frozen", 0).map_err(RunError::Validation)? != 0,
        identical_starts: false,
    };
    let nu0 = DensityField::uniform(grid);
    let trace =
        simulate_coupling(&v, &w, &target, Some(&nu0), beta, &opts).map_err(RunError::from)?;
    write_atomic(&out.join("coupling.csv"), trace.to_csv().as_bytes())
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    write_json(
        &out.join("coupling.json"),
        &json!({
            "beta": beta,
            "kappa": trace.profile.kappa,
            "c": trace.profile.c,
            "contraction_rate": trace.profile.contraction_rate(),
            "delta": trace.delta,
            "replicas": trace.replicas,
        }),
    )
}

/// Named fast checks with hard tolerances; failures exit with the
/// statistical error code.
fn check_command(suite: &str) -> Result<(), RunError> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        println!("[{}] {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let run_critical = suite == "all" || suite == "critical";
    let run_diffusion = suite == "all" || suite == "diffusion";
    let run_noncommute = suite == "all" || suite == "noncommute";
    let run_partition = suite == "all" || suite == "partition";
    let run_profile = suite == "all" || suite == "profile";
    if !(run_critical || run_diffusion || run_noncommute || run_partition || run_profile) {
        return Err(RunError::Validation(format!(
            "unknown suite '{suite}' (use all, critical, diffusion, noncommute, partition, profile)"
        )));
    }

    if run_critical {
        let sub = amplitude_roots(1.9, 0.0);
        let sup = amplitude_roots(2.1, 0.0);
        check(
            "critical temperature: no order below beta = 2, order above",
            sub.a_min == 0.0 && sup.a_min > 0.0 && (critical_beta(0.0) - 2.0).abs() < 1e-12,
        );
    }
    if run_diffusion {
        let a = 1.3;
        let beta = 2.0;
        let nu = DensityField::from_amplitude(a, 256).map_err(RunError::from)?;
        let (_, diff) = corrector_1d(&nu, beta).map_err(RunError::from)?;
        let i0 = bessel_i(0, a).map_err(RunError::from)?;
        check(
            "effective diffusivity matches 1/(beta I0(a)^2)",
            (diff.value - 1.0 / (beta * i0 * i0)).abs() < 1e-10 && diff.in_sandwich(1e-12),
        );
    }
    if run_noncommute {
        let report = non_commutativity_report(0.5, critical_beta(0.5) + 1.0).map_err(RunError::from)?;
        let ok = matches!(
            &report,
            mvlab::homogenize::NonCommutativityReport::NonCommuting { relative_gap, .. }
                if *relative_gap > 0.01
        );
        check("limits do not commute above the critical temperature", ok);
    }
    if run_partition {
        let z2 = partition_function_small_n(2, &CosineSeries::zero(), &CosineSeries::kuramoto(), 2.0)
            .map_err(RunError::from)?;
        let oracle = bessel_i(0, 1.0).map_err(RunError::from)?;
        check("two-particle partition function", (z2 - oracle).abs() < 1e-8);
    }
    if run_profile {
        let p = build_distance_profile(-10.0, 0.3).map_err(RunError::from)?;
        check(
            "distance profile invariants",
            p.c > 0.0 && p.f(0.5) <= 0.5 && p.f(0.25) >= 0.25 * 0.5 * p.psi(0.5),
        );
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Statistical(format!(
            "{} check(s) failed: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}
