//! `cspec`: per-mode runs, field runs, zero-mode runs, parameter sweeps,
//! multiplier audits, and the one-shot verification suite.
//!
//! Exit codes: 0 success, 2 flag errors (from the parser), 3 run failures;
//! `verify` exits 1 when any criterion fails.

mod output;

use clap::{Args, Parser, Subcommand};
use cspec_core::acceptance::{self, Level};
use cspec_core::field::{self, FieldQuantity, GridSpec, NormSpec, Preset, SpectralField};
use cspec_core::inviscid;
use cspec_core::report::{fit_loglog, PeakTracker};
use cspec_core::symbols::{
    check_multiplier_inequalities, linspace, FluidParams, Frequency, WeightParams,
    INEQUALITY_NAMES,
};
use cspec_core::viscous::{self, ViscousState, WeightScheme, WeightedTriple};
use cspec_core::zero_mode::{self, ZeroModeField, ZeroModeState};
use cspec_core::{par, sweep};
use num_complex::Complex64;
use output::{OutputSink, Table};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cspec", version, about = "Spectral Couette-flow mode lab")]
struct Cli {
    /// Worker threads: an integer or "auto" (env CSPEC_JOBS as fallback).
    #[arg(long, global = true, default_value = "auto")]
    jobs: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug)]
struct ComplexArg(Complex64);

impl std::str::FromStr for ComplexArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
        match parts.as_slice() {
            [re] => Ok(ComplexArg(Complex64::new(parse(re)?, 0.0))),
            [re, im] => Ok(ComplexArg(Complex64::new(parse(re)?, parse(im)?))),
            _ => Err("expected `re` or `re,im`".to_string()),
        }
    }
}

#[derive(Args)]
struct CommonRunArgs {
    /// Mach number M.
    #[arg(long, default_value_t = 1.0)]
    mach: f64,
    /// Shear viscosity nu.
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Bulk viscosity lambda.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Integration horizon.
    #[arg(long, default_value_t = 500.0)]
    t_end: f64,
    /// Relative tolerance of the integrator.
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single (k, eta) mode and write its time series.
    ModeRun {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
        /// Initial rho_hat ("re" or "re,im").
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        r_in: ComplexArg,
        /// Initial alpha_hat.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        a_in: ComplexArg,
        /// Conserved xi_in = rho_hat + omega_hat; omega_in = xi_in - r_in.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        xi_in: ComplexArg,
        /// Number of output samples.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Window weight beta.
        #[arg(long, default_value_t = 50.0)]
        beta: f64,
        /// Window weight delta_beta.
        #[arg(long, default_value_t = 1.0 / 12.0)]
        delta_beta: f64,
        /// Sobolev index of the <k,eta>^s prefactor in the energies.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
    },
    /// Evolve a preset spectral field and write its norm time series.
    FieldRun {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Preset: fig1_forced, fig1_transient or random_band.
        #[arg(long, default_value = "fig1_forced")]
        preset: String,
        /// Seed for random_band.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Negative-Sobolev index s for the H^-s diagnostics.
        #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Start from a field file (cspec-field/1) instead of a preset.
        #[arg(long)]
        field_in: Option<std::path::PathBuf>,
        /// Also write the field state at t_end as a field file (cspec-field/1).
        #[arg(long)]
        field_out: Option<std::path::PathBuf>,
    },
    /// Evolve the k = 0 channel on an eta-grid and write aggregate energies.
    ZeroMode {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, default_value_t = 8.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 0.05)]
        d_eta: f64,
        /// Energy orders to report.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0, 1, 2])]
        ell: Vec<i32>,
        #[arg(long, default_value_t = 300)]
        samples: usize,
    },
    /// Run a parameter sweep from a JSON spec file.
    Sweep {
        /// Path to the sweep spec (JSON).
        #[arg(long)]
        spec: std::path::PathBuf,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Summary JSON output path.
        #[arg(long)]
        summary: Option<std::path::PathBuf>,
    },
    /// Audit the multiplier inequalities over a (t, k, eta, nu) grid.
    AuditMultipliers {
        /// Viscosities to audit.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
        nu: Vec<f64>,
        #[arg(long, default_value_t = 50.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0 / 12.0)]
        delta_beta: f64,
        #[arg(long, default_value_t = 1500.0)]
        t_max: f64,
        #[arg(long, default_value_t = 10_000)]
        t_points: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![-5, -4, -3, -2, -1, 1, 2, 3, 4, 5], allow_hyphen_values = true)]
        k: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![-40.0, -20.0, -10.0, -5.0, -1.0, 1.0, 5.0, 10.0, 20.0, 40.0], allow_hyphen_values = true)]
        eta: Vec<f64>,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
        format: String,
    },
    /// Run the acceptance suite and emit a machine-readable verdict.
    Verify {
        /// quick (~ thinned grids) or full (stated sizes).
        #[arg(long, default_value = "quick", value_parser = ["quick", "full"])]
        level: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Verdict JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.jobs.as_str() {
        "auto" => par::configure_jobs(None),
        n => match n.parse::<usize>() {
            Ok(n) => par::configure_jobs(Some(n)),
            Err(_) => {
                eprintln!("error: --jobs must be an integer or \"auto\"");
                return ExitCode::from(2);
            }
        },
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> cspec_core::Result<ExitCode> {
    match command {
        Command::ModeRun { common, k, eta, r_in, a_in, xi_in, samples, beta, delta_beta, s } => {
            mode_run(common, k, eta, r_in.0, a_in.0, xi_in.0, samples, beta, delta_beta, s)
        }
        Command::FieldRun { common, preset, seed, s, samples, field_in, field_out } => {
            field_run(common, &preset, seed, s, samples, field_in, field_out)
        }
        Command::ZeroMode { common, eta_max, d_eta, ell, samples } => {
            zero_mode_run(common, eta_max, d_eta, &ell, samples)
        }
        Command::Sweep { spec, out, summary } => sweep_run(&spec, out, summary),
        Command::AuditMultipliers {
            nu,
            beta,
            delta_beta,
            t_max,
            t_points,
            k,
            eta,
            out,
            format,
        } => audit_run(&nu, beta, delta_beta, t_max, t_points, &k, &eta, out, &format),
        Command::Verify { level, seed, out } => verify_run(&level, seed, out),
    }
}

#[allow(clippy::too_many_arguments)]
fn mode_run(
    common: CommonRunArgs,
    k: i64,
    eta: f64,
    r_in: Complex64,
    a_in: Complex64,
    xi_in: Complex64,
    samples: usize,
    beta: f64,
    delta_beta: f64,
    s: f64,
) -> cspec_core::Result<ExitCode> {
    let f = Frequency::new(k, eta)?;
    let params = FluidParams::new(common.mach, common.nu, common.lambda)?;
    let wp = WeightParams::new(beta, delta_beta)?;
    let omega_in = xi_in - r_in;
    let mut table = Table::new(vec![
        "t", "r_abs", "a_abs", "omega_abs", "z_abs", "energy_e", "energy_ew",
    ]);
    let mut summary = serde_json::Map::new();
    summary.insert("k".into(), k.into());
    summary.insert("eta".into(), eta.into());
    summary.insert("mach".into(), common.mach.into());
    summary.insert("nu".into(), common.nu.into());
    summary.insert("lambda".into(), common.lambda.into());
    summary.insert(
        "outside_theorem_regime".into(),
        (!params.is_inviscid() && !params.in_theorem_regime()).into(),
    );

    if common.t_end > 0.0 {
        let ts = linspace(0.0, common.t_end, samples.max(2));
        let init = ViscousState::new(r_in, a_in, omega_in);
        let run = viscous::solve_viscous(&init, f, &params, common.t_end, common.rtol, &ts)?;
        let gamma = viscous::default_gamma(&params, 1.0).clamp(1e-12, 0.25);
        for (i, st) in run.states.iter().enumerate() {
            let t = run.times[i];
            let z = inviscid::sym_norm(st.r, st.a, t, f, common.mach);
            let (e, ew) = if params.is_inviscid() {
                let zs = inviscid::SymState::from_physical(st.r, st.a, t, f, common.mach);
                (inviscid::annulus_energy(&zs, t, f, common.mach), f64::NAN)
            } else {
                let p_triple =
                    WeightedTriple::from_state(st, t, f, &params, WeightScheme::PWeight, s, &wp);
                let w_triple =
                    WeightedTriple::from_state(st, t, f, &params, WeightScheme::WWeight, s, &wp);
                (
                    viscous::energy_e(&p_triple, t, f, &params, gamma)?,
                    viscous::energy_ew(&w_triple, t, f, &params),
                )
            };
            table.push(vec![t, st.r.norm(), st.a.norm(), st.omega.norm(), z, e, ew]);
        }

        // envelope fit of |R| from a dedicated observed pass (step-resolved
        // peaks; uniform samples alias the acoustic oscillation)
        let mut r_peaks = PeakTracker::new();
        viscous::solve_viscous_observed(&init, f, &params, common.t_end, common.rtol, |t, st| {
            r_peaks.feed(t, st.r.norm());
        })?;
        let (rt, rv) = r_peaks.into_series();
        if let Ok(fit) = fit_loglog(&rt, &rv, common.t_end / 10.0, common.t_end) {
            summary.insert("r_env_slope".into(), fit.value.into());
            summary.insert("r_env_residual".into(), fit.residual.into());
        }
        // local |A| slopes around the critical time, from the sampled series
        // (at large M the oscillation period exceeds t_c, so raw samples are
        // the right thing to fit; the large-Mach transient decay then shows
        // as a negative pre-critical slope)
        let tc = f.critical_time();
        let a_abs: Vec<f64> = run.states.iter().map(|st| st.a.norm()).collect();
        if tc > 1.0 && tc < common.t_end {
            if let Ok(fit) = fit_loglog(&run.times, &a_abs, (0.05 * tc).max(0.2), 0.95 * tc) {
                summary.insert("a_slope_pre_critical".into(), fit.value.into());
            }
            if let Ok(fit) = fit_loglog(&run.times, &a_abs, 1.05 * tc, (4.0 * tc).min(common.t_end))
            {
                summary.insert("a_slope_post_critical".into(), fit.value.into());
            }
        }
    }

    let sink = OutputSink::new(common.out)?;
    sink.write_table(&common.format, &table, &serde_json::Value::Object(summary))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_preset(name: &str, seed: u64) -> cspec_core::Result<Preset> {
    match name {
        "fig1_forced" => Ok(Preset::Fig1Forced),
        "fig1_transient" => Ok(Preset::Fig1Transient),
        "random_band" => Ok(Preset::RandomBand { seed }),
        other => Err(cspec_core::CoreError::InvalidParameter(format!(
            "unknown preset {other:?}; expected fig1_forced, fig1_transient or random_band"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn field_run(
    common: CommonRunArgs,
    preset: &str,
    seed: u64,
    s: f64,
    samples: usize,
    field_in: Option<std::path::PathBuf>,
    field_out: Option<std::path::PathBuf>,
) -> cspec_core::Result<ExitCode> {
    let params = FluidParams::new(common.mach, common.nu, common.lambda)?;
    let field = match field_in {
        Some(path) => field::from_json(&std::fs::read_to_string(path)?)?,
        None => SpectralField::preset(GridSpec::standard(), parse_preset(preset, seed)?)?,
    };
    let mut table = Table::new(vec![
        "t", "q_norm", "px_norm", "py_norm", "rho_norm", "v_norm", "q_hneg", "rho_hneg",
    ]);
    let mut summary = serde_json::Map::new();
    summary.insert("preset".into(), preset.into());
    summary.insert("sobolev_s".into(), s.into());

    if common.t_end > 0.0 {
        let ts = linspace(0.0, common.t_end, samples.max(2));
        let run = field::run_field(&field, &params, common.t_end, common.rtol, &ts)?;
        let mut growth = Vec::new();
        for (i, n) in run.norms.iter().enumerate() {
            let snapshot = &run.fields[i];
            let spec = NormSpec::Iso { s: -s };
            let q_hneg = field::sobolev_norm(snapshot, spec, FieldQuantity::QVelocity);
            let rho_hneg = field::sobolev_norm(snapshot, spec, FieldQuantity::Rho);
            table.push(vec![
                run.times[i],
                n.q,
                n.px,
                n.py,
                n.rho,
                n.velocity(),
                q_hneg,
                rho_hneg,
            ]);
            growth.push((n.q * n.q + (n.rho / common.mach) * (n.rho / common.mach)).sqrt());
        }
        if let Ok(fit) = fit_loglog(&run.times, &growth, common.t_end / 10.0, common.t_end) {
            summary.insert("growth_slope".into(), fit.value.into());
        }
        if let Some(path) = field_out {
            std::fs::write(&path, field::to_json(run.fields.last().expect("nonempty run"))?)?;
        }
    }

    let sink = OutputSink::new(common.out)?;
    sink.write_table(&common.format, &table, &serde_json::Value::Object(summary))?;
    Ok(ExitCode::SUCCESS)
}

fn zero_mode_run(
    common: CommonRunArgs,
    eta_max: f64,
    d_eta: f64,
    ells: &[i32],
    samples: usize,
) -> cspec_core::Result<ExitCode> {
    let params = FluidParams::new(common.mach, common.nu, common.lambda)?;
    // |alpha| ~ eta^(1/2) near zero: finite E^0 together with saturation of
    // the algebraic decay rate of the aggregate energies
    let mut modes = Vec::new();
    let mut j = 1;
    while (j as f64) * d_eta <= eta_max {
        let eta = j as f64 * d_eta;
        let amp = eta.sqrt() * (-eta * eta / 32.0).exp();
        modes.push(ZeroModeState::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(amp, 0.0),
            Complex64::new(0.0, 0.0),
            eta,
        ));
        j += 1;
    }
    let zero_field = ZeroModeField { d_eta, modes };
    let mut header = vec!["t".to_string()];
    header.extend(ells.iter().map(|l| format!("energy_l{l}")));
    let mut table = Table::new_owned(header);
    let mut summary = serde_json::Map::new();
    summary.insert(
        "note".into(),
        "aggregate E^l over the eta-grid; single modes decay exponentially and the \
         algebraic (1 + c nu t)^-l rate emerges only from the eta -> 0 continuum"
            .into(),
    );
    if common.t_end > 0.0 {
        let ts = linspace(1.0_f64.min(common.t_end / 2.0), common.t_end, samples.max(2));
        let series =
            zero_mode::run_zero_field(&zero_field, &params, common.t_end, common.rtol, &ts, ells)?;
        for (i, &t) in ts.iter().enumerate() {
            let mut row = vec![t];
            row.extend(series.iter().map(|(_, v)| v[i]));
            table.push(row);
        }
        for (l, values) in &series {
            if let Ok(fit) = fit_loglog(&ts, values, common.t_end / 10.0, common.t_end) {
                summary.insert(format!("slope_l{l}"), fit.value.into());
            }
        }
    }
    let sink = OutputSink::new(common.out)?;
    sink.write_table(&common.format, &table, &serde_json::Value::Object(summary))?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_run(
    spec_path: &std::path::Path,
    out: Option<std::path::PathBuf>,
    summary: Option<std::path::PathBuf>,
) -> cspec_core::Result<ExitCode> {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: sweep::SweepSpec = serde_json::from_str(&text)?;
    let results = sweep::run_sweep(&spec)?;
    let csv = sweep::to_csv(&results);
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = summary {
        std::fs::write(path, sweep::summary_json(&spec, &results)?)?;
    }
    let failed = results.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn audit_run(
    nus: &[f64],
    beta: f64,
    delta_beta: f64,
    t_max: f64,
    t_points: usize,
    ks: &[i64],
    etas: &[f64],
    out: Option<std::path::PathBuf>,
    format: &str,
) -> cspec_core::Result<ExitCode> {
    let wp = WeightParams::new(beta, delta_beta)?;
    let t_grid = linspace(0.0, t_max, t_points.max(2));
    let mut jobs = Vec::new();
    for &nu in nus {
        for &k in ks {
            for &eta in etas {
                jobs.push((nu, k, eta));
            }
        }
    }
    let audits = par::par_map(&jobs, |&(nu, k, eta)| {
        Frequency::new(k, eta)
            .and_then(|f| check_multiplier_inequalities(f, nu, &wp, &t_grid))
    });
    let mut table = Table::new(vec!["nu", "k", "eta", "inequality", "min_slack", "argmin_t"]);
    let mut global_min = [f64::INFINITY; 5];
    let mut total_violations = 0usize;
    for audit in audits {
        let audit = audit?;
        for s in &audit.slacks {
            table.push(vec![
                audit.nu,
                audit.k as f64,
                audit.eta,
                s.index as f64,
                s.min_slack,
                s.argmin_t,
            ]);
            global_min[s.index] = global_min[s.index].min(s.min_slack);
        }
        total_violations += audit.violations.len();
    }
    let mut summary = serde_json::Map::new();
    summary.insert("all_nonnegative".into(), (total_violations == 0).into());
    summary.insert("violations".into(), total_violations.into());
    for (i, name) in INEQUALITY_NAMES.iter().enumerate() {
        summary.insert(format!("min_slack_{i}"), global_min[i].into());
        summary.insert(format!("inequality_{i}"), (*name).into());
    }
    let sink = OutputSink::new(out)?;
    sink.write_table(format, &table, &serde_json::Value::Object(summary))?;
    if total_violations > 0 {
        eprintln!("{total_violations} inequality violation(s)");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_run(
    level_str: &str,
    seed: u64,
    out: Option<std::path::PathBuf>,
) -> cspec_core::Result<ExitCode> {
    let level = Level::parse(level_str).expect("validated by the parser");
    let results = acceptance::run_all(level, seed);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let verdict = acceptance::verdict(level, seed, results);
    let json = serde_json::to_string_pretty(&verdict)?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(if verdict.all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
