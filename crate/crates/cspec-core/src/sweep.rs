//! Deterministic parallel parameter sweeps over per-mode runs.
//!
//! A sweep is the cartesian product of axes over (k, eta, M, nu, lambda,
//! horizon). Each point integrates one mode from fixed initial data and
//! reports its transient maximum and final value of the single-mode analogue
//! of ||v|| + ||rho||/M. Points run as a parallel map; rows are emitted in a
//! fixed sort order so parallel and serial executions produce identical bytes.

use crate::error::{CoreError, Result};
use crate::symbols::{laplace_symbol, FluidParams, Frequency};
use crate::viscous::{solve_viscous_observed, ViscousState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "cspec-report/1";
pub const DEFAULT_POINT_CAP: usize = 100_000;

/// Initial data applied at every sweep point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepInit {
    pub r_re: f64,
    pub r_im: f64,
    pub a_re: f64,
    pub a_im: f64,
    pub omega_re: f64,
    pub omega_im: f64,
}

impl Default for SweepInit {
    /// Vorticity-only data (xi = 5), the fig1_forced preset shape.
    fn default() -> Self {
        SweepInit { r_re: 0.0, r_im: 0.0, a_re: 0.0, a_im: 0.0, omega_re: 5.0, omega_im: 0.0 }
    }
}

fn default_cap() -> usize {
    DEFAULT_POINT_CAP
}

fn default_rtol() -> f64 {
    1e-8
}

/// Sweep description; empty axes are treated as singleton defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub k: Vec<i64>,
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub mach: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub horizon: Vec<f64>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default)]
    pub init: Option<SweepInit>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: i64,
    pub eta: f64,
    pub mach: f64,
    pub nu: f64,
    pub lambda: f64,
    pub horizon: f64,
}

/// Result of one sweep point. `status` is "ok" or an error description;
/// failed points carry NaN values and are flagged, never dropped.
#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub point: SweepPoint,
    pub data_size: f64,
    pub transient_max: f64,
    pub t_of_max: f64,
    pub final_value: f64,
    pub status: String,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let one = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let ks = if self.k.is_empty() { vec![3] } else { self.k.clone() };
        let etas = one(&self.eta, 21.0);
        let machs = one(&self.mach, 1.0);
        let nus = one(&self.nu, 0.0);
        let lambdas = one(&self.lambda, 0.0);
        let horizons = one(&self.horizon, 100.0);
        let size = ks.len() * etas.len() * machs.len() * nus.len() * lambdas.len()
            * horizons.len();
        if size > self.cap {
            return Err(CoreError::SweepTooLarge { size, cap: self.cap });
        }
        let mut points = Vec::with_capacity(size);
        for &k in &ks {
            for &eta in &etas {
                for &mach in &machs {
                    for &nu in &nus {
                        for &lambda in &lambdas {
                            for &horizon in &horizons {
                                points.push(SweepPoint { k, eta, mach, nu, lambda, horizon });
                            }
                        }
                    }
                }
            }
        }
        // duplicates collapse to one run each
        points.sort_by(compare_points);
        points.dedup();
        Ok(points)
    }
}

fn compare_points(a: &SweepPoint, b: &SweepPoint) -> std::cmp::Ordering {
    (a.k, a.eta.to_bits(), a.nu.to_bits(), a.mach.to_bits(), a.lambda.to_bits(), a.horizon.to_bits())
        .cmp(&(b.k, b.eta.to_bits(), b.nu.to_bits(), b.mach.to_bits(), b.lambda.to_bits(), b.horizon.to_bits()))
}

fn run_point(point: &SweepPoint, init: &SweepInit, rtol: f64) -> PointResult {
    let attempt = || -> Result<(f64, f64, f64, f64)> {
        let f = Frequency::new(point.k, point.eta)?;
        let params = FluidParams::new(point.mach, point.nu, point.lambda)?;
        let state = ViscousState::new(
            Complex64::new(init.r_re, init.r_im),
            Complex64::new(init.a_re, init.a_im),
            Complex64::new(init.omega_re, init.omega_im),
        );
        // ||alpha|| + ||grad rho||/M + ||omega|| at the single mode
        let p0 = laplace_symbol(0.0, f);
        let data_size =
            state.a.norm() + p0.sqrt() * state.r.norm() / params.mach + state.omega.norm();
        let mut peak = 0.0f64;
        let mut t_peak = 0.0;
        let mut last = 0.0;
        solve_viscous_observed(&state, f, &params, point.horizon, rtol, |t, s| {
            let p = laplace_symbol(t, f);
            let shifted = f.eta() - f.kf() * t;
            let v2 = s.a.norm_sqr() / p
                + (shifted * shifted + (f.k() * f.k()) as f64) / (p * p) * s.omega.norm_sqr();
            let value = v2.sqrt() + s.r.norm() / params.mach;
            if value > peak {
                peak = value;
                t_peak = t;
            }
            last = value;
        })?;
        Ok((data_size, peak, t_peak, last))
    };
    match attempt() {
        Ok((data_size, transient_max, t_of_max, final_value)) => PointResult {
            point: *point,
            data_size,
            transient_max,
            t_of_max,
            final_value,
            status: "ok".to_string(),
        },
        Err(e) => PointResult {
            point: *point,
            data_size: f64::NAN,
            transient_max: f64::NAN,
            t_of_max: f64::NAN,
            final_value: f64::NAN,
            status: format!("error: {e}"),
        },
    }
}

/// Execute the sweep: a deterministic parallel map over its points.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<PointResult>> {
    let points = spec.points()?;
    let init = spec.init.unwrap_or_default();
    let rtol = spec.rtol;
    Ok(crate::par::par_map(&points, |p| run_point(p, &init, rtol)))
}

/// Format a float with 17 significant digits, the CSV convention.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SWEEP_CSV_HEADER: &str =
    "k,eta,nu,mach,lambda,horizon,quantity,value,status";

/// Long-format CSV: one row per (point, quantity), points in sort order.
pub fn to_csv(results: &[PointResult]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in results {
        for (name, value) in [
            ("data_size", r.data_size),
            ("transient_max", r.transient_max),
            ("t_of_max", r.t_of_max),
            ("final_value", r.final_value),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.point.k,
                fmt_f64(r.point.eta),
                fmt_f64(r.point.nu),
                fmt_f64(r.point.mach),
                fmt_f64(r.point.lambda),
                fmt_f64(r.point.horizon),
                name,
                fmt_f64(value),
                r.status
            ));
        }
    }
    out
}

/// Fitted scaling of normalized transient maxima against nu, per group of
/// points identical in everything but nu.
#[derive(Clone, Debug, Serialize)]
pub struct NuScaling {
    pub k: i64,
    pub eta: f64,
    pub mach: f64,
    pub lambda: f64,
    pub exponent: f64,
    pub n_points: usize,
}

/// Summary JSON (schema "cspec-report/1") with per-group nu-scaling exponents
/// when a group spans at least two viscosities.
type GroupKey = (i64, u64, u64, u64);

pub fn summary_json(spec: &SweepSpec, results: &[PointResult]) -> Result<String> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<GroupKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.status == "ok" && r.point.nu > 0.0) {
        groups
            .entry((
                r.point.k,
                r.point.eta.to_bits(),
                r.point.mach.to_bits(),
                r.point.lambda.to_bits(),
            ))
            .or_default()
            .push((r.point.nu, r.transient_max / r.data_size));
    }
    let mut scalings = Vec::new();
    for ((k, eta, mach, lambda), pts) in groups {
        if pts.len() < 2 {
            continue;
        }
        let lx: Vec<f64> = pts.iter().map(|(nu, _)| nu.ln()).collect();
        let ly: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        scalings.push(NuScaling {
            k,
            eta: f64::from_bits(eta),
            mach: f64::from_bits(mach),
            lambda: f64::from_bits(lambda),
            exponent: sxy / sxx,
            n_points: pts.len(),
        });
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        schema: &'static str,
        n_points: usize,
        n_failed: usize,
        spec: &'a SweepSpec,
        nu_scaling: Vec<NuScaling>,
    }
    let summary = Summary {
        schema: REPORT_SCHEMA,
        n_points: results.len(),
        n_failed: results.iter().filter(|r| r.status != "ok").count(),
        spec,
        nu_scaling: scalings,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}
