//! The k = 0 channel: per-eta dynamics of the x-averages
//! (rho_0, alpha_0, omega_0) and the heat-type decay of the energies E^l.
//!
//! With d_yy acting as -eta^2, each eta-mode is a damped 1-D wave system
//! coupled to a heat equation for the vorticity. At nu = lambda = 0 the
//! dynamics is a pure wave: rho_0 + omega_0 is constant and E^l is conserved.
//! The algebraic (1 + c nu t)^(-l) rates of the aggregate energies emerge
//! only from the eta -> 0 continuum, never from a single mode.

use crate::error::Result;
use crate::integrator::{integrate, LinearSystem, StepStats};
use crate::smallc::{CMat, CVec};
use crate::symbols::FluidParams;
use num_complex::Complex64;

/// State of one k = 0 eta-mode; eta must be nonzero (the constant-in-y
/// component is gauge and is not evolved).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroModeState {
    pub rho: Complex64,
    pub alpha: Complex64,
    pub omega: Complex64,
    pub eta: f64,
}

impl ZeroModeState {
    pub fn new(rho: Complex64, alpha: Complex64, omega: Complex64, eta: f64) -> Self {
        assert!(eta != 0.0, "eta = 0 is not evolved");
        ZeroModeState { rho, alpha, omega, eta }
    }

    /// v0^y = alpha_0 / (i eta).
    pub fn v_y(&self) -> Complex64 {
        self.alpha / Complex64::new(0.0, self.eta)
    }

    /// Good unknown rho_0 + omega_0 - nu M^2 alpha_0.
    pub fn good(&self, params: &FluidParams) -> Complex64 {
        self.rho + self.omega - self.alpha * (params.shear_visc * params.mach * params.mach)
    }
}

/// d rho = -alpha, d alpha = -(nu+lambda) eta^2 alpha + (eta^2/M^2) rho,
/// d omega = alpha - nu eta^2 omega.
pub fn rhs_zero(state: &ZeroModeState, params: &FluidParams) -> ZeroModeState {
    let e2 = state.eta * state.eta;
    let m2 = params.mach * params.mach;
    ZeroModeState {
        rho: -state.alpha,
        alpha: state.alpha * (-params.mu() * e2) + state.rho * (e2 / m2),
        omega: state.alpha - state.omega * (params.shear_visc * e2),
        eta: state.eta,
    }
}

fn zero_matrix(eta: f64, params: &FluidParams) -> CMat {
    let e2 = eta * eta;
    let m2 = params.mach * params.mach;
    let mut m = CMat::zeros(3);
    m[(0, 1)] = Complex64::new(-1.0, 0.0);
    m[(1, 0)] = Complex64::new(e2 / m2, 0.0);
    m[(1, 1)] = Complex64::new(-params.mu() * e2, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m[(2, 2)] = Complex64::new(-params.shear_visc * e2, 0.0);
    m
}

/// Sampled trajectory of one eta-mode.
#[derive(Clone, Debug)]
pub struct ZeroModeRun {
    pub times: Vec<f64>,
    pub states: Vec<ZeroModeState>,
    pub stats: StepStats,
}

pub fn solve_zero_mode(
    init: &ZeroModeState,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<ZeroModeRun> {
    let eta = init.eta;
    let mach = params.mach;
    let p = *params;
    let sys = LinearSystem::homogeneous(3, move |_| zero_matrix(eta, &p))
        .with_stiffness_hint(move |_| eta.abs() / mach)
        .with_fast_rhs(move |_, z| {
            let s = ZeroModeState { rho: z[0], alpha: z[1], omega: z[2], eta };
            let d = rhs_zero(&s, &p);
            CVec::from_slice(&[d.rho, d.alpha, d.omega])
        });
    let z0 = CVec::from_slice(&[init.rho, init.alpha, init.omega]);
    let traj = integrate(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, sample_times)?;
    Ok(ZeroModeRun {
        times: traj.times,
        states: traj
            .states
            .iter()
            .map(|s| ZeroModeState { rho: s[0], alpha: s[1], omega: s[2], eta })
            .collect(),
        stats: traj.stats,
    })
}

/// Per-mode energy E^l with d_y^l acting as (i eta)^l:
/// |eta^l alpha|^2 + |eta^(l-1) alpha|^2 + |eta^l (omega + rho - nu M^2 alpha)|^2
/// + (|eta^(l+1) rho|^2 + |eta^l rho|^2) / M^2.
pub fn energy_el(state: &ZeroModeState, ell: i32, params: &FluidParams) -> f64 {
    let e = state.eta.abs();
    let el = e.powi(ell);
    let m2 = params.mach * params.mach;
    let g = state.good(params);
    el * el
        * (state.alpha.norm_sqr()
            + state.alpha.norm_sqr() / (e * e)
            + g.norm_sqr()
            + (e * e * state.rho.norm_sqr() + state.rho.norm_sqr()) / m2)
}

/// A k = 0 perturbation sampled on an eta-grid with trapezoid measure d_eta.
#[derive(Clone, Debug)]
pub struct ZeroModeField {
    pub d_eta: f64,
    pub modes: Vec<ZeroModeState>,
}

impl ZeroModeField {
    /// Aggregate E^l over the grid (trapezoid rule: sum of per-mode energies
    /// times d_eta).
    pub fn aggregate_energy(&self, ell: i32, params: &FluidParams) -> f64 {
        self.modes.iter().map(|m| energy_el(m, ell, params)).sum::<f64>() * self.d_eta
    }
}

/// Evolve every eta-mode of a field and return aggregate E^l series for each
/// requested l.
pub fn run_zero_field(
    field: &ZeroModeField,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
    ells: &[i32],
) -> Result<Vec<(i32, Vec<f64>)>> {
    let runs: Vec<Result<ZeroModeRun>> = crate::par::par_map(&field.modes, |m| {
        solve_zero_mode(m, params, horizon, rtol, sample_times)
    });
    let mut series: Vec<(i32, Vec<f64>)> =
        ells.iter().map(|&l| (l, vec![0.0; sample_times.len()])).collect();
    for run in runs {
        let run = run?;
        for (i, s) in run.states.iter().enumerate() {
            for (l, acc) in series.iter_mut() {
                acc[i] += energy_el(s, *l, params) * field.d_eta;
            }
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::linspace;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wave_solution_is_cosine() {
        // nu = lambda = 0, rho = 1, alpha = 0, eta = 1, M = 1: rho(t) = cos t
        let params = FluidParams::inviscid(1.0).unwrap();
        let init = ZeroModeState::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 1.0);
        let samples = linspace(0.0, 20.0, 200);
        let run = solve_zero_mode(&init, &params, 20.0, 1e-10, &samples).unwrap();
        for (i, s) in run.states.iter().enumerate() {
            let t = run.times[i];
            assert!((s.rho - c(t.cos(), 0.0)).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let params = FluidParams::new(1.0, 1e-2, 1e-3).unwrap();
        let init = ZeroModeState::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 2.0);
        let run = solve_zero_mode(&init, &params, 50.0, 1e-8, &linspace(0.0, 50.0, 50)).unwrap();
        for s in &run.states {
            assert_eq!(s.rho.norm() + s.alpha.norm() + s.omega.norm(), 0.0);
        }
    }

    #[test]
    fn good_unknown_equation_residual() {
        // dG = -nu eta^2 G + lambda nu M^2 eta^2 alpha, algebraically from the rhs
        let params = FluidParams::new(1.3, 2e-2, 7e-3).unwrap();
        let state = ZeroModeState::new(c(0.7, -0.1), c(0.4, 0.9), c(-1.2, 0.2), 1.7);
        let d = rhs_zero(&state, &params);
        let nu = params.shear_visc;
        let m2 = params.mach * params.mach;
        let e2 = state.eta * state.eta;
        let dg = d.rho + d.omega - d.alpha * (nu * m2);
        let expected = state.good(&params) * (-nu * e2)
            + state.alpha * (params.bulk_visc * nu * m2 * e2);
        assert!((dg - expected).norm() <= 1e-13 * expected.norm().max(1.0));
    }

    #[test]
    fn wave_energy_conserved() {
        // nu = lambda = 0: E^0 constant in time to 1e-6 relative (in fact exact)
        let params = FluidParams::inviscid(2.0).unwrap();
        let init = ZeroModeState::new(c(1.0, 0.3), c(0.2, -0.4), c(0.5, 0.0), 1.0);
        let e0 = energy_el(&init, 0, &params);
        let samples = linspace(0.0, 100.0, 500);
        let run = solve_zero_mode(&init, &params, 100.0, 1e-10, &samples).unwrap();
        for s in &run.states {
            let e = energy_el(s, 0, &params);
            assert!((e - e0).abs() / e0 < 1e-6);
        }
    }

    #[test]
    fn viscous_energy_bounded_by_four() {
        // M (nu+lambda)^(1/2) <= 1: E^0(t) <= 4 E^0(0)
        let params = FluidParams::new(1.0, 5e-2, 5e-2).unwrap();
        assert!(params.mach * params.mu().sqrt() <= 1.0);
        for eta in [0.5, 1.0, 3.0] {
            let init = ZeroModeState::new(c(1.0, 0.0), c(0.5, 0.5), c(-0.7, 0.1), eta);
            let e0 = energy_el(&init, 0, &params);
            let samples = linspace(0.0, 200.0, 400);
            let run = solve_zero_mode(&init, &params, 200.0, 1e-8, &samples).unwrap();
            for s in &run.states {
                assert!(energy_el(s, 0, &params) <= 4.0 * e0);
            }
        }
    }

    #[test]
    fn aggregate_decay_rate_ell_one() {
        // multi-eta aggregate E^1 fits (1 + c nu t)^(-1): log-log slope -1 +- 0.2
        // on a window where the grid resolves the continuum
        let params = FluidParams::new(1.0, 0.1, 0.0).unwrap();
        let d_eta = 0.05;
        let mut modes = Vec::new();
        let mut j = 1;
        while (j as f64) * d_eta <= 8.0 {
            let eta = j as f64 * d_eta;
            // |alpha| ~ eta^(1/2) near zero keeps E^0 finite and saturates the rate
            let amp = eta.sqrt() * (-eta * eta / 32.0).exp();
            modes.push(ZeroModeState::new(c(0.0, 0.0), c(amp, 0.0), c(0.0, 0.0), eta));
            j += 1;
        }
        let field = ZeroModeField { d_eta, modes };
        let samples = linspace(1.0, 500.0, 300);
        let series = run_zero_field(&field, &params, 500.0, 1e-7, &samples, &[1]).unwrap();
        let (_, e1) = &series[0];
        let fit = crate::report::fit_loglog(&samples, e1, 50.0, 500.0).unwrap();
        assert!((fit.value + 1.0).abs() <= 0.2, "slope {}", fit.value);
    }
}
