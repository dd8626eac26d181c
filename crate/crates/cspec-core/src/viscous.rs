//! The nu > 0 per-mode dynamics: the 3x3 system for (R, A, Omega), the good
//! unknown G = Xi - nu M^2 A, the weighted energy functionals, and the Duhamel
//! representation of Xi.
//!
//! The dynamical core is always the unweighted system; the weighted variables
//! and energies are computed as observables along trajectories, so both
//! weighting schemes see identical dynamics.

use crate::error::{CoreError, Result};
use crate::integrator::{integrate, integrate_observed, LinearSystem, StepStats};
use crate::smallc::{CMat, CVec};
use crate::symbols::{
    laplace_symbol, laplace_symbol_dt, l_nu, mult_m, mult_w, FluidParams, Frequency, WeightParams,
};
use num_complex::Complex64;

/// Per-mode state (R_hat, A_hat, Omega_hat).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViscousState {
    pub r: Complex64,
    pub a: Complex64,
    pub omega: Complex64,
}

impl ViscousState {
    pub fn new(r: Complex64, a: Complex64, omega: Complex64) -> Self {
        ViscousState { r, a, omega }
    }

    pub fn xi(&self) -> Complex64 {
        self.r + self.omega
    }

    /// The good unknown G = Xi - nu M^2 A = R + Omega - nu M^2 A.
    pub fn good(&self, params: &FluidParams) -> Complex64 {
        self.r + self.omega - self.a * (params.shear_visc * params.mach * params.mach)
    }

    pub fn to_good(&self, params: &FluidParams) -> GoodState {
        GoodState { r: self.r, a: self.a, g: self.good(params) }
    }
}

/// Per-mode state in good-unknown variables (R_hat, A_hat, G_hat).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoodState {
    pub r: Complex64,
    pub a: Complex64,
    pub g: Complex64,
}

impl GoodState {
    pub fn to_viscous(&self, params: &FluidParams) -> ViscousState {
        let omega = self.g - self.r + self.a * (params.shear_visc * params.mach * params.mach);
        ViscousState { r: self.r, a: self.a, omega }
    }
}

/// dR = -A, dA = (dt_p/p) A - mu p A + (p/M^2) R - (2k^2/p) Omega,
/// dOmega = A - nu p Omega.
pub fn rhs_viscous(
    t: f64,
    state: &ViscousState,
    f: Frequency,
    params: &FluidParams,
) -> ViscousState {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let k2 = (f.k() * f.k()) as f64;
    let m2 = params.mach * params.mach;
    let da = state.a * (dtp / p - params.mu() * p) + state.r * (p / m2)
        - state.omega * (2.0 * k2 / p);
    ViscousState {
        r: -state.a,
        a: da,
        omega: state.a - state.omega * (params.shear_visc * p),
    }
}

/// The same dynamics in (R, A, G) variables, with Omega = G + nu M^2 A - R:
/// dG = -nu p G + nu(mu-nu) M^2 p A - nu M^2 (dt_p/p) A + 2 nu M^2 (k^2/p) G
///      - 2 nu M^2 (k^2/p) R + 2 nu^2 M^4 (k^2/p) A.
pub fn rhs_good(t: f64, state: &GoodState, f: Frequency, params: &FluidParams) -> GoodState {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let k2 = (f.k() * f.k()) as f64;
    let nu = params.shear_visc;
    let mu = params.mu();
    let m2 = params.mach * params.mach;
    let da = state.a * (dtp / p - mu * p - 2.0 * nu * m2 * k2 / p)
        + state.r * (p / m2 + 2.0 * k2 / p)
        - state.g * (2.0 * k2 / p);
    let dg = state.g * (-nu * p + 2.0 * nu * m2 * k2 / p)
        + state.a * (nu * (mu - nu) * m2 * p - nu * m2 * dtp / p + 2.0 * nu * nu * m2 * m2 * k2 / p)
        - state.r * (2.0 * nu * m2 * k2 / p);
    GoodState { r: -state.a, a: da, g: dg }
}

fn viscous_matrix(t: f64, f: Frequency, params: &FluidParams) -> CMat {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let k2 = (f.k() * f.k()) as f64;
    let m2 = params.mach * params.mach;
    let mut m = CMat::zeros(3);
    m[(0, 1)] = Complex64::new(-1.0, 0.0);
    m[(1, 0)] = Complex64::new(p / m2, 0.0);
    m[(1, 1)] = Complex64::new(dtp / p - params.mu() * p, 0.0);
    m[(1, 2)] = Complex64::new(-2.0 * k2 / p, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m[(2, 2)] = Complex64::new(-params.shear_visc * p, 0.0);
    m
}

/// The (R, A, Omega) system as a `LinearSystem`.
pub fn viscous_system(f: Frequency, params: FluidParams) -> LinearSystem<'static> {
    let mach = params.mach;
    LinearSystem::homogeneous(3, move |t| viscous_matrix(t, f, &params))
        .with_stiffness_hint(move |t| laplace_symbol(t, f).sqrt() / mach)
        .with_fast_rhs(move |t, z| {
            let s = ViscousState { r: z[0], a: z[1], omega: z[2] };
            let d = rhs_viscous(t, &s, f, &params);
            CVec::from_slice(&[d.r, d.a, d.omega])
        })
}

fn good_matrix(t: f64, f: Frequency, params: &FluidParams) -> CMat {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let k2 = (f.k() * f.k()) as f64;
    let nu = params.shear_visc;
    let mu = params.mu();
    let m2 = params.mach * params.mach;
    let mut m = CMat::zeros(3);
    m[(0, 1)] = Complex64::new(-1.0, 0.0);
    m[(1, 0)] = Complex64::new(p / m2 + 2.0 * k2 / p, 0.0);
    m[(1, 1)] = Complex64::new(dtp / p - mu * p - 2.0 * nu * m2 * k2 / p, 0.0);
    m[(1, 2)] = Complex64::new(-2.0 * k2 / p, 0.0);
    m[(2, 0)] = Complex64::new(-2.0 * nu * m2 * k2 / p, 0.0);
    m[(2, 1)] = Complex64::new(
        nu * (mu - nu) * m2 * p - nu * m2 * dtp / p + 2.0 * nu * nu * m2 * m2 * k2 / p,
        0.0,
    );
    m[(2, 2)] = Complex64::new(-nu * p + 2.0 * nu * m2 * k2 / p, 0.0);
    m
}

/// The (R, A, G) system as a `LinearSystem`.
pub fn good_system(f: Frequency, params: FluidParams) -> LinearSystem<'static> {
    let mach = params.mach;
    LinearSystem::homogeneous(3, move |t| good_matrix(t, f, &params))
        .with_stiffness_hint(move |t| laplace_symbol(t, f).sqrt() / mach)
        .with_fast_rhs(move |t, z| {
            let s = GoodState { r: z[0], a: z[1], g: z[2] };
            let d = rhs_good(t, &s, f, &params);
            CVec::from_slice(&[d.r, d.a, d.g])
        })
}

/// Sampled trajectory of one viscous mode.
#[derive(Clone, Debug)]
pub struct ViscousRun {
    pub times: Vec<f64>,
    pub states: Vec<ViscousState>,
    pub stats: StepStats,
}

pub fn solve_viscous(
    init: &ViscousState,
    f: Frequency,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<ViscousRun> {
    let sys = viscous_system(f, *params);
    let z0 = CVec::from_slice(&[init.r, init.a, init.omega]);
    let traj = integrate(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, sample_times)?;
    Ok(ViscousRun {
        times: traj.times,
        states: traj
            .states
            .iter()
            .map(|s| ViscousState { r: s[0], a: s[1], omega: s[2] })
            .collect(),
        stats: traj.stats,
    })
}

/// Integrate one viscous mode, invoking the observer at every accepted step.
pub fn solve_viscous_observed(
    init: &ViscousState,
    f: Frequency,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    mut observer: impl FnMut(f64, &ViscousState),
) -> Result<StepStats> {
    let sys = viscous_system(f, *params);
    let z0 = CVec::from_slice(&[init.r, init.a, init.omega]);
    let (_, stats) = integrate_observed(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, |t, z| {
        observer(t, &ViscousState { r: z[0], a: z[1], omega: z[2] })
    })?;
    Ok(stats)
}

pub fn solve_good(
    init: &GoodState,
    f: Frequency,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<Vec<(f64, GoodState)>> {
    let sys = good_system(f, *params);
    let z0 = CVec::from_slice(&[init.r, init.a, init.g]);
    let traj = integrate(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, sample_times)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| (t, GoodState { r: s[0], a: s[1], g: s[2] }))
        .collect())
}

/// Weighting scheme of the diagnostic triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    /// Z1 = <k,eta>^s m^-1 p^(-1/4) R / M, Z2/Z3 with p^(-3/4).
    PWeight,
    /// Z1 = <k,eta>^s m^-1 w^(-3/4) p^(1/2) R / M, Z2/Z3 with w^(-3/4).
    WWeight,
    /// lambda = 0 variant: Z1, Z2 as PWeight, Z3 = <k,eta>^s m^-1 G.
    TildeLambda0,
}

/// Weighted diagnostic variables (Z1, Z2, Z3) at one sample.
#[derive(Clone, Copy, Debug)]
pub struct WeightedTriple {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
    pub scheme: WeightScheme,
}

impl WeightedTriple {
    /// Build from the unweighted state at time t. `s` is the Sobolev index of
    /// the <k,eta>^s prefactor (0 for bare per-mode dynamics); `wp` is only
    /// consulted by the W scheme.
    pub fn from_state(
        state: &ViscousState,
        t: f64,
        f: Frequency,
        params: &FluidParams,
        scheme: WeightScheme,
        s: f64,
        wp: &WeightParams,
    ) -> Self {
        let nu = params.shear_visc;
        let p = laplace_symbol(t, f);
        let m_inv = 1.0 / mult_m(t, f, nu);
        let bracket = f.bracket_sq().powf(0.5 * s);
        let g = state.good(params);
        let mach = params.mach;
        match scheme {
            WeightScheme::PWeight => WeightedTriple {
                z1: state.r * (bracket * m_inv * p.powf(-0.25) / mach),
                z2: state.a * (bracket * m_inv * p.powf(-0.75)),
                z3: g * (bracket * m_inv * p.powf(-0.75)),
                scheme,
            },
            WeightScheme::WWeight => {
                let w34 = mult_w(t, f, nu, wp).powf(-0.75);
                WeightedTriple {
                    z1: state.r * (bracket * m_inv * w34 * p.sqrt() / mach),
                    z2: state.a * (bracket * m_inv * w34),
                    z3: g * (bracket * m_inv * w34),
                    scheme,
                }
            }
            WeightScheme::TildeLambda0 => WeightedTriple {
                z1: state.r * (bracket * m_inv * p.powf(-0.25) / mach),
                z2: state.a * (bracket * m_inv * p.powf(-0.75)),
                z3: g * (bracket * m_inv),
                scheme,
            },
        }
    }

    /// Invert the weights back to (R, A, G).
    pub fn unweight(
        &self,
        t: f64,
        f: Frequency,
        params: &FluidParams,
        s: f64,
        wp: &WeightParams,
    ) -> GoodState {
        let nu = params.shear_visc;
        let p = laplace_symbol(t, f);
        let m = mult_m(t, f, nu);
        let bracket = f.bracket_sq().powf(0.5 * s);
        let mach = params.mach;
        match self.scheme {
            WeightScheme::PWeight => GoodState {
                r: self.z1 * (mach * m * p.powf(0.25) / bracket),
                a: self.z2 * (m * p.powf(0.75) / bracket),
                g: self.z3 * (m * p.powf(0.75) / bracket),
            },
            WeightScheme::WWeight => {
                let w34 = mult_w(t, f, nu, wp).powf(0.75);
                GoodState {
                    r: self.z1 * (mach * m * w34 / (p.sqrt() * bracket)),
                    a: self.z2 * (m * w34 / bracket),
                    g: self.z3 * (m * w34 / bracket),
                }
            }
            WeightScheme::TildeLambda0 => GoodState {
                r: self.z1 * (mach * m * p.powf(0.25) / bracket),
                a: self.z2 * (m * p.powf(0.75) / bracket),
                g: self.z3 * (m / bracket),
            },
        }
    }
}

/// Energy of the P-weighted triple with damping parameter gamma in (0, 1/4]:
/// E = 1/2 [ (1 + M^2 (dt_p)^2/p^3) |Z1|^2 + |Z2|^2 + |Z3|^2
///           + (M/2)(dt_p/p^(3/2)) Re(conj(Z1) Z2) - 2 gamma p^(-1/2) Re(conj(Z1) Z2) ].
pub fn energy_e(
    triple: &WeightedTriple,
    t: f64,
    f: Frequency,
    params: &FluidParams,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 0.25) {
        return Err(CoreError::InvalidParameter(format!(
            "gamma must be in (0, 1/4], got {gamma}"
        )));
    }
    Ok(energy_quadratic_form(triple, t, f, params, 2.0 * gamma))
}

/// Default damping parameter gamma = delta M nu^(1/3) / 4, clamped to 1/4.
pub fn default_gamma(params: &FluidParams, delta: f64) -> f64 {
    (delta * params.mach * params.shear_visc.cbrt() / 4.0).min(0.25)
}

/// Energy of the W-weighted triple, cross coefficient fixed at M nu^(1/3)/2.
pub fn energy_ew(triple: &WeightedTriple, t: f64, f: Frequency, params: &FluidParams) -> f64 {
    debug_assert_eq!(triple.scheme, WeightScheme::WWeight);
    energy_quadratic_form(triple, t, f, params, 0.5 * params.mach * params.shear_visc.cbrt())
}

fn energy_quadratic_form(
    triple: &WeightedTriple,
    t: f64,
    f: Frequency,
    params: &FluidParams,
    cross_coeff: f64,
) -> f64 {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let m2 = params.mach * params.mach;
    let cross = (triple.z1.conj() * triple.z2).re;
    0.5 * ((1.0 + m2 * dtp * dtp / (p * p * p)) * triple.z1.norm_sqr()
        + triple.z2.norm_sqr()
        + triple.z3.norm_sqr()
        + 0.5 * params.mach * (dtp / p.powf(1.5)) * cross
        - cross_coeff / p.sqrt() * cross)
}

/// Duhamel representation of Xi at time t from a densely sampled R trajectory:
/// Xi(t) = e^(-L_nu(t)) Xi_in + nu int_0^t e^(-(L_nu(t) - L_nu(tau))) p(tau) R(tau) dtau,
/// quadrature by composite Simpson on the (uniform) sample grid.
pub fn duhamel_xi(
    times: &[f64],
    r_values: &[Complex64],
    f: Frequency,
    nu: f64,
    xi_in: Complex64,
    t: f64,
) -> Result<Complex64> {
    if times.len() != r_values.len() || times.len() < 3 {
        return Err(CoreError::Quadrature("need matching, dense samples".to_string()));
    }
    let h = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(CoreError::Quadrature("sample grid must be uniform".to_string()));
        }
    }
    let idx = times.iter().position(|&ti| (ti - t).abs() <= 1e-9 * t.abs().max(1.0));
    let Some(end) = idx else {
        return Err(CoreError::Quadrature(format!("t = {t} is not a sample time")));
    };
    let lnu_t = l_nu(t, f, nu);
    let integrand = |j: usize| -> Complex64 {
        let tau = times[j];
        let decay = (-(lnu_t - l_nu(tau, f, nu))).exp();
        r_values[j] * (laplace_symbol(tau, f) * decay)
    };
    // composite Simpson with a trapezoid patch for an odd final interval
    let mut acc = Complex64::new(0.0, 0.0);
    let pairs = end / 2;
    for j in 0..pairs {
        let a = 2 * j;
        acc += (integrand(a) + integrand(a + 1) * 4.0 + integrand(a + 2)) * (h / 3.0);
    }
    if end % 2 == 1 {
        acc += (integrand(end - 1) + integrand(end)) * (h / 2.0);
    }
    Ok(xi_in * (-lnu_t).exp() + acc * nu)
}
