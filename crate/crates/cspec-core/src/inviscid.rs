//! The nu = lambda = 0 per-mode dynamics in the moving frame.
//!
//! With rho_hat + omega_hat conserved, the mode reduces to a forced 2x2 system
//! for (R, A). The symmetrized variables Z = (R/(M p^(1/4)), A/p^(3/4)) evolve
//! under a trace-free matrix, which confines homogeneous trajectories to an
//! annulus of the Z-plane; the forced solution is Phi(t,0) Gamma(t) with Gamma
//! the Duhamel integral. This module also provides the WKB envelope scale and
//! the constructive generic perturbation of the initial data.

use crate::error::{CoreError, Result};
use crate::integrator::{integrate, integrate_observed, LinearSystem, StepStats};
use crate::smallc::{CMat, CVec};
use crate::symbols::{laplace_symbol, laplace_symbol_dt, Frequency};
use num_complex::Complex64;

/// Initial data of one inviscid mode; `xi_in = r_in + omega_in` is conserved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InviscidInit {
    pub r_in: Complex64,
    pub a_in: Complex64,
    pub omega_in: Complex64,
}

impl InviscidInit {
    pub fn new(r_in: Complex64, a_in: Complex64, omega_in: Complex64) -> Self {
        InviscidInit { r_in, a_in, omega_in }
    }

    /// The conserved quantity rho_hat + omega_hat.
    pub fn xi_in(&self) -> Complex64 {
        self.r_in + self.omega_in
    }

    /// Weighted initial vector Z_in = (R_in/(M p0^(1/4)), A_in/p0^(3/4)).
    pub fn z_in(&self, f: Frequency, mach: f64) -> CVec {
        let p0 = laplace_symbol(0.0, f);
        CVec::from_slice(&[self.r_in / (mach * p0.powf(0.25)), self.a_in / p0.powf(0.75)])
    }
}

/// Symmetrized per-mode state: Z1 = R/(M p^(1/4)), Z2 = A/p^(3/4).
#[derive(Clone, Copy, Debug)]
pub struct SymState {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl SymState {
    pub fn from_physical(r: Complex64, a: Complex64, t: f64, f: Frequency, mach: f64) -> Self {
        let p = laplace_symbol(t, f);
        SymState { z1: r / (mach * p.powf(0.25)), z2: a / p.powf(0.75) }
    }

    pub fn to_physical(&self, t: f64, f: Frequency, mach: f64) -> (Complex64, Complex64) {
        let p = laplace_symbol(t, f);
        (self.z1 * mach * p.powf(0.25), self.z2 * p.powf(0.75))
    }

    pub fn norm(&self) -> f64 {
        (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt()
    }
}

/// Symmetrizer coefficients at (t, k, eta, M):
/// a = dt_p/(4p), b = sqrt(p)/M, d = sqrt(p)/M + 2 M k^2 / p^(3/2),
/// zeta = sqrt(d/b), beta_s = sqrt(b d).
#[derive(Clone, Copy, Debug)]
pub struct SymmetrizerCoeffs {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub zeta: f64,
    pub beta_s: f64,
}

impl SymmetrizerCoeffs {
    pub fn new(t: f64, f: Frequency, mach: f64) -> Self {
        let p = laplace_symbol(t, f);
        let sp = p.sqrt();
        let k2 = (f.k() * f.k()) as f64;
        let a = laplace_symbol_dt(t, f) / (4.0 * p);
        let b = sp / mach;
        let d = sp / mach + 2.0 * mach * k2 / (p * sp);
        SymmetrizerCoeffs { a, b, d, zeta: (d / b).sqrt(), beta_s: (b * d).sqrt() }
    }
}

/// Right-hand side of the reduced system:
/// dR = -A, dA = (dt_p/p) A + (p/M^2 + 2k^2/p) R - (2k^2/p) xi_in.
pub fn rhs_inviscid(
    t: f64,
    r: Complex64,
    a: Complex64,
    f: Frequency,
    mach: f64,
    xi_in: Complex64,
) -> (Complex64, Complex64) {
    let p = laplace_symbol(t, f);
    let dtp = laplace_symbol_dt(t, f);
    let k2 = (f.k() * f.k()) as f64;
    let da = a * (dtp / p) + r * (p / (mach * mach) + 2.0 * k2 / p) - xi_in * (2.0 * k2 / p);
    (-a, da)
}

/// The trace-free matrix of the symmetrized homogeneous system:
/// L = [[-dt_p/(4p), -sqrt(p)/M], [sqrt(p)/M + 2Mk^2/p^(3/2), dt_p/(4p)]].
pub fn matrix_l(t: f64, f: Frequency, mach: f64) -> CMat {
    let s = SymmetrizerCoeffs::new(t, f, mach);
    CMat::from_rows_real(&[&[-s.a, -s.b], &[s.d, s.a]])
}

/// Forcing direction F = (0, -2k^2 / p^(7/4)).
pub fn vector_f(t: f64, f: Frequency) -> CVec {
    let p = laplace_symbol(t, f);
    let k2 = (f.k() * f.k()) as f64;
    CVec::from_slice(&[Complex64::new(0.0, 0.0), Complex64::new(-2.0 * k2 / p.powf(1.75), 0.0)])
}

/// The (R, A) system as a `LinearSystem`, forcing captured from `xi_in`.
pub fn mode_system(f: Frequency, mach: f64, xi_in: Complex64) -> LinearSystem<'static> {
    let matrix = move |t: f64| {
        let p = laplace_symbol(t, f);
        let dtp = laplace_symbol_dt(t, f);
        let k2 = (f.k() * f.k()) as f64;
        let mut m = CMat::zeros(2);
        m[(0, 1)] = Complex64::new(-1.0, 0.0);
        m[(1, 0)] = Complex64::new(p / (mach * mach) + 2.0 * k2 / p, 0.0);
        m[(1, 1)] = Complex64::new(dtp / p, 0.0);
        m
    };
    let sys = if xi_in == Complex64::new(0.0, 0.0) {
        LinearSystem::homogeneous(2, matrix)
    } else {
        let forcing = move |t: f64| {
            let p = laplace_symbol(t, f);
            let k2 = (f.k() * f.k()) as f64;
            CVec::from_slice(&[Complex64::new(0.0, 0.0), xi_in * (-2.0 * k2 / p)])
        };
        LinearSystem::forced(2, matrix, forcing)
    };
    let m2_inv = 1.0 / (mach * mach);
    let k = f.kf();
    let k2x2 = 2.0 * k * k;
    let eta = f.eta();
    sys.with_stiffness_hint(move |t| laplace_symbol(t, f).sqrt() / mach)
        .with_fast_rhs(move |t, z| {
            // one division per evaluation; the stage loop dominates runtime
            let sh = eta - k * t;
            let p = k * k + sh * sh;
            let inv_p = 1.0 / p;
            let da = z[1] * (-2.0 * k * sh * inv_p)
                + z[0] * (p * m2_inv + k2x2 * inv_p)
                - xi_in * (k2x2 * inv_p);
            CVec::from_slice(&[-z[1], da])
        })
}

/// The symmetrized homogeneous Z-system `dZ = L(t) Z`.
pub fn sym_system(f: Frequency, mach: f64) -> LinearSystem<'static> {
    let k = f.kf();
    let eta = f.eta();
    let mach_inv = 1.0 / mach;
    let dk2 = 2.0 * mach * k * k;
    LinearSystem::homogeneous(2, move |t| matrix_l(t, f, mach))
        .with_stiffness_hint(move |t| laplace_symbol(t, f).sqrt() / mach)
        .with_fast_rhs(move |t, z| {
            let sh = eta - k * t;
            let p = k * k + sh * sh;
            let inv_p = 1.0 / p;
            let sp = p.sqrt();
            let a = -0.5 * k * sh * inv_p; // dt_p/(4p)
            let b = sp * mach_inv;
            let d = b + dk2 * inv_p / sp;
            CVec::from_slice(&[z[0] * (-a) - z[1] * b, z[0] * d + z[1] * a])
        })
}

/// Sampled per-mode trajectory. `omega` is reconstructed as `xi_in - r`.
#[derive(Clone, Debug)]
pub struct ModeRun {
    pub times: Vec<f64>,
    pub r: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub omega: Vec<Complex64>,
    pub z: Vec<SymState>,
    pub stats: StepStats,
}

/// Integrate one inviscid mode over [0, horizon], sampling at `sample_times`.
pub fn solve_mode(
    init: &InviscidInit,
    f: Frequency,
    mach: f64,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<ModeRun> {
    let xi = init.xi_in();
    let sys = mode_system(f, mach, xi);
    let z0 = CVec::from_slice(&[init.r_in, init.a_in]);
    let traj = integrate(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, sample_times)?;
    let mut run = ModeRun {
        times: traj.times,
        r: Vec::new(),
        a: Vec::new(),
        omega: Vec::new(),
        z: Vec::new(),
        stats: traj.stats,
    };
    for (i, s) in traj.states.iter().enumerate() {
        let (r, a) = (s[0], s[1]);
        run.r.push(r);
        run.a.push(a);
        run.omega.push(xi - r);
        run.z.push(SymState::from_physical(r, a, run.times[i], f, mach));
    }
    Ok(run)
}

/// Integrate one inviscid mode, invoking the observer with `(t, r_hat, a_hat)`
/// at every accepted step.
pub fn solve_mode_observed(
    init: &InviscidInit,
    f: Frequency,
    mach: f64,
    horizon: f64,
    rtol: f64,
    mut observer: impl FnMut(f64, Complex64, Complex64),
) -> Result<StepStats> {
    let sys = mode_system(f, mach, init.xi_in());
    let z0 = CVec::from_slice(&[init.r_in, init.a_in]);
    let (_, stats) = integrate_observed(&sys, z0, 0.0, horizon, rtol, rtol * 1e-3, |t, z| {
        observer(t, z[0], z[1])
    })?;
    Ok(stats)
}

/// Annulus energy E = zeta |Z1|^2 + zeta^-1 |Z2|^2 + 2 (a/beta_s) Re(Z1 conj(Z2)).
pub fn annulus_energy(z: &SymState, t: f64, f: Frequency, mach: f64) -> f64 {
    let s = SymmetrizerCoeffs::new(t, f, mach);
    s.zeta * z.z1.norm_sqr() + z.z2.norm_sqr() / s.zeta
        + 2.0 * (s.a / s.beta_s) * (z.z1 * z.z2.conj()).re
}

/// Angular velocity of the homogeneous Z-flow:
/// dtheta = sqrt(p)/M + (2Mk^2/p^(3/2)) cos^2(theta) + (dt_p/(4p)) sin(2 theta).
pub fn phase_rhs(theta: f64, t: f64, f: Frequency, mach: f64) -> f64 {
    let s = SymmetrizerCoeffs::new(t, f, mach);
    let extra = s.d - s.b; // 2Mk^2/p^(3/2)
    s.b + extra * theta.cos() * theta.cos() + s.a * (2.0 * theta).sin()
}

/// |Z| without intermediate powf calls:
/// |Z|^2 = |R|^2 / (M^2 sqrt(p)) + |A|^2 / (p sqrt(p)).
pub fn sym_norm(r: Complex64, a: Complex64, t: f64, f: Frequency, mach: f64) -> f64 {
    let p = laplace_symbol(t, f);
    let sp = p.sqrt();
    (r.norm_sqr() / (mach * mach * sp) + a.norm_sqr() / (p * sp)).sqrt()
}

/// WKB envelope scale p(t)^(1/4): the predicted |R| envelope for M << 1 and
/// xi_in = 0.
pub fn wkb_envelope(t: f64, f: Frequency) -> f64 {
    laplace_symbol(t, f).powf(0.25)
}

/// Gamma(t) = Z_in + int_0^t Phi(0,s) F(s) xi_in ds, sampled on a grid, with a
/// tail-bound certificate for the limit.
#[derive(Clone, Debug)]
pub struct GammaRun {
    pub times: Vec<f64>,
    pub gamma: Vec<CVec>,
    /// Gamma at the far horizon, within `tail_bound` of the true limit.
    pub gamma_inf: CVec,
    pub tail_bound: f64,
}

impl GammaRun {
    pub fn min_abs(&self) -> f64 {
        self.gamma.iter().map(|g| g.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Bound on |int_T^inf Phi(0,s) F(s) xi_in ds| from |F| <= 2 k^2 p^(-7/4)
/// and p >= k^2 (s - eta/k)^2 past the critical time.
fn gamma_tail_bound(horizon: f64, f: Frequency, xi_abs: f64) -> f64 {
    let kf = f.kf().abs();
    let dt = horizon - f.critical_time();
    if dt <= 0.0 {
        return f64::INFINITY;
    }
    0.8 * kf.powf(-1.5) * dt.powf(-2.5) * xi_abs
}

/// Compute Gamma on `sample_times` (nondecreasing, within [0, horizon]).
///
/// Gamma is recovered as Phi(t,0)^(-1) Z(t) from one forced and two
/// fundamental-column integrations; the 2x2 inverse is adjugate/det with
/// det = 1 up to integrator tolerance, so the quadrature against Phi(0,s)
/// is performed by the adaptive integrator itself at tolerance `tol`. The
/// far horizon extends until the analytic tail bound drops below `tail_tol`
/// and `gamma_inf` is Gamma there.
pub fn gamma_fn(
    init: &InviscidInit,
    f: Frequency,
    mach: f64,
    sample_times: &[f64],
    tol: f64,
    tail_tol: f64,
) -> Result<GammaRun> {
    let xi = init.xi_in();
    let t_max = sample_times.last().copied().unwrap_or(0.0);
    let xi_abs = xi.norm();
    let mut far = f.critical_time().max(0.0) + 5.0;
    if xi_abs > 0.0 {
        while gamma_tail_bound(far, f, xi_abs) > tail_tol {
            far *= 1.5;
            if far > 1e9 {
                return Err(CoreError::Quadrature("Gamma tail bound did not converge".into()));
            }
        }
    }
    let far = far.max(t_max).max(1.0);

    let mut grid: Vec<f64> = sample_times.to_vec();
    if grid.last().copied() != Some(far) {
        grid.push(far);
    }

    let rtol = tol.min(1e-6);
    let zsys = sym_system(f, mach);
    let z_in = init.z_in(f, mach);
    let forced = forced_sym_system(f, mach, xi);
    let z_traj = integrate(&forced, z_in, 0.0, far, rtol, 1e-14, &grid)?;
    let e1 = integrate(&zsys, CVec::basis(2, 0), 0.0, far, rtol, 1e-14, &grid)?;
    let e2 = integrate(&zsys, CVec::basis(2, 1), 0.0, far, rtol, 1e-14, &grid)?;

    let gamma_at = |i: usize| -> CVec {
        let mut phi = CMat::zeros(2);
        phi.set_column(0, &e1.states[i]);
        phi.set_column(1, &e2.states[i]);
        phi.inv2().mul_vec(&z_traj.states[i])
    };
    let n = sample_times.len();
    let gamma: Vec<CVec> = (0..n).map(gamma_at).collect();
    let gamma_inf = gamma_at(grid.len() - 1);
    let tail = if xi_abs > 0.0 { gamma_tail_bound(far, f, xi_abs) } else { 0.0 };
    Ok(GammaRun { times: sample_times.to_vec(), gamma, gamma_inf, tail_bound: tail })
}

/// The symmetrized system with its Duhamel forcing `F(t) xi_in`.
fn forced_sym_system(f: Frequency, mach: f64, xi: Complex64) -> LinearSystem<'static> {
    if xi == Complex64::new(0.0, 0.0) {
        return sym_system(f, mach);
    }
    LinearSystem::forced(
        2,
        move |t| matrix_l(t, f, mach),
        move |t| {
            let fv = vector_f(t, f);
            CVec::from_slice(&[fv[0] * xi, fv[1] * xi])
        },
    )
    .with_stiffness_hint(move |t| laplace_symbol(t, f).sqrt() / mach)
    .with_fast_rhs(move |t, z| {
        let s = SymmetrizerCoeffs::new(t, f, mach);
        let fv = vector_f(t, f);
        CVec::from_slice(&[
            z[0] * (-s.a) - z[1] * s.b,
            z[0] * s.d + z[1] * s.a + fv[1] * xi,
        ])
    })
}

/// Outcome of the constructive generic perturbation.
#[derive(Clone, Debug)]
pub struct PerturbOutcome {
    pub perturbed: InviscidInit,
    /// Sampled inf_t |Gamma_eps(t)| over the horizon.
    pub inf_gamma: f64,
    /// The guaranteed floor eps e^{-(k^2+eta^2)} / 2.
    pub floor: f64,
    /// Norm displacement of the data (must be <= 2 eps).
    pub displacement: f64,
}

/// Perturb the initial data so that inf_t |Gamma(t)| stays above
/// eps e^{-(k^2+eta^2)} / 2 while moving the data by at most 2 eps:
/// shift rho and omega by +/- eps M (k^2+eta^2)^(1/4) e^{-(k^2+eta^2)} nu1
/// (leaving xi_in unchanged) and alpha by
/// eps (k^2+eta^2)^(3/4) e^{-(k^2+eta^2)} nu2, the unit direction (nu1, nu2)
/// chosen from 16 equispaced candidates by maximizing the sampled inf. When
/// the Duhamel limit vanishes, an alpha-only shift is applied first.
pub fn perturb_generic(
    init: &InviscidInit,
    f: Frequency,
    mach: f64,
    eps: f64,
    horizon: f64,
) -> Result<PerturbOutcome> {
    if !(eps > 0.0) {
        return Err(CoreError::InvalidParameter("eps must be positive".to_string()));
    }
    let k2e2 = (f.k() * f.k()) as f64 + f.eta() * f.eta();
    let gauss = (-k2e2).exp();
    if gauss == 0.0 {
        return Err(CoreError::PerturbationFailed(format!(
            "frequency weight e^-(k^2+eta^2) underflows at k^2+eta^2 = {k2e2}"
        )));
    }
    let shift_scale = eps * gauss;
    let floor = 0.5 * shift_scale;
    let r_unit = mach * k2e2.powf(0.25) * gauss; // per unit nu1, in rho and omega
    let a_unit = k2e2.powf(0.75) * gauss; // per unit nu2, in alpha

    let samples = crate::symbols::linspace(0.0, horizon, 4000);
    let tol = 1e-8;
    let tail_tol = 0.125 * eps;

    let mut work = *init;
    let mut displacement = 0.0;
    let mut run = gamma_fn(&work, f, mach, &samples, tol, tail_tol)?;

    // the unresolved tail must sit below eps/4 for the guarantee to be honest
    if run.tail_bound > 0.25 * eps {
        return Err(CoreError::PerturbationFailed(format!(
            "horizon {horizon} leaves Gamma tail bound {} above eps/4",
            run.tail_bound
        )));
    }

    if run.gamma_inf.norm() < floor {
        // Duhamel limit (numerically) vanishes: alpha-only shift first,
        // moving Gamma by the constant (0, shift_scale)
        work.a_in += Complex64::new(eps * a_unit, 0.0);
        displacement += eps * a_unit;
        run = gamma_fn(&work, f, mach, &samples, tol, tail_tol)?;
        if run.min_abs() >= floor {
            return Ok(PerturbOutcome {
                perturbed: work,
                inf_gamma: run.min_abs(),
                floor,
                displacement,
            });
        }
    }

    // scan 16 equispaced real directions and keep the best sampled inf
    let mut best: Option<(f64, f64, f64)> = None; // (inf, nu1, nu2)
    for j in 0..16 {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
        let (nu1, nu2) = (phi.cos(), phi.sin());
        let inf = run
            .gamma
            .iter()
            .map(|g| {
                let g1 = g[0] + Complex64::new(shift_scale * nu1, 0.0);
                let g2 = g[1] + Complex64::new(shift_scale * nu2, 0.0);
                (g1.norm_sqr() + g2.norm_sqr()).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(b, _, _)| inf > b) {
            best = Some((inf, nu1, nu2));
        }
    }
    let (inf, nu1, nu2) = best.expect("direction scan is nonempty");
    if inf < floor {
        return Err(CoreError::PerturbationFailed(format!(
            "no direction achieves the floor {floor}; best sampled inf {inf}"
        )));
    }
    let dr = Complex64::new(eps * r_unit * nu1, 0.0);
    let da = Complex64::new(eps * a_unit * nu2, 0.0);
    work.r_in += dr;
    work.omega_in -= dr;
    work.a_in += da;
    displacement += 2.0 * dr.norm() + da.norm();
    Ok(PerturbOutcome { perturbed: work, inf_gamma: inf, floor, displacement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::fundamental_matrix_picard;
    use crate::report::PeakTracker;
    use crate::symbols::linspace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn freq(k: i64, eta: f64) -> Frequency {
        Frequency::new(k, eta).unwrap()
    }

    #[test]
    fn rhs_rest_state() {
        let f = freq(3, 21.0);
        let (dr, da) = rhs_inviscid(1.0, c(0.0, 0.0), c(0.0, 0.0), f, 1.0, c(0.0, 0.0));
        assert_eq!(dr, c(0.0, 0.0));
        assert_eq!(da, c(0.0, 0.0));
    }

    #[test]
    fn rhs_at_critical_time() {
        // at t = eta/k: p = k^2, dt_p = 0, so dA = (k^2/M^2 + 2) R - 2 xi
        let f = freq(3, 21.0);
        let mach = 2.0;
        let r = c(1.5, -0.5);
        let xi = c(0.3, 0.2);
        let (_, da) = rhs_inviscid(7.0, r, c(0.0, 0.0), f, mach, xi);
        let expected = r * (9.0 / 4.0 + 2.0) - xi * 2.0;
        assert!((da - expected).norm() < 1e-14);
    }

    #[test]
    fn rhs_forced_preset_example() {
        // forced preset data (k=3, eta=21, M=1, R=A=0, xi=5) at t=0:
        // dA = -2*9/450*5 = -0.2
        let f = freq(3, 21.0);
        let (dr, da) = rhs_inviscid(0.0, c(0.0, 0.0), c(0.0, 0.0), f, 1.0, c(5.0, 0.0));
        assert_eq!(dr, c(0.0, 0.0));
        assert!((da - c(-0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_l_example_and_trace() {
        let f = freq(3, 21.0);
        let l = matrix_l(7.0, f, 1.0);
        assert!((l[(0, 0)] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((l[(0, 1)] - c(-3.0, 0.0)).norm() < 1e-14);
        assert!((l[(1, 0)] - c(3.0 + 2.0 / 3.0, 0.0)).norm() < 1e-14);
        // trace-free at random points
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ks = [-4i64, -2, -1, 1, 2, 3, 5];
        for _ in 0..1000 {
            let k = ks[rng.random_range(0..ks.len())];
            let f = freq(k, rng.random_range(-40.0..40.0));
            let t = rng.random_range(0.0..200.0);
            let mach = rng.random_range(0.05..20.0);
            let l = matrix_l(t, f, mach);
            assert_eq!(l.trace(), c(0.0, 0.0));
        }
    }

    #[test]
    fn vector_f_example() {
        // F(7; 3, 21) = (0, -18 / 9^(7/4)); 30-digit reference -0.3849001794597505
        let fv = vector_f(7.0, freq(3, 21.0));
        assert_eq!(fv[0], c(0.0, 0.0));
        assert!((fv[1].re - (-0.384_900_179_459_750_5)).abs() < 1e-15);
    }

    #[test]
    fn symmetrizer_bounds() {
        // 1 <= zeta^2 <= 1 + 2 M^2 and |a|/beta_s <= 1/(2 sqrt(2))
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ks = [-3i64, -1, 1, 2, 4];
        for _ in 0..1000 {
            let k = ks[rng.random_range(0..ks.len())];
            let f = freq(k, rng.random_range(-30.0..30.0));
            let t = rng.random_range(0.0..100.0);
            let mach = rng.random_range(0.1..10.0);
            let s = SymmetrizerCoeffs::new(t, f, mach);
            let z2 = s.zeta * s.zeta;
            assert!((1.0 - 1e-12..=1.0 + 2.0 * mach * mach + 1e-9).contains(&z2));
            assert!(s.a.abs() / s.beta_s <= 0.5 / 2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn conservation_by_reconstruction() {
        let f = freq(3, 21.0);
        let init = InviscidInit::new(c(1.0, 0.5), c(-2.0, 0.0), c(4.0, -0.5));
        let run = solve_mode(&init, f, 1.0, 50.0, 1e-8, &linspace(0.0, 50.0, 200)).unwrap();
        let xi = init.xi_in();
        for i in 0..run.times.len() {
            let resid = (run.r[i] + run.omega[i] - xi).norm() / xi.norm();
            assert!(resid < 1e-10);
        }
    }

    #[test]
    fn sym_state_round_trip() {
        let f = freq(2, -5.0);
        let (r, a) = (c(0.7, -1.2), c(3.0, 0.4));
        let z = SymState::from_physical(r, a, 13.0, f, 0.5);
        let (r2, a2) = z.to_physical(13.0, f, 0.5);
        assert!((r - r2).norm() / r.norm() < 1e-12);
        assert!((a - a2).norm() / a.norm() < 1e-12);
    }

    #[test]
    fn mode_system_matches_picard_short_time() {
        // inviscid homogeneous system for (k, eta, M) = (1, 0, 1) vs the
        // Picard fundamental matrix at t = 0.1
        let f = freq(1, 0.0);
        let sys = mode_system(f, 1.0, c(0.0, 0.0));
        let oracle = fundamental_matrix_picard(&sys, 0.0, 0.1, 10, 400).unwrap();
        assert!(oracle.last_term_norm < 1e-12);
        let z0 = CVec::from_slice(&[c(1.0, 0.0), c(0.3, 0.0)]);
        let traj = integrate(&sys, z0, 0.0, 0.1, 1e-9, 1e-12, &[0.1]).unwrap();
        let diff = (oracle.matrix.mul_vec(&z0) - traj.states[0]).norm();
        assert!(diff <= 1e-6, "diff {diff}");
    }

    #[test]
    fn homogeneous_band_and_energy() {
        // xi = 0: |Z(t)| stays in a fixed band; E stays within constants of E(0)
        let f = freq(3, 21.0);
        let mach = 1.0;
        let init = InviscidInit::new(c(1.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0)); // xi = 0
        let samples = linspace(0.0, 500.0, 1000);
        let run = solve_mode(&init, f, mach, 500.0, 1e-8, &samples).unwrap();
        let z0 = run.z[0].norm();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let e0 = annulus_energy(&run.z[0], 0.0, f, mach);
        let (mut elo, mut ehi) = (f64::INFINITY, 0.0f64);
        for (i, z) in run.z.iter().enumerate() {
            let ratio = z.norm() / z0;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            let e = annulus_energy(z, run.times[i], f, mach) / e0;
            elo = elo.min(e);
            ehi = ehi.max(e);
        }
        assert!(lo > 0.2 && hi < 5.0, "band [{lo}, {hi}]");
        assert!(elo > 0.2 && ehi < 5.0, "energy band [{elo}, {ehi}]");
    }

    #[test]
    fn energy_coercivity_random_states() {
        // 1/2 Etilde <= E <= 3/2 Etilde
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ks = [-2i64, 1, 3];
        for _ in 0..1000 {
            let k = ks[rng.random_range(0..ks.len())];
            let f = freq(k, rng.random_range(-20.0..20.0));
            let t = rng.random_range(0.0..50.0);
            let mach = rng.random_range(0.2..5.0);
            let z = SymState {
                z1: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                z2: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            };
            let s = SymmetrizerCoeffs::new(t, f, mach);
            let etilde = s.zeta * z.z1.norm_sqr() + z.z2.norm_sqr() / s.zeta;
            let e = annulus_energy(&z, t, f, mach);
            assert!(e >= 0.5 * etilde - 1e-12 && e <= 1.5 * etilde + 1e-12);
        }
    }

    #[test]
    fn energy_flat_on_late_decade() {
        // log-log slope of E over the last decade of a homogeneous run = 0 +- 0.02
        let f = freq(3, 21.0);
        let mach = 1.0;
        let init = InviscidInit::new(c(1.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0));
        let samples = linspace(1.0, 1000.0, 2000);
        let run = solve_mode(&init, f, mach, 1000.0, 1e-9, &samples).unwrap();
        let energies: Vec<f64> = run
            .z
            .iter()
            .zip(&run.times)
            .map(|(z, &t)| annulus_energy(z, t, f, mach))
            .collect();
        let fit = crate::report::fit_loglog(&run.times, &energies, 100.0, 1000.0).unwrap();
        assert!(fit.value.abs() <= 0.02, "slope {}", fit.value);
    }

    #[test]
    fn lower_bound_growth_of_sqrt_p_z() {
        // for xi = 0, sqrt(p) |Z|^2 grows with log-log slope >= 0.9 on [50, 500]
        let f = freq(3, 21.0);
        let mach = 1.0;
        let init = InviscidInit::new(c(1.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0));
        let samples = linspace(1.0, 500.0, 1500);
        let run = solve_mode(&init, f, mach, 500.0, 1e-8, &samples).unwrap();
        let vals: Vec<f64> = run
            .z
            .iter()
            .zip(&run.times)
            .map(|(z, &t)| laplace_symbol(t, f).sqrt() * z.norm() * z.norm())
            .collect();
        let fit = crate::report::fit_loglog(&run.times, &vals, 50.0, 500.0).unwrap();
        assert!(fit.value >= 0.9, "slope {}", fit.value);
    }

    #[test]
    fn phase_ode_examples() {
        let f = freq(3, 21.0);
        // cos(theta) = 0 at t = eta/k: dtheta = sqrt(p)/M = |k|/M
        let th = std::f64::consts::FRAC_PI_2;
        let mach = 2.0;
        assert!((phase_rhs(th, 7.0, f, mach) - 1.5).abs() < 1e-12);
        // large t: dtheta -> sqrt(p)/M within 1%
        let t = 7.0 + 1e3;
        let want = laplace_symbol(t, f).sqrt() / mach;
        for th in [0.0, 0.4, 1.0, 2.2] {
            let got = phase_rhs(th, t, f, mach);
            assert!((got - want).abs() / want < 0.01);
        }
    }

    #[test]
    fn phase_ode_residual_from_trajectory() {
        // extract theta from Re(Z1), Re(Z2) of a slow homogeneous run and
        // check the phase ODE by fourth-order finite differences
        let f = freq(1, 3.0);
        let mach = 2.0;
        let init_z = CVec::from_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let sys = sym_system(f, mach);
        let dt = 5e-4;
        let n = 4000;
        let samples: Vec<f64> = (0..=n).map(|i| 3.0 + dt * i as f64).collect();
        let traj = integrate(&sys, init_z, 0.0, samples[n], 1e-10, 1e-13, &samples).unwrap();
        let theta: Vec<f64> = {
            let mut out = Vec::with_capacity(traj.states.len());
            let mut prev: Option<f64> = None;
            for s in &traj.states {
                let mut th = s[1].re.atan2(s[0].re);
                if let Some(p) = prev {
                    while th - p > std::f64::consts::PI {
                        th -= 2.0 * std::f64::consts::PI;
                    }
                    while p - th > std::f64::consts::PI {
                        th += 2.0 * std::f64::consts::PI;
                    }
                }
                prev = Some(th);
                out.push(th);
            }
            out
        };
        let mut worst: f64 = 0.0;
        for i in 2..theta.len() - 2 {
            let fd = (-theta[i + 2] + 8.0 * theta[i + 1] - 8.0 * theta[i - 1] + theta[i - 2])
                / (12.0 * dt);
            let rhs = phase_rhs(theta[i], traj.times[i], f, mach);
            worst = worst.max((fd - rhs).abs());
        }
        assert!(worst < 1e-6, "max phase residual {worst}");
    }

    #[test]
    fn wkb_examples() {
        let f = freq(3, 21.0);
        assert!((wkb_envelope(7.0, f) - 3f64.sqrt()).abs() < 1e-14); // |k|^(1/2)
        assert!((wkb_envelope(0.0, f) - 450f64.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn wkb_envelope_flat_for_small_mach() {
        // M = 0.01 homogeneous run: peaks of |R| / p^(1/4) constant within 10%
        let f = freq(1, 0.0);
        let mach = 0.01;
        let init = InviscidInit::new(c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)); // xi = 0
        let mut peaks = PeakTracker::new();
        solve_mode_observed(&init, f, mach, 200.0, 1e-8, |t, r, _| {
            peaks.feed(t, r.norm());
        })
        .unwrap();
        let ratios: Vec<f64> = peaks
            .peaks()
            .iter()
            .filter(|(t, _)| (20.0..=200.0).contains(t))
            .map(|&(t, v)| v / wkb_envelope(t, f))
            .collect();
        assert!(ratios.len() > 100);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in &ratios {
            assert!((r / mean - 1.0).abs() <= 0.10, "ratio {r} vs mean {mean}");
        }
    }

    #[test]
    fn gamma_constant_without_forcing() {
        let f = freq(2, 5.0);
        let init = InviscidInit::new(c(0.4, 0.1), c(-0.3, 0.2), c(-0.4, -0.1)); // xi = 0
        let samples = linspace(0.0, 40.0, 80);
        let run = gamma_fn(&init, f, 1.0, &samples, 1e-8, 1e-4).unwrap();
        let z_in = init.z_in(f, 1.0);
        for g in &run.gamma {
            assert!((*g - z_in).norm() < 1e-6);
        }
    }

    #[test]
    fn gamma_converges_for_forced_mode() {
        // Z_in = 0, xi = 5: |Gamma| approaches a finite limit, Cauchy in t
        let f = freq(3, 21.0);
        let init = InviscidInit::new(c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0));
        let samples = linspace(0.0, 200.0, 400);
        let run = gamma_fn(&init, f, 1.0, &samples, 1e-8, 1e-4).unwrap();
        let n = run.gamma.len();
        let late: Vec<f64> = (n - 40..n).map(|i| run.gamma[i].norm()).collect();
        let spread = late.iter().cloned().fold(0.0f64, f64::max)
            - late.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-3, "late Gamma spread {spread}");
        assert!(run.gamma_inf.norm() > 0.0);
        assert!(run.tail_bound < 1e-4);
    }

    #[test]
    fn gamma_consistent_with_solve_mode() {
        // Z(t) from the forced run equals Phi(t,0) Gamma(t) within 10 tol
        let f = freq(3, 21.0);
        let mach = 1.0;
        let init = InviscidInit::new(c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)); // xi = 5
        let tol = 1e-8;
        let samples = linspace(0.0, 50.0, 100);
        let grun = gamma_fn(&init, f, mach, &samples, tol, 1e-2).unwrap();
        let run = solve_mode(&init, f, mach, 50.0, tol, &samples).unwrap();
        let zsys = sym_system(f, mach);
        for (i, &t) in samples.iter().enumerate().skip(1).step_by(9) {
            let phi = crate::integrator::solution_operator(&zsys, 0.0, t, tol).unwrap();
            let predicted = phi.mul_vec(&grun.gamma[i]);
            let actual = CVec::from_slice(&[run.z[i].z1, run.z[i].z2]);
            let diff = (predicted - actual).norm();
            assert!(diff <= 10.0 * tol * 100.0, "t={t}, diff={diff}");
        }
    }

    #[test]
    fn perturb_trivial_zero_data() {
        // xi = 0, Z_in = 0: result has |Gamma_eps| = eps e^{-(k^2+eta^2)} identically
        let f = freq(1, 1.0);
        let init = InviscidInit::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let eps = 1e-2;
        let out = perturb_generic(&init, f, 1.0, eps, 40.0).unwrap();
        let gauss = (-2.0f64).exp();
        assert!((out.inf_gamma - eps * gauss).abs() / (eps * gauss) < 1e-6);
        assert!(out.displacement <= 2.0 * eps);
    }

    #[test]
    fn perturb_moves_data_little_when_gamma_never_small() {
        let f = freq(3, 21.0);
        let init = InviscidInit::new(c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0));
        let eps = 1e-3;
        let out = perturb_generic(&init, f, 1.0, eps, 80.0).unwrap();
        assert!(out.displacement <= 2.0 * eps);
        assert!(out.inf_gamma >= out.floor);
        // data barely moved
        assert!((out.perturbed.r_in - init.r_in).norm() <= eps);
        // xi unchanged
        assert!((out.perturbed.xi_in() - init.xi_in()).norm() < 1e-15);
    }

    #[test]
    fn perturb_handles_gamma_crossing_zero() {
        // choose Z_in so that Gamma = Z_in + integral crosses zero: take
        // Z_in = -Gamma_forced(T/2) for the forced-only problem
        let f = freq(3, 21.0);
        let mach = 1.0;
        let base = InviscidInit::new(c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0));
        let samples = linspace(0.0, 60.0, 240);
        let forced = gamma_fn(&base, f, mach, &samples, 1e-9, 1e-3).unwrap();
        let mid = forced.gamma[120];
        let p0 = laplace_symbol(0.0, f);
        // initial data whose Z_in = -mid
        let r_in = mid[0] * (-mach * p0.powf(0.25));
        let a_in = mid[1] * (-p0.powf(0.75));
        let init = InviscidInit::new(r_in, a_in, c(5.0, 0.0) - r_in);
        let eps = 1e-3;
        let out = perturb_generic(&init, f, mach, eps, 60.0).unwrap();
        assert!(out.inf_gamma >= out.floor);
        assert!(out.displacement <= 2.0 * eps);
    }
}
