//! Closed-form scalar symbols and Fourier multipliers of the moving-frame dynamics.
//!
//! Everything here is a pure function of `(t, k, eta)` and the fluid
//! parameters: the shifted Laplacian symbol `p` and its time derivative, the
//! enhanced-dissipation multiplier `m`, the critical-window weight `w`, the
//! accumulated heat phase `l_nu`, and an audit that checks every inequality
//! these multipliers are required to satisfy.

use crate::error::{CoreError, Result};
use serde::Serialize;

/// A single nonzero-k Fourier mode label. The k = 0 channel lives in [`crate::zero_mode`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frequency {
    k: i64,
    eta: f64,
}

impl Frequency {
    pub fn new(k: i64, eta: f64) -> Result<Self> {
        if k == 0 {
            return Err(CoreError::ZeroWavenumber);
        }
        if !eta.is_finite() {
            return Err(CoreError::InvalidParameter(format!("eta must be finite, got {eta}")));
        }
        Ok(Frequency { k, eta })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The critical time eta/k, where dt_p changes sign.
    pub fn critical_time(&self) -> f64 {
        self.eta / self.k as f64
    }

    /// 1 + k^2 + eta^2, the squared Japanese bracket of the pair.
    pub fn bracket_sq(&self) -> f64 {
        1.0 + (self.k * self.k) as f64 + self.eta * self.eta
    }
}

/// Mach number and viscosities. `mu = shear_visc + bulk_visc` is derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub mach: f64,
    pub shear_visc: f64,
    pub bulk_visc: f64,
}

impl FluidParams {
    pub fn new(mach: f64, shear_visc: f64, bulk_visc: f64) -> Result<Self> {
        if !(mach > 0.0) || !mach.is_finite() {
            return Err(CoreError::InvalidParameter(format!("mach must be > 0, got {mach}")));
        }
        if shear_visc < 0.0 || bulk_visc < 0.0 {
            return Err(CoreError::InvalidParameter(
                "viscosities must be nonnegative".to_string(),
            ));
        }
        Ok(FluidParams { mach, shear_visc, bulk_visc })
    }

    pub fn inviscid(mach: f64) -> Result<Self> {
        Self::new(mach, 0.0, 0.0)
    }

    /// mu = nu + lambda, exactly.
    pub fn mu(&self) -> f64 {
        self.shear_visc + self.bulk_visc
    }

    pub fn is_inviscid(&self) -> bool {
        self.shear_visc == 0.0 && self.bulk_visc == 0.0
    }

    /// True when `mu <= 1/2` and `M * max(mu^(1/2), nu^(1/3)) <= 1`.
    /// Runs outside this regime are permitted but should be flagged.
    pub fn in_theorem_regime(&self) -> bool {
        let mu = self.mu();
        mu <= 0.5 && self.mach * mu.sqrt().max(self.shear_visc.cbrt()) <= 1.0
    }
}

/// Parameters of the critical-window weight `w`: requires
/// `max(2/(beta(beta^2-1)), 4/beta) < delta_beta <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightParams {
    beta: f64,
    delta_beta: f64,
}

impl WeightParams {
    pub fn new(beta: f64, delta_beta: f64) -> Result<Self> {
        if !(beta > 2.0) || !(delta_beta > 0.0) || delta_beta > 1.0 {
            return Err(CoreError::InadmissibleWeight { beta, delta_beta });
        }
        let floor = (2.0 / (beta * (beta * beta - 1.0))).max(4.0 / beta);
        if !(delta_beta > floor) {
            return Err(CoreError::InadmissibleWeight { beta, delta_beta });
        }
        Ok(WeightParams { beta, delta_beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta_beta(&self) -> f64 {
        self.delta_beta
    }
}

impl Default for WeightParams {
    /// beta = 50, delta_beta = 1/12. Admissible: max(2/(50*2499), 4/50) = 0.08 < 1/12.
    fn default() -> Self {
        WeightParams::new(50.0, 1.0 / 12.0).expect("default weight parameters are admissible")
    }
}

/// p(t,k,eta) = k^2 + (eta - kt)^2, the moving-frame Laplacian symbol.
/// Strictly positive with minimum k^2 at the critical time t = eta/k.
#[inline]
pub fn laplace_symbol(t: f64, f: Frequency) -> f64 {
    let k = f.kf();
    let shifted = f.eta - k * t;
    k * k + shifted * shifted
}

/// dt_p(t,k,eta) = -2k(eta - kt). Vanishes exactly at t = eta/k and satisfies
/// |dt_p| <= 2|k| sqrt(p).
#[inline]
pub fn laplace_symbol_dt(t: f64, f: Frequency) -> f64 {
    let k = f.kf();
    -2.0 * k * (f.eta - k * t)
}

/// m(t,k,eta) = exp(2 arctan(nu^(1/3) (t - eta/k))), valued in (e^-pi, e^pi).
#[inline]
pub fn mult_m(t: f64, f: Frequency, nu: f64) -> f64 {
    debug_assert!(nu > 0.0);
    (2.0 * (nu.cbrt() * (t - f.critical_time())).atan()).exp()
}

/// dt_m / m = 2 nu^(1/3) / (nu^(2/3) (eta/k - t)^2 + 1).
#[inline]
pub fn mult_m_log_deriv(t: f64, f: Frequency, nu: f64) -> f64 {
    debug_assert!(nu > 0.0);
    let n3 = nu.cbrt();
    let d = f.critical_time() - t;
    2.0 * n3 / (n3 * n3 * d * d + 1.0)
}

/// Which branch of the piecewise weight `w` applies at time t.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WBranch {
    /// Before the window (or the window never meets t >= 0): w = 1.
    Unit,
    /// Inside [eta/k, eta/k + beta nu^(-1/3)]: w = p/k^2.
    Window,
    /// After the window: w = 1 + beta^2 nu^(-2/3).
    Terminal,
}

/// Branch decision plus the offset dt = t - eta/k and window length
/// beta nu^(-1/3). The branch test compares dt against the window length
/// directly so that the seam equalities of the audited inequalities evaluate
/// exactly (fl(x*x) is monotone in |x|).
fn w_parts(t: f64, f: Frequency, nu: f64, wp: &WeightParams) -> (WBranch, f64, f64) {
    let tc = f.critical_time();
    let win = wp.beta / nu.cbrt();
    let dt = t - tc;
    if f.eta * f.kf() < 0.0 && tc.abs() >= win {
        return (WBranch::Unit, dt, win);
    }
    let branch = if dt < 0.0 {
        WBranch::Unit
    } else if dt <= win {
        WBranch::Window
    } else {
        WBranch::Terminal
    };
    (branch, dt, win)
}

/// The terminal plateau 1 + beta^2 nu^(-2/3), which is also the exact
/// supremum of the piecewise formula (attained at the end of the window).
pub fn w_sup(nu: f64, wp: &WeightParams) -> f64 {
    let win = wp.beta / nu.cbrt();
    1.0 + win * win
}

/// The critical-window weight: 1 before the window, p/k^2 inside
/// [eta/k, eta/k + beta nu^(-1/3)], and 1 + beta^2 nu^(-2/3) afterwards.
/// Continuous in t at both window endpoints.
pub fn mult_w(t: f64, f: Frequency, nu: f64, wp: &WeightParams) -> f64 {
    debug_assert!(nu > 0.0);
    match w_parts(t, f, nu, wp).0 {
        WBranch::Unit => 1.0,
        WBranch::Window => laplace_symbol(t, f) / (f.kf() * f.kf()),
        WBranch::Terminal => w_sup(nu, wp),
    }
}

/// dt_w / w: equal to dt_p/p inside the window and 0 elsewhere.
pub fn mult_w_log_deriv(t: f64, f: Frequency, nu: f64, wp: &WeightParams) -> f64 {
    match w_parts(t, f, nu, wp).0 {
        WBranch::Window => laplace_symbol_dt(t, f) / laplace_symbol(t, f),
        _ => 0.0,
    }
}

/// l_nu(t) = nu * int_0^t p(tau) dtau, in closed form:
/// nu (k^2 t + eta^2 t - eta k t^2 + k^2 t^3 / 3). Satisfies l_nu >= nu k^2 t^3 / 12.
#[inline]
pub fn l_nu(t: f64, f: Frequency, nu: f64) -> f64 {
    let k = f.kf();
    let k2 = k * k;
    nu * t * (k2 + f.eta * f.eta - f.eta * k * t + k2 * t * t / 3.0)
}

/// Names and slack expressions of the five multiplier inequalities.
pub const INEQUALITY_NAMES: [&str; 5] = [
    "nu*p + dtm/m >= nu^(1/3)",
    "1 <= w <= 1 + beta^2 nu^(-2/3)",
    "w/p <= 1/k^2",
    "delta*(dtm/m + nu*p) + dtw/w - dtp/p >= delta*nu^(1/3)",
    "delta*(dtm/m + nu^(1/3)) + dtw/w - dtp/p >= (delta/2)*nu^(1/3)",
];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InequalitySlack {
    pub index: usize,
    pub min_slack: f64,
    pub argmin_t: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub slack: f64,
}

/// Result of auditing the five multiplier inequalities over a time grid at one mode.
#[derive(Clone, Debug, Serialize)]
pub struct MultiplierAudit {
    pub k: i64,
    pub eta: f64,
    pub nu: f64,
    pub slacks: [InequalitySlack; 5],
    pub violations: Vec<Violation>,
}

impl MultiplierAudit {
    pub fn all_nonnegative(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().map(|s| s.min_slack).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate the five inequalities at every grid point and report the minimal
/// slack of each one. Violations are reported with the offending t, never clamped.
///
/// The upper bound on `w` is checked against 1 + beta^2 nu^(-2/3), the exact
/// supremum of the piecewise formula (attained at the end of the window).
pub fn check_multiplier_inequalities(
    f: Frequency,
    nu: f64,
    wp: &WeightParams,
    t_grid: &[f64],
) -> Result<MultiplierAudit> {
    if t_grid.is_empty() {
        return Err(CoreError::InvalidParameter("t_grid must be nonempty".to_string()));
    }
    if !(nu > 0.0) {
        return Err(CoreError::InvalidParameter(format!("nu must be > 0, got {nu}")));
    }
    let n3 = nu.cbrt();
    let delta = wp.delta_beta();
    let sup = w_sup(nu, wp);
    let k2 = f.kf() * f.kf();

    let mut slacks =
        [InequalitySlack { index: 0, min_slack: f64::INFINITY, argmin_t: f64::NAN }; 5];
    for (i, s) in slacks.iter_mut().enumerate() {
        s.index = i;
    }
    let mut violations = Vec::new();

    for &t in t_grid {
        let p = laplace_symbol(t, f);
        let dtp_over_p = laplace_symbol_dt(t, f) / p;
        let dtm_over_m = mult_m_log_deriv(t, f, nu);
        let dtw_over_w = mult_w_log_deriv(t, f, nu, wp);
        let (branch, dt, win) = w_parts(t, f, nu, wp);

        // the range and w/p inequalities hold with equality at the window
        // seams; evaluating their slacks branch-wise in seam-coherent forms
        // keeps the exact equalities at 0 instead of -1 ulp
        let range_slack = match branch {
            // w = 1: lower slack is exactly 0, upper is sup - 1 = win^2
            WBranch::Unit => 0.0f64.min(sup - 1.0),
            // w = p/k^2: lower (p - k^2)/k^2, upper win^2 - dt^2 (>= 0 since
            // the branch test compared dt <= win and fl(x*x) is monotone)
            WBranch::Window => ((p - k2) / k2).min(win * win - dt * dt),
            // w = sup exactly: upper slack 0, lower win^2
            WBranch::Terminal => (win * win).min(0.0),
        };
        let wp_slack = match branch {
            WBranch::Unit => (p - k2) / (k2 * p),
            WBranch::Window => 0.0,
            WBranch::Terminal => (dt * dt - win * win) / (k2 * (1.0 + dt * dt)),
        };

        let values = [
            nu * p + dtm_over_m - n3,
            range_slack,
            wp_slack,
            delta * (dtm_over_m + nu * p) + dtw_over_w - dtp_over_p - delta * n3,
            delta * (dtm_over_m + n3) + dtw_over_w - dtp_over_p - 0.5 * delta * n3,
        ];
        for (i, &v) in values.iter().enumerate() {
            if v < slacks[i].min_slack {
                slacks[i].min_slack = v;
                slacks[i].argmin_t = t;
            }
            if v < 0.0 {
                violations.push(Violation { index: i, t, slack: v });
            }
        }
    }

    Ok(MultiplierAudit { k: f.k(), eta: f.eta(), nu, slacks, violations })
}

/// Evenly spaced grid of n points on [lo, hi], endpoints included exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}
