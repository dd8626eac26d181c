//! Multi-mode spectral perturbations on T x R and their diagnostics.
//!
//! A field is a finite set of moving-frame mode states over a (k, eta)-grid,
//! with integral norms discretized by the trapezoid measure d_eta per mode.
//! Physical-space norms are computed in the moving frame by symbol
//! substitution (the change of variables is measure-preserving, so e.g.
//! ||grad rho|| = ||p^(1/2) R_hat||); no inverse transform enters any
//! diagnostic. The k = 0 channel, when populated, evolves through
//! [`crate::zero_mode`].

use crate::error::{CoreError, Result};
use crate::inviscid;
use crate::symbols::{laplace_symbol, FluidParams, Frequency};
use crate::viscous::{self, ViscousState};
use crate::zero_mode::{self, ZeroModeState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const FIELD_SCHEMA: &str = "cspec-field/1";

/// Frequency grid {(k, j d_eta) : 1 <= |k| <= k_max, |j| <= eta_max/d_eta}.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_max: i64,
    pub eta_max: f64,
    pub d_eta: f64,
}

impl GridSpec {
    pub fn new(k_max: i64, eta_max: f64, d_eta: f64) -> Result<Self> {
        if k_max < 1 || !(d_eta > 0.0) || !(eta_max >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "bad grid: k_max={k_max}, eta_max={eta_max}, d_eta={d_eta}"
            )));
        }
        Ok(GridSpec { k_max, eta_max, d_eta })
    }

    /// Default grid sized so the built-in presets and slope windows fit.
    pub fn standard() -> Self {
        GridSpec { k_max: 8, eta_max: 64.0, d_eta: 0.5 }
    }

    pub fn j_max(&self) -> i64 {
        (self.eta_max / self.d_eta + 1e-9).floor() as i64
    }

    pub fn eta(&self, j: i64) -> f64 {
        j as f64 * self.d_eta
    }

    pub fn contains(&self, k: i64, j: i64) -> bool {
        k != 0 && k.abs() <= self.k_max && j.abs() <= self.j_max()
    }
}

/// One mode's (rho, alpha, omega) coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeState {
    pub rho: Complex64,
    pub alpha: Complex64,
    pub omega: Complex64,
}

impl ModeState {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        ModeState { rho: z, alpha: z, omega: z }
    }

    pub fn conj(&self) -> Self {
        ModeState { rho: self.rho.conj(), alpha: self.alpha.conj(), omega: self.omega.conj() }
    }

    pub fn xi(&self) -> Complex64 {
        self.rho + self.omega
    }
}

/// A spectral perturbation: per-mode states over the grid plus an optional
/// k = 0 channel, at one instant of moving-frame time.
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub time: f64,
    /// Fluctuation modes keyed by (k, j), deterministic order.
    pub modes: BTreeMap<(i64, i64), ModeState>,
    /// k = 0 channel keyed by j (j != 0).
    pub zero_modes: BTreeMap<i64, ModeState>,
}

/// Built-in initial perturbations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// R = A = 0, Xi = 5 at (k, eta) = (3, 21) plus the conjugate mode.
    Fig1Forced,
    /// R = 20, A = 50, Xi = 5 at (3, 21) plus the conjugate mode.
    Fig1Transient,
    /// Conjugate-symmetric band with deterministic smooth eta-profile and
    /// seeded random per-k amplitudes/phases (smooth in eta so that grid
    /// refinement converges).
    RandomBand { seed: u64 },
}

impl SpectralField {
    pub fn empty(grid: GridSpec) -> Self {
        SpectralField { grid, time: 0.0, modes: BTreeMap::new(), zero_modes: BTreeMap::new() }
    }

    /// Assemble from an explicit mode list; off-grid modes are rejected.
    /// Conjugate symmetry is the caller's responsibility here.
    pub fn assemble(grid: GridSpec, entries: &[(i64, i64, ModeState)]) -> Result<Self> {
        let mut field = SpectralField::empty(grid);
        for &(k, j, state) in entries {
            if k == 0 {
                if j == 0 {
                    return Err(CoreError::OffGridMode { k, j });
                }
                field.zero_modes.insert(j, state);
                continue;
            }
            if !grid.contains(k, j) {
                return Err(CoreError::OffGridMode { k, j });
            }
            field.modes.insert((k, j), state);
        }
        Ok(field)
    }

    /// Assemble one of the built-in presets on the grid.
    pub fn preset(grid: GridSpec, preset: Preset) -> Result<Self> {
        match preset {
            Preset::Fig1Forced => {
                let state = ModeState {
                    rho: Complex64::new(0.0, 0.0),
                    alpha: Complex64::new(0.0, 0.0),
                    omega: Complex64::new(5.0, 0.0),
                };
                Self::conjugate_pair(grid, 3, 21.0, state)
            }
            Preset::Fig1Transient => {
                let state = ModeState {
                    rho: Complex64::new(20.0, 0.0),
                    alpha: Complex64::new(50.0, 0.0),
                    // Xi = rho + omega = 5
                    omega: Complex64::new(-15.0, 0.0),
                };
                Self::conjugate_pair(grid, 3, 21.0, state)
            }
            Preset::RandomBand { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut entries = Vec::new();
                for k in 1..=grid.k_max.min(4) {
                    // random per-k amplitude and phase; smooth Gaussian eta-profile
                    let amp = rng.random_range(0.5..1.5) * (-(k as f64) / 2.0).exp();
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    let rot = Complex64::new(phase.cos(), phase.sin());
                    for j in -grid.j_max()..=grid.j_max() {
                        let eta = grid.eta(j);
                        let profile = (-0.5 * (eta / 4.0) * (eta / 4.0)).exp();
                        if profile < 1e-8 {
                            continue;
                        }
                        let state = ModeState {
                            rho: rot * (amp * profile),
                            alpha: rot * (0.3 * amp * profile),
                            omega: rot * (-0.5 * amp * profile),
                        };
                        entries.push((k, j, state));
                        entries.push((-k, -j, state.conj()));
                    }
                }
                Self::assemble(grid, &entries)
            }
        }
    }

    fn conjugate_pair(grid: GridSpec, k: i64, eta: f64, state: ModeState) -> Result<Self> {
        let j = (eta / grid.d_eta).round() as i64;
        if (grid.eta(j) - eta).abs() > 1e-9 {
            return Err(CoreError::OffGridMode { k, j });
        }
        Self::assemble(grid, &[(k, j, state), (-k, -j, state.conj())])
    }

    /// Max violation of conjugate symmetry over paired modes.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&(k, j), s) in &self.modes {
            if let Some(t) = self.modes.get(&(-k, -j)) {
                let c = t.conj();
                worst = worst
                    .max((s.rho - c.rho).norm())
                    .max((s.alpha - c.alpha).norm())
                    .max((s.omega - c.omega).norm());
            }
        }
        worst
    }
}

/// Helmholtz-split norms of a field, all in the moving frame:
/// q = ||p^(-1/2) A||, px = ||((eta - kt)/p) Omega||, py = ||(k/p) Omega||,
/// rho = ||R||; the velocity satisfies ||v||^2 = q^2 + px^2 + py^2.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct HelmholtzNorms {
    pub q: f64,
    pub px: f64,
    pub py: f64,
    pub rho: f64,
}

impl HelmholtzNorms {
    pub fn velocity(&self) -> f64 {
        (self.q * self.q + self.px * self.px + self.py * self.py).sqrt()
    }
}

/// Norm accumulation helper: sums |weight * coefficient|^2 * d_eta over modes.
struct NormAcc {
    acc: [f64; 4],
    d_eta: f64,
}

impl NormAcc {
    fn add(&mut self, idx: usize, value: f64) {
        self.acc[idx] += value * value * self.d_eta;
    }
}

/// Helmholtz norms of the field at its own time.
pub fn helmholtz_norms(field: &SpectralField) -> HelmholtzNorms {
    let t = field.time;
    let mut acc = NormAcc { acc: [0.0; 4], d_eta: field.grid.d_eta };
    for (&(k, j), s) in &field.modes {
        let f = Frequency::new(k, field.grid.eta(j)).expect("grid modes have k != 0");
        let p = laplace_symbol(t, f);
        let shifted = f.eta() - f.kf() * t;
        acc.add(0, s.alpha.norm() / p.sqrt());
        acc.add(1, shifted.abs() / p * s.omega.norm());
        acc.add(2, f.kf().abs() / p * s.omega.norm());
        acc.add(3, s.rho.norm());
    }
    for (&j, s) in &field.zero_modes {
        let eta = field.grid.eta(j);
        // k = 0: no shear shift; Q from alpha_0, P is purely x-directed
        acc.add(0, s.alpha.norm() / eta.abs());
        acc.add(1, s.omega.norm() / eta.abs());
        acc.add(3, s.rho.norm());
    }
    HelmholtzNorms {
        q: acc.acc[0].sqrt(),
        px: acc.acc[1].sqrt(),
        py: acc.acc[2].sqrt(),
        rho: acc.acc[3].sqrt(),
    }
}

/// Same norms with omega replaced per-mode by a caller-selected part
/// (e.g. the conserved xi_in, or the -R feedback), used to separate the two
/// decay channels of the solenoidal component.
pub fn helmholtz_norms_with_omega(
    field: &SpectralField,
    omega_of: impl Fn(i64, i64, &ModeState) -> Complex64,
) -> HelmholtzNorms {
    let t = field.time;
    let mut acc = NormAcc { acc: [0.0; 4], d_eta: field.grid.d_eta };
    for (&(k, j), s) in &field.modes {
        let f = Frequency::new(k, field.grid.eta(j)).expect("grid modes have k != 0");
        let p = laplace_symbol(t, f);
        let shifted = f.eta() - f.kf() * t;
        let omega = omega_of(k, j, s);
        acc.add(0, s.alpha.norm() / p.sqrt());
        acc.add(1, shifted.abs() / p * omega.norm());
        acc.add(2, f.kf().abs() / p * omega.norm());
        acc.add(3, s.rho.norm());
    }
    HelmholtzNorms {
        q: acc.acc[0].sqrt(),
        px: acc.acc[1].sqrt(),
        py: acc.acc[2].sqrt(),
        rho: acc.acc[3].sqrt(),
    }
}

/// Sobolev weight specification. Weights are evaluated at the field's time in
/// physical-frame frequencies (k, eta - kt): ISO(s) uses
/// (1 + k^2 + (eta - kt)^2)^s, ANISO uses <k>^(2 s1) <eta - kt>^(2 s2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    L2,
    Iso { s: f64 },
    Aniso { s1: f64, s2: f64 },
}

/// Field quantity whose weighted norm is requested. Velocity components carry
/// their homogeneous |grad|^(-1)-type symbol factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldQuantity {
    Rho,
    Alpha,
    Omega,
    /// |Q[v]| per mode: |A| / sqrt(p).
    QVelocity,
    /// |P[v]^x| per mode: |eta - kt| / p * |Omega|.
    PxVelocity,
    /// |P[v]^y| per mode: |k| / p * |Omega|.
    PyVelocity,
}

/// Discrete weighted l^2 norm of one quantity of the field.
pub fn sobolev_norm(field: &SpectralField, spec: NormSpec, quantity: FieldQuantity) -> f64 {
    let t = field.time;
    let mut acc = 0.0;
    for (&(k, j), s) in &field.modes {
        let f = Frequency::new(k, field.grid.eta(j)).expect("grid modes have k != 0");
        let p = laplace_symbol(t, f);
        let shifted = f.eta() - f.kf() * t;
        let mag = match quantity {
            FieldQuantity::Rho => s.rho.norm(),
            FieldQuantity::Alpha => s.alpha.norm(),
            FieldQuantity::Omega => s.omega.norm(),
            FieldQuantity::QVelocity => s.alpha.norm() / p.sqrt(),
            FieldQuantity::PxVelocity => shifted.abs() / p * s.omega.norm(),
            FieldQuantity::PyVelocity => f.kf().abs() / p * s.omega.norm(),
        };
        let weight = match spec {
            NormSpec::L2 => 1.0,
            NormSpec::Iso { s } => (1.0 + (k * k) as f64 + shifted * shifted).powf(s),
            NormSpec::Aniso { s1, s2 } => {
                (1.0 + (k * k) as f64).powf(s1) * (1.0 + shifted * shifted).powf(s2)
            }
        };
        acc += weight * mag * mag * field.grid.d_eta;
    }
    acc.sqrt()
}

/// Evolved field snapshots plus per-sample Helmholtz norms.
#[derive(Clone, Debug)]
pub struct FieldRun {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    pub norms: Vec<HelmholtzNorms>,
}

/// Evolve every mode of the field to the sample times. Routes to the inviscid
/// 2x2 solver when nu = lambda = 0 (with omega reconstructed from xi_in) and
/// to the viscous 3x3 solver otherwise; the k = 0 channel goes through
/// zero_mode. Mode evolution is a deterministic parallel map merged in grid
/// order.
pub fn run_field(
    field: &SpectralField,
    params: &FluidParams,
    horizon: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<FieldRun> {
    let keys: Vec<(i64, i64)> = field.modes.keys().copied().collect();
    let results: Vec<Result<Vec<ModeState>>> = crate::par::par_map(&keys, |&(k, j)| {
        let s = field.modes[&(k, j)];
        let f = Frequency::new(k, field.grid.eta(j))?;
        if params.is_inviscid() {
            let init = inviscid::InviscidInit::new(s.rho, s.alpha, s.omega);
            let run = inviscid::solve_mode(&init, f, params.mach, horizon, rtol, sample_times)?;
            Ok((0..sample_times.len())
                .map(|i| ModeState { rho: run.r[i], alpha: run.a[i], omega: run.omega[i] })
                .collect())
        } else {
            let init = ViscousState::new(s.rho, s.alpha, s.omega);
            let run = viscous::solve_viscous(&init, f, params, horizon, rtol, sample_times)?;
            Ok(run
                .states
                .iter()
                .map(|v| ModeState { rho: v.r, alpha: v.a, omega: v.omega })
                .collect())
        }
    });

    let zero_keys: Vec<i64> = field.zero_modes.keys().copied().collect();
    let zero_results: Vec<Result<Vec<ModeState>>> = crate::par::par_map(&zero_keys, |&j| {
        let s = field.zero_modes[&j];
        let init = ZeroModeState::new(s.rho, s.alpha, s.omega, field.grid.eta(j));
        let run = zero_mode::solve_zero_mode(&init, params, horizon, rtol, sample_times)?;
        Ok(run
            .states
            .iter()
            .map(|z| ModeState { rho: z.rho, alpha: z.alpha, omega: z.omega })
            .collect())
    });

    let mut fields: Vec<SpectralField> = sample_times
        .iter()
        .map(|&t| {
            let mut f = SpectralField::empty(field.grid);
            f.time = t;
            f
        })
        .collect();
    for (key, result) in keys.iter().zip(results) {
        let series = result?;
        for (i, state) in series.into_iter().enumerate() {
            fields[i].modes.insert(*key, state);
        }
    }
    for (j, result) in zero_keys.iter().zip(zero_results) {
        let series = result?;
        for (i, state) in series.into_iter().enumerate() {
            fields[i].zero_modes.insert(*j, state);
        }
    }
    let norms = fields.iter().map(helmholtz_norms).collect();
    Ok(FieldRun { times: sample_times.to_vec(), fields, norms })
}

// --- field file I/O, schema "cspec-field/1" ---

#[derive(Serialize, Deserialize)]
struct FieldFileMode {
    k: i64,
    j: i64,
    rho_re: f64,
    rho_im: f64,
    alpha_re: f64,
    alpha_im: f64,
    omega_re: f64,
    omega_im: f64,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    schema: String,
    grid: GridSpec,
    time: f64,
    modes: Vec<FieldFileMode>,
}

pub fn to_json(field: &SpectralField) -> Result<String> {
    let mut modes = Vec::new();
    let entries = field
        .modes
        .iter()
        .map(|(&(k, j), s)| (k, j, *s))
        .chain(field.zero_modes.iter().map(|(&j, s)| (0i64, j, *s)));
    for (k, j, s) in entries {
        modes.push(FieldFileMode {
            k,
            j,
            rho_re: s.rho.re,
            rho_im: s.rho.im,
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
            omega_re: s.omega.re,
            omega_im: s.omega.im,
        });
    }
    let file =
        FieldFile { schema: FIELD_SCHEMA.to_string(), grid: field.grid, time: field.time, modes };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str) -> Result<SpectralField> {
    let file: FieldFile = serde_json::from_str(text)?;
    if file.schema != FIELD_SCHEMA {
        return Err(CoreError::InvalidParameter(format!(
            "unsupported field schema {:?}, expected {FIELD_SCHEMA:?}",
            file.schema
        )));
    }
    let entries: Vec<(i64, i64, ModeState)> = file
        .modes
        .iter()
        .map(|m| {
            (
                m.k,
                m.j,
                ModeState {
                    rho: Complex64::new(m.rho_re, m.rho_im),
                    alpha: Complex64::new(m.alpha_re, m.alpha_im),
                    omega: Complex64::new(m.omega_re, m.omega_im),
                },
            )
        })
        .collect();
    let mut field = SpectralField::assemble(file.grid, &entries)?;
    field.time = file.time;
    Ok(field)
}

/// Sampled inverse transform of the density on a truncated window
/// [-l_y/2, l_y/2] x [0, 2 pi), for visualization only. The y-window
/// truncation error is not controlled (documented as outside test scope);
/// the snapshot is in moving-frame coordinates (X, Y).
pub fn export_density_samples(
    field: &SpectralField,
    nx: usize,
    ny: usize,
    l_y: f64,
) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(nx * ny);
    let tau = std::f64::consts::TAU;
    for iy in 0..ny {
        let y = -0.5 * l_y + l_y * iy as f64 / (ny.max(2) - 1) as f64;
        for ix in 0..nx {
            let x = tau * ix as f64 / nx as f64;
            let mut val = Complex64::new(0.0, 0.0);
            let entries = field
                .modes
                .iter()
                .map(|(&(k, j), s)| (k, j, s))
                .chain(field.zero_modes.iter().map(|(&j, s)| (0i64, j, s)));
            for (k, j, s) in entries {
                let eta = field.grid.eta(j);
                let phase = Complex64::new(0.0, k as f64 * x + eta * y).exp();
                val += s.rho * phase * field.grid.d_eta;
            }
            out.push((x, y, val.re / tau));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn presets_populate_expected_modes() {
        let grid = GridSpec::standard();
        let f1 = SpectralField::preset(grid, Preset::Fig1Forced).unwrap();
        assert_eq!(f1.modes.len(), 2);
        let s = f1.modes[&(3, 42)];
        assert_eq!(s.xi(), c(5.0, 0.0));
        assert_eq!(s.rho, c(0.0, 0.0));
        let f2 = SpectralField::preset(grid, Preset::Fig1Transient).unwrap();
        let s = f2.modes[&(3, 42)];
        assert_eq!(s.rho, c(20.0, 0.0));
        assert_eq!(s.alpha, c(50.0, 0.0));
        assert_eq!(s.xi(), c(5.0, 0.0));
        assert_eq!(f1.conjugate_asymmetry(), 0.0);
    }

    #[test]
    fn empty_field_has_zero_norms() {
        let field = SpectralField::empty(GridSpec::standard());
        let n = helmholtz_norms(&field);
        assert_eq!(n.q + n.px + n.py + n.rho, 0.0);
        assert_eq!(sobolev_norm(&field, NormSpec::L2, FieldQuantity::Rho), 0.0);
    }

    #[test]
    fn off_grid_mode_rejected() {
        let grid = GridSpec::standard();
        let bad = SpectralField::assemble(grid, &[(9, 0, ModeState::zero())]);
        assert!(matches!(bad, Err(CoreError::OffGridMode { .. })));
        let bad_j = SpectralField::assemble(grid, &[(1, 1000, ModeState::zero())]);
        assert!(bad_j.is_err());
        let bad_zero = SpectralField::assemble(grid, &[(0, 0, ModeState::zero())]);
        assert!(bad_zero.is_err());
    }

    #[test]
    fn single_mode_helmholtz_at_critical_time() {
        // omega = 1 at t = eta/k: px contribution 0, py = |k|/k^2 * sqrt(d_eta)
        let grid = GridSpec::standard();
        let state = ModeState { rho: c(0.0, 0.0), alpha: c(0.0, 0.0), omega: c(1.0, 0.0) };
        let mut field = SpectralField::assemble(grid, &[(3, 42, state)]).unwrap();
        field.time = 7.0;
        let n = helmholtz_norms(&field);
        assert!(n.px.abs() < 1e-15);
        let expected = (1.0 / 3.0) * grid.d_eta.sqrt();
        assert!((n.py - expected).abs() < 1e-14);
    }

    #[test]
    fn parseval_split() {
        // ||v||^2 = q^2 + px^2 + py^2 is how velocity() is defined; check the
        // underlying identity |v_hat|^2 = |A|^2/p + ((eta-kt)^2+k^2)/p^2 |Om|^2
        // per mode against an explicit two-mode field
        let grid = GridSpec::standard();
        let entries = [
            (2, 10, ModeState { rho: c(1.0, 0.0), alpha: c(0.5, -1.0), omega: c(2.0, 0.3) }),
            (-1, 4, ModeState { rho: c(0.0, 1.0), alpha: c(-0.7, 0.2), omega: c(0.0, -1.5) }),
        ];
        let mut field = SpectralField::assemble(grid, &entries).unwrap();
        field.time = 3.0;
        let n = helmholtz_norms(&field);
        let mut direct = 0.0;
        for &(k, j, s) in &entries {
            let f = Frequency::new(k, grid.eta(j)).unwrap();
            let p = laplace_symbol(3.0, f);
            let shifted = f.eta() - f.kf() * 3.0;
            direct += (s.alpha.norm_sqr() / p
                + (shifted * shifted + (k * k) as f64) / (p * p) * s.omega.norm_sqr())
                * grid.d_eta;
        }
        assert!((n.velocity() * n.velocity() - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn sobolev_examples() {
        // single mode (3, 21), coefficient 1, ISO(-1) at t=0:
        // (1 + 9 + 441)^(-1/2) sqrt(d_eta)
        let grid = GridSpec::standard();
        let state = ModeState { rho: c(1.0, 0.0), alpha: c(0.0, 0.0), omega: c(0.0, 0.0) };
        let field = SpectralField::assemble(grid, &[(3, 42, state)]).unwrap();
        let n = sobolev_norm(&field, NormSpec::Iso { s: -1.0 }, FieldQuantity::Rho);
        let expected = (1.0f64 / 451.0).sqrt() * grid.d_eta.sqrt();
        assert!((n - expected).abs() < 1e-14);
        // ISO(0) equals L2
        let a = sobolev_norm(&field, NormSpec::Iso { s: 0.0 }, FieldQuantity::Rho);
        let b = sobolev_norm(&field, NormSpec::L2, FieldQuantity::Rho);
        assert_eq!(a, b);
    }

    #[test]
    fn norms_invariant_under_permutation() {
        let grid = GridSpec::standard();
        let entries = [
            (1, 2, ModeState { rho: c(1.0, 0.0), alpha: c(0.1, 0.0), omega: c(0.4, 0.0) }),
            (2, -3, ModeState { rho: c(0.3, 0.2), alpha: c(0.0, 1.0), omega: c(-0.2, 0.0) }),
            (-1, -2, ModeState { rho: c(1.0, 0.0), alpha: c(0.1, 0.0), omega: c(0.4, 0.0) }),
        ];
        let mut shuffled = entries;
        shuffled.swap(0, 2);
        shuffled.swap(1, 2);
        let a = SpectralField::assemble(grid, &entries).unwrap();
        let b = SpectralField::assemble(grid, &shuffled).unwrap();
        let (na, nb) = (helmholtz_norms(&a), helmholtz_norms(&b));
        assert_eq!(na.q, nb.q);
        assert_eq!(na.rho, nb.rho);
    }

    #[test]
    fn grid_refinement_stability() {
        // halving d_eta changes the smooth preset's norms by < 1%
        let coarse = GridSpec::new(4, 16.0, 0.5).unwrap();
        let fine = GridSpec::new(4, 16.0, 0.25).unwrap();
        let fa = SpectralField::preset(coarse, Preset::RandomBand { seed: 42 }).unwrap();
        let fb = SpectralField::preset(fine, Preset::RandomBand { seed: 42 }).unwrap();
        let (na, nb) = (helmholtz_norms(&fa), helmholtz_norms(&fb));
        assert!((na.rho - nb.rho).abs() / nb.rho < 0.01, "{} vs {}", na.rho, nb.rho);
        assert!((na.q - nb.q).abs() / nb.q < 0.01);
    }

    #[test]
    fn conjugate_symmetry_preserved_by_evolution() {
        let grid = GridSpec::new(4, 16.0, 0.5).unwrap();
        let field = SpectralField::preset(grid, Preset::RandomBand { seed: 3 }).unwrap();
        assert!(field.conjugate_asymmetry() < 1e-15);
        let params = FluidParams::new(1.0, 1e-2, 0.0).unwrap();
        let samples = [0.0, 5.0, 10.0];
        let run = run_field(&field, &params, 10.0, 1e-8, &samples).unwrap();
        for f in &run.fields {
            assert!(f.conjugate_asymmetry() < 1e-12);
        }
    }

    #[test]
    fn zero_field_runs_to_zero_report() {
        let field = SpectralField::empty(GridSpec::standard());
        let params = FluidParams::inviscid(1.0).unwrap();
        let run = run_field(&field, &params, 1.0, 1e-8, &[0.0, 1.0]).unwrap();
        for n in &run.norms {
            assert_eq!(n.velocity() + n.rho, 0.0);
        }
    }

    #[test]
    fn json_round_trip() {
        let grid = GridSpec::standard();
        let mut field = SpectralField::preset(grid, Preset::Fig1Transient).unwrap();
        field.zero_modes.insert(2, ModeState { rho: c(0.1, 0.0), alpha: c(0.0, 0.2), omega: c(0.0, 0.0) });
        let text = to_json(&field).unwrap();
        assert!(text.contains("cspec-field/1"));
        let back = from_json(&text).unwrap();
        assert_eq!(back.modes.len(), field.modes.len());
        assert_eq!(back.zero_modes.len(), 1);
        assert_eq!(back.modes[&(3, 42)], field.modes[&(3, 42)]);
    }

    #[test]
    fn density_export_matches_analytic_cosine() {
        // one conjugate pair with rho = 1 at (k, eta) = (1, 2) gives
        // rho(x, y) = 2 cos(x + 2y) * d_eta / (2 pi)
        let grid = GridSpec::standard();
        let state = ModeState { rho: c(1.0, 0.0), alpha: c(0.0, 0.0), omega: c(0.0, 0.0) };
        let field =
            SpectralField::assemble(grid, &[(1, 4, state), (-1, -4, state.conj())]).unwrap();
        let samples = export_density_samples(&field, 8, 5, 4.0);
        for &(x, y, v) in &samples {
            let expected = 2.0 * (x + 2.0 * y).cos() * grid.d_eta / std::f64::consts::TAU;
            assert!((v - expected).abs() < 1e-12, "at ({x}, {y})");
        }
    }

    #[test]
    fn field_run_routes_zero_modes() {
        // a pure k = 0 wave field keeps its norms bounded
        let grid = GridSpec::standard();
        let mut field = SpectralField::empty(grid);
        field
            .zero_modes
            .insert(2, ModeState { rho: c(1.0, 0.0), alpha: c(0.0, 0.0), omega: c(0.0, 0.0) });
        let params = FluidParams::inviscid(1.0).unwrap();
        let samples = crate::symbols::linspace(0.0, 30.0, 40);
        let run = run_field(&field, &params, 30.0, 1e-8, &samples).unwrap();
        let r0 = run.norms[0].rho;
        for n in &run.norms {
            assert!(n.rho <= r0 * 1.000001);
        }
    }
}
