//! Rate fitting and envelope extraction for time series.
//!
//! Oscillatory series are fit through the interpolated sequence of local
//! maxima of their modulus; monotone series by plain least squares. Every fit
//! reports its residual, and a fit window must contain at least 20 samples.

use crate::error::{CoreError, Result};
use serde::Serialize;

/// A fitted exponent (log-log) or exponential rate (log-linear).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitResult {
    /// Slope: the power-law exponent for log-log fits, or d(ln v)/dt for
    /// log-linear fits (so a decay rate r appears as value = -r).
    pub value: f64,
    /// Root-mean-square residual of the linear fit in log space.
    pub residual: f64,
    pub n_samples: usize,
    pub window: (f64, f64),
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (intercept + slope * xi);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

fn windowed(
    times: &[f64],
    values: &[f64],
    t_lo: f64,
    t_hi: f64,
    positive_t: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(times.len(), values.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= t_lo && t <= t_hi && v > 0.0 && (!positive_t || t > 0.0) {
            xs.push(t);
            ys.push(v);
        }
    }
    if xs.len() < 20 {
        return Err(CoreError::FitWindowTooSmall { lo: t_lo, hi: t_hi, n: xs.len() });
    }
    Ok((xs, ys))
}

/// Fit `v ~ C t^a` on [t_lo, t_hi]; returns the exponent a.
pub fn fit_loglog(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> Result<FitResult> {
    let (xs, ys) = windowed(times, values, t_lo, t_hi, true)?;
    let lx: Vec<f64> = xs.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (slope, _, residual) = least_squares(&lx, &ly);
    Ok(FitResult { value: slope, residual, n_samples: xs.len(), window: (t_lo, t_hi) })
}

/// Fit `v ~ C e^(s t)` on [t_lo, t_hi]; returns s (negative for decay).
pub fn fit_exp_rate(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> Result<FitResult> {
    let (xs, ys) = windowed(times, values, t_lo, t_hi, false)?;
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (slope, _, residual) = least_squares(&xs, &ly);
    Ok(FitResult { value: slope, residual, n_samples: xs.len(), window: (t_lo, t_hi) })
}

/// Streaming detector of strict local maxima of a nonnegative series.
/// Feed `(t, v)` in time order; finished peaks accumulate in order.
#[derive(Clone, Debug, Default)]
pub struct PeakTracker {
    prev: Option<(f64, f64)>,
    prev2: Option<(f64, f64)>,
    peaks: Vec<(f64, f64)>,
}

impl PeakTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, t: f64, v: f64) {
        if let (Some((t1, v1)), Some((_, v2))) = (self.prev, self.prev2) {
            if v1 > v2 && v1 >= v {
                self.peaks.push((t1, v1));
            }
        }
        self.prev2 = self.prev;
        self.prev = Some((t, v));
    }

    pub fn peaks(&self) -> &[(f64, f64)] {
        &self.peaks
    }

    pub fn into_series(self) -> (Vec<f64>, Vec<f64>) {
        let mut ts = Vec::with_capacity(self.peaks.len());
        let mut vs = Vec::with_capacity(self.peaks.len());
        for (t, v) in self.peaks {
            ts.push(t);
            vs.push(v);
        }
        (ts, vs)
    }
}

/// Envelope slope: log-log fit through the local maxima of `values`.
pub fn fit_envelope_loglog(
    times: &[f64],
    values: &[f64],
    t_lo: f64,
    t_hi: f64,
) -> Result<FitResult> {
    let mut tracker = PeakTracker::new();
    for (&t, &v) in times.iter().zip(values) {
        tracker.feed(t, v);
    }
    let (ts, vs) = tracker.into_series();
    fit_loglog(&ts, &vs, t_lo, t_hi)
}

/// One verdict of a rate check: fitted value against `expected +- tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub quantity: String,
    pub fit: FitResult,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Free-form caveat (e.g. aggregate-vs-single-mode provenance of a rate).
    pub note: Option<String>,
}

impl RateReport {
    pub fn new(quantity: impl Into<String>, fit: FitResult, expected: f64, tolerance: f64) -> Self {
        let pass = (fit.value - expected).abs() <= tolerance;
        RateReport { quantity: quantity.into(), fit, expected, tolerance, pass, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}
