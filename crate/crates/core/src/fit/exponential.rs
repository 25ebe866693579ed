//! Exponential transient fitting for polarization-rise and relaxation-decay
//! traces.
//!
//! Both models are S(t) = offset + c * exp(-rate * t); a rise reports
//! amplitude = -c (signal climbing to the steady state) and a decay reports
//! amplitude = +c. For a trial rate the best (offset, c) is a linear
//! least-squares solve, so the nonlinear search is one-dimensional: a coarse
//! logarithmic rate grid followed by simplex refinement in log-rate.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::fit::simplex::{minimize, SimplexOptions};
use crate::table::DataTable;

/// Minimum number of samples any trace fit accepts.
pub const MIN_TRACE_SAMPLES: usize = 5;

/// A sampled time trace: strictly ascending times in microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    times_us: Vec<f64>,
    signal: Vec<f64>,
}

impl TimeTrace {
    pub fn new(times_us: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if times_us.len() != signal.len() {
            return Err(Error::InvalidParameter(format!(
                "time and signal lengths differ: {} vs {}",
                times_us.len(),
                signal.len()
            )));
        }
        if times_us.len() < MIN_TRACE_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "a trace needs at least {MIN_TRACE_SAMPLES} samples, got {}",
                times_us.len()
            )));
        }
        if times_us.iter().chain(signal.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("trace contains non-finite values".into()));
        }
        if times_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "trace times must be strictly ascending".into(),
            ));
        }
        Ok(Self { times_us, signal })
    }

    pub fn times_us(&self) -> &[f64] {
        &self.times_us
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.times_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_us.is_empty()
    }

    /// Reads columns `time_us` and `signal`.
    pub fn from_table(table: &DataTable) -> Result<Self> {
        Self::new(table.column("time_us")?.to_vec(), table.column("signal")?.to_vec())
    }

    pub fn to_table(&self) -> DataTable {
        let mut table = DataTable::new(vec!["time_us".into(), "signal".into()]);
        for (t, s) in self.times_us.iter().zip(&self.signal) {
            table.push_row(vec![*t, *s]).expect("fixed arity");
        }
        table
    }
}

/// Which transient model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// S(t) = offset - amplitude * exp(-rate * t), climbing to `offset`.
    Rise,
    /// S(t) = offset + amplitude * exp(-rate * t), settling to `offset`.
    Decay,
}

impl TraceKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraceKind::Rise => "rise",
            TraceKind::Decay => "decay",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rise" => Ok(TraceKind::Rise),
            "decay" => Ok(TraceKind::Decay),
            other => Err(Error::InvalidParameter(format!(
                "unknown trace kind {other:?}; expected rise or decay"
            ))),
        }
    }
}

/// Fitted exponential transient with 1-sigma uncertainties from the local
/// Jacobian. `converged == false` always comes with diagnostics.
#[derive(Debug, Clone)]
pub struct ExponentialFit {
    pub kind: TraceKind,
    pub offset: f64,
    pub amplitude: f64,
    pub rate_per_us: f64,
    pub offset_sigma: f64,
    pub amplitude_sigma: f64,
    pub rate_sigma: f64,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Vec<String>,
}

impl ExponentialFit {
    pub fn time_constant_us(&self) -> f64 {
        1.0 / self.rate_per_us
    }
}

pub fn fit_exponential_rise(trace: &TimeTrace) -> Result<ExponentialFit> {
    fit_exponential(trace, TraceKind::Rise)
}

pub fn fit_exponential_decay(trace: &TimeTrace) -> Result<ExponentialFit> {
    fit_exponential(trace, TraceKind::Decay)
}

/// Best (offset, c, rss) for a fixed rate; `None` when the basis {1, e^-rt}
/// is numerically collinear.
fn profiled_linear(times: &[f64], signal: &[f64], rate: f64) -> Option<(f64, f64, f64)> {
    let n = times.len() as f64;
    let mut s_e = 0.0;
    let mut s_ee = 0.0;
    let mut s_y = 0.0;
    let mut s_ye = 0.0;
    for (t, y) in times.iter().zip(signal) {
        let e = (-rate * t).exp();
        s_e += e;
        s_ee += e * e;
        s_y += y;
        s_ye += y * e;
    }
    let det = n * s_ee - s_e * s_e;
    if !(det > 1e-12 * n * s_ee) || !det.is_finite() {
        return None;
    }
    let c = (n * s_ye - s_e * s_y) / det;
    let b = (s_ee * s_y - s_e * s_ye) / det;
    let mut rss = 0.0;
    for (t, y) in times.iter().zip(signal) {
        let r = y - b - c * (-rate * t).exp();
        rss += r * r;
    }
    Some((b, c, rss))
}

/// Noise scale from second differences, which cancel any locally linear
/// trend: Var(y[i+2] - 2 y[i+1] + y[i]) = 6 sigma^2 for white noise.
fn noise_sigma(signal: &[f64]) -> f64 {
    let n = signal.len();
    let mut acc = 0.0;
    for i in 0..n - 2 {
        let d2 = signal[i + 2] - 2.0 * signal[i + 1] + signal[i];
        acc += d2 * d2;
    }
    (acc / (6.0 * (n - 2) as f64)).sqrt()
}

/// Largest move of the signal against the expected direction: for a rise the
/// deepest drawdown below the running maximum, for a decay the highest climb
/// above the running minimum.
fn counter_trend_excursion(signal: &[f64], kind: TraceKind) -> f64 {
    let mut extreme = signal[0];
    let mut worst = 0.0f64;
    for &s in &signal[1..] {
        match kind {
            TraceKind::Rise => {
                extreme = extreme.max(s);
                worst = worst.max(extreme - s);
            }
            TraceKind::Decay => {
                extreme = extreme.min(s);
                worst = worst.max(s - extreme);
            }
        }
    }
    worst
}

pub fn fit_exponential(trace: &TimeTrace, kind: TraceKind) -> Result<ExponentialFit> {
    let times = trace.times_us();
    let signal = trace.signal();
    let n = trace.len();
    let span = times[n - 1] - times[0];
    let dt_min = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let scale = signal.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-300);
    let noise = noise_sigma(signal);

    // coarse logarithmic rate grid, then simplex refinement in log-rate
    let r_lo = 1e-2 / span;
    let r_hi = 20.0 / dt_min;
    let grid_points = 160usize;
    let log_step = (r_hi / r_lo).ln() / (grid_points - 1) as f64;
    let mut best_rate = r_lo;
    let mut best_rss = f64::INFINITY;
    for k in 0..grid_points {
        let rate = r_lo * (log_step * k as f64).exp();
        if let Some((_, _, rss)) = profiled_linear(times, signal, rate) {
            if rss < best_rss {
                best_rss = rss;
                best_rate = rate;
            }
        }
    }

    let objective = |x: &[f64]| match profiled_linear(times, signal, x[0].exp()) {
        Some((_, _, rss)) => rss,
        None => f64::INFINITY,
    };
    let outcome = minimize(
        objective,
        &[best_rate.ln()],
        &[log_step],
        Some(&[(r_lo.ln() - 2.3, r_hi.ln() + 2.3)]),
        &SimplexOptions { max_iters: 200, f_tol: 1e-13, x_tol: 1e-12 },
    );
    let rate = outcome.x[0].exp();

    let mut diagnostics = Vec::new();
    let mut converged = outcome.converged;
    let (offset, c, rss) = match profiled_linear(times, signal, rate) {
        Some(solution) => solution,
        None => {
            diagnostics.push("amplitude/offset solve is degenerate at the fitted rate".into());
            (signal.iter().sum::<f64>() / n as f64, 0.0, f64::INFINITY)
        }
    };
    let amplitude = match kind {
        TraceKind::Rise => -c,
        TraceKind::Decay => c,
    };

    let identifiable_floor = 3.0 * noise + 1e-9 * scale;
    if c.abs() <= identifiable_floor {
        converged = false;
        diagnostics.push(
            "amplitude is indistinguishable from zero; the rate is unidentifiable".into(),
        );
    } else if amplitude < 0.0 {
        converged = false;
        diagnostics.push(format!(
            "trace moves opposite to the {} model (fitted amplitude {amplitude:.3e})",
            kind.name()
        ));
    }
    let excursion = counter_trend_excursion(signal, kind);
    if excursion > 8.0 * noise + 1e-9 * scale {
        converged = false;
        diagnostics.push(format!(
            "trace is not monotonic beyond the noise level (counter-trend excursion {excursion:.3e}, noise {noise:.3e})"
        ));
    }

    // 1-sigma uncertainties from the (offset, c, rate) Jacobian
    let mut jtj = Matrix3::<f64>::zeros();
    for t in times {
        let e = (-rate * t).exp();
        let j = [1.0, e, -c * t * e];
        for a in 0..3 {
            for b in 0..3 {
                jtj[(a, b)] += j[a] * j[b];
            }
        }
    }
    let dof = (n as f64 - 3.0).max(1.0);
    let s2 = rss / dof;
    let (offset_sigma, amplitude_sigma, rate_sigma) = match jtj.try_inverse() {
        Some(inv) if rss.is_finite() => (
            (inv[(0, 0)].max(0.0) * s2).sqrt(),
            (inv[(1, 1)].max(0.0) * s2).sqrt(),
            (inv[(2, 2)].max(0.0) * s2).sqrt(),
        ),
        _ => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
    };

    Ok(ExponentialFit {
        kind,
        offset,
        amplitude,
        rate_per_us: rate,
        offset_sigma,
        amplitude_sigma,
        rate_sigma,
        rss,
        iterations: outcome.iterations,
        converged,
        diagnostics,
    })
}
