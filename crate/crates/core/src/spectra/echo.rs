//! Hahn-echo decay fit `s(t) = a·exp(−t/T₂) + c`.

use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{levenberg_marquardt, median, Evaluation, LmSettings};

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoFit {
    pub amplitude_a: f64,
    pub t2_s: f64,
    pub offset_c: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

pub fn fit_hahn_echo(times_s: &[f64], signal: &[f64]) -> Result<EchoFit> {
    if times_s.len() != signal.len() {
        return Err(Error::InvalidParameter {
            name: "signal",
            reason: format!("{} times for {} samples", times_s.len(), signal.len()),
        });
    }
    if times_s.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: times_s.len(),
        });
    }
    if times_s.iter().chain(signal).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "echo data" });
    }
    if times_s[0] < 0.0 || times_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "times_s",
            reason: "must be non-negative and strictly increasing".into(),
        });
    }
    let (lo, hi) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()) {
        return Err(Error::DegenerateSignal);
    }

    let n = signal.len();
    let a0 = signal[0] - signal[n - 1];
    let c0 = signal[n - 1];
    let t0 = initial_t2(times_s, signal, a0, c0).unwrap_or_else(|| median(times_s));

    // Work in units of the initial T₂ so the three parameters share a scale.
    let tau: Vec<f64> = times_s.iter().map(|t| t / t0).collect();
    let settings = LmSettings {
        max_iterations: MAX_ITERATIONS,
        ..LmSettings::default()
    };
    let outcome = levenberg_marquardt(vec![a0, 1.0, c0], settings, |p| {
        let (a, t2, c) = (p[0], p[1], p[2]);
        if !(t2 > 0.0) {
            return None;
        }
        let mut residuals = Vec::with_capacity(n);
        let mut jacobian = Vec::with_capacity(n);
        for (&t, &s) in tau.iter().zip(signal) {
            let e = (-t / t2).exp();
            residuals.push(a * e + c - s);
            jacobian.push(vec![e, a * e * t / (t2 * t2), 1.0]);
        }
        Some(Evaluation { residuals, jacobian })
    })?;
    let p = outcome.params;
    Ok(EchoFit {
        amplitude_a: p[0],
        t2_s: p[1] * t0,
        offset_c: p[2],
        residual_rms: (outcome.sse / n as f64).sqrt(),
        iterations: outcome.iterations,
    })
}

/// Time at which `s − c₀` first falls to `a₀/e`, linearly interpolated.
fn initial_t2(times: &[f64], signal: &[f64], a0: f64, c0: f64) -> Option<f64> {
    if a0 == 0.0 {
        return None;
    }
    let target = a0 / std::f64::consts::E;
    // normalized so the decay runs downward whatever the sign of a₀
    let y = |i: usize| (signal[i] - c0) / a0.signum();
    let level = target / a0.signum();
    (1..times.len()).find_map(|i| {
        let (y0, y1) = (y(i - 1), y(i));
        (y0 >= level && y1 <= level && y0 > y1)
            .then(|| times[i - 1] + (y0 - level) / (y0 - y1) * (times[i] - times[i - 1]))
    })
    .filter(|&t| t > 0.0)
}

/// Reads `time_us,signal` CSV and returns times in seconds.
pub fn read_echo_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs = crate::csvio::read_pairs(reader, ["time_us", "signal"])?;
    Ok(pairs.into_iter().map(|(t, s)| (t * 1e-6, s)).unzip())
}
