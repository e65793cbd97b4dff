//! Local linear baselines and integrated band strengths.
//!
//! Each band window gets its own straight baseline fitted to short margins
//! just outside the window, so a slowly varying background ('ramp') drops out
//! without modeling it globally.

use serde::Serialize;

use super::Spectrum;
use crate::error::{Error, Result};
use crate::numeric::{linear_fit, trapezoid};

/// Share of the window width used for each side margin.
const MARGIN_SHARE: f64 = 0.1;
const MIN_MARGIN_POINTS: usize = 3;
/// Points required beyond each window edge.
const REQUIRED_SIDE_POINTS: usize = 5;
/// Presence threshold in standard errors of the integrated strength.
pub const DEFAULT_PRESENCE_SIGMAS: f64 = 3.0;
/// Threshold floor relative to the signal scale, for noise-free input.
const RELATIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCorrected {
    pub wavelengths_nm: Vec<f64>,
    /// Spectrum minus baseline over the window, unclamped.
    pub corrected: Vec<f64>,
    /// RMS of the margin points about the fitted line.
    pub residual_rms: f64,
    /// Standard error of the unclamped window integral for unit noise.
    integral_noise_gain: f64,
    scale: f64,
}

impl BaselineCorrected {
    /// Integral of the corrected segment with negative residuals set to 0.
    pub fn strength(&self) -> f64 {
        let clamped: Vec<f64> = self.corrected.iter().map(|v| v.max(0.0)).collect();
        trapezoid(&self.wavelengths_nm, &clamped)
    }

    pub fn signed_integral(&self) -> f64 {
        trapezoid(&self.wavelengths_nm, &self.corrected)
    }

    /// Detection threshold on the signed integral at `sigmas` standard errors.
    pub fn threshold(&self, sigmas: f64) -> f64 {
        (sigmas * self.residual_rms * self.integral_noise_gain).max(RELATIVE_FLOOR * self.scale)
    }
}

/// Fits a line to the side margins of `window` and subtracts it inside.
pub fn subtract_baseline(spectrum: &Spectrum, window: (f64, f64)) -> Result<BaselineCorrected> {
    let (lo, hi) = window;
    let out_of_range = Error::WindowOutOfRange { lo, hi };
    if !(hi > lo) {
        return Err(out_of_range);
    }
    let wl = spectrum.wavelengths_nm();
    let v = spectrum.values();
    let first_inside = wl.partition_point(|&x| x < lo);
    let past_inside = wl.partition_point(|&x| x <= hi);
    let below = first_inside;
    let above = wl.len() - past_inside;
    if below < REQUIRED_SIDE_POINTS || above < REQUIRED_SIDE_POINTS || past_inside - first_inside < 2 {
        return Err(out_of_range);
    }
    let margin = MARGIN_SHARE * (hi - lo);
    let left_n = wl[..first_inside]
        .iter()
        .filter(|&&x| x >= lo - margin)
        .count()
        .max(MIN_MARGIN_POINTS);
    let right_n = wl[past_inside..]
        .iter()
        .filter(|&&x| x <= hi + margin)
        .count()
        .max(MIN_MARGIN_POINTS);
    let margin_idx: Vec<usize> = (first_inside - left_n..first_inside)
        .chain(past_inside..past_inside + right_n)
        .collect();
    let mx: Vec<f64> = margin_idx.iter().map(|&i| wl[i]).collect();
    let my: Vec<f64> = margin_idx.iter().map(|&i| v[i]).collect();
    let (intercept, slope) = linear_fit(&mx, &my)?;

    let residual_ss: f64 = mx
        .iter()
        .zip(&my)
        .map(|(&x, &y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = (mx.len() - 2).max(1) as f64;
    let residual_rms = (residual_ss / dof).sqrt();

    let xs = wl[first_inside..past_inside].to_vec();
    let corrected: Vec<f64> = xs
        .iter()
        .zip(&v[first_inside..past_inside])
        .map(|(&x, &y)| y - intercept - slope * x)
        .collect();

    // Var(∫corrected) / σ² = Σ w_i² + Var(∫line) / σ², trapezoid weights w_i
    let n = xs.len();
    let mut w2 = 0.0;
    for i in 0..n {
        let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
        let right = if i + 1 < n { xs[i + 1] - xs[i] } else { 0.0 };
        w2 += ((left + right) / 2.0).powi(2);
    }
    let width = xs[n - 1] - xs[0];
    let centre = (xs[0] + xs[n - 1]) / 2.0;
    let m = mx.len() as f64;
    let mean_x = mx.iter().sum::<f64>() / m;
    let sxx: f64 = mx.iter().map(|x| (x - mean_x).powi(2)).sum();
    let line_var = width * width * (1.0 / m + (centre - mean_x).powi(2) / sxx);
    let scale = width
        * v[first_inside - left_n..past_inside + right_n]
            .iter()
            .fold(0.0_f64, |a, &y| a.max(y.abs()));

    Ok(BaselineCorrected {
        wavelengths_nm: xs,
        corrected,
        residual_rms,
        integral_noise_gain: (w2 + line_var).sqrt(),
        scale,
    })
}

/// A named absorption or emission feature and its integration window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandDef {
    pub name: &'static str,
    pub zpl_nm: f64,
    /// Further lines belonging to the band (phonon replicas).
    pub replicas_nm: Vec<f64>,
    pub window_nm: (f64, f64),
}

pub fn default_bands() -> Vec<BandDef> {
    let band = |name, zpl_nm, replicas_nm: Vec<f64>, window_nm| BandDef {
        name,
        zpl_nm,
        replicas_nm,
        window_nm,
    };
    vec![
        band("P1_270", 270.0, vec![], (255.0, 285.0)),
        band("ND1_ZPL", 393.0, vec![375.0, 384.0], (360.0, 400.0)),
        band("C489", 489.0, vec![], (450.0, 500.0)),
        band("NV_zero_575", 575.0, vec![], (565.0, 585.0)),
        band("NV_minus_637", 637.0, vec![], (625.0, 650.0)),
        band("GR1", 741.0, vec![], (720.0, 760.0)),
        band("GR1_broad", 741.0, vec![], (500.0, 750.0)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRecord {
    pub name: &'static str,
    pub zpl_nm: f64,
    pub replicas_nm: Vec<f64>,
    pub window_nm: (f64, f64),
    /// False when the spectrum does not reach around the window.
    pub covered: bool,
    /// Clamped integral, value·nm; `None` when not covered.
    pub integrated_strength: Option<f64>,
    pub threshold: Option<f64>,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub bands: Vec<BandRecord>,
    /// Neutral vacancies seen: the dose is past the NV optimum.
    pub over_irradiation_warning: bool,
}

impl BandReport {
    pub fn band(&self, name: &str) -> Option<&BandRecord> {
        self.bands.iter().find(|b| b.name == name)
    }
}

pub fn detect_bands(spectrum: &Spectrum) -> BandReport {
    detect_bands_with(spectrum, &default_bands(), DEFAULT_PRESENCE_SIGMAS)
}

/// A band is present when its signed baseline-corrected integral exceeds
/// `sigmas` standard errors, estimated from the margin residuals.
pub fn detect_bands_with(spectrum: &Spectrum, bands: &[BandDef], sigmas: f64) -> BandReport {
    let records: Vec<BandRecord> = bands
        .iter()
        .map(|b| {
            let base = BandRecord {
                name: b.name,
                zpl_nm: b.zpl_nm,
                replicas_nm: b.replicas_nm.clone(),
                window_nm: b.window_nm,
                covered: false,
                integrated_strength: None,
                threshold: None,
                present: false,
            };
            match subtract_baseline(spectrum, b.window_nm) {
                Ok(c) => {
                    let strength = c.strength();
                    let threshold = c.threshold(sigmas);
                    BandRecord {
                        covered: true,
                        integrated_strength: Some(strength),
                        threshold: Some(threshold),
                        present: strength > 0.0 && c.signed_integral() > threshold,
                        ..base
                    }
                }
                Err(_) => base,
            }
        })
        .collect();
    let over_irradiation_warning = records.iter().any(|r| r.name == "GR1" && r.present);
    BandReport {
        bands: records,
        over_irradiation_warning,
    }
}
