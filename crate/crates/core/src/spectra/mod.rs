//! Wavelength-indexed measurements and the analyses run on them.

mod absorption;
mod bands;
mod echo;
mod pl;
pub mod svg;

use std::io::Read;

use serde::{Deserialize, Serialize};

pub use absorption::{
    absorbance_to_mu, band_strength, nv_from_absorption, nv_from_absorption_with, p1_from_270_band,
    NvAbsorption, P1Calibration, P1_BAND_WINDOW_NM,
};
pub use bands::{
    default_bands, detect_bands, detect_bands_with, subtract_baseline, BandDef, BandRecord,
    BandReport, BaselineCorrected, DEFAULT_PRESENCE_SIGMAS,
};
pub use echo::{fit_hahn_echo, read_echo_csv, EchoFit};
pub use pl::{decompose_pl, ChargeStateFit, DECAY_RATE_RATIO};

use crate::error::{Error, Result};
use crate::numeric::{interp_within, trapezoid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    /// Exponential absorption coefficient, cm⁻¹.
    AbsorptionCoefficient,
    /// Decadic absorbance.
    Absorbance,
    PhotoluminescenceCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    wavelengths_nm: Vec<f64>,
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl Spectrum {
    /// Validates strictly increasing wavelengths, equal lengths and finite
    /// values.
    pub fn new(wavelengths_nm: Vec<f64>, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if wavelengths_nm.len() != values.len() {
            return Err(Error::InvalidParameter {
                name: "spectrum",
                reason: format!(
                    "{} wavelengths for {} values",
                    wavelengths_nm.len(),
                    values.len()
                ),
            });
        }
        if wavelengths_nm.len() < 2 {
            return Err(Error::TooShort(wavelengths_nm.len()));
        }
        if wavelengths_nm.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: "spectrum" });
        }
        if let Some(w) = wavelengths_nm.windows(2).find(|w| w[1] <= w[0]) {
            return Err(if w[1] == w[0] {
                Error::DuplicateWavelength(w[0])
            } else {
                Error::InvalidParameter {
                    name: "spectrum",
                    reason: "wavelengths must increase strictly".into(),
                }
            });
        }
        Ok(Self {
            wavelengths_nm,
            values,
            kind,
        })
    }

    /// Samples `f(λ)` on a uniform grid from `lo` to `hi` with `step`.
    pub fn from_fn(lo: f64, hi: f64, step: f64, kind: SpectrumKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = ((hi - lo) / step).round() as usize + 1;
        let wl: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let v = wl.iter().map(|&x| f(x)).collect();
        Self::new(wl, v, kind)
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelengths_nm[0], self.wavelengths_nm[self.len() - 1])
    }

    /// Linear interpolation; `None` outside the measured range.
    pub fn value_at(&self, wavelength_nm: f64) -> Option<f64> {
        interp_within(&self.wavelengths_nm, &self.values, wavelength_nm)
    }

    /// Values on `grid`, zero outside this spectrum's range, plus the share
    /// of grid points that fell inside it.
    pub fn resample_onto(&self, grid: &[f64]) -> (Vec<f64>, f64) {
        let mut inside = 0usize;
        let v = grid
            .iter()
            .map(|&x| match self.value_at(x) {
                Some(y) => {
                    inside += 1;
                    y
                }
                None => 0.0,
            })
            .collect();
        (v, inside as f64 / grid.len().max(1) as f64)
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.wavelengths_nm, &self.values)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }

    pub fn with_kind(self, kind: SpectrumKind) -> Self {
        Self { kind, ..self }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpectrum {
    pub spectrum: Spectrum,
    pub warnings: Vec<String>,
}

/// Reads `wavelength_nm,value` CSV (header optional). Rows in descending
/// order are re-sorted with a warning.
pub fn parse_spectrum<R: Read>(source: R, kind: SpectrumKind) -> Result<ParsedSpectrum> {
    let rows = crate::csvio::read_numeric_rows(source, None)?;
    if rows.len() < 2 {
        return Err(Error::TooShort(rows.len()));
    }
    let mut warnings = Vec::new();
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&(_, x, y)| (x, y)).collect();
    if pairs.windows(2).any(|w| w[1].0 < w[0].0) {
        warnings.push("wavelengths were not ascending; rows re-sorted".to_string());
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateWavelength(w[0].0));
    }
    let (wl, v) = pairs.into_iter().unzip();
    Ok(ParsedSpectrum {
        spectrum: Spectrum::new(wl, v, kind)?,
        warnings,
    })
}

/// `after − before` on the points of `after` inside `before`'s range.
pub fn difference_spectrum(after: &Spectrum, before: &Spectrum) -> Result<Spectrum> {
    if after.kind != before.kind {
        return Err(Error::KindMismatch(after.kind, before.kind));
    }
    let (wl, v): (Vec<f64>, Vec<f64>) = after
        .wavelengths_nm
        .iter()
        .zip(&after.values)
        .filter_map(|(&x, &y)| before.value_at(x).map(|b| (x, y - b)))
        .unzip();
    if wl.len() < 2 {
        return Err(Error::EmptyOverlap);
    }
    Spectrum::new(wl, v, after.kind)
}
