//! Shot-noise figure of merit `C·√(NV⁻·T₂)` and improvement accounting.
//! Sensitivity scales as the inverse of the figure of merit; no absolute
//! prefactor is modeled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::check_non_negative;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub fom: f64,
    pub contrast_factor: f64,
    pub product_ratio: f64,
    pub sqrt_factor: f64,
}

/// Relative brightness of the two charge states in the collection band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessWeights {
    pub minus: f64,
    pub zero: f64,
}

impl Default for BrightnessWeights {
    fn default() -> Self {
        Self {
            minus: 1.0,
            zero: 1.0,
        }
    }
}

pub fn figure_of_merit(nv_minus_ppb: f64, t2_s: f64, contrast_factor: f64) -> Result<f64> {
    check_non_negative("nv_minus_ppb", nv_minus_ppb)?;
    check_non_negative("t2_s", t2_s)?;
    check_non_negative("contrast_factor", contrast_factor)?;
    Ok(contrast_factor * (nv_minus_ppb * t2_s).sqrt())
}

/// NV⁻ share of the collected photons for an NV⁻ fraction `f`.
pub fn contrast_factor(nv_minus_frac: f64, weights: &BrightnessWeights) -> Result<f64> {
    if !(0.0..=1.0).contains(&nv_minus_frac) {
        return Err(Error::InvalidParameter {
            name: "nv_minus_frac",
            reason: format!("must lie in [0, 1], got {nv_minus_frac}"),
        });
    }
    let minus = nv_minus_frac * weights.minus;
    let total = minus + (1.0 - nv_minus_frac) * weights.zero;
    Ok(if total > 0.0 { minus / total } else { 0.0 })
}

/// `(NV⁻·T₂)_after / (NV⁻·T₂)_before` and its square root. Each side is
/// `(nv_minus_ppb, t2)` in any consistent units.
pub fn improvement_ratio(before: (f64, f64), after: (f64, f64)) -> Result<(f64, f64)> {
    let before_product = before.0 * before.1;
    if !(before_product > 0.0) {
        return Err(Error::ZeroDenominator("NV⁻·T₂ before treatment"));
    }
    let ratio = after.0 * after.1 / before_product;
    Ok((ratio, ratio.sqrt()))
}

pub fn report(
    before: (f64, f64),
    after: (f64, f64),
    nv_minus_frac_after: f64,
    weights: &BrightnessWeights,
) -> Result<SensitivityReport> {
    let c = contrast_factor(nv_minus_frac_after, weights)?;
    let (product_ratio, sqrt_factor) = improvement_ratio(before, after)?;
    Ok(SensitivityReport {
        fom: figure_of_merit(after.0, after.1, c)?,
        contrast_factor: c,
        product_ratio,
        sqrt_factor,
    })
}
