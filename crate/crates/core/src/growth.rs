//! As-grown P1 and NV⁻ content from the N/C ratio of the growth plasma.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::conversion::ChargeStateCurve;
use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::state::{check_non_negative, MaterialState};
use crate::units::ppm_to_ppb;

/// Default as-grown NV⁻/P1 ratio.
pub const ASGROWN_NV_RATIO: f64 = 0.0025;

/// Sublinear power law `p1 = a · (N/C)^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthLaw {
    pub coefficient_a: f64,
    pub exponent_b: f64,
}

impl Default for GrowthLaw {
    /// The square-root law with a 0.09 prefactor.
    fn default() -> Self {
        Self {
            coefficient_a: 0.09,
            exponent_b: 0.5,
        }
    }
}

impl GrowthLaw {
    pub fn new(coefficient_a: f64, exponent_b: f64) -> Result<Self> {
        if !(coefficient_a.is_finite() && coefficient_a > 0.0) {
            return Err(Error::InvalidParameter {
                name: "coefficient_a",
                reason: format!("must be positive, got {coefficient_a}"),
            });
        }
        if !(exponent_b > 0.0 && exponent_b < 1.0) {
            return Err(Error::InvalidParameter {
                name: "exponent_b",
                reason: format!("must lie in (0, 1), got {exponent_b}"),
            });
        }
        Ok(Self {
            coefficient_a,
            exponent_b,
        })
    }

    pub fn p1_from_nc(&self, recipe: GrowthRecipe) -> f64 {
        self.coefficient_a * recipe.nc_ratio_ppm.powf(self.exponent_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecipe {
    pub nc_ratio_ppm: f64,
}

impl GrowthRecipe {
    pub fn new(nc_ratio_ppm: f64) -> Result<Self> {
        Ok(Self {
            nc_ratio_ppm: check_non_negative("nc_ratio_ppm", nc_ratio_ppm)?,
        })
    }
}

pub fn p1_from_nc(recipe: GrowthRecipe, law: &GrowthLaw) -> f64 {
    law.p1_from_nc(recipe)
}

/// Least squares in log-log space over `(nc_ppm, p1_ppm)` points.
pub fn fit_growth_law(points: &[(f64, f64)]) -> Result<GrowthLaw> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    if let Some(&(nc, p1)) = points.iter().find(|(nc, p1)| !(*nc > 0.0 && *p1 > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "calibration point",
            reason: format!("nc and p1 must be positive, got ({nc}, {p1})"),
        });
    }
    if points.iter().all(|p| p.0 == points[0].0) {
        return Err(Error::DegenerateData("all N/C values are equal".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (intercept, slope) = linear_fit(&xs, &ys)?;
    Ok(GrowthLaw {
        coefficient_a: intercept.exp(),
        exponent_b: slope,
    })
}

/// As-grown NV⁻ in ppb for a P1 content and NV⁻/P1 ratio.
pub fn asgrown_nv_minus(p1_ppm: f64, ratio: f64) -> Result<f64> {
    check_non_negative("p1_ppm", p1_ppm)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nv_ratio",
            reason: format!("must lie in (0, 1), got {ratio}"),
        });
    }
    Ok(ppm_to_ppb(p1_ppm * ratio))
}

/// As-grown inventory: NV⁻ from the ratio, NV⁰ from the charge-state curve
/// at the resulting NV/P1.
pub fn asgrown_state(p1_ppm: f64, ratio: f64, charge: &ChargeStateCurve) -> Result<MaterialState> {
    let nv_minus_ppb = asgrown_nv_minus(p1_ppm, ratio)?;
    if nv_minus_ppb == 0.0 {
        return MaterialState::as_grown(p1_ppm, 0.0, 0.0);
    }
    // NV_total = NV⁻ / f(NV_total / P1); a few fixed-point passes settle it
    let mut total_ppb = nv_minus_ppb;
    for _ in 0..50 {
        let r_re_pct = total_ppb * 1e-3 / p1_ppm * 100.0;
        let frac = charge.nv_minus_fraction(r_re_pct) / 100.0;
        let next = if frac > 0.0 { nv_minus_ppb / frac } else { total_ppb };
        if (next - total_ppb).abs() <= 1e-14 * next {
            total_ppb = next;
            break;
        }
        total_ppb = next;
    }
    MaterialState::as_grown(p1_ppm, nv_minus_ppb, (total_ppb - nv_minus_ppb).max(0.0))
}

/// Reads `nc_ppm,p1_ppm` CSV (header required).
pub fn read_calibration_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    crate::csvio::read_pairs(reader, ["nc_ppm", "p1_ppm"])
}
