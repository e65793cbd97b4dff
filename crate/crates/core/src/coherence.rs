//! Hahn-echo T₂ as limited by the nitrogen bath:
//! `1/T₂ = B·[N] + 1/T₂,other`.

use serde::{Deserialize, Serialize};

use crate::dataset;
use crate::error::{Error, Result};
use crate::state::check_non_negative;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceParams {
    /// Angular decoherence rate per ppm of nitrogen, s⁻¹/ppm.
    pub b_rate: f64,
    /// Nitrogen-independent T₂, seconds.
    pub t2_other_s: f64,
    /// [P1]/[N].
    pub p1_fraction: f64,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        Self {
            b_rate: b_rate_from_khz(dataset::B_RATE_KHZ_PER_PPM.value),
            t2_other_s: dataset::T2_OTHER_US.value * 1e-6,
            p1_fraction: dataset::P1_FRACTION,
        }
    }
}

/// Converts a rate quoted as 2π × kHz/ppm to angular s⁻¹/ppm.
pub fn b_rate_from_khz(khz_per_ppm: f64) -> f64 {
    2.0 * std::f64::consts::PI * khz_per_ppm * 1e3
}

impl CoherenceParams {
    pub fn new(b_rate: f64, t2_other_s: f64, p1_fraction: f64) -> Result<Self> {
        let p = Self {
            b_rate,
            t2_other_s,
            p1_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_rate > 0.0 && self.b_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "b_rate",
                reason: format!("must be positive, got {}", self.b_rate),
            });
        }
        if !(self.t2_other_s > 0.0 && self.t2_other_s.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t2_other_s",
                reason: format!("must be positive, got {}", self.t2_other_s),
            });
        }
        if !(self.p1_fraction > 0.0 && self.p1_fraction <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "p1_fraction",
                reason: format!("must lie in (0, 1], got {}", self.p1_fraction),
            });
        }
        Ok(())
    }

    pub fn with_p1_fraction(self, p1_fraction: f64) -> Result<Self> {
        Self::new(self.b_rate, self.t2_other_s, p1_fraction)
    }
}

pub fn t2_from_nitrogen(n_ppm: f64, params: &CoherenceParams) -> Result<f64> {
    check_non_negative("n_ppm", n_ppm)?;
    Ok(1.0 / (params.b_rate * n_ppm + 1.0 / params.t2_other_s))
}

pub fn nitrogen_from_t2(t2_s: f64, params: &CoherenceParams) -> Result<f64> {
    if !(t2_s > 0.0 && t2_s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t2_s",
            reason: format!("must be positive, got {t2_s}"),
        });
    }
    if t2_s > params.t2_other_s {
        return Err(Error::OutOfRange {
            t2_s,
            limit_s: params.t2_other_s,
        });
    }
    Ok(((1.0 / t2_s - 1.0 / params.t2_other_s) / params.b_rate).max(0.0))
}

pub fn nitrogen_from_p1(p1_ppm: f64, params: &CoherenceParams) -> Result<f64> {
    check_non_negative("p1_ppm", p1_ppm)?;
    Ok(p1_ppm / params.p1_fraction)
}

/// T₂ predicted for a plate from its as-grown P1 content. Treatment only
/// moves nitrogen between P1 and NV, so this holds before and after it.
pub fn t2_from_p1(p1_grown_ppm: f64, params: &CoherenceParams) -> Result<f64> {
    t2_from_nitrogen(nitrogen_from_p1(p1_grown_ppm, params)?, params)
}
