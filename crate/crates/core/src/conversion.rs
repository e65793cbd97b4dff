//! Post-anneal state: P1 consumption, NV charge-state partition and the
//! design rules on the conversion ratios.
//!
//! The charge-state curve maps NV/P1_remain (percent) to the NV⁻ share of all
//! NV (percent). Two flavours exist:
//!
//! * [`ChargeStateCurve::measured_default`] is built from measured ratios, with
//!   P1_remain taken from the second P1 measurement.
//! * [`ChargeStateCurve::calibrate_model_space`] places the same charge-state
//!   observations at the NV/P1_remain that the one-P1-per-NV bookkeeping of
//!   [`apply_treatment`] would produce. Prediction uses this one, so P1 sinks
//!   other than NV formation are absorbed by the calibration.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irradiation::{
    nv_total_after_anneal, vacancy_concentration, ConversionCurve, VacancyYieldTable,
};
use crate::numeric::interp_clamped;
use crate::state::{conversion_ratios, expect_stage, ConversionRatios, IrradiationPlan, MaterialState, Stage};
use crate::units::{ppb_to_ppm, ppm_to_ppb};

/// NV/P1_remain at which half of the NV centers are neutral, percent.
pub const HALF_NEUTRAL_R_RE_PCT: f64 = 35.0;

/// Piecewise-linear NV⁻ share (percent) against NV/P1_remain (percent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeStateCurve {
    r_re_pct: Vec<f64>,
    nv_minus_pct: Vec<f64>,
}

impl ChargeStateCurve {
    /// Curve through the given knots as they are.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: points.len(),
            });
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter {
                name: "charge-state curve",
                reason: "r_re must be strictly increasing".into(),
            });
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.0 >= 0.0 && (0.0..=100.0).contains(&p.1)))
        {
            return Err(Error::InvalidParameter {
                name: "charge-state curve",
                reason: format!("point ({}, {}) out of range", p.0, p.1),
            });
        }
        Ok(Self {
            r_re_pct: points.iter().map(|p| p.0).collect(),
            nv_minus_pct: points.iter().map(|p| p.1).collect(),
        })
    }

    /// Sorts the points and clips each share to the running minimum of the
    /// shares at lower r_re, so the curve never rises. The first knot is
    /// kept exactly.
    pub fn monotone(points: &[(f64, f64)]) -> Result<Self> {
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut floor = f64::INFINITY;
        for p in &mut sorted {
            floor = floor.min(p.1);
            p.1 = floor;
        }
        Self::from_points(&sorted)
    }

    /// Monotone curve through the measured charge-state table plus the
    /// half-neutral anchor.
    pub fn measured_default() -> Self {
        let mut pts: Vec<(f64, f64)> = crate::dataset::table1()
            .iter()
            .map(|r| (r.r_re_pct.unwrap(), r.nv_minus_frac_treated_pct.unwrap().value))
            .collect();
        pts.push((HALF_NEUTRAL_R_RE_PCT, 50.0));
        Self::monotone(&pts).expect("embedded table is valid")
    }

    /// Monotone curve in the model's own NV/P1_remain coordinate.
    ///
    /// Each observation is `(p1_grown_ppm, nv_total_ppm, nv_minus_pct)`; its
    /// abscissa becomes `nv / (p1 − nv)`. With `anchor` the half-neutral
    /// point is appended.
    pub fn calibrate_model_space(observations: &[(f64, f64, f64)], anchor: bool) -> Result<Self> {
        let mut pts = Vec::with_capacity(observations.len() + 1);
        for &(p1, nv, frac) in observations {
            if !(p1 > 0.0 && nv >= 0.0 && nv < p1) {
                return Err(Error::BadCalibration(format!(
                    "observation with P1 {p1} ppm and NV {nv} ppm"
                )));
            }
            pts.push((nv / (p1 - nv) * 100.0, frac));
        }
        if anchor && pts.iter().all(|p| p.0 < HALF_NEUTRAL_R_RE_PCT) {
            pts.push((HALF_NEUTRAL_R_RE_PCT, 50.0));
        }
        Self::monotone(&pts)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.r_re_pct
            .iter()
            .copied()
            .zip(self.nv_minus_pct.iter().copied())
            .collect()
    }

    pub fn nv_minus_fraction(&self, r_re_pct: f64) -> f64 {
        interp_clamped(&self.r_re_pct, &self.nv_minus_pct, r_re_pct)
    }

    pub fn is_monotone_non_increasing(&self) -> bool {
        self.nv_minus_pct.windows(2).all(|w| w[1] <= w[0])
    }

    /// `observed − curve` at each `(r_re_pct, nv_minus_pct)`.
    pub fn residuals(&self, observations: &[(f64, f64)]) -> Vec<f64> {
        observations
            .iter()
            .map(|&(r, f)| f - self.nv_minus_fraction(r))
            .collect()
    }

    /// Reads `r_re_percent,nv_minus_frac_percent` CSV.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let pts = crate::csvio::read_pairs(reader, ["r_re_percent", "nv_minus_frac_percent"])?;
        Self::from_points(&pts)
    }
}

pub fn nv_minus_fraction(r_re_pct: f64, curve: &ChargeStateCurve) -> f64 {
    curve.nv_minus_fraction(r_re_pct)
}

/// Irradiates and anneals an as-grown plate.
///
/// Created NV consume one P1 each. The charge partition of all NV follows
/// the curve at the resulting NV/P1_remain; with no NV created the grown
/// partition is kept. Vacancies not turned into NV remain.
pub fn apply_treatment(
    grown: &MaterialState,
    plan: &IrradiationPlan,
    curve: &ConversionCurve,
    charge: &ChargeStateCurve,
    yields: &VacancyYieldTable,
) -> Result<MaterialState> {
    expect_stage("grown", grown, Stage::AsGrown)?;
    let p1 = grown.p1_ppm();
    let vacancies = vacancy_concentration(plan, yields)?;
    let curve_nv = nv_total_after_anneal(p1, plan, curve)?;
    let grown_nv = grown.nv_total_ppm();
    let nv_total = curve_nv.max(grown_nv);
    let created = nv_total - grown_nv;
    if created == 0.0 {
        return MaterialState::new(
            p1,
            grown.nv_minus_ppb(),
            grown.nv_zero_ppb(),
            grown.vacancy_ppm() + vacancies,
            Stage::Annealed,
        );
    }
    if created >= p1 {
        return Err(Error::ModelOverrun {
            nv_ppm: created,
            p1_ppm: p1,
        });
    }
    let p1_remain = p1 - created;
    let r_re_pct = nv_total / p1_remain * 100.0;
    let frac = charge.nv_minus_fraction(r_re_pct) / 100.0;
    let nv_total_ppb = ppm_to_ppb(nv_total);
    let nv_minus_ppb = nv_total_ppb * frac;
    MaterialState::new(
        p1_remain,
        nv_minus_ppb,
        nv_total_ppb - nv_minus_ppb,
        (grown.vacancy_ppm() + vacancies - created).max(0.0),
        Stage::Annealed,
    )
}

/// Limits of the design rules, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleThresholds {
    pub r_con_max: f64,
    pub r_re_max: f64,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        Self {
            r_con_max: 0.10,
            r_re_max: HALF_NEUTRAL_R_RE_PCT / 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    /// NV/P1_grown below its limit.
    pub charge_stable: bool,
    /// NV/P1_remain below its limit.
    pub nv_minus_dominant: bool,
    pub r_values: ConversionRatios,
}

impl RuleReport {
    pub fn from_ratios(r: ConversionRatios, t: &RuleThresholds) -> Self {
        Self {
            charge_stable: r.r_con < t.r_con_max,
            nv_minus_dominant: r.r_re < t.r_re_max,
            r_values: r,
        }
    }
}

pub fn check_rules(
    grown: &MaterialState,
    treated: &MaterialState,
    thresholds: &RuleThresholds,
) -> Result<RuleReport> {
    Ok(RuleReport::from_ratios(conversion_ratios(grown, treated)?, thresholds))
}

/// Nitrogen bookkeeping residual `P1_remain + NV_total − (P1_grown + NV_grown)`, ppm.
pub fn nitrogen_balance(grown: &MaterialState, treated: &MaterialState) -> f64 {
    treated.p1_ppm() + treated.nv_total_ppm() - grown.p1_ppm() - ppb_to_ppm(grown.nv_total_ppb())
}
