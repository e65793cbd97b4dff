//! Inverse design: the largest admissible fluence for a plate, and a grid
//! search over growth and irradiation recipes for the best figure of merit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::numeric::log_space;
use crate::state::{IrradiationPlan, MaterialState};

pub const FLUENCE_BOUNDS: (f64, f64) = (1e15, 1e20);
/// Bisection stops when the bracket ratio is below this.
const FLUENCE_RESOLUTION: f64 = 1.01;
/// Log-spaced samples used to check that violation is monotone.
const MONOTONICITY_SAMPLES: usize = 51;

/// The ratio a mode bounds and its limit, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimizationMode {
    /// NV/P1_grown below the limit.
    ChargeStability { r_con_max_pct: f64 },
    /// NV/P1_remain below the limit.
    ChargeStabilityRre { r_re_max_pct: f64 },
    /// NV/P1_remain below the half-neutral point.
    MaxNv { r_re_max_pct: f64 },
}

impl OptimizationMode {
    pub fn charge_stability() -> Self {
        Self::ChargeStability { r_con_max_pct: 10.0 }
    }

    pub fn charge_stability_rre() -> Self {
        Self::ChargeStabilityRre { r_re_max_pct: 10.0 }
    }

    pub fn max_nv() -> Self {
        Self::MaxNv {
            r_re_max_pct: crate::conversion::HALF_NEUTRAL_R_RE_PCT,
        }
    }

    pub fn threshold_pct(&self) -> f64 {
        match *self {
            Self::ChargeStability { r_con_max_pct } => r_con_max_pct,
            Self::ChargeStabilityRre { r_re_max_pct } | Self::MaxNv { r_re_max_pct } => r_re_max_pct,
        }
    }

    pub fn with_threshold(self, pct: f64) -> Result<Self> {
        if !(pct > 0.0 && pct < 100.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must lie in (0, 100), got {pct}"),
            });
        }
        Ok(match self {
            Self::ChargeStability { .. } => Self::ChargeStability { r_con_max_pct: pct },
            Self::ChargeStabilityRre { .. } => Self::ChargeStabilityRre { r_re_max_pct: pct },
            Self::MaxNv { .. } => Self::MaxNv { r_re_max_pct: pct },
        })
    }
}

/// True when the treated plate breaks the mode's limit.
fn violates(model: &Model, grown: &MaterialState, energy_mev: f64, fluence: f64, mode: OptimizationMode) -> Result<bool> {
    let plan = IrradiationPlan::new(energy_mev, fluence)?;
    let treated = match model.treat(grown, &plan) {
        Ok(t) => t,
        Err(Error::ModelOverrun { .. }) => return Ok(true),
        Err(e) => return Err(e),
    };
    let r = crate::state::conversion_ratios(grown, &treated)?;
    let limit = mode.threshold_pct() / 100.0;
    Ok(match mode {
        OptimizationMode::ChargeStability { .. } => r.r_con >= limit,
        OptimizationMode::ChargeStabilityRre { .. } | OptimizationMode::MaxNv { .. } => r.r_re >= limit,
    })
}

/// Largest fluence in [1e15, 1e20] e/cm² that keeps the mode's ratio below
/// its limit, to 1 % relative resolution. Returns the upper bound when the
/// limit is never reached.
pub fn optimal_fluence(p1_grown_ppm: f64, energy_mev: f64, mode: OptimizationMode, model: &Model) -> Result<f64> {
    model.curve_for(energy_mev)?;
    let grown = model.asgrown(p1_grown_ppm)?;
    let (lo, hi) = FLUENCE_BOUNDS;
    let samples = log_space(lo, hi, MONOTONICITY_SAMPLES);
    let mut first_violation = None;
    for (i, &phi) in samples.iter().enumerate() {
        let v = violates(model, &grown, energy_mev, phi, mode)?;
        match (v, first_violation) {
            (true, None) => first_violation = Some(i),
            (false, Some(_)) => return Err(Error::NonMonotoneConstraint(phi)),
            _ => {}
        }
    }
    let (mut a, mut b) = match first_violation {
        None => return Ok(hi),
        Some(0) => return Err(Error::NoFeasibleFluence(lo)),
        Some(i) => (samples[i - 1], samples[i]),
    };
    while b / a > FLUENCE_RESOLUTION {
        let m = (a * b).sqrt();
        if violates(model, &grown, energy_mev, m, mode)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(a)
}

/// Linear extrapolation of a known optimum to another P1 content.
///
/// Assumes the optimum scales in proportion to P1; the measurements only
/// establish that the two rise together.
pub fn scaled_fluence_hint(reference_fluence: f64, reference_p1_ppm: f64, p1_ppm: f64) -> Result<f64> {
    if !(reference_p1_ppm > 0.0) {
        return Err(Error::ZeroDenominator("reference P1"));
    }
    crate::state::check_non_negative("p1_ppm", p1_ppm)?;
    Ok(reference_fluence * p1_ppm / reference_p1_ppm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignTarget {
    pub mode: OptimizationMode,
    pub min_t2_s: Option<f64>,
    pub min_nv_minus_ppb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub nc_grid_ppm: Vec<f64>,
    pub energies_mev: Vec<f64>,
}

impl SearchSpace {
    pub const DEFAULT_NC_RANGE: (f64, f64) = (150.0, 1e6);
    pub const DEFAULT_NC_POINTS: usize = 40;

    /// 40 log-spaced N/C values over [150, 1e6] ppm and every calibrated energy.
    pub fn default_for(model: &Model) -> Self {
        let (lo, hi) = Self::DEFAULT_NC_RANGE;
        Self {
            nc_grid_ppm: log_space(lo, hi, Self::DEFAULT_NC_POINTS),
            energies_mev: model.energies(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recipe {
    pub nc_ratio_ppm: f64,
    pub p1_grown_ppm: f64,
    pub energy_mev: f64,
    pub fluence_e_per_cm2: f64,
    pub predicted: MaterialState,
    pub predicted_t2_s: f64,
    pub nv_minus_frac: f64,
    pub fom: f64,
}

/// The recipe for one grid point, or `None` when it cannot meet the target.
pub fn evaluate_point(nc_ratio_ppm: f64, energy_mev: f64, target: &DesignTarget, model: &Model) -> Result<Option<Recipe>> {
    let p1 = model.p1_from_nc(nc_ratio_ppm)?;
    let fluence = match optimal_fluence(p1, energy_mev, target.mode, model) {
        Ok(f) => f,
        Err(Error::NoFeasibleFluence(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let p = model.predict(p1, &IrradiationPlan::new(energy_mev, fluence)?)?;
    if target.min_t2_s.is_some_and(|t| p.t2_s < t)
        || target.min_nv_minus_ppb.is_some_and(|n| p.treated.nv_minus_ppb() < n)
    {
        return Ok(None);
    }
    Ok(Some(Recipe {
        nc_ratio_ppm,
        p1_grown_ppm: p1,
        energy_mev,
        fluence_e_per_cm2: fluence,
        predicted: p.treated,
        predicted_t2_s: p.t2_s,
        nv_minus_frac: p.nv_minus_frac,
        fom: p.fom,
    }))
}

/// Exhaustive search of `space`; the highest figure of merit wins, ties go
/// to the lowest N/C and then the lowest fluence.
pub fn design_process(target: &DesignTarget, space: &SearchSpace, model: &Model) -> Result<Recipe> {
    let points: Vec<(f64, f64)> = space
        .nc_grid_ppm
        .iter()
        .flat_map(|&nc| space.energies_mev.iter().map(move |&e| (nc, e)))
        .collect();
    let evaluated: Vec<Option<Recipe>> = points
        .par_iter()
        .map(|&(nc, e)| evaluate_point(nc, e, target, model))
        .collect::<Result<_>>()?;
    let mut best: Option<Recipe> = None;
    for r in evaluated.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => {
                r.fom > b.fom
                    || (r.fom == b.fom
                        && (r.nc_ratio_ppm, r.fluence_e_per_cm2) < (b.nc_ratio_ppm, b.fluence_e_per_cm2))
            }
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or(Error::NoFeasibleRecipe)
}
