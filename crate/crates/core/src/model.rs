//! The full forward model with its calibrated parameters, and calibration of
//! the irradiation curves from the embedded irradiation table.

use std::sync::OnceLock;

use serde::Serialize;

use crate::coherence::{t2_from_p1, CoherenceParams};
use crate::conversion::{apply_treatment, ChargeStateCurve, RuleReport, RuleThresholds};
use crate::dataset::{self, TableRecord};
use crate::error::{Error, Result};
use crate::growth::{asgrown_state, GrowthLaw, GrowthRecipe, ASGROWN_NV_RATIO};
use crate::irradiation::{fit_conversion_curve, same_energy, ConversionCurve, VacancyYieldTable};
use crate::sensitivity::{contrast_factor, figure_of_merit, BrightnessWeights};
use crate::state::{conversion_ratios, ConversionRatios, IrradiationPlan, MaterialState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Model {
    pub growth: GrowthLaw,
    /// As-grown NV⁻/P1.
    pub asgrown_ratio: f64,
    pub yields: VacancyYieldTable,
    /// One conversion curve per calibrated energy, sorted by energy.
    pub curves: Vec<ConversionCurve>,
    pub charge: ChargeStateCurve,
    pub coherence: CoherenceParams,
    pub thresholds: RuleThresholds,
    pub brightness: BrightnessWeights,
}

impl Default for Model {
    /// Calibrated on every row of the embedded irradiation table.
    fn default() -> Self {
        static DEFAULT: OnceLock<Model> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                let cal = calibrate_irradiation(&dataset::table1(), dataset::IRRADIATION_SERIES_P1_PPM)
                    .expect("embedded table calibrates");
                Model::with_calibration(cal)
            })
            .clone()
    }
}

/// Irradiation-side parameters fitted from a charge-state table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrradiationCalibration {
    pub curves: Vec<ConversionCurve>,
    pub charge: ChargeStateCurve,
}

/// Fits one conversion curve per energy in `records` and the model-space
/// charge-state curve (with the half-neutral anchor) from the same rows.
///
/// The NV total of each row is `P1 · r_con⁻ / (NV⁻/NV)`.
pub fn calibrate_irradiation(records: &[TableRecord], p1_grown_ppm: f64) -> Result<IrradiationCalibration> {
    let mut observations = Vec::new();
    let mut by_energy: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        let (Some(energy), Some(fluence), Some(frac), Some(nv_frac)) = (
            r.energy_mev,
            r.fluence,
            r.nv_minus_frac_treated_pct,
            r.implied_nv_fraction(),
        ) else {
            return Err(Error::BadCalibration(format!(
                "row {} lacks irradiation columns",
                r.sample_id
            )));
        };
        let nv = p1_grown_ppm * nv_frac;
        observations.push((p1_grown_ppm, nv, frac.value));
        match by_energy.iter_mut().find(|(e, _)| same_energy(*e, energy)) {
            Some((_, series)) => series.push((fluence, nv)),
            None => by_energy.push((energy, vec![(fluence, nv)])),
        }
    }
    by_energy.sort_by(|a, b| a.0.total_cmp(&b.0));
    let curves = by_energy
        .iter()
        .map(|(energy, series)| fit_conversion_curve(series, p1_grown_ppm, *energy))
        .collect::<Result<Vec<_>>>()?;
    Ok(IrradiationCalibration {
        curves,
        charge: ChargeStateCurve::calibrate_model_space(&observations, true)?,
    })
}

/// Forward prediction for one plate and one treatment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub p1_grown_ppm: f64,
    pub plan: IrradiationPlan,
    pub asgrown: MaterialState,
    pub treated: MaterialState,
    pub ratios: ConversionRatios,
    pub rules: RuleReport,
    /// NV⁻ share of all NV after treatment, fraction.
    pub nv_minus_frac: f64,
    pub t2_s: f64,
    pub contrast_factor: f64,
    pub fom: f64,
    pub fom_asgrown: f64,
}

impl Model {
    pub fn with_calibration(cal: IrradiationCalibration) -> Self {
        Self {
            growth: GrowthLaw::default(),
            asgrown_ratio: ASGROWN_NV_RATIO,
            yields: VacancyYieldTable::default(),
            curves: cal.curves,
            charge: cal.charge,
            coherence: CoherenceParams::default(),
            thresholds: RuleThresholds::default(),
            brightness: BrightnessWeights::default(),
        }
    }

    pub fn curve_for(&self, energy_mev: f64) -> Result<&ConversionCurve> {
        self.curves
            .iter()
            .find(|c| same_energy(c.energy_mev, energy_mev))
            .ok_or(Error::UncalibratedEnergy(energy_mev))
    }

    /// Replaces or adds the curve for its energy.
    pub fn set_curve(&mut self, curve: ConversionCurve) {
        self.curves.retain(|c| !same_energy(c.energy_mev, curve.energy_mev));
        self.curves.push(curve);
        self.curves.sort_by(|a, b| a.energy_mev.total_cmp(&b.energy_mev));
    }

    pub fn energies(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.energy_mev).collect()
    }

    pub fn p1_from_nc(&self, nc_ratio_ppm: f64) -> Result<f64> {
        Ok(self.growth.p1_from_nc(GrowthRecipe::new(nc_ratio_ppm)?))
    }

    pub fn asgrown(&self, p1_grown_ppm: f64) -> Result<MaterialState> {
        asgrown_state(p1_grown_ppm, self.asgrown_ratio, &self.charge)
    }

    pub fn treat(&self, grown: &MaterialState, plan: &IrradiationPlan) -> Result<MaterialState> {
        apply_treatment(grown, plan, self.curve_for(plan.energy_mev)?, &self.charge, &self.yields)
    }

    fn fom_of(&self, state: &MaterialState, t2_s: f64) -> Result<(f64, f64)> {
        let frac = state.nv_minus_fraction().unwrap_or(0.0);
        let c = contrast_factor(frac, &self.brightness)?;
        Ok((c, figure_of_merit(state.nv_minus_ppb(), t2_s, c)?))
    }

    pub fn predict(&self, p1_grown_ppm: f64, plan: &IrradiationPlan) -> Result<Prediction> {
        let asgrown = self.asgrown(p1_grown_ppm)?;
        let treated = self.treat(&asgrown, plan)?;
        let ratios = conversion_ratios(&asgrown, &treated)?;
        let t2_s = t2_from_p1(p1_grown_ppm, &self.coherence)?;
        let (contrast, fom) = self.fom_of(&treated, t2_s)?;
        let (_, fom_asgrown) = self.fom_of(&asgrown, t2_s)?;
        Ok(Prediction {
            p1_grown_ppm,
            plan: *plan,
            asgrown,
            treated,
            ratios,
            rules: RuleReport::from_ratios(ratios, &self.thresholds),
            nv_minus_frac: treated.nv_minus_fraction().unwrap_or(0.0),
            t2_s,
            contrast_factor: contrast,
            fom,
            fom_asgrown,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_both_energies() {
        let m = Model::default();
        assert_eq!(m.energies(), vec![1.0, 2.0]);
        assert!(m.charge.is_monotone_non_increasing());
        assert!(matches!(m.curve_for(3.0), Err(Error::UncalibratedEnergy(_))));
    }

    #[test]
    fn i2_04_prediction() {
        let m = Model::default();
        let p = m.predict(2.2, &IrradiationPlan::new(2.0, 1e17).unwrap()).unwrap();
        assert!((p.nv_minus_frac * 100.0 - 82.4).abs() < 5.0, "{}", p.nv_minus_frac);
        assert!(p.rules.charge_stable);
    }

    #[test]
    fn set_curve_replaces() {
        let mut m = Model::default();
        m.set_curve(ConversionCurve::new(2.0, 0.5, 1e17).unwrap());
        assert_eq!(m.curves.len(), 2);
        assert_eq!(m.curve_for(2.0).unwrap().nv_max_frac, 0.5);
    }
}
