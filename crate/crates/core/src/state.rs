//! Defect inventory of a diamond plate and the conversion ratios between two
//! processing stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::ppb_to_ppm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    AsGrown,
    Irradiated,
    Annealed,
}

impl Stage {
    /// Processing only moves forward; staying put is allowed.
    pub fn can_advance_to(self, next: Stage) -> bool {
        next >= self
    }
}

/// Defect concentrations of one plate at one processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct MaterialState {
    p1_ppm: f64,
    nv_minus_ppb: f64,
    nv_zero_ppb: f64,
    vacancy_ppm: f64,
    stage: Stage,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    p1_ppm: f64,
    nv_minus_ppb: f64,
    nv_zero_ppb: f64,
    vacancy_ppm: f64,
    stage: Stage,
}

impl TryFrom<RawState> for MaterialState {
    type Error = Error;

    fn try_from(r: RawState) -> Result<Self> {
        MaterialState::new(r.p1_ppm, r.nv_minus_ppb, r.nv_zero_ppb, r.vacancy_ppm, r.stage)
    }
}

pub(crate) fn check_non_negative(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        Err(Error::NonFinite { field })
    } else if value < 0.0 {
        Err(Error::NegativeValue { field, value })
    } else {
        Ok(value)
    }
}

impl MaterialState {
    pub fn new(
        p1_ppm: f64,
        nv_minus_ppb: f64,
        nv_zero_ppb: f64,
        vacancy_ppm: f64,
        stage: Stage,
    ) -> Result<Self> {
        Ok(Self {
            p1_ppm: check_non_negative("p1_ppm", p1_ppm)?,
            nv_minus_ppb: check_non_negative("nv_minus_ppb", nv_minus_ppb)?,
            nv_zero_ppb: check_non_negative("nv_zero_ppb", nv_zero_ppb)?,
            vacancy_ppm: check_non_negative("vacancy_ppm", vacancy_ppm)?,
            stage,
        })
    }

    pub fn as_grown(p1_ppm: f64, nv_minus_ppb: f64, nv_zero_ppb: f64) -> Result<Self> {
        Self::new(p1_ppm, nv_minus_ppb, nv_zero_ppb, 0.0, Stage::AsGrown)
    }

    pub fn p1_ppm(&self) -> f64 {
        self.p1_ppm
    }

    pub fn nv_minus_ppb(&self) -> f64 {
        self.nv_minus_ppb
    }

    pub fn nv_zero_ppb(&self) -> f64 {
        self.nv_zero_ppb
    }

    pub fn vacancy_ppm(&self) -> f64 {
        self.vacancy_ppm
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn nv_total_ppb(&self) -> f64 {
        self.nv_minus_ppb + self.nv_zero_ppb
    }

    pub fn nv_total_ppm(&self) -> f64 {
        ppb_to_ppm(self.nv_total_ppb())
    }

    /// NV⁻ share of all NV centers, or `None` without any NV.
    pub fn nv_minus_fraction(&self) -> Option<f64> {
        let total = self.nv_total_ppb();
        (total > 0.0).then(|| self.nv_minus_ppb / total)
    }

    /// Same inventory at a later stage.
    pub fn advance(self, stage: Stage) -> Result<Self> {
        if !self.stage.can_advance_to(stage) {
            return Err(Error::StageTransition {
                from: self.stage,
                to: stage,
            });
        }
        Ok(Self { stage, ..self })
    }
}

/// One electron-irradiation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrradiationPlan {
    pub energy_mev: f64,
    pub fluence_e_per_cm2: f64,
}

impl IrradiationPlan {
    pub fn new(energy_mev: f64, fluence_e_per_cm2: f64) -> Result<Self> {
        if !(energy_mev.is_finite() && energy_mev > 0.0) {
            return Err(Error::InvalidParameter {
                name: "energy_mev",
                reason: format!("must be positive, got {energy_mev}"),
            });
        }
        Ok(Self {
            energy_mev,
            fluence_e_per_cm2: check_non_negative("fluence_e_per_cm2", fluence_e_per_cm2)?,
        })
    }
}

/// NV to P1 ratios of a treated plate, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionRatios {
    /// NV / P1 remaining after treatment.
    pub r_re: f64,
    /// NV / P1 as grown.
    pub r_con: f64,
    /// NV⁻ / P1 as grown.
    pub r_con_minus: f64,
}

pub fn conversion_ratios(grown: &MaterialState, treated: &MaterialState) -> Result<ConversionRatios> {
    expect_stage("grown", grown, Stage::AsGrown)?;
    expect_stage("treated", treated, Stage::Annealed)?;
    if grown.p1_ppm == 0.0 {
        return Err(Error::ZeroDenominator("as-grown P1"));
    }
    if treated.p1_ppm == 0.0 {
        return Err(Error::ZeroDenominator("remaining P1"));
    }
    let nv = treated.nv_total_ppm();
    Ok(ConversionRatios {
        r_re: nv / treated.p1_ppm,
        r_con: nv / grown.p1_ppm,
        r_con_minus: ppb_to_ppm(treated.nv_minus_ppb) / grown.p1_ppm,
    })
}

pub(crate) fn expect_stage(role: &'static str, s: &MaterialState, expected: Stage) -> Result<()> {
    if s.stage != expected {
        return Err(Error::WrongStage {
            role,
            expected,
            actual: s.stage,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annealed(p1: f64, minus: f64, zero: f64) -> MaterialState {
        MaterialState::new(p1, minus, zero, 0.0, Stage::Annealed).unwrap()
    }

    #[test]
    fn rejects_negative_concentrations() {
        assert!(matches!(
            MaterialState::as_grown(-0.1, 0.0, 0.0),
            Err(Error::NegativeValue { field: "p1_ppm", .. })
        ));
        assert!(MaterialState::new(1.0, 0.0, 0.0, f64::NAN, Stage::AsGrown).is_err());
    }

    #[test]
    fn stages_only_move_forward() {
        let s = MaterialState::as_grown(1.0, 0.0, 0.0).unwrap();
        let a = s.advance(Stage::Irradiated).unwrap().advance(Stage::Annealed).unwrap();
        assert!(a.advance(Stage::AsGrown).is_err());
        assert!(s.advance(Stage::Annealed).is_ok());
    }

    #[test]
    fn nv_total_is_exact_sum() {
        let s = annealed(1.0, 12.5, 3.25);
        assert_eq!(s.nv_total_ppb(), 15.75);
    }

    #[test]
    fn ratios_direct_arithmetic() {
        let g = MaterialState::as_grown(1.0, 0.0, 0.0).unwrap();
        let t = annealed(0.9, 60.0, 30.0);
        let r = conversion_ratios(&g, &t).unwrap();
        assert!((r.r_re - 0.1).abs() < 1e-15);
        assert!((r.r_con - 0.09).abs() < 1e-15);
        assert!((r.r_con_minus - 0.06).abs() < 1e-15);
    }

    #[test]
    fn ratios_zero_nv() {
        let g = MaterialState::as_grown(2.2, 0.0, 0.0).unwrap();
        let t = annealed(2.2, 0.0, 0.0);
        let r = conversion_ratios(&g, &t).unwrap();
        assert_eq!((r.r_re, r.r_con, r.r_con_minus), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ratios_table_row_i2_04() {
        // NV⁻/P1_grown = 5.1 %, NV⁻/NV = 82.4 %
        let nv_minus_ppm = 2.2 * 0.051;
        let nv_total_ppm = nv_minus_ppm / 0.824;
        let g = MaterialState::as_grown(2.2, 0.0, 0.0).unwrap();
        let t = annealed(
            2.2 - nv_total_ppm,
            nv_minus_ppm * 1e3,
            (nv_total_ppm - nv_minus_ppm) * 1e3,
        );
        let r = conversion_ratios(&g, &t).unwrap();
        assert!((r.r_con * 100.0 - 6.19).abs() < 0.01, "{}", r.r_con);
        assert!((r.r_con_minus * 100.0 - 5.1).abs() < 1e-9);
        assert!(r.r_con < r.r_re);
    }

    #[test]
    fn ratios_zero_denominator() {
        let g = MaterialState::as_grown(0.0, 0.0, 0.0).unwrap();
        let t = annealed(1.0, 1.0, 0.0);
        assert_eq!(
            conversion_ratios(&g, &t),
            Err(Error::ZeroDenominator("as-grown P1"))
        );
        let g = MaterialState::as_grown(1.0, 0.0, 0.0).unwrap();
        let t = annealed(0.0, 1.0, 0.0);
        assert!(matches!(conversion_ratios(&g, &t), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn json_field_names() {
        let s = MaterialState::as_grown(2.2, 5.5, 0.9).unwrap();
        let v = serde_json::to_value(s).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            ["nv_minus_ppb", "nv_zero_ppb", "p1_ppm", "stage", "vacancy_ppm"]
        );
        assert_eq!(v["stage"], "AsGrown");
        let back: MaterialState = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"p1_ppm": -1.0, "nv_minus_ppb": 0.0,
            "nv_zero_ppb": 0.0, "vacancy_ppm": 0.0, "stage": "AsGrown"});
        assert!(serde_json::from_value::<MaterialState>(bad).is_err());
    }
}
