//! Vacancy creation by electron irradiation and the saturating NV-creation
//! curve of each electron energy.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{levenberg_marquardt, median, Evaluation, LmSettings};
use crate::state::{check_non_negative, IrradiationPlan};

const ENERGY_TOLERANCE: f64 = 1e-9;

pub(crate) fn same_energy(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENERGY_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Vacancies created per unit fluence, keyed by electron energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacancyYieldTable {
    /// `(energy_mev, ppm per e/cm²)`, sorted by energy.
    entries: Vec<(f64, f64)>,
}

impl Default for VacancyYieldTable {
    fn default() -> Self {
        Self {
            entries: vec![(1.0, 0.9e-17), (2.0, 1.1e-17)],
        }
    }
}

impl VacancyYieldTable {
    pub fn new(entries: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut table = Self { entries: Vec::new() };
        for (e, k) in entries {
            table.insert(e, k)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, energy_mev: f64, ppm_per_fluence: f64) -> Result<()> {
        if !(energy_mev > 0.0 && ppm_per_fluence > 0.0 && ppm_per_fluence.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "vacancy yield",
                reason: format!("energy and yield must be positive, got ({energy_mev}, {ppm_per_fluence})"),
            });
        }
        match self.entries.iter_mut().find(|(e, _)| same_energy(*e, energy_mev)) {
            Some(entry) => entry.1 = ppm_per_fluence,
            None => {
                self.entries.push((energy_mev, ppm_per_fluence));
                self.entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
        }
        Ok(())
    }

    pub fn yield_for(&self, energy_mev: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(e, _)| same_energy(*e, energy_mev))
            .map(|&(_, k)| k)
            .ok_or(Error::UnknownEnergy(energy_mev))
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }
}

/// Isolated vacancies (ppm) created by one irradiation step.
pub fn vacancy_concentration(plan: &IrradiationPlan, table: &VacancyYieldTable) -> Result<f64> {
    Ok(table.yield_for(plan.energy_mev)? * plan.fluence_e_per_cm2)
}

/// `NV_total = P1_grown · nv_max_frac · (1 − exp(−Φ/phi0))` for one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionCurve {
    pub energy_mev: f64,
    pub nv_max_frac: f64,
    pub phi0: f64,
}

impl ConversionCurve {
    pub fn new(energy_mev: f64, nv_max_frac: f64, phi0: f64) -> Result<Self> {
        if !(nv_max_frac > 0.0 && nv_max_frac <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "nv_max_frac",
                reason: format!("must lie in (0, 1], got {nv_max_frac}"),
            });
        }
        if !(phi0 > 0.0 && phi0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "phi0",
                reason: format!("must be positive, got {phi0}"),
            });
        }
        Ok(Self {
            energy_mev,
            nv_max_frac,
            phi0,
        })
    }

    /// NV_total / P1_grown at a fluence.
    pub fn fraction_at(&self, fluence: f64) -> f64 {
        self.nv_max_frac * -(-fluence / self.phi0).exp_m1()
    }
}

/// Total NV (ppm) after irradiation with `plan` and annealing.
pub fn nv_total_after_anneal(
    p1_grown_ppm: f64,
    plan: &IrradiationPlan,
    curve: &ConversionCurve,
) -> Result<f64> {
    check_non_negative("p1_grown_ppm", p1_grown_ppm)?;
    if !same_energy(curve.energy_mev, plan.energy_mev) {
        return Err(Error::EnergyMismatch {
            curve: curve.energy_mev,
            plan: plan.energy_mev,
        });
    }
    Ok(p1_grown_ppm * curve.fraction_at(plan.fluence_e_per_cm2))
}

/// Fits a [`ConversionCurve`] to `(fluence, nv_total_ppm)` points by damped
/// iterative least squares on the NV totals.
pub fn fit_conversion_curve(
    series: &[(f64, f64)],
    p1_grown_ppm: f64,
    energy_mev: f64,
) -> Result<ConversionCurve> {
    if series.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: series.len(),
        });
    }
    if !(p1_grown_ppm > 0.0) {
        return Err(Error::InvalidParameter {
            name: "p1_grown_ppm",
            reason: format!("must be positive, got {p1_grown_ppm}"),
        });
    }
    let fluences: Vec<f64> = series.iter().map(|p| p.0).collect();
    if fluences.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidParameter {
            name: "fluence",
            reason: "fluences must be positive".into(),
        });
    }
    let mut sorted = fluences.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateData("fluences must be distinct".into()));
    }
    // phi0 is carried in units of the median fluence for conditioning
    let scale = median(&fluences);
    let max_frac = series
        .iter()
        .map(|p| p.1 / p1_grown_ppm)
        .fold(0.0_f64, f64::max);
    if max_frac <= 0.0 {
        return Err(Error::DegenerateData("no NV created in the series".into()));
    }
    let initial = vec![(max_frac * 1.2).min(1.0), 1.0];

    let outcome = levenberg_marquardt(initial, LmSettings::default(), |p| {
        let (m, s) = (p[0], p[1]);
        if !(m > 0.0 && s > 0.0) {
            return None;
        }
        let mut residuals = Vec::with_capacity(series.len());
        let mut jacobian = Vec::with_capacity(series.len());
        for &(phi, nv) in series {
            let u = phi / (scale * s);
            let decay = (-u).exp();
            residuals.push(p1_grown_ppm * m * -(-u).exp_m1() - nv);
            jacobian.push(vec![
                p1_grown_ppm * -(-u).exp_m1(),
                -p1_grown_ppm * m * decay * u / s,
            ]);
        }
        Some(Evaluation {
            residuals,
            jacobian,
        })
    })?;
    ConversionCurve::new(energy_mev, outcome.params[0], outcome.params[1] * scale)
        .map_err(|e| Error::BadCalibration(format!("fitted curve is not physical: {e}")))
}

/// Sum of squared NV-total residuals of a curve over a series.
pub fn series_sse(curve: &ConversionCurve, series: &[(f64, f64)], p1_grown_ppm: f64) -> f64 {
    series
        .iter()
        .map(|&(phi, nv)| {
            let r = p1_grown_ppm * curve.fraction_at(phi) - nv;
            r * r
        })
        .sum()
}

/// Reads `fluence_e_per_cm2,nv_total_ppm` CSV.
pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    crate::csvio::read_pairs(reader, ["fluence_e_per_cm2", "nv_total_ppm"])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(e: f64, f: f64) -> IrradiationPlan {
        IrradiationPlan::new(e, f).unwrap()
    }

    #[test]
    fn vacancy_yields() {
        let t = VacancyYieldTable::default();
        let v = vacancy_concentration(&plan(2.0, 1e17), &t).unwrap();
        assert!((v - 1.1).abs() < 1e-12);
        let v = vacancy_concentration(&plan(1.0, 3e18), &t).unwrap();
        assert!((v - 27.0).abs() < 1e-9);
        assert_eq!(vacancy_concentration(&plan(2.0, 0.0), &t).unwrap(), 0.0);
        assert_eq!(
            vacancy_concentration(&plan(1.5, 1e17), &t),
            Err(Error::UnknownEnergy(1.5))
        );
    }

    #[test]
    fn vacancy_is_linear_in_fluence() {
        let t = VacancyYieldTable::default();
        for f in [1e15, 3.3e16, 1e17, 7.7e18] {
            let a = vacancy_concentration(&plan(2.0, f), &t).unwrap();
            let b = vacancy_concentration(&plan(2.0, 2.0 * f), &t).unwrap();
            assert_eq!(b, 2.0 * a);
        }
    }

    #[test]
    fn anneal_curve_limits() {
        let c = ConversionCurve::new(2.0, 0.2, 3e17).unwrap();
        assert_eq!(nv_total_after_anneal(2.2, &plan(2.0, 0.0), &c).unwrap(), 0.0);
        let sat = nv_total_after_anneal(2.2, &plan(2.0, 50.0 * 3e17), &c).unwrap();
        assert!((sat - 0.44).abs() / 0.44 < 1e-9);
        assert!(matches!(
            nv_total_after_anneal(2.2, &plan(1.0, 1e17), &c),
            Err(Error::EnergyMismatch { .. })
        ));
    }

    #[test]
    fn curve_validation() {
        assert!(ConversionCurve::new(2.0, 0.0, 1e17).is_err());
        assert!(ConversionCurve::new(2.0, 1.2, 1e17).is_err());
        assert!(ConversionCurve::new(2.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn fit_recovers_exact_curve() {
        let truth = ConversionCurve::new(2.0, 0.2, 3e17).unwrap();
        let series: Vec<_> = [1e16, 5e16, 1e17, 3e17, 1e18, 3e18]
            .iter()
            .map(|&f| (f, 2.2 * truth.fraction_at(f)))
            .collect();
        let fit = fit_conversion_curve(&series, 2.2, 2.0).unwrap();
        assert!((fit.nv_max_frac - 0.2).abs() / 0.2 < 1e-6);
        assert!((fit.phi0 - 3e17).abs() / 3e17 < 1e-6);
    }

    #[test]
    fn fit_needs_three_points() {
        assert_eq!(
            fit_conversion_curve(&[(1e16, 0.1), (1e17, 0.2)], 2.2, 2.0),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        );
        assert!(fit_conversion_curve(&[(1e16, 0.1), (1e16, 0.2), (1e17, 0.3)], 2.2, 2.0).is_err());
    }
}
