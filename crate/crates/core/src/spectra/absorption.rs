use serde::{Deserialize, Serialize};

use super::{subtract_baseline, Spectrum};
use crate::dataset::{Measured, SIGMA_532_CM2};
use crate::error::{Error, Result};
use crate::units::{carbon_density, per_cm3_to_ppb_with};

pub const P1_BAND_WINDOW_NM: (f64, f64) = (255.0, 285.0);

/// Exponential absorption coefficient from decadic absorbance.
pub fn absorbance_to_mu(absorbance: f64, thickness_cm: f64) -> Result<f64> {
    if !(thickness_cm > 0.0) {
        return Err(Error::NonPositiveThickness(thickness_cm));
    }
    Ok(absorbance * std::f64::consts::LN_10 / thickness_cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NvAbsorption {
    pub mu_532_per_cm: f64,
    pub per_cm3: f64,
    pub per_cm3_uncertainty: f64,
    pub ppb: f64,
    pub ppb_uncertainty: f64,
    /// Relative uncertainty carried over from the cross-section.
    pub relative_uncertainty: f64,
}

/// `[NV] = μ₅₃₂ / σ₅₃₂` with the default cross-section and carbon density.
pub fn nv_from_absorption(mu_532: f64) -> Result<NvAbsorption> {
    nv_from_absorption_with(mu_532, SIGMA_532_CM2, carbon_density())
}

pub fn nv_from_absorption_with(mu_532: f64, sigma_cm2: Measured, carbon_density: f64) -> Result<NvAbsorption> {
    crate::state::check_non_negative("mu_532", mu_532)?;
    if !(sigma_cm2.value > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma_532",
            reason: format!("must be positive, got {}", sigma_cm2.value),
        });
    }
    let relative = sigma_cm2.uncertainty.unwrap_or(0.0) / sigma_cm2.value;
    let per_cm3 = mu_532 / sigma_cm2.value;
    let ppb = per_cm3_to_ppb_with(per_cm3, carbon_density);
    Ok(NvAbsorption {
        mu_532_per_cm: mu_532,
        per_cm3,
        per_cm3_uncertainty: per_cm3 * relative,
        ppb,
        ppb_uncertainty: ppb * relative,
        relative_uncertainty: relative,
    })
}

/// Baseline-corrected, clamped integral of a band window.
pub fn band_strength(spectrum: &Spectrum, window: (f64, f64)) -> Result<f64> {
    Ok(subtract_baseline(spectrum, window)?.strength())
}

/// A reference plate of known P1 content and its 270 nm band strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Calibration {
    pub reference_strength: f64,
    pub reference_p1_ppm: f64,
}

impl P1Calibration {
    pub fn from_reference(reference: &Spectrum, reference_p1_ppm: f64) -> Result<Self> {
        Ok(Self {
            reference_strength: band_strength(reference, P1_BAND_WINDOW_NM)?,
            reference_p1_ppm,
        })
    }
}

/// P1 content scaled from the 270 nm band strength of a reference.
pub fn p1_from_270_band(spectrum: &Spectrum, calibration: &P1Calibration) -> Result<f64> {
    if !(calibration.reference_strength > 0.0 && calibration.reference_strength.is_finite()) {
        return Err(Error::BadCalibration(format!(
            "reference strength must be positive, got {}",
            calibration.reference_strength
        )));
    }
    if !(calibration.reference_p1_ppm >= 0.0) {
        return Err(Error::BadCalibration(format!(
            "reference P1 must be non-negative, got {}",
            calibration.reference_p1_ppm
        )));
    }
    let strength = band_strength(spectrum, P1_BAND_WINDOW_NM)?;
    Ok(calibration.reference_p1_ppm * strength / calibration.reference_strength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectrumKind;
    use crate::units::DIAMOND_CARBON_DENSITY;

    #[test]
    fn absorbance_conversion() {
        assert!((absorbance_to_mu(0.1, 0.05).unwrap() - 4.6052).abs() < 1e-4);
        assert_eq!(absorbance_to_mu(0.0, 0.05).unwrap(), 0.0);
        assert_eq!(absorbance_to_mu(1.0, 1.0).unwrap(), std::f64::consts::LN_10);
        assert_eq!(absorbance_to_mu(1.0, 0.0), Err(Error::NonPositiveThickness(0.0)));
    }

    #[test]
    fn absorption_to_concentration() {
        let r = nv_from_absorption_with(1.672e-2, SIGMA_532_CM2, DIAMOND_CARBON_DENSITY).unwrap();
        // 1.672e-2 / 0.95e-16 = 1.76e14 cm⁻³ = 1 ppb
        assert!((r.per_cm3 - 1.76e14).abs() / 1.76e14 < 1e-12);
        assert!((r.ppb - 1.0).abs() < 1e-12);
        assert!((r.relative_uncertainty - 0.25 / 0.95).abs() < 1e-15);
        let z = nv_from_absorption_with(0.0, SIGMA_532_CM2, DIAMOND_CARBON_DENSITY).unwrap();
        assert_eq!((z.per_cm3, z.ppb), (0.0, 0.0));
    }

    fn p1_spectrum(amp: f64) -> Spectrum {
        Spectrum::from_fn(200.0, 800.0, 1.0, SpectrumKind::AbsorptionCoefficient, |x| {
            3.0 - 0.003 * x + amp * (-0.5 * ((x - 270.0) / 5.0).powi(2)).exp()
        })
        .unwrap()
    }

    #[test]
    fn p1_band_is_linear() {
        let reference = p1_spectrum(2.0);
        let cal = P1Calibration::from_reference(&reference, 1.5).unwrap();
        assert!((p1_from_270_band(&reference, &cal).unwrap() - 1.5).abs() < 1e-12);
        let half = p1_from_270_band(&p1_spectrum(1.0), &cal).unwrap();
        assert!((half - 0.75).abs() < 1e-9, "{half}");
        let double = p1_from_270_band(&p1_spectrum(4.0), &cal).unwrap();
        assert!((double - 3.0).abs() < 1e-9);
    }

    #[test]
    fn p1_band_errors() {
        let bad = P1Calibration {
            reference_strength: 0.0,
            reference_p1_ppm: 1.0,
        };
        assert!(matches!(
            p1_from_270_band(&p1_spectrum(1.0), &bad),
            Err(Error::BadCalibration(_))
        ));
        let cal = P1Calibration {
            reference_strength: 1.0,
            reference_p1_ppm: 1.0,
        };
        let short = Spectrum::from_fn(300.0, 800.0, 1.0, SpectrumKind::AbsorptionCoefficient, |_| 1.0).unwrap();
        assert!(matches!(
            p1_from_270_band(&short, &cal),
            Err(Error::WindowOutOfRange { .. })
        ));
    }
}
