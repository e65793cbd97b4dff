//! Charge-state decomposition of a PL spectrum into NV⁻ and NV⁰ references.

use serde::Serialize;

use super::Spectrum;
use crate::dataset::{GAMMA_MINUS_PER_NS, GAMMA_ZERO_PER_NS};
use crate::error::{Error, Result};
use crate::numeric::{nnls_two, trapezoid};

/// Γ⁻/Γ⁰: converts a photon ratio into a concentration ratio.
pub const DECAY_RATE_RATIO: f64 = GAMMA_MINUS_PER_NS / GAMMA_ZERO_PER_NS;

/// Collinearity tolerance on `1 − cos²` between the references.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeStateFit {
    pub w_minus: f64,
    pub w_zero: f64,
    /// Np⁻/Np⁰; infinite when no NV⁰ weight is fitted.
    pub photon_ratio: f64,
    /// [NV⁻]/[NV⁰].
    pub conc_ratio: f64,
    /// [NV⁻]/([NV⁻]+[NV⁰]) as a fraction.
    pub nv_minus_frac: f64,
    /// Share of measurement points covered by both references.
    pub overlap_fraction: f64,
}

/// Non-negative least-squares weights of the two references, resampled onto
/// the measurement grid (zero outside their ranges).
pub fn decompose_pl(spectrum: &Spectrum, ref_minus: &Spectrum, ref_zero: &Spectrum) -> Result<ChargeStateFit> {
    let grid = spectrum.wavelengths_nm();
    let (lo, hi) = spectrum.range();
    let (m_lo, m_hi) = ref_minus.range();
    let (z_lo, z_hi) = ref_zero.range();
    if lo.max(m_lo).max(z_lo) > hi.min(m_hi).min(z_hi) {
        return Err(Error::EmptyOverlap);
    }
    for r in [ref_minus, ref_zero] {
        if r.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "reference spectrum",
                reason: "values must be non-negative".into(),
            });
        }
    }
    let (a, _) = ref_minus.resample_onto(grid);
    let (b, _) = ref_zero.resample_onto(grid);
    let overlap = grid
        .iter()
        .filter(|&&x| ref_minus.value_at(x).is_some() && ref_zero.value_at(x).is_some())
        .count() as f64
        / grid.len() as f64;

    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let (aa, bb, ab) = (dot(&a, &a), dot(&b, &b), dot(&a, &b));
    if aa <= 0.0 || bb <= 0.0 || 1.0 - ab * ab / (aa * bb) < COLLINEAR_TOL {
        return Err(Error::DegenerateReferences);
    }
    let [w_minus, w_zero] = nnls_two(&a, &b, spectrum.values()).ok_or(Error::DegenerateReferences)?;

    let photons_minus = w_minus * trapezoid(grid, &a);
    let photons_zero = w_zero * trapezoid(grid, &b);
    let (photon_ratio, nv_minus_frac) = if photons_zero > 0.0 {
        let r = photons_minus / photons_zero;
        let c = r * DECAY_RATE_RATIO;
        (r, c / (1.0 + c))
    } else if photons_minus > 0.0 {
        (f64::INFINITY, 1.0)
    } else {
        return Err(Error::DegenerateSignal);
    };
    Ok(ChargeStateFit {
        w_minus,
        w_zero,
        photon_ratio,
        conc_ratio: photon_ratio * DECAY_RATE_RATIO,
        nv_minus_frac,
        overlap_fraction: overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectrumKind;

    const PL: SpectrumKind = SpectrumKind::PhotoluminescenceCounts;

    fn band(centre: f64, width: f64) -> Spectrum {
        Spectrum::from_fn(550.0, 800.0, 0.5, PL, |x| (-0.5 * ((x - centre) / width).powi(2)).exp()).unwrap()
    }

    fn mix(a: &Spectrum, b: &Spectrum, wa: f64, wb: f64) -> Spectrum {
        let v = a.values().iter().zip(b.values()).map(|(x, y)| wa * x + wb * y).collect();
        Spectrum::new(a.wavelengths_nm().to_vec(), v, PL).unwrap()
    }

    #[test]
    fn exact_recovery() {
        let (m, z) = (band(680.0, 30.0), band(620.0, 25.0));
        let f = decompose_pl(&mix(&m, &z, 0.7, 0.3), &m, &z).unwrap();
        assert!((f.w_minus - 0.7).abs() < 1e-9 && (f.w_zero - 0.3).abs() < 1e-9);
        assert_eq!(f.overlap_fraction, 1.0);
    }

    #[test]
    fn equal_photons() {
        let (m, z) = (band(680.0, 30.0), band(620.0, 30.0));
        let k = z.integral() / m.integral();
        let f = decompose_pl(&mix(&m, &z, k, 1.0), &m, &z).unwrap();
        assert!((f.photon_ratio - 1.0).abs() < 1e-9);
        assert!((f.conc_ratio - 5.0 / 3.0).abs() < 1e-9);
        assert!((f.nv_minus_frac - 0.625).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_disjoint() {
        let m = band(680.0, 30.0);
        assert_eq!(decompose_pl(&m, &m, &m.scaled(2.0)), Err(Error::DegenerateReferences));
        let far = Spectrum::from_fn(900.0, 950.0, 1.0, PL, |_| 1.0).unwrap();
        assert_eq!(decompose_pl(&m, &m, &far), Err(Error::EmptyOverlap));
    }

    #[test]
    fn pure_minus_is_full_fraction() {
        let (m, z) = (band(680.0, 30.0), band(620.0, 25.0));
        let f = decompose_pl(&m.scaled(3.0), &m, &z).unwrap();
        assert!((f.w_minus - 3.0).abs() < 1e-9 && f.w_zero.abs() < 1e-9);
        assert!(f.nv_minus_frac > 1.0 - 1e-9);
    }
}
