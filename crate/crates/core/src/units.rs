//! Concentration units. Parts per million/billion are atomic fractions of the
//! diamond lattice; volumetric densities go through the carbon atom density.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Atomic density of diamond, atoms/cm³.
pub const DIAMOND_CARBON_DENSITY: f64 = 1.76e23;

static CARBON_DENSITY_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide carbon density used by the unit conversions.
pub fn carbon_density() -> f64 {
    match CARBON_DENSITY_BITS.load(Ordering::Relaxed) {
        0 => DIAMOND_CARBON_DENSITY,
        bits => f64::from_bits(bits),
    }
}

/// Overrides the process-wide carbon density (atoms/cm³).
pub fn set_carbon_density(atoms_per_cm3: f64) -> Result<()> {
    if !(atoms_per_cm3.is_finite() && atoms_per_cm3 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "carbon_density",
            reason: format!("must be positive and finite, got {atoms_per_cm3}"),
        });
    }
    CARBON_DENSITY_BITS.store(atoms_per_cm3.to_bits(), Ordering::Relaxed);
    Ok(())
}

pub fn ppb_to_ppm(ppb: f64) -> f64 {
    ppb * 1e-3
}

pub fn ppm_to_ppb(ppm: f64) -> f64 {
    ppm * 1e3
}

pub fn ppb_to_per_cm3_with(ppb: f64, carbon_density: f64) -> f64 {
    ppb * 1e-9 * carbon_density
}

pub fn per_cm3_to_ppb_with(per_cm3: f64, carbon_density: f64) -> f64 {
    per_cm3 / carbon_density * 1e9
}

pub fn ppb_to_per_cm3(ppb: f64) -> f64 {
    ppb_to_per_cm3_with(ppb, carbon_density())
}

pub fn per_cm3_to_ppb(per_cm3: f64) -> f64 {
    per_cm3_to_ppb_with(per_cm3, carbon_density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_ppb_in_diamond() {
        let n = ppb_to_per_cm3_with(1.0, DIAMOND_CARBON_DENSITY);
        assert!((n - 1.76e14).abs() / 1.76e14 < 1e-15);
    }

    #[test]
    fn bad_density_rejected() {
        assert!(set_carbon_density(0.0).is_err());
        assert!(set_carbon_density(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn round_trips_compose_to_identity(ppm in 1e-6f64..1e4) {
            let back = ppb_to_ppm(per_cm3_to_ppb_with(
                ppb_to_per_cm3_with(ppm_to_ppb(ppm), DIAMOND_CARBON_DENSITY),
                DIAMOND_CARBON_DENSITY,
            ));
            prop_assert!(((back - ppm) / ppm).abs() < 1e-12);
        }
    }
}
