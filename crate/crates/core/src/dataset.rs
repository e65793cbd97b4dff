//! Embedded reference measurements: the irradiation series (charge states
//! and conversion rates) and the nitrogen series (NV content and coherence
//! before and after treatment), plus the reference model constants.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Nitrogen-dominated decoherence rate, 2π × kHz per ppm.
pub const B_RATE_KHZ_PER_PPM: Measured = Measured::pm(1.0, 0.1);
/// Nitrogen-independent T₂, microseconds.
pub const T2_OTHER_US: Measured = Measured::pm(694.0, 82.0);
/// Estimated share of nitrogen present as P1.
pub const P1_FRACTION: f64 = 0.75;
/// NV absorption cross-section at 532 nm, cm².
pub const SIGMA_532_CM2: Measured = Measured::pm(0.95e-16, 0.25e-16);
/// Decay rates of NV⁻ and NV⁰, ns⁻¹.
pub const GAMMA_MINUS_PER_NS: f64 = 1.0 / 12.0;
pub const GAMMA_ZERO_PER_NS: f64 = 1.0 / 20.0;
/// As-grown P1 of both irradiation series, ppm.
pub const IRRADIATION_SERIES_P1_PPM: f64 = 2.2;
/// Treatment applied to the nitrogen series.
pub const NITROGEN_SERIES_ENERGY_MEV: f64 = 2.0;
pub const NITROGEN_SERIES_FLUENCE: f64 = 2e17;

/// A printed value with its ± uncertainty, when one was given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub uncertainty: Option<f64>,
}

impl Measured {
    pub const fn pm(value: f64, uncertainty: f64) -> Self {
        Self {
            value,
            uncertainty: Some(uncertainty),
        }
    }

    pub const fn exact(value: f64) -> Self {
        Self {
            value,
            uncertainty: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRecord {
    pub series: &'static str,
    pub sample_id: &'static str,
    pub nc_ppm: Option<f64>,
    pub p1_grown_ppm: Option<f64>,
    pub nv_minus_asgrown_ppb: Option<f64>,
    pub nv_minus_treated_ppb: Option<f64>,
    pub nv_minus_frac_treated_pct: Option<Measured>,
    pub t2_asgrown_us: Option<Measured>,
    pub t2_treated_us: Option<Measured>,
    pub fluence: Option<f64>,
    pub energy_mev: Option<f64>,
    pub r_re_pct: Option<f64>,
    pub r_con_minus_pct: Option<f64>,
}

const BLANK: TableRecord = TableRecord {
    series: "",
    sample_id: "",
    nc_ppm: None,
    p1_grown_ppm: None,
    nv_minus_asgrown_ppb: None,
    nv_minus_treated_ppb: None,
    nv_minus_frac_treated_pct: None,
    t2_asgrown_us: None,
    t2_treated_us: None,
    fluence: None,
    energy_mev: None,
    r_re_pct: None,
    r_con_minus_pct: None,
};

fn irr(
    series: &'static str,
    sample_id: &'static str,
    energy: f64,
    fluence: f64,
    frac: Measured,
    r_re: f64,
    r_con_minus: f64,
) -> TableRecord {
    TableRecord {
        series,
        sample_id,
        fluence: Some(fluence),
        energy_mev: Some(energy),
        nv_minus_frac_treated_pct: Some(frac),
        r_re_pct: Some(r_re),
        r_con_minus_pct: Some(r_con_minus),
        ..BLANK
    }
}

/// Irradiation series: NV charge states and conversion rates.
pub fn table1() -> Vec<TableRecord> {
    let m = Measured::pm;
    vec![
        irr("2 MeV series", "I2-01", 2.0, 1e16, m(86.2, 0.5), 1.3, 0.9),
        irr("2 MeV series", "I2-02", 2.0, 2e16, m(86.3, 0.2), 1.9, 1.4),
        irr("2 MeV series", "I2-04", 2.0, 1e17, m(82.4, 0.3), 8.3, 5.1),
        irr("2 MeV series", "I2-05", 2.0, 2e17, m(65.5, 1.2), 17.6, 7.3),
        irr("2 MeV series", "I2-08", 2.0, 1e18, m(52.5, 2.1), 33.3, 8.9),
        irr("1 MeV series", "I1-39", 1.0, 1e17, m(87.1, 1.6), 1.7, 1.4),
        irr("1 MeV series", "I1-50", 1.0, 3e17, m(86.4, 1.3), 2.7, 2.2),
        irr("1 MeV series", "I1-28", 1.0, 1e18, m(85.5, 1.9), 9.5, 7.2),
        irr("1 MeV series", "I1-29", 1.0, 3e18, m(67.9, 1.9), 15.3, 8.4),
    ]
}

#[allow(clippy::too_many_arguments)]
fn n1(
    sample_id: &'static str,
    nc: f64,
    p1: Option<f64>,
    nv_grown: f64,
    nv_treated: f64,
    frac: Measured,
    t2_grown: Measured,
    t2_treated: Measured,
) -> TableRecord {
    TableRecord {
        series: "Nitrogen series #1",
        sample_id,
        nc_ppm: Some(nc),
        p1_grown_ppm: p1,
        nv_minus_asgrown_ppb: Some(nv_grown),
        nv_minus_treated_ppb: Some(nv_treated),
        nv_minus_frac_treated_pct: Some(frac),
        t2_asgrown_us: Some(t2_grown),
        t2_treated_us: Some(t2_treated),
        ..BLANK
    }
}

fn n2(sample_id: &'static str, nc: f64, p1: f64, nv_grown: f64) -> TableRecord {
    TableRecord {
        series: "Nitrogen series #2",
        sample_id,
        nc_ppm: Some(nc),
        p1_grown_ppm: Some(p1),
        nv_minus_asgrown_ppb: Some(nv_grown),
        ..BLANK
    }
}

/// Nitrogen series: NV creation and coherence times.
pub fn table2() -> Vec<TableRecord> {
    let m = Measured::pm;
    vec![
        n1("NDT-26", 150.0, Some(0.2), 0.03, 1.0, m(12.8, 1.7), m(497.7, 26.2), m(549.0, 332.0)),
        n1("NDT-14", 500.0, None, 0.2, 10.0, m(38.4, 3.3), m(288.9, 31.3), m(329.3, 101.8)),
        n1("NDT-07", 1500.0, Some(0.5), 1.5, 36.0, m(31.6, 1.6), m(166.1, 8.7), m(136.9, 3.9)),
        n1("NDT-34", 2500.0, Some(0.8), 1.8, 35.0, m(33.7, 3.0), m(101.3, 3.3), m(98.5, 7.1)),
        n1("NDT-01", 4500.0, Some(1.4), 2.4, 67.0, m(40.5, 3.3), m(72.8, 1.5), m(79.1, 3.2)),
        n1("NDT-02", 7429.0, Some(1.9), 3.3, 95.0, m(50.9, 2.3), m(48.2, 1.0), m(74.2, 3.4)),
        n1("NDT-12", 8500.0, Some(2.6), 6.4, 168.0, m(67.2, 1.2), m(53.3, 1.4), m(45.5, 1.2)),
        n2("Cas-40", 9722.0, 3.2, 15.3),
        n2("Cas-48", 42777.0, 5.2, 21.3),
        n2("Cas-68", 77142.0, 7.8, 16.0),
        n2("Cas-44", 87499.0, 9.5, 25.9),
        n2("Cas-51", 173571.0, 11.2, 33.9),
        n2("Cas-49", 347143.0, 13.0, 27.1),
        n2("Cas-50", 694286.0, 19.3, 28.5),
    ]
}

pub fn load_table(name: &str) -> Result<Vec<TableRecord>> {
    match name {
        "table1" => Ok(table1()),
        "table2" => Ok(table2()),
        other => Err(Error::UnknownTable(other.to_string())),
    }
}

/// Rows of the first nitrogen series.
pub fn nitrogen_series_1() -> Vec<TableRecord> {
    table2()
        .into_iter()
        .filter(|r| r.series == "Nitrogen series #1")
        .collect()
}

/// Rows of one irradiation energy.
pub fn irradiation_series(energy_mev: f64) -> Vec<TableRecord> {
    table1()
        .into_iter()
        .filter(|r| r.energy_mev == Some(energy_mev))
        .collect()
}

impl TableRecord {
    /// Total NV over as-grown P1 implied by the printed NV⁻/P1_grown and
    /// NV⁻/NV ratios, as a fraction.
    pub fn implied_nv_fraction(&self) -> Option<f64> {
        Some(self.r_con_minus_pct? / self.nv_minus_frac_treated_pct?.value)
    }
}

const CSV_HEADER: &str = "series,sample_id,nc_ppm,p1_grown_ppm,nv_minus_asgrown_ppb,nv_minus_treated_ppb,\
nv_minus_frac_treated_pct,nv_minus_frac_treated_pct_err,t2_asgrown_us,t2_asgrown_us_err,\
t2_treated_us,t2_treated_us_err,fluence,energy_mev,r_re_pct,r_con_minus_pct";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV rendering of a table; blank cells stay blank.
pub fn to_csv(records: &[TableRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let m = |x: Option<Measured>| [cell(x.map(|m| m.value)), cell(x.and_then(|m| m.uncertainty))];
        let cells: Vec<String> = [
            vec![r.series.to_string(), r.sample_id.to_string()],
            vec![
                cell(r.nc_ppm),
                cell(r.p1_grown_ppm),
                cell(r.nv_minus_asgrown_ppb),
                cell(r.nv_minus_treated_ppb),
            ],
            m(r.nv_minus_frac_treated_pct).to_vec(),
            m(r.t2_asgrown_us).to_vec(),
            m(r.t2_treated_us).to_vec(),
            vec![
                cell(r.fluence),
                cell(r.energy_mev),
                cell(r.r_re_pct),
                cell(r.r_con_minus_pct),
            ],
        ]
        .concat();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// SHA-256 over the CSV rendering of both tables.
pub fn checksum() -> String {
    let mut h = Sha256::new();
    h.update(to_csv(&table1()).as_bytes());
    h.update(to_csv(&table2()).as_bytes());
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_counts() {
        assert_eq!(table1().len(), 9);
        assert_eq!(table2().len(), 14);
        assert_eq!(nitrogen_series_1().len(), 7);
        assert_eq!(irradiation_series(2.0).len(), 5);
        assert_eq!(irradiation_series(1.0).len(), 4);
    }

    #[test]
    fn row_i1_29() {
        let t = load_table("table1").unwrap();
        let r = t.iter().find(|r| r.sample_id == "I1-29").unwrap();
        assert_eq!(r.fluence, Some(3e18));
        assert_eq!(r.energy_mev, Some(1.0));
        assert_eq!(r.nv_minus_frac_treated_pct, Some(Measured::pm(67.9, 1.9)));
        assert_eq!(r.r_re_pct, Some(15.3));
        assert_eq!(r.r_con_minus_pct, Some(8.4));
    }

    #[test]
    fn row_ndt_26() {
        let t = load_table("table2").unwrap();
        let r = &t[0];
        assert_eq!(r.sample_id, "NDT-26");
        assert_eq!(r.nc_ppm, Some(150.0));
        assert_eq!(r.p1_grown_ppm, Some(0.2));
        assert_eq!(r.nv_minus_asgrown_ppb, Some(0.03));
        assert_eq!(r.nv_minus_treated_ppb, Some(1.0));
        assert_eq!(r.nv_minus_frac_treated_pct.unwrap().value, 12.8);
        assert_eq!(r.t2_asgrown_us.unwrap().value, 497.7);
        assert_eq!(r.t2_treated_us.unwrap().value, 549.0);
    }

    #[test]
    fn unknown_table() {
        assert_eq!(
            load_table("table3"),
            Err(Error::UnknownTable("table3".into()))
        );
    }

    #[test]
    fn second_series_has_no_treated_columns() {
        for r in table2().iter().filter(|r| r.series == "Nitrogen series #2") {
            assert!(r.nv_minus_treated_ppb.is_none());
            assert!(r.t2_asgrown_us.is_none() && r.t2_treated_us.is_none());
        }
    }

    #[test]
    fn r_con_minus_below_r_re() {
        for r in table1() {
            assert!(r.r_con_minus_pct.unwrap() < r.r_re_pct.unwrap(), "{}", r.sample_id);
        }
    }

    #[test]
    fn embedded_data_checksum() {
        assert_eq!(
            checksum(),
            "4efcd520df17811a01579be2dce85587c79a836b73dd5e7af4ee910fdc094c82"
        );
    }

    #[test]
    fn csv_keeps_blanks() {
        let csv = to_csv(&table2());
        let ndt14 = csv.lines().find(|l| l.contains("NDT-14")).unwrap();
        assert!(ndt14.starts_with("Nitrogen series #1,NDT-14,500,,0.2,10,38.4,3.3"));
        assert_eq!(csv.lines().count(), 15);
    }
}
