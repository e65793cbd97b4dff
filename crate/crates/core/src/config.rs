//! Line-oriented `key = value` run configuration with dotted keys.
//!
//! ```text
//! # comments start with '#'
//! coherence.t2_other_us = 694
//! yield.2 = 1.1e-17
//! curve.2.phi0 = 2.0e17
//! charge.points = 1.3:86.2, 8.3:82.4, 35:50
//! ```

use std::fmt::Write;

use serde::Serialize;

use crate::coherence::{b_rate_from_khz, CoherenceParams};
use crate::conversion::ChargeStateCurve;
use crate::dataset::{Measured, SIGMA_532_CM2};
use crate::error::{Error, Result};
use crate::growth::GrowthLaw;
use crate::irradiation::ConversionCurve;
use crate::model::Model;
use crate::units::DIAMOND_CARBON_DENSITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Model,
    pub sigma_532: Measured,
    pub carbon_density_per_cm3: f64,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::default(),
            sigma_532: SIGMA_532_CM2,
            carbon_density_per_cm3: DIAMOND_CARBON_DENSITY,
            format: OutputFormat::Json,
        }
    }
}

#[derive(Default)]
struct PartialCurve {
    nv_max_frac: Option<f64>,
    phi0: Option<f64>,
    line: usize,
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            line,
            message: format!("`{key}` needs a finite number, got `{value}`"),
        })
}

fn bad(line: usize, e: Error) -> Error {
    Error::Config {
        line,
        message: e.to_string(),
    }
}

impl RunConfig {
    /// Applies the settings in `text` on top of `self`.
    pub fn apply(mut self, text: &str) -> Result<Self> {
        let mut curves: Vec<(f64, PartialCurve)> = Vec::new();
        let mut growth = (self.model.growth.coefficient_a, self.model.growth.exponent_b, 0usize);
        let mut coherence = (self.model.coherence, 0usize);
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = || number(line, key, value);
            match key {
                "growth.coefficient_a" => growth = (num()?, growth.1, line),
                "growth.exponent_b" => growth = (growth.0, num()?, line),
                "growth.asgrown_nv_ratio" => {
                    let r = num()?;
                    if !(r > 0.0 && r < 1.0) {
                        return Err(Error::Config {
                            line,
                            message: format!("growth.asgrown_nv_ratio must lie in (0, 1), got {r}"),
                        });
                    }
                    self.model.asgrown_ratio = r;
                }
                "coherence.b_rate_khz_per_ppm" => coherence = (CoherenceParams { b_rate: b_rate_from_khz(num()?), ..coherence.0 }, line),
                "coherence.t2_other_us" => coherence = (CoherenceParams { t2_other_s: num()? * 1e-6, ..coherence.0 }, line),
                "coherence.p1_fraction" => coherence = (CoherenceParams { p1_fraction: num()?, ..coherence.0 }, line),
                "absorption.sigma_532_cm2" => {
                    let v = num()?;
                    if !(v > 0.0) {
                        return Err(Error::Config {
                            line,
                            message: format!("absorption.sigma_532_cm2 must be positive, got {v}"),
                        });
                    }
                    self.sigma_532.value = v;
                }
                "absorption.sigma_532_uncertainty_cm2" => {
                    let v = num()?;
                    self.sigma_532.uncertainty =
                        Some(crate::state::check_non_negative("sigma_532_uncertainty", v).map_err(|e| bad(line, e))?);
                }
                "units.carbon_density_per_cm3" => {
                    let v = num()?;
                    if !(v > 0.0) {
                        return Err(Error::Config {
                            line,
                            message: format!("units.carbon_density_per_cm3 must be positive, got {v}"),
                        });
                    }
                    self.carbon_density_per_cm3 = v;
                }
                "rules.r_con_max_pct" => self.model.thresholds.r_con_max = percent(line, key, num()?)?,
                "rules.r_re_max_pct" => self.model.thresholds.r_re_max = percent(line, key, num()?)?,
                "brightness.minus" => self.model.brightness.minus = positive(line, key, num()?)?,
                "brightness.zero" => self.model.brightness.zero = positive(line, key, num()?)?,
                "charge.points" => {
                    let pts = value
                        .split(',')
                        .map(|pair| {
                            let (r, f) = pair.trim().split_once(':').ok_or_else(|| Error::Config {
                                line,
                                message: format!("charge point `{}` is not `r_re:frac`", pair.trim()),
                            })?;
                            Ok((number(line, key, r.trim())?, number(line, key, f.trim())?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    self.model.charge = ChargeStateCurve::from_points(&pts).map_err(|e| bad(line, e))?;
                }
                "output.format" => {
                    self.format = match value {
                        "json" => OutputFormat::Json,
                        "csv" => OutputFormat::Csv,
                        other => {
                            return Err(Error::Config {
                                line,
                                message: format!("output.format must be json or csv, got `{other}`"),
                            })
                        }
                    }
                }
                _ => {
                    if let Some(energy) = key.strip_prefix("yield.") {
                        let e = number(line, key, energy)?;
                        self.model.yields.insert(e, num()?).map_err(|err| bad(line, err))?;
                    } else if let Some(rest) = key.strip_prefix("curve.") {
                        let (energy, field) = rest.rsplit_once('.').ok_or_else(|| Error::Config {
                            line,
                            message: format!("unknown key `{key}`"),
                        })?;
                        let e = number(line, key, energy)?;
                        let slot = match curves.iter().position(|(x, _)| *x == e) {
                            Some(i) => &mut curves[i].1,
                            None => {
                                curves.push((e, PartialCurve::default()));
                                &mut curves.last_mut().unwrap().1
                            }
                        };
                        slot.line = line;
                        match field {
                            "nv_max_frac" => slot.nv_max_frac = Some(num()?),
                            "phi0" => slot.phi0 = Some(num()?),
                            _ => {
                                return Err(Error::Config {
                                    line,
                                    message: format!("unknown key `{key}`"),
                                })
                            }
                        }
                    } else {
                        return Err(Error::Config {
                            line,
                            message: format!("unknown key `{key}`"),
                        });
                    }
                }
            }
        }
        self.model.growth = GrowthLaw::new(growth.0, growth.1).map_err(|e| bad(growth.2, e))?;
        coherence.0.validate().map_err(|e| bad(coherence.1, e))?;
        self.model.coherence = coherence.0;
        for (energy, partial) in curves {
            let existing = self.model.curve_for(energy).ok().copied();
            let nv_max = partial.nv_max_frac.or(existing.map(|c| c.nv_max_frac));
            let phi0 = partial.phi0.or(existing.map(|c| c.phi0));
            let (Some(nv_max), Some(phi0)) = (nv_max, phi0) else {
                return Err(Error::Config {
                    line: partial.line,
                    message: format!("curve for {energy} MeV needs both nv_max_frac and phi0"),
                });
            };
            let curve = ConversionCurve::new(energy, nv_max, phi0).map_err(|e| bad(partial.line, e))?;
            self.model.set_curve(curve);
        }
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().apply(text)
    }

    /// Text that [`RunConfig::parse`] turns back into this configuration.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut out = String::new();
        let mut kv = |k: &str, v: f64| {
            let _ = writeln!(out, "{k} = {v:e}");
        };
        kv("growth.coefficient_a", m.growth.coefficient_a);
        kv("growth.exponent_b", m.growth.exponent_b);
        kv("growth.asgrown_nv_ratio", m.asgrown_ratio);
        kv(
            "coherence.b_rate_khz_per_ppm",
            m.coherence.b_rate / (2.0 * std::f64::consts::PI * 1e3),
        );
        kv("coherence.t2_other_us", m.coherence.t2_other_s * 1e6);
        kv("coherence.p1_fraction", m.coherence.p1_fraction);
        kv("absorption.sigma_532_cm2", self.sigma_532.value);
        if let Some(u) = self.sigma_532.uncertainty {
            kv("absorption.sigma_532_uncertainty_cm2", u);
        }
        kv("units.carbon_density_per_cm3", self.carbon_density_per_cm3);
        kv("rules.r_con_max_pct", m.thresholds.r_con_max * 100.0);
        kv("rules.r_re_max_pct", m.thresholds.r_re_max * 100.0);
        kv("brightness.minus", m.brightness.minus);
        kv("brightness.zero", m.brightness.zero);
        for &(e, k) in m.yields.entries() {
            kv(&format!("yield.{e}"), k);
        }
        for c in &m.curves {
            kv(&format!("curve.{}.nv_max_frac", c.energy_mev), c.nv_max_frac);
            kv(&format!("curve.{}.phi0", c.energy_mev), c.phi0);
        }
        let pts: Vec<String> = m.charge.points().iter().map(|(r, f)| format!("{r:e}:{f:e}")).collect();
        let _ = writeln!(out, "charge.points = {}", pts.join(", "));
        let _ = writeln!(
            out,
            "output.format = {}",
            match self.format {
                OutputFormat::Json => "json",
                OutputFormat::Csv => "csv",
            }
        );
        out
    }
}

fn percent(line: usize, key: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v < 100.0) {
        return Err(Error::Config {
            line,
            message: format!("`{key}` must lie in (0, 100), got {v}"),
        });
    }
    Ok(v / 100.0)
}

fn positive(line: usize, key: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Config {
            line,
            message: format!("`{key}` must be positive, got {v}"),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides() {
        let c = RunConfig::parse(
            "coherence.t2_other_us = 500\nyield.3 = 1.5e-17\ncurve.3.nv_max_frac = 0.2\ncurve.3.phi0 = 1e17 # new\n",
        )
        .unwrap();
        assert_eq!(c.model.coherence.t2_other_s, 500e-6);
        assert_eq!(c.model.yields.yield_for(3.0).unwrap(), 1.5e-17);
        assert_eq!(c.model.curve_for(3.0).unwrap().phi0, 1e17);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(RunConfig::parse("a = 1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(
            RunConfig::parse("\ncoherence.p1_fraction = 2"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("curve.3.phi0 = 1e17"), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::parse("no equals"), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::parse("growth.exponent_b = 1.5"), Err(Error::Config { .. })));
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back.model.curves, c.model.curves);
        assert_eq!(back.model.charge, c.model.charge);
        assert_eq!(back.model.yields, c.model.yields);
        assert!((back.model.coherence.b_rate / c.model.coherence.b_rate - 1.0).abs() < 1e-15);
        assert_eq!(back.sigma_532, c.sigma_532);
    }
}
