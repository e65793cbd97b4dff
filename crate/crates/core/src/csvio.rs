//! Two-column numeric CSV reading shared by the calibration and spectrum
//! inputs.

use std::io::Read;

use crate::error::{Error, Result};

/// Numeric rows of a two-column CSV with 1-based line numbers.
///
/// A first line that does not parse as numbers is a header; when `expected`
/// names are given it must match them.
pub(crate) fn read_numeric_rows<R: Read>(
    reader: R,
    expected: Option<[&str; 2]>,
) -> Result<Vec<(usize, f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(index + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) => {
                if !(x.is_finite() && y.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        message: "non-finite value".into(),
                    });
                }
                rows.push((line, x, y));
            }
            _ if rows.is_empty() && index == 0 => {
                if let Some(names) = expected {
                    if !record[0].eq_ignore_ascii_case(names[0])
                        || !record[1].eq_ignore_ascii_case(names[1])
                    {
                        return Err(Error::Parse {
                            line,
                            message: format!(
                                "expected header `{},{}`, found `{},{}`",
                                names[0], names[1], &record[0], &record[1]
                            ),
                        });
                    }
                }
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("non-numeric row `{},{}`", &record[0], &record[1]),
                })
            }
        }
    }
    Ok(rows)
}

pub(crate) fn read_pairs<R: Read>(reader: R, expected: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    Ok(read_numeric_rows(reader, Some(expected))?
        .into_iter()
        .map(|(_, x, y)| (x, y))
        .collect())
}

/// Reads the header line of a two-column CSV, if it has one.
pub fn header_of(text: &str) -> Option<(String, String)> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))?;
    let mut cols = first.split(',').map(|c| c.trim().to_ascii_lowercase());
    let (a, b) = (cols.next()?, cols.next()?);
    (a.parse::<f64>().is_err()).then_some((a, b))
}
