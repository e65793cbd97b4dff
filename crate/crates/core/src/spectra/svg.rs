//! Minimal SVG rendering of a spectrum with its band windows shaded.

use std::fmt::Write;

use super::{BandReport, Spectrum};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const PAD: f64 = 40.0;

pub fn render(spectrum: &Spectrum, bands: Option<&BandReport>) -> String {
    let (x0, x1) = spectrum.range();
    let (y0, y1) = spectrum
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let y_span = if y1 > y0 { y1 - y0 } else { 1.0 };
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let py = |y: f64| HEIGHT - PAD - (y - y0) / y_span * (HEIGHT - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(report) = bands {
        for b in report.bands.iter().filter(|b| b.covered) {
            let (lo, hi) = b.window_nm;
            let fill = if b.present { "#f4a582" } else { "#e0e0e0" };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{PAD}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="0.5"><title>{}</title></rect>"#,
                px(lo.max(x0)),
                px(hi.min(x1)) - px(lo.max(x0)),
                HEIGHT - 2.0 * PAD,
                b.name
            );
        }
    }
    let points: Vec<String> = spectrum
        .wavelengths_nm()
        .iter()
        .zip(spectrum.values())
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="12">{x0} nm</text><text x="{}" y="{}" font-size="12" text-anchor="end">{x1} nm</text>"#,
        HEIGHT - 10.0,
        WIDTH - PAD,
        HEIGHT - 10.0
    );
    out.push_str("</svg>\n");
    out
}
