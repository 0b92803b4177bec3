//! SVG of a projectivized spiral window in the chart z = 1.

use std::fmt::Write;

use spirallax::LiftedSpiral;

use crate::CliError;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

pub fn svg(ls: &LiftedSpiral) -> Result<String, CliError> {
    let n = ls.n() as i64;
    let pts: Vec<(i64, f64, f64)> = (ls.lo()..=ls.hi())
        .filter_map(|i| {
            let (x, y) = ls.get(i).ok()?.dehomogenize()?;
            (x.is_finite() && y.is_finite()).then_some((i, x, y))
        })
        .collect();
    if pts.len() < 2 {
        return Err(CliError::Validation(
            "fewer than two vertices in the affine chart".into(),
        ));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(_, x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::EPSILON);
    let k = (SIZE - 2.0 * MARGIN) / span;
    let map = |x: f64, y: f64| (MARGIN + (x - x0) * k, SIZE - MARGIN - (y - y0) * k);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let path: Vec<String> = pts
        .iter()
        .map(|&(_, x, y)| {
            let (u, v) = map(x, y);
            format!("{u:.3},{v:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
        path.join(" ")
    );
    for &(i, x, y) in &pts {
        let (u, v) = map(x, y);
        let (r, fill) = if (1..=n).contains(&i) {
            (4.0, "crimson")
        } else if i == n + 1 {
            (4.0, "royalblue")
        } else {
            (2.0, "gray")
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{u:.3}" cy="{v:.3}" r="{r}" fill="{fill}"><title>{i}</title></circle>"#
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
