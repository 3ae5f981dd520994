use std::fmt::Write;

use super::{BoxClass, BoxReport, RegionError};
use crate::polysys::VarSpace;

/// Fixed leading columns; each parameter then contributes `<name>_lo,<name>_hi`.
pub const CSV_HEADER: &str = "index,r_hat,stderr,n,status,class,multistat";

pub fn export_csv(reports: &[BoxReport], space: &VarSpace) -> String {
    let mut out = String::from(CSV_HEADER);
    for name in space.k_names() {
        let _ = write!(out, ",{name}_lo,{name}_hi");
    }
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        match &r.est {
            Ok(e) => {
                let _ = write!(out, "{i},{},{},{},{},{},{}", e.value, e.stderr, e.n, e.status, r.class, r.multistat);
            }
            Err(_) => {
                let _ = write!(out, "{i},,,0,error,{},false", r.class);
            }
        }
        for s in r.bx.sides() {
            let _ = write!(out, ",{},{}", s.lo, s.hi);
        }
        out.push('\n');
    }
    out
}

fn breakpoints(reports: &[BoxReport], axis: usize) -> Vec<f64> {
    let mut v: Vec<f64> = reports
        .iter()
        .flat_map(|r| [r.bx.sides()[axis].lo, r.bx.sides()[axis].hi])
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

const WHITE: [f64; 3] = [255.0, 255.0, 255.0];
const YELLOW: [f64; 3] = [255.0, 255.0, 0.0];
const RED: [f64; 3] = [255.0, 0.0, 0.0];
const GRAY: [u8; 3] = [128, 128, 128];

fn lerp(a: [f64; 3], b: [f64; 3], s: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0);
    [0, 1, 2].map(|i| (a[i] + (b[i] - a[i]) * s).round() as u8)
}

/// White at `m_min`, yellow at 3 (or `m_max` if smaller), red at `m_max`
/// when it exceeds 3.
pub fn color(value: f64, m_min: f64, m_max: f64) -> [u8; 3] {
    let yellow_at = m_max.min(3.0).max(m_min);
    if value <= yellow_at || m_max <= yellow_at {
        let span = yellow_at - m_min;
        let s = if span > 0.0 { (value - m_min) / span } else { 1.0 };
        lerp(WHITE, YELLOW, s)
    } else {
        lerp(YELLOW, RED, (value - yellow_at) / (m_max - yellow_at))
    }
}

/// Binary P6 image over two axes: `x_axis` left to right, `y_axis` bottom
/// to top, one pixel per cell of the finest breakpoint grid. Every other
/// axis must be the same for all boxes.
pub fn export_ppm(
    reports: &[BoxReport],
    x_axis: usize,
    y_axis: usize,
    m_min: f64,
    m_max: f64,
) -> Result<Vec<u8>, RegionError> {
    let Some(first) = reports.first() else {
        return Ok(b"P6\n0 0\n255\n".to_vec());
    };
    let dim = first.bx.dim();
    if x_axis >= dim || y_axis >= dim || x_axis == y_axis {
        return Err(RegionError::AxisMismatch);
    }
    for r in reports {
        for a in (0..dim).filter(|&a| a != x_axis && a != y_axis) {
            if r.bx.sides()[a] != first.bx.sides()[a] {
                return Err(RegionError::AxisMismatch);
            }
        }
    }
    let xs = breakpoints(reports, x_axis);
    let ys = breakpoints(reports, y_axis);
    let w = xs.len() - 1;
    let h = ys.len() - 1;
    let mut pixels = vec![GRAY; w * h];
    let pos = |v: &[f64], x: f64| v.binary_search_by(|p| p.total_cmp(&x)).unwrap();
    for r in reports {
        let sx = r.bx.sides()[x_axis];
        let sy = r.bx.sides()[y_axis];
        let c = match (&r.est, r.class) {
            (Ok(e), c) if c != BoxClass::Failed => color(e.value, m_min, m_max),
            _ => GRAY,
        };
        for i in pos(&xs, sx.lo)..pos(&xs, sx.hi) {
            for j in pos(&ys, sy.lo)..pos(&ys, sy.hi) {
                pixels[(h - 1 - j) * w + i] = c;
            }
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for p in pixels {
        out.extend_from_slice(&p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_scale() {
        assert_eq!(color(1.0, 1.0, 3.0), [255, 255, 255]);
        assert_eq!(color(3.0, 1.0, 3.0), [255, 255, 0]);
        assert_eq!(color(2.0, 1.0, 3.0), [255, 255, 128]);
        assert_eq!(color(5.0, 1.0, 5.0), [255, 0, 0]);
        assert_eq!(color(4.0, 1.0, 5.0), [255, 128, 0]);
        assert_eq!(color(9.0, 1.0, 3.0), [255, 255, 0]);
    }

    #[test]
    fn empty_exports() {
        let space = VarSpace::new(vec!["t"], vec!["a", "b"]).unwrap();
        assert_eq!(export_csv(&[], &space), format!("{CSV_HEADER},a_lo,a_hi,b_lo,b_hi\n"));
        assert_eq!(export_ppm(&[], 0, 1, 1.0, 3.0).unwrap(), b"P6\n0 0\n255\n");
    }
}
