//! CSV and minimal-SVG emission. All formatting is locale-independent:
//! '.' decimal separator, '\n' line endings, shortest-round-trip floats.

use std::fmt::Write as _;

use crate::algebra::Point;
use crate::integral::{Backend, IntegralResult};
use crate::supmeasure::Atom;

/// `rep,y_1,...,y_d,f_value`
pub fn sample_csv(rows: &[(usize, Point, f64)], d: usize) -> String {
    let mut out = String::from("rep");
    for j in 1..=d {
        let _ = write!(out, ",y_{j}");
    }
    out.push_str(",f_value\n");
    for (rep, y, f) in rows {
        let _ = write!(out, "{rep}");
        for v in &y.0 {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{f}");
    }
    out
}

/// `rep,value_1,...,value_d,f_value,atom_index,atoms_used,mismatch_prob`
/// plus a trailing `lalpha_gap` column for the cell backend.
pub fn integral_csv(rows: &[(usize, IntegralResult)], d: usize, gap: Option<f64>) -> String {
    let mut out = String::from("rep");
    for j in 1..=d {
        let _ = write!(out, ",value_{j}");
    }
    out.push_str(",f_value,atom_index,atoms_used,mismatch_prob");
    if gap.is_some() {
        out.push_str(",lalpha_gap");
    }
    out.push('\n');
    for (rep, r) in rows {
        let _ = write!(out, "{rep}");
        for v in &r.value.0 {
            let _ = write!(out, ",{v}");
        }
        let atom = r
            .attaining_atom
            .map_or(String::new(), |a| a.index.to_string());
        let _ = write!(
            out,
            ",{},{},{},{}",
            r.f_value, atom, r.atoms_used, r.mismatch_prob
        );
        if let Some(g) = gap {
            let _ = write!(out, ",{g}");
        }
        out.push('\n');
    }
    out
}

/// `rep,t,x_1,...,x_d,f_value`
pub fn process_csv(rows: &[(usize, f64, Point, f64)], d: usize) -> String {
    let mut out = String::from("rep,t");
    for j in 1..=d {
        let _ = write!(out, ",x_{j}");
    }
    out.push_str(",f_value\n");
    for (rep, t, x, f) in rows {
        let _ = write!(out, "{rep},{t}");
        for v in &x.0 {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{f}");
    }
    out
}

/// `k,s,u,theta_1,...,theta_d` — audit dump of one series realization.
pub fn atoms_csv(atoms: &[Atom], d: usize) -> String {
    let mut out = String::from("k,s,u");
    for j in 1..=d {
        let _ = write!(out, ",theta_{j}");
    }
    out.push('\n');
    for (k, a) in atoms.iter().enumerate() {
        let _ = write!(out, "{k},{},{}", a.s, a.u);
        for v in &a.theta.0 {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn backend_label(backend: Backend) -> &'static str {
    backend.as_str()
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn svg_header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n\
         <rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    )
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let mut path = String::new();
    for (x, y) in points {
        let _ = write!(path, "{x:.2},{y:.2} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        path.trim_end()
    )
}

/// Empirical CDF of `samples` (blue) overlaid on the reference CDF (red),
/// plotted up to the 99th percentile.
pub fn cdf_overlay_svg(samples: &[f64], cdf: impl Fn(f64) -> f64) -> String {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let xmax = sorted[(n as f64 * 0.99) as usize].max(1e-12);
    let to_px = |x: f64, p: f64| {
        (
            MARGIN + (x / xmax).min(1.0) * (SVG_W - 2.0 * MARGIN),
            SVG_H - MARGIN - p * (SVG_H - 2.0 * MARGIN),
        )
    };
    let empirical: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .step_by((n / 512).max(1))
        .map(|(i, &x)| to_px(x, (i + 1) as f64 / n as f64))
        .collect();
    let reference: Vec<(f64, f64)> = (0..=256)
        .map(|i| {
            let x = xmax * i as f64 / 256.0;
            to_px(x, cdf(x))
        })
        .collect();
    let mut out = svg_header();
    out.push_str(&polyline(&empirical, "steelblue"));
    out.push_str(&polyline(&reference, "crimson"));
    out.push_str("</svg>\n");
    out
}

/// Step plot of `f(X(t))` for a handful of process paths.
pub fn process_steps_svg(paths: &[Vec<(f64, f64)>]) -> String {
    let tmax = paths
        .iter()
        .flat_map(|p| p.iter().map(|(t, _)| *t))
        .fold(1e-12_f64, f64::max);
    let ymax = paths
        .iter()
        .flat_map(|p| p.iter().map(|(_, y)| *y))
        .fold(1e-12_f64, f64::max);
    let to_px = |t: f64, y: f64| {
        (
            MARGIN + t / tmax * (SVG_W - 2.0 * MARGIN),
            SVG_H - MARGIN - (y / ymax).min(1.0) * (SVG_H - 2.0 * MARGIN),
        )
    };
    let colors = ["steelblue", "crimson", "seagreen", "darkorange", "purple"];
    let mut out = svg_header();
    for (i, path) in paths.iter().enumerate() {
        let mut pts = Vec::new();
        let mut prev_y: Option<f64> = None;
        for &(t, y) in path {
            if let Some(py) = prev_y {
                pts.push(to_px(t, py)); // horizontal step
            }
            pts.push(to_px(t, y));
            prev_y = Some(y);
        }
        out.push_str(&polyline(&pts, colors[i % colors.len()]));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integral::AtomRef;

    #[test]
    fn sample_csv_header_and_rows() {
        let rows = vec![(0, Point(vec![1.0, 2.0]), 2.5)];
        let csv = sample_csv(&rows, 2);
        assert!(csv.starts_with("rep,y_1,y_2,f_value\n"));
        assert!(csv.contains("0,1,2,2.5\n"));
    }

    #[test]
    fn integral_csv_columns() {
        let r = IntegralResult {
            value: Point(vec![3.0]),
            f_value: 3.0,
            attaining_atom: Some(AtomRef {
                index: 4,
                location: 0.5,
                magnitude: 1.25,
            }),
            mismatch_prob: 0.01,
            atoms_used: 7,
            backend: Backend::Series,
        };
        let csv = integral_csv(&[(1, r.clone())], 1, None);
        assert!(csv.starts_with("rep,value_1,f_value,atom_index,atoms_used,mismatch_prob\n"));
        assert!(csv.contains("1,3,3,4,7,0.01\n"));
        let with_gap = integral_csv(&[(1, r)], 1, Some(0.125));
        assert!(with_gap.contains("mismatch_prob,lalpha_gap\n"));
        assert!(with_gap.contains("1,3,3,4,7,0.01,0.125\n"));
    }

    #[test]
    fn process_and_atom_csv_headers() {
        let csv = process_csv(&[(0, 1.0, Point(vec![0.5, 0.5]), 0.7)], 2);
        assert!(csv.starts_with("rep,t,x_1,x_2,f_value\n"));
        let atoms = vec![crate::supmeasure::Atom {
            s: 0.3,
            u: 2.0,
            gamma: 0.5,
            theta: Point(vec![1.0, 0.0]),
        }];
        let csv = atoms_csv(&atoms, 2);
        assert!(csv.starts_with("k,s,u,theta_1,theta_2\n"));
        assert!(csv.contains("0,0.3,2,1,0\n"));
    }

    #[test]
    fn svg_outputs_are_well_formed() {
        let samples: Vec<f64> = (1..=1000).map(|i| i as f64 / 100.0).collect();
        let svg = cdf_overlay_svg(&samples, |x| (x / 10.0).min(1.0));
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        let svg = process_steps_svg(&[vec![(1.0, 0.5), (2.0, 0.9)]]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
