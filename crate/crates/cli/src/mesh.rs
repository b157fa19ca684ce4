//! Wavefront OBJ export of 2-dimensional charts.

use std::fmt::Write;

use thiserror::Error;
use warpsurf_core::hypersurface::{HypersurfaceError, ImmersionSpec};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh export needs a 2-dimensional chart in 3-space, or a 3-dimensional chart in 4-space with a dropped coordinate; got chart dimension {chart} in dimension {ambient}")]
    UnsupportedDimension { chart: usize, ambient: usize },
    #[error("cannot drop coordinate {index} of a {ambient}-dimensional point")]
    BadDrop { index: usize, ambient: usize },
    #[error("mesh grid needs at least 2x2 vertices, got {rows}x{cols}")]
    BadGrid { rows: usize, cols: usize },
    #[error(transparent)]
    Geometry(#[from] HypersurfaceError),
}

fn linspace(a: f64, b: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| a + (b - a) * i as f64 / (k - 1) as f64)
}

/// Samples the closed chart box on a `rows x cols` grid (rows along the first
/// chart variable), row-major vertices, each grid quad split into two triangles.
///
/// A 3-dimensional chart in 4-space is meshed as the slice through the
/// midpoint of its third variable, with coordinate `drop` removed.
pub fn export_mesh(spec: &ImmersionSpec, rows: usize, cols: usize, drop: Option<usize>) -> Result<String, MeshError> {
    let chart = spec.chart_dim();
    let ambient = spec.sig.dim();
    let keep: Vec<usize> = match (chart, ambient, drop) {
        (2, 3, None) => vec![0, 1, 2],
        (3, 4, Some(d)) if d < 4 => (0..4).filter(|&i| i != d).collect(),
        (3, 4, Some(index)) => return Err(MeshError::BadDrop { index, ambient }),
        _ => return Err(MeshError::UnsupportedDimension { chart, ambient }),
    };
    if rows < 2 || cols < 2 {
        return Err(MeshError::BadGrid { rows, cols });
    }
    let (t0, t1) = spec.domain[0];
    let (u0, u1) = spec.domain[1];
    let rest: Vec<f64> = spec.domain[2..].iter().map(|&(a, b)| 0.5 * (a + b)).collect();
    let mut out = String::new();
    writeln!(out, "# {rows}x{cols} grid").unwrap();
    for t in linspace(t0, t1, rows) {
        for u in linspace(u0, u1, cols) {
            let p: Vec<f64> = [t, u].into_iter().chain(rest.iter().copied()).collect();
            let x = spec.position(&p)?;
            out.push('v');
            for &i in &keep {
                write!(out, " {:.16e}", x[i]).unwrap();
            }
            out.push('\n');
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let a = r * cols + c + 1;
            let b = a + 1;
            let d = a + cols;
            let e = d + 1;
            writeln!(out, "f {a} {b} {e}").unwrap();
            writeln!(out, "f {a} {e} {d}").unwrap();
        }
    }
    Ok(out)
}
