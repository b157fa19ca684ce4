//! Extrinsic and intrinsic invariants of hypersurface charts in `E^{n+1}_s`.

mod geometry;
mod immersion;
pub mod jetlinalg;

use rand::{Rng, SeedableRng};
use thiserror::Error;

pub use geometry::{
    christoffel, christoffel_from_metric_jets, frame_jets, codazzi_residual, gauss_residual, induced_metric, induced_metric_jets,
    riemann_intrinsic, second_fundamental_form, sectional_curvature, shape_operator,
    tsinghua_residual, unit_normal, FrameData, IdentityResiduals, MetricCurvature, PointGeometry,
    NULL_TOL,
};
pub use immersion::{builtin, ChartMap, ComponentMap, ImmersionSpec, BUILTINS};

use crate::exec::Exec;
use crate::pseudolinalg::LinalgError;
use crate::scalarjet::{JetError, ParseError, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypersurfaceError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("induced metric is degenerate (det = {det:e})")]
    DegenerateMetric { det: f64 },
    #[error("normal is null (<N,N> = {norm:e})")]
    NullNormal { norm: f64 },
    #[error("tangent plane is degenerate")]
    DegeneratePlane,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown builtin immersion `{0}`")]
    UnknownBuiltin(String),
    #[error("{value} lies outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
}

/// Default absolute shrink applied to each side of a domain box before sampling.
pub const DEFAULT_MARGIN: f64 = 1e-2;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += (k % b) as f64 * f;
        k /= b;
        f *= inv;
    }
    r
}

/// `count` Halton points in the box shrunk by `margin`, with a seeded random
/// Cranley-Patterson shift. Deterministic in `seed`.
pub fn sample_points(domain: &[(f64, f64)], count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    assert!(domain.len() <= PRIMES.len(), "at most 16 chart dimensions");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = domain.iter().map(|_| rng.random::<f64>()).collect();
    let boxes: Vec<(f64, f64)> = domain
        .iter()
        .map(|&(a, b)| {
            let m = margin.min(0.25 * (b - a));
            (a + m, b - m)
        })
        .collect();
    (1..=count as u64)
        .map(|k| {
            boxes
                .iter()
                .enumerate()
                .map(|(d, &(a, b))| {
                    let x = (radical_inverse(k, PRIMES[d]) + shift[d]).fract();
                    a + (b - a) * x
                })
                .collect()
        })
        .collect()
}

/// Identity residuals at every point, in input order.
pub fn identity_suite(
    spec: &ImmersionSpec,
    points: &[Vec<f64>],
    exec: Exec,
) -> Result<Vec<IdentityResiduals>, HypersurfaceError> {
    exec.try_map(points, |p| Ok(PointGeometry::compute(spec, p)?.identities()))
}

/// Frame data at every point, in input order.
pub fn frames(spec: &ImmersionSpec, points: &[Vec<f64>], exec: Exec) -> Result<Vec<FrameData>, HypersurfaceError> {
    exec.try_map(points, |p| FrameData::compute(spec, p))
}

#[cfg(test)]
mod tests;
