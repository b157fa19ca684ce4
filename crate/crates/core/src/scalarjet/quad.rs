//! Adaptive Simpson quadrature.

use super::JetError;
use thiserror::Error;

/// Absolute tolerance for every antiderivative in the crate.
pub const QUAD_TOL: f64 = 1e-10;
/// Recursion depth cap (at most 2^20 subintervals).
pub const MAX_DEPTH: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integrand failed: {0}")]
    Integrand(#[from] JetError),
    #[error("adaptive Simpson did not converge on [{a}, {b}]")]
    NotConverged { a: f64, b: f64 },
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
}

struct Simpson<'f, F> {
    f: &'f F,
}

impl<F> Simpson<'_, F>
where
    F: Fn(f64) -> Result<f64, JetError>,
{
    fn eval(&self, x: f64) -> Result<f64, QuadError> {
        let y = (self.f)(x)?;
        if !y.is_finite() {
            return Err(QuadError::NonFinite(x));
        }
        Ok(y)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(QuadError::NotConverged { a, b });
        }
        Ok(self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}

/// `int_a^b f` to absolute tolerance `tol`. Reversed limits flip the sign.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError>
where
    F: Fn(f64) -> Result<f64, JetError>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let s = Simpson { f: &f };
    let fa = s.eval(a)?;
    let fb = s.eval(b)?;
    let m = 0.5 * (a + b);
    let fm = s.eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    s.recurse(a, b, fa, fm, fb, whole, tol, 0)
}

/// Tabulated running integral `t -> int_{t0}^t f` on a fixed node grid.
///
/// Evaluations integrate only from the nearest node, so repeated queries are cheap.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl CumulativeIntegral {
    pub fn build<F>(f: &F, t0: f64, t1: f64, segments: usize) -> Result<Self, QuadError>
    where
        F: Fn(f64) -> Result<f64, JetError>,
    {
        let segments = segments.max(1);
        let nodes: Vec<f64> = (0..=segments)
            .map(|k| t0 + (t1 - t0) * k as f64 / segments as f64)
            .collect();
        let mut values = Vec::with_capacity(nodes.len());
        values.push(0.0);
        let per = QUAD_TOL / segments as f64;
        for w in nodes.windows(2) {
            let last = *values.last().unwrap();
            values.push(last + adaptive_simpson(f, w[0], w[1], per)?);
        }
        Ok(Self { nodes, values })
    }

    pub fn anchor(&self) -> f64 {
        self.nodes[0]
    }

    pub fn eval<F>(&self, f: &F, t: f64) -> Result<f64, QuadError>
    where
        F: Fn(f64) -> Result<f64, JetError>,
    {
        let k = match self
            .nodes
            .binary_search_by(|x| x.total_cmp(&t))
        {
            Ok(k) => return Ok(self.values[k]),
            Err(0) => 0,
            Err(k) if k >= self.nodes.len() => self.nodes.len() - 1,
            Err(k) => {
                if t - self.nodes[k - 1] <= self.nodes[k] - t {
                    k - 1
                } else {
                    k
                }
            }
        };
        Ok(self.values[k] + adaptive_simpson(f, self.nodes[k], t, QUAD_TOL)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|x| Ok(x * x * x), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrands() {
        let v = adaptive_simpson(|x: f64| Ok(x.sin()), 0.0, std::f64::consts::PI, QUAD_TOL).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = adaptive_simpson(|x: f64| Ok(x.exp()), 1.0, 0.0, QUAD_TOL).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn failures_are_reported() {
        assert!(matches!(
            adaptive_simpson(|x: f64| Ok(1.0 / x), 0.0, 1.0, QUAD_TOL),
            Err(QuadError::NonFinite(_))
        ));
        assert!(matches!(
            adaptive_simpson(|x: f64| Ok(1.0 / x.sqrt()), 1e-300, 1.0, 1e-14),
            Err(QuadError::NotConverged { .. })
        ));
        assert!(matches!(
            adaptive_simpson(|_| Err(JetError::DivisionByZero), 0.0, 1.0, QUAD_TOL),
            Err(QuadError::Integrand(_))
        ));
    }

    #[test]
    fn cumulative_matches_direct() {
        let f = |x: f64| Ok(x.cosh());
        let c = CumulativeIntegral::build(&f, 0.5, 3.0, 16).unwrap();
        for &t in &[0.5, 0.51, 1.37, 2.999, 3.0, 3.2, 0.2] {
            let v = c.eval(&f, t).unwrap();
            assert!((v - (t.sinh() - 0.5f64.sinh())).abs() < 1e-9, "t={t}");
        }
    }
}
