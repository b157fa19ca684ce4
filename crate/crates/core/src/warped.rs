//! Warped products `I x_f M(c)` over a one-dimensional base.
//!
//! Conventions: `E_1 = d/dt` with `<E_1, E_1> = 1`; vertical vectors are given by
//! their fiber components, so `<V, W> = f^2 g(V, W)` with `g` the fiber metric.
//! In the connection, fiber vectors are lifts of constant-coefficient fields in
//! a fiber chart and are normalized in the fiber metric `g`, giving
//! `nor(D_V W) = -f f' g(V, W) E_1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypersurface::jetlinalg::JetMatrix;
use crate::hypersurface::{
    christoffel_from_metric_jets, induced_metric, induced_metric_jets, HypersurfaceError, ImmersionSpec, MetricCurvature,
};
use crate::pseudolinalg::{eig_spectrum, Signature};
use crate::scalarjet::{Jet, JetError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error("t = {t} lies outside [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("warping function is not positive at t = {t} (f = {value})")]
    NonPositiveWarp { t: f64, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Geometry(#[from] HypersurfaceError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarpedSpec {
    pub interval: (f64, f64),
    pub f: ScalarField,
    /// Sectional curvature of the fiber.
    pub c: f64,
    pub fiber_dim: usize,
    /// Index of the fiber metric.
    #[serde(default)]
    pub fiber_signature: usize,
}

/// `a E_1 + V`, with `V` given by fiber components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedVector {
    pub h: f64,
    pub v: Vec<f64>,
}

impl TaggedVector {
    pub fn horizontal(h: f64, fiber_dim: usize) -> Self {
        Self {
            h,
            v: vec![0.0; fiber_dim],
        }
    }

    pub fn vertical(v: Vec<f64>) -> Self {
        Self { h: 0.0, v }
    }

    /// Coordinates `(h, v_1, ..., v_k)`.
    pub fn to_coords(&self) -> Vec<f64> {
        std::iter::once(self.h).chain(self.v.iter().copied()).collect()
    }

    pub fn from_coords(x: &[f64]) -> Self {
        Self {
            h: x[0],
            v: x[1..].to_vec(),
        }
    }
}

fn g_of(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += g[(i, j)] * a[i] * b[j];
        }
    }
    s
}

fn axpy(out: &mut [f64], s: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += s * xi;
    }
}

/// Grid used to check positivity of `f`.
const POSITIVITY_GRID: usize = 64;

impl WarpedSpec {
    pub fn new(f: ScalarField, c: f64, interval: (f64, f64), fiber_dim: usize, fiber_signature: usize) -> Result<Self, WarpedError> {
        let spec = Self {
            interval,
            f,
            c,
            fiber_dim,
            fiber_signature,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), WarpedError> {
        let (a, b) = self.interval;
        if !(a < b) {
            return Err(WarpedError::Dimension(format!("empty interval [{a}, {b}]")));
        }
        if self.fiber_dim == 0 || self.fiber_signature > self.fiber_dim {
            return Err(WarpedError::Dimension(format!(
                "fiber dimension {} with index {}",
                self.fiber_dim, self.fiber_signature
            )));
        }
        for k in 0..=POSITIVITY_GRID {
            let t = a + (b - a) * k as f64 / POSITIVITY_GRID as f64;
            let v = self.f.eval(&[t])?;
            if !(v > 0.0) {
                return Err(WarpedError::NonPositiveWarp { t, value: v });
            }
        }
        Ok(())
    }

    /// Dimension of the warped product.
    pub fn n(&self) -> usize {
        self.fiber_dim + 1
    }

    pub fn fiber_sig(&self) -> Signature {
        Signature::new(self.fiber_dim, self.fiber_signature).expect("validated fiber signature")
    }

    fn check_t(&self, t: f64) -> Result<(), WarpedError> {
        let (lo, hi) = self.interval;
        let slack = 1e-12 * (hi - lo);
        if t < lo - slack || t > hi + slack || t.is_nan() {
            return Err(WarpedError::OutOfDomain { t, lo, hi });
        }
        Ok(())
    }

    /// `(f, f', f'')` at `t`.
    pub fn derivs(&self, t: f64) -> Result<[f64; 3], WarpedError> {
        self.check_t(t)?;
        let j = self.f.eval_jet(&[t], 2)?;
        if !(j.value() > 0.0) {
            return Err(WarpedError::NonPositiveWarp { t, value: j.value() });
        }
        Ok([j.value(), j.partial(&[0]), j.partial(&[0, 0])])
    }
}

/// `diag(1, f(t)^2 g)`.
pub fn warped_metric(spec: &WarpedSpec, t: f64, fiber_g: &DMatrix<f64>) -> Result<DMatrix<f64>, WarpedError> {
    let [f, _, _] = spec.derivs(t)?;
    let k = fiber_g.nrows();
    let mut g = DMatrix::zeros(k + 1, k + 1);
    g[(0, 0)] = 1.0;
    g.view_mut((1, 1), (k, k)).copy_from(&(fiber_g * (f * f)));
    Ok(g)
}

/// Curvature of the fiber space form: `R(U, V) W = c (g(V, W) U - g(U, W) V)`.
pub fn fiber_space_form(c: f64, u: &[f64], v: &[f64], w: &[f64], fiber_g: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    axpy(&mut out, c * g_of(fiber_g, v, w), u);
    axpy(&mut out, -c * g_of(fiber_g, u, w), v);
    out
}

fn check_dims(fiber_g: &DMatrix<f64>, vs: &[&TaggedVector]) -> Result<(), WarpedError> {
    let k = fiber_g.nrows();
    if fiber_g.ncols() != k || vs.iter().any(|v| v.v.len() != k) {
        return Err(WarpedError::Dimension(format!("fiber vectors must have {k} components")));
    }
    Ok(())
}

/// `R(A, B) C` of the warped product, assembled from
/// `R(E_1, V) E_1 = (f''/f) V`, `R(E_1, V) W = -<V, W> (f''/f) E_1`,
/// `R(V, W) E_1 = 0` and `R(V, W) U = (c - f'^2)(g(W, U) V - g(V, U) W)`.
pub fn warped_curvature(
    spec: &WarpedSpec,
    t: f64,
    fiber_g: &DMatrix<f64>,
    a: &TaggedVector,
    b: &TaggedVector,
    c: &TaggedVector,
) -> Result<TaggedVector, WarpedError> {
    check_dims(fiber_g, &[a, b, c])?;
    let [f, fp, fpp] = spec.derivs(t)?;
    let k = fpp / f;
    let mut out = TaggedVector::horizontal(0.0, fiber_g.nrows());
    // R(E_1, b_v) c, weighted by a_h
    if a.h != 0.0 {
        axpy(&mut out.v, a.h * c.h * k, &b.v);
        out.h -= a.h * f * f * g_of(fiber_g, &b.v, &c.v) * k;
    }
    // R(a_v, E_1) c = -R(E_1, a_v) c, weighted by b_h
    if b.h != 0.0 {
        axpy(&mut out.v, -b.h * c.h * k, &a.v);
        out.h += b.h * f * f * g_of(fiber_g, &a.v, &c.v) * k;
    }
    // R(a_v, b_v) c_v: the fiber term plus the -f'^2 correction
    let fib = fiber_space_form(spec.c - fp * fp, &a.v, &b.v, &c.v, fiber_g);
    axpy(&mut out.v, 1.0, &fib);
    Ok(out)
}

/// Fiber metric and Christoffel symbols at a fiber chart point.
#[derive(Debug, Clone)]
pub struct FiberFrame {
    pub g: DMatrix<f64>,
    /// `gamma[k][i][j]`; empty for a flat chart with constant coefficients.
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl FiberFrame {
    /// Constant fiber metric (vanishing Christoffel symbols).
    pub fn constant(g: DMatrix<f64>) -> Self {
        Self { g, gamma: vec![] }
    }

    /// The conformal chart `g = 4 eta / (1 + c <x, x>_eta)^2` of the space form of curvature `c`.
    pub fn space_form(c: f64, sig: Signature, x: &[f64]) -> Result<Self, WarpedError> {
        let m = space_form_metric_jets(c, sig, x, 1)?;
        Ok(Self {
            g: DMatrix::from_fn(x.len(), x.len(), |i, j| m[i][j].value()),
            gamma: christoffel_from_metric_jets(&m)?,
        })
    }
}

/// `D_A B` for lifts of constant-coefficient fields: the four clauses
/// `D_{E_1} E_1 = 0`, `D_{E_1} V = D_V E_1 = (f'/f) V`,
/// `nor(D_V W) = -f f' g(V, W) E_1` and `tan(D_V W)` = lift of the fiber connection.
pub fn warped_connection(
    spec: &WarpedSpec,
    t: f64,
    fiber: &FiberFrame,
    a: &TaggedVector,
    b: &TaggedVector,
) -> Result<TaggedVector, WarpedError> {
    check_dims(&fiber.g, &[a, b])?;
    let [f, fp, _] = spec.derivs(t)?;
    let n = fiber.g.nrows();
    let mut out = TaggedVector::horizontal(0.0, n);
    axpy(&mut out.v, a.h * fp / f, &b.v);
    axpy(&mut out.v, b.h * fp / f, &a.v);
    out.h = -f * fp * g_of(&fiber.g, &a.v, &b.v);
    if !fiber.gamma.is_empty() {
        for (k, o) in out.v.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    *o += fiber.gamma[k][i][j] * a.v[i] * b.v[j];
                }
            }
        }
    }
    Ok(out)
}

/// `(K_mixed, K_fiber) = (-f''/f, (c - f'^2)/f^2)`.
pub fn warped_sectional(spec: &WarpedSpec, t: f64) -> Result<(f64, f64), WarpedError> {
    let [f, fp, fpp] = spec.derivs(t)?;
    Ok((-fpp / f, (spec.c - fp * fp) / (f * f)))
}

/// Jets of `4 eta / (1 + c <x, x>_eta)^2` at `x`.
pub fn space_form_metric_jets(c: f64, sig: Signature, x: &[f64], order: usize) -> Result<JetMatrix, WarpedError> {
    if sig.dim() != x.len() {
        return Err(WarpedError::Dimension(format!("fiber point has {} coordinates", x.len())));
    }
    let vars = Jet::variables(x, order)?;
    Ok(conformal_block(c, sig, &vars, None)?)
}

fn conformal_block(c: f64, sig: Signature, x: &[Jet], warp: Option<&Jet>) -> Result<JetMatrix, JetError> {
    let k = x.len();
    let zero = x[0].zeros_like();
    let mut q = zero.clone();
    for (i, xi) in x.iter().enumerate() {
        q = q + (xi * xi).scale(sig.eps(i));
    }
    let sigma = q.scale(c).add_scalar(1.0);
    let mut conf = (&sigma * &sigma).recip()?.scale(4.0);
    if let Some(f) = warp {
        conf = &conf * &(f * f);
    }
    Ok((0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { conf.scale(sig.eps(i)) } else { zero.clone() })
                .collect()
        })
        .collect())
}

/// The warped product written as an explicit chart metric `dt^2 + f(t)^2 g(x)`,
/// with `g` the conformal space-form metric. Point is `(t, x_1, ..., x_k)`.
pub fn chart_metric_jets(spec: &WarpedSpec, point: &[f64], order: usize) -> Result<JetMatrix, WarpedError> {
    let k = spec.fiber_dim;
    if point.len() != k + 1 {
        return Err(WarpedError::Dimension(format!("chart point has {} coordinates", point.len())));
    }
    spec.check_t(point[0])?;
    let vars = Jet::variables(point, order)?;
    let f = spec.f.eval_with(&vars[..1])?;
    let block = conformal_block(spec.c, spec.fiber_sig(), &vars[1..], Some(&f))?;
    let zero = vars[0].zeros_like();
    let mut g = vec![vec![zero.clone(); k + 1]; k + 1];
    g[0][0] = zero.add_scalar(1.0);
    for i in 0..k {
        for j in 0..k {
            g[i + 1][j + 1] = block[i][j].clone();
        }
    }
    Ok(g)
}

/// Result of testing an induced metric for the form `dt^2 + f(t)^2 g`.
#[derive(Debug, Clone, Serialize)]
pub struct WarpedFit {
    pub t0: f64,
    /// `(t, f(t))` with `f(t0) = 1`, sorted by `t`.
    pub samples: Vec<(f64, f64)>,
    /// Fiber curvature in the same gauge; not observable for a one-dimensional fiber.
    pub c: Option<f64>,
    pub residual: f64,
    pub fiber_dim: usize,
    pub fiber_signature: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOutcome {
    /// `None` when `residual` exceeds the tolerance.
    pub fit: Option<WarpedFit>,
    pub residual: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Number of fiber points used to estimate `c`.
const CURVATURE_SAMPLES: usize = 8;

/// Tests whether the induced metric of `imm` (chart `(t, u_1, ...)`) is warped:
/// `G_tt = 1`, `G_tu = 0` and `G_uu(t, u) = f(t)^2 G_uu(t0, u)` with `t0` the
/// smallest sampled `t`. The fiber curvature is the intrinsic sectional curvature
/// of `G_uu(t0, .)`.
pub fn warped_fit(imm: &ImmersionSpec, samples: &[Vec<f64>], tol: f64) -> Result<FitOutcome, WarpedError> {
    let n = imm.chart_dim();
    if n < 2 || samples.is_empty() {
        return Err(WarpedError::Dimension("warped_fit needs n >= 2 and samples".into()));
    }
    let k = n - 1;
    let t0 = samples.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let fiber_block = |g: &DMatrix<f64>| g.view((1, 1), (k, k)).into_owned();
    let mut residual = 0.0f64;
    let mut fitted = Vec::with_capacity(samples.len());
    let ratio = |p: &[f64]| -> Result<(f64, f64, DMatrix<f64>), WarpedError> {
        let g = induced_metric(imm, p)?;
        let mut base = p.to_vec();
        base[0] = t0;
        let g0 = fiber_block(&induced_metric(imm, &base)?);
        let gf = fiber_block(&g);
        let f2 = gf.dot(&g0) / g0.dot(&g0);
        let fit = (&gf - &g0 * f2).abs().max() / max_abs(&gf).max(f64::MIN_POSITIVE);
        Ok((f2, fit, g))
    };
    for (i, p) in samples.iter().enumerate() {
        let (f2, fit, g) = ratio(p)?;
        let scale = max_abs(&g).max(1.0);
        residual = residual.max((g[(0, 0)] - 1.0).abs() / scale);
        for j in 1..n {
            residual = residual.max(g[(0, j)].abs() / scale);
        }
        residual = residual.max(fit);
        let mut other = samples[(i + 1) % samples.len()].clone();
        other[0] = p[0];
        let (f2b, _, _) = ratio(&other)?;
        residual = residual.max((f2 - f2b).abs() / f2.abs().max(f64::MIN_POSITIVE));
        if !(f2 > 0.0) {
            residual = f64::INFINITY;
        }
        fitted.push((p[0], f2.max(0.0).sqrt()));
    }
    fitted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let base0: Vec<f64> = {
        let mut b = samples[0].clone();
        b[0] = t0;
        b
    };
    let g_ref = fiber_block(&induced_metric(imm, &base0)?);
    let fiber_signature = eig_spectrum(&g_ref)
        .map_err(HypersurfaceError::from)?
        .expanded()
        .iter()
        .filter(|z| z.re < 0.0)
        .count();

    let c = if k >= 2 {
        let mut ks = Vec::new();
        for p in samples.iter().take(CURVATURE_SAMPLES) {
            let mut base = p.clone();
            base[0] = t0;
            let full = induced_metric_jets(imm, &base, 2)?;
            let keep: Vec<usize> = (1..n).collect();
            let fib: JetMatrix = (1..n)
                .map(|i| (1..n).map(|j| full[i][j].restrict(&keep)).collect())
                .collect();
            let mc = MetricCurvature::from_metric_jets(&fib)?;
            for a in 0..k {
                for b in a + 1..k {
                    let mut x = vec![0.0; k];
                    let mut y = vec![0.0; k];
                    x[a] = 1.0;
                    y[b] = 1.0;
                    if let Ok(kk) = mc.sectional(&x, &y) {
                        ks.push(kk);
                    }
                }
            }
        }
        if ks.is_empty() {
            residual = f64::INFINITY;
            None
        } else {
            let mean = ks.iter().sum::<f64>() / ks.len() as f64;
            for kk in &ks {
                residual = residual.max((kk - mean).abs() / mean.abs().max(1.0));
            }
            Some(mean)
        }
    } else {
        None
    };

    let fit = WarpedFit {
        t0,
        samples: fitted,
        c,
        residual,
        fiber_dim: k,
        fiber_signature,
    };
    Ok(FitOutcome {
        residual,
        fit: (residual <= tol).then_some(fit),
    })
}
