//! Branch classification, shape data, reconstruction and verification for
//! warped products `I x_f M(c)` realized as hypersurfaces.
//!
//! The branch is decided by `D = c + f'' f - f'^2`: `D = 0` on `I` gives constant
//! sectional curvature, `D != 0` a rotational hypersurface. In the rotational
//! branch `eps = sign((c - f'^2)/f^2)` and the subcase follows from `|f'/(f lambda)|`:
//!
//! | subcase | eps | ratio | axis      | orbit      | `<psi,psi>` | `<phi,phi>` |
//! |---------|-----|-------|-----------|------------|-------------|-------------|
//! | S21     | +1  | any   | spacelike | sphere     | 1           | 1           |
//! | S22a    | -1  | = 1   | null      | parabolic  | 0           | 0           |
//! | S22b    | -1  | < 1   | spacelike | hyperbolic | 1           | -1          |
//! | S22c    | -1  | > 1   | timelike  | sphere     | -1          | 1           |
//!
//! With `eps = -1` the ratio is `|f'| / sqrt(f'^2 - c)`, so the subcase is the sign
//! of `c` (zero, negative, positive). In S22c `psi = sinh(theta) E_1 + cosh(theta) xi`
//! is timelike, which is why its axis is `e_{n+1}`.
//!
//! The S22b orbit is the set `sum eps_i y_i^2 = -1` in the slots after `e_1`; its
//! index is whatever those slots carry, so the fiber index is the ambient index
//! minus one in every `eps = -1` subcase.

mod shape;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use shape::{alpha, lambda_mu, theta, Integrand, ProfileIntegral, Subcase};
pub use verify::{
    psi_phi_fields, sweep, verify_immersion, verify_reconstruction, PsiPhi, Residual, SampleRow, SweepRow, Tolerances,
    Verdict, VerificationReport, VerifyOptions, DEFAULT_TOLERANCES,
};

use crate::hypersurface::{HypersurfaceError, ImmersionSpec};
use crate::pseudolinalg::Signature;
use crate::rotational::{
    generate_case1, generate_case2, generate_case3, OrbitForm, Profile, RotationalError, RotationalSpec,
};
use crate::scalarjet::{JetError, QuadError, ScalarField};
use crate::warped::{WarpedError, WarpedSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("c + f''f - f'^2 changes character inside the interval (near t = {t})")]
    MixedBranch { t: f64 },
    #[error("warping function is not positive at t = {t} (f = {value})")]
    NonPositiveWarp { t: f64, value: f64 },
    #[error("warping function is constant on the interval")]
    ConstantWarp,
    #[error("-f''/f is not constant (spread {spread:e})")]
    NotConstant { spread: f64 },
    #[error("sign of (c - f'^2)/f^2 changes inside the interval (near t = {t})")]
    SignChange { t: f64 },
    #[error("(c - f'^2)/f^2 vanishes at t = {t}")]
    ZeroLambda { t: f64 },
    #[error("|f'/(f lambda)| crosses 1 inside the interval (near t = {t})")]
    SubcaseChange { t: f64 },
    #[error("the warped product has constant curvature; there is no rotational reconstruction")]
    ConstantCurvatureBranch,
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Warped(#[from] WarpedError),
    #[error(transparent)]
    Geometry(#[from] HypersurfaceError),
    #[error(transparent)]
    Rotational(#[from] RotationalError),
}

/// Default number of grid points on `I`.
pub const DEFAULT_GRID: usize = 256;
/// Relative threshold for `c + f''f - f'^2 = 0` and `(c - f'^2)/f^2 = 0`.
pub const BRANCH_TOL: f64 = 1e-9;
/// Band around 1 for `|f'/(f lambda)| = 1`.
pub const RATIO_BAND: f64 = 1e-9;
/// Allowed spread of `-f''/f` in the constant-curvature branch.
pub const CONSTANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    ConstantCurvature,
    Rotational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchResult {
    pub branch: Branch,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcase: Option<Subcase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_tilde: Option<f64>,
}

pub fn grid(interval: (f64, f64), count: usize) -> Vec<f64> {
    let (a, b) = interval;
    let m = count.max(2) - 1;
    (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect()
}

/// `(f, f', f'')` on the grid, checking positivity and non-constancy.
fn warp_samples(f: &ScalarField, interval: (f64, f64), count: usize) -> Result<Vec<(f64, [f64; 3])>, PipelineError> {
    let mut out = Vec::with_capacity(count);
    for t in grid(interval, count) {
        let j = f.eval_jet(&[t], 2)?;
        let v = [j.value(), j.partial(&[0]), j.partial(&[0, 0])];
        if !(v[0] > 0.0) {
            return Err(PipelineError::NonPositiveWarp { t, value: v[0] });
        }
        out.push((t, v));
    }
    let fmax = out.iter().fold(0.0f64, |a, (_, v)| a.max(v[0]));
    if out.iter().all(|(_, v)| v[1].abs() <= 1e-12 * fmax) {
        return Err(PipelineError::ConstantWarp);
    }
    Ok(out)
}

/// -1, 0 or +1 per grid point, with 0 meaning `|x| <= tol * scale`.
fn uniform_sign(values: &[(f64, f64, f64)], tol: f64) -> Result<i8, (usize, bool)> {
    let cls: Vec<i8> = values
        .iter()
        .map(|&(_, x, scale)| {
            if x.abs() <= tol * scale {
                0
            } else if x > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    match cls.iter().position(|&c| c != cls[0]) {
        None => Ok(cls[0]),
        Some(k) => Err((k, cls[k] == 0 || cls[0] == 0)),
    }
}

/// Decides between the constant-curvature and rotational branches.
pub fn classify_branch(f: &ScalarField, c: f64, interval: (f64, f64), grid_count: usize) -> Result<BranchResult, PipelineError> {
    let ws = warp_samples(f, interval, grid_count)?;
    let d: Vec<(f64, f64, f64)> = ws
        .iter()
        .map(|&(t, [f, fp, fpp])| {
            let scale = c.abs().max((fpp * f).abs()).max(fp * fp);
            (t, c + fpp * f - fp * fp, scale)
        })
        .collect();
    match uniform_sign(&d, BRANCH_TOL) {
        Err((k, _)) => Err(PipelineError::MixedBranch { t: d[k].0 }),
        Ok(0) => {
            let k = case1_curvature(f, c, interval, grid_count)?;
            Ok(BranchResult {
                branch: Branch::ConstantCurvature,
                curvature: Some(k.k),
                subcase: None,
                eps_tilde: None,
            })
        }
        Ok(_) => {
            let sub = subcase_dispatch(f, c, interval, grid_count)?;
            Ok(BranchResult {
                branch: Branch::Rotational,
                curvature: None,
                subcase: Some(sub),
                eps_tilde: Some(sub.eps()),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case1Curvature {
    #[serde(rename = "K")]
    pub k: f64,
    /// `max - min` of `-f''/f` on the grid.
    pub spread: f64,
    /// `max |-f''/f - (c - f'^2)/f^2|` on the grid.
    pub identity_residual: f64,
}

/// Constant sectional curvature `K = -f''/f` of the first branch.
pub fn case1_curvature(f: &ScalarField, c: f64, interval: (f64, f64), grid_count: usize) -> Result<Case1Curvature, PipelineError> {
    let ws = warp_samples(f, interval, grid_count)?;
    let ks: Vec<f64> = ws.iter().map(|(_, [f, _, fpp])| -fpp / f).collect();
    let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let identity_residual = ws
        .iter()
        .zip(&ks)
        .map(|((_, [f, fp, _]), k)| (k - (c - fp * fp) / (f * f)).abs())
        .fold(0.0f64, f64::max);
    if spread > CONSTANT_TOL * hi.abs().max(lo.abs()).max(1.0) {
        return Err(PipelineError::NotConstant { spread });
    }
    Ok(Case1Curvature {
        k: ks.iter().sum::<f64>() / ks.len() as f64,
        spread,
        identity_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaMu {
    pub lambda: f64,
    pub mu: f64,
    pub eps_tilde: f64,
}

/// `eps = sign((c - f'^2)/f^2)`, `lambda = sqrt(eps (c - f'^2)/f^2) > 0`,
/// `mu = -f''/(eps f lambda)` at one point.
pub fn solve_lambda_mu(f: &ScalarField, c: f64, t: f64) -> Result<LambdaMu, PipelineError> {
    let j = f.eval_jet(&[t], 2)?;
    let (fv, fp, fpp) = (j.value(), j.partial(&[0]), j.partial(&[0, 0]));
    if !(fv > 0.0) {
        return Err(PipelineError::NonPositiveWarp { t, value: fv });
    }
    let q = (c - fp * fp) / (fv * fv);
    if q.abs() <= BRANCH_TOL * c.abs().max(fp * fp) / (fv * fv) {
        return Err(PipelineError::ZeroLambda { t });
    }
    let eps = q.signum();
    let lambda = (eps * q).sqrt();
    Ok(LambdaMu {
        lambda,
        mu: -fpp / (eps * fv * lambda),
        eps_tilde: eps,
    })
}

/// The subcase of the rotational branch, uniform over `I`.
pub fn subcase_dispatch(f: &ScalarField, c: f64, interval: (f64, f64), grid_count: usize) -> Result<Subcase, PipelineError> {
    let ws = warp_samples(f, interval, grid_count)?;
    let q: Vec<(f64, f64, f64)> = ws
        .iter()
        .map(|&(t, [f, fp, _])| (t, (c - fp * fp) / (f * f), c.abs().max(fp * fp) / (f * f)))
        .collect();
    let eps = match uniform_sign(&q, BRANCH_TOL) {
        Err((k, true)) => return Err(PipelineError::ZeroLambda { t: q[k].0 }),
        Err((k, false)) => return Err(PipelineError::SignChange { t: q[k].0 }),
        Ok(0) => return Err(PipelineError::ZeroLambda { t: q[0].0 }),
        Ok(s) => s,
    };
    if eps > 0 {
        return Ok(Subcase::S21);
    }
    let r: Vec<(f64, f64, f64)> = ws
        .iter()
        .zip(&q)
        .map(|(&(t, [f, fp, _]), &(_, q, _))| (t, (fp / (f * (-q).sqrt())).abs() - 1.0, 1.0))
        .collect();
    match uniform_sign(&r, RATIO_BAND) {
        Err((k, _)) => Err(PipelineError::SubcaseChange { t: r[k].0 }),
        Ok(0) => Ok(Subcase::S22a),
        Ok(-1) => Ok(Subcase::S22b),
        Ok(_) => Ok(Subcase::S22c),
    }
}

/// `theta(t)` for S21/S22b/S22c, or `alpha(t)` (with `alpha(t0) = 1`) for S22a.
pub fn build_theta(f: &ScalarField, c: f64, subcase: Subcase, t0: f64, t: f64) -> Result<f64, PipelineError> {
    match subcase {
        Subcase::S22a => Ok(alpha(f, c, t0, t)?),
        _ => Ok(theta(f, c, subcase, t, 0)?.value()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSample {
    pub t: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `theta`, or `alpha` in S22a.
    pub angle: f64,
}

/// `(lambda, mu, theta | alpha)` on a grid together with the residuals of the
/// algebraic and differential identities they satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeData {
    pub subcase: Subcase,
    pub eps_tilde: f64,
    pub samples: Vec<ShapeSample>,
    /// `-eps mu lambda = f''/f` and `eps lambda^2 = (c - f'^2)/f^2`.
    pub relscurta: f64,
    /// `theta' + mu = 0` (S21), `theta' - mu = 0` (S22b, S22c), or
    /// `alpha = f'/f'(t0)` for the quadrature `alpha` (S22a).
    pub theta_mu: f64,
    /// `d/dt(cos theta / lambda) = sin theta` and its analogues.
    pub primitive: f64,
}

fn rel(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else {
        abs / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn shape_data(f: &ScalarField, c: f64, interval: (f64, f64), subcase: Subcase, grid_count: usize) -> Result<ShapeData, PipelineError> {
    let eps = subcase.eps();
    let t0 = interval.0;
    let fp0 = f.eval_jet(&[t0], 1)?.partial(&[0]);
    let mut out = ShapeData {
        subcase,
        eps_tilde: eps,
        samples: Vec::with_capacity(grid_count),
        relscurta: 0.0,
        theta_mu: 0.0,
        primitive: 0.0,
    };
    let mut log_alpha = 0.0;
    let mut prev_t = t0;
    for t in grid(interval, grid_count) {
        let fj = f.eval_jet(&[t], 2)?;
        let (fv, fp, fpp) = (fj.value(), fj.partial(&[0]), fj.partial(&[0, 0]));
        let (lam, mu) = lambda_mu(f, c, subcase, t, 1)?;
        let (l, m) = (lam.value(), mu.value());
        let a1 = (-eps * m * l - fpp / fv).abs();
        let a2 = (eps * l * l - (c - fp * fp) / (fv * fv)).abs();
        out.relscurta = out
            .relscurta
            .max(rel(a1, (m * l).abs().max((fpp / fv).abs())))
            .max(rel(a2, (l * l).max(c.abs() / (fv * fv)).max(fp * fp / (fv * fv))));

        let angle;
        match subcase {
            Subcase::S22a => {
                log_alpha += crate::scalarjet::adaptive_simpson(
                    |s| Ok(lambda_mu(f, c, subcase, s, 0)?.1.value()),
                    prev_t,
                    t,
                    crate::scalarjet::QUAD_TOL,
                )?;
                let a = log_alpha.exp();
                angle = a;
                let closed = fp / fp0;
                out.theta_mu = out.theta_mu.max(rel((a - closed).abs(), a.abs().max(1.0)));
                // d/dt(alpha/lambda) = alpha, with alpha' = mu alpha
                let dq = (m * a * l - a * lam.partial(&[0])) / (l * l);
                out.primitive = out.primitive.max(rel((dq - a).abs(), a.abs().max(1.0)));
            }
            _ => {
                let th = theta(f, c, subcase, t, 1)?;
                angle = th.value();
                let dth = th.partial(&[0]);
                let sign = if subcase == Subcase::S21 { 1.0 } else { -1.0 };
                out.theta_mu = out
                    .theta_mu
                    .max(rel((dth + sign * m).abs(), m.abs().max(dth.abs()).max(1.0)));
                let lam1 = lam.truncate(1);
                let (num, rhs) = match subcase {
                    Subcase::S21 => (th.cos(), th.sin()),
                    Subcase::S22b => (th.cosh(), th.sinh()),
                    _ => (th.sinh(), th.cosh()),
                };
                let q = num.div(&lam1)?;
                let lhs = q.partial(&[0]);
                out.primitive = out
                    .primitive
                    .max(rel((lhs - rhs.value()).abs(), rhs.value().abs().max(1.0)));
            }
        }
        prev_t = t;
        out.samples.push(ShapeSample {
            t,
            lambda: l,
            mu: m,
            angle,
        });
    }
    Ok(out)
}

/// A rebuilt immersion with its rotational witness and shape data.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    pub subcase: Subcase,
    pub immersion: ImmersionSpec,
    pub rotational: RotationalSpec,
    pub shape: ShapeData,
}

/// Ambient index for a fiber of index `fiber_index` in the given subcase.
pub fn ambient_index(fiber_index: usize, subcase: Subcase) -> usize {
    fiber_index + usize::from(subcase != Subcase::S21)
}

/// Rebuilds the hypersurface from `(f, c)` by quadrature, anchored at the left end of `I`.
///
/// Profiles (`P` denotes the fiber multiplier, anchored at its closed form):
/// S21 `(int cos, -P y)` with `P(t0) = cos(theta0)/lambda0`;
/// S22b `(int cosh, -P y)` with `P(t0) = cosh(theta0)/lambda0` on a hyperbolic orbit;
/// S22c `(P y, -int sinh)` with `P(t0) = sinh(theta0)/lambda0`;
/// S22a `(1/2) int(1/alpha) n_1 + P w(v)` with `P = (1/2) int alpha`, `P(t0) = 1/(2 lambda0)`.
pub fn reconstruct_immersion(spec: &WarpedSpec, sig: Signature, grid_count: usize) -> Result<Reconstruction, PipelineError> {
    spec.validate()?;
    let branch = classify_branch(&spec.f, spec.c, spec.interval, grid_count)?;
    let subcase = match branch.subcase {
        Some(s) => s,
        None => return Err(PipelineError::ConstantCurvatureBranch),
    };
    let n = spec.n();
    if sig.dim() != n + 1 {
        return Err(PipelineError::Signature(format!(
            "a {n}-dimensional hypersurface needs ambient dimension {}, got {}",
            n + 1,
            sig.dim()
        )));
    }
    let s = ambient_index(spec.fiber_signature, subcase);
    if sig.index() != s {
        return Err(PipelineError::Signature(format!(
            "fiber index {} in subcase {subcase:?} needs ambient index {s}, got {}",
            spec.fiber_signature,
            sig.index()
        )));
    }
    let shape = shape_data(&spec.f, spec.c, spec.interval, subcase, grid_count)?;
    let (t0, _) = spec.interval;
    let (lam0, _) = lambda_mu(&spec.f, spec.c, subcase, t0, 0)?;
    let lam0 = lam0.value();
    let prof = |integrand, factor, anchor| {
        Profile::Integral(Box::new(ProfileIntegral::new(
            spec.f.clone(),
            spec.c,
            subcase,
            integrand,
            factor,
            anchor,
            spec.interval,
        )))
    };
    let immersion = match subcase {
        Subcase::S21 => {
            let th0 = theta(&spec.f, spec.c, subcase, t0, 0)?.value();
            generate_case1(
                prof(Integrand::Cos, 1.0, 0.0),
                prof(Integrand::Sin, -1.0, -th0.cos() / lam0),
                OrbitForm::Sphere,
                sig,
                spec.interval,
            )?
        }
        Subcase::S22b => {
            let th0 = theta(&spec.f, spec.c, subcase, t0, 0)?.value();
            generate_case1(
                prof(Integrand::Cosh, 1.0, 0.0),
                prof(Integrand::Sinh, -1.0, -th0.cosh() / lam0),
                OrbitForm::Hyperbolic,
                sig,
                spec.interval,
            )?
        }
        Subcase::S22c => {
            let th0 = theta(&spec.f, spec.c, subcase, t0, 0)?.value();
            generate_case2(
                prof(Integrand::Cosh, 1.0, th0.sinh() / lam0),
                prof(Integrand::Sinh, -1.0, 0.0),
                OrbitForm::Sphere,
                sig,
                spec.interval,
            )?
        }
        Subcase::S22a => generate_case3(
            prof(Integrand::InvAlpha, 0.5, 0.0),
            prof(Integrand::Alpha, 0.5, 0.5 / lam0),
            sig,
            spec.interval,
        )?,
    };
    let rotational = match &immersion.map {
        crate::hypersurface::ChartMap::Rotational(r) => r.clone(),
        crate::hypersurface::ChartMap::Components(_) => unreachable!("generators build rotational charts"),
    };
    Ok(Reconstruction {
        subcase,
        immersion,
        rotational,
        shape,
    })
}

#[cfg(test)]
mod tests;
