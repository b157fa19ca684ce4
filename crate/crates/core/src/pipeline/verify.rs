//! End-to-end verification of a reconstruction against its warped product.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    alpha, classify_branch, lambda_mu, reconstruct_immersion, shape_data, theta, BranchResult, PipelineError, Subcase,
    DEFAULT_GRID,
};
use crate::exec::Exec;
use crate::hypersurface::jetlinalg::jet_inner;
use crate::hypersurface::{
    frame_jets, induced_metric, sample_points, ChartMap, ImmersionSpec, IdentityResiduals, PointGeometry, DEFAULT_MARGIN,
};
use crate::pseudolinalg::{inner, Signature};
use crate::rotational::{orbit_chart, OrbitForm};
use crate::scalarjet::{Jet, ScalarField};
use crate::warped::{warped_fit, WarpedSpec};

/// Default tolerances, by residual name.
pub const DEFAULT_TOLERANCES: [(&str, f64); 14] = [
    ("metric", 1e-6),
    ("warped_fit", 1e-6),
    ("spectrum", 1e-6),
    ("diagonalizable", 0.5),
    ("psi_constancy", 1e-6),
    ("psi_length", 1e-9),
    ("phi_length", 1e-9),
    ("dphi", 1e-8),
    ("gauss", 1e-6),
    ("codazzi", 1e-6),
    ("tsinghua", 1e-6),
    ("relscurta", 1e-12),
    ("theta_mu", 1e-8),
    ("primitive", 1e-8),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(f64::INFINITY)
    }

    /// Overrides one tolerance; unknown names and non-positive values are rejected.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !self.0.contains_key(name) {
            let known: Vec<&str> = self.0.keys().map(String::as_str).collect();
            return Err(format!("unknown tolerance `{name}` (known: {})", known.join(", ")));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(format!("tolerance `{name}` must be positive and finite, got {value}"));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing to verify (for example a constant-curvature input).
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Residuals at one sample point, for CSV dumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub point: Vec<f64>,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchResult>,
    pub samples: usize,
    pub residuals: Vec<Residual>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationReport {
    pub fn residual(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn finish(mut self, tol: &Tolerances, start: Instant) -> Self {
        for r in &mut self.residuals {
            r.tol = tol.get(&r.name);
            r.pass = r.value <= r.tol;
        }
        if self.verdict != Verdict::Skipped {
            let ok = self.note.is_none() && !self.residuals.is_empty() && self.residuals.iter().all(|r| r.pass);
            self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        }
        self.runtime = start.elapsed();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub margin: f64,
    pub grid: usize,
    pub tolerances: Tolerances,
    pub exec: Exec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            margin: DEFAULT_MARGIN,
            grid: DEFAULT_GRID,
            tolerances: Tolerances::default(),
            exec: Exec::default(),
        }
    }
}

/// `psi`, `phi` and their residuals at one chart point of a rebuilt immersion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiPhi {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    /// `max |d psi / d x_i|` over all chart directions.
    pub dpsi: f64,
    pub psi_length: f64,
    pub phi_length: f64,
    /// Deviation of `D_u phi` from `(a f'/f - b lambda) dF/du` for `phi = a E_1 + b xi`.
    pub dphi: f64,
    /// S21 only: deviation of the `D_u phi` coefficient from `-lambda / cos(theta)`.
    pub dphi_alt: Option<f64>,
}

fn t_jet(nvars: usize, t: f64, value: f64, slope: f64) -> Jet {
    Jet::variable(nvars, 1, 0, t).compose(&[value, slope])
}

/// Assembles `psi` and `phi` from `E_1 = dF/dt` and the unit normal, with the
/// normal oriented so that the fiber principal curvature equals `lambda`.
pub fn psi_phi_fields(
    f: &ScalarField,
    c: f64,
    subcase: Subcase,
    rebuilt: &ImmersionSpec,
    t: f64,
    u: &[f64],
) -> Result<PsiPhi, PipelineError> {
    let sig = rebuilt.sig;
    let n = rebuilt.chart_dim();
    if u.len() + 1 != n || n < 2 {
        return Err(PipelineError::Signature(format!(
            "psi/phi need a chart point with {} orbit coordinates",
            n.saturating_sub(1)
        )));
    }
    let mut p = vec![t];
    p.extend_from_slice(u);
    let (d1, xi, _) = frame_jets(rebuilt, &p, 1)?;
    let e1 = &d1[0];
    let fu = &d1[1];
    let fu_val: Vec<f64> = fu.iter().map(Jet::value).collect();
    let fuu: Vec<f64> = fu.iter().map(|x| x.partial(&[1])).collect();
    let xi_val: Vec<f64> = xi.iter().map(Jet::value).collect();
    let guu = inner(&fu_val, &fu_val, sig).map_err(crate::hypersurface::HypersurfaceError::from)?;
    let huu = inner(&fuu, &xi_val, sig).map_err(crate::hypersurface::HypersurfaceError::from)?;

    let (lam, _) = lambda_mu(f, c, subcase, t, 0)?;
    let lam = lam.value();
    let sigma = if huu / guu / lam >= 0.0 { 1.0 } else { -1.0 };
    let xi: Vec<Jet> = xi.iter().map(|x| x.scale(sigma)).collect();

    let fj = f.eval_jet(&[t], 1)?;
    let log_slope = fj.partial(&[0]) / fj.value();

    // psi = a E_1 + b xi, phi = a2 E_1 + b2 xi
    let (a, b, a2, b2, th) = match subcase {
        Subcase::S22a => {
            let t0 = rebuilt.domain[0].0;
            let al = alpha(f, c, t0, t)?;
            let (_, mu) = lambda_mu(f, c, subcase, t, 0)?;
            let aj = t_jet(n, t, al, mu.value() * al);
            let inv = aj.recip()?;
            (aj.clone(), aj, -inv.clone(), inv, None)
        }
        _ => {
            let th = theta(f, c, subcase, t, 1)?;
            let tj = t_jet(n, t, th.value(), th.partial(&[0]));
            let (s, co) = match subcase {
                Subcase::S21 => (tj.sin(), tj.cos()),
                _ => (tj.sinh(), tj.cosh()),
            };
            match subcase {
                Subcase::S21 => (co.clone(), s.clone(), -s, co, Some(th.value())),
                Subcase::S22b => (co.clone(), s.clone(), -s, co, Some(th.value())),
                _ => (s.clone(), co.clone(), co, s, Some(th.value())),
            }
        }
    };
    let combine = |a: &Jet, b: &Jet| -> Vec<Jet> { e1.iter().zip(&xi).map(|(e, x)| &(a * e) + &(b * x)).collect() };
    let psi = combine(&a, &b);
    let phi = combine(&a2, &b2);

    let mut dpsi = 0.0f64;
    for comp in &psi {
        for v in 0..n {
            dpsi = dpsi.max(comp.partial(&[v]).abs());
        }
    }

    let du_phi: Vec<f64> = phi.iter().map(|x| x.partial(&[1])).collect();
    let kappa = inner(&du_phi, &fu_val, sig).map_err(crate::hypersurface::HypersurfaceError::from)? / guu;
    let predicted = a2.value() * log_slope - b2.value() * lam;
    let scale = predicted.abs().max(1.0);
    let off = du_phi
        .iter()
        .zip(&fu_val)
        .fold(0.0f64, |m, (d, x)| m.max((d - kappa * x).abs()));
    let dphi = ((kappa - predicted).abs().max(off)) / scale;
    let dphi_alt = match (subcase, th) {
        (Subcase::S21, Some(th)) => {
            let alt = -lam / th.cos();
            Some((kappa - alt).abs() / alt.abs().max(1.0))
        }
        _ => None,
    };

    Ok(PsiPhi {
        psi: psi.iter().map(Jet::value).collect(),
        phi: phi.iter().map(Jet::value).collect(),
        dpsi,
        psi_length: jet_inner(&psi, &psi, sig).value(),
        phi_length: jet_inner(&phi, &phi, sig).value(),
        dphi,
        dphi_alt,
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Induced metric predicted from `(f, c)` at `p`.
///
/// For `c != 0` on a sphere or hyperbolic orbit the fiber block is
/// `f^2 <dy, dy> / |c|`; otherwise the fiber block is transported from `t0`
/// by `(f(t)/f(t0))^2`.
fn predicted_metric(original: &WarpedSpec, rebuilt: &ImmersionSpec, p: &[f64], t0: f64) -> Result<DMatrix<f64>, PipelineError> {
    let n = p.len();
    let fv = original.f.eval(&[p[0]])?;
    let mut g = DMatrix::zeros(n, n);
    g[(0, 0)] = 1.0;
    if let ChartMap::Rotational(r) = &rebuilt.map {
        if original.c != 0.0 && r.orbit_form != OrbitForm::Parabolic {
            let slots = r.slots()?;
            let y = orbit_chart(r.orbit_form, slots, &p[1..], 1)?;
            for a in 1..n {
                for b in 1..n {
                    let ya: Vec<f64> = y.iter().map(|c| c.partial(&[a - 1])).collect();
                    let yb: Vec<f64> = y.iter().map(|c| c.partial(&[b - 1])).collect();
                    let v = inner(&ya, &yb, slots).map_err(crate::hypersurface::HypersurfaceError::from)?;
                    g[(a, b)] = fv * fv * v / original.c.abs();
                }
            }
            return Ok(g);
        }
    }
    let f0 = original.f.eval(&[t0])?;
    let mut base = p.to_vec();
    base[0] = t0;
    let g0 = induced_metric(rebuilt, &base)?;
    let k = (fv / f0).powi(2);
    for a in 1..n {
        for b in 1..n {
            g[(a, b)] = k * g0[(a, b)];
        }
    }
    Ok(g)
}

fn spectrum_residual(eigs: &[Complex64], lambda: f64, mu: f64, n: usize) -> f64 {
    let scale = lambda.abs().max(mu.abs()).max(f64::MIN_POSITIVE);
    let mut got = eigs.to_vec();
    got.sort_by(|a, b| a.re.total_cmp(&b.re));
    [1.0, -1.0]
        .iter()
        .map(|s| {
            let mut want = vec![s * mu];
            want.extend(std::iter::repeat_n(s * lambda, n - 1));
            want.sort_by(f64::total_cmp);
            if want.len() != got.len() {
                return f64::INFINITY;
            }
            got.iter()
                .zip(&want)
                .fold(0.0f64, |m, (z, w)| m.max((z - Complex64::new(*w, 0.0)).norm()))
                / scale
        })
        .fold(f64::INFINITY, f64::min)
}

struct SampleResult {
    metric: f64,
    spectrum: f64,
    diagonalizable: f64,
    identities: IdentityResiduals,
    psi: PsiPhi,
}

fn sample_residuals(
    original: &WarpedSpec,
    rebuilt: &ImmersionSpec,
    subcase: Subcase,
    p: &[f64],
    t0: f64,
) -> Result<SampleResult, PipelineError> {
    let geo = PointGeometry::compute(rebuilt, p)?;
    let pred = predicted_metric(original, rebuilt, p, t0)?;
    let metric = max_abs(&(&geo.frame.metric - &pred)) / max_abs(&pred).max(f64::MIN_POSITIVE);
    let (lam, mu) = lambda_mu(&original.f, original.c, subcase, p[0], 0)?;
    let spectrum = spectrum_residual(&geo.frame.spectrum.expanded(), lam.value(), mu.value(), p.len());
    let diagonalizable = if geo.frame.spectrum.real_diagonalizable { 0.0 } else { 1.0 };
    let psi = psi_phi_fields(&original.f, original.c, subcase, rebuilt, p[0], &p[1..])?;
    Ok(SampleResult {
        metric,
        spectrum,
        diagonalizable,
        identities: geo.identities(),
        psi,
    })
}

fn residual(name: &str, value: f64) -> Residual {
    Residual {
        name: name.to_string(),
        value,
        tol: f64::INFINITY,
        pass: false,
    }
}

/// Gauge-normalized comparison of the fitted warping data with `(f, c)`.
fn warped_fit_residual(original: &WarpedSpec, rebuilt: &ImmersionSpec, samples: &[Vec<f64>], tol: f64) -> Result<f64, PipelineError> {
    let outcome = warped_fit(rebuilt, samples, tol)?;
    let Some(fit) = outcome.fit else {
        return Ok(outcome.residual);
    };
    let f0 = original.f.eval(&[fit.t0])?;
    let mut r = fit.residual;
    for &(t, fhat) in &fit.samples {
        let want = original.f.eval(&[t])? / f0;
        r = r.max((fhat - want).abs() / want.abs().max(f64::MIN_POSITIVE));
    }
    if let Some(cf) = fit.c {
        let want = original.c / (f0 * f0);
        r = r.max((cf - want).abs() / want.abs().max(1.0));
    }
    Ok(r)
}

/// Checks a rebuilt immersion against the warped product it came from.
///
/// Failures of any kind are reported through the verdict; an input in the
/// constant-curvature branch yields a skipped report.
pub fn verify_reconstruction(original: &WarpedSpec, rebuilt: &ImmersionSpec, options: &VerifyOptions) -> VerificationReport {
    let start = Instant::now();
    let mut report = VerificationReport {
        branch: None,
        samples: 0,
        residuals: vec![],
        verdict: Verdict::Fail,
        note: None,
        rows: vec![],
        runtime: Duration::ZERO,
    };
    let branch = match classify_branch(&original.f, original.c, original.interval, options.grid) {
        Ok(b) => b,
        Err(e) => {
            report.note = Some(e.to_string());
            return report.finish(&options.tolerances, start);
        }
    };
    report.branch = Some(branch.clone());
    let Some(subcase) = branch.subcase else {
        report.verdict = Verdict::Skipped;
        report.note = Some("constant sectional curvature; no reconstruction attempted".into());
        return report.finish(&options.tolerances, start);
    };
    if let Err(e) = verify_into(&mut report, original, rebuilt, subcase, options) {
        report.note = Some(e.to_string());
    }
    report.finish(&options.tolerances, start)
}

fn verify_into(
    report: &mut VerificationReport,
    original: &WarpedSpec,
    rebuilt: &ImmersionSpec,
    subcase: Subcase,
    options: &VerifyOptions,
) -> Result<(), PipelineError> {
    let n = rebuilt.chart_dim();
    if n != original.n() || n < 2 {
        return Err(PipelineError::Signature(format!(
            "rebuilt chart has dimension {n}, warped product has {}",
            original.n()
        )));
    }
    let shape = shape_data(&original.f, original.c, original.interval, subcase, options.grid)?;
    let t0 = original.interval.0;
    let points = sample_points(&rebuilt.domain, options.samples, options.seed, options.margin);
    report.samples = points.len();
    let per = options
        .exec
        .try_map(&points, |p| sample_residuals(original, rebuilt, subcase, p, t0))?;

    let (want_psi, want_phi) = subcase.psi_phi_lengths();
    let mut m = BTreeMap::<&str, f64>::new();
    let mut bump = |k: &'static str, v: f64| {
        let e = m.entry(k).or_insert(0.0);
        *e = if v.is_nan() { f64::INFINITY } else { e.max(v) };
    };
    for (p, s) in points.iter().zip(&per) {
        let dphi = s.psi.dphi.max(s.psi.dphi_alt.unwrap_or(0.0));
        let row = [
            ("metric", s.metric),
            ("spectrum", s.spectrum),
            ("diagonalizable", s.diagonalizable),
            ("psi_constancy", s.psi.dpsi),
            ("psi_length", (s.psi.psi_length - want_psi).abs()),
            ("phi_length", (s.psi.phi_length - want_phi).abs()),
            ("dphi", dphi),
            ("gauss", s.identities.gauss),
            ("codazzi", s.identities.codazzi),
            ("tsinghua", s.identities.tsinghua),
        ];
        for (k, v) in row {
            bump(k, v);
        }
        report.rows.push(SampleRow {
            point: p.clone(),
            values: row.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }
    let wf = warped_fit_residual(original, rebuilt, &points, options.tolerances.get("warped_fit"))?;
    bump("warped_fit", wf);
    bump("relscurta", shape.relscurta);
    bump("theta_mu", shape.theta_mu);
    bump("primitive", shape.primitive);
    report.residuals = DEFAULT_TOLERANCES
        .iter()
        .filter_map(|(k, _)| m.get(k).map(|v| residual(k, *v)))
        .collect();
    Ok(())
}

/// Identity suite for a user immersion: Gauss, Codazzi and Tsinghua residuals.
pub fn verify_immersion(spec: &ImmersionSpec, options: &VerifyOptions) -> VerificationReport {
    let start = Instant::now();
    let points = sample_points(&spec.domain, options.samples, options.seed, options.margin);
    let mut report = VerificationReport {
        branch: None,
        samples: points.len(),
        residuals: vec![],
        verdict: Verdict::Fail,
        note: None,
        rows: vec![],
        runtime: Duration::ZERO,
    };
    match crate::hypersurface::identity_suite(spec, &points, options.exec) {
        Ok(ids) => {
            let mut worst = [0.0f64; 3];
            for (p, r) in points.iter().zip(&ids) {
                let vals = [r.gauss, r.codazzi, r.tsinghua];
                for (w, v) in worst.iter_mut().zip(vals) {
                    *w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
                }
                report.rows.push(SampleRow {
                    point: p.clone(),
                    values: ["gauss", "codazzi", "tsinghua"]
                        .iter()
                        .zip(vals)
                        .map(|(k, v)| (k.to_string(), v))
                        .collect(),
                });
            }
            report.residuals = ["gauss", "codazzi", "tsinghua"]
                .iter()
                .zip(worst)
                .map(|(k, v)| residual(k, v))
                .collect();
        }
        Err(e) => report.note = Some(e.to_string()),
    }
    report.finish(&options.tolerances, start)
}

/// One job of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub subcase: Option<Subcase>,
    /// `theta(t0)`, or `alpha(t0) = 1` in S22a.
    pub theta0: Option<f64>,
    pub residuals: Vec<Residual>,
    pub verdict: Verdict,
    pub error: Option<String>,
}

/// Reconstructs and verifies `(f(t; param = v), c)` for each value, one job per value.
///
/// `f` must have variables `t` and `param`. Jobs run through `options.exec`;
/// each job verifies sequentially, and rows come back in input order.
pub fn sweep(
    f: &ScalarField,
    param: &str,
    values: &[f64],
    c: f64,
    interval: (f64, f64),
    sig: Signature,
    options: &VerifyOptions,
) -> Vec<SweepRow> {
    let inner = VerifyOptions {
        exec: Exec::Sequential,
        ..options.clone()
    };
    options.exec.map(values, |&v| {
        let mut row = SweepRow {
            value: v,
            subcase: None,
            theta0: None,
            residuals: vec![],
            verdict: Verdict::Fail,
            error: None,
        };
        let mut job = || -> Result<VerificationReport, PipelineError> {
            let fv = f.substitute(param, v);
            let sub = super::subcase_dispatch(&fv, c, interval, inner.grid)?;
            let fiber_index = sig
                .index()
                .checked_sub(usize::from(sub != Subcase::S21))
                .ok_or_else(|| PipelineError::Signature(format!("{sub:?} needs a negative ambient direction")))?;
            let spec = WarpedSpec::new(fv, c, interval, sig.dim() - 2, fiber_index)?;
            row.subcase = Some(sub);
            row.theta0 = Some(super::build_theta(&spec.f, c, sub, interval.0, interval.0)?);
            let rec = reconstruct_immersion(&spec, sig, inner.grid)?;
            Ok(verify_reconstruction(&spec, &rec.immersion, &inner))
        };
        match job() {
            Ok(rep) => {
                row.residuals = rep.residuals;
                row.verdict = rep.verdict;
                row.error = rep.note;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    })
}
