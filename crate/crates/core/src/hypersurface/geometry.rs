use nalgebra::DMatrix;
use serde::Serialize;

use super::jetlinalg::{jet_inner, jet_inverse, jet_normal_cofactor, JetMatrix};
use super::{HypersurfaceError, ImmersionSpec};
use crate::pseudolinalg::{self, eig_spectrum, Spectrum, RANK_TOL};
use crate::scalarjet::Jet;

/// Relative threshold for a null normal, `|<N,N>| / |N|_E^2`.
pub const NULL_TOL: f64 = 1e-10;

fn rel(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else {
        abs / scale.max(f64::MIN_POSITIVE)
    }
}

fn values(m: &JetMatrix) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

fn check_metric(g: &DMatrix<f64>) -> Result<(), HypersurfaceError> {
    let n = g.nrows();
    let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let det = g.determinant();
    if scale == 0.0 || det.abs() < RANK_TOL * scale.powi(n as i32) {
        return Err(HypersurfaceError::DegenerateMetric { det });
    }
    Ok(())
}

/// Levi-Civita data of a metric given as jets of order >= 2.
///
/// Curvature convention: `R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z`, so
/// `R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik` and the
/// lowered tensor `R_ijkl = <R(d_i, d_j) d_k, d_l>`. With this choice the Gauss
/// equation reads `R_ijkl = eps (H_jk H_il - H_ik H_jl)` and the sectional
/// curvature is `<R(X,Y)Y, X> / (<X,X><Y,Y> - <X,Y>^2)`.
#[derive(Debug, Clone)]
pub struct MetricCurvature {
    pub dim: usize,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// `gamma[k][i][j] = G^k_ij`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// `riemann_up[l][i][j][k] = R^l_ijk`.
    pub riemann_up: Vec<Vec<Vec<Vec<f64>>>>,
    /// `riemann[i][j][k][l] = R_ijkl`.
    pub riemann: Vec<Vec<Vec<Vec<f64>>>>,
    /// Magnitude of the terms that cancel inside `R` (for relative residuals).
    pub riemann_scale: f64,
}

fn christoffel_jets(g: &JetMatrix) -> Result<(Vec<Vec<Vec<Jet>>>, JetMatrix), HypersurfaceError> {
    let n = g.len();
    check_metric(&values(g))?;
    let g1: JetMatrix = g
        .iter()
        .map(|row| row.iter().map(|x| x.truncate(1)).collect())
        .collect();
    let ginv = jet_inverse(&g1).ok_or(HypersurfaceError::Linalg(
        pseudolinalg::LinalgError::SingularMatrix,
    ))?;
    // dg[a][b][c] = d_a G_bc
    let dg: Vec<JetMatrix> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (0..n).map(|c| g[b][c].derivative(a)).collect())
                .collect()
        })
        .collect();
    let mut gamma = vec![vec![vec![ginv[0][0].zeros_like(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            let lowered: Vec<Jet> = (0..n)
                .map(|l| (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]).scale(0.5))
                .collect();
            for k in 0..n {
                let mut acc = ginv[k][0].zeros_like();
                for (l, low) in lowered.iter().enumerate() {
                    acc = acc + &ginv[k][l] * low;
                }
                gamma[k][i][j] = acc.clone();
                gamma[k][j][i] = acc;
            }
        }
    }
    Ok((gamma, ginv))
}

impl MetricCurvature {
    pub fn from_metric_jets(g: &JetMatrix) -> Result<Self, HypersurfaceError> {
        let n = g.len();
        let (gamma_j, ginv) = christoffel_jets(g)?;
        let gamma: Vec<Vec<Vec<f64>>> = gamma_j
            .iter()
            .map(|a| a.iter().map(|b| b.iter().map(Jet::value).collect()).collect())
            .collect();
        // dgam[a][k][i][j] = d_a G^k_ij
        let dgam: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
            .map(|a| {
                gamma_j
                    .iter()
                    .map(|gk| {
                        gk.iter()
                            .map(|gki| gki.iter().map(|x| x.derivative(a).value()).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let metric = values(g);
        let mut up = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        let mut max_dgam = 0.0f64;
        let mut max_gam = 0.0f64;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    max_gam = max_gam.max(gamma[l][i][j].abs());
                    for k in 0..n {
                        max_dgam = max_dgam.max(dgam[i][l][j][k].abs());
                        let mut r = dgam[i][l][j][k] - dgam[j][l][i][k];
                        for m in 0..n {
                            r += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
                        }
                        up[l][i][j][k] = r;
                    }
                }
            }
        }
        let mut low = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        low[i][j][k][l] = (0..n).map(|m| metric[(l, m)] * up[m][i][j][k]).sum();
                    }
                }
            }
        }
        let gmax = metric.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        Ok(Self {
            dim: n,
            metric_inv: values(&ginv),
            metric,
            gamma,
            riemann_up: up,
            riemann: low,
            riemann_scale: gmax * (max_dgam + n as f64 * max_gam * max_gam),
        })
    }

    /// `R(X,Y)Z` as a coordinate vector.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        *o += self.riemann_up[l][i][j][k] * x[i] * y[j] * z[k];
                    }
                }
            }
        }
        out
    }

    pub fn sectional(&self, x: &[f64], y: &[f64]) -> Result<f64, HypersurfaceError> {
        let g = |a: &[f64], b: &[f64]| -> f64 {
            let n = self.dim;
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.metric[(i, j)] * a[i] * b[j];
                }
            }
            s
        };
        let den = g(x, x) * g(y, y) - g(x, y).powi(2);
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ey: f64 = y.iter().map(|v| v * v).sum();
        let gmax = self.metric.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if den.abs() <= 1e-12 * gmax * gmax * ex * ey {
            return Err(HypersurfaceError::DegeneratePlane);
        }
        let ryy = self.apply(x, y, y);
        Ok(g(&ryy, x) / den)
    }

    /// Largest violation of the pair antisymmetries and the first Bianchi identity.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let r = &self.riemann;
        let mut abs = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        abs = abs
                            .max((r[i][j][k][l] + r[j][i][k][l]).abs())
                            .max((r[i][j][k][l] + r[i][j][l][k]).abs())
                            .max((r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l]).abs());
                    }
                }
            }
        }
        rel(abs, self.riemann_scale)
    }
}

/// Per-point bundle of first- and second-order extrinsic data.
#[derive(Debug, Clone, Serialize)]
pub struct FrameData {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub normal: Vec<f64>,
    pub eps_tilde: f64,
    pub second_form: DMatrix<f64>,
    pub shape: DMatrix<f64>,
    pub spectrum: Spectrum,
}

/// Unit normal jets (to the order of the tangent jets) and the sign of `<xi, xi>`.
fn normal_jets(
    spec: &ImmersionSpec,
    tangents: &[Vec<Jet>],
) -> Result<(Vec<Jet>, f64), HypersurfaceError> {
    let sig = spec.sig;
    let n_raw = jet_normal_cofactor(tangents, sig);
    let nn = jet_inner(&n_raw, &n_raw, sig);
    let euclid: f64 = n_raw.iter().map(|x| x.value().powi(2)).sum();
    if euclid == 0.0 || nn.value().abs() < NULL_TOL * euclid {
        return Err(HypersurfaceError::NullNormal { norm: nn.value() });
    }
    let eps = nn.value().signum();
    let inv_len = nn.scale(eps).sqrt()?.recip()?;
    Ok((n_raw.iter().map(|x| x * &inv_len).collect(), eps))
}

/// First derivatives `dF[i][a] = d_i F^a`.
fn tangent_jets(fj: &[Jet], n: usize) -> Vec<Vec<Jet>> {
    (0..n)
        .map(|i| fj.iter().map(|c| c.derivative(i)).collect())
        .collect()
}

fn metric_jets(spec: &ImmersionSpec, d1: &[Vec<Jet>]) -> JetMatrix {
    let n = d1.len();
    let mut g = vec![vec![d1[0][0].zeros_like(); n]; n];
    for i in 0..n {
        for j in i..n {
            let x = jet_inner(&d1[i], &d1[j], spec.sig);
            g[i][j] = x.clone();
            g[j][i] = x;
        }
    }
    g
}

/// Tangent and unit-normal jets at `p`: `(dF[i], xi, eps)`, each of order `order`.
pub fn frame_jets(
    spec: &ImmersionSpec,
    p: &[f64],
    order: usize,
) -> Result<(Vec<Vec<Jet>>, Vec<Jet>, f64), HypersurfaceError> {
    let fj = spec.jets(p, order + 1)?;
    let d1 = tangent_jets(&fj, spec.chart_dim());
    check_metric(&values(&metric_jets(spec, &d1)))?;
    let (xi, eps) = normal_jets(spec, &d1)?;
    Ok((d1, xi, eps))
}

pub fn induced_metric(spec: &ImmersionSpec, p: &[f64]) -> Result<DMatrix<f64>, HypersurfaceError> {
    let fj = spec.jets(p, 1)?;
    let g = values(&metric_jets(spec, &tangent_jets(&fj, spec.chart_dim())));
    check_metric(&g)?;
    Ok(g)
}

pub fn unit_normal(spec: &ImmersionSpec, p: &[f64]) -> Result<(Vec<f64>, f64), HypersurfaceError> {
    let fj = spec.jets(p, 1)?;
    let d1 = tangent_jets(&fj, spec.chart_dim());
    check_metric(&values(&metric_jets(spec, &d1)))?;
    let (xi, eps) = normal_jets(spec, &d1)?;
    Ok((xi.iter().map(Jet::value).collect(), eps))
}

impl FrameData {
    pub fn compute(spec: &ImmersionSpec, p: &[f64]) -> Result<Self, HypersurfaceError> {
        let n = spec.chart_dim();
        let fj = spec.jets(p, 2)?;
        let d1 = tangent_jets(&fj, n);
        let metric = values(&metric_jets(spec, &d1));
        check_metric(&metric)?;
        let (xi, eps) = normal_jets(spec, &d1)?;
        let xi: Vec<f64> = xi.iter().map(Jet::value).collect();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let second: Vec<f64> = d1[i].iter().map(|c| c.derivative(j).value()).collect();
                let v = pseudolinalg::inner(&second, &xi, spec.sig)?;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let shape = pseudolinalg::inverse(&metric)? * &h;
        let spectrum = eig_spectrum(&shape)?;
        Ok(Self {
            point: p.to_vec(),
            metric,
            normal: xi,
            eps_tilde: eps,
            second_form: h,
            shape,
            spectrum,
        })
    }
}

pub fn second_fundamental_form(spec: &ImmersionSpec, p: &[f64]) -> Result<DMatrix<f64>, HypersurfaceError> {
    Ok(FrameData::compute(spec, p)?.second_form)
}

pub fn shape_operator(spec: &ImmersionSpec, p: &[f64]) -> Result<DMatrix<f64>, HypersurfaceError> {
    Ok(FrameData::compute(spec, p)?.shape)
}

/// Induced metric of `spec` as jets of the given order (>= 2 for curvature).
pub fn induced_metric_jets(spec: &ImmersionSpec, p: &[f64], order: usize) -> Result<JetMatrix, HypersurfaceError> {
    let fj = spec.jets(p, order + 1)?;
    Ok(metric_jets(spec, &tangent_jets(&fj, spec.chart_dim())))
}

/// `G^k_ij` from metric jets of order >= 1.
pub fn christoffel_from_metric_jets(g: &JetMatrix) -> Result<Vec<Vec<Vec<f64>>>, HypersurfaceError> {
    let (gamma, _) = christoffel_jets(g)?;
    Ok(gamma
        .iter()
        .map(|a| a.iter().map(|b| b.iter().map(Jet::value).collect()).collect())
        .collect())
}

pub fn christoffel(spec: &ImmersionSpec, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, HypersurfaceError> {
    christoffel_from_metric_jets(&induced_metric_jets(spec, p, 1)?)
}

pub fn riemann_intrinsic(spec: &ImmersionSpec, p: &[f64]) -> Result<MetricCurvature, HypersurfaceError> {
    MetricCurvature::from_metric_jets(&induced_metric_jets(spec, p, 2)?)
}

pub fn sectional_curvature(
    spec: &ImmersionSpec,
    p: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<f64, HypersurfaceError> {
    riemann_intrinsic(spec, p)?.sectional(x, y)
}

/// Everything needed for the structural identities at one chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub frame: FrameData,
    pub curvature: MetricCurvature,
    /// `dh[i][j][k] = d_i H_jk`.
    pub dh: Vec<Vec<Vec<f64>>>,
}

/// Relative residuals of the three structural identities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub gauss: f64,
    pub codazzi: f64,
    pub tsinghua: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.gauss.max(self.codazzi).max(self.tsinghua)
    }
}

impl PointGeometry {
    pub fn compute(spec: &ImmersionSpec, p: &[f64]) -> Result<Self, HypersurfaceError> {
        let n = spec.chart_dim();
        let fj = spec.jets(p, 3)?;
        let d1 = tangent_jets(&fj, n);
        let gj = metric_jets(spec, &d1);
        let curvature = MetricCurvature::from_metric_jets(&gj)?;
        let d1_low: Vec<Vec<Jet>> = d1
            .iter()
            .map(|v| v.iter().map(|x| x.truncate(1)).collect())
            .collect();
        let (xi, eps) = normal_jets(spec, &d1_low)?;
        let mut hj = vec![vec![xi[0].zeros_like(); n]; n];
        for i in 0..n {
            for j in i..n {
                let second: Vec<Jet> = d1[i].iter().map(|c| c.derivative(j)).collect();
                let v = jet_inner(&second, &xi, spec.sig);
                hj[i][j] = v.clone();
                hj[j][i] = v;
            }
        }
        let h = values(&hj);
        let dh: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|j| (0..n).map(|k| hj[j][k].derivative(a).value()).collect())
                    .collect()
            })
            .collect();
        let shape = &curvature.metric_inv * &h;
        let spectrum = eig_spectrum(&shape)?;
        let frame = FrameData {
            point: p.to_vec(),
            metric: curvature.metric.clone(),
            normal: xi.iter().map(Jet::value).collect(),
            eps_tilde: eps,
            second_form: h,
            shape,
            spectrum,
        };
        Ok(Self { frame, curvature, dh })
    }

    fn hmax(&self) -> f64 {
        self.frame
            .second_form
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }

    /// `max |R_ijkl - eps (H_jk H_il - H_ik H_jl)|`, relative to the term magnitudes.
    pub fn gauss_residual(&self) -> f64 {
        let n = self.curvature.dim;
        let h = &self.frame.second_form;
        let e = self.frame.eps_tilde;
        let r = &self.curvature.riemann;
        let mut abs = 0.0f64;
        let mut rmax = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let rhs = e * (h[(j, k)] * h[(i, l)] - h[(i, k)] * h[(j, l)]);
                        abs = abs.max((r[i][j][k][l] - rhs).abs());
                        rmax = rmax.max(r[i][j][k][l].abs());
                    }
                }
            }
        }
        let hm = self.hmax();
        rel(abs, rmax.max(hm * hm).max(self.curvature.riemann_scale))
    }

    /// Covariant derivative `(D H)_ijk = d_i H_jk - G^m_ij H_mk - G^m_ik H_jm`.
    pub fn covariant_dh(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.curvature.dim;
        let h = &self.frame.second_form;
        let g = &self.curvature.gamma;
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = self.dh[i][j][k];
                    for m in 0..n {
                        v -= g[m][i][j] * h[(m, k)] + g[m][i][k] * h[(j, m)];
                    }
                    out[i][j][k] = v;
                }
            }
        }
        out
    }

    pub fn codazzi_residual(&self) -> f64 {
        let n = self.curvature.dim;
        let c = self.covariant_dh();
        let mut abs = 0.0f64;
        let mut dmax = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    abs = abs.max((c[i][j][k] - c[j][i][k]).abs());
                    dmax = dmax.max(self.dh[i][j][k].abs());
                }
            }
        }
        let gmax = self
            .curvature
            .gamma
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        rel(abs, dmax.max(n as f64 * gmax * self.hmax()))
    }

    /// Cyclic sum `H(Y, R(W,X)Z) + H(W, R(X,Y)Z) + H(X, R(Y,W)Z)` over coordinate 4-tuples.
    pub fn tsinghua_residual(&self) -> f64 {
        let n = self.curvature.dim;
        let h = &self.frame.second_form;
        let up = &self.curvature.riemann_up;
        // hr[c][a][b][d] = H(d_c, R(d_a, d_b) d_d)
        let hr = |c: usize, a: usize, b: usize, d: usize| -> f64 {
            (0..n).map(|m| h[(c, m)] * up[m][a][b][d]).sum()
        };
        let mut abs = 0.0f64;
        let mut term = 0.0f64;
        for w in 0..n {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let t1 = hr(y, w, x, z);
                        let t2 = hr(w, x, y, z);
                        let t3 = hr(x, y, w, z);
                        abs = abs.max((t1 + t2 + t3).abs());
                        term = term.max(t1.abs()).max(t2.abs()).max(t3.abs());
                    }
                }
            }
        }
        let rmax = up.iter().flatten().flatten().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        let scale = term
            .max(n as f64 * self.hmax() * rmax)
            .max(self.hmax() * self.curvature.riemann_scale);
        rel(abs, scale)
    }

    pub fn identities(&self) -> IdentityResiduals {
        IdentityResiduals {
            gauss: self.gauss_residual(),
            codazzi: self.codazzi_residual(),
            tsinghua: self.tsinghua_residual(),
        }
    }
}

pub fn gauss_residual(spec: &ImmersionSpec, p: &[f64]) -> Result<f64, HypersurfaceError> {
    Ok(PointGeometry::compute(spec, p)?.gauss_residual())
}

pub fn codazzi_residual(spec: &ImmersionSpec, p: &[f64]) -> Result<f64, HypersurfaceError> {
    Ok(PointGeometry::compute(spec, p)?.codazzi_residual())
}

pub fn tsinghua_residual(spec: &ImmersionSpec, p: &[f64]) -> Result<f64, HypersurfaceError> {
    Ok(PointGeometry::compute(spec, p)?.tsinghua_residual())
}
