//! Rotational hypersurfaces of `E^{n+1}_s` about a spacelike, timelike or null axis.
//!
//! | axis       | orbit slots          | orbit forms (p positive, q negative slots) |
//! |------------|----------------------|--------------------------------------------|
//! | spacelike  | `2..=n+1`, q = s     | sphere-like if p >= 1, hyperbolic if q >= 1 |
//! | timelike   | `1..=n`, q = s - 1   | sphere-like if p >= 1, hyperbolic if q >= 1 |
//! | null       | `2..=n`, q = s - 1   | parabolic only, needs `1 <= s <= n`         |
//!
//! The timelike axis is always `e_{n+1}`; rotating the profile plane from
//! `(e_1, e_{n+1})` to `(e_n, e_{n+1})` is an ambient isometry, so one generator
//! covers both profile forms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypersurface::{induced_metric, sample_points, HypersurfaceError, ImmersionSpec, ChartMap, DEFAULT_MARGIN};
use crate::pipeline::ProfileIntegral;
use crate::pseudolinalg::{inner, Signature};
use crate::scalarjet::{Jet, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationalError {
    #[error("{orbit:?} orbit is not admissible for a {axis:?} axis in signature ({dim}, {index})")]
    Inadmissible {
        axis: AxisType,
        orbit: OrbitForm,
        dim: usize,
        index: usize,
    },
    #[error(transparent)]
    Geometry(#[from] HypersurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisType {
    Spacelike,
    Timelike,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitForm {
    Sphere,
    Hyperbolic,
    Parabolic,
}

/// A profile function of `t`: either a DSL expression or a quadrature-defined primitive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Expr(ScalarField),
    Integral(Box<ProfileIntegral>),
}

impl From<ScalarField> for Profile {
    fn from(f: ScalarField) -> Self {
        Profile::Expr(f)
    }
}

impl Profile {
    pub fn parse(src: &str) -> Result<Self, HypersurfaceError> {
        Ok(Profile::Expr(ScalarField::parse_t(src)?))
    }

    /// Composes the profile with a jet for `t` (over any number of variables).
    pub fn compose(&self, t: &Jet) -> Result<Jet, HypersurfaceError> {
        match self {
            Profile::Expr(f) => Ok(f.eval_with(std::slice::from_ref(t))?),
            Profile::Integral(p) => Ok(t.compose(&p.derivatives(t.value(), t.order())?)),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64, HypersurfaceError> {
        Ok(self.compose(&Jet::variable(1, 0, 0, t))?.value())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationalSpec {
    pub axis_type: AxisType,
    pub orbit_form: OrbitForm,
    pub f1: Profile,
    pub f2: Profile,
    pub sig: Signature,
    /// Hypersurface dimension; the ambient space is `E^{n+1}_s`.
    pub n: usize,
}

/// Quadratic-form signature of the orbit slots.
fn slot_signature(axis: AxisType, sig: Signature) -> Option<Signature> {
    let n = sig.dim().checked_sub(1).filter(|&n| n >= 2)?;
    let s = sig.index();
    match axis {
        AxisType::Spacelike if s <= n => Signature::new(n, s).ok(),
        AxisType::Timelike if s >= 1 => Signature::new(n, s - 1).ok(),
        AxisType::Null if s >= 1 && s <= n => Signature::new(n - 1, s - 1).ok(),
        _ => None,
    }
}

fn admissible(axis: AxisType, orbit: OrbitForm, sig: Signature) -> Option<Signature> {
    let slots = slot_signature(axis, sig)?;
    let p = slots.dim() - slots.index();
    let q = slots.index();
    let ok = match (axis, orbit) {
        (AxisType::Null, OrbitForm::Parabolic) => true,
        (AxisType::Null, _) | (_, OrbitForm::Parabolic) => false,
        (_, OrbitForm::Sphere) => p >= 1,
        (_, OrbitForm::Hyperbolic) => q >= 1,
    };
    ok.then_some(slots)
}

/// Unit sphere chart `S^k` in `k + 1` slots from `k` angle jets.
fn sphere(angles: &[Jet], one: &Jet) -> Vec<Jet> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut prod = one.clone();
    for a in angles {
        out.push(&prod * &a.cos());
        prod = &prod * &a.sin();
    }
    out.push(prod);
    out
}

/// Orbit point as jets over the chart variables `u`.
///
/// Sphere-like: `sum eps y^2 = 1`; hyperbolic-like: `= -1`; parabolic: the
/// null-cone section `(1 - Q, v, -1 - Q)` with `Q = sum eps v^2 / 4`, whose
/// `slots` describe only the middle coordinates.
pub fn orbit_jets(form: OrbitForm, slots: Signature, u: &[Jet]) -> Vec<Jet> {
    let m = slots.dim();
    let q = slots.index();
    let p = m - q;
    let one = u[0].zeros_like().add_scalar(1.0);
    match form {
        OrbitForm::Parabolic => {
            let mut quad = one.zeros_like();
            for (i, v) in u.iter().enumerate() {
                quad = quad + (v * v).scale(0.25 * slots.eps(i));
            }
            let mut out = vec![-(quad.add_scalar(-1.0))];
            out.extend(u.iter().cloned());
            out.push(-(quad.add_scalar(1.0)));
            out
        }
        OrbitForm::Sphere if q == 0 => sphere(u, &one),
        OrbitForm::Hyperbolic if p == 0 => sphere(u, &one),
        _ => {
            let r = &u[0];
            let ang_p = &u[1..p];
            let ang_q = &u[p..];
            let (a, b) = if form == OrbitForm::Sphere {
                (r.cosh(), r.sinh())
            } else {
                (r.sinh(), r.cosh())
            };
            let mut out: Vec<Jet> = sphere(ang_p, &one).iter().map(|y| &a * y).collect();
            out.extend(sphere(ang_q, &one).iter().map(|y| &b * y));
            out
        }
    }
}

/// Orbit point and its derivatives at a chart point, as jets of the given order.
pub fn orbit_chart(form: OrbitForm, slots: Signature, u: &[f64], order: usize) -> Result<Vec<Jet>, HypersurfaceError> {
    Ok(orbit_jets(form, slots, &Jet::variables(u, order)?))
}

/// Orbit chart dimension for `m` slots.
fn orbit_dim(form: OrbitForm, slots: Signature) -> usize {
    match form {
        OrbitForm::Parabolic => slots.dim(),
        _ => slots.dim() - 1,
    }
}

/// Chart box for the orbit variables, away from the chart's singular loci.
pub fn orbit_domain(form: OrbitForm, slots: Signature) -> Vec<(f64, f64)> {
    let m = slots.dim();
    let q = slots.index();
    let p = m - q;
    let angles = |k: usize| -> Vec<(f64, f64)> {
        (0..k)
            .map(|i| if i + 1 == k { (0.0, 2.0 * PI) } else { (0.3, PI - 0.3) })
            .collect()
    };
    match form {
        OrbitForm::Parabolic => vec![(-1.0, 1.0); m],
        OrbitForm::Sphere if q == 0 => angles(m - 1),
        OrbitForm::Hyperbolic if p == 0 => angles(m - 1),
        _ => {
            // the sinh factor multiplies a sphere of `shrunk` slots
            let shrunk = if form == OrbitForm::Sphere { q } else { p };
            let r = if shrunk >= 2 { (0.2, 1.5) } else { (-1.0, 1.0) };
            let mut d = vec![r];
            d.extend(angles(p - 1));
            d.extend(angles(q - 1));
            d
        }
    }
}

impl RotationalSpec {
    pub fn new(
        axis_type: AxisType,
        orbit_form: OrbitForm,
        f1: Profile,
        f2: Profile,
        sig: Signature,
    ) -> Result<Self, RotationalError> {
        let spec = Self {
            axis_type,
            orbit_form,
            f1,
            f2,
            sig,
            n: sig.dim().saturating_sub(1),
        };
        spec.slots()?;
        Ok(spec)
    }

    /// Signature of the orbit slots, or `Inadmissible`.
    pub fn slots(&self) -> Result<Signature, RotationalError> {
        admissible(self.axis_type, self.orbit_form, self.sig).ok_or(RotationalError::Inadmissible {
            axis: self.axis_type,
            orbit: self.orbit_form,
            dim: self.sig.dim(),
            index: self.sig.index(),
        })
    }

    pub fn var_names(&self) -> Vec<String> {
        let mut v = vec!["t".to_string()];
        if self.n == 2 {
            v.push("u".into());
        } else {
            v.extend((1..self.n).map(|i| format!("u{i}")));
        }
        v
    }

    /// Default chart box: `t` in `t_range`, orbit variables per [`orbit_domain`].
    pub fn domain(&self, t_range: (f64, f64)) -> Result<Vec<(f64, f64)>, RotationalError> {
        let mut d = vec![t_range];
        d.extend(orbit_domain(self.orbit_form, self.slots()?));
        Ok(d)
    }

    pub fn jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>, HypersurfaceError> {
        let slots = self
            .slots()
            .map_err(|e| HypersurfaceError::Shape(e.to_string()))?;
        if orbit_dim(self.orbit_form, slots) + 1 != p.len() {
            return Err(HypersurfaceError::Shape(format!(
                "rotational chart has {} variables, point has {}",
                orbit_dim(self.orbit_form, slots) + 1,
                p.len()
            )));
        }
        let vars = Jet::variables(p, order)?;
        let a = self.f1.compose(&vars[0])?;
        let b = self.f2.compose(&vars[0])?;
        let y = orbit_jets(self.orbit_form, slots, &vars[1..]);
        Ok(match self.axis_type {
            AxisType::Spacelike => std::iter::once(a).chain(y.iter().map(|yi| &b * yi)).collect(),
            AxisType::Timelike => y.iter().map(|yi| &a * yi).chain(std::iter::once(b)).collect(),
            AxisType::Null => {
                // f1 n_1 + f2 w, n_1 = (1, 0, ..., 0, 1)
                let last = y.len() - 1;
                y.iter()
                    .enumerate()
                    .map(|(i, yi)| {
                        let v = &b * yi;
                        if i == 0 || i == last {
                            v + a.clone()
                        } else {
                            v
                        }
                    })
                    .collect()
            }
        })
    }

    pub fn into_immersion(self, t_range: (f64, f64)) -> Result<ImmersionSpec, RotationalError> {
        let domain = self.domain(t_range)?;
        let spec = ImmersionSpec {
            sig: self.sig,
            domain,
            map: ChartMap::Rotational(self),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Samples used to reject degenerate generators.
const CHECK_SAMPLES: usize = 16;

fn generate(spec: RotationalSpec, t_range: (f64, f64)) -> Result<ImmersionSpec, RotationalError> {
    let imm = spec.into_immersion(t_range)?;
    for p in sample_points(&imm.domain, CHECK_SAMPLES, 0, DEFAULT_MARGIN) {
        induced_metric(&imm, &p)?;
    }
    Ok(imm)
}

/// Case 1: `(f1(t), f2(t) y(u))`, axis `e_1`.
pub fn generate_case1(
    f1: Profile,
    f2: Profile,
    orbit_form: OrbitForm,
    sig: Signature,
    t_range: (f64, f64),
) -> Result<ImmersionSpec, RotationalError> {
    generate(RotationalSpec::new(AxisType::Spacelike, orbit_form, f1, f2, sig)?, t_range)
}

/// Case 2: `(f1(t) y(u), f2(t))`, axis `e_{n+1}`.
pub fn generate_case2(
    f1: Profile,
    f2: Profile,
    orbit_form: OrbitForm,
    sig: Signature,
    t_range: (f64, f64),
) -> Result<ImmersionSpec, RotationalError> {
    generate(RotationalSpec::new(AxisType::Timelike, orbit_form, f1, f2, sig)?, t_range)
}

/// Case 3: `f1(t) n_1 + f2(t) w(v)`, null axis `n_1 = (1, 0, ..., 0, 1)`.
pub fn generate_case3(
    f1: Profile,
    f2: Profile,
    sig: Signature,
    t_range: (f64, f64),
) -> Result<ImmersionSpec, RotationalError> {
    generate(
        RotationalSpec::new(AxisType::Null, OrbitForm::Parabolic, f1, f2, sig)?,
        t_range,
    )
}

/// Axis invariants of a point: `(a, b)` with `a`, `b` functions of `t` only on the
/// rotational family, and their predicted values from the profiles.
fn invariants(spec: &RotationalSpec, x: &[f64]) -> Result<[f64; 2], HypersurfaceError> {
    let sig = spec.sig;
    let m = x.len();
    Ok(match spec.axis_type {
        AxisType::Spacelike => {
            let rest: f64 = (1..m).map(|i| sig.eps(i) * x[i] * x[i]).sum();
            [x[0], rest]
        }
        AxisType::Timelike => {
            let rest: f64 = (0..m - 1).map(|i| sig.eps(i) * x[i] * x[i]).sum();
            [x[m - 1], rest]
        }
        AxisType::Null => {
            let mut n1 = vec![0.0; m];
            n1[0] = 1.0;
            n1[m - 1] = 1.0;
            [inner(x, &n1, sig)?, inner(x, x, sig)?]
        }
    })
}

fn predicted(spec: &RotationalSpec, t: f64) -> Result<[f64; 2], HypersurfaceError> {
    let a = spec.f1.value(t)?;
    let b = spec.f2.value(t)?;
    let len = match spec.orbit_form {
        OrbitForm::Sphere => 1.0,
        OrbitForm::Hyperbolic => -1.0,
        OrbitForm::Parabolic => 0.0,
    };
    Ok(match spec.axis_type {
        AxisType::Spacelike => [a, len * b * b],
        AxisType::Timelike => [b, len * a * a],
        AxisType::Null => [2.0 * b, 4.0 * a * b],
    })
}

/// Largest relative deviation from membership in `spec`'s rotational family.
///
/// At each sample `(t, u)` the axis invariants must match those at `(t, u')`
/// (with `u'` taken from the next sample) and the values predicted by the profiles.
/// Evaluation failures count as infinite residual.
pub fn rotational_diagnostic(imm: &ImmersionSpec, spec: &RotationalSpec, samples: &[Vec<f64>]) -> f64 {
    let k = samples.len();
    let mut worst = 0.0f64;
    for (i, s) in samples.iter().enumerate() {
        let mut other = samples[(i + 1) % k].clone();
        other[0] = s[0];
        let r = (|| -> Result<f64, HypersurfaceError> {
            let a = invariants(spec, &imm.position(s)?)?;
            let b = invariants(spec, &imm.position(&other)?)?;
            let p = predicted(spec, s[0])?;
            let mut dev = 0.0f64;
            for j in 0..2 {
                let scale = 1f64.max(a[j].abs()).max(p[j].abs());
                dev = dev
                    .max((a[j] - b[j]).abs() / scale)
                    .max((a[j] - p[j]).abs() / scale);
            }
            Ok(dev)
        })();
        worst = worst.max(r.unwrap_or(f64::INFINITY));
    }
    worst
}
