//! Shape-operator data `(lambda, mu, theta, alpha)` as jets in `t`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::scalarjet::{CumulativeIntegral, Jet, JetError, QuadError, ScalarField, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subcase {
    S21,
    S22a,
    S22b,
    S22c,
}

impl Subcase {
    /// Sign of `<xi, xi>` in this subcase.
    pub fn eps(self) -> f64 {
        if self == Subcase::S21 {
            1.0
        } else {
            -1.0
        }
    }

    /// Expected `(<psi,psi>, <phi,phi>)`.
    pub fn psi_phi_lengths(self) -> (f64, f64) {
        match self {
            Subcase::S21 => (1.0, 1.0),
            Subcase::S22a => (0.0, 0.0),
            Subcase::S22b => (1.0, -1.0),
            Subcase::S22c => (-1.0, 1.0),
        }
    }
}

/// `(f, f', f'')` at `t`, where `f'` and `f''` carry one and two orders less than `f`.
fn warp(f: &ScalarField, t: f64, order: usize) -> Result<(Jet, Jet, Option<Jet>), JetError> {
    let o = order.min(MAX_ORDER);
    let f0 = f.eval_jet(&[t], o)?;
    let fp = f0.derivative(0);
    let fpp = (o >= 2).then(|| fp.derivative(0));
    Ok((f0, fp, fpp))
}

/// Jets in `t` of `lambda` (order `order <= 2`) and `mu` (order `min(order, 1)`).
///
/// `lambda = sqrt(eps (c - f'^2) / f^2)` except in `S22a`, where `lambda = f'/f`
/// keeps its sign so that `alpha (E_1 + xi)` is parallel.
pub fn lambda_mu(f: &ScalarField, c: f64, subcase: Subcase, t: f64, order: usize) -> Result<(Jet, Jet), JetError> {
    let (f0, fp, fpp) = warp(f, t, order + 2)?;
    let fpp = fpp.expect("order >= 2");
    let eps = subcase.eps();
    let lambda = if subcase == Subcase::S22a {
        fp.div(&f0)?
    } else {
        let q = (&fp * &fp).scale(-1.0).add_scalar(c).div(&(&f0 * &f0))?;
        q.scale(eps).sqrt()?
    };
    let mu = if subcase == Subcase::S22a {
        fpp.div(&fp)?
    } else {
        -(fpp.div(&(&f0 * &lambda).scale(eps))?)
    };
    Ok((lambda.truncate(order), mu))
}

/// `theta` as a jet of order `order <= 2`. Undefined in `S22a`.
pub fn theta(f: &ScalarField, c: f64, subcase: Subcase, t: f64, order: usize) -> Result<Jet, JetError> {
    let (f0, fp, _) = warp(f, t, order + 1)?;
    let (lambda, _) = lambda_mu(f, c, subcase, t, order)?;
    let ratio = fp.div(&(&f0 * &lambda))?;
    match subcase {
        Subcase::S21 => Ok(ratio.atan()),
        Subcase::S22b => ratio.atanh(),
        Subcase::S22c => ratio.recip()?.atanh(),
        Subcase::S22a => Err(JetError::Domain {
            func: "theta",
            value: ratio.value(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    Cos,
    Sin,
    Cosh,
    Sinh,
    Alpha,
    InvAlpha,
}

/// A profile function `anchor + factor * int_{t0}^t g(s) ds`, where `g` is a
/// function of `theta` or `alpha` built from the warping data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileIntegral {
    pub f: ScalarField,
    pub c: f64,
    pub subcase: Subcase,
    pub integrand: Integrand,
    pub factor: f64,
    pub anchor: f64,
    /// Quadrature runs from `interval.0`; `interval.1` bounds the node table.
    pub interval: (f64, f64),
    #[serde(skip)]
    tables: OnceLock<Result<Tables, QuadError>>,
}

#[derive(Debug, Clone)]
struct Tables {
    log_alpha: Option<CumulativeIntegral>,
    main: CumulativeIntegral,
}

const SEGMENTS: usize = 64;

impl ProfileIntegral {
    pub fn new(
        f: ScalarField,
        c: f64,
        subcase: Subcase,
        integrand: Integrand,
        factor: f64,
        anchor: f64,
        interval: (f64, f64),
    ) -> Self {
        Self {
            f,
            c,
            subcase,
            integrand,
            factor,
            anchor,
            interval,
            tables: OnceLock::new(),
        }
    }

    fn uses_alpha(&self) -> bool {
        matches!(self.integrand, Integrand::Alpha | Integrand::InvAlpha)
    }

    fn mu_value(&self, s: f64) -> Result<f64, JetError> {
        Ok(lambda_mu(&self.f, self.c, self.subcase, s, 0)?.1.value())
    }

    fn tables(&self) -> Result<&Tables, QuadError> {
        self.tables
            .get_or_init(|| {
                let (t0, t1) = self.interval;
                let log_alpha = if self.uses_alpha() {
                    Some(CumulativeIntegral::build(&|s| self.mu_value(s), t0, t1, SEGMENTS)?)
                } else {
                    None
                };
                let partial = Tables {
                    log_alpha,
                    main: CumulativeIntegral::build(&|_| Ok(0.0), t0, t1, 1)?,
                };
                let main = CumulativeIntegral::build(&|s| Self::g_value(self, &partial, s), t0, t1, SEGMENTS)?;
                Ok(Tables { main, ..partial })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn log_alpha_value(&self, tables: &Tables, s: f64) -> Result<f64, JetError> {
        let table = tables.log_alpha.as_ref().expect("alpha table");
        table.eval(&|x| self.mu_value(x), s).map_err(|e| match e {
            QuadError::Integrand(j) => j,
            other => JetError::Domain {
                func: "alpha",
                value: match other {
                    QuadError::NonFinite(x) => x,
                    _ => s,
                },
            },
        })
    }

    /// `alpha = exp(int_{t0}^t mu)` as a jet of order `order <= 2`.
    fn alpha_jet(&self, tables: &Tables, s: f64, order: usize) -> Result<Jet, JetError> {
        let la = self.log_alpha_value(tables, s)?;
        let mut derivs = vec![la];
        if order > 0 {
            let (_, mu) = lambda_mu(&self.f, self.c, self.subcase, s, order - 1)?;
            for k in 0..order {
                derivs.push(mu.partial(&vec![0; k]));
            }
        }
        Ok(Jet::variable(1, order, 0, s).compose(&derivs).exp())
    }

    fn g_jet(&self, tables: &Tables, s: f64, order: usize) -> Result<Jet, JetError> {
        Ok(match self.integrand {
            Integrand::Cos => theta(&self.f, self.c, self.subcase, s, order)?.cos(),
            Integrand::Sin => theta(&self.f, self.c, self.subcase, s, order)?.sin(),
            Integrand::Cosh => theta(&self.f, self.c, self.subcase, s, order)?.cosh(),
            Integrand::Sinh => theta(&self.f, self.c, self.subcase, s, order)?.sinh(),
            Integrand::Alpha => self.alpha_jet(tables, s, order)?,
            Integrand::InvAlpha => self.alpha_jet(tables, s, order)?.recip()?,
        })
    }

    fn g_value(&self, tables: &Tables, s: f64) -> Result<f64, JetError> {
        Ok(self.g_jet(tables, s, 0)?.value())
    }

    /// `(P, P', ..., P^(order))` at `t`, `order <= 3`.
    pub fn derivatives(&self, t: f64, order: usize) -> Result<Vec<f64>, QuadError> {
        let tables = self.tables()?;
        let integral = tables.main.eval(&|s| self.g_value(tables, s), t)?;
        let mut out = vec![self.anchor + self.factor * integral];
        if order > 0 {
            let g = self.g_jet(tables, t, order - 1)?;
            for k in 0..order {
                out.push(self.factor * g.partial(&vec![0; k]));
            }
        }
        Ok(out)
    }

    /// The integrand `g(t)` itself (not scaled by `factor`).
    pub fn integrand_value(&self, t: f64) -> Result<f64, QuadError> {
        let tables = self.tables()?;
        Ok(self.g_value(tables, t)?)
    }

    /// `alpha(t)` with `alpha(t0) = 1`; only for `S22a` integrands.
    pub fn alpha(&self, t: f64) -> Result<f64, QuadError> {
        let tables = self.tables()?;
        if tables.log_alpha.is_none() {
            return Err(QuadError::Integrand(JetError::Domain { func: "alpha", value: t }));
        }
        Ok(self.alpha_jet(tables, t, 0)?.value())
    }
}

/// `alpha = exp(int_{t0}^t mu)` by quadrature, with `alpha(t0) = 1`.
pub fn alpha(f: &ScalarField, c: f64, t0: f64, t: f64) -> Result<f64, QuadError> {
    let mu = |s| Ok(lambda_mu(f, c, Subcase::S22a, s, 0)?.1.value());
    Ok(crate::scalarjet::adaptive_simpson(mu, t0, t, crate::scalarjet::QUAD_TOL)?.exp())
}
