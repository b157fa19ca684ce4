//! Scalar expression language evaluated as truncated Taylor jets (order <= 3).

mod expr;
mod jet;
pub mod quad;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Expr, Func};
pub use jet::{layout, Jet, Layout, MAX_ORDER};
pub use quad::{adaptive_simpson, CumulativeIntegral, QuadError, QUAD_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("jet order {0} exceeds the supported maximum of 3")]
    OrderUnsupported(usize),
    #[error("expected {expected} coordinates, got {got}")]
    PointArity { expected: usize, got: usize },
}

/// A parsed scalar function of named variables.
#[derive(Clone, PartialEq)]
pub struct ScalarField {
    vars: Arc<[String]>,
    ast: Expr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({self})")
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        expr::Printer {
            expr: &self.ast,
            vars: &self.vars,
        }
        .fmt(f)
    }
}

impl ScalarField {
    pub fn parse<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<Self, ParseError> {
        let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let ast = expr::parse_expr(src, &vars)?;
        Ok(Self {
            vars: vars.into(),
            ast,
        })
    }

    /// A function of the single variable `t`.
    pub fn parse_t(src: &str) -> Result<Self, ParseError> {
        Self::parse(src, &["t"])
    }

    pub fn from_ast(ast: Expr, vars: &[String]) -> Self {
        Self {
            vars: vars.to_vec().into(),
            ast,
        }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Replaces variable `name` by a literal and drops it from the variable list.
    pub fn substitute(&self, name: &str, value: f64) -> ScalarField {
        let Some(k) = self.vars.iter().position(|v| v == name) else {
            return self.clone();
        };
        let ast = self.ast.map_vars(&|i| match i.cmp(&k) {
            std::cmp::Ordering::Equal => Expr::Lit(value),
            std::cmp::Ordering::Less => Expr::Var(i),
            std::cmp::Ordering::Greater => Expr::Var(i - 1),
        });
        let vars: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, v)| v.clone())
            .collect();
        ScalarField {
            vars: vars.into(),
            ast,
        }
    }

    fn check_arity(&self, n: usize) -> Result<(), JetError> {
        if n != self.vars.len() {
            return Err(JetError::PointArity {
                expected: self.vars.len(),
                got: n,
            });
        }
        Ok(())
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64, JetError> {
        self.check_arity(point.len())?;
        eval_f64(&self.ast, point)
    }

    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet, JetError> {
        self.check_arity(point.len())?;
        let vars = Jet::variables(point, order)?;
        self.eval_with(&vars)
    }

    /// Evaluates with caller-supplied jets for the variables (composition).
    pub fn eval_with(&self, vars: &[Jet]) -> Result<Jet, JetError> {
        self.check_arity(vars.len())?;
        let (nvars, order) = vars
            .first()
            .map(|j| (j.nvars(), j.order()))
            .unwrap_or((0, MAX_ORDER));
        eval_jet(&self.ast, vars, nvars, order)
    }
}

fn eval_f64(e: &Expr, p: &[f64]) -> Result<f64, JetError> {
    Ok(match e {
        Expr::Lit(x) => *x,
        Expr::Var(i) => p[*i],
        Expr::Neg(a) => -eval_f64(a, p)?,
        Expr::Add(a, b) => eval_f64(a, p)? + eval_f64(b, p)?,
        Expr::Sub(a, b) => eval_f64(a, p)? - eval_f64(b, p)?,
        Expr::Mul(a, b) => eval_f64(a, p)? * eval_f64(b, p)?,
        Expr::Div(a, b) => {
            let d = eval_f64(b, p)?;
            if d == 0.0 {
                return Err(JetError::DivisionByZero);
            }
            eval_f64(a, p)? / d
        }
        Expr::Pow(a, k) => {
            let x = eval_f64(a, p)?;
            if x == 0.0 && *k < 0 {
                return Err(JetError::DivisionByZero);
            }
            x.powi(*k)
        }
        Expr::Call(f, a) => {
            let x = eval_f64(a, p)?;
            let dom = |func| JetError::Domain { func, value: x };
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Ln if x <= 0.0 => return Err(dom("ln")),
                Func::Ln => x.ln(),
                Func::Sqrt if x < 0.0 => return Err(dom("sqrt")),
                Func::Sqrt => x.sqrt(),
                Func::Atan => x.atan(),
                Func::Atanh if x.abs() >= 1.0 => return Err(dom("atanh")),
                Func::Atanh => x.atanh(),
            }
        }
    })
}

fn eval_jet(e: &Expr, vars: &[Jet], nvars: usize, order: usize) -> Result<Jet, JetError> {
    let rec = |a: &Expr| eval_jet(a, vars, nvars, order);
    Ok(match e {
        Expr::Lit(x) => Jet::constant(nvars, order, *x),
        Expr::Var(i) => vars[*i].clone(),
        Expr::Neg(a) => -rec(a)?,
        Expr::Add(a, b) => rec(a)? + rec(b)?,
        Expr::Sub(a, b) => rec(a)? - rec(b)?,
        Expr::Mul(a, b) => rec(a)? * rec(b)?,
        Expr::Div(a, b) => rec(a)?.div(&rec(b)?)?,
        Expr::Pow(a, k) => rec(a)?.powi(*k)?,
        Expr::Call(f, a) => {
            let x = rec(a)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan()?,
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln()?,
                Func::Sqrt => x.sqrt()?,
                Func::Atan => x.atan(),
                Func::Atanh => x.atanh()?,
            }
        }
    })
}

/// Serialized form: the expression source text. Variables are fixed by context,
/// so serde only supports univariate fields in `t` directly.
impl Serialize for ScalarField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        ScalarField::parse_t(&src).map_err(serde::de::Error::custom)
    }
}
