use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use super::JetError;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 3;

/// Monomial layout shared by all jets with the same variable count and order.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: usize,
    monos: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)` with `mono_i * mono_j = mono_k`.
    products: Vec<(u32, u32, u32)>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            push_degree(&mut monos, &mut cur, 0, deg);
        }
        let lookup: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                let deg: usize = a.iter().chain(b.iter()).map(|&x| x as usize).sum();
                if deg > order {
                    continue;
                }
                let c: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, lookup[&c] as u32));
            }
        }
        Layout {
            nvars,
            order,
            monos,
            lookup,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monos
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).copied()
    }
}

// Monomials of one degree in lexicographic order on exponents, first variable highest.
fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut [u8], var: usize, remaining: usize) {
    if var + 1 == cur.len() {
        cur[var] = remaining as u8;
        out.push(cur.to_vec());
        cur[var] = 0;
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_degree(out, cur, var + 1, remaining - k);
    }
    cur[var] = 0;
}

pub fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("layout cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

/// Truncated multivariate Taylor polynomial.
///
/// Coefficients are stored in Taylor form, so the partial derivative for
/// multi-index `a` is `a! * coeff(a)`.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn check_order(order: usize) -> Result<(), JetError> {
    if order > MAX_ORDER {
        Err(JetError::OrderUnsupported(order))
    } else {
        Ok(())
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        let layout = layout(nvars, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// The jet of the coordinate function `x_var` at `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            let mut e = vec![0u8; nvars];
            e[var] = 1;
            let idx = j.layout.index_of(&e).expect("first-order monomial");
            j.coeffs[idx] = 1.0;
        }
        j
    }

    /// Variable jets for every coordinate of `point`.
    pub fn variables(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        check_order(order)?;
        Ok(point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(point.len(), order, i, x))
            .collect())
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Jet {
        let layout = layout(nvars, order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient count");
        Jet { layout, coeffs }
    }

    pub fn zeros_like(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the monomial with exponents `exps`.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.layout
            .index_of(exps)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    /// Partial derivative along the listed variables, e.g. `&[0, 0, 1]` is `d^3/dx0^2 dx1`.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        if vars.len() > self.order() {
            return 0.0;
        }
        let mut exps = vec![0u8; self.nvars()];
        for &v in vars {
            exps[v] += 1;
        }
        let fact: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        fact * self.coeff(&exps)
    }

    /// Gradient (first partials).
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars()).map(|i| self.partial(&[i])).collect()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.nvars(), order);
        // Lower-order monomials are a prefix of the layout (sorted by degree).
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Derivative along `var`, one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "derivative of an order-0 jet");
        let target = layout(self.nvars(), self.order() - 1);
        let mut coeffs = vec![0.0; target.len()];
        for (k, m) in target.monos.iter().enumerate() {
            let mut up = m.clone();
            up[var] += 1;
            if let Some(i) = self.layout.index_of(&up) {
                coeffs[k] = up[var] as f64 * self.coeffs[i];
            }
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    /// Re-expresses this jet over `nvars` variables, sending variable `i` to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Jet {
        assert_eq!(map.len(), self.nvars());
        let target = layout(nvars, self.order());
        let mut coeffs = vec![0.0; target.len()];
        for (i, m) in self.layout.monos.iter().enumerate() {
            let mut e = vec![0u8; nvars];
            for (v, &x) in m.iter().enumerate() {
                e[map[v]] += x;
            }
            coeffs[target.index_of(&e).expect("embedded monomial")] += self.coeffs[i];
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    /// Keeps only the dependence on `keep` (other variables frozen at the expansion point).
    pub fn restrict(&self, keep: &[usize]) -> Jet {
        let target = layout(keep.len(), self.order());
        let mut coeffs = vec![0.0; target.len()];
        for (i, m) in self.layout.monos.iter().enumerate() {
            let dropped: usize = m
                .iter()
                .enumerate()
                .filter(|(v, _)| !keep.contains(v))
                .map(|(_, &x)| x as usize)
                .sum();
            if dropped > 0 {
                continue;
            }
            let e: Vec<u8> = keep.iter().map(|&v| m[v]).collect();
            coeffs[target.index_of(&e).expect("restricted monomial")] = self.coeffs[i];
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    fn aligned<'a>(&'a self, other: &'a Jet) -> (std::borrow::Cow<'a, Jet>, std::borrow::Cow<'a, Jet>) {
        use std::borrow::Cow;
        assert_eq!(self.nvars(), other.nvars(), "jets over different variable sets");
        match self.order().cmp(&other.order()) {
            std::cmp::Ordering::Equal => (Cow::Borrowed(self), Cow::Borrowed(other)),
            std::cmp::Ordering::Less => (Cow::Borrowed(self), Cow::Owned(other.truncate(self.order()))),
            std::cmp::Ordering::Greater => (Cow::Owned(self.truncate(other.order())), Cow::Borrowed(other)),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `g(self)` given `derivs[k] = g^(k)(self.value())` for `k <= order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        // Horner in h with Taylor weights g^(k)/k!.
        let mut acc = Jet::constant(self.nvars(), order, derivs[order] / factorial(order));
        for k in (0..order).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += derivs[k] / factorial(k);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.compose(&[1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a)]))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self * &other.recip()?)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn tan(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a.cos().abs() < 1e-300 {
            return Err(JetError::Domain { func: "tan", value: a });
        }
        let t = a.tan();
        let s = 1.0 + t * t;
        Ok(self.compose(&[t, s, 2.0 * t * s, 2.0 * s * (1.0 + 3.0 * t * t)]))
    }

    pub fn sinh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&[s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose(&[c, s, c, s])
    }

    pub fn tanh(&self) -> Jet {
        let t = self.value().tanh();
        let s = 1.0 - t * t;
        self.compose(&[t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e, e])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a <= 0.0 {
            return Err(JetError::Domain { func: "ln", value: a });
        }
        Ok(self.compose(&[a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)]))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a < 0.0 || (a == 0.0 && self.order() > 0) {
            return Err(JetError::Domain { func: "sqrt", value: a });
        }
        let r = a.sqrt();
        if self.order() == 0 {
            return Ok(Jet::constant(self.nvars(), 0, r));
        }
        Ok(self.compose(&[
            r,
            0.5 / r,
            -0.25 / (a * r),
            0.375 / (a * a * r),
        ]))
    }

    pub fn atan(&self) -> Jet {
        let a = self.value();
        let q = 1.0 + a * a;
        self.compose(&[
            a.atan(),
            1.0 / q,
            -2.0 * a / (q * q),
            (6.0 * a * a - 2.0) / (q * q * q),
        ])
    }

    pub fn atanh(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a.abs() >= 1.0 {
            return Err(JetError::Domain { func: "atanh", value: a });
        }
        let q = 1.0 - a * a;
        Ok(self.compose(&[
            a.atanh(),
            1.0 / q,
            2.0 * a / (q * q),
            (2.0 + 6.0 * a * a) / (q * q * q),
        ]))
    }

    pub fn powi(&self, k: i32) -> Result<Jet, JetError> {
        let a = self.value();
        if k < 0 && a == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (j, d) in derivs.iter_mut().enumerate().take(self.order() + 1) {
            if j > 0 {
                coef *= (k - (j as i32 - 1)) as f64;
            }
            *d = if coef == 0.0 { 0.0 } else { coef * a.powi(k - j as i32) };
        }
        Ok(self.compose(&derivs))
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (a, b) = self.aligned(rhs);
        Jet {
            layout: a.layout.clone(),
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let (a, b) = self.aligned(rhs);
        Jet {
            layout: a.layout.clone(),
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (a, b) = self.aligned(rhs);
        let mut coeffs = vec![0.0; a.coeffs.len()];
        for &(i, j, k) in &a.layout.products {
            coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
        Jet {
            layout: a.layout.clone(),
            coeffs,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn layout_counts() {
        // C(n + k, k) monomials
        assert_eq!(layout(1, 3).len(), 4);
        assert_eq!(layout(2, 2).len(), 6);
        assert_eq!(layout(3, 3).len(), 20);
        assert_eq!(layout(4, 3).len(), 35);
        assert_eq!(layout(0, 3).len(), 1);
    }

    #[test]
    fn constant_times_any_doubles() {
        let x = Jet::variable(2, 3, 0, 0.7);
        let y = Jet::variable(2, 3, 1, -0.3);
        let f = (&x * &y).sin() + x.exp();
        let two = Jet::constant(2, 3, 2.0);
        let g = &two * &f;
        for (a, b) in g.coeffs().iter().zip(f.coeffs()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn square_of_t() {
        let t = Jet::variable(1, 2, 0, 1.0);
        let sq = &t * &t;
        assert_eq!([sq.partial(&[]), sq.partial(&[0]), sq.partial(&[0, 0])], [1.0, 2.0, 2.0]);
    }

    #[test]
    fn sin_of_t_squared_at_zero() {
        // sin(t^2) = t^2 + O(t^6)
        let t = Jet::variable(1, 3, 0, 0.0);
        let f = (&t * &t).sin();
        assert_eq!(f.partial(&[]), 0.0);
        assert_eq!(f.partial(&[0]), 0.0);
        assert_eq!(f.partial(&[0, 0]), 2.0);
        assert_eq!(f.partial(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::variable(2, 3, 0, 0.4);
        let y = Jet::variable(2, 3, 1, 1.1);
        let f = &(&x * &x) * &y;
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        // d/dx (x^2 y) = 2xy ; d^2/dxdy = 2x
        assert!(close(fx.value(), 2.0 * 0.4 * 1.1, 1e-15));
        assert!(close(fx.partial(&[1]), 0.8, 1e-15));
    }

    #[test]
    fn embed_and_restrict() {
        let t = Jet::variable(1, 3, 0, 0.5);
        let f = t.exp();
        let e = f.embed(3, &[1]);
        assert!(close(e.partial(&[1, 1, 1]), 0.5f64.exp(), 1e-14));
        assert_eq!(e.partial(&[0]), 0.0);
        let r = e.restrict(&[1]);
        assert_eq!(r.coeffs(), f.coeffs());
    }

    #[test]
    fn domain_errors() {
        let z = Jet::variable(1, 2, 0, 0.0);
        assert!(matches!(z.ln(), Err(JetError::Domain { .. })));
        assert!(matches!(z.sqrt(), Err(JetError::Domain { .. })));
        assert_eq!(z.recip().unwrap_err(), JetError::DivisionByZero);
        assert!(Jet::variable(1, 2, 0, 1.0).atanh().is_err());
        assert!(z.powi(-1).is_err());
        assert_eq!(Jet::variables(&[1.0], 4).unwrap_err(), JetError::OrderUnsupported(4));
    }

    #[test]
    fn powi_at_zero_base() {
        let z = Jet::variable(1, 3, 0, 0.0);
        let p = z.powi(2).unwrap();
        assert_eq!([p.partial(&[]), p.partial(&[0]), p.partial(&[0, 0]), p.partial(&[0, 0, 0])], [0., 0., 2., 0.]);
    }
}
