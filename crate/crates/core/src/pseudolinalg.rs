//! Linear algebra for indefinite (pseudo-Euclidean) inner products.
//!
//! The ambient space `E^{m}_s` carries the metric `diag(+1, ..., +1, -1, ..., -1)`
//! with the `s` minus signs in the last coordinates. Every other module takes
//! its signs from [`Signature::eps`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used for rank and singularity decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no causal character")]
    ZeroVector,
    #[error("tangent vectors are rank deficient")]
    RankDeficient,
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,
    #[error("invalid signature: index {index} exceeds dimension {dim}")]
    InvalidSignature { dim: usize, index: usize },
}

/// Dimension and index of a pseudo-Euclidean metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Signature {
    dim: usize,
    index: usize,
}

impl Signature {
    pub fn new(dim: usize, index: usize) -> Result<Self, LinalgError> {
        if dim == 0 || index > dim {
            return Err(LinalgError::InvalidSignature { dim, index });
        }
        Ok(Self { dim, index })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { dim, index: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Sign of the `i`-th basis vector (0-based).
    #[inline]
    pub fn eps(&self, i: usize) -> f64 {
        if i < self.dim - self.index {
            1.0
        } else {
            -1.0
        }
    }

    pub fn signs(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.eps(i)).collect()
    }

    fn check(&self, len: usize) -> Result<(), LinalgError> {
        if len != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }
}

impl TryFrom<[usize; 2]> for Signature {
    type Error = LinalgError;
    fn try_from(v: [usize; 2]) -> Result<Self, Self::Error> {
        Signature::new(v[0], v[1])
    }
}

impl From<Signature> for [usize; 2] {
    fn from(s: Signature) -> Self {
        [s.dim, s.index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Null,
}

pub fn inner(u: &[f64], v: &[f64], sig: Signature) -> Result<f64, LinalgError> {
    sig.check(u.len())?;
    sig.check(v.len())?;
    Ok(u
        .iter()
        .zip(v)
        .enumerate()
        .map(|(i, (a, b))| sig.eps(i) * a * b)
        .sum())
}

pub fn causal_character(
    v: &[f64],
    sig: Signature,
    tol: f64,
) -> Result<CausalCharacter, LinalgError> {
    let q = inner(v, v, sig)?;
    if v.iter().all(|x| x.abs() <= tol) {
        return Err(LinalgError::ZeroVector);
    }
    Ok(if q.abs() <= tol {
        CausalCharacter::Null
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    })
}

pub fn gram(vectors: &[Vec<f64>], sig: Signature) -> Result<DMatrix<f64>, LinalgError> {
    let k = vectors.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let x = inner(&vectors[i], &vectors[j], sig)?;
            g[(i, j)] = x;
            g[(j, i)] = x;
        }
    }
    Ok(g)
}

/// Generalized cross product: the vector `N` with `<N, w> = det(t_1, ..., t_n, w)`
/// for every `w`.
///
/// The orientation is fixed by the determinant and never chosen by the caller.
pub fn normal_cofactor(tangents: &[Vec<f64>], sig: Signature) -> Result<Vec<f64>, LinalgError> {
    let m = sig.dim();
    if tangents.len() + 1 != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m - 1,
            got: tangents.len(),
        });
    }
    for t in tangents {
        sig.check(t.len())?;
    }
    // Linear independence is a Euclidean question; null hyperplanes are
    // reported downstream when the normal is normalized.
    let euclid = gram(tangents, Signature::euclidean(m))?;
    let scale = euclid.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || euclid.determinant().abs() <= RANK_TOL * scale.powi(tangents.len() as i32) {
        return Err(LinalgError::RankDeficient);
    }
    let n = m - 1;
    let mut out = vec![0.0; m];
    for (col, slot) in out.iter_mut().enumerate() {
        let minor = DMatrix::from_fn(n, n, |r, c| {
            let cc = if c < col { c } else { c + 1 };
            tangents[r][cc]
        });
        let sign = if (n + col).is_multiple_of(2) { 1.0 } else { -1.0 };
        *slot = sig.eps(col) * sign * minor.determinant();
    }
    Ok(out)
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `A x = b` by partially pivoted LU.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let lu = a.clone().lu();
    check_pivots(lu.u().diagonal().iter(), max_abs(a))?;
    lu.solve(b).ok_or(LinalgError::SingularMatrix)
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = a.nrows();
    let lu = a.clone().lu();
    check_pivots(lu.u().diagonal().iter(), max_abs(a))?;
    lu.solve(&DMatrix::identity(n, n))
        .ok_or(LinalgError::SingularMatrix)
}

fn check_pivots<'a>(pivots: impl Iterator<Item = &'a f64>, scale: f64) -> Result<(), LinalgError> {
    if scale == 0.0 {
        return Err(LinalgError::SingularMatrix);
    }
    for p in pivots {
        if p.abs() <= RANK_TOL * scale {
            return Err(LinalgError::SingularMatrix);
        }
    }
    Ok(())
}

/// Eigen-structure of a small real matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Distinct eigenvalues with algebraic multiplicity, sorted by real then imaginary part.
    pub eigenvalues: Vec<(Complex64, usize)>,
    /// True when every eigenvalue is real and geometric equals algebraic multiplicity.
    pub real_diagonalizable: bool,
}

impl Spectrum {
    /// Eigenvalues repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .flat_map(|(z, m)| std::iter::repeat_n(*z, *m))
            .collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |a, (z, _)| a.max(z.im.abs()))
    }
}

/// Eigenvalue clustering tolerance, relative to the matrix scale. A defective
/// eigenvalue of a 2-block is only resolved to about the square root of machine precision.
pub const CLUSTER_TOL: f64 = 1e-6;

pub fn eig_spectrum(a: &DMatrix<f64>) -> Result<Spectrum, LinalgError> {
    let k = a.nrows();
    if k != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: k,
            got: a.ncols(),
        });
    }
    if k == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            real_diagonalizable: true,
        });
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(LinalgError::ConvergenceFailure)?;
    let mut raw: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    raw.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let tol = CLUSTER_TOL * scale.max(1.0);
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in raw {
        match clusters
            .iter_mut()
            .find(|c| (c[0] - z).norm() <= tol)
        {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut eigenvalues: Vec<(Complex64, usize)> = clusters
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<Complex64>() / c.len() as f64;
            let mean = if mean.im.abs() <= tol {
                Complex64::new(mean.re, 0.0)
            } else {
                mean
            };
            (mean, c.len())
        })
        .collect();
    eigenvalues.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));

    let mut real_diagonalizable = true;
    for (z, m) in &eigenvalues {
        if z.im != 0.0 {
            real_diagonalizable = false;
            break;
        }
        let shifted = a - DMatrix::identity(k, k) * z.re;
        let sv = shifted.singular_values();
        let rank = sv.iter().filter(|s| **s > tol).count();
        if rank + m != k {
            real_diagonalizable = false;
            break;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        real_diagonalizable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(d: usize, s: usize) -> Signature {
        Signature::new(d, s).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&[1., 0., 0.], &[1., 0., 0.], sig(3, 1)).unwrap(), 1.0);
        assert_eq!(inner(&[0., 0., 1.], &[0., 0., 1.], sig(3, 1)).unwrap(), -1.0);
        assert_eq!(inner(&[1., 0., 1.], &[1., 0., 1.], sig(3, 1)).unwrap(), 0.0);
        assert!(matches!(
            inner(&[1., 0.], &[1., 0., 0.], sig(3, 1)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn causal_examples() {
        let s = sig(3, 1);
        assert_eq!(causal_character(&[1., 0., 0.], s, 1e-12).unwrap(), CausalCharacter::Spacelike);
        assert_eq!(causal_character(&[0., 0., 1.], s, 1e-12).unwrap(), CausalCharacter::Timelike);
        assert_eq!(causal_character(&[1., 0., 1.], s, 1e-12).unwrap(), CausalCharacter::Null);
        assert_eq!(causal_character(&[0., 0., 0.], s, 1e-12), Err(LinalgError::ZeroVector));
    }

    #[test]
    fn gram_examples() {
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        assert_eq!(gram(&[e(0), e(1)], sig(3, 0)).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(
            gram(&[e(0), e(2)], sig(3, 1)).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.])
        );
        assert_eq!(
            gram(&[vec![1., 1., 0.], vec![1., -1., 0.]], sig(3, 1)).unwrap(),
            DMatrix::from_row_slice(2, 2, &[2., 0., 0., 2.])
        );
    }

    #[test]
    fn cofactor_examples() {
        let e1 = vec![1., 0., 0.];
        let e2 = vec![0., 1., 0.];
        let e3 = vec![0., 0., 1.];
        assert_eq!(normal_cofactor(&[e1.clone(), e2.clone()], sig(3, 0)).unwrap(), vec![0., 0., 1.]);
        assert_eq!(normal_cofactor(&[e1.clone(), e2.clone()], sig(3, 1)).unwrap(), vec![0., 0., -1.]);
        assert_eq!(normal_cofactor(&[e1.clone(), e3], sig(3, 1)).unwrap(), vec![0., -1., 0.]);
        assert_eq!(
            normal_cofactor(&[e1.clone(), e1], sig(3, 0)),
            Err(LinalgError::RankDeficient)
        );
    }

    #[test]
    fn orientation_anchor() {
        for d in 3..7 {
            let tangents: Vec<Vec<f64>> = (0..d - 1)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            let n = normal_cofactor(&tangents, Signature::euclidean(d)).unwrap();
            let mut expect = vec![0.0; d];
            expect[d - 1] = 1.0;
            assert_eq!(n, expect);
        }
    }

    #[test]
    fn solve_examples() {
        let b = DVector::from_vec(vec![3.0, -1.0]);
        assert_eq!(solve_linear(&DMatrix::identity(2, 2), &b).unwrap(), b);
        let a = DMatrix::from_row_slice(2, 2, &[2., 0., 0., -1.]);
        let x = solve_linear(&a, &DVector::from_vec(vec![4., 3.])).unwrap();
        assert_eq!(x.as_slice(), &[2., -3.]);
        let a = DMatrix::from_row_slice(2, 2, &[1., 1., 1., -1.]);
        let x = solve_linear(&a, &DVector::from_vec(vec![2., 0.])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1., 2., 2., 4.]);
        assert_eq!(solve_linear(&s, &b), Err(LinalgError::SingularMatrix));
    }

    #[test]
    fn spectrum_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3., 3., 5.]));
        let s = eig_spectrum(&d).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0].0.re - 3.0).abs() < 1e-12 && s.eigenvalues[0].1 == 2);
        assert!((s.eigenvalues[1].0.re - 5.0).abs() < 1e-12 && s.eigenvalues[1].1 == 1);
        assert!(s.real_diagonalizable);

        let rot = DMatrix::from_row_slice(2, 2, &[0., 1., -1., 0.]);
        let s = eig_spectrum(&rot).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0].0 - Complex64::new(0., -1.)).norm() < 1e-12);
        assert!((s.eigenvalues[1].0 - Complex64::new(0., 1.)).norm() < 1e-12);
        assert!(!s.real_diagonalizable);

        let jordan = DMatrix::from_row_slice(2, 2, &[2., 1., 0., 2.]);
        let s = eig_spectrum(&jordan).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!(s.eigenvalues[0].1, 2);
        assert!((s.eigenvalues[0].0.re - 2.0).abs() < 1e-8);
        assert!(!s.real_diagonalizable);
    }
}
