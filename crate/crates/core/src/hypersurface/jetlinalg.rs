//! Small dense linear algebra over jets (Taylor-valued entries).

use crate::pseudolinalg::{Signature, RANK_TOL};
use crate::scalarjet::Jet;

pub type JetMatrix = Vec<Vec<Jet>>;

pub fn jet_inner(u: &[Jet], v: &[Jet], sig: Signature) -> Jet {
    let mut acc = u[0].zeros_like();
    for (i, (a, b)) in u.iter().zip(v).enumerate() {
        let p = a * b;
        acc = if sig.eps(i) > 0.0 { acc + p } else { acc - p };
    }
    acc
}

fn value_scale(m: &JetMatrix) -> f64 {
    m.iter()
        .flatten()
        .fold(0.0f64, |a, j| a.max(j.value().abs()))
}

/// Determinant of a jet matrix by expansion in minors, memoized over column
/// subsets (`O(n 2^n)` jet products).
///
/// Unlike elimination this never divides, so it stays exact on jets even when
/// the determinant's value vanishes but its derivatives do not.
pub fn jet_det(m: &JetMatrix) -> Jet {
    let n = m.len();
    assert!(n < 32, "matrix too large");
    let one = m[0][0].zeros_like().add_scalar(1.0);
    // minors[mask]: det of the last |mask| rows restricted to the columns in mask
    let mut minors: Vec<Option<Jet>> = vec![None; 1 << n];
    minors[0] = Some(one);
    for mask in 1usize..1 << n {
        let row = n - mask.count_ones() as usize;
        let mut acc = m[0][0].zeros_like();
        let mut sign = 1.0;
        for c in 0..n {
            if mask & (1 << c) == 0 {
                continue;
            }
            let sub = minors[mask & !(1 << c)].as_ref().expect("subsets come first");
            let term = &m[row][c] * sub;
            acc = if sign > 0.0 { acc + term } else { acc - term };
            sign = -sign;
        }
        minors[mask] = Some(acc);
    }
    minors.pop().flatten().expect("full minor")
}

/// Inverse by Gauss-Jordan elimination. `None` when a pivot is below tolerance.
pub fn jet_inverse(m: &JetMatrix) -> Option<JetMatrix> {
    let n = m.len();
    let scale = value_scale(m);
    if scale == 0.0 {
        return None;
    }
    let zero = m[0][0].zeros_like();
    let mut a = m.clone();
    let mut inv: JetMatrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { zero.add_scalar(1.0) } else { zero.clone() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))
            .unwrap();
        if a[piv][col].value().abs() <= RANK_TOL * scale {
            return None;
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].recip().ok()?;
        for c in 0..n {
            a[col][c] = &a[col][c] * &p;
            inv[col][c] = &inv[col][c] * &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..n {
                let t = &factor * &a[col][c];
                a[r][c] = &a[r][c] - &t;
                let t = &factor * &inv[col][c];
                inv[r][c] = &inv[r][c] - &t;
            }
        }
    }
    Some(inv)
}

/// Jet version of the generalized cross product `<N, w> = det(t_1, ..., t_n, w)`.
pub fn jet_normal_cofactor(tangents: &[Vec<Jet>], sig: Signature) -> Vec<Jet> {
    let m = sig.dim();
    let n = m - 1;
    (0..m)
        .map(|col| {
            let minor: JetMatrix = (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| tangents[r][if c < col { c } else { c + 1 }].clone())
                        .collect()
                })
                .collect();
            let d = if n == 0 {
                Jet::constant(0, 0, 1.0)
            } else {
                jet_det(&minor)
            };
            let sign = if (n + col).is_multiple_of(2) { 1.0 } else { -1.0 };
            d.scale(sig.eps(col) * sign)
        })
        .collect()
}
