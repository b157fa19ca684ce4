use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use warpsurf_core::pseudolinalg::{eig_spectrum, gram, inner, normal_cofactor, Signature};
use warpsurf_core::scalarjet::{Expr, Func, ScalarField};

fn vars() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Expressions that are smooth on all of R^2, so any sample point is admissible.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var(0)),
        Just(Expr::Var(1)),
        (0.1f64..2.0).prop_map(Expr::Lit),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(bx(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(bx(a), bx(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(bx(a), bx(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(bx(a), bx(b))),
            (inner.clone(), 1i32..4).prop_map(|(a, k)| Expr::Pow(bx(a), k)),
            (inner.clone(), prop::sample::select(vec![Func::Sin, Func::Cos, Func::Atan, Func::Tanh, Func::Sinh]))
                .prop_map(|(a, g)| Expr::Call(g, bx(a))),
            // guarded forms for the partial functions
            inner.clone().prop_map(|a| Expr::Call(Func::Exp, bx(Expr::Call(Func::Sin, bx(a))))),
            inner.clone().prop_map(|a| Expr::Call(Func::Ln, bx(Expr::Call(Func::Cosh, bx(a))))),
            inner.clone().prop_map(|a| Expr::Call(Func::Sqrt, bx(Expr::Call(Func::Cosh, bx(a))))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(bx(a), bx(Expr::Call(Func::Cosh, bx(b))))),
            inner.clone().prop_map(|a| Expr::Pow(bx(Expr::Call(Func::Cosh, bx(a))), -2)),
        ]
    })
    .prop_filter("depth", |e| e.depth() <= 5)
}

/// Checks every partial of order 1..=3 against a Richardson-extrapolated
/// central difference of the jet's partial one order lower.
fn max_fd_error(field: &ScalarField, p: &[f64]) -> Option<f64> {
    let jet = field.eval_jet(p, 3).ok()?;
    let h = 1e-3;
    let lower = |q: &[f64], idx: &[usize]| -> Option<f64> {
        let j = field.eval_jet(q, 2).ok()?;
        Some(j.partial(idx))
    };
    let central = |idx: &[usize], var: usize, h: f64| -> Option<f64> {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[var] += h;
        b[var] -= h;
        Some((lower(&a, idx)? - lower(&b, idx)?) / (2.0 * h))
    };
    let mut worst = 0.0f64;
    let mut multi = vec![vec![0usize], vec![1]];
    for _ in 1..3 {
        let next: Vec<Vec<usize>> = multi
            .iter()
            .filter(|m| m.len() == multi.last().unwrap().len())
            .flat_map(|m| (0..2).map(move |v| [m.as_slice(), &[v]].concat()))
            .collect();
        multi.extend(next);
    }
    for idx in &multi {
        let (&var, rest) = idx.split_last().unwrap();
        let fd = (4.0 * central(rest, var, h / 2.0)? - central(rest, var, h)?) / 3.0;
        let ad = jet.partial(idx);
        if !ad.is_finite() || ad.abs() > 1e6 {
            return None;
        }
        worst = worst.max((ad - fd).abs() / ad.abs().max(1.0));
    }
    Some(worst)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_matches_finite_differences(e in smooth_expr(), x in -0.8f64..0.8, y in -0.8f64..0.8) {
        let field = ScalarField::from_ast(e, &vars());
        if let Some(err) = max_fd_error(&field, &[x, y]) {
            prop_assert!(err <= 1e-5, "{field}: {err}");
        }
    }

    #[test]
    fn print_parse_round_trip(e in smooth_expr()) {
        let field = ScalarField::from_ast(e, &vars());
        let back = ScalarField::parse(&field.to_string(), &vars()).unwrap();
        prop_assert_eq!(back.ast(), field.ast());
    }

    #[test]
    fn inner_is_bilinear_and_symmetric(
        s in 0usize..=4,
        u in prop::collection::vec(-5.0f64..5.0, 4),
        v in prop::collection::vec(-5.0f64..5.0, 4),
        w in prop::collection::vec(-5.0f64..5.0, 4),
        a in -3.0f64..3.0,
    ) {
        let sig = Signature::new(4, s).unwrap();
        let comb: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + q).collect();
        let lhs = inner(&comb, &w, sig).unwrap();
        let rhs = a * inner(&u, &w, sig).unwrap() + inner(&v, &w, sig).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        prop_assert_eq!(inner(&u, &v, sig).unwrap(), inner(&v, &u, sig).unwrap());
    }

    #[test]
    fn cofactor_normal_is_orthogonal(
        s in 0usize..=4,
        t in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 3),
        w in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let sig = Signature::new(4, s).unwrap();
        let Ok(n) = normal_cofactor(&t, sig) else { return Ok(()); };
        for ti in &t {
            prop_assert!(inner(&n, ti, sig).unwrap().abs() <= 1e-10);
        }
        let det = DMatrix::from_fn(4, 4, |r, c| if c < 3 { t[c][r] } else { w[r] }).determinant();
        prop_assert!((inner(&n, &w, sig).unwrap() - det).abs() <= 1e-10 * (1.0 + det.abs()));
        let g = gram(&t, sig).unwrap();
        prop_assert!((g.clone() - g.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn spectrum_roots_the_characteristic_polynomial(entries in prop::collection::vec(-3.0f64..3.0, 9)) {
        let a = DMatrix::from_row_slice(3, 3, &entries);
        let spec = eig_spectrum(&a).unwrap();
        let eig = spec.expanded();
        prop_assert_eq!(eig.len(), 3);
        let scale = a.abs().max().max(1.0);
        let tr: Complex64 = eig.iter().sum();
        let prod: Complex64 = eig.iter().product();
        prop_assert!((tr - a.trace()).norm() <= 1e-6 * scale);
        prop_assert!((prod - a.determinant()).norm() <= 1e-6 * scale.powi(3));
        for z in &eig {
            let m = a.map(|x| Complex64::new(x, 0.0)) - DMatrix::identity(3, 3) * *z;
            prop_assert!(m.determinant().norm() <= 1e-6 * scale.powi(3), "{z}");
        }
    }

    #[test]
    fn shape_operator_spectrum_matches_the_characteristic_polynomial(
        h in prop::collection::vec(-2.0f64..2.0, 6),
        s in 0usize..=3,
    ) {
        // S = G^-1 H with G = diag(eps) indefinite and H symmetric
        let sig = Signature::new(3, s).unwrap();
        let hm = DMatrix::from_row_slice(3, 3, &[h[0], h[1], h[2], h[1], h[3], h[4], h[2], h[4], h[5]]);
        let g_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sig.signs()));
        let a = &g_inv * &hm;
        let spec = eig_spectrum(&a).unwrap();
        // oracle: roots of det(zI - A) = z^3 - tr z^2 + m2 z - det
        let tr = a.trace();
        let m2 = (0..3).map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            a[(j, j)] * a[(k, k)] - a[(j, k)] * a[(k, j)]
        }).sum::<f64>();
        let det = a.determinant();
        let poly = |z: Complex64| z * z * z - z * z * tr + z * m2 - det;
        let scale = a.abs().max().max(1.0);
        let mut total = 0;
        for (z, mult) in &spec.eigenvalues {
            prop_assert!(poly(*z).norm() <= 1e-8 * scale.powi(3), "{z}");
            total += mult;
            // a repeated root also kills the derivative
            if *mult > 1 {
                let d = z * z * 3.0 - z * 2.0 * tr + m2;
                prop_assert!(d.norm() <= 1e-4 * scale.powi(2), "{z} x{mult}");
            }
        }
        prop_assert_eq!(total, 3);
    }
}
