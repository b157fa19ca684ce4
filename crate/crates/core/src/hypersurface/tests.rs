use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::*;
use crate::pseudolinalg::{inner, Signature};

fn fixture(name: &str) -> ImmersionSpec {
    builtin(name, &BTreeMap::new()).unwrap()
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).abs().max() <= tol
}

const H: f64 = 1e-4;

/// Central-difference derivative of a chart quantity along coordinate `i`.
fn fd<F: Fn(&[f64]) -> Vec<f64>>(g: F, p: &[f64], i: usize) -> Vec<f64> {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[i] += H;
    b[i] -= H;
    g(&a).iter().zip(g(&b)).map(|(x, y)| (x - y) / (2.0 * H)).collect()
}

#[test]
fn induced_metric_examples() {
    let g = induced_metric(&fixture("plane"), &[0.3, -0.2]).unwrap();
    assert!(close(&g, &DMatrix::identity(2, 2), 1e-15));

    let g = induced_metric(&fixture("cylinder"), &[0.3, 1.1]).unwrap();
    assert!(close(&g, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]), 1e-14));

    let (u, v) = (0.3, -0.4);
    let g = induced_metric(&fixture("graph"), &[u, v]).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[1.0 - v * v, -u * v, -u * v, 1.0 - u * u]);
    assert!(close(&g, &want, 1e-15));
}

#[test]
fn degenerate_metric_is_reported() {
    // light-like line direction: (u, v, u) in E^3_1 has G_uu = 0 and det = 0
    let spec = ImmersionSpec::from_components(Signature::new(3, 1).unwrap(), &["u", "v"], &["u", "v", "u"], vec![
        (-1.0, 1.0),
        (-1.0, 1.0),
    ])
    .unwrap();
    assert!(matches!(
        induced_metric(&spec, &[0.0, 0.0]),
        Err(HypersurfaceError::DegenerateMetric { .. })
    ));
}

#[test]
fn unit_normal_examples() {
    let (xi, eps) = unit_normal(&fixture("plane"), &[0.1, 0.2]).unwrap();
    assert_eq!((xi, eps), (vec![0.0, 0.0, 1.0], 1.0));

    let mut params = BTreeMap::new();
    params.insert("index".to_string(), 1.0);
    let lorentz_plane = builtin("plane", &params).unwrap();
    let (xi, eps) = unit_normal(&lorentz_plane, &[0.1, 0.2]).unwrap();
    assert_eq!((xi, eps), (vec![0.0, 0.0, -1.0], -1.0));

    let sphere = fixture("sphere");
    for p in sample_points(&sphere.domain, 10, 3, DEFAULT_MARGIN) {
        let (xi, eps) = unit_normal(&sphere, &p).unwrap();
        let x = sphere.position(&p).unwrap();
        let sign = xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2];
        assert!((sign.abs() - 1.0).abs() < 1e-12);
        for k in 0..3 {
            assert!((xi[k] - sign * x[k]).abs() < 1e-12);
        }
        assert_eq!(eps, 1.0);
    }
}

#[test]
fn frame_invariants_hold_everywhere() {
    for name in BUILTINS {
        let spec = fixture(name);
        for p in sample_points(&spec.domain, 12, 1, DEFAULT_MARGIN) {
            let fr = FrameData::compute(&spec, &p).unwrap();
            assert!(close(&fr.metric, &fr.metric.transpose(), 1e-14));
            assert!(close(&(&fr.metric * &fr.shape), &fr.second_form, 1e-10), "{name}");
            let nn = inner(&fr.normal, &fr.normal, spec.sig).unwrap();
            assert!((nn - fr.eps_tilde).abs() < 1e-12);
            let jets = spec.jets(&p, 1).unwrap();
            for i in 0..spec.chart_dim() {
                let t: Vec<f64> = jets.iter().map(|c| c.partial(&[i])).collect();
                assert!(inner(&t, &fr.normal, spec.sig).unwrap().abs() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn second_form_matches_fd_hessian() {
    for name in ["sphere", "cylinder", "graph", "cone", "hyperbolic_plane"] {
        let spec = fixture(name);
        for p in sample_points(&spec.domain, 5, 2, 0.1) {
            let fr = FrameData::compute(&spec, &p).unwrap();
            let pos = |q: &[f64]| spec.position(q).unwrap();
            let n = spec.chart_dim();
            for i in 0..n {
                for j in 0..n {
                    // d_i d_j F by nested central differences
                    let d2 = fd(|q| fd(pos, q, j), &p, i);
                    let h = inner(&d2, &fr.normal, spec.sig).unwrap();
                    assert!((h - fr.second_form[(i, j)]).abs() < 1e-5, "{name}: {h} vs {}", fr.second_form[(i, j)]);
                }
            }
        }
    }
}

#[test]
fn shape_operator_examples() {
    let s = shape_operator(&fixture("plane"), &[0.1, 0.1]).unwrap();
    assert_eq!(s.abs().max(), 0.0);

    let sphere = fixture("sphere");
    for p in sample_points(&sphere.domain, 10, 4, DEFAULT_MARGIN) {
        let fr = FrameData::compute(&sphere, &p).unwrap();
        let x = sphere.position(&p).unwrap();
        let outward = fr.normal.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().signum();
        // outward normal gives S = -I and H = -G
        assert!(close(&(&fr.shape * outward), &(-DMatrix::identity(2, 2)), 1e-12));
        assert!(close(&(&fr.second_form * outward), &(-&fr.metric), 1e-12));

        // oracle: D_X xi = -S X with xi differentiated numerically
        let xi = |q: &[f64]| unit_normal(&sphere, q).unwrap().0;
        let jets = sphere.jets(&p, 1).unwrap();
        for i in 0..2 {
            let dxi = fd(xi, &p, i);
            let ti: Vec<f64> = jets.iter().map(|c| c.partial(&[i])).collect();
            for k in 0..3 {
                let sx: f64 = (0..2)
                    .map(|j| fr.shape[(j, i)] * jets[k].partial(&[j]))
                    .sum();
                assert!((dxi[k] + sx).abs() < 1e-7, "{dxi:?} {ti:?}");
            }
        }
    }

    let cyl = fixture("cylinder");
    let fr = FrameData::compute(&cyl, &[0.2, 0.9]).unwrap();
    let x = cyl.position(&[0.2, 0.9]).unwrap();
    let outward = (fr.normal[1] * x[1] + fr.normal[2] * x[2]).signum();
    let mut ev: Vec<f64> = fr.spectrum.expanded().iter().map(|z| z.re * outward).collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] + 0.5).abs() < 1e-12 && ev[1].abs() < 1e-12, "{ev:?}");
    let h = &fr.second_form * outward;
    assert!(close(&h, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -2.0]), 1e-12));
}

#[test]
fn polar_christoffels() {
    let spec = fixture("polar_plane");
    let r = 1.3;
    let g = christoffel(&spec, &[r, 0.4]).unwrap();
    // g[k][i][j]; coordinates (r, u)
    assert!((g[0][1][1] + r).abs() < 1e-13);
    assert!((g[1][0][1] - 1.0 / r).abs() < 1e-13);
    assert!((g[1][1][0] - 1.0 / r).abs() < 1e-13);
    assert!(g[0][0][0].abs() < 1e-13 && g[1][1][1].abs() < 1e-13 && g[0][0][1].abs() < 1e-13);
    let g = christoffel(&fixture("plane"), &[0.1, 0.2]).unwrap();
    assert!(g.iter().flatten().flatten().all(|x| *x == 0.0));
}

#[test]
fn christoffels_match_fd_metric() {
    for name in ["sphere", "hyperbolic_plane", "graph", "perturbed_graph"] {
        let spec = fixture(name);
        let n = spec.chart_dim();
        for p in sample_points(&spec.domain, 4, 5, 0.1) {
            let gam = christoffel(&spec, &p).unwrap();
            let g = induced_metric(&spec, &p).unwrap();
            let ginv = g.clone().try_inverse().unwrap();
            let flat = |q: &[f64]| induced_metric(&spec, q).unwrap().iter().copied().collect::<Vec<f64>>();
            let dg: Vec<Vec<f64>> = (0..n).map(|a| fd(flat, &p, a)).collect();
            // nalgebra is column-major: entry (b, c) sits at b + n c
            let d = |a: usize, b: usize, c: usize| dg[a][b + n * c];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let want: f64 = (0..n)
                            .map(|l| 0.5 * ginv[(k, l)] * (d(i, j, l) + d(j, i, l) - d(l, i, j)))
                            .sum();
                        assert!((gam[k][i][j] - want).abs() < 1e-6, "{name}");
                    }
                }
            }
        }
    }
}

#[test]
fn sectional_curvature_examples() {
    let e = [1.0, 0.0];
    let f = [0.0, 1.0];
    assert_eq!(sectional_curvature(&fixture("plane"), &[0.1, 0.2], &e, &f).unwrap(), 0.0);
    let sphere = fixture("sphere");
    for p in sample_points(&sphere.domain, 10, 6, DEFAULT_MARGIN) {
        let k = sectional_curvature(&sphere, &p, &[0.3, 1.0], &[1.0, -0.2]).unwrap();
        assert!((k - 1.0).abs() < 1e-8);
    }
    let hyp = fixture("hyperbolic_plane");
    for p in sample_points(&hyp.domain, 10, 6, DEFAULT_MARGIN) {
        let k = sectional_curvature(&hyp, &p, &e, &f).unwrap();
        assert!((k + 1.0).abs() < 1e-10, "{k}");
    }
    assert_eq!(
        sectional_curvature(&sphere, &[1.0, 1.0], &e, &[2.0, 0.0]).unwrap_err(),
        HypersurfaceError::DegeneratePlane
    );
}

#[test]
fn riemann_symmetries_and_bianchi() {
    for name in BUILTINS {
        let spec = fixture(name);
        for p in sample_points(&spec.domain, 6, 7, DEFAULT_MARGIN) {
            let mc = riemann_intrinsic(&spec, &p).unwrap();
            assert!(mc.symmetry_residual() <= 1e-8, "{name}: {}", mc.symmetry_residual());
        }
    }
}

#[test]
fn identities_on_fixtures() {
    for name in BUILTINS {
        let spec = fixture(name);
        let pts = sample_points(&spec.domain, 30, 11, DEFAULT_MARGIN);
        for r in identity_suite(&spec, &pts, crate::exec::Exec::Parallel).unwrap() {
            assert!(r.max() <= 1e-6, "{name}: {r:?}");
        }
    }
    let plane = fixture("plane");
    let r = PointGeometry::compute(&plane, &[0.1, 0.3]).unwrap().identities();
    assert_eq!(r.max(), 0.0);
}

#[test]
fn gauss_residual_detects_a_wrong_sign() {
    // flipping the normal sign in the Gauss equation must break it on the sphere
    let sphere = fixture("sphere");
    let g = PointGeometry::compute(&sphere, &[1.0, 0.5]).unwrap();
    let mut flipped = g.clone();
    flipped.frame.eps_tilde = -flipped.frame.eps_tilde;
    assert!(g.gauss_residual() < 1e-12);
    assert!(flipped.gauss_residual() > 0.5);
}

#[test]
fn sampling_is_deterministic_and_inside() {
    let d = [(0.0, 1.0), (-2.0, 2.0), (5.0, 5.01)];
    let a = sample_points(&d, 50, 9, DEFAULT_MARGIN);
    assert_eq!(a, sample_points(&d, 50, 9, DEFAULT_MARGIN));
    assert_ne!(a, sample_points(&d, 50, 10, DEFAULT_MARGIN));
    for p in &a {
        assert!(p[0] >= 0.01 && p[0] <= 0.99);
        assert!(p[1] >= -1.99 && p[1] <= 1.99);
        // margin capped at a quarter of the width
        assert!(p[2] >= 5.0025 - 1e-12 && p[2] <= 5.0075 + 1e-12);
    }
}

#[test]
fn suite_does_not_depend_on_exec() {
    let spec = fixture("perturbed_graph");
    let pts = sample_points(&spec.domain, 20, 1, DEFAULT_MARGIN);
    let a = identity_suite(&spec, &pts, crate::exec::Exec::Parallel).unwrap();
    let b = identity_suite(&spec, &pts, crate::exec::Exec::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_builtin_and_arity_errors() {
    assert!(matches!(
        builtin("torus", &BTreeMap::new()),
        Err(HypersurfaceError::UnknownBuiltin(_))
    ));
    assert!(fixture("plane").jets(&[0.1], 1).is_err());
}
