use super::*;

fn spec(f: &str, c: f64, i: (f64, f64), fiber_dim: usize, fiber_index: usize) -> WarpedSpec {
    WarpedSpec::new(ScalarField::parse_t(f).unwrap(), c, i, fiber_dim, fiber_index).unwrap()
}

fn field(f: &str) -> ScalarField {
    ScalarField::parse_t(f).unwrap()
}

fn sig(d: usize, s: usize) -> Signature {
    Signature::new(d, s).unwrap()
}

fn quick() -> VerifyOptions {
    VerifyOptions {
        samples: 24,
        ..Default::default()
    }
}

#[test]
fn classify_examples() {
    let b = classify_branch(&field("sin(t)"), 1.0, (0.1, 3.0), DEFAULT_GRID).unwrap();
    assert_eq!(b.branch, Branch::ConstantCurvature);
    assert!((b.curvature.unwrap() - 1.0).abs() < 1e-9);
    let b = classify_branch(&field("exp(t)"), 0.0, (0.1, 2.0), DEFAULT_GRID).unwrap();
    assert_eq!(b.branch, Branch::ConstantCurvature);
    let b = classify_branch(&field("t/2"), 1.0, (0.5, 4.0), DEFAULT_GRID).unwrap();
    assert_eq!(b.branch, Branch::Rotational);
    assert_eq!(b.subcase, Some(Subcase::S21));
    assert_eq!(b.eps_tilde, Some(1.0));
}

#[test]
fn classify_rejects_bad_warps() {
    assert!(matches!(
        classify_branch(&field("t - 1"), 1.0, (0.5, 2.0), DEFAULT_GRID),
        Err(PipelineError::NonPositiveWarp { .. })
    ));
    assert_eq!(
        classify_branch(&field("2"), 1.0, (0.5, 2.0), DEFAULT_GRID),
        Err(PipelineError::ConstantWarp)
    );
    // c + f''f - f'^2 = 2 - 2t^2 vanishes at t = 1
    assert!(matches!(
        classify_branch(&field("t^2"), 2.0, (0.5, 2.0), DEFAULT_GRID),
        Err(PipelineError::MixedBranch { .. })
    ));
}

#[test]
fn case1_curvature_examples() {
    for (f, c, i, k) in [
        ("sin(t)", 1.0, (0.1, 3.0), 1.0),
        ("exp(t)", 0.0, (0.1, 2.0), -1.0),
        ("t", 1.0, (0.5, 2.0), 0.0),
        ("cosh(t)", -1.0, (0.1, 2.0), -1.0),
    ] {
        let r = case1_curvature(&field(f), c, i, DEFAULT_GRID).unwrap();
        assert!((r.k - k).abs() <= 1e-9, "{f}: K = {}", r.k);
        assert!(r.spread <= 1e-9);
        assert!(r.identity_residual <= 1e-10);
    }
    assert!(matches!(
        case1_curvature(&field("t^2"), 0.0, (0.5, 2.0), DEFAULT_GRID),
        Err(PipelineError::NotConstant { .. })
    ));
}

#[test]
fn solve_lambda_mu_examples() {
    let r = solve_lambda_mu(&field("t/2"), 1.0, 1.0).unwrap();
    assert!((r.lambda - 3f64.sqrt()).abs() < 1e-14);
    assert_eq!(r.mu, 0.0);
    assert_eq!(r.eps_tilde, 1.0);

    let r = solve_lambda_mu(&field("t"), -1.0, 2.0).unwrap();
    assert!((r.lambda - 2f64.sqrt() / 2.0).abs() < 1e-14);
    assert_eq!(r.eps_tilde, -1.0);

    let r = solve_lambda_mu(&field("cosh(t)"), 0.0, 1.0).unwrap();
    assert_eq!(r.eps_tilde, -1.0);
    assert!((r.lambda - 1f64.tanh()).abs() < 1e-14);
    assert!((r.mu - 1.0 / 1f64.tanh()).abs() < 1e-13);
    // -eps mu lambda = f''/f = 1
    assert!((r.mu * r.lambda - 1.0).abs() < 1e-14);

    assert_eq!(
        solve_lambda_mu(&field("t"), 1.0, 1.0),
        Err(PipelineError::ZeroLambda { t: 1.0 })
    );
}

#[test]
fn subcase_examples() {
    let d = |f: &str, c: f64| subcase_dispatch(&field(f), c, (0.5, 2.0), DEFAULT_GRID);
    assert_eq!(d("t/2", 1.0), Ok(Subcase::S21));
    assert_eq!(d("cosh(t)", 0.0), Ok(Subcase::S22a));
    assert_eq!(d("t", -1.0), Ok(Subcase::S22b));
    assert_eq!(d("t", 0.5), Ok(Subcase::S22c));
}

#[test]
fn sign_and_subcase_changes_are_errors() {
    // c - f'^2 = 2 - 4t^2 changes sign at t = 1/sqrt(2)
    assert!(matches!(
        subcase_dispatch(&field("t^2"), 2.0, (0.2, 0.9), DEFAULT_GRID),
        Err(PipelineError::SignChange { .. })
    ));
    // |f'/(f lambda)| - 1 ~ c/(8t^2) leaves the 1e-9 band near the left end only
    assert!(matches!(
        subcase_dispatch(&field("t^2"), 1e-9, (0.2, 2.0), DEFAULT_GRID),
        Err(PipelineError::SubcaseChange { .. })
    ));
    let w = WarpedSpec {
        interval: (0.2, 2.0),
        f: field("t^2"),
        c: 1e-9,
        fiber_dim: 1,
        fiber_signature: 0,
    };
    assert!(matches!(
        reconstruct_immersion(&w, sig(3, 1), DEFAULT_GRID),
        Err(PipelineError::SubcaseChange { .. })
    ));
}

#[test]
fn theta_examples() {
    for t in [0.5, 1.0, 3.0] {
        let th = build_theta(&field("t/2"), 1.0, Subcase::S21, 0.5, t).unwrap();
        assert!((th - std::f64::consts::FRAC_PI_6).abs() < 1e-14);
        let th = build_theta(&field("t"), -1.0, Subcase::S22b, 0.5, t).unwrap();
        assert!((th - 0.881373587019543).abs() < 1e-12);
    }
    // alpha = exp(int coth) = sinh t / sinh t0
    for t in [0.7f64, 1.3, 2.0] {
        let a = build_theta(&field("cosh(t)"), 0.0, Subcase::S22a, 0.5, t).unwrap();
        let want = t.sinh() / 0.5f64.sinh();
        assert!((a - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn shape_data_residuals() {
    for (f, c, sub) in [
        ("t/2", 1.0, Subcase::S21),
        ("cosh(t)", 0.0, Subcase::S22a),
        ("t", -1.0, Subcase::S22b),
        ("t", 0.5, Subcase::S22c),
        ("t^2", 20.0, Subcase::S21),
        ("exp(t/3) + t", -0.3, Subcase::S22b),
    ] {
        let i = (0.5, 2.0);
        assert_eq!(subcase_dispatch(&field(f), c, i, DEFAULT_GRID), Ok(sub), "{f}");
        let s = shape_data(&field(f), c, i, sub, DEFAULT_GRID).unwrap();
        assert!(s.relscurta <= 1e-12, "{f}: {}", s.relscurta);
        assert!(s.theta_mu <= 1e-8, "{f}: {}", s.theta_mu);
        assert!(s.primitive <= 1e-8, "{f}: {}", s.primitive);
        assert_eq!(s.samples.len(), DEFAULT_GRID);
    }
}

#[test]
fn cone_reconstruction_matches_closed_form() {
    let w = spec("t/2", 1.0, (0.5, 4.0), 1, 0);
    let rec = reconstruct_immersion(&w, sig(3, 0), DEFAULT_GRID).unwrap();
    assert_eq!(rec.subcase, Subcase::S21);
    // (sqrt(3) t/2, -(t/2) cos u, -(t/2) sin u) up to a translation along the axis
    let x0 = rec.immersion.position(&[0.5, 0.0]).unwrap()[0];
    for (t, u) in [(0.5f64, 0.3f64), (1.7, 2.0), (3.9, 5.5)] {
        let x = rec.immersion.position(&[t, u]).unwrap();
        let want = [3f64.sqrt() * (t - 0.5) / 2.0, -(t / 2.0) * u.cos(), -(t / 2.0) * u.sin()];
        assert!((x[0] - x0 - want[0]).abs() < 1e-10);
        assert!((x[1] - want[1]).abs() < 1e-10, "{x:?}");
        assert!((x[2] - want[2]).abs() < 1e-10);
    }
}

#[test]
fn null_axis_reconstruction_profiles() {
    // alpha = sinh t / sinh t0, int alpha = (cosh t - cosh t0)/sinh t0
    let w = spec("cosh(t)", 0.0, (0.5, 2.0), 1, 0);
    let rec = reconstruct_immersion(&w, sig(3, 1), DEFAULT_GRID).unwrap();
    assert_eq!(rec.subcase, Subcase::S22a);
    let crate::rotational::Profile::Integral(f2) = &rec.rotational.f2 else {
        panic!("quadrature profile expected")
    };
    let s0 = 0.5f64.sinh();
    for t in [0.5f64, 1.2, 2.0] {
        let want = 0.5 * (t.cosh() - 0.5f64.cosh()) / s0 + f2.anchor;
        let got = f2.derivatives(t, 0).unwrap()[0];
        assert!((got - want).abs() < 1e-9, "{t}: {got} vs {want}");
        // the multiplier is proportional to f
        assert!((got / t.cosh() - f2.anchor / 0.5f64.cosh()).abs() < 1e-9);
    }
}

#[test]
fn timelike_axis_reconstruction_is_linear() {
    let w = spec("t", 0.5, (0.5, 2.0), 1, 0);
    let rec = reconstruct_immersion(&w, sig(3, 1), DEFAULT_GRID).unwrap();
    assert_eq!(rec.subcase, Subcase::S22c);
    let th = build_theta(&w.f, w.c, Subcase::S22c, 0.5, 0.5).unwrap();
    for t in [0.5, 1.0, 2.0] {
        let x = rec.immersion.position(&[t, 0.0]).unwrap();
        assert!((x[2] + th.sinh() * (t - 0.5)).abs() < 1e-10);
        // P = f / sqrt|c|
        assert!((x[0] - t / 0.5f64.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn wrong_signature_is_rejected() {
    let w = spec("t/2", 1.0, (0.5, 4.0), 1, 0);
    assert!(matches!(
        reconstruct_immersion(&w, sig(3, 1), DEFAULT_GRID),
        Err(PipelineError::Signature(_))
    ));
    assert!(matches!(
        reconstruct_immersion(&w, sig(4, 0), DEFAULT_GRID),
        Err(PipelineError::Signature(_))
    ));
    let sphere = spec("sin(t)", 1.0, (0.1, 3.0), 1, 0);
    assert_eq!(
        reconstruct_immersion(&sphere, sig(3, 0), DEFAULT_GRID).unwrap_err(),
        PipelineError::ConstantCurvatureBranch
    );
}

#[test]
fn round_trips_pass() {
    for n in [2usize, 3] {
        for (f, c, i, s) in [
            ("t/2", 1.0, (0.5, 4.0), 0usize),
            ("cosh(t)", 0.0, (0.5, 2.0), 1),
            ("t", -1.0, (0.5, 2.0), 1),
            ("t", 0.5, (0.5, 2.0), 1),
        ] {
            let w = spec(f, c, i, n - 1, 0);
            let rec = reconstruct_immersion(&w, sig(n + 1, s), DEFAULT_GRID).unwrap();
            let rep = verify_reconstruction(&w, &rec.immersion, &quick());
            assert!(rep.passed(), "n={n} {f}: {:?} {:?}", rep.note, rep.residuals);
            assert_eq!(rep.samples, 24);
            assert_eq!(rep.residuals.len(), DEFAULT_TOLERANCES.len());
        }
    }
}

#[test]
fn psi_phi_lengths_and_constancy() {
    for (f, c, i, s, sub) in [
        ("t/2", 1.0, (0.5, 4.0), 0usize, Subcase::S21),
        ("cosh(t)", 0.0, (0.5, 2.0), 1, Subcase::S22a),
        ("t", -1.0, (0.5, 2.0), 1, Subcase::S22b),
        ("t", 0.5, (0.5, 2.0), 1, Subcase::S22c),
    ] {
        let w = spec(f, c, i, 1, 0);
        let rec = reconstruct_immersion(&w, sig(3, s), DEFAULT_GRID).unwrap();
        let (lp, lf) = sub.psi_phi_lengths();
        let mut first: Option<Vec<f64>> = None;
        for (t, u) in [(0.8, 0.1), (1.5, 0.4), (1.9, -0.3), (1.2, 0.0)] {
            let pp = psi_phi_fields(&w.f, w.c, sub, &rec.immersion, t, &[u]).unwrap();
            assert!(pp.dpsi <= 1e-6, "{f}: {}", pp.dpsi);
            assert!((pp.psi_length - lp).abs() < 1e-9, "{f}: {}", pp.psi_length);
            assert!((pp.phi_length - lf).abs() < 1e-9, "{f}: {}", pp.phi_length);
            assert!(pp.dphi <= 1e-8);
            if sub == Subcase::S21 {
                assert!(pp.dphi_alt.unwrap() <= 1e-8);
            }
            match &first {
                None => first = Some(pp.psi.clone()),
                Some(p0) => {
                    for (a, b) in p0.iter().zip(&pp.psi) {
                        assert!((a - b).abs() < 1e-8, "psi moved: {p0:?} vs {:?}", pp.psi);
                    }
                }
            }
        }
    }
}

#[test]
fn cone_psi_is_the_expected_combination() {
    let w = spec("t/2", 1.0, (0.5, 4.0), 1, 0);
    let rec = reconstruct_immersion(&w, sig(3, 0), DEFAULT_GRID).unwrap();
    let pp = psi_phi_fields(&w.f, w.c, Subcase::S21, &rec.immersion, 2.0, &[0.7]).unwrap();
    // E_1 = (sqrt3/2, -cos u/2, -sin u/2); psi is constant, so it is the axis direction
    // up to the sign of xi: cos(pi/6) E_1 + sin(pi/6) xi = (1, 0, 0) or (1/2, ...)
    let e1 = rec.immersion.jets(&[2.0, 0.7], 1).unwrap();
    let e1: Vec<f64> = e1.iter().map(|x| x.partial(&[0])).collect();
    let c6 = std::f64::consts::FRAC_PI_6.cos();
    let along: f64 = pp.psi.iter().zip(&e1).map(|(a, b)| a * b).sum();
    assert!((along - c6).abs() < 1e-12);
    assert!((pp.psi[0] - 1.0).abs() < 1e-12, "{:?}", pp.psi);
}

#[test]
fn corrupted_reconstruction_fails() {
    let good = spec("t/2", 1.0, (0.5, 4.0), 1, 0);
    let bad = spec("t/3", 1.0, (0.5, 4.0), 1, 0);
    let rec = reconstruct_immersion(&bad, sig(3, 0), DEFAULT_GRID).unwrap();
    let rep = verify_reconstruction(&good, &rec.immersion, &quick());
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.residual("metric").unwrap().value > 1e-2);
}

#[test]
fn constant_curvature_input_is_skipped() {
    let sphere = spec("sin(t)", 1.0, (0.1, 3.0), 1, 0);
    let plane = crate::hypersurface::builtin("plane", &Default::default()).unwrap();
    let rep = verify_reconstruction(&sphere, &plane, &quick());
    assert_eq!(rep.verdict, Verdict::Skipped);
    assert_eq!(rep.branch.unwrap().branch, Branch::ConstantCurvature);
    assert!(rep.residuals.is_empty());
}

#[test]
fn tolerance_overrides() {
    let mut t = Tolerances::default();
    assert_eq!(t.get("metric"), 1e-6);
    t.set("metric", 1e-3).unwrap();
    assert_eq!(t.get("metric"), 1e-3);
    assert!(t.set("nonsense", 1.0).is_err());
    assert!(t.set("metric", -1.0).is_err());
    // a tight tolerance turns a pass into a fail
    let w = spec("t/2", 1.0, (0.5, 4.0), 1, 0);
    let rec = reconstruct_immersion(&w, sig(3, 0), DEFAULT_GRID).unwrap();
    let mut opts = quick();
    opts.tolerances.set("metric", 1e-300).unwrap();
    let rep = verify_reconstruction(&w, &rec.immersion, &opts);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(!rep.residual("metric").unwrap().pass);
}

#[test]
fn reports_do_not_depend_on_exec() {
    let w = spec("t", -1.0, (0.5, 2.0), 2, 0);
    let rec = reconstruct_immersion(&w, sig(4, 1), DEFAULT_GRID).unwrap();
    let a = verify_reconstruction(&w, &rec.immersion, &quick());
    let b = verify_reconstruction(
        &w,
        &rec.immersion,
        &VerifyOptions {
            exec: crate::exec::Exec::Sequential,
            ..quick()
        },
    );
    assert_eq!(a.residuals, b.residuals);
    assert_eq!(a.rows, b.rows);
}

#[test]
fn cone_sweep() {
    let f = ScalarField::parse("a*t", &["t", "a"]).unwrap();
    let values = [0.2, 0.5, 0.8];
    let rows = sweep(&f, "a", &values, 1.0, (0.5, 2.0), sig(3, 0), &quick());
    assert_eq!(rows.len(), 3);
    for (row, a) in rows.iter().zip(values) {
        assert_eq!(row.value, a);
        assert_eq!(row.subcase, Some(Subcase::S21));
        // tan theta = a / sqrt(1 - a^2)
        assert!((row.theta0.unwrap() - a.asin()).abs() < 1e-12);
        assert_eq!(row.verdict, Verdict::Pass, "{row:?}");
    }
    // a = 1 makes c - f'^2 vanish
    let rows = sweep(&f, "a", &[1.0], 1.0, (0.5, 2.0), sig(3, 0), &quick());
    assert!(rows[0].error.is_some());
    assert_eq!(rows[0].verdict, Verdict::Fail);
}
