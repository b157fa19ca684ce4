use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use warpsurf_core::hypersurface::{builtin, identity_suite, sample_points, DEFAULT_MARGIN};
use warpsurf_core::pipeline::{sweep, VerifyOptions};
use warpsurf_core::pseudolinalg::Signature;
use warpsurf_core::scalarjet::ScalarField;
use warpsurf_core::Exec;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn identities(c: &mut Criterion) {
    let spec = builtin("perturbed_graph", &BTreeMap::new()).unwrap();
    let points = sample_points(&spec.domain, 200, 0, DEFAULT_MARGIN);
    let mut group = c.benchmark_group("identity_suite");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| identity_suite(&spec, &points, exec).unwrap())
        });
    }
    group.finish();
}

fn cone_sweep(c: &mut Criterion) {
    let f = ScalarField::parse("a*t", &["t", "a"]).unwrap();
    let values: Vec<f64> = (1..=8).map(|k| k as f64 / 10.0).collect();
    let sig = Signature::new(3, 0).unwrap();
    let mut group = c.benchmark_group("cone_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let options = VerifyOptions {
            samples: 50,
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(&f, "a", &values, 1.0, (0.5, 2.0), sig, &options))
        });
    }
    group.finish();
}

criterion_group!(benches, identities, cone_sweep);
criterion_main!(benches);
