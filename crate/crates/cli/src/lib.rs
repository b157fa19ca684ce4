//! Config-driven front end: runs one job and produces its artifacts in memory,
//! then writes them out together.

pub mod config;
pub mod mesh;
pub mod output;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;
use warpsurf_core::hypersurface::ImmersionSpec;
use warpsurf_core::pipeline::{
    self, ambient_index, case1_curvature, classify_branch, reconstruct_immersion, subcase_dispatch, sweep,
    verify_immersion, verify_reconstruction, Branch, PipelineError, SampleRow, Subcase, SweepRow, Tolerances, Verdict,
    VerificationReport, VerifyOptions, DEFAULT_GRID,
};
use warpsurf_core::pseudolinalg::Signature;
use warpsurf_core::rotational::{generate_case1, generate_case2, generate_case3, OrbitForm, Profile};
use warpsurf_core::scalarjet::ScalarField;
use warpsurf_core::warped::WarpedSpec;

pub use config::{JobConfig, Mode, DEFAULT_INTERVAL};
pub use mesh::{export_mesh, MeshError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{op}: {message}")]
    Numerical { op: &'static str, message: String },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 2,
        }
    }
}

fn numerical(op: &'static str) -> impl Fn(PipelineError) -> CliError {
    move |e| CliError::Numerical { op, message: e.to_string() }
}

/// How a job ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Mode without a verdict, or nothing to verify.
    NoVerdict,
    NumericalError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::NoVerdict => 0,
            Status::Fail => 1,
            Status::NumericalError => 3,
        }
    }

    fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Status::Pass,
            Verdict::Fail => Status::Fail,
            Verdict::Skipped => Status::NoVerdict,
        }
    }
}

/// Output files by name, plus the job status.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub status: Status,
    pub files: BTreeMap<String, String>,
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
    pub mesh: Option<(usize, usize)>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut JobConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        for (k, v) in &self.tolerances {
            cfg.tolerances.insert(k.clone(), *v);
        }
        if let Some((rows, cols)) = self.mesh {
            let drop = cfg.mesh.and_then(|m| m.drop);
            cfg.mesh = Some(config::MeshSection { rows, cols, drop });
        }
    }
}

/// Parses `NAME=VALUE`.
pub fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad tolerance value `{v}`"))?;
    Ok((k.trim().to_string(), v))
}

/// Parses `ROWSxCOLS`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count `{r}`"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count `{c}`"))?;
    Ok((r, c))
}

fn options(cfg: &JobConfig) -> Result<VerifyOptions, CliError> {
    let mut tolerances = Tolerances::default();
    for (k, v) in &cfg.tolerances {
        tolerances.set(k, *v).map_err(CliError::Config)?;
    }
    let defaults = VerifyOptions::default();
    Ok(VerifyOptions {
        samples: cfg.samples.unwrap_or(defaults.samples),
        seed: cfg.seed,
        grid: cfg.grid.unwrap_or(DEFAULT_GRID),
        tolerances,
        ..defaults
    })
}

struct Job {
    report: Map<String, Value>,
    files: BTreeMap<String, String>,
    status: Status,
}

impl Job {
    fn new(cfg: &JobConfig) -> Self {
        let mut report = Map::new();
        report.insert("schema_version".into(), json!(SCHEMA_VERSION));
        report.insert("mode".into(), json!(cfg.mode.name()));
        report.insert("seed".into(), json!(cfg.seed));
        Job {
            report,
            files: BTreeMap::new(),
            status: Status::NoVerdict,
        }
    }

    fn put<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.report.insert(key.to_string(), v);
    }
}

/// Runs a job. Configuration problems are returned as errors; numerical
/// failures produce a report carrying the error and [`Status::NumericalError`].
pub fn execute(cfg: &JobConfig) -> Result<Artifacts, CliError> {
    cfg.check()?;
    let opts = options(cfg)?;
    let mut job = Job::new(cfg);
    let result = match cfg.mode {
        Mode::Classify => classify(cfg, &opts, &mut job),
        Mode::Reconstruct => reconstruct(cfg, &opts, &mut job),
        Mode::Verify => verify(cfg, &opts, &mut job),
        Mode::Generate => generate(cfg, &mut job),
        Mode::Sweep => run_sweep(cfg, &opts, &mut job),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Numerical { op, message }) => {
            job.put("error", &json!({ "op": op, "message": message }));
            job.status = Status::NumericalError;
        }
        Err(e) => return Err(e),
    }
    let report = output::to_json(&Value::Object(job.report)).expect("report serializes");
    job.files.insert("report.json".into(), report);
    Ok(Artifacts {
        status: job.status,
        files: job.files,
    })
}

/// Writes every artifact through a temporary name and renames it into place.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut staged = vec![];
    for (name, body) in &artifacts.files {
        let tmp = dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, body)?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        std::fs::rename(tmp, dest)?;
    }
    Ok(())
}

fn parse_f(src: &str, vars: &[&str]) -> Result<ScalarField, CliError> {
    ScalarField::parse(src, vars).map_err(|e| CliError::Config(format!("expression `{src}`: {e}")))
}

fn classify(cfg: &JobConfig, opts: &VerifyOptions, job: &mut Job) -> Result<(), CliError> {
    let w = cfg.warped.as_ref().expect("checked");
    let f = parse_f(&w.f, &["t"])?;
    let branch = classify_branch(&f, w.c, w.interval(), opts.grid).map_err(numerical("pipeline::classify_branch"))?;
    let mut out = serde_json::to_value(&branch).expect("serializes");
    if branch.branch == Branch::ConstantCurvature {
        let k = case1_curvature(&f, w.c, w.interval(), opts.grid).map_err(numerical("pipeline::case1_curvature"))?;
        out["spread"] = json!(k.spread);
        out["identity_residual"] = json!(k.identity_residual);
    }
    job.put("result", &out);
    Ok(())
}

/// Builds the warped spec for `f`, inferring the fiber index from the ambient signature.
fn warped_spec(f: ScalarField, c: f64, interval: (f64, f64), n: usize, sig: Signature, sub: Subcase) -> Result<WarpedSpec, CliError> {
    let extra = ambient_index(0, sub);
    let fiber_index = sig.index().checked_sub(extra).ok_or_else(|| {
        CliError::Config(format!("subcase {sub:?} needs a negative ambient direction, got signature {:?}", <[usize; 2]>::from(sig)))
    })?;
    WarpedSpec::new(f, c, interval, n - 1, fiber_index).map_err(|e| CliError::Config(e.to_string()))
}

fn ambient_sig(n: usize, sig: Option<Signature>, sub: Subcase) -> Result<Signature, CliError> {
    let sig = match sig {
        Some(s) => s,
        None => Signature::new(n + 1, ambient_index(0, sub)).map_err(|e| CliError::Config(e.to_string()))?,
    };
    if sig.dim() != n + 1 {
        return Err(CliError::Config(format!("n = {n} needs an ambient signature of dimension {}, got {}", n + 1, sig.dim())));
    }
    Ok(sig)
}

fn samples_csv(spec: &ImmersionSpec, rows: &[SampleRow]) -> String {
    let mut header = spec.var_names();
    if let Some(first) = rows.first() {
        header.extend(first.values.iter().map(|(k, _)| k.clone()));
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.point.iter().chain(r.values.iter().map(|(_, v)| v)).map(|&x| output::format_f64(x)).collect())
        .collect();
    output::to_csv(&header, &body).expect("in-memory csv")
}

fn put_report(job: &mut Job, report: &VerificationReport) {
    job.put("report", report);
    job.status = Status::from_verdict(report.verdict);
}

fn add_mesh(cfg: &JobConfig, spec: &ImmersionSpec, job: &mut Job) -> Result<(), CliError> {
    let Some(m) = cfg.mesh else { return Ok(()) };
    let obj = export_mesh(spec, m.rows, m.cols, m.drop).map_err(|e| match e {
        MeshError::Geometry(g) => CliError::Numerical {
            op: "cli::export_mesh",
            message: g.to_string(),
        },
        other => CliError::Config(other.to_string()),
    })?;
    job.put(
        "mesh",
        &json!({ "vertices": m.rows * m.cols, "triangles": 2 * (m.rows - 1) * (m.cols - 1) }),
    );
    job.files.insert("mesh.obj".into(), obj);
    Ok(())
}

fn immersion_toml(spec: &ImmersionSpec) -> String {
    toml::to_string(spec).expect("immersion specs serialize to toml")
}

fn reconstruct(cfg: &JobConfig, opts: &VerifyOptions, job: &mut Job) -> Result<(), CliError> {
    let w = cfg.warped.as_ref().expect("checked");
    let f = parse_f(&w.f, &["t"])?;
    let interval = w.interval();
    let branch = classify_branch(&f, w.c, interval, opts.grid).map_err(numerical("pipeline::classify_branch"))?;
    job.put("branch", &branch);
    let Some(sub) = branch.subcase else {
        // nothing to rebuild: report the branch and skip
        let report = VerificationReport {
            branch: Some(branch),
            samples: 0,
            residuals: vec![],
            verdict: Verdict::Skipped,
            note: Some(PipelineError::ConstantCurvatureBranch.to_string()),
            rows: vec![],
            runtime: Default::default(),
        };
        put_report(job, &report);
        return Ok(());
    };
    let sig = ambient_sig(w.n, w.sig, sub)?;
    let spec = warped_spec(f, w.c, interval, w.n, sig, sub)?;
    let rec = reconstruct_immersion(&spec, sig, opts.grid).map_err(numerical("pipeline::reconstruct_immersion"))?;
    let theta0 = pipeline::build_theta(&spec.f, spec.c, sub, interval.0, interval.0)
        .map_err(numerical("pipeline::build_theta"))?;
    job.put("subcase", &sub);
    job.put("theta0", &theta0);
    job.put("signature", &sig);
    let report = verify_reconstruction(&spec, &rec.immersion, opts);
    put_report(job, &report);
    job.files.insert("samples.csv".into(), samples_csv(&rec.immersion, &report.rows));
    job.files.insert("immersion.toml".into(), immersion_toml(&rec.immersion));
    add_mesh(cfg, &rec.immersion, job)
}

fn verify(cfg: &JobConfig, opts: &VerifyOptions, job: &mut Job) -> Result<(), CliError> {
    let spec = cfg.immersion.as_ref().expect("checked").resolve()?;
    let report = match &cfg.warped {
        // with a warped section the immersion is checked as its reconstruction
        Some(w) => {
            let f = parse_f(&w.f, &["t"])?;
            let interval = w.interval();
            let branch = classify_branch(&f, w.c, interval, opts.grid).map_err(numerical("pipeline::classify_branch"))?;
            match branch.subcase {
                Some(sub) => {
                    if spec.chart_dim() != w.n {
                        return Err(CliError::Config(format!(
                            "[warped] n = {} but the immersion has chart dimension {}",
                            w.n,
                            spec.chart_dim()
                        )));
                    }
                    let ws = warped_spec(f, w.c, interval, w.n, spec.sig, sub)?;
                    verify_reconstruction(&ws, &spec, opts)
                }
                None => {
                    let ws = WarpedSpec::new(f, w.c, interval, w.n - 1, 0).map_err(|e| CliError::Config(e.to_string()))?;
                    verify_reconstruction(&ws, &spec, opts)
                }
            }
        }
        None => verify_immersion(&spec, opts),
    };
    put_report(job, &report);
    job.files.insert("samples.csv".into(), samples_csv(&spec, &report.rows));
    add_mesh(cfg, &spec, job)
}

fn generate(cfg: &JobConfig, job: &mut Job) -> Result<(), CliError> {
    let r = cfg.rotational.as_ref().expect("checked");
    let profile = |s: &str| Profile::parse(s).map_err(|e| CliError::Config(format!("expression `{s}`: {e}")));
    let (f1, f2) = (profile(&r.f1)?, profile(&r.f2)?);
    let interval = r.interval.unwrap_or(DEFAULT_INTERVAL);
    let orbit = |case: u8| {
        r.orbit
            .ok_or_else(|| CliError::Config(format!("case {case} needs `orbit` (sphere or hyperbolic)")))
    };
    let built = match r.case {
        1 => generate_case1(f1, f2, orbit(1)?, r.sig, interval),
        2 => generate_case2(f1, f2, orbit(2)?, r.sig, interval),
        3 => {
            if r.orbit.is_some_and(|o| o != OrbitForm::Parabolic) {
                return Err(CliError::Config("case 3 uses the parabolic orbit".into()));
            }
            generate_case3(f1, f2, r.sig, interval)
        }
        k => return Err(CliError::Config(format!("unknown case {k}; expected 1, 2 or 3"))),
    };
    let spec = built.map_err(|e| match e {
        warpsurf_core::rotational::RotationalError::Inadmissible { .. } => CliError::Config(e.to_string()),
        other => CliError::Numerical {
            op: "rotational::generate",
            message: other.to_string(),
        },
    })?;
    job.put(
        "immersion",
        &json!({ "chart_vars": spec.var_names(), "signature": spec.sig, "domain": spec.domain }),
    );
    job.files.insert("immersion.toml".into(), immersion_toml(&spec));
    add_mesh(cfg, &spec, job)
}

fn run_sweep(cfg: &JobConfig, opts: &VerifyOptions, job: &mut Job) -> Result<(), CliError> {
    let w = cfg.warped.as_ref().expect("checked");
    let s = cfg.sweep.as_ref().expect("checked");
    let f = parse_f(&w.f, &["t", s.param.as_str()])?;
    let interval = w.interval();
    let sig = match w.sig {
        Some(sig) => sig,
        None => {
            let first = s.values.first().ok_or_else(|| CliError::Config("[sweep] values is empty".into()))?;
            let sub = subcase_dispatch(&f.substitute(&s.param, *first), w.c, interval, opts.grid)
                .map_err(numerical("pipeline::subcase_dispatch"))?;
            ambient_sig(w.n, None, sub)?
        }
    };
    if sig.dim() != w.n + 1 {
        return Err(CliError::Config(format!("n = {} needs ambient dimension {}", w.n, w.n + 1)));
    }
    let rows = sweep(&f, &s.param, &s.values, w.c, interval, sig, opts);
    job.put("param", &s.param);
    job.put("rows", &rows);
    job.status = if rows.iter().all(|r| r.verdict == Verdict::Pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    job.files.insert("samples.csv".into(), sweep_csv(&s.param, &rows));
    Ok(())
}

fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let names: Vec<String> = rows
        .iter()
        .find(|r| !r.residuals.is_empty())
        .map(|r| r.residuals.iter().map(|x| x.name.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![param.to_string(), "subcase".into(), "theta0".into(), "verdict".into()];
    header.extend(names.iter().cloned());
    header.push("error".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                output::format_f64(r.value),
                r.subcase.map(|s| format!("{s:?}")).unwrap_or_default(),
                r.theta0.map(output::format_f64).unwrap_or_default(),
                format!("{:?}", r.verdict).to_lowercase(),
            ];
            for n in &names {
                let v = r.residuals.iter().find(|x| &x.name == n).map(|x| output::format_f64(x.value));
                cells.push(v.unwrap_or_default());
            }
            cells.push(r.error.clone().unwrap_or_default());
            cells
        })
        .collect();
    output::to_csv(&header, &body).expect("in-memory csv")
}

