use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use cech_betti::betti_process::{betti_curve_with_budget, lifetime_sum, write_census_csv, ComponentCensus, CurveMeta};
use cech_betti::experiments::run_experiment;
use cech_betti::homology::component_census_records;
use cech_betti::limit_constants::{
    eta, mu, nu, phi_truncated, union_ball_volume, volume_d1, ConstantRecord, McEstimate, Sign,
};
use cech_betti::pointproc::{c_f_k, sample_poisson_process, Density, PointCloud};
use cech_betti::rng::{derive_seed, stream_rng};
use serde::Serialize;

use crate::config::{Config, ConstantRequest, SampleConfig};

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Config(String),
    /// Budget, sampler or IO failure (exit 3).
    Resource(String),
    /// An output failed its own consistency check (exit 1).
    Check(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Resource(m) => write!(f, "resource: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<cech_betti::Error> for CliError {
    fn from(e: cech_betti::Error) -> Self {
        if e.is_resource() || matches!(e, cech_betti::Error::Io(_)) {
            CliError::Resource(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Resource(e.to_string())
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    fn ok(outputs: Vec<String>) -> Self {
        Self { outputs, lines: Vec::new(), passed: true }
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = out.join(name);
    let f = File::create(&path).map_err(|e| CliError::Resource(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Resource(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn section<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block.as_ref().ok_or_else(|| CliError::Config(format!("missing \"{name}\" block")))
}

fn draw(spec: &SampleConfig) -> Result<PointCloud, CliError> {
    let density = Density::from_spec(&spec.density)?;
    let mut rng = stream_rng(spec.seed, 0);
    let mut cloud = sample_poisson_process(&density, spec.n, spec.scale, &mut rng)?;
    cloud.seed = Some(spec.seed);
    Ok(cloud)
}

pub fn sample(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    let spec = section(&config.sample, "sample")?;
    let cloud = draw(spec)?;
    let mut w = create(out, "cloud.csv")?;
    cloud.write_csv(&mut w)?;
    w.flush()?;
    let mut outcome = Outcome::ok(vec!["cloud.csv".into()]);
    outcome.lines.push(format!("sampled {} points in d={}", cloud.len(), cloud.dim()));
    Ok(outcome)
}

pub fn betti(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    let b = section(&config.betti, "betti")?;
    let cloud = match (&b.input, &b.generate) {
        (Some(path), None) => {
            let f = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            PointCloud::read_csv(BufReader::new(f))?
        }
        (None, Some(spec)) => draw(spec)?,
        _ => return Err(CliError::Config("betti needs exactly one of \"input\" and \"generate\"".into())),
    };
    let grid = b.grid.clone().expect("resolved");
    if let Some(t) = grid.iter().find(|&&t| !(t >= 0.0 && t <= b.t_max)) {
        return Err(CliError::Config(format!("grid point {t} outside [0, t_max={}]", b.t_max)));
    }
    let curve = betti_curve_with_budget(&cloud, b.k, b.t_max, b.simplex_budget)?;

    let mut w = create(out, "curve.csv")?;
    curve.write_csv(&mut w)?;
    w.flush()?;

    let mut w = create(out, "barcode.csv")?;
    writeln!(w, "q,birth,death")?;
    for (birth, death) in &curve.bars {
        let death = if death.is_finite() { (death / cloud.scale).to_string() } else { "inf".into() };
        writeln!(w, "{},{},{}", b.k, birth / cloud.scale, death)?;
    }
    w.flush()?;

    let mut censuses = Vec::with_capacity(grid.len());
    for &t in &grid {
        let records = component_census_records(&cloud, t, b.k, b.simplex_budget)?;
        let census = ComponentCensus::from_components(t, b.k, &records);
        let direct = curve.value_at(t) as u64;
        if census.betti() != direct {
            return Err(CliError::Check(format!(
                "census gives beta={} at t={t} but the persistence curve gives {direct}",
                census.betti()
            )));
        }
        censuses.push(census);
    }
    let mut w = create(out, "census.csv")?;
    write_census_csv(&censuses, &CurveMeta::of(&cloud, b.k), &mut w)?;
    w.flush()?;

    let mut w = create(out, "lifetime.csv")?;
    writeln!(w, "t,lifetime")?;
    for &t in &grid {
        writeln!(w, "{},{}", t, lifetime_sum(&curve, t))?;
    }
    w.flush()?;

    let mut outcome = Outcome::ok(vec![
        "curve.csv".into(),
        "barcode.csv".into(),
        "census.csv".into(),
        "lifetime.csv".into(),
    ]);
    outcome.lines.push(format!("{} points, {} bars in degree {}", cloud.len(), curve.bars.len(), b.k));
    Ok(outcome)
}

fn evaluate(request: &ConstantRequest, seed: u64) -> Result<McEstimate, CliError> {
    Ok(match request {
        ConstantRequest::D1Volume { k, d, sign, samples } => volume_d1(*k, *d, *sign, *samples, seed)?,
        ConstantRequest::CFK { density, k } => McEstimate::exact(c_f_k(&Density::from_spec(density)?, *k)?, 0, seed),
        ConstantRequest::Mu { density, k, t1, t2, samples } => {
            mu(*k, None, *t1, *t2, &Density::from_spec(density)?, *samples, seed)?
        }
        ConstantRequest::Eta { density, k, i, j1, j2, t1, t2, samples, options } => {
            eta(*k, *i, *j1, *j2, *t1, *t2, &Density::from_spec(density)?, None, options, *samples, seed)?
        }
        ConstantRequest::Nu { density, k, i1, i2, j1, j2, t1, t2, samples, options } => nu(
            *k,
            *i1,
            *i2,
            *j1,
            *j2,
            *t1,
            *t2,
            &Density::from_spec(density)?,
            None,
            options,
            *samples,
            seed,
        )?,
        ConstantRequest::Phi { .. } => unreachable!("phi expands to a matrix"),
        ConstantRequest::UnionBallVolume { centers, r, samples } => union_ball_volume(centers, *r, *samples, seed)?,
    })
}

fn request_name(request: &ConstantRequest) -> String {
    match serde_json::to_value(request) {
        Ok(serde_json::Value::Object(map)) => map.get("name").and_then(|v| v.as_str()).unwrap_or("").to_string(),
        _ => String::new(),
    }
}

fn params_of(request: &ConstantRequest) -> serde_json::Value {
    let mut v = serde_json::to_value(request).expect("requests serialize");
    if let serde_json::Value::Object(map) = &mut v {
        map.remove("name");
    }
    v
}

pub fn constants(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    let c = section(&config.constants, "constants")?;
    let mut records: Vec<ConstantRecord> = Vec::new();
    for (index, request) in c.requests.iter().enumerate() {
        let seed = derive_seed(c.seed, index as u64);
        let name = request_name(request);
        if let ConstantRequest::Phi { density, k, m, grid, eta_samples, nu_samples, options } = request {
            let phi = phi_truncated(
                *m,
                *k,
                grid,
                &Density::from_spec(density)?,
                None,
                options,
                *eta_samples,
                *nu_samples,
                seed,
            )?;
            for (a, s) in grid.iter().enumerate() {
                for (b, t) in grid.iter().enumerate() {
                    let mut params = params_of(request);
                    params["s"] = (*s).into();
                    params["t"] = (*t).into();
                    let est = phi.get(a, b);
                    let mut record = ConstantRecord::new(&name, params, est);
                    record.samples = *eta_samples + *nu_samples;
                    records.push(record);
                }
            }
        } else {
            records.push(ConstantRecord::new(&name, params_of(request), evaluate(request, seed)?));
        }
    }

    // a D-volume of the minus sign is a subset of the plus one
    let mut d1: BTreeMap<(usize, usize), [Option<f64>; 2]> = BTreeMap::new();
    for (request, record) in c.requests.iter().zip(&records) {
        if let ConstantRequest::D1Volume { k, d, sign, .. } = request {
            let slot = usize::from(*sign == Sign::Minus);
            d1.entry((*k, *d)).or_default()[slot] = Some(record.value);
        }
    }
    let mut outcome = Outcome::ok(vec!["constants.json".into()]);
    for ((k, d), pair) in &d1 {
        if let [Some(plus), Some(minus)] = pair {
            if minus > plus {
                outcome.passed = false;
                outcome.lines.push(format!("FAIL d1_volume k={k} d={d}: minus {minus} exceeds plus {plus}"));
            }
        }
    }
    write_json(out, "constants.json", &records)?;
    for r in &records {
        outcome.lines.push(format!("{} = {} ± {}", r.name, r.value, r.std_error));
    }
    Ok(outcome)
}

pub fn experiment(config: &Config, out: &Path) -> Result<Outcome, CliError> {
    let e = section(&config.experiment, "experiment")?;
    let report = run_experiment(e)?;
    write_json(out, "report.json", &report)?;
    let mut w = create(out, "summary.csv")?;
    report.summary.write_csv(&mut w)?;
    w.flush()?;
    let mut outcome = Outcome::ok(vec!["report.json".into(), "summary.csv".into()]);
    for check in &report.checks {
        let failures = check.items.iter().filter(|i| i.acceptance && !i.passed).count();
        let verdict = if check.passed() { "PASS" } else { "FAIL" };
        outcome.lines.push(format!("{verdict} {} ({} items, {failures} failed)", check.check, check.items.len()));
    }
    outcome.passed = report.passed;
    Ok(outcome)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    threads: usize,
    outputs: &'a [String],
    config: &'a Config,
}

/// Echoes the resolved config and records what was written.
pub fn write_manifest(out: &Path, command: &str, config: &Config, outcome: &mut Outcome) -> Result<(), CliError> {
    write_json(out, "config.json", config)?;
    outcome.outputs.push("config.json".into());
    let manifest = Manifest {
        tool: "cech-betti",
        version: env!("CARGO_PKG_VERSION"),
        command,
        threads: config.threads.unwrap_or(1),
        outputs: &outcome.outputs,
        config,
    };
    write_json(out, "manifest.json", &manifest)
}
