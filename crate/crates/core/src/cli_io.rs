//! Run configuration, subcommand orchestration and artifact export.
//!
//! Config files are `key = value` lines grouped in `[section]`s, with `#`
//! comments. Keys are unique across sections, so a key may also appear
//! before any section header. Unknown keys are errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::continuation::{self, Branch, ContinuationParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{self, RadialMesh};
use crate::pohozaev::{self, Field};
use crate::problem::{self, HModifier, ProblemSpec};
use crate::solver::{self, NewtonParams, ShootingParams};
use crate::spectrum;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub alpha: f64,
    pub h_modifier: HModifier,

    pub intervals: usize,
    pub gamma: f64,

    pub tol_newton: f64,
    pub delta_reg: f64,
    pub max_iter: usize,

    pub ds0: f64,
    pub amplitude_max: f64,
    pub max_steps: usize,
    pub thin_every: usize,
    pub fold_hysteresis: f64,

    /// `minimal`: λ grid from `lambda_min` to `lambda_max`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_steps: usize,

    /// `spectrum`: solution at this amplitude (0 means `u ≡ 0`, `λ = 0`).
    pub amplitude: f64,
    pub k: usize,
    pub eig_tol: f64,

    /// `pohozaev`: minimal solution at this λ, identity parameter `a`.
    pub lambda: f64,
    pub a: f64,

    /// `certificate`: rows separated by `;`, entries by `,`, or `I/N`.
    pub matrix: String,
    pub offset: String,
    pub samples: usize,
    pub boundary_file: String,

    /// `oracle`: comma-separated amplitudes.
    pub amplitudes: String,
    pub shooting_steps: usize,

    pub out_dir: String,
    pub json: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let n = NewtonParams::default();
        let c = ContinuationParams::default();
        Self {
            dimension: 2,
            alpha: 0.0,
            h_modifier: HModifier::Constant(1.0),
            intervals: 1024,
            gamma: 2.0,
            tol_newton: n.tol,
            delta_reg: n.delta_reg,
            max_iter: n.max_iter,
            ds0: c.ds0,
            amplitude_max: c.amplitude_max,
            max_steps: c.max_steps,
            thin_every: c.thin_every,
            fold_hysteresis: c.fold_hysteresis,
            lambda_min: 0.0,
            lambda_max: 1.0,
            lambda_steps: 50,
            amplitude: 0.0,
            k: 5,
            eig_tol: spectrum::DEFAULT_TOL,
            lambda: 0.5,
            a: 0.0,
            matrix: "I/N".into(),
            offset: String::new(),
            samples: 1000,
            boundary_file: String::new(),
            amplitudes: "0.1,0.5,0.9".into(),
            shooting_steps: ShootingParams::default().steps,
            out_dir: "out".into(),
            json: true,
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("problem", &["dimension", "alpha", "h_modifier"]),
    ("mesh", &["M", "gamma"]),
    ("solver", &["tol_newton", "delta_reg", "max_iter"]),
    ("continuation", &["ds0", "amplitude_max", "max_steps", "thin_every", "fold_hysteresis"]),
    ("sweep", &["lambda_min", "lambda_max", "lambda_steps"]),
    ("spectrum", &["amplitude", "k", "eig_tol"]),
    ("pohozaev", &["lambda", "a"]),
    ("certificate", &["matrix", "offset", "samples", "boundary_file"]),
    ("oracle", &["amplitudes", "shooting_steps"]),
    ("output", &["out_dir", "json"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

fn parse_h(value: &str) -> std::result::Result<HModifier, String> {
    if let Some(v) = value.strip_prefix("constant:") {
        return v.trim().parse().map(HModifier::Constant).map_err(|e| format!("{e}"));
    }
    if let Some(v) = value.strip_prefix("polynomial:") {
        let c: std::result::Result<Vec<f64>, _> = v.split(',').map(|t| t.trim().parse::<f64>()).collect();
        return c.map(HModifier::Polynomial).map_err(|e| format!("{e}"));
    }
    Err(format!("expected `constant:<value>` or `polynomial:<c0,c1,...>`, got `{value}`"))
}

fn render_h(h: &HModifier) -> String {
    match h {
        HModifier::Constant(c) => format!("constant:{c:?}"),
        HModifier::Polynomial(c) => {
            format!("polynomial:{}", c.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","))
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Range { key: key.into(), msg: format!("`{value}`: {e}") })
}

fn range(key: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Range { key: key.into(), msg: msg.into() })
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|t| num::<f64>(key, t.trim())).collect()
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dimension" => self.dimension = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "h_modifier" => self.h_modifier = parse_h(value).map_err(|msg| Error::Range { key: key.into(), msg })?,
            "M" => self.intervals = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "tol_newton" => self.tol_newton = num(key, value)?,
            "delta_reg" => self.delta_reg = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "ds0" => self.ds0 = num(key, value)?,
            "amplitude_max" => self.amplitude_max = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "thin_every" => self.thin_every = num(key, value)?,
            "fold_hysteresis" => self.fold_hysteresis = num(key, value)?,
            "lambda_min" => self.lambda_min = num(key, value)?,
            "lambda_max" => self.lambda_max = num(key, value)?,
            "lambda_steps" => self.lambda_steps = num(key, value)?,
            "amplitude" => self.amplitude = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "eig_tol" => self.eig_tol = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "a" => self.a = num(key, value)?,
            "matrix" => self.matrix = value.into(),
            "offset" => self.offset = value.into(),
            "samples" => self.samples = num(key, value)?,
            "boundary_file" => self.boundary_file = value.into(),
            "amplitudes" => self.amplitudes = value.into(),
            "shooting_steps" => self.shooting_steps = num(key, value)?,
            "out_dir" => self.out_dir = value.into(),
            "json" => self.json = num(key, value)?,
            _ => unreachable!("key table and setter disagree on `{key}`"),
        }
        Ok(())
    }

    /// Range checks on every field.
    pub fn validate(&self) -> Result<()> {
        range("dimension", (1..=64).contains(&self.dimension), "must lie in 1..=64")?;
        range("alpha", self.alpha.is_finite() && self.alpha >= 0.0, "must be finite and >= 0")?;
        ProblemSpec::new(self.dimension, self.alpha, self.h_modifier.clone())
            .map_err(|e| Error::Range { key: "h_modifier".into(), msg: e.to_string() })?;
        range("M", self.intervals >= mesh::MIN_INTERVALS, "must be at least 16")?;
        range("gamma", self.gamma.is_finite() && self.gamma >= 1.0, "must be >= 1")?;
        range("tol_newton", self.tol_newton > 0.0, "must be positive")?;
        range("delta_reg", self.delta_reg > 0.0 && self.delta_reg < 0.5, "must lie in (0, 0.5)")?;
        range("max_iter", self.max_iter > 0, "must be positive")?;
        range("ds0", self.ds0 > 0.0 && self.ds0.is_finite(), "must be positive")?;
        range(
            "amplitude_max",
            self.amplitude_max > 0.0 && self.amplitude_max < 1.0 - self.delta_reg,
            "must lie in (0, 1 - delta_reg)",
        )?;
        range("max_steps", self.max_steps > 0, "must be positive")?;
        range("thin_every", self.thin_every > 0, "must be positive")?;
        range("fold_hysteresis", self.fold_hysteresis >= 0.0, "must be >= 0")?;
        range("lambda_min", self.lambda_min >= 0.0, "must be >= 0")?;
        range("lambda_max", self.lambda_max > self.lambda_min, "must exceed lambda_min")?;
        range("lambda_steps", self.lambda_steps >= 1, "must be positive")?;
        range("amplitude", (0.0..1.0).contains(&self.amplitude), "must lie in [0, 1)")?;
        range("k", (1..=10).contains(&self.k), "must lie in 1..=10")?;
        range("eig_tol", self.eig_tol > 0.0, "must be positive")?;
        range("lambda", self.lambda >= 0.0 && self.lambda.is_finite(), "must be >= 0")?;
        range("a", self.a.is_finite(), "must be finite")?;
        range("samples", self.samples > 0, "must be positive")?;
        let amps = parse_list("amplitudes", &self.amplitudes)?;
        range("amplitudes", amps.iter().all(|a| *a > 0.0 && *a < 1.0), "each must lie in (0, 1)")?;
        range("shooting_steps", self.shooting_steps >= 1000, "must be at least 1000")?;
        range("out_dir", !self.out_dir.is_empty(), "must be nonempty")?;
        for (key, v) in [("matrix", &self.matrix), ("amplitudes", &self.amplitudes), ("offset", &self.offset)] {
            range(key, !v.contains('\n') && !v.contains('#'), "must be a single line without `#`")?;
        }
        range("boundary_file", !self.boundary_file.contains('#'), "must not contain `#`")?;
        Ok(())
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(self.dimension, self.alpha, self.h_modifier.clone())
    }

    pub fn mesh(&self) -> Result<RadialMesh> {
        mesh::build_mesh(self.intervals, self.gamma, self.dimension)
    }

    pub fn newton(&self) -> NewtonParams {
        NewtonParams { tol: self.tol_newton, max_iter: self.max_iter, delta_reg: self.delta_reg }
    }

    pub fn continuation(&self) -> ContinuationParams {
        ContinuationParams {
            ds0: self.ds0,
            amplitude_max: self.amplitude_max,
            max_steps: self.max_steps,
            thin_every: self.thin_every,
            fold_hysteresis: self.fold_hysteresis,
            newton: self.newton(),
        }
    }

    fn get(&self, key: &str) -> String {
        match key {
            "dimension" => self.dimension.to_string(),
            "alpha" => format!("{:?}", self.alpha),
            "h_modifier" => render_h(&self.h_modifier),
            "M" => self.intervals.to_string(),
            "gamma" => format!("{:?}", self.gamma),
            "tol_newton" => format!("{:?}", self.tol_newton),
            "delta_reg" => format!("{:?}", self.delta_reg),
            "max_iter" => self.max_iter.to_string(),
            "ds0" => format!("{:?}", self.ds0),
            "amplitude_max" => format!("{:?}", self.amplitude_max),
            "max_steps" => self.max_steps.to_string(),
            "thin_every" => self.thin_every.to_string(),
            "fold_hysteresis" => format!("{:?}", self.fold_hysteresis),
            "lambda_min" => format!("{:?}", self.lambda_min),
            "lambda_max" => format!("{:?}", self.lambda_max),
            "lambda_steps" => self.lambda_steps.to_string(),
            "amplitude" => format!("{:?}", self.amplitude),
            "k" => self.k.to_string(),
            "eig_tol" => format!("{:?}", self.eig_tol),
            "lambda" => format!("{:?}", self.lambda),
            "a" => format!("{:?}", self.a),
            "matrix" => self.matrix.clone(),
            "offset" => self.offset.clone(),
            "samples" => self.samples.to_string(),
            "boundary_file" => self.boundary_file.clone(),
            "amplitudes" => self.amplitudes.clone(),
            "shooting_steps" => self.shooting_steps.to_string(),
            "out_dir" => self.out_dir.clone(),
            "json" => self.json.to_string(),
            _ => unreachable!(),
        }
    }
}

/// Parses a config file; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<&str> = None;
    let mut seen: Vec<&str> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("malformed section header `{line}`") })?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("unknown section `[{name}]`") })?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected `key = value`, got `{line}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let Some(home) = section_of(key) else {
            return Err(Error::UnknownKey { line: line_no, key: key.into() });
        };
        if let Some(s) = section {
            if s != home {
                return Err(Error::Parse { line: line_no, msg: format!("key `{key}` belongs in [{home}], not [{s}]") });
            }
        }
        let canonical = SECTIONS.iter().flat_map(|(_, ks)| ks.iter()).find(|k| **k == key).copied().expect("known");
        if seen.contains(&canonical) {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate key `{key}`") });
        }
        seen.push(canonical);
        cfg.set(key, value).map_err(|e| match e {
            Error::Range { key, msg } => Error::Range { key, msg: format!("line {line_no}: {msg}") },
            other => other,
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form; `parse_config(&render(c)) == c` for valid `c`.
pub fn render(cfg: &RunConfig) -> String {
    let mut out = String::new();
    for (i, (section, keys)) in SECTIONS.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[{section}]");
        for key in keys.iter() {
            let _ = writeln!(out, "{key} = {}", cfg.get(key));
        }
    }
    out
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse_config(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.into(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_file(path, &text)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub const BRANCH_HEADER: &str = "step,t,lambda,amplitude,mu1,morse_index_radial,is_fold";

pub fn branch_csv(branch: &Branch) -> String {
    let mut out = String::with_capacity(96 * (branch.points.len() + 1));
    out.push_str(BRANCH_HEADER);
    out.push('\n');
    for (i, p) in branch.points.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            sci(p.t),
            sci(p.lambda),
            sci(p.amplitude),
            sci(p.mu1),
            p.morse_index_radial,
            u8::from(p.is_fold)
        );
    }
    out
}

/// Writes the branch as CSV, 17 significant digits per value.
pub fn export_branch_csv(branch: &Branch, path: &Path) -> Result<()> {
    if branch.points.is_empty() {
        return Err(Error::domain("cannot export an empty branch"));
    }
    write_file(path, &branch_csv(branch))
}

/// Branch without the stored nodal vectors, for JSON export.
#[derive(Serialize)]
struct BranchReport<'a> {
    points: Vec<PointRow>,
    folds: &'a [continuation::Fold],
    metadata: &'a continuation::BranchMetadata,
}

#[derive(Serialize)]
struct PointRow {
    t: f64,
    lambda: f64,
    amplitude: f64,
    mu1: f64,
    mu_near_zero: f64,
    morse_index_radial: usize,
    is_fold: bool,
}

fn branch_report(branch: &Branch) -> BranchReport<'_> {
    BranchReport {
        points: branch
            .points
            .iter()
            .map(|p| PointRow {
                t: p.t,
                lambda: p.lambda,
                amplitude: p.amplitude,
                mu1: p.mu1,
                mu_near_zero: p.mu_near_zero,
                morse_index_radial: p.morse_index_radial,
                is_fold: p.is_fold,
            })
            .collect(),
        folds: &branch.folds,
        metadata: &branch.metadata,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Trace,
    Minimal,
    Spectrum,
    Extremal,
    Pohozaev,
    Certificate,
    Oracle,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Trace,
        Subcommand::Minimal,
        Subcommand::Spectrum,
        Subcommand::Extremal,
        Subcommand::Pohozaev,
        Subcommand::Certificate,
        Subcommand::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Trace => "trace",
            Subcommand::Minimal => "minimal",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Extremal => "extremal",
            Subcommand::Pohozaev => "pohozaev",
            Subcommand::Certificate => "certificate",
            Subcommand::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// What a subcommand wrote and a one-line summary for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

/// Process exit status for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: String,
    parallel: bool,
    elapsed_seconds: f64,
    status: &'a str,
}

/// Runs one subcommand, writing artifacts into `out_dir` (created if
/// needed) plus a `run_meta.json` sidecar with timing.
pub fn run_subcommand(cmd: Subcommand, cfg: &RunConfig, out_dir: &Path, exec: Execution) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.into(), source })?;
    let start = Instant::now();
    let result = dispatch(cmd, cfg, out_dir, exec);
    let sidecar = Sidecar {
        tool: "mems-bifurcate",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        config: render(cfg),
        parallel: exec.is_parallel(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        status: match &result {
            Ok(_) => "ok",
            Err(e) if e.is_numerical() => "numerical failure",
            Err(_) => "usage error",
        },
    };
    write_json(&out_dir.join("run_meta.json"), &sidecar)?;
    result
}

fn dispatch(cmd: Subcommand, cfg: &RunConfig, out: &Path, exec: Execution) -> Result<RunOutcome> {
    match cmd {
        Subcommand::Trace => run_trace(cfg, out),
        Subcommand::Minimal => run_minimal(cfg, out),
        Subcommand::Spectrum => run_spectrum(cfg, out, exec),
        Subcommand::Extremal => run_extremal(cfg, out),
        Subcommand::Pohozaev => run_pohozaev(cfg, out),
        Subcommand::Certificate => run_certificate(cfg, out),
        Subcommand::Oracle => run_oracle(cfg, out, exec),
    }
}

fn write_branch(branch: &Branch, cfg: &RunConfig, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let csv = out.join("branch.csv");
    export_branch_csv(branch, &csv)?;
    artifacts.push(csv);
    if cfg.json {
        let json = out.join("branch.json");
        write_json(&json, &branch_report(branch))?;
        artifacts.push(json);
    }
    Ok(())
}

fn run_trace(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let mesh = cfg.mesh()?;
    let mut artifacts = Vec::new();
    let branch = match continuation::trace_branch(&mesh, &spec, &cfg.continuation()) {
        Ok(b) => b,
        Err(Error::Stall(partial)) => {
            write_branch(&partial, cfg, out, &mut artifacts)?;
            return Err(Error::Stall(partial));
        }
        Err(e) => return Err(e),
    };
    write_branch(&branch, cfg, out, &mut artifacts)?;
    let last = branch.final_point();
    let folds: Vec<String> = branch.folds.iter().map(|f| format!("{:.6}", f.lambda)).collect();
    Ok(RunOutcome {
        artifacts,
        summary: format!(
            "{} points, {} folds [{}], final lambda {:.6} at amplitude {}",
            branch.points.len(),
            branch.folds.len(),
            folds.join(", "),
            last.lambda,
            last.amplitude
        ),
    })
}

#[derive(Serialize)]
struct MinimalSummary {
    points: usize,
    truncated: bool,
    failed_lambda: Option<f64>,
    last_good_lambda: Option<f64>,
    note: String,
}

fn run_minimal(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let mesh = cfg.mesh()?;
    let n = cfg.lambda_steps;
    let grid: Vec<f64> =
        (0..=n).map(|k| cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * k as f64 / n as f64).collect();
    let sweep = solver::minimal_branch(&mesh, &spec, &grid, &cfg.newton())?;
    let mut csv = String::from("step,lambda,amplitude,residual_norm,newton_iters,morse_index_radial\n");
    for (i, s) in sweep.solutions.iter().enumerate() {
        let index = spectrum::morse_index_radial(&mesh, &spec, &s.u, s.lambda)?;
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{index}",
            sci(s.lambda),
            sci(s.amplitude),
            sci(s.residual_norm),
            s.newton_iters
        );
    }
    let mut artifacts = vec![out.join("minimal.csv")];
    write_file(&artifacts[0], &csv)?;
    let note = match sweep.failed_lambda {
        Some(l) => format!("Newton failed at lambda = {l}; no minimal solution continues past the pull-in value"),
        None => "grid covered without failure".into(),
    };
    let summary = MinimalSummary {
        points: sweep.solutions.len(),
        truncated: sweep.truncated(),
        failed_lambda: sweep.failed_lambda,
        last_good_lambda: sweep.last_good_lambda(),
        note: note.clone(),
    };
    if cfg.json {
        let p = out.join("minimal.json");
        write_json(&p, &summary)?;
        artifacts.push(p);
    }
    Ok(RunOutcome { artifacts, summary: format!("{} solutions; {note}", summary.points) })
}

#[derive(Serialize)]
struct SpectrumReport {
    lambda: f64,
    amplitude: f64,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    morse_index_radial: usize,
    stability: problem::StabilityKind,
}

fn run_spectrum(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let mesh = cfg.mesh()?;
    let (u, lambda) = if cfg.amplitude > 0.0 {
        let s = continuation::amplitude_solve(&mesh, &spec, cfg.amplitude, &cfg.newton())?;
        (s.u, s.lambda)
    } else {
        (vec![0.0; mesh.intervals() + 1], 0.0)
    };
    let t = spectrum::symmetrize(&mesh, &spec, &u, lambda)?;
    let res = spectrum::smallest_eigenvalues(&t, cfg.k, cfg.eig_tol, exec)?;
    let class = problem::classify_stability(res.mu1(), problem::DEFAULT_TOL_EIG)?;
    let report = SpectrumReport {
        lambda,
        amplitude: u[0],
        eigenvalues: res.eigenvalues.clone(),
        residuals: res.residuals.clone(),
        morse_index_radial: res.morse_index_radial,
        stability: class.kind,
    };
    let p = out.join("spectrum.json");
    write_json(&p, &report)?;
    Ok(RunOutcome {
        artifacts: vec![p],
        summary: format!("mu1 = {:.10}, radial Morse index {}", res.mu1(), res.morse_index_radial),
    })
}

#[derive(Serialize)]
struct ExtremalReport {
    dimension: usize,
    alpha: f64,
    lambda_star: f64,
    beta: f64,
    regime: problem::Regime,
    alpha_threshold: Option<f64>,
    identity_residual: f64,
    discrete_residual_max: f64,
}

fn run_extremal(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let mesh = cfg.mesh()?;
    let ex = problem::exact_extremal(cfg.dimension, cfg.alpha);
    let u: Vec<f64> = mesh.nodes().iter().map(|&r| ex.u_star(r)).collect();
    let mut worst = 0.0f64;
    for (i, &r) in mesh.nodes()[..mesh.intervals()].iter().enumerate() {
        if r >= 0.1 {
            worst = worst.max(mesh::local_residual(&mesh, &spec, &u, ex.lambda_star, i)?.abs());
        }
    }
    let report = ExtremalReport {
        dimension: ex.dimension,
        alpha: ex.alpha,
        lambda_star: ex.lambda_star,
        beta: ex.beta,
        regime: ex.regime,
        alpha_threshold: problem::alpha_threshold(cfg.dimension).ok(),
        identity_residual: problem::verify_extremal_identity(cfg.dimension, cfg.alpha),
        discrete_residual_max: worst,
    };
    let p = out.join("extremal.json");
    write_json(&p, &report)?;
    Ok(RunOutcome {
        artifacts: vec![p],
        summary: format!("lambda* = {:.12}, beta = {:.6}, {:?}", ex.lambda_star, ex.beta, ex.regime),
    })
}

fn run_pohozaev(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let mesh = cfg.mesh()?;
    let ramp: Vec<f64> = (1..=32).map(|k| cfg.lambda * k as f64 / 32.0).collect();
    let sweep = solver::minimal_branch(&mesh, &spec, &ramp, &cfg.newton())?;
    if let Some(l) = sweep.failed_lambda {
        return Err(Error::NotFound(format!("no minimal solution at lambda = {l}")));
    }
    let sol = sweep.solutions.last().expect("ramp is nonempty");
    let zero = vec![0.0; sol.u.len()];
    let report = pohozaev::pohozaev_residual(&mesh, &spec, cfg.lambda, &sol.u, &zero, cfg.a, &Field::RadialOverN)?;
    let p = out.join("pohozaev.json");
    write_json(&p, &report)?;
    Ok(RunOutcome {
        artifacts: vec![p],
        summary: format!("relative Pohozaev residual {:.3e}", report.relative_residual),
    })
}

fn parse_matrix(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    if text.trim() == "I/N" {
        return Ok(pohozaev::identity_over_n(n));
    }
    let rows: Vec<Vec<f64>> = text.split(';').map(|r| parse_list("matrix", r)).collect::<Result<_>>()?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Range { key: "matrix".into(), msg: format!("need {n} rows of {n} entries") });
    }
    Ok(rows)
}

fn run_certificate(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let n = cfg.dimension;
    let a = parse_matrix(&cfg.matrix, n)?;
    let b = if cfg.offset.trim().is_empty() { vec![0.0; n] } else { parse_list("offset", &cfg.offset)? };
    if b.len() != n {
        return Err(Error::Range { key: "offset".into(), msg: format!("need {n} entries") });
    }
    let samples = if cfg.boundary_file.is_empty() {
        pohozaev::unit_sphere_samples(n, cfg.samples)
    } else {
        let path = Path::new(&cfg.boundary_file);
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        pohozaev::parse_boundary_table(&text, n)?
    };
    let cert = pohozaev::star_certificate(&samples, n, cfg.alpha, &a, &b)?;
    let p = out.join("certificate.json");
    write_json(&p, &cert)?;
    Ok(RunOutcome { artifacts: vec![p], summary: format!("{:?} (M bound {})", cert.verdict, cert.m_bound) })
}

fn run_oracle(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<RunOutcome> {
    let spec = cfg.spec()?;
    let amps = parse_list("amplitudes", &cfg.amplitudes)?;
    let params = ShootingParams { steps: cfg.shooting_steps, ..ShootingParams::default() };
    let rows = solver::oracle_table(&spec, &amps, &params, exec);
    let mut csv = String::from("amplitude,lambda,terminal\n");
    for row in rows {
        let r = row?;
        let _ = writeln!(csv, "{},{},{}", sci(r.amplitude), sci(r.lambda), sci(r.terminal));
    }
    let p = out.join("oracle.csv");
    write_file(&p, &csv)?;
    Ok(RunOutcome { artifacts: vec![p], summary: format!("{} amplitudes", amps.len()) })
}
