//! Experiment driver: single runs against the built-in examples, CSV/JSON
//! output, and side-by-side reproduction of the published error tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdsolver::{check_stability, march, Method, SolveConfig, STABILITY_SLACK};
use crate::grid::{time_grid, uniform_axis, Grid2D};
use crate::problems::{example1, example2, ProblemData};
use crate::quadrature::lobatto_rule;
use crate::spectral::{required_nodes, solve_inverse, CoefficientTable, EnergySamples, SeriesSolution, Truncation};

/// Stopping tolerance of the fixed-point iteration in spectral runs.
pub const SPECTRAL_TOL: f64 = 1e-8;
pub const SPECTRAL_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    One,
    Two,
}

impl ExampleId {
    pub fn problem(&self) -> ProblemData {
        match self {
            ExampleId::One => example1(),
            ExampleId::Two => example2(),
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            ExampleId::One => 1,
            ExampleId::Two => 2,
        }
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "one" => Ok(ExampleId::One),
            "2" | "two" => Ok(ExampleId::Two),
            other => Err(Error::InvalidSpec(format!("unknown example `{other}` (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunMethod {
    #[serde(rename = "trapezoid")]
    UniformTrapezoid,
    #[serde(rename = "simpson")]
    UniformSimpson,
    #[serde(rename = "lobatto")]
    NonUniformLobatto,
    #[serde(rename = "spectral")]
    SpectralFixedPoint,
}

impl RunMethod {
    pub const FINITE_DIFFERENCE: [RunMethod; 3] = [
        RunMethod::UniformTrapezoid,
        RunMethod::UniformSimpson,
        RunMethod::NonUniformLobatto,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RunMethod::UniformTrapezoid => "trapezoid",
            RunMethod::UniformSimpson => "simpson",
            RunMethod::NonUniformLobatto => "lobatto",
            RunMethod::SpectralFixedPoint => "spectral",
        }
    }

    pub fn fd_method(&self) -> Option<Method> {
        match self {
            RunMethod::UniformTrapezoid => Some(Method::UniformTrapezoid),
            RunMethod::UniformSimpson => Some(Method::UniformSimpson),
            RunMethod::NonUniformLobatto => Some(Method::NonUniformLobatto),
            RunMethod::SpectralFixedPoint => None,
        }
    }
}

impl FromStr for RunMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trapezoid" | "trap" => Ok(RunMethod::UniformTrapezoid),
            "simpson" => Ok(RunMethod::UniformSimpson),
            "lobatto" | "nonuniform" => Ok(RunMethod::NonUniformLobatto),
            "spectral" => Ok(RunMethod::SpectralFixedPoint),
            other => Err(Error::InvalidSpec(format!(
                "unknown method `{other}` (expected trapezoid, simpson, lobatto or spectral)"
            ))),
        }
    }
}

impl fmt::Display for RunMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub example: ExampleId,
    pub method: RunMethod,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub trunc_m: Option<usize>,
    pub trunc_k: Option<usize>,
    /// Overrides the example's final time.
    pub horizon: Option<f64>,
    pub output_dir: PathBuf,
    pub emit_slices: bool,
}

impl RunSpec {
    /// Published resolutions for the finite-difference methods; a modest
    /// time grid and `M = K = 25` for the spectral method.
    pub fn defaults(example: ExampleId, method: RunMethod) -> Self {
        let nt = match (example, method) {
            (_, RunMethod::SpectralFixedPoint) => 200,
            (ExampleId::One, RunMethod::NonUniformLobatto) => 147_000,
            (ExampleId::One, _) => 2700,
            (ExampleId::Two, RunMethod::NonUniformLobatto) => 49_000,
            (ExampleId::Two, _) => 900,
        };
        let spectral = method == RunMethod::SpectralFixedPoint;
        Self {
            example,
            method,
            nx: 26,
            ny: 26,
            nt,
            trunc_m: spectral.then_some(25),
            trunc_k: spectral.then_some(25),
            horizon: None,
            output_dir: PathBuf::from("out"),
            emit_slices: false,
        }
    }

    /// Builds a spec from `key = value` pairs. `example` and `method` are
    /// required; everything else falls back to [`RunSpec::defaults`].
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        const KEYS: [&str; 10] = [
            "example", "method", "nx", "ny", "nt", "trunc_m", "trunc_k", "horizon", "output_dir", "emit_slices",
        ];
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidSpec(format!("unknown key `{k}`")));
        }
        let example: ExampleId = map
            .get("example")
            .ok_or_else(|| Error::InvalidSpec("missing `example`".into()))?
            .parse()?;
        let method: RunMethod = map
            .get("method")
            .ok_or_else(|| Error::InvalidSpec("missing `method`".into()))?
            .parse()?;
        let mut spec = Self::defaults(example, method);
        if let Some(v) = map.get("nx") {
            spec.nx = parse_value("nx", v)?;
        }
        if let Some(v) = map.get("ny") {
            spec.ny = parse_value("ny", v)?;
        }
        if let Some(v) = map.get("nt") {
            spec.nt = parse_value("nt", v)?;
        }
        if let Some(v) = map.get("trunc_m") {
            spec.trunc_m = Some(parse_value("trunc_m", v)?);
        }
        if let Some(v) = map.get("trunc_k") {
            spec.trunc_k = Some(parse_value("trunc_k", v)?);
        }
        if let Some(v) = map.get("horizon") {
            spec.horizon = Some(parse_value("horizon", v)?);
        }
        if let Some(v) = map.get("output_dir") {
            spec.output_dir = PathBuf::from(v);
        }
        if let Some(v) = map.get("emit_slices") {
            spec.emit_slices = parse_value("emit_slices", v)?;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidSpec(format!(
                "nx and ny must be at least 2, got {} and {}",
                self.nx, self.ny
            )));
        }
        if self.nt == 0 {
            return Err(Error::InvalidSpec("nt must be positive".into()));
        }
        if self.method == RunMethod::UniformSimpson && (self.nx % 2 != 0 || self.ny % 2 != 0) {
            return Err(Error::InvalidSpec(format!(
                "Simpson's rule needs even nx and ny, got {} and {}",
                self.nx, self.ny
            )));
        }
        if let Some(h) = self.horizon {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::InvalidSpec(format!("horizon must be positive, got {h}")));
            }
        }
        let has_trunc = self.trunc_m.is_some() || self.trunc_k.is_some();
        match self.method {
            RunMethod::SpectralFixedPoint => match self.trunc_k {
                Some(k) if k >= 1 && self.trunc_m.is_some() => {}
                Some(0) => return Err(Error::InvalidSpec("trunc_k must be at least 1".into())),
                _ => return Err(Error::InvalidSpec("spectral runs need trunc_m and trunc_k".into())),
            },
            _ if has_trunc => {
                return Err(Error::InvalidSpec(
                    "trunc_m and trunc_k apply to the spectral method only".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Prefix of every file the run writes, e.g. `ex1_trapezoid`.
    pub fn file_prefix(&self) -> String {
        format!("ex{}_{}", self.example.number(), self.method.name())
    }

    fn problem(&self) -> Result<ProblemData> {
        let problem = self.example.problem();
        match self.horizon {
            Some(h) => problem.with_horizon(h),
            None => Ok(problem),
        }
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "example {} / {} / nx={} ny={} nt={}",
            self.example.number(),
            self.method,
            self.nx,
            self.ny,
            self.nt
        )?;
        if let (Some(m), Some(k)) = (self.trunc_m, self.trunc_k) {
            write!(f, " M={m} K={k}")?;
        }
        if let Some(h) = self.horizon {
            write!(f, " T={h}")?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("cannot parse `{key} = {value}`")))
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::InvalidSpec(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Max-norm error of `u(·, ·, T)` over all grid nodes.
    pub u_error_max: f64,
    /// Max-norm error of `p` over interior time levels.
    pub p_error_max: f64,
    /// Recovered `r(0)`; 1 up to quadrature error.
    pub r0: f64,
    /// `1 - ht / ht_max` for explicit runs.
    pub stability_margin: Option<f64>,
    pub wall_ms: u64,
    pub spec: RunSpec,
}

/// Max absolute difference between two arrays of equal shape.
pub fn error_max(approx: &Array2<f64>, exact: &Array2<f64>) -> Result<f64> {
    if approx.dim() != exact.dim() {
        return Err(Error::Shape {
            expected: exact.dim(),
            got: approx.dim(),
        });
    }
    Ok(approx
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn interior_max_error(approx: &[f64], exact: &[f64]) -> f64 {
    let n = approx.len();
    if n <= 2 {
        return approx.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    }
    approx[1..n - 1]
        .iter()
        .zip(&exact[1..n - 1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Fails early with an I/O error if `dir` cannot be created or written.
fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".ionkin-write-probe");
    fs::File::create(&probe)?.write_all(b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// What a run produced before it is written out.
struct RunOutput {
    times: Vec<f64>,
    p: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    u: Array2<f64>,
    r0: f64,
    stability_margin: Option<f64>,
}

fn run_fd(spec: &RunSpec, method: Method, problem: &ProblemData) -> Result<RunOutput> {
    let tg = time_grid(problem.horizon, spec.nt)?;
    let config = SolveConfig::new(method, spec.nx, spec.ny, tg)?;
    let result = march(problem, &config)?;
    Ok(RunOutput {
        times: tg.times().collect(),
        p: result.p_samples,
        xs: result.grid.x_axis.nodes().to_vec(),
        ys: result.grid.y_axis.nodes().to_vec(),
        u: result.u_final,
        r0: result.r_samples[0],
        stability_margin: Some(result.diagnostics.stability_margin),
    })
}

fn run_spectral(spec: &RunSpec, problem: &ProblemData) -> Result<RunOutput> {
    let trunc = Truncation::new(spec.trunc_m.unwrap_or(0), spec.trunc_k.unwrap_or(0))?;
    let nodes = required_nodes(trunc);
    let rule = lobatto_rule(&Grid2D::lobatto(nodes - 1, nodes - 1)?)?;
    let tg = time_grid(problem.horizon, spec.nt)?;
    let table = CoefficientTable::from_problem(problem, trunc, &rule, tg)?;
    let energy = EnergySamples::from_problem(problem, &tg)?;
    let solution = solve_inverse(&table, &energy, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
    log::info!(
        "fixed point reached after {} iterations (residual {:.2e})",
        solution.iterations,
        solution.residual
    );
    let series = SeriesSolution::new(&solution.p, &table)?;
    let xs = uniform_axis(spec.nx)?.nodes().to_vec();
    let ys = uniform_axis(spec.ny)?.nodes().to_vec();
    let mut u = Array2::zeros((xs.len(), ys.len()));
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            u[[i, j]] = series.evaluate(x, y, tg.steps())?;
        }
    }
    let r0 = rule.integrate_fn(|x, y| problem.phi(x, y)) / problem.energy(0.0);
    Ok(RunOutput {
        times: tg.times().collect(),
        p: solution.p.into_samples(),
        xs,
        ys,
        u,
        r0,
        stability_margin: None,
    })
}

/// Executes one run, writes its CSV/JSON artifacts into `spec.output_dir`,
/// and returns the error summary.
pub fn run(spec: &RunSpec) -> Result<ErrorReport> {
    spec.validate()?;
    ensure_writable(&spec.output_dir)?;
    let started = Instant::now();
    let wrap = |e: Error| match e {
        Error::Io(_) | Error::InvalidSpec(_) => e,
        other => Error::Run {
            spec: spec.to_string(),
            source: Box::new(other),
        },
    };
    let problem = spec.problem().map_err(wrap)?;
    let out = match spec.method.fd_method() {
        Some(method) => run_fd(spec, method, &problem),
        None => run_spectral(spec, &problem),
    }
    .map_err(wrap)?;

    let exact_p = problem.exact_p.as_ref().ok_or(Error::NotApplicable("example has no exact p"))?;
    let exact_u = problem.exact_u.as_ref().ok_or(Error::NotApplicable("example has no exact u"))?;
    let p_exact: Vec<f64> = out.times.iter().map(|&t| exact_p(t)).collect();
    let horizon = problem.horizon;
    let u_exact = Array2::from_shape_fn(out.u.dim(), |(i, j)| exact_u(out.xs[i], out.ys[j], horizon));
    let u_error_max = error_max(&out.u, &u_exact)?;
    let p_error_max = interior_max_error(&out.p, &p_exact);

    let prefix = spec.file_prefix();
    let mut trace = String::from("t,p_approx,p_exact,abs_err\n");
    for ((t, a), e) in out.times.iter().zip(&out.p).zip(&p_exact) {
        trace.push_str(&format!("{},{},{},{}\n", sci(*t), sci(*a), sci(*e), sci((a - e).abs())));
    }
    fs::write(spec.output_dir.join(format!("{prefix}_p_trace.csv")), trace)?;

    if spec.emit_slices {
        let mut slice = String::from("x,y,u_approx,u_exact,abs_err\n");
        for (i, x) in out.xs.iter().enumerate() {
            for (j, y) in out.ys.iter().enumerate() {
                let (a, e) = (out.u[[i, j]], u_exact[[i, j]]);
                slice.push_str(&format!("{},{},{},{},{}\n", sci(*x), sci(*y), sci(a), sci(e), sci((a - e).abs())));
            }
        }
        fs::write(spec.output_dir.join(format!("{prefix}_u_slice.csv")), slice)?;
    }

    let report = ErrorReport {
        u_error_max,
        p_error_max,
        r0: out.r0,
        stability_margin: out.stability_margin,
        wall_ms: started.elapsed().as_millis() as u64,
        spec: spec.clone(),
    };
    fs::write(
        spec.output_dir.join(format!("{prefix}_summary.json")),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub ht: f64,
    pub ht_max: f64,
    pub slack: f64,
    pub admitted: bool,
    /// Smallest `nt` strictly within the limit.
    pub suggested_nt: usize,
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ht           {:.6e}", self.ht)?;
        writeln!(f, "ht_max       {:.6e}", self.ht_max)?;
        writeln!(f, "ht / ht_max  {:.6}", self.ht / self.ht_max)?;
        writeln!(f, "slack        {:.1}%", 100.0 * self.slack)?;
        writeln!(f, "suggested nt {}", self.suggested_nt)?;
        write!(f, "{}", if self.admitted { "ADMITTED" } else { "REFUSED" })
    }
}

/// Evaluates the explicit stability check for a finite-difference spec
/// without marching.
pub fn stability_report(spec: &RunSpec) -> Result<StabilityReport> {
    spec.validate()?;
    let method = spec
        .method
        .fd_method()
        .ok_or(Error::NotApplicable("the spectral method has no time-step restriction"))?;
    let problem = spec.problem()?;
    let tg = time_grid(problem.horizon, spec.nt)?;
    let config = SolveConfig::new(method, spec.nx, spec.ny, tg)?;
    let grid = config.grid()?;
    let ht = tg.ht();
    let ht_max = crate::fdsolver::stability_limit(&grid);
    Ok(StabilityReport {
        ht,
        ht_max,
        slack: STABILITY_SLACK,
        admitted: check_stability(&grid, &tg).is_ok(),
        suggested_nt: (tg.horizon() / ht_max).ceil() as usize,
    })
}

/// Published errors `[u; p]` for trapezoid, Simpson and Lobatto.
pub fn published_reference(example: ExampleId) -> [[f64; 3]; 2] {
    match example {
        ExampleId::One => [[0.0017, 0.0012, 1.1715e-4], [0.0609, 0.0724, 0.0059]],
        ExampleId::Two => [[4.1218e-4, 3.8541e-4, 1.9697e-4], [0.3114, 0.2113, 0.0196]],
    }
}

#[derive(Debug)]
pub struct TableCell {
    pub method: RunMethod,
    pub nt: usize,
    pub outcome: std::result::Result<ErrorReport, String>,
}

#[derive(Debug)]
pub struct TableReport {
    pub example: ExampleId,
    pub cells: Vec<TableCell>,
    pub reference: [[f64; 3]; 2],
}

impl TableReport {
    /// Measured/reference ratios `[u; p]`, `None` for failed runs.
    pub fn ratios(&self) -> [[Option<f64>; 3]; 2] {
        let mut out = [[None; 3]; 2];
        for (c, cell) in self.cells.iter().enumerate() {
            if let Ok(r) = &cell.outcome {
                out[0][c] = Some(r.u_error_max / self.reference[0][c]);
                out[1][c] = Some(r.p_error_max / self.reference[1][c]);
            }
        }
        out
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.example.number();
        writeln!(f, "Example {n}: errors at the final time, nx = ny = 26")?;
        write!(f, "{:<22}", "")?;
        for cell in &self.cells {
            write!(f, "{:>16}", cell.method.name())?;
        }
        writeln!(f)?;
        write!(f, "{:<22}", "Nt")?;
        for cell in &self.cells {
            write!(f, "{:>16}", cell.nt)?;
        }
        writeln!(f)?;
        let ratios = self.ratios();
        for (row, label) in ["u error", "p error"].iter().enumerate() {
            write!(f, "{label:<22}")?;
            for cell in &self.cells {
                match &cell.outcome {
                    Ok(r) => {
                        let v = if row == 0 { r.u_error_max } else { r.p_error_max };
                        write!(f, "{v:>16.4e}")?;
                    }
                    Err(_) => write!(f, "{:>16}", "FAILED")?,
                }
            }
            writeln!(f)?;
            write!(f, "{:<22}", "  published reference")?;
            for v in self.reference[row] {
                write!(f, "{v:>16.4e}")?;
            }
            writeln!(f)?;
            write!(f, "{:<22}", "  ratio")?;
            for r in ratios[row] {
                match r {
                    Some(r) => write!(f, "{r:>16.3}")?,
                    None => write!(f, "{:>16}", "-")?,
                }
            }
            writeln!(f)?;
        }
        for cell in &self.cells {
            if let Err(e) = &cell.outcome {
                writeln!(f, "{} FAILED: {e}", cell.method)?;
            }
        }
        Ok(())
    }
}

/// Runs the three finite-difference methods at the published resolutions
/// concurrently and tabulates them against the published errors. A failed
/// run marks its column FAILED without aborting the others.
pub fn table_reproduction(example: ExampleId, output_dir: &Path) -> Result<TableReport> {
    ensure_writable(output_dir)?;
    let specs: Vec<RunSpec> = RunMethod::FINITE_DIFFERENCE
        .iter()
        .map(|&m| RunSpec {
            output_dir: output_dir.to_path_buf(),
            ..RunSpec::defaults(example, m)
        })
        .collect();
    let cells = std::thread::scope(|scope| {
        let handles: Vec<_> = specs.iter().map(|spec| scope.spawn(move || run(spec))).collect();
        handles
            .into_iter()
            .zip(&specs)
            .map(|(h, spec)| TableCell {
                method: spec.method,
                nt: spec.nt,
                outcome: match h.join() {
                    Ok(r) => r.map_err(|e| e.to_string()),
                    Err(_) => Err("run panicked".into()),
                },
            })
            .collect()
    });
    Ok(TableReport {
        example,
        cells,
        reference: published_reference(example),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dir: &Path, example: ExampleId, method: RunMethod, nx: usize, nt: usize) -> RunSpec {
        RunSpec {
            nx,
            ny: nx,
            nt,
            output_dir: dir.to_path_buf(),
            ..RunSpec::defaults(example, method)
        }
    }

    #[test]
    fn error_max_basics() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(error_max(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[[1, 0]] += 0.25;
        assert_eq!(error_max(&a, &b).unwrap(), 0.25);
        assert_eq!(error_max(&b, &a).unwrap(), error_max(&a, &b).unwrap());
        let neg = a.mapv(|v| -v);
        assert_eq!(error_max(&a, &neg).unwrap(), error_max(&neg, &a).unwrap());
        assert!(matches!(error_max(&a, &Array2::zeros((2, 3))), Err(Error::Shape { .. })));
    }

    #[test]
    fn defaults_follow_published_resolutions() {
        assert_eq!(RunSpec::defaults(ExampleId::One, RunMethod::UniformTrapezoid).nt, 2700);
        assert_eq!(RunSpec::defaults(ExampleId::One, RunMethod::NonUniformLobatto).nt, 147_000);
        assert_eq!(RunSpec::defaults(ExampleId::Two, RunMethod::UniformSimpson).nt, 900);
        assert_eq!(RunSpec::defaults(ExampleId::Two, RunMethod::NonUniformLobatto).nt, 49_000);
        let s = RunSpec::defaults(ExampleId::Two, RunMethod::SpectralFixedPoint);
        assert_eq!((s.trunc_m, s.trunc_k), (Some(25), Some(25)));
        assert!(s.validate().is_ok());
    }

    #[test]
    fn validation() {
        let dir = Path::new("unused");
        let mut s = spec(dir, ExampleId::One, RunMethod::UniformSimpson, 25, 100);
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        s.nx = 26;
        s.ny = 26;
        assert!(s.validate().is_ok());
        s.trunc_m = Some(3);
        assert!(s.validate().is_err());
        let mut sp = RunSpec::defaults(ExampleId::Two, RunMethod::SpectralFixedPoint);
        sp.trunc_k = None;
        assert!(sp.validate().is_err());
        sp.trunc_k = Some(0);
        assert!(sp.validate().is_err());
        let mut h = RunSpec::defaults(ExampleId::Two, RunMethod::UniformTrapezoid);
        h.horizon = Some(-1.0);
        assert!(h.validate().is_err());
    }

    #[test]
    fn config_parsing() {
        let text = "# comment\nexample = 2\nmethod = simpson  # trailing\n\nnx = 10\nny=10\nnt = 500\nemit_slices = true\n";
        let map = parse_config(text).unwrap();
        let s = RunSpec::from_map(&map).unwrap();
        assert_eq!(s.example, ExampleId::Two);
        assert_eq!(s.method, RunMethod::UniformSimpson);
        assert_eq!((s.nx, s.ny, s.nt), (10, 10, 500));
        assert!(s.emit_slices);
        assert!(parse_config("nx 10").is_err());
        let mut bad = map.clone();
        bad.insert("colour".into(), "red".into());
        assert!(RunSpec::from_map(&bad).is_err());
        bad = map;
        bad.insert("nx".into(), "ten".into());
        assert!(RunSpec::from_map(&bad).is_err());
    }

    #[test]
    fn unstable_spec_refused() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(dir.path(), ExampleId::Two, RunMethod::UniformTrapezoid, 26, 10);
        let err = run(&s).unwrap_err();
        assert!(matches!(err.root(), Error::Unstable { .. }), "{err}");
        let report = stability_report(&s).unwrap();
        assert!(!report.admitted);
    }

    #[test]
    fn marginal_published_case_admitted() {
        let s = RunSpec::defaults(ExampleId::One, RunMethod::UniformTrapezoid);
        let report = stability_report(&s).unwrap();
        assert!(report.admitted);
        assert!(report.ht > report.ht_max);
    }

    #[test]
    fn small_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec(dir.path(), ExampleId::Two, RunMethod::UniformTrapezoid, 10, 200);
        s.emit_slices = true;
        let report = run(&s).unwrap();
        assert!(report.u_error_max >= 0.0 && report.p_error_max >= 0.0);
        assert!((report.r0 - 1.0).abs() < 1e-2);
        let trace = fs::read_to_string(dir.path().join("ex2_trapezoid_p_trace.csv")).unwrap();
        let mut lines = trace.lines();
        assert_eq!(lines.next(), Some("t,p_approx,p_exact,abs_err"));
        assert_eq!(lines.count(), 201);
        let slice = fs::read_to_string(dir.path().join("ex2_trapezoid_u_slice.csv")).unwrap();
        assert_eq!(slice.lines().count(), 1 + 11 * 11);
        let json = fs::read_to_string(dir.path().join("ex2_trapezoid_summary.json")).unwrap();
        let parsed: ErrorReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap(), json);
    }

    #[test]
    fn unwritable_output_fails_before_compute() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("not-a-dir");
        fs::write(&file, "x").unwrap();
        let s = spec(&file, ExampleId::One, RunMethod::NonUniformLobatto, 26, 147_000);
        let started = Instant::now();
        assert!(matches!(run(&s), Err(Error::Io(_))));
        assert!(started.elapsed().as_secs() < 2);
    }

    #[test]
    fn spectral_run_small() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = RunSpec::defaults(ExampleId::Two, RunMethod::SpectralFixedPoint);
        s.output_dir = dir.path().to_path_buf();
        s.trunc_m = Some(2);
        s.trunc_k = Some(5);
        s.nt = 50;
        s.nx = 8;
        s.ny = 8;
        s.horizon = Some(0.1);
        let report = run(&s).unwrap();
        assert!(report.stability_margin.is_none());
        assert!(report.p_error_max < 0.1, "{report:?}");
        assert!(dir.path().join("ex2_spectral_p_trace.csv").exists());
    }
}
