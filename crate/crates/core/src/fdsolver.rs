//! Explicit time marching of the transformed problem
//!
//! ```text
//! v_t = v_xx + v_yy + r(t) f,   v = u r,   r(t) = exp(∫_0^t p),
//! ∫∫ v(x, y, t) dx dy = E(t) r(t),
//! ```
//!
//! on uniform or Gauss-Lobatto grids. The energy condition is closed at each
//! level by product quadrature, which yields `r^n`; `p` is recovered
//! afterwards by differentiating `ln r`.

use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisKind, Grid2D, TimeGrid};
use crate::problems::ProblemData;
use crate::quadrature::{integrate, lobatto_rule, simpson_rule, trapezoid_rule, ProductRule};

/// Relative excess over the explicit limit that `march` still admits.
pub const STABILITY_SLACK: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    UniformTrapezoid,
    UniformSimpson,
    NonUniformLobatto,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub method: Method,
    pub nx: usize,
    pub ny: usize,
    pub time_grid: TimeGrid,
    /// Tabulate `f` at every level up front instead of evaluating per step.
    pub memoize_source: bool,
}

impl SolveConfig {
    pub fn new(method: Method, nx: usize, ny: usize, time_grid: TimeGrid) -> Result<Self> {
        for n in [nx, ny] {
            if n < 2 {
                return Err(Error::InvalidResolution(n));
            }
            if method == Method::UniformSimpson && n % 2 != 0 {
                return Err(Error::Parity(n));
            }
        }
        Ok(Self {
            method,
            nx,
            ny,
            time_grid,
            memoize_source: false,
        })
    }

    pub fn grid(&self) -> Result<Grid2D> {
        match self.method {
            Method::UniformTrapezoid | Method::UniformSimpson => Grid2D::uniform(self.nx, self.ny),
            Method::NonUniformLobatto => Grid2D::lobatto(self.nx, self.ny),
        }
    }

    pub fn rule(&self, grid: &Grid2D) -> Result<ProductRule> {
        match self.method {
            Method::UniformTrapezoid => trapezoid_rule(grid),
            Method::UniformSimpson => simpson_rule(grid),
            Method::NonUniformLobatto => lobatto_rule(grid),
        }
    }
}

/// Values of `v` on all grid nodes at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLevel {
    pub values: Array2<f64>,
    pub time_index: usize,
}

impl FieldLevel {
    pub fn new(values: Array2<f64>, time_index: usize) -> Self {
        Self { values, time_index }
    }

    /// Samples `g` at the grid nodes.
    pub fn sample(grid: &Grid2D, time_index: usize, g: impl Fn(f64, f64) -> f64) -> Self {
        let (xs, ys) = (grid.x_axis.nodes(), grid.y_axis.nodes());
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| g(xs[i], ys[j]));
        Self { values, time_index }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub ht: f64,
    pub ht_max: f64,
    /// `1 - ht / ht_max`; negative inside the admitted slack.
    pub stability_margin: f64,
    pub marginal: bool,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub grid: Grid2D,
    pub time_grid: TimeGrid,
    pub v_final: FieldLevel,
    pub u_final: Array2<f64>,
    pub r_samples: Vec<f64>,
    pub p_samples: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Largest `ht` keeping every centre coefficient of the explicit update
/// nonnegative.
pub fn stability_limit(grid: &Grid2D) -> f64 {
    match (grid.x_axis.spacing(), grid.y_axis.spacing()) {
        (Some(hx), Some(hy)) => 1.0 / (2.0 * (1.0 / (hx * hx) + 1.0 / (hy * hy))),
        _ => {
            let sx = max_centre_weight(grid.x_axis.nodes());
            let sy = max_centre_weight(grid.y_axis.nodes());
            1.0 / (sx + sy)
        }
    }
}

fn max_centre_weight(x: &[f64]) -> f64 {
    x.windows(3)
        .map(|w| 2.0 / ((w[1] - w[0]) * (w[2] - w[1])))
        .fold(0.0, f64::max)
}

/// Three-point second-difference weights at interior nodes `1..n`.
#[derive(Debug, Clone)]
struct Stencil {
    lower: Vec<f64>,
    centre: Vec<f64>,
    upper: Vec<f64>,
}

impl Stencil {
    fn uniform(n: usize, ht: f64) -> Self {
        let h = 1.0 / n as f64;
        let a = ht / (h * h);
        Self {
            lower: vec![a; n - 1],
            centre: vec![-2.0 * a; n - 1],
            upper: vec![a; n - 1],
        }
    }

    fn nonuniform(x: &[f64], ht: f64) -> Self {
        let mut s = Self {
            lower: Vec::with_capacity(x.len() - 2),
            centre: Vec::with_capacity(x.len() - 2),
            upper: Vec::with_capacity(x.len() - 2),
        };
        for w in x.windows(3) {
            let (xm, xc, xp) = (w[0], w[1], w[2]);
            s.lower.push(2.0 * ht / ((xm - xc) * (xm - xp)));
            s.centre.push(2.0 * ht / ((xc - xm) * (xc - xp)));
            s.upper.push(2.0 * ht / ((xp - xm) * (xp - xc)));
        }
        s
    }
}

/// Interior update `next = cur + ht (D_xx + D_yy) cur + ht r f`, followed by
/// the boundary conditions.
fn step_into(cur: &Array2<f64>, next: &mut Array2<f64>, sx: &Stencil, sy: &Stencil, ht_r: f64, f: &Array2<f64>) {
    let (nxp, nyp) = cur.dim();
    let c = cur.as_slice().expect("standard layout");
    let fs = f.as_slice().expect("standard layout");
    let out = next.as_slice_mut().expect("standard layout");
    for i in 1..nxp - 1 {
        let (ax, bx, cx) = (sx.lower[i - 1], sx.centre[i - 1], sx.upper[i - 1]);
        let row = i * nyp;
        for j in 1..nyp - 1 {
            let (ay, by, cy) = (sy.lower[j - 1], sy.centre[j - 1], sy.upper[j - 1]);
            let k = row + j;
            out[k] = ax * c[k - nyp]
                + ay * c[k - 1]
                + (1.0 + bx + by) * c[k]
                + cx * c[k + nyp]
                + cy * c[k + 1]
                + ht_r * fs[k];
        }
    }
    boundary_in_place(next);
}

fn boundary_in_place(v: &mut Array2<f64>) {
    let (nxp, nyp) = v.dim();
    let last = nxp - 1;
    for j in 0..nyp {
        v[[last, j]] = v[[last - 1, j]];
        v[[0, j]] = v[[last, j]];
    }
    for i in 0..nxp {
        v[[i, 0]] = 0.0;
        v[[i, nyp - 1]] = 0.0;
    }
}

/// `v_{Nx,j} := v_{Nx-1,j}`, `v_{0,j} := v_{Nx,j}`, then `v_{i,0} = v_{i,Ny} = 0`.
pub fn apply_boundary(mut level: FieldLevel) -> FieldLevel {
    boundary_in_place(&mut level.values);
    level
}

fn check_source_shape(level: &FieldLevel, f_n: &Array2<f64>) -> Result<()> {
    if f_n.dim() != level.values.dim() {
        return Err(Error::Shape {
            expected: level.values.dim(),
            got: f_n.dim(),
        });
    }
    Ok(())
}

/// One explicit step with the five-point uniform stencil.
pub fn explicit_step_uniform(level: &FieldLevel, r_n: f64, f_n: &Array2<f64>, config: &SolveConfig) -> Result<FieldLevel> {
    check_source_shape(level, f_n)?;
    if level.values.dim() != (config.nx + 1, config.ny + 1) {
        return Err(Error::Shape {
            expected: (config.nx + 1, config.ny + 1),
            got: level.values.dim(),
        });
    }
    let ht = config.time_grid.ht();
    let sx = Stencil::uniform(config.nx, ht);
    let sy = Stencil::uniform(config.ny, ht);
    let mut next = level.values.clone();
    step_into(&level.values, &mut next, &sx, &sy, ht * r_n, f_n);
    Ok(FieldLevel::new(next, level.time_index + 1))
}

/// One explicit step with the three-point non-uniform second difference in
/// each direction.
pub fn explicit_step_nonuniform(level: &FieldLevel, r_n: f64, f_n: &Array2<f64>, grid: &Grid2D, ht: f64) -> Result<FieldLevel> {
    check_source_shape(level, f_n)?;
    if level.values.dim() != grid.shape() {
        return Err(Error::Shape {
            expected: grid.shape(),
            got: level.values.dim(),
        });
    }
    let sx = Stencil::nonuniform(grid.x_axis.nodes(), ht);
    let sy = Stencil::nonuniform(grid.y_axis.nodes(), ht);
    let mut next = level.values.clone();
    step_into(&level.values, &mut next, &sx, &sy, ht * r_n, f_n);
    Ok(FieldLevel::new(next, level.time_index + 1))
}

/// `r^n = (1 / E^n) ∫∫ v^n`.
pub fn compute_r(level: &FieldLevel, energy: f64, rule: &ProductRule) -> Result<f64> {
    if energy == 0.0 {
        return Err(Error::DivisionByZero(format!(
            "E vanishes at time level {}",
            level.time_index
        )));
    }
    Ok(integrate(rule, &level.values)? / energy)
}

/// `p = d/dt ln r`: central differences inside, second-order one-sided at
/// both ends.
pub fn recover_p(r_samples: &[f64], time_grid: &TimeGrid) -> Result<Vec<f64>> {
    if r_samples.len() != time_grid.levels() {
        return Err(Error::InvalidArgument(format!(
            "{} r samples for {} time levels",
            r_samples.len(),
            time_grid.levels()
        )));
    }
    if let Some((n, r)) = r_samples.iter().enumerate().find(|(_, &r)| r.is_nan() || r <= 0.0) {
        return Err(Error::InvalidState(format!("r({n}) = {r} is not positive; p is undefined")));
    }
    let ln: Vec<f64> = r_samples.iter().map(|r| r.ln()).collect();
    let h = time_grid.ht();
    let n = ln.len() - 1;
    if n == 1 {
        let slope = (ln[1] - ln[0]) / h;
        return Ok(vec![slope, slope]);
    }
    let mut p = vec![0.0; n + 1];
    p[0] = (-3.0 * ln[0] + 4.0 * ln[1] - ln[2]) / (2.0 * h);
    for k in 1..n {
        p[k] = (ln[k + 1] - ln[k - 1]) / (2.0 * h);
    }
    p[n] = (3.0 * ln[n] - 4.0 * ln[n - 1] + ln[n - 2]) / (2.0 * h);
    Ok(p)
}

pub fn recover_u(v_final: &FieldLevel, r_final: f64) -> Result<Array2<f64>> {
    if r_final == 0.0 {
        return Err(Error::DivisionByZero("r vanishes at the final level".into()));
    }
    Ok(v_final.values.mapv(|v| v / r_final))
}

/// Fills the interior of `out` with `f(x_i, y_j, t)`.
fn fill_source(out: &mut Array2<f64>, grid: &Grid2D, problem: &ProblemData, t: f64) {
    let (xs, ys) = (grid.x_axis.nodes(), grid.y_axis.nodes());
    for i in 1..xs.len() - 1 {
        for j in 1..ys.len() - 1 {
            out[[i, j]] = problem.source(xs[i], ys[j], t);
        }
    }
}

/// Checks `ht` against the explicit limit, admitting [`STABILITY_SLACK`].
pub fn check_stability(grid: &Grid2D, time_grid: &TimeGrid) -> Result<(f64, f64)> {
    let ht = time_grid.ht();
    let ht_max = stability_limit(grid);
    if ht > ht_max * (1.0 + STABILITY_SLACK) {
        return Err(Error::Unstable {
            ht,
            limit: ht_max,
            suggested_nt: (time_grid.horizon() / ht_max).ceil() as usize,
        });
    }
    Ok((ht, ht_max))
}

/// Runs the full explicit march and recovers `u(·, ·, T)` and `p(t_n)`.
pub fn march(problem: &ProblemData, config: &SolveConfig) -> Result<SolveResult> {
    let started = Instant::now();
    let grid = config.grid()?;
    let rule = config.rule(&grid)?;
    let tg = config.time_grid;
    let (ht, ht_max) = check_stability(&grid, &tg)?;
    let margin = 1.0 - ht / ht_max;
    if margin < 0.0 {
        log::warn!(
            "ht = {ht:e} exceeds the explicit limit {ht_max:e} by {:.3}% (admitted by slack)",
            -100.0 * margin
        );
    }

    let (sx, sy) = match grid.kind() {
        AxisKind::Uniform => (Stencil::uniform(config.nx, ht), Stencil::uniform(config.ny, ht)),
        AxisKind::Lobatto => (
            Stencil::nonuniform(grid.x_axis.nodes(), ht),
            Stencil::nonuniform(grid.y_axis.nodes(), ht),
        ),
    };

    let memo: Option<Vec<Array2<f64>>> = config.memoize_source.then(|| {
        (0..tg.steps())
            .map(|n| {
                let mut f = Array2::zeros(grid.shape());
                fill_source(&mut f, &grid, problem, tg.time(n));
                f
            })
            .collect()
    });

    let mut cur = apply_boundary(FieldLevel::sample(&grid, 0, |x, y| problem.phi(x, y))).values;
    let mut next = cur.clone();
    let mut f_n = Array2::zeros(grid.shape());
    let mut r_samples = Vec::with_capacity(tg.levels());

    for n in 0..tg.steps() {
        let t = tg.time(n);
        let level = FieldLevel::new(cur, n);
        let r_n = compute_r(&level, problem.energy(t), &rule)?;
        cur = level.values;
        if !r_n.is_finite() {
            return Err(Error::Divergence { step: n });
        }
        r_samples.push(r_n);
        let f_ref = match &memo {
            Some(levels) => &levels[n],
            None => {
                fill_source(&mut f_n, &grid, problem, t);
                &f_n
            }
        };
        step_into(&cur, &mut next, &sx, &sy, ht * r_n, f_ref);
        std::mem::swap(&mut cur, &mut next);
        if (n + 1) % 1000 == 0 {
            log::debug!("step {}/{}  r = {r_n:.6e}", n + 1, tg.steps());
        }
    }

    let v_final = FieldLevel::new(cur, tg.steps());
    let r_final = compute_r(&v_final, problem.energy(tg.horizon()), &rule)?;
    if !r_final.is_finite() {
        return Err(Error::Divergence { step: tg.steps() });
    }
    r_samples.push(r_final);

    let u_final = recover_u(&v_final, r_final)?;
    let p_samples = recover_p(&r_samples, &tg)?;
    Ok(SolveResult {
        grid,
        time_grid: tg,
        v_final,
        u_final,
        r_samples,
        p_samples,
        diagnostics: Diagnostics {
            ht,
            ht_max,
            stability_margin: margin,
            marginal: margin < 0.0,
            wall: started.elapsed(),
        },
    })
}
