use std::f64::consts::{PI, SQRT_2};

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use super::basis::{root_x, y_factor};
use super::{Branch, CoefficientFunction, CoefficientTable, ModeCoefficients, ModeIndex, Truncation};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problems::ProblemData;

/// `E(t_n)` and `E'(t_n)` on the table's time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySamples {
    values: Vec<f64>,
    rates: Vec<f64>,
}

impl EnergySamples {
    pub fn new(values: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if values.len() != rates.len() {
            return Err(Error::InvalidArgument(format!(
                "{} energy values but {} rates",
                values.len(),
                rates.len()
            )));
        }
        if values.iter().chain(&rates).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("energy samples must be finite".into()));
        }
        Ok(Self { values, rates })
    }

    /// Rates by second-order differences: central inside, one-sided at the
    /// ends.
    pub fn from_values(values: Vec<f64>, time_grid: &TimeGrid) -> Result<Self> {
        if values.len() != time_grid.levels() {
            return Err(Error::InvalidArgument(format!(
                "expected {} energy values, got {}",
                time_grid.levels(),
                values.len()
            )));
        }
        let h = time_grid.ht();
        let n = values.len();
        let rates = if n == 2 {
            let d = (values[1] - values[0]) / h;
            vec![d, d]
        } else {
            (0..n)
                .map(|i| match i {
                    0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h),
                    i if i == n - 1 => (3.0 * values[i] - 4.0 * values[i - 1] + values[i - 2]) / (2.0 * h),
                    i => (values[i + 1] - values[i - 1]) / (2.0 * h),
                })
                .collect()
        };
        Self::new(values, rates)
    }

    /// Uses the analytic `E'` when the problem provides one.
    pub fn from_problem(problem: &ProblemData, time_grid: &TimeGrid) -> Result<Self> {
        let values: Vec<f64> = time_grid.times().map(|t| problem.energy(t)).collect();
        if problem.energy_rate(0.0).is_some() {
            let rates = time_grid
                .times()
                .map(|t| problem.energy_rate(t).expect("rate present"))
                .collect();
            Self::new(values, rates)
        } else {
            Self::from_values(values, time_grid)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mode amplitudes `α(t_n)`, one row per mode in storage order.
#[derive(Debug, Clone)]
pub struct AlphaHistory {
    truncation: Truncation,
    values: Array2<f64>,
}

impl AlphaHistory {
    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn series(&self, idx: ModeIndex) -> Option<ArrayView1<'_, f64>> {
        self.truncation.position(idx).map(|p| self.values.row(p))
    }

    pub fn get(&self, idx: ModeIndex, n: usize) -> Option<f64> {
        self.series(idx).and_then(|s| s.get(n).copied())
    }

    pub fn at_level(&self, n: usize) -> Result<ModeCoefficients> {
        if n >= self.values.ncols() {
            return Err(Error::InvalidArgument(format!("time level {n} out of range")));
        }
        ModeCoefficients::new(self.truncation, self.values.column(n).to_vec())
    }
}

fn check_levels(p: &CoefficientFunction, table: &CoefficientTable) -> Result<()> {
    let levels = table.time_grid().levels();
    if p.len() != levels {
        return Err(Error::InvalidArgument(format!(
            "p has {} samples but the time grid has {levels} levels",
            p.len()
        )));
    }
    Ok(())
}

/// Trapezoid antiderivative `I_n ≈ ∫_0^{t_n} p`.
fn cumulative_integral(p: &[f64], ht: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in p.windows(2) {
        acc += 0.5 * ht * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Per-step decay `d_n = exp(-μ ht - (I_{n+1} - I_n))` and the homogeneous
/// factor `exp(-μ t_n - I_n)`.
struct Decay {
    step: Vec<f64>,
    homogeneous: Vec<f64>,
}

impl Decay {
    fn new(mu: f64, integral: &[f64], tg: &TimeGrid) -> Self {
        let ht = tg.ht();
        let step = integral.windows(2).map(|w| (-mu * ht - (w[1] - w[0])).exp()).collect();
        let homogeneous = integral
            .iter()
            .enumerate()
            .map(|(n, i)| (-mu * tg.time(n) - i).exp())
            .collect();
        Self { step, homogeneous }
    }

    /// `H_n = Σ_{j≤n} c_j f_j e_{n,j}` with `c_0 = ht/2`, `c_j = ht` after.
    /// The trapezoid convolution at `t_n` is `H_n - (ht/2) f_n`.
    fn accumulate(&self, f: ArrayView1<f64>, ht: f64) -> Vec<f64> {
        let mut h = Vec::with_capacity(f.len());
        let mut acc = 0.5 * ht * f[0];
        h.push(acc);
        for (n, d) in self.step.iter().enumerate() {
            acc = d * acc + ht * f[n + 1];
            h.push(acc);
        }
        h
    }

    /// `K_n = Σ_j c_j f_j (t_n - t_j) e_{n,j}` from the `H` sequence of `f`.
    fn secular(&self, h: &[f64], ht: f64) -> Vec<f64> {
        let mut k = Vec::with_capacity(h.len());
        let mut acc = 0.0;
        k.push(acc);
        for (n, d) in self.step.iter().enumerate() {
            acc = d * (acc + ht * h[n]);
            k.push(acc);
        }
        k
    }
}

/// Amplitudes for every mode and time level of `table` under coefficient `p`.
///
/// The convolution integrals use the composite trapezoid rule on the table's
/// time grid, evaluated by an O(Nt) recursion per mode.
pub fn alpha_history(p: &CoefficientFunction, table: &CoefficientTable) -> Result<AlphaHistory> {
    check_levels(p, table)?;
    let trunc = table.truncation();
    let tg = *table.time_grid();
    let ht = tg.ht();
    let integral = cumulative_integral(p.samples(), ht);
    let phi = table.phi();
    let width = trunc.flat_width();

    let blocks: Vec<Vec<Vec<f64>>> = (1..=trunc.k_max())
        .into_par_iter()
        .map(|k| {
            let mut rows = vec![Vec::new(); width];
            let zero = ModeIndex::zero(k);
            let decay = Decay::new(zero.eigenvalue(), &integral, &tg);
            let f = table.source_series(zero).expect("in truncation");
            let h = decay.accumulate(f, ht);
            let phi0 = phi.get(zero).expect("in truncation");
            rows[0] = (0..tg.levels())
                .map(|n| phi0 * decay.homogeneous[n] + h[n] - 0.5 * ht * f[n])
                .collect();
            for m in 1..=trunc.m_max() {
                let (cos_idx, assoc_idx) = (ModeIndex::cosine(m, k), ModeIndex::associated(m, k));
                let decay = Decay::new(cos_idx.eigenvalue(), &integral, &tg);
                let fa = table.source_series(assoc_idx).expect("in truncation");
                let fc = table.source_series(cos_idx).expect("in truncation");
                let ha = decay.accumulate(fa, ht);
                let hc = decay.accumulate(fc, ht);
                let ka = decay.secular(&ha, ht);
                let phi_a = phi.get(assoc_idx).expect("in truncation");
                let phi_c = phi.get(cos_idx).expect("in truncation");
                let shift = 4.0 * PI * m as f64;
                rows[2 * m] = (0..tg.levels())
                    .map(|n| phi_a * decay.homogeneous[n] + ha[n] - 0.5 * ht * fa[n])
                    .collect();
                rows[2 * m - 1] = (0..tg.levels())
                    .map(|n| {
                        (phi_c - shift * phi_a * tg.time(n)) * decay.homogeneous[n] + hc[n] - 0.5 * ht * fc[n]
                            - shift * ka[n]
                    })
                    .collect();
            }
            rows
        })
        .collect();

    let mut values = Array2::zeros((trunc.len(), tg.levels()));
    for (kk, rows) in blocks.into_iter().enumerate() {
        for (l, row) in rows.into_iter().enumerate() {
            values.row_mut(kk * width + l).assign(&ArrayView1::from(&row));
        }
    }
    Ok(AlphaHistory {
        truncation: trunc,
        values,
    })
}

/// Amplitudes at a single level `n`.
pub fn alpha_coefficients(p: &CoefficientFunction, table: &CoefficientTable, n: usize) -> Result<ModeCoefficients> {
    alpha_history(p, table)?.at_level(n)
}

/// Truncated series `u ≈ Σ α Z` with amplitudes computed once.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    alpha: AlphaHistory,
}

impl SeriesSolution {
    pub fn new(p: &CoefficientFunction, table: &CoefficientTable) -> Result<Self> {
        Ok(Self {
            alpha: alpha_history(p, table)?,
        })
    }

    pub fn alpha(&self) -> &AlphaHistory {
        &self.alpha
    }

    /// `u(x, y, t_n)`
    pub fn evaluate(&self, x: f64, y: f64, n: usize) -> Result<f64> {
        let levels = self.alpha.values.ncols();
        if n >= levels {
            return Err(Error::InvalidArgument(format!("time level {n} out of range (levels {levels})")));
        }
        let trunc = self.alpha.truncation;
        let width = trunc.flat_width();
        let xs: Vec<f64> = (0..width)
            .map(|l| {
                let idx = ModeIndex::from_flat(l, 1).expect("valid");
                root_x(idx.branch(), idx.m(), x)
            })
            .collect();
        let col = self.alpha.values.column(n);
        let mut sum = 0.0;
        for k in 1..=trunc.k_max() {
            let base = (k - 1) * width;
            let inner: f64 = (0..width).map(|l| col[base + l] * xs[l]).sum();
            sum += inner * y_factor(k, y);
        }
        Ok(sum)
    }
}

/// Single-point series evaluation. Prefer [`SeriesSolution`] for many points.
pub fn series_solution(p: &CoefficientFunction, table: &CoefficientTable, x: f64, y: f64, n: usize) -> Result<f64> {
    SeriesSolution::new(p, table)?.evaluate(x, y, n)
}

/// Weights of the zero branch in `P`: `(f-weight, α-weight)`.
fn zero_weights(k: usize) -> (f64, f64) {
    let k = k as f64;
    (4.0 * SQRT_2 / (PI * k), 4.0 * SQRT_2 * PI * k)
}

/// Weights of the associated branch in `P`: `(f-weight, α-weight)`.
fn associated_weights(m: usize, k: usize) -> (f64, f64) {
    let (m, k) = (m as f64, k as f64);
    (
        4.0 * SQRT_2 / (PI * PI * k * m),
        16.0 * SQRT_2 * m / k + 4.0 * SQRT_2 * k / m,
    )
}

/// The map `P` whose fixed point is the unknown coefficient. Only odd `k`
/// and the zero and associated branches contribute. Terms are summed in
/// increasing `k`, then increasing `m`.
pub fn fixed_point_map(p: &CoefficientFunction, table: &CoefficientTable, energy: &EnergySamples) -> Result<CoefficientFunction> {
    check_levels(p, table)?;
    let levels = table.time_grid().levels();
    if energy.len() != levels {
        return Err(Error::InvalidArgument(format!(
            "{} energy samples for {levels} time levels",
            energy.len()
        )));
    }
    if let Some(n) = energy.values().iter().position(|&e| e == 0.0) {
        return Err(Error::DivisionByZero(format!("E vanishes at time level {n}")));
    }
    let alpha = alpha_history(p, table)?;
    let trunc = table.truncation();
    let source = table.source();
    let out = (0..levels)
        .map(|n| {
            let mut acc = -energy.rates()[n];
            for k in (1..=trunc.k_max()).step_by(2) {
                let pos = trunc.position(ModeIndex::zero(k)).expect("in truncation");
                let (wf, wa) = zero_weights(k);
                acc += wf * source[[pos, n]] - wa * alpha.values[[pos, n]];
                for m in 1..=trunc.m_max() {
                    let pos = trunc.position(ModeIndex::associated(m, k)).expect("in truncation");
                    let (wf, wa) = associated_weights(m, k);
                    acc += wf * source[[pos, n]] - wa * alpha.values[[pos, n]];
                }
            }
            acc / energy.values()[n]
        })
        .collect();
    CoefficientFunction::new(out)
}

#[derive(Debug, Clone)]
pub struct InverseSolution {
    /// Last unclamped iterate.
    pub p: CoefficientFunction,
    pub iterations: usize,
    pub residual: f64,
    /// `max_n |p_{j+1} - p_j|` per iteration.
    pub history: Vec<f64>,
}

/// Picard iteration `p_{j+1} = P(p_j)` from `p_0 = 0`, stopping once the
/// max-norm update falls below `tol`. Negative samples are clamped to zero
/// before the next application.
pub fn solve_inverse(table: &CoefficientTable, energy: &EnergySamples, tol: f64, max_iter: usize) -> Result<InverseSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut p = CoefficientFunction::zeros(table.time_grid().levels());
    let mut history = Vec::new();
    for iteration in 1..=max_iter {
        let next = fixed_point_map(&p, table, energy).map_err(|e| match e {
            Error::InvalidArgument(_) if !history.is_empty() => Error::Divergence { step: iteration },
            other => other,
        })?;
        let residual = next.max_abs_diff(&p);
        history.push(residual);
        log::debug!("fixed-point iteration {iteration}: residual {residual:.3e}");
        if residual < tol {
            return Ok(InverseSolution {
                p: next,
                iterations: iteration,
                residual,
                history,
            });
        }
        p = next;
        let clamped = p.clamp_nonnegative();
        if clamped > 0 {
            log::warn!("iteration {iteration}: clamped {clamped} negative samples of p to zero");
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residuals: history,
    })
}

/// Trapezoid integral of `g` over `[0, horizon]`, interpolating linearly in
/// the final partial segment.
fn integrate_to(g: &[f64], tg: &TimeGrid, horizon: f64) -> f64 {
    let ht = tg.ht();
    let mut acc = 0.0;
    for n in 0..tg.steps() {
        let (t0, t1) = (tg.time(n), tg.time(n + 1));
        if t1 <= horizon {
            acc += 0.5 * (t1 - t0) * (g[n] + g[n + 1]);
        } else {
            if horizon > t0 {
                let s = (horizon - t0) / ht;
                let end = g[n] + s * (g[n + 1] - g[n]);
                acc += 0.5 * (horizon - t0) * (g[n] + end);
            }
            break;
        }
    }
    acc
}

/// Lipschitz bound `β` of `P` on `[0, horizon]`. `P` is a contraction there
/// when `β < 1`.
pub fn contraction_estimate(table: &CoefficientTable, energy: &EnergySamples, horizon: f64) -> Result<f64> {
    let tg = *table.time_grid();
    if horizon.is_nan() || horizon <= 0.0 || horizon > tg.horizon() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} outside (0, {}]",
            tg.horizon()
        )));
    }
    if energy.len() != tg.levels() {
        return Err(Error::InvalidArgument("energy samples do not match the time grid".into()));
    }
    let horizon = horizon.min(tg.horizon());
    let e = energy.values();
    let mut min_e = f64::INFINITY;
    for n in 0..tg.levels() {
        let t = tg.time(n);
        if t <= horizon {
            min_e = min_e.min(e[n].abs());
        } else {
            let s = (horizon - tg.time(n - 1)) / tg.ht();
            min_e = min_e.min((e[n - 1] + s * (e[n] - e[n - 1])).abs());
            break;
        }
    }
    if min_e == 0.0 {
        return Err(Error::DivisionByZero("E vanishes on the horizon".into()));
    }

    let trunc = table.truncation();
    let phi = table.phi();
    let mut weights = Vec::new();
    for k in (1..=trunc.k_max()).step_by(2) {
        weights.push((ModeIndex::zero(k), zero_weights(k).1));
        for m in 1..=trunc.m_max() {
            weights.push((ModeIndex::associated(m, k), associated_weights(m, k).1));
        }
    }
    let mut bound = 0.0;
    let mut weighted_source = vec![0.0; tg.levels()];
    for (idx, w) in weights {
        debug_assert_ne!(idx.branch(), Branch::Cosine);
        bound += w * phi.get(idx).expect("in truncation").abs();
        let f = table.source_series(idx).expect("in truncation");
        for (acc, v) in weighted_source.iter_mut().zip(f) {
            *acc += w * v.abs();
        }
    }
    bound += integrate_to(&weighted_source, &tg, horizon);
    Ok(horizon / min_e * bound)
}
