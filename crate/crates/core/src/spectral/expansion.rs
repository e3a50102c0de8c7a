use ndarray::{Array2, ArrayView1, Axis as NdAxis};
use rayon::prelude::*;

use super::basis::{adjoint_x, y_factor};
use super::{ModeIndex, Truncation};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problems::ProblemData;
use crate::quadrature::ProductRule;

/// Nodes per axis needed to resolve the highest retained mode.
pub fn required_nodes(trunc: Truncation) -> usize {
    8 * (2 * trunc.m_max()).max(trunc.k_max())
}

/// Coefficients of one field against the adjoint system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    truncation: Truncation,
    values: Vec<f64>,
}

impl ModeCoefficients {
    pub fn new(truncation: Truncation, values: Vec<f64>) -> Result<Self> {
        if values.len() != truncation.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                truncation.len(),
                values.len()
            )));
        }
        Ok(Self { truncation, values })
    }

    pub fn zeros(truncation: Truncation) -> Self {
        Self {
            truncation,
            values: vec![0.0; truncation.len()],
        }
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn get(&self, idx: ModeIndex) -> Option<f64> {
        self.truncation.position(idx).map(|p| self.values[p])
    }

    pub fn set(&mut self, idx: ModeIndex, value: f64) -> Result<()> {
        let p = self
            .truncation
            .position(idx)
            .ok_or_else(|| Error::InvalidIndex(format!("{idx:?} outside truncation")))?;
        self.values[p] = value;
        Ok(())
    }

    /// Values in [`Truncation::modes`] order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Mode coefficients of `φ` and of `f(·,·,t_n)` at every time level.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    truncation: Truncation,
    time_grid: TimeGrid,
    phi: ModeCoefficients,
    source: Array2<f64>,
}

impl CoefficientTable {
    /// `source` has one row per mode (storage order) and one column per time
    /// level.
    pub fn from_parts(phi: ModeCoefficients, source: Array2<f64>, time_grid: TimeGrid) -> Result<Self> {
        let truncation = phi.truncation();
        let expected = (truncation.len(), time_grid.levels());
        if source.dim() != expected {
            return Err(Error::Shape {
                expected,
                got: source.dim(),
            });
        }
        Ok(Self {
            truncation,
            time_grid,
            phi,
            source,
        })
    }

    pub fn zeros(truncation: Truncation, time_grid: TimeGrid) -> Self {
        Self {
            truncation,
            phi: ModeCoefficients::zeros(truncation),
            source: Array2::zeros((truncation.len(), time_grid.levels())),
            time_grid,
        }
    }

    pub fn from_problem(problem: &ProblemData, trunc: Truncation, rule: &ProductRule, time_grid: TimeGrid) -> Result<Self> {
        expand(|x, y| problem.phi(x, y), |x, y, t| problem.source(x, y, t), trunc, rule, time_grid)
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn phi(&self) -> &ModeCoefficients {
        &self.phi
    }

    pub fn phi_mut(&mut self) -> &mut ModeCoefficients {
        &mut self.phi
    }

    pub fn source(&self) -> &Array2<f64> {
        &self.source
    }

    pub fn source_mut(&mut self) -> &mut Array2<f64> {
        &mut self.source
    }

    /// `f_{idx}(t_n)` for all `n`; `None` outside the truncation.
    pub fn source_series(&self, idx: ModeIndex) -> Option<ArrayView1<'_, f64>> {
        self.truncation.position(idx).map(|p| self.source.row(p))
    }
}

/// Adjoint functions pre-multiplied by the quadrature weights at the nodes.
struct WeightedAdjoints {
    /// `[l][i]`: `wx_i · X_l(x_i)`
    x: Vec<Vec<f64>>,
    /// `[k-1][j]`: `wy_j · V_k(y_j)`
    y: Vec<Vec<f64>>,
}

impl WeightedAdjoints {
    fn new(trunc: Truncation, rule: &ProductRule) -> Self {
        let x = (0..trunc.flat_width())
            .map(|l| {
                let idx = ModeIndex::from_flat(l, 1).expect("k = 1 is valid");
                rule.x_nodes()
                    .iter()
                    .zip(rule.x_weights())
                    .map(|(&x, &w)| w * adjoint_x(idx.branch(), idx.m(), x))
                    .collect()
            })
            .collect();
        let y = (1..=trunc.k_max())
            .map(|k| {
                rule.y_nodes()
                    .iter()
                    .zip(rule.y_weights())
                    .map(|(&y, &w)| w * y_factor(k, y))
                    .collect()
            })
            .collect();
        Self { x, y }
    }

    /// Separable projection: first contract along y, then along x.
    fn project(&self, samples: &Array2<f64>, out: &mut [f64]) {
        let (nx, _) = samples.dim();
        let width = self.x.len();
        let mut g = vec![0.0; nx];
        for (kk, wy) in self.y.iter().enumerate() {
            for (gi, row) in g.iter_mut().zip(samples.axis_iter(NdAxis(0))) {
                *gi = row.iter().zip(wy).map(|(s, w)| s * w).sum();
            }
            for (l, wx) in self.x.iter().enumerate() {
                out[kk * width + l] = g.iter().zip(wx).map(|(a, b)| a * b).sum();
            }
        }
    }
}

fn check_resolution(trunc: Truncation, rule: &ProductRule) -> Result<()> {
    let required = required_nodes(trunc);
    let (nx, ny) = rule.shape();
    let nodes = nx.min(ny);
    if nodes < required {
        return Err(Error::UnderResolved { nodes, required });
    }
    Ok(())
}

fn sample(rule: &ProductRule, g: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    let xs = rule.x_nodes();
    let ys = rule.y_nodes();
    Array2::from_shape_fn((xs.len(), ys.len()), |(i, j)| g(xs[i], ys[j]))
}

/// Coefficients of a single field.
pub fn expand_field<G>(g: G, trunc: Truncation, rule: &ProductRule) -> Result<ModeCoefficients>
where
    G: Fn(f64, f64) -> f64,
{
    check_resolution(trunc, rule)?;
    let adj = WeightedAdjoints::new(trunc, rule);
    let mut values = vec![0.0; trunc.len()];
    adj.project(&sample(rule, g), &mut values);
    ModeCoefficients::new(trunc, values)
}

/// Expands `φ` and `f(·,·,t_n)` for every level of `time_grid`. Time levels
/// are processed in parallel.
pub fn expand<P, F>(phi: P, source: F, trunc: Truncation, rule: &ProductRule, time_grid: TimeGrid) -> Result<CoefficientTable>
where
    P: Fn(f64, f64) -> f64,
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    check_resolution(trunc, rule)?;
    let adj = WeightedAdjoints::new(trunc, rule);
    let mut phi_values = vec![0.0; trunc.len()];
    adj.project(&sample(rule, phi), &mut phi_values);

    let columns: Vec<Vec<f64>> = (0..time_grid.levels())
        .into_par_iter()
        .map(|n| {
            let t = time_grid.time(n);
            let mut out = vec![0.0; trunc.len()];
            adj.project(&sample(rule, |x, y| source(x, y, t)), &mut out);
            out
        })
        .collect();
    let mut table = Array2::zeros((trunc.len(), time_grid.levels()));
    for (n, col) in columns.into_iter().enumerate() {
        table.column_mut(n).assign(&ArrayView1::from(&col));
    }
    CoefficientTable::from_parts(ModeCoefficients::new(trunc, phi_values)?, table, time_grid)
}
