//! Spatial axes on `[0, 1]` and uniform time grids on `[0, T]`.
//!
//! Lobatto axes carry their quadrature weights already mapped to `[0, 1]`,
//! so downstream code never sees the reference interval `[-1, 1]`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    Uniform,
    Lobatto,
}

/// Sorted node set on `[0, 1]` with optional quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    nodes: Vec<f64>,
    kind: AxisKind,
    weights: Option<Vec<f64>>,
}

impl Axis {
    /// Builds an axis from arbitrary nodes, checking the bracketing and
    /// ordering invariants. Used for tests and hand-made grids.
    pub fn from_nodes(nodes: Vec<f64>, kind: AxisKind, weights: Option<Vec<f64>>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidResolution(nodes.len().saturating_sub(1)));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument("axis must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("axis nodes must be strictly increasing".into()));
        }
        if let Some(w) = &weights {
            if w.len() != nodes.len() {
                return Err(Error::InvalidArgument("weights and nodes differ in length".into()));
            }
        }
        Ok(Self { nodes, kind, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> AxisKind {
        self.kind
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of intervals (`nodes.len() - 1`).
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spacing of a uniform axis.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            AxisKind::Uniform => Some(1.0 / self.intervals() as f64),
            AxisKind::Lobatto => None,
        }
    }
}

/// `n + 1` equally spaced nodes on `[0, 1]`.
pub fn uniform_axis(n: usize) -> Result<Axis> {
    if n < 2 {
        return Err(Error::InvalidResolution(n));
    }
    let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
    Ok(Axis {
        nodes,
        kind: AxisKind::Uniform,
        weights: None,
    })
}

/// `n + 1` Legendre-Gauss-Lobatto nodes mapped from `[-1, 1]` to `[0, 1]`,
/// with weights halved so they sum to one.
pub fn lobatto_axis(n: usize) -> Result<Axis> {
    if n < 2 {
        return Err(Error::InvalidResolution(n));
    }
    let reference = lobatto_reference_nodes(n)?;
    let scale = 2.0 / (n as f64 * (n + 1) as f64);
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for &x in &reference {
        let (pn, _) = legendre(n, x);
        nodes.push(0.5 * (x + 1.0));
        weights.push(0.5 * scale / (pn * pn));
    }
    nodes[0] = 0.0;
    nodes[n] = 1.0;
    Ok(Axis {
        nodes,
        kind: AxisKind::Lobatto,
        weights: Some(weights),
    })
}

/// Lobatto nodes on `[-1, 1]` in increasing order: the endpoints plus the
/// roots of `P_n'`, found by Newton iteration from Chebyshev-Lobatto seeds.
fn lobatto_reference_nodes(n: usize) -> Result<Vec<f64>> {
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    let nn1 = n as f64 * (n + 1) as f64;
    for (i, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        let mut x = -(PI * i as f64 / n as f64).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (pn, dpn) = legendre(n, x);
            // Newton on (1 - x^2) P_n'(x), whose derivative is -n(n+1) P_n(x).
            let step = (1.0 - x * x) * dpn / (nn1 * pn);
            x += step;
            if step.abs() < NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NodeIteration { n, index: i });
        }
        *node = x;
    }
    Ok(nodes)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub(crate) fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^(n-1) n(n+1)/2
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * (n as f64) * (n as f64 + 1.0) / 2.0
    } else {
        n as f64 * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < NEWTON_TOL {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Uniform time levels `t_n = n ht`, `n = 0..=Nt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    ht: f64,
}

impl TimeGrid {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ht(&self) -> f64 {
        self.ht
    }

    /// Number of time levels, `Nt + 1`.
    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    /// `t_n`; the last level is pinned to the horizon exactly.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.ht
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|n| self.time(n))
    }
}

pub fn time_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("time step count must be positive".into()));
    }
    Ok(TimeGrid {
        horizon,
        steps,
        ht: horizon / steps as f64,
    })
}

/// Tensor grid of two axes of the same kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub x_axis: Axis,
    pub y_axis: Axis,
}

impl Grid2D {
    pub fn new(x_axis: Axis, y_axis: Axis) -> Result<Self> {
        if x_axis.kind() != y_axis.kind() {
            return Err(Error::WrongGridKind("x and y axes must be of the same kind"));
        }
        Ok(Self { x_axis, y_axis })
    }

    pub fn uniform(nx: usize, ny: usize) -> Result<Self> {
        Self::new(uniform_axis(nx)?, uniform_axis(ny)?)
    }

    pub fn lobatto(nx: usize, ny: usize) -> Result<Self> {
        Self::new(lobatto_axis(nx)?, lobatto_axis(ny)?)
    }

    pub fn kind(&self) -> AxisKind {
        self.x_axis.kind()
    }

    /// `(Nx + 1, Ny + 1)`
    pub fn shape(&self) -> (usize, usize) {
        (self.x_axis.len(), self.y_axis.len())
    }
}
