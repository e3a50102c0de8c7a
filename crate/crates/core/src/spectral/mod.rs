//! Generalised Fourier machinery for the nonlocal (Ionkin) Laplacian.
//!
//! The root functions `Z` (eigenfunctions plus associated functions) and the
//! adjoint system `W` are biorthonormal on the unit square. Expanding the
//! data against `W` gives closed-form mode amplitudes `α(t)` for any `p`,
//! and differentiating the energy condition yields a fixed-point equation
//! `p = P(p)` that [`solve_inverse`] iterates.

mod basis;
mod compat;
mod expansion;
mod inverse;

pub use basis::{adjoint_function, eigenvalue, inner_product, root_function};
pub use compat::{check_compatibility, CompatibilityReport, Condition};
pub use expansion::{expand, expand_field, required_nodes, CoefficientTable, ModeCoefficients};
pub use inverse::{
    alpha_coefficients, alpha_history, contraction_estimate, fixed_point_map, series_solution, solve_inverse,
    AlphaHistory, EnergySamples, InverseSolution, SeriesSolution,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which family a root function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `m = 0` eigenfunctions, flat index `(0, k)`.
    Zero,
    /// `cos(2πmx)` eigenfunctions, flat index `(2m-1, k)`.
    Cosine,
    /// `(1-x) sin(2πmx)` associated functions, flat index `(2m, k)`.
    Associated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    branch: Branch,
    m: usize,
    k: usize,
}

impl ModeIndex {
    pub fn new(branch: Branch, m: usize, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidIndex(format!("k must be at least 1, got {k}")));
        }
        match (branch, m) {
            (Branch::Zero, 0) => {}
            (Branch::Zero, _) => return Err(Error::InvalidIndex(format!("zero branch needs m = 0, got {m}"))),
            (_, 0) => return Err(Error::InvalidIndex(format!("{branch:?} branch needs m >= 1"))),
            _ => {}
        }
        Ok(Self { branch, m, k })
    }

    /// # Panics
    /// If `k == 0`.
    pub fn zero(k: usize) -> Self {
        Self::new(Branch::Zero, 0, k).expect("valid zero-branch index")
    }

    /// # Panics
    /// If `m == 0` or `k == 0`.
    pub fn cosine(m: usize, k: usize) -> Self {
        Self::new(Branch::Cosine, m, k).expect("valid cosine index")
    }

    /// # Panics
    /// If `m == 0` or `k == 0`.
    pub fn associated(m: usize, k: usize) -> Self {
        Self::new(Branch::Associated, m, k).expect("valid associated index")
    }

    /// Maps a flat index `(l, k)` with `l = 0, 2m-1, 2m` to a mode.
    pub fn from_flat(l: usize, k: usize) -> Result<Self> {
        match l {
            0 => Self::new(Branch::Zero, 0, k),
            l if l % 2 == 1 => Self::new(Branch::Cosine, l.div_ceil(2), k),
            l => Self::new(Branch::Associated, l / 2, k),
        }
    }

    pub fn flat(&self) -> (usize, usize) {
        let l = match self.branch {
            Branch::Zero => 0,
            Branch::Cosine => 2 * self.m - 1,
            Branch::Associated => 2 * self.m,
        };
        (l, self.k)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `μ_{m,k} = (2πm)² + (πk)²`
    pub fn eigenvalue(&self) -> f64 {
        eigenvalue(self.m, self.k).expect("index validated at construction")
    }
}

/// Cut-off of the infinite mode sums: `m ≤ M`, `k ≤ K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    m_max: usize,
    k_max: usize,
}

impl Truncation {
    pub fn new(m_max: usize, k_max: usize) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::InvalidTruncation("K must be at least 1 so odd-k modes exist".into()));
        }
        Ok(Self { m_max, k_max })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Flat `l` values per `k`: `0..=2M`.
    pub fn flat_width(&self) -> usize {
        2 * self.m_max + 1
    }

    pub fn len(&self) -> usize {
        self.k_max * self.flat_width()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage slot of a mode, `None` outside the truncation.
    pub fn position(&self, idx: ModeIndex) -> Option<usize> {
        let (l, k) = idx.flat();
        (k <= self.k_max && idx.m <= self.m_max).then(|| (k - 1) * self.flat_width() + l)
    }

    /// All modes in storage order: increasing `k`, then flat `l`.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (1..=self.k_max).flat_map(move |k| {
            (0..self.flat_width()).map(move |l| ModeIndex::from_flat(l, k).expect("in range"))
        })
    }
}

/// Sampled `p(t_n)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFunction {
    samples: Vec<f64>,
}

impl CoefficientFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(n) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("p sample {n} is not finite")));
        }
        Ok(Self { samples })
    }

    pub fn zeros(levels: usize) -> Self {
        Self {
            samples: vec![0.0; levels],
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Projection onto `C⁺`: negative samples set to zero. Returns the number
    /// of clamped samples.
    pub fn clamp_nonnegative(&mut self) -> usize {
        let mut clamped = 0;
        for s in &mut self.samples {
            if *s < 0.0 {
                *s = 0.0;
                clamped += 1;
            }
        }
        clamped
    }
}
