//! Manufactured test problems with known `(p, u)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss;

pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Field3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Data of the inverse problem plus, for manufactured cases, its solution.
#[derive(Clone)]
pub struct ProblemData {
    pub label: String,
    /// Initial condition `φ(x, y)`.
    pub phi: Field2,
    /// Source `f(x, y, t)`.
    pub source: Field3,
    /// Total energy `E(t) = ∫∫ u dx dy`.
    pub energy: Signal,
    /// `E'(t)` when available in closed form.
    pub energy_rate: Option<Signal>,
    pub horizon: f64,
    pub exact_u: Option<Field3>,
    pub exact_p: Option<Signal>,
    pub exact_r: Option<Signal>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .field("energy_rate", &self.energy_rate.is_some())
            .field("exact_u", &self.exact_u.is_some())
            .field("exact_p", &self.exact_p.is_some())
            .field("exact_r", &self.exact_r.is_some())
            .finish()
    }
}

impl ProblemData {
    pub fn phi(&self, x: f64, y: f64) -> f64 {
        (self.phi)(x, y)
    }

    pub fn source(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.source)(x, y, t)
    }

    pub fn energy(&self, t: f64) -> f64 {
        (self.energy)(t)
    }

    pub fn energy_rate(&self, t: f64) -> Option<f64> {
        self.energy_rate.as_ref().map(|e| e(t))
    }

    /// Same problem on a different horizon.
    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    /// Construction-time consistency checks: `r(0) = 1` and the PDE residual
    /// of the exact pair at 20 random points.
    pub fn validated(self) -> Result<Self> {
        if self.horizon.is_nan() || self.horizon <= 0.0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if let Some(r) = &self.exact_r {
            let r0 = r(0.0);
            if (r0 - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!("exact r(0) = {r0}, expected 1")));
            }
        }
        if self.exact_u.is_some() && self.exact_p.is_some() {
            let residual = residual_check(&self, 20)?;
            if residual >= 1e-6 {
                return Err(Error::InvalidState(format!(
                    "exact solution of '{}' leaves PDE residual {residual:e}",
                    self.label
                )));
            }
        }
        Ok(self)
    }
}

/// Max of `|u_t - u_xx - u_yy + p u - f|` over random interior points, with
/// derivatives of the exact `u` taken by fourth-order central differences.
pub fn residual_check(problem: &ProblemData, samples: usize) -> Result<f64> {
    let (Some(u), Some(p)) = (&problem.exact_u, &problem.exact_p) else {
        return Err(Error::NotApplicable("residual check needs exact u and p"));
    };
    let h = 1e-3;
    let d1 = |g: &dyn Fn(f64) -> f64, s: f64| {
        (-g(s + 2.0 * h) + 8.0 * g(s + h) - 8.0 * g(s - h) + g(s - 2.0 * h)) / (12.0 * h)
    };
    let d2 = |g: &dyn Fn(f64) -> f64, s: f64| {
        (-g(s + 2.0 * h) + 16.0 * g(s + h) - 30.0 * g(s) + 16.0 * g(s - h) - g(s - 2.0 * h))
            / (12.0 * h * h)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b_3c4d);
    let t_max = problem.horizon;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = rng.gen_range(0.05..0.95);
        let y = rng.gen_range(0.05..0.95);
        let t = rng.gen_range(0.05 * t_max..0.95 * t_max);
        let u_t = d1(&|s| u(x, y, s), t);
        let u_xx = d2(&|s| u(s, y, t), x);
        let u_yy = d2(&|s| u(x, s, t), y);
        let r = u_t - u_xx - u_yy + p(t) * u(x, y, t) - problem.source(x, y, t);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `(1/6) ∫_0^1 exp(t x^3 - 2 t x^2 + t x) dx` to absolute tolerance `tol`.
pub fn evaluate_e1(t: f64, tol: f64) -> f64 {
    adaptive_gauss(|x| (t * x * (x - 1.0) * (x - 1.0)).exp(), 0.0, 1.0, 6.0 * tol) / 6.0
}

/// `E'(t)` for the first example, differentiated under the integral sign.
pub fn evaluate_e1_rate(t: f64, tol: f64) -> f64 {
    adaptive_gauss(
        |x| {
            let g = x * (x - 1.0) * (x - 1.0);
            g * (t * g).exp()
        },
        0.0,
        1.0,
        6.0 * tol,
    ) / 6.0
}

/// Thread-safe memo table keyed by the bit pattern of `t`.
#[derive(Default)]
struct Memo {
    values: RwLock<HashMap<u64, f64>>,
}

impl Memo {
    fn get_or_insert_with(&self, t: f64, compute: impl FnOnce() -> f64) -> f64 {
        let key = t.to_bits();
        if let Some(&v) = self.values.read().expect("memo lock poisoned").get(&key) {
            return v;
        }
        let v = compute();
        self.values.write().expect("memo lock poisoned").insert(key, v);
        v
    }
}

const E1_TOL: f64 = 1e-12;

/// `p = t² - 4t`, `u = y(1-y) exp(t x (x-1)²)`, `T = 1`.
pub fn example1() -> ProblemData {
    let memo = Arc::new(Memo::default());
    let energy: Signal = Arc::new(move |t| memo.get_or_insert_with(t, || evaluate_e1(t, E1_TOL)));
    let source: Field3 = Arc::new(|x, y, t| {
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        let (y2, t2) = (y * y, t * t);
        let poly = 9.0 * y2 * t2 * x4 - 24.0 * y2 * t2 * x3 + 22.0 * y2 * t2 * x2
            - 8.0 * y2 * t2 * x
            - 6.0 * y * t * x
            + 6.0 * y2 * t * x
            - 9.0 * y * t2 * x4
            + 24.0 * y * t2 * x3
            - 22.0 * y * t2 * x2
            + 8.0 * y * t2 * x
            + y * x3
            - 2.0 * y * x2
            - y2 * x3
            + 2.0 * y2 * x2
            - y2 * x
            + 2.0
            + y * x;
        (t * x * (x - 1.0) * (x - 1.0)).exp() * poly
    });
    ProblemData {
        label: "example 1".into(),
        phi: Arc::new(|_, y| y * (1.0 - y)),
        source,
        energy,
        energy_rate: Some(Arc::new(|t| evaluate_e1_rate(t, E1_TOL))),
        horizon: 1.0,
        exact_u: Some(Arc::new(|x, y, t| y * (1.0 - y) * (t * x * (x - 1.0) * (x - 1.0)).exp())),
        exact_p: Some(Arc::new(|t| t * t - 4.0 * t)),
        exact_r: Some(Arc::new(|t| (t * t * t / 3.0 - 2.0 * t * t).exp())),
    }
    .validated()
    .expect("built-in example 1 is self-consistent")
}

/// `p = exp(π² t)`, `u = sin(πy) exp(-π² t) sin³(πx)`, `T = 1/3`.
pub fn example2() -> ProblemData {
    let pi2 = PI * PI;
    let e0 = 8.0 / (3.0 * pi2);
    ProblemData {
        label: "example 2".into(),
        phi: Arc::new(|x, y| (PI * y).sin() * (PI * x).sin().powi(3)),
        source: Arc::new(move |x, y, t| {
            let c2 = (PI * x).cos().powi(2);
            let growth = (pi2 * t).exp();
            -(PI * y).sin()
                * (-pi2 * t).exp()
                * (PI * x).sin()
                * (9.0 * pi2 * c2 - 3.0 * pi2 - growth + growth * c2)
        }),
        energy: Arc::new(move |t| e0 * (-pi2 * t).exp()),
        energy_rate: Some(Arc::new(move |t| -pi2 * e0 * (-pi2 * t).exp())),
        horizon: 1.0 / 3.0,
        exact_u: Some(Arc::new(move |x, y, t| {
            (PI * y).sin() * (-pi2 * t).exp() * (PI * x).sin().powi(3)
        })),
        exact_p: Some(Arc::new(move |t| (pi2 * t).exp())),
        exact_r: Some(Arc::new(move |t| (((pi2 * t).exp() - 1.0) / pi2).exp())),
    }
    .validated()
    .expect("built-in example 2 is self-consistent")
}
