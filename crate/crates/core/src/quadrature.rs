//! Tensor-product quadrature on the unit square.
//!
//! Every rule is reified as an explicit weight matrix so the energy
//! closure in the time march is a single weighted reduction.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, AxisKind, Grid2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Trapezoid,
    Simpson,
    LobattoProduct,
}

#[derive(Debug, Clone)]
pub struct ProductRule {
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    x_weights: Vec<f64>,
    y_weights: Vec<f64>,
    weights: Array2<f64>,
    kind: RuleKind,
}

impl ProductRule {
    fn from_factors(grid: &Grid2D, x_weights: Vec<f64>, y_weights: Vec<f64>, kind: RuleKind) -> Self {
        let weights = Array2::from_shape_fn((x_weights.len(), y_weights.len()), |(i, j)| {
            x_weights[i] * y_weights[j]
        });
        Self {
            x_nodes: grid.x_axis.nodes().to_vec(),
            y_nodes: grid.y_axis.nodes().to_vec(),
            x_weights,
            y_weights,
            weights,
            kind,
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    /// One-dimensional factors of the weight matrix.
    pub fn x_weights(&self) -> &[f64] {
        &self.x_weights
    }

    pub fn y_weights(&self) -> &[f64] {
        &self.y_weights
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_nodes.len(), self.y_nodes.len())
    }

    /// Integrates a callable by sampling it at the rule's nodes.
    pub fn integrate_fn<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0;
        for (i, &x) in self.x_nodes.iter().enumerate() {
            for (j, &y) in self.y_nodes.iter().enumerate() {
                sum += self.weights[[i, j]] * f(x, y);
            }
        }
        sum
    }
}

fn require_uniform(grid: &Grid2D) -> Result<()> {
    if grid.kind() != AxisKind::Uniform {
        return Err(Error::WrongGridKind("uniform product rules need uniform axes"));
    }
    Ok(())
}

fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    w
}

fn simpson_weights(n: usize) -> Result<Vec<f64>> {
    if n % 2 != 0 {
        return Err(Error::Parity(n));
    }
    let third = 1.0 / (3.0 * n as f64);
    Ok((0..=n)
        .map(|i| {
            if i == 0 || i == n {
                third
            } else if i % 2 == 1 {
                4.0 * third
            } else {
                2.0 * third
            }
        })
        .collect())
}

pub fn trapezoid_rule(grid: &Grid2D) -> Result<ProductRule> {
    require_uniform(grid)?;
    let wx = trapezoid_weights(grid.x_axis.intervals());
    let wy = trapezoid_weights(grid.y_axis.intervals());
    Ok(ProductRule::from_factors(grid, wx, wy, RuleKind::Trapezoid))
}

pub fn simpson_rule(grid: &Grid2D) -> Result<ProductRule> {
    require_uniform(grid)?;
    let wx = simpson_weights(grid.x_axis.intervals())?;
    let wy = simpson_weights(grid.y_axis.intervals())?;
    Ok(ProductRule::from_factors(grid, wx, wy, RuleKind::Simpson))
}

pub fn lobatto_rule(grid: &Grid2D) -> Result<ProductRule> {
    let missing = Error::WrongGridKind("Lobatto product rule needs weighted Lobatto axes");
    if grid.kind() != AxisKind::Lobatto {
        return Err(missing);
    }
    let (Some(wx), Some(wy)) = (grid.x_axis.weights(), grid.y_axis.weights()) else {
        return Err(missing);
    };
    Ok(ProductRule::from_factors(grid, wx.to_vec(), wy.to_vec(), RuleKind::LobattoProduct))
}

/// `ΣΣ w_ij s_ij`, summed row-major in a fixed order.
pub fn integrate(rule: &ProductRule, samples: &Array2<f64>) -> Result<f64> {
    let expected = rule.shape();
    if samples.dim() != expected {
        return Err(Error::Shape {
            expected,
            got: samples.dim(),
        });
    }
    let mut sum = 0.0;
    for (w, s) in rule.weights.iter().zip(samples.iter()) {
        sum += w * s;
    }
    Ok(sum)
}

/// Adaptive Gauss-Legendre integration of a smooth 1D function.
///
/// A panel is accepted when its 10-point estimate agrees with the sum of
/// the estimates on its two halves to within the panel's share of `tol`.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(10);
    }
    RULE.with(|(nodes, weights)| {
        let panel = |lo: f64, hi: f64| {
            let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            r * nodes
                .iter()
                .zip(weights)
                .map(|(x, w)| w * f(c + r * x))
                .sum::<f64>()
        };
        let mut total = 0.0;
        let mut stack = vec![(a, b, panel(a, b), tol, 0u32)];
        while let Some((lo, hi, whole, tol, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let (left, right) = (panel(lo, mid), panel(mid, hi));
            if (left + right - whole).abs() <= tol || depth >= 40 {
                total += left + right;
            } else {
                stack.push((mid, hi, right, 0.5 * tol, depth + 1));
                stack.push((lo, mid, left, 0.5 * tol, depth + 1));
            }
        }
        total
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use std::f64::consts::PI;

    fn sample(rule: &ProductRule, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        let (nx, ny) = rule.shape();
        Array2::from_shape_fn((nx, ny), |(i, j)| f(rule.x_nodes()[i], rule.y_nodes()[j]))
    }

    #[test]
    fn constants_integrate_to_area() {
        let rules = [
            trapezoid_rule(&Grid2D::uniform(7, 3).unwrap()).unwrap(),
            simpson_rule(&Grid2D::uniform(6, 10).unwrap()).unwrap(),
            lobatto_rule(&Grid2D::lobatto(9, 4).unwrap()).unwrap(),
        ];
        for rule in &rules {
            assert!((rule.weights().sum() - 1.0).abs() < 1e-12);
            assert!(rule.weights().iter().all(|&w| w >= 0.0));
            assert_eq!(integrate(rule, &Array2::zeros(rule.shape())).unwrap(), 0.0);
            let c = 3.25;
            let v = integrate(rule, &Array2::from_elem(rule.shape(), c)).unwrap();
            assert!((v - c).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_exact_for_bilinear() {
        let rule = trapezoid_rule(&Grid2D::uniform(4, 4).unwrap()).unwrap();
        let v = integrate(&rule, &sample(&rule, |x, y| x * y)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_x_squared_half_step() {
        let rule = trapezoid_rule(&Grid2D::uniform(2, 2).unwrap()).unwrap();
        let v = integrate(&rule, &sample(&rule, |x, _| x * x)).unwrap();
        assert!((v - 0.375).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_matches_cell_sum_form() {
        let (n, m) = (5, 3);
        let rule = trapezoid_rule(&Grid2D::uniform(n, m).unwrap()).unwrap();
        let f = |x: f64, y: f64| (3.0 * x).sin() + y * y * x;
        let (h, k) = (1.0 / n as f64, 1.0 / m as f64);
        let mut cells = 0.0;
        for i in 1..=n {
            for j in 1..=m {
                let (x0, x1) = ((i - 1) as f64 * h, i as f64 * h);
                let (y0, y1) = ((j - 1) as f64 * k, j as f64 * k);
                cells += 0.25 * (f(x0, y0) + f(x0, y1) + f(x1, y0) + f(x1, y1));
            }
        }
        cells *= h * k;
        let v = integrate(&rule, &sample(&rule, f)).unwrap();
        assert!((v - cells).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let rule = simpson_rule(&Grid2D::uniform(2, 2).unwrap()).unwrap();
        let v = integrate(&rule, &sample(&rule, |x, y| (x * y).powi(3))).unwrap();
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_parity() {
        assert!(matches!(simpson_rule(&Grid2D::uniform(3, 4).unwrap()), Err(Error::Parity(3))));
        assert!(matches!(simpson_rule(&Grid2D::uniform(4, 5).unwrap()), Err(Error::Parity(5))));
    }

    #[test]
    fn simpson_sine_product() {
        let rule = simpson_rule(&Grid2D::uniform(26, 26).unwrap()).unwrap();
        let v = integrate(&rule, &sample(&rule, |x, y| (PI * x).sin() * (PI * y).sin())).unwrap();
        assert!((v - 4.0 / (PI * PI)).abs() < 1e-6);
    }

    #[test]
    fn lobatto_exactness_boundary() {
        let rule = lobatto_rule(&Grid2D::lobatto(4, 4).unwrap()).unwrap();
        let v = integrate(&rule, &sample(&rule, |x, y| (x * y).powi(6))).unwrap();
        assert!((v - 1.0 / 49.0).abs() < 1e-12);
        let v8 = integrate(&rule, &sample(&rule, |x, _| x.powi(8))).unwrap();
        assert!((v8 - 1.0 / 9.0).abs() > 1e-6);
    }

    #[test]
    fn wrong_grid_kinds() {
        let lob = Grid2D::lobatto(4, 4).unwrap();
        let uni = Grid2D::uniform(4, 4).unwrap();
        assert!(matches!(trapezoid_rule(&lob), Err(Error::WrongGridKind(_))));
        assert!(matches!(simpson_rule(&lob), Err(Error::WrongGridKind(_))));
        assert!(matches!(lobatto_rule(&uni), Err(Error::WrongGridKind(_))));
    }

    #[test]
    fn shape_mismatch() {
        let rule = trapezoid_rule(&Grid2D::uniform(4, 4).unwrap()).unwrap();
        let err = integrate(&rule, &Array2::zeros((4, 5))).unwrap_err();
        assert!(matches!(err, Error::Shape { expected: (5, 5), got: (4, 5) }));
    }

    #[test]
    fn refinement_reduces_error_monotonically() {
        let f = |x: f64, y: f64| (x * y).exp() * (2.0 * y).cos();
        // ∫0^1 ∫0^1 e^{xy} cos 2y dx dy, reference by a fine Lobatto rule
        let reference = lobatto_rule(&Grid2D::lobatto(60, 60).unwrap()).unwrap().integrate_fn(f);
        let build: [fn(usize) -> ProductRule; 3] = [
            |n| trapezoid_rule(&Grid2D::uniform(n, n).unwrap()).unwrap(),
            |n| simpson_rule(&Grid2D::uniform(n, n).unwrap()).unwrap(),
            |n| lobatto_rule(&Grid2D::lobatto(n / 2, n / 2).unwrap()).unwrap(),
        ];
        for rule_of in build {
            let errs: Vec<f64> = [4, 8, 16]
                .iter()
                .map(|&n| (rule_of(n).integrate_fn(f) - reference).abs())
                .collect();
            assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        }
    }

    #[test]
    fn adaptive_gauss_smooth() {
        let v = adaptive_gauss(|x| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = adaptive_gauss(|x| (50.0 * x).sin(), 0.0, 1.0, 1e-12);
        assert!((v - (1.0 - 50f64.cos()) / 50.0).abs() < 1e-12);
    }
}
