use std::f64::consts::{PI, SQRT_2};

use super::{Branch, ModeIndex};
use crate::error::{Error, Result};
use crate::quadrature::ProductRule;

pub fn eigenvalue(m: usize, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidIndex(format!("k must be at least 1, got {k}")));
    }
    let a = 2.0 * PI * m as f64;
    let b = PI * k as f64;
    Ok(a * a + b * b)
}

/// `V_k(y) = √2 sin(πky)`
#[inline]
pub(crate) fn y_factor(k: usize, y: f64) -> f64 {
    SQRT_2 * (PI * k as f64 * y).sin()
}

/// x-part of the root function `Z`.
#[inline]
pub(crate) fn root_x(branch: Branch, m: usize, x: f64) -> f64 {
    match branch {
        Branch::Zero => 2.0,
        Branch::Cosine => 4.0 * (2.0 * PI * m as f64 * x).cos(),
        Branch::Associated => 4.0 * (1.0 - x) * (2.0 * PI * m as f64 * x).sin(),
    }
}

/// x-part of the adjoint function `W`.
#[inline]
pub(crate) fn adjoint_x(branch: Branch, m: usize, x: f64) -> f64 {
    match branch {
        Branch::Zero => x,
        Branch::Cosine => x * (2.0 * PI * m as f64 * x).cos(),
        Branch::Associated => (2.0 * PI * m as f64 * x).sin(),
    }
}

pub fn root_function(idx: ModeIndex, x: f64, y: f64) -> f64 {
    root_x(idx.branch(), idx.m(), x) * y_factor(idx.k(), y)
}

pub fn adjoint_function(idx: ModeIndex, x: f64, y: f64) -> f64 {
    adjoint_x(idx.branch(), idx.m(), x) * y_factor(idx.k(), y)
}

/// Quadrature approximation of `∫∫ f g` over the unit square.
pub fn inner_product<F, G>(f: F, g: G, rule: &ProductRule) -> f64
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    rule.integrate_fn(|x, y| f(x, y) * g(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::quadrature::lobatto_rule;

    #[test]
    fn eigenvalues() {
        let pi2 = PI * PI;
        assert!((eigenvalue(0, 1).unwrap() - pi2).abs() < 1e-14);
        assert!((eigenvalue(0, 1).unwrap() - 9.8696).abs() < 1e-4);
        assert!((eigenvalue(1, 1).unwrap() - 5.0 * pi2).abs() < 1e-12);
        assert!((eigenvalue(2, 3).unwrap() - 25.0 * pi2).abs() < 1e-12);
        assert!(matches!(eigenvalue(1, 0), Err(Error::InvalidIndex(_))));
        assert_eq!(ModeIndex::cosine(2, 3).eigenvalue(), eigenvalue(2, 3).unwrap());
    }

    #[test]
    fn root_function_values() {
        let z = root_function(ModeIndex::zero(1), 0.3, 0.5);
        assert!((z - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((z - 2.828427).abs() < 1e-6);
        for m in 1..4 {
            for k in 1..4 {
                assert!(root_function(ModeIndex::associated(m, k), 1.0, 0.37).abs() < 1e-15);
                for idx in [ModeIndex::zero(k), ModeIndex::cosine(m, k), ModeIndex::associated(m, k)] {
                    assert_eq!(root_function(idx, 0.42, 0.0), 0.0);
                    assert!(root_function(idx, 0.42, 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn adjoint_function_values() {
        assert!((adjoint_function(ModeIndex::zero(1), 1.0, 0.5) - SQRT_2).abs() < 1e-15);
        assert!((adjoint_function(ModeIndex::associated(1, 1), 0.25, 0.5) - SQRT_2).abs() < 1e-15);
        for m in 1..4 {
            for k in 1..4 {
                for idx in [ModeIndex::zero(k), ModeIndex::cosine(m, k), ModeIndex::associated(m, k)] {
                    assert_eq!(adjoint_function(idx, 0.0, 0.3), 0.0);
                }
            }
        }
    }

    #[test]
    fn inner_products() {
        let rule = lobatto_rule(&Grid2D::lobatto(40, 40).unwrap()).unwrap();
        let z01 = |x, y| root_function(ModeIndex::zero(1), x, y);
        let w01 = |x, y| adjoint_function(ModeIndex::zero(1), x, y);
        let z11 = |x, y| root_function(ModeIndex::cosine(1, 1), x, y);
        assert!((inner_product(z01, w01, &rule) - 1.0).abs() < 1e-12);
        assert!(inner_product(z11, w01, &rule).abs() < 1e-12);
        assert_eq!(inner_product(z01, |_, _| 0.0, &rule), 0.0);
    }
}
