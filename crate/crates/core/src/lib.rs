//! Numerical recovery of the time-dependent reaction coefficient `p(t)` in
//!
//! ```text
//! u_t = u_xx + u_yy - p(t) u + f(x, y, t)   on (0,1)^2 x (0,T]
//! u(0,y,t) = u(1,y,t),  u_x(1,y,t) = 0,  u(x,0,t) = u(x,1,t) = 0
//! ∫∫ u(x,y,t) dx dy = E(t)
//! ```
//!
//! Two independent routes are provided:
//!
//! * [`fdsolver`] marches the transformed problem `v = u r`, `r = exp(∫p)`
//!   with an explicit scheme on uniform or Gauss-Lobatto grids and closes the
//!   energy condition by product quadrature ([`quadrature`]).
//! * [`spectral`] expands the data in the biorthonormal root functions of the
//!   nonlocal Laplacian and iterates the fixed-point map for `p`.
//!
//! [`problems`] ships the two manufactured test problems and [`report`]
//! drives experiments and writes CSV/JSON output.

pub mod error;
pub mod fdsolver;
pub mod grid;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
pub use fdsolver::{march, FieldLevel, Method, SolveConfig, SolveResult};
pub use grid::{lobatto_axis, time_grid, uniform_axis, Axis, AxisKind, Grid2D, TimeGrid};
pub use problems::{example1, example2, ProblemData};
pub use quadrature::{integrate, ProductRule, RuleKind};
pub use report::{ErrorReport, ExampleId, RunMethod, RunSpec};
pub use spectral::{CoefficientFunction, CoefficientTable, ModeIndex, Truncation};
