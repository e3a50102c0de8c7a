use std::fmt;

use serde::Serialize;

use super::{expand, ModeIndex, Truncation};
use crate::error::Result;
use crate::grid::time_grid;
use crate::problems::ProblemData;
use crate::quadrature::ProductRule;

/// Time levels sampled on `[0, T]` for the time-dependent conditions.
const SAMPLE_STEPS: usize = 100;
/// Tolerance for `E(0) = ∫∫φ`.
const ENERGY_TOL: f64 = 1e-8;
/// Coefficients this small are treated as zero in sign checks.
const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Pass/fail audit of the existence conditions. A failed condition is a
/// warning; the solvers still run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub label: String,
    pub conditions: Vec<Condition>,
}

impl CompatibilityReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for CompatibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "compatibility audit for {}", self.label)?;
        for c in &self.conditions {
            writeln!(f, "  {} {:<36} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

pub const E0_MATCHES_PHI: &str = "E(0) = integral of phi";
pub const ENERGY_POSITIVE: &str = "E > 0";
pub const ENERGY_NONINCREASING: &str = "E' <= 0";
pub const PHI_ZERO_BRANCH: &str = "phi_{0,2k-1} <= 0";
pub const PHI_ASSOCIATED_BRANCH: &str = "phi_{2m,2k-1} <= 0";
pub const SOURCE_SIGN: &str = "f_{2m,2k-1} >= 0";
pub const SOURCE_SPREAD: &str = "min f >= max f (1 - e^{-mu T})";

fn first_offender<T: fmt::Debug>(items: &[T], describe: &str) -> String {
    match items.first() {
        None => "ok".into(),
        Some(first) => format!("{} offending {describe}, first {first:?}", items.len()),
    }
}

/// Audits `problem` against the sign and compatibility conditions using
/// coefficients within `trunc` and time samples on `[0, T]`.
pub fn check_compatibility(problem: &ProblemData, trunc: Truncation, rule: &ProductRule) -> Result<CompatibilityReport> {
    let tg = time_grid(problem.horizon, SAMPLE_STEPS)?;
    let horizon = problem.horizon;
    let mut conditions = Vec::new();

    let e0 = problem.energy(0.0);
    let mass = rule.integrate_fn(|x, y| problem.phi(x, y));
    conditions.push(Condition {
        name: E0_MATCHES_PHI,
        passed: (e0 - mass).abs() <= ENERGY_TOL,
        detail: format!("E(0) = {e0:.12}, integral = {mass:.12}, gap {:.2e}", (e0 - mass).abs()),
    });

    let energies: Vec<(f64, f64)> = tg.times().map(|t| (t, problem.energy(t))).collect();
    let nonpositive: Vec<_> = energies.iter().filter(|(_, e)| *e <= 0.0).collect();
    conditions.push(Condition {
        name: ENERGY_POSITIVE,
        passed: nonpositive.is_empty(),
        detail: first_offender(&nonpositive, "samples (t, E)"),
    });

    let rates: Vec<(f64, f64)> = match problem.energy_rate(0.0) {
        Some(_) => tg
            .times()
            .map(|t| (t, problem.energy_rate(t).expect("rate present")))
            .collect(),
        None => {
            let h = tg.ht();
            energies.windows(2).map(|w| (w[0].0, (w[1].1 - w[0].1) / h)).collect()
        }
    };
    let increasing: Vec<_> = rates.iter().filter(|(_, r)| *r > SIGN_TOL).collect();
    conditions.push(Condition {
        name: ENERGY_NONINCREASING,
        passed: increasing.is_empty(),
        detail: first_offender(&increasing, "samples (t, E')"),
    });

    let table = expand(|x, y| problem.phi(x, y), |x, y, t| problem.source(x, y, t), trunc, rule, tg)?;
    let odd_k: Vec<usize> = (1..=trunc.k_max()).step_by(2).collect();

    let positive_zero: Vec<(usize, f64)> = odd_k
        .iter()
        .map(|&k| (k, table.phi().get(ModeIndex::zero(k)).expect("in truncation")))
        .filter(|(_, c)| *c > SIGN_TOL)
        .collect();
    conditions.push(Condition {
        name: PHI_ZERO_BRANCH,
        passed: positive_zero.is_empty(),
        detail: first_offender(&positive_zero, "modes (k, phi_{0,k})"),
    });

    let positive_assoc: Vec<(usize, usize, f64)> = odd_k
        .iter()
        .flat_map(|&k| (1..=trunc.m_max()).map(move |m| (m, k)))
        .map(|(m, k)| (m, k, table.phi().get(ModeIndex::associated(m, k)).expect("in truncation")))
        .filter(|(_, _, c)| *c > SIGN_TOL)
        .collect();
    conditions.push(Condition {
        name: PHI_ASSOCIATED_BRANCH,
        passed: positive_assoc.is_empty(),
        detail: first_offender(&positive_assoc, "modes (m, k, phi_{2m,k})"),
    });

    // Source conditions range over m >= 0, i.e. the zero branch as well.
    let source_modes: Vec<ModeIndex> = odd_k
        .iter()
        .flat_map(|&k| {
            std::iter::once(ModeIndex::zero(k)).chain((1..=trunc.m_max()).map(move |m| ModeIndex::associated(m, k)))
        })
        .collect();
    let mut negative = Vec::new();
    let mut spread = Vec::new();
    for idx in &source_modes {
        let series = table.source_series(*idx).expect("in truncation");
        let min = series.iter().copied().fold(f64::INFINITY, f64::min);
        let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min < -SIGN_TOL {
            negative.push((idx.m(), idx.k(), min));
        }
        let factor = 1.0 - (-idx.eigenvalue() * horizon).exp();
        if min < max * factor - SIGN_TOL {
            spread.push((idx.m(), idx.k(), min, max * factor));
        }
    }
    conditions.push(Condition {
        name: SOURCE_SIGN,
        passed: negative.is_empty(),
        detail: first_offender(&negative, "modes (m, k, min f)"),
    });
    conditions.push(Condition {
        name: SOURCE_SPREAD,
        passed: spread.is_empty(),
        detail: first_offender(&spread, "modes (m, k, min, bound)"),
    });

    for c in conditions.iter().filter(|c| !c.passed) {
        log::warn!("{}: condition `{}` violated ({})", problem.label, c.name, c.detail);
    }
    Ok(CompatibilityReport {
        label: problem.label.clone(),
        conditions,
    })
}
