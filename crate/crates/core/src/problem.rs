//! Problem files: the JSON document a run starts from.
//!
//! ```json
//! {
//!   "grid": {"dimension": 1, "extents": [[0, 2]], "cells": [256]},
//!   "exponent": "2",
//!   "n_dim": 3,
//!   "lambda": 0.0,
//!   "potential": {"pieces": [...], "params": {...}},
//!   "audit": {"mode": "enforce", "growth": {"r": "2"}, "mu_claim": 1.0},
//!   "u_bar": "0.7*sin(pi*x/2)",
//!   "solver": {"tol_m": 1e-6},
//!   "seed": 42
//! }
//! ```
//!
//! Everything except `grid`, `exponent`, `n_dim` and `potential` has a
//! default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{position_scope, ExponentField};
use crate::expr::Expr;
use crate::grid::{Grid, GridFunction};
use crate::mountain_pass::{Aggregation, GeometryConfig, SolverConfig};
use crate::potential::{Potential, PotentialSpec};
use crate::rayleigh::RayleighConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    /// A failed audit stops the run.
    #[default]
    Enforce,
    /// Audits are recorded but never stop the run.
    Report,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSettings {
    /// Growth exponent `r(x)`; defaults to the constant `p⁺`.
    #[serde(default)]
    pub r: Option<String>,
    /// Constants of `|∂j| ≤ a + c1 |t|^{r−1}`; fitted when absent.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub mode: AuditMode,
    pub growth: GrowthSettings,
    pub mu_claim: Option<f64>,
    /// Exponent of the small-sphere lower bound.
    pub theta: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings {
            mode: AuditMode::Enforce,
            growth: GrowthSettings::default(),
            mu_claim: None,
            theta: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub exponent: String,
    pub n_dim: usize,
    #[serde(default)]
    pub lambda: f64,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub audit: AuditSettings,
    /// Path endpoint as an expression in `x`, `y`. Skips the crossing scan.
    #[serde(default)]
    pub u_bar: Option<String>,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub rayleigh: RayleighConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub seed: u64,
}

/// A problem file turned into the objects the modules work on.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub grid: Grid,
    pub exponent: ExponentField,
    pub potential: Potential,
    pub u_bar: Option<GridFunction>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ProblemSpec> {
        ProblemSpec::from_json(&std::fs::read_to_string(path)?)
    }

    /// Replace the cell counts, keeping the extents.
    pub fn with_cells(mut self, cells: &[usize]) -> Result<ProblemSpec> {
        self.grid = self.grid.with_cells(cells)?;
        Ok(self)
    }

    pub fn build(&self) -> Result<Problem> {
        let grid = self.grid;
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {}", self.lambda)));
        }
        let exponent = ExponentField::parse(&self.exponent, &grid, self.n_dim)?;
        let potential = Potential::new(&self.potential)?;
        let u_bar = match &self.u_bar {
            Some(src) => {
                let e = Expr::compile(src, &position_scope())?;
                let u = GridFunction::from_fn(&grid, |x, y| e.eval(&[x, y]));
                if u.values().iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "u_bar `{src}` is not finite on the grid"
                    )));
                }
                Some(u)
            }
            None => None,
        };
        Ok(Problem {
            spec: self.clone(),
            grid,
            exponent,
            potential,
            u_bar,
        })
    }
}

/// Parse `"256"` or `"32x48"` into per-axis cell counts.
pub fn parse_cells(text: &str) -> Result<Vec<usize>> {
    text.split(['x', 'X', ','])
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad cell count `{text}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"dimension": 1, "extents": [[0, 1]], "cells": [16]},
        "exponent": "2 + x",
        "n_dim": 5,
        "potential": {"pieces": [{"range": [null, null], "value": "-t^2", "deriv": "-2*t"}]}
    }"#;

    #[test]
    fn minimal_spec_gets_defaults() {
        let spec = ProblemSpec::from_json(MINIMAL).unwrap();
        assert_eq!(spec.lambda, 0.0);
        assert_eq!(spec.audit.mode, AuditMode::Enforce);
        assert_eq!(spec.solver.path_points, 41);
        assert_eq!(spec.rayleigh.restarts, 16);
        let problem = spec.build().unwrap();
        assert!((problem.exponent.p_plus() - 3.0).abs() < 1e-15);
        assert!(problem.u_bar.is_none());
    }

    #[test]
    fn overrides_and_errors() {
        let spec = ProblemSpec::from_json(MINIMAL)
            .unwrap()
            .with_cells(&[64])
            .unwrap();
        assert_eq!(spec.grid.cells_along(0), 64);
        assert_eq!(parse_cells("32x48").unwrap(), vec![32, 48]);
        assert!(parse_cells("abc").is_err());
        assert!(ProblemSpec::from_json("{").is_err());
        let unknown = MINIMAL.replace("\"n_dim\"", "\"bogus\": 1, \"n_dim\"");
        assert!(ProblemSpec::from_json(&unknown).is_err());
        let bad_p = MINIMAL.replace("2 + x", "0.5");
        assert!(ProblemSpec::from_json(&bad_p).unwrap().build().is_err());
    }
}
