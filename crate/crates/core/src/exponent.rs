//! The variable exponent p(x) and the exponents derived from it.
//!
//! The exponent is sampled on every grid node. Cell-centered values (used by
//! gradient terms) are the mean of the cell's corner nodes, so every
//! quadrature point sees a value inside the nodal range `[p⁻, p⁺]`. The range
//! is taken over nodes only; refining the grid can only widen it.

use crate::error::{Error, Result};
use crate::expr::{Expr, Scope};
use crate::grid::{Grid, Location};

/// Scope used by position-dependent expressions (exponents, profiles).
pub fn position_scope() -> Scope {
    Scope::new(["x", "y"])
}

/// Read access to an exponent sampled at each [`Location`] of a grid.
pub trait Exponents {
    fn grid(&self) -> &Grid;
    fn at(&self, loc: Location, i: usize) -> f64;
    fn min_value(&self) -> f64;
    fn max_value(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
struct Samples {
    nodes: Vec<f64>,
    interior: Vec<f64>,
    cells: Vec<f64>,
}

impl Samples {
    fn from_nodes(grid: &Grid, nodes: Vec<f64>) -> Samples {
        let interior = (0..grid.n_interior())
            .map(|k| nodes[grid.interior_to_full(k)])
            .collect();
        let cells = (0..grid.n_cells())
            .map(|c| {
                let k = grid.cell_corners(c);
                if grid.dim() == 1 {
                    0.5 * (nodes[k[0]] + nodes[k[1]])
                } else {
                    0.25 * (nodes[k[0]] + nodes[k[1]] + nodes[k[2]] + nodes[k[3]])
                }
            })
            .collect();
        Samples {
            nodes,
            interior,
            cells,
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Samples {
        Samples {
            nodes: self.nodes.iter().map(|&v| f(v)).collect(),
            interior: self.interior.iter().map(|&v| f(v)).collect(),
            cells: self.cells.iter().map(|&v| f(v)).collect(),
        }
    }

    #[inline]
    fn at(&self, loc: Location, i: usize) -> f64 {
        match loc {
            Location::InteriorNodes => self.interior[i],
            Location::AllNodes => self.nodes[i],
            Location::Cells => self.cells[i],
        }
    }

    fn range(&self) -> (f64, f64) {
        self.nodes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// A validated exponent field: `1 < p⁻ ≤ p⁺ < N` and `p⁺ ≤ N p⁻ / (N − p⁻)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    grid: Grid,
    n_dim: usize,
    samples: Samples,
    p_minus: f64,
    p_plus: f64,
    source: Option<String>,
}

impl ExponentField {
    pub fn build(expr: &Expr, grid: &Grid, n_dim: usize) -> Result<ExponentField> {
        let nodes = (0..grid.n_nodes())
            .map(|i| expr.eval(&grid.node_coord(i)))
            .collect();
        let mut field = ExponentField::from_node_values(grid, n_dim, nodes)?;
        field.source = Some(expr.source().to_string());
        Ok(field)
    }

    pub fn parse(source: &str, grid: &Grid, n_dim: usize) -> Result<ExponentField> {
        let expr = Expr::compile(source, &position_scope())?;
        ExponentField::build(&expr, grid, n_dim)
    }

    pub fn constant(p: f64, grid: &Grid, n_dim: usize) -> Result<ExponentField> {
        let mut field = ExponentField::from_node_values(grid, n_dim, vec![p; grid.n_nodes()])?;
        field.source = Some(p.to_string());
        Ok(field)
    }

    pub fn from_node_values(grid: &Grid, n_dim: usize, nodes: Vec<f64>) -> Result<ExponentField> {
        if nodes.len() != grid.n_nodes() {
            return Err(Error::InvalidExponent(format!(
                "expected {} nodal values, got {}",
                grid.n_nodes(),
                nodes.len()
            )));
        }
        if n_dim == 0 {
            return Err(Error::InvalidExponent("N must be positive".into()));
        }
        if let Some((i, v)) = nodes
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v <= 1.0)
        {
            return Err(Error::InvalidExponent(format!(
                "p = {v} at node {i} is not in (1, N)"
            )));
        }
        let samples = Samples::from_nodes(grid, nodes);
        let (p_minus, p_plus) = samples.range();
        let n = n_dim as f64;
        if p_plus >= n {
            return Err(Error::InvalidExponent(format!(
                "p+ = {p_plus} must be below N = {n_dim}"
            )));
        }
        let hat = n * p_minus / (n - p_minus);
        if p_plus > hat {
            return Err(Error::InvalidExponent(format!(
                "p+ = {p_plus} exceeds N p-/(N - p-) = {hat}"
            )));
        }
        Ok(ExponentField {
            grid: *grid,
            n_dim,
            samples,
            p_minus,
            p_plus,
            source: None,
        })
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    /// `p̂* = N p⁻ / (N − p⁻)`.
    pub fn critical_hat(&self) -> f64 {
        let n = self.n_dim as f64;
        n * self.p_minus / (n - self.p_minus)
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    pub fn node_values(&self) -> &[f64] {
        &self.samples.nodes
    }

    pub fn interior_values(&self) -> &[f64] {
        &self.samples.interior
    }

    pub fn cell_values(&self) -> &[f64] {
        &self.samples.cells
    }

    /// Nodewise `p / (p − 1)`.
    pub fn conjugate(&self) -> DerivedExponent {
        DerivedExponent::new(self.grid, self.samples.map(|p| p / (p - 1.0)))
    }

    /// Nodewise Sobolev critical exponent `N p / (N − p)`; finite because
    /// `p⁺ < N`.
    pub fn critical(&self) -> DerivedExponent {
        let n = self.n_dim as f64;
        DerivedExponent::new(self.grid, self.samples.map(|p| n * p / (n - p)))
    }
}

impl Exponents for ExponentField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    fn at(&self, loc: Location, i: usize) -> f64 {
        self.samples.at(loc, i)
    }
    fn min_value(&self) -> f64 {
        self.p_minus
    }
    fn max_value(&self) -> f64 {
        self.p_plus
    }
}

/// An exponent computed from an [`ExponentField`] (conjugate, critical, or a
/// user growth exponent). Only `> 0` is required of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedExponent {
    grid: Grid,
    samples: Samples,
    min: f64,
    max: f64,
}

impl DerivedExponent {
    fn new(grid: Grid, samples: Samples) -> DerivedExponent {
        let (min, max) = samples.range();
        DerivedExponent {
            grid,
            samples,
            min,
            max,
        }
    }

    pub fn parse(source: &str, grid: &Grid) -> Result<DerivedExponent> {
        let expr = Expr::compile(source, &position_scope())?;
        let nodes: Vec<f64> = (0..grid.n_nodes())
            .map(|i| expr.eval(&grid.node_coord(i)))
            .collect();
        if nodes.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidExponent(format!(
                "`{source}` is not a positive finite exponent on the grid"
            )));
        }
        Ok(DerivedExponent::new(
            *grid,
            Samples::from_nodes(grid, nodes),
        ))
    }

    pub fn constant(value: f64, grid: &Grid) -> DerivedExponent {
        DerivedExponent::new(
            *grid,
            Samples::from_nodes(grid, vec![value; grid.n_nodes()]),
        )
    }

    pub fn node_values(&self) -> &[f64] {
        &self.samples.nodes
    }

    pub fn interior_values(&self) -> &[f64] {
        &self.samples.interior
    }
}

impl Exponents for DerivedExponent {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    fn at(&self, loc: Location, i: usize) -> f64 {
        self.samples.at(loc, i)
    }
    fn min_value(&self) -> f64 {
        self.min
    }
    fn max_value(&self) -> f64 {
        self.max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new_1d(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_field() {
        let p = ExponentField::parse("2", &unit(16), 3).unwrap();
        assert_eq!((p.p_minus(), p.p_plus()), (2.0, 2.0));
        assert_eq!(p.critical_hat(), 6.0);
        assert!(p.is_constant());
    }

    #[test]
    fn linear_field_range_matches_dense_sampling() {
        let grid = unit(64);
        let p = ExponentField::parse("2 + x", &grid, 5).unwrap();
        // dense oracle over the closure of the domain
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=1_000_000 {
            let v = 2.0 + i as f64 / 1e6;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!((p.p_minus() - lo).abs() < 1e-12);
        assert!((p.p_plus() - hi).abs() < 1e-12);
        // cell values stay within the nodal range
        assert!(p
            .cell_values()
            .iter()
            .all(|&v| v >= p.p_minus() && v <= p.p_plus()));
    }

    #[test]
    fn invariant_violations() {
        let g = unit(8);
        assert!(matches!(
            ExponentField::parse("5", &g, 3),
            Err(Error::InvalidExponent(_))
        ));
        assert!(ExponentField::parse("1", &g, 3).is_err());
        assert!(ExponentField::parse("0.5 + x", &g, 3).is_err());
        // p- = 1.1 gives p̂* = 3.3/1.9 ≈ 1.737 < p+ = 2.1
        assert!(ExponentField::parse("1.1 + x", &g, 3).is_err());
        assert!(ExponentField::parse("2 + q", &g, 3).is_err());
    }

    #[test]
    fn conjugate_and_critical() {
        let g = unit(4);
        let two = ExponentField::constant(2.0, &g, 3).unwrap();
        assert!(two.conjugate().node_values().iter().all(|&v| v == 2.0));
        assert!(two.critical().node_values().iter().all(|&v| v == 6.0));
        let two4 = ExponentField::constant(2.0, &g, 4).unwrap();
        assert!(two4.critical().node_values().iter().all(|&v| v == 4.0));
        let three = ExponentField::constant(3.0, &g, 4).unwrap();
        assert!(three.conjugate().node_values().iter().all(|&v| v == 1.5));

        let p = ExponentField::parse("2 + x", &g, 5).unwrap();
        // node 2 sits at x = 0.5: 2.5 / 1.5 = 5/3
        assert!((p.conjugate().node_values()[2] - 5.0 / 3.0).abs() < 1e-15);
        // node 4 sits at x = 1: 5*3/(5-3) = 15/2
        assert!((p.critical().node_values()[4] - 7.5).abs() < 1e-15);
        for (a, b) in p.node_values().iter().zip(p.conjugate().node_values()) {
            assert!((1.0 / a + 1.0 / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_exponent_critical_hat_equals_pointwise_critical() {
        let p = ExponentField::constant(2.5, &unit(8), 4).unwrap();
        let crit = p.critical();
        assert!((crit.min_value() - p.critical_hat()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_build() {
        let g = Grid::new_2d([0.0, 1.0], [0.0, 1.0], 9, 7).unwrap();
        let a = ExponentField::parse("2 + 0.5*x*y", &g, 3).unwrap();
        let b = ExponentField::parse("2 + 0.5*x*y", &g, 3).unwrap();
        assert_eq!(a, b);
    }
}
