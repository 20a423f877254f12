//! Uniform tensor grids on intervals and rectangles, and the functions that
//! live on them.
//!
//! Nodes are numbered row-major with the x index fastest. A [`GridFunction`]
//! stores interior nodes only, so the Dirichlet condition is structural.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the samples of a field live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    InteriorNodes,
    AllNodes,
    Cells,
}

/// JSON form: `{"dimension": 1, "extents": [[0, 1]], "cells": [256]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub extents: Vec<[f64; 2]>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    cells: [usize; 2],
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Grid> {
        if spec.extents.len() != spec.dimension || spec.cells.len() != spec.dimension {
            return Err(Error::InvalidGrid(format!(
                "dimension {} needs {} extents and cell counts",
                spec.dimension, spec.dimension
            )));
        }
        match spec.dimension {
            1 => Grid::new_1d(spec.extents[0][0], spec.extents[0][1], spec.cells[0]),
            2 => Grid::new_2d(
                spec.extents[0],
                spec.extents[1],
                spec.cells[0],
                spec.cells[1],
            ),
            d => Err(Error::InvalidGrid(format!("unsupported dimension {d}"))),
        }
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> GridSpec {
        GridSpec {
            dimension: g.dim,
            extents: (0..g.dim).map(|a| [g.lower[a], g.upper[a]]).collect(),
            cells: g.cells[..g.dim].to_vec(),
        }
    }
}

fn check_axis(a: f64, b: f64, n: usize) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}]")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 cells per axis, got {n}"
        )));
    }
    Ok(())
}

impl Grid {
    pub fn new_1d(a: f64, b: f64, cells: usize) -> Result<Grid> {
        check_axis(a, b, cells)?;
        Ok(Grid {
            dim: 1,
            lower: [a, 0.0],
            upper: [b, 0.0],
            cells: [cells, 1],
        })
    }

    pub fn new_2d(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Result<Grid> {
        check_axis(x[0], x[1], nx)?;
        check_axis(y[0], y[1], ny)?;
        Ok(Grid {
            dim: 2,
            lower: [x[0], y[0]],
            upper: [x[1], y[1]],
            cells: [nx, ny],
        })
    }

    /// Same domain, different resolution.
    pub fn with_cells(&self, cells: &[usize]) -> Result<Grid> {
        match (self.dim, cells) {
            (1, [n]) => Grid::new_1d(self.lower[0], self.upper[0], *n),
            (2, [nx, ny]) => Grid::new_2d(
                [self.lower[0], self.upper[0]],
                [self.lower[1], self.upper[1]],
                *nx,
                *ny,
            ),
            _ => Err(Error::InvalidGrid(format!(
                "{} cell counts for a {}-D grid",
                cells.len(),
                self.dim
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length(axis) / self.cells[axis] as f64
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.length(a)).product()
    }

    pub fn n_cells(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    pub fn n_nodes(&self) -> usize {
        self.cells[..self.dim].iter().map(|n| n + 1).product()
    }

    pub fn n_interior(&self) -> usize {
        self.cells[..self.dim].iter().map(|n| n - 1).product()
    }

    pub fn n_samples(&self, loc: Location) -> usize {
        match loc {
            Location::InteriorNodes => self.n_interior(),
            Location::AllNodes => self.n_nodes(),
            Location::Cells => self.n_cells(),
        }
    }

    /// Quadrature weight of one cell (and of one interior node).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Quadrature weight of sample `i` at `loc`. All nodes use the trapezoid
    /// weights; interior nodes and cells share the cell volume.
    #[inline]
    pub fn weight(&self, loc: Location, i: usize) -> f64 {
        match loc {
            Location::InteriorNodes | Location::Cells => self.cell_volume(),
            Location::AllNodes => {
                let mut w = self.cell_volume();
                let idx = self.node_multi_index(i);
                for (a, &k) in idx.iter().enumerate().take(self.dim) {
                    if k == 0 || k == self.cells[a] {
                        w *= 0.5;
                    }
                }
                w
            }
        }
    }

    fn node_multi_index(&self, full: usize) -> [usize; 2] {
        let nx = self.cells[0] + 1;
        [full % nx, full / nx]
    }

    pub fn node_coord(&self, full: usize) -> [f64; 2] {
        let [ix, iy] = self.node_multi_index(full);
        [
            self.lower[0] + ix as f64 * self.spacing(0),
            if self.dim == 2 {
                self.lower[1] + iy as f64 * self.spacing(1)
            } else {
                0.0
            },
        ]
    }

    pub fn is_boundary_node(&self, full: usize) -> bool {
        let idx = self.node_multi_index(full);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.cells[a])
    }

    /// Full node index of interior node `k`.
    #[inline]
    pub fn interior_to_full(&self, k: usize) -> usize {
        if self.dim == 1 {
            k + 1
        } else {
            let mx = self.cells[0] - 1;
            let (ix, iy) = (k % mx + 1, k / mx + 1);
            iy * (self.cells[0] + 1) + ix
        }
    }

    /// Interior index of full node `full`, if it is interior.
    pub fn full_to_interior(&self, full: usize) -> Option<usize> {
        if self.is_boundary_node(full) {
            return None;
        }
        let [ix, iy] = self.node_multi_index(full);
        Some(if self.dim == 1 {
            ix - 1
        } else {
            (iy - 1) * (self.cells[0] - 1) + ix - 1
        })
    }

    pub fn interior_coord(&self, k: usize) -> [f64; 2] {
        self.node_coord(self.interior_to_full(k))
    }

    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let (cx, cy) = (c % self.cells[0], c / self.cells[0]);
        [
            self.lower[0] + (cx as f64 + 0.5) * self.spacing(0),
            if self.dim == 2 {
                self.lower[1] + (cy as f64 + 0.5) * self.spacing(1)
            } else {
                0.0
            },
        ]
    }

    /// Full node indices of the corners of cell `c`: in 1D `[left, right]`,
    /// in 2D `[(0,0), (1,0), (0,1), (1,1)]` offsets.
    #[inline]
    pub fn cell_corners(&self, c: usize) -> [usize; 4] {
        if self.dim == 1 {
            [c, c + 1, usize::MAX, usize::MAX]
        } else {
            let nx = self.cells[0];
            let (cx, cy) = (c % nx, c / nx);
            let base = cy * (nx + 1) + cx;
            [base, base + 1, base + nx + 1, base + nx + 2]
        }
    }

    pub fn coord(&self, loc: Location, i: usize) -> [f64; 2] {
        match loc {
            Location::InteriorNodes => self.interior_coord(i),
            Location::AllNodes => self.node_coord(i),
            Location::Cells => self.cell_center(i),
        }
    }

    /// Interior values scattered into a full nodal vector with zero boundary.
    pub fn expand(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_nodes()];
        for (k, &v) in interior.iter().enumerate() {
            full[self.interior_to_full(k)] = v;
        }
        full
    }
}

/// A field sampled at some [`Location`] of a grid.
pub trait Sampled {
    fn grid(&self) -> &Grid;
    fn location(&self) -> Location;
    fn values(&self) -> &[f64];
}

/// Real values on the interior nodes of a grid, zero on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> GridFunction {
        GridFunction {
            grid: *grid,
            values: vec![0.0; grid.n_interior()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.n_interior() {
            return Err(Error::InvalidData(format!(
                "expected {} interior values, got {}",
                grid.n_interior(),
                values.len()
            )));
        }
        Ok(GridFunction {
            grid: *grid,
            values,
        })
    }

    /// Sample `f(x, y)` at the interior nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = (0..grid.n_interior())
            .map(|k| {
                let [x, y] = grid.interior_coord(k);
                f(x, y)
            })
            .collect();
        GridFunction {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `a*self + b*other`
    pub fn lincomb(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.lincomb(1.0, other, 1.0)
    }

    /// Euclidean distance of the nodal vectors.
    pub fn nodal_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn full_values(&self) -> Vec<f64> {
        self.grid.expand(&self.values)
    }

    pub fn to_nodal(&self) -> NodalField {
        NodalField {
            grid: self.grid,
            values: self.full_values(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.to_nodal().write_csv(w)
    }

    pub fn read_csv<R: Read>(grid: &Grid, r: R) -> Result<GridFunction> {
        GridFunction::try_from(NodalField::read_csv(grid, r)?)
    }

    /// Compact JSON array of interior values.
    pub fn to_json_array(&self) -> serde_json::Value {
        serde_json::Value::from(self.values.clone())
    }
}

impl Sampled for GridFunction {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn location(&self) -> Location {
        Location::InteriorNodes
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<NodalField> for GridFunction {
    type Error = Error;

    fn try_from(f: NodalField) -> Result<GridFunction> {
        let grid = f.grid;
        let mut interior = Vec::with_capacity(grid.n_interior());
        for (i, &v) in f.values.iter().enumerate() {
            if grid.is_boundary_node(i) {
                if v != 0.0 {
                    return Err(Error::InvalidData(format!(
                        "nonzero boundary value {v} at node {i}"
                    )));
                }
            } else {
                interior.push(v);
            }
        }
        GridFunction::from_values(&grid, interior)
    }
}

/// Values on every node, boundary included; integrated with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    grid: Grid,
    values: Vec<f64>,
}

impl NodalField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<NodalField> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidData(format!(
                "expected {} nodal values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(NodalField {
            grid: *grid,
            values,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> NodalField {
        let values = (0..grid.n_nodes())
            .map(|i| {
                let [x, y] = grid.node_coord(i);
                f(x, y)
            })
            .collect();
        NodalField {
            grid: *grid,
            values,
        }
    }

    pub fn is_zero_on_boundary(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, &v)| v == 0.0 || !self.grid.is_boundary_node(i))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.grid.dim() == 1 {
            wr.write_record(["x", "value"])?;
        } else {
            wr.write_record(["x", "y", "value"])?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let [x, y] = self.grid.node_coord(i);
            if self.grid.dim() == 1 {
                wr.write_record([x.to_string(), v.to_string()])?;
            } else {
                wr.write_record([x.to_string(), y.to_string(), v.to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Read `x[,y],value` rows and match them to grid nodes by coordinate.
    /// Missing boundary nodes default to zero; missing interior nodes are an
    /// error.
    pub fn read_csv<R: Read>(grid: &Grid, r: R) -> Result<NodalField> {
        let mut rd = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut values = vec![f64::NAN; grid.n_nodes()];
        let width = grid.dim() + 1;
        let locate = |coords: &[f64]| -> Result<usize> {
            let mut idx = [0usize; 2];
            for a in 0..grid.dim() {
                let s = (coords[a] - grid.lower(a)) / grid.spacing(a);
                let k = s.round();
                if (s - k).abs() > 1e-6 || k < 0.0 || k > grid.cells_along(a) as f64 {
                    return Err(Error::InvalidData(format!(
                        "coordinate {} is not a grid node on axis {a}",
                        coords[a]
                    )));
                }
                idx[a] = k as usize;
            }
            Ok(idx[1] * (grid.cells_along(0) + 1) + idx[0])
        };
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != width {
                return Err(Error::InvalidData(format!(
                    "expected {width} columns, got {}",
                    rec.len()
                )));
            }
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidData(format!("not a number: `{s}`")))
                })
                .collect::<Result<_>>()?;
            let i = locate(&nums[..grid.dim()])?;
            values[i] = nums[grid.dim()];
        }
        for (i, v) in values.iter_mut().enumerate() {
            if v.is_nan() {
                if grid.is_boundary_node(i) {
                    *v = 0.0;
                } else {
                    return Err(Error::InvalidData(format!("missing value for node {i}")));
                }
            }
        }
        Ok(NodalField {
            grid: *grid,
            values,
        })
    }
}

impl Sampled for NodalField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn location(&self) -> Location {
        Location::AllNodes
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A scalar field at cell centers, e.g. the gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<CellField> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidData(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        Ok(CellField {
            grid: *grid,
            values,
        })
    }
}

impl Sampled for CellField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn location(&self) -> Location {
        Location::Cells
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_weights_1d() {
        let g = Grid::new_1d(0.0, 2.0, 4).unwrap();
        assert_eq!(g.n_nodes(), 5);
        assert_eq!(g.n_interior(), 3);
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.spacing(0), 0.5);
        let total: f64 = (0..g.n_nodes())
            .map(|i| g.weight(Location::AllNodes, i))
            .sum();
        assert!((total - 2.0).abs() < 1e-15);
        assert_eq!(g.interior_coord(0), [0.5, 0.0]);
        assert_eq!(g.cell_center(3), [1.75, 0.0]);
    }

    #[test]
    fn counts_and_weights_2d() {
        let g = Grid::new_2d([0.0, 1.0], [0.0, 2.0], 4, 8).unwrap();
        assert_eq!(g.n_nodes(), 5 * 9);
        assert_eq!(g.n_interior(), 3 * 7);
        let total: f64 = (0..g.n_nodes())
            .map(|i| g.weight(Location::AllNodes, i))
            .sum();
        assert!((total - 2.0).abs() < 1e-14);
        for k in 0..g.n_interior() {
            let f = g.interior_to_full(k);
            assert!(!g.is_boundary_node(f));
            assert_eq!(g.full_to_interior(f), Some(k));
        }
        let corners = g.cell_corners(5);
        let c = g.cell_center(5);
        let p0 = g.node_coord(corners[0]);
        let p3 = g.node_coord(corners[3]);
        assert!((0.5 * (p0[0] + p3[0]) - c[0]).abs() < 1e-15);
        assert!((0.5 * (p0[1] + p3[1]) - c[1]).abs() < 1e-15);
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new_1d(1.0, 0.0, 4).is_err());
        assert!(Grid::new_1d(0.0, 1.0, 1).is_err());
        let spec = GridSpec {
            dimension: 2,
            extents: vec![[0.0, 1.0]],
            cells: vec![4, 4],
        };
        assert!(Grid::try_from(spec).is_err());
    }

    #[test]
    fn csv_roundtrip_and_boundary_check() {
        let g = Grid::new_2d([0.0, 1.0], [0.0, 1.0], 4, 3).unwrap();
        let u = GridFunction::from_fn(&g, |x, y| x * (1.0 - x) * y * (1.0 - y) + 0.1);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(&g, buf.as_slice()).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let ones = NodalField::from_fn(&g, |_, _| 1.0);
        assert!(GridFunction::try_from(ones).is_err());
    }

    #[test]
    fn grid_json_form() {
        let g: Grid =
            serde_json::from_str(r#"{"dimension":1,"extents":[[0,1]],"cells":[8]}"#).unwrap();
        assert_eq!(g, Grid::new_1d(0.0, 1.0, 8).unwrap());
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"dimension":1,"extents":[[0.0,1.0]],"cells":[8]}"#);
    }
}
