//! Discrete gradient, the weak p(x)-Laplacian `A` and its energy `J`.
//!
//! Gradients are piecewise constant per cell: the plain difference quotient
//! in 1D, and in 2D the average of the two axis differences along opposite
//! cell edges, giving one quadrature point per cell. All gradient integrals
//! use the cell-center exponent, so `A` is exactly the derivative of `J` at
//! the discrete level.
//!
//! Cells with a vanishing gradient contribute nothing to `A`: the integrand
//! `|∇u|^{p-2} (∇u, ∇v)` extends continuously by zero there for every `p > 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exponent::{ExponentField, Exponents};
use crate::grid::{CellField, Grid, GridFunction, Location};
use crate::modular;

/// Cell-centered gradient vectors; the second component is zero in 1D.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    grid: Grid,
    comps: Vec<[f64; 2]>,
}

impl GradientField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[[f64; 2]] {
        &self.comps
    }

    pub fn magnitude(&self) -> CellField {
        let vals = self.comps.iter().map(|g| g[0].hypot(g[1])).collect();
        CellField::from_values(&self.grid, vals).expect("one value per cell")
    }
}

/// `|x|^p` with a fast path for the quadratic case.
#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

/// Gradient of cell `c` from the full nodal vector.
#[inline]
pub(crate) fn cell_gradient(grid: &Grid, full: &[f64], c: usize) -> [f64; 2] {
    let k = grid.cell_corners(c);
    if grid.dim() == 1 {
        [(full[k[1]] - full[k[0]]) / grid.spacing(0), 0.0]
    } else {
        let (hx, hy) = (grid.spacing(0), grid.spacing(1));
        let (u00, u10, u01, u11) = (full[k[0]], full[k[1]], full[k[2]], full[k[3]]);
        [
            ((u10 - u00) + (u11 - u01)) / (2.0 * hx),
            ((u01 - u00) + (u11 - u10)) / (2.0 * hy),
        ]
    }
}

/// Gradient of an arbitrary full nodal vector (boundary values included).
pub fn gradient_full(grid: &Grid, full: &[f64]) -> GradientField {
    GradientField {
        grid: *grid,
        comps: (0..grid.n_cells())
            .map(|c| cell_gradient(grid, full, c))
            .collect(),
    }
}

pub fn gradient(u: &GridFunction) -> GradientField {
    gradient_full(u.grid(), &u.full_values())
}

/// Nodal representation of `v ↦ Σ_c w_c coef_c(|g_c|) (g_c, ∇v_c)`, i.e.
/// the interior vector `r` with `Σ_k r_k v_k w_k` equal to that sum.
pub(crate) fn assemble_flux(
    grid: &Grid,
    full: &[f64],
    coef: impl Fn(usize, f64) -> f64,
) -> Vec<f64> {
    // cell and interior-node weights coincide, so they cancel
    let mut acc = vec![0.0; grid.n_nodes()];
    for c in 0..grid.n_cells() {
        let g = cell_gradient(grid, full, c);
        let mag = g[0].hypot(g[1]);
        if mag == 0.0 {
            continue;
        }
        let s = coef(c, mag);
        let k = grid.cell_corners(c);
        if grid.dim() == 1 {
            let f = s * g[0] / grid.spacing(0);
            acc[k[0]] -= f;
            acc[k[1]] += f;
        } else {
            let fx = s * g[0] / (2.0 * grid.spacing(0));
            let fy = s * g[1] / (2.0 * grid.spacing(1));
            acc[k[0]] += -fx - fy;
            acc[k[1]] += fx - fy;
            acc[k[2]] += -fx + fy;
            acc[k[3]] += fx + fy;
        }
    }
    (0..grid.n_interior())
        .map(|k| acc[grid.interior_to_full(k)])
        .collect()
}

/// `⟨Au, v⟩ = ∫ |∇u|^{p-2} (∇u, ∇v)`.
pub fn pairing(u: &GridFunction, v: &GridFunction, p: &ExponentField) -> Result<f64> {
    u.same_grid(v)?;
    let grid = u.grid();
    let (fu, fv) = (u.full_values(), v.full_values());
    let w = grid.cell_volume();
    let mut sum = 0.0;
    for c in 0..grid.n_cells() {
        let gu = cell_gradient(grid, &fu, c);
        let mag = gu[0].hypot(gu[1]);
        if mag == 0.0 {
            continue;
        }
        let gv = cell_gradient(grid, &fv, c);
        let pc = p.at(Location::Cells, c);
        let coef = if pc == 2.0 { 1.0 } else { mag.powf(pc - 2.0) };
        sum += w * coef * (gu[0] * gv[0] + gu[1] * gv[1]);
    }
    Ok(sum)
}

/// Nodal representation of `Au`: `⟨Au, v⟩ = Σ_k r_k v_k w_k`.
pub fn residual_a(u: &GridFunction, p: &ExponentField) -> GridFunction {
    let grid = u.grid();
    let vals = assemble_flux(grid, &u.full_values(), |c, mag| {
        let pc = p.at(Location::Cells, c);
        if pc == 2.0 {
            1.0
        } else {
            mag.powf(pc - 2.0)
        }
    });
    GridFunction::from_values(grid, vals).expect("interior sized")
}

/// `J(u) = ∫ |∇u|^{p(x)} / p(x)`.
pub fn energy_j(u: &GridFunction, p: &ExponentField) -> f64 {
    energy_j_full(u.grid(), &u.full_values(), p)
}

pub(crate) fn energy_j_full(grid: &Grid, full: &[f64], p: &ExponentField) -> f64 {
    let w = grid.cell_volume();
    (0..grid.n_cells())
        .map(|c| {
            let g = cell_gradient(grid, full, c);
            let pc = p.at(Location::Cells, c);
            w * pow_abs(g[0].hypot(g[1]), pc) / pc
        })
        .sum()
}

/// Worst relative error between central differences of `J` and `⟨Au, d⟩`
/// along `directions` random nodal directions.
pub fn gradient_check(
    u: &GridFunction,
    p: &ExponentField,
    directions: usize,
    step: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let d: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = GridFunction::from_values(u.grid(), d).expect("sized");
        let plus = energy_j(&u.lincomb(1.0, &d, step), p);
        let minus = energy_j(&u.lincomb(1.0, &d, -step), p);
        let fd = (plus - minus) / (2.0 * step);
        let exact = pairing(u, &d, p).expect("same grid");
        let scale = exact.abs().max(fd.abs()).max(1e-300);
        worst = worst.max((fd - exact).abs() / scale);
    }
    worst
}

/// `⟨Au − Av, u − v⟩`; nonnegative for a monotone operator.
pub fn monotonicity_probe(u: &GridFunction, v: &GridFunction, p: &ExponentField) -> Result<f64> {
    let diff = u.sub(v);
    Ok(pairing(u, &diff, p)? - pairing(v, &diff, p)?)
}

/// One row of the (S₊) smoke test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplusSample {
    pub epsilon: f64,
    pub pairing: f64,
    pub distance: f64,
}

/// Perturb `u` by `ε·(highest grid mode)` for each `ε` and record
/// `⟨A u_ε, u_ε − u⟩` together with `‖u_ε − u‖` in the modular-induced norm.
/// In finite dimensions this is only a smoke test of the (S₊) property.
pub fn splus_probe(u: &GridFunction, p: &ExponentField, epsilons: &[f64]) -> Vec<SplusSample> {
    let grid = u.grid();
    let mode = highest_mode(grid);
    epsilons
        .iter()
        .map(|&eps| {
            let un = u.lincomb(1.0, &mode, eps);
            let diff = un.sub(u);
            SplusSample {
                epsilon: eps,
                pairing: pairing(&un, &diff, p).expect("same grid"),
                distance: modular::sobolev_norm_modular(&diff, p),
            }
        })
        .collect()
}

fn highest_mode(grid: &Grid) -> GridFunction {
    let m: Vec<f64> = (0..grid.dim())
        .map(|a| (grid.cells_along(a) - 1) as f64)
        .collect();
    let (lx, ly) = (
        grid.lower(0),
        if grid.dim() == 2 { grid.lower(1) } else { 0.0 },
    );
    let (ax, ay) = (
        grid.length(0),
        if grid.dim() == 2 { grid.length(1) } else { 1.0 },
    );
    GridFunction::from_fn(grid, |x, y| {
        let sx = (m[0] * std::f64::consts::PI * (x - lx) / ax).sin();
        if grid.dim() == 2 {
            sx * (m[1] * std::f64::consts::PI * (y - ly) / ay).sin()
        } else {
            sx
        }
    })
}
