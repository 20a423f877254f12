//! Seeded generators of test functions on a grid.
//!
//! Every generator draws from a caller-owned RNG so that a single seed fixes
//! a whole experiment. Parallel loops derive one stream per task with
//! [`task_rng`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{Grid, GridFunction};

/// Independent deterministic RNG for task `index` under `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_coords(grid: &Grid, x: f64, y: f64) -> (f64, f64) {
    let sx = (x - grid.lower(0)) / grid.length(0);
    let sy = if grid.dim() == 2 {
        (y - grid.lower(1)) / grid.length(1)
    } else {
        0.5
    };
    (sx, sy)
}

/// Product of sines `sin(m π s_x) sin(n π s_y)` in unit coordinates.
pub fn sine_mode(grid: &Grid, m: usize, n: usize) -> GridFunction {
    GridFunction::from_fn(grid, |x, y| {
        let (sx, sy) = unit_coords(grid, x, y);
        let fx = (m as f64 * PI * sx).sin();
        if grid.dim() == 2 {
            fx * (n as f64 * PI * sy).sin()
        } else {
            fx
        }
    })
}

/// First Dirichlet eigenfunction shape, positive with unit maximum.
pub fn first_mode(grid: &Grid) -> GridFunction {
    sine_mode(grid, 1, 1)
}

/// Random combination of the lowest sine modes with decaying amplitudes.
pub fn random_smooth(grid: &Grid, rng: &mut impl Rng, modes: usize) -> GridFunction {
    let coefs: Vec<(usize, usize, f64)> = if grid.dim() == 1 {
        (1..=modes)
            .map(|m| {
                let a: f64 = rng.sample(StandardNormal);
                (m, 1, a / (m * m) as f64)
            })
            .collect()
    } else {
        let mut v = Vec::new();
        for m in 1..=modes {
            for n in 1..=modes {
                let a: f64 = rng.sample(StandardNormal);
                v.push((m, n, a / (m * n) as f64));
            }
        }
        v
    };
    GridFunction::from_fn(grid, |x, y| {
        let (sx, sy) = unit_coords(grid, x, y);
        coefs
            .iter()
            .map(|&(m, n, a)| {
                let fx = (m as f64 * PI * sx).sin();
                let fy = if grid.dim() == 2 {
                    (n as f64 * PI * sy).sin()
                } else {
                    1.0
                };
                a * fx * fy
            })
            .sum()
    })
}

/// Nonnegative compactly supported bump with random center and width.
pub fn random_bump(grid: &Grid, rng: &mut impl Rng) -> GridFunction {
    let cx: f64 = rng.random_range(0.2..0.8);
    let cy: f64 = rng.random_range(0.2..0.8);
    let r: f64 = rng.random_range(0.1..0.5);
    GridFunction::from_fn(grid, |x, y| {
        let (sx, sy) = unit_coords(grid, x, y);
        let d2 = if grid.dim() == 2 {
            (sx - cx).powi(2) + (sy - cy).powi(2)
        } else {
            (sx - cx).powi(2)
        };
        let q = 1.0 - d2 / (r * r);
        if q > 0.0 {
            q * q
        } else {
            0.0
        }
    })
}

/// I.i.d. standard normal nodal values.
pub fn random_noise(grid: &Grid, rng: &mut impl Rng) -> GridFunction {
    let v = (0..grid.n_interior())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    GridFunction::from_values(grid, v).expect("interior sized")
}

/// A mixture of the generators above, cycling by `kind`.
pub fn random_function(grid: &Grid, rng: &mut impl Rng, kind: usize) -> GridFunction {
    let u = match kind % 4 {
        0 => random_smooth(grid, rng, 6),
        1 => random_bump(grid, rng),
        2 => random_noise(grid, rng),
        _ => {
            let a = random_smooth(grid, rng, 3);
            let b = random_noise(grid, rng);
            a.lincomb(1.0, &b, 0.05)
        }
    };
    if u.is_zero() {
        first_mode(grid)
    } else {
        u
    }
}

/// Smooth profile: 1 on the middle of the domain with C¹ ramps of relative
/// width `ramp` at each end (per axis).
pub fn plateau(grid: &Grid, ramp: f64) -> GridFunction {
    let f = |s: f64| {
        let r = if s < ramp {
            s / ramp
        } else if s > 1.0 - ramp {
            (1.0 - s) / ramp
        } else {
            1.0
        };
        let r = r.clamp(0.0, 1.0);
        r * r * (3.0 - 2.0 * r)
    };
    GridFunction::from_fn(grid, |x, y| {
        let (sx, sy) = unit_coords(grid, x, y);
        if grid.dim() == 2 {
            f(sx) * f(sy)
        } else {
            f(sx)
        }
    })
}
