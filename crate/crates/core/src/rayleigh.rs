//! The modular Rayleigh quotient `∫|∇u|^{p(x)} / ∫|u|^{p(x)}` and an upper
//! estimate of its infimum `λ*`.
//!
//! The estimate runs Sobolev-preconditioned gradient descent on the slice
//! `∫|u|^{p(x)} = 1` from several starts, then scans `t·u` over a range of
//! scalings, since for non-constant `p` the quotient is not scale invariant.

use serde::{Deserialize, Serialize};

use crate::audit::logspace;
use crate::discretization::{assemble_flux, gradient};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::exponent::{ExponentField, Exponents};
use crate::grid::{GridFunction, Location};
use crate::modular::{luxemburg_norm, modular_lp};
use crate::mountain_pass::precond::sobolev_solve;
use crate::sampling::{first_mode, random_bump, task_rng};

/// Estimates below this are flagged as possibly zero.
pub const DEGENERATE_BELOW: f64 = 1e-3;

pub fn rayleigh_quotient(u: &GridFunction, p: &ExponentField) -> Result<f64> {
    let den = modular_lp(u, p)?;
    if den == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(modular_lp(&gradient(u).magnitude(), p)? / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RayleighConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub rtol: f64,
    pub seed: u64,
    pub policy: ExecPolicy,
}

impl Default for RayleighConfig {
    fn default() -> Self {
        RayleighConfig {
            restarts: 16,
            max_iter: 5000,
            rtol: 1e-10,
            seed: 0,
            policy: ExecPolicy::Parallel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LambdaStarEstimate {
    pub value: f64,
    pub minimizer: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    pub possibly_degenerate: bool,
    /// Final quotient of every restart, in restart order.
    pub restart_values: Vec<f64>,
    /// `(t, Q(t·u))` for the best descent result `u`.
    pub scaling_probe: Vec<(f64, f64)>,
    /// Quotient after each accepted step of the winning restart.
    pub history: Vec<f64>,
}

/// Serializable summary of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarSummary {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub possibly_degenerate: bool,
    pub restart_values: Vec<f64>,
    pub upper_bound: bool,
}

impl LambdaStarEstimate {
    pub fn summary(&self) -> LambdaStarSummary {
        LambdaStarSummary {
            value: self.value,
            iterations: self.iterations,
            converged: self.converged,
            possibly_degenerate: self.possibly_degenerate,
            restart_values: self.restart_values.clone(),
            upper_bound: true,
        }
    }
}

/// Nodal gradient of `Q` (per unit nodal weight) at `u`, along with `Q`.
fn quotient_gradient(u: &GridFunction, p: &ExponentField) -> (f64, Vec<f64>) {
    let grid = u.grid();
    let full = u.full_values();
    let num = modular_lp(&gradient(u).magnitude(), p).expect("same grid");
    let den = modular_lp(u, p).expect("same grid");
    let q = num / den;
    let dnum = assemble_flux(grid, &full, |c, mag| {
        let pc = p.at(Location::Cells, c);
        pc * mag.powf(pc - 2.0)
    });
    let g = dnum
        .iter()
        .zip(u.values())
        .zip(p.interior_values())
        .map(|((dn, &v), &pk)| {
            let dd = if v == 0.0 {
                0.0
            } else {
                pk * v.abs().powf(pk - 2.0) * v
            };
            (dn - q * dd) / den
        })
        .collect();
    (q, g)
}

fn normalize(u: &GridFunction, p: &ExponentField) -> GridFunction {
    let n = luxemburg_norm(u, p).expect("same grid");
    u.scaled(1.0 / n)
}

struct Descent {
    value: f64,
    u: GridFunction,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn descend(start: &GridFunction, p: &ExponentField, cfg: &RayleighConfig) -> Descent {
    let mut u = normalize(start, p);
    let mut q = rayleigh_quotient(&u, p).expect("nonzero start");
    let mut history = vec![q];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (_, g) = quotient_gradient(&u, p);
        let d = sobolev_solve(u.grid(), &g);
        let d = GridFunction::from_values(u.grid(), d).expect("sized");
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = u.lincomb(1.0, &d, -step);
            if !trial.is_zero() {
                let trial = normalize(&trial, p);
                let qt = rayleigh_quotient(&trial, p).expect("nonzero");
                if qt < q {
                    accepted = Some((qt, trial));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((qt, trial)) = accepted else {
            converged = true;
            break;
        };
        let rel = (q - qt) / q.abs().max(f64::MIN_POSITIVE);
        u = trial;
        q = qt;
        history.push(q);
        if rel < cfg.rtol {
            converged = true;
            break;
        }
    }
    Descent {
        value: q,
        u,
        iterations,
        converged,
        history,
    }
}

/// Multi-start estimate of `λ*`. The value is attained by the returned
/// minimizer, so it is an upper bound on the true infimum.
pub fn estimate_lambda_star(p: &ExponentField, cfg: &RayleighConfig) -> LambdaStarEstimate {
    let grid = *p.grid();
    let starts: Vec<GridFunction> = (0..cfg.restarts.max(1))
        .map(|i| {
            if i == 0 {
                first_mode(&grid)
            } else {
                random_bump(&grid, &mut task_rng(cfg.seed, i as u64))
            }
        })
        .map(|u| if u.is_zero() { first_mode(&grid) } else { u })
        .collect();
    let runs = cfg.policy.map_slice(&starts, |s| descend(s, p, cfg));
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let restart_values = runs.iter().map(|r| r.value).collect();
    let run = &runs[best];
    let scaling_probe: Vec<(f64, f64)> = if p.is_constant() {
        vec![(1.0, run.value)]
    } else {
        logspace(1e-3, 1e3, 61)
            .into_iter()
            .map(|t| (t, rayleigh_quotient(&run.u.scaled(t), p).expect("nonzero")))
            .collect()
    };
    let (t_best, _) =
        scaling_probe.iter().copied().fold(
            (1.0, run.value),
            |acc, (t, q)| if q < acc.1 { (t, q) } else { acc },
        );
    let minimizer = run.u.scaled(t_best);
    let value = rayleigh_quotient(&minimizer, p).expect("nonzero");
    LambdaStarEstimate {
        value,
        minimizer,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        converged: run.converged,
        possibly_degenerate: value < DEGENERATE_BELOW,
        restart_values,
        scaling_probe,
        history: run.history.clone(),
    }
}

/// Safety margin subtracted from the admissibility threshold.
pub fn admissibility_margin(value: f64) -> f64 {
    1e-6 * value.max(1.0)
}

/// `λ < (p⁻/p⁺) λ*` with a safety margin; always true for `λ ≤ 0`.
pub fn admissible(lambda: f64, lambda_star: f64, p: &ExponentField) -> bool {
    lambda <= 0.0
        || lambda < p.p_minus() / p.p_plus() * lambda_star - admissibility_margin(lambda_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::sampling::{random_smooth, sine_mode};
    use std::f64::consts::PI;

    fn quick() -> RayleighConfig {
        RayleighConfig {
            restarts: 3,
            ..RayleighConfig::default()
        }
    }

    #[test]
    fn quotient_basics() {
        let g = Grid::new_1d(0.0, 1.0, 128).unwrap();
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let s = sine_mode(&g, 1, 1);
        let h = 1.0 / 128.0;
        let discrete = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((rayleigh_quotient(&s, &p).unwrap() - discrete).abs() < 1e-9 * discrete);
        let q = rayleigh_quotient(&s, &p).unwrap();
        assert!((rayleigh_quotient(&s.scaled(-3.7), &p).unwrap() - q).abs() < 1e-12 * q);
        assert!(matches!(
            rayleigh_quotient(&GridFunction::zeros(&g), &p),
            Err(Error::ZeroFunction)
        ));
    }

    #[test]
    fn variable_exponent_is_not_homogeneous() {
        let g = Grid::new_1d(0.0, 1.0, 64).unwrap();
        let p = ExponentField::parse("2 + x", &g, 5).unwrap();
        let u = sine_mode(&g, 1, 1);
        let (a, b) = (
            rayleigh_quotient(&u, &p).unwrap(),
            rayleigh_quotient(&u.scaled(2.0), &p).unwrap(),
        );
        assert!((a - b).abs() > 1e-3, "{a} {b}");
    }

    #[test]
    fn unit_interval_estimate() {
        let g = Grid::new_1d(0.0, 1.0, 128).unwrap();
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let est = estimate_lambda_star(&p, &quick());
        let h = 1.0 / 128.0;
        let discrete = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!(
            (est.value - discrete).abs() < 1e-6 * discrete,
            "{}",
            est.value
        );
        assert!(est.history.windows(2).all(|w| w[1] <= w[0]));
        let mut rng = task_rng(5, 0);
        for _ in 0..20 {
            let u = random_smooth(&g, &mut rng, 8);
            assert!(rayleigh_quotient(&u, &p).unwrap() >= est.value - 1e-12);
        }
        assert!(admissible(0.0, est.value, &p));
        assert!(admissible(5.0, est.value, &p));
        assert!(!admissible(12.0, est.value, &p));
        assert!(admissible(-100.0, 0.0, &p));
    }
}
