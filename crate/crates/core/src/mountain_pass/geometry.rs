//! Mountain-pass geometry: find a radius `ρ` whose sphere keeps `R` above
//! `max{R(0), R(ū)}`, and the constants of the small-sphere lower bound
//! `R(u) ≥ β₁‖u‖^{p⁺} − β₂‖u‖^θ`.

use serde::{Deserialize, Serialize};

use super::energy::Energy;
use super::precond::sobolev_solve;
use crate::audit::logspace;
use crate::exec::ExecPolicy;
use crate::exponent::{ExponentField, Exponents};
use crate::grid::GridFunction;
use crate::modular::{embedding_constant_estimate, sobolev_norm_modular, SupSearch};
use crate::potential::node_samples;
use crate::sampling::{random_function, task_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    pub rho_count: usize,
    pub samples: usize,
    pub refine_starts: usize,
    pub refine_steps: usize,
    pub seed: u64,
    pub policy: ExecPolicy,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            rho_count: 12,
            samples: 48,
            refine_starts: 4,
            refine_steps: 40,
            seed: 0,
            policy: ExecPolicy::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMinimum {
    pub rho: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereBound {
    /// 1 for `λ ≤ 0`, 2 for `0 < λ < (p⁻/p⁺) λ*`.
    pub case: u8,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub theta: f64,
    pub embedding_constant: f64,
    pub mu: f64,
    pub p_plus: f64,
}

impl SphereBound {
    /// `β₁ r^{p⁺} − β₂ r^θ`.
    pub fn lower_bound(&self, norm: f64) -> f64 {
        self.beta1 * norm.powf(self.p_plus) - self.beta2 * norm.powf(self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryCertificate {
    pub rho: f64,
    pub eta: f64,
    pub u_bar_norm: f64,
    pub r_zero: f64,
    pub r_ubar: f64,
    pub sphere_samples: usize,
    pub sphere_minima: Vec<SphereMinimum>,
    pub sphere_bound: Option<SphereBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFailure {
    pub reason: String,
    pub r_ubar: f64,
    pub u_bar_norm: f64,
    pub sphere_minima: Vec<SphereMinimum>,
    pub sphere_bound: Option<SphereBound>,
}

/// `sup (j(x,t) + μ/2 |t|^{p(x)}) / |t|^θ` over nodes and dense `±t`, refined
/// by golden-section search around the best sample.
fn gamma_constant(energy: &Energy, mu: f64, theta: f64) -> f64 {
    let p = energy.exponent();
    let j = energy.potential();
    let nodes = node_samples(p.grid(), p);
    let f = |x: [f64; 2], pi: f64, t: f64| {
        (j.value(x, pi, t) + 0.5 * mu * t.abs().powf(pi)) / t.abs().powf(theta)
    };
    let mut ts = logspace(1e-6, 1e6, 1201);
    ts.extend(j.breakpoints().iter().map(|b| b.abs()).filter(|b| *b > 0.0));
    ts.sort_by(f64::total_cmp);
    let mut best = f64::NEG_INFINITY;
    for &(x, pi) in &nodes {
        for sign in [1.0, -1.0] {
            let vals: Vec<f64> = ts.iter().map(|&t| f(x, pi, sign * t)).collect();
            let (i, &v) = vals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            best = best.max(v);
            // golden section on ln t between the neighbours of the best sample
            let (mut a, mut b) = (
                ts[i.saturating_sub(1)].ln(),
                ts[(i + 1).min(ts.len() - 1)].ln(),
            );
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let h = |s: f64| f(x, pi, sign * s.exp());
            for _ in 0..60 {
                let (c, d) = (b - g * (b - a), a + g * (b - a));
                if h(c) > h(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            best = best.max(h(0.5 * (a + b)));
        }
    }
    best.max(0.0)
}

/// Constants of the small-sphere lower bound. `lambda_star` is only used
/// when `λ > 0`.
pub fn sphere_bound_constants(
    energy: &Energy,
    mu: f64,
    lambda_star: f64,
    theta: f64,
    search: &SupSearch,
) -> SphereBound {
    let p: &ExponentField = energy.exponent();
    let (pp, pm) = (p.p_plus(), p.p_minus());
    let lambda = energy.lambda();
    let (case, first) = if lambda <= 0.0 {
        (1, 1.0 / pp)
    } else {
        (2, 1.0 / pp - lambda / (lambda_star * pm))
    };
    let gamma = gamma_constant(energy, mu, theta);
    let c = embedding_constant_estimate(p, theta, search);
    SphereBound {
        case,
        beta1: first.min(0.5 * mu),
        beta2: gamma * c.powf(theta),
        gamma,
        theta,
        embedding_constant: c,
        mu,
        p_plus: pp,
    }
}

/// Projected descent of `R` on the sphere `‖u‖ = ρ`.
fn refine_on_sphere(energy: &Energy, start: &GridFunction, rho: f64, steps: usize) -> f64 {
    let p = energy.exponent();
    let mut u = start.clone();
    let mut r = energy.value(&u);
    let mut step = 0.1;
    for _ in 0..steps {
        let e = energy.residual(&u).element;
        let d = GridFunction::from_values(u.grid(), sobolev_solve(u.grid(), &e)).expect("sized");
        let trial = u.lincomb(1.0, &d, -step);
        let n = sobolev_norm_modular(&trial, p);
        if n == 0.0 {
            step *= 0.5;
            continue;
        }
        let trial = trial.scaled(rho / n);
        let rt = energy.value(&trial);
        if rt < r {
            u = trial;
            r = rt;
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    r
}

fn sphere_minimum(
    energy: &Energy,
    u_bar: &GridFunction,
    rho: f64,
    index: usize,
    cfg: &GeometryConfig,
) -> f64 {
    let p = energy.exponent();
    let grid = *p.grid();
    let mut rng = task_rng(cfg.seed, 1000 + index as u64);
    let mut points: Vec<GridFunction> = (0..cfg.samples)
        .map(|i| random_function(&grid, &mut rng, i))
        .collect();
    points.push(u_bar.clone());
    let mut scored: Vec<(f64, GridFunction)> = points
        .into_iter()
        .map(|u| {
            let v = u.scaled(rho / sobolev_norm_modular(&u, p));
            (energy.value(&v), v)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut eta = scored[0].0;
    for (_, v) in scored.iter().take(cfg.refine_starts) {
        eta = eta.min(refine_on_sphere(energy, v, rho, cfg.refine_steps));
    }
    eta
}

/// Scans radii log-spaced below `min{1, ‖ū‖}` and keeps the one with the
/// largest sphere minimum `η(ρ)`, provided `η > max{0, R(ū)}`.
pub fn certify_geometry(
    energy: &Energy,
    u_bar: &GridFunction,
    sphere_bound: Option<SphereBound>,
    cfg: &GeometryConfig,
) -> Result<GeometryCertificate, GeometryFailure> {
    let p = energy.exponent();
    let r_ubar = energy.value(u_bar);
    let u_bar_norm = sobolev_norm_modular(u_bar, p);
    let fail = |reason: String, sphere_minima: Vec<SphereMinimum>| GeometryFailure {
        reason,
        r_ubar,
        u_bar_norm,
        sphere_minima,
        sphere_bound,
    };
    if u_bar.is_zero() {
        return Err(fail("endpoint is the zero function".into(), Vec::new()));
    }
    if r_ubar > 0.0 {
        return Err(fail(
            format!("endpoint energy R(u_bar) = {r_ubar:.6e} is positive"),
            Vec::new(),
        ));
    }
    let top = 0.9 * u_bar_norm.min(1.0);
    let radii = logspace(top * 1e-3, top, cfg.rho_count.max(2));
    let etas = cfg.policy.map_range(radii.len(), |i| {
        sphere_minimum(energy, u_bar, radii[i], i, cfg)
    });
    let minima: Vec<SphereMinimum> = radii
        .iter()
        .zip(&etas)
        .map(|(&rho, &eta)| SphereMinimum { rho, eta })
        .collect();
    let floor = r_ubar.max(0.0);
    let best = minima
        .iter()
        .filter(|s| s.eta > floor)
        .fold(None::<SphereMinimum>, |acc, s| match acc {
            Some(b) if b.eta >= s.eta => Some(b),
            _ => Some(*s),
        });
    match best {
        Some(s) => Ok(GeometryCertificate {
            rho: s.rho,
            eta: s.eta,
            u_bar_norm,
            r_zero: 0.0,
            r_ubar,
            sphere_samples: radii.len() * (cfg.samples + 1),
            sphere_minima: minima,
            sphere_bound,
        }),
        None => Err(fail(
            format!("no sampled sphere has energy above max(0, R(u_bar)) = {floor:.6e}"),
            minima,
        )),
    }
}
