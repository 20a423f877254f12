//! Path-deformation search for the minimax level
//! `c = inf_γ max_τ R(γ(τ))` over paths from `0` to `ū`.
//!
//! A discrete path of `P` states is relaxed in two phases. First every
//! interior state takes a descent step along the Sobolev gradient of its
//! minimal subgradient, with backtracking so its energy does not increase,
//! and the path is re-spaced by chord length. Once the highest state is
//! close to stationary it switches to a climbing step: the component of its
//! step along the path tangent is reversed, which drives it up the path and
//! onto the saddle, while its neighbours keep relaxing on either side.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::energy::{Energy, InclusionReport};
use super::precond::sobolev_solve;
use crate::exec::ExecPolicy;
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub path_points: usize,
    pub tol_m: f64,
    pub tol_inclusion: f64,
    pub max_iter: usize,
    /// Initial step as a fraction of the certified radius.
    pub step_factor: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Iterations without progress before giving up.
    pub patience: usize,
    /// Switch to climbing once `m` at the top falls below this fraction of
    /// its initial value, or after `climb_after` iterations.
    pub climb_ratio: f64,
    pub climb_after: usize,
    /// Keep an energy profile every this many iterations.
    pub profile_every: usize,
    pub policy: ExecPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            path_points: 41,
            tol_m: 1e-6,
            tol_inclusion: 1e-5,
            max_iter: 20000,
            step_factor: 0.1,
            backtrack: 0.5,
            max_backtracks: 30,
            patience: 2000,
            climb_ratio: 1e-2,
            climb_after: 200,
            profile_every: 100,
            policy: ExecPolicy::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub max_energy: f64,
    pub m_at_max: f64,
    pub index: usize,
}

/// `(τ, R(γ(τ)))` along the path at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    pub iteration: usize,
    pub tau: Vec<f64>,
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub critical_point: GridFunction,
    pub critical_value: f64,
    pub m_residual: f64,
    pub inclusion: InclusionReport,
    pub iterations: usize,
    pub climb_started: Option<usize>,
    pub history: Vec<HistoryEntry>,
    pub profiles: Vec<PathProfile>,
    pub path: Vec<GridFunction>,
    /// Largest modular-induced norm along the iterates at the top; bounded
    /// iterates with vanishing `m` are what the compactness condition asks.
    pub max_iterate_norm: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no progress for {patience} iterations (m = {m:.3e} at iteration {iteration})")]
    Stagnation {
        iteration: usize,
        patience: usize,
        m: f64,
        outcome: Box<SolveOutcome>,
    },
    #[error("iteration cap {iteration} reached (m = {m:.3e})")]
    IterationCap {
        iteration: usize,
        m: f64,
        outcome: Box<SolveOutcome>,
    },
    #[error("non-finite energy at iteration {iteration}, path point {point}, node {node}")]
    BlowUp {
        iteration: usize,
        point: usize,
        node: usize,
    },
    #[error("invalid solver input: {0}")]
    Invalid(String),
}

impl SolveError {
    pub fn outcome(&self) -> Option<&SolveOutcome> {
        match self {
            SolveError::Stagnation { outcome, .. } | SolveError::IterationCap { outcome, .. } => {
                Some(outcome)
            }
            _ => None,
        }
    }
}

/// Weighted H¹ pairing `Σ w a·(−Δ_h + I) b` expressed through the nodal
/// residual `e_b = (−Δ_h + I) b`.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn chord_lengths(path: &[GridFunction]) -> Vec<f64> {
    let mut s = vec![0.0];
    for w in path.windows(2) {
        let last = *s.last().expect("nonempty");
        s.push(last + w[1].nodal_distance(&w[0]));
    }
    s
}

/// Re-space `path[lo..=hi]` evenly by chord length; endpoints stay put.
fn reparametrize(path: &mut [GridFunction], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let seg = &path[lo..=hi];
    let s = chord_lengths(seg);
    let total = *s.last().expect("nonempty");
    if total == 0.0 {
        return;
    }
    let n = seg.len() - 1;
    let mut out = Vec::with_capacity(n - 1);
    let mut j = 0;
    for i in 1..n {
        let target = total * i as f64 / n as f64;
        while j + 1 < n && s[j + 1] < target {
            j += 1;
        }
        let span = s[j + 1] - s[j];
        let t = if span > 0.0 {
            (target - s[j]) / span
        } else {
            0.0
        };
        out.push(seg[j].lincomb(1.0 - t, &seg[j + 1], t));
    }
    for (i, u) in out.into_iter().enumerate() {
        path[lo + 1 + i] = u;
    }
}

fn first_nonfinite(u: &GridFunction) -> usize {
    u.values().iter().position(|v| !v.is_finite()).unwrap_or(0)
}

fn argmax(e: &[f64]) -> usize {
    // lowest index wins ties
    let mut k = 0;
    for (i, &v) in e.iter().enumerate() {
        if v > e[k] {
            k = i;
        }
    }
    k
}

struct Moved {
    u: GridFunction,
    energy: f64,
    step: f64,
}

/// Backtracking descent step of one path state.
fn descend_point(
    energy: &Energy,
    u: &GridFunction,
    r: f64,
    step: f64,
    cfg: &SolverConfig,
    cap: f64,
) -> Moved {
    let e = energy.residual(u).element;
    let d = GridFunction::from_values(u.grid(), sobolev_solve(u.grid(), &e)).expect("sized");
    let mut a = step;
    for _ in 0..=cfg.max_backtracks {
        let trial = u.lincomb(1.0, &d, -a);
        let rt = energy.value(&trial);
        if rt <= r {
            return Moved {
                u: trial,
                energy: rt,
                step: (a * 1.5).min(cap),
            };
        }
        a *= cfg.backtrack;
    }
    Moved {
        u: u.clone(),
        energy: r,
        step: a.max(1e-12),
    }
}

/// Dual-H¹ size `⟨e, (−Δ_h + I)⁻¹ e⟩^{1/2}` of the minimal subgradient.
fn merit(energy: &Energy, u: &GridFunction) -> f64 {
    let e = energy.residual(u).element;
    let d = sobolev_solve(u.grid(), &e);
    dot(&e, &d).max(0.0).sqrt()
}

/// Climbing step of the top state: descend in every direction but the path
/// tangent, ascend along it. Accepted when the merit decreases.
fn climb_point(
    energy: &Energy,
    u: &GridFunction,
    tangent: &[f64],
    step: f64,
    cfg: &SolverConfig,
    cap: f64,
) -> Option<Moved> {
    let e = energy.residual(u).element;
    let d = sobolev_solve(u.grid(), &e);
    // H¹ projection coefficient of d on the tangent: ⟨e, τ⟩ / ⟨τ, (−Δ+I)τ⟩
    let pt = super::precond::apply_operator(u.grid(), tangent);
    let tt = dot(tangent, &pt);
    let coef = if tt > 0.0 { dot(&e, tangent) / tt } else { 0.0 };
    let dc: Vec<f64> = d
        .iter()
        .zip(tangent)
        .map(|(di, ti)| di - 2.0 * coef * ti)
        .collect();
    let dc = GridFunction::from_values(u.grid(), dc).expect("sized");
    let m0 = dot(&e, &d).max(0.0).sqrt();
    let mut a = step;
    for _ in 0..=cfg.max_backtracks {
        let trial = u.lincomb(1.0, &dc, -a);
        if merit(energy, &trial) < m0 {
            let rt = energy.value(&trial);
            return Some(Moved {
                u: trial,
                energy: rt,
                step: (a * 1.5).min(cap),
            });
        }
        a *= cfg.backtrack;
    }
    None
}

fn profile(path: &[GridFunction], energies: &[f64], iteration: usize) -> PathProfile {
    let s = chord_lengths(path);
    let total = s.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    PathProfile {
        iteration,
        tau: s.iter().map(|v| v / total).collect(),
        energy: energies.to_vec(),
    }
}

/// Relax the straight path from `0` to `u_bar`. `rho` sets the step scale.
pub fn solve_mountain_pass(
    energy: &Energy,
    u_bar: &GridFunction,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    let np = cfg.path_points;
    if np < 3 {
        return Err(SolveError::Invalid("path needs at least 3 points".into()));
    }
    if u_bar.is_zero() {
        return Err(SolveError::Invalid("path endpoint is zero".into()));
    }
    let mut path: Vec<GridFunction> = (0..np)
        .map(|i| u_bar.scaled(i as f64 / (np - 1) as f64))
        .collect();
    let mut energies: Vec<f64> = cfg.policy.map_slice(&path, |u| energy.value(u));
    let cap = 1.0;
    let mut steps = vec![(cfg.step_factor * rho).clamp(1e-6, cap); np];
    let mut history = Vec::new();
    let mut profiles = vec![profile(&path, &energies, 0)];
    let mut climb_started = None;
    let mut m_initial = None;
    let mut best_m = f64::INFINITY;
    let mut best_top = f64::INFINITY;
    let mut last_progress = 0;
    let mut max_iterate_norm: f64 = 0.0;

    let finish = |path: Vec<GridFunction>,
                  energies: &[f64],
                  k: usize,
                  m: f64,
                  iterations: usize,
                  climb_started: Option<usize>,
                  history: Vec<HistoryEntry>,
                  mut profiles: Vec<PathProfile>,
                  max_iterate_norm: f64| {
        if profiles.last().map(|p| p.iteration) != Some(iterations) {
            profiles.push(profile(&path, energies, iterations));
        }
        SolveOutcome {
            critical_point: path[k].clone(),
            critical_value: energies[k],
            m_residual: m,
            inclusion: energy.inclusion(&path[k]),
            iterations,
            climb_started,
            history,
            profiles,
            path,
            max_iterate_norm,
        }
    };

    for iteration in 0..=cfg.max_iter {
        if let Some(i) = energies.iter().position(|v| !v.is_finite()) {
            return Err(SolveError::BlowUp {
                iteration,
                point: i,
                node: first_nonfinite(&path[i]),
            });
        }
        let k = argmax(&energies[1..np - 1]) + 1;
        let m = energy.m_residual(&path[k]);
        let incl = energy.inclusion(&path[k]).max_distance;
        history.push(HistoryEntry {
            iteration,
            max_energy: energies[k],
            m_at_max: m,
            index: k,
        });
        max_iterate_norm = max_iterate_norm.max(path[k].max_abs());
        if iteration > 0 && iteration % cfg.profile_every.max(1) == 0 {
            profiles.push(profile(&path, &energies, iteration));
        }
        if m < cfg.tol_m && incl <= cfg.tol_inclusion {
            return Ok(finish(
                path,
                &energies,
                k,
                m,
                iteration,
                climb_started,
                history,
                profiles,
                max_iterate_norm,
            ));
        }
        let m0 = *m_initial.get_or_insert(m);
        if m < best_m * (1.0 - 1e-3) || energies[k] < best_top * (1.0 - 1e-12) - 1e-15 {
            last_progress = iteration;
        }
        best_m = best_m.min(m);
        best_top = best_top.min(energies[k]);
        if iteration == cfg.max_iter {
            return Err(SolveError::IterationCap {
                iteration,
                m,
                outcome: Box::new(finish(
                    path,
                    &energies,
                    k,
                    m,
                    iteration,
                    climb_started,
                    history,
                    profiles,
                    max_iterate_norm,
                )),
            });
        }
        if iteration - last_progress > cfg.patience {
            return Err(SolveError::Stagnation {
                iteration,
                patience: cfg.patience,
                m,
                outcome: Box::new(finish(
                    path,
                    &energies,
                    k,
                    m,
                    iteration,
                    climb_started,
                    history,
                    profiles,
                    max_iterate_norm,
                )),
            });
        }
        if climb_started.is_none() && (m < cfg.climb_ratio * m0 || iteration >= cfg.climb_after) {
            climb_started = Some(iteration);
        }
        let climbing = climb_started.is_some();

        let moved: Vec<Option<Moved>> = cfg.policy.map_range(np, |i| {
            if i == 0 || i == np - 1 {
                None
            } else if climbing && i == k {
                let tangent: Vec<f64> = path[k + 1]
                    .values()
                    .iter()
                    .zip(path[k - 1].values())
                    .map(|(a, b)| a - b)
                    .collect();
                climb_point(energy, &path[i], &tangent, steps[i], cfg, cap)
            } else {
                Some(descend_point(
                    energy,
                    &path[i],
                    energies[i],
                    steps[i],
                    cfg,
                    cap,
                ))
            }
        });
        for (i, mv) in moved.into_iter().enumerate() {
            match mv {
                Some(mv) => {
                    path[i] = mv.u;
                    energies[i] = mv.energy;
                    steps[i] = mv.step;
                }
                None if i == k && climbing => {
                    steps[i] = (steps[i] * cfg.backtrack.powi(4)).max(1e-12);
                }
                None => {}
            }
        }
        if climbing {
            reparametrize(&mut path, 0, k);
            reparametrize(&mut path, k, np - 1);
        } else {
            reparametrize(&mut path, 0, np - 1);
        }
        let fresh: Vec<f64> = cfg.policy.map_range(np, |i| {
            if i == 0 || i == np - 1 || (climbing && i == k) {
                energies[i]
            } else {
                energy.value(&path[i])
            }
        });
        energies = fresh;
    }
    unreachable!("loop returns at the iteration cap")
}
