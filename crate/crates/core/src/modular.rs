//! Modulars and Luxemburg norms of variable-exponent Lebesgue and Sobolev
//! spaces.
//!
//! Zeroth-order integrals use nodal (trapezoid) weights and gradient integrals
//! use one midpoint per cell, matching [`crate::discretization`]. A Luxemburg
//! norm is the root of the strictly decreasing map `a ↦ modular(u / a) − 1`,
//! located by bisection in `ln a`.

use serde::{Deserialize, Serialize};

use crate::discretization::{cell_gradient, pow_abs};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::exponent::{ExponentField, Exponents};
use crate::grid::{Grid, GridFunction, Location, NodalField, Sampled};
use crate::sampling::{first_mode, random_function, random_smooth, task_rng};

/// Initial bisection bracket for a Luxemburg norm.
pub const NORM_BRACKET: (f64, f64) = (1e-12, 1e12);
/// Relative tolerance of the norm root-finder.
pub const NORM_RTOL: f64 = 1e-10;
pub const NORM_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowOne,
    EqualOne,
    AboveOne,
}

impl Regime {
    pub fn of(value: f64) -> Regime {
        if (value - 1.0).abs() <= 1e-12 {
            Regime::EqualOne
        } else if value < 1.0 {
            Regime::BelowOne
        } else {
            Regime::AboveOne
        }
    }
}

/// A modular together with the norm it induces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularReport {
    pub modular_value: f64,
    pub norm_value: f64,
    pub regime: Regime,
}

/// Terms `w |v|^p` of a modular, stored as `(w, ln|v|, p)` so that the
/// scaled modular `Σ w |v/a|^p` costs one `exp` per term.
#[derive(Debug, Clone, Default)]
pub(crate) struct ModularTerms {
    terms: Vec<(f64, f64, f64)>,
}

impl ModularTerms {
    pub(crate) fn push(&mut self, w: f64, v: f64, p: f64) {
        if v != 0.0 {
            self.terms.push((w, v.abs().ln(), p));
        }
    }

    fn at_log_scale(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, lv, p)| w * (p * (lv - s)).exp())
            .sum()
    }

    /// The `a > 0` with `Σ w |v/a|^p = 1`, or 0 when every term vanishes.
    pub(crate) fn luxemburg(&self) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let mut lo = NORM_BRACKET.0.ln();
        let mut hi = NORM_BRACKET.1.ln();
        // geometric expansion of the bracket
        while self.at_log_scale(lo) < 1.0 {
            lo -= hi - lo;
        }
        while self.at_log_scale(hi) > 1.0 {
            hi += hi - lo;
        }
        let tol = NORM_RTOL.ln_1p();
        for _ in 0..NORM_MAX_ITER {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.at_log_scale(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }
}

fn check_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `φ(u) = ∫ |u|^{p(x)}`.
pub fn modular_lp<F, E>(u: &F, p: &E) -> Result<f64>
where
    F: Sampled + ?Sized,
    E: Exponents + ?Sized,
{
    check_grid(u.grid(), p.grid())?;
    let (grid, loc) = (u.grid(), u.location());
    Ok(u.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| grid.weight(loc, i) * pow_abs(v, p.at(loc, i)))
        .sum())
}

fn lp_terms<F, E>(u: &F, p: &E) -> ModularTerms
where
    F: Sampled + ?Sized,
    E: Exponents + ?Sized,
{
    let (grid, loc) = (u.grid(), u.location());
    let mut terms = ModularTerms::default();
    for (i, &v) in u.values().iter().enumerate() {
        terms.push(grid.weight(loc, i), v, p.at(loc, i));
    }
    terms
}

/// Luxemburg norm `inf{a > 0 : φ(u/a) ≤ 1}`.
pub fn luxemburg_norm<F, E>(u: &F, p: &E) -> Result<f64>
where
    F: Sampled + ?Sized,
    E: Exponents + ?Sized,
{
    check_grid(u.grid(), p.grid())?;
    Ok(lp_terms(u, p).luxemburg())
}

pub fn lp_report<F, E>(u: &F, p: &E) -> Result<ModularReport>
where
    F: Sampled + ?Sized,
    E: Exponents + ?Sized,
{
    let modular_value = modular_lp(u, p)?;
    Ok(ModularReport {
        modular_value,
        norm_value: luxemburg_norm(u, p)?,
        regime: Regime::of(modular_value),
    })
}

/// Constant-exponent Lebesgue norm `(∫ |u|^θ)^{1/θ}`.
pub fn lebesgue_norm(u: &GridFunction, theta: f64) -> f64 {
    let w = u.grid().cell_volume();
    u.values()
        .iter()
        .map(|v| w * v.abs().powf(theta))
        .sum::<f64>()
        .powf(1.0 / theta)
}

fn w1p_terms(grid: &Grid, full: &[f64], p: &ExponentField) -> ModularTerms {
    let mut terms = ModularTerms::default();
    let wc = grid.cell_volume();
    for c in 0..grid.n_cells() {
        let g = cell_gradient(grid, full, c);
        terms.push(wc, g[0].hypot(g[1]), p.at(Location::Cells, c));
    }
    for (i, &v) in full.iter().enumerate() {
        terms.push(
            grid.weight(Location::AllNodes, i),
            v,
            p.at(Location::AllNodes, i),
        );
    }
    terms
}

/// `Φ(u) = ∫ |∇u|^{p(x)} + |u|^{p(x)}` of a full nodal vector.
pub fn modular_w1p_full(grid: &Grid, full: &[f64], p: &ExponentField) -> f64 {
    let wc = grid.cell_volume();
    let grad: f64 = (0..grid.n_cells())
        .map(|c| {
            let g = cell_gradient(grid, full, c);
            wc * pow_abs(g[0].hypot(g[1]), p.at(Location::Cells, c))
        })
        .sum();
    let zeroth: f64 = full
        .iter()
        .enumerate()
        .map(|(i, &v)| grid.weight(Location::AllNodes, i) * pow_abs(v, p.at(Location::AllNodes, i)))
        .sum();
    grad + zeroth
}

pub fn modular_w1p(u: &GridFunction, p: &ExponentField) -> f64 {
    modular_w1p_full(u.grid(), &u.full_values(), p)
}

/// Norm induced by `Φ`: the root of `Φ(u/a) = 1`.
pub fn sobolev_norm_modular(u: &GridFunction, p: &ExponentField) -> f64 {
    w1p_terms(u.grid(), &u.full_values(), p).luxemburg()
}

pub fn sobolev_norm_modular_full(grid: &Grid, full: &[f64], p: &ExponentField) -> f64 {
    w1p_terms(grid, full, p).luxemburg()
}

/// `‖u‖_{p(x)} + ‖∇u‖_{p(x)}`.
pub fn sobolev_norm_sum(u: &GridFunction, p: &ExponentField) -> f64 {
    sobolev_norm_sum_full(u.grid(), &u.full_values(), p)
}

pub fn sobolev_norm_sum_full(grid: &Grid, full: &[f64], p: &ExponentField) -> f64 {
    let mut grad = ModularTerms::default();
    let wc = grid.cell_volume();
    for c in 0..grid.n_cells() {
        let g = cell_gradient(grid, full, c);
        grad.push(wc, g[0].hypot(g[1]), p.at(Location::Cells, c));
    }
    let mut zeroth = ModularTerms::default();
    for (i, &v) in full.iter().enumerate() {
        zeroth.push(
            grid.weight(Location::AllNodes, i),
            v,
            p.at(Location::AllNodes, i),
        );
    }
    zeroth.luxemburg() + grad.luxemburg()
}

pub fn w1p_report(u: &GridFunction, p: &ExponentField) -> ModularReport {
    let modular_value = modular_w1p(u, p);
    ModularReport {
        modular_value,
        norm_value: sobolev_norm_modular(u, p),
        regime: Regime::of(modular_value),
    }
}

/// Everything the `norm` command reports for one nodal field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub modular: f64,
    pub luxemburg: f64,
    pub sum_norm: f64,
    pub modular_norm: f64,
    pub regime: Regime,
}

pub fn norm_summary(u: &NodalField, p: &ExponentField) -> Result<NormSummary> {
    let report = lp_report(u, p)?;
    let full = u.values();
    Ok(NormSummary {
        modular: report.modular_value,
        luxemburg: report.norm_value,
        sum_norm: sobolev_norm_sum_full(u.grid(), full, p),
        modular_norm: sobolev_norm_modular_full(u.grid(), full, p),
        regime: report.regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// `∫|uv| ≤ (1/p⁻ + 1/p'⁻) ‖u‖_{p(x)} ‖v‖_{p'(x)}` with `1e-10` slack.
pub fn holder_check<F>(u: &F, v: &F, p: &ExponentField) -> Result<HolderCheck>
where
    F: Sampled,
{
    check_grid(u.grid(), v.grid())?;
    check_grid(u.grid(), p.grid())?;
    let (grid, loc) = (u.grid(), u.location());
    let lhs: f64 = u
        .values()
        .iter()
        .zip(v.values())
        .enumerate()
        .map(|(i, (a, b))| grid.weight(loc, i) * (a * b).abs())
        .sum();
    let conj = p.conjugate();
    let constant = 1.0 / p.p_minus() + 1.0 / conj.min_value();
    let rhs = constant * luxemburg_norm(u, p)? * luxemburg_norm(v, &conj)?;
    Ok(HolderCheck {
        lhs,
        rhs,
        // both norms carry a 1e-10 relative bisection error
        satisfied: lhs <= rhs + 1e-10 * rhs.max(1.0),
    })
}

/// Budget for the randomized sup searches below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSearch {
    pub samples: usize,
    pub climbers: usize,
    pub steps: usize,
    pub seed: u64,
    pub policy: ExecPolicy,
}

impl Default for SupSearch {
    fn default() -> Self {
        SupSearch {
            samples: 64,
            climbers: 4,
            steps: 150,
            seed: 0,
            policy: ExecPolicy::Parallel,
        }
    }
}

/// Estimate `sup ratio(u)` over nonzero grid functions: random sampling
/// (plus `warm` starts) followed by stochastic hill climbing from the best
/// few candidates. The result is a lower bound on the true supremum.
pub fn sup_ratio_search<F>(
    grid: &Grid,
    warm: &[GridFunction],
    ratio: F,
    cfg: &SupSearch,
) -> (f64, GridFunction)
where
    F: Fn(&GridFunction) -> f64 + Sync + Send,
{
    let mut candidates: Vec<GridFunction> = warm.to_vec();
    candidates.extend(cfg.policy.map_range(cfg.samples, |i| {
        random_function(grid, &mut task_rng(cfg.seed, i as u64), i)
    }));
    let scores = cfg.policy.map_slice(&candidates, |u| ratio(u));
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let starts: Vec<(f64, GridFunction)> = order
        .iter()
        .take(cfg.climbers.max(1))
        .map(|&i| (scores[i], candidates[i].clone()))
        .collect();
    let climbed = cfg.policy.map_range(starts.len(), |k| {
        let (mut best, mut u) = starts[k].clone();
        let mut rng = task_rng(cfg.seed ^ 0x5eed, k as u64);
        let mut sigma = 0.1;
        for _ in 0..cfg.steps {
            let pert = random_smooth(grid, &mut rng, 4);
            let scale = sigma * u.max_abs() / pert.max_abs().max(1e-300);
            let trial = u.lincomb(1.0, &pert, scale);
            let r = ratio(&trial);
            if r > best {
                best = r;
                u = trial;
                sigma = (sigma * 1.5).min(1.0);
            } else {
                sigma = (sigma * 0.7).max(1e-6);
            }
        }
        (best, u)
    });
    climbed
        .into_iter()
        .enumerate()
        .fold(
            None::<(usize, f64, GridFunction)>,
            |acc, (k, (r, u))| match acc {
                Some((_, br, _)) if br >= r => acc,
                _ => Some((k, r, u)),
            },
        )
        .map(|(_, r, u)| (r, u))
        .expect("at least one climber")
}

/// Empirical lower bound on the Poincaré constant `sup ‖u‖_{p(x)} / ‖∇u‖_{p(x)}`.
pub fn poincare_constant_estimate(p: &ExponentField, cfg: &SupSearch) -> f64 {
    let grid = *p.grid();
    let ratio = |u: &GridFunction| {
        let num = luxemburg_norm(u, p).expect("same grid");
        let den =
            luxemburg_norm(&crate::discretization::gradient(u).magnitude(), p).expect("same grid");
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    sup_ratio_search(&grid, &[first_mode(&grid)], ratio, cfg).0
}

/// Empirical lower bound on the embedding constant `sup ‖u‖_θ / ‖u‖` with
/// the modular-induced Sobolev norm.
pub fn embedding_constant_estimate(p: &ExponentField, theta: f64, cfg: &SupSearch) -> f64 {
    let grid = *p.grid();
    let ratio = |u: &GridFunction| {
        let den = sobolev_norm_modular(u, p);
        if den > 0.0 {
            lebesgue_norm(u, theta) / den
        } else {
            0.0
        }
    };
    let warm: Vec<GridFunction> = [0.05, 0.5, 5.0]
        .iter()
        .map(|s| first_mode(&grid).scaled(*s))
        .collect();
    sup_ratio_search(&grid, &warm, ratio, cfg).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_noise, task_rng};
    use std::f64::consts::PI;

    fn unit(n: usize) -> Grid {
        Grid::new_1d(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn zero_function() {
        let g = unit(16);
        let p = ExponentField::parse("2 + x", &g, 5).unwrap();
        let z = GridFunction::zeros(&g);
        assert_eq!(modular_lp(&z, &p).unwrap(), 0.0);
        assert_eq!(luxemburg_norm(&z, &p).unwrap(), 0.0);
        assert_eq!(modular_w1p(&z, &p), 0.0);
        assert_eq!(sobolev_norm_modular(&z, &p), 0.0);
        assert_eq!(sobolev_norm_sum(&z, &p), 0.0);
        let h = holder_check(&z, &random_noise(&g, &mut task_rng(1, 1)), &p).unwrap();
        assert_eq!(h.lhs, 0.0);
        assert!(h.satisfied);
    }

    #[test]
    fn unit_constant_field() {
        let g = unit(32);
        let one = NodalField::from_fn(&g, |_, _| 1.0);
        let p2 = ExponentField::constant(2.0, &g, 3).unwrap();
        assert!((modular_lp(&one, &p2).unwrap() - 1.0).abs() < 1e-14);
        let pv = ExponentField::parse("2 + x", &g, 5).unwrap();
        assert!((modular_lp(&one, &pv).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_exponent_gives_l2_norms() {
        let g = unit(50);
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let u = random_noise(&g, &mut task_rng(3, 0));
        let l2 = modular_lp(&u, &p).unwrap().sqrt();
        assert!((luxemburg_norm(&u, &p).unwrap() - l2).abs() < 1e-9 * l2);
        let phi = modular_w1p(&u, &p);
        assert!((sobolev_norm_modular(&u, &p) - phi.sqrt()).abs() < 1e-9 * phi.sqrt());
    }

    #[test]
    fn luxemburg_matches_independent_root() {
        // ∫_0^1 (3/a)^{2+x} dx = 1 on a fine grid, solved by a secant oracle
        // on the trapezoid sum directly.
        let g = unit(2000);
        let p = ExponentField::parse("2 + x", &g, 5).unwrap();
        let three = NodalField::from_fn(&g, |_, _| 3.0);
        let norm = luxemburg_norm(&three, &p).unwrap();
        let h = 1.0 / 2000.0;
        let f = |a: f64| {
            (0..=2000)
                .map(|i| {
                    let x = i as f64 * h;
                    let w = if i == 0 || i == 2000 { 0.5 * h } else { h };
                    w * (3.0 / a).powf(2.0 + x)
                })
                .sum::<f64>()
                - 1.0
        };
        let (mut a, mut b) = (3.0, 4.0);
        for _ in 0..60 {
            let (fa, fb) = (f(a), f(b));
            if fb == fa {
                break;
            }
            let c = b - fb * (b - a) / (fb - fa);
            a = b;
            b = c;
        }
        assert!((norm - b).abs() < 1e-8, "{norm} vs {b}");
    }

    #[test]
    fn hat_function_w1p_modular() {
        let g = unit(2);
        let hat = GridFunction::from_values(&g, vec![1.0]).unwrap();
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let grad = modular_lp(&crate::discretization::gradient(&hat).magnitude(), &p).unwrap();
        let zeroth = modular_lp(&hat, &p).unwrap();
        // gradient term is exact for the hat; the nodal rule integrates u²
        // as 1/2 instead of the exact 1/3
        assert!((grad - 4.0).abs() < 1e-14);
        assert!((zeroth - 0.5).abs() < 1e-14);
        assert!((modular_w1p(&hat, &p) - 4.5).abs() < 1e-14);
        // refinement of the same hat converges to 13/3
        let fine = unit(4096);
        let hat_f = GridFunction::from_fn(&fine, |x, _| 1.0 - (2.0 * x - 1.0).abs());
        let pf = ExponentField::constant(2.0, &fine, 3).unwrap();
        assert!((modular_w1p(&hat_f, &pf) - 13.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn norms_within_factor_two() {
        let g = unit(63);
        let p = ExponentField::parse("2 + x", &g, 5).unwrap();
        let mut rng = task_rng(5, 0);
        for _ in 0..20 {
            let u = random_noise(&g, &mut rng);
            let (s, m) = (sobolev_norm_sum(&u, &p), sobolev_norm_modular(&u, &p));
            assert!(s.is_finite() && m.is_finite());
            assert!(s / m <= 2.0 && m / s <= 2.0, "{s} {m}");
        }
    }

    #[test]
    fn holder_equality_case() {
        let g = unit(40);
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let u = random_noise(&g, &mut task_rng(9, 0));
        let h = holder_check(&u, &u, &p).unwrap();
        assert!((h.lhs - h.rhs).abs() < 1e-8 * h.rhs);
        assert!(h.satisfied);
    }

    #[test]
    fn poincare_constant_unit_and_scaled_interval() {
        let cfg = SupSearch {
            samples: 16,
            steps: 40,
            ..SupSearch::default()
        };
        let g = unit(64);
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        let c = poincare_constant_estimate(&p, &cfg);
        assert!((0.9 / PI..=1.0 / PI + 1e-3).contains(&c), "{c}");
        let g2 = Grid::new_1d(0.0, 2.0, 128).unwrap();
        let p2 = ExponentField::constant(2.0, &g2, 3).unwrap();
        let c2 = poincare_constant_estimate(&p2, &cfg);
        assert!((0.9 * 2.0 / PI..=2.0 / PI + 1e-3).contains(&c2), "{c2}");
        let pv = ExponentField::parse("2 + x", &g, 5).unwrap();
        let cv = poincare_constant_estimate(&pv, &cfg);
        assert!(cv.is_finite() && cv > 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let p = ExponentField::constant(2.0, &unit(8), 3).unwrap();
        let u = GridFunction::zeros(&unit(9));
        assert!(matches!(modular_lp(&u, &p), Err(Error::GridMismatch)));
    }
}
