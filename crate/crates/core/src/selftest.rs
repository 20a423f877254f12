//! Seeded property suite over every module.
//!
//! Each property is evaluated on a batch of generated cases and reports the
//! worst error measure together with the first failing case. Verdicts do
//! not depend on the seed; only the witnesses and worst values do.

use serde::{Deserialize, Serialize};

use crate::audit::audit_origin;
use crate::discretization::{gradient, gradient_check, monotonicity_probe, pairing};
use crate::exec::ExecPolicy;
use crate::exponent::{ExponentField, Exponents};
use crate::grid::{Grid, GridFunction};
use crate::modular::{
    holder_check, lp_report, modular_lp, sobolev_norm_modular, w1p_report, Regime, SupSearch,
};
use crate::mountain_pass::{sphere_bound_constants, ClampRule, Energy};
use crate::potential::{Potential, PotentialSpec};
use crate::rayleigh::{estimate_lambda_star, rayleigh_quotient, RayleighConfig};
use crate::sampling::{random_function, random_smooth, task_rng};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Cases per property and configuration.
    pub cases: usize,
    /// Clamp used by the residual under test; `Midpoint` is the mutation.
    pub clamp_rule: ClampRule,
    pub policy: ExecPolicy,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 0,
            cases: 100,
            clamp_rule: ClampRule::Nearest,
            policy: ExecPolicy::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub module: String,
    pub property: String,
    pub cases: usize,
    pub tolerance: f64,
    /// Largest error measure over all cases; the property holds when this
    /// is at most `tolerance`.
    pub worst: f64,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub clamp_rule: ClampRule,
    pub all_pass: bool,
    pub results: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.results.iter().filter(|r| !r.pass)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<16} {:<28} {:>6} {:>11} {:>11}  verdict\n",
            "module", "property", "cases", "worst", "tolerance"
        );
        for r in &self.results {
            out.push_str(&format!(
                "{:<16} {:<28} {:>6} {:>11.3e} {:>11.1e}  {}\n",
                r.module,
                r.property,
                r.cases,
                r.worst,
                r.tolerance,
                if r.pass { "pass" } else { "FAIL" }
            ));
            if let (false, Some(w)) = (r.pass, &r.witness) {
                out.push_str(&format!("    witness: {w}\n"));
            }
        }
        out
    }
}

/// Case outcome: an error measure and a description of the case.
type Case = (f64, String);

fn property(module: &str, name: &str, tolerance: f64, cases: Vec<Case>) -> PropertyResult {
    let worst =
        cases.iter().map(|c| c.0).fold(
            0.0,
            |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) },
        );
    let witness = cases
        .iter()
        .find(|c| !(c.0 <= tolerance))
        .map(|c| c.1.clone());
    PropertyResult {
        module: module.into(),
        property: name.into(),
        cases: cases.len(),
        tolerance,
        worst,
        pass: witness.is_none(),
        witness,
    }
}

struct Setting {
    label: String,
    grid: Grid,
    p: ExponentField,
}

fn settings() -> Vec<Setting> {
    let grids = [
        ("1d", Grid::new_1d(0.0, 1.0, 64).expect("valid")),
        (
            "2d",
            Grid::new_2d([0.0, 1.0], [0.0, 1.0], 12, 12).expect("valid"),
        ),
    ];
    let mut out = Vec::new();
    for (gl, grid) in grids {
        for src in ["2", "3", "2 + x"] {
            out.push(Setting {
                label: format!("{gl}, p = {src}"),
                grid,
                p: ExponentField::parse(src, &grid, 5).expect("valid exponent"),
            });
        }
    }
    out
}

/// Random function with a log-uniform amplitude in `[1e-2, 1e2]`.
fn sample(grid: &Grid, seed: u64, index: u64) -> GridFunction {
    let mut rng = task_rng(seed, index);
    let kind = rng.random_range(0..4);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let u = random_function(grid, &mut rng, kind);
    let u = if u.is_zero() {
        random_smooth(grid, &mut rng, 3)
    } else {
        u
    };
    u.scaled(scale / u.max_abs().max(f64::MIN_POSITIVE))
}

/// Violation of the modular/norm relations for one `(modular, norm)` pair.
fn regime_violation(modular: f64, norm: f64, pm: f64, pp: f64) -> f64 {
    let rel = |a: f64, b: f64| (a - b) / b.abs().max(1e-300);
    let mismatch: f64 = match (Regime::of(norm), Regime::of(modular)) {
        (a, b) if a == b => 0.0,
        _ if (norm - 1.0).abs() < 1e-9 => 0.0,
        _ => 1.0,
    };
    let bounds = if norm < 1.0 {
        rel(norm.powf(pp), modular).max(rel(modular, norm.powf(pm)))
    } else {
        rel(norm.powf(pm), modular).max(rel(modular, norm.powf(pp)))
    };
    mismatch.max(bounds)
}

fn modular_properties(cfg: &SelftestConfig, out: &mut Vec<PropertyResult>) {
    let all = settings();
    let n = cfg.cases;
    let mut root = Vec::new();
    let mut lp = Vec::new();
    let mut sob = Vec::new();
    let mut holder = Vec::new();
    for (si, s) in all.iter().enumerate() {
        let base = (si * 10_000) as u64;
        let cases: Vec<[Case; 4]> = cfg.policy.map_range(n, |i| {
            let u = sample(&s.grid, cfg.seed, base + i as u64);
            let v = sample(&s.grid, cfg.seed, base + 5000 + i as u64);
            let (pm, pp) = (s.p.p_minus(), s.p.p_plus());
            let r = lp_report(&u, &s.p).expect("same grid");
            let back = modular_lp(&u.scaled(1.0 / r.norm_value), &s.p).expect("same grid");
            let w = w1p_report(&u, &s.p);
            let h = holder_check(&u, &v, &s.p).expect("same grid");
            let tag = format!("{}, case {i}", s.label);
            [
                (
                    (back - 1.0).abs(),
                    format!("{tag}: modular(u/|u|) = {back:.12}"),
                ),
                (
                    regime_violation(r.modular_value, r.norm_value, pm, pp),
                    format!(
                        "{tag}: modular {:.6e}, norm {:.6e}",
                        r.modular_value, r.norm_value
                    ),
                ),
                (
                    regime_violation(w.modular_value, w.norm_value, pm, pp),
                    format!(
                        "{tag}: modular {:.6e}, norm {:.6e}",
                        w.modular_value, w.norm_value
                    ),
                ),
                (
                    (h.lhs - h.rhs) / h.rhs.max(1e-300),
                    format!("{tag}: lhs {:.6e} > rhs {:.6e}", h.lhs, h.rhs),
                ),
            ]
        });
        for [a, b, c, d] in cases {
            root.push(a);
            lp.push(b);
            sob.push(c);
            holder.push(d);
        }
    }
    out.push(property("modular_spaces", "luxemburg_root", 1e-8, root));
    out.push(property(
        "modular_spaces",
        "lebesgue_norm_vs_modular",
        1e-9,
        lp,
    ));
    out.push(property(
        "modular_spaces",
        "sobolev_norm_vs_modular",
        1e-9,
        sob,
    ));
    out.push(property("modular_spaces", "holder", 1e-10, holder));
}

fn operator_properties(cfg: &SelftestConfig, out: &mut Vec<PropertyResult>) {
    let all = settings();
    let n = cfg.cases;
    let mut ident = Vec::new();
    let mut mono = Vec::new();
    let mut fd = Vec::new();
    for (si, s) in all.iter().enumerate() {
        let base = (si * 10_000) as u64 + 100_000;
        let cases: Vec<[Case; 3]> = cfg.policy.map_range(n, |i| {
            let u = sample(&s.grid, cfg.seed, base + i as u64);
            let v = sample(&s.grid, cfg.seed, base + 5000 + i as u64);
            let tag = format!("{}, case {i}", s.label);
            let au = pairing(&u, &u, &s.p).expect("same grid");
            let m = modular_lp(&gradient(&u).magnitude(), &s.p).expect("same grid");
            let probe = monotonicity_probe(&u, &v, &s.p).expect("same grid");
            // smooth, moderate-size functions keep the difference quotient
            // away from roundoff and from |∇u| = 0 kinks
            let w = random_smooth(&s.grid, &mut task_rng(cfg.seed, base + 9000 + i as u64), 4);
            let err = if i % 4 == 0 {
                gradient_check(&w, &s.p, 3, 1e-6, cfg.seed ^ i as u64)
            } else {
                0.0
            };
            [
                (
                    (au - m).abs() / m.max(1.0),
                    format!("{tag}: <Au,u> = {au:.15e}, modular = {m:.15e}"),
                ),
                (
                    -probe / (1.0 + au.abs()),
                    format!("{tag}: <Au-Av,u-v> = {probe:.6e}"),
                ),
                (
                    err,
                    format!("{tag}: finite-difference relative error {err:.3e}"),
                ),
            ]
        });
        for [a, b, c] in cases {
            ident.push(a);
            mono.push(b);
            fd.push(c);
        }
    }
    out.push(property("discretization", "pairing_identity", 1e-12, ident));
    out.push(property("discretization", "monotonicity", 1e-12, mono));
    out.push(property("discretization", "gradient_check", 1e-5, fd));
}

fn example_energy(lambda: f64, n: usize, clamp: ClampRule) -> Energy {
    let grid = Grid::new_1d(0.0, 1.0, n).expect("valid");
    let p = ExponentField::constant(2.0, &grid, 3).expect("valid");
    let j = Potential::new(&PotentialSpec::example(1.0, 5.0)).expect("valid");
    let mut e = Energy::new(p, lambda, j);
    e.clamp_rule = clamp;
    e
}

fn potential_properties(out: &mut Vec<PropertyResult>) {
    let e = example_energy(0.0, 32, ClampRule::Nearest);
    let (p, j) = (e.exponent(), e.potential());
    let c = j.continuity_residual(p);
    out.push(property(
        "potential",
        "piece_continuity",
        1e-12,
        vec![(c, format!("largest breakpoint jump {c:.3e}"))],
    ));
    let z = j.origin_value(p);
    out.push(property(
        "potential",
        "vanishing_at_zero",
        0.0,
        vec![(z, format!("max |j(x, 0)| = {z:.3e}"))],
    ));
}

/// Independent interval: one-sided difference quotients of `j` at `t`.
fn difference_interval(j: &Potential, x: [f64; 2], p: f64, t: f64) -> (f64, f64) {
    let d = 1e-7 * t.abs().max(1.0);
    let left = (j.value(x, p, t) - j.value(x, p, t - d)) / d;
    let right = (j.value(x, p, t + d) - j.value(x, p, t)) / d;
    (left.min(right), left.max(right))
}

fn mountain_pass_properties(cfg: &SelftestConfig, out: &mut Vec<PropertyResult>) {
    let e = example_energy(1.0, 32, cfg.clamp_rule);
    let grid = *e.exponent().grid();
    let zero = GridFunction::zeros(&grid);
    let (r0, m0) = (e.value(&zero), e.m_residual(&zero));
    out.push(property(
        "mountain_pass",
        "zero_state",
        0.0,
        vec![(r0.abs().max(m0), format!("R(0) = {r0:e}, m(0) = {m0:e}"))],
    ));

    let cases: Vec<Case> = cfg.policy.map_range(cfg.cases, |i| {
        let mut rng = task_rng(cfg.seed, 200_000 + i as u64);
        let mut u = random_smooth(&grid, &mut rng, 5).scaled(rng.random_range(0.5..3.0));
        for v in u.values_mut() {
            if rng.random_bool(0.4) {
                *v = [-2.0, -1.0, 1.0, 2.0][rng.random_range(0..4)];
            }
        }
        let g = e.smooth_gradient(&u);
        let r = e.residual(&u);
        let mut worst = (0.0, String::new());
        for k in 0..grid.n_interior() {
            let x = grid.interior_coord(k);
            let t = u.values()[k];
            let (lo, hi) = difference_interval(e.potential(), x, 2.0, t);
            let oracle = if g[k] < lo {
                lo - g[k]
            } else if g[k] > hi {
                g[k] - hi
            } else {
                0.0
            };
            let err = (r.distances[k] - oracle).abs() / (1.0 + g[k].abs());
            if err > worst.0 {
                worst = (
                    err,
                    format!(
                        "case {i}, node {k}: u = {t}, g = {:.6}, interval [{lo:.6}, {hi:.6}], \
                         residual distance {:.6}, oracle {oracle:.6}",
                        g[k], r.distances[k]
                    ),
                );
            }
        }
        worst
    });
    out.push(property("mountain_pass", "m_residual_clamp", 1e-5, cases));

    for lambda in [0.0, 5.0] {
        let e = example_energy(lambda, 64, ClampRule::Nearest);
        let p = e.exponent();
        let est = estimate_lambda_star(
            p,
            &RayleighConfig {
                restarts: 2,
                seed: cfg.seed,
                policy: cfg.policy,
                ..RayleighConfig::default()
            },
        );
        let mu = audit_origin(e.potential(), p, None).mu_claim;
        let search = SupSearch {
            seed: cfg.seed,
            policy: cfg.policy,
            ..SupSearch::default()
        };
        let c = sphere_bound_constants(&e, mu, est.value, 4.0, &search);
        let grid = *p.grid();
        let cases: Vec<Case> = cfg.policy.map_range(cfg.cases, |i| {
            let mut rng = task_rng(cfg.seed, 300_000 + i as u64);
            let kind = rng.random_range(0..4);
            let u = random_function(&grid, &mut rng, kind);
            let u = if u.is_zero() {
                random_smooth(&grid, &mut rng, 3)
            } else {
                u
            };
            let target: f64 = rng.random_range(0.01..0.99);
            let u = u.scaled(target / sobolev_norm_modular(&u, p));
            let norm = sobolev_norm_modular(&u, p);
            let (r, lb) = (e.value(&u), c.lower_bound(norm));
            (
                lb - r,
                format!(
                    "lambda = {lambda}, case {i}: |u| = {norm:.4}, R = {r:.6e}, bound = {lb:.6e}"
                ),
            )
        });
        out.push(property(
            "mountain_pass",
            &format!("sphere_bound_lambda_{lambda}"),
            1e-8,
            cases,
        ));
    }
}

fn rayleigh_properties(cfg: &SelftestConfig, out: &mut Vec<PropertyResult>) {
    let grid = Grid::new_1d(0.0, 1.0, 64).expect("valid");
    let p = ExponentField::constant(2.0, &grid, 3).expect("valid");
    let est = estimate_lambda_star(
        &p,
        &RayleighConfig {
            restarts: 2,
            seed: cfg.seed,
            policy: cfg.policy,
            ..RayleighConfig::default()
        },
    );
    let cases: Vec<Case> = cfg.policy.map_range(cfg.cases, |i| {
        let u = sample(&grid, cfg.seed, 400_000 + i as u64);
        let q = rayleigh_quotient(&u, &p).expect("nonzero");
        (
            (est.value - q) / est.value,
            format!("case {i}: Q(u) = {q:.9e} below estimate {:.9e}", est.value),
        )
    });
    out.push(property("rayleigh", "quotient_above_estimate", 1e-9, cases));
}

pub fn run_property_suite(cfg: &SelftestConfig) -> SuiteReport {
    let mut results = Vec::new();
    modular_properties(cfg, &mut results);
    operator_properties(cfg, &mut results);
    potential_properties(&mut results);
    rayleigh_properties(cfg, &mut results);
    mountain_pass_properties(cfg, &mut results);
    SuiteReport {
        seed: cfg.seed,
        clamp_rule: cfg.clamp_rule,
        all_pass: results.iter().all(|r| r.pass),
        results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_violation_cases() {
        assert_eq!(regime_violation(0.25, 0.5, 2.0, 2.0), 0.0);
        assert_eq!(regime_violation(4.0, 2.0, 2.0, 2.0), 0.0);
        assert!(regime_violation(0.5, 2.0, 2.0, 2.0) >= 1.0);
    }

    #[test]
    fn difference_interval_at_kink() {
        let j = Potential::new(&PotentialSpec::example(1.0, 5.0)).unwrap();
        let (lo, hi) = difference_interval(&j, [0.5, 0.0], 2.0, 1.0);
        assert!(
            (lo + 2.0).abs() < 1e-5 && (hi - 2.0).abs() < 1e-5,
            "{lo} {hi}"
        );
    }
}
