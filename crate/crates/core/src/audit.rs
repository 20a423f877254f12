//! Sampling audits of the structural conditions on a potential: subcritical
//! growth of the subdifferential, negativity of `j/|t|^p` at infinity and at
//! the origin, and the existence of a crossing point `ū` where `ψ` beats the
//! gradient energy.
//!
//! These are certificates on a fixed sample set, not proofs. Every report
//! records the sample ranges it used.

use serde::{Deserialize, Serialize};

use crate::discretization::energy_j;
use crate::error::{Error, Result};
use crate::exponent::{DerivedExponent, ExponentField, Exponents};
use crate::grid::{GridFunction, Location};
use crate::modular::{modular_lp, sobolev_norm_modular};
use crate::mountain_pass::Energy;
use crate::potential::{node_samples, Potential};
use crate::sampling::{first_mode, plateau};

/// `n` points log-spaced on `[a, b]`, endpoints included.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub const GROWTH_T_RANGE: [f64; 2] = [1e-6, 1e6];
pub const TAIL_T_RANGE: [f64; 2] = [10.0, 1e6];
pub const ORIGIN_T_RANGE: [f64; 2] = [1e-8, 1e-1];
pub const CROSSING_S_RANGE: [f64; 2] = [1e-3, 1e3];
const PER_DECADE: usize = 10;

fn decades(range: [f64; 2]) -> usize {
    (range[1] / range[0]).log10().round() as usize
}

/// Signed sample set `±t` for `t` log-spaced over `range`, plus breakpoints.
fn signed_samples(j: &Potential, range: [f64; 2]) -> Vec<f64> {
    let mut ts: Vec<f64> = logspace(range[0], range[1], decades(range) * PER_DECADE + 1)
        .into_iter()
        .chain(j.breakpoints().into_iter().map(f64::abs))
        .filter(|t| *t > 0.0)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.iter().flat_map(|&t| [t, -t]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: [f64; 2],
    pub t: f64,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub pass: bool,
    pub r_plus: f64,
    pub a: f64,
    pub c1: f64,
    /// `|j| ≤ a|t| + c1 |t|^r / r` on the same samples.
    pub integrated_bound_ok: bool,
    pub witness: Option<Witness>,
    pub t_range: [f64; 2],
    pub samples: usize,
}

fn validate_r(p: &ExponentField, r: &DerivedExponent) -> Result<()> {
    let r_plus = r.max_value();
    if r_plus < p.p_plus() || r_plus >= p.critical_hat() {
        return Err(Error::InvalidExponent(format!(
            "growth exponent needs p+ = {} <= r+ = {} < {}",
            p.p_plus(),
            r_plus,
            p.critical_hat()
        )));
    }
    if r.min_value() <= 1.0 {
        return Err(Error::InvalidExponent(
            "growth exponent must exceed 1".into(),
        ));
    }
    Ok(())
}

/// Checks `max |∂j(x, t)| ≤ a + c1 |t|^{r(x)−1}` on all nodes and on `±t`
/// log-spaced up to `1e6`.
pub fn audit_growth(
    j: &Potential,
    p: &ExponentField,
    r: &DerivedExponent,
    a: f64,
    c1: f64,
) -> Result<GrowthAudit> {
    validate_r(p, r)?;
    let nodes = node_samples(p.grid(), p);
    let ts = signed_samples(j, GROWTH_T_RANGE);
    let mut witness = None;
    let mut integrated_bound_ok = true;
    'outer: for &t in &ts {
        for (i, &(x, pi)) in nodes.iter().enumerate() {
            let ri = r.at(Location::AllNodes, i);
            let v = j.clarke(x, pi, t).magnitude();
            let bound = a + c1 * t.abs().powf(ri - 1.0);
            if !(v <= bound * (1.0 + 1e-12) + 1e-12) {
                witness = Some(Witness {
                    x,
                    t,
                    observed: v,
                    bound,
                });
                break 'outer;
            }
            let jv = j.value(x, pi, t).abs();
            let ibound = a * t.abs() + c1 * t.abs().powf(ri) / ri;
            if !(jv <= ibound * (1.0 + 1e-9) + 1e-12) {
                integrated_bound_ok = false;
            }
        }
    }
    Ok(GrowthAudit {
        pass: witness.is_none(),
        r_plus: r.max_value(),
        a,
        c1,
        integrated_bound_ok: witness.is_none() && integrated_bound_ok,
        witness,
        t_range: GROWTH_T_RANGE,
        samples: ts.len() * nodes.len(),
    })
}

/// Smallest constants `(a, c1)` with `|∂j| ≤ a + c1 |t|^{r−1}` on the audit
/// samples: `c1` from the last two decades, `a` from the remaining excess.
/// `None` when the subdifferential outgrows `|t|^{r−1}` in the tail.
pub fn fit_growth_constants(
    j: &Potential,
    p: &ExponentField,
    r: &DerivedExponent,
) -> Result<Option<(f64, f64)>> {
    validate_r(p, r)?;
    let nodes = node_samples(p.grid(), p);
    let ts = signed_samples(j, GROWTH_T_RANGE);
    let tail = GROWTH_T_RANGE[1] / 100.0;
    let (mut prev, mut last, mut c1) = (0.0f64, 0.0f64, 0.0f64);
    for &t in ts.iter().filter(|t| t.abs() >= tail / 10.0) {
        for (i, &(x, pi)) in nodes.iter().enumerate() {
            let ri = r.at(Location::AllNodes, i);
            let q = j.clarke(x, pi, t).magnitude() / t.abs().powf(ri - 1.0);
            if !q.is_finite() {
                return Ok(None);
            }
            if t.abs() < tail {
                prev = prev.max(q);
            } else if t.abs() < GROWTH_T_RANGE[1] {
                last = last.max(q);
            }
            if t.abs() >= tail {
                c1 = c1.max(q);
            }
        }
    }
    // a ratio still growing by a decade per decade is not bounded by c1
    if last > 2.0 * prev && last > 1e-12 {
        return Ok(None);
    }
    let c1 = c1 * (1.0 + 1e-9);
    let mut a: f64 = 0.0;
    for &t in &ts {
        for (i, &(x, pi)) in nodes.iter().enumerate() {
            let ri = r.at(Location::AllNodes, i);
            a = a.max(j.clarke(x, pi, t).magnitude() - c1 * t.abs().powf(ri - 1.0));
        }
    }
    Ok(Some((a * (1.0 + 1e-9), c1)))
}

/// For each `|t|` sample, the largest `j(x, ±t)/|t|^{p(x)}` over nodes.
fn ratio_profile(j: &Potential, p: &ExponentField, range: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let nodes = node_samples(p.grid(), p);
    let ts = logspace(range[0], range[1], decades(range) * PER_DECADE + 1);
    let m = ts
        .iter()
        .map(|&t| {
            nodes
                .iter()
                .flat_map(|&(x, pi)| {
                    let d = t.powf(pi);
                    [j.value(x, pi, t) / d, j.value(x, pi, -t) / d]
                })
                .fold(f64::NEG_INFINITY, |acc, v| {
                    if v.is_nan() {
                        f64::INFINITY
                    } else {
                        acc.max(v)
                    }
                })
        })
        .collect();
    (ts, m)
}

fn decade_maxima(m: &[f64]) -> Vec<f64> {
    m.windows(PER_DECADE + 1)
        .step_by(PER_DECADE)
        .map(|w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityAudit {
    pub pass: bool,
    pub estimated_c: Option<f64>,
    pub estimated_l: Option<f64>,
    pub decade_maxima: Vec<f64>,
    pub t_range: [f64; 2],
}

/// Checks that `j/|t|^p` stays below some `−c < 0` for `|t| ≥ L`, and that
/// the ratio is not merely decaying to zero.
pub fn audit_asymptotic_negativity(j: &Potential, p: &ExponentField) -> NegativityAudit {
    let (ts, m) = ratio_profile(j, p, TAIL_T_RANGE);
    let mut suffix = m.clone();
    for i in (0..suffix.len() - 1).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    let first = suffix.iter().position(|&s| s < 0.0);
    let dm = decade_maxima(&m);
    let (prev, last) = (dm[dm.len() - 2], dm[dm.len() - 1]);
    let decaying = last.abs() < 0.5 * prev.abs();
    let (estimated_c, estimated_l) = match first {
        Some(i) => (Some(-suffix[i]), Some(ts[i])),
        None => (None, None),
    };
    NegativityAudit {
        pass: first.is_some() && !decaying,
        estimated_c,
        estimated_l,
        decade_maxima: dm,
        t_range: TAIL_T_RANGE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginAudit {
    pub pass: bool,
    pub mu_claim: f64,
    pub estimated_limsup: f64,
    pub max_ratio: f64,
    pub decade_maxima: Vec<f64>,
    pub t_range: [f64; 2],
}

/// Checks `j/|t|^p ≤ −μ` near the origin. Without a claimed `μ`, half of the
/// observed margin is claimed.
pub fn audit_origin(j: &Potential, p: &ExponentField, mu_claim: Option<f64>) -> OriginAudit {
    let (_, m) = ratio_profile(j, p, ORIGIN_T_RANGE);
    let dm = decade_maxima(&m);
    let estimated_limsup = dm[0];
    let max_ratio = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu = mu_claim.unwrap_or(-0.5 * estimated_limsup);
    // a ratio shrinking toward 0 as t → 0 has limsup 0 whatever the samples say
    let vanishing = dm[0].abs() < 0.5 * dm[1].abs();
    OriginAudit {
        pass: mu > 0.0 && !vanishing && max_ratio <= -mu + 1e-9,
        mu_claim: mu,
        estimated_limsup,
        max_ratio,
        decade_maxima: dm,
        t_range: ORIGIN_T_RANGE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingAudit {
    pub pass: bool,
    pub profile: Option<String>,
    pub scale: Option<f64>,
    /// `(1/p⁻) ∫|∇ū|^p + (λ₋/p⁻) ∫|ū|^p` at the witness.
    pub lhs: Option<f64>,
    /// `∫ j(x, ū)` at the witness.
    pub rhs: Option<f64>,
    /// Largest `c̄` in the alternative condition `c̄ ‖ū‖^{p±} ≤ ∫ j(x, ū)`.
    pub alt_constant: Option<f64>,
    pub r_ubar: Option<f64>,
    pub scanned: usize,
    pub s_range: [f64; 2],
    #[serde(skip)]
    pub u_bar: Option<GridFunction>,
}

impl CrossingAudit {
    /// Audit record for a user-supplied `ū`.
    pub fn supplied(energy: &Energy, u: GridFunction) -> CrossingAudit {
        let (lhs, rhs) = crossing_sides(energy, &u);
        CrossingAudit {
            pass: lhs <= rhs && !u.is_zero(),
            profile: Some("supplied".into()),
            scale: Some(1.0),
            lhs: Some(lhs),
            rhs: Some(rhs),
            alt_constant: alt_constant(energy, &u, rhs),
            r_ubar: Some(energy.value(&u)),
            scanned: 1,
            s_range: CROSSING_S_RANGE,
            u_bar: Some(u),
        }
    }
}

fn crossing_sides(energy: &Energy, u: &GridFunction) -> (f64, f64) {
    let p = energy.exponent();
    let pm = p.p_minus();
    let grad = p_weighted(u, p);
    let lambda_minus = (-energy.lambda()).max(0.0);
    let zeroth = if lambda_minus > 0.0 {
        modular_lp(u, p).expect("same grid")
    } else {
        0.0
    };
    (
        grad / pm + lambda_minus / pm * zeroth,
        energy.potential().psi(u, p),
    )
}

/// `∫ |∇u|^{p(x)}`.
fn p_weighted(u: &GridFunction, p: &ExponentField) -> f64 {
    if p.is_constant() {
        energy_j(u, p) * p.p_plus()
    } else {
        modular_lp(&crate::discretization::gradient(u).magnitude(), p).expect("same grid")
    }
}

fn alt_constant(energy: &Energy, u: &GridFunction, rhs: f64) -> Option<f64> {
    let p = energy.exponent();
    let n = sobolev_norm_modular(u, p);
    let e = if n >= 1.0 { p.p_plus() } else { p.p_minus() };
    (rhs > 0.0 && n > 0.0).then(|| rhs / n.powf(e))
}

/// Named profiles scanned for a crossing point.
pub fn crossing_profiles(grid: &crate::grid::Grid) -> Vec<(&'static str, GridFunction)> {
    vec![("sine", first_mode(grid)), ("plateau", plateau(grid, 0.25))]
}

/// Scans `s·φ` over `s` log-spaced in `[1e−3, 1e3]` (ascending) and each
/// profile `φ`; the first `s·φ` with `lhs ≤ rhs` is the witness `ū`.
pub fn audit_crossing(energy: &Energy) -> CrossingAudit {
    let grid = *energy.exponent().grid();
    let profiles = crossing_profiles(&grid);
    let scales = logspace(CROSSING_S_RANGE[0], CROSSING_S_RANGE[1], 121);
    let mut scanned = 0;
    for &s in &scales {
        for (name, phi) in &profiles {
            scanned += 1;
            let u = phi.scaled(s);
            let (lhs, rhs) = crossing_sides(energy, &u);
            if lhs <= rhs {
                return CrossingAudit {
                    pass: true,
                    profile: Some(name.to_string()),
                    scale: Some(s),
                    lhs: Some(lhs),
                    rhs: Some(rhs),
                    alt_constant: alt_constant(energy, &u, rhs),
                    r_ubar: Some(energy.value(&u)),
                    scanned,
                    s_range: CROSSING_S_RANGE,
                    u_bar: Some(u),
                };
            }
        }
    }
    CrossingAudit {
        pass: false,
        profile: None,
        scale: None,
        lhs: None,
        rhs: None,
        alt_constant: None,
        r_ubar: None,
        scanned,
        s_range: CROSSING_S_RANGE,
        u_bar: None,
    }
}
