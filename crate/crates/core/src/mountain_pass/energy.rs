//! The energy `R(u) = J(u) − ∫ λ|u|^p/p − ψ(u)` and its minimal subgradient.
//!
//! The smooth part of `∂R(u)` at node `k` is `g_k = (Au)_k − λ|u_k|^{p−2}u_k`;
//! the potential contributes the interval `∂j(x_k, u_k)`, so
//! `∂R(u) = {g − v : v_k ∈ ∂j(x_k, u_k)}`. Its minimal element clamps `g`
//! into the interval nodewise.

use serde::{Deserialize, Serialize};

use crate::discretization::{energy_j, pow_abs, residual_a};
use crate::exponent::{ExponentField, Exponents};
use crate::grid::{GridFunction, Location};
use crate::modular::ModularTerms;
use crate::potential::{ClarkeInterval, Potential};

/// How nodal distances are combined into `m(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Luxemburg norm with the conjugate exponent `p/(p−1)`.
    #[default]
    Conjugate,
    /// `(Σ w d²)^{1/2}`.
    WeightedEuclidean,
}

/// Which element of `∂j` the residual is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampRule {
    /// Nearest point of the interval: the true minimum.
    #[default]
    Nearest,
    /// Interval midpoint. Deliberately wrong at kinks; used to check that
    /// the property suite catches a broken clamp.
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct Energy {
    p: ExponentField,
    lambda: f64,
    j: Potential,
    pub aggregation: Aggregation,
    pub clamp_rule: ClampRule,
}

/// `m(u)` with its ingredients.
#[derive(Debug, Clone)]
pub struct Residual {
    pub m: f64,
    /// `dist(g_k, ∂j(x_k, u_k))`.
    pub distances: Vec<f64>,
    /// Minimal subgradient `g − clamp(g)`.
    pub element: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub max_weighted_distance: f64,
}

impl Energy {
    pub fn new(p: ExponentField, lambda: f64, j: Potential) -> Energy {
        Energy {
            p,
            lambda,
            j,
            aggregation: Aggregation::default(),
            clamp_rule: ClampRule::default(),
        }
    }

    pub fn exponent(&self) -> &ExponentField {
        &self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn potential(&self) -> &Potential {
        &self.j
    }

    /// `∫ λ |u|^p / p`.
    pub fn lambda_term(&self, u: &GridFunction) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let w = u.grid().cell_volume();
        let pv = self.p.interior_values();
        self.lambda
            * u.values()
                .iter()
                .zip(pv)
                .map(|(&v, &pk)| w * pow_abs(v, pk) / pk)
                .sum::<f64>()
    }

    pub fn value(&self, u: &GridFunction) -> f64 {
        energy_j(u, &self.p) - self.lambda_term(u) - self.j.psi(u, &self.p)
    }

    /// `g = Au − λ|u|^{p−2}u`, extended by 0 where `u = 0`.
    pub fn smooth_gradient(&self, u: &GridFunction) -> Vec<f64> {
        let mut g = residual_a(u, &self.p).into_values();
        if self.lambda != 0.0 {
            for ((gk, &v), &pk) in g.iter_mut().zip(u.values()).zip(self.p.interior_values()) {
                if v != 0.0 {
                    *gk -= self.lambda * v.abs().powf(pk - 2.0) * v;
                }
            }
        }
        g
    }

    pub fn intervals(&self, u: &GridFunction) -> Vec<ClarkeInterval> {
        self.j.intervals(u, &self.p)
    }

    /// `Au − λ|u|^{p−2}u − v*` with `v*` the midpoint selection.
    pub fn subgradient_selection(&self, u: &GridFunction) -> GridFunction {
        let g = self.smooth_gradient(u);
        let v = g
            .iter()
            .zip(self.intervals(u))
            .map(|(gk, iv)| gk - iv.midpoint())
            .collect();
        GridFunction::from_values(u.grid(), v).expect("interior sized")
    }

    /// Aggregate of nodal distances per [`Aggregation`].
    pub fn aggregate(&self, u: &GridFunction, d: &[f64]) -> f64 {
        let w = u.grid().cell_volume();
        match self.aggregation {
            Aggregation::WeightedEuclidean => d.iter().map(|x| w * x * x).sum::<f64>().sqrt(),
            Aggregation::Conjugate => {
                let mut terms = ModularTerms::default();
                for (k, &dk) in d.iter().enumerate() {
                    let pk = self.p.at(Location::InteriorNodes, k);
                    terms.push(w, dk, pk / (pk - 1.0));
                }
                terms.luxemburg()
            }
        }
    }

    pub fn residual(&self, u: &GridFunction) -> Residual {
        let g = self.smooth_gradient(u);
        let iv = self.intervals(u);
        let mut distances = Vec::with_capacity(g.len());
        let mut element = Vec::with_capacity(g.len());
        for (gk, ik) in g.iter().zip(&iv) {
            let chosen = match self.clamp_rule {
                ClampRule::Nearest => ik.clamp(*gk),
                ClampRule::Midpoint => ik.midpoint(),
            };
            distances.push((gk - chosen).abs());
            element.push(gk - chosen);
        }
        Residual {
            m: self.aggregate(u, &distances),
            distances,
            element,
        }
    }

    /// `m(u) = min{‖u*‖_* : u* ∈ ∂R(u)}`.
    pub fn m_residual(&self, u: &GridFunction) -> f64 {
        self.residual(u).m
    }

    pub fn inclusion(&self, u: &GridFunction) -> InclusionReport {
        let g = self.smooth_gradient(u);
        let distances: Vec<f64> = g
            .iter()
            .zip(self.intervals(u))
            .map(|(gk, ik)| ik.distance(*gk))
            .collect();
        let max_distance = distances.iter().copied().fold(0.0, f64::max);
        InclusionReport {
            max_weighted_distance: max_distance * u.grid().cell_volume(),
            max_distance,
            distances,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::PotentialSpec;
    use crate::sampling::{random_smooth, sine_mode, task_rng};

    fn setup(lambda: f64, spec: PotentialSpec, n: usize) -> Energy {
        let g = Grid::new_1d(0.0, 1.0, n).unwrap();
        let p = ExponentField::constant(2.0, &g, 3).unwrap();
        Energy::new(p, lambda, Potential::new(&spec).unwrap())
    }

    #[test]
    fn zero_state() {
        let e = setup(1.0, PotentialSpec::example(1.0, 5.0), 32);
        let z = GridFunction::zeros(e.exponent().grid());
        assert_eq!(e.value(&z), 0.0);
        assert!(e.subgradient_selection(&z).is_zero());
        assert_eq!(e.m_residual(&z), 0.0);
        assert_eq!(e.inclusion(&z).max_distance, 0.0);
    }

    #[test]
    fn zero_potential_reduces_to_j() {
        let e = setup(0.0, PotentialSpec::zero(), 32);
        let u = random_smooth(e.exponent().grid(), &mut task_rng(1, 0), 5);
        assert_eq!(e.value(&u), energy_j(&u, e.exponent()));
        assert_eq!(
            e.subgradient_selection(&u).values(),
            residual_a(&u, e.exponent()).values()
        );
    }

    #[test]
    fn energy_self_converges() {
        let value = |n| {
            let e = setup(1.0, PotentialSpec::example(1.0, 5.0), n);
            e.value(&sine_mode(e.exponent().grid(), 1, 1).scaled(0.5))
        };
        let (coarse, fine) = (value(512), value(1024));
        // J = π²/16, λ-term = 1/16, ψ = −1/8 in the continuum
        let exact = std::f64::consts::PI.powi(2) / 16.0 - 1.0 / 16.0 + 0.125;
        assert!((coarse - fine).abs() < 1e-5);
        assert!((fine - exact).abs() < 1e-5);
    }

    #[test]
    fn selection_matches_differences_off_kinks() {
        let e = setup(2.0, PotentialSpec::example(1.0, 5.0), 24);
        let grid = *e.exponent().grid();
        let mut rng = task_rng(4, 0);
        let u = random_smooth(&grid, &mut rng, 4).scaled(3.0);
        let s = e.subgradient_selection(&u);
        let w = grid.cell_volume();
        let h = 1e-6;
        for _ in 0..5 {
            let d = random_smooth(&grid, &mut rng, 6);
            let fd =
                (e.value(&u.lincomb(1.0, &d, h)) - e.value(&u.lincomb(1.0, &d, -h))) / (2.0 * h);
            let pair: f64 = s
                .values()
                .iter()
                .zip(d.values())
                .map(|(a, b)| a * b * w)
                .sum();
            assert!((fd - pair).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} {pair}");
        }
    }

    #[test]
    fn kink_nodes_only_count_misfit() {
        // every other node sits on the kink |u| = 1 where ∂j = [−2, 2]
        let e = setup(0.0, PotentialSpec::example(1.0, 5.0), 8);
        let grid = *e.exponent().grid();
        let vals: Vec<f64> = (0..grid.n_interior())
            .map(|k| if k % 2 == 0 { 1.0 } else { 0.5 })
            .collect();
        let u = GridFunction::from_values(&grid, vals).unwrap();
        let g = e.smooth_gradient(&u);
        let r = e.residual(&u);
        for k in 0..grid.n_interior() {
            let expected = if k % 2 == 0 {
                (g[k].abs() - 2.0).max(0.0)
            } else {
                // derivative of −t² at 0.5 is −1
                (g[k] + 1.0).abs()
            };
            assert!((r.distances[k] - expected).abs() < 1e-12);
        }
        let inner: Vec<usize> = (0..grid.n_interior()).filter(|k| k % 2 == 0).collect();
        assert!(inner
            .iter()
            .all(|&k| g[k].abs() <= 2.0 || r.distances[k] > 0.0));
    }

    #[test]
    fn aggregations_agree_for_quadratic_exponent() {
        let mut e = setup(0.0, PotentialSpec::example(1.0, 5.0), 40);
        let u = random_smooth(e.exponent().grid(), &mut task_rng(2, 0), 5);
        let a = e.m_residual(&u);
        e.aggregation = Aggregation::WeightedEuclidean;
        let b = e.m_residual(&u);
        assert!((a - b).abs() < 1e-9 * b);
    }
}
