//! Piecewise-smooth potentials `j(x, t)` and their Clarke subdifferentials.
//!
//! A potential is a list of pieces covering the real line in `t`. Each piece
//! carries a value formula and a derivative formula in the variables `x`,
//! `y`, `t`, `p` (the exponent at `x`) and any named parameters. Inside a
//! piece the subdifferential is the classical derivative; at a breakpoint it
//! is the closed interval spanned by the one-sided derivatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponent::{ExponentField, Exponents};
use crate::expr::{Expr, Scope};
use crate::grid::{Grid, GridFunction, Location, Sampled};

const MAX_PARAMS: usize = 12;
const FIXED_SLOTS: usize = 4;

/// One end of a piece's `t`-range. JSON accepts numbers, `null` (meaning the
/// infinite end on that side) and the strings `"-inf"`, `"inf"`, `"+inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEnd(pub f64);

impl Serialize for RangeEnd {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEnd {
    Num(f64),
    Text(String),
    Null(()),
}

fn parse_range<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<[RangeEnd; 2], D::Error> {
    use serde::de::Error as _;
    let raw: [Option<RawEnd>; 2] = Deserialize::deserialize(d)?;
    let conv = |r: &Option<RawEnd>, side: f64| -> std::result::Result<f64, D::Error> {
        match r {
            None | Some(RawEnd::Null(())) => Ok(side * f64::INFINITY),
            Some(RawEnd::Num(v)) => Ok(*v),
            Some(RawEnd::Text(s)) => match s.trim() {
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                other => other
                    .parse::<f64>()
                    .map_err(|_| D::Error::custom(format!("bad range end `{other}`"))),
            },
        }
    };
    Ok([
        RangeEnd(conv(&raw[0], -1.0)?),
        RangeEnd(conv(&raw[1], 1.0)?),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    #[serde(deserialize_with = "parse_range")]
    pub range: [RangeEnd; 2],
    pub value: String,
    pub deriv: String,
}

/// JSON form of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl PotentialSpec {
    /// The five-piece potential with parameters `mu`, `sigma`:
    /// `−μ|t|^p` for `|t| ≤ 1`, a linear bridge for `1 < |t| ≤ 2`, and
    /// `σ − |t|^p` beyond.
    pub fn example(mu: f64, sigma: f64) -> PotentialSpec {
        let inner = ("-mu*abs(t)^p", "-mu*p*abs(t)^(p-1)*sign(t)");
        let bridge = (
            "(mu+sigma-2^p)*abs(t) - 2*mu - sigma + 2^p",
            "(mu+sigma-2^p)*sign(t)",
        );
        let outer = ("sigma - abs(t)^p", "-p*abs(t)^(p-1)*sign(t)");
        let piece = |lo: f64, hi: f64, (v, d): (&str, &str)| PieceSpec {
            range: [RangeEnd(lo), RangeEnd(hi)],
            value: v.into(),
            deriv: d.into(),
        };
        PotentialSpec {
            pieces: vec![
                piece(f64::NEG_INFINITY, -2.0, outer),
                piece(-2.0, -1.0, bridge),
                piece(-1.0, 1.0, inner),
                piece(1.0, 2.0, bridge),
                piece(2.0, f64::INFINITY, outer),
            ],
            params: [("mu".to_string(), mu), ("sigma".to_string(), sigma)].into(),
        }
    }

    /// A single smooth piece on the whole line.
    pub fn smooth(value: &str, deriv: &str, params: &[(&str, f64)]) -> PotentialSpec {
        PotentialSpec {
            pieces: vec![PieceSpec {
                range: [RangeEnd(f64::NEG_INFINITY), RangeEnd(f64::INFINITY)],
                value: value.into(),
                deriv: deriv.into(),
            }],
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn zero() -> PotentialSpec {
        PotentialSpec::smooth("0", "0", &[])
    }
}

/// Closed interval `[lo, hi]`; the Clarke subdifferential of a scalar
/// piecewise-smooth function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClarkeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ClarkeInterval {
    pub fn point(v: f64) -> Self {
        ClarkeInterval { lo: v, hi: v }
    }

    pub fn spanning(a: f64, b: f64) -> Self {
        ClarkeInterval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Nearest element of the interval to `v`.
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

#[derive(Debug, Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    value: Expr,
    deriv: Expr,
}

/// A compiled, validated potential.
#[derive(Debug, Clone)]
pub struct Potential {
    spec: PotentialSpec,
    pieces: Vec<Piece>,
    params: Vec<f64>,
}

impl Potential {
    pub fn new(spec: &PotentialSpec) -> Result<Potential> {
        if spec.pieces.is_empty() {
            return Err(Error::InvalidPotential("no pieces".into()));
        }
        if spec.params.len() > MAX_PARAMS {
            return Err(Error::InvalidPotential(format!(
                "at most {MAX_PARAMS} parameters are supported"
            )));
        }
        let mut scope = Scope::new(["x", "y", "t", "p"]);
        let mut params = Vec::new();
        for (name, &v) in &spec.params {
            if scope.slot(name).is_some() {
                return Err(Error::InvalidPotential(format!(
                    "parameter `{name}` shadows a variable"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidPotential(format!("parameter `{name}` = {v}")));
            }
            scope.push(name.clone());
            params.push(v);
        }
        let mut pieces = Vec::with_capacity(spec.pieces.len());
        let mut expected = f64::NEG_INFINITY;
        for (i, ps) in spec.pieces.iter().enumerate() {
            let [lo, hi] = [ps.range[0].0, ps.range[1].0];
            if lo != expected {
                return Err(Error::InvalidPotential(format!(
                    "piece {i} starts at {lo}, expected {expected} (pieces must cover the line in order)"
                )));
            }
            if !(lo < hi) {
                return Err(Error::InvalidPotential(format!(
                    "piece {i} has empty range"
                )));
            }
            pieces.push(Piece {
                lo,
                hi,
                value: Expr::compile(&ps.value, &scope)?,
                deriv: Expr::compile(&ps.deriv, &scope)?,
            });
            expected = hi;
        }
        if expected != f64::INFINITY {
            return Err(Error::InvalidPotential(format!(
                "pieces end at {expected}, not at +inf"
            )));
        }
        Ok(Potential {
            spec: spec.clone(),
            pieces,
            params,
        })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.spec.params.get(name).copied()
    }

    /// Interior breakpoints in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.lo).collect()
    }

    #[inline]
    fn vars(&self, x: [f64; 2], p: f64, t: f64) -> [f64; FIXED_SLOTS + MAX_PARAMS] {
        let mut v = [0.0; FIXED_SLOTS + MAX_PARAMS];
        v[..FIXED_SLOTS].copy_from_slice(&[x[0], x[1], t, p]);
        v[FIXED_SLOTS..FIXED_SLOTS + self.params.len()].copy_from_slice(&self.params);
        v
    }

    /// Index of the piece whose closed range holds `t`; the left one at a
    /// breakpoint.
    #[inline]
    fn locate(&self, t: f64) -> usize {
        self.pieces
            .iter()
            .position(|pc| t <= pc.hi)
            .unwrap_or(self.pieces.len() - 1)
    }

    /// `j(x, t)` where `p` is the exponent at `x`.
    #[inline]
    pub fn value(&self, x: [f64; 2], p: f64, t: f64) -> f64 {
        let v = self.vars(x, p, t);
        self.pieces[self.locate(t)].value.eval(&v)
    }

    /// `∂j(x, t)`.
    #[inline]
    pub fn clarke(&self, x: [f64; 2], p: f64, t: f64) -> ClarkeInterval {
        let v = self.vars(x, p, t);
        let i = self.locate(t);
        let d = self.pieces[i].deriv.eval(&v);
        if t == self.pieces[i].hi && i + 1 < self.pieces.len() {
            ClarkeInterval::spanning(d, self.pieces[i + 1].deriv.eval(&v))
        } else {
            ClarkeInterval::point(d)
        }
    }

    /// Value jump `j(b⁺) − j(b⁻)` at breakpoint `k`.
    fn jump(&self, k: usize, x: [f64; 2], p: f64) -> f64 {
        let b = self.pieces[k].hi;
        let v = self.vars(x, p, b);
        self.pieces[k + 1].value.eval(&v) - self.pieces[k].value.eval(&v)
    }

    /// Largest `|jump|` over all breakpoints and grid nodes.
    pub fn continuity_residual(&self, p: &ExponentField) -> f64 {
        let grid = p.grid();
        let mut worst: f64 = 0.0;
        for i in 0..grid.n_nodes() {
            let (x, pi) = (grid.node_coord(i), p.at(Location::AllNodes, i));
            for k in 0..self.pieces.len() - 1 {
                worst = worst.max(self.jump(k, x, pi).abs());
            }
        }
        worst
    }

    /// Largest `|j(x, 0)|` over grid nodes.
    pub fn origin_value(&self, p: &ExponentField) -> f64 {
        let grid = p.grid();
        (0..grid.n_nodes())
            .map(|i| {
                self.value(grid.node_coord(i), p.at(Location::AllNodes, i), 0.0)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `ψ(u) = ∫ j(x, u(x))` with nodal quadrature.
    pub fn psi<F: Sampled>(&self, u: &F, p: &ExponentField) -> f64 {
        let (grid, loc) = (u.grid(), u.location());
        u.values()
            .iter()
            .enumerate()
            .map(|(i, &t)| grid.weight(loc, i) * self.value(grid.coord(loc, i), p.at(loc, i), t))
            .sum()
    }

    /// `∂j(x_k, u_k)` at every interior node.
    pub fn intervals(&self, u: &GridFunction, p: &ExponentField) -> Vec<ClarkeInterval> {
        let grid = u.grid();
        let pv = p.interior_values();
        u.values()
            .iter()
            .enumerate()
            .map(|(k, &t)| self.clarke(grid.interior_coord(k), pv[k], t))
            .collect()
    }

    /// Nodewise midpoint of `∂j(x, u(x))`.
    pub fn selection(&self, u: &GridFunction, p: &ExponentField) -> GridFunction {
        let v = self
            .intervals(u, p)
            .iter()
            .map(ClarkeInterval::midpoint)
            .collect();
        GridFunction::from_values(u.grid(), v).expect("interior sized")
    }
}

/// Evaluation context for audits: every grid node with its exponent.
pub(crate) fn node_samples(grid: &Grid, p: &ExponentField) -> Vec<([f64; 2], f64)> {
    (0..grid.n_nodes())
        .map(|i| (grid.node_coord(i), p.at(Location::AllNodes, i)))
        .collect()
}
