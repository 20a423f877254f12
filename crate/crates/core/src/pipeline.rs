//! End-to-end run: audits, `λ*` estimate and admissibility gate, crossing
//! point, geometry certificate, and the mountain-pass solve.
//!
//! Each stage that can stop the run maps to its own exit code, so scripts
//! can tell a bad problem file from a failed audit or a solver that ran out of
//! iterations. The report is assembled from `BTreeMap`-free plain structs
//! with a fixed field order and carries no timestamps, so a rerun with the
//! same problem and seed serializes to identical bytes.

use serde::{Deserialize, Serialize};

use crate::audit::{
    audit_asymptotic_negativity, audit_crossing, audit_growth, audit_origin, fit_growth_constants,
    CrossingAudit, GrowthAudit, NegativityAudit, OriginAudit,
};
use crate::error::Error;
use crate::exec::ExecPolicy;
use crate::exponent::DerivedExponent;
use crate::grid::GridFunction;
use crate::modular::{sobolev_norm_modular, SupSearch};
use crate::mountain_pass::{
    certify_geometry, solve_mountain_pass, sphere_bound_constants, Energy, GeometryCertificate,
    GeometryFailure, HistoryEntry, SolveError, SolveOutcome, SphereBound,
};
use crate::problem::{AuditMode, Problem, ProblemSpec};
use crate::rayleigh::{admissible, estimate_lambda_star, LambdaStarEstimate, LambdaStarSummary};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Spec,
    Audit,
    Admissibility,
    Crossing,
    Geometry,
    Solve,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Spec => 2,
            Stage::Audit => 3,
            Stage::Admissibility => 4,
            Stage::Crossing => 5,
            Stage::Geometry => 6,
            Stage::Solve => 7,
        }
    }
}

/// Run-time controls that are not part of the problem file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub cells: Option<Vec<usize>>,
    /// Overrides the policy of every stage when set.
    pub policy: Option<ExecPolicy>,
    /// Last stage to run; `None` runs everything.
    pub until: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub exit_code: i32,
    pub message: String,
    /// Name of the failed condition for audit failures.
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub grid: crate::grid::Grid,
    pub exponent: String,
    pub n_dim: usize,
    pub p_minus: f64,
    pub p_plus: f64,
    pub critical_hat: f64,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBundle {
    pub mode: AuditMode,
    pub origin_value: f64,
    pub continuity_residual: f64,
    pub growth: Option<GrowthAudit>,
    pub growth_error: Option<String>,
    pub asymptotic_negativity: NegativityAudit,
    pub origin: OriginAudit,
}

impl AuditBundle {
    /// First failed condition, if any.
    pub fn first_failure(&self) -> Option<(&'static str, String)> {
        if self.origin_value > 1e-12 {
            return Some((
                "vanishing_at_zero",
                format!("max |j(x, 0)| = {:.3e}", self.origin_value),
            ));
        }
        if self.continuity_residual > 1e-9 {
            return Some((
                "continuity",
                format!(
                    "largest jump at a breakpoint = {:.3e}",
                    self.continuity_residual
                ),
            ));
        }
        if let Some(e) = &self.growth_error {
            return Some(("growth", e.clone()));
        }
        if let Some(g) = &self.growth {
            if !g.pass {
                let w = g.witness.expect("failed growth audit has a witness");
                return Some((
                    "growth",
                    format!(
                        "|v| = {:.3e} exceeds a + c1|t|^(r-1) = {:.3e} at t = {:.3e}",
                        w.observed, w.bound, w.t
                    ),
                ));
            }
        }
        if !self.asymptotic_negativity.pass {
            return Some((
                "negativity_at_infinity",
                "j/|t|^p is not bounded below zero for large |t|".into(),
            ));
        }
        if !self.origin.pass {
            return Some((
                "negativity_at_origin",
                format!(
                    "limsup of j/|t|^p near 0 is {:.6e}, claimed bound is -{:.6e}",
                    self.origin.estimated_limsup, self.origin.mu_claim
                ),
            ));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub critical_value: f64,
    pub m_residual: f64,
    pub inclusion_max_distance: f64,
    pub inclusion_max_weighted_distance: f64,
    pub iterations: usize,
    pub climb_started: Option<usize>,
    pub critical_point_norm: f64,
    pub nontrivial: bool,
    pub above_eta: bool,
    pub max_iterate_norm: f64,
    pub critical_point: Vec<f64>,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub success: bool,
    pub exit_code: i32,
    pub failure: Option<Failure>,
    pub problem: Option<ProblemSummary>,
    pub audits: Option<AuditBundle>,
    pub lambda_star: Option<LambdaStarSummary>,
    pub admissible: Option<bool>,
    pub crossing: Option<CrossingAudit>,
    pub sphere_bound: Option<SphereBound>,
    pub geometry: Option<GeometryCertificate>,
    pub geometry_failure: Option<GeometryFailure>,
    pub solve: Option<SolveSummary>,
}

/// Report plus the heavy artifacts that go to separate files.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    pub problem: Option<Problem>,
    pub lambda_star: Option<LambdaStarEstimate>,
    pub u_bar: Option<GridFunction>,
    pub outcome: Option<SolveOutcome>,
}

impl PipelineRun {
    fn new() -> PipelineRun {
        PipelineRun {
            report: PipelineReport {
                success: false,
                exit_code: 0,
                failure: None,
                problem: None,
                audits: None,
                lambda_star: None,
                admissible: None,
                crossing: None,
                sphere_bound: None,
                geometry: None,
                geometry_failure: None,
                solve: None,
            },
            problem: None,
            lambda_star: None,
            u_bar: None,
            outcome: None,
        }
    }

    /// A run that stopped before the problem file could be read.
    pub fn spec_error(message: String) -> PipelineRun {
        PipelineRun::new().fail(Stage::Spec, message, None)
    }

    fn fail(mut self, stage: Stage, message: String, condition: Option<&str>) -> PipelineRun {
        self.report.success = false;
        self.report.exit_code = stage.exit_code();
        self.report.failure = Some(Failure {
            stage,
            exit_code: stage.exit_code(),
            message,
            condition: condition.map(str::to_string),
        });
        self
    }

    fn succeed(mut self) -> PipelineRun {
        self.report.success = true;
        self.report.exit_code = 0;
        self
    }
}

/// Runs every audit on the problem's potential.
pub fn run_audits(problem: &Problem) -> AuditBundle {
    let (p, j) = (&problem.exponent, &problem.potential);
    let settings = &problem.spec.audit;
    let (growth, growth_error) = match growth_audit(problem) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    AuditBundle {
        mode: settings.mode,
        origin_value: j.origin_value(p),
        continuity_residual: j.continuity_residual(p),
        growth,
        growth_error,
        asymptotic_negativity: audit_asymptotic_negativity(j, p),
        origin: audit_origin(j, p, settings.mu_claim),
    }
}

fn growth_audit(problem: &Problem) -> Result<GrowthAudit, Error> {
    let (p, j) = (&problem.exponent, &problem.potential);
    let g = &problem.spec.audit.growth;
    let r = match &g.r {
        Some(src) => DerivedExponent::parse(src, &problem.grid)?,
        None => DerivedExponent::constant(p.p_plus(), &problem.grid),
    };
    let (a, c1) = match (g.a, g.c1) {
        (Some(a), Some(c1)) => (a, c1),
        _ => match fit_growth_constants(j, p, &r)? {
            Some((fa, fc)) => (g.a.unwrap_or(fa), g.c1.unwrap_or(fc)),
            None => {
                return Err(Error::InvalidPotential(
                    "subdifferential outgrows |t|^(r-1); no growth constants fit".into(),
                ))
            }
        },
    };
    audit_growth(j, p, &r, a, c1)
}

fn thin_history(h: &[HistoryEntry]) -> Vec<HistoryEntry> {
    let mut out: Vec<HistoryEntry> = h
        .iter()
        .filter(|e| e.iteration % 10 == 0)
        .copied()
        .collect();
    if let Some(last) = h.last() {
        if out.last() != Some(last) {
            out.push(*last);
        }
    }
    out
}

fn summarize(
    outcome: &SolveOutcome,
    cert: &GeometryCertificate,
    problem: &Problem,
    converged: bool,
) -> SolveSummary {
    let norm = sobolev_norm_modular(&outcome.critical_point, &problem.exponent);
    SolveSummary {
        converged,
        critical_value: outcome.critical_value,
        m_residual: outcome.m_residual,
        inclusion_max_distance: outcome.inclusion.max_distance,
        inclusion_max_weighted_distance: outcome.inclusion.max_weighted_distance,
        iterations: outcome.iterations,
        climb_started: outcome.climb_started,
        critical_point_norm: norm,
        nontrivial: norm > cert.rho / 2.0,
        above_eta: outcome.critical_value >= cert.eta - 1e-8,
        max_iterate_norm: outcome.max_iterate_norm,
        critical_point: outcome.critical_point.values().to_vec(),
        history: thin_history(&outcome.history),
    }
}

/// Parse, build and run. Never panics on bad input; every failure is a
/// report with a nonzero exit code.
pub fn run_pipeline_text(text: &str, opts: &RunOptions) -> PipelineRun {
    match ProblemSpec::from_json(text) {
        Ok(spec) => run_pipeline(spec, opts),
        Err(e) => PipelineRun::new().fail(Stage::Spec, e.to_string(), None),
    }
}

pub fn run_pipeline(spec: ProblemSpec, opts: &RunOptions) -> PipelineRun {
    let mut run = PipelineRun::new();
    let mut spec = spec;
    if let Some(cells) = &opts.cells {
        spec = match spec.with_cells(cells) {
            Ok(s) => s,
            Err(e) => return run.fail(Stage::Spec, e.to_string(), None),
        };
    }
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(policy) = opts.policy {
        spec.solver.policy = policy;
        spec.rayleigh.policy = policy;
        spec.geometry.policy = policy;
    }
    spec.rayleigh.seed = spec.seed;
    spec.geometry.seed = spec.seed.wrapping_add(1);
    let problem = match spec.build() {
        Ok(p) => p,
        Err(e) => return run.fail(Stage::Spec, e.to_string(), None),
    };
    let p = &problem.exponent;
    run.report.problem = Some(ProblemSummary {
        grid: problem.grid,
        exponent: spec.exponent.clone(),
        n_dim: spec.n_dim,
        p_minus: p.p_minus(),
        p_plus: p.p_plus(),
        critical_hat: p.critical_hat(),
        lambda: spec.lambda,
        seed: spec.seed,
    });
    let until = opts.until.unwrap_or(Stage::Solve);
    run.problem = Some(problem.clone());

    // audits
    let audits = run_audits(&problem);
    let audit_failure = audits.first_failure();
    let enforce = spec.audit.mode == AuditMode::Enforce;
    run.report.audits = Some(audits.clone());
    if let (Some((cond, msg)), true) = (audit_failure, enforce) {
        return run.fail(Stage::Audit, format!("{cond}: {msg}"), Some(cond));
    }
    if until == Stage::Audit {
        return run.succeed();
    }

    // λ* and admissibility
    let est = estimate_lambda_star(p, &spec.rayleigh);
    let ok = admissible(spec.lambda, est.value, p);
    run.report.lambda_star = Some(est.summary());
    run.report.admissible = Some(ok);
    let lambda_star = est.value;
    run.lambda_star = Some(est);
    if !ok {
        return run.fail(
            Stage::Admissibility,
            format!(
                "lambda = {} is not below (p-/p+) lambda* = {:.6e}",
                spec.lambda,
                p.p_minus() / p.p_plus() * lambda_star
            ),
            None,
        );
    }
    if until == Stage::Admissibility {
        return run.succeed();
    }

    // crossing point
    let mut energy = Energy::new(p.clone(), spec.lambda, problem.potential.clone());
    energy.aggregation = spec.aggregation;
    let crossing = match &problem.u_bar {
        Some(u) => CrossingAudit::supplied(&energy, u.clone()),
        None => audit_crossing(&energy),
    };
    run.report.crossing = Some(crossing.clone());
    if !crossing.pass && (enforce || crossing.u_bar.is_none()) {
        return run.fail(
            Stage::Crossing,
            "no scaled profile satisfies the crossing inequality".into(),
            None,
        );
    }
    let u_bar = crossing.u_bar.clone().expect("crossing point present");
    run.u_bar = Some(u_bar.clone());
    if until == Stage::Crossing {
        return run.succeed();
    }

    // geometry
    let mu = audits.origin.mu_claim;
    let sphere_bound = (mu > 0.0).then(|| {
        let search = SupSearch {
            seed: spec.seed.wrapping_add(2),
            policy: spec.geometry.policy,
            ..SupSearch::default()
        };
        sphere_bound_constants(&energy, mu, lambda_star, spec.audit.theta, &search)
    });
    run.report.sphere_bound = sphere_bound;
    let cert = match certify_geometry(&energy, &u_bar, sphere_bound, &spec.geometry) {
        Ok(c) => c,
        Err(f) => {
            let msg = f.reason.clone();
            run.report.geometry_failure = Some(f);
            return run.fail(Stage::Geometry, msg, None);
        }
    };
    run.report.geometry = Some(cert.clone());
    if until == Stage::Geometry {
        return run.succeed();
    }

    // solve
    match solve_mountain_pass(&energy, &u_bar, cert.rho, &spec.solver) {
        Ok(outcome) => {
            let summary = summarize(&outcome, &cert, &problem, true);
            let (nontrivial, above) = (summary.nontrivial, summary.above_eta);
            run.report.solve = Some(summary);
            run.outcome = Some(outcome);
            if !nontrivial {
                return run.fail(
                    Stage::Solve,
                    "solver returned a near-zero state".into(),
                    None,
                );
            }
            if !above {
                return run.fail(
                    Stage::Solve,
                    "critical value fell below the certified sphere level".into(),
                    None,
                );
            }
            run.succeed()
        }
        Err(e) => {
            let msg = e.to_string();
            if let Some(o) = e.outcome() {
                run.report.solve = Some(summarize(o, &cert, &problem, false));
            }
            if let SolveError::Stagnation { outcome, .. }
            | SolveError::IterationCap { outcome, .. } = e
            {
                run.outcome = Some(*outcome);
            }
            run.fail(Stage::Solve, msg, None)
        }
    }
}
