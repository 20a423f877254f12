//! `pxvar` command-line front end.
//!
//! Every subcommand reads a problem file, writes a JSON report with a
//! `metadata` block (timing, versions) and a `report` block (results), and
//! exits with the stage code of the first failure.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pxvar_core::exponent::position_scope;
use pxvar_core::expr::Expr;
use pxvar_core::modular::norm_summary;
use pxvar_core::mountain_pass::{ClampRule, PathProfile};
use pxvar_core::pipeline::{run_audits, run_pipeline_text, PipelineRun, RunOptions, Stage};
use pxvar_core::problem::{parse_cells, AuditMode, Problem, ProblemSpec};
use pxvar_core::rayleigh::{admissible, estimate_lambda_star};
use pxvar_core::selftest::{run_property_suite, SelftestConfig};
use pxvar_core::{ExecPolicy, GridFunction, NodalField};

#[derive(Parser)]
#[command(
    name = "pxvar",
    version,
    about = "Variable-exponent mountain-pass toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Report path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Overrides the problem seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cell counts, e.g. `256` or `32x32`.
    #[arg(long)]
    grid_override: Option<String>,
    /// Run every stage on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Modular and norms of a function on the problem grid.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Function as an expression in `x`, `y`.
        #[arg(long, conflicts_with = "field")]
        expr: Option<String>,
        /// Function as a nodal CSV (`x[,y],value`).
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Estimate λ* and check admissibility of the problem λ.
    Rayleigh {
        #[command(flatten)]
        common: Common,
    },
    /// Run the potential audits.
    CheckPotential {
        #[command(flatten)]
        common: Common,
    },
    /// Audits, λ*, crossing point and geometry certificate.
    Geometry {
        #[command(flatten)]
        common: Common,
    },
    /// Full pipeline up to the mountain-pass solve.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Final path as CSV, one row per path point.
        #[arg(long)]
        path_csv: Option<PathBuf>,
        /// Energy profiles `(iteration, tau, energy)`; defaults to
        /// `energy_profile.csv` beside the report.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Seeded property suite over all modules.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Cases per property and configuration.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Measure residuals against the interval midpoint instead of the
        /// nearest point (a deliberately broken clamp).
        #[arg(long)]
        mutate_clamp: bool,
    },
}

impl Common {
    fn policy(&self) -> ExecPolicy {
        if self.sequential {
            ExecPolicy::Sequential
        } else {
            ExecPolicy::Parallel
        }
    }

    fn options(&self, until: Stage) -> Result<RunOptions> {
        Ok(RunOptions {
            seed: self.seed,
            cells: self.grid_override.as_deref().map(parse_cells).transpose()?,
            policy: Some(self.policy()),
            until: Some(until),
        })
    }

    fn spec_text(&self) -> Result<String> {
        let path = self.spec.as_ref().context("--spec is required")?;
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }

    /// Parse and build the problem with overrides applied.
    fn problem(&self) -> Result<Problem, String> {
        let text = self.spec_text().map_err(|e| format!("{e:#}"))?;
        let mut spec = ProblemSpec::from_json(&text).map_err(|e| e.to_string())?;
        if let Some(cells) = &self.grid_override {
            let cells = parse_cells(cells).map_err(|e| e.to_string())?;
            spec = spec.with_cells(&cells).map_err(|e| e.to_string())?;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        spec.rayleigh.seed = spec.seed;
        spec.rayleigh.policy = self.policy();
        spec.build().map_err(|e| e.to_string())
    }
}

fn metadata(command: &str, started: Instant) -> Value {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "tool": "pxvar",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "finished_unix_time": unix,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "parallel_build": cfg!(feature = "parallel"),
    })
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent()
        .map(|d| d.join(name))
        .unwrap_or_else(|| PathBuf::from(name))
}

fn spec_failure(message: String) -> Value {
    json!({
        "success": false,
        "exit_code": Stage::Spec.exit_code(),
        "failure": {"stage": "spec", "exit_code": Stage::Spec.exit_code(), "message": message, "condition": null},
    })
}

fn write_profiles(path: &Path, profiles: &[PathProfile]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "tau", "energy"])?;
    for p in profiles {
        for (t, e) in p.tau.iter().zip(&p.energy) {
            w.write_record([p.iteration.to_string(), t.to_string(), e.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_path(path: &Path, points: &[GridFunction]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = points.first().map_or(0, |u| u.len());
    let mut header = vec!["point".to_string()];
    header.extend((0..n).map(|k| format!("u{k}")));
    w.write_record(&header)?;
    for (i, u) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(u.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn say(quiet: bool, line: impl AsRef<str>) {
    if !quiet {
        println!("{}", line.as_ref());
    }
}

fn finish(
    common: &Common,
    command: &str,
    started: Instant,
    report: Value,
    code: i32,
) -> Result<i32> {
    write_json(
        &common.out,
        &json!({"metadata": metadata(command, started), "report": report}),
    )?;
    say(
        common.quiet,
        format!("report written to {}", common.out.display()),
    );
    Ok(code)
}

fn run_stages(common: &Common, command: &str, until: Stage) -> Result<(PipelineRun, i32)> {
    let run = match common.spec_text() {
        Ok(text) => run_pipeline_text(&text, &common.options(until)?),
        Err(e) => PipelineRun::spec_error(format!("{e:#}")),
    };
    let code = run.report.exit_code;
    if let Some(f) = &run.report.failure {
        eprintln!(
            "{command}: {} stage failed: {}",
            stage_name(f.stage),
            f.message
        );
    }
    Ok((run, code))
}

fn stage_name(s: Stage) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn cmd_norm(
    common: &Common,
    expr: Option<&str>,
    field: Option<&Path>,
    started: Instant,
) -> Result<i32> {
    let problem = match common.problem() {
        Ok(p) => p,
        Err(e) => return finish(common, "norm", started, spec_failure(e), 2),
    };
    let grid = problem.grid;
    let u = match (expr, field) {
        (Some(src), _) => {
            let e = Expr::compile(src, &position_scope())?;
            NodalField::from_fn(&grid, |x, y| e.eval(&[x, y]))
        }
        (None, Some(path)) => NodalField::read_csv(&grid, File::open(path)?)?,
        (None, None) => anyhow::bail!("norm needs --expr or --field"),
    };
    let summary = norm_summary(&u, &problem.exponent)?;
    say(
        common.quiet,
        format!(
            "modular {:.10e}  luxemburg {:.10e}  sobolev (sum) {:.10e}  sobolev (modular) {:.10e}",
            summary.modular, summary.luxemburg, summary.sum_norm, summary.modular_norm
        ),
    );
    finish(
        common,
        "norm",
        started,
        json!({"success": true, "exit_code": 0, "norms": summary}),
        0,
    )
}

fn cmd_rayleigh(common: &Common, started: Instant) -> Result<i32> {
    let problem = match common.problem() {
        Ok(p) => p,
        Err(e) => return finish(common, "rayleigh", started, spec_failure(e), 2),
    };
    let est = estimate_lambda_star(&problem.exponent, &problem.spec.rayleigh);
    let lambda = problem.spec.lambda;
    let ok = admissible(lambda, est.value, &problem.exponent);
    say(
        common.quiet,
        format!(
            "lambda* <= {:.10e}  lambda = {lambda}  admissible: {ok}",
            est.value
        ),
    );
    let code = if ok {
        0
    } else {
        Stage::Admissibility.exit_code()
    };
    let report = json!({
        "success": ok,
        "exit_code": code,
        "lambda": lambda,
        "lambda_star": est.summary(),
        "scaling_probe": est.scaling_probe,
        "admissible": ok,
    });
    finish(common, "rayleigh", started, report, code)
}

fn cmd_check_potential(common: &Common, started: Instant) -> Result<i32> {
    let problem = match common.problem() {
        Ok(p) => p,
        Err(e) => return finish(common, "check-potential", started, spec_failure(e), 2),
    };
    let audits = run_audits(&problem);
    let failure = audits.first_failure();
    let enforce = problem.spec.audit.mode == AuditMode::Enforce;
    let code = if failure.is_some() && enforce {
        Stage::Audit.exit_code()
    } else {
        0
    };
    match &failure {
        Some((cond, msg)) => {
            say(common.quiet, format!("audit failed: {cond}: {msg}"));
            if enforce {
                eprintln!("check-potential: {cond}: {msg}");
            }
        }
        None => say(common.quiet, "all audits passed"),
    }
    let report = json!({
        "success": code == 0,
        "exit_code": code,
        "failure": failure.map(|(c, m)| json!({"stage": "audit", "condition": c, "message": m})),
        "audits": audits,
    });
    finish(common, "check-potential", started, report, code)
}

fn cmd_geometry(common: &Common, started: Instant) -> Result<i32> {
    let (run, code) = run_stages(common, "geometry", Stage::Geometry)?;
    if let Some(g) = &run.report.geometry {
        say(
            common.quiet,
            format!(
                "rho = {:.6e}  eta = {:.6e}  R(u_bar) = {:.6e}",
                g.rho, g.eta, g.r_ubar
            ),
        );
    }
    finish(
        common,
        "geometry",
        started,
        serde_json::to_value(&run.report)?,
        code,
    )
}

fn cmd_solve(
    common: &Common,
    path_csv: Option<&Path>,
    plot_data: Option<&Path>,
    started: Instant,
) -> Result<i32> {
    let (run, code) = run_stages(common, "solve", Stage::Solve)?;
    if let Some(outcome) = &run.outcome {
        if let Some(dir) = common.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        outcome
            .critical_point
            .write_csv(BufWriter::new(File::create(sibling(
                &common.out,
                "critical_point.csv",
            ))?))?;
        let profile = plot_data
            .map(Path::to_path_buf)
            .unwrap_or_else(|| sibling(&common.out, "energy_profile.csv"));
        write_profiles(&profile, &outcome.profiles)?;
        if let Some(p) = path_csv {
            write_path(p, &outcome.path)?;
        }
    }
    if let Some(s) = &run.report.solve {
        say(
            common.quiet,
            format!(
                "critical value {:.10e}  m = {:.3e}  inclusion {:.3e}  iterations {}",
                s.critical_value, s.m_residual, s.inclusion_max_distance, s.iterations
            ),
        );
    }
    finish(
        common,
        "solve",
        started,
        serde_json::to_value(&run.report)?,
        code,
    )
}

fn cmd_selftest(common: &Common, cases: usize, mutate: bool, started: Instant) -> Result<i32> {
    let cfg = SelftestConfig {
        seed: common.seed.unwrap_or(0),
        cases,
        clamp_rule: if mutate {
            ClampRule::Midpoint
        } else {
            ClampRule::Nearest
        },
        policy: common.policy(),
    };
    let suite = run_property_suite(&cfg);
    say(common.quiet, suite.table());
    for f in suite.failures() {
        eprintln!(
            "selftest: {}/{} failed: {}",
            f.module,
            f.property,
            f.witness.as_deref().unwrap_or("")
        );
    }
    let code = if suite.all_pass { 0 } else { 1 };
    finish(
        common,
        "selftest",
        started,
        serde_json::to_value(&suite)?,
        code,
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match &cli.command {
        Command::Norm {
            common,
            expr,
            field,
        } => cmd_norm(common, expr.as_deref(), field.as_deref(), started),
        Command::Rayleigh { common } => cmd_rayleigh(common, started),
        Command::CheckPotential { common } => cmd_check_potential(common, started),
        Command::Geometry { common } => cmd_geometry(common, started),
        Command::Solve {
            common,
            path_csv,
            plot_data,
        } => cmd_solve(common, path_csv.as_deref(), plot_data.as_deref(), started),
        Command::Selftest {
            common,
            cases,
            mutate_clamp,
        } => cmd_selftest(common, *cases, *mutate_clamp, started),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("pxvar: {e:#}");
            ExitCode::from(1)
        }
    }
}
