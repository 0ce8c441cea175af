use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{CheckKind, ConfigError, RunConfig};
use super::trace_csv::{fmt_f64, parse_trace_csv, write_trace};
use super::{CliError, EXIT_DIVERGED, EXIT_FAILURE, EXIT_MAX_ITERS, EXIT_OK};
use crate::certificates::{
    check_h1_seq, check_h2_seq, lambda_alpha_q, lambda_bracket, psi, q_value, FeasibilityReport, ParamPoint,
    TAIL_FRACTION,
};
use crate::engine::{
    contraction_from_rows, rate_violations, run, small_o_check, tail_sup_envelope, verify_ck_monotone,
    verify_contraction, verify_contraction_rows, verify_lemma1, RunError, RunOptions, RunStatus, Schedule,
    Trace, TraceRow,
};
use crate::linalg::{Point, Vector};
use crate::operators::OperatorHandle;
use crate::problems::{reference_fixed_point, BenchmarkInstance, Scheme, SchemeOperator, REFERENCE_MAX_ITERS, REFERENCE_TOL};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "IKM_THREADS";
/// Longest index range the sequence precheck evaluates.
pub const PRECHECK_HORIZON: usize = 100_000;
/// Allowed excess of `||x_k - p||^2` over the `rate_bound` column.
pub const RATE_TOL: f64 = 1e-10;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(RunConfig::parse(&text)?)
}

fn write_output(path: Option<&PathBuf>, contents: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| failure(format!("{}: {e}", p.display()))),
        None => out.write_all(contents).map_err(failure),
    }
}

/// Result of the certificate precheck for a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Precheck {
    pub report: FeasibilityReport,
    /// Whether the relaxation condition holds (strictly, in the limit).
    pub feasible: bool,
}

/// Evaluates the relaxation condition on `eta_k = gamma lambda_k`, and the
/// quasi-contractive condition when `q` is known and `lambda_k <= 1`.
pub fn precheck(schedule: &Schedule, gamma: Option<f64>, q: Option<f64>, xi: f64, horizon: usize) -> crate::Result<Precheck> {
    let gamma = gamma.unwrap_or(1.0);
    let q = q.filter(|_| schedule.lambda_seq().sup() <= 1.0);
    if schedule.is_constant() {
        let mut point = ParamPoint::new(schedule.alpha(1), schedule.lambda(1))?.with_gamma(gamma)?;
        if let Some(q) = q {
            point = point.with_q(q)?.with_xi(xi)?;
        }
        let report = point.report()?;
        let feasible = report.entry("H1").is_some_and(|e| e.satisfied);
        return Ok(Precheck { report, feasible });
    }
    let end = horizon.clamp(8, PRECHECK_HORIZON);
    let eta = Schedule::new(schedule.alpha_seq().clone(), schedule.lambda_seq().scaled(gamma))?;
    let mut report = check_h1_seq(&eta, 2..=end, TAIL_FRACTION)?;
    if gamma != 1.0 {
        report.notes.push(format!("H1 evaluated at eta_k = {gamma} lambda_k"));
    }
    let feasible = report.entry("H1_tail").is_some_and(|e| e.satisfied);
    if let Some(q) = q {
        report.merge(check_h2_seq(schedule, |_| q, xi, 2..=end)?);
    }
    Ok(Precheck { report, feasible })
}

/// Everything `run` produces, before anything is written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub csv: Vec<u8>,
    pub summary: String,
    pub status: RunStatus,
    pub exit_code: i32,
    pub rows: Vec<TraceRow>,
}

type Objective<P> = Arc<dyn Fn(&P) -> f64 + Send + Sync>;

/// A trace reference: the scheme's own fixed point, which differs from the
/// problem solution for splitting schemes.
fn trace_reference<P: Point>(
    inst: &BenchmarkInstance,
    scheme: Scheme,
    op: &OperatorHandle<P>,
    start: P,
    as_point: impl Fn(&Vector) -> Option<P>,
) -> crate::Result<P> {
    if matches!(scheme, Scheme::Gradient | Scheme::Proximal | Scheme::ForwardBackward) {
        if let Some(p) = inst.reference_solution.as_ref().and_then(&as_point) {
            return Ok(p);
        }
    }
    let (p, res) = reference_fixed_point(op, start, REFERENCE_TOL, REFERENCE_MAX_ITERS)?;
    if res > REFERENCE_TOL {
        return Err(crate::Error::Other(format!("trace reference stalled at residual {res:e}")));
    }
    Ok(p)
}

fn vector_objective(inst: &Arc<BenchmarkInstance>, op: &OperatorHandle<Vector>, scheme: Scheme) -> Option<Objective<Vector>> {
    inst.objective(&inst.initial_point)?;
    let inst = Arc::clone(inst);
    if matches!(scheme, Scheme::Gradient | Scheme::Proximal | Scheme::ForwardBackward) {
        return Some(Arc::new(move |x: &Vector| inst.objective(x).unwrap_or(f64::NAN)));
    }
    let op = op.clone();
    Some(Arc::new(move |z: &Vector| {
        op.extract_solution(z)
            .and_then(|x| inst.objective(&x))
            .unwrap_or(f64::NAN)
    }))
}

fn block_objective(inst: &Arc<BenchmarkInstance>) -> Option<Objective<crate::linalg::BlockVector>> {
    inst.objective(&inst.initial_point)?;
    let inst = Arc::clone(inst);
    Some(Arc::new(move |z: &crate::linalg::BlockVector| {
        inst.objective(&z.primal).unwrap_or(f64::NAN)
    }))
}

/// Builds the instance and runs the configured experiment.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let inst = Arc::new(cfg.problem.build().map_err(usage)?);
    match inst.operator(cfg.scheme, &cfg.steps).map_err(usage)? {
        SchemeOperator::Vector(op) => {
            let start = inst.initial_point.clone();
            let p = trace_reference(&inst, cfg.scheme, &op, start.clone(), |v| Some(v.clone())).map_err(failure)?;
            let obj = vector_objective(&inst, &op, cfg.scheme);
            drive(cfg, &inst, &op, start, p, obj)
        }
        SchemeOperator::Block(op) => {
            let start = inst.start_block().expect("block schemes have a dual block");
            let p = trace_reference(&inst, cfg.scheme, &op, start.clone(), |_| None).map_err(failure)?;
            drive(cfg, &inst, &op, start, p, block_objective(&inst))
        }
    }
}

fn drive<P: Point>(
    cfg: &RunConfig,
    inst: &BenchmarkInstance,
    op: &OperatorHandle<P>,
    start: P,
    p_ref: P,
    objective: Option<Objective<P>>,
) -> Result<RunOutcome, CliError> {
    let schedule = cfg.schedule().map_err(usage)?;
    let stop = cfg.stopping().map_err(usage)?;
    let q = cfg.q.or(op.q_factor());
    let pre = precheck(&schedule, op.gamma(), q, cfg.xi, cfg.max_iters).map_err(usage)?;
    if !pre.feasible && !cfg.force {
        return Err(CliError::Usage(format!(
            "precheck failed; set `algorithm.force = true` to run anyway\n{}",
            pre.report
        )));
    }

    let mut opts = RunOptions::default().with_reference(p_ref);
    if let Some(f) = objective {
        opts.objective = Some(f);
    }
    let wants = |c: CheckKind| cfg.checks.contains(&c);
    if wants(CheckKind::Rate) || wants(CheckKind::Contraction) {
        let q = q.ok_or_else(|| usage("rate and contraction checks need `schedule.q` or a quasi-contractive operator"))?;
        if !schedule.is_constant() && wants(CheckKind::Rate) {
            return Err(usage("the rate check needs a constant schedule"));
        }
        if wants(CheckKind::Rate) {
            let big_q = q_value(schedule.lambda(1), q, cfg.xi).map_err(usage)?;
            opts = opts.with_rate(schedule.alpha(1), big_q);
        }
        if wants(CheckKind::Contraction) {
            opts = opts.with_contraction(Some(q), cfg.xi);
        }
    }

    let (trace, diverged_at) = match run(op, start, &schedule, &stop, &opts) {
        Ok(t) => (t, None),
        Err(RunError::Diverged { k, trace }) => (*trace, Some(k)),
        Err(RunError::Invalid(e)) => return Err(usage(e)),
    };

    let mut notes = vec![format!("instance: {}", inst.name), format!("operator: {}", op.name())];
    notes.extend(op.notes().iter().map(|n| format!("operator note: {n}")));
    notes.push(if pre.feasible {
        "precheck: pass".to_string()
    } else {
        "WARNING: precheck failed; run forced".to_string()
    });
    notes.extend(pre.report.to_string().lines().map(|l| format!("precheck: {l}")));
    notes.push(format!("status: {}", status_name(trace.status)));
    if let Some(k) = diverged_at {
        notes.push(format!("diverged at k = {k}"));
    }
    notes.push(format!("iterations: {}", trace.iterations()));
    if let Some(r) = trace.final_residual() {
        notes.push(format!("final residual: {}", fmt_f64(r)));
    }
    let checks = post_checks(cfg, &schedule, &trace);
    notes.extend(checks.iter().map(|c| format!("check {c}")));

    let mut csv = Vec::new();
    write_trace(&mut csv, &cfg.render(), &notes, &trace.rows).map_err(failure)?;
    let exit_code = match trace.status {
        RunStatus::Converged => EXIT_OK,
        RunStatus::MaxIters | RunStatus::Stalled => EXIT_MAX_ITERS,
        RunStatus::Diverged => EXIT_DIVERGED,
    };
    let summary = notes[2..].join("\n") + "\n";
    Ok(RunOutcome {
        csv,
        summary,
        status: trace.status,
        exit_code,
        rows: trace.rows,
    })
}

pub fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::MaxIters => "max_iters",
        RunStatus::Stalled => "stalled",
        RunStatus::Diverged => "diverged",
    }
}

/// One line of a check summary: `name: PASS|FAIL|skipped (detail)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: Option<bool>,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "skipped",
        };
        write!(f, "{}: {v} ({})", self.name, self.detail)
    }
}

fn line(name: &'static str, passed: Option<bool>, detail: impl Into<String>) -> CheckLine {
    CheckLine {
        name,
        passed,
        detail: detail.into(),
    }
}

fn post_checks<P: Point>(cfg: &RunConfig, schedule: &Schedule, trace: &Trace<P>) -> Vec<CheckLine> {
    let rows = &trace.rows;
    cfg.checks
        .iter()
        .map(|c| match c {
            CheckKind::Lemma1 => lemma1_line(rows, schedule),
            CheckKind::CkMonotone => ck_line(rows),
            CheckKind::SmallO => small_o_line(rows),
            CheckKind::Rate => match rate_violations(rows, RATE_TOL) {
                Ok(v) => line(
                    "rate",
                    Some(v.is_empty()),
                    format!(
                        "{} violations{}",
                        v.len(),
                        v.first().map(|k| format!(", first at k = {k}")).unwrap_or_default()
                    ),
                ),
                Err(e) => line("rate", None, e.to_string()),
            },
            CheckKind::Contraction => match verify_contraction(rows) {
                Ok(r) => line(
                    "contraction",
                    Some(r.per_step.ok() && r.product.ok()),
                    format!(
                        "per-step violations {}, product violations {}",
                        r.per_step.violations.len(),
                        r.product.violations.len()
                    ),
                ),
                Err(e) => line("contraction", None, e.to_string()),
            },
        })
        .collect()
}

fn lemma1_line(rows: &[TraceRow], schedule: &Schedule) -> CheckLine {
    match verify_lemma1(rows, schedule) {
        Ok(r) => line(
            "lemma1",
            Some(r.ok()),
            format!(
                "{} rows checked, {} violations{}",
                r.checked,
                r.violations.len(),
                r.first_violation().map(|k| format!(", first at k = {k}")).unwrap_or_default()
            ),
        ),
        Err(e) => line("lemma1", None, e.to_string()),
    }
}

fn ck_line(rows: &[TraceRow]) -> CheckLine {
    match verify_ck_monotone(rows) {
        Ok(None) => line("ck_monotone", Some(true), format!("{} rows nonincreasing", rows.len())),
        Ok(Some(k)) => line("ck_monotone", Some(false), format!("increase at k = {k}")),
        Err(e) => line("ck_monotone", None, e.to_string()),
    }
}

fn small_o_line(rows: &[TraceRow]) -> CheckLine {
    if rows.len() < 4 {
        return line("small_o", None, "fewer than 4 rows");
    }
    let env = |f: fn(&TraceRow) -> f64| tail_sup_envelope(&rows.iter().map(f).collect::<Vec<_>>());
    let res = small_o_check(&env(|r| r.residual * r.residual));
    let step = small_o_check(&env(|r| r.step * r.step));
    match (res, step) {
        (Ok(a), Ok(b)) => line("small_o", Some(a && b), format!("residual {a}, step {b}")),
        (Err(e), _) | (_, Err(e)) => line("small_o", None, e.to_string()),
    }
}

pub fn cmd_run(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load_config(config_path)?;
    let outcome = execute(&cfg)?;
    write_output(cfg.trace_path.as_ref(), &outcome.csv, out)?;
    let sink: &mut dyn Write = if cfg.trace_path.is_some() { out } else { err };
    sink.write_all(outcome.summary.as_bytes()).map_err(failure)?;
    Ok(outcome.exit_code)
}

pub fn cmd_check_params(
    alpha: f64,
    lambda: f64,
    q: Option<f64>,
    xi: Option<f64>,
    gamma: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut p = ParamPoint::new(alpha, lambda).map_err(usage)?;
    if let Some(g) = gamma {
        p = p.with_gamma(g).map_err(usage)?;
    }
    if let Some(q) = q {
        p = p.with_q(q).map_err(usage)?;
    }
    if let Some(xi) = xi {
        p = p.with_xi(xi).map_err(usage)?;
    }
    let report = p.report().map_err(usage)?;
    write!(out, "{report}").map_err(failure)?;
    Ok(if report.all_satisfied() { EXIT_OK } else { EXIT_FAILURE })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub q: f64,
    pub lambda: f64,
}

/// Tolerance for the grid assertions on `Psi` and the bracket.
pub const GRID_TOL: f64 = 1e-10;

/// `lambda_{alpha,q}` on `alpha = i / alpha_steps` (`i < alpha_steps`) and
/// `q = j / (q_steps + 1)` (`1 <= j <= q_steps`). Every cell is checked against
/// `Psi <= GRID_TOL` and the bracket before it is returned.
pub fn lambda_grid(alpha_steps: usize, q_steps: usize) -> Result<Vec<GridCell>, CliError> {
    if alpha_steps < 2 || q_steps < 2 {
        return Err(usage("alpha_steps and q_steps must be >= 2"));
    }
    let cells: Vec<(usize, usize)> = (0..alpha_steps)
        .flat_map(|i| (1..=q_steps).map(move |j| (i, j)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, j)| {
            let alpha = i as f64 / alpha_steps as f64;
            let q = j as f64 / (q_steps + 1) as f64;
            let root = lambda_alpha_q(alpha, q).map_err(failure)?;
            let (lo, hi) = lambda_bracket(alpha, q).map_err(failure)?;
            let l = root.lambda;
            let ok = psi(l, alpha, q) <= GRID_TOL
                && l >= lo - GRID_TOL
                && l <= hi + GRID_TOL
                && (i != 0 || l == 1.0);
            if !ok {
                return Err(failure(format!(
                    "grid cell alpha = {alpha}, q = {q}: lambda = {l} fails Psi or bracket [{lo}, {hi}]"
                )));
            }
            Ok(GridCell { alpha, q, lambda: l })
        })
        .collect()
}

pub fn cmd_lambda_grid(alpha_steps: usize, q_steps: usize, out_path: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cells = lambda_grid(alpha_steps, q_steps)?;
    let mut buf = format!("# lambda-grid alpha_steps = {alpha_steps}, q_steps = {q_steps}\nalpha,q,lambda_alpha_q\n");
    for c in &cells {
        buf.push_str(&format!("{},{},{}\n", fmt_f64(c.alpha), fmt_f64(c.q), fmt_f64(c.lambda)));
    }
    write_output(out_path.map(Path::to_path_buf).as_ref(), buf.as_bytes(), out)?;
    Ok(EXIT_OK)
}

/// One sweep row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub lambda: f64,
    pub baseline: bool,
    pub status: RunStatus,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_objective: Option<f64>,
    pub h1_margin: Option<f64>,
    pub h2_margin: Option<f64>,
    pub warning: bool,
}

pub const SWEEP_HEADER: &str =
    "alpha,lambda,baseline,status,iterations,final_residual,final_objective,h1_margin,h2_margin,warning";

/// Listed schedules in order, followed by any missing `alpha = 0` baselines
/// (one per distinct `lambda`, in order of first appearance).
pub fn sweep_schedules(listed: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut all = listed.to_vec();
    for &(_, l) in listed {
        if !all.iter().any(|&(a, l2)| a == 0.0 && l2 == l) {
            all.push((0.0, l));
        }
    }
    all
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn sweep_rows<P: Point>(
    cfg: &RunConfig,
    op: &OperatorHandle<P>,
    start: &P,
    objective: Option<Objective<P>>,
    schedules: &[(f64, f64)],
) -> Result<Vec<SweepRow>, CliError> {
    let stop = cfg.stopping().map_err(usage)?;
    let q = cfg.q.or(op.q_factor());
    let job = |&(alpha, lambda): &(f64, f64)| -> Result<SweepRow, CliError> {
        let schedule = Schedule::constant(alpha, lambda).map_err(usage)?;
        let pre = precheck(&schedule, op.gamma(), q, cfg.xi, cfg.max_iters).map_err(usage)?;
        let opts = RunOptions { objective: objective.clone(), ..RunOptions::default() };
        let trace = match run(op, start.clone(), &schedule, &stop, &opts) {
            Ok(t) => t,
            Err(RunError::Diverged { trace, .. }) => *trace,
            Err(RunError::Invalid(e)) => return Err(usage(e)),
        };
        let final_objective = objective.as_ref().map(|f| f(&trace.last)).filter(|v| v.is_finite());
        Ok(SweepRow {
            alpha,
            lambda,
            baseline: alpha == 0.0,
            status: trace.status,
            iterations: trace.iterations(),
            final_residual: trace.final_residual().unwrap_or(f64::NAN),
            final_objective,
            h1_margin: pre.report.entry("H1").map(|e| e.margin),
            h2_margin: pre.report.entry("H2").map(|e| e.margin),
            warning: !pre.feasible,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count().unwrap_or(0))
        .build()
        .map_err(failure)?;
    pool.install(|| schedules.par_iter().map(job).collect())
}

/// Runs every sweep schedule on one instance and scheme.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    if cfg.sweep.len() < 2 {
        return Err(usage("`sweep.schedules` must list at least two `alpha:lambda` pairs"));
    }
    let schedules = sweep_schedules(&cfg.sweep);
    let inst = Arc::new(cfg.problem.build().map_err(usage)?);
    match inst.operator(cfg.scheme, &cfg.steps).map_err(usage)? {
        SchemeOperator::Vector(op) => {
            let obj = vector_objective(&inst, &op, cfg.scheme);
            sweep_rows(cfg, &op, &inst.initial_point, obj, &schedules)
        }
        SchemeOperator::Block(op) => {
            let start = inst.start_block().expect("block schemes have a dual block");
            sweep_rows(cfg, &op, &start, block_objective(&inst), &schedules)
        }
    }
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Side-by-side comparison of each inertial row with its baseline.
pub fn sweep_comparison(rows: &[SweepRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.baseline)
        .map(|r| {
            let base = rows.iter().find(|b| b.baseline && b.lambda == r.lambda);
            let verdict = match base {
                Some(b) if b.status == RunStatus::Converged && r.status == RunStatus::Converged => {
                    match r.iterations.cmp(&b.iterations) {
                        std::cmp::Ordering::Less => "inertial faster",
                        std::cmp::Ordering::Equal => "tie",
                        std::cmp::Ordering::Greater => "baseline faster",
                    }
                }
                Some(_) => "not comparable (a run did not converge)",
                None => "no baseline",
            };
            format!(
                "alpha = {} lambda = {}: {} iterations ({}) vs baseline {} ({}): {verdict}{}",
                r.alpha,
                r.lambda,
                r.iterations,
                status_name(r.status),
                base.map_or("-".to_string(), |b| b.iterations.to_string()),
                base.map_or("-", |b| status_name(b.status)),
                if r.warning { " [WARNING: precheck failed]" } else { "" }
            )
        })
        .collect()
}

pub fn cmd_sweep(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load_config(config_path)?;
    let rows = sweep(&cfg)?;
    let mut buf = String::new();
    for l in cfg.render().lines() {
        buf.push_str(&format!("# config: {l}\n"));
    }
    buf.push_str(SWEEP_HEADER);
    buf.push('\n');
    for r in &rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.alpha),
            fmt_f64(r.lambda),
            r.baseline,
            status_name(r.status),
            r.iterations,
            fmt_f64(r.final_residual),
            opt_csv(r.final_objective),
            opt_csv(r.h1_margin),
            opt_csv(r.h2_margin),
            if r.warning { "precheck_failed" } else { "" }
        ));
    }
    write_output(cfg.report_path.as_ref(), buf.as_bytes(), out)?;
    let sink: &mut dyn Write = if cfg.report_path.is_some() { out } else { err };
    for l in sweep_comparison(&rows) {
        writeln!(sink, "{l}").map_err(failure)?;
    }
    Ok(EXIT_OK)
}

/// Re-analysis of an exported trace.
pub fn certify_text(text: &str) -> Result<Vec<CheckLine>, CliError> {
    let parsed = parse_trace_csv(text).map_err(|e| usage(format!("trace: {e}")))?;
    if parsed.config.is_empty() {
        return Err(usage("trace has no embedded configuration"));
    }
    let cfg = RunConfig::parse(&parsed.config)?;
    let schedule = cfg.schedule().map_err(usage)?;
    let rows = &parsed.rows;
    let mut lines = vec![lemma1_line(rows, &schedule), ck_line(rows), small_o_line(rows)];
    lines.push(certify_contraction(&cfg, &schedule, rows));
    Ok(lines)
}

fn certify_contraction(cfg: &RunConfig, schedule: &Schedule, rows: &[TraceRow]) -> CheckLine {
    if schedule.lambda_seq().sup() > 1.0 {
        return line("contraction", None, "needs lambda_k <= 1");
    }
    let q = match cfg.q {
        Some(q) => Some(q),
        None => cfg
            .problem
            .build()
            .and_then(|inst| inst.operator(cfg.scheme, &cfg.steps))
            .ok()
            .and_then(|op| op.q_factor()),
    };
    let Some(q) = q else {
        return line("contraction", None, "operator is not quasi-contractive");
    };
    match contraction_from_rows(rows, schedule, |_| q, cfg.xi) {
        Ok(diag) => {
            let r = verify_contraction_rows(rows, &diag);
            line(
                "contraction",
                Some(r.per_step.ok() && r.product.ok()),
                format!(
                    "q = {q}, per-step violations {}, product violations {}",
                    r.per_step.violations.len(),
                    r.product.violations.len()
                ),
            )
        }
        Err(e) => line("contraction", None, e.to_string()),
    }
}

pub fn cmd_certify(csv_path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = fs::read_to_string(csv_path).map_err(|e| usage(format!("{}: {e}", csv_path.display())))?;
    let lines = certify_text(&text)?;
    for l in &lines {
        writeln!(out, "{l}").map_err(failure)?;
    }
    let ok = lines.iter().all(|l| l.passed != Some(false));
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Sequence;

    fn quadratic_cfg(extra: &str) -> RunConfig {
        RunConfig::parse(&format!(
            "problem.kind = quadratic\nproblem.dim = 8\nproblem.l_smooth = 4\nalgorithm.scheme = gradient\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn precheck_constant_and_sequence() {
        let s = Schedule::constant(0.2, 0.5).unwrap();
        let p = precheck(&s, None, None, 1.0, 100).unwrap();
        assert!(p.feasible);
        assert!((p.report.entry("H1").unwrap().lhs - 0.44).abs() < 1e-15);
        assert!(p.report.entry("H2").is_none());
        let p = precheck(&s, Some(0.5), Some(0.9), 1.0, 100).unwrap();
        assert!(p.report.entry("H2").is_some());
        let p = precheck(&Schedule::constant(0.0, 2.5).unwrap(), Some(0.5), Some(0.9), 1.0, 100).unwrap();
        assert!(!p.feasible && p.report.entry("H2").is_none());

        let ramp = Schedule::new(
            Sequence::Ramp { start: 0.0, end: 0.2, len: 50 },
            Sequence::Constant(0.5),
        )
        .unwrap();
        let p = precheck(&ramp, None, None, 1.0, 1000).unwrap();
        assert!(p.feasible && p.report.entry("H1_tail").is_some());
        let to_one = Schedule::new(Sequence::Constant(0.1), Sequence::Table((1..=400).map(|k| 1.0 - 1.0 / (k as f64 + 1.0)).collect())).unwrap();
        assert!(!precheck(&to_one, None, None, 1.0, 400).unwrap().feasible);
    }

    #[test]
    fn picard_on_contraction_converges() {
        let out = execute(&quadratic_cfg("stopping.residual_tol = 1e-10")).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.exit_code, EXIT_OK);
        assert!(out.rows.last().unwrap().residual <= 1e-10);
    }

    #[test]
    fn infeasible_needs_force() {
        let e = execute(&quadratic_cfg("schedule.lambda_value = 50")).unwrap_err();
        assert_eq!(e.exit_code(), crate::cli::EXIT_USAGE);
        let out = execute(&quadratic_cfg("schedule.lambda_value = 50\nalgorithm.force = true")).unwrap();
        assert_eq!(out.exit_code, EXIT_DIVERGED);
        assert!(!out.rows.is_empty());
        let text = String::from_utf8(out.csv).unwrap();
        assert!(text.contains("# WARNING: precheck failed; run forced"));
    }

    #[test]
    fn certify_recomputes_run_checks() {
        let cfg = quadratic_cfg(
            "schedule.alpha_value = 0.1\nschedule.lambda_value = 0.8\nstopping.residual_tol = 1e-12\noutputs.checks = lemma1, ck_monotone, contraction",
        );
        let out = execute(&cfg).unwrap();
        let text = String::from_utf8(out.csv).unwrap();
        assert!(text.contains("# check contraction: PASS"));
        let lines = certify_text(&text).unwrap();
        let names: Vec<_> = lines.iter().map(|l| l.name).collect();
        assert_eq!(names, ["lemma1", "ck_monotone", "small_o", "contraction"]);
        for l in &lines {
            assert_ne!(l.passed, Some(false), "{l}");
        }
        assert_eq!(lines[3].passed, Some(true));
    }

    #[test]
    fn certify_flags_tampered_trace() {
        let cfg = quadratic_cfg("schedule.alpha_value = 0.1\nschedule.lambda_value = 0.8\nstopping.max_iters = 40");
        let text = String::from_utf8(execute(&cfg).unwrap().csv).unwrap();
        let parsed = parse_trace_csv(&text).unwrap();
        let mut rows = parsed.rows.clone();
        let c = rows[20].c_k.unwrap();
        rows[20].c_k = Some(c * 2.0 + 1.0);
        let mut buf = Vec::new();
        write_trace(&mut buf, &parsed.config, &[], &rows).unwrap();
        let lines = certify_text(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(lines[1].passed, Some(false));
        assert!(certify_text("k,residual\n").is_err());
    }

    #[test]
    fn sweep_adds_missing_baselines_in_order() {
        assert_eq!(
            sweep_schedules(&[(0.2, 0.5), (0.0, 0.5), (0.3, 0.9), (0.1, 0.9)]),
            vec![(0.2, 0.5), (0.0, 0.5), (0.3, 0.9), (0.1, 0.9), (0.0, 0.9)]
        );
    }

    #[test]
    fn sweep_marks_infeasible_rows() {
        let cfg = quadratic_cfg("sweep.schedules = 0.1:0.5, 0.6:0.95\nstopping.max_iters = 2000");
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(!rows[0].warning && rows[1].warning);
        assert!(rows[2].baseline && rows[3].baseline);
        let cmp = sweep_comparison(&rows);
        assert_eq!(cmp.len(), 2);
        assert!(cmp[1].contains("WARNING"));
        assert!(sweep(&quadratic_cfg("sweep.schedules = 0:1")).is_err());
    }

    #[test]
    fn small_lambda_grid() {
        let cells = lambda_grid(4, 3).unwrap();
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().filter(|c| c.alpha == 0.0).all(|c| c.lambda == 1.0));
        assert_eq!(cells[0].q, 0.25);
        assert!(lambda_grid(1, 3).is_err());
    }

    #[test]
    fn check_params_exit_codes() {
        let mut out = Vec::new();
        assert_eq!(cmd_check_params(0.0, 0.5, None, None, None, &mut out).unwrap(), EXIT_OK);
        assert_eq!(cmd_check_params(0.2, 0.5, None, None, None, &mut out).unwrap(), EXIT_OK);
        out.clear();
        assert_eq!(cmd_check_params(0.5, 0.9, Some(0.9), Some(1.0), None, &mut out).unwrap(), EXIT_FAILURE);
        let text = String::from_utf8(out).unwrap();
        let h2 = text.lines().find(|l| l.starts_with("H2")).unwrap();
        assert!(h2.contains("FAIL") && h2.contains("margin=-"));
        assert_eq!(
            cmd_check_params(1.0, 0.5, None, None, None, &mut Vec::new()).unwrap_err().exit_code(),
            crate::cli::EXIT_USAGE
        );
    }
}
