//! The inertial Krasnoselskii-Mann iteration
//!
//! ```text
//! y_k     = x_k + alpha_k (x_k - x_{k-1})
//! x_{k+1} = (1 - lambda_k) y_k + lambda_k T_k y_k
//! ```
//!
//! with per-iteration Lyapunov diagnostics. The iteration starts from
//! `x_0 = x_1`, so the first inertial term vanishes, `Delta_1 = 0` and
//! `C_1 = ||x_1 - p||^2`. All norms are taken in the metric of the operator
//! handle (Euclidean unless the scheme is averaged in a different inner
//! product).

use std::fmt;
use std::sync::Arc;

use crate::certificates::{q_value, RateBound};
use crate::error::{Error, Result};
use crate::linalg::{Metric, Point};
use crate::operators::OperatorHandle;

/// Mixed absolute/relative slack for inequality checks along a trace.
pub const CHECK_SLACK: f64 = 1e-9;

/// A parameter sequence indexed from `k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    Constant(f64),
    /// Linear from `start` at `k = 1` to `end` at `k = len`, then constant.
    Ramp { start: f64, end: f64, len: usize },
    /// Explicit values for `k = 1..=len`; the last value is held afterwards.
    Table(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, k: usize) -> f64 {
        let k = k.max(1);
        match self {
            Sequence::Constant(c) => *c,
            Sequence::Ramp { start, end, len } => {
                if *len <= 1 || k >= *len {
                    *end
                } else {
                    start + (end - start) * (k - 1) as f64 / (*len - 1) as f64
                }
            }
            Sequence::Table(t) => t[k.min(t.len()) - 1],
        }
    }

    /// The values that determine the range of the sequence.
    fn defining_values(&self) -> Vec<f64> {
        match self {
            Sequence::Constant(c) => vec![*c],
            Sequence::Ramp { start, end, .. } => vec![*start, *end],
            Sequence::Table(t) => t.clone(),
        }
    }

    pub fn inf(&self) -> f64 {
        self.defining_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self) -> f64 {
        self.defining_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First `k` with `a_{k+1} < a_k`, if any.
    pub fn first_decrease(&self) -> Option<usize> {
        match self {
            Sequence::Constant(_) => None,
            Sequence::Ramp { start, end, len } => (end < start && *len > 1).then_some(1),
            Sequence::Table(t) => t.windows(2).position(|w| w[1] < w[0]).map(|i| i + 1),
        }
    }

    /// The sequence multiplied termwise by `c`.
    pub fn scaled(&self, c: f64) -> Sequence {
        match self {
            Sequence::Constant(v) => Sequence::Constant(c * v),
            Sequence::Ramp { start, end, len } => Sequence::Ramp {
                start: c * start,
                end: c * end,
                len: *len,
            },
            Sequence::Table(t) => Sequence::Table(t.iter().map(|v| c * v).collect()),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Sequence::Constant(_) => true,
            Sequence::Ramp { start, end, len } => start == end || *len <= 1,
            Sequence::Table(t) => t.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Sequence::Table(t) if t.is_empty() => {
                Err(Error::Schedule(format!("{name} table is empty")))
            }
            _ if self.defining_values().iter().any(|v| !v.is_finite()) => {
                Err(Error::Schedule(format!("{name} has non-finite values")))
            }
            _ => Ok(()),
        }
    }
}

/// Inertial and relaxation parameters `(alpha_k)`, `(lambda_k)`.
///
/// `alpha_k` must be nondecreasing in `[0, 1)` and `lambda_k > 0`. Values of
/// `lambda_k` above 1 are accepted (over-relaxation of averaged operators);
/// the certificates judge them on `eta = gamma lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    alpha: Sequence,
    lambda: Sequence,
}

impl Schedule {
    pub fn new(alpha: Sequence, lambda: Sequence) -> Result<Self> {
        alpha.validate("alpha")?;
        lambda.validate("lambda")?;
        if alpha.inf() < 0.0 || alpha.sup() >= 1.0 {
            return Err(Error::Schedule("alpha_k must lie in [0, 1)".into()));
        }
        if let Some(k) = alpha.first_decrease() {
            return Err(Error::Schedule(format!("alpha_k decreases at k = {k}")));
        }
        if lambda.inf() <= 0.0 {
            return Err(Error::Schedule("lambda_k must be > 0".into()));
        }
        Ok(Self { alpha, lambda })
    }

    pub fn constant(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(Sequence::Constant(alpha), Sequence::Constant(lambda))
    }

    /// `alpha_k`, with `alpha_0 = 0`.
    pub fn alpha(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.alpha.at(k)
        }
    }

    /// `lambda_k`; `lambda_0` is taken as `lambda_1`. It is only ever
    /// multiplied by `||x_1 - x_0||^2 = 0`.
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda.at(k)
    }

    pub fn nu(&self, k: usize) -> f64 {
        1.0 / self.lambda(k) - 1.0
    }

    pub fn alpha_seq(&self) -> &Sequence {
        &self.alpha
    }

    pub fn lambda_seq(&self) -> &Sequence {
        &self.lambda
    }

    pub fn lambda_inf(&self) -> f64 {
        self.lambda.inf()
    }

    pub fn lambda_inf_positive(&self) -> bool {
        self.lambda_inf() > 0.0
    }

    pub fn is_constant(&self) -> bool {
        self.alpha.is_constant() && self.lambda.is_constant()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Stop when `||x_{k+1} - x_k||` drops to this value.
    pub stall_tol: Option<f64>,
}

impl StoppingRule {
    pub fn new(max_iters: usize, residual_tol: f64) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::param("max_iters", 0.0, "must be >= 1"));
        }
        if !(residual_tol >= 0.0) {
            return Err(Error::param("residual_tol", residual_tol, "must be >= 0"));
        }
        Ok(Self {
            max_iters,
            residual_tol,
            stall_tol: None,
        })
    }

    pub fn with_stall_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::param("stall_tol", tol, "must be >= 0"));
        }
        self.stall_tol = Some(tol);
        Ok(self)
    }
}

/// `x_k`, `x_{k-1}` and the last extrapolated point `y_{k-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState<P> {
    pub k: usize,
    pub x_prev: P,
    pub x_curr: P,
    pub y_curr: Option<P>,
}

impl<P: Point> IterateState<P> {
    pub fn new(x1: P) -> Self {
        Self {
            k: 1,
            x_prev: x1.clone(),
            x_curr: x1,
            y_curr: None,
        }
    }
}

/// A family `(T_k)` of operators sharing one shape and one metric.
pub trait OperatorFamily<P: Point>: Sync {
    fn operator(&self, k: usize) -> &OperatorHandle<P>;
}

impl<P: Point> OperatorFamily<P> for OperatorHandle<P> {
    fn operator(&self, _k: usize) -> &OperatorHandle<P> {
        self
    }
}

/// Operators for `k = 1..=len`; the last one is used afterwards.
#[derive(Clone, Debug)]
pub struct OperatorSequence<P: Point> {
    ops: Vec<OperatorHandle<P>>,
}

impl<P: Point> OperatorSequence<P> {
    pub fn new(ops: Vec<OperatorHandle<P>>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Other("operator sequence is empty".into()))?;
        if let Some(bad) = ops.iter().find(|o| o.shape() != first.shape()) {
            return Err(Error::dims(first.shape(), bad.shape()));
        }
        Ok(Self { ops })
    }
}

impl<P: Point> OperatorFamily<P> for OperatorSequence<P> {
    fn operator(&self, k: usize) -> &OperatorHandle<P> {
        &self.ops[k.clamp(1, self.ops.len()) - 1]
    }
}

fn check_step_params(alpha: f64, lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", alpha, "must lie in [0, 1)"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", lambda, "must be finite and > 0"));
    }
    Ok(())
}

/// `(y, T y, x_next)`. Exact shortcuts for `alpha = 0` and `lambda = 1` keep
/// the non-inertial, unrelaxed case bit-identical to `T x`.
fn advance<P: Point>(x_curr: &P, x_prev: &P, op: &OperatorHandle<P>, alpha: f64, lambda: f64) -> (P, P, P) {
    let y = if alpha == 0.0 {
        x_curr.clone()
    } else {
        x_curr.lincomb(1.0 + alpha, x_prev, -alpha)
    };
    let ty = op.apply_unchecked(&y);
    let x_next = if lambda == 1.0 {
        ty.clone()
    } else {
        y.lincomb(1.0 - lambda, &ty, lambda)
    };
    (y, ty, x_next)
}

/// One inertial KM step.
pub fn km_step<P: Point>(
    state: &IterateState<P>,
    op: &OperatorHandle<P>,
    alpha: f64,
    lambda: f64,
) -> Result<IterateState<P>> {
    check_step_params(alpha, lambda)?;
    if state.x_curr.shape() != op.shape() || state.x_prev.shape() != op.shape() {
        return Err(Error::dims(op.shape(), state.x_curr.shape()));
    }
    let (y, _, x_next) = advance(&state.x_curr, &state.x_prev, op, alpha, lambda);
    if !x_next.all_finite() {
        return Err(Error::Divergence { k: state.k });
    }
    Ok(IterateState {
        k: state.k + 1,
        x_prev: state.x_curr.clone(),
        x_curr: x_next,
        y_curr: Some(y),
    })
}

/// Quasi-contractive diagnostics for a run: `Q_k = Q(lambda_k, q_k, xi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck {
    /// Overrides the operators' `q_factor` when set.
    pub q: Option<f64>,
    pub xi: f64,
}

/// Constants of the linear-rate bound; `d1 = ||x_1 - p||^2` comes from the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub alpha: f64,
    pub q_const: f64,
}

type ObjectiveFn<P> = dyn Fn(&P) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct RunOptions<P: Point> {
    /// A common fixed point; required for `Delta_k`, `C_k` and the bounds.
    pub p_ref: Option<P>,
    pub keep_iterates: bool,
    pub objective: Option<Arc<ObjectiveFn<P>>>,
    pub rate: Option<RateParams>,
    pub contraction: Option<ContractionCheck>,
}

impl<P: Point> Default for RunOptions<P> {
    fn default() -> Self {
        Self {
            p_ref: None,
            keep_iterates: false,
            objective: None,
            rate: None,
            contraction: None,
        }
    }
}

impl<P: Point> RunOptions<P> {
    pub fn with_reference(mut self, p: P) -> Self {
        self.p_ref = Some(p);
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn with_objective(mut self, f: impl Fn(&P) -> f64 + Send + Sync + 'static) -> Self {
        self.objective = Some(Arc::new(f));
        self
    }

    pub fn with_rate(mut self, alpha: f64, q_const: f64) -> Self {
        self.rate = Some(RateParams { alpha, q_const });
        self
    }

    pub fn with_contraction(mut self, q: Option<f64>, xi: f64) -> Self {
        self.contraction = Some(ContractionCheck { q, xi });
        self
    }
}

/// Step-`k` quantities of the quasi-contractive analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionRow {
    pub q_k: f64,
    /// `||x_{k+1} - p||^2`.
    pub next_dist_sq: f64,
    /// `Q_k ||y_k - p||^2 - xi lambda_k (1 - lambda_k) ||y_k - T y_k||^2`.
    pub step_bound: f64,
    /// `||x_{k+1} - p||^2 - alpha_k ||x_k - p||^2 + xi delta_{k+1}`.
    pub c_tilde_next: f64,
    /// `(prod_{j <= k} Q_j) ||x_1 - p||^2`.
    pub product_bound: f64,
}

/// Diagnostics for iteration `k`: the state `x_k` and the step that produced `x_{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `||y_k - T_k y_k||`.
    pub residual: f64,
    /// `||x_k - x_{k-1}||`.
    pub step: f64,
    pub nu_k: f64,
    /// `nu_{k-1} (1 - alpha_{k-1}) ||x_k - x_{k-1}||^2`.
    pub delta_k: f64,
    /// `||x_k - p||^2 - ||x_{k-1} - p||^2`.
    pub big_delta_k: Option<f64>,
    pub c_k: Option<f64>,
    pub dist_to_ref: Option<f64>,
    pub k_step_sq: f64,
    pub k_res_sq: f64,
    pub objective: Option<f64>,
    /// Worst-case bound on `||x_k - p||^2`, i.e. the linear rate after `k - 1` steps.
    pub rate_bound: Option<f64>,
    pub contraction: Option<ContractionRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    Stalled,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct Trace<P: Point> {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    /// The last computed iterate `x_{K+1}`.
    pub last: P,
    /// `x_1, ..., x_{K+1}` when requested.
    pub iterates: Option<Vec<P>>,
    pub metric: Metric<P>,
}

impl<P: Point> Trace<P> {
    pub fn final_residual(&self) -> Option<f64> {
        self.rows.last().map(|r| r.residual)
    }

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }
}

/// A failed run. Divergence carries the trace up to and including the step
/// that produced a non-finite iterate.
#[derive(Debug)]
pub enum RunError<P: Point> {
    Invalid(Error),
    Diverged { k: usize, trace: Box<Trace<P>> },
}

impl<P: Point> fmt::Display for RunError<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid(e) => write!(f, "{e}"),
            RunError::Diverged { k, .. } => write!(f, "iterate became non-finite at k = {k}"),
        }
    }
}

impl<P: Point> std::error::Error for RunError<P> {}

impl<P: Point> From<Error> for RunError<P> {
    fn from(e: Error) -> Self {
        RunError::Invalid(e)
    }
}

impl<P: Point> RunError<P> {
    pub fn trace(&self) -> Option<&Trace<P>> {
        match self {
            RunError::Diverged { trace, .. } => Some(trace),
            RunError::Invalid(_) => None,
        }
    }
}

struct Reference<P> {
    p: P,
    d1: f64,
    rate: Option<RateBound>,
}

/// Runs the iteration from `x1` until `residual <= residual_tol`, a stall, or
/// `max_iters` rows.
pub fn run<P: Point, F: OperatorFamily<P> + ?Sized>(
    family: &F,
    x1: P,
    schedule: &Schedule,
    stop: &StoppingRule,
    opts: &RunOptions<P>,
) -> std::result::Result<Trace<P>, RunError<P>> {
    let first = family.operator(1);
    if x1.shape() != first.shape() {
        return Err(Error::dims(first.shape(), x1.shape()).into());
    }
    if !x1.all_finite() {
        return Err(Error::NonFinite("initial point").into());
    }
    let metric = first.metric().clone();

    let reference = match &opts.p_ref {
        Some(p) => {
            if p.shape() != x1.shape() {
                return Err(Error::dims(x1.shape(), p.shape()).into());
            }
            let d1 = metric.norm_sq(&x1.lincomb(1.0, p, -1.0));
            let rate = opts
                .rate
                .map(|r| RateBound::new(r.alpha, r.q_const, d1))
                .transpose()?;
            Some(Reference { p: p.clone(), d1, rate })
        }
        None => None,
    };
    if reference.is_none() && (opts.rate.is_some() || opts.contraction.is_some()) {
        return Err(Error::MissingReference("rate and contraction diagnostics").into());
    }
    if let Some(c) = &opts.contraction {
        if schedule.lambda_seq().sup() > 1.0 {
            return Err(Error::Schedule("contraction diagnostics need lambda_k <= 1".into()).into());
        }
        if !(0.0..=1.0).contains(&c.xi) {
            return Err(Error::param("xi", c.xi, "must lie in [0, 1]").into());
        }
    }

    let mut rows = Vec::with_capacity(stop.max_iters.min(1 << 20));
    let mut iterates = opts.keep_iterates.then(|| vec![x1.clone()]);
    let mut x_prev = x1.clone();
    let mut x_curr = x1;
    let mut step = 0.0;
    let mut dist_sq = reference.as_ref().map(|r| r.d1);
    let mut prev_dist_sq = dist_sq;
    let mut product = 1.0;
    let mut status = RunStatus::MaxIters;

    for k in 1..=stop.max_iters {
        let op = family.operator(k);
        if op.shape() != x_curr.shape() {
            return Err(Error::dims(x_curr.shape(), op.shape()).into());
        }
        let (alpha, lambda) = (schedule.alpha(k), schedule.lambda(k));
        check_step_params(alpha, lambda)?;
        let (alpha_prev, nu_prev) = (schedule.alpha(k - 1), schedule.nu(k - 1));
        let nu = 1.0 / lambda - 1.0;

        let (y, ty, x_next) = advance(&x_curr, &x_prev, op, alpha, lambda);
        let residual = metric.dist(&y, &ty);
        let step_next = metric.dist(&x_next, &x_curr);
        let delta_k = if k == 1 {
            0.0
        } else {
            nu_prev * (1.0 - alpha_prev) * step * step
        };

        let mut row = TraceRow {
            k,
            residual,
            step,
            nu_k: nu,
            delta_k,
            big_delta_k: None,
            c_k: None,
            dist_to_ref: None,
            k_step_sq: k as f64 * step * step,
            k_res_sq: k as f64 * residual * residual,
            objective: opts.objective.as_ref().map(|f| f(&x_curr)),
            rate_bound: None,
            contraction: None,
        };

        let mut next_dist_sq = None;
        if let (Some(r), Some(d), Some(dp)) = (&reference, dist_sq, prev_dist_sq) {
            row.dist_to_ref = Some(d.sqrt());
            row.big_delta_k = Some(if k == 1 { 0.0 } else { d - dp });
            row.c_k = Some(if k == 1 { r.d1 } else { d - alpha_prev * dp + delta_k });
            row.rate_bound = r.rate.map(|b| b.bound_iterate(k));
            let nd = metric.norm_sq(&x_next.lincomb(1.0, &r.p, -1.0));
            next_dist_sq = Some(nd);
            if let Some(c) = &opts.contraction {
                let q = match c.q.or(op.q_factor()) {
                    Some(q) => q,
                    None => {
                        return Err(Error::Other(format!(
                            "operator `{}` has no q_factor for contraction diagnostics",
                            op.name()
                        ))
                        .into())
                    }
                };
                let q_k = q_value(lambda, q, c.xi)?;
                product *= q_k;
                let y_dist_sq = metric.norm_sq(&y.lincomb(1.0, &r.p, -1.0));
                let delta_next = nu * (1.0 - alpha) * step_next * step_next;
                row.contraction = Some(ContractionRow {
                    q_k,
                    next_dist_sq: nd,
                    step_bound: q_k * y_dist_sq - c.xi * lambda * (1.0 - lambda) * residual * residual,
                    c_tilde_next: nd - alpha * d + c.xi * delta_next,
                    product_bound: product * r.d1,
                });
            }
        }
        rows.push(row);

        if !x_next.all_finite() {
            let trace = Trace {
                rows,
                status: RunStatus::Diverged,
                last: x_next,
                iterates,
                metric,
            };
            return Err(RunError::Diverged {
                k,
                trace: Box::new(trace),
            });
        }
        if let Some(it) = iterates.as_mut() {
            it.push(x_next.clone());
        }
        x_prev = x_curr;
        x_curr = x_next;
        step = step_next;
        prev_dist_sq = dist_sq;
        dist_sq = next_dist_sq;

        if residual <= stop.residual_tol {
            status = RunStatus::Converged;
            break;
        }
        if stop.stall_tol.is_some_and(|t| step_next <= t) {
            status = RunStatus::Stalled;
            break;
        }
    }

    Ok(Trace {
        rows,
        status,
        last: x_curr,
        iterates,
        metric,
    })
}

/// Indices at which a trace inequality fails.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub violations: Vec<usize>,
    /// Largest `lhs - rhs` seen, before slack.
    pub worst_excess: f64,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.violations.first().copied()
    }

    fn record(&mut self, k: usize, lhs: f64, rhs: f64) {
        self.checked += 1;
        let excess = lhs - rhs;
        if self.checked == 1 || excess > self.worst_excess {
            self.worst_excess = excess;
        }
        if excess > CHECK_SLACK * (1.0 + rhs.abs()) || !lhs.is_finite() || !rhs.is_finite() {
            self.violations.push(k);
        }
    }
}

/// The one-step energy inequality, checked from consecutive trace rows:
///
/// `Delta_{k+1} + delta_{k+1} + nu_k alpha_k ||x_{k+1} - 2x_k + x_{k-1}||^2
///  <= alpha_k Delta_k + [alpha_k (1 + alpha_k) + nu_k alpha_k (1 - alpha_k)] ||x_k - x_{k-1}||^2`,
///
/// where the last two terms on the left are recovered from the exact identity
/// `delta_{k+1} + nu_k alpha_k ||.||^2 = nu_k alpha_k (1 - alpha_k) step_k^2
/// + lambda_k (1 - lambda_k) residual_k^2`.
pub fn verify_lemma1(rows: &[TraceRow], schedule: &Schedule) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for w in rows.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let (Some(d), Some(d_next)) = (r.big_delta_k, next.big_delta_k) else {
            return Err(Error::MissingReference("the one-step inequality needs Delta_k"));
        };
        let k = r.k;
        let (a, l) = (schedule.alpha(k), schedule.lambda(k));
        let nu = 1.0 / l - 1.0;
        let s2 = r.step * r.step;
        let lhs = d_next + nu * a * (1.0 - a) * s2 + l * (1.0 - l) * r.residual * r.residual;
        let rhs = a * d + (a * (1.0 + a) + nu * a * (1.0 - a)) * s2;
        report.record(k, lhs, rhs);
    }
    Ok(report)
}

/// The one-step energy inequality evaluated directly from iterates `x_1, x_2, ...` (with `x_0 = x_1`).
pub fn verify_lemma1_iterates<P: Point>(
    iterates: &[P],
    p_ref: &P,
    schedule: &Schedule,
    metric: &Metric<P>,
) -> CheckReport {
    let mut report = CheckReport::default();
    if iterates.len() < 2 {
        return report;
    }
    let dist: Vec<f64> = iterates
        .iter()
        .map(|x| metric.norm_sq(&x.lincomb(1.0, p_ref, -1.0)))
        .collect();
    for i in 0..iterates.len() - 1 {
        let k = i + 1;
        let (x_prev, x, x_next) = (&iterates[i.saturating_sub(1)], &iterates[i], &iterates[i + 1]);
        let (a, l) = (schedule.alpha(k), schedule.lambda(k));
        let nu = 1.0 / l - 1.0;
        let d_next = dist[i + 1] - dist[i];
        let d = if i == 0 { 0.0 } else { dist[i] - dist[i - 1] };
        let s2 = metric.norm_sq(&x.lincomb(1.0, x_prev, -1.0));
        let s_next2 = metric.norm_sq(&x_next.lincomb(1.0, x, -1.0));
        let second = x_next.lincomb(1.0, x, -2.0).lincomb(1.0, x_prev, 1.0);
        let lhs = d_next + nu * (1.0 - a) * s_next2 + nu * a * metric.norm_sq(&second);
        let rhs = a * d + (a * (1.0 + a) + nu * a * (1.0 - a)) * s2;
        report.record(k, lhs, rhs);
    }
    report
}

/// First `k` with `C_{k+1} > C_k + slack (1 + |C_k|)` or `C_k < -slack`, from `k0` on.
pub fn verify_ck_monotone_from(rows: &[TraceRow], k0: usize) -> Result<Option<usize>> {
    let mut prev: Option<f64> = None;
    for r in rows.iter().filter(|r| r.k >= k0) {
        let c = r.c_k.ok_or(Error::MissingReference("C_k needs a reference point"))?;
        if c < -CHECK_SLACK || !c.is_finite() {
            return Ok(Some(r.k));
        }
        if let Some(p) = prev {
            if c > p + CHECK_SLACK * (1.0 + p.abs()) {
                return Ok(Some(r.k));
            }
        }
        prev = Some(c);
    }
    Ok(None)
}

pub fn verify_ck_monotone(rows: &[TraceRow]) -> Result<Option<usize>> {
    verify_ck_monotone_from(rows, 1)
}

/// The per-step contraction bound and the certificate product bound at every row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContractionReport {
    pub per_step: CheckReport,
    pub product: CheckReport,
}

pub fn verify_contraction(rows: &[TraceRow]) -> Result<ContractionReport> {
    let mut report = ContractionReport::default();
    for r in rows {
        let c = r
            .contraction
            .ok_or(Error::MissingReference("run without contraction diagnostics"))?;
        report.per_step.record(r.k, c.next_dist_sq, c.step_bound);
        report.product.record(r.k, c.c_tilde_next, c.product_bound);
    }
    Ok(report)
}

/// Contraction diagnostics recomputed from the exported columns of a trace.
///
/// `||y_k - p||^2 = (1 + alpha_k) d_k - alpha_k d_{k-1} + alpha_k (1 + alpha_k) step_k^2`
/// supplies the only quantity the columns lack. The last row has no successor
/// and is dropped; `d1` is the squared distance of the first row.
pub fn contraction_from_rows(
    rows: &[TraceRow],
    schedule: &Schedule,
    q: impl Fn(usize) -> f64,
    xi: f64,
) -> Result<Vec<ContractionRow>> {
    let dist_sq = |r: &TraceRow| {
        r.dist_to_ref
            .map(|d| d * d)
            .ok_or(Error::MissingReference("contraction diagnostics need dist_to_ref"))
    };
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let d1 = dist_sq(first)?;
    let mut out = Vec::with_capacity(rows.len().saturating_sub(1));
    let mut product = 1.0;
    let mut d_prev = d1;
    for w in rows.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let (a, l) = (schedule.alpha(r.k), schedule.lambda(r.k));
        let d = dist_sq(r)?;
        let nd = dist_sq(next)?;
        let q_k = q_value(l, q(r.k), xi)?;
        product *= q_k;
        let y_dist_sq = (1.0 + a) * d - a * d_prev + a * (1.0 + a) * r.step * r.step;
        let nu = 1.0 / l - 1.0;
        out.push(ContractionRow {
            q_k,
            next_dist_sq: nd,
            step_bound: q_k * y_dist_sq - xi * l * (1.0 - l) * r.residual * r.residual,
            c_tilde_next: nd - a * d + xi * nu * (1.0 - a) * next.step * next.step,
            product_bound: product * d1,
        });
        d_prev = d;
    }
    Ok(out)
}

/// Per-step and product checks over recomputed contraction rows.
pub fn verify_contraction_rows(rows: &[TraceRow], diag: &[ContractionRow]) -> ContractionReport {
    let mut report = ContractionReport::default();
    for (r, c) in rows.iter().zip(diag) {
        report.per_step.record(r.k, c.next_dist_sq, c.step_bound);
        report.product.record(r.k, c.c_tilde_next, c.product_bound);
    }
    report
}

/// Rows where `||x_k - p||^2` exceeds the rate bound by more than `tol`.
pub fn rate_violations(rows: &[TraceRow], tol: f64) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for r in rows {
        let (Some(d), Some(b)) = (r.dist_to_ref, r.rate_bound) else {
            return Err(Error::MissingReference("rate bound needs a reference point"));
        };
        if d * d - b > tol {
            out.push(r.k);
        }
    }
    Ok(out)
}

/// `hat zeta_k = sup_{j >= k} zeta_j`, the smallest nonincreasing majorant.
pub fn tail_sup_envelope(seq: &[f64]) -> Vec<f64> {
    let mut out = seq.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

/// Finite-sample proxy for `k zeta_k -> 0` on a nonincreasing, nonnegative
/// sequence `zeta_1, zeta_2, ...`: the largest `k zeta_k` over the last
/// quarter must be below a tenth of the largest over the first quarter.
pub fn small_o_check(zeta: &[f64]) -> Result<bool> {
    if zeta.len() < 4 {
        return Err(Error::Other("small_o_check needs at least 4 terms".into()));
    }
    if let Some(&z) = zeta.iter().find(|z| !(z.is_finite() && **z >= 0.0)) {
        return Err(Error::param("zeta", z, "terms must be finite and >= 0"));
    }
    if let Some(i) = zeta.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::NotMonotone { index: i + 2 });
    }
    let n = zeta.len();
    let quarter = n / 4;
    let weighted = |range: std::ops::Range<usize>| {
        range
            .map(|i| (i + 1) as f64 * zeta[i])
            .fold(0.0_f64, f64::max)
    };
    let head = weighted(0..quarter);
    let tail = weighted(n - quarter..n);
    Ok(if head == 0.0 { tail == 0.0 } else { tail < 0.1 * head })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{LinearMap, Vector};
    use crate::operators::{
        douglas_rachford_op, forward_backward_op, gradient_step_op, proximal_op, ProxFriendlyFunction,
        SmoothQuadratic,
    };
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn randn(rng: &mut SplitMix64, n: usize) -> Vector {
        Vector::new(rng.gaussian_vec(n)).unwrap()
    }

    fn diag_quadratic(d: &[f64], b: &[f64]) -> SmoothQuadratic {
        SmoothQuadratic::new(LinearMap::diagonal(d), Vector::new(b.to_vec()).unwrap()).unwrap()
    }

    fn lasso(seed: u64) -> (SmoothQuadratic, ProxFriendlyFunction) {
        let mut rng = SplitMix64::new(seed);
        let a = LinearMap::new(12, 6, rng.gaussian_vec(72)).unwrap();
        let b = randn(&mut rng, 12);
        (
            SmoothQuadratic::least_squares(&a, &b).unwrap(),
            ProxFriendlyFunction::l1(0.3).unwrap(),
        )
    }

    fn tight_fixed_point(op: &OperatorHandle<Vector>, dim: usize) -> Vector {
        let stop = StoppingRule::new(200_000, 1e-14).unwrap();
        let s = Schedule::constant(0.0, 1.0).unwrap();
        run(op, Vector::zeros(dim), &s, &stop, &RunOptions::default())
            .unwrap()
            .last
    }

    #[test]
    fn km_step_examples() {
        let q = diag_quadratic(&[1.0, 3.0], &[1.0, -1.0]);
        let op = gradient_step_op(&q, 0.4).unwrap();
        let x = Vector::new(vec![2.0, 5.0]).unwrap();
        let s = km_step(&IterateState::new(x.clone()), &op, 0.0, 1.0).unwrap();
        assert_eq!(s.x_curr, op.apply(&x).unwrap());
        assert_eq!(s.k, 2);
        assert_eq!(s.x_prev, x);

        let id = OperatorHandle::<Vector>::identity(2);
        let s = km_step(&IterateState::new(x.clone()), &id, 0.0, 0.5).unwrap();
        assert_eq!(s.x_curr, x);

        let p = Vector::new(vec![1.0, -1.0 / 3.0]).unwrap();
        for &(a, l) in &[(0.0, 0.5), (0.3, 0.9), (0.9, 1.2)] {
            let s = km_step(&IterateState::new(p.clone()), &op, a, l).unwrap();
            assert!(s.x_curr.sub_raw(&p).norm_inf() < 1e-15);
        }
    }

    #[test]
    fn km_step_rejects_bad_parameters() {
        let id = OperatorHandle::<Vector>::identity(2);
        let s = IterateState::new(Vector::zeros(2));
        assert!(km_step(&s, &id, 1.0, 0.5).is_err());
        assert!(km_step(&s, &id, -0.1, 0.5).is_err());
        assert!(km_step(&s, &id, 0.1, 0.0).is_err());
        assert!(km_step(&IterateState::new(Vector::zeros(3)), &id, 0.1, 0.5).is_err());
    }

    #[test]
    fn km_step_reports_divergence() {
        let blow = OperatorHandle::<Vector>::new("blow", 1, |x: &Vector| x.scale(f64::MAX));
        let s = IterateState::new(Vector::filled(1, 10.0));
        assert_eq!(km_step(&s, &blow, 0.0, 1.0), Err(Error::Divergence { k: 1 }));
    }

    #[test]
    fn identity_run_stops_at_first_row() {
        let id = OperatorHandle::<Vector>::identity(3);
        let x = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let t = run(
            &id,
            x,
            &Schedule::constant(0.3, 0.5).unwrap(),
            &StoppingRule::new(100, 0.0).unwrap(),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].k, 1);
        assert_eq!(t.rows[0].residual, 0.0);
        assert_eq!(t.status, RunStatus::Converged);
    }

    #[test]
    fn gradient_distance_decays_by_q_factor() {
        let q = diag_quadratic(&[1.0, 4.0, 10.0], &[1.0, 2.0, 3.0]);
        let op = gradient_step_op(&q, 2.0 / 11.0).unwrap();
        let qf = op.q_factor().unwrap();
        let p = Vector::new(vec![1.0, 0.5, 0.3]).unwrap();
        let t = run(
            &op,
            Vector::filled(3, 5.0),
            &Schedule::constant(0.0, 1.0).unwrap(),
            &StoppingRule::new(300, 1e-13).unwrap(),
            &RunOptions::default().with_reference(p),
        )
        .unwrap();
        for w in t.rows.windows(2) {
            let (a, b) = (w[0].dist_to_ref.unwrap(), w[1].dist_to_ref.unwrap());
            assert!(b <= (qf + 1e-9) * a + 1e-15);
        }
        assert_eq!(t.status, RunStatus::Converged);
    }

    #[test]
    fn row_definitions_hold() {
        let (quad, f) = lasso(3);
        let op = forward_backward_op(&f, &quad, 1.0 / quad.lipschitz()).unwrap();
        let p = tight_fixed_point(&op, 6);
        let s = Schedule::new(
            Sequence::Ramp {
                start: 0.0,
                end: 0.25,
                len: 10,
            },
            Sequence::Constant(0.6),
        )
        .unwrap();
        let t = run(
            &op,
            Vector::filled(6, 1.0),
            &s,
            &StoppingRule::new(60, 0.0).unwrap(),
            &RunOptions::default().with_reference(p.clone()).keeping_iterates(),
        )
        .unwrap();
        let xs = t.iterates.as_ref().unwrap();
        assert_eq!(xs.len(), t.rows.len() + 1);
        let d = |x: &Vector| x.sub_raw(&p).norm_sq();
        for (i, r) in t.rows.iter().enumerate() {
            let k = r.k;
            assert_eq!(k, i + 1);
            let x_prev = &xs[i.saturating_sub(1)];
            let step = xs[i].sub_raw(x_prev).norm();
            assert!((r.step - step).abs() <= 1e-14 * (1.0 + step));
            let delta = s.nu(k - 1) * (1.0 - s.alpha(k - 1)) * step * step;
            assert!((r.delta_k - if k == 1 { 0.0 } else { delta }).abs() <= 1e-14);
            let c = d(&xs[i]) - s.alpha(k - 1) * d(x_prev) + r.delta_k;
            assert!((r.c_k.unwrap() - c).abs() <= 1e-12 * (1.0 + c.abs()));
            assert!((r.k_step_sq - k as f64 * step * step).abs() <= 1e-12);
        }
        assert_eq!(t.rows[0].big_delta_k, Some(0.0));
        assert_eq!(t.rows[0].c_k, Some(d(&xs[0])));
    }

    #[test]
    fn reconstruction_identity() {
        let (quad, f) = lasso(5);
        let op = forward_backward_op(&f, &quad, 1.2 / quad.lipschitz()).unwrap();
        let s = Schedule::constant(0.3, 0.7).unwrap();
        let t = run(
            &op,
            Vector::filled(6, -2.0),
            &s,
            &StoppingRule::new(80, 0.0).unwrap(),
            &RunOptions::default().keeping_iterates(),
        )
        .unwrap();
        let xs = t.iterates.unwrap();
        for (i, r) in t.rows.iter().enumerate() {
            let (a, l) = (s.alpha(r.k), s.lambda(r.k));
            let d1 = xs[i + 1].sub_raw(&xs[i]);
            let d0 = xs[i].sub_raw(&xs[i.saturating_sub(1)]);
            let rhs = d1.norm_sq() + a * a * d0.norm_sq() - 2.0 * a * d1.dot(&d0).unwrap();
            let lhs = l * l * r.residual * r.residual;
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }

    #[test]
    fn picard_is_bit_identical() {
        let (quad, f) = lasso(7);
        let op = forward_backward_op(&f, &quad, 1.0 / quad.lipschitz()).unwrap();
        let mut x = Vector::filled(6, 0.7);
        let t = run(
            &op,
            x.clone(),
            &Schedule::constant(0.0, 1.0).unwrap(),
            &StoppingRule::new(25, 0.0).unwrap(),
            &RunOptions::default().keeping_iterates(),
        )
        .unwrap();
        for it in t.iterates.unwrap().iter().skip(1) {
            x = op.apply(&x).unwrap();
            let same = it.as_slice().iter().zip(x.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same);
        }
    }

    #[test]
    fn lemma1_holds_for_fb_without_inertia() {
        let (quad, f) = lasso(11);
        let op = forward_backward_op(&f, &quad, 1.0 / quad.lipschitz()).unwrap();
        let p = tight_fixed_point(&op, 6);
        let s = Schedule::constant(0.0, 0.8).unwrap();
        let t = run(
            &op,
            Vector::filled(6, 3.0),
            &s,
            &StoppingRule::new(500, 0.0).unwrap(),
            &RunOptions::default().with_reference(p.clone()).keeping_iterates(),
        )
        .unwrap();
        assert!(verify_lemma1(&t.rows, &s).unwrap().ok());
        let direct = verify_lemma1_iterates(t.iterates.as_ref().unwrap(), &p, &s, &t.metric);
        assert!(direct.ok(), "{direct:?}");
        assert_eq!(verify_ck_monotone(&t.rows).unwrap(), None);
    }

    #[test]
    fn lemma1_and_ck_for_inertial_dr() {
        let n = 5;
        let fa = ProxFriendlyFunction::boxed(-0.5, 2.0).unwrap();
        let fb = ProxFriendlyFunction::Quadratic(SmoothQuadratic::squared_distance(
            Vector::new(vec![3.0, -1.0, 0.2, 1.0, -4.0]).unwrap(),
        ));
        let op = douglas_rachford_op(&fa, &fb, 0.7, n).unwrap();
        let p = tight_fixed_point(&op, n);
        // DR is 1/2-averaged: alpha = 0.2, lambda = 1 gives eta = 0.5 < 0.64/0.88
        let s = Schedule::constant(0.2, 1.0).unwrap();
        let t = run(
            &op,
            Vector::filled(n, 6.0),
            &s,
            &StoppingRule::new(10_000, 0.0).unwrap(),
            &RunOptions::default().with_reference(p.clone()).keeping_iterates(),
        )
        .unwrap();
        let direct = verify_lemma1_iterates(t.iterates.as_ref().unwrap(), &p, &s, &t.metric);
        assert!(direct.ok(), "{:?}", direct.first_violation());
        assert!(verify_lemma1(&t.rows, &s).unwrap().ok());
    }

    #[test]
    fn lemma1_flags_corrupted_iterate() {
        let (quad, f) = lasso(13);
        let op = forward_backward_op(&f, &quad, 1.0 / quad.lipschitz()).unwrap();
        let p = tight_fixed_point(&op, 6);
        let s = Schedule::constant(0.2, 0.5).unwrap();
        let t = run(
            &op,
            Vector::filled(6, 1.0),
            &s,
            &StoppingRule::new(200, 0.0).unwrap(),
            &RunOptions::default().with_reference(p.clone()).keeping_iterates(),
        )
        .unwrap();
        let mut xs = t.iterates.unwrap();
        assert!(verify_lemma1_iterates(&xs, &p, &s, &t.metric).ok());
        let j = 120;
        xs[j] = xs[j].add_raw(&Vector::filled(6, 1.0));
        let r = verify_lemma1_iterates(&xs, &p, &s, &t.metric);
        // x_{j+1} is perturbed; the check at k = j (which reaches x_{j+1}) fails first
        assert_eq!(r.first_violation(), Some(j));
    }

    #[test]
    fn ck_monotone_examples() {
        let f = ProxFriendlyFunction::l1(1.0).unwrap();
        let op = proximal_op(&f, 0.5, 4).unwrap();
        let p = Vector::zeros(4);
        let x1 = Vector::new(vec![5.0, -3.0, 2.0, 0.5]).unwrap();
        let opts = RunOptions::default().with_reference(p);
        let stop = StoppingRule::new(200, 0.0).unwrap();
        for s in [Schedule::constant(0.2, 0.5).unwrap(), Schedule::constant(0.0, 0.9).unwrap()] {
            let t = run(&op, x1.clone(), &s, &stop, &opts).unwrap();
            assert_eq!(verify_ck_monotone(&t.rows).unwrap(), None);
        }
        // run still completes for an infeasible schedule; violations are found
        let rot = {
            let (c, s) = (0.9_f64.cos(), 0.9_f64.sin());
            LinearMap::from_rows(&[vec![c, -s], vec![s, c]]).unwrap()
        };
        let op = OperatorHandle::<Vector>::new("rotation", 2, move |x: &Vector| rot.apply(x).unwrap());
        let s = Schedule::constant(0.9, 0.99).unwrap();
        let t = run(
            &op,
            Vector::new(vec![1.0, 0.0]).unwrap(),
            &s,
            &stop,
            &RunOptions::default().with_reference(Vector::zeros(2)),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 200);
        assert!(verify_ck_monotone(&t.rows).unwrap().is_some());
        assert!(verify_ck_monotone(&[t.rows[0].clone()]).is_ok());
        let mut bare = t.rows[0].clone();
        bare.c_k = None;
        assert!(verify_ck_monotone(&[bare]).is_err());
    }

    #[test]
    fn divergence_returns_partial_trace() {
        let q = diag_quadratic(&[1.0, 2.0], &[0.0, 0.0]);
        let op = gradient_step_op(&q, 0.9).unwrap();
        let err = run(
            &op,
            Vector::filled(2, 1.0),
            &Schedule::constant(0.0, 30.0).unwrap(),
            &StoppingRule::new(10_000, 1e-12).unwrap(),
            &RunOptions::default(),
        )
        .unwrap_err();
        match err {
            RunError::Diverged { k, trace } => {
                assert_eq!(trace.rows.len(), k);
                assert_eq!(trace.status, RunStatus::Diverged);
                assert!(k > 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contraction_diagnostics_hold() {
        let q = diag_quadratic(&[1.0, 2.5, 10.0], &[1.0, -2.0, 4.0]);
        let op = gradient_step_op(&q, 2.0 / 11.0).unwrap();
        let qf = op.q_factor().unwrap();
        let alpha = 0.05;
        let lambda = crate::certificates::lambda_alpha_q(alpha, qf).unwrap().lambda;
        let s = Schedule::constant(alpha, lambda).unwrap();
        let big_q = q_value(lambda, qf, 1.0).unwrap();
        let p = Vector::new(vec![1.0, -0.8, 0.4]).unwrap();
        let t = run(
            &op,
            Vector::filled(3, 10.0),
            &s,
            &StoppingRule::new(5000, 1e-12).unwrap(),
            &RunOptions::default()
                .with_reference(p)
                .with_contraction(None, 1.0)
                .with_rate(alpha, big_q),
        )
        .unwrap();
        let c = verify_contraction(&t.rows).unwrap();
        assert!(c.per_step.ok() && c.product.ok());
        assert!(rate_violations(&t.rows, 1e-10).unwrap().is_empty());
        assert_eq!(t.status, RunStatus::Converged);
    }

    #[test]
    fn contraction_from_columns_matches_direct_rows() {
        let q = diag_quadratic(&[1.0, 4.0, 10.0], &[2.0, -1.0, 3.0]);
        let op = gradient_step_op(&q, 2.0 / 11.0).unwrap();
        let qf = op.q_factor().unwrap();
        let s = Schedule::constant(0.1, 0.6).unwrap();
        let p = Vector::new(vec![2.0, -0.25, 0.3]).unwrap();
        let t = run(
            &op,
            Vector::new(vec![5.0, 3.0, -4.0]).unwrap(),
            &s,
            &StoppingRule::new(200, 1e-12).unwrap(),
            &RunOptions::default().with_reference(p).with_contraction(None, 0.7),
        )
        .unwrap();
        let rebuilt = contraction_from_rows(&t.rows, &s, |_| qf, 0.7).unwrap();
        assert_eq!(rebuilt.len(), t.rows.len() - 1);
        for (r, c) in t.rows.iter().zip(&rebuilt) {
            let d = r.contraction.unwrap();
            let scale = 1.0 + d.step_bound.abs();
            assert!((d.step_bound - c.step_bound).abs() <= 1e-10 * scale, "k={}", r.k);
            assert!((d.c_tilde_next - c.c_tilde_next).abs() <= 1e-10 * (1.0 + d.c_tilde_next.abs()));
            assert!((d.product_bound - c.product_bound).abs() <= 1e-12 * (1.0 + d.product_bound));
        }
        let report = verify_contraction_rows(&t.rows, &rebuilt);
        assert!(report.per_step.ok() && report.product.ok());
    }

    #[test]
    fn run_option_errors() {
        let id = OperatorHandle::<Vector>::identity(2);
        let s = Schedule::constant(0.0, 0.5).unwrap();
        let stop = StoppingRule::new(10, 0.0).unwrap();
        let opts = RunOptions::<Vector>::default().with_rate(0.1, 0.5);
        assert!(matches!(
            run(&id, Vector::zeros(2), &s, &stop, &opts),
            Err(RunError::Invalid(Error::MissingReference(_)))
        ));
        assert!(run(&id, Vector::zeros(3), &s, &stop, &RunOptions::default()).is_err());
        let opts = RunOptions::default()
            .with_reference(Vector::zeros(2))
            .with_contraction(None, 1.0);
        assert!(run(&id, Vector::zeros(2), &s, &stop, &opts).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::constant(1.0, 0.5).is_err());
        assert!(Schedule::constant(0.2, 0.0).is_err());
        assert!(Schedule::new(Sequence::Table(vec![0.1, 0.3, 0.2]), Sequence::Constant(0.5)).is_err());
        assert!(Schedule::new(Sequence::Table(vec![]), Sequence::Constant(0.5)).is_err());
        assert!(Schedule::new(
            Sequence::Ramp {
                start: 0.4,
                end: 0.1,
                len: 5
            },
            Sequence::Constant(0.5)
        )
        .is_err());
        let s = Schedule::new(
            Sequence::Ramp {
                start: 0.0,
                end: 0.3,
                len: 4,
            },
            Sequence::Table(vec![0.2, 0.4]),
        )
        .unwrap();
        assert_eq!(s.alpha(0), 0.0);
        assert_eq!(s.alpha(1), 0.0);
        assert!((s.alpha(2) - 0.1).abs() < 1e-15);
        assert_eq!(s.alpha(4), 0.3);
        assert_eq!(s.alpha(100), 0.3);
        assert_eq!(s.lambda(0), 0.2);
        assert_eq!(s.lambda(50), 0.4);
        assert!(s.lambda_inf_positive());
        assert!(!s.is_constant());
        assert!(Schedule::constant(0.1, 0.3).unwrap().is_constant());
    }

    #[test]
    fn operator_sequence_holds_last() {
        let a = OperatorHandle::<Vector>::identity(2);
        let b = OperatorHandle::<Vector>::new("half", 2, |x: &Vector| x.scale(0.5));
        let seq = OperatorSequence::new(vec![a.clone(), b]).unwrap();
        assert_eq!(seq.operator(1).name(), "identity");
        assert_eq!(seq.operator(2).name(), "half");
        assert_eq!(seq.operator(9).name(), "half");
        assert!(OperatorSequence::new(vec![a, OperatorHandle::<Vector>::identity(3)]).is_err());
        assert!(OperatorSequence::<Vector>::new(vec![]).is_err());
    }

    #[test]
    fn small_o_examples() {
        let n = 10_000;
        let inv_sq: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64 * k as f64)).collect();
        assert!(small_o_check(&inv_sq).unwrap());
        let inv: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
        assert!(!small_o_check(&inv).unwrap());
        assert!(small_o_check(&[0.0; 8]).unwrap());
        assert!(matches!(
            small_o_check(&[1.0, 0.5, 0.6, 0.1]),
            Err(Error::NotMonotone { index: 3 })
        ));
        assert!(small_o_check(&[1.0, -0.5, -0.6, -1.0]).is_err());
        assert!(small_o_check(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn small_o_on_feasible_inertial_run() {
        let (quad, f) = lasso(17);
        let op = forward_backward_op(&f, &quad, 1.0 / quad.lipschitz()).unwrap();
        let t = run(
            &op,
            Vector::filled(6, 2.0),
            &Schedule::constant(0.2, 0.5).unwrap(),
            &StoppingRule::new(4000, 0.0).unwrap(),
            &RunOptions::default(),
        )
        .unwrap();
        let steps: Vec<f64> = t.rows.iter().skip(1).map(|r| r.step * r.step).collect();
        assert!(small_o_check(&tail_sup_envelope(&steps)).unwrap());
    }

    #[test]
    fn envelope_is_least_nonincreasing_majorant() {
        let e = tail_sup_envelope(&[1.0, 3.0, 2.0, 0.5, 0.7, 0.1]);
        assert_eq!(e, vec![3.0, 3.0, 2.0, 0.7, 0.7, 0.1]);
        assert!(tail_sup_envelope(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn fixed_point_is_absorbing(
            a in 0.0..0.99f64,
            l in 0.01..1.0f64,
            seed in 0u64..1000,
        ) {
            let mut rng = SplitMix64::new(seed);
            let p = randn(&mut rng, 4);
            let center = p.clone();
            let op = OperatorHandle::<Vector>::new("contract", 4, move |x: &Vector| {
                x.lincomb_raw(0.5, &center, 0.5)
            });
            let s = km_step(&IterateState::new(p.clone()), &op, a, l).unwrap();
            prop_assert!(s.x_curr.sub_raw(&p).norm_inf() <= 1e-15 * (1.0 + p.norm_inf()));
        }

        #[test]
        fn reconstruction_identity_random(
            a in 0.0..0.9f64,
            l in 0.05..1.5f64,
            seed in 0u64..500,
        ) {
            let mut rng = SplitMix64::new(seed);
            let q = SmoothQuadratic::new(
                LinearMap::diagonal(&[0.5, 1.0, 2.0]),
                randn(&mut rng, 3),
            ).unwrap();
            let op = gradient_step_op(&q, 0.6).unwrap();
            let s = Schedule::constant(a, l).unwrap();
            let t = run(&op, randn(&mut rng, 3), &s, &StoppingRule::new(30, 0.0).unwrap(),
                &RunOptions::default().keeping_iterates()).unwrap();
            let xs = t.iterates.unwrap();
            for (i, r) in t.rows.iter().enumerate() {
                let d1 = xs[i + 1].sub_raw(&xs[i]);
                let d0 = xs[i].sub_raw(&xs[i.saturating_sub(1)]);
                let rhs = d1.norm_sq() + a * a * d0.norm_sq() - 2.0 * a * d1.dot(&d0).unwrap();
                let lhs = l * l * r.residual * r.residual;
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())));
            }
        }
    }
}
