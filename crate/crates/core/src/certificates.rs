//! Closed-form parameter conditions and rate constants for inertial KM
//! iterations.
//!
//! Strict conditions are satisfied only when the margin `rhs - lhs` is
//! positive; there is no epsilon grace. Conditions stated with `<= 0` are
//! satisfied when the margin is nonnegative.

use std::fmt;
use std::ops::RangeInclusive;

use crate::engine::Schedule;
use crate::error::{Error, Result};

/// Fraction of evaluated indices treated as the tail when approximating a limsup.
pub const TAIL_FRACTION: f64 = 0.25;

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITERS: usize = 200;

/// One evaluated inequality `lhs < rhs` (strict) or `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub strict: bool,
    pub satisfied: bool,
}

impl Inequality {
    pub fn strict(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            strict: true,
            satisfied: margin > 0.0,
        }
    }

    pub fn non_strict(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            strict: false,
            satisfied: margin >= 0.0,
        }
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.strict { "<" } else { "<=" };
        write!(
            f,
            "{:<10} {}  lhs={:.12e} {rel} rhs={:.12e}  margin={:.6e}",
            self.name,
            if self.satisfied { "pass" } else { "FAIL" },
            self.lhs,
            self.rhs,
            self.margin
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub entries: Vec<Inequality>,
    /// First index at which a sequence condition fails.
    pub first_violating_k: Option<usize>,
    /// Least `k0` such that the condition holds at every evaluated `k >= k0`.
    pub first_satisfied_k: Option<usize>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn entry(&self, name: &str) -> Option<&Inequality> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn merge(&mut self, other: FeasibilityReport) {
        self.entries.extend(other.entries);
        self.notes.extend(other.notes);
        self.first_violating_k = match (self.first_violating_k, other.first_violating_k) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.first_satisfied_k = match (self.first_satisfied_k, other.first_satisfied_k) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        if let Some(k) = self.first_violating_k {
            writeln!(f, "first violating k: {k}")?;
        }
        if let Some(k) = self.first_satisfied_k {
            writeln!(f, "holds from k: {k}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", alpha, "must lie in [0, 1)"));
    }
    Ok(())
}

fn check_unit(name: &'static str, v: f64, open_left: bool) -> Result<()> {
    let ok = if open_left {
        v > 0.0 && v <= 1.0
    } else {
        (0.0..=1.0).contains(&v)
    };
    if !ok {
        let range = if open_left { "(0, 1]" } else { "[0, 1]" };
        return Err(Error::param(name, v, format!("must lie in {range}")));
    }
    Ok(())
}

/// `Q(lambda, q, xi) = xi (1 - lambda + lambda q^2) + (1 - xi)(1 - lambda + lambda q)^2`.
pub fn q_value(lambda: f64, q: f64, xi: f64) -> Result<f64> {
    check_unit("lambda", lambda, true)?;
    check_unit("q", q, true)?;
    check_unit("xi", xi, false)?;
    Ok(q_convex(lambda, q, xi))
}

/// Both algebraic forms of `Q`: the convex combination and the completed square
/// `(1 - lambda + lambda q)^2 + xi lambda (1 - lambda)(1 - q)^2`.
pub fn q_value_forms(lambda: f64, q: f64, xi: f64) -> Result<(f64, f64)> {
    let a = q_value(lambda, q, xi)?;
    let s = 1.0 - lambda + lambda * q;
    let b = s * s + xi * lambda * (1.0 - lambda) * (1.0 - q) * (1.0 - q);
    Ok((a, b))
}

fn q_convex(lambda: f64, q: f64, xi: f64) -> f64 {
    let s = 1.0 - lambda + lambda * q;
    xi * (1.0 - lambda + lambda * q * q) + (1.0 - xi) * s * s
}

/// `lambda_eff (1 - alpha + 2 alpha^2) < (1 - alpha)^2`, where `lambda_eff = gamma lambda`
/// for a `gamma`-averaged operator.
pub fn check_h1_constant(alpha: f64, lambda_eff: f64) -> Inequality {
    let lhs = lambda_eff * (1.0 - alpha + 2.0 * alpha * alpha);
    let rhs = (1.0 - alpha) * (1.0 - alpha);
    Inequality::strict("H1", lhs, rhs)
}

/// `alpha_k (1 + alpha_k) + nu_k alpha_k (1 - alpha_k) - nu_{k-1} (1 - alpha_{k-1})`
/// with `nu_k = 1/lambda_k - 1`. Defined for `k >= 2`.
pub fn h1_expression(schedule: &Schedule, k: usize) -> f64 {
    debug_assert!(k >= 2);
    let a = schedule.alpha(k);
    let a_prev = schedule.alpha(k - 1);
    let nu = 1.0 / schedule.lambda(k) - 1.0;
    let nu_prev = 1.0 / schedule.lambda(k - 1) - 1.0;
    a * (1.0 + a) + nu * a * (1.0 - a) - nu_prev * (1.0 - a_prev)
}

/// Evaluates the sequence conditions over `k_range`.
///
/// `H1_0` is the non-strict per-index form (sup over all evaluated indices,
/// with the first violation and the first index from which it holds).
/// `H1_tail` is the strict limsup condition, approximated by the supremum over
/// the last `tail_fraction` of the evaluated indices.
///
/// Indices below 2 are skipped: at `k = 1` the expression multiplies
/// `||x_1 - x_0||^2 = 0` and constrains nothing.
pub fn check_h1_seq(
    schedule: &Schedule,
    k_range: RangeInclusive<usize>,
    tail_fraction: f64,
) -> Result<FeasibilityReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param("tail_fraction", tail_fraction, "must lie in (0, 1]"));
    }
    let start = (*k_range.start()).max(2);
    let end = *k_range.end();
    if end < start {
        return Err(Error::Other(format!("empty index range {start}..={end}")));
    }
    let values: Vec<f64> = (start..=end).map(|k| h1_expression(schedule, k)).collect();
    let n = values.len();
    let tail_len = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let sup_all = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sup_tail = values[n - tail_len..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);

    let first_violating_k = values.iter().position(|&v| v > 0.0).map(|i| start + i);
    let first_satisfied_k = match values.iter().rposition(|&v| v > 0.0) {
        None => Some(start),
        Some(i) if i + 1 < n => Some(start + i + 1),
        Some(_) => None,
    };

    Ok(FeasibilityReport {
        entries: vec![
            Inequality::non_strict("H1_0", sup_all, 0.0),
            Inequality::strict("H1_tail", sup_tail, 0.0),
        ],
        first_violating_k,
        first_satisfied_k,
        notes: vec![format!(
            "limsup approximated over k in {}..={end}; tail-satisfied, not proved",
            end + 1 - tail_len
        )],
    })
}

/// `Q alpha (1 + alpha) + xi nu alpha (1 - alpha) - xi Q nu (1 - alpha) <= 0` for
/// constant parameters, `nu = (1 - lambda) / lambda`.
pub fn check_h2(alpha: f64, lambda: f64, q: f64, xi: f64) -> Result<Inequality> {
    check_alpha(alpha)?;
    let big_q = q_value(lambda, q, xi)?;
    let nu = (1.0 - lambda) / lambda;
    let lhs = big_q * alpha * (1.0 + alpha) + xi * nu * alpha * (1.0 - alpha)
        - xi * big_q * nu * (1.0 - alpha);
    Ok(Inequality::non_strict("H2", lhs, 0.0))
}

/// Per-index evaluation of the quasi-contractive condition with `Q_k = Q(lambda_k, q_k, xi)`.
/// Reports the worst value and the first violating index. Starts at `k = 2` for the
/// same reason as [`check_h1_seq`].
pub fn check_h2_seq(
    schedule: &Schedule,
    q: impl Fn(usize) -> f64,
    xi: f64,
    k_range: RangeInclusive<usize>,
) -> Result<FeasibilityReport> {
    let start = (*k_range.start()).max(2);
    let end = *k_range.end();
    if end < start {
        return Err(Error::Other(format!("empty index range {start}..={end}")));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut first_violating_k = None;
    let mut last_violation = None;
    for k in start..=end {
        let (a, a_prev) = (schedule.alpha(k), schedule.alpha(k - 1));
        let (l, l_prev) = (schedule.lambda(k), schedule.lambda(k - 1));
        let big_q = q_value(l, q(k), xi)?;
        let nu = (1.0 - l) / l;
        let nu_prev = (1.0 - l_prev) / l_prev;
        let v = big_q * a * (1.0 + a) + xi * nu * a * (1.0 - a) - xi * big_q * nu_prev * (1.0 - a_prev);
        worst = worst.max(v);
        if v > 0.0 {
            first_violating_k.get_or_insert(k);
            last_violation = Some(k);
        }
    }
    let first_satisfied_k = match last_violation {
        None => Some(start),
        Some(k) if k < end => Some(k + 1),
        Some(_) => None,
    };
    Ok(FeasibilityReport {
        entries: vec![Inequality::non_strict("H2_seq", worst, 0.0)],
        first_violating_k,
        first_satisfied_k,
        notes: Vec::new(),
    })
}

/// Coefficients `(a, b, c)` of `Psi(lambda) = a lambda^2 - b lambda + c`.
pub fn psi_coefficients(alpha: f64, q: f64) -> (f64, f64, f64) {
    let a = (1.0 + alpha * alpha) * (1.0 - q * q);
    let b = 2.0 * alpha * alpha + (1.0 - alpha) * (2.0 - q * q);
    let c = (1.0 - alpha) * (1.0 - alpha);
    (a, b, c)
}

pub fn psi(lambda: f64, alpha: f64, q: f64) -> f64 {
    let (a, b, c) = psi_coefficients(alpha, q);
    (a * lambda - b) * lambda + c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub lambda: f64,
    /// Set when the sign conditions `Psi(0) > 0 > Psi(1)` fail and the
    /// boundary value 1 is returned instead of a bisection root.
    pub boundary: bool,
    pub iterations: usize,
}

/// The unique root of `Psi` in `(0, 1)`, by bisection.
///
/// Returns the left end of the final bracket, where `Psi > 0`. Since
/// `lambda * H2(xi = 1) = -Psi(lambda)`, the returned value always satisfies
/// the quasi-contractive condition with `xi = 1`.
pub fn lambda_alpha_q(alpha: f64, q: f64) -> Result<Root> {
    check_alpha(alpha)?;
    check_unit("q", q, true)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if !(psi(lo, alpha, q) > 0.0 && psi(hi, alpha, q) < 0.0) {
        return Ok(Root {
            lambda: 1.0,
            boundary: true,
            iterations: 0,
        });
    }
    let mut iterations = 0;
    while hi - lo > BISECTION_TOL && iterations < BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if psi(mid, alpha, q) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(Root {
        lambda: lo,
        boundary: false,
        iterations,
    })
}

/// `(1 - alpha)^2 / (alpha (1 + alpha) + (1 - alpha)^2)`.
pub fn lambda_alpha_1(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let c = (1.0 - alpha) * (1.0 - alpha);
    Ok(c / (alpha * (1.0 + alpha) + c))
}

/// Lower and upper bracket for `lambda_alpha_q` in terms of `lambda_alpha_1`.
pub fn lambda_bracket(alpha: f64, q: f64) -> Result<(f64, f64)> {
    let l1 = lambda_alpha_1(alpha)?;
    let a2 = 2.0 * alpha * alpha;
    let factor = (a2 + (1.0 - alpha)) / (a2 + (1.0 - alpha) * (2.0 - q * q));
    Ok((factor * l1, l1))
}

/// The product whose being below 1 makes some `xi` in `(0, 1]` feasible.
/// `None` when `1 - lambda + lambda q^2 - alpha <= 0` or `lambda = 1` with `alpha > 0`.
pub fn xi_feasibility_product(alpha: f64, lambda: f64, q: f64) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    check_unit("lambda", lambda, true)?;
    check_unit("q", q, true)?;
    let qq = 1.0 - lambda + lambda * q * q;
    let denom = qq - alpha;
    if denom <= 0.0 {
        return Ok(None);
    }
    if alpha == 0.0 {
        return Ok(Some(0.0));
    }
    if lambda == 1.0 {
        return Ok(None);
    }
    let first = alpha * lambda * (1.0 + alpha) / ((1.0 - alpha) * (1.0 - lambda));
    Ok(Some(first * qq / denom))
}

/// Least `xi` in `(0, 1]` for which [`check_h2`] passes, or `None`.
///
/// `Q` is affine in `xi`, so the quasi-contractive condition is a concave
/// quadratic in `xi` that is positive at `xi = 0` whenever `alpha > 0`; the
/// threshold is its positive root.
pub fn xi_threshold(alpha: f64, lambda: f64, q: f64) -> Result<Option<f64>> {
    let Some(product) = xi_feasibility_product(alpha, lambda, q)? else {
        return Ok(None);
    };
    if alpha == 0.0 {
        return Ok(Some(0.0));
    }
    if product >= 1.0 {
        return Ok(None);
    }
    let s = 1.0 - lambda + lambda * q;
    let qa = s * s;
    let qb = lambda * (1.0 - lambda) * (1.0 - q) * (1.0 - q);
    let nu = (1.0 - lambda) / lambda;
    let ap = alpha * (1.0 + alpha);
    let am = 1.0 - alpha;
    // f(xi) = a xi^2 + b xi + c
    let a = -qb * nu * am;
    let b = qb * ap + nu * alpha * am - qa * nu * am;
    let c = qa * ap;
    let root = if a == 0.0 {
        -c / b
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        // a < 0 < c: exactly one positive root; use the cancellation-free pair
        let t = -0.5 * (b + b.signum() * disc);
        let (r1, r2) = (t / a, c / t);
        if r1 > 0.0 {
            r1
        } else {
            r2
        }
    };
    Ok((root > 0.0 && root <= 1.0).then_some(root))
}

/// Worst-case linear rate `S_k d1` with
/// `S_k = (alpha^{k+1} - Q^{k+1}) / (alpha - Q) = sum_{j=0}^k alpha^{k-j} Q^j`
/// and `d1 = ||x_1 - p*||^2`.
///
/// The underlying estimate is `||x_{k+1} - p*||^2 <= S_k d1`, i.e. the bound
/// after `k` steps. Read with the same index, `||x_k - p*||^2 <= S_k d1`
/// already fails at `k = 1` whenever `alpha + Q < 1`; [`RateBound::bound_iterate`]
/// gives the bound for `x_k` itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateBound {
    pub q_const: f64,
    pub alpha: f64,
    pub d1: f64,
}

impl RateBound {
    pub fn new(alpha: f64, q_const: f64, d1: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(q_const > 0.0 && q_const < 1.0) {
            return Err(Error::param("Q", q_const, "must lie in (0, 1)"));
        }
        if q_const == alpha {
            return Err(Error::param("Q", q_const, "must differ from alpha"));
        }
        if !(d1 >= 0.0 && d1.is_finite()) {
            return Err(Error::param("d1", d1, "must be finite and >= 0"));
        }
        Ok(Self { q_const, alpha, d1 })
    }

    /// `S_k d1`, quotient form.
    pub fn bound(&self, k: usize) -> f64 {
        rate_factor(k, self.alpha, self.q_const) * self.d1
    }

    /// `S_k d1`, summed form.
    pub fn bound_sum(&self, k: usize) -> f64 {
        rate_factor_sum(k, self.alpha, self.q_const) * self.d1
    }

    /// Bound on `||x_k - p*||^2`: `S_{k-1} d1`, with `S_0 = 1`.
    pub fn bound_iterate(&self, k: usize) -> f64 {
        if k <= 1 {
            self.d1
        } else {
            self.bound(k - 1)
        }
    }
}

/// `rate_bound(k) = S_k d1`; see [`RateBound`].
pub fn rate_bound(k: usize, alpha: f64, q_const: f64, d1: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", 0.0, "must be >= 1"));
    }
    Ok(RateBound::new(alpha, q_const, d1)?.bound(k))
}

fn rate_factor(k: usize, alpha: f64, q: f64) -> f64 {
    let e = (k + 1) as i32;
    (alpha.powi(e) - q.powi(e)) / (alpha - q)
}

fn rate_factor_sum(k: usize, alpha: f64, q: f64) -> f64 {
    // S_j = alpha S_{j-1} + Q^j, S_0 = 1
    let (mut s, mut qj) = (1.0, 1.0);
    for _ in 0..k {
        qj *= q;
        s = alpha * s + qj;
    }
    s
}

/// Evaluation of `2Q / (1 - sqrt(Q) + 2Q)` for a condition number `Q = L / mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NesterovBound {
    pub value: f64,
    /// The value exceeds 1, outside the relaxation range `(0, 1)` the
    /// convergence analysis assumes. Reported, never enforced.
    pub exceeds_one: bool,
}

pub fn nesterov_lambda_bound(q_cond: f64) -> Result<NesterovBound> {
    if !(q_cond >= 1.0) {
        return Err(Error::param("Q", q_cond, "condition number must be >= 1"));
    }
    let value = if q_cond.is_infinite() {
        1.0
    } else {
        2.0 * q_cond / (1.0 - q_cond.sqrt() + 2.0 * q_cond)
    };
    Ok(NesterovBound {
        value,
        exceeds_one: value > 1.0,
    })
}

/// A constant parameter choice, with `eta = gamma lambda` derived on demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamPoint {
    pub alpha: f64,
    pub lambda: f64,
    pub q: Option<f64>,
    pub xi: Option<f64>,
    pub gamma: f64,
}

impl ParamPoint {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", lambda, "must be finite and > 0"));
        }
        Ok(Self {
            alpha,
            lambda,
            q: None,
            xi: None,
            gamma: 1.0,
        })
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        check_unit("q", q, true)?;
        self.q = Some(q);
        Ok(self)
    }

    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        check_unit("xi", xi, false)?;
        self.xi = Some(xi);
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_unit("gamma", gamma, true)?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.gamma * self.lambda
    }

    /// `H1` on the effective relaxation `eta`; `H2` on `(alpha, lambda, q, xi)`
    /// whenever `q` or `xi` is given (`q` defaults to 1 and `xi` to 1).
    pub fn report(&self) -> Result<FeasibilityReport> {
        let mut report = FeasibilityReport {
            entries: vec![check_h1_constant(self.alpha, self.eta())],
            ..Default::default()
        };
        if self.gamma != 1.0 {
            report
                .notes
                .push(format!("H1 evaluated at eta = gamma * lambda = {}", self.eta()));
        }
        if self.q.is_some() || self.xi.is_some() {
            let q = self.q.unwrap_or(1.0);
            let xi = self.xi.unwrap_or(1.0);
            if self.lambda > 1.0 {
                return Err(Error::param("lambda", self.lambda, "H2 requires lambda in (0, 1]"));
            }
            report.entries.push(check_h2(self.alpha, self.lambda, q, xi)?);
            let root = lambda_alpha_q(self.alpha, q)?;
            report.notes.push(format!(
                "lambda_alpha_q = {:.15}{}",
                root.lambda,
                if root.boundary { " (boundary)" } else { "" }
            ));
            match xi_threshold(self.alpha, self.lambda, q)? {
                Some(t) => report.notes.push(format!("least feasible xi = {t:.15}")),
                None => report.notes.push("no xi in (0, 1] satisfies H2".into()),
            }
        }
        Ok(report)
    }
}
