//! Fixed-point operators: proximal building blocks and the splitting schemes
//! as self-maps carrying averagedness and contraction metadata.

mod prox;

use std::fmt;
use std::sync::Arc;

pub use prox::{
    prox_conjugate, soft_threshold, PreparedConjugate, PreparedProx, ProxFriendlyFunction,
    SmoothQuadratic,
};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm_estimate, BlockVector, LinearMap, Metric, Point, Vector};

/// Power-iteration budget used when validating `tau sigma ||L||^2 <= 1`.
pub const NORM_ESTIMATE_ITERS: usize = 500;
pub const NORM_ESTIMATE_SEED: u64 = 0x5EED;

/// Cocoercivity constant of the forward (explicit) term. `Absent` means there
/// is no forward term, i.e. `beta = +inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cocoercivity {
    Absent,
    Finite(f64),
}

impl Cocoercivity {
    fn of(quad: &SmoothQuadratic) -> Self {
        if quad.lipschitz() == 0.0 {
            Cocoercivity::Absent
        } else {
            Cocoercivity::Finite(1.0 / quad.lipschitz())
        }
    }

    /// `gamma = 2 beta / (4 beta - rho)`, tending to 1/2 when `beta = inf`.
    fn forward_backward_gamma(self, rho: f64) -> f64 {
        match self {
            Cocoercivity::Absent => 0.5,
            Cocoercivity::Finite(beta) => 2.0 * beta / (4.0 * beta - rho),
        }
    }

    fn check_step(self, rho: f64) -> Result<()> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param("rho", rho, "must be finite and > 0"));
        }
        if let Cocoercivity::Finite(beta) = self {
            if rho >= 2.0 * beta {
                return Err(Error::param("rho", rho, format!("must be < 2 beta = {}", 2.0 * beta)));
            }
        }
        Ok(())
    }
}

type ApplyFn<P> = dyn Fn(&P) -> P + Send + Sync;
type ExtractFn<P> = dyn Fn(&P) -> Vector + Send + Sync;

/// An evaluable self-map with the metadata the certificates need.
///
/// Handles are immutable; cloning shares the underlying closures.
#[derive(Clone)]
pub struct OperatorHandle<P: Point> {
    name: String,
    shape: P::Shape,
    apply: Arc<ApplyFn<P>>,
    gamma: Option<f64>,
    q_factor: Option<f64>,
    beta: Option<Cocoercivity>,
    extract: Option<Arc<ExtractFn<P>>>,
    metric: Metric<P>,
    notes: Vec<String>,
}

impl<P: Point> fmt::Debug for OperatorHandle<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("gamma", &self.gamma)
            .field("q_factor", &self.q_factor)
            .field("beta", &self.beta)
            .field("metric", &self.metric)
            .finish()
    }
}

impl<P: Point> OperatorHandle<P> {
    pub fn new(
        name: impl Into<String>,
        shape: P::Shape,
        apply: impl Fn(&P) -> P + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            shape,
            apply: Arc::new(apply),
            gamma: None,
            q_factor: None,
            beta: None,
            extract: None,
            metric: Metric::Euclidean,
            notes: Vec::new(),
        }
    }

    pub fn identity(shape: P::Shape) -> Self {
        Self::new("identity", shape, |x: &P| x.clone())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::param("gamma", gamma, "must lie in (0, 1]"));
        }
        self.gamma = Some(gamma);
        Ok(self)
    }

    pub fn with_q_factor(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::param("q_factor", q, "must lie in (0, 1)"));
        }
        self.q_factor = Some(q);
        Ok(self)
    }

    pub fn with_beta(mut self, beta: Cocoercivity) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_extract(mut self, f: impl Fn(&P) -> Vector + Send + Sync + 'static) -> Self {
        self.extract = Some(Arc::new(f));
        self
    }

    pub fn with_metric(mut self, metric: Metric<P>) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> P::Shape {
        self.shape
    }

    /// Averagedness constant: `T = (1 - gamma) I + gamma R` with `R` nonexpansive.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Certified `q` with `||T y - p*|| <= q ||y - p*||`.
    pub fn q_factor(&self) -> Option<f64> {
        self.q_factor
    }

    pub fn beta(&self) -> Option<Cocoercivity> {
        self.beta
    }

    pub fn metric(&self) -> &Metric<P> {
        &self.metric
    }

    /// Assumptions attached to the metadata (e.g. an averagedness constant
    /// that is assumed rather than proved).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn apply(&self, y: &P) -> Result<P> {
        if y.shape() != self.shape {
            return Err(Error::dims(self.shape, y.shape()));
        }
        Ok((self.apply)(y))
    }

    /// Applies without the shape check; the caller guarantees `y.shape() == self.shape()`.
    pub fn apply_unchecked(&self, y: &P) -> P {
        (self.apply)(y)
    }

    /// Maps a fixed point to a solution of the underlying problem.
    pub fn extract_solution(&self, p: &P) -> Option<Vector> {
        self.extract.as_ref().map(|f| f(p))
    }

    /// The nonexpansive `R = (1 - 1/gamma) I + (1/gamma) T`, when `gamma` is known.
    pub fn reflected(&self, y: &P) -> Option<P> {
        let g = self.gamma?;
        let ty = self.apply_unchecked(y);
        Some(y.lincomb(1.0 - 1.0 / g, &ty, 1.0 / g))
    }
}

/// `||y - T y||` in the operator's metric.
pub fn residual<P: Point>(op: &OperatorHandle<P>, y: &P) -> Result<f64> {
    let ty = op.apply(y)?;
    Ok(op.metric().dist(y, &ty))
}

fn check_dim(expected: usize, f: &ProxFriendlyFunction) -> Result<()> {
    match f.dim() {
        Some(d) if d != expected => Err(Error::dims(expected, d)),
        _ => Ok(()),
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(name, v, "must be finite and > 0"));
    }
    Ok(())
}

/// Gradient step `T x = x - rho (A x - b)` for the quadratic `1/2 x^T A x - b^T x`.
///
/// `gamma = rho L / 2`; `q_factor = max(|1 - rho mu|, |1 - rho L|)` whenever it is below 1.
pub fn gradient_step_op(quad: &SmoothQuadratic, rho: f64) -> Result<OperatorHandle<Vector>> {
    check_positive("rho", rho)?;
    let big_l = quad.lipschitz();
    if big_l > 0.0 && rho >= 2.0 / big_l {
        return Err(Error::param("rho", rho, format!("must be < 2/L = {}", 2.0 / big_l)));
    }
    let q = quad.clone();
    let mut op = OperatorHandle::new("gradient", quad.dim(), move |x: &Vector| {
        x.lincomb_raw(1.0, &q.gradient(x), -rho)
    })
    .with_beta(Cocoercivity::of(quad))
    .with_extract(|x: &Vector| x.clone());
    if big_l > 0.0 {
        op = op.with_gamma(rho * big_l / 2.0)?;
    }
    let spectral = (1.0 - rho * quad.mu()).abs().max((1.0 - rho * big_l).abs());
    if spectral > 0.0 && spectral < 1.0 {
        op = op.with_q_factor(spectral)?;
    }
    Ok(op)
}

/// `q_k = 1 - 2 mu L rho / (L + mu)`, the contraction constant quoted for
/// gradient steps with `rho <= 2 / (L + mu)`. Exposed for comparison with the
/// spectral factor; see [`gradient_step_op`].
pub fn gradient_quoted_q(mu: f64, big_l: f64, rho: f64) -> f64 {
    1.0 - 2.0 * mu * big_l * rho / (big_l + mu)
}

/// Pure proximal iteration `T = prox_{rho f}`; firmly nonexpansive, `gamma = 1/2`.
pub fn proximal_op(f: &ProxFriendlyFunction, rho: f64, dim: usize) -> Result<OperatorHandle<Vector>> {
    check_dim(dim, f)?;
    let p = f.prepare(rho, dim)?;
    OperatorHandle::new("proximal", dim, move |x: &Vector| p.apply_raw(x))
        .with_beta(Cocoercivity::Absent)
        .with_extract(|x: &Vector| x.clone())
        .with_gamma(0.5)
}

/// Forward-backward `T x = prox_{rho f}(x - rho (A x - b))`, `gamma = 2 beta / (4 beta - rho)`.
pub fn forward_backward_op(
    f_nonsmooth: &ProxFriendlyFunction,
    quad: &SmoothQuadratic,
    rho: f64,
) -> Result<OperatorHandle<Vector>> {
    let dim = quad.dim();
    check_dim(dim, f_nonsmooth)?;
    let beta = Cocoercivity::of(quad);
    beta.check_step(rho)?;
    let p = f_nonsmooth.prepare(rho, dim)?;
    let q = quad.clone();
    let smooth = beta != Cocoercivity::Absent;
    OperatorHandle::new("forward-backward", dim, move |x: &Vector| {
        if smooth {
            p.apply_raw(&x.lincomb_raw(1.0, &q.gradient(x), -rho))
        } else {
            p.apply_raw(x)
        }
    })
    .with_beta(beta)
    .with_extract(|x: &Vector| x.clone())
    .with_gamma(beta.forward_backward_gamma(rho))
}

/// Douglas-Rachford `T = J_{rA} (2 J_{rB} - I) + (I - J_{rB})`, `gamma = 1/2`.
/// Solutions are recovered as `J_{rB} z`.
pub fn douglas_rachford_op(
    f_a: &ProxFriendlyFunction,
    f_b: &ProxFriendlyFunction,
    r: f64,
    dim: usize,
) -> Result<OperatorHandle<Vector>> {
    check_positive("r", r)?;
    check_dim(dim, f_a)?;
    check_dim(dim, f_b)?;
    let ja = f_a.prepare(r, dim)?;
    let jb = f_b.prepare(r, dim)?;
    let jb_extract = jb.clone();
    OperatorHandle::new("douglas-rachford", dim, move |z: &Vector| {
        let xb = jb.apply_raw(z);
        let xa = ja.apply_raw(&xb.lincomb_raw(2.0, z, -1.0));
        z.add_raw(&xa.sub_raw(&xb))
    })
    .with_beta(Cocoercivity::Absent)
    .with_extract(move |z: &Vector| jb_extract.apply_raw(z))
    .with_gamma(0.5)
}

fn check_coupling(l: &LinearMap, tau: f64, sigma: f64) -> Result<f64> {
    check_positive("tau", tau)?;
    check_positive("sigma", sigma)?;
    let norm_l = operator_norm_estimate(l, NORM_ESTIMATE_ITERS, NORM_ESTIMATE_SEED)?;
    let product = tau * sigma * norm_l * norm_l;
    if product > 1.0 {
        return Err(Error::param(
            "tau*sigma*||L||^2",
            product,
            "must be <= 1",
        ));
    }
    Ok(norm_l)
}

/// Chambolle-Pock primal-dual step on `(x, y)`:
/// `x+ = prox_{tau f}(x - tau L^T y)`, `y+ = prox_{sigma g*}(y + sigma L (2 x+ - x))`.
///
/// The map is 1/2-averaged in the metric
/// `<(x,y),(x',y')> = <x,x'>/tau + <y,y'>/sigma - <Lx,y'> - <Lx',y>`,
/// which the handle carries for all distance computations.
pub fn primal_dual_op(
    f: &ProxFriendlyFunction,
    g: &ProxFriendlyFunction,
    l: &LinearMap,
    tau: f64,
    sigma: f64,
) -> Result<OperatorHandle<BlockVector>> {
    let (n, m) = (l.cols(), l.rows());
    check_dim(n, f)?;
    check_dim(m, g)?;
    check_coupling(l, tau, sigma)?;
    let pf = f.prepare(tau, n)?;
    let pg = PreparedConjugate::new(g, sigma, m)?;
    let lm = l.clone();
    let apply = move |z: &BlockVector| {
        let x_new = pf.apply_raw(&z.primal.lincomb_raw(1.0, &lm.apply_adjoint_raw(&z.dual), -tau));
        let bar = x_new.lincomb_raw(2.0, &z.primal, -1.0);
        let y_new = pg.apply_raw(&z.dual.lincomb_raw(1.0, &lm.apply_raw(&bar), sigma));
        BlockVector::new(x_new, y_new)
    };
    let metric_l = l.clone();
    let metric = Metric::Induced(Arc::new(move |a: &BlockVector, b: &BlockVector| {
        a.primal.inner(&b.primal) / tau + a.dual.inner(&b.dual) / sigma
            - metric_l.apply_raw(&a.primal).inner(&b.dual)
            - metric_l.apply_raw(&b.primal).inner(&a.dual)
    }));
    OperatorHandle::new("primal-dual", (n, m), apply)
        .with_beta(Cocoercivity::Absent)
        .with_extract(|z: &BlockVector| z.primal.clone())
        .with_metric(metric)
        .with_gamma(0.5)
}

/// Split Douglas-Rachford with scalar preconditioners `tau I`, `sigma I`:
///
/// ```text
/// v   = sigma (I - J_{g/sigma})(L x + y / sigma)
/// x+  = prox_{tau f}(x - tau L^T v)
/// y+  = sigma L (x+ - x) + v
/// ```
///
/// Averagedness is taken as 1/2 in the metric
/// `diag(I/tau - sigma L^T L, I/sigma)`; this constant is an assumption and
/// the handle records it in its notes.
pub fn split_dr_op(
    f: &ProxFriendlyFunction,
    g: &ProxFriendlyFunction,
    l: &LinearMap,
    tau: f64,
    sigma: f64,
) -> Result<OperatorHandle<BlockVector>> {
    let (n, m) = (l.cols(), l.rows());
    check_dim(n, f)?;
    check_dim(m, g)?;
    check_coupling(l, tau, sigma)?;
    let pf = f.prepare(tau, n)?;
    let pg = g.prepare(1.0 / sigma, m)?;
    let lm = l.clone();
    let apply = move |z: &BlockVector| {
        let w = lm.apply_raw(&z.primal).lincomb_raw(1.0, &z.dual, 1.0 / sigma);
        let v = w.lincomb_raw(sigma, &pg.apply_raw(&w), -sigma);
        let x_new = pf.apply_raw(&z.primal.lincomb_raw(1.0, &lm.apply_adjoint_raw(&v), -tau));
        let y_new = lm.apply_raw(&x_new.sub_raw(&z.primal)).lincomb_raw(sigma, &v, 1.0);
        BlockVector::new(x_new, y_new)
    };
    let metric_l = l.clone();
    let metric = Metric::Induced(Arc::new(move |a: &BlockVector, b: &BlockVector| {
        a.primal.inner(&b.primal) / tau
            - sigma * metric_l.apply_raw(&a.primal).inner(&metric_l.apply_raw(&b.primal))
            + a.dual.inner(&b.dual) / sigma
    }));
    OperatorHandle::new("split-douglas-rachford", (n, m), apply)
        .with_beta(Cocoercivity::Absent)
        .with_extract(|z: &BlockVector| z.primal.clone())
        .with_metric(metric)
        .with_note("gamma = 1/2 assumed (induced metric diag(I/tau - sigma L^T L, I/sigma))")
        .with_gamma(0.5)
}

/// Davis-Yin three-operator step
/// `x_B = prox_{rho fB}(z)`, `x_A = prox_{rho fA}(2 x_B - z - rho C x_B)`,
/// `T z = z + x_A - x_B`, with `C` the gradient of a convex quadratic.
/// `gamma = 2 beta / (4 beta - rho)`; solutions are `prox_{rho fB}(z)`.
pub fn davis_yin_op(
    f_b: &ProxFriendlyFunction,
    f_a: &ProxFriendlyFunction,
    smooth: &SmoothQuadratic,
    rho: f64,
) -> Result<OperatorHandle<Vector>> {
    let dim = smooth.dim();
    check_dim(dim, f_a)?;
    check_dim(dim, f_b)?;
    let beta = Cocoercivity::of(smooth);
    beta.check_step(rho)?;
    let pa = f_a.prepare(rho, dim)?;
    let pb = f_b.prepare(rho, dim)?;
    let pb_extract = pb.clone();
    let q = smooth.clone();
    let has_forward = !smooth.is_zero();
    OperatorHandle::new("davis-yin", dim, move |z: &Vector| {
        let xb = pb.apply_raw(z);
        let mut arg = xb.lincomb_raw(2.0, z, -1.0);
        if has_forward {
            arg = arg.lincomb_raw(1.0, &q.gradient(&xb), -rho);
        }
        let xa = pa.apply_raw(&arg);
        z.add_raw(&xa.sub_raw(&xb))
    })
    .with_beta(beta)
    .with_extract(move |z: &Vector| pb_extract.apply_raw(z))
    .with_gamma(beta.forward_backward_gamma(rho))
}
