//! Seeded benchmark instances with reference solutions.
//!
//! Every generator draws from one [`SplitMix64`] stream in a fixed order, so an
//! instance is bit-reproducible from its parameters and seed. References come
//! from long non-inertial runs of the instance's own operator; the fixed-point
//! residual is their certificate.

use std::fmt;
use std::str::FromStr;

use crate::engine::{run, RunOptions, Schedule, StoppingRule};
use crate::error::{Error, Result};
use crate::linalg::{
    operator_norm_estimate, random_orthogonal, solve_spd, BlockVector, LinearMap, Point, Vector,
};
use crate::operators::{
    davis_yin_op, douglas_rachford_op, forward_backward_op, gradient_step_op, primal_dual_op,
    proximal_op, split_dr_op, OperatorHandle, ProxFriendlyFunction, SmoothQuadratic,
    NORM_ESTIMATE_ITERS, NORM_ESTIMATE_SEED,
};
use crate::rng::SplitMix64;

/// Residual target for reference fixed points.
pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// Fraction of nonzero coordinates in the planted LASSO signal.
pub const DEFAULT_SPARSITY: f64 = 0.1;
pub const DEFAULT_LASSO_MU: f64 = 0.1;
pub const DEFAULT_TV_MU: f64 = 0.5;
/// Noise standard deviation as a fraction of the clean signal's range.
pub const NOISE_LEVEL: f64 = 0.01;
/// `tau = sigma = PD_STEP_FACTOR / ||L||`, so `tau sigma ||L||^2 < 1`.
pub const PD_STEP_FACTOR: f64 = 0.95;
/// Ball radius of [`make_feasibility`] in units of `sqrt(n)`.
pub const FEASIBILITY_RADIUS: f64 = 0.505;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Gradient,
    Proximal,
    ForwardBackward,
    DouglasRachford,
    PrimalDual,
    SplitDouglasRachford,
    DavisYin,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Gradient,
        Scheme::Proximal,
        Scheme::ForwardBackward,
        Scheme::DouglasRachford,
        Scheme::PrimalDual,
        Scheme::SplitDouglasRachford,
        Scheme::DavisYin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gradient => "gradient",
            Scheme::Proximal => "proximal",
            Scheme::ForwardBackward => "fb",
            Scheme::DouglasRachford => "dr",
            Scheme::PrimalDual => "pd",
            Scheme::SplitDouglasRachford => "sdr",
            Scheme::DavisYin => "dy",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Other(format!("unknown scheme `{s}`")))
    }
}

/// Step parameters of a scheme; unset values fall back to instance defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepParams {
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralData {
    /// Strong convexity constant of the smooth part.
    pub mu: f64,
    /// Lipschitz constant of its gradient.
    pub l_smooth: f64,
    /// Estimate of `||L||` for coupled problems.
    pub norm_l: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    /// `1/2 x^T A x - b^T x`.
    Quadratic { quad: SmoothQuadratic },
    /// `1/2 ||A x - b||^2 + mu ||x||_1`.
    Lasso {
        design: LinearMap,
        obs: Vector,
        mu_reg: f64,
        quad: SmoothQuadratic,
        truth: Vector,
    },
    /// `1/2 ||x - b||^2 + mu ||D x||_1` with forward differences `D`.
    Tv1d {
        noisy: Vector,
        clean: Vector,
        diff: LinearMap,
        mu_reg: f64,
    },
    /// `1/2 ||A x - b||^2 + mu ||x||_1 + indicator of [lo, hi]^n`.
    ThreeTerm {
        design: LinearMap,
        obs: Vector,
        mu_reg: f64,
        lo: f64,
        hi: f64,
        quad: SmoothQuadratic,
    },
    /// A point of `[lo, hi]^n` intersected with the ball of `radius` at the origin.
    Feasibility { lo: f64, hi: f64, radius: f64 },
}

/// An operator for one of the schemes; block schemes act on `(x, y)`.
#[derive(Clone, Debug)]
pub enum SchemeOperator {
    Vector(OperatorHandle<Vector>),
    Block(OperatorHandle<BlockVector>),
}

impl SchemeOperator {
    pub fn name(&self) -> &str {
        match self {
            SchemeOperator::Vector(o) => o.name(),
            SchemeOperator::Block(o) => o.name(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            SchemeOperator::Vector(o) => o.gamma(),
            SchemeOperator::Block(o) => o.gamma(),
        }
    }

    pub fn q_factor(&self) -> Option<f64> {
        match self {
            SchemeOperator::Vector(o) => o.q_factor(),
            SchemeOperator::Block(o) => o.q_factor(),
        }
    }

    pub fn notes(&self) -> &[String] {
        match self {
            SchemeOperator::Vector(o) => o.notes(),
            SchemeOperator::Block(o) => o.notes(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkInstance {
    pub name: String,
    pub kind: ProblemKind,
    pub initial_point: Vector,
    pub reference_solution: Option<Vector>,
    pub spectral: Option<SpectralData>,
}

impl BenchmarkInstance {
    pub fn dim(&self) -> usize {
        self.initial_point.dim()
    }

    /// Dimension of the dual block for primal-dual schemes.
    pub fn dual_dim(&self) -> Option<usize> {
        match &self.kind {
            ProblemKind::Tv1d { diff, .. } => Some(diff.rows()),
            _ => None,
        }
    }

    pub fn objective(&self, x: &Vector) -> Option<f64> {
        match &self.kind {
            ProblemKind::Quadratic { quad } => Some(quad.value(x)),
            ProblemKind::Lasso {
                design, obs, mu_reg, ..
            } => Some(least_squares_value(design, obs, x) + mu_reg * l1_norm(x)),
            ProblemKind::Tv1d {
                noisy, diff, mu_reg, ..
            } => Some(0.5 * x.sub_raw(noisy).norm_sq() + mu_reg * l1_norm(&diff.apply_raw(x))),
            ProblemKind::ThreeTerm {
                design,
                obs,
                mu_reg,
                lo,
                hi,
                ..
            } => {
                let bx = ProxFriendlyFunction::Box { lo: *lo, hi: *hi }.value(x);
                Some(least_squares_value(design, obs, x) + mu_reg * l1_norm(x) + bx)
            }
            ProblemKind::Feasibility { .. } => None,
        }
    }

    pub fn supported_schemes(&self) -> &'static [Scheme] {
        match &self.kind {
            ProblemKind::Quadratic { .. } => &[Scheme::Gradient, Scheme::Proximal, Scheme::ForwardBackward],
            ProblemKind::Lasso { .. } => &[Scheme::ForwardBackward, Scheme::DouglasRachford, Scheme::DavisYin],
            ProblemKind::Tv1d { .. } => &[Scheme::PrimalDual, Scheme::SplitDouglasRachford],
            ProblemKind::ThreeTerm { .. } => &[Scheme::DavisYin],
            ProblemKind::Feasibility { .. } => &[Scheme::DouglasRachford],
        }
    }

    /// Default step parameters: `1/L` for forward steps, `1` for pure
    /// resolvent schemes and `PD_STEP_FACTOR / ||L||` for coupled ones.
    pub fn default_steps(&self, scheme: Scheme) -> StepParams {
        let l = self.spectral.map(|s| s.l_smooth).unwrap_or(1.0);
        match scheme {
            Scheme::Gradient | Scheme::ForwardBackward | Scheme::DavisYin => StepParams {
                rho: Some(if l > 0.0 { 1.0 / l } else { 1.0 }),
                ..Default::default()
            },
            Scheme::DouglasRachford if matches!(self.kind, ProblemKind::Lasso { .. }) => StepParams {
                rho: Some(1.0 / l),
                ..Default::default()
            },
            Scheme::Proximal | Scheme::DouglasRachford => StepParams {
                rho: Some(1.0),
                ..Default::default()
            },
            Scheme::PrimalDual | Scheme::SplitDouglasRachford => {
                let n = self.spectral.and_then(|s| s.norm_l).unwrap_or(1.0);
                let t = PD_STEP_FACTOR / n.max(f64::MIN_POSITIVE);
                StepParams {
                    rho: None,
                    tau: Some(t),
                    sigma: Some(t),
                }
            }
        }
    }

    fn resolve(&self, scheme: Scheme, steps: &StepParams) -> StepParams {
        let d = self.default_steps(scheme);
        StepParams {
            rho: steps.rho.or(d.rho),
            tau: steps.tau.or(d.tau),
            sigma: steps.sigma.or(d.sigma),
        }
    }

    fn unsupported(&self, scheme: Scheme) -> Error {
        Error::Other(format!("scheme `{scheme}` is not available for instance `{}`", self.name))
    }

    /// Builds the fixed-point operator of `scheme` for this instance.
    pub fn operator(&self, scheme: Scheme, steps: &StepParams) -> Result<SchemeOperator> {
        if !self.supported_schemes().contains(&scheme) {
            return Err(self.unsupported(scheme));
        }
        let s = self.resolve(scheme, steps);
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| Error::Other(format!("missing step parameter `{name}`")))
        };
        let n = self.dim();
        Ok(match (&self.kind, scheme) {
            (ProblemKind::Quadratic { quad }, Scheme::Gradient) => {
                SchemeOperator::Vector(gradient_step_op(quad, need(s.rho, "rho")?)?)
            }
            (ProblemKind::Quadratic { quad }, Scheme::Proximal) => SchemeOperator::Vector(proximal_op(
                &ProxFriendlyFunction::Quadratic(quad.clone()),
                need(s.rho, "rho")?,
                n,
            )?),
            (ProblemKind::Quadratic { quad }, Scheme::ForwardBackward) => SchemeOperator::Vector(
                forward_backward_op(&ProxFriendlyFunction::Zero, quad, need(s.rho, "rho")?)?,
            ),
            (ProblemKind::Lasso { quad, mu_reg, .. }, Scheme::ForwardBackward) => SchemeOperator::Vector(
                forward_backward_op(&ProxFriendlyFunction::l1(*mu_reg)?, quad, need(s.rho, "rho")?)?,
            ),
            (ProblemKind::Lasso { quad, mu_reg, .. }, Scheme::DouglasRachford) => {
                SchemeOperator::Vector(douglas_rachford_op(
                    &ProxFriendlyFunction::l1(*mu_reg)?,
                    &ProxFriendlyFunction::Quadratic(quad.clone()),
                    need(s.rho, "rho")?,
                    n,
                )?)
            }
            (ProblemKind::Lasso { quad, mu_reg, .. }, Scheme::DavisYin) => SchemeOperator::Vector(davis_yin_op(
                &ProxFriendlyFunction::l1(*mu_reg)?,
                &ProxFriendlyFunction::Zero,
                quad,
                need(s.rho, "rho")?,
            )?),
            (
                ProblemKind::Tv1d {
                    noisy, diff, mu_reg, ..
                },
                Scheme::PrimalDual | Scheme::SplitDouglasRachford,
            ) => {
                let f = ProxFriendlyFunction::Quadratic(SmoothQuadratic::squared_distance(noisy.clone()));
                let g = ProxFriendlyFunction::l1(*mu_reg)?;
                let (tau, sigma) = (need(s.tau, "tau")?, need(s.sigma, "sigma")?);
                SchemeOperator::Block(if scheme == Scheme::PrimalDual {
                    primal_dual_op(&f, &g, diff, tau, sigma)?
                } else {
                    split_dr_op(&f, &g, diff, tau, sigma)?
                })
            }
            (
                ProblemKind::ThreeTerm {
                    quad, mu_reg, lo, hi, ..
                },
                Scheme::DavisYin,
            ) => SchemeOperator::Vector(davis_yin_op(
                &ProxFriendlyFunction::l1(*mu_reg)?,
                &ProxFriendlyFunction::boxed(*lo, *hi)?,
                quad,
                need(s.rho, "rho")?,
            )?),
            (ProblemKind::Feasibility { lo, hi, radius }, Scheme::DouglasRachford) => {
                SchemeOperator::Vector(douglas_rachford_op(
                    &ProxFriendlyFunction::boxed(*lo, *hi)?,
                    &ProxFriendlyFunction::l2_ball(*radius)?,
                    need(s.rho, "rho")?,
                    n,
                )?)
            }
            _ => return Err(self.unsupported(scheme)),
        })
    }

    /// Starting point for a scheme: the instance's initial point, paired with
    /// a zero dual block for primal-dual schemes.
    pub fn start_block(&self) -> Option<BlockVector> {
        self.dual_dim()
            .map(|m| BlockVector::new(self.initial_point.clone(), Vector::zeros(m)))
    }
}

fn l1_norm(x: &Vector) -> f64 {
    x.as_slice().iter().map(|c| c.abs()).sum()
}

fn least_squares_value(design: &LinearMap, obs: &Vector, x: &Vector) -> f64 {
    0.5 * design.apply_raw(x).sub_raw(obs).norm_sq()
}

/// A fixed point of `op` by plain Picard iteration from `start`, with its residual.
pub fn reference_fixed_point<P: Point>(
    op: &OperatorHandle<P>,
    start: P,
    tol: f64,
    max_iters: usize,
) -> Result<(P, f64)> {
    let stop = StoppingRule::new(max_iters, tol)?;
    let trace = run(op, start, &Schedule::constant(0.0, 1.0)?, &stop, &RunOptions::default())
        .map_err(|e| Error::Other(format!("reference run failed: {e}")))?;
    let last = trace.last;
    let res = crate::operators::residual(op, &last)?;
    Ok((last, res))
}

fn check_reference(name: &str, res: f64, tol: f64) -> Result<()> {
    if res > tol {
        return Err(Error::Other(format!(
            "{name}: reference run stalled at residual {res:e} (target {tol:e})"
        )));
    }
    Ok(())
}

/// Strongly convex quadratic `1/2 x^T A x - b^T x` with spectrum in `[mu, L]`.
pub fn make_quadratic(dim: usize, mu: f64, l_smooth: f64, seed: u64) -> Result<BenchmarkInstance> {
    if dim < 2 {
        return Err(Error::param("dim", dim as f64, "must be >= 2"));
    }
    if !(mu > 0.0 && mu <= l_smooth && l_smooth.is_finite()) {
        return Err(Error::param("mu", mu, format!("need 0 < mu <= L = {l_smooth}")));
    }
    let mut rng = SplitMix64::new(seed);
    let hessian = if mu == l_smooth {
        LinearMap::scaled_identity(dim, mu)
    } else {
        let mut eig = vec![mu, l_smooth];
        eig.extend((2..dim).map(|_| rng.uniform(mu, l_smooth)));
        let q = random_orthogonal(dim, &mut rng);
        let a = q.matmul(&LinearMap::diagonal(&eig))?.matmul(&q.transpose())?;
        symmetrize(&a)
    };
    let b = Vector::new(rng.gaussian_vec(dim))?;
    let x0 = Vector::new(rng.gaussian_vec(dim))?.scale(10.0);
    let reference = solve_spd(&hessian, &b)?;
    let quad = SmoothQuadratic::new(hessian, b)?;
    Ok(BenchmarkInstance {
        name: format!("quadratic(dim={dim}, mu={mu}, L={l_smooth}, seed={seed})"),
        kind: ProblemKind::Quadratic { quad },
        initial_point: x0,
        reference_solution: Some(reference),
        spectral: Some(SpectralData {
            mu,
            l_smooth,
            norm_l: None,
        }),
    })
}

fn symmetrize(a: &LinearMap) -> LinearMap {
    a.combine(0.5, &a.transpose(), 0.5).expect("square")
}

struct LassoData {
    design: LinearMap,
    obs: Vector,
    truth: Vector,
    x0: Vector,
}

fn lasso_data(m: usize, n: usize, sparsity: f64, seed: u64) -> Result<LassoData> {
    if m < 2 || n < 2 {
        return Err(Error::Other(format!("need m, n >= 2 (got {m}, {n})")));
    }
    if !(sparsity > 0.0 && sparsity < 1.0) {
        return Err(Error::param("sparsity", sparsity, "must lie in (0, 1)"));
    }
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let design = LinearMap::new(m, n, rng.gaussian_vec(m * n).into_iter().map(|v| v * scale).collect())?;
    // planted support by partial Fisher-Yates
    let support = ((sparsity * n as f64).round() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut truth = vec![0.0; n];
    for i in 0..support {
        let j = i + rng.index(n - i);
        idx.swap(i, j);
        let g = rng.gaussian();
        truth[idx[i]] = g.signum() * (1.0 + g.abs());
    }
    let truth = Vector::new(truth)?;
    let clean = design.apply(&truth)?;
    let sd = NOISE_LEVEL * range(&clean);
    let noise = rng.gaussian_vec(m);
    let obs = Vector::new(clean.as_slice().iter().zip(&noise).map(|(c, e)| c + sd * e).collect())?;
    let x0 = Vector::new(rng.gaussian_vec(n))?;
    Ok(LassoData {
        design,
        obs,
        truth,
        x0,
    })
}

fn range(v: &Vector) -> f64 {
    let s = v.as_slice();
    let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn least_squares_spectral(quad: &SmoothQuadratic) -> SpectralData {
    SpectralData {
        mu: quad.mu().max(0.0),
        l_smooth: quad.lipschitz(),
        norm_l: None,
    }
}

/// Sparse regression `1/2 ||A x - b||^2 + mu ||x||_1` with a planted sparse truth.
pub fn make_lasso(m: usize, n: usize, sparsity: f64, mu_reg: f64, seed: u64) -> Result<BenchmarkInstance> {
    if !(mu_reg > 0.0 && mu_reg.is_finite()) {
        return Err(Error::param("mu_reg", mu_reg, "must be finite and > 0"));
    }
    let data = lasso_data(m, n, sparsity, seed)?;
    let quad = SmoothQuadratic::least_squares(&data.design, &data.obs)?;
    let spectral = least_squares_spectral(&quad);
    let mut inst = BenchmarkInstance {
        name: format!("lasso(m={m}, n={n}, sparsity={sparsity}, mu={mu_reg}, seed={seed})"),
        kind: ProblemKind::Lasso {
            design: data.design,
            obs: data.obs,
            mu_reg,
            quad,
            truth: data.truth,
        },
        initial_point: data.x0,
        reference_solution: None,
        spectral: Some(spectral),
    };
    let SchemeOperator::Vector(op) = inst.operator(Scheme::ForwardBackward, &StepParams::default())? else {
        unreachable!("forward-backward acts on vectors")
    };
    let (x, res) = reference_fixed_point(&op, Vector::zeros(n), REFERENCE_TOL, REFERENCE_MAX_ITERS)?;
    check_reference(&inst.name, res, REFERENCE_TOL)?;
    inst.reference_solution = Some(x);
    Ok(inst)
}

/// Piecewise-constant signal plus noise, denoised by `1/2 ||x - b||^2 + mu ||D x||_1`.
pub fn make_tv1d(n: usize, mu_reg: f64, seed: u64) -> Result<BenchmarkInstance> {
    if n < 3 {
        return Err(Error::param("n", n as f64, "must be >= 3"));
    }
    if !(mu_reg >= 0.0 && mu_reg.is_finite()) {
        return Err(Error::param("mu_reg", mu_reg, "must be finite and >= 0"));
    }
    let mut rng = SplitMix64::new(seed);
    let pieces = (n / 40).clamp(2, 8);
    let mut breaks: Vec<usize> = (0..pieces - 1).map(|_| 1 + rng.index(n - 1)).collect();
    breaks.sort_unstable();
    let levels: Vec<f64> = (0..pieces).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let clean: Vec<f64> = (0..n)
        .map(|i| levels[breaks.iter().filter(|&&b| b <= i).count()])
        .collect();
    let clean = Vector::new(clean)?;
    let sd = NOISE_LEVEL * range(&clean).max(f64::MIN_POSITIVE);
    let noise = rng.gaussian_vec(n);
    let noisy = Vector::new(clean.as_slice().iter().zip(&noise).map(|(c, e)| c + sd * e).collect())?;
    let diff = LinearMap::forward_difference(n);
    let norm_l = operator_norm_estimate(&diff, NORM_ESTIMATE_ITERS, NORM_ESTIMATE_SEED)?;
    let mut inst = BenchmarkInstance {
        name: format!("tv1d(n={n}, mu={mu_reg}, seed={seed})"),
        kind: ProblemKind::Tv1d {
            noisy: noisy.clone(),
            clean,
            diff,
            mu_reg,
        },
        initial_point: noisy.clone(),
        reference_solution: None,
        spectral: Some(SpectralData {
            mu: 1.0,
            l_smooth: 1.0,
            norm_l: Some(norm_l),
        }),
    };
    if mu_reg == 0.0 {
        inst.reference_solution = Some(noisy);
        return Ok(inst);
    }
    let SchemeOperator::Block(op) = inst.operator(Scheme::PrimalDual, &StepParams::default())? else {
        unreachable!("primal-dual acts on blocks")
    };
    let start = inst.start_block().expect("dual block");
    let (z, res) = reference_fixed_point(&op, start, REFERENCE_TOL, REFERENCE_MAX_ITERS)?;
    check_reference(&inst.name, res, REFERENCE_TOL)?;
    inst.reference_solution = op.extract_solution(&z);
    Ok(inst)
}

/// LASSO data of [`make_lasso`] (same seed, default sparsity) with an added box constraint.
pub fn make_three_term(
    m: usize,
    n: usize,
    mu_reg: f64,
    bounds: (f64, f64),
    seed: u64,
) -> Result<BenchmarkInstance> {
    let (lo, hi) = bounds;
    if !(lo < hi) {
        return Err(Error::param("lo", lo, format!("need lo < hi (hi = {hi})")));
    }
    if !(mu_reg > 0.0 && mu_reg.is_finite()) {
        return Err(Error::param("mu_reg", mu_reg, "must be finite and > 0"));
    }
    let data = lasso_data(m, n, DEFAULT_SPARSITY, seed)?;
    let quad = SmoothQuadratic::least_squares(&data.design, &data.obs)?;
    let spectral = least_squares_spectral(&quad);
    let mut inst = BenchmarkInstance {
        name: format!("three_term(m={m}, n={n}, mu={mu_reg}, box=[{lo}, {hi}], seed={seed})"),
        kind: ProblemKind::ThreeTerm {
            design: data.design,
            obs: data.obs,
            mu_reg,
            lo,
            hi,
            quad,
        },
        initial_point: data.x0,
        reference_solution: None,
        spectral: Some(spectral),
    };
    let SchemeOperator::Vector(op) = inst.operator(Scheme::DavisYin, &StepParams::default())? else {
        unreachable!("davis-yin acts on vectors")
    };
    let (z, res) = reference_fixed_point(&op, Vector::zeros(n), REFERENCE_TOL, REFERENCE_MAX_ITERS)?;
    check_reference(&inst.name, res, REFERENCE_TOL)?;
    // the l1 resolvent output is box-feasible only up to the residual; project it
    let x = op.extract_solution(&z).expect("extract").map(|c| c.clamp(lo, hi));
    inst.reference_solution = Some(x);
    Ok(inst)
}

/// Two-set feasibility: `[0.5, 2]^n` against the ball of radius
/// `FEASIBILITY_RADIUS sqrt(n)` at the origin. The box point nearest the
/// origin has norm `0.5 sqrt(n)`, so the intersection is a thin cap.
pub fn make_feasibility(n: usize, seed: u64) -> Result<BenchmarkInstance> {
    if n < 2 {
        return Err(Error::param("n", n as f64, "must be >= 2"));
    }
    let (lo, hi) = (0.5, 2.0);
    let radius = FEASIBILITY_RADIUS * (n as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    let x0 = Vector::new(rng.gaussian_vec(n))?.scale(3.0);
    let mut inst = BenchmarkInstance {
        name: format!("feasibility(n={n}, seed={seed})"),
        kind: ProblemKind::Feasibility { lo, hi, radius },
        initial_point: x0.clone(),
        reference_solution: None,
        spectral: None,
    };
    let SchemeOperator::Vector(op) = inst.operator(Scheme::DouglasRachford, &StepParams::default())? else {
        unreachable!("douglas-rachford acts on vectors")
    };
    let (z, res) = reference_fixed_point(&op, x0, REFERENCE_TOL, REFERENCE_MAX_ITERS)?;
    check_reference(&inst.name, res, REFERENCE_TOL)?;
    inst.reference_solution = op.extract_solution(&z);
    Ok(inst)
}
