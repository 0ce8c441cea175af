//! Proximal maps of the simple convex functions the splitting schemes compose.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Cholesky, LinearMap, Vector};

/// Convex quadratic `f(x) = 1/2 x^T A x - b^T x` with symmetric positive
/// semidefinite `A`. The extreme eigenvalues are computed once at
/// construction so step-size bounds and contraction factors are exact.
#[derive(Clone, Debug)]
pub struct SmoothQuadratic {
    hessian: LinearMap,
    linear: Vector,
    mu: f64,
    lipschitz: f64,
}

impl SmoothQuadratic {
    pub fn new(hessian: LinearMap, linear: Vector) -> Result<Self> {
        if hessian.rows() != hessian.cols() || hessian.rows() != linear.dim() {
            return Err(Error::dims(
                (linear.dim(), linear.dim()),
                (hessian.rows(), hessian.cols()),
            ));
        }
        if !linear.is_finite() {
            return Err(Error::NonFinite("quadratic linear term"));
        }
        let eig = symmetric_eigen(&hessian)?;
        let lipschitz = *eig.values.last().expect("nonempty");
        let mu = eig.values[0];
        if mu < -1e-12 * lipschitz.abs().max(1.0) {
            return Err(Error::param("hessian min eigenvalue", mu, "must be >= 0"));
        }
        Ok(Self {
            hessian,
            linear,
            mu: mu.max(0.0),
            lipschitz: lipschitz.max(0.0),
        })
    }

    /// `q(x) = 0` on `R^n`.
    pub fn zero(n: usize) -> Self {
        Self {
            hessian: LinearMap::zeros(n, n),
            linear: Vector::zeros(n),
            mu: 0.0,
            lipschitz: 0.0,
        }
    }

    /// `1/2 ||x - c||^2` up to the constant `1/2 ||c||^2`.
    pub fn squared_distance(center: Vector) -> Self {
        let n = center.dim();
        Self {
            hessian: LinearMap::identity(n),
            linear: center,
            mu: 1.0,
            lipschitz: 1.0,
        }
    }

    /// `1/2 ||A x - b||^2` (dropping `1/2 ||b||^2`), i.e. Hessian `A^T A`, linear term `A^T b`.
    pub fn least_squares(design: &LinearMap, obs: &Vector) -> Result<Self> {
        let linear = design.apply_adjoint(obs)?;
        Self::new(design.gram(), linear)
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn hessian(&self) -> &LinearMap {
        &self.hessian
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    /// Smallest Hessian eigenvalue (strong convexity modulus).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest Hessian eigenvalue (Lipschitz constant of the gradient).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let ax = self.hessian.apply_raw(x);
        0.5 * dot(x, &ax) - dot(&self.linear, x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.hessian.apply_raw(x).sub_raw(&self.linear)
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz == 0.0 && self.linear.norm_inf() == 0.0
    }
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    use crate::linalg::Point;
    a.inner(b)
}

/// Functions with an inexpensive proximal map.
#[derive(Clone, Debug)]
pub enum ProxFriendlyFunction {
    Zero,
    /// `weight * ||x||_1`.
    L1 { weight: f64 },
    /// Indicator of `[lo, hi]^n`; infinite bounds are allowed.
    Box { lo: f64, hi: f64 },
    Quadratic(SmoothQuadratic),
    /// Indicator of the closed Euclidean ball of `radius` at the origin.
    L2Ball { radius: f64 },
}

impl ProxFriendlyFunction {
    pub fn l1(weight: f64) -> Result<Self> {
        let f = Self::L1 { weight };
        f.validate()?;
        Ok(f)
    }

    pub fn boxed(lo: f64, hi: f64) -> Result<Self> {
        let f = Self::Box { lo, hi };
        f.validate()?;
        Ok(f)
    }

    pub fn l2_ball(radius: f64) -> Result<Self> {
        let f = Self::L2Ball { radius };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero | Self::Quadratic(_) => Ok(()),
            Self::L1 { weight } => {
                if !(weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::param("weight", weight, "must be finite and >= 0"));
                }
                Ok(())
            }
            Self::Box { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                    return Err(Error::param("lo", lo, format!("need lo <= hi (hi = {hi})")));
                }
                Ok(())
            }
            Self::L2Ball { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("radius", radius, "must be finite and > 0"));
                }
                Ok(())
            }
        }
    }

    /// Dimension constraint, if the function carries data.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Quadratic(q) => Some(q.dim()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::L1 { weight } => *weight == 0.0,
            Self::Box { lo, hi } => lo.is_infinite() && hi.is_infinite(),
            Self::Quadratic(q) => q.is_zero(),
            Self::L2Ball { .. } => false,
        }
    }

    /// Function value; indicators return `0` or `+inf`, with a relative
    /// feasibility slack of `1e-12` so projected points count as inside.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::L1 { weight } => weight * x.as_slice().iter().map(|c| c.abs()).sum::<f64>(),
            Self::Box { lo, hi } => {
                let lo_tol = lo - 1e-12 * (1.0 + lo.abs());
                let hi_tol = hi + 1e-12 * (1.0 + hi.abs());
                if x.as_slice().iter().all(|&c| c >= lo_tol && c <= hi_tol) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Quadratic(q) => q.value(x),
            Self::L2Ball { radius } => {
                if x.norm() <= radius * (1.0 + 1e-12) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_u f(u) + ||u - v||^2 / (2 rho)`.
    pub fn prox(&self, rho: f64, v: &Vector) -> Result<Vector> {
        self.prepare(rho, v.dim())?.apply(v)
    }

    /// Binds a step size, factoring anything that can be reused across calls.
    pub fn prepare(&self, rho: f64, dim: usize) -> Result<PreparedProx> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param("rho", rho, "must be finite and > 0"));
        }
        self.validate()?;
        if let Some(d) = self.dim() {
            if d != dim {
                return Err(Error::dims(d, dim));
            }
        }
        let kind = match self {
            Self::Zero => PreparedKind::Identity,
            Self::L1 { weight } => PreparedKind::SoftThreshold(rho * weight),
            Self::Box { lo, hi } => PreparedKind::Clamp(*lo, *hi),
            Self::L2Ball { radius } => PreparedKind::Ball(*radius),
            Self::Quadratic(q) => {
                // (I + rho A) u = v + rho b
                let m = LinearMap::identity(dim).combine(1.0, q.hessian(), rho)?;
                let shift = q.linear().scale(rho);
                match m.diagonal_entries() {
                    Some(d) => {
                        if let Some(row) = d.iter().position(|&v| !(v > 0.0)) {
                            return Err(Error::NotPositiveDefinite { row, pivot: d[row] });
                        }
                        PreparedKind::Diagonal {
                            inv: d.iter().map(|v| 1.0 / v).collect(),
                            shift,
                        }
                    }
                    None => PreparedKind::Linear {
                        factor: Cholesky::factor(&m)?,
                        shift,
                    },
                }
            }
        };
        Ok(PreparedProx { dim, kind })
    }
}

#[derive(Clone, Debug)]
enum PreparedKind {
    Identity,
    SoftThreshold(f64),
    Clamp(f64, f64),
    Ball(f64),
    Linear { factor: Cholesky, shift: Vector },
    Diagonal { inv: Vec<f64>, shift: Vector },
}

/// A proximal map with its step size fixed.
#[derive(Clone, Debug)]
pub struct PreparedProx {
    dim: usize,
    kind: PreparedKind,
}

impl PreparedProx {
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if v.dim() != self.dim {
            return Err(Error::dims(self.dim, v.dim()));
        }
        Ok(self.apply_raw(v))
    }

    pub(crate) fn apply_raw(&self, v: &Vector) -> Vector {
        match &self.kind {
            PreparedKind::Identity => v.clone(),
            PreparedKind::SoftThreshold(t) => v.map(|c| soft_threshold(c, *t)),
            PreparedKind::Clamp(lo, hi) => v.map(|c| c.max(*lo).min(*hi)),
            PreparedKind::Ball(r) => {
                let n = v.norm();
                if n <= *r {
                    v.clone()
                } else {
                    v.scale(r / n)
                }
            }
            PreparedKind::Linear { factor, shift } => factor.solve_raw(&v.add_raw(shift)),
            PreparedKind::Diagonal { inv, shift } => Vector::from_raw(
                v.as_slice()
                    .iter()
                    .zip(shift.as_slice())
                    .zip(inv)
                    .map(|((a, b), d)| (a + b) * d)
                    .collect(),
            ),
        }
    }
}

/// `sign(c) * max(|c| - t, 0)`.
pub fn soft_threshold(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// Proximal map of the convex conjugate through Moreau's identity:
/// `prox_{sigma g*}(w) = w - sigma prox_{g / sigma}(w / sigma)`.
pub fn prox_conjugate(g: &ProxFriendlyFunction, sigma: f64, w: &Vector) -> Result<Vector> {
    PreparedConjugate::new(g, sigma, w.dim())?.apply(w)
}

/// `prox_{sigma g*}` with `sigma` bound.
#[derive(Clone, Debug)]
pub struct PreparedConjugate {
    sigma: f64,
    inner: PreparedProx,
}

impl PreparedConjugate {
    pub fn new(g: &ProxFriendlyFunction, sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", sigma, "must be finite and > 0"));
        }
        Ok(Self {
            sigma,
            inner: g.prepare(1.0 / sigma, dim)?,
        })
    }

    pub fn apply(&self, w: &Vector) -> Result<Vector> {
        if w.dim() != self.inner.dim {
            return Err(Error::dims(self.inner.dim, w.dim()));
        }
        Ok(self.apply_raw(w))
    }

    pub(crate) fn apply_raw(&self, w: &Vector) -> Vector {
        let p = self.inner.apply_raw(&w.scale(1.0 / self.sigma));
        w.lincomb_raw(1.0, &p, -self.sigma)
    }
}
