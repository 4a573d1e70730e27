//! Model parameters, vector field, equilibria, and the closed-form
//! quantities behind classification, moment bounds and persistence.

use crate::error::CoreError;
use crate::math;

/// The ten model constants plus the initial state.
///
/// Units: `r1, r2, b1, b2` are rates (1/time); `k1, k2` are saturation
/// capacities (population); `eps1, eps2` are self-limitation coefficients
/// (1/(population·time)); `alpha1, alpha2` are noise intensities (1/√time);
/// `x0, y0` are initial densities (population).
///
/// `b_i = eps_i = 0` is allowed: it reduces the system to geometric Brownian
/// motion, which the convergence study relies on (an exact solution exists).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub r1: f64,
    pub r2: f64,
    pub b1: f64,
    pub b2: f64,
    pub k1: f64,
    pub k2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x0: f64,
    pub y0: f64,
}

impl ModelParams {
    /// Checks every parameter invariant; returns the first violated field.
    pub fn validate(&self) -> Result<(), CoreError> {
        fn req(ok: bool, field: &'static str) -> Result<(), CoreError> {
            if ok {
                Ok(())
            } else {
                Err(CoreError::InvalidParams { field })
            }
        }
        req(self.r1.is_finite() && self.r1 > 0.0, "r1")?;
        req(self.r2.is_finite() && self.r2 > 0.0, "r2")?;
        req(self.b1.is_finite() && self.b1 >= 0.0, "b1")?;
        req(self.b2.is_finite() && self.b2 >= 0.0, "b2")?;
        req(self.k1.is_finite() && self.k1 > 0.0, "k1")?;
        req(self.k2.is_finite() && self.k2 > 0.0, "k2")?;
        req(self.eps1.is_finite() && self.eps1 >= 0.0, "eps1")?;
        req(self.eps2.is_finite() && self.eps2 >= 0.0, "eps2")?;
        req(self.alpha1.is_finite() && self.alpha1 >= 0.0, "alpha1")?;
        req(self.alpha2.is_finite() && self.alpha2 >= 0.0, "alpha2")?;
        req(self.x0.is_finite() && self.x0 > 0.0, "x0")?;
        req(self.y0.is_finite() && self.y0 > 0.0, "y0")?;
        Ok(())
    }

    /// Validates and returns self, for construction chains.
    pub fn validated(self) -> Result<Self, CoreError> {
        self.validate()?;
        Ok(self)
    }
}

/// A population state (both densities).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    /// Euclidean norm |X| = √(x² + y²).
    pub fn norm(&self) -> f64 {
        math::hypot(self.x, self.y)
    }
}

/// Deterministic rate of change at `s`.
///
/// Returns `(x(r1 - b1 x/(k1+y) - eps1 x), y(r2 - b2 y/(k2+x) - eps2 y))`.
/// Each component is exactly zero when its population coordinate is zero.
///
/// Panics on NaN coordinates; negative coordinates are the caller's bug but
/// are tolerated (the formula is still evaluated).
pub fn drift(s: State, p: &ModelParams) -> (f64, f64) {
    assert!(!s.x.is_nan() && !s.y.is_nan(), "drift: NaN state");
    let dx = s.x * (p.r1 - p.b1 * s.x / (p.k1 + s.y) - p.eps1 * s.x);
    let dy = s.y * (p.r2 - p.b2 * s.y / (p.k2 + s.x) - p.eps2 * s.y);
    (dx, dy)
}

/// Noise amplitude at `s`: `(alpha1·x, alpha2·y)`.
pub fn diffusion(s: State, p: &ModelParams) -> (f64, f64) {
    assert!(!s.x.is_nan() && !s.y.is_nan(), "diffusion: NaN state");
    (p.alpha1 * s.x, p.alpha2 * s.y)
}

/// Long-run fate of each species, decided by the signs of the margins
/// `m_i = r_i - alpha_i²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    /// Both margins positive: both species persist.
    Permanent,
    /// m1 < 0 < m2: species 1 dies out, species 2 persists in mean.
    XExtinctYPersistent,
    /// m2 < 0 < m1: species 2 dies out, species 1 persists in mean.
    YExtinctXPersistent,
    /// Both margins negative: both species die out.
    BothExtinct,
    /// A margin is exactly zero; the theory covers only strict signs, so
    /// downstream checks refuse to assert anything here.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeClassification {
    pub tag: RegimeTag,
    /// `(r1 - alpha1²/2, r2 - alpha2²/2)`, reported exactly as computed.
    pub margins: (f64, f64),
}

/// Classifies the asymptotic regime from the noise margins alone.
pub fn classify(p: &ModelParams) -> RegimeClassification {
    let m1 = p.r1 - 0.5 * p.alpha1 * p.alpha1;
    let m2 = p.r2 - 0.5 * p.alpha2 * p.alpha2;
    let tag = if m1 == 0.0 || m2 == 0.0 {
        RegimeTag::Boundary
    } else {
        match (m1 > 0.0, m2 > 0.0) {
            (true, true) => RegimeTag::Permanent,
            (false, true) => RegimeTag::XExtinctYPersistent,
            (true, false) => RegimeTag::YExtinctXPersistent,
            (false, false) => RegimeTag::BothExtinct,
        }
    };
    RegimeClassification { tag, margins: (m1, m2) }
}

/// The three boundary equilibria plus the interior one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    /// Total extinction (0, 0).
    pub e1: (f64, f64),
    /// Species 1 alone: `(r1/(eps1 + b1/k1), 0)`.
    pub e2: (f64, f64),
    /// Species 2 alone: `(0, r2/(eps2 + b2/k2))`.
    pub e3: (f64, f64),
    /// Interior equilibrium, both coordinates positive.
    pub e_star: (f64, f64),
    /// Max-norm residual of the equilibrium equations at `e_star`.
    pub residual: f64,
}

/// Residual of the interior-equilibrium system at (x, y):
/// `(r1 - b1 x/(k1+y) - eps1 x, r2 - b2 y/(k2+x) - eps2 y)`.
fn eq_residual(p: &ModelParams, x: f64, y: f64) -> (f64, f64) {
    (p.r1 - p.b1 * x / (p.k1 + y) - p.eps1 * x, p.r2 - p.b2 * y / (p.k2 + x) - p.eps2 * y)
}

fn res_norm(f: (f64, f64)) -> f64 {
    let a = math::abs(f.0);
    let b = math::abs(f.1);
    if a > b {
        a
    } else {
        b
    }
}

const SOLVER_BUDGET: usize = 200;

fn newton_interior(p: &ModelParams, x0: f64, y0: f64, tol: f64) -> Option<(f64, f64, f64)> {
    let (mut x, mut y) = (x0, y0);
    let mut f = eq_residual(p, x, y);
    let mut fnorm = res_norm(f);
    for _ in 0..SOLVER_BUDGET {
        if !fnorm.is_finite() {
            return None;
        }
        if fnorm <= tol {
            return Some((x, y, fnorm));
        }
        // Jacobian of the residual.
        let j11 = -p.b1 / (p.k1 + y) - p.eps1;
        let j12 = p.b1 * x / ((p.k1 + y) * (p.k1 + y));
        let j21 = p.b2 * y / ((p.k2 + x) * (p.k2 + x));
        let j22 = -p.b2 / (p.k2 + x) - p.eps2;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (-f.0 * j22 + f.1 * j12) / det;
        let dy = (-f.1 * j11 + f.0 * j21) / det;
        // Damp by halving until the residual drops and the state stays positive.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (xn, yn) = (x + lambda * dx, y + lambda * dy);
            if xn > 0.0 && yn > 0.0 {
                let fn_ = eq_residual(p, xn, yn);
                let n = res_norm(fn_);
                if n < fnorm {
                    x = xn;
                    y = yn;
                    f = fn_;
                    fnorm = n;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if fnorm <= tol {
        Some((x, y, fnorm))
    } else {
        None
    }
}

fn fixed_point_interior(p: &ModelParams, x0: f64, y0: f64, tol: f64) -> Option<(f64, f64, f64)> {
    let (mut x, mut y) = (x0, y0);
    for _ in 0..SOLVER_BUDGET {
        let fnorm = res_norm(eq_residual(p, x, y));
        if !fnorm.is_finite() || x <= 0.0 || y <= 0.0 {
            return None;
        }
        if fnorm <= tol {
            return Some((x, y, fnorm));
        }
        x = p.r1 / (p.eps1 + p.b1 / (p.k1 + y));
        y = p.r2 / (p.eps2 + p.b2 / (p.k2 + x));
    }
    let fnorm = res_norm(eq_residual(p, x, y));
    if fnorm.is_finite() && fnorm <= tol {
        Some((x, y, fnorm))
    } else {
        None
    }
}

/// Computes all equilibria. The interior point is found by damped Newton
/// iteration cross-checked against a fixed-point iteration; the two must
/// agree within `10·tol` or the solve is rejected.
pub fn equilibria(p: &ModelParams, tol: f64) -> Result<EquilibriumSet, CoreError> {
    p.validate()?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(CoreError::InvalidArgument { what: "tol must be positive and finite" });
    }
    let d2 = p.eps1 + p.b1 / p.k1;
    let d3 = p.eps2 + p.b2 / p.k2;
    if d2 == 0.0 || d3 == 0.0 {
        // No damping at all in one equation: growth is unbounded and no
        // positive equilibrium exists.
        return Err(CoreError::NoConvergence);
    }
    let e2 = (p.r1 / d2, 0.0);
    let e3 = (0.0, p.r2 / d3);

    // Start both solvers from the single-species equilibria; mutualism only
    // pushes the interior point up from there.
    let newton = newton_interior(p, e2.0, e3.1, tol).ok_or(CoreError::NoConvergence)?;
    let fixed = fixed_point_interior(p, e2.0, e3.1, tol).ok_or(CoreError::NoConvergence)?;
    let agree =
        math::abs(newton.0 - fixed.0) <= 10.0 * tol && math::abs(newton.1 - fixed.1) <= 10.0 * tol;
    if !agree {
        return Err(CoreError::NoConvergence);
    }
    Ok(EquilibriumSet { e1: (0.0, 0.0), e2, e3, e_star: (newton.0, newton.1), residual: newton.2 })
}

/// Analytic k-th moment bound for one species:
/// `H_i(k) = (1/eps_i^k) · [(1 + k·r_i + k(k-1)/2·alpha_i²) / (k+1)]^(k+1)`.
///
/// Returns `+inf` when `eps_i = 0` (the bound degenerates; there is no
/// self-limitation to bound the moments with).
pub fn moment_bound(p: &ModelParams, k: f64, species: Species) -> f64 {
    assert!(k > 0.0, "moment order must be positive");
    let (r, eps, alpha) = match species {
        Species::X => (p.r1, p.eps1, p.alpha1),
        Species::Y => (p.r2, p.eps2, p.alpha2),
    };
    let core = (1.0 + k * r + 0.5 * k * (k - 1.0) * alpha * alpha) / (k + 1.0);
    math::powf(core, k + 1.0) / math::powf(eps, k)
}

/// Species selector for per-species quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    X,
    Y,
}

/// Analytic time-average limits.
///
/// `lower_*` is the guaranteed lower bound for the species' long-run time
/// average when both margins are positive: `K_i·m_i/(b_i + eps_i·K_i)`.
/// `exact_*` is the exact limit `m_i/(b_i/K_i + eps_i)` valid when the other
/// species goes extinct. Values are negative when the margin is negative
/// (interpret via [`classify`]) and non-finite when the denominator is zero
/// (`b_i = eps_i = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceLimits {
    pub lower_x: f64,
    pub lower_y: f64,
    pub exact_x: f64,
    pub exact_y: f64,
}

pub fn persistence_limits(p: &ModelParams) -> PersistenceLimits {
    let m1 = p.r1 - 0.5 * p.alpha1 * p.alpha1;
    let m2 = p.r2 - 0.5 * p.alpha2 * p.alpha2;
    PersistenceLimits {
        lower_x: p.k1 * m1 / (p.b1 + p.eps1 * p.k1),
        lower_y: p.k2 * m2 / (p.b2 + p.eps2 * p.k2),
        exact_x: m1 / (p.b1 / p.k1 + p.eps1),
        exact_y: m2 / (p.b2 / p.k2 + p.eps2),
    }
}
