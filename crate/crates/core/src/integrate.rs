//! Time-stepping schemes for the SDE system.
//!
//! Three schemes: Euler–Maruyama, Milstein (the diagonal-noise correction
//! `(alpha²/2)·z·(dW² − dt)` — no Lévy areas are needed because each equation
//! is driven by its own Brownian motion), and a log-space Euler scheme that
//! steps `(ln x, ln y)` and is therefore positive by construction. On the
//! geometric reduction `b = eps = 0` the log-space scheme is exact.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;
use crate::model::{ModelParams, State};
use crate::noise::BrownianPath;

/// Integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeId {
    EulerMaruyama,
    Milstein,
    LogEuler,
}

/// A step left the finite range; the enclosing driver attaches the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepError;

/// One step's result: the new state and how many components (0..=2) had to
/// be clamped back to the positivity floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    pub clamps: u32,
}

/// Relative positivity floor: components that land at or below zero are
/// clamped to `1e-12·x0` (resp. `y0`). The true solution is strictly
/// positive; clamp counts expose a dt too coarse for the noise level.
pub const CLAMP_FLOOR_REL: f64 = 1e-12;

fn finish_clamped(x: f64, y: f64, p: &ModelParams) -> Result<StepOutcome, StepError> {
    let mut clamps = 0;
    let mut x = x;
    let mut y = y;
    if x <= 0.0 {
        x = CLAMP_FLOOR_REL * p.x0;
        clamps += 1;
    }
    if y <= 0.0 {
        y = CLAMP_FLOOR_REL * p.y0;
        clamps += 1;
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(StepError);
    }
    Ok(StepOutcome { state: State { x, y }, clamps })
}

/// Euler–Maruyama: `z' = z + drift·dt + alpha·z·dW`, then the positivity
/// clamp.
pub fn step_euler(
    s: State,
    p: &ModelParams,
    dw: (f64, f64),
    dt: f64,
) -> Result<StepOutcome, StepError> {
    let ax = s.x * (p.r1 - p.b1 * s.x / (p.k1 + s.y) - p.eps1 * s.x);
    let ay = s.y * (p.r2 - p.b2 * s.y / (p.k2 + s.x) - p.eps2 * s.y);
    let x = s.x + ax * dt + p.alpha1 * s.x * dw.0;
    let y = s.y + ay * dt + p.alpha2 * s.y * dw.1;
    finish_clamped(x, y, p)
}

/// Milstein: Euler–Maruyama plus the diagonal correction
/// `(alpha²/2)·z·(dW² − dt)`, then the positivity clamp.
pub fn step_milstein(
    s: State,
    p: &ModelParams,
    dw: (f64, f64),
    dt: f64,
) -> Result<StepOutcome, StepError> {
    let ax = s.x * (p.r1 - p.b1 * s.x / (p.k1 + s.y) - p.eps1 * s.x);
    let ay = s.y * (p.r2 - p.b2 * s.y / (p.k2 + s.x) - p.eps2 * s.y);
    let x = s.x
        + ax * dt
        + p.alpha1 * s.x * dw.0
        + 0.5 * p.alpha1 * p.alpha1 * s.x * (dw.0 * dw.0 - dt);
    let y = s.y
        + ay * dt
        + p.alpha2 * s.y * dw.1
        + 0.5 * p.alpha2 * p.alpha2 * s.y * (dw.1 * dw.1 - dt);
    finish_clamped(x, y, p)
}

/// Log-space Euler: steps `u = ln x, v = ln y` with the transformed drift
/// `r − alpha²/2 − b·z/(k + other) − eps·z`, returning `(e^u', e^v')`.
/// Output is strictly positive with no clamp; an exponent that exhausts the
/// f64 range (overflow or underflow to zero) is an error.
pub fn step_log_euler(
    s: State,
    p: &ModelParams,
    dw: (f64, f64),
    dt: f64,
) -> Result<StepOutcome, StepError> {
    debug_assert!(s.x > 0.0 && s.y > 0.0, "log scheme needs positive state");
    let gx = (p.r1 - 0.5 * p.alpha1 * p.alpha1 - p.b1 * s.x / (p.k1 + s.y) - p.eps1 * s.x) * dt
        + p.alpha1 * dw.0;
    let gy = (p.r2 - 0.5 * p.alpha2 * p.alpha2 - p.b2 * s.y / (p.k2 + s.x) - p.eps2 * s.y) * dt
        + p.alpha2 * dw.1;
    let x = s.x * math::exp(gx);
    let y = s.y * math::exp(gy);
    if !x.is_finite() || !y.is_finite() || x == 0.0 || y == 0.0 {
        return Err(StepError);
    }
    Ok(StepOutcome { state: State { x, y }, clamps: 0 })
}

/// One integrator run on one Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: SchemeId,
    pub dt: f64,
    /// State samples at every grid point; `xs[0] = x0`.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Key of the generating path, `(seed, stream_id)`.
    pub path_key: (u64, u64),
    /// Components clamped to the positivity floor over the whole run.
    pub clamp_count: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    /// Grid time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn terminal(&self) -> State {
        State { x: self.xs[self.xs.len() - 1], y: self.ys[self.ys.len() - 1] }
    }

    /// State at the grid point nearest to `t_end/2` (used by permanence
    /// stability checks).
    pub fn midpoint(&self) -> State {
        let m = self.n_steps() / 2;
        State { x: self.xs[m], y: self.ys[m] }
    }
}

/// Applies `scheme` over the whole path, recording every state. Deterministic
/// given `(p, scheme, path)`. Fails with the step index on overflow.
pub fn simulate(
    p: &ModelParams,
    scheme: SchemeId,
    path: &BrownianPath,
) -> Result<Trajectory, CoreError> {
    p.validate()?;
    let n = path.n_steps();
    let dt = path.dt();
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut s = State { x: p.x0, y: p.y0 };
    let mut clamp_count = 0u64;
    xs.push(s.x);
    ys.push(s.y);
    let step = match scheme {
        SchemeId::EulerMaruyama => step_euler,
        SchemeId::Milstein => step_milstein,
        SchemeId::LogEuler => step_log_euler,
    };
    for k in 0..n {
        let dw = (path.inc1()[k], path.inc2()[k]);
        let out = step(s, p, dw, dt).map_err(|StepError| CoreError::Overflow { step: k })?;
        s = out.state;
        clamp_count += out.clamps as u64;
        xs.push(s.x);
        ys.push(s.y);
    }
    Ok(Trajectory { scheme, dt, xs, ys, path_key: (path.seed(), path.stream_id()), clamp_count })
}
