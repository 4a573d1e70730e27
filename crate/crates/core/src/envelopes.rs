//! Closed-form pathwise envelopes for the coupled system.
//!
//! Because the coupling term of each equation satisfies
//! `0 ≤ b1·x/(k1 + y) ≤ (b1/k1)·x` for `y ≥ 0`, each population is squeezed
//! between two one-dimensional stochastic logistic processes driven by the
//! *same* Brownian motion: dropping the coupling gives the upper process
//! (damping `eps1`), taking the coupling at `y = 0` gives the lower one
//! (damping `b1/k1 + eps1`), and symmetrically for `y`. Each comparison
//! process `dZ = Z(r − damp·Z)dt + alpha·Z·dW, Z(0) = z0` has the closed
//! form
//!
//! ```text
//! Z(t) = exp(g(t)) / (1/z0 + damp·∫₀ᵗ exp(g(s)) ds),
//! g(s) = (r − alpha²/2)·s + alpha·W(s),
//! ```
//!
//! which this module evaluates on the trajectory grid so the sandwich
//! `lam_lo ≤ x ≤ lam_hi`, `th_lo ≤ y ≤ th_hi` can be checked sample by
//! sample.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::integrate::Trajectory;
use crate::math;
use crate::model::ModelParams;
use crate::noise::BrownianPath;

/// The four comparison processes evaluated on one path's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSet {
    pub dt: f64,
    /// Upper/lower processes for the first population.
    pub lam_hi: Vec<f64>,
    pub lam_lo: Vec<f64>,
    /// Upper/lower processes for the second population.
    pub th_hi: Vec<f64>,
    pub th_lo: Vec<f64>,
}

impl EnvelopeSet {
    pub fn n_samples(&self) -> usize {
        self.lam_hi.len()
    }

    /// Grid time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }
}

/// Evaluates the stochastic logistic closed form on the grid `0, dt, 2dt, …`
/// for one Brownian component given by its increments.
///
/// The time integral uses trapezoidal quadrature on the same grid. To
/// survive large exponents the evaluation is carried out relative to the
/// running maximum of `g`: with `M_k = max(g_0..g_k)` the sample is
/// `exp(g_k − M_k) / (exp(−M_k)/z0 + damp·J_k)` where `J_k` is the
/// quadrature sum rescaled by `exp(−M_k)`. Samples that still underflow are
/// floored at the smallest positive normal so the output stays strictly
/// positive.
pub fn stochastic_logistic_exact(
    r: f64,
    damp: f64,
    alpha: f64,
    z0: f64,
    dt: f64,
    dw: &[f64],
) -> Result<Vec<f64>, CoreError> {
    if !r.is_finite() || !alpha.is_finite() {
        return Err(CoreError::InvalidArgument { what: "r and alpha must be finite" });
    }
    if !(damp >= 0.0) || !damp.is_finite() {
        return Err(CoreError::InvalidArgument { what: "damp must be finite and >= 0" });
    }
    if !(z0 > 0.0) || !z0.is_finite() {
        return Err(CoreError::InvalidArgument { what: "z0 must be finite and > 0" });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::InvalidArgument { what: "dt must be finite and > 0" });
    }
    let a = r - 0.5 * alpha * alpha;
    let n = dw.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(z0);

    if damp == 0.0 {
        // Degenerate geometric case: Z = z0·exp(g) directly.
        let mut w = 0.0;
        for (k, &inc) in dw.iter().enumerate() {
            w += inc;
            let t = dt * (k + 1) as f64;
            let z = z0 * math::exp(a * t + alpha * w);
            if !z.is_finite() {
                return Err(CoreError::Overflow { step: k });
            }
            out.push(z.max(f64::MIN_POSITIVE));
        }
        return Ok(out);
    }

    let mut w = 0.0;
    let mut g_prev = 0.0; // g at the previous grid point
    let mut m = 0.0; // running max of g (g_0 = 0, so m >= 0)
    let mut j = 0.0; // trapezoid sum, scaled by exp(-m)
    for (k, &inc) in dw.iter().enumerate() {
        w += inc;
        let t = dt * (k + 1) as f64;
        let g = a * t + alpha * w;
        if !g.is_finite() {
            return Err(CoreError::Overflow { step: k });
        }
        if g > m {
            j *= math::exp(m - g);
            m = g;
        }
        j += 0.5 * dt * (math::exp(g_prev - m) + math::exp(g - m));
        g_prev = g;
        let z = math::exp(g - m) / (math::exp(-m) / z0 + damp * j);
        if !z.is_finite() {
            return Err(CoreError::Overflow { step: k });
        }
        out.push(z.max(f64::MIN_POSITIVE));
    }
    Ok(out)
}

/// Builds all four comparison processes for `p` on `path`'s grid: the first
/// population's pair uses the first noise component, the second pair the
/// second component. The lower processes use the strictly larger damping
/// `b_i/k_i + eps_i`, so `lam_lo ≤ lam_hi` and `th_lo ≤ th_hi` hold exactly.
pub fn build_envelopes(p: &ModelParams, path: &BrownianPath) -> Result<EnvelopeSet, CoreError> {
    p.validate()?;
    let dt = path.dt();
    let lam_hi = stochastic_logistic_exact(p.r1, p.eps1, p.alpha1, p.x0, dt, path.inc1())?;
    let lam_lo =
        stochastic_logistic_exact(p.r1, p.b1 / p.k1 + p.eps1, p.alpha1, p.x0, dt, path.inc1())?;
    let th_hi = stochastic_logistic_exact(p.r2, p.eps2, p.alpha2, p.y0, dt, path.inc2())?;
    let th_lo =
        stochastic_logistic_exact(p.r2, p.b2 / p.k2 + p.eps2, p.alpha2, p.y0, dt, path.inc2())?;
    Ok(EnvelopeSet { dt, lam_hi, lam_lo, th_hi, th_lo })
}

/// Sandwich diagnostics for one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesSandwich {
    /// Largest slack-adjusted relative violation; exactly 0.0 when
    /// `lo·(1 − rel_tol) ≤ z ≤ hi·(1 + rel_tol)` holds at every sample.
    pub max_violation: f64,
    /// First grid index where the slacked bounds fail.
    pub first_violation: Option<usize>,
    /// Largest signed relative excess above the upper process, `(z − hi)/hi`
    /// (negative when the samples stay strictly inside).
    pub max_excess_hi: f64,
    /// Largest signed relative excess below the lower process, `(lo − z)/lo`.
    pub max_excess_lo: f64,
}

/// Result of checking one trajectory against its envelope set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub rel_tol: f64,
    pub x: SpeciesSandwich,
    pub y: SpeciesSandwich,
    /// True iff neither population violates the slacked bounds anywhere.
    pub pass: bool,
}

fn species_sandwich(zs: &[f64], lo: &[f64], hi: &[f64], rel_tol: f64) -> SpeciesSandwich {
    let mut rep = SpeciesSandwich {
        max_violation: 0.0,
        first_violation: None,
        max_excess_hi: f64::NEG_INFINITY,
        max_excess_lo: f64::NEG_INFINITY,
    };
    for k in 0..zs.len() {
        let e_hi = (zs[k] - hi[k]) / hi[k];
        let e_lo = (lo[k] - zs[k]) / lo[k];
        rep.max_excess_hi = rep.max_excess_hi.max(e_hi);
        rep.max_excess_lo = rep.max_excess_lo.max(e_lo);
        let v_hi = (zs[k] - hi[k] * (1.0 + rel_tol)) / hi[k];
        let v_lo = (lo[k] * (1.0 - rel_tol) - zs[k]) / lo[k];
        let v = v_hi.max(v_lo);
        if v > 0.0 {
            rep.max_violation = rep.max_violation.max(v);
            if rep.first_violation.is_none() {
                rep.first_violation = Some(k);
            }
        }
    }
    rep
}

/// Checks the pathwise sandwich `lam_lo·(1 − rel_tol) ≤ x ≤ lam_hi·(1 +
/// rel_tol)` (and likewise for `y`) sample by sample. The multiplicative
/// slack absorbs the discretization error both sides carry; the inequality
/// itself is exact only for the continuous-time solutions.
pub fn check_sandwich(
    traj: &Trajectory,
    env: &EnvelopeSet,
    rel_tol: f64,
) -> Result<SandwichReport, CoreError> {
    if !(rel_tol >= 0.0) || !rel_tol.is_finite() {
        return Err(CoreError::InvalidArgument { what: "rel_tol must be finite and >= 0" });
    }
    if env.dt.to_bits() != traj.dt.to_bits()
        || env.lam_hi.len() != traj.xs.len()
        || env.lam_lo.len() != traj.xs.len()
        || env.th_hi.len() != traj.ys.len()
        || env.th_lo.len() != traj.ys.len()
    {
        return Err(CoreError::GridMismatch);
    }
    let x = species_sandwich(&traj.xs, &env.lam_lo, &env.lam_hi, rel_tol);
    let y = species_sandwich(&traj.ys, &env.th_lo, &env.th_hi, rel_tol);
    let pass = x.first_violation.is_none() && y.first_violation.is_none();
    Ok(SandwichReport { rel_tol, x, y, pass })
}
