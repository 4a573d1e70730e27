//! Seed-reproducible Brownian paths.
//!
//! Increments come from a counter-based generator: every draw is a pure
//! function of `(seed, stream_id, component, index)`, so replicates can be
//! generated in any order (or in parallel) with identical results. Gaussians
//! are produced by a deterministic inverse-CDF transform rather than
//! rejection sampling, which keeps output bit-identical across platforms.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;

/// Two independent discretized Wiener processes on a uniform grid.
///
/// `W_i(t_k)` is recovered as the prefix sum of `inc_i`; `W_i(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    seed: u64,
    stream_id: u64,
    inc1: Vec<f64>,
    inc2: Vec<f64>,
}

impl BrownianPath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.inc1.len()
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.inc1.len() as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Increments of the first Brownian motion, each N(0, dt).
    pub fn inc1(&self) -> &[f64] {
        &self.inc1
    }

    /// Increments of the second Brownian motion.
    pub fn inc2(&self) -> &[f64] {
        &self.inc2
    }
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: bijective, avalanche-complete.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, w: u64) -> u64 {
    mix(h.wrapping_add(GAMMA).wrapping_add(w))
}

/// Pure counter hash of the full draw key.
#[inline]
fn counter_bits(seed: u64, stream_id: u64, component: u64, index: u64) -> u64 {
    absorb(absorb(absorb(mix(seed.wrapping_add(GAMMA)), stream_id), component), index)
}

/// Maps 64 random bits to the open interval (0, 1): the top 52 bits index
/// half-steps of a 2⁻⁵² lattice, `(u + 0.5)·2⁻⁵²`. Every such value is
/// exactly representable (for `u ≥ 2⁵¹` the f64 spacing is exactly ½, below
/// that it is finer), so the endpoints are unreachable — the range is
/// exactly `[2⁻⁵³, 1 − 2⁻⁵³]` — and complementing the bits negates the
/// uniform around ½ without rounding. A 53-bit variant would not have that
/// property: `(2⁵³ − 1) + 0.5` already rounds up to 2⁵³, mapping all-ones
/// bits onto 1.0.
#[inline]
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, accurate to ~1e-16 relative). Returns NaN outside (0, 1).
pub fn normal_inv_cdf(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    let q = p - 0.5;
    if math::abs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_870_1e4)
            * r
            + 4.592_195_393_154_987_1e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = (((((((5.226_495_278_852_854e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_6e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r)
            + 1.0;
        return num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = math::sqrt(-math::ln(r));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        let num = (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r)
            + 1.423_437_110_749_683_5;
        let den = (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r)
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r)
            + 6.657_904_643_501_103;
        let den = (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_132_5e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r)
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Generates both Brownian increment sequences for one replicate stream.
///
/// Every increment is an independent N(0, dt) draw keyed by
/// `(seed, stream_id, component, index)`; regeneration with the same key
/// reproduces identical bits.
pub fn generate(
    seed: u64,
    stream_id: u64,
    dt: f64,
    n_steps: usize,
) -> Result<BrownianPath, CoreError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::InvalidArgument { what: "dt must be positive and finite" });
    }
    let scale = math::sqrt(dt);
    let mut inc1 = Vec::with_capacity(n_steps);
    let mut inc2 = Vec::with_capacity(n_steps);
    for k in 0..n_steps as u64 {
        let u1 = uniform_open(counter_bits(seed, stream_id, 0, k));
        let u2 = uniform_open(counter_bits(seed, stream_id, 1, k));
        inc1.push(scale * normal_inv_cdf(u1));
        inc2.push(scale * normal_inv_cdf(u2));
    }
    Ok(BrownianPath { dt, seed, stream_id, inc1, inc2 })
}

/// Sums consecutive groups of `factor` increments, producing the same
/// Brownian motion sampled on a grid `factor` times coarser. Prefix sums at
/// shared grid points agree with the fine path up to re-association rounding.
pub fn coarsen(path: &BrownianPath, factor: usize) -> Result<BrownianPath, CoreError> {
    if factor == 0 {
        return Err(CoreError::InvalidArgument { what: "coarsening factor must be positive" });
    }
    let n = path.n_steps();
    if n % factor != 0 {
        return Err(CoreError::NonDivisible { n_steps: n, factor });
    }
    let sum_chunks =
        |inc: &[f64]| -> Vec<f64> { inc.chunks(factor).map(|c| c.iter().sum()).collect() };
    Ok(BrownianPath {
        dt: path.dt * factor as f64,
        seed: path.seed,
        stream_id: path.stream_id,
        inc1: sum_chunks(&path.inc1),
        inc2: sum_chunks(&path.inc2),
    })
}
