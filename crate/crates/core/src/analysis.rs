//! Estimators and ensemble statistics.
//!
//! The long-run statements about the system — moment boundedness, permanence,
//! persistence in mean, extinction — are asymptotic. This module computes the
//! finite-horizon estimators that make them empirically checkable: running
//! time-averages and log-growth rates per path, terminal moments against the
//! analytic bounds `H_i(k)`, terminal-norm quantiles for permanence, outcome
//! classification per replicate, and a Hölder-modulus diagnostic.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::integrate::{simulate, SchemeId, Trajectory};
use crate::math;
use crate::model::{moment_bound, ModelParams, RegimeTag, Species, State};
use crate::noise;

/// A species counts as empirically extinct in a replicate when its time
/// average falls below this threshold…
pub const EXTINCTION_TIME_AVG_MAX: f64 = 0.01;
/// …and its terminal value below this one. The continuous-time notion is
/// asymptotic (`z(t) → 0` a.s.) and gives no finite-time criterion; the pair
/// of thresholds is the conventional stand-in at `t_end = 200`.
pub const EXTINCTION_TERMINAL_MAX: f64 = 1e-3;

/// Per-path statistics over one trajectory.
///
/// Time averages use trapezoidal quadrature over the post-burn-in window
/// `[t_burn, t_end]`; early transients would otherwise bias them away from
/// the asymptotic limits they estimate. Log-growth rates use the terminal
/// sample over the full horizon, `ln z(t_end) / t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats {
    pub t_end: f64,
    pub t_burn: f64,
    pub time_avg_x: f64,
    pub time_avg_y: f64,
    pub log_growth_x: f64,
    pub log_growth_y: f64,
    /// Extrema of `|X(t)| = √(x² + y²)` over `[t_burn, t_end]`.
    pub min_norm: f64,
    pub max_norm: f64,
    pub clamp_count: u64,
}

/// Computes [`PathStats`] for one trajectory.
///
/// `t_burn` must lie in `[0, t_end)`; it is rounded to the nearest grid
/// point (at most the last step start). Trajectories with non-positive or
/// non-finite samples are rejected — logs would be meaningless.
pub fn path_stats(traj: &Trajectory, t_burn: f64) -> Result<PathStats, CoreError> {
    let n = traj.n_steps();
    if n == 0 {
        return Err(CoreError::InvalidArgument { what: "trajectory has no steps" });
    }
    let t_end = traj.t_end();
    if !(t_burn >= 0.0) || !(t_burn < t_end) {
        return Err(CoreError::InvalidArgument { what: "t_burn must lie in [0, t_end)" });
    }
    for k in 0..=n {
        if !(traj.xs[k] > 0.0)
            || !traj.xs[k].is_finite()
            || !(traj.ys[k] > 0.0)
            || !traj.ys[k].is_finite()
        {
            return Err(CoreError::NonPositiveSample { index: k });
        }
    }
    let i_burn = usize::min((t_burn / traj.dt + 0.5) as usize, n - 1);
    let m = n - i_burn;
    // Trapezoid over the window divided by its length; dt cancels.
    let mut sx = 0.5 * (traj.xs[i_burn] + traj.xs[n]);
    let mut sy = 0.5 * (traj.ys[i_burn] + traj.ys[n]);
    for k in (i_burn + 1)..n {
        sx += traj.xs[k];
        sy += traj.ys[k];
    }
    let mut min_norm = f64::INFINITY;
    let mut max_norm = 0.0f64;
    for k in i_burn..=n {
        let norm = math::hypot(traj.xs[k], traj.ys[k]);
        min_norm = min_norm.min(norm);
        max_norm = max_norm.max(norm);
    }
    Ok(PathStats {
        t_end,
        t_burn: traj.time(i_burn),
        time_avg_x: sx / m as f64,
        time_avg_y: sy / m as f64,
        log_growth_x: math::ln(traj.xs[n]) / t_end,
        log_growth_y: math::ln(traj.ys[n]) / t_end,
        min_norm,
        max_norm,
        clamp_count: traj.clamp_count,
    })
}

/// Replicate-rule outcome: `(x_extinct, y_extinct)`, where a species is
/// extinct iff its time average and terminal value both fall under the
/// thresholds above.
pub fn extinct_in_replicate(stats: &PathStats, terminal: State) -> (bool, bool) {
    (
        stats.time_avg_x < EXTINCTION_TIME_AVG_MAX && terminal.x < EXTINCTION_TERMINAL_MAX,
        stats.time_avg_y < EXTINCTION_TIME_AVG_MAX && terminal.y < EXTINCTION_TERMINAL_MAX,
    )
}

/// Growth-rule outcome: `(x_extinct, y_extinct)`, where a species is extinct
/// iff its time average is under the threshold and its log-growth rate is
/// negative. Used for concordance with the analytic classification.
pub fn extinct_by_growth(stats: &PathStats) -> (bool, bool) {
    (
        stats.time_avg_x < EXTINCTION_TIME_AVG_MAX && stats.log_growth_x < 0.0,
        stats.time_avg_y < EXTINCTION_TIME_AVG_MAX && stats.log_growth_y < 0.0,
    )
}

/// Successful replicate payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateData {
    pub stats: PathStats,
    pub terminal: State,
    /// State at the grid point nearest `t_end/2`, for quantile stability.
    pub midpoint: State,
}

/// One replicate's outcome; `data` is `None` when the integrator overflowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateRecord {
    pub stream_id: u64,
    pub data: Option<ReplicateData>,
}

/// Runs one replicate end to end: path generation on `(seed, stream_id)`,
/// integration, statistics. Integration failures yield an empty record
/// instead of an error so ensembles can continue.
pub fn run_replicate(
    p: &ModelParams,
    scheme: SchemeId,
    dt: f64,
    n_steps: usize,
    t_burn: f64,
    seed: u64,
    stream_id: u64,
) -> ReplicateRecord {
    let data = (|| {
        let path = noise::generate(seed, stream_id, dt, n_steps).ok()?;
        let traj = simulate(p, scheme, &path).ok()?;
        let stats = path_stats(&traj, t_burn).ok()?;
        Some(ReplicateData { stats, terminal: traj.terminal(), midpoint: traj.midpoint() })
    })();
    ReplicateRecord { stream_id, data }
}

/// Sample mean with its standard error (`sd/√n`; zero when `n ≤ 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    assert!(n > 0, "mean_se of an empty sample");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0 };
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    MeanSe { mean, se: math::sqrt(ss / (n - 1) as f64 / n as f64) }
}

/// Terminal-moment estimates for one order `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimates {
    pub k: u32,
    /// `E[x(t_end)^k]`, `E[y(t_end)^k]`, `E[|X(t_end)|^k]`.
    pub ex: MeanSe,
    pub ey: MeanSe,
    pub enorm: MeanSe,
}

/// Aggregated ensemble statistics. Deterministic in `(params, scheme, seed,
/// grid)` regardless of how the replicates were scheduled: aggregation runs
/// in ascending `stream_id` order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub n_replicates: usize,
    pub n_failed: usize,
    pub k_list: Vec<u32>,
    pub records: Vec<ReplicateRecord>,
    pub time_avg_x: MeanSe,
    pub time_avg_y: MeanSe,
    pub log_growth_x: MeanSe,
    pub log_growth_y: MeanSe,
    /// Aligned with `k_list`.
    pub moments: Vec<MomentEstimates>,
    /// `|X|` samples at the midpoint and terminal times, sorted ascending.
    pub norms_mid: Vec<f64>,
    pub norms_end: Vec<f64>,
}

fn sorted_quantile(sorted: &[f64], q: f64) -> Result<f64, CoreError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CoreError::InvalidArgument { what: "quantile level must lie in [0, 1]" });
    }
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let idx = usize::min(sorted.len() - 1, (q * (sorted.len() - 1) as f64 + 0.5) as usize);
    Ok(sorted[idx])
}

impl EnsembleSummary {
    pub fn n_ok(&self) -> usize {
        self.n_replicates - self.n_failed
    }

    /// Empirical quantile (nearest rank) of `|X(t_end)|`.
    pub fn quantile_norm_end(&self, q: f64) -> Result<f64, CoreError> {
        sorted_quantile(&self.norms_end, q)
    }

    /// Empirical quantile (nearest rank) of `|X(t_end/2)|`.
    pub fn quantile_norm_mid(&self, q: f64) -> Result<f64, CoreError> {
        sorted_quantile(&self.norms_mid, q)
    }
}

fn sort_ascending(v: &mut Vec<f64>) {
    // Samples are finite and positive, so total_cmp and partial order agree.
    v.sort_unstable_by(f64::total_cmp);
}

/// Aggregates per-replicate records into an [`EnsembleSummary`].
///
/// Failed replicates are excluded from every statistic but stay in
/// `records`; more than 10% failures fails the whole ensemble.
pub fn summarize(
    records: Vec<ReplicateRecord>,
    k_list: &[u32],
) -> Result<EnsembleSummary, CoreError> {
    let total = records.len();
    if total == 0 {
        return Err(CoreError::InvalidArgument { what: "no replicates" });
    }
    let failed = records.iter().filter(|r| r.data.is_none()).count();
    if 10 * failed > total {
        return Err(CoreError::EnsembleFailure { failed, total });
    }
    let ok: Vec<&ReplicateData> = records.iter().filter_map(|r| r.data.as_ref()).collect();
    let collect =
        |f: &dyn Fn(&ReplicateData) -> f64| -> Vec<f64> { ok.iter().map(|d| f(d)).collect() };
    let time_avg_x = mean_se(&collect(&|d| d.stats.time_avg_x));
    let time_avg_y = mean_se(&collect(&|d| d.stats.time_avg_y));
    let log_growth_x = mean_se(&collect(&|d| d.stats.log_growth_x));
    let log_growth_y = mean_se(&collect(&|d| d.stats.log_growth_y));
    let moments = k_list
        .iter()
        .map(|&k| {
            let kk = k as f64;
            MomentEstimates {
                k,
                ex: mean_se(&collect(&|d| math::powf(d.terminal.x, kk))),
                ey: mean_se(&collect(&|d| math::powf(d.terminal.y, kk))),
                enorm: mean_se(&collect(&|d| math::powf(d.terminal.norm(), kk))),
            }
        })
        .collect();
    let mut norms_mid = collect(&|d| d.midpoint.norm());
    let mut norms_end = collect(&|d| d.terminal.norm());
    sort_ascending(&mut norms_mid);
    sort_ascending(&mut norms_end);
    Ok(EnsembleSummary {
        n_replicates: total,
        n_failed: failed,
        k_list: k_list.to_vec(),
        records,
        time_avg_x,
        time_avg_y,
        log_growth_x,
        log_growth_y,
        moments,
        norms_mid,
        norms_end,
    })
}

/// Monte Carlo driver: replicate `j` uses `stream_id = j` on the shared
/// `seed`, so the ensemble is reproducible and embarrassingly parallel. The
/// horizon is discretized as `n_steps = round(t_end/dt)`.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    p: &ModelParams,
    scheme: SchemeId,
    n_replicates: usize,
    dt: f64,
    t_end: f64,
    t_burn: f64,
    seed: u64,
    k_list: &[u32],
) -> Result<EnsembleSummary, CoreError> {
    p.validate()?;
    if n_replicates == 0 {
        return Err(CoreError::InvalidArgument { what: "n_replicates must be >= 1" });
    }
    if !(dt > 0.0) || !dt.is_finite() || !(t_end > dt) || !t_end.is_finite() {
        return Err(CoreError::InvalidArgument { what: "need 0 < dt < t_end, both finite" });
    }
    let n_steps = (t_end / dt + 0.5) as usize;
    let records = (0..n_replicates as u64)
        .map(|j| run_replicate(p, scheme, dt, n_steps, t_burn, seed, j))
        .collect();
    summarize(records, k_list)
}

/// Comparison of empirical terminal moments against the analytic bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub k: u32,
    /// Analytic bounds: per-species `H_i(k)` and the combined
    /// `2^{k/2}·(H_1(k) + H_2(k))` for `E[|X|^k]`.
    pub bound_x: f64,
    pub bound_y: f64,
    pub bound_norm: f64,
    pub ex: MeanSe,
    pub ey: MeanSe,
    pub enorm: MeanSe,
    pub pass_x: bool,
    pub pass_y: bool,
    pub pass_norm: bool,
    pub pass: bool,
}

fn within_bound(est: MeanSe, bound: f64) -> bool {
    // Statistical slack: two relative standard errors on the estimate.
    let rel_se = if est.mean > 0.0 { est.se / est.mean } else { 0.0 };
    est.mean <= bound * (1.0 + 2.0 * rel_se)
}

/// Checks the order-`k` terminal moments against `H_1(k)`, `H_2(k)` and the
/// combined norm bound, with two relative standard errors of slack. `k` must
/// be one of the orders the summary was built with.
pub fn moment_check(
    summary: &EnsembleSummary,
    p: &ModelParams,
    k: u32,
) -> Result<MomentReport, CoreError> {
    let est =
        summary.moments.iter().find(|m| m.k == k).ok_or(CoreError::InvalidArgument {
            what: "k not among the summary's moment orders",
        })?;
    let bound_x = moment_bound(p, k as f64, Species::X);
    let bound_y = moment_bound(p, k as f64, Species::Y);
    let bound_norm = math::powf(2.0, 0.5 * k as f64) * (bound_x + bound_y);
    let pass_x = within_bound(est.ex, bound_x);
    let pass_y = within_bound(est.ey, bound_y);
    let pass_norm = within_bound(est.enorm, bound_norm);
    Ok(MomentReport {
        k,
        bound_x,
        bound_y,
        bound_norm,
        ex: est.ex,
        ey: est.ey,
        enorm: est.enorm,
        pass_x,
        pass_y,
        pass_norm,
        pass: pass_x && pass_y && pass_norm,
    })
}

/// Empirical permanence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanenceReport {
    pub epsilon: f64,
    /// `epsilon`- and `(1 − epsilon)`-quantiles of `|X(t_end)|`.
    pub beta1: f64,
    pub beta2: f64,
    /// The same quantiles at `t_end/2`.
    pub beta1_mid: f64,
    pub beta2_mid: f64,
    /// True when both quantiles moved less than 20% between the midpoint
    /// and the terminal time.
    pub stable: bool,
    pub pass: bool,
}

/// Permanence holds empirically when the terminal-norm quantile band
/// `[beta1, beta2]` is bounded away from zero and has stopped moving: each
/// quantile at `t_end/2` must lie within 20% of its terminal value. Needs at
/// least `10/epsilon` replicates for the tail quantile to be meaningful.
pub fn permanence_check(
    summary: &EnsembleSummary,
    epsilon: f64,
) -> Result<PermanenceReport, CoreError> {
    if !(epsilon > 0.0) || !(epsilon < 1.0) {
        return Err(CoreError::InvalidArgument { what: "epsilon must lie in (0, 1)" });
    }
    let needed = (10.0 / epsilon) as usize;
    let got = summary.n_ok();
    if got < needed {
        return Err(CoreError::TooFewReplicates { needed, got });
    }
    let beta1 = summary.quantile_norm_end(epsilon)?;
    let beta2 = summary.quantile_norm_end(1.0 - epsilon)?;
    let beta1_mid = summary.quantile_norm_mid(epsilon)?;
    let beta2_mid = summary.quantile_norm_mid(1.0 - epsilon)?;
    let rel_move = |mid: f64, end: f64| math::abs(mid - end) <= 0.2 * end;
    let stable = rel_move(beta1_mid, beta1) && rel_move(beta2_mid, beta2);
    let pass = beta1 > 0.0 && stable;
    Ok(PermanenceReport { epsilon, beta1, beta2, beta1_mid, beta2_mid, stable, pass })
}

/// Fraction of successful replicates whose growth-rule outcome matches the
/// analytic classification; `None` for the boundary regime (the theory makes
/// no strict-sign claim there) or when every replicate failed.
pub fn concordance(summary: &EnsembleSummary, tag: RegimeTag) -> Option<f64> {
    let expected = match tag {
        RegimeTag::Permanent => (false, false),
        RegimeTag::XExtinctYPersistent => (true, false),
        RegimeTag::YExtinctXPersistent => (false, true),
        RegimeTag::BothExtinct => (true, true),
        RegimeTag::Boundary => return None,
    };
    let mut total = 0usize;
    let mut matches = 0usize;
    for rec in &summary.records {
        if let Some(d) = &rec.data {
            total += 1;
            if extinct_by_growth(&d.stats) == expected {
                matches += 1;
            }
        }
    }
    if total == 0 {
        return None;
    }
    Some(matches as f64 / total as f64)
}

/// Empirical Hölder modulus per species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    pub gamma: f64,
    pub modulus_x: f64,
    pub modulus_y: f64,
}

/// Estimates `max over lags L ∈ {1, 2, 4, …} of max_k |z(t_{k+L}) − z(t_k)| /
/// (L·dt)^gamma` for each species. Sample paths are Hölder-continuous for
/// every exponent `gamma < 1/2`, so the modulus should stay bounded under
/// grid refinement; it is reported, not asserted against a constant.
pub fn holder_diagnostic(traj: &Trajectory, gamma: f64) -> Result<HolderReport, CoreError> {
    if !(gamma > 0.0) || !(gamma < 0.5) {
        return Err(CoreError::InvalidArgument { what: "gamma must lie in (0, 1/2)" });
    }
    let n = traj.n_steps();
    if n == 0 {
        return Err(CoreError::InvalidArgument { what: "trajectory has no steps" });
    }
    let modulus = |zs: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        let mut lag = 1usize;
        while lag <= n {
            let scale = math::powf(lag as f64 * traj.dt, gamma);
            for k in 0..=(n - lag) {
                worst = worst.max(math::abs(zs[k + lag] - zs[k]) / scale);
            }
            lag *= 2;
        }
        worst
    };
    Ok(HolderReport { gamma, modulus_x: modulus(&traj.xs), modulus_y: modulus(&traj.ys) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classify;

    fn figure_params() -> ModelParams {
        ModelParams {
            r1: 1.2,
            r2: 1.0,
            b1: 0.7,
            b2: 0.9,
            k1: 2.0,
            k2: 2.0,
            eps1: 0.8,
            eps2: 0.7,
            alpha1: 0.01,
            alpha2: 0.01,
            x0: 0.5,
            y0: 0.5,
        }
    }

    fn constant_trajectory(cx: f64, cy: f64, dt: f64, n: usize) -> Trajectory {
        Trajectory {
            scheme: SchemeId::LogEuler,
            dt,
            xs: alloc::vec![cx; n + 1],
            ys: alloc::vec![cy; n + 1],
            path_key: (0, 0),
            clamp_count: 0,
        }
    }

    #[test]
    fn constant_trajectory_stats_are_exact() {
        let traj = constant_trajectory(0.7, 1.3, 0.01, 1000);
        let s = path_stats(&traj, 2.5).unwrap();
        assert!((s.time_avg_x - 0.7).abs() < 1e-12);
        assert!((s.time_avg_y - 1.3).abs() < 1e-12);
        let t_end = traj.t_end();
        assert!((s.log_growth_x - 0.7f64.ln() / t_end).abs() < 1e-15);
        let norm = 0.7f64.hypot(1.3);
        assert_eq!(s.min_norm, norm);
        assert_eq!(s.max_norm, norm);
    }

    #[test]
    fn bad_burn_windows_are_rejected() {
        let traj = constant_trajectory(1.0, 1.0, 0.01, 100);
        assert!(path_stats(&traj, -0.1).is_err());
        assert!(path_stats(&traj, 1.0).is_err()); // == t_end
        assert!(path_stats(&traj, f64::NAN).is_err());
        assert!(path_stats(&traj, 0.9999).is_ok());
    }

    #[test]
    fn non_positive_samples_are_rejected_with_their_index() {
        let mut traj = constant_trajectory(1.0, 1.0, 0.01, 10);
        traj.xs[4] = 0.0;
        match path_stats(&traj, 0.0) {
            Err(CoreError::NonPositiveSample { index }) => assert_eq!(index, 4),
            other => panic!("expected NonPositiveSample, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_run_time_average_matches_the_interior_equilibrium() {
        let mut p = figure_params();
        p.alpha1 = 0.0;
        p.alpha2 = 0.0;
        let path = noise::generate(0, 0, 0.01, 20_000).unwrap(); // t_end = 200
        let traj = simulate(&p, SchemeId::Milstein, &path).unwrap();
        let s = path_stats(&traj, 50.0).unwrap();
        let eq = crate::model::equilibria(&p, 1e-12).unwrap();
        assert!((s.time_avg_x - eq.e_star.0).abs() < 1e-3, "{}", s.time_avg_x);
        assert!((s.time_avg_y - eq.e_star.1).abs() < 1e-3, "{}", s.time_avg_y);
        // Log-growth of a converged bounded path is ~ ln(e*)/t, near zero.
        assert!(s.log_growth_x.abs() < 0.01);
    }

    #[test]
    fn gbm_log_growth_matches_its_exact_distribution() {
        // b = eps = 0 with r < alpha²/2: ln x(t)/t ~ N(r − alpha²/2, alpha²/t).
        let p = ModelParams {
            r1: 0.3,
            r2: 0.3,
            b1: 0.0,
            b2: 0.0,
            k1: 1.0,
            k2: 1.0,
            eps1: 0.0,
            eps2: 0.0,
            alpha1: 1.0,
            alpha2: 1.0,
            x0: 1.0,
            y0: 1.0,
        };
        let t_end = 100.0f64;
        let path = noise::generate(12, 0, 0.01, 10_000).unwrap();
        let traj = simulate(&p, SchemeId::LogEuler, &path).unwrap();
        let s = path_stats(&traj, 25.0).unwrap();
        let m = p.r1 - 0.5 * p.alpha1 * p.alpha1;
        let tol = 3.0 * p.alpha1 / t_end.sqrt();
        assert!((s.log_growth_x - m).abs() < tol, "{} vs {m}", s.log_growth_x);
        assert!((s.log_growth_y - m).abs() < tol, "{} vs {m}", s.log_growth_y);
    }

    #[test]
    fn single_replicate_summary_has_zero_standard_errors() {
        let p = figure_params();
        let summary = run_ensemble(&p, SchemeId::Milstein, 1, 0.01, 20.0, 5.0, 7, &[1, 2]).unwrap();
        assert_eq!(summary.n_replicates, 1);
        assert_eq!(summary.n_failed, 0);
        let d = summary.records[0].data.unwrap();
        assert_eq!(summary.time_avg_x.mean, d.stats.time_avg_x);
        assert_eq!(summary.time_avg_x.se, 0.0);
        assert_eq!(summary.moments[0].ex.mean, d.terminal.x);
        assert_eq!(summary.moments[0].ex.se, 0.0);
        assert_eq!(summary.norms_end, alloc::vec![d.terminal.norm()]);
    }

    #[test]
    fn ensembles_are_deterministic() {
        let mut p = figure_params();
        p.alpha1 = 0.8;
        p.alpha2 = 0.6;
        let a = run_ensemble(&p, SchemeId::Milstein, 8, 0.01, 10.0, 2.5, 99, &[1]).unwrap();
        let b = run_ensemble(&p, SchemeId::Milstein, 8, 0.01, 10.0, 2.5, 99, &[1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replicates_differ_across_streams() {
        let mut p = figure_params();
        p.alpha1 = 0.5;
        let s = run_ensemble(&p, SchemeId::Milstein, 4, 0.01, 10.0, 2.5, 1, &[1]).unwrap();
        let t0 = s.records[0].data.unwrap().terminal.x;
        let t1 = s.records[1].data.unwrap().terminal.x;
        assert_ne!(t0, t1);
    }

    #[test]
    fn total_overflow_fails_the_ensemble() {
        let p = ModelParams {
            r1: 400.0,
            r2: 400.0,
            b1: 0.0,
            b2: 0.0,
            k1: 1.0,
            k2: 1.0,
            eps1: 0.0,
            eps2: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            x0: 1e300,
            y0: 1e300,
        };
        match run_ensemble(&p, SchemeId::LogEuler, 10, 1.0, 5.0, 1.0, 1, &[1]) {
            Err(CoreError::EnsembleFailure { failed, total }) => {
                assert_eq!((failed, total), (10, 10));
            }
            other => panic!("expected EnsembleFailure, got {other:?}"),
        }
    }

    #[test]
    fn both_extinct_regime_is_observed_in_the_ensemble() {
        // Strong noise on both species: margins 1.2 − 2.42 and 1.0 − 1.62.
        let mut p = figure_params();
        p.alpha1 = 2.2;
        p.alpha2 = 1.8;
        assert_eq!(classify(&p).tag, RegimeTag::BothExtinct);
        let s = run_ensemble(&p, SchemeId::LogEuler, 30, 0.01, 200.0, 50.0, 5, &[1]).unwrap();
        let mut extinct_both = 0;
        for rec in &s.records {
            let d = rec.data.unwrap();
            if extinct_in_replicate(&d.stats, d.terminal) == (true, true) {
                extinct_both += 1;
            }
        }
        assert!(extinct_both >= 28, "only {extinct_both}/30 doubly extinct");
        let c = concordance(&s, RegimeTag::BothExtinct).unwrap();
        assert!(c >= 0.95, "concordance {c}");
    }

    #[test]
    fn permanent_regime_concordance_is_high() {
        let p = figure_params();
        assert_eq!(classify(&p).tag, RegimeTag::Permanent);
        let s = run_ensemble(&p, SchemeId::Milstein, 30, 0.01, 200.0, 50.0, 3, &[1]).unwrap();
        let c = concordance(&s, RegimeTag::Permanent).unwrap();
        assert!(c >= 0.95, "concordance {c}");
        assert!(concordance(&s, RegimeTag::Boundary).is_none());
    }

    #[test]
    fn persistent_species_time_average_approaches_its_analytic_limit() {
        // x under heavy noise (extinct), y nearly deterministic (persists):
        // the y time-average converges to m2/(b2/k2 + eps2).
        let mut p = figure_params();
        p.alpha1 = 2.2;
        let limits = crate::model::persistence_limits(&p);
        let s = run_ensemble(&p, SchemeId::LogEuler, 50, 0.005, 200.0, 50.0, 17, &[1]).unwrap();
        let rel = (s.time_avg_y.mean - limits.exact_y).abs() / limits.exact_y;
        assert!(rel < 0.05, "mean {} vs limit {}", s.time_avg_y.mean, limits.exact_y);
        // The lower bound must hold too, with the same ensemble.
        assert!(s.time_avg_y.mean >= limits.lower_y * 0.95);
    }

    #[test]
    fn moment_bounds_hold_in_the_permanent_regime() {
        let p = figure_params();
        let s = run_ensemble(&p, SchemeId::Milstein, 50, 0.01, 50.0, 12.5, 23, &[1, 2, 3]).unwrap();
        for k in [1, 2, 3] {
            let rep = moment_check(&s, &p, k).unwrap();
            assert!(rep.pass, "k = {k}: {rep:?}");
        }
        // Frozen analytic bounds at the figure parameters.
        let r1 = moment_check(&s, &p, 1).unwrap();
        assert!((r1.bound_x - 1.5125000000000002).abs() < 1e-14);
        assert!((r1.bound_y - 1.4285714285714286).abs() < 1e-14);
        let r3 = moment_check(&s, &p, 3).unwrap();
        assert!((r3.bound_x - 3.416919056906865).abs() < 1e-13);
        assert!((r3.bound_y - 2.916326629013667).abs() < 1e-13);
        assert!(moment_check(&s, &p, 4).is_err());
    }

    #[test]
    fn deterministic_moment_comparison_is_tight() {
        // alpha = 0, b = 0: terminal x → r1/eps1 = 1.5 against the bound
        // (1/eps1)·((1 + r1)/2)² = 1.5125 — a 0.83% margin, so any slack bug
        // shows up.
        let mut p = figure_params();
        p.alpha1 = 0.0;
        p.alpha2 = 0.0;
        p.b1 = 0.0;
        p.b2 = 0.0;
        let s = run_ensemble(&p, SchemeId::Milstein, 1, 0.01, 50.0, 12.5, 0, &[1]).unwrap();
        let rep = moment_check(&s, &p, 1).unwrap();
        assert!((rep.ex.mean - 1.5).abs() < 1e-9);
        assert!((rep.bound_x - 1.5125).abs() < 1e-12);
        assert!(rep.pass_x);
    }

    #[test]
    fn deterministic_permanence_is_a_point_mass() {
        let mut p = figure_params();
        p.alpha1 = 0.0;
        p.alpha2 = 0.0;
        let s = run_ensemble(&p, SchemeId::Milstein, 25, 0.01, 50.0, 12.5, 0, &[1]).unwrap();
        let rep = permanence_check(&s, 0.5).unwrap();
        let eq = crate::model::equilibria(&p, 1e-12).unwrap();
        let norm = eq.e_star.0.hypot(eq.e_star.1);
        assert!((rep.beta1 - norm).abs() < 1e-3, "beta1 = {}", rep.beta1);
        assert!((rep.beta2 - norm).abs() < 1e-3);
        assert!(rep.stable && rep.pass);
    }

    #[test]
    fn extinct_ensembles_fail_the_permanence_check() {
        let mut p = figure_params();
        p.alpha1 = 2.2;
        p.alpha2 = 1.8;
        let s = run_ensemble(&p, SchemeId::LogEuler, 30, 0.01, 100.0, 25.0, 2, &[1]).unwrap();
        let rep = permanence_check(&s, 0.4).unwrap();
        assert!(!rep.pass, "{rep:?}");
        assert!(!rep.stable);
    }

    #[test]
    fn permanence_needs_enough_replicates() {
        let p = figure_params();
        let s = run_ensemble(&p, SchemeId::Milstein, 10, 0.01, 10.0, 2.5, 1, &[1]).unwrap();
        match permanence_check(&s, 0.05) {
            Err(CoreError::TooFewReplicates { needed, got }) => {
                assert_eq!((needed, got), (200, 10));
            }
            other => panic!("expected TooFewReplicates, got {other:?}"),
        }
        assert!(permanence_check(&s, 1.5).is_err());
    }

    #[test]
    fn quantiles_are_monotone_in_the_level() {
        let mut p = figure_params();
        p.alpha1 = 0.6;
        p.alpha2 = 0.6;
        let s = run_ensemble(&p, SchemeId::Milstein, 40, 0.01, 20.0, 5.0, 9, &[1]).unwrap();
        let mut prev = 0.0;
        for i in 0..=10 {
            let q = i as f64 / 10.0;
            let v = s.quantile_norm_end(q).unwrap();
            assert!(v >= prev, "q = {q}");
            prev = v;
        }
        assert!(s.quantile_norm_end(-0.1).is_err());
        assert!(s.quantile_norm_end(1.1).is_err());
    }

    #[test]
    fn holder_modulus_of_a_constant_path_is_zero() {
        let traj = constant_trajectory(1.0, 2.0, 0.01, 256);
        let rep = holder_diagnostic(&traj, 0.4).unwrap();
        assert_eq!(rep.modulus_x, 0.0);
        assert_eq!(rep.modulus_y, 0.0);
    }

    #[test]
    fn holder_modulus_of_a_linear_path_is_analytic() {
        // z(t) = t: |z(t+L·dt) − z(t)|/(L·dt)^γ = (L·dt)^{1−γ}, maximized at
        // the largest power-of-two lag.
        let dt = 0.01;
        let n = 1000;
        let xs: Vec<f64> = (0..=n).map(|k| 1.0 + dt * k as f64).collect();
        let traj = Trajectory {
            scheme: SchemeId::LogEuler,
            dt,
            xs: xs.clone(),
            ys: xs,
            path_key: (0, 0),
            clamp_count: 0,
        };
        let gamma = 0.4;
        let rep = holder_diagnostic(&traj, gamma).unwrap();
        let expected = (512.0 * dt).powf(1.0 - gamma);
        assert!((rep.modulus_x - expected).abs() < 1e-12, "{}", rep.modulus_x);
    }

    #[test]
    fn holder_modulus_is_stable_under_grid_refinement() {
        let p = ModelParams {
            r1: 0.5,
            r2: 0.4,
            b1: 0.0,
            b2: 0.0,
            k1: 1.0,
            k2: 1.0,
            eps1: 0.0,
            eps2: 0.0,
            alpha1: 0.8,
            alpha2: 0.6,
            x0: 1.0,
            y0: 1.0,
        };
        let fine = noise::generate(31, 0, 1.0 / 1024.0, 4096).unwrap(); // t_end = 4
        let coarse = noise::coarsen(&fine, 4).unwrap();
        let m_fine =
            holder_diagnostic(&simulate(&p, SchemeId::LogEuler, &fine).unwrap(), 0.25).unwrap();
        let m_coarse =
            holder_diagnostic(&simulate(&p, SchemeId::LogEuler, &coarse).unwrap(), 0.25).unwrap();
        let ratio = m_fine.modulus_x / m_coarse.modulus_x;
        assert!((0.25..=4.0).contains(&ratio), "ratio = {ratio}");
        assert!(m_fine.modulus_x.is_finite() && m_fine.modulus_x > 0.0);
        assert!(holder_diagnostic(&fine_dummy(), 0.6).is_err());
    }

    fn fine_dummy() -> Trajectory {
        constant_trajectory(1.0, 1.0, 0.01, 4)
    }
}
