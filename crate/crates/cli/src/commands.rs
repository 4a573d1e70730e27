//! The seven commands, each a thin orchestration of the numerical core plus
//! file emission. Exit codes: 0 success, 1 validation, 2 numerical failure,
//! 3 verification failure (a check that ran to completion and failed).

use std::path::PathBuf;

use serde::Serialize;

use mutualism_core::analysis::{self};
use mutualism_core::envelopes;
use mutualism_core::integrate::simulate;
use mutualism_core::model;
use mutualism_core::{noise, CoreError, RegimeTag, SchemeId};

use crate::config::{Cli, RunConfig};
use crate::manifest::{
    self, Assumptions, ClassificationJson, EquilibriaJson, FailureCounts, MeanSeJson,
    MomentReportJson, PermanenceJson, SandwichJson, EQUILIBRIUM_TOL,
};
use crate::output;
use crate::{CliError, USAGE};

pub fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match cli.command.as_str() {
        "classify" => cmd_classify(cli),
        "equilibria" => cmd_equilibria(cli),
        "simulate" => cmd_simulate(cli),
        "ensemble" => cmd_ensemble(cli),
        "verify-envelopes" => cmd_verify_envelopes(cli),
        "converge" => cmd_converge(cli),
        "figure" => cmd_figure(cli),
        other => Err(CliError::Usage(format!("unknown command `{other}`\n\n{USAGE}"))),
    }
}

/// Output directory plus the index of files written into it, in order.
struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(cli: &Cli) -> Result<Self, CliError> {
        let dir = PathBuf::from(&cli.config.out_dir);
        output::ensure_dir(&dir)?;
        Ok(OutDir { dir, written: Vec::new() })
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        output::write_string(&self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        output::write_json(&self.dir.join(name), value)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` indexing everything written so far.
    fn finish_manifest(
        self,
        cli: &Cli,
        assumptions: Option<Assumptions>,
        failures: Option<FailureCounts>,
    ) -> Result<(), CliError> {
        let m = manifest::build(&cli.command, &cli.config, self.written, assumptions, failures);
        output::write_json(&self.dir.join("manifest.json"), &m)
    }
}

/// Prints the regime classification as one JSON line on stdout; writes no
/// files.
fn cmd_classify(cli: &Cli) -> Result<i32, CliError> {
    let c = model::classify(&cli.config.model_params());
    let json = ClassificationJson::from_core(&c);
    let line = serde_json::to_string(&json)
        .map_err(|e| CliError::Io { path: "<stdout>".to_string(), detail: e.to_string() })?;
    println!("{line}");
    Ok(0)
}

fn cmd_equilibria(cli: &Cli) -> Result<i32, CliError> {
    let set = model::equilibria(&cli.config.model_params(), EQUILIBRIUM_TOL)?;
    let mut out = OutDir::create(cli)?;
    out.write_json("equilibria.json", &EquilibriaJson::from_core(&set, EQUILIBRIUM_TOL))?;
    out.finish_manifest(cli, None, None)?;
    Ok(0)
}

fn cmd_simulate(cli: &Cli) -> Result<i32, CliError> {
    let cfg = &cli.config;
    if cfg.replicates != 1 {
        return Err(cli
            .constraint(
                "replicates",
                "simulate integrates a single trajectory; use ensemble for replicates > 1",
            )
            .into());
    }
    let p = cfg.model_params();
    let path = noise::generate(cfg.seed, 0, cfg.dt, cfg.n_steps())?;
    let traj = simulate(&p, cfg.scheme, &path)?;
    let mut out = OutDir::create(cli)?;
    out.write_text("trajectory.csv", &output::trajectory_csv(&traj))?;
    out.finish_manifest(cli, None, None)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SummaryJson {
    n_replicates: usize,
    n_failed: usize,
    time_avg_x: MeanSeJson,
    time_avg_y: MeanSeJson,
    log_growth_x: MeanSeJson,
    log_growth_y: MeanSeJson,
    moments: Vec<MomentReportJson>,
    /// `null` when too few replicates survive for the `epsilon` tail
    /// quantile to mean anything; `permanence_skipped` then says why.
    permanence: Option<PermanenceJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    permanence_skipped: Option<String>,
    /// Fraction of replicates whose empirical outcome matches the analytic
    /// classification; `null` on the boundary regime.
    concordance: Option<f64>,
    classification: ClassificationJson,
}

fn cmd_ensemble(cli: &Cli) -> Result<i32, CliError> {
    let cfg = &cli.config;
    let p = cfg.model_params();
    let records = crate::parallel::run_replicates(
        &p,
        cfg.scheme,
        cfg.replicates,
        cfg.dt,
        cfg.n_steps(),
        cfg.t_burn_resolved(),
        cfg.seed,
        cli.workers,
    );
    let summary = analysis::summarize(records, &cfg.k_list)?;
    let moments = cfg
        .k_list
        .iter()
        .map(|&k| analysis::moment_check(&summary, &p, k).map(MomentReportJson::from))
        .collect::<Result<Vec<_>, _>>()?;
    let (permanence, permanence_skipped) = match analysis::permanence_check(&summary, cfg.epsilon)
    {
        Ok(report) => (Some(PermanenceJson::from(report)), None),
        Err(CoreError::TooFewReplicates { needed, got }) => (
            None,
            Some(format!(
                "the epsilon = {} tail quantile needs at least {needed} successful replicates, got {got}",
                cfg.epsilon
            )),
        ),
        Err(e) => return Err(e.into()),
    };
    let class = model::classify(&p);
    let concordance = analysis::concordance(&summary, class.tag);
    let json = SummaryJson {
        n_replicates: summary.n_replicates,
        n_failed: summary.n_failed,
        time_avg_x: summary.time_avg_x.into(),
        time_avg_y: summary.time_avg_y.into(),
        log_growth_x: summary.log_growth_x.into(),
        log_growth_y: summary.log_growth_y.into(),
        moments,
        permanence,
        permanence_skipped,
        concordance,
        classification: ClassificationJson::from_core(&class),
    };
    let mut out = OutDir::create(cli)?;
    out.write_text("replicates.csv", &output::replicates_csv(&summary.records))?;
    out.write_json("summary.json", &json)?;
    let failures = FailureCounts { n_failed: summary.n_failed, n_replicates: summary.n_replicates };
    out.finish_manifest(cli, None, Some(failures))?;
    Ok(0)
}

fn cmd_verify_envelopes(cli: &Cli) -> Result<i32, CliError> {
    let cfg = &cli.config;
    let p = cfg.model_params();
    let path = noise::generate(cfg.seed, 0, cfg.dt, cfg.n_steps())?;
    let traj = simulate(&p, cfg.scheme, &path)?;
    let env = envelopes::build_envelopes(&p, &path)?;
    // Both the trajectory and the envelopes carry O(dt) discretization error;
    // ten steps of slack absorbs it without masking real ordering breaks.
    let rel_tol = 10.0 * cfg.dt;
    let report = envelopes::check_sandwich(&traj, &env, rel_tol)?;
    let pass = report.pass;
    let mut out = OutDir::create(cli)?;
    out.write_json("sandwich.json", &SandwichJson::from(report))?;
    out.finish_manifest(cli, None, None)?;
    Ok(if pass { 0 } else { 3 })
}

/// Fine grid 2^12 steps; coarse ladder 2^4 … 2^10 steps (seven levels).
const FINE_LEVEL: u32 = 12;
const COARSE_LEVELS: std::ops::RangeInclusive<u32> = 4..=10;
/// Acceptance windows for the fitted strong-order slopes.
const EM_SLOPE_WINDOW: [f64; 2] = [0.35, 0.65];
const MILSTEIN_SLOPE_WINDOW: [f64; 2] = [0.8, 1.2];
/// The log-transformed scheme integrates the reduction exactly; everything
/// beyond accumulated rounding is a bug.
const LOG_EULER_REL_TOL: f64 = 1e-12;

/// Least-squares slope of `ln err` against `ln dt`.
fn fit_slope(dts: &[f64], errs: &[f64]) -> f64 {
    let n = dts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&dt, &err) in dts.iter().zip(errs) {
        let (x, y) = (dt.ln(), err.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[derive(Debug, Serialize)]
struct ConvergenceJson {
    n_paths: usize,
    n_fine_steps: usize,
    t_end: f64,
    slope_euler_maruyama: f64,
    slope_milstein: f64,
    window_euler_maruyama: [f64; 2],
    window_milstein: [f64; 2],
    max_rel_err_log_euler: f64,
    tol_log_euler: f64,
    pass_euler_maruyama: bool,
    pass_milstein: bool,
    pass_log_euler: bool,
    pass: bool,
}

/// Strong-order study on the exactly solvable reduction `b = eps = 0`: each
/// scheme runs on coarsened views of one common fine Brownian path per
/// stream, and terminal errors against the closed-form solution are averaged
/// over streams and components.
fn cmd_converge(cli: &Cli) -> Result<i32, CliError> {
    let cfg = &cli.config;
    for (key, v) in [("b1", cfg.b1), ("b2", cfg.b2), ("eps1", cfg.eps1), ("eps2", cfg.eps2)] {
        if v != 0.0 {
            return Err(cli
                .constraint(
                    key,
                    "converge needs the exactly solvable reduction: set b1 = b2 = eps1 = eps2 = 0",
                )
                .into());
        }
    }
    for (key, v) in [("alpha1", cfg.alpha1), ("alpha2", cfg.alpha2)] {
        if v == 0.0 {
            return Err(cli
                .constraint(
                    key,
                    "converge measures stochastic orders; noise intensities must be positive",
                )
                .into());
        }
    }
    let p = cfg.model_params();
    let n_paths = cfg.replicates;
    let n_fine = 1usize << FINE_LEVEL;
    let dt_fine = cfg.t_end / n_fine as f64;
    let n_levels = COARSE_LEVELS.count();

    let mut dts = vec![0.0f64; n_levels];
    let mut err_em = vec![0.0f64; n_levels];
    let mut err_mil = vec![0.0f64; n_levels];
    let mut rel_log = vec![0.0f64; n_levels];
    for j in 0..n_paths as u64 {
        let fine = noise::generate(cfg.seed, j, dt_fine, n_fine)?;
        let w1: f64 = fine.inc1().iter().sum();
        let w2: f64 = fine.inc2().iter().sum();
        let exact_x = p.x0 * ((p.r1 - 0.5 * p.alpha1 * p.alpha1) * cfg.t_end + p.alpha1 * w1).exp();
        let exact_y = p.y0 * ((p.r2 - 0.5 * p.alpha2 * p.alpha2) * cfg.t_end + p.alpha2 * w2).exp();
        for (i, level) in COARSE_LEVELS.enumerate() {
            let coarse = noise::coarsen(&fine, 1 << (FINE_LEVEL - level))?;
            dts[i] = coarse.dt();
            let em = simulate(&p, SchemeId::EulerMaruyama, &coarse)?.terminal();
            let mil = simulate(&p, SchemeId::Milstein, &coarse)?.terminal();
            let log = simulate(&p, SchemeId::LogEuler, &coarse)?.terminal();
            err_em[i] += (em.x - exact_x).abs() + (em.y - exact_y).abs();
            err_mil[i] += (mil.x - exact_x).abs() + (mil.y - exact_y).abs();
            rel_log[i] = rel_log[i]
                .max(((log.x - exact_x) / exact_x).abs())
                .max(((log.y - exact_y) / exact_y).abs());
        }
    }
    let denom = (2 * n_paths) as f64;
    for e in err_em.iter_mut().chain(err_mil.iter_mut()) {
        *e /= denom;
    }

    let slope_em = fit_slope(&dts, &err_em);
    let slope_mil = fit_slope(&dts, &err_mil);
    let max_rel_log = rel_log.iter().cloned().fold(0.0f64, f64::max);
    let pass_em = (EM_SLOPE_WINDOW[0]..=EM_SLOPE_WINDOW[1]).contains(&slope_em);
    let pass_mil = (MILSTEIN_SLOPE_WINDOW[0]..=MILSTEIN_SLOPE_WINDOW[1]).contains(&slope_mil);
    let pass_log = max_rel_log <= LOG_EULER_REL_TOL;
    let pass = pass_em && pass_mil && pass_log;

    let mut csv = String::from("dt,err_euler_maruyama,err_milstein,max_rel_err_log_euler\n");
    for i in 0..n_levels {
        use std::fmt::Write as _;
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            dts[i], err_em[i], err_mil[i], rel_log[i]
        );
    }
    let json = ConvergenceJson {
        n_paths,
        n_fine_steps: n_fine,
        t_end: cfg.t_end,
        slope_euler_maruyama: slope_em,
        slope_milstein: slope_mil,
        window_euler_maruyama: EM_SLOPE_WINDOW,
        window_milstein: MILSTEIN_SLOPE_WINDOW,
        max_rel_err_log_euler: max_rel_log,
        tol_log_euler: LOG_EULER_REL_TOL,
        pass_euler_maruyama: pass_em,
        pass_milstein: pass_mil,
        pass_log_euler: pass_log,
        pass,
    };
    let mut out = OutDir::create(cli)?;
    out.write_text("convergence.csv", &csv)?;
    out.write_json("convergence.json", &json)?;
    out.finish_manifest(cli, None, None)?;
    Ok(if pass { 0 } else { 3 })
}

/// The four preset panels: noise intensities (alpha1, alpha2).
const PANELS: [(&str, f64, f64); 4] =
    [("a", 0.0, 0.0), ("b", 2.2, 1.8), ("c", 0.1, 1.6), ("d", 0.01, 0.01)];
/// The panel presets fix the start point and horizon; both are recorded in
/// the manifest as assumptions.
const PANEL_X0: f64 = 0.5;
const PANEL_Y0: f64 = 0.5;
const PANEL_T_END: f64 = 200.0;

fn expected_extinctions(tag: RegimeTag) -> Option<(bool, bool)> {
    match tag {
        RegimeTag::Permanent => Some((false, false)),
        RegimeTag::XExtinctYPersistent => Some((true, false)),
        RegimeTag::YExtinctXPersistent => Some((false, true)),
        RegimeTag::BothExtinct => Some((true, true)),
        RegimeTag::Boundary => None,
    }
}

#[derive(Debug, Serialize)]
struct PanelJson {
    panel: String,
    alpha1: f64,
    alpha2: f64,
    classification: ClassificationJson,
    expected_x_extinct: Option<bool>,
    expected_y_extinct: Option<bool>,
    x_extinct: bool,
    y_extinct: bool,
    /// Whether the single path's outcome matches the analytic expectation;
    /// `null` on the boundary regime.
    outcome_matches: Option<bool>,
    time_avg_x: f64,
    time_avg_y: f64,
    log_growth_x: f64,
    log_growth_y: f64,
    csv: String,
}

/// Runs the four preset panels (one trajectory each, stream id = panel
/// index) and compares each outcome against the classification. Reporting
/// only: mismatches land in `panels.json`, not in the exit code.
fn cmd_figure(cli: &Cli) -> Result<i32, CliError> {
    let mut out = OutDir::create(cli)?;
    let mut panels = Vec::with_capacity(PANELS.len());
    for (i, (name, alpha1, alpha2)) in PANELS.iter().enumerate() {
        let cfg = RunConfig {
            alpha1: *alpha1,
            alpha2: *alpha2,
            x0: PANEL_X0,
            y0: PANEL_Y0,
            t_end: PANEL_T_END,
            ..cli.config.clone()
        };
        let p = cfg.model_params();
        let path = noise::generate(cfg.seed, i as u64, cfg.dt, cfg.n_steps())?;
        let traj = simulate(&p, cfg.scheme, &path)?;
        let stats = analysis::path_stats(&traj, cfg.t_burn_resolved())?;
        let class = model::classify(&p);
        let expected = expected_extinctions(class.tag);
        let (x_extinct, y_extinct) = analysis::extinct_by_growth(&stats);
        let csv_name = format!("panel_{name}.csv");
        out.write_text(&csv_name, &output::trajectory_csv(&traj))?;
        panels.push(PanelJson {
            panel: name.to_string(),
            alpha1: *alpha1,
            alpha2: *alpha2,
            classification: ClassificationJson::from_core(&class),
            expected_x_extinct: expected.map(|e| e.0),
            expected_y_extinct: expected.map(|e| e.1),
            x_extinct,
            y_extinct,
            outcome_matches: expected.map(|e| e == (x_extinct, y_extinct)),
            time_avg_x: stats.time_avg_x,
            time_avg_y: stats.time_avg_y,
            log_growth_x: stats.log_growth_x,
            log_growth_y: stats.log_growth_y,
            csv: csv_name,
        });
    }
    out.write_json("panels.json", &panels)?;
    let assumptions = Assumptions { x0: PANEL_X0, y0: PANEL_Y0, t_end: PANEL_T_END };
    out.finish_manifest(cli, Some(assumptions), None)?;
    Ok(0)
}
