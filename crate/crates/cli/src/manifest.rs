//! The run manifest and the JSON mirrors of the core report types.
//!
//! The manifest records everything needed to reproduce a run byte for byte:
//! the fully resolved configuration (all randomness derives from `seed`),
//! the tool version, the analytic quantities implied by the parameters, and
//! an index of the files the command wrote. Quantities that can degenerate
//! for valid parameter sets (bounds with `eps = 0`, limits with a zero
//! denominator, a non-converging interior equilibrium) are `Option`s and
//! serialize as `null`.

use serde::Serialize;

use mutualism_core::analysis::{MeanSe, MomentReport, PermanenceReport};
use mutualism_core::envelopes::{SandwichReport, SpeciesSandwich};
use mutualism_core::model::{self, Species};
use mutualism_core::{EquilibriumSet, ModelParams, RegimeClassification};

use crate::config::RunConfig;

/// Newton tolerance used everywhere an interior equilibrium is solved for.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// `Some(v)` for finite `v`, `None` (→ JSON `null`) otherwise.
pub fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: "mutualism", version: env!("CARGO_PKG_VERSION") }
    }
}

/// Every config key, fully resolved (burn-in defaulting included).
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
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
    pub scheme: &'static str,
    pub dt: f64,
    pub t_end: f64,
    pub t_burn: f64,
    pub seed: u64,
    pub replicates: usize,
    pub k_list: Vec<u32>,
    pub epsilon: f64,
    pub out_dir: String,
}

impl ConfigEcho {
    pub fn from_config(cfg: &RunConfig) -> Self {
        ConfigEcho {
            r1: cfg.r1,
            r2: cfg.r2,
            b1: cfg.b1,
            b2: cfg.b2,
            k1: cfg.k1,
            k2: cfg.k2,
            eps1: cfg.eps1,
            eps2: cfg.eps2,
            alpha1: cfg.alpha1,
            alpha2: cfg.alpha2,
            x0: cfg.x0,
            y0: cfg.y0,
            scheme: cfg.scheme_name(),
            dt: cfg.dt,
            t_end: cfg.t_end,
            t_burn: cfg.t_burn_resolved(),
            seed: cfg.seed,
            replicates: cfg.replicates,
            k_list: cfg.k_list.clone(),
            epsilon: cfg.epsilon,
            out_dir: cfg.out_dir.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassificationJson {
    pub tag: String,
    pub margin_x: f64,
    pub margin_y: f64,
}

impl ClassificationJson {
    pub fn from_core(c: &RegimeClassification) -> Self {
        ClassificationJson {
            tag: format!("{:?}", c.tag),
            margin_x: c.margins.0,
            margin_y: c.margins.1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EquilibriaJson {
    pub e1: [f64; 2],
    pub e2: [f64; 2],
    pub e3: [f64; 2],
    pub e_star: [f64; 2],
    pub residual: f64,
    pub tol: f64,
}

impl EquilibriaJson {
    pub fn from_core(e: &EquilibriumSet, tol: f64) -> Self {
        EquilibriaJson {
            e1: [e.e1.0, e.e1.1],
            e2: [e.e2.0, e.e2.1],
            e3: [e.e3.0, e.e3.1],
            e_star: [e.e_star.0, e.e_star.1],
            residual: e.residual,
            tol,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MomentBoundJson {
    pub k: u32,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub combined: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PersistenceJson {
    pub lower_x: Option<f64>,
    pub lower_y: Option<f64>,
    pub exact_x: Option<f64>,
    pub exact_y: Option<f64>,
}

/// Closed-form quantities implied by the parameters alone.
#[derive(Debug, Serialize)]
pub struct AnalyticJson {
    /// `None` when the interior-equilibrium solve does not converge (e.g.
    /// the geometric reduction `b = eps = 0`).
    pub equilibria: Option<EquilibriaJson>,
    pub moment_bounds: Vec<MomentBoundJson>,
    pub persistence: PersistenceJson,
}

impl AnalyticJson {
    pub fn from_params(p: &ModelParams, k_list: &[u32]) -> Self {
        let equilibria = model::equilibria(p, EQUILIBRIUM_TOL)
            .ok()
            .map(|e| EquilibriaJson::from_core(&e, EQUILIBRIUM_TOL));
        let moment_bounds = k_list
            .iter()
            .map(|&k| {
                let h1 = model::moment_bound(p, k as f64, Species::X);
                let h2 = model::moment_bound(p, k as f64, Species::Y);
                let combined = 2f64.powf(0.5 * k as f64) * (h1 + h2);
                MomentBoundJson {
                    k,
                    h1: finite_or_none(h1),
                    h2: finite_or_none(h2),
                    combined: finite_or_none(combined),
                }
            })
            .collect();
        let lim = model::persistence_limits(p);
        AnalyticJson {
            equilibria,
            moment_bounds,
            persistence: PersistenceJson {
                lower_x: finite_or_none(lim.lower_x),
                lower_y: finite_or_none(lim.lower_y),
                exact_x: finite_or_none(lim.exact_x),
                exact_y: finite_or_none(lim.exact_y),
            },
        }
    }
}

/// Preset values a command forced on top of the user's config.
#[derive(Debug, Serialize)]
pub struct Assumptions {
    pub x0: f64,
    pub y0: f64,
    pub t_end: f64,
}

#[derive(Debug, Serialize)]
pub struct FailureCounts {
    pub n_failed: usize,
    pub n_replicates: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: ToolInfo,
    pub command: String,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<Assumptions>,
    pub classification: ClassificationJson,
    pub analytic: AnalyticJson,
    /// File names written by the command, relative to `out_dir`, in write
    /// order.
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failures: Option<FailureCounts>,
}

/// Assembles the manifest for a command run.
pub fn build(
    command: &str,
    cfg: &RunConfig,
    outputs: Vec<String>,
    assumptions: Option<Assumptions>,
    failures: Option<FailureCounts>,
) -> RunManifest {
    let p = cfg.model_params();
    RunManifest {
        tool: ToolInfo::current(),
        command: command.to_string(),
        config: ConfigEcho::from_config(cfg),
        assumptions,
        classification: ClassificationJson::from_core(&model::classify(&p)),
        analytic: AnalyticJson::from_params(&p, &cfg.k_list),
        outputs,
        failures,
    }
}

// ---------------------------------------------------------------------------
// JSON mirrors of the core report types (the core stays serialization-free).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct MeanSeJson {
    pub mean: f64,
    pub se: f64,
}

impl From<MeanSe> for MeanSeJson {
    fn from(m: MeanSe) -> Self {
        MeanSeJson { mean: m.mean, se: m.se }
    }
}

#[derive(Debug, Serialize)]
pub struct MomentReportJson {
    pub k: u32,
    pub bound_x: Option<f64>,
    pub bound_y: Option<f64>,
    pub bound_norm: Option<f64>,
    pub ex: MeanSeJson,
    pub ey: MeanSeJson,
    pub enorm: MeanSeJson,
    pub pass_x: bool,
    pub pass_y: bool,
    pub pass_norm: bool,
    pub pass: bool,
}

impl From<MomentReport> for MomentReportJson {
    fn from(r: MomentReport) -> Self {
        MomentReportJson {
            k: r.k,
            bound_x: finite_or_none(r.bound_x),
            bound_y: finite_or_none(r.bound_y),
            bound_norm: finite_or_none(r.bound_norm),
            ex: r.ex.into(),
            ey: r.ey.into(),
            enorm: r.enorm.into(),
            pass_x: r.pass_x,
            pass_y: r.pass_y,
            pass_norm: r.pass_norm,
            pass: r.pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PermanenceJson {
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta1_mid: f64,
    pub beta2_mid: f64,
    pub stable: bool,
    pub pass: bool,
}

impl From<PermanenceReport> for PermanenceJson {
    fn from(r: PermanenceReport) -> Self {
        PermanenceJson {
            epsilon: r.epsilon,
            beta1: r.beta1,
            beta2: r.beta2,
            beta1_mid: r.beta1_mid,
            beta2_mid: r.beta2_mid,
            stable: r.stable,
            pass: r.pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpeciesSandwichJson {
    pub max_violation: f64,
    pub first_violation: Option<usize>,
    pub max_excess_hi: f64,
    pub max_excess_lo: f64,
}

impl From<SpeciesSandwich> for SpeciesSandwichJson {
    fn from(s: SpeciesSandwich) -> Self {
        SpeciesSandwichJson {
            max_violation: s.max_violation,
            first_violation: s.first_violation,
            max_excess_hi: s.max_excess_hi,
            max_excess_lo: s.max_excess_lo,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SandwichJson {
    pub rel_tol: f64,
    pub x: SpeciesSandwichJson,
    pub y: SpeciesSandwichJson,
    pub pass: bool,
}

impl From<SandwichReport> for SandwichJson {
    fn from(r: SandwichReport) -> Self {
        SandwichJson { rel_tol: r.rel_tol, x: r.x.into(), y: r.y.into(), pass: r.pass }
    }
}
