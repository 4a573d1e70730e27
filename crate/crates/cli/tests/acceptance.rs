//! Acceptance suite: nine end-to-end checks covering deterministic
//! stability, regime reproduction, analytic limits, the pathwise envelope
//! sandwich, strong convergence orders, moment bounds, permanence,
//! byte-determinism and the raw noise statistics.
//!
//! Each check prints one `criterion N (...): PASS/FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture` to see them. Every
//! tolerance is pinned here.

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use mutualism_cli::parallel;
use mutualism_core::analysis::{self, EnsembleSummary};
use mutualism_core::envelopes;
use mutualism_core::integrate::simulate;
use mutualism_core::model;
use mutualism_core::{noise, ModelParams, SchemeId};

/// Baseline parameter set with weak noise (the panel-(d) preset).
fn baseline() -> ModelParams {
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

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn check(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!("criterion {criterion} ({name}): {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn ensemble(
    p: &ModelParams,
    n: usize,
    dt: f64,
    t_end: f64,
    t_burn: f64,
    seed: u64,
    k_list: &[u32],
) -> EnsembleSummary {
    let n_steps = (t_end / dt + 0.5) as usize;
    let records =
        parallel::run_replicates(p, SchemeId::Milstein, n, dt, n_steps, t_burn, seed, workers());
    analysis::summarize(records, k_list).expect("ensemble aggregates")
}

/// 200 replicates at the weak-noise baseline, shared by criteria 6 and 7.
fn shared_ensemble() -> &'static EnsembleSummary {
    static CELL: OnceLock<EnsembleSummary> = OnceLock::new();
    CELL.get_or_init(|| ensemble(&baseline(), 200, 0.005, 200.0, 50.0, 0, &[1, 2, 3]))
}

#[test]
fn criterion_1_deterministic_stability() {
    let start = Instant::now();
    let mut p = baseline();
    p.alpha1 = 0.0;
    p.alpha2 = 0.0;
    // `equilibria` itself cross-checks damped Newton against a fixed-point
    // iteration and rejects the solve unless they agree within 10·tol.
    let eq = model::equilibria(&p, 1e-10).expect("interior equilibrium");
    // Independent plain fixed-point solve straight from the equilibrium
    // equations, as a second branch check outside the library.
    let (mut x, mut y) = (1.0f64, 1.0f64);
    for _ in 0..400 {
        x = p.r1 / (p.eps1 + p.b1 / (p.k1 + y));
        y = p.r2 / (p.eps2 + p.b2 / (p.k2 + x));
    }
    let branch_gap = (x - eq.e_star.0).abs().max((y - eq.e_star.1).abs());

    let path = noise::generate(0, 0, 0.001, 100_000).expect("noise");
    let traj = simulate(&p, SchemeId::Milstein, &path).expect("integration");
    let t = traj.terminal();
    let gap = (t.x - eq.e_star.0).abs().max((t.y - eq.e_star.1).abs());
    let secs = start.elapsed().as_secs_f64();

    let pass = gap <= 1e-4 && branch_gap <= 1e-9 && secs < 5.0;
    check(
        1,
        "deterministic stability",
        pass,
        &format!("terminal gap {gap:.3e} (tol 1e-4), solver-branch gap {branch_gap:.3e} (tol 1e-9), {secs:.2}s (< 5s)"),
    );
}

#[test]
fn criterion_2_regime_reproduction() {
    let start = Instant::now();
    // Per-replicate outcome counts under the replicate rule (small time
    // average and small terminal value).
    let outcome_count = |s: &EnsembleSummary, want: (bool, bool)| {
        s.records
            .iter()
            .filter_map(|r| r.data.as_ref())
            .filter(|d| analysis::extinct_in_replicate(&d.stats, d.terminal) == want)
            .count()
    };

    let mut pb = baseline();
    pb.alpha1 = 2.2;
    pb.alpha2 = 1.8;
    let sb = ensemble(&pb, 100, 0.001, 200.0, 100.0, 0, &[1]);
    let both = outcome_count(&sb, (true, true));

    let mut pc = baseline();
    pc.alpha1 = 0.1;
    pc.alpha2 = 1.6;
    let sc = ensemble(&pc, 100, 0.001, 200.0, 100.0, 0, &[1]);
    let y_only = outcome_count(&sc, (false, true));
    let lower_x = model::persistence_limits(&pc).lower_x;
    let lower_frozen = 1.0391304347826087;
    let mean_ta_x = sc.time_avg_x.mean;
    let secs = start.elapsed().as_secs_f64();

    let pass = both >= 95
        && y_only >= 95
        && (lower_x - lower_frozen).abs() <= 1e-12
        && mean_ta_x >= 0.9 * lower_frozen
        && secs < 180.0;
    check(
        2,
        "regime reproduction",
        pass,
        &format!("both-extinct {both}/100 (≥95), y-extinct-x-persistent {y_only}/100 (≥95), mean time_avg_x {mean_ta_x:.4} ≥ 0.9·{lower_frozen:.4}, {secs:.1}s (< 180s)"),
    );
}

#[test]
fn criterion_3_exact_time_average_limit() {
    let mut p = baseline();
    p.alpha1 = 2.2;
    p.alpha2 = 0.01;
    let s = ensemble(&p, 200, 0.005, 200.0, 50.0, 0, &[1]);
    let exact = model::persistence_limits(&p).exact_y;
    let exact_frozen = 0.8695217391304348;
    let mean = s.time_avg_y.mean;
    let rel = (mean - exact_frozen).abs() / exact_frozen;
    let pass = (exact - exact_frozen).abs() <= 1e-12 && rel <= 0.05;
    check(
        3,
        "exact time-average limit",
        pass,
        &format!("mean time_avg_y {mean:.6} vs limit {exact_frozen:.6}, relative gap {rel:.4} (tol 0.05)"),
    );
}

#[test]
fn criterion_4_pathwise_sandwich() {
    let p = baseline();
    let schemes = [SchemeId::LogEuler, SchemeId::Milstein];

    // One seed at one resolution: worst slacked violation, sandwich verdict,
    // and the slack-free closest approach to either envelope over the
    // interior samples (sample 0 coincides with both envelopes by
    // construction; negative margin = strictly inside).
    let probe = |seed: u64, dt: f64, n: usize| -> (f64, bool, f64) {
        let path = noise::generate(seed, 0, dt, n).expect("noise");
        let env = envelopes::build_envelopes(&p, &path).expect("envelopes");
        let mut violation = 0.0f64;
        let mut all_pass = true;
        let mut margin = f64::NEG_INFINITY;
        for scheme in schemes {
            let traj = simulate(&p, scheme, &path).expect("integration");
            let rep = envelopes::check_sandwich(&traj, &env, 10.0 * dt).expect("grids match");
            all_pass &= rep.pass;
            for side in [rep.x, rep.y] {
                violation = violation.max(side.max_violation);
            }
            for k in 1..=traj.n_steps() {
                margin = margin
                    .max((traj.xs[k] - env.lam_hi[k]) / env.lam_hi[k])
                    .max((env.lam_lo[k] - traj.xs[k]) / env.lam_lo[k])
                    .max((traj.ys[k] - env.th_hi[k]) / env.th_hi[k])
                    .max((env.th_lo[k] - traj.ys[k]) / env.th_lo[k]);
            }
        }
        (violation, all_pass, margin)
    };

    let mut failures = 0usize;
    for seed in 0..100u64 {
        let (_, ok, _) = probe(seed, 0.001, 10_000);
        if !ok {
            failures += 1;
        }
    }

    // Refinement on ten seeds: slacked violations must not grow, and the
    // trajectories must stay strictly inside the raw envelopes at both
    // resolutions.
    let mut violation_grew = 0usize;
    let (mut margin_coarse, mut margin_fine) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seed in 0..10u64 {
        let (v1, _, m1) = probe(seed, 0.001, 10_000);
        let (v2, _, m2) = probe(seed, 0.0005, 20_000);
        if v2 > v1 {
            violation_grew += 1;
        }
        margin_coarse = margin_coarse.max(m1);
        margin_fine = margin_fine.max(m2);
    }

    let pass = failures == 0 && violation_grew == 0 && margin_coarse < 0.0 && margin_fine < 0.0;
    check(
        4,
        "pathwise sandwich",
        pass,
        &format!("violations on 0/100 seeds (got {failures}), violation growth on 0/10 refined seeds (got {violation_grew}), worst interior margin {margin_coarse:.3e} at dt, {margin_fine:.3e} at dt/2 (both < 0)"),
    );
}

#[test]
fn criterion_5_strong_convergence_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mutualism"))
        .args([
            "converge",
            "--b1=0",
            "--b2=0",
            "--eps1=0",
            "--eps2=0",
            "--r1=0.5",
            "--r2=0.4",
            "--alpha1=0.8",
            "--alpha2=0.6",
            "--t_end=1",
            "--replicates=50",
            "--seed=0",
            "--out_dir",
        ])
        .arg(dir.path().join("out"))
        .output()
        .expect("binary spawns");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out").join("convergence.json")).unwrap(),
    )
    .unwrap();
    let em = report["slope_euler_maruyama"].as_f64().unwrap();
    let mil = report["slope_milstein"].as_f64().unwrap();
    let log_err = report["max_rel_err_log_euler"].as_f64().unwrap();
    let pass = out.status.code() == Some(0)
        && (0.35..=0.65).contains(&em)
        && (0.8..=1.2).contains(&mil)
        && log_err <= 1e-12;
    check(
        5,
        "strong convergence orders",
        pass,
        &format!("Euler–Maruyama slope {em:.4} ∈ [0.35, 0.65], Milstein slope {mil:.4} ∈ [0.8, 1.2], exact-scheme relative error {log_err:.2e} ≤ 1e-12, exit {:?}", out.status.code()),
    );
}

#[test]
fn criterion_6_moment_bounds() {
    let p = baseline();
    let s = shared_ensemble();
    // Frozen analytic bounds for these parameters.
    let h1 = [1.5125000000000002, 2.2747377373843167, 3.416919056906865];
    let h2 = [1.4285714285714286, 2.0410204149660625, 2.916326629013667];
    let mut pass = true;
    let mut detail = String::new();
    for (i, k) in [1u32, 2, 3].into_iter().enumerate() {
        let rep = analysis::moment_check(s, &p, k).expect("moment report");
        pass &= rep.pass
            && (rep.bound_x - h1[i]).abs() <= 1e-12 * h1[i]
            && (rep.bound_y - h2[i]).abs() <= 1e-12 * h2[i];
        detail.push_str(&format!(
            "k={k}: E[x^k] {:.3} ≤ {:.3}, E[y^k] {:.3} ≤ {:.3}, E[|X|^k] {:.3} ≤ {:.3}; ",
            rep.ex.mean, rep.bound_x, rep.ey.mean, rep.bound_y, rep.enorm.mean, rep.bound_norm
        ));
    }
    check(6, "moment bounds", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_7_permanence_quantiles() {
    let rep = analysis::permanence_check(shared_ensemble(), 0.05).expect("enough replicates");
    let positive_pass = rep.pass && rep.beta1 > 0.1;

    // Negative control: the strong-noise extinct regime must fail.
    let mut pb = baseline();
    pb.alpha1 = 2.2;
    pb.alpha2 = 1.8;
    let sb = ensemble(&pb, 200, 0.005, 200.0, 50.0, 0, &[1]);
    let neg = analysis::permanence_check(&sb, 0.05).expect("enough replicates");

    let pass = positive_pass && !neg.pass;
    check(
        7,
        "permanence quantiles",
        pass,
        &format!("beta1 {:.3} > 0.1, band [{:.3}, {:.3}] stable: {}; negative control pass={} (want false, beta1 {:.2e})",
            rep.beta1, rep.beta1, rep.beta2, rep.stable, neg.pass, neg.beta1),
    );
}

#[test]
fn criterion_8_byte_determinism() {
    let args =
        ["ensemble", "--replicates=60", "--dt=0.01", "--t_end=30", "--seed=11", "--out_dir=ens"];
    let run = |workers: &str| -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_mutualism"))
            .current_dir(dir.path())
            .args(args)
            .arg(format!("--workers={workers}"))
            .output()
            .expect("binary spawns");
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let mut bytes = Vec::new();
        for name in ["replicates.csv", "summary.json", "manifest.json"] {
            bytes.extend(std::fs::read(dir.path().join("ens").join(name)).unwrap());
            bytes.push(0);
        }
        bytes
    };
    let first = run("1");
    let second = run("1");
    let third = run("4");
    let fourth = run("3");
    let pass = first == second && first == third && first == fourth;
    check(
        8,
        "byte determinism",
        pass,
        &format!(
            "rerun identical: {}, workers 4 identical: {}, workers 3 identical: {} ({} bytes compared)",
            first == second,
            first == third,
            first == fourth,
            first.len()
        ),
    );
}

#[test]
fn criterion_9_gaussian_increment_statistics() {
    let n = 1_000_000usize;
    let dt = 0.01f64;
    let path = noise::generate(2024, 0, dt, n).expect("noise");
    let stats = |v: &[f64]| -> (f64, f64) {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, var)
    };
    let (m1, v1) = stats(path.inc1());
    let (m2, v2) = stats(path.inc2());
    let cov = path.inc1().iter().zip(path.inc2()).map(|(a, b)| (a - m1) * (b - m2)).sum::<f64>()
        / (n - 1) as f64;
    let rho = cov / (v1 * v2).sqrt();
    let rho_tol = 4.0 / (n as f64).sqrt();
    let pass =
        (v1 / dt - 1.0).abs() <= 0.01 && (v2 / dt - 1.0).abs() <= 0.01 && rho.abs() <= rho_tol;
    check(
        9,
        "gaussian increment statistics",
        pass,
        &format!(
            "var/dt − 1: {:.2e} and {:.2e} (tol 0.01), cross-correlation {rho:.2e} (tol {rho_tol:.1e})",
            v1 / dt - 1.0,
            v2 / dt - 1.0
        ),
    );
}
