//! Command-line front end: visibility sweeps, white-noise and POVM analyses,
//! and raw SDPA solves.

pub mod config;
pub mod plot;
pub mod sweep;
pub mod table;

use std::fmt::Write;

use qrand_core::povm::verify_povm_vs_sdp;
use qrand_core::sdp::{self, SdpStatus, SolverOptions};
use qrand_core::white_noise::{hemisphere_limit_estimate, optimize_gn, GnOptions};

use config::{FunctionalMode, PovmConfig};
use plot::{line_chart, Series};
use sweep::{FunctionalRow, SweepRow};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const RUNTIME_ERROR: i32 = 1;
    pub const PARTIAL_FAILURE: i32 = 2;
    pub const CONFIG_ERROR: i32 = 3;
}

pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let series = |label: &str, color, pick: fn(&SweepRow) -> &sweep::Outcome| Series {
        label: label.into(),
        color,
        points: rows.iter().map(|r| (r.v, pick(r).value().map(|v| v.min_entropy))).collect(),
    };
    let all = [
        series("tomographic", "#1b9e77", |r| &r.tomographic),
        series("one-sided DI", "#d95f02", |r| &r.one_sided),
        series("device-independent", "#7570b3", |r| &r.device_independent),
    ];
    let used: Vec<Series> = all.into_iter().filter(|s| s.points.iter().any(|p| p.1.is_some())).collect();
    line_chart("Randomness of a Werner state", "visibility V", "H_min (bits)", 2.0, &used)
}

pub fn functional_svg(rows: &[FunctionalRow], mode: FunctionalMode) -> String {
    let label = match mode {
        FunctionalMode::Chsh => "CHSH",
        FunctionalMode::Chsh3 => "CHSH3",
        FunctionalMode::FullStatistics => "full statistics",
    };
    let s = Series {
        label: label.into(),
        color: "#7570b3",
        points: rows.iter().map(|r| (r.v, r.outcome.value().map(|v| v.min_entropy))).collect(),
    };
    line_chart("Device-independent randomness from a functional value", "visibility V", "H_min (bits)", 2.0, &[s])
}

/// Table of `g_N` with the ensemble reaching it.
pub fn white_noise_report(ns: &[usize], options: &GnOptions, hemisphere: &[usize]) -> qrand_core::Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "N  g_N       G=(1+g_N)/2  Hmin(bits)  directions (weight)");
    for &n in ns {
        let g = optimize_gn(n, options)?;
        let gp = (1.0 + g.value) / 2.0;
        let dirs: Vec<String> = g
            .ensemble
            .directions()
            .iter()
            .zip(g.ensemble.weights())
            .map(|(d, q)| format!("({:+.4},{:+.4},{:+.4}) ({:.4})", d[0], d[1], d[2], q))
            .collect();
        let _ = writeln!(out, "{n:<2} {:.7} {:.7}    {:.6}    {}", g.value, gp, -gp.log2(), dirs.join(" "));
    }
    for &n in hemisphere {
        let h = hemisphere_limit_estimate(n)?;
        let _ = writeln!(out, "hemisphere spread N={n}: max_C |n_C| = {h:.6}");
    }
    Ok(out)
}

/// Rank bound and SDP check for one POVM. Returns the report and whether
/// the SDP was certified and consistent with the bound.
pub fn povm_report(cfg: &PovmConfig, options: &SolverOptions) -> qrand_core::Result<(String, bool)> {
    let v = verify_povm_vs_sdp(&cfg.povm, cfg.system_dim, options)?;
    let a = &v.analysis;
    let mut out = String::new();
    let _ = writeln!(out, "POVM {} on 1/{}", cfg.povm.label(), a.system_dim);
    let _ = writeln!(out, "ranks: {:?} (sum {})", a.ranks, a.sum_ranks);
    let _ = writeln!(out, "guessing lower bound d_s/sum r: {:.12}", a.guessing_lower_bound);
    let _ = writeln!(out, "min-entropy upper bound (bits): {:.12}", a.min_entropy_upper_bound);
    let _ = writeln!(out, "decomposition rho_c = Pi_c/d_s reaches: {:.12}", a.decomposition_guessing);
    match a.ancilla_dim {
        Some(d) => {
            let _ = writeln!(out, "tensor dilation ancilla dimension: {d}");
        }
        None => {
            let _ = writeln!(out, "tensor dilation ancilla dimension: none (sum r not a multiple of d_s)");
        }
    }
    let _ = writeln!(out, "direct-sum hidden dimension: {}", a.hidden_dim);
    if let Some(b) = a.hidden_dim_bound {
        let _ = writeln!(out, "log2 d_h: {b:.12}");
    }
    for w in &a.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(
        out,
        "SDP: G = {:.12} (dual {:.12}, gap {:.2e}, {:?}), H_min = {:.12}",
        v.sdp_guessing, v.sdp_upper_bound, v.duality_gap, v.status, v.sdp_min_entropy
    );
    let _ = writeln!(out, "bound respected: {}", v.bound_respected);
    let ok = v.status == SdpStatus::Optimal && v.duality_gap <= options.gap_tol && v.bound_respected;
    Ok((out, ok))
}

/// Solves an SDPA sparse file and reports the optimum.
pub fn solve_report(text: &str, options: &SolverOptions) -> qrand_core::Result<(String, bool)> {
    let problem = sdp::sdpa::parse(text)?;
    let s = sdp::solve(&problem, options)?;
    let mut out = String::new();
    let _ = writeln!(out, "status: {:?}", s.status);
    let _ = writeln!(out, "primal objective: {:.12e}", s.primal_value);
    let _ = writeln!(out, "dual objective:   {:.12e}", s.dual_value);
    let _ = writeln!(out, "duality gap:      {:.3e}", s.duality_gap);
    let _ = writeln!(out, "iterations:       {}", s.iterations);
    if !s.removed_constraints.is_empty() {
        let _ = writeln!(out, "dependent constraints dropped: {:?}", s.removed_constraints);
    }
    let _ = writeln!(out, "y = {:?}", s.dual_vector);
    Ok((out, s.is_optimal()))
}
