//! Per-iteration history, Lyapunov diagnostics, post-run invariant audits and
//! CSV/JSON export.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::solver::{should_take_tangential, SolverConfig, StepType, TerminationStatus};

/// One row of the run history. The final recorded iterate carries no step
/// fields: it is where the run stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub step_type: Option<StepType>,
    pub x_norm: f64,
    /// Objective value; recorded only in diagnostics mode or by the accept
    /// rule at the terminal iterate.
    pub f: Option<f64>,
    pub gt_norm: f64,
    pub c_norm: f64,
    pub jtc_norm: f64,
    pub alpha_t: f64,
    /// Γ entering this iteration.
    pub gamma: f64,
    /// ‖x_{k+1} − x_k‖ of the step taken at this iterate.
    pub step_norm: Option<f64>,
    /// Line-search halvings; normal steps only.
    pub backtracks: Option<u32>,
    /// Lyapunov value ψ = f + λ̂ᵀc + ρ‖c‖ when diagnostics and ρ are enabled.
    pub psi: Option<f64>,
}

/// One audited invariant: pass/fail plus the worst margin observed (positive
/// margins mean violation by that amount).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AuditCheck {
    pub pass: bool,
    pub worst_margin: f64,
}

/// Map of invariant name → audit outcome.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: BTreeMap<String, AuditCheck>,
}

impl AuditReport {
    pub fn insert(&mut self, name: &str, pass: bool, worst_margin: f64) {
        self.checks
            .insert(name.to_string(), AuditCheck { pass, worst_margin });
    }

    pub fn get(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.get(name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// Full result of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub config: SolverConfig,
    pub status: TerminationStatus,
    pub history: Vec<IterationRecord>,
    pub audit: AuditReport,
    pub wall_time_s: f64,
    pub x_final: Vec<f64>,
}

/// Lyapunov value ψ_ρ(x, λ̂) = f + λ̂ᵀc + ρ‖c‖.
///
/// A diagnostic only: the algorithm never uses ρ, and monotonicity is
/// guaranteed by the analysis only for sufficiently large ρ.
pub fn lyapunov(f: f64, c: &[f64], lambda_hat: &[f64], rho: f64) -> f64 {
    debug_assert!(rho > 0.0);
    f + linalg::dot(lambda_hat, c) + rho * linalg::norm(c)
}

// Strict inequalities are audited with a small slack to absorb roundoff.
const AUDIT_SLACK: f64 = 1e-14;

/// Audits a completed history against the method's checkable invariants:
///
/// (a) strict ‖c‖ decrease on every normal step;
/// (b) the two AdaGrad telescoping inequalities over the tangential
///     subsequence (a lower bound on Σ α‖g_T‖² and a log upper bound on
///     Σ α²‖g_T‖²);
/// (c) ‖s_N‖ ≤ θ‖c‖ on every normal step;
/// (d) the recorded step type matches re-evaluating the switching test;
/// (e) α_T nonincreasing over tangential iterations.
///
/// Failures are reported, never thrown.
pub fn audit_run(history: &[IterationRecord], config: &SolverConfig) -> AuditReport {
    let mut report = AuditReport::default();

    // (a) strict contraction of ‖c‖ on normal steps
    let mut worst_a = f64::NEG_INFINITY;
    let mut pass_a = true;
    for pair in history.windows(2) {
        if pair[0].step_type == Some(StepType::Normal) {
            let margin = pair[1].c_norm - pair[0].c_norm; // must be < 0
            worst_a = worst_a.max(margin);
            if !(margin < AUDIT_SLACK * pair[0].c_norm.max(1.0)) {
                pass_a = false;
            }
        }
    }
    report.insert(
        "normal_c_decrease",
        pass_a,
        if worst_a == f64::NEG_INFINITY { 0.0 } else { worst_a },
    );

    // (b) telescoping sums over tangential iterations, with Γ at the first
    // tangential iteration equal to zero
    let tangential: Vec<&IterationRecord> = history
        .iter()
        .filter(|r| r.step_type == Some(StepType::Tangential))
        .collect();
    let gamma_final: f64 = tangential.iter().map(|r| r.gt_norm * r.gt_norm).sum();
    let sum_lin: f64 = tangential
        .iter()
        .map(|r| r.alpha_t * r.gt_norm * r.gt_norm)
        .sum();
    let sum_sq: f64 = tangential
        .iter()
        .map(|r| r.alpha_t * r.alpha_t * r.gt_norm * r.gt_norm)
        .sum();
    let lower = config.eta / (2.0 * 2.0_f64.sqrt()) * gamma_final.sqrt();
    let margin_lower = lower - sum_lin; // must be < 0 (strictly, up to slack)
    report.insert(
        "adagrad_telescope_lower",
        margin_lower < AUDIT_SLACK * lower.max(1.0),
        margin_lower,
    );
    let upper = config.eta * config.eta * ((gamma_final + config.varsigma) / config.varsigma).ln();
    let margin_upper = sum_sq - upper; // must be ≤ 0
    report.insert(
        "adagrad_telescope_upper",
        margin_upper <= AUDIT_SLACK * upper.max(1.0),
        margin_upper,
    );

    // (c) ‖s_N‖ ≤ θ‖c‖ on normal steps
    let mut worst_c = f64::NEG_INFINITY;
    let mut pass_c = true;
    for r in history {
        if r.step_type == Some(StepType::Normal) {
            if let Some(s) = r.step_norm {
                let margin = s - config.theta * r.c_norm;
                worst_c = worst_c.max(margin);
                if !(margin <= AUDIT_SLACK * (config.theta * r.c_norm).max(1.0)) {
                    pass_c = false;
                }
            }
        }
    }
    report.insert(
        "tr_bound",
        pass_c,
        if worst_c == f64::NEG_INFINITY { 0.0 } else { worst_c },
    );

    // (d) switching-test consistency
    let mut mismatches = 0usize;
    for r in history {
        if let Some(step) = r.step_type {
            let want_tangential =
                should_take_tangential(r.c_norm, r.alpha_t, r.gt_norm, config.beta);
            let took_tangential = step == StepType::Tangential;
            if want_tangential != took_tangential {
                mismatches += 1;
            }
        }
    }
    report.insert("switch_consistency", mismatches == 0, mismatches as f64);

    // (e) α_T nonincreasing over the tangential subsequence
    let mut worst_e = f64::NEG_INFINITY;
    let mut pass_e = true;
    for pair in tangential.windows(2) {
        let margin = pair[1].alpha_t - pair[0].alpha_t; // must be ≤ 0
        worst_e = worst_e.max(margin);
        if !(margin <= AUDIT_SLACK * pair[0].alpha_t.max(1.0)) {
            pass_e = false;
        }
    }
    report.insert(
        "alpha_monotone",
        pass_e,
        if worst_e == f64::NEG_INFINITY { 0.0 } else { worst_e },
    );

    report
}

/// Formats a float with 17 significant digits so parsing recovers the exact
/// bits.
fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

/// Writes the per-iteration history as CSV with the fixed header
/// `k,step_type,f,gT_norm,c_norm,JTc_norm,alpha_T,gamma,backtracks,psi`.
/// Optional fields are left empty when absent.
pub fn write_history_csv(report: &RunReport, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(
        w,
        "k,step_type,f,gT_norm,c_norm,JTc_norm,alpha_T,gamma,backtracks,psi"
    )
    .map_err(io_err)?;
    for r in &report.history {
        let step = match r.step_type {
            Some(StepType::Tangential) => "tangential",
            Some(StepType::Normal) => "normal",
            None => "",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            step,
            fmt_opt(r.f),
            fmt_full(r.gt_norm),
            fmt_full(r.c_norm),
            fmt_full(r.jtc_norm),
            fmt_full(r.alpha_t),
            fmt_full(r.gamma),
            r.backtracks.map(|b| b.to_string()).unwrap_or_default(),
            fmt_opt(r.psi),
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Serializes the full report (status, history, audit map, config snapshot)
/// as one JSON object.
pub fn write_report_json(report: &RunReport, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.flush().map_err(|e| Error::io(path, e))
}
