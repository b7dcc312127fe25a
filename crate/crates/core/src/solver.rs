//! The adaptive-switching main loop.
//!
//! Each iteration evaluates c, J and g, projects the gradient onto the
//! nullspace of J, and then either takes a tangential AdaGrad-norm step
//! `x ← x − α_T g_T` (when the switching test `‖c‖ ≤ β α_T ‖g_T‖` holds) or a
//! damped Gauss-Newton normal step with Armijo backtracking on ½‖c‖². The
//! objective function is never evaluated by the loop itself; only the
//! experiment-harness accept rule and optional diagnostics may call it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, IterationRecord, RunReport};
use crate::error::Error;
use crate::kkt::{self, QrFactors};
use crate::linalg;
use crate::problems::ProblemInstance;

/// All constants of the method and of the experiment protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Switching constant β ∈ (0, 1].
    pub beta: f64,
    /// Step scale η ∈ (0, 1].
    pub eta: f64,
    /// Normal-step cap θ > 1 (the trust-region-like bound ‖s_N‖ ≤ θ‖c‖).
    pub theta: f64,
    /// Gauss-Newton damping δ ≥ 0.
    pub delta: f64,
    /// AdaGrad offset ς ∈ (0, 1].
    pub varsigma: f64,
    /// Reserved constant ω > 0; declared by the method but not referenced by
    /// any update, carried for configuration completeness.
    pub omega: f64,
    /// Stopping tolerance ε ∈ (0, 1).
    pub epsilon: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Step-halving factor of the backtracking line search.
    pub backtrack_factor: f64,
    /// Maximum number of halvings before declaring a stall.
    pub max_backtracks: u32,
    /// Relative rank threshold forwarded to the QR factorization.
    pub rank_tol: f64,
    /// Optional ρ for the Lyapunov diagnostic ψ = f + λ̂ᵀc + ρ‖c‖.
    pub rho_diag: Option<f64>,
    /// Record f (and ψ when `rho_diag` is set) per iteration. Costs one
    /// objective evaluation per iteration, which the algorithm itself never
    /// needs; off by default.
    pub diagnostics: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.01,
            eta: 1.0,
            theta: 1000.0,
            delta: 1e-5,
            varsigma: 1e-5,
            omega: 1.0,
            epsilon: 1e-5,
            max_iter: 100_000,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
            rank_tol: kkt::DEFAULT_RANK_TOL,
            rho_diag: None,
            diagnostics: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta must be in (0,1], got {}", self.beta));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must be in (0,1], got {}", self.eta));
        }
        if !(self.varsigma > 0.0 && self.varsigma <= 1.0) {
            return bad(format!("varsigma must be in (0,1], got {}", self.varsigma));
        }
        if !(self.theta > 1.0) {
            return bad(format!("theta must exceed 1, got {}", self.theta));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta must be nonnegative, got {}", self.delta));
        }
        if !(self.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must be in (0,1), got {}", self.epsilon));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return bad(format!("armijo_c1 must be in (0,1), got {}", self.armijo_c1));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad(format!(
                "backtrack_factor must be in (0,1), got {}",
                self.backtrack_factor
            ));
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be at least 1".to_string());
        }
        if !(self.rank_tol > 0.0) {
            return bad(format!("rank_tol must be positive, got {}", self.rank_tol));
        }
        if let Some(rho) = self.rho_diag {
            if !(rho > 0.0) {
                return bad(format!("rho_diag must be positive, got {rho}"));
            }
        }
        Ok(())
    }
}

/// Which kind of step an iteration took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepType {
    Tangential,
    Normal,
}

/// Mutable state of a run.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Current iterate.
    pub x: Vec<f64>,
    /// Iteration index.
    pub k: usize,
    /// Accumulated sum of squared projected-gradient norms (Γ); nondecreasing,
    /// frozen on normal iterations.
    pub gamma: f64,
    /// Count of tangential iterations taken so far.
    pub n_tangential: usize,
    /// Count of normal iterations taken so far.
    pub n_normal: usize,
    /// Most recent tangential step size α_T.
    pub last_alpha_t: f64,
}

impl SolverState {
    pub fn new(x0: Vec<f64>) -> Self {
        SolverState {
            x: x0,
            k: 0,
            gamma: 0.0,
            n_tangential: 0,
            n_normal: 0,
            last_alpha_t: 0.0,
        }
    }
}

/// Terminal outcome kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationKind {
    /// max[‖g_T‖, ‖c‖] ≤ ε.
    Converged,
    /// ‖Jᵀc‖ ≤ ε while ‖c‖ > ε: a stationary point of the violation measure.
    InfeasibleStationary,
    /// ‖c‖ ≤ ε and f(x) matches the best-known value within the accept band.
    AcceptedOptimal,
    /// Iteration cap reached.
    MaxIterations,
    /// The normal-step line search could not produce a decrease.
    NormalStepStalled,
    /// A non-finite quantity was encountered.
    NumericalFailure,
}

impl TerminationKind {
    /// Short exit code mirroring the usual result-table vocabulary.
    pub fn exit_code_str(&self) -> &'static str {
        match self {
            TerminationKind::Converged => "convg",
            TerminationKind::InfeasibleStationary => "infeas",
            TerminationKind::AcceptedOptimal => "accept",
            TerminationKind::MaxIterations => "maxit",
            TerminationKind::NormalStepStalled => "stall",
            TerminationKind::NumericalFailure => "numfail",
        }
    }

    /// A run is successful when it converged, identified an infeasible
    /// critical point, or matched the best-known objective value.
    pub fn is_success(&self) -> bool {
        matches!(
            self,
            TerminationKind::Converged
                | TerminationKind::InfeasibleStationary
                | TerminationKind::AcceptedOptimal
        )
    }
}

/// Terminal status with the optimality measures at exit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminationStatus {
    pub kind: TerminationKind,
    pub k_final: usize,
    pub gt_norm: f64,
    pub c_norm: f64,
    pub jtc_norm: f64,
    /// Objective value, present only when the accept rule evaluated it.
    pub f: Option<f64>,
}

/// The optimality measures checked by the stopping rules.
#[derive(Debug, Clone, Copy)]
pub struct Measures {
    pub gt_norm: f64,
    pub c_norm: f64,
    pub jtc_norm: f64,
}

/// AdaGrad-norm accumulator update: returns `(Γ⁺, α_T)` with
/// `Γ⁺ = Γ + ‖g_T‖²` and `α_T = η / √(Γ⁺ + ς)`.
pub fn adagrad_update(gamma: f64, g_t: &[f64], eta: f64, varsigma: f64) -> (f64, f64) {
    debug_assert!(gamma >= 0.0 && eta > 0.0 && varsigma > 0.0);
    let gamma_plus = gamma + linalg::dot(g_t, g_t);
    let alpha_t = eta / (gamma_plus + varsigma).sqrt();
    (gamma_plus, alpha_t)
}

/// Switching test: take the tangential step iff `‖c‖ ≤ β α_T ‖g_T‖`.
pub fn should_take_tangential(c_norm: f64, alpha_t: f64, gt_norm: f64, beta: f64) -> bool {
    c_norm <= beta * alpha_t * gt_norm
}

/// Applies the tangential step `x ← x − α_T g_T` and commits `Γ ← Γ⁺`.
///
/// The objective function is not evaluated. Fails if the new iterate is not
/// finite.
pub fn tangential_step(
    state: &mut SolverState,
    g_t: &[f64],
    gamma_plus: f64,
    alpha_t: f64,
) -> Result<(), Error> {
    for (xi, gi) in state.x.iter_mut().zip(g_t) {
        *xi -= alpha_t * gi;
    }
    if !state.x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("tangential step"));
    }
    state.gamma = gamma_plus;
    state.n_tangential += 1;
    state.k += 1;
    Ok(())
}

/// Constraint evaluator handed to the normal-step line search.
pub type ConstraintEval<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, Error> + 'a;

/// Result of one normal-step attempt.
#[derive(Debug, Clone)]
pub enum NormalStepOutcome {
    /// The step was taken; `Γ` is left untouched.
    Taken {
        backtracks: u32,
        step_norm: f64,
        new_c_norm: f64,
    },
    /// No trial satisfied the Armijo condition, or the direction was not a
    /// descent direction for ½‖c‖².
    Stalled,
}

/// Computes the damped Gauss-Newton direction, caps the initial step so that
/// `‖s_N‖ ≤ θ‖c‖` holds for every trial, and backtracks until
/// `½‖c(x+γd)‖² ≤ ½‖c‖² + c₁ γ dᵀJᵀc`.
///
/// On success the iterate is advanced in place and `Γ` is not updated.
pub fn normal_step(
    state: &mut SolverState,
    c: &[f64],
    factors: &QrFactors,
    constraints: &ConstraintEval,
    config: &SolverConfig,
) -> Result<NormalStepOutcome, Error> {
    let c_norm = linalg::norm(c);
    debug_assert!(c_norm > 0.0, "normal step requires c != 0");

    let d = match kkt::normal_direction(factors, c, config.delta) {
        Ok(d) => d,
        // delta = 0 at a rank-deficient iterate: no Newton direction exists.
        Err(Error::RankDeficient { .. }) => return Ok(NormalStepOutcome::Stalled),
        Err(e) => return Err(e),
    };
    let d_norm = linalg::norm(&d);
    if d_norm == 0.0 || !d_norm.is_finite() {
        return Ok(NormalStepOutcome::Stalled);
    }

    // Jᵀc reconstructed from the factors: Jᵀ = Q R Πᵀ.
    let m = factors.m();
    let n = factors.n();
    let cp: Vec<f64> = factors.perm().iter().map(|&orig| c[orig]).collect();
    let mut rc = vec![0.0; n];
    for (i, ri) in rc.iter_mut().enumerate().take(m.min(n)) {
        let mut s = 0.0;
        for j in i..m {
            s += factors.r()[(i, j)] * cp[j];
        }
        *ri = s;
    }
    let jtc = factors.q().matvec(&rc);
    let slope = linalg::dot(&d, &jtc);
    if slope >= 0.0 {
        return Ok(NormalStepOutcome::Stalled);
    }

    let phi0 = 0.5 * c_norm * c_norm;
    let gamma0 = 1.0_f64.min(config.theta * c_norm / d_norm);
    let mut gamma = gamma0;
    let mut trial = vec![0.0; state.x.len()];
    for backtracks in 0..=config.max_backtracks {
        for ((t, xi), di) in trial.iter_mut().zip(&state.x).zip(&d) {
            *t = xi + gamma * di;
        }
        let c_trial = constraints(&trial)?;
        let trial_norm = linalg::norm(&c_trial);
        let phi = 0.5 * trial_norm * trial_norm;
        if phi.is_finite()
            && phi <= phi0 + config.armijo_c1 * gamma * slope
            && trial_norm < c_norm
        {
            state.x.copy_from_slice(&trial);
            state.n_normal += 1;
            state.k += 1;
            return Ok(NormalStepOutcome::Taken {
                backtracks,
                step_norm: gamma * d_norm,
                new_c_norm: trial_norm,
            });
        }
        gamma *= config.backtrack_factor;
    }
    Ok(NormalStepOutcome::Stalled)
}

/// Evaluates the stopping rules, in order: convergence, infeasible critical
/// point, accepted objective value, iteration cap.
///
/// The accept branch is the only path that evaluates the objective, and only
/// when a best-known value is available.
pub fn check_termination(
    measures: &Measures,
    k: usize,
    x: &[f64],
    problem: &ProblemInstance,
    config: &SolverConfig,
) -> Result<Option<TerminationStatus>, Error> {
    let eps = config.epsilon;
    let status = |kind, f| TerminationStatus {
        kind,
        k_final: k,
        gt_norm: measures.gt_norm,
        c_norm: measures.c_norm,
        jtc_norm: measures.jtc_norm,
        f,
    };

    if measures.gt_norm.max(measures.c_norm) <= eps {
        return Ok(Some(status(TerminationKind::Converged, None)));
    }
    if measures.jtc_norm <= eps && measures.c_norm > eps {
        return Ok(Some(status(TerminationKind::InfeasibleStationary, None)));
    }
    if measures.c_norm <= eps {
        if let Some(f_star) = problem.f_star() {
            let f = problem.eval_objective(x)?;
            let accepted = if f_star.abs() < 1e-7 {
                f.abs() <= f_star.abs() + 1e-7
            } else {
                (f - f_star).abs() <= 1e-7 * f_star.abs()
            };
            if accepted {
                return Ok(Some(status(TerminationKind::AcceptedOptimal, Some(f))));
            }
        }
    }
    if k >= config.max_iter {
        return Ok(Some(status(TerminationKind::MaxIterations, None)));
    }
    Ok(None)
}

/// Runs the full loop on `problem` and returns the report with per-iteration
/// history and the post-run invariant audit.
pub fn solve(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunReport, Error> {
    config.validate()?;
    let t0 = Instant::now();
    let mut state = SolverState::new(problem.x0().to_vec());
    let mut history: Vec<IterationRecord> = Vec::new();
    // Worst observed ‖J Δx‖ / (‖J‖ ‖Δx‖) over tangential steps.
    let mut motion_tangency_worst: f64 = 0.0;

    let status = loop {
        let c = problem.eval_constraints(&state.x)?;
        let jac = problem.eval_jacobian(&state.x)?;
        let g = problem.eval_gradient(&state.x)?;

        let finite = state.x.iter().all(|v| v.is_finite())
            && c.iter().all(|v| v.is_finite())
            && g.iter().all(|v| v.is_finite())
            && jac.is_finite();
        if !finite {
            let record = IterationRecord {
                k: state.k,
                step_type: None,
                x_norm: linalg::norm(&state.x),
                f: None,
                gt_norm: f64::NAN,
                c_norm: f64::NAN,
                jtc_norm: f64::NAN,
                alpha_t: f64::NAN,
                gamma: state.gamma,
                step_norm: None,
                backtracks: None,
                psi: None,
            };
            history.push(record);
            break TerminationStatus {
                kind: TerminationKind::NumericalFailure,
                k_final: state.k,
                gt_norm: f64::NAN,
                c_norm: f64::NAN,
                jtc_norm: f64::NAN,
                f: None,
            };
        }

        let factors = kkt::factorize(&jac, config.rank_tol)?;
        let g_t = kkt::project_tangent(&factors, &g);
        let jtc = jac.tr_matvec(&c);
        let measures = Measures {
            gt_norm: linalg::norm(&g_t),
            c_norm: linalg::norm(&c),
            jtc_norm: linalg::norm(&jtc),
        };
        let (gamma_plus, alpha_t) = adagrad_update(state.gamma, &g_t, config.eta, config.varsigma);
        state.last_alpha_t = alpha_t;

        let f_diag = if config.diagnostics {
            Some(problem.eval_objective(&state.x)?)
        } else {
            None
        };
        let psi = match (f_diag, config.rho_diag) {
            (Some(f), Some(rho)) if factors.is_full_rank() => kkt::multipliers(&factors, &g)
                .ok()
                .map(|lam| diagnostics::lyapunov(f, &c, &lam, rho)),
            _ => None,
        };

        let mut record = IterationRecord {
            k: state.k,
            step_type: None,
            x_norm: linalg::norm(&state.x),
            f: f_diag,
            gt_norm: measures.gt_norm,
            c_norm: measures.c_norm,
            jtc_norm: measures.jtc_norm,
            alpha_t,
            gamma: state.gamma,
            step_norm: None,
            backtracks: None,
            psi,
        };

        if let Some(mut st) = check_termination(&measures, state.k, &state.x, problem, config)? {
            if let Some(f) = st.f {
                record.f = record.f.or(Some(f));
            }
            st.k_final = state.k;
            history.push(record);
            break st;
        }

        if should_take_tangential(measures.c_norm, alpha_t, measures.gt_norm, config.beta) {
            let step_norm = alpha_t * measures.gt_norm;
            if measures.gt_norm > 0.0 {
                let j_gt = linalg::norm(&jac.matvec(&g_t));
                let scale = factors.j_norm().max(1e-300) * step_norm.max(1e-300);
                motion_tangency_worst = motion_tangency_worst.max(alpha_t * j_gt / scale);
            }
            record.step_type = Some(StepType::Tangential);
            record.step_norm = Some(step_norm);
            history.push(record);
            if tangential_step(&mut state, &g_t, gamma_plus, alpha_t).is_err() {
                // The step was not completed: the iterate went non-finite and
                // no counter advanced, so the record reverts to terminal.
                if let Some(last) = history.last_mut() {
                    last.step_type = None;
                    last.step_norm = None;
                }
                break TerminationStatus {
                    kind: TerminationKind::NumericalFailure,
                    k_final: state.k,
                    gt_norm: measures.gt_norm,
                    c_norm: measures.c_norm,
                    jtc_norm: measures.jtc_norm,
                    f: None,
                };
            }
        } else {
            let eval = |y: &[f64]| problem.eval_constraints(y);
            match normal_step(&mut state, &c, &factors, &eval, config)? {
                NormalStepOutcome::Taken {
                    backtracks,
                    step_norm,
                    ..
                } => {
                    record.step_type = Some(StepType::Normal);
                    record.step_norm = Some(step_norm);
                    record.backtracks = Some(backtracks);
                    history.push(record);
                }
                NormalStepOutcome::Stalled => {
                    history.push(record);
                    break TerminationStatus {
                        kind: TerminationKind::NormalStepStalled,
                        k_final: state.k,
                        gt_norm: measures.gt_norm,
                        c_norm: measures.c_norm,
                        jtc_norm: measures.jtc_norm,
                        f: None,
                    };
                }
            }
        }
    };

    let mut audit = diagnostics::audit_run(&history, config);
    audit.insert(
        "motion_tangency",
        motion_tangency_worst <= 1e-10,
        motion_tangency_worst,
    );

    Ok(RunReport {
        problem: problem.name().to_string(),
        config: config.clone(),
        status,
        history,
        audit,
        wall_time_s: t0.elapsed().as_secs_f64(),
        x_final: state.x,
    })
}
