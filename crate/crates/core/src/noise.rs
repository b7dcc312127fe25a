//! Relative Gaussian gradient noise and the multi-run reliability study.
//!
//! Noise is multiplicative and componentwise: `g̃ᵢ = gᵢ (1 + level·zᵢ)` with
//! independent standard normal draws, so a zero gradient stays exactly zero
//! and `level = 0` returns the gradient bit-for-bit. Noise touches the
//! gradient only; constraints and Jacobians stay exact.
//!
//! Reproducibility: every run owns a private ChaCha8 stream whose seed is
//! derived from `(study seed, problem index, level index, run index)` by a
//! SplitMix64 chain, so serial and parallel execution produce identical
//! summaries on any platform.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::problems::ProblemInstance;
use crate::solver::{self, SolverConfig, TerminationKind};

/// Noise level and stream seed for one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Relative noise level, ≥ 0 (0 disables noise exactly).
    pub level: f64,
    /// 64-bit seed of the run's private generator.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(level: f64, seed: u64) -> Self {
        assert!(level >= 0.0, "noise level must be nonnegative");
        NoiseSpec { level, seed }
    }
}

/// Perturbs a gradient in place of its evaluator: `g̃ᵢ = gᵢ(1 + level·zᵢ)`.
pub fn perturb_gradient(g: &[f64], level: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if level == 0.0 {
        return g.to_vec();
    }
    g.iter()
        .map(|&gi| {
            let z: f64 = StandardNormal.sample(rng);
            gi * (1.0 + level * z)
        })
        .collect()
}

/// Wraps a problem so its gradient evaluator adds relative Gaussian noise
/// from the run's private stream. Everything else (including the shared
/// objective-call counter) is preserved.
pub fn noisy_problem(base: &ProblemInstance, spec: NoiseSpec) -> ProblemInstance {
    let inner = base.clone();
    let level = spec.level;
    let rng = Mutex::new(ChaCha8Rng::seed_from_u64(spec.seed));
    base.with_gradient(move |x| {
        let g = inner
            .eval_gradient(x)
            .expect("dimension already checked by the outer view");
        let mut rng = rng.lock().expect("gradient rng poisoned");
        perturb_gradient(&g, level, &mut rng)
    })
}

const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the private seed of run `(problem_idx, level_idx, run_idx)` from
/// the study seed by chaining SplitMix64 over the indices.
pub fn derive_run_seed(seed: u64, problem_idx: u64, level_idx: u64, run_idx: u64) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for v in [problem_idx, level_idx, run_idx] {
        state = out ^ v.wrapping_mul(SPLITMIX_GAMMA);
        out = splitmix64(&mut state);
    }
    out
}

/// Aggregate statistics of one (problem, level) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyCell {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub level: f64,
    pub runs: usize,
    /// Runs that terminated with convergence, an infeasible critical point,
    /// or an accepted objective value.
    pub successes: usize,
    /// Mean final objective over successful non-infeasible runs.
    pub avg_f: Option<f64>,
    /// Mean final ‖g_T‖ over successful non-infeasible runs.
    pub avg_gt_norm: Option<f64>,
    /// Mean final ‖c‖ over successful non-infeasible runs.
    pub avg_c_norm: Option<f64>,
    /// Mean iteration count over all successful runs.
    pub avg_iters: Option<f64>,
    /// Exit kinds of the individual runs, in run order.
    pub exit_kinds: Vec<TerminationKind>,
    pub iters: Vec<usize>,
}

/// Study results for all (problem, level) cells, in canonical order
/// (problems in input order, levels in input order, runs by index).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySummary {
    pub seed: u64,
    pub runs_per_cell: usize,
    pub levels: Vec<f64>,
    pub cells: Vec<StudyCell>,
}

impl StudySummary {
    pub fn cells_at_level(&self, level: f64) -> impl Iterator<Item = &StudyCell> {
        self.cells.iter().filter(move |c| c.level == level)
    }

    pub fn cell(&self, problem: &str, level: f64) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.problem == problem && c.level == level)
    }

    /// Reliability counts for one level: (problems with all runs failed,
    /// problems with all runs successful).
    pub fn reliability(&self, level: f64) -> (usize, usize) {
        let mut all_failed = 0;
        let mut all_ok = 0;
        for cell in self.cells_at_level(level) {
            if cell.successes == 0 {
                all_failed += 1;
            } else if cell.successes == cell.runs {
                all_ok += 1;
            }
        }
        (all_failed, all_ok)
    }
}

/// Runs `runs_per_cell` independent noisy solves for every (problem, level)
/// pair and aggregates the per-cell statistics. Individual run failures are
/// recorded, never propagated.
pub fn run_study(
    problems: &[ProblemInstance],
    levels: &[f64],
    runs_per_cell: usize,
    base_config: &SolverConfig,
    seed: u64,
) -> Result<StudySummary, Error> {
    assert!(runs_per_cell >= 1, "need at least one run per cell");
    base_config.validate()?;
    let mut cells = Vec::with_capacity(problems.len() * levels.len());
    for (pi, problem) in problems.iter().enumerate() {
        for (li, &level) in levels.iter().enumerate() {
            let mut exit_kinds = Vec::with_capacity(runs_per_cell);
            let mut iters = Vec::with_capacity(runs_per_cell);
            let mut sum_f = 0.0;
            let mut sum_gt = 0.0;
            let mut sum_c = 0.0;
            let mut n_measured = 0usize;
            let mut sum_iters = 0usize;
            let mut n_success = 0usize;
            for run in 0..runs_per_cell {
                let run_seed = derive_run_seed(seed, pi as u64, li as u64, run as u64);
                let noisy = noisy_problem(problem, NoiseSpec::new(level, run_seed));
                let report = solver::solve(&noisy, base_config)?;
                let kind = report.status.kind;
                exit_kinds.push(kind);
                iters.push(report.status.k_final);
                if kind.is_success() {
                    n_success += 1;
                    sum_iters += report.status.k_final;
                    if kind != TerminationKind::InfeasibleStationary {
                        // Final objective for reporting; a harness-level
                        // evaluation outside the solver loop.
                        let f = report
                            .status
                            .f
                            .map(Ok)
                            .unwrap_or_else(|| problem.eval_objective(&report.x_final))?;
                        sum_f += f;
                        sum_gt += report.status.gt_norm;
                        sum_c += report.status.c_norm;
                        n_measured += 1;
                    }
                }
            }
            let avg = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
            cells.push(StudyCell {
                problem: problem.name().to_string(),
                n: problem.n(),
                m: problem.m(),
                level,
                runs: runs_per_cell,
                successes: n_success,
                avg_f: avg(sum_f, n_measured),
                avg_gt_norm: avg(sum_gt, n_measured),
                avg_c_norm: avg(sum_c, n_measured),
                avg_iters: avg(sum_iters as f64, n_success),
                exit_kinds,
                iters,
            });
        }
    }
    Ok(StudySummary {
        seed,
        runs_per_cell,
        levels: levels.to_vec(),
        cells,
    })
}

fn fmt_avg(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Writes one level's cells as CSV in the result-table column order:
/// `problem,n,m,avg_f,avg_gT_norm,avg_c_norm,avg_iters,successes`.
pub fn write_study_csv(summary: &StudySummary, level: f64, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, "problem,n,m,avg_f,avg_gT_norm,avg_c_norm,avg_iters,successes").map_err(io_err)?;
    for cell in summary.cells_at_level(level) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            cell.problem,
            cell.n,
            cell.m,
            fmt_avg(cell.avg_f),
            fmt_avg(cell.avg_gt_norm),
            fmt_avg(cell.avg_c_norm),
            fmt_avg(cell.avg_iters),
            cell.successes,
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Serializes the whole study as JSON.
pub fn write_study_json(summary: &StudySummary, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, summary)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.flush().map_err(|e| Error::io(path, e))
}
