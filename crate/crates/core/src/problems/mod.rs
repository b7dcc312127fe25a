//! Problem abstraction, built-in analytic test instances and derivative checks.
//!
//! A [`ProblemInstance`] bundles the objective, gradient, constraints and
//! Jacobian of one equality-constrained problem
//! `min f(x)  s.t.  c(x) = 0` together with its dimensions, start point and
//! (when known) the best feasible objective value. Evaluators are pure, so an
//! instance can be shared freely across threads.

mod instances;
mod manifest;

pub use manifest::{from_manifest_path, from_manifest_str};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::Error;
use crate::linalg::{self, Matrix};

type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// One equality-constrained test problem.
#[derive(Clone)]
pub struct ProblemInstance {
    name: String,
    n: usize,
    m: usize,
    x0: Vec<f64>,
    f_star: Option<f64>,
    objective: ObjectiveFn,
    gradient: VectorFn,
    constraints: VectorFn,
    jacobian: JacobianFn,
    objective_calls: Arc<AtomicU64>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl ProblemInstance {
    /// Wires up a new instance. `m ≤ n` and `x0.len() == n` are enforced.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        x0: Vec<f64>,
        f_star: Option<f64>,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        constraints: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        assert!(n > 0 && m > 0 && m <= n, "need 0 < m <= n");
        assert_eq!(x0.len(), n, "start point length");
        ProblemInstance {
            name: name.into(),
            n,
            m,
            x0,
            f_star,
            objective: Arc::new(objective),
            gradient: Arc::new(gradient),
            constraints: Arc::new(constraints),
            jacobian: Arc::new(jacobian),
            objective_calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    /// Number of objective evaluations since construction (shared across
    /// clones and noisy views of the same instance).
    pub fn objective_call_count(&self) -> u64 {
        self.objective_calls.load(Ordering::Relaxed)
    }

    fn check_dim(&self, x: &[f64], context: &'static str) -> Result<(), Error> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// f(x). Counted; the solver loop itself never calls this.
    pub fn eval_objective(&self, x: &[f64]) -> Result<f64, Error> {
        self.check_dim(x, "eval_objective")?;
        self.objective_calls.fetch_add(1, Ordering::Relaxed);
        Ok((self.objective)(x))
    }

    /// g(x) = ∇f(x).
    pub fn eval_gradient(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        self.check_dim(x, "eval_gradient")?;
        Ok((self.gradient)(x))
    }

    /// c(x).
    pub fn eval_constraints(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        self.check_dim(x, "eval_constraints")?;
        Ok((self.constraints)(x))
    }

    /// J(x) = ∇c(x), an m×n matrix.
    pub fn eval_jacobian(&self, x: &[f64]) -> Result<Matrix, Error> {
        self.check_dim(x, "eval_jacobian")?;
        Ok((self.jacobian)(x))
    }

    /// Replaces the start point (length-checked).
    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self, Error> {
        if x0.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "with_x0",
                expected: self.n,
                got: x0.len(),
            });
        }
        self.x0 = x0;
        Ok(self)
    }

    /// Replaces the best-known feasible value.
    pub fn with_f_star(mut self, f_star: Option<f64>) -> Self {
        self.f_star = f_star;
        self
    }

    /// Builds a view with the gradient evaluator replaced; dimensions, name,
    /// start point and the shared objective-call counter are preserved.
    pub fn with_gradient(
        &self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let mut p = self.clone();
        p.gradient = Arc::new(gradient);
        p
    }
}

/// Outcome of a finite-difference derivative check.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport {
    /// Max relative error of the analytic gradient vs central differences.
    pub gradient_max_rel_err: f64,
    /// Max relative error over all Jacobian rows vs central differences.
    pub jacobian_max_rel_err: f64,
}

impl DerivativeReport {
    pub fn worst(&self) -> f64 {
        self.gradient_max_rel_err.max(self.jacobian_max_rel_err)
    }
}

/// Compares the analytic gradient and Jacobian against central finite
/// differences with per-component step `h·max(1, |xᵢ|)`.
///
/// Errors are scaled by `max(1, ‖·‖∞)` of the analytic quantity so that
/// near-zero components do not inflate the report.
pub fn check_derivatives(
    problem: &ProblemInstance,
    x: &[f64],
    h: f64,
) -> Result<DerivativeReport, Error> {
    assert!(h > 0.0, "finite-difference step must be positive");
    problem.check_dim(x, "check_derivatives")?;
    let n = problem.n();
    let m = problem.m();

    let g = problem.eval_gradient(x)?;
    let g_scale = linalg::inf_norm(&g).max(1.0);
    let jac = problem.eval_jacobian(x)?;
    let mut jac_scale = vec![0.0; m];
    for i in 0..m {
        jac_scale[i] = linalg::inf_norm(jac.row(i)).max(1.0);
    }

    let mut grad_err: f64 = 0.0;
    let mut jac_err: f64 = 0.0;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..n {
        let hi = h * x[i].abs().max(1.0);
        xp[i] = x[i] + hi;
        xm[i] = x[i] - hi;

        let fd_g = (problem.eval_objective(&xp)? - problem.eval_objective(&xm)?) / (2.0 * hi);
        grad_err = grad_err.max((fd_g - g[i]).abs() / g_scale);

        let cp = problem.eval_constraints(&xp)?;
        let cm = problem.eval_constraints(&xm)?;
        for row in 0..m {
            let fd_j = (cp[row] - cm[row]) / (2.0 * hi);
            jac_err = jac_err.max((fd_j - jac[(row, i)]).abs() / jac_scale[row]);
        }

        xp[i] = x[i];
        xm[i] = x[i];
    }

    Ok(DerivativeReport {
        gradient_max_rel_err: grad_err,
        jacobian_max_rel_err: jac_err,
    })
}

/// Names of all registered problems, in registry order.
pub fn builtin_names() -> Vec<&'static str> {
    instances::REGISTRY.iter().map(|e| e.name).collect()
}

/// Builds a registered problem by its exact, case-sensitive name.
///
/// Each entry's dimensions are pinned in the registry and re-checked against
/// the constructed instance, so a formula variant with different (n, m) cannot
/// be registered silently.
pub fn builtin(name: &str) -> Result<ProblemInstance, Error> {
    for entry in instances::REGISTRY {
        if entry.name == name {
            let p = (entry.build)();
            assert_eq!(
                (p.n(), p.m()),
                (entry.n, entry.m),
                "registry dimension pin violated for {name}"
            );
            return Ok(p);
        }
    }
    Err(Error::UnknownProblem {
        name: name.to_string(),
        available: builtin_names().join(", "),
    })
}

/// Builds every registered problem.
pub fn all_builtins() -> Vec<ProblemInstance> {
    builtin_names()
        .iter()
        .map(|n| builtin(n).expect("registry is total"))
        .collect()
}

pub use instances::{quad_plane, sphere_lin};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_lin_objective_and_constraints() {
        let p = sphere_lin(2);
        assert_eq!(p.eval_objective(&[1.0, 0.0]).unwrap(), 1.0);
        // feasible point
        let c = p.eval_constraints(&[1.0, 0.0]).unwrap();
        assert_eq!(c, vec![0.0]);
        // ‖(2,0)‖² − 1 = 3
        let c = p.eval_constraints(&[2.0, 0.0]).unwrap();
        assert_eq!(c, vec![3.0]);
        let j = p.eval_jacobian(&[1.0, 0.0]).unwrap();
        assert_eq!(j.row(0), &[2.0, 0.0]);
        // all-ones gradient everywhere
        let g = p.eval_gradient(&[0.3, -0.7]).unwrap();
        assert_eq!(g, vec![1.0, 1.0]);
        assert_eq!(sphere_lin(4).f_star(), Some(-2.0));
    }

    #[test]
    fn hs6_values() {
        let p = builtin("HS6").unwrap();
        assert_eq!(p.eval_objective(&[1.0, 1.0]).unwrap(), 0.0);
        let g = p.eval_gradient(&[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![-2.0, 0.0]);
    }

    #[test]
    fn maratos_objective_at_solution() {
        let p = builtin("MARATOS").unwrap();
        let f = p.eval_objective(&[1.0, 0.0]).unwrap();
        assert!((f - (-1.0)).abs() <= 1e-5);
    }

    #[test]
    fn hs8_dimensions() {
        let p = builtin("HS8").unwrap();
        assert_eq!((p.n(), p.m()), (2, 2));
    }

    #[test]
    fn quad_plane_optimum_is_feasible() {
        let p = quad_plane();
        let x_star = instances::quad_plane_solution();
        let c = p.eval_constraints(&x_star).unwrap();
        assert!(linalg::norm(&c) < 1e-12);
        // constant Jacobian
        let j1 = p.eval_jacobian(&x_star).unwrap();
        let j2 = p.eval_jacobian(p.x0()).unwrap();
        assert_eq!(j1, j2);
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = builtin("NOPE").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("HS6") && msg.contains("MARATOS"));
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let p = builtin("HS6").unwrap();
        assert!(p.eval_objective(&[1.0]).is_err());
        assert!(p.eval_gradient(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn evaluators_are_pure() {
        let p = builtin("HS7").unwrap();
        let x = [1.3, -0.4];
        let a = p.eval_gradient(&x).unwrap();
        let b = p.eval_gradient(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            p.eval_constraints(&x).unwrap(),
            p.eval_constraints(&x).unwrap()
        );
    }

    #[test]
    fn derivative_check_all_builtins_near_x0() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in all_builtins() {
            // at x0 and at 10 random perturbations
            let rep = check_derivatives(&p, p.x0(), 1e-6).unwrap();
            assert!(rep.worst() < 1e-5, "{} at x0: {rep:?}", p.name());
            for _ in 0..10 {
                let x: Vec<f64> = p
                    .x0()
                    .iter()
                    .map(|v| v + 0.1 * rng.random::<f64>() - 0.05)
                    .collect();
                let rep = check_derivatives(&p, &x, 1e-6).unwrap();
                assert!(rep.worst() < 1e-5, "{} near x0: {rep:?}", p.name());
            }
        }
    }

    #[test]
    fn derivative_check_exact_for_linear_constraints() {
        let p = quad_plane();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..p.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        // Linear constraints: the only error is difference-quotient roundoff,
        // about eps·|c|/h ≈ 1e-10 at h = 1e-6.
        let rep = check_derivatives(&p, &x, 1e-6).unwrap();
        assert!(rep.jacobian_max_rel_err < 1e-9);
    }

    #[test]
    fn derivative_check_catches_corruption() {
        let p = builtin("HS6").unwrap();
        let bad = p.with_gradient(|x| vec![-2.0 * (1.0 - x[0]) + 1.0, 0.0]);
        let rep = check_derivatives(&bad, bad.x0(), 1e-6).unwrap();
        assert!(rep.gradient_max_rel_err > 0.1);
    }

    #[test]
    fn objective_calls_are_counted_and_shared() {
        let p = builtin("HS6").unwrap();
        assert_eq!(p.objective_call_count(), 0);
        let clone = p.clone();
        clone.eval_objective(&[0.0, 0.0]).unwrap();
        assert_eq!(p.objective_call_count(), 1);
    }

    #[test]
    fn instances_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<ProblemInstance>();

        let p = std::sync::Arc::new(builtin("HS7").unwrap());
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let p = std::sync::Arc::clone(&p);
                std::thread::spawn(move || {
                    let x = [1.0 + t as f64, -0.5];
                    (p.eval_gradient(&x).unwrap(), p.eval_constraints(&x).unwrap())
                })
            })
            .collect();
        for (t, h) in handles.into_iter().enumerate() {
            let (g, c) = h.join().unwrap();
            let x = [1.0 + t as f64, -0.5];
            assert_eq!(g, p.eval_gradient(&x).unwrap());
            assert_eq!(c, p.eval_constraints(&x).unwrap());
        }
    }
}
