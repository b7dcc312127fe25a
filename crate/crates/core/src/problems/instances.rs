//! Built-in analytic test instances.
//!
//! The classic instances follow the Hock–Schittkowski and Boggs–Tolle
//! formulations with their customary start points; dimensions are pinned in
//! [`REGISTRY`] and re-checked at construction. They register no best-known
//! objective value, so runs terminate by the measure-based rules alone; a
//! manifest can supply `f_star` to enable the accept rule. The two synthetic
//! instances (`SPHERE-LIN`, `QUAD-PLANE`) have closed-form optima, registered
//! analytically and used as ground-truth oracles in tests.

use super::ProblemInstance;
use crate::linalg::{cholesky_solve, Matrix};

pub(super) struct RegistryEntry {
    pub name: &'static str,
    pub n: usize,
    pub m: usize,
    pub build: fn() -> ProblemInstance,
}

pub(super) const REGISTRY: &[RegistryEntry] = &[
    RegistryEntry { name: "BT1", n: 2, m: 1, build: bt1 },
    RegistryEntry { name: "BT2", n: 3, m: 1, build: bt2 },
    RegistryEntry { name: "BT11", n: 5, m: 3, build: bt11 },
    RegistryEntry { name: "BYRDSPHR", n: 3, m: 2, build: byrdsphr },
    RegistryEntry { name: "HS6", n: 2, m: 1, build: hs6 },
    RegistryEntry { name: "HS7", n: 2, m: 1, build: hs7 },
    RegistryEntry { name: "HS8", n: 2, m: 2, build: hs8 },
    RegistryEntry { name: "HS9", n: 2, m: 1, build: hs9 },
    RegistryEntry { name: "HS26", n: 3, m: 1, build: hs26 },
    RegistryEntry { name: "HS27", n: 3, m: 1, build: hs27 },
    RegistryEntry { name: "HS28", n: 3, m: 1, build: hs28 },
    RegistryEntry { name: "HS61", n: 3, m: 2, build: hs61 },
    RegistryEntry { name: "MARATOS", n: 2, m: 1, build: maratos },
    RegistryEntry { name: "QUAD-PLANE", n: 5, m: 3, build: quad_plane },
    RegistryEntry { name: "SPHERE-LIN", n: 4, m: 1, build: sphere_lin_default },
];

fn hs6() -> ProblemInstance {
    ProblemInstance::new(
        "HS6",
        2,
        1,
        vec![-1.2, 1.0],
        None,
        |x| (1.0 - x[0]).powi(2),
        |x| vec![-2.0 * (1.0 - x[0]), 0.0],
        |x| vec![10.0 * (x[1] - x[0] * x[0])],
        |x| Matrix::from_rows(&[&[-20.0 * x[0], 10.0]]),
    )
}

fn hs7() -> ProblemInstance {
    ProblemInstance::new(
        "HS7",
        2,
        1,
        vec![2.0, 2.0],
        None,
        |x| (1.0 + x[0] * x[0]).ln() - x[1],
        |x| vec![2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0],
        |x| vec![(1.0 + x[0] * x[0]).powi(2) + x[1] * x[1] - 4.0],
        |x| {
            Matrix::from_rows(&[&[
                4.0 * x[0] * (1.0 + x[0] * x[0]),
                2.0 * x[1],
            ]])
        },
    )
}

fn hs8() -> ProblemInstance {
    ProblemInstance::new(
        "HS8",
        2,
        2,
        vec![2.0, 1.0],
        None,
        |_| -1.0,
        |_| vec![0.0, 0.0],
        |x| vec![x[0] * x[0] + x[1] * x[1] - 25.0, x[0] * x[1] - 9.0],
        |x| Matrix::from_rows(&[&[2.0 * x[0], 2.0 * x[1]], &[x[1], x[0]]]),
    )
}

fn hs9() -> ProblemInstance {
    use std::f64::consts::PI;
    ProblemInstance::new(
        "HS9",
        2,
        1,
        vec![0.0, 0.0],
        None,
        |x| (PI * x[0] / 12.0).sin() * (PI * x[1] / 16.0).cos(),
        |x| {
            vec![
                PI / 12.0 * (PI * x[0] / 12.0).cos() * (PI * x[1] / 16.0).cos(),
                -PI / 16.0 * (PI * x[0] / 12.0).sin() * (PI * x[1] / 16.0).sin(),
            ]
        },
        |x| vec![4.0 * x[0] - 3.0 * x[1]],
        |_| Matrix::from_rows(&[&[4.0, -3.0]]),
    )
}

fn hs26() -> ProblemInstance {
    ProblemInstance::new(
        "HS26",
        3,
        1,
        vec![-2.6, 2.0, 2.0],
        None,
        |x| (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(4),
        |x| {
            let d = x[0] - x[1];
            let e3 = (x[1] - x[2]).powi(3);
            vec![2.0 * d, -2.0 * d + 4.0 * e3, -4.0 * e3]
        },
        |x| vec![(1.0 + x[1] * x[1]) * x[0] + x[2].powi(4) - 3.0],
        |x| {
            Matrix::from_rows(&[&[
                1.0 + x[1] * x[1],
                2.0 * x[0] * x[1],
                4.0 * x[2].powi(3),
            ]])
        },
    )
}

fn hs27() -> ProblemInstance {
    ProblemInstance::new(
        "HS27",
        3,
        1,
        vec![2.0, 2.0, 2.0],
        None,
        |x| 0.01 * (x[0] - 1.0).powi(2) + (x[1] - x[0] * x[0]).powi(2),
        |x| {
            let q = x[1] - x[0] * x[0];
            vec![0.02 * (x[0] - 1.0) - 4.0 * x[0] * q, 2.0 * q, 0.0]
        },
        |x| vec![x[0] + x[2] * x[2] + 1.0],
        |x| Matrix::from_rows(&[&[1.0, 0.0, 2.0 * x[2]]]),
    )
}

fn hs28() -> ProblemInstance {
    ProblemInstance::new(
        "HS28",
        3,
        1,
        vec![-4.0, 1.0, 1.0],
        None,
        |x| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2),
        |x| {
            let a = x[0] + x[1];
            let b = x[1] + x[2];
            vec![2.0 * a, 2.0 * a + 2.0 * b, 2.0 * b]
        },
        |x| vec![x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0],
        |_| Matrix::from_rows(&[&[1.0, 2.0, 3.0]]),
    )
}

fn hs61() -> ProblemInstance {
    ProblemInstance::new(
        "HS61",
        3,
        2,
        vec![0.0, 0.0, 0.0],
        // The customary start leads to an infeasible critical point of ‖c‖,
        // so no best feasible value is recorded.
        None,
        |x| {
            4.0 * x[0] * x[0] + 2.0 * x[1] * x[1] + 2.0 * x[2] * x[2] - 33.0 * x[0]
                + 16.0 * x[1]
                - 24.0 * x[2]
        },
        |x| {
            vec![
                8.0 * x[0] - 33.0,
                4.0 * x[1] + 16.0,
                4.0 * x[2] - 24.0,
            ]
        },
        |x| {
            vec![
                3.0 * x[0] - 2.0 * x[1] * x[1] - 7.0,
                4.0 * x[0] - x[2] * x[2] - 11.0,
            ]
        },
        |x| {
            Matrix::from_rows(&[
                &[3.0, -4.0 * x[1], 0.0],
                &[4.0, 0.0, -2.0 * x[2]],
            ])
        },
    )
}

fn bt1() -> ProblemInstance {
    ProblemInstance::new(
        "BT1",
        2,
        1,
        vec![0.08, 0.06],
        None,
        |x| -x[0] + 10.0 * (x[0] * x[0] + x[1] * x[1] - 1.0),
        |x| vec![-1.0 + 20.0 * x[0], 20.0 * x[1]],
        |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0],
        |x| Matrix::from_rows(&[&[2.0 * x[0], 2.0 * x[1]]]),
    )
}

fn bt2() -> ProblemInstance {
    let rhs = 4.0 + 3.0 * 2.0_f64.sqrt();
    ProblemInstance::new(
        "BT2",
        3,
        1,
        vec![10.0, 10.0, 10.0],
        None,
        |x| (x[0] - 1.0).powi(2) + (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(4),
        |x| {
            let a = x[0] - 1.0;
            let b = x[0] - x[1];
            let e3 = (x[1] - x[2]).powi(3);
            vec![2.0 * a + 2.0 * b, -2.0 * b + 4.0 * e3, -4.0 * e3]
        },
        move |x| vec![x[0] * (1.0 + x[1] * x[1]) + x[2].powi(4) - rhs],
        |x| {
            Matrix::from_rows(&[&[
                1.0 + x[1] * x[1],
                2.0 * x[0] * x[1],
                4.0 * x[2].powi(3),
            ]])
        },
    )
}

fn bt11() -> ProblemInstance {
    let s2 = 2.0_f64.sqrt();
    let rhs1 = 2.0 + 3.0 * s2;
    let rhs2 = -2.0 + 2.0 * s2;
    ProblemInstance::new(
        "BT11",
        5,
        3,
        vec![2.0, 2.0, 2.0, 2.0, 2.0],
        None,
        |x| {
            (x[0] - 1.0).powi(2)
                + (x[0] - x[1]).powi(2)
                + (x[1] - x[2]).powi(2)
                + (x[2] - x[3]).powi(4)
                + (x[3] - x[4]).powi(4)
        },
        |x| {
            let a = x[0] - 1.0;
            let b = x[0] - x[1];
            let c = x[1] - x[2];
            let d3 = (x[2] - x[3]).powi(3);
            let e3 = (x[3] - x[4]).powi(3);
            vec![
                2.0 * a + 2.0 * b,
                -2.0 * b + 2.0 * c,
                -2.0 * c + 4.0 * d3,
                -4.0 * d3 + 4.0 * e3,
                -4.0 * e3,
            ]
        },
        move |x| {
            vec![
                x[0] + x[1] * x[1] + x[2].powi(3) - rhs1,
                x[1] - x[2] * x[2] + x[3] - rhs2,
                x[0] * x[4] - 2.0,
            ]
        },
        |x| {
            Matrix::from_rows(&[
                &[1.0, 2.0 * x[1], 3.0 * x[2] * x[2], 0.0, 0.0],
                &[0.0, 1.0, -2.0 * x[2], 1.0, 0.0],
                &[x[4], 0.0, 0.0, 0.0, x[0]],
            ])
        },
    )
}

fn byrdsphr() -> ProblemInstance {
    // Intersection of two spheres of radius 3 centered at the origin and at
    // (1,0,0); the optimum is x₁ = 1/2, x₂ = x₃ = √(35/8).
    ProblemInstance::new(
        "BYRDSPHR",
        3,
        2,
        vec![5.0, 0.0001, -5.0],
        None,
        |x| -x[0] - x[1] - x[2],
        |_| vec![-1.0, -1.0, -1.0],
        |x| {
            vec![
                x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 9.0,
                (x[0] - 1.0).powi(2) + x[1] * x[1] + x[2] * x[2] - 9.0,
            ]
        },
        |x| {
            Matrix::from_rows(&[
                &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]],
                &[2.0 * (x[0] - 1.0), 2.0 * x[1], 2.0 * x[2]],
            ])
        },
    )
}

fn maratos() -> ProblemInstance {
    ProblemInstance::new(
        "MARATOS",
        2,
        1,
        vec![1.1, 0.1],
        None,
        |x| 2.0 * (x[0] * x[0] + x[1] * x[1] - 1.0) - x[0],
        |x| vec![4.0 * x[0] - 1.0, 4.0 * x[1]],
        |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0],
        |x| Matrix::from_rows(&[&[2.0 * x[0], 2.0 * x[1]]]),
    )
}

/// Linear objective over the unit sphere: f(x) = Σxᵢ, c(x) = ‖x‖² − 1.
///
/// The optimum is x* = −(1/√n)·1 with f* = −√n; the start point (1, 0, …, 0)
/// is feasible.
pub fn sphere_lin(n: usize) -> ProblemInstance {
    assert!(n >= 1);
    let mut x0 = vec![0.0; n];
    x0[0] = 1.0;
    ProblemInstance::new(
        "SPHERE-LIN",
        n,
        1,
        x0,
        Some(-(n as f64).sqrt()),
        |x| x.iter().sum(),
        |x| vec![1.0; x.len()],
        |x| vec![x.iter().map(|v| v * v).sum::<f64>() - 1.0],
        |x| {
            let row: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            Matrix::from_rows(&[&row])
        },
    )
}

fn sphere_lin_default() -> ProblemInstance {
    sphere_lin(4)
}

const QP_N: usize = 5;
const QP_M: usize = 3;
const QP_P: [f64; QP_N] = [2.0, 2.0, 2.0, 2.0, 2.0];
const QP_B: [f64; QP_M] = [1.0, 1.0, 1.0];

fn qp_matrix() -> Matrix {
    // Shifted [1,1,0,0,0] pattern; full row rank.
    Matrix::from_rows(&[
        &[1.0, 1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 1.0, 0.0],
    ])
}

/// Affine projection of `QP_P` onto `{x : Ax = b}`: x* = p − Aᵀ(AAᵀ)⁻¹(Ap − b).
pub fn quad_plane_solution() -> Vec<f64> {
    let a = qp_matrix();
    let mut gram = Matrix::zeros(QP_M, QP_M);
    for i in 0..QP_M {
        for j in 0..QP_M {
            gram[(i, j)] = crate::linalg::dot(a.row(i), a.row(j));
        }
    }
    let ap = a.matvec(&QP_P);
    let mut y: Vec<f64> = ap.iter().zip(QP_B.iter()).map(|(v, b)| v - b).collect();
    assert!(cholesky_solve(&mut gram, &mut y), "AAᵀ must be SPD");
    let aty = a.tr_matvec(&y);
    QP_P.iter().zip(&aty).map(|(p, v)| p - v).collect()
}

/// Strictly convex quadratic over an affine plane:
/// f(x) = ½‖x − p‖², c(x) = Ax − b.
pub fn quad_plane() -> ProblemInstance {
    let x_star = quad_plane_solution();
    let f_star = 0.5
        * x_star
            .iter()
            .zip(QP_P.iter())
            .map(|(x, p)| (x - p) * (x - p))
            .sum::<f64>();
    ProblemInstance::new(
        "QUAD-PLANE",
        QP_N,
        QP_M,
        vec![0.0; QP_N],
        Some(f_star),
        |x| {
            0.5 * x
                .iter()
                .zip(QP_P.iter())
                .map(|(xi, pi)| (xi - pi) * (xi - pi))
                .sum::<f64>()
        },
        |x| x.iter().zip(QP_P.iter()).map(|(xi, pi)| xi - pi).collect(),
        |x| {
            let a = qp_matrix();
            let mut c = a.matvec(x);
            for (ci, bi) in c.iter_mut().zip(QP_B.iter()) {
                *ci -= bi;
            }
            c
        },
        |_| qp_matrix(),
    )
}
