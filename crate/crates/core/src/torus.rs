//! The moduli variety of torus-invariant, curvature-free projective
//! structures: completion of the six free coordinates to the full normal
//! data, the two defining cubics F and G, torsion detection, the analytic
//! Jacobian, Gauss-Newton sampling of the variety and the example
//! families.
//!
//! Coordinate order throughout: tau = (Pi^1_12, Pi^1_21, Pi^1_22,
//! Pi^2_11, Pi^2_12, Pi^2_21).

use crate::affine::{grid3, AffineConnection};
use crate::error::GeometryError;
use crate::expr::Expression;
use crate::sample::Sampler;
use crate::scalar::Field;

/// The six free coordinates of an invariant projective structure on the
/// torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Tau<F> {
    pub components: [F; 6],
}

/// A Tau completed by the trace constraints and the lower coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedTau<F> {
    pub tau: Tau<F>,
    /// Full Pi^i_{jk} grid, including the two trace-determined entries.
    pub pi_upper: Vec<Vec<Vec<F>>>,
    /// Pi_{jk}; always symmetric off the diagonal by construction.
    pub pi_lower: Vec<Vec<F>>,
}

/// One sample produced by the variety solver.
#[derive(Debug, Clone, PartialEq)]
pub struct VarietySample {
    pub tau: Tau<f64>,
    pub residual: f64,
    pub rank: usize,
    pub has_torsion: bool,
}

impl<F: Field> Tau<F> {
    pub fn zero() -> Self {
        Tau {
            components: [
                F::zero(),
                F::zero(),
                F::zero(),
                F::zero(),
                F::zero(),
                F::zero(),
            ],
        }
    }

    pub fn scale(&self, lambda: &F) -> Self {
        let c = &self.components;
        Tau {
            components: [
                c[0].mul(lambda),
                c[1].mul(lambda),
                c[2].mul(lambda),
                c[3].mul(lambda),
                c[4].mul(lambda),
                c[5].mul(lambda),
            ],
        }
    }
}

/// Fills in Pi^1_11, Pi^2_22 from the two trace constraints and the
/// Pi_{jk} grid from the three defining quadratic equalities.
pub fn complete_tau<F: Field>(t: &Tau<F>) -> CompletedTau<F> {
    let [p112, p121, p122, p211, p212, p221] = t.components.clone();
    let half = F::from_ratio(-1, 2);
    // 2 Pi^1_11 + Pi^2_21 + Pi^2_12 = 0 and 2 Pi^2_22 + Pi^1_12 + Pi^1_21 = 0.
    let p111 = p221.add(&p212).mul(&half);
    let p222 = p112.add(&p121).mul(&half);
    // Pi_11 = -Pi^2_12 Pi^1_11 - Pi^2_22 Pi^2_11 + Pi^1_12 Pi^2_11
    //         + Pi^2_12 Pi^2_21.
    let low11 = p112
        .mul(&p211)
        .add(&p212.mul(&p221))
        .sub(&p212.mul(&p111))
        .sub(&p222.mul(&p211));
    // Pi_12 = Pi_21 = -Pi^2_12 Pi^1_21 + Pi^1_22 Pi^2_11.
    let low12 = p122.mul(&p211).sub(&p212.mul(&p121));
    // Pi_22 = -Pi^1_11 Pi^1_22 - Pi^1_21 Pi^2_22 + Pi^1_21 Pi^1_12
    //         + Pi^2_21 Pi^1_22.
    let low22 = p121
        .mul(&p112)
        .add(&p221.mul(&p122))
        .sub(&p111.mul(&p122))
        .sub(&p121.mul(&p222));
    let pi_upper = vec![
        vec![
            vec![p111, p112.clone()],
            vec![p121.clone(), p122.clone()],
        ],
        vec![
            vec![p211.clone(), p212.clone()],
            vec![p221.clone(), p222],
        ],
    ];
    let pi_lower = vec![vec![low11, low12.clone()], vec![low12, low22]];
    CompletedTau {
        tau: t.clone(),
        pi_upper,
        pi_lower,
    }
}

/// The two defining cubics as expression trees in the six coordinates
/// (coordinate axis i carries tau_{i+1}).
pub fn f_g_expressions() -> (Expression, Expression) {
    let c = |i: usize| Expression::coord(i);
    let term = |a: usize, b: usize, d: usize, num: i64, den: i64| {
        Expression::mul(Expression::mul(c(a), c(b)), c(d)).scale(num, den)
    };
    // tau indices: 0 = Pi^1_12, 1 = Pi^1_21, 2 = Pi^1_22,
    //              3 = Pi^2_11, 4 = Pi^2_12, 5 = Pi^2_21.
    let f = [
        term(4, 4, 0, 1, 2),
        term(4, 5, 0, 3, 2),
        term(0, 3, 0, 3, 2),
        term(4, 1, 4, -3, 2),
        term(4, 1, 5, -1, 2),
        term(2, 3, 4, 1, 1),
        term(1, 1, 3, -1, 2),
        term(1, 0, 3, -1, 1),
        term(5, 2, 3, -1, 1),
    ]
    .into_iter()
    .fold(Expression::zero(), Expression::add);
    let g = [
        term(1, 1, 5, -1, 2),
        term(1, 0, 5, -3, 2),
        term(5, 2, 5, -3, 2),
        term(1, 4, 1, 3, 2),
        term(1, 4, 0, 1, 2),
        term(3, 2, 1, -1, 1),
        term(4, 4, 2, 1, 2),
        term(4, 5, 2, 1, 1),
        term(0, 3, 2, 1, 1),
    ]
    .into_iter()
    .fold(Expression::zero(), Expression::add);
    (f, g)
}

/// Evaluates the cubics F and G at tau.
pub fn f_g<F: Field>(t: &Tau<F>) -> (F, F) {
    let (fe, ge) = f_g_expressions();
    let p: Vec<F> = t.components.to_vec();
    // Polynomial in the coordinates: evaluation cannot fail.
    (fe.eval_value(&p).unwrap(), ge.eval_value(&p).unwrap())
}

/// The structure carries torsion iff Pi^1_12 != Pi^1_21 or
/// Pi^2_12 != Pi^2_21.
pub fn has_torsion<F: Field>(t: &Tau<F>) -> bool {
    let c = &t.components;
    !c[0].sub(&c[1]).is_zero() || !c[4].sub(&c[5]).is_zero()
}

/// The torsion 2-form coefficients (Omega^1, Omega^2) on dx^1 wedge dx^2:
/// Omega^i = -Pi^i_12 + Pi^i_21.
pub fn torsion_coefficients<F: Field>(t: &Tau<F>) -> (F, F) {
    let c = &t.components;
    (c[1].sub(&c[0]), c[5].sub(&c[4]))
}

/// Analytic 2x6 Jacobian of (F, G) with respect to tau.
pub fn jacobian<F: Field>(t: &Tau<F>) -> Vec<Vec<F>> {
    let (fe, ge) = f_g_expressions();
    let p: Vec<F> = t.components.to_vec();
    let fj = fe.eval_jet2(&p).unwrap();
    let gj = ge.eval_jet2(&p).unwrap();
    vec![fj.grad, gj.grad]
}

fn residual_norm(t: &Tau<f64>) -> f64 {
    let (f, g) = f_g(t);
    f.abs().max(g.abs())
}

const SOLVE_TOL: f64 = 1e-12;
const SOLVE_ITERS: usize = 100;

fn gauss_newton(start: &Tau<f64>) -> Option<Tau<f64>> {
    let mut tau = start.clone();
    for _ in 0..SOLVE_ITERS {
        let (f, g) = f_g(&tau);
        if f.abs().max(g.abs()) <= SOLVE_TOL {
            return Some(tau);
        }
        let j = jacobian(&tau);
        // Normal matrix of the underdetermined system: 2x2.
        let mut m = [[0.0f64; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = (0..6).map(|k| j[r][k] * j[c][k]).sum();
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-30 {
            return None;
        }
        let s = [
            (m[1][1] * f - m[0][1] * g) / det,
            (m[0][0] * g - m[1][0] * f) / det,
        ];
        // Minimum-norm step J^T (J J^T)^{-1} r, with backtracking.
        let step: Vec<f64> = (0..6).map(|k| j[0][k] * s[0] + j[1][k] * s[1]).collect();
        let base = f.abs().max(g.abs());
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand = tau.clone();
            for k in 0..6 {
                cand.components[k] -= lambda * step[k];
            }
            if residual_norm(&cand) < base {
                tau = cand;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if residual_norm(&tau) <= SOLVE_TOL {
        Some(tau)
    } else {
        None
    }
}

fn singular_rank(j: &[Vec<f64>], tol: f64) -> usize {
    let mut m = [[0.0f64; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = (0..6).map(|k| j[r][k] * j[c][k]).sum();
        }
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = ((tr + disc) / 2.0).max(0.0).sqrt();
    let l2 = ((tr - disc) / 2.0).max(0.0).sqrt();
    (l1 > tol) as usize + (l2 > tol) as usize
}

/// Samples the variety F = G = 0 by Gauss-Newton from `count` random
/// starts uniform in [-2, 2]^6. Non-converging starts are skipped; the
/// call fails only if every start fails.
pub fn solve_variety(seed: u64, count: usize) -> Result<Vec<VarietySample>, GeometryError> {
    let mut sampler = Sampler::new(seed);
    let mut out = Vec::new();
    for _ in 0..count {
        let mut start = Tau::zero();
        for k in 0..6 {
            start.components[k] = sampler.uniform(-2.0, 2.0);
        }
        if let Some(tau) = gauss_newton(&start) {
            let residual = residual_norm(&tau);
            let rank = singular_rank(&jacobian(&tau), 1e-8);
            let torsion = has_torsion(&tau);
            out.push(VarietySample {
                tau,
                residual,
                rank,
                has_torsion: torsion,
            });
        }
    }
    if out.is_empty() {
        return Err(GeometryError::ConvergenceFailure(SOLVE_ITERS));
    }
    Ok(out)
}

/// An affine representative of the completed structure:
/// Gamma^i_{jk} = Pi^i_{jk} - (delta^i_j nu_k + delta^i_k nu_j).
pub fn gammas_from_tau<F: Field>(ct: &CompletedTau<F>, nu: &[F; 2]) -> AffineConnection {
    let gamma = grid3(2, |i, j, k| {
        let mut v = ct.pi_upper[i][j][k].clone();
        if i == j {
            v = v.sub(&nu[k]);
        }
        if i == k {
            v = v.sub(&nu[j]);
        }
        v.to_expression()
    });
    AffineConnection::new(2, gamma).expect("dimension 2 grid")
}

/// The three-parameter family with Pi^1 = 0: tau = (0, 0, 0, a, b, c).
/// Always on the variety; torsion coefficient Omega^2 = c - b.
pub fn family63<F: Field>(a: F, b: F, c: F) -> CompletedTau<F> {
    complete_tau(&Tau {
        components: [F::zero(), F::zero(), F::zero(), a, b, c],
    })
}

/// Branch selection for the one-parameter trigonometric family,
/// tau = (sin t, -sin t, Pi^1_22, Pi^2_11, -cos t, cos t).
#[derive(Debug, Clone, PartialEq)]
pub enum Branch64 {
    /// sin t = 0: Pi^1_22 is forced to zero, Pi^2_11 stays free.
    ZeroSine { pi2_11: f64 },
    /// cos t = 0: Pi^2_11 is forced to zero, Pi^1_22 stays free.
    ZeroCosine { pi1_22: f64 },
    /// Both nonzero, first case: Pi^1_22 = Pi^2_11 = 0.
    BothZero,
    /// Both nonzero, second case: Pi^1_22 = sin^2 t / cos t and
    /// Pi^2_11 = cos^2 t / sin t.
    Reciprocal,
}

const BRANCH_TOL: f64 = 1e-12;

/// The trigonometric family member for the angle and branch; rejects
/// branches that contradict the sin/cos case split.
pub fn family64(theta: f64, branch: Branch64) -> Result<CompletedTau<f64>, GeometryError> {
    let s = theta.sin();
    let c = theta.cos();
    let (p122, p211) = match branch {
        Branch64::ZeroSine { pi2_11 } => {
            if s.abs() > BRANCH_TOL {
                return Err(GeometryError::InvalidBranch(format!(
                    "ZeroSine requires sin t = 0, got {s}"
                )));
            }
            (0.0, pi2_11)
        }
        Branch64::ZeroCosine { pi1_22 } => {
            if c.abs() > BRANCH_TOL {
                return Err(GeometryError::InvalidBranch(format!(
                    "ZeroCosine requires cos t = 0, got {c}"
                )));
            }
            (pi1_22, 0.0)
        }
        Branch64::BothZero => {
            if s.abs() <= BRANCH_TOL || c.abs() <= BRANCH_TOL {
                return Err(GeometryError::InvalidBranch(
                    "BothZero requires sin t != 0 and cos t != 0".into(),
                ));
            }
            (0.0, 0.0)
        }
        Branch64::Reciprocal => {
            if s.abs() <= BRANCH_TOL || c.abs() <= BRANCH_TOL {
                return Err(GeometryError::InvalidBranch(
                    "Reciprocal requires sin t != 0 and cos t != 0".into(),
                ));
            }
            (s * s / c, c * c / s)
        }
    };
    Ok(complete_tau(&Tau {
        components: [s, -s, p122, p211, -c, c],
    }))
}
