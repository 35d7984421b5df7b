//! The normal Cartan projective connection of an affine connection:
//! reduced torsion, the normalized coefficients Π^i_{jk} and Π_{jk},
//! curvature blocks, flatness, the Hlavaty connection and the coordinate
//! transition law.
//!
//! Derived coefficient fields (Π_{jk}) are materialized as expression trees
//! via symbolic partials of the Π^i_{jk} grid, so they can be differentiated
//! again by the curvature routines; pointwise derivatives always go through
//! forward jets.

use crate::affine::{grid2, grid3, AffineConnection, Grid2, Grid3, OneForm, FLOAT_TOL};
use crate::error::{EvalError, GeometryError};
use crate::expr::Expression;
use crate::linalg::{mat_inverse, Matrix};
use crate::scalar::{Field, Mode};

/// Normalized projective data on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalProjectiveData {
    pub n: usize,
    pub mode: Mode,
    pub mu: OneForm,
    pub nu: OneForm,
    /// Π^i_{jk}, same index convention as the Christoffel grid.
    pub pi_upper: Grid3,
    /// Π_{jk}.
    pub pi_lower: Grid2,
}

/// Pointwise curvature blocks of the pulled-back normal connection.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport<F> {
    pub point: Vec<F>,
    /// K^i_{kl}: torsion 2-form coefficients, antisymmetric in (k, l).
    pub k_torsion: Vec<Vec<Vec<F>>>,
    /// k^i_{jkl}: curvature coefficients, antisymmetric in (k, l).
    pub k_curv: Vec<Vec<Vec<Vec<F>>>>,
    /// K_{jkl}: lower curvature coefficients, antisymmetric in (k, l).
    pub omega_lower: Vec<Vec<Vec<F>>>,
}

fn esum(mut terms: impl Iterator<Item = Expression>) -> Expression {
    let mut acc = match terms.next() {
        Some(t) => t,
        None => return Expression::zero(),
    };
    for t in terms {
        acc = Expression::add(acc, t);
    }
    acc
}

/// μ_j = ½(Γ^α_{αj} − Γ^α_{jα}) and ν_j = −(1/(2(n+1)))(Γ^α_{αj} + Γ^α_{jα}).
pub fn reduced_torsion(c: &AffineConnection) -> (OneForm, OneForm) {
    let n = c.n();
    let trace_first = |j: usize| esum((0..n).map(|a| c.entry(a, a, j).clone()));
    let trace_second = |j: usize| esum((0..n).map(|a| c.entry(a, j, a).clone()));
    let mu = OneForm {
        n,
        components: (0..n)
            .map(|j| Expression::sub(trace_first(j), trace_second(j)).scale(1, 2))
            .collect(),
    };
    let nu = OneForm {
        n,
        components: (0..n)
            .map(|j| {
                Expression::add(trace_first(j), trace_second(j)).scale(-1, 2 * (n as i64 + 1))
            })
            .collect(),
    };
    (mu, nu)
}

/// Normalization with the default weights a = b = 1 of Prop 2.9.
pub fn normalize(c: &AffineConnection) -> Result<NormalProjectiveData, GeometryError> {
    normalize_weighted(c, (1, 1), (1, 1))
}

/// Generalized normalization: ν_j is replaced by
/// −(1/(2(n+1)))(a·Γ^α_{αj} + b·Γ^α_{jα}) with rational weights a, b.
/// Π_{jk} is recovered from the normality condition k^i_{jil} = 0, which
/// stays solvable for arbitrary weights.
pub fn normalize_weighted(
    c: &AffineConnection,
    a: (i64, i64),
    b: (i64, i64),
) -> Result<NormalProjectiveData, GeometryError> {
    let n = c.n();
    if n < 2 {
        return Err(GeometryError::DimensionTooSmall(n));
    }
    let (mu, _) = reduced_torsion(c);
    let trace_first = |j: usize| esum((0..n).map(|al| c.entry(al, al, j).clone()));
    let trace_second = |j: usize| esum((0..n).map(|al| c.entry(al, j, al).clone()));
    let nu = OneForm {
        n,
        components: (0..n)
            .map(|j| {
                Expression::add(
                    trace_first(j).scale(a.0, a.1),
                    trace_second(j).scale(b.0, b.1),
                )
                .scale(-1, 2 * (n as i64 + 1))
            })
            .collect(),
    };
    let pi_upper = grid3(n, |i, j, k| {
        let mut e = c.entry(i, j, k).clone();
        if i == j {
            e = Expression::add(e, nu.components[k].clone());
        }
        if i == k {
            e = Expression::add(e, nu.components[j].clone());
        }
        e
    });
    let pi_lower = pi_lower_from_upper(n, &pi_upper);
    Ok(NormalProjectiveData {
        n,
        mode: c.mode(),
        mu,
        nu,
        pi_upper,
        pi_lower,
    })
}

/// Solves k^i_{jil} = 0 for Π_{jl}: with
/// E_{jl} = ∂Π^i_{jl}/∂x^i − ∂Π^i_{ji}/∂x^l + Π^i_{αi}Π^α_{jl} − Π^α_{jβ}Π^β_{αl}
/// the condition reads E_{jl} + nΠ_{jl} − Π_{lj} = 0, whence
/// Π_{jl} = −(1/(n²−1))(n·E_{jl} + E_{lj}).
fn pi_lower_from_upper(n: usize, pi_upper: &Grid3) -> Grid2 {
    let second_trace: Vec<Expression> = (0..n)
        .map(|j| esum((0..n).map(|i| pi_upper[i][j][i].clone())))
        .collect();
    let e_grid = grid2(n, |j, l| {
        let divergence = esum((0..n).map(|i| pi_upper[i][j][l].partial(i)));
        let trace_derivative = second_trace[j].partial(l);
        let linear = esum((0..n).map(|al| {
            Expression::mul(second_trace[al].clone(), pi_upper[al][j][l].clone())
        }));
        let quadratic = esum((0..n).flat_map(|al| {
            (0..n).map(move |be| {
                Expression::mul(pi_upper[al][j][be].clone(), pi_upper[be][al][l].clone())
            })
        }));
        Expression::sub(
            Expression::add(Expression::sub(divergence, trace_derivative), linear),
            quadratic,
        )
    });
    let denom = (n * n - 1) as i64;
    grid2(n, |j, l| {
        Expression::add(e_grid[j][l].scale(n as i64, 1), e_grid[l][j].clone()).scale(-1, denom)
    })
}

impl NormalProjectiveData {
    pub fn eval_pi_upper<F: Field>(&self, p: &[F]) -> Result<Vec<Vec<Vec<F>>>, EvalError> {
        self.pi_upper
            .iter()
            .map(|plane| {
                plane
                    .iter()
                    .map(|row| row.iter().map(|e| e.eval_value(p)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn eval_pi_lower<F: Field>(&self, p: &[F]) -> Result<Vec<Vec<F>>, EvalError> {
        self.pi_lower
            .iter()
            .map(|row| row.iter().map(|e| e.eval_value(p)).collect())
            .collect()
    }
}

/// Evaluates K^i_{kl}, k^i_{jkl} and K_{jkl} at a point.
pub fn curvature<F: Field>(
    d: &NormalProjectiveData,
    p: &[F],
) -> Result<CurvatureReport<F>, EvalError> {
    let n = d.n;
    // Jets carry the values and first derivatives of every coefficient.
    let mut up = Vec::with_capacity(n);
    for i in 0..n {
        let mut plane = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                row.push(d.pi_upper[i][j][k].eval_jet2(p)?);
            }
            plane.push(row);
        }
        up.push(plane);
    }
    let mut low = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            row.push(d.pi_lower[j][k].eval_jet2(p)?);
        }
        low.push(row);
    }

    let k_torsion: Vec<Vec<Vec<F>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| up[i][l][k].value.sub(&up[i][k][l].value))
                        .collect()
                })
                .collect()
        })
        .collect();

    let k_curv: Vec<Vec<Vec<Vec<F>>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (0..n)
                                .map(|l| {
                                    let mut acc =
                                        up[i][j][l].grad[k].sub(&up[i][j][k].grad[l]);
                                    for al in 0..n {
                                        acc = acc
                                            .add(&up[i][al][k].value.mul(&up[al][j][l].value));
                                        acc = acc
                                            .sub(&up[i][al][l].value.mul(&up[al][j][k].value));
                                    }
                                    if i == k {
                                        acc = acc.add(&low[j][l].value);
                                    }
                                    if i == l {
                                        acc = acc.sub(&low[j][k].value);
                                    }
                                    if i == j {
                                        acc = acc
                                            .sub(&low[l][k].value.sub(&low[k][l].value));
                                    }
                                    acc
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let omega_lower: Vec<Vec<Vec<F>>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            let mut acc = low[j][l].grad[k].sub(&low[j][k].grad[l]);
                            for al in 0..n {
                                acc = acc.add(&low[al][k].value.mul(&up[al][j][l].value));
                                acc = acc.sub(&low[al][l].value.mul(&up[al][j][k].value));
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(CurvatureReport {
        point: p.to_vec(),
        k_torsion,
        k_curv,
        omega_lower,
    })
}

impl<F: Field> CurvatureReport<F> {
    /// Largest absolute value over all blocks (float view).
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for v in self.k_torsion.iter().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        for v in self.k_curv.iter().flatten().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        for v in self.omega_lower.iter().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        m
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.k_torsion
            .iter()
            .flatten()
            .flatten()
            .all(|v| v.is_zero_within(tol))
            && self
                .k_curv
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .all(|v| v.is_zero_within(tol))
            && self
                .omega_lower
                .iter()
                .flatten()
                .flatten()
                .all(|v| v.is_zero_within(tol))
    }
}

/// Flat iff torsion and every curvature block vanish at every sample.
pub fn is_flat<F: Field>(d: &NormalProjectiveData, samples: &[Vec<F>]) -> Result<bool, EvalError> {
    for p in samples {
        if !curvature(d, p)?.is_zero(FLOAT_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The Hlavaty connection: trace-free in both lower slots.
pub fn hlavaty(c: &AffineConnection) -> Result<Grid3, GeometryError> {
    let n = c.n();
    if n < 2 {
        return Err(GeometryError::DimensionTooSmall(n));
    }
    let trace_first = |j: usize| esum((0..n).map(|al| c.entry(al, al, j).clone()));
    let trace_second = |j: usize| esum((0..n).map(|al| c.entry(al, j, al).clone()));
    let denom = (n * n - 1) as i64;
    let corr: Vec<Expression> = (0..n)
        .map(|k| {
            Expression::sub(trace_second(k), trace_first(k).scale(n as i64, 1)).scale(1, denom)
        })
        .collect();
    let corr2: Vec<Expression> = (0..n)
        .map(|j| {
            Expression::sub(trace_first(j), trace_second(j).scale(n as i64, 1)).scale(1, denom)
        })
        .collect();
    Ok(grid3(n, |i, j, k| {
        let mut e = c.entry(i, j, k).clone();
        if i == j {
            e = Expression::add(e, corr[k].clone());
        }
        if i == k {
            e = Expression::add(e, corr2[j].clone());
        }
        e
    }))
}

/// Result of pushing normalized data through a chart transition ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPi<F> {
    /// ψ(p).
    pub image: Vec<F>,
    /// Π̂^i_{jk} at ψ(p).
    pub pi_upper: Vec<Vec<Vec<F>>>,
}

/// Pushes Π^i_{jk} through ψ at p by inverting the Lemma 2.12 transition
/// identity:
/// Π = Dψ⁻¹Hψ + Dψ⁻¹ Π̂ (Dψ ⊗ Dψ) − (1/(n+1))(δ⊗∂logJ + ∂logJ⊗δ),
/// where ∂logJ/∂x^j = tr(Dψ⁻¹ · ∂Dψ/∂x^j).
pub fn transform<F: Field>(
    d: &NormalProjectiveData,
    psi: &[Expression],
    p: &[F],
) -> Result<TransformedPi<F>, GeometryError> {
    let n = d.n;
    if psi.len() != n {
        return Err(GeometryError::DimensionMismatch {
            left: n,
            right: psi.len(),
        });
    }
    let jets: Vec<_> = psi
        .iter()
        .map(|e| e.eval_jet2(p))
        .collect::<Result<_, _>>()?;
    let image: Vec<F> = jets.iter().map(|j| j.value.clone()).collect();
    let dpsi: Matrix<F> = jets.iter().map(|j| j.grad.clone()).collect();
    let dpsi_inv = mat_inverse(&dpsi)?;
    // L_j = ∂ log Jψ / ∂x^j = tr(Dψ⁻¹ · Hψ^·_{·j}).
    let log_j_grad: Vec<F> = (0..n)
        .map(|j| {
            let mut acc = F::zero();
            for a in 0..n {
                for b in 0..n {
                    acc = acc.add(&dpsi_inv[a][b].mul(&jets[b].hess[a][j]));
                }
            }
            acc
        })
        .collect();
    let pi = d.eval_pi_upper(p)?;
    let np1 = F::from_int(n as i64 + 1);
    // R^i_{jk} = Π^i_{jk} − (Dψ⁻¹ Hψ)^i_{jk} + (1/(n+1))(δ^i_j L_k + δ^i_k L_j),
    // then Π̂^a_{bc} = Dψ^a_i R^i_{jk} (Dψ⁻¹)^j_b (Dψ⁻¹)^k_c.
    let mut residual = vec![vec![vec![F::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut r = pi[i][j][k].clone();
                for al in 0..n {
                    r = r.sub(&dpsi_inv[i][al].mul(&jets[al].hess[j][k]));
                }
                if i == j {
                    r = r.add(&log_j_grad[k].div(&np1)?);
                }
                if i == k {
                    r = r.add(&log_j_grad[j].div(&np1)?);
                }
                residual[i][j][k] = r;
            }
        }
    }
    let mut hat = vec![vec![vec![F::zero(); n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = F::zero();
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            acc = acc.add(
                                &dpsi[a][i]
                                    .mul(&residual[i][j][k])
                                    .mul(&dpsi_inv[j][b])
                                    .mul(&dpsi_inv[k][c]),
                            );
                        }
                    }
                }
                hat[a][b][c] = acc;
            }
        }
    }
    Ok(TransformedPi {
        image,
        pi_upper: hat,
    })
}

/// Recomputes the right-hand side of the Lemma 2.12 identity from Π̂ and
/// returns the maximum absolute residual against Π at p.
pub fn transform_residual<F: Field>(
    d: &NormalProjectiveData,
    psi: &[Expression],
    p: &[F],
    hat: &TransformedPi<F>,
) -> Result<f64, GeometryError> {
    let n = d.n;
    let jets: Vec<_> = psi
        .iter()
        .map(|e| e.eval_jet2(p))
        .collect::<Result<_, _>>()?;
    let dpsi: Matrix<F> = jets.iter().map(|j| j.grad.clone()).collect();
    let dpsi_inv = mat_inverse(&dpsi)?;
    let log_j_grad: Vec<F> = (0..n)
        .map(|j| {
            let mut acc = F::zero();
            for a in 0..n {
                for b in 0..n {
                    acc = acc.add(&dpsi_inv[a][b].mul(&jets[b].hess[a][j]));
                }
            }
            acc
        })
        .collect();
    let pi = d.eval_pi_upper(p)?;
    let np1 = F::from_int(n as i64 + 1);
    let mut max_res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut rhs = F::zero();
                for al in 0..n {
                    rhs = rhs.add(&dpsi_inv[i][al].mul(&jets[al].hess[j][k]));
                    for be in 0..n {
                        for ga in 0..n {
                            rhs = rhs.add(
                                &dpsi_inv[i][al]
                                    .mul(&hat.pi_upper[al][be][ga])
                                    .mul(&dpsi[be][j])
                                    .mul(&dpsi[ga][k]),
                            );
                        }
                    }
                }
                if i == j {
                    rhs = rhs.sub(&log_j_grad[k].div(&np1)?);
                }
                if i == k {
                    rhs = rhs.sub(&log_j_grad[j].div(&np1)?);
                }
                max_res = max_res.max(pi[i][j][k].sub(&rhs).to_f64().abs());
            }
        }
    }
    Ok(max_res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{example61, projective_shift, vanishes_on_samples, AffineConnection};
    use crate::sample::Sampler;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn example61_reduced_torsion() {
        let (mu, nu) = reduced_torsion(&example61());
        let p = vec![q(1, 3), q(1, 7)];
        assert_eq!(mu.eval(&p).unwrap(), vec![q(-1, 1), q(0, 1)]);
        assert_eq!(nu.eval(&p).unwrap(), vec![q(-1, 2), q(1, 2)]);
    }

    #[test]
    fn example61_normalization() {
        let d = normalize(&example61()).unwrap();
        let p = vec![q(2, 5), q(3, 5)];
        let up = d.eval_pi_upper(&p).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(up[0][j][k], q(0, 1), "Pi^1_{{{j}{k}}}");
            }
        }
        assert_eq!(up[1][0][0], q(1, 1));
        assert_eq!(up[1][0][1], q(1, 1));
        assert_eq!(up[1][1][0], q(-1, 1));
        assert_eq!(up[1][1][1], q(0, 1));
        let low = d.eval_pi_lower(&p).unwrap();
        assert_eq!(low[0][0], q(-1, 1));
        assert_eq!(low[0][1], q(0, 1));
        assert_eq!(low[1][0], q(0, 1));
        assert_eq!(low[1][1], q(0, 1));
    }

    #[test]
    fn example61_curvature() {
        let d = normalize(&example61()).unwrap();
        let p = vec![q(1, 2), q(1, 3)];
        let r = curvature(&d, &p).unwrap();
        assert_eq!(r.k_torsion[1][0][1], q(-2, 1));
        assert_eq!(r.k_torsion[0][0][1], q(0, 1));
        for v in r.k_curv.iter().flatten().flatten().flatten() {
            assert_eq!(*v, q(0, 1));
        }
        for v in r.omega_lower.iter().flatten().flatten() {
            assert_eq!(*v, q(0, 1));
        }
        assert!(!is_flat(&d, &[p]).unwrap());
    }

    #[test]
    fn flat_connection_is_flat() {
        let d = normalize(&AffineConnection::zero(2)).unwrap();
        let samples = crate::sample::default_sample_points::<BigRational>(1, 2);
        assert!(is_flat(&d, &samples).unwrap());
    }

    #[test]
    fn trace_conditions_hold() {
        let mut sampler = Sampler::new(21);
        for &n in &[2usize, 3] {
            let c = AffineConnection::random_polynomial(&mut sampler, n, 1);
            let d = normalize(&c).unwrap();
            let p: Vec<BigRational> = sampler.unit_point(n);
            let up = d.eval_pi_upper(&p).unwrap();
            let mu = d.mu.eval(&p).unwrap();
            for k in 0..n {
                let mut t1 = BigRational::from_integer(BigInt::from(0));
                let mut t2 = BigRational::from_integer(BigInt::from(0));
                for al in 0..n {
                    t1 += &up[al][al][k];
                    t2 += &up[al][k][al];
                }
                assert_eq!(t1, mu[k].clone());
                assert_eq!(t2, -mu[k].clone());
            }
        }
    }

    #[test]
    fn normality_k_trace_vanishes() {
        let mut sampler = Sampler::new(33);
        let c = AffineConnection::random_polynomial(&mut sampler, 2, 2);
        let d = normalize(&c).unwrap();
        let p: Vec<BigRational> = sampler.unit_point(2);
        let r = curvature(&d, &p).unwrap();
        for j in 0..2 {
            for l in 0..2 {
                let mut acc = BigRational::from_integer(BigInt::from(0));
                for i in 0..2 {
                    acc += &r.k_curv[i][j][i][l];
                }
                assert_eq!(acc, BigRational::from_integer(BigInt::from(0)));
            }
        }
    }

    #[test]
    fn weighted_normalization_keeps_normality() {
        let mut sampler = Sampler::new(35);
        let c = AffineConnection::random_constant(&mut sampler, 2);
        let d = normalize_weighted(&c, (3, 2), (1, 3)).unwrap();
        let p: Vec<BigRational> = sampler.unit_point(2);
        let r = curvature(&d, &p).unwrap();
        for j in 0..2 {
            for l in 0..2 {
                let mut acc = BigRational::from_integer(BigInt::from(0));
                for i in 0..2 {
                    acc += &r.k_curv[i][j][i][l];
                }
                assert_eq!(acc, BigRational::from_integer(BigInt::from(0)));
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let mut sampler = Sampler::new(40);
        let c = AffineConnection::random_constant(&mut sampler, 3);
        let rho = OneForm::constant(&[1, -2, 3]);
        let d1 = normalize(&c).unwrap();
        let d2 = normalize(&projective_shift(&c, &rho)).unwrap();
        let p: Vec<BigRational> = sampler.unit_point(3);
        assert_eq!(d1.eval_pi_upper(&p).unwrap(), d2.eval_pi_upper(&p).unwrap());
        assert_eq!(d1.eval_pi_lower(&p).unwrap(), d2.eval_pi_lower(&p).unwrap());
    }

    #[test]
    fn torsion_free_closed_form() {
        let mut sampler = Sampler::new(50);
        let n = 3;
        // Symmetrize a random constant connection.
        let raw = AffineConnection::random_constant(&mut sampler, n);
        let sym = crate::affine::torsion_free_companion(&raw);
        let d = normalize(&sym).unwrap();
        let p: Vec<BigRational> = sampler.unit_point(n);
        let g = sym.eval_gamma(&p).unwrap();
        let up = d.eval_pi_upper(&p).unwrap();
        let low = d.eval_pi_lower(&p).unwrap();
        let np1 = BigRational::from_integer(BigInt::from(n as i64 + 1));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut want = g[i][j][k].clone();
                    let tr = |idx: usize| -> BigRational {
                        let mut acc = BigRational::from_integer(BigInt::from(0));
                        for al in 0..n {
                            acc += &g[al][al][idx];
                        }
                        acc
                    };
                    if i == j {
                        want -= tr(k) / np1.clone();
                    }
                    if i == k {
                        want -= tr(j) / np1.clone();
                    }
                    assert_eq!(up[i][j][k], want);
                    assert_eq!(up[i][j][k], up[i][k][j]);
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                assert_eq!(low[j][k], low[k][j]);
            }
        }
        // Lemma 2.13 closed form for the lower coefficients on constant data:
        // Π_{jk} = −(1/(n−1))(∂Π/∂x (=0) − Π^α_{jβ}Π^β_{αk}).
        for j in 0..n {
            for k in 0..n {
                let mut quad = BigRational::from_integer(BigInt::from(0));
                for al in 0..n {
                    for be in 0..n {
                        quad += up[al][j][be].clone() * up[be][al][k].clone();
                    }
                }
                let want = quad / BigRational::from_integer(BigInt::from(n as i64 - 1));
                assert_eq!(low[j][k], want);
            }
        }
        // Trace-free curvature (Lemma 2.13): k^i_{ikl} = 0.
        let r = curvature(&d, &p).unwrap();
        for k in 0..n {
            for l in 0..n {
                let mut acc = BigRational::from_integer(BigInt::from(0));
                for i in 0..n {
                    acc += &r.k_curv[i][i][k][l];
                }
                assert_eq!(acc, BigRational::from_integer(BigInt::from(0)));
            }
        }
    }

    #[test]
    fn hlavaty_traces_vanish() {
        let phi = hlavaty(&example61()).unwrap();
        let traces: Vec<Expression> = (0..2)
            .flat_map(|k| {
                let phi = phi.clone();
                vec![
                    esum((0..2).map({
                        let phi = phi.clone();
                        move |al| phi[al][al][k].clone()
                    })),
                    esum((0..2).map({
                        let phi = phi.clone();
                        move |al| phi[al][k][al].clone()
                    })),
                ]
            })
            .collect();
        assert!(vanishes_on_samples(traces.iter(), 2, Mode::Exact).unwrap());
    }

    #[test]
    fn hlavaty_difference_identity() {
        let c = example61();
        let phi = hlavaty(&c).unwrap();
        let d = normalize(&c).unwrap();
        let (mu, _) = reduced_torsion(&c);
        let n = 2usize;
        let mut residuals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut want = Expression::zero();
                    if i == j {
                        want = Expression::sub(want, mu.components[k].clone());
                    }
                    if i == k {
                        want = Expression::add(want, mu.components[j].clone());
                    }
                    let want = want.scale(1, n as i64 - 1);
                    let diff =
                        Expression::sub(phi[i][j][k].clone(), d.pi_upper[i][j][k].clone());
                    residuals.push(Expression::sub(diff, want));
                }
            }
        }
        assert!(vanishes_on_samples(residuals.iter(), n, Mode::Exact).unwrap());
    }

    #[test]
    fn transform_identity_map() {
        let d = normalize(&example61()).unwrap();
        let psi = vec![Expression::coord(0), Expression::coord(1)];
        let p = vec![q(1, 3), q(1, 4)];
        let t = transform(&d, &psi, &p).unwrap();
        assert_eq!(t.image, p);
        assert_eq!(t.pi_upper, d.eval_pi_upper(&p).unwrap());
        assert_eq!(transform_residual(&d, &psi, &p, &t).unwrap(), 0.0);
    }

    #[test]
    fn transform_scaling_map() {
        // ψ = 2x: constant Jacobian, Hψ = 0, so Π̂^i_{jk} = ½ Π^i_{jk}
        // (values compared at matching points for constant Π).
        let mut sampler = Sampler::new(61);
        let c = AffineConnection::random_constant(&mut sampler, 2);
        let d = normalize(&c).unwrap();
        let psi = vec![
            Expression::coord(0).scale(2, 1),
            Expression::coord(1).scale(2, 1),
        ];
        let p = vec![q(1, 5), q(2, 5)];
        let t = transform(&d, &psi, &p).unwrap();
        let pi = d.eval_pi_upper(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(t.pi_upper[i][j][k], pi[i][j][k].clone() * q(1, 2));
                }
            }
        }
        assert_eq!(transform_residual(&d, &psi, &p, &t).unwrap(), 0.0);
    }

    #[test]
    fn transform_nonlinear_residual() {
        let d = normalize(&example61()).unwrap();
        let psi = vec![
            Expression::add(
                Expression::coord(0),
                Expression::powi(Expression::coord(1), 2),
            ),
            Expression::coord(1),
        ];
        let p = vec![q(0, 1), q(0, 1)];
        let t = transform(&d, &psi, &p).unwrap();
        assert!(transform_residual(&d, &psi, &p, &t).unwrap() < 1e-9);
    }
}
