//! The jet groups G̃² and H² with their actions, and the graded Lie algebra
//! pgl_{n+1} = m ⊕ gl_n ⊕ m* with its bracket table.
//!
//! Elements are plain value grids over a [`Field`]; all operations are exact
//! in rational mode.

use crate::error::{EvalError, GeometryError};
use crate::linalg::{identity, mat_inverse, mat_mul, Matrix};
use crate::scalar::Field;

/// An element (a^i_j, a^i_{jk}) of G̃² = GL_n ⋉ R^{n³}; no symmetry is
/// imposed on the second-order part (formal frames carry torsion).
#[derive(Debug, Clone, PartialEq)]
pub struct G2Element<F> {
    pub n: usize,
    pub a_upper: Matrix<F>,
    pub a_sym: Vec<Vec<Vec<F>>>,
}

/// An element (a^i_j, a_j) of H², the projective isotropy group.
#[derive(Debug, Clone, PartialEq)]
pub struct H2Element<F> {
    pub n: usize,
    pub a_upper: Matrix<F>,
    pub a_low: Vec<F>,
}

/// An element (v, U, ξ) of pgl_{n+1} in the grading chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PglElement<F> {
    pub v: Vec<F>,
    pub u: Matrix<F>,
    pub xi: Vec<F>,
}

impl<F: Field> G2Element<F> {
    pub fn identity(n: usize) -> Self {
        G2Element {
            n,
            a_upper: identity(n),
            a_sym: vec![vec![vec![F::zero(); n]; n]; n],
        }
    }
}

impl<F: Field> H2Element<F> {
    pub fn identity(n: usize) -> Self {
        H2Element {
            n,
            a_upper: identity(n),
            a_low: vec![F::zero(); n],
        }
    }
}

impl<F: Field> PglElement<F> {
    pub fn zero(n: usize) -> Self {
        PglElement {
            v: vec![F::zero(); n],
            u: vec![vec![F::zero(); n]; n],
            xi: vec![F::zero(); n],
        }
    }
}

/// Group law (a·b) = (a^i_l b^l_j, a^i_l b^l_{jk} + a^i_{lm} b^l_j b^m_k).
pub fn g2_mul<F: Field>(a: &G2Element<F>, b: &G2Element<F>) -> Result<G2Element<F>, GeometryError> {
    if a.n != b.n {
        return Err(GeometryError::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let n = a.n;
    let a_upper = mat_mul(&a.a_upper, &b.a_upper);
    let mut a_sym = vec![vec![vec![F::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = F::zero();
                for l in 0..n {
                    acc = acc.add(&a.a_upper[i][l].mul(&b.a_sym[l][j][k]));
                    for m in 0..n {
                        acc = acc.add(
                            &a.a_sym[i][l][m].mul(&b.a_upper[l][j]).mul(&b.a_upper[m][k]),
                        );
                    }
                }
                a_sym[i][j][k] = acc;
            }
        }
    }
    Ok(G2Element { n, a_upper, a_sym })
}

pub fn g2_inverse<F: Field>(a: &G2Element<F>) -> Result<G2Element<F>, EvalError> {
    let n = a.n;
    let inv = mat_inverse(&a.a_upper)?;
    let mut a_sym = vec![vec![vec![F::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = F::zero();
                for al in 0..n {
                    for be in 0..n {
                        for ga in 0..n {
                            acc = acc.add(
                                &inv[i][al]
                                    .mul(&a.a_sym[al][be][ga])
                                    .mul(&inv[be][j])
                                    .mul(&inv[ga][k]),
                            );
                        }
                    }
                }
                a_sym[i][j][k] = acc.neg();
            }
        }
    }
    Ok(G2Element {
        n,
        a_upper: inv,
        a_sym,
    })
}

/// Def 2.1 embedding: a^i_{jk} = −(a^i_j a_k + a_j a^i_k).
pub fn h2_embed<F: Field>(h: &H2Element<F>) -> G2Element<F> {
    let n = h.n;
    let mut a_sym = vec![vec![vec![F::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                a_sym[i][j][k] = h.a_upper[i][j]
                    .mul(&h.a_low[k])
                    .add(&h.a_low[j].mul(&h.a_upper[i][k]))
                    .neg();
            }
        }
    }
    G2Element {
        n,
        a_upper: h.a_upper.clone(),
        a_sym,
    }
}

/// Extracts (a^i_j, a_j) from a G̃² element of H² shape, if it has one.
pub fn h2_extract<F: Field>(g: &G2Element<F>, tol: f64) -> Option<H2Element<F>> {
    let n = g.n;
    let inv = mat_inverse(&g.a_upper).ok()?;
    // From a^i_{jk} = −(a^i_j a_k + a_j a^i_k): contracting with (a⁻¹)^j_i
    // gives −(n+1) a_k.
    let mut a_low = vec![F::zero(); n];
    for k in 0..n {
        let mut acc = F::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc.add(&inv[j][i].mul(&g.a_sym[i][j][k]));
            }
        }
        a_low[k] = acc
            .div(&F::from_int(-(n as i64 + 1)))
            .ok()?;
    }
    let candidate = H2Element {
        n,
        a_upper: g.a_upper.clone(),
        a_low,
    };
    let embedded = h2_embed(&candidate);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if !embedded.a_sym[i][j][k]
                    .sub(&g.a_sym[i][j][k])
                    .is_zero_within(tol)
                {
                    return None;
                }
            }
        }
    }
    Some(candidate)
}

/// Bilinear extension of the six bracket rules:
/// [u,v]=0, [u*,v*]=0, [U,u]=Uu, [u*,U]=u*U, [U,V]=UV−VU,
/// [u,u*]=uu* + (u*u)·I_n.
pub fn pgl_bracket<F: Field>(
    x: &PglElement<F>,
    y: &PglElement<F>,
) -> Result<PglElement<F>, GeometryError> {
    let n = x.v.len();
    if y.v.len() != n {
        return Err(GeometryError::DimensionMismatch {
            left: n,
            right: y.v.len(),
        });
    }
    // m-part: [U, w] − [V, v] = Uw − Vv.
    let v: Vec<F> = (0..n)
        .map(|i| {
            let mut acc = F::zero();
            for j in 0..n {
                acc = acc.add(&x.u[i][j].mul(&y.v[j]));
                acc = acc.sub(&y.u[i][j].mul(&x.v[j]));
            }
            acc
        })
        .collect();
    // gl-part: UV − VU + (vη + (ηv)I) − (wξ + (ξw)I).
    let mut u = vec![vec![F::zero(); n]; n];
    let dot = |a: &[F], b: &[F]| {
        let mut acc = F::zero();
        for (p, q) in a.iter().zip(b) {
            acc = acc.add(&p.mul(q));
        }
        acc
    };
    let eta_v = dot(&y.xi, &x.v);
    let xi_w = dot(&x.xi, &y.v);
    for i in 0..n {
        for j in 0..n {
            let mut acc = F::zero();
            for k in 0..n {
                acc = acc.add(&x.u[i][k].mul(&y.u[k][j]));
                acc = acc.sub(&y.u[i][k].mul(&x.u[k][j]));
            }
            acc = acc.add(&x.v[i].mul(&y.xi[j]));
            acc = acc.sub(&y.v[i].mul(&x.xi[j]));
            if i == j {
                acc = acc.add(&eta_v).sub(&xi_w);
            }
            u[i][j] = acc;
        }
    }
    // m*-part: ξV − ηU.
    let xi: Vec<F> = (0..n)
        .map(|j| {
            let mut acc = F::zero();
            for k in 0..n {
                acc = acc.add(&x.xi[k].mul(&y.u[k][j]));
                acc = acc.sub(&y.xi[k].mul(&x.u[k][j]));
            }
            acc
        })
        .collect();
    Ok(PglElement { v, u, xi })
}

/// Evaluates the fractional-linear action h.x = (a^i_j x^j)/(a_j x^j + 1).
pub fn h_action_map<F: Field>(h: &H2Element<F>, x: &[F]) -> Result<Vec<F>, EvalError> {
    let n = h.n;
    let mut denom = F::one();
    for j in 0..n {
        denom = denom.add(&h.a_low[j].mul(&x[j]));
    }
    (0..n)
        .map(|i| {
            let mut num = F::zero();
            for j in 0..n {
                num = num.add(&h.a_upper[i][j].mul(&x[j]));
            }
            num.div(&denom)
        })
        .collect()
}

/// First and second Taylor coefficients of h.x at the origin: the linear
/// part a^i_j and the symmetric quadratic coefficient
/// −½(a^i_j a_k + a^i_k a_j), i.e. half the h2_embed coordinate.
pub fn h_action_2jet<F: Field>(h: &H2Element<F>) -> (Matrix<F>, Vec<Vec<Vec<F>>>) {
    let n = h.n;
    let half = F::from_ratio(1, 2);
    let mut quadratic = vec![vec![vec![F::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                quadratic[i][j][k] = h.a_upper[i][j]
                    .mul(&h.a_low[k])
                    .add(&h.a_upper[i][k].mul(&h.a_low[j]))
                    .mul(&half)
                    .neg();
            }
        }
    }
    (h.a_upper.clone(), quadratic)
}

/// Action of h = (I, a) on a constant Christoffel grid:
/// Γ'^i_{jk} = Γ^i_{jk} + δ^i_j a_k + δ^i_k a_j.
pub fn section_action<F: Field>(
    gamma: &[Vec<Vec<F>>],
    h: &H2Element<F>,
) -> Result<Vec<Vec<Vec<F>>>, GeometryError> {
    let n = h.n;
    if h.a_upper != identity::<F>(n) {
        return Err(GeometryError::UpperNotIdentity);
    }
    let mut out = gamma.to_vec();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j {
                    out[i][j][k] = out[i][j][k].add(&h.a_low[k]);
                }
                if i == k {
                    out[i][j][k] = out[i][j][k].add(&h.a_low[j]);
                }
            }
        }
    }
    Ok(out)
}
