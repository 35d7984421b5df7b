//! Cartan projective connections in bundle coordinates: the Lemma 2.21
//! evaluation formulas, the Ricci-flat adjustment and Bianchi-type
//! diagnostics.

use crate::affine::{Grid2, Grid3};
use crate::error::{EvalError, GeometryError};
use crate::linalg::{mat_inverse, Matrix};
use crate::projective::CurvatureReport;
use crate::scalar::Field;

/// Pulled-back section data on a chart: ψ^i = Π^i_j dx^j,
/// ψ^i_j = Π^i_{jk} dx^k, ψ_j = Π_{jk} dx^k.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionData {
    pub n: usize,
    pub pi_frame: Grid2,
    pub pi_upper: Grid3,
    pub pi_lower: Grid2,
}

impl SectionData {
    /// The Prop 2.9 section: frame part is the identity.
    pub fn from_normal(d: &crate::projective::NormalProjectiveData) -> Self {
        use crate::expr::Expression;
        let n = d.n;
        SectionData {
            n,
            pi_frame: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { Expression::one() } else { Expression::zero() })
                        .collect()
                })
                .collect(),
            pi_upper: d.pi_upper.clone(),
            pi_lower: d.pi_lower.clone(),
        }
    }
}

/// A point (x, a^i_j, a_j) of the chart trivialization U × H².
#[derive(Debug, Clone, PartialEq)]
pub struct BundlePoint<F> {
    pub x: Vec<F>,
    pub a_upper: Matrix<F>,
    pub a_low: Vec<F>,
}

/// A tangent vector at a bundle point.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleTangent<F> {
    pub dx: Vec<F>,
    pub da_upper: Matrix<F>,
    pub da_low: Vec<F>,
}

impl<F: Field> BundleTangent<F> {
    pub fn zero(n: usize) -> Self {
        BundleTangent {
            dx: vec![F::zero(); n],
            da_upper: vec![vec![F::zero(); n]; n],
            da_low: vec![F::zero(); n],
        }
    }
}

/// The value ω = (ω^i, ω^i_j, ω_j) on a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanValue<F> {
    pub w_i: Vec<F>,
    pub w_ij: Matrix<F>,
    pub w_low: Vec<F>,
}

/// Evaluates the three Lemma 2.21 display lines at (p, t), with
/// b = a_upper^{-1}:
/// ω^i  = b^i_α Π^α_β dx^β,
/// ω^i_j = b^i_α da^α_j + b^i_α Π^α_{βγ} a^β_j dx^γ + b^i_α Π^α_β a_j dx^β
///        + δ^i_j a_α b^α_β Π^β_γ dx^γ,
/// ω_j  = da_j − a_α b^α_β da^β_j − a_α b^α_β Π^β_{γδ} a^γ_j dx^δ
///        + Π_{αβ} a^α_j dx^β − a_α b^α_β Π^β_γ a_j dx^γ.
pub fn eval_cartan<F: Field>(
    s: &SectionData,
    p: &BundlePoint<F>,
    t: &BundleTangent<F>,
) -> Result<CartanValue<F>, GeometryError> {
    let n = s.n;
    let b = mat_inverse(&p.a_upper)?;
    let frame: Matrix<F> = s
        .pi_frame
        .iter()
        .map(|row| row.iter().map(|e| e.eval_value(&p.x)).collect())
        .collect::<Result<_, EvalError>>()?;
    let upper: Vec<Vec<Vec<F>>> = s
        .pi_upper
        .iter()
        .map(|pl| {
            pl.iter()
                .map(|row| row.iter().map(|e| e.eval_value(&p.x)).collect())
                .collect()
        })
        .collect::<Result<_, EvalError>>()?;
    let lower: Matrix<F> = s
        .pi_lower
        .iter()
        .map(|row| row.iter().map(|e| e.eval_value(&p.x)).collect())
        .collect::<Result<_, EvalError>>()?;

    // ψ^α(dx) = Π^α_β dx^β.
    let psi: Vec<F> = (0..n)
        .map(|al| {
            let mut acc = F::zero();
            for be in 0..n {
                acc = acc.add(&frame[al][be].mul(&t.dx[be]));
            }
            acc
        })
        .collect();
    // ψ^α_β(dx) = Π^α_{βγ} dx^γ.
    let psi_matrix: Matrix<F> = (0..n)
        .map(|al| {
            (0..n)
                .map(|be| {
                    let mut acc = F::zero();
                    for ga in 0..n {
                        acc = acc.add(&upper[al][be][ga].mul(&t.dx[ga]));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // ψ_α(dx) = Π_{αβ} dx^β.
    let psi_low: Vec<F> = (0..n)
        .map(|al| {
            let mut acc = F::zero();
            for be in 0..n {
                acc = acc.add(&lower[al][be].mul(&t.dx[be]));
            }
            acc
        })
        .collect();

    let w_i: Vec<F> = (0..n)
        .map(|i| {
            let mut acc = F::zero();
            for al in 0..n {
                acc = acc.add(&b[i][al].mul(&psi[al]));
            }
            acc
        })
        .collect();

    // a_α b^α_β, reused by the ω^i_j and ω_j lines.
    let ab: Vec<F> = (0..n)
        .map(|be| {
            let mut acc = F::zero();
            for al in 0..n {
                acc = acc.add(&p.a_low[al].mul(&b[al][be]));
            }
            acc
        })
        .collect();
    let ab_psi = {
        let mut acc = F::zero();
        for be in 0..n {
            acc = acc.add(&ab[be].mul(&psi[be]));
        }
        acc
    };

    let w_ij: Matrix<F> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = F::zero();
                    for al in 0..n {
                        acc = acc.add(&b[i][al].mul(&t.da_upper[al][j]));
                        for be in 0..n {
                            acc = acc
                                .add(&b[i][al].mul(&psi_matrix[al][be]).mul(&p.a_upper[be][j]));
                        }
                        acc = acc.add(&b[i][al].mul(&psi[al]).mul(&p.a_low[j]));
                    }
                    if i == j {
                        acc = acc.add(&ab_psi);
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let w_low: Vec<F> = (0..n)
        .map(|j| {
            let mut acc = t.da_low[j].clone();
            for be in 0..n {
                acc = acc.sub(&ab[be].mul(&t.da_upper[be][j]));
                for ga in 0..n {
                    acc = acc.sub(&ab[be].mul(&psi_matrix[be][ga]).mul(&p.a_upper[ga][j]));
                }
            }
            for al in 0..n {
                acc = acc.add(&psi_low[al].mul(&p.a_upper[al][j]));
            }
            acc = acc.sub(&ab_psi.mul(&p.a_low[j]));
            acc
        })
        .collect();

    Ok(CartanValue { w_i, w_ij, w_low })
}

/// Eq 4.5-b: A_{jk} = −(1/(n²−1))(n·K'^i_{jik} + K'^i_{kij}) from the Ricci
/// traces of a (possibly non-normal) curvature grid k'^i_{jkl}.
pub fn ricci_adjust<F: Field>(k_curv: &[Vec<Vec<Vec<F>>>]) -> Result<Matrix<F>, GeometryError> {
    let n = k_curv.len();
    if n < 2 {
        return Err(GeometryError::DimensionTooSmall(n));
    }
    // trace[j][k] = Σ_i k'^i_{jik}.
    let trace: Matrix<F> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let mut acc = F::zero();
                    for i in 0..n {
                        acc = acc.add(&k_curv[i][j][i][k]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let denom = F::from_int((n * n - 1) as i64);
    let mut a = vec![vec![F::zero(); n]; n];
    for j in 0..n {
        for k in 0..n {
            let v = F::from_int(n as i64)
                .mul(&trace[j][k])
                .add(&trace[k][j])
                .neg()
                .div(&denom)
                .map_err(GeometryError::Eval)?;
            a[j][k] = v;
        }
    }
    Ok(a)
}

/// Outcome of one Prop 4.7 implication on pointwise data.
#[derive(Debug, Clone, PartialEq)]
pub struct BianchiItem {
    pub name: &'static str,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    pub max_residual: f64,
}

/// Prop 4.7 diagnostics at a point. Each implication is checked with the
/// hypotheses that are visible in the report: the first-structure-equation
/// hypothesis of items 1 and 2 is equivalent (by the identity
/// dΩ^i + ω^i_j∧Ω^j = Ω^i_j∧ω^j) to the cyclic sum of k vanishing.
pub fn bianchi_check<F: Field>(r: &CurvatureReport<F>, tol: f64) -> Vec<BianchiItem> {
    let n = r.k_torsion.len();
    let mut cyclic_k_res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let s = r.k_curv[i][j][k][l]
                        .add(&r.k_curv[i][k][l][j])
                        .add(&r.k_curv[i][l][j][k]);
                    cyclic_k_res = cyclic_k_res.max(s.to_f64().abs());
                }
            }
        }
    }
    let cyclic_k_zero = cyclic_k_res <= tol;

    let mut ricci_res: f64 = 0.0;
    let mut trace_first_res: f64 = 0.0;
    for j in 0..n {
        for l in 0..n {
            let mut ricci = F::zero();
            let mut tr = F::zero();
            for i in 0..n {
                ricci = ricci.add(&r.k_curv[i][j][i][l]);
                tr = tr.add(&r.k_curv[i][i][j][l]);
            }
            ricci_res = ricci_res.max(ricci.to_f64().abs());
            trace_first_res = trace_first_res.max(tr.to_f64().abs());
        }
    }

    let torsion_zero = r
        .k_torsion
        .iter()
        .flatten()
        .flatten()
        .all(|v| v.is_zero_within(tol));
    let k_zero = r
        .k_curv
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .all(|v| v.is_zero_within(tol));

    let mut cyclic_low_res: f64 = 0.0;
    let mut low_res: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let s = r.omega_lower[j][k][l]
                    .add(&r.omega_lower[k][l][j])
                    .add(&r.omega_lower[l][j][k]);
                cyclic_low_res = cyclic_low_res.max(s.to_f64().abs());
                low_res = low_res.max(r.omega_lower[j][k][l].to_f64().abs());
            }
        }
    }

    vec![
        BianchiItem {
            name: "cyclic_k",
            hypothesis_holds: cyclic_k_zero,
            conclusion_holds: cyclic_k_zero,
            max_residual: cyclic_k_res,
        },
        BianchiItem {
            name: "trace_free_k",
            hypothesis_holds: cyclic_k_zero && ricci_res <= tol,
            conclusion_holds: trace_first_res <= tol,
            max_residual: trace_first_res,
        },
        BianchiItem {
            name: "cyclic_K_lower",
            hypothesis_holds: torsion_zero && trace_first_res <= tol,
            conclusion_holds: cyclic_low_res <= tol,
            max_residual: cyclic_low_res,
        },
        BianchiItem {
            name: "vanishing_Omega_lower",
            hypothesis_holds: torsion_zero && k_zero,
            conclusion_holds: low_res <= tol,
            max_residual: low_res,
        },
    ]
}
