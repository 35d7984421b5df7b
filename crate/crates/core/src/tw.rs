//! Thomas-Whitehead connections on the bundle of volume elements:
//! the normal TW connection, matrix assembly, the horizontal gauge,
//! induced affine connections, curvature blocks with their projective
//! decomposition, the TW Ricci tensor and structural equivalence.
//!
//! The bundle E(M) is represented chartwise as (x^1..x^n, x^{n+1}); all
//! coefficient fields live on M, which encodes the R-invariance of the
//! connection. 2-form values are stored as full antisymmetric coefficient
//! grids c[k][l] with the form equal to sum_{k<l} c[k][l] dx^k wedge dx^l.

use crate::affine::{
    grid2, grid3, vanishes_on_samples, AffineConnection, Grid2, Grid3, OneForm,
};
use crate::error::{EvalError, GeometryError};
use crate::expr::Expression;
use crate::linalg::Matrix;
use crate::projective::normalize;
use crate::scalar::{Field, Mode};

/// A connection on the volume bundle, locally f_j dx^j + dx^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeConnection {
    pub n: usize,
    pub f: Vec<Expression>,
}

impl VolumeConnection {
    pub fn zero(n: usize) -> Self {
        VolumeConnection {
            n,
            f: vec![Expression::zero(); n],
        }
    }

    /// The shifted connection f + rho; two volume connections always differ
    /// by a one-form pulled back from the base.
    pub fn shift(&self, rho: &OneForm) -> Self {
        VolumeConnection {
            n: self.n,
            f: (0..self.n)
                .map(|j| Expression::add(self.f[j].clone(), rho.components[j].clone()))
                .collect(),
        }
    }
}

/// The (alpha, beta) block data of a TW connection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TWConnection {
    pub n: usize,
    /// alpha^i_{jk}, same index convention as a Christoffel grid.
    pub alpha: Grid3,
    /// beta_{jk}: the lower-left block, beta_j = beta_{jk} dx^k.
    pub beta: Grid2,
}

/// The value of the connection matrix on one tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TWMatrixValue<F> {
    pub n: usize,
    pub entries: Matrix<F>,
}

/// Curvature blocks of R(omega) = d omega + omega wedge omega, each an
/// antisymmetric coefficient grid over (k, l).
#[derive(Debug, Clone, PartialEq)]
pub struct TWCurvature<F> {
    pub n: usize,
    /// Upper-left block: d alpha + alpha^alpha - (1/(n+1)) dx^beta.
    pub r_upper: Vec<Vec<Matrix<F>>>,
    /// Upper-right block: -(1/(n+1)) alpha^dx, the torsion direction.
    pub torsion_upper: Vec<Matrix<F>>,
    /// Lower-left block: d beta + beta^alpha.
    pub r_lower: Vec<Matrix<F>>,
    /// Lower-right corner: -(1/(n+1)) beta^dx.
    pub corner: Matrix<F>,
}

/// The equivalence tensor of two structurally equivalent TW connections:
/// an (n+1)x(n+1) grid on the bundle chart together with the base one-form
/// bar such that the mixed components equal the pull-back of bar.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTensor {
    pub n: usize,
    /// Full (n+1)x(n+1) component grid beta_{AB}.
    pub entries: Grid2,
    pub bar: OneForm,
}

fn grids_mode<'a>(exprs: impl IntoIterator<Item = &'a Expression>) -> Mode {
    if exprs.into_iter().any(|e| e.requires_float()) {
        Mode::Float
    } else {
        Mode::Exact
    }
}

/// The normal TW connection of an affine connection: the unique Ricci-flat
/// TW connection compatible with the canonical density, together with the
/// volume connection f_j = (Gamma^a_{aj} + Gamma^a_{ja})/2. The blocks
/// coincide with the normal Cartan data: alpha = Pi^i_{jk} and
/// beta = -(n+1) Pi_{jk}.
pub fn normal_tw(
    c: &AffineConnection,
) -> Result<(TWConnection, VolumeConnection), GeometryError> {
    let n = c.n();
    let d = normalize(c)?;
    let alpha = d.pi_upper.clone();
    let beta = grid2(n, |j, k| d.pi_lower[j][k].scale(-(n as i64 + 1), 1));
    // f_j = -(n+1) nu_j, the halved sum of the two Christoffel traces.
    let f = (0..n)
        .map(|j| d.nu.components[j].scale(-(n as i64 + 1), 1))
        .collect();
    Ok((TWConnection { n, alpha, beta }, VolumeConnection { n, f }))
}

/// Evaluates the connection matrix on a tangent (dx, dx_last) at p:
/// (alpha 0; beta 0) - (1/(n+1)) (I_n dx^{n+1}, dx; 0, dx^{n+1}).
pub fn assemble_matrix<F: Field>(
    t: &TWConnection,
    p: &[F],
    dx: &[F],
    dx_last: &F,
) -> Result<TWMatrixValue<F>, EvalError> {
    let n = t.n;
    let scale = F::from_ratio(-1, n as i64 + 1);
    let mut entries = vec![vec![F::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            let mut acc = F::zero();
            for k in 0..n {
                acc = acc.add(&t.alpha[i][j][k].eval_value(p)?.mul(&dx[k]));
            }
            if i == j {
                acc = acc.add(&scale.mul(dx_last));
            }
            entries[i][j] = acc;
        }
        entries[i][n] = scale.mul(&dx[i]);
    }
    for j in 0..n {
        let mut acc = F::zero();
        for k in 0..n {
            acc = acc.add(&t.beta[j][k].eval_value(p)?.mul(&dx[k]));
        }
        entries[n][j] = acc;
    }
    entries[n][n] = scale.mul(dx_last);
    Ok(TWMatrixValue { n, entries })
}

/// The horizontal gauge with respect to a volume connection:
/// alphaH = alpha + (1/(n+1))(I_n f dx + dx f) and
/// betaH = -df + (1/(n+1)) f dx f + f alpha + beta.
pub fn horizontal_gauge(t: &TWConnection, v: &VolumeConnection) -> (Grid3, Grid2) {
    let n = t.n;
    let den = n as i64 + 1;
    let alpha_h = grid3(n, |i, j, k| {
        let mut e = t.alpha[i][j][k].clone();
        if i == j {
            e = Expression::add(e, v.f[k].scale(1, den));
        }
        if i == k {
            e = Expression::add(e, v.f[j].scale(1, den));
        }
        e
    });
    let beta_h = grid2(n, |j, k| {
        let mut e = Expression::sub(t.beta[j][k].clone(), v.f[j].partial(k));
        e = Expression::add(
            e,
            Expression::mul(v.f[j].clone(), v.f[k].clone()).scale(1, den),
        );
        for a in 0..n {
            e = Expression::add(
                e,
                Expression::mul(v.f[a].clone(), t.alpha[a][j][k].clone()),
            );
        }
        e
    });
    (alpha_h, beta_h)
}

/// Rebuilds the (alpha, beta) block data from horizontal-gauge components;
/// inverse of [`horizontal_gauge`] for the same volume connection.
pub fn from_horizontal(
    alpha_h: &Grid3,
    beta_h: &Grid2,
    v: &VolumeConnection,
) -> TWConnection {
    let n = v.n;
    let den = n as i64 + 1;
    let alpha = grid3(n, |i, j, k| {
        let mut e = alpha_h[i][j][k].clone();
        if i == j {
            e = Expression::sub(e, v.f[k].scale(1, den));
        }
        if i == k {
            e = Expression::sub(e, v.f[j].scale(1, den));
        }
        e
    });
    let beta = grid2(n, |j, k| {
        let mut e = Expression::add(beta_h[j][k].clone(), v.f[j].partial(k));
        e = Expression::sub(
            e,
            Expression::mul(v.f[j].clone(), v.f[k].clone()).scale(1, den),
        );
        for a in 0..n {
            e = Expression::sub(
                e,
                Expression::mul(v.f[a].clone(), alpha[a][j][k].clone()),
            );
        }
        e
    });
    TWConnection { n, alpha, beta }
}

/// The affine connection induced on the base through a volume connection;
/// its connection form with respect to the coordinate frame is alphaH.
pub fn induced_connection(
    t: &TWConnection,
    v: &VolumeConnection,
) -> Result<AffineConnection, GeometryError> {
    let (alpha_h, _) = horizontal_gauge(t, v);
    AffineConnection::new(t.n, alpha_h)
}

/// Evaluates the curvature blocks of R(omega) at a point.
pub fn tw_curvature<F: Field>(
    t: &TWConnection,
    p: &[F],
) -> Result<TWCurvature<F>, EvalError> {
    let n = t.n;
    let inv = F::from_ratio(-1, n as i64 + 1);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let mut plane = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                row.push(t.alpha[i][j][k].eval_jet2(p)?);
            }
            plane.push(row);
        }
        a.push(plane);
    }
    let mut b = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            row.push(t.beta[j][k].eval_jet2(p)?);
        }
        b.push(row);
    }

    let r_upper: Vec<Vec<Matrix<F>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (0..n)
                                .map(|l| {
                                    let mut acc = a[i][j][l].grad[k].sub(&a[i][j][k].grad[l]);
                                    for g in 0..n {
                                        acc = acc
                                            .add(&a[i][g][k].value.mul(&a[g][j][l].value));
                                        acc = acc
                                            .sub(&a[i][g][l].value.mul(&a[g][j][k].value));
                                    }
                                    // -(1/(n+1)) dx^i wedge beta_j
                                    if i == k {
                                        acc = acc.add(&inv.mul(&b[j][l].value));
                                    }
                                    if i == l {
                                        acc = acc.sub(&inv.mul(&b[j][k].value));
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

    let torsion_upper: Vec<Matrix<F>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            inv.mul(&a[i][l][k].value.sub(&a[i][k][l].value))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let r_lower: Vec<Matrix<F>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            let mut acc = b[j][l].grad[k].sub(&b[j][k].grad[l]);
                            for g in 0..n {
                                acc = acc.add(&b[g][k].value.mul(&a[g][j][l].value));
                                acc = acc.sub(&b[g][l].value.mul(&a[g][j][k].value));
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let corner: Matrix<F> = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| inv.mul(&b[l][k].value.sub(&b[k][l].value)))
                .collect()
        })
        .collect();

    Ok(TWCurvature {
        n,
        r_upper,
        torsion_upper,
        r_lower,
        corner,
    })
}

impl<F: Field> TWCurvature<F> {
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for v in self.r_upper.iter().flatten().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        for v in self.torsion_upper.iter().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        for v in self.r_lower.iter().flatten().flatten() {
            m = m.max(v.to_f64().abs());
        }
        for v in self.corner.iter().flatten() {
            m = m.max(v.to_f64().abs());
        }
        m
    }
}

/// Splits the curvature blocks into the components of the underlying
/// projective Cartan curvature: rho^i = -(1/(n+1)) alpha^dx,
/// rho^i_j = d alpha + alpha^alpha + dx^beta' - (beta'^dx) I_n with
/// beta' = -beta/(n+1), and rho_j = d beta + beta^alpha.
pub fn rho_decompose<F: Field>(
    r: &TWCurvature<F>,
) -> (Vec<Matrix<F>>, Vec<Vec<Matrix<F>>>, Vec<Matrix<F>>) {
    let n = r.n;
    let rho_i = r.torsion_upper.clone();
    // r_upper already contains dx^beta'; removing the corner trace term
    // from the diagonal yields the gl block.
    let rho_ij: Vec<Vec<Matrix<F>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (0..n)
                                .map(|l| {
                                    let mut v = r.r_upper[i][j][k][l].clone();
                                    if i == j {
                                        v = v.sub(&r.corner[k][l]);
                                    }
                                    v
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let rho_j = r.r_lower.clone();
    (rho_i, rho_ij, rho_j)
}

/// The TW Ricci tensor Ric_{jk} = rho^i_{jik}, expanded as
/// d alpha traces + alpha alpha traces - (1/(n+1))(n beta_{jk} - beta_{kj}).
pub fn tw_ricci<F: Field>(t: &TWConnection, p: &[F]) -> Result<Matrix<F>, EvalError> {
    let n = t.n;
    let inv = F::from_ratio(-1, n as i64 + 1);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let mut plane = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                row.push(t.alpha[i][j][k].eval_jet2(p)?);
            }
            plane.push(row);
        }
        a.push(plane);
    }
    let mut out = vec![vec![F::zero(); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut acc = F::zero();
            for i in 0..n {
                acc = acc.add(&a[i][j][k].grad[i]);
                acc = acc.sub(&a[i][j][i].grad[k]);
                for g in 0..n {
                    acc = acc.add(&a[i][g][i].value.mul(&a[g][j][k].value));
                    acc = acc.sub(&a[i][g][k].value.mul(&a[g][j][i].value));
                }
            }
            let bjk = t.beta[j][k].eval_value(p)?;
            let bkj = t.beta[k][j].eval_value(p)?;
            acc = acc.add(&inv.mul(&bjk.mul(&F::from_int(n as i64)).sub(&bkj)));
            out[j][k] = acc;
        }
    }
    Ok(out)
}

/// Recovers the unique equivalence tensor between two structurally
/// equivalent TW connections from their chartwise difference: the trace of
/// the alpha difference determines the base one-form bar, the beta
/// difference fills in the base block, and the mixed components are bar
/// itself. Returns None when the difference does not have the
/// bar-pattern shape on the sample set.
pub fn structural_equiv_beta(
    t1: &TWConnection,
    t2: &TWConnection,
) -> Result<Option<BetaTensor>, GeometryError> {
    if t1.n != t2.n {
        return Err(GeometryError::DimensionMismatch {
            left: t1.n,
            right: t2.n,
        });
    }
    let n = t1.n;
    let den = n as i64 + 1;
    let dalpha = grid3(n, |i, j, k| {
        Expression::sub(t2.alpha[i][j][k].clone(), t1.alpha[i][j][k].clone())
    });
    let bar = OneForm {
        n,
        components: (0..n)
            .map(|k| {
                let mut acc = Expression::zero();
                for j in 0..n {
                    acc = Expression::add(acc, dalpha[j][j][k].clone());
                }
                acc.scale(1, den)
            })
            .collect(),
    };
    // The alpha difference must be the delta-pattern of bar.
    let residuals: Vec<Expression> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
        .map(|(i, j, k)| {
            let mut e = dalpha[i][j][k].clone();
            if i == j {
                e = Expression::sub(e, bar.components[k].clone());
            }
            if i == k {
                e = Expression::sub(e, bar.components[j].clone());
            }
            e
        })
        .collect();
    let mode = grids_mode(
        t1.alpha
            .iter()
            .flatten()
            .flatten()
            .chain(t2.alpha.iter().flatten().flatten())
            .chain(t1.beta.iter().flatten())
            .chain(t2.beta.iter().flatten()),
    );
    if !vanishes_on_samples(residuals.iter(), n, mode)? {
        return Ok(None);
    }
    // The xi-component of the difference is -beta_{kj}, so the base block
    // is the negated transpose of the beta difference; the mixed slots
    // carry bar and the (xi, xi) slot vanishes.
    let entries = grid2(n + 1, |j, k| {
        if j < n && k < n {
            Expression::sub(t1.beta[k][j].clone(), t2.beta[k][j].clone())
        } else if j < n {
            bar.components[j].clone()
        } else if k < n {
            bar.components[k].clone()
        } else {
            Expression::zero()
        }
    });
    Ok(Some(BetaTensor { n, entries, bar }))
}

/// Forward application of the equivalence tensor: alpha gains the
/// delta-pattern of bar and beta_{jk} loses the transposed base block.
pub fn apply_structural_shift(t: &TWConnection, b: &BetaTensor) -> TWConnection {
    let n = t.n;
    let alpha = grid3(n, |i, j, k| {
        let mut e = t.alpha[i][j][k].clone();
        if i == j {
            e = Expression::add(e, b.bar.components[k].clone());
        }
        if i == k {
            e = Expression::add(e, b.bar.components[j].clone());
        }
        e
    });
    let beta = grid2(n, |j, k| {
        Expression::sub(t.beta[j][k].clone(), b.entries[k][j].clone())
    });
    TWConnection { n, alpha, beta }
}
