//! Affine connections on a single chart: torsion, projective shifts,
//! geodesics and equivalence recovery.
//!
//! Index convention: `gamma[i][j][k]` stores Γ^i_{jk} = dx^i(∇_{∂/∂x^k} ∂/∂x^j),
//! i.e. the *reversed* lower-index order (the derivative direction is the
//! second lower index). The torsion sign below is anchored to this choice.

use serde_json::{json, Value};

use crate::error::{EvalError, GeometryError, ParseError};
use crate::expr::{parse_expression, Expression};
use crate::sample::{default_sample_points, Sampler};
use crate::scalar::{Field, Mode};

/// Tolerance for float-mode zero tests in verdict operations.
pub const FLOAT_TOL: f64 = 1e-9;

/// Seed for the deterministic sample stream used by equivalence checks.
pub const CHECK_SEED: u64 = 0x5eed;

pub type Grid3 = Vec<Vec<Vec<Expression>>>;
pub type Grid2 = Vec<Vec<Expression>>;

/// An affine connection on a chart of R^n, n >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConnection {
    n: usize,
    mode: Mode,
    /// `gamma[i][j][k]` = Γ^i_{jk} (see module docs for the convention).
    gamma: Grid3,
}

/// The torsion tensor T^i_{jk}, antisymmetric in (j, k).
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionTensor {
    pub n: usize,
    pub t: Grid3,
}

/// A one-form with expression components.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub n: usize,
    pub components: Vec<Expression>,
}

impl OneForm {
    pub fn zero(n: usize) -> Self {
        OneForm {
            n,
            components: vec![Expression::zero(); n],
        }
    }

    pub fn constant(values: &[i64]) -> Self {
        OneForm {
            n: values.len(),
            components: values.iter().map(|&v| Expression::int(v)).collect(),
        }
    }

    pub fn eval<F: Field>(&self, p: &[F]) -> Result<Vec<F>, EvalError> {
        self.components.iter().map(|e| e.eval_value(p)).collect()
    }
}

pub fn grid3<Fn: FnMut(usize, usize, usize) -> Expression>(n: usize, mut f: Fn) -> Grid3 {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| f(i, j, k)).collect())
                .collect()
        })
        .collect()
}

pub fn grid2<Fn: FnMut(usize, usize) -> Expression>(n: usize, mut f: Fn) -> Grid2 {
    (0..n)
        .map(|j| (0..n).map(|k| f(j, k)).collect())
        .collect()
}

fn grid3_mode(gamma: &Grid3) -> Mode {
    let float = gamma
        .iter()
        .flatten()
        .flatten()
        .any(Expression::requires_float);
    if float {
        Mode::Float
    } else {
        Mode::Exact
    }
}

impl AffineConnection {
    pub fn new(n: usize, gamma: Grid3) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let shape_ok = gamma.len() == n
            && gamma
                .iter()
                .all(|p| p.len() == n && p.iter().all(|r| r.len() == n));
        if !shape_ok {
            return Err(GeometryError::DimensionMismatch {
                left: n,
                right: gamma.len(),
            });
        }
        let mode = grid3_mode(&gamma);
        Ok(AffineConnection { n, mode, gamma })
    }

    pub fn zero(n: usize) -> Self {
        AffineConnection {
            n,
            mode: Mode::Exact,
            gamma: grid3(n, |_, _, _| Expression::zero()),
        }
    }

    /// Constant-coefficient connection from exact ratios `values[i][j][k] = (num, den)`.
    pub fn from_ratios(values: &[Vec<Vec<(i64, i64)>>]) -> Result<Self, GeometryError> {
        let n = values.len();
        let gamma = grid3(n, |i, j, k| {
            let (num, den) = values[i][j][k];
            Expression::ratio(num, den)
        });
        Self::new(n, gamma)
    }

    /// A random constant rational connection, for property tests.
    pub fn random_constant(sampler: &mut Sampler, n: usize) -> Self {
        let gamma = grid3(n, |_, _, _| Expression::constant(sampler.coeff_rational()));
        AffineConnection {
            n,
            mode: Mode::Exact,
            gamma,
        }
    }

    /// A random connection with polynomial coefficients of degree <= `degree`
    /// in the chart coordinates.
    pub fn random_polynomial(sampler: &mut Sampler, n: usize, degree: u32) -> Self {
        let gamma = grid3(n, |_, _, _| {
            let mut acc = Expression::constant(sampler.coeff_rational());
            for d in 1..=degree {
                for axis in 0..n {
                    let coeff = Expression::constant(sampler.coeff_rational());
                    let term =
                        Expression::mul(coeff, Expression::powi(Expression::coord(axis), d as i32));
                    acc = Expression::add(acc, term);
                }
            }
            acc
        });
        AffineConnection {
            n,
            mode: Mode::Exact,
            gamma,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn gamma(&self) -> &Grid3 {
        &self.gamma
    }

    pub fn entry(&self, i: usize, j: usize, k: usize) -> &Expression {
        &self.gamma[i][j][k]
    }

    /// Evaluates the whole Christoffel grid at a point.
    pub fn eval_gamma<F: Field>(&self, p: &[F]) -> Result<Vec<Vec<Vec<F>>>, EvalError> {
        self.gamma
            .iter()
            .map(|plane| {
                plane
                    .iter()
                    .map(|row| row.iter().map(|e| e.eval_value(p)).collect())
                    .collect()
            })
            .collect()
    }

    // -- JSON document interface -------------------------------------------

    /// Reads the `{ "n": .., "mode": .., "gamma": { "i,j,k": "<expr>" } }`
    /// document. Every one of the n^3 entries must be present.
    pub fn from_json(doc: &Value) -> Result<Self, GeometryError> {
        let n = doc
            .get("n")
            .and_then(Value::as_u64)
            .ok_or(GeometryError::MissingEntry("n".to_string()))? as usize;
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let mode = match doc.get("mode").and_then(Value::as_str) {
            Some("exact") => Mode::Exact,
            Some("float") => Mode::Float,
            _ => return Err(GeometryError::MissingEntry("mode".to_string())),
        };
        let map = doc
            .get("gamma")
            .and_then(Value::as_object)
            .ok_or(GeometryError::MissingEntry("gamma".to_string()))?;
        let mut gamma = vec![vec![vec![None; n]; n]; n];
        for i in 1..=n {
            for j in 1..=n {
                for k in 1..=n {
                    let key = format!("{i},{j},{k}");
                    let src = map
                        .get(&key)
                        .and_then(Value::as_str)
                        .ok_or_else(|| GeometryError::MissingEntry(key.clone()))?;
                    let expr = parse_expression(src, n).map_err(|e| entry_parse_error(&key, e))?;
                    gamma[i - 1][j - 1][k - 1] = Some(expr);
                }
            }
        }
        let gamma: Grid3 = gamma
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|r| r.into_iter().map(Option::unwrap).collect())
                    .collect()
            })
            .collect();
        let conn = Self::new(n, gamma)?;
        if mode == Mode::Exact && conn.mode == Mode::Float {
            return Err(GeometryError::ExactModeUnavailable);
        }
        Ok(AffineConnection { mode, ..conn })
    }

    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    map.insert(
                        format!("{},{},{}", i + 1, j + 1, k + 1),
                        Value::String(self.gamma[i][j][k].to_string()),
                    );
                }
            }
        }
        json!({
            "n": self.n,
            "mode": match self.mode { Mode::Exact => "exact", Mode::Float => "float" },
            "gamma": Value::Object(map),
        })
    }
}

fn entry_parse_error(key: &str, e: ParseError) -> GeometryError {
    GeometryError::MissingEntry(format!("{key}: {e}"))
}

/// T^i_{jk} = Γ^i_{kj} − Γ^i_{jk}; with the reversed lower-index convention
/// this gives T(∂_j, ∂_k) = ∇_{∂_j}∂_k − ∇_{∂_k}∂_j its i-component.
pub fn torsion(c: &AffineConnection) -> TorsionTensor {
    let n = c.n;
    TorsionTensor {
        n,
        t: grid3(n, |i, j, k| {
            Expression::sub(c.gamma[i][k][j].clone(), c.gamma[i][j][k].clone())
        }),
    }
}

/// Γ'^i_{jk} = Γ^i_{jk} + δ^i_j ρ_k + δ^i_k ρ_j.
pub fn projective_shift(c: &AffineConnection, rho: &OneForm) -> AffineConnection {
    let n = c.n;
    let gamma = grid3(n, |i, j, k| {
        let mut e = c.gamma[i][j][k].clone();
        if i == j {
            e = Expression::add(e, rho.components[k].clone());
        }
        if i == k {
            e = Expression::add(e, rho.components[j].clone());
        }
        e
    });
    let mode = grid3_mode(&gamma);
    AffineConnection { n, mode, gamma }
}

/// Checks that a grid of expressions vanishes on the deterministic sample
/// set: exactly in exact mode, within [`FLOAT_TOL`] in float mode.
pub fn vanishes_on_samples<'a>(
    exprs: impl IntoIterator<Item = &'a Expression> + Clone,
    n: usize,
    mode: Mode,
) -> Result<bool, EvalError> {
    match mode {
        Mode::Exact => {
            let points = default_sample_points::<num_rational::BigRational>(CHECK_SEED, n);
            for p in &points {
                for e in exprs.clone() {
                    if !e.eval_value(p)?.is_zero() {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        Mode::Float => {
            let points = default_sample_points::<f64>(CHECK_SEED, n);
            for p in &points {
                for e in exprs.clone() {
                    if !e.eval_value(p)?.is_zero_within(FLOAT_TOL) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

fn joint_mode(a: &AffineConnection, b: &AffineConnection) -> Mode {
    if a.mode == Mode::Float || b.mode == Mode::Float {
        Mode::Float
    } else {
        Mode::Exact
    }
}

/// Recovers the one-form ρ with b = projective_shift(a, ρ), if any:
/// ρ_j = (Γ'^j_{jj} − Γ^j_{jj})/2, then the residual of b − a minus the
/// δ-pattern of ρ is checked on the sample set.
pub fn recover_rho(
    a: &AffineConnection,
    b: &AffineConnection,
) -> Result<Option<OneForm>, GeometryError> {
    if a.n != b.n {
        return Err(GeometryError::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let n = a.n;
    let rho = OneForm {
        n,
        components: (0..n)
            .map(|j| {
                Expression::sub(b.gamma[j][j][j].clone(), a.gamma[j][j][j].clone()).scale(1, 2)
            })
            .collect(),
    };
    let shifted = projective_shift(a, &rho);
    let residuals: Vec<Expression> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
        .map(|(i, j, k)| Expression::sub(b.gamma[i][j][k].clone(), shifted.gamma[i][j][k].clone()))
        .collect();
    if vanishes_on_samples(residuals.iter(), n, joint_mode(a, b))? {
        Ok(Some(rho))
    } else {
        Ok(None)
    }
}

/// The torsion-free connection with the same unparameterized geodesics and
/// parametrizations: Γ̄^i_{jk} = (Γ^i_{jk} + Γ^i_{kj})/2.
pub fn torsion_free_companion(c: &AffineConnection) -> AffineConnection {
    let n = c.n;
    let gamma = grid3(n, |i, j, k| {
        Expression::add(c.gamma[i][j][k].clone(), c.gamma[i][k][j].clone()).scale(1, 2)
    });
    let mode = grid3_mode(&gamma);
    AffineConnection { n, mode, gamma }
}

/// One classical 4th-order explicit step of x''^i + Γ^i_{jk} x'^j x'^k = 0.
pub fn geodesic_step(
    c: &AffineConnection,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let n = c.n;
    let accel = |x: &[f64], v: &[f64]| -> Result<Vec<f64>, EvalError> {
        let g = c.eval_gamma::<f64>(x)?;
        Ok((0..n)
            .map(|i| {
                let mut a = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        a -= g[i][j][k] * v[j] * v[k];
                    }
                }
                a
            })
            .collect())
    };
    let stage = |x: &[f64], v: &[f64], kx: &[f64], kv: &[f64], s: f64| {
        let xs: Vec<f64> = x.iter().zip(kx).map(|(a, b)| a + s * b).collect();
        let vs: Vec<f64> = v.iter().zip(kv).map(|(a, b)| a + s * b).collect();
        (xs, vs)
    };
    let k1x = v.to_vec();
    let k1v = accel(x, v)?;
    let (x2, v2) = stage(x, v, &k1x, &k1v, h / 2.0);
    let k2x = v2.clone();
    let k2v = accel(&x2, &v2)?;
    let (x3, v3) = stage(x, v, &k2x, &k2v, h / 2.0);
    let k3x = v3.clone();
    let k3v = accel(&x3, &v3)?;
    let (x4, v4) = stage(x, v, &k3x, &k3v, h);
    let k4x = v4.clone();
    let k4v = accel(&x4, &v4)?;
    let combine = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| {
        y.iter()
            .enumerate()
            .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect::<Vec<f64>>()
    };
    Ok((combine(x, &k1x, &k2x, &k3x, &k4x), combine(v, &k1v, &k2v, &k3v, &k4v)))
}

/// Decomposes b − a as δ-pattern(φ) + antisymmetric part, when possible.
/// Returns `None` when the symmetric residual after removing the δ-pattern
/// is nonzero at sampled points.
pub fn same_unparameterized_geodesics(
    a: &AffineConnection,
    b: &AffineConnection,
) -> Result<Option<(OneForm, TorsionTensor)>, GeometryError> {
    if a.n != b.n {
        return Err(GeometryError::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let n = a.n;
    let d = grid3(n, |i, j, k| {
        Expression::sub(b.gamma[i][j][k].clone(), a.gamma[i][j][k].clone())
    });
    let antisym = grid3(n, |i, j, k| {
        Expression::sub(d[i][j][k].clone(), d[i][k][j].clone()).scale(1, 2)
    });
    let sym = grid3(n, |i, j, k| {
        Expression::add(d[i][j][k].clone(), d[i][k][j].clone()).scale(1, 2)
    });
    // φ_k = (sym D)^α_{αk}/(n+1).
    let phi = OneForm {
        n,
        components: (0..n)
            .map(|k| {
                let mut tr = Expression::zero();
                for alpha in 0..n {
                    tr = Expression::add(tr, sym[alpha][alpha][k].clone());
                }
                tr.scale(1, (n + 1) as i64)
            })
            .collect(),
    };
    let residuals: Vec<Expression> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
        .map(|(i, j, k)| {
            let mut pat = Expression::zero();
            if i == j {
                pat = Expression::add(pat, phi.components[k].clone());
            }
            if i == k {
                pat = Expression::add(pat, phi.components[j].clone());
            }
            Expression::sub(sym[i][j][k].clone(), pat)
        })
        .collect();
    if vanishes_on_samples(residuals.iter(), n, joint_mode(a, b))? {
        Ok(Some((phi, TorsionTensor { n, t: antisym })))
    } else {
        Ok(None)
    }
}

/// The Γ grid of Example 6.1 (n = 2): the worked connection with torsion.
pub fn example61() -> AffineConnection {
    AffineConnection::from_ratios(&[
        vec![
            vec![(1, 1), (-1, 2)],
            vec![(-1, 2), (0, 1)],
        ],
        vec![
            vec![(1, 1), (3, 2)],
            vec![(-1, 2), (-1, 1)],
        ],
    ])
    .unwrap()
}
