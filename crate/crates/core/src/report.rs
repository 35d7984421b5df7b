//! Report documents for the command-line front end: JSON structures for
//! the normalization and TW pipelines and the CSV emitted by the variety
//! scanner. Maps are ordered and numbers are printed through `Display`,
//! so reports are byte-deterministic for fixed inputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fmt::Write as _;

use serde::Serialize;

use crate::affine::AffineConnection;
use crate::error::{EvalError, GeometryError};
use crate::projective::{curvature, is_flat, NormalProjectiveData};
use crate::scalar::Field;
use crate::torus::VarietySample;
use crate::tw::{tw_curvature, tw_ricci, TWConnection, VolumeConnection};

fn fmt_value<F: Field + Display>(v: &F) -> String {
    format!("{v}")
}

/// Output of the `normalize`, `curvature` and `flat` pipelines.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizeReport {
    pub mu: Vec<String>,
    pub nu: Vec<String>,
    pub pi_upper: BTreeMap<String, String>,
    pub pi_lower: BTreeMap<String, String>,
    pub curvature_at: Vec<CurvatureAt>,
    pub flat: bool,
}

/// Curvature blocks at one sample point, keyed by 1-based indices.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAt {
    pub point: Vec<String>,
    #[serde(rename = "K")]
    pub k_torsion: BTreeMap<String, String>,
    #[serde(rename = "k")]
    pub k_curv: BTreeMap<String, String>,
    #[serde(rename = "K_lower")]
    pub k_lower: BTreeMap<String, String>,
}

pub fn normalize_report<F: Field + Display>(
    d: &NormalProjectiveData,
    points: &[Vec<F>],
) -> Result<NormalizeReport, EvalError> {
    let n = d.n;
    let mut pi_upper = BTreeMap::new();
    let mut pi_lower = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                pi_upper.insert(
                    format!("{},{},{}", i + 1, j + 1, k + 1),
                    d.pi_upper[i][j][k].to_string(),
                );
            }
            pi_lower.insert(format!("{},{}", i + 1, j + 1), d.pi_lower[i][j].to_string());
        }
    }
    let mut curvature_at = Vec::with_capacity(points.len());
    for p in points {
        let r = curvature(d, p)?;
        let mut k_torsion = BTreeMap::new();
        let mut k_curv = BTreeMap::new();
        let mut k_lower = BTreeMap::new();
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    k_torsion.insert(
                        format!("{},{},{}", i + 1, k + 1, l + 1),
                        fmt_value(&r.k_torsion[i][k][l]),
                    );
                    k_lower.insert(
                        format!("{},{},{}", i + 1, k + 1, l + 1),
                        fmt_value(&r.omega_lower[i][k][l]),
                    );
                    for j in 0..n {
                        k_curv.insert(
                            format!("{},{},{},{}", i + 1, j + 1, k + 1, l + 1),
                            fmt_value(&r.k_curv[i][j][k][l]),
                        );
                    }
                }
            }
        }
        curvature_at.push(CurvatureAt {
            point: p.iter().map(fmt_value).collect(),
            k_torsion,
            k_curv,
            k_lower,
        });
    }
    Ok(NormalizeReport {
        mu: d.mu.components.iter().map(|e| e.to_string()).collect(),
        nu: d.nu.components.iter().map(|e| e.to_string()).collect(),
        pi_upper,
        pi_lower,
        curvature_at,
        flat: is_flat(d, points)?,
    })
}

/// Output of the `tw` pipeline, mirroring the connection matrix blocks.
#[derive(Debug, Clone, Serialize)]
pub struct TwReport {
    pub alpha: BTreeMap<String, String>,
    pub beta: BTreeMap<String, String>,
    pub f: Vec<String>,
    pub curvature_at: Vec<TwCurvatureAt>,
    pub ricci_at: Vec<TwRicciAt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwCurvatureAt {
    pub point: Vec<String>,
    pub r_upper: BTreeMap<String, String>,
    pub torsion: BTreeMap<String, String>,
    pub r_lower: BTreeMap<String, String>,
    pub corner: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwRicciAt {
    pub point: Vec<String>,
    pub ricci: BTreeMap<String, String>,
}

pub fn tw_report<F: Field + Display>(
    t: &TWConnection,
    v: &VolumeConnection,
    points: &[Vec<F>],
) -> Result<TwReport, EvalError> {
    let n = t.n;
    let mut alpha = BTreeMap::new();
    let mut beta = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                alpha.insert(
                    format!("{},{},{}", i + 1, j + 1, k + 1),
                    t.alpha[i][j][k].to_string(),
                );
            }
            beta.insert(format!("{},{}", i + 1, j + 1), t.beta[i][j].to_string());
        }
    }
    let mut curvature_at = Vec::with_capacity(points.len());
    let mut ricci_at = Vec::with_capacity(points.len());
    for p in points {
        let r = tw_curvature(t, p)?;
        let mut r_upper = BTreeMap::new();
        let mut torsion = BTreeMap::new();
        let mut r_lower = BTreeMap::new();
        let mut corner = BTreeMap::new();
        for k in 0..n {
            for l in 0..n {
                corner.insert(format!("{},{}", k + 1, l + 1), fmt_value(&r.corner[k][l]));
                for i in 0..n {
                    torsion.insert(
                        format!("{},{},{}", i + 1, k + 1, l + 1),
                        fmt_value(&r.torsion_upper[i][k][l]),
                    );
                    r_lower.insert(
                        format!("{},{},{}", i + 1, k + 1, l + 1),
                        fmt_value(&r.r_lower[i][k][l]),
                    );
                    for j in 0..n {
                        r_upper.insert(
                            format!("{},{},{},{}", i + 1, j + 1, k + 1, l + 1),
                            fmt_value(&r.r_upper[i][j][k][l]),
                        );
                    }
                }
            }
        }
        curvature_at.push(TwCurvatureAt {
            point: p.iter().map(fmt_value).collect(),
            r_upper,
            torsion,
            r_lower,
            corner,
        });
        let ric = tw_ricci(t, p)?;
        let mut ricci = BTreeMap::new();
        for j in 0..n {
            for k in 0..n {
                ricci.insert(format!("{},{}", j + 1, k + 1), fmt_value(&ric[j][k]));
            }
        }
        ricci_at.push(TwRicciAt {
            point: p.iter().map(fmt_value).collect(),
            ricci,
        });
    }
    Ok(TwReport {
        alpha,
        beta,
        f: v.f.iter().map(|e| e.to_string()).collect(),
        curvature_at,
        ricci_at,
    })
}

/// CSV document for `torus scan`.
pub fn torus_scan_csv(samples: &[VarietySample]) -> String {
    let mut out = String::from("tau1,tau2,tau3,tau4,tau5,tau6,F,G,residual,rank,has_torsion\n");
    for s in samples {
        let (f, g) = crate::torus::f_g(&s.tau);
        for c in &s.tau.components {
            let _ = write!(out, "{c:?},");
        }
        let _ = writeln!(
            out,
            "{f:?},{g:?},{:?},{},{}",
            s.residual, s.rank, s.has_torsion
        );
    }
    out
}

/// One entry of the `torus verify` report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyItem {
    pub name: String,
    pub pass: bool,
    pub max_residual: f64,
}

/// Pass/fail report for the worked torus examples: the fixed example
/// structure, the three-parameter family and the trigonometric family.
pub fn torus_verify() -> Result<Vec<VerifyItem>, GeometryError> {
    use crate::torus::{complete_tau, f_g, family63, family64, Branch64, Tau};
    use num_rational::BigRational;
    let mut items = Vec::new();

    let tau61 = Tau::<BigRational> {
        components: [
            BigRational::from_int(0),
            BigRational::from_int(0),
            BigRational::from_int(0),
            BigRational::from_int(1),
            BigRational::from_int(1),
            BigRational::from_int(-1),
        ],
    };
    let ct = complete_tau(&tau61);
    let (f, g) = f_g(&tau61);
    let pass = f.is_zero()
        && g.is_zero()
        && ct.pi_lower[0][0] == BigRational::from_int(-1)
        && ct.pi_lower[0][1].is_zero()
        && ct.pi_lower[1][1].is_zero()
        && crate::torus::has_torsion(&tau61);
    items.push(VerifyItem {
        name: "example_6_1".into(),
        pass,
        max_residual: f.to_f64().abs().max(g.to_f64().abs()),
    });

    let mut sampler = crate::sample::Sampler::new(63);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..20 {
        let ct = family63(
            sampler.coeff_rational(),
            sampler.coeff_rational(),
            sampler.coeff_rational(),
        );
        let (f, g) = f_g(&ct.tau);
        ok &= f.is_zero() && g.is_zero();
        worst = worst.max(f.to_f64().abs()).max(g.to_f64().abs());
    }
    items.push(VerifyItem {
        name: "example_6_3_family".into(),
        pass: ok,
        max_residual: worst,
    });

    let mut worst: f64 = 0.0;
    let mut ok = true;
    for theta in [
        std::f64::consts::PI / 6.0,
        std::f64::consts::FRAC_PI_4,
        std::f64::consts::PI / 3.0,
    ] {
        for branch in [Branch64::BothZero, Branch64::Reciprocal] {
            let ct = family64(theta, branch)?;
            let (f, g) = f_g(&ct.tau);
            ok &= f.abs() <= 1e-12 && g.abs() <= 1e-12;
            worst = worst.max(f.abs()).max(g.abs());
        }
    }
    items.push(VerifyItem {
        name: "example_6_4_branches".into(),
        pass: ok,
        max_residual: worst,
    });
    Ok(items)
}

/// The Hlavaty coefficient grid as a keyed map.
pub fn hlavaty_report(c: &AffineConnection) -> Result<BTreeMap<String, String>, GeometryError> {
    let phi = crate::projective::hlavaty(c)?;
    let n = c.n();
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.insert(
                    format!("{},{},{}", i + 1, j + 1, k + 1),
                    phi[i][j][k].to_string(),
                );
            }
        }
    }
    Ok(out)
}
