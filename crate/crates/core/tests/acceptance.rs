//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`) and asserting its runtime
//! budget where one is stated.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;

use projtor_core::affine::{
    example61, grid2, projective_shift, recover_rho, torsion_free_companion,
    AffineConnection, OneForm, CHECK_SEED,
};
use projtor_core::expr::Expression;
use projtor_core::jet_groups::{
    g2_inverse, g2_mul, h2_embed, h2_extract, h_action_2jet, pgl_bracket, G2Element, H2Element,
    PglElement,
};
use projtor_core::linalg::{mat_inverse, Matrix};
use projtor_core::projective::{curvature, normalize, transform, transform_residual};
use projtor_core::sample::{default_sample_points, Sampler};
use projtor_core::scalar::Field;
use projtor_core::torus::{
    complete_tau, family63, family64, f_g, gammas_from_tau, jacobian, solve_variety, Branch64,
    Tau,
};
use projtor_core::tw::{
    apply_structural_shift, assemble_matrix, from_horizontal, induced_connection, normal_tw,
    structural_equiv_beta, tw_curvature, tw_ricci, BetaTensor, VolumeConnection,
};

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn eval3(g: &[Vec<Vec<Expression>>], p: &[BigRational]) -> Vec<Vec<Vec<BigRational>>> {
    g.iter()
        .map(|pl| {
            pl.iter()
                .map(|row| row.iter().map(|e| e.eval_value(p).unwrap()).collect())
                .collect()
        })
        .collect()
}

fn eval2(g: &[Vec<Expression>], p: &[BigRational]) -> Vec<Vec<BigRational>> {
    g.iter()
        .map(|row| row.iter().map(|e| e.eval_value(p).unwrap()).collect())
        .collect()
}

fn pass(idx: usize, what: &str) {
    println!("criterion {idx}: PASS - {what}");
}

#[test]
fn criterion_01_example_61_exact_reproduction() {
    let started = Instant::now();
    let c = example61();
    let d = normalize(&c).unwrap();
    let points = default_sample_points::<BigRational>(CHECK_SEED, 2);
    let p = &points[0];

    let mu: Vec<BigRational> = d.mu.components.iter().map(|e| e.eval_value(p).unwrap()).collect();
    let nu: Vec<BigRational> = d.nu.components.iter().map(|e| e.eval_value(p).unwrap()).collect();
    assert_eq!(mu, vec![q(-1, 1), q(0, 1)]);
    assert_eq!(nu, vec![q(-1, 2), q(1, 2)]);

    let mut want_upper = vec![vec![vec![q(0, 1); 2]; 2]; 2];
    want_upper[1][0][0] = q(1, 1);
    want_upper[1][0][1] = q(1, 1);
    want_upper[1][1][0] = q(-1, 1);
    assert_eq!(eval3(&d.pi_upper, p), want_upper);
    let mut want_lower = vec![vec![q(0, 1); 2]; 2];
    want_lower[0][0] = q(-1, 1);
    assert_eq!(eval2(&d.pi_lower, p), want_lower);

    for p in &points {
        let r = curvature(&d, p).unwrap();
        assert_eq!(r.k_torsion[1][0][1], q(-2, 1));
        assert!(r.k_curv.iter().flatten().flatten().flatten().all(|v| v.is_zero()));
        assert!(r.omega_lower.iter().flatten().flatten().all(|v| v.is_zero()));
    }

    let (t, v) = normal_tw(&c).unwrap();
    assert_eq!(t.beta[0][0].eval_value::<BigRational>(p).unwrap(), q(3, 1));
    let f: Vec<BigRational> = v.f.iter().map(|e| e.eval_value(p).unwrap()).collect();
    assert_eq!(f, vec![q(3, 2), q(-3, 2)]);
    // Matrix on the tangent e_1: first column (0, 1, 3) dx^1, and the
    // upper-right block carries -(1/3) dx.
    let m = assemble_matrix(&t, p, &[q(1, 1), q(0, 1)], &q(0, 1)).unwrap();
    assert_eq!(m.entries[0][0], q(0, 1));
    assert_eq!(m.entries[1][0], q(1, 1));
    assert_eq!(m.entries[2][0], q(3, 1));
    assert_eq!(m.entries[0][2], q(-1, 3));
    assert_eq!(m.entries[2][2], q(0, 1));

    // R(omega) has the single entry (2/3) dx^1 ^ dx^2 in the torsion block.
    for p in &points {
        let r = tw_curvature(&t, p).unwrap();
        assert_eq!(r.torsion_upper[1][0][1], q(2, 3));
        assert_eq!(r.torsion_upper[1][1][0], q(-2, 3));
        let mut others = 0usize;
        for v in r.r_upper.iter().flatten().flatten().flatten() {
            assert!(v.is_zero());
            others += 1;
        }
        for v in r.r_lower.iter().flatten().flatten() {
            assert!(v.is_zero());
            others += 1;
        }
        for v in r.corner.iter().flatten() {
            assert!(v.is_zero());
            others += 1;
        }
        for (i, m) in r.torsion_upper.iter().enumerate() {
            for (k, row) in m.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    if (i, k, l) != (1, 0, 1) && (i, k, l) != (1, 1, 0) {
                        assert!(v.is_zero());
                        others += 1;
                    }
                }
            }
        }
        assert!(others > 0);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} >= 1s");
    pass(1, "Example 6.1 tables, curvature and TW matrix bit-exact");
}

/// The criterion-2 input population; criterion 6 reuses it verbatim.
fn normality_inputs() -> Vec<AffineConnection> {
    let mut sampler = Sampler::new(2026);
    let mut out = Vec::new();
    for idx in 0..50 {
        let n = if idx % 2 == 0 { 2 } else { 3 };
        out.push(AffineConnection::random_constant(&mut sampler, n));
    }
    for _ in 0..10 {
        out.push(AffineConnection::random_polynomial(&mut sampler, 2, 2));
    }
    out
}

#[test]
fn criterion_02_normality_property_suite() {
    let started = Instant::now();
    for c in normality_inputs() {
        let n = c.n();
        let d = normalize(&c).unwrap();
        let points = default_sample_points::<BigRational>(CHECK_SEED, n);
        for p in &points {
            // Ricci-type normalization: k^i_{jil} = 0.
            let r = curvature(&d, p).unwrap();
            for j in 0..n {
                for l in 0..n {
                    let mut tr = q(0, 1);
                    for i in 0..n {
                        tr += &r.k_curv[i][j][i][l];
                    }
                    assert!(tr.is_zero(), "k^i_{{jil}} != 0");
                }
            }
            // Trace conditions against the reduced torsion.
            let pi = d.eval_pi_upper::<BigRational>(p).unwrap();
            let mu: Vec<BigRational> =
                d.mu.components.iter().map(|e| e.eval_value(p).unwrap()).collect();
            for k in 0..n {
                let mut first = q(0, 1);
                let mut second = q(0, 1);
                for a in 0..n {
                    first += &pi[a][a][k];
                    second += &pi[a][k][a];
                }
                assert_eq!(first, mu[k]);
                assert_eq!(second, -mu[k].clone());
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} >= 30s");
    pass(2, "normality and trace conditions on 60 random inputs");
}

#[test]
fn criterion_03_equivalence_invariance() {
    let mut sampler = Sampler::new(33);
    for idx in 0..50 {
        let c = if idx < 40 {
            AffineConnection::random_constant(&mut sampler, 2)
        } else {
            AffineConnection::random_polynomial(&mut sampler, 2, 2)
        };
        let rho = OneForm {
            n: 2,
            components: (0..2)
                .map(|_| Expression::constant(sampler.coeff_rational()))
                .collect(),
        };
        let shifted = projective_shift(&c, &rho);
        let d1 = normalize(&c).unwrap();
        let d2 = normalize(&shifted).unwrap();
        let points = default_sample_points::<BigRational>(CHECK_SEED, 2);
        for p in &points {
            assert_eq!(eval3(&d1.pi_upper, p), eval3(&d2.pi_upper, p));
            assert_eq!(eval2(&d1.pi_lower, p), eval2(&d2.pi_lower, p));
        }
        let recovered = recover_rho(&c, &shifted).unwrap().expect("shift is recoverable");
        let p = &points[0];
        for j in 0..2 {
            assert_eq!(
                recovered.components[j].eval_value::<BigRational>(p).unwrap(),
                rho.components[j].eval_value::<BigRational>(p).unwrap()
            );
        }
    }
    pass(3, "normalize is shift-invariant and recover_rho round-trips, 50 cases");
}

#[test]
fn criterion_04_torsion_free_specialization() {
    let mut sampler = Sampler::new(44);
    for idx in 0..20 {
        let n = if idx % 2 == 0 { 2 } else { 3 };
        let c = torsion_free_companion(&AffineConnection::random_constant(&mut sampler, n));
        let d = normalize(&c).unwrap();
        let points = default_sample_points::<BigRational>(CHECK_SEED, n);
        for p in &points {
            let g = c.eval_gamma::<BigRational>(p).unwrap();
            let pi = d.eval_pi_upper::<BigRational>(p).unwrap();
            // Closed form: Pi = Gamma - (1/(n+1))(delta_j tr_k + delta_k tr_j).
            let traces: Vec<BigRational> = (0..n)
                .map(|k| {
                    let mut acc = q(0, 1);
                    for a in 0..n {
                        acc += &g[a][a][k];
                    }
                    acc
                })
                .collect();
            let den = q(n as i64 + 1, 1);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut want = g[i][j][k].clone();
                        if i == j {
                            want -= traces[k].clone() / den.clone();
                        }
                        if i == k {
                            want -= traces[j].clone() / den.clone();
                        }
                        assert_eq!(pi[i][j][k], want);
                    }
                }
            }
            let low = d.eval_pi_lower::<BigRational>(p).unwrap();
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(low[j][k], low[k][j]);
                }
            }
            // Trace-free curvature: k^i_{ikl} = 0.
            let r = curvature(&d, p).unwrap();
            for k in 0..n {
                for l in 0..n {
                    let mut tr = q(0, 1);
                    for i in 0..n {
                        tr += &r.k_curv[i][i][k][l];
                    }
                    assert!(tr.is_zero());
                }
            }
        }
    }
    pass(4, "Lemma 2.13 closed form, symmetric Pi_lower, trace-free curvature");
}

#[test]
fn criterion_05_transition_law() {
    // Nonlinear chart change, float pipeline to 1e-9.
    let c = example61();
    let d = normalize(&c).unwrap();
    let psi = vec![
        Expression::add(Expression::coord(0), Expression::powi(Expression::coord(1), 2)),
        Expression::coord(1),
    ];
    let points = default_sample_points::<f64>(CHECK_SEED, 2);
    for p in points.iter().take(10) {
        let hat = transform(&d, &psi, p).unwrap();
        let res = transform_residual(&d, &psi, p, &hat).unwrap();
        assert!(res <= 1e-9, "residual {res} at {p:?}");
    }
    // Affine chart change with constant Jacobian: exact.
    let mut sampler = Sampler::new(55);
    let affine_psi = vec![
        Expression::add(
            Expression::add(
                Expression::coord(0).scale(2, 1),
                Expression::coord(1),
            ),
            Expression::one(),
        ),
        Expression::sub(Expression::coord(0), Expression::coord(1)),
    ];
    for c in [example61(), AffineConnection::random_polynomial(&mut sampler, 2, 2)] {
        let d = normalize(&c).unwrap();
        let points = default_sample_points::<BigRational>(CHECK_SEED, 2);
        for p in points.iter().take(10) {
            let hat = transform(&d, &affine_psi, p).unwrap();
            let res = transform_residual(&d, &affine_psi, p, &hat).unwrap();
            assert_eq!(res, 0.0);
        }
    }
    pass(5, "Lemma 2.12 identity to 1e-9 nonlinear, exact for affine charts");
}

#[test]
fn criterion_06_tw_consistency() {
    for c in normality_inputs() {
        let n = c.n();
        let d = normalize(&c).unwrap();
        let (t, v) = normal_tw(&c).unwrap();
        let points = default_sample_points::<BigRational>(CHECK_SEED, n);
        let minus_np1 = q(-(n as i64 + 1), 1);
        for p in points.iter().take(5) {
            assert_eq!(eval3(&t.alpha, p), eval3(&d.pi_upper, p));
            let beta = eval2(&t.beta, p);
            let low = eval2(&d.pi_lower, p);
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(beta[j][k], low[j][k].clone() * minus_np1.clone());
                }
            }
            let ric = tw_ricci(&t, p).unwrap();
            assert!(ric.iter().flatten().all(|x| x.is_zero()));
            let back = induced_connection(&t, &v).unwrap();
            assert_eq!(
                back.eval_gamma::<BigRational>(p).unwrap(),
                c.eval_gamma::<BigRational>(p).unwrap()
            );
        }
    }
    pass(6, "normal TW blocks, Ricci-flatness and induced-connection identity");
}

#[test]
fn criterion_07_structural_equivalence_round_trip() {
    let mut sampler = Sampler::new(77);
    let points = default_sample_points::<BigRational>(CHECK_SEED, 2);
    for _ in 0..10 {
        let c = AffineConnection::random_constant(&mut sampler, 2);
        let (t1, _) = normal_tw(&c).unwrap();
        let bar = OneForm {
            n: 2,
            components: (0..2)
                .map(|_| Expression::constant(sampler.coeff_rational()))
                .collect(),
        };
        let entries = grid2(3, |j, k| {
            if j < 2 && k < 2 {
                Expression::constant(sampler.coeff_rational())
            } else if j < 2 {
                bar.components[j].clone()
            } else if k < 2 {
                bar.components[k].clone()
            } else {
                Expression::zero()
            }
        });
        let b = BetaTensor { n: 2, entries, bar };
        let t2 = apply_structural_shift(&t1, &b);
        let got = structural_equiv_beta(&t1, &t2).unwrap().expect("equivalent pair");
        for p in &points {
            assert_eq!(eval2(&got.entries, p), eval2(&b.entries, p));
            for j in 0..2 {
                assert_eq!(
                    got.bar.components[j].eval_value::<BigRational>(p).unwrap(),
                    b.bar.components[j].eval_value::<BigRational>(p).unwrap()
                );
            }
        }
    }
    // Torsion-free pairs produce a symmetric equivalence tensor.
    for _ in 0..5 {
        let c = torsion_free_companion(&AffineConnection::random_constant(&mut sampler, 2));
        let rho = OneForm {
            n: 2,
            components: (0..2)
                .map(|_| Expression::constant(sampler.coeff_rational()))
                .collect(),
        };
        let shifted = projective_shift(&c, &rho);
        let v = VolumeConnection::zero(2);
        let zero_beta = grid2(2, |_, _| Expression::zero());
        let t1 = from_horizontal(c.gamma(), &zero_beta, &v);
        let t2 = from_horizontal(shifted.gamma(), &zero_beta, &v);
        let b = structural_equiv_beta(&t1, &t2).unwrap().expect("equivalent pair");
        let p = &points[0];
        let grid = eval2(&b.entries, p);
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(grid[j][k], grid[k][j]);
            }
        }
    }
    pass(7, "forward-constructed beta recovered exactly; torsion-free beta symmetric");
}

#[test]
fn criterion_08_torus_variety() {
    let started = Instant::now();
    // Exact vanishing on Example 6.1's tau.
    let tau61 = Tau {
        components: [q(0, 1), q(0, 1), q(0, 1), q(1, 1), q(1, 1), q(-1, 1)],
    };
    let (f, g) = f_g(&tau61);
    assert!(f.is_zero() && g.is_zero());
    // Example 6.3 family at 20 random parameter triples.
    let mut sampler = Sampler::new(88);
    for _ in 0..20 {
        let ct = family63(
            sampler.coeff_rational(),
            sampler.coeff_rational(),
            sampler.coeff_rational(),
        );
        let (f, g) = f_g(&ct.tau);
        assert!(f.is_zero() && g.is_zero());
    }
    // Example 6.4 branches valid at generic angles.
    for theta in [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_3] {
        for branch in [Branch64::BothZero, Branch64::Reciprocal] {
            let ct = family64(theta, branch).unwrap();
            let (f, g) = f_g(&ct.tau);
            assert!(f.abs() <= 1e-12 && g.abs() <= 1e-12);
        }
        assert!(family64(theta, Branch64::ZeroSine { pi2_11: 1.0 }).is_err());
        assert!(family64(theta, Branch64::ZeroCosine { pi1_22: 1.0 }).is_err());
    }
    // Homogeneity F(lambda tau) = lambda^3 F(tau), exact.
    for _ in 0..20 {
        let tau = Tau {
            components: std::array::from_fn(|_| sampler.coeff_rational()),
        };
        let lam = sampler.coeff_rational();
        let (f, g) = f_g(&tau);
        let (fs, gs) = f_g(&tau.scale(&lam));
        let cube = lam.clone() * lam.clone() * lam.clone();
        assert_eq!(fs, cube.clone() * f);
        assert_eq!(gs, cube * g);
    }
    // Solver statistics and the curvature-free pipeline on each sample.
    let samples = solve_variety(42, 100).unwrap();
    assert!(samples.len() >= 90, "only {}/100 converged", samples.len());
    let points = default_sample_points::<f64>(CHECK_SEED, 2);
    for s in &samples {
        assert!(s.residual <= 1e-12);
        let ct = complete_tau(&s.tau);
        let c = gammas_from_tau(&ct, &[0.0, 0.0]);
        let d = normalize(&c).unwrap();
        for p in points.iter().take(3) {
            let r = curvature(&d, p).unwrap();
            assert!(r.k_curv.iter().flatten().flatten().flatten().all(|v| v.abs() <= 1e-9));
            assert!(r.omega_lower.iter().flatten().flatten().all(|v| v.abs() <= 1e-9));
        }
    }
    // Analytic Jacobian against central differences.
    for _ in 0..5 {
        let mut tau = Tau::<f64>::zero();
        for k in 0..6 {
            tau.components[k] = sampler.uniform(-2.0, 2.0);
        }
        let jac = jacobian(&tau);
        let h = 1e-6;
        for k in 0..6 {
            let mut up = tau.clone();
            up.components[k] += h;
            let mut down = tau.clone();
            down.components[k] -= h;
            let (fu, gu) = f_g(&up);
            let (fd, gd) = f_g(&down);
            assert!((jac[0][k] - (fu - fd) / (2.0 * h)).abs() <= 1e-6);
            assert!((jac[1][k] - (gu - gd) / (2.0 * h)).abs() <= 1e-6);
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} >= 60s");
    pass(8, "F/G identities, solver statistics and Jacobian agreement");
}

#[test]
fn criterion_09_geodesic_desk_check() {
    let started = Instant::now();
    let mut sampler = Sampler::new(99);
    for _ in 0..5 {
        let a = AffineConnection::random_constant(&mut sampler, 2);
        let phi: Vec<f64> = (0..2).map(|_| sampler.uniform(-0.25, 0.25)).collect();
        let rho = OneForm {
            n: 2,
            components: phi.iter().map(|v| Expression::float(*v)).collect(),
        };
        let b = projective_shift(&a, &rho);

        // Joint integration of the b-geodesic and the reparametrization
        // sigma'' = -2 rho(x') sigma', sigma(0) = 0, sigma'(0) = 1.
        let x0 = [0.05f64, 0.1];
        let v0 = [0.2f64, -0.15];
        let steps = 4000usize;
        let h = 1.0 / steps as f64;
        let accel = |x: &[f64], v: &[f64]| -> Vec<f64> {
            let g = b.eval_gamma::<f64>(x).unwrap();
            (0..2)
                .map(|i| {
                    let mut acc = 0.0;
                    for j in 0..2 {
                        for k in 0..2 {
                            acc -= g[i][j][k] * v[j] * v[k];
                        }
                    }
                    acc
                })
                .collect()
        };
        // State (x, v, sigma, sigma'), classical 4th-order steps.
        let deriv = |st: &[f64; 6]| -> [f64; 6] {
            let x = [st[0], st[1]];
            let v = [st[2], st[3]];
            let acc = accel(&x, &v);
            let rv = phi[0] * v[0] + phi[1] * v[1];
            [v[0], v[1], acc[0], acc[1], st[5], -2.0 * rv * st[5]]
        };
        let mut st = [x0[0], x0[1], v0[0], v0[1], 0.0, 1.0];
        for _ in 0..steps {
            let k1 = deriv(&st);
            let mid1: [f64; 6] = std::array::from_fn(|i| st[i] + 0.5 * h * k1[i]);
            let k2 = deriv(&mid1);
            let mid2: [f64; 6] = std::array::from_fn(|i| st[i] + 0.5 * h * k2[i]);
            let k3 = deriv(&mid2);
            let end: [f64; 6] = std::array::from_fn(|i| st[i] + h * k3[i]);
            let k4 = deriv(&end);
            for i in 0..6 {
                st[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let sigma_end = st[4];
        assert!(sigma_end > 0.0);

        // a-geodesic with the same initial data, integrated to sigma(1).
        let mut x = x0.to_vec();
        let mut v = v0.to_vec();
        let m = 4000usize;
        let ha = sigma_end / m as f64;
        for _ in 0..m {
            let (nx, nv) = projtor_core::affine::geodesic_step(&a, &x, &v, ha).unwrap();
            x = nx;
            v = nv;
        }
        for i in 0..2 {
            assert!(
                (x[i] - st[i]).abs() <= 1e-6,
                "trace mismatch {} vs {}",
                x[i],
                st[i]
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} >= 10s");
    pass(9, "shifted geodesics retrace the originals after reparametrization");
}

fn random_pgl(sampler: &mut Sampler, n: usize) -> PglElement<BigRational> {
    PglElement {
        v: (0..n).map(|_| sampler.coeff_rational()).collect(),
        u: (0..n)
            .map(|_| (0..n).map(|_| sampler.coeff_rational()).collect())
            .collect(),
        xi: (0..n).map(|_| sampler.coeff_rational()).collect(),
    }
}

fn random_h2(sampler: &mut Sampler, n: usize) -> H2Element<BigRational> {
    loop {
        let a_upper: Matrix<BigRational> = (0..n)
            .map(|_| (0..n).map(|_| sampler.coeff_rational()).collect())
            .collect();
        if mat_inverse(&a_upper).is_err() {
            continue;
        }
        return H2Element {
            n,
            a_upper,
            a_low: (0..n).map(|_| sampler.coeff_rational()).collect(),
        };
    }
}

#[test]
fn criterion_10_lie_algebra_and_jet_groups() {
    let mut sampler = Sampler::new(1010);
    let zero = PglElement::<BigRational>::zero(2);
    for _ in 0..30 {
        let x = random_pgl(&mut sampler, 2);
        let y = random_pgl(&mut sampler, 2);
        let z = random_pgl(&mut sampler, 2);
        let t1 = pgl_bracket(&pgl_bracket(&x, &y).unwrap(), &z).unwrap();
        let t2 = pgl_bracket(&pgl_bracket(&y, &z).unwrap(), &x).unwrap();
        let t3 = pgl_bracket(&pgl_bracket(&z, &x).unwrap(), &y).unwrap();
        let sum = PglElement {
            v: (0..2).map(|i| t1.v[i].clone() + &t2.v[i] + &t3.v[i]).collect(),
            u: (0..2)
                .map(|i| {
                    (0..2)
                        .map(|j| t1.u[i][j].clone() + &t2.u[i][j] + &t3.u[i][j])
                        .collect()
                })
                .collect(),
            xi: (0..2).map(|i| t1.xi[i].clone() + &t2.xi[i] + &t3.xi[i]).collect(),
        };
        assert_eq!(sum, zero, "Jacobi identity fails");
    }
    for _ in 0..30 {
        let h1 = random_h2(&mut sampler, 2);
        let h2 = random_h2(&mut sampler, 2);
        let prod = g2_mul(&h2_embed(&h1), &h2_embed(&h2)).unwrap();
        assert!(h2_extract(&prod, 0.0).is_some(), "H^2 not closed under product");
        let inv = g2_inverse(&h2_embed(&h1)).unwrap();
        assert!(h2_extract(&inv, 0.0).is_some(), "H^2 not closed under inverse");
        assert_eq!(g2_mul(&inv, &h2_embed(&h1)).unwrap(), G2Element::identity(2));
    }
    let half = q(1, 2);
    for _ in 0..20 {
        let h = random_h2(&mut sampler, 2);
        let (linear, quadratic) = h_action_2jet(&h);
        assert_eq!(linear, h.a_upper);
        let embedded = h2_embed(&h);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(
                        quadratic[i][j][k],
                        embedded.a_sym[i][j][k].clone() * half.clone()
                    );
                }
            }
        }
    }
    pass(10, "Jacobi identity, H^2 closure and the 2-jet normalization");
}
