use elastic_te::assembly::{local_mass, local_stiffness, ElasticParams};
use elastic_te::mesh::Point2;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

fn q(x: f64) -> Q {
    Q::from_float(x).unwrap()
}

/// Gradients of the P1 basis by exact inversion of `[1 x y]`.
fn gradients(p: &[Point2; 3]) -> Vec<[Q; 2]> {
    // Augmented system V c = I, V rows (1, x_i, y_i).
    let mut m: Vec<Vec<Q>> = (0..3)
        .map(|i| {
            let mut row = vec![Q::one(), q(p[i].x), q(p[i].y)];
            row.extend((0..3).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..3 {
        let piv = (c..3).find(|&r| !m[r][c].is_zero()).unwrap();
        m.swap(c, piv);
        let inv = Q::one() / m[c][c].clone();
        for v in m[c].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..3 {
            if r != c {
                let f = m[r][c].clone();
                for k in 0..6 {
                    let d = &f * &m[c][k];
                    m[r][k] = &m[r][k] - d;
                }
            }
        }
    }
    // Column i of V⁻¹ holds the coefficients (a, b, c) of N_i = a + b x + c y.
    (0..3).map(|i| [m[1][3 + i].clone(), m[2][3 + i].clone()]).collect()
}

fn area(p: &[Point2; 3]) -> Q {
    let two = (q(p[1].x) - q(p[0].x)) * (q(p[2].y) - q(p[0].y)) - (q(p[2].x) - q(p[0].x)) * (q(p[1].y) - q(p[0].y));
    two / Q::from_integer(2.into())
}

/// `|T| (2μ ε(φ):ε(ψ) + λ div φ div ψ)` with `φ = N_i e_a`, `ψ = N_j e_b`.
fn tensor_stiffness(p: &[Point2; 3], mu: f64, lambda: f64) -> Vec<Vec<Q>> {
    let g = gradients(p);
    let a = area(p);
    let half = Q::new(1.into(), 2.into());
    let (mu, lambda) = (q(mu), q(lambda));
    let mut k = vec![vec![Q::zero(); 6]; 6];
    for i in 0..3 {
        for ca in 0..2 {
            for j in 0..3 {
                for cb in 0..2 {
                    let mut eps = &g[i][cb] * &g[j][ca] * &half;
                    if ca == cb {
                        eps += (&g[i][0] * &g[j][0] + &g[i][1] * &g[j][1]) * &half;
                    }
                    let div = &g[i][ca] * &g[j][cb];
                    let two = Q::from_integer(2.into());
                    k[2 * i + ca][2 * j + cb] = &a * (two * &mu * eps + &lambda * div);
                }
            }
        }
    }
    k
}

fn reference() -> [Point2; 3] {
    [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
}

#[test]
fn reference_stiffness_exact() {
    let want = tensor_stiffness(&reference(), 1.0, 0.0);
    let got = local_stiffness(&reference(), &ElasticParams::new(1.0, 0.0).unwrap()).unwrap();
    for r in 0..6 {
        for c in 0..6 {
            assert!((got[r][c] - want[r][c].to_f64().unwrap()).abs() < 1e-14, "({r},{c})");
        }
    }
    // Spot values: K[0][0] = 3/2, K[0][1] = 1/2.
    assert_eq!(want[0][0], Q::new(3.into(), 2.into()));
    assert_eq!(want[0][1], Q::new(1.into(), 2.into()));
}

#[test]
fn random_triangles_match_tensor_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let mut p = [Point2::new(0.0, 0.0); 3];
        loop {
            for v in p.iter_mut() {
                *v = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let a2 = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
            if a2 > 0.05 {
                break;
            }
        }
        let (mu, lambda) = (rng.gen_range(0.1..2.0), rng.gen_range(-0.09..2.0));
        let want = tensor_stiffness(&p, mu, lambda);
        let got = local_stiffness(&p, &ElasticParams::new(mu, lambda).unwrap()).unwrap();
        let scale = want.iter().flatten().map(|v| v.to_f64().unwrap().abs()).fold(0.0, f64::max);
        for r in 0..6 {
            for c in 0..6 {
                assert!((got[r][c] - want[r][c].to_f64().unwrap()).abs() < 1e-13 * scale);
            }
        }
    }
}

#[test]
fn mass_by_midpoint_quadrature() {
    // Edge-midpoint rule is exact for quadratics: ∫ N_i N_j = |T|/3 Σ_e N_i(m_e) N_j(m_e).
    let p = [Point2::new(0.2, -0.1), Point2::new(1.3, 0.4), Point2::new(0.1, 0.9)];
    let rho = 2.5;
    let got = local_mass(&p, rho).unwrap();
    let a = area(&p).to_f64().unwrap();
    let lam = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    for i in 0..3 {
        for j in 0..3 {
            let want: f64 = rho * a / 3.0 * lam.iter().map(|l| l[i] * l[j]).sum::<f64>();
            assert!((got[2 * i][2 * j] - want).abs() < 1e-15);
            assert!((got[2 * i + 1][2 * j + 1] - want).abs() < 1e-15);
            assert_eq!(got[2 * i][2 * j + 1], 0.0);
        }
    }
}

#[test]
fn reference_mass_block() {
    let m = local_mass(&reference(), 1.0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
            assert!((m[2 * i][2 * j] - want).abs() < 1e-16);
        }
    }
    assert!(local_mass(&reference(), 0.0).unwrap().iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn negative_lambda_kernel_is_rigid() {
    // For λ + μ > 0 the element kernel is exactly the 3 rigid modes.
    let p = [Point2::new(0.0, 0.0), Point2::new(0.7, 0.1), Point2::new(0.2, 0.8)];
    let k = local_stiffness(&p, &ElasticParams::new(1.0, -0.6).unwrap()).unwrap();
    let m = faer::Mat::<f64>::from_fn(6, 6, |r, c| k[r][c]);
    let ev = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    let top = ev[5];
    assert_eq!(ev.iter().filter(|v| v.abs() < 1e-12 * top).count(), 3);
    assert!(ev[3] > 1e-6 * top);
}
