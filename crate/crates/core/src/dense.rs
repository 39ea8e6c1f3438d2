//! Small dense kernels for the projected Krylov problem: Hessenberg QR
//! eigenvalues, complex inverse iteration, Householder QR.
//!
//! Matrices are row-major `Vec<Vec<f64>>`; sizes are at most a few hundred.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Dense = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut c = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..p {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

pub fn transpose(a: &Dense) -> Dense {
    let (n, m) = (a.len(), a.first().map_or(0, |r| r.len()));
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Orthogonal factor of the Householder QR of a square matrix.
pub fn householder_q(a: &Dense) -> Dense {
    let n = a.len();
    let mut r = a.clone();
    let mut q = identity(n);
    for k in 0..n.saturating_sub(1) {
        let norm = (k..n).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- (I - 2vvᵀ/vᵀv) R
        for j in 0..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                r[i][j] -= s * v[i - k];
            }
        }
        // Q <- Q (I - 2vvᵀ/vᵀv)
        for row in q.iter_mut() {
            let s: f64 = (k..n).map(|i| row[i] * v[i - k]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                row[i] -= s * v[i - k];
            }
        }
    }
    q
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration. Complex eigenvalues come out as exact conjugate pairs.
pub fn hessenberg_eigenvalues(h: &Dense) -> Result<Vec<C64>> {
    let n = h.len();
    let mut a = h.clone();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 * n.max(1) {
                return Err(Error::Eigen("Hessenberg QR iteration did not converge".into()));
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r, mut z);
            let mut m = nu as isize - 2;
            loop {
                let mu = m as usize;
                z = a[mu][mu];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[mu + 1][mu] + a[mu][mu + 1];
                q = a[mu + 1][mu + 1] - z - rr - ss;
                r = a[mu + 2][mu + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mu == l {
                    break;
                }
                let u = a[mu][mu - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[mu - 1][mu - 1].abs() + z.abs() + a[mu + 1][mu + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            let m = m as usize;
            for i in m + 2..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k + 1 != nu {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| C64::new(re, im)).collect())
}

/// Solves `(m) x = b` in place by complex Gaussian elimination with partial
/// pivoting; exactly zero pivots are replaced by `tiny`.
pub(crate) fn complex_solve(mut m: Vec<Vec<C64>>, b: &mut [C64], tiny: f64) {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
        m.swap(k, piv);
        b.swap(k, piv);
        if m[k][k].norm() < tiny {
            m[k][k] = C64::new(tiny, 0.0);
        }
        let d = m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / d;
            if f != C64::new(0.0, 0.0) {
                for j in k..n {
                    let mkj = m[k][j];
                    m[i][j] -= f * mkj;
                }
                let bk = b[k];
                b[i] -= f * bk;
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= m[k][j] * b[j];
        }
        b[k] = s / m[k][k];
    }
}

/// Unit-norm eigenvector of `h` for the eigenvalue `theta`, by inverse iteration.
pub fn eigenvector(h: &Dense, theta: C64) -> Vec<C64> {
    let n = h.len();
    let scale = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(theta.norm()).max(f64::MIN_POSITIVE);
    let tiny = scale * 1e-14;
    let shift = theta + C64::new(tiny, tiny);
    let shifted: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| C64::new(h[i][j], 0.0) - if i == j { shift } else { C64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    let mut x = vec![C64::new(1.0, 0.0); n];
    for _ in 0..3 {
        complex_solve(shifted.clone(), &mut x, tiny);
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_eigenvalues() {
        let h = vec![vec![3.0, 1.0, 2.0], vec![0.0, 2.0, 5.0], vec![0.0, 0.0, 1.0]];
        let mut ev: Vec<f64> = hessenberg_eigenvalues(&h).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rotation_block_gives_conjugates() {
        let h = vec![vec![1.0, -2.0], vec![2.0, 1.0]];
        let ev = hessenberg_eigenvalues(&h).unwrap();
        assert!((ev[0] - C64::new(1.0, -2.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let h = vec![
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let mut ev: Vec<f64> = hessenberg_eigenvalues(&h).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn householder_q_is_orthogonal() {
        let a = vec![vec![2.0, 1.0, 0.5], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let q = householder_q(&a);
        let qtq = matmul(&transpose(&q), &q);
        for i in 0..3 {
            for j in 0..3 {
                assert!((qtq[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let r = matmul(&transpose(&q), &a);
        assert!(r[1][0].abs() < 1e-14 && r[2][0].abs() < 1e-14 && r[2][1].abs() < 1e-14);
    }

    #[test]
    fn inverse_iteration_vector() {
        let h = vec![vec![1.0, -2.0], vec![2.0, 1.0]];
        let theta = C64::new(1.0, 2.0);
        let y = eigenvector(&h, theta);
        for i in 0..2 {
            let hy: C64 = (0..2).map(|j| h[i][j] * y[j]).sum();
            assert!((hy - theta * y[i]).norm() < 1e-10);
        }
    }
}
