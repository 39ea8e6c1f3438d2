//! Implicitly restarted Arnoldi iteration for the dominant eigenvalues of a
//! real linear operator, with exact shifts and real arithmetic throughout.

use num_complex::Complex64 as C64;

use crate::dense::{self, Dense};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Number of wanted eigenvalues.
    pub k: usize,
    /// Krylov dimension; `None` means `max(2k + 10, 30)`, capped at the problem size.
    pub m: Option<usize>,
    pub tol: f64,
    pub max_restarts: usize,
    /// Ritz values with `|θ|` below this are discarded as infinite eigenvalues.
    pub theta_cutoff: f64,
    /// Real shift σ: the iteration runs on `(A - σB)⁻¹B` and targets ω² near σ.
    pub shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            k: 6,
            m: None,
            tol: 1e-9,
            max_restarts: 200,
            theta_cutoff: 1e-10,
            shift: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn krylov_dim(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| (2 * self.k + 10).max(30)).min(n)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let m = self.krylov_dim(n);
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if self.k >= m {
            return Err(Error::InvalidArgument(format!(
                "need k < m <= n, got k={}, m={m}, n={n}",
                self.k
            )));
        }
        if !(self.tol > 0.0) || !(self.theta_cutoff >= 0.0) || !self.shift.is_finite() {
            return Err(Error::InvalidArgument("tol, theta_cutoff and shift must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub theta: C64,
    /// Unit Euclidean norm.
    pub vector: Vec<C64>,
    /// Relative residual as reported by the convergence test.
    pub residual: f64,
}

/// Dominant Ritz pairs of `apply`, converged in the Ritz-estimate sense
/// `‖op x − θ x‖ ≤ tol·|θ|`.
pub fn arnoldi_dominant<F>(apply: F, n: usize, opts: &SolverOptions) -> Result<Vec<RitzPair>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    arnoldi_dominant_with(apply, n, opts, |_, _, estimate| estimate)
}

/// As [`arnoldi_dominant`], but each candidate pair is accepted only when
/// `residual(θ, x, estimate) ≤ tol`, where `estimate` is the relative Ritz
/// estimate. Lets the caller check a residual in the original problem.
///
/// If the iteration stagnates (typically on a multiple eigenvalue, whose
/// second copy a single-vector Krylov space only sees through rounding), the
/// converged pairs are locked and the search continues on the deflated
/// operator `(I − YYᵀ) op` over the orthogonal complement of their invariant
/// subspace `Y`.
pub fn arnoldi_dominant_with<F, R>(mut apply: F, n: usize, opts: &SolverOptions, mut residual: R) -> Result<Vec<RitzPair>>
where
    F: FnMut(&[f64], &mut [f64]),
    R: FnMut(C64, &[C64], f64) -> f64,
{
    opts.validate(n)?;
    let mut locked = Locked::default();
    let mut done: Vec<RitzPair> = Vec::new();
    let mut budget = opts.max_restarts;
    loop {
        let k_rem = opts.k.saturating_sub(done.len());
        if k_rem == 0 {
            break;
        }
        let m = opts.krylov_dim(n).min(n - locked.y.len());
        let not_converged = |best: Vec<f64>| Error::NotConverged {
            restarts: opts.max_restarts,
            best_residuals: best,
        };
        if k_rem >= m {
            let mut best: Vec<f64> = done.iter().map(|p| p.residual).collect();
            best.resize(opts.k, f64::INFINITY);
            return Err(not_converged(best));
        }
        match ira(&mut apply, n, m, k_rem, opts, &mut budget, &locked, &mut residual)? {
            Cycle::Converged(pairs) => {
                done.extend(pairs.into_iter().map(|(pair, _)| pair));
                break;
            }
            Cycle::Stalled(pairs) => {
                log::debug!("arnoldi stagnated; locking {} converged pairs", pairs.len());
                for (pair, z) in pairs {
                    if pair.theta.im >= 0.0 {
                        locked.add(&mut apply, &z, pair.theta.im != 0.0);
                    }
                    done.push(pair);
                }
            }
            Cycle::Exhausted(best) => {
                let mut all: Vec<f64> = done.iter().map(|p| p.residual).collect();
                all.extend(best);
                all.truncate(opts.k);
                return Err(not_converged(all));
            }
        }
    }
    let thetas: Vec<C64> = done.iter().map(|p| p.theta).collect();
    let order = dominance_order(&thetas);
    let mut slots: Vec<Option<RitzPair>> = done.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().unwrap()).collect())
}

/// Orthonormal basis `y` of a locked invariant subspace, and `op` applied to it.
#[derive(Default)]
struct Locked {
    y: Vec<Vec<f64>>,
    op_y: Vec<Vec<f64>>,
}

impl Locked {
    fn add<F: FnMut(&[f64], &mut [f64])>(&mut self, apply: &mut F, z: &[C64], complex: bool) {
        let parts: Vec<Vec<f64>> = if complex {
            vec![z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect()]
        } else {
            vec![z.iter().map(|c| c.re).collect()]
        };
        for mut v in parts {
            let n0 = norm(&v);
            orthogonalize(&self.y, &mut v);
            let nv = norm(&v);
            if nv <= 1e-8 * n0 || nv == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let mut w = vec![0.0; v.len()];
            apply(&v, &mut w);
            self.y.push(v);
            self.op_y.push(w);
        }
    }

    /// Eigenvector of `op` from an eigenvector `z ⊥ Y` of the deflated
    /// operator: `x = z + Y s` with `(θI − YᵀopY) s = Yᵀ op z`.
    fn lift<F: FnMut(&[f64], &mut [f64])>(&self, apply: &mut F, theta: C64, z: &[C64]) -> Vec<C64> {
        if self.y.is_empty() {
            return z.to_vec();
        }
        let n = z.len();
        let d = self.y.len();
        let re: Vec<f64> = z.iter().map(|c| c.re).collect();
        let im: Vec<f64> = z.iter().map(|c| c.im).collect();
        let (mut op_re, mut op_im) = (vec![0.0; n], vec![0.0; n]);
        apply(&re, &mut op_re);
        apply(&im, &mut op_im);
        let mut rhs: Vec<C64> = self.y.iter().map(|y| C64::new(dot(y, &op_re), dot(y, &op_im))).collect();
        let mat: Vec<Vec<C64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let t = C64::new(-dot(&self.y[i], &self.op_y[j]), 0.0);
                        if i == j {
                            t + theta
                        } else {
                            t
                        }
                    })
                    .collect()
            })
            .collect();
        dense::complex_solve(mat, &mut rhs, 1e-300);
        let mut x = z.to_vec();
        for (y, s) in self.y.iter().zip(&rhs) {
            x.iter_mut().zip(y).for_each(|(xi, yi)| *xi += s * yi);
        }
        let nx = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|c| *c /= nx);
        x
    }
}

enum Cycle {
    /// All wanted pairs, with their deflated Ritz vectors.
    Converged(Vec<(RitzPair, Vec<C64>)>),
    /// Stagnated; these pairs had converged and should be locked.
    Stalled(Vec<(RitzPair, Vec<C64>)>),
    /// Restart budget used up; best residuals so far.
    Exhausted(Vec<f64>),
}

/// One implicitly restarted Arnoldi run for `k` pairs on the operator deflated by `locked`.
#[allow(clippy::too_many_arguments)]
fn ira<F, R>(
    apply: &mut F,
    n: usize,
    m: usize,
    k: usize,
    opts: &SolverOptions,
    budget: &mut usize,
    locked: &Locked,
    residual: &mut R,
) -> Result<Cycle>
where
    F: FnMut(&[f64], &mut [f64]),
    R: FnMut(C64, &[C64], f64) -> f64,
{
    let mut v0 = vec![1.0; n];
    orthogonalize(&locked.y, &mut v0);
    let nv0 = norm(&v0);
    let v0 = if nv0 > 1e-8 * (n as f64).sqrt() {
        v0.iter().map(|x| x / nv0).collect()
    } else {
        fresh_direction(&[], &locked.y, n, 0)
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(v0);
    let mut h: Dense = vec![vec![0.0; m]; m + 1];
    let mut start = 0;
    let mut best: Vec<f64> = vec![f64::INFINITY; k];
    let mut stagnant = 0usize;
    let mut extra_kept = 0usize;

    loop {
        let mut deflated = |x: &[f64], y: &mut [f64]| {
            apply(x, y);
            orthogonalize(&locked.y, y);
        };
        extend(&mut deflated, &mut basis, &mut h, start, m, n, &locked.y)?;

        let hm: Dense = h[..m].to_vec();
        let theta = dense::hessenberg_eigenvalues(&hm)?;
        let order = dominance_order(&theta);
        let want = wanted_count(&theta, &order, k);
        let beta = h[m][m - 1];

        let mut pairs = Vec::with_capacity(want);
        let mut res = Vec::with_capacity(want);
        for &i in &order[..want] {
            let y = ritz_coefficients(&hm, theta[i]);
            let estimate = (beta * y[m - 1].norm()) / theta[i].norm().max(f64::MIN_POSITIVE);
            let z = combine(&basis[..m], &y);
            let x = locked.lift(apply, theta[i], &z);
            let r = residual(theta[i], &x, estimate);
            res.push(r);
            pairs.push((
                RitzPair {
                    theta: theta[i],
                    vector: x,
                    residual: r,
                },
                z,
            ));
        }
        log::debug!("arnoldi: {} restarts left, max residual {:e}", *budget, res.iter().cloned().fold(0.0, f64::max));
        if res.iter().all(|&r| r <= opts.tol) {
            return Ok(Cycle::Converged(pairs));
        }
        let improved = res.iter().zip(&best).any(|(r, b)| *r < 0.5 * *b);
        for (b, r) in best.iter_mut().zip(&res) {
            *b = b.min(*r);
        }
        stagnant = if improved { 0 } else { stagnant + 1 };
        if stagnant >= STALL_RESTARTS {
            let converged = converged_pairs(pairs, opts.tol);
            if !converged.is_empty() {
                return Ok(Cycle::Stalled(converged));
            }
            // Nothing to lock: change the restart deterministically instead.
            extra_kept = (extra_kept + 1) % ((m - want) / 2).max(1);
            stagnant = 0;
        }
        if *budget == 0 {
            return Ok(Cycle::Exhausted(best));
        }
        *budget -= 1;

        // Keep `p` Ritz values, never splitting a conjugate pair.
        let mut p = (want + (m - want) / 2 + extra_kept).max(want).min(m - 1);
        if p > want && is_conjugate_split(&theta, &order, p) {
            p -= 1;
        }
        if is_conjugate_split(&theta, &order, p) {
            p += 1;
        }
        if p >= m {
            p = want;
        }
        let shifts: Vec<C64> = order[p..].iter().map(|&i| theta[i]).collect();
        let (h_new, q) = apply_shifts(&hm, &shifts);

        // V_p ← V_m Q[:, ..p];  f ← V_m Q[:, p] h⁺(p, p−1) + β v_{m+1} Q(m−1, p−1)
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for j in 0..=p {
            let mut v = vec![0.0; n];
            for (i, b) in basis[..m].iter().enumerate() {
                let c = q[i][j];
                if c != 0.0 {
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += c * bi);
                }
            }
            new_basis.push(v);
        }
        let mut f = new_basis.pop().unwrap();
        let sub = h_new[p][p - 1];
        let tail = beta * q[m - 1][p - 1];
        f.iter_mut().zip(&basis[m]).for_each(|(fi, vi)| *fi = *fi * sub + tail * vi);
        orthogonalize(&new_basis, &mut f);
        let fnorm = norm(&f);

        let mut h2: Dense = vec![vec![0.0; m]; m + 1];
        for i in 0..p {
            h2[i][..p].copy_from_slice(&h_new[i][..p]);
        }
        basis = new_basis;
        if fnorm > 0.0 {
            f.iter_mut().for_each(|x| *x /= fnorm);
            h2[p][p - 1] = fnorm;
            basis.push(f);
        } else {
            h2[p][p - 1] = 0.0;
            basis.push(fresh_direction(&basis, &locked.y, n, p));
        }
        h = h2;
        start = p;
    }
}

/// Restarts without halving any residual before the iteration counts as stagnant.
const STALL_RESTARTS: usize = 10;

/// The converged pairs, keeping conjugate partners together.
fn converged_pairs(pairs: Vec<(RitzPair, Vec<C64>)>, tol: f64) -> Vec<(RitzPair, Vec<C64>)> {
    let ok: Vec<bool> = pairs.iter().map(|(p, _)| p.residual <= tol).collect();
    let thetas: Vec<C64> = pairs.iter().map(|(p, _)| p.theta).collect();
    let keep: Vec<bool> = (0..pairs.len())
        .map(|i| {
            if !ok[i] {
                return false;
            }
            if thetas[i].im == 0.0 {
                return true;
            }
            (0..pairs.len()).any(|j| j != i && ok[j] && is_pair(thetas[i], thetas[j]))
        })
        .collect();
    pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

/// Fills Krylov columns `start..m`, with two passes of classical Gram–Schmidt.
fn extend<F>(
    apply: &mut F,
    basis: &mut Vec<Vec<f64>>,
    h: &mut Dense,
    start: usize,
    m: usize,
    n: usize,
    locked: &[Vec<f64>],
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]),
{
    basis.truncate(start + 1);
    let mut w = vec![0.0; n];
    for j in start..m {
        apply(&basis[j], &mut w);
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Eigen("operator produced non-finite values".into()));
        }
        let wnorm0 = norm(&w);
        let coeffs = orthogonalize(basis, &mut w);
        for (i, c) in coeffs.iter().enumerate() {
            h[i][j] = *c;
        }
        let beta = norm(&w);
        if beta <= 1e-12 * wnorm0.max(f64::MIN_POSITIVE) || beta == 0.0 {
            // Invariant subspace found; continue with an orthogonal direction.
            h[j + 1][j] = 0.0;
            basis.push(fresh_direction(basis, locked, n, j + 1));
        } else {
            h[j + 1][j] = beta;
            basis.push(w.iter().map(|x| x / beta).collect());
        }
    }
    Ok(())
}

/// Two-pass Gram–Schmidt against `basis`; returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|b| dot(b, w)).collect();
        for (b, ci) in basis.iter().zip(&c) {
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= ci * bi);
        }
        coeffs.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    coeffs
}

/// A unit vector orthogonal to `basis` and `locked`, or zero once the space is exhausted.
fn fresh_direction(basis: &[Vec<f64>], locked: &[Vec<f64>], n: usize, seed: usize) -> Vec<f64> {
    if basis.len() + locked.len() >= n {
        return vec![0.0; n];
    }
    for attempt in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|i| deterministic_entry(i, seed * 8 + attempt)).collect();
        let n0 = norm(&v);
        orthogonalize(locked, &mut v);
        orthogonalize(basis, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 * n0 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
    vec![0.0; n]
}

fn deterministic_entry(i: usize, seed: usize) -> f64 {
    let x = ((i as f64 + 1.0) * 0.754_877_666_246_692_7 + (seed as f64 + 1.0) * 0.569_840_290_998_053_3).fract();
    2.0 * x - 1.0
}

/// Indices sorted by |θ| descending; ties by Re descending, then Im ascending.
fn dominance_order(theta: &[C64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        theta[b]
            .norm()
            .total_cmp(&theta[a].norm())
            .then(theta[b].re.total_cmp(&theta[a].re))
            .then(theta[a].im.total_cmp(&theta[b].im))
    });
    order
}

fn is_pair(a: C64, b: C64) -> bool {
    a.im != 0.0 && (a - b.conj()).norm() <= 1e-10 * a.norm().max(1e-300)
}

fn is_conjugate_split(theta: &[C64], order: &[usize], p: usize) -> bool {
    p > 0 && p < order.len() && is_pair(theta[order[p - 1]], theta[order[p]]) && {
        // The pair straddles p only if order[p-1] is not itself the second member.
        let mut first_members = 0;
        for i in 0..p {
            if theta[order[i]].im != 0.0 {
                first_members += 1;
            }
        }
        first_members % 2 == 1
    }
}

fn wanted_count(theta: &[C64], order: &[usize], k: usize) -> usize {
    if is_conjugate_split(theta, order, k) {
        k + 1
    } else {
        k
    }
}

/// Eigenvector of `hm` for `theta`; the Im < 0 member of a pair reuses the
/// conjugate of its partner's vector so conjugate pairs stay exact.
fn ritz_coefficients(hm: &Dense, theta: C64) -> Vec<C64> {
    if theta.im < 0.0 {
        dense::eigenvector(hm, theta.conj()).into_iter().map(|z| z.conj()).collect()
    } else {
        dense::eigenvector(hm, theta)
    }
}

fn combine(basis: &[Vec<f64>], y: &[C64]) -> Vec<C64> {
    let n = basis[0].len();
    let mut x = vec![C64::new(0.0, 0.0); n];
    for (b, c) in basis.iter().zip(y) {
        x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
    }
    let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nx > 0.0 {
        x.iter_mut().for_each(|z| *z /= nx);
    }
    x
}

/// Exact-shift QR steps on the Hessenberg matrix `hm`: real shifts use
/// `H − μI`, conjugate pairs use the real quadratic `H² − 2Re(μ)H + |μ|²I`.
/// Returns the transformed Hessenberg matrix and the accumulated orthogonal Q.
fn apply_shifts(hm: &Dense, shifts: &[C64]) -> (Dense, Dense) {
    let m = hm.len();
    let mut h = hm.clone();
    let mut q_acc = dense::identity(m);
    let mut skip_conj = Vec::new();
    for &mu in shifts {
        if mu.im != 0.0 {
            if let Some(pos) = skip_conj.iter().position(|&s: &C64| (s - mu).norm() <= 1e-10 * mu.norm()) {
                skip_conj.swap_remove(pos);
                continue;
            }
            skip_conj.push(mu.conj());
        }
        let mut shifted = if mu.im == 0.0 {
            let mut s = h.clone();
            for (i, row) in s.iter_mut().enumerate() {
                row[i] -= mu.re;
            }
            s
        } else {
            let mut s = dense::matmul(&h, &h);
            for i in 0..m {
                for j in 0..m {
                    s[i][j] -= 2.0 * mu.re * h[i][j];
                }
                s[i][i] += mu.norm_sqr();
            }
            s
        };
        for row in shifted.iter_mut() {
            for v in row.iter_mut() {
                if !v.is_finite() {
                    *v = 0.0;
                }
            }
        }
        let q = dense::householder_q(&shifted);
        h = dense::matmul(&dense::transpose(&q), &dense::matmul(&h, &q));
        for i in 0..m {
            for j in 0..i.saturating_sub(1) {
                h[i][j] = 0.0;
            }
        }
        q_acc = dense::matmul(&q_acc, &q);
    }
    (h, q_acc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) {
        move |x, y| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        }
    }

    #[test]
    fn identity_operator() {
        let opts = SolverOptions { k: 3, m: Some(5), ..Default::default() };
        let pairs = arnoldi_dominant(|x, y| y.copy_from_slice(x), 5, &opts).unwrap();
        assert_eq!(pairs.len(), 3);
        for p in pairs {
            assert!((p.theta - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_operator() {
        let opts = SolverOptions { k: 2, m: Some(4), ..Default::default() };
        let pairs = arnoldi_dominant(diag_op(vec![5.0, 4.0, 3.0, 2.0, 1.0]), 5, &opts).unwrap();
        let th: Vec<f64> = pairs.iter().map(|p| p.theta.re).collect();
        assert!((th[0] - 5.0).abs() < 1e-9 && (th[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn restarts_on_long_diagonal() {
        let d: Vec<f64> = (0..400).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let opts = SolverOptions { k: 4, m: Some(12), ..Default::default() };
        let pairs = arnoldi_dominant(diag_op(d), 400, &opts).unwrap();
        for (p, want) in pairs.iter().zip([1.0, 0.5, 1.0 / 3.0, 0.25]) {
            assert!((p.theta.re - want).abs() < 1e-9, "{} vs {want}", p.theta);
        }
    }

    #[test]
    fn rotation_blocks_give_conjugate_pairs() {
        // Block diagonal with 2x2 rotations scaled by decreasing radii.
        let n = 60;
        let op = move |x: &[f64], y: &mut [f64]| {
            for b in 0..n / 2 {
                let r = 1.0 / (1.0 + b as f64);
                let (c, s) = (r * 0.6, r * 0.8);
                y[2 * b] = c * x[2 * b] - s * x[2 * b + 1];
                y[2 * b + 1] = s * x[2 * b] + c * x[2 * b + 1];
            }
        };
        let opts = SolverOptions { k: 3, ..Default::default() };
        let pairs = arnoldi_dominant(op, n, &opts).unwrap();
        assert_eq!(pairs.len(), 4);
        assert!((pairs[0].theta - C64::new(0.6, -0.8)).norm() < 1e-9);
        assert!((pairs[1].theta - C64::new(0.6, 0.8)).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let opts = SolverOptions { k: 5, m: Some(5), ..Default::default() };
        assert!(arnoldi_dominant(|x, y| y.copy_from_slice(x), 5, &opts).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let d: Vec<f64> = (0..200).map(|i| 1.0 - i as f64 * 1e-4).collect();
        let opts = SolverOptions { k: 4, m: Some(8), max_restarts: 2, tol: 1e-14, ..Default::default() };
        match arnoldi_dominant(diag_op(d), 200, &opts) {
            Err(Error::NotConverged { restarts, best_residuals }) => {
                assert_eq!(restarts, 2);
                assert_eq!(best_residuals.len(), 4);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
