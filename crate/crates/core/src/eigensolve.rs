//! Smallest-|ω²| eigenpairs of `A x = ω² B x` by Arnoldi on `(A − σB)⁻¹B`.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::arnoldi::{arnoldi_dominant_with, RitzPair};
use crate::assembly::{BlockSystem, DofMap};
use crate::error::{Error, Result};
use crate::lu::sparse_lu_factor;
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

pub use crate::arnoldi::SolverOptions;

/// Largest system accepted by [`dense_reference_eigs`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub omega_sq: C64,
    /// Principal square root of `omega_sq`.
    pub omega: C64,
    /// Interior dofs (length `N₀`).
    pub w: Vec<C64>,
    /// All dofs (length `N`).
    pub p: Vec<C64>,
    /// `‖Ax − ω²Bx‖ / (‖Ax‖ + |ω²|‖Bx‖)`
    pub residual: f64,
}

impl EigenPair {
    /// `[w; p]`
    pub fn vector(&self) -> Vec<C64> {
        self.w.iter().chain(&self.p).copied().collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.omega.im.abs() <= tol * self.omega.norm()
    }
}

fn complex_matvec(a: &SparseMatrix, x: &[C64]) -> Vec<C64> {
    let re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let (ar, ai) = (a.mul_vec(&re), a.mul_vec(&im));
    ar.into_iter().zip(ai).map(|(r, i)| C64::new(r, i)).collect()
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative residual `‖Ax − ω²Bx‖ / (‖Ax‖ + |ω²|‖Bx‖)`.
pub fn relative_residual(system: &BlockSystem, omega_sq: C64, x: &[C64]) -> f64 {
    let ax = complex_matvec(&system.a, x);
    let bx = complex_matvec(&system.b, x);
    let r: Vec<C64> = ax.iter().zip(&bx).map(|(a, b)| a - omega_sq * b).collect();
    let denom = norm(&ax) + omega_sq.norm() * norm(&bx);
    if denom == 0.0 {
        return if norm(&r) == 0.0 { 0.0 } else { f64::INFINITY };
    }
    norm(&r) / denom
}

/// Unit Euclidean norm, largest-magnitude component rotated to real positive.
pub fn normalize_phase(x: &mut [C64]) {
    let nx = norm(x);
    if nx == 0.0 {
        return;
    }
    let mut best = 0;
    for (i, z) in x.iter().enumerate() {
        if z.norm() > x[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let phase = x[best].conj() / x[best].norm();
    x.iter_mut().for_each(|z| *z = *z * phase / nx);
    x[best].im = 0.0;
}

/// Sorts by `|ω²|`, with the `Im ω < 0` member of each conjugate pair first.
pub fn sort_eigenvalues<T>(items: &mut [T], key: impl Fn(&T) -> C64) {
    items.sort_by(|a, b| {
        let (za, zb) = (key(a), key(b));
        za.norm().total_cmp(&zb.norm()).then(za.im.total_cmp(&zb.im))
    });
    // Moduli of conjugates can differ in the last bit; restore the pair order.
    for i in 1..items.len() {
        let (za, zb) = (key(&items[i - 1]), key(&items[i]));
        let scale = za.norm().max(zb.norm());
        if za.im > 0.0 && zb.im < 0.0 && (za - zb.conj()).norm() <= 1e-10 * scale {
            items.swap(i - 1, i);
        }
    }
}

fn shifted_operator(system: &BlockSystem, shift: f64) -> Result<SparseMatrix> {
    if shift == 0.0 {
        return Ok(system.a.clone());
    }
    let t: Vec<_> = system
        .a
        .triplets()
        .chain(system.b.triplets().map(|(r, c, v)| (r, c, -shift * v)))
        .collect();
    SparseMatrix::from_triplets(system.dim(), system.dim(), &t)
}

fn to_pair(system: &BlockSystem, shift: f64, ritz: &RitzPair) -> EigenPair {
    let omega_sq = C64::new(shift, 0.0) + ritz.theta.inv();
    let mut x = ritz.vector.clone();
    normalize_phase(&mut x);
    let residual = relative_residual(system, omega_sq, &x);
    let p = x.split_off(system.n_w());
    EigenPair {
        omega_sq,
        omega: omega_sq.sqrt(),
        w: x,
        p,
        residual,
    }
}

/// The `k` eigenpairs nearest the shift (smallest `|ω²|` for σ = 0). Every
/// returned pair satisfies the residual contract at `opts.tol`.
pub fn solve_transmission_eigs(system: &BlockSystem, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let n = system.dim();
    opts.validate(n)?;
    let lu = sparse_lu_factor(&shifted_operator(system, opts.shift)?)?;
    let b = &system.b;
    let mut scratch = vec![0.0; n];
    let apply = |x: &[f64], y: &mut [f64]| {
        b.matvec(x, &mut scratch);
        y.copy_from_slice(&scratch);
        lu.solve_in_place(y);
    };
    let residual = |theta: C64, x: &[C64], estimate: f64| {
        if theta.norm() < opts.theta_cutoff {
            estimate
        } else {
            let omega_sq = C64::new(opts.shift, 0.0) + theta.inv();
            relative_residual(system, omega_sq, x)
        }
    };
    let ritz = arnoldi_dominant_with(apply, n, opts, residual)?;
    let mut pairs: Vec<EigenPair> = ritz
        .iter()
        .filter(|r| r.theta.norm() >= opts.theta_cutoff)
        .map(|r| to_pair(system, opts.shift, r))
        .collect();
    if pairs.len() < ritz.len() {
        log::warn!("discarded {} Ritz values below the cutoff", ritz.len() - pairs.len());
    }
    sort_eigenvalues(&mut pairs, |p| p.omega_sq);
    Ok(pairs)
}

/// All finite eigenvalues from a dense eigendecomposition of `A⁻¹B`, sorted
/// like [`solve_transmission_eigs`]. Eigenvectors are phase-normalized.
pub fn dense_reference_eigs(system: &BlockSystem, theta_cutoff: f64) -> Result<Vec<(C64, Vec<C64>)>> {
    let n = system.dim();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    let lu = sparse_lu_factor(&system.a)?;
    let bd = system.b.to_dense();
    let mut op = faer::Mat::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = bd[i][j];
        }
        lu.solve_in_place(&mut col);
        for i in 0..n {
            op[(i, j)] = col[i];
        }
    }
    let evd = op.eigen().map_err(|e| Error::Eigen(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut out = Vec::new();
    for j in 0..n {
        let theta = s[j];
        let theta = C64::new(theta.re, theta.im);
        if theta.norm() <= theta_cutoff {
            continue;
        }
        let mut v: Vec<C64> = (0..n).map(|i| C64::new(u[(i, j)].re, u[(i, j)].im)).collect();
        normalize_phase(&mut v);
        out.push((theta.inv(), v));
    }
    sort_eigenvalues(&mut out, |p| p.0);
    Ok(out)
}

/// `u = w − p/ω²` (with `w` zero-extended) and `v = −p/ω²`, on all dofs.
pub fn reconstruct_uv(pair: &EigenPair, dofs: &DofMap) -> Result<(Vec<C64>, Vec<C64>)> {
    if pair.omega_sq.norm() == 0.0 {
        return Err(Error::InvalidArgument("cannot reconstruct at omega^2 = 0".into()));
    }
    if pair.w.len() != dofs.n_interior() || pair.p.len() != dofs.n_all() {
        return Err(Error::DimensionMismatch("eigenpair does not match the dof map".into()));
    }
    let inv = pair.omega_sq.inv();
    let w = dofs.extend(&pair.w);
    let v: Vec<C64> = pair.p.iter().map(|p| -p * inv).collect();
    let u: Vec<C64> = w.iter().zip(&v).map(|(w, v)| w + v).collect();
    Ok((u, v))
}

/// Header `omega_re omega_im residual`, then `x y u1_re u1_im u2_re u2_im` per vertex.
pub fn write_eigenpair<W: Write>(mut out: W, mesh: &Mesh, dofs: &DofMap, pair: &EigenPair) -> Result<()> {
    let (u, _) = reconstruct_uv(pair, dofs)?;
    if u.len() != 2 * mesh.num_vertices() {
        return Err(Error::DimensionMismatch("eigenpair does not match the mesh".into()));
    }
    writeln!(out, "{:.17e} {:.17e} {:.6e}", pair.omega.re, pair.omega.im, pair.residual)?;
    for (v, pt) in mesh.vertices.iter().enumerate() {
        let (a, b) = (u[2 * v], u[2 * v + 1]);
        writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}", pt.x, pt.y, a.re, a.im, b.re, b.im)?;
    }
    Ok(())
}
