//! Local and global matrices of the mixed Galerkin system for the lowest-order
//! vector Lagrange space.
//!
//! Unknowns are `x = [w; p]` with `w` in the interior space (dimension `N₀`) and
//! `p` in the full space (dimension `N`). Test rows are ordered
//! `[φ ∈ V_h (N rows); φ ∈ V_h⁰ (N₀ rows)]`:
//!
//! ```text
//! A = | K_{N×N₀}   M^{ρ₀−ρ₁}_{N×N} |      B = | M^{ρ₀}_{N×N₀}   0              |
//!     | 0          K_{N₀×N}        |          | 0               M^{ρ₁}_{N₀×N}  |
//! ```
//!
//! where `K` carries `a(w, φ) = ∫ 2μ ε(w):ε(φ) + λ (∇·w)(∇·φ)` and `K_{N₀×N}` is
//! the transpose of `K_{N×N₀}`.

use crate::error::{Error, Result};
use crate::lu::{sparse_lu_factor, Factorization};
use crate::mesh::{signed_area2, Mesh, Point2};
use crate::par::Exec;
use crate::sparse::SparseMatrix;

/// Lamé parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    pub mu: f64,
    pub lambda: f64,
}

impl ElasticParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let p = Self { mu, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.lambda.is_finite()) || self.mu <= 0.0 || self.lambda + self.mu <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Lamé parameters need mu > 0 and lambda + mu > 0 (got mu = {}, lambda = {})",
                self.mu, self.lambda
            )));
        }
        Ok(())
    }

    /// P-wave modulus `2μ + λ`.
    pub fn p_modulus(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }
}

/// Constant mass densities of the background (`rho0`) and the scatterer (`rho1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPair {
    pub rho0: f64,
    pub rho1: f64,
}

impl DensityPair {
    pub fn new(rho0: f64, rho1: f64) -> Result<Self> {
        let d = Self { rho0, rho1 };
        d.validate()?;
        Ok(d)
    }

    /// Rejects non-positive or equal densities and warns when the pair is not
    /// "non-intersecting" (`ρ₀ ≤ 1 ≤ ρ₁` or `ρ₁ ≤ 1 ≤ ρ₀`).
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0.is_finite() && self.rho1.is_finite()) || self.rho0 <= 0.0 || self.rho1 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "densities must be positive (got rho0 = {}, rho1 = {})",
                self.rho0, self.rho1
            )));
        }
        if self.rho0 == self.rho1 {
            return Err(Error::InvalidArgument("rho0 and rho1 must differ".into()));
        }
        if !self.is_non_intersecting() {
            log::warn!(
                "densities rho0 = {}, rho1 = {} are not non-intersecting; discrete well-posedness is not guaranteed",
                self.rho0,
                self.rho1
            );
        }
        Ok(())
    }

    pub fn is_non_intersecting(&self) -> bool {
        (self.rho0 <= 1.0 && 1.0 <= self.rho1) || (self.rho1 <= 1.0 && 1.0 <= self.rho0)
    }

    pub fn contrast(&self) -> f64 {
        self.rho0 - self.rho1
    }
}

/// A mass density, either constant or a field evaluated at element centroids.
#[derive(Debug, Clone, Copy)]
pub enum Density {
    Constant(f64),
    Field(fn(Point2) -> f64),
}

impl Density {
    fn at_centroid(&self, p: &[Point2; 3]) -> f64 {
        match *self {
            Density::Constant(r) => r,
            Density::Field(f) => f(Point2::new((p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum OperatorKind {
    Stiffness(ElasticParams),
    Mass(Density),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// All vector dofs (`V_h`).
    All,
    /// Dofs of interior vertices (`V_h⁰`).
    Interior,
}

/// Vector dof bookkeeping. Dof `2v` / `2v+1` is the x / y component at vertex `v`;
/// interior dofs are numbered the same way over interior vertices in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_all: usize,
    interior_to_all: Vec<usize>,
    all_to_interior: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mask = mesh.boundary_mask();
        let n_all = 2 * mesh.num_vertices();
        let mut interior_to_all = Vec::new();
        let mut all_to_interior = vec![None; n_all];
        for (v, &on_boundary) in mask.iter().enumerate() {
            if !on_boundary {
                for c in 0..2 {
                    all_to_interior[2 * v + c] = Some(interior_to_all.len());
                    interior_to_all.push(2 * v + c);
                }
            }
        }
        Self {
            n_all,
            interior_to_all,
            all_to_interior,
        }
    }

    /// `N`
    pub fn n_all(&self) -> usize {
        self.n_all
    }

    /// `N₀`
    pub fn n_interior(&self) -> usize {
        self.interior_to_all.len()
    }

    pub fn interior_to_all(&self) -> &[usize] {
        &self.interior_to_all
    }

    pub fn to_interior(&self, dof: usize) -> Option<usize> {
        self.all_to_interior[dof]
    }

    pub fn dofs(&self, space: Space) -> Vec<usize> {
        match space {
            Space::All => (0..self.n_all).collect(),
            Space::Interior => self.interior_to_all.clone(),
        }
    }

    /// Zero-extends an interior field to all dofs.
    pub fn extend<T: Copy + Default>(&self, interior: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); self.n_all];
        for (i, &g) in self.interior_to_all.iter().enumerate() {
            out[g] = interior[i];
        }
        out
    }

    /// Restricts an all-dof field to the interior dofs.
    pub fn restrict<T: Copy>(&self, all: &[T]) -> Vec<T> {
        self.interior_to_all.iter().map(|&g| all[g]).collect()
    }
}

/// Gradients of the barycentric coordinates and the triangle area.
fn p1_gradients(p: &[Point2; 3]) -> Result<([[f64; 2]; 3], f64)> {
    let d = signed_area2(p[0], p[1], p[2]);
    let scale = p[0].dist(p[1]).max(p[1].dist(p[2])).max(p[2].dist(p[0]));
    if !(d > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle { index: usize::MAX, area: 0.5 * d });
    }
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j].y - p[k].y) / d, (p[k].x - p[j].x) / d];
    }
    Ok((g, 0.5 * d))
}

/// Element stiffness of `a(·,·)` in dof order `(v₁x, v₁y, v₂x, v₂y, v₃x, v₃y)`.
pub fn local_stiffness(p: &[Point2; 3], params: &ElasticParams) -> Result<[[f64; 6]; 6]> {
    let (g, area) = p1_gradients(p)?;
    // Voigt strain-displacement rows: ε_xx, ε_yy, γ_xy.
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        b[0][2 * i] = g[i][0];
        b[1][2 * i + 1] = g[i][1];
        b[2][2 * i] = g[i][1];
        b[2][2 * i + 1] = g[i][0];
    }
    let (mu, lam) = (params.mu, params.lambda);
    let d = [[lam + 2.0 * mu, lam, 0.0], [lam, lam + 2.0 * mu, 0.0], [0.0, 0.0, mu]];
    let mut k = [[0.0; 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            let mut s = 0.0;
            for a in 0..3 {
                for e in 0..3 {
                    s += b[a][r] * d[a][e] * b[e][c];
                }
            }
            k[r][c] = area * s;
        }
    }
    Ok(k)
}

/// Element mass `ρ |T|/12 [[2,1,1],[1,2,1],[1,1,2]]` per component.
pub fn local_mass(p: &[Point2; 3], rho: f64) -> Result<[[f64; 6]; 6]> {
    let (_, area) = p1_gradients(p)?;
    let mut m = [[0.0; 6]; 6];
    let s = rho * area / 12.0;
    for i in 0..3 {
        for j in 0..3 {
            let v = if i == j { 2.0 * s } else { s };
            m[2 * i][2 * j] = v;
            m[2 * i + 1][2 * j + 1] = v;
        }
    }
    Ok(m)
}

fn element_matrices(mesh: &Mesh, kind: &OperatorKind, exec: Exec, order: &[usize]) -> Result<Vec<[[f64; 6]; 6]>> {
    exec.map(order, |&t| {
        let p = mesh.triangle_points(t);
        let m = match kind {
            OperatorKind::Stiffness(params) => local_stiffness(&p, params),
            OperatorKind::Mass(rho) => local_mass(&p, rho.at_centroid(&p)),
        };
        m.map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { index: t, area },
            other => other,
        })
    })
    .into_iter()
    .collect()
}

/// Global matrix of `kind`, restricted row-wise to `test` dofs and column-wise to `trial` dofs.
pub fn assemble_operator(mesh: &Mesh, kind: OperatorKind, test: Space, trial: Space) -> Result<SparseMatrix> {
    let order: Vec<usize> = (0..mesh.num_triangles()).collect();
    assemble_operator_ordered(mesh, kind, test, trial, &order, Exec::default())
}

/// As [`assemble_operator`], visiting elements in `order` with the given execution policy.
pub fn assemble_operator_ordered(
    mesh: &Mesh,
    kind: OperatorKind,
    test: Space,
    trial: Space,
    order: &[usize],
    exec: Exec,
) -> Result<SparseMatrix> {
    let dofs = DofMap::new(mesh);
    let locals = element_matrices(mesh, &kind, exec, order)?;
    let map = |space: Space, g: usize| match space {
        Space::All => Some(g),
        Space::Interior => dofs.to_interior(g),
    };
    let mut triplets = Vec::with_capacity(36 * order.len());
    for (&t, local) in order.iter().zip(&locals) {
        let tri = mesh.triangles[t];
        let idx = [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1];
        for r in 0..6 {
            let Some(row) = map(test, idx[r]) else { continue };
            for c in 0..6 {
                if let Some(col) = map(trial, idx[c]) {
                    triplets.push((row, col, local[r][c]));
                }
            }
        }
    }
    let size = |s: Space| match s {
        Space::All => dofs.n_all(),
        Space::Interior => dofs.n_interior(),
    };
    SparseMatrix::from_triplets(size(test), size(trial), &triplets)
}

/// The discrete mixed eigenproblem `A x = ω² B x`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub dof_map: DofMap,
    /// Stiffness `K_{N×N₀}` (test all, trial interior).
    pub stiffness: SparseMatrix,
    pub params: ElasticParams,
    pub densities: DensityPair,
}

impl BlockSystem {
    /// Size of the `w` block (`N₀`).
    pub fn n_w(&self) -> usize {
        self.dof_map.n_interior()
    }

    /// Size of the `p` block (`N`).
    pub fn n_p(&self) -> usize {
        self.dof_map.n_all()
    }

    pub fn dim(&self) -> usize {
        self.n_w() + self.n_p()
    }

    /// Block `(row_block, col_block)` of `A` or `B` as a standalone matrix.
    pub fn block(&self, of_b: bool, row_block: usize, col_block: usize) -> SparseMatrix {
        let (n, n0) = (self.n_p(), self.n_w());
        let rows: Vec<usize> = if row_block == 0 { (0..n).collect() } else { (n..n + n0).collect() };
        let cols: Vec<usize> = if col_block == 0 { (0..n0).collect() } else { (n0..n0 + n).collect() };
        let m = if of_b { &self.b } else { &self.a };
        m.select(&rows, &cols)
    }
}

pub fn assemble_block_system(mesh: &Mesh, params: ElasticParams, densities: DensityPair) -> Result<BlockSystem> {
    let order: Vec<usize> = (0..mesh.num_triangles()).collect();
    assemble_block_system_ordered(mesh, params, densities, &order, Exec::default())
}

/// As [`assemble_block_system`], visiting elements in `order`.
pub fn assemble_block_system_ordered(
    mesh: &Mesh,
    params: ElasticParams,
    densities: DensityPair,
    order: &[usize],
    exec: Exec,
) -> Result<BlockSystem> {
    params.validate()?;
    densities.validate()?;
    let dof_map = DofMap::new(mesh);
    let (n, n0) = (dof_map.n_all(), dof_map.n_interior());
    if n0 == 0 {
        return Err(Error::InvalidArgument("mesh has no interior vertices".into()));
    }
    let stiff = OperatorKind::Stiffness(params);
    let k = assemble_operator_ordered(mesh, stiff, Space::All, Space::Interior, order, exec)?;
    let kt = assemble_operator_ordered(mesh, stiff, Space::Interior, Space::All, order, exec)?;
    // Mass with unit density, scaled per block: exact for constant densities.
    let m_all = assemble_operator_ordered(mesh, OperatorKind::Mass(Density::Constant(1.0)), Space::All, Space::All, order, exec)?;
    let m_contrast = m_all.scale(densities.contrast());
    let dofs_all: Vec<usize> = (0..n).collect();
    let interior = dof_map.interior_to_all().to_vec();
    let m0 = m_all.select(&dofs_all, &interior).scale(densities.rho0);
    let m1 = m_all.select(&interior, &dofs_all).scale(densities.rho1);
    let a = SparseMatrix::from_blocks(&[n, n0], &[n0, n], &[&[Some(&k), Some(&m_contrast)], &[None, Some(&kt)]])?;
    let b = SparseMatrix::from_blocks(&[n, n0], &[n0, n], &[&[Some(&m0), None], &[None, Some(&m1)]])?;
    Ok(BlockSystem {
        a,
        b,
        dof_map,
        stiffness: k,
        params,
        densities,
    })
}

/// Discrete solution operator `T_h : (f, g) ↦ (w_h, p_h)`, i.e. `A⁻¹ B [f; g]`.
pub struct SourceSolver<'a> {
    system: &'a BlockSystem,
    lu: Factorization,
}

impl<'a> SourceSolver<'a> {
    pub fn new(system: &'a BlockSystem) -> Result<Self> {
        Ok(Self {
            system,
            lu: sparse_lu_factor(&system.a)?,
        })
    }

    /// `f` lives on interior dofs (length `N₀`), `g` on all dofs (length `N`).
    pub fn solve(&self, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (n0, n) = (self.system.n_w(), self.system.n_p());
        if f.len() != n0 || g.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "source fields must have lengths ({n0}, {n}), got ({}, {})",
                f.len(),
                g.len()
            )));
        }
        let mut fg = f.to_vec();
        fg.extend_from_slice(g);
        let mut x = self.system.b.mul_vec(&fg);
        self.lu.solve_in_place(&mut x);
        let p = x.split_off(n0);
        Ok((x, p))
    }
}

/// One-shot [`SourceSolver`].
pub fn solve_source_problem(system: &BlockSystem, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    SourceSolver::new(system)?.solve(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_mesh, Domain};

    fn reference() -> [Point2; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    #[test]
    fn rigid_modes_in_kernel() {
        let p = [Point2::new(0.1, 0.2), Point2::new(0.9, 0.35), Point2::new(0.3, 0.8)];
        let k = local_stiffness(&p, &ElasticParams { mu: 0.7, lambda: -0.3 }).unwrap();
        let translation = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let rotation: Vec<f64> = p.iter().flat_map(|q| [-q.y, q.x]).collect();
        for v in [&translation[..], &rotation[..]] {
            for row in &k {
                let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                assert!(s.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reference_stiffness_diagonal() {
        // φ₁ = 1 - x - y: ∇(φ₁, 0) = [[-1, -1], [0, 0]], ε:ε = 1.5, area 1/2.
        let k = local_stiffness(&reference(), &ElasticParams { mu: 1.0, lambda: 0.0 }).unwrap();
        assert!((k[0][0] - 1.5).abs() < 1e-15);
        assert!((k[2][2] - 1.0).abs() < 1e-15);
        assert!((k[3][3] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_reference_and_sums() {
        let m = local_mass(&reference(), 1.0).unwrap();
        assert!((m[0][0] - 2.0 / 24.0).abs() < 1e-16);
        assert!((m[0][2] - 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(m[0][1], 0.0);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 2.0 * 0.5).abs() < 1e-15);
        let zero = local_mass(&reference(), 0.0).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_rejected() {
        let p = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)];
        assert!(local_stiffness(&p, &ElasticParams { mu: 1.0, lambda: 1.0 }).is_err());
        assert!(local_mass(&p, 1.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ElasticParams::new(0.0, 1.0).is_err());
        assert!(ElasticParams::new(1.0, -1.0).is_err());
        assert!(ElasticParams::new(1.0, -0.5).is_ok());
        assert!(DensityPair::new(1.0, 1.0).is_err());
        assert!(DensityPair::new(-1.0, 2.0).is_err());
        assert!(DensityPair::new(1.0, 4.0).unwrap().is_non_intersecting());
        assert!(!DensityPair::new(2.0, 4.0).unwrap().is_non_intersecting());
    }

    #[test]
    fn block_sizes_n2() {
        let mesh = make_mesh(Domain::UnitSquare, 2).unwrap();
        let sys = assemble_block_system(&mesh, ElasticParams::new(1.0 / 16.0, 0.25).unwrap(), DensityPair::new(1.0, 4.0).unwrap()).unwrap();
        assert_eq!((sys.n_p(), sys.n_w(), sys.dim()), (18, 2, 20));
        assert_eq!((sys.a.nrows(), sys.a.ncols()), (20, 20));
    }

    #[test]
    fn dof_map_round_trip() {
        let mesh = make_mesh(Domain::UnitSquare, 3).unwrap();
        let d = DofMap::new(&mesh);
        assert_eq!(d.n_all(), 32);
        assert_eq!(d.n_interior(), 8);
        let x: Vec<f64> = (0..8).map(|i| i as f64 + 1.0).collect();
        assert_eq!(d.restrict(&d.extend(&x)), x);
        for (i, &g) in d.interior_to_all().iter().enumerate() {
            assert_eq!(d.to_interior(g), Some(i));
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let mesh = make_mesh(Domain::UnitSquare, 4).unwrap();
        let sys = assemble_block_system(&mesh, ElasticParams::new(1.0 / 16.0, 0.25).unwrap(), DensityPair::new(1.0, 4.0).unwrap()).unwrap();
        let (w, p) = solve_source_problem(&sys, &vec![0.0; sys.n_w()], &vec![0.0; sys.n_p()]).unwrap();
        assert!(w.iter().chain(&p).all(|&v| v == 0.0));
        assert!(solve_source_problem(&sys, &[0.0], &[0.0]).is_err());
    }
}
