//! Structured triangulations of the three test domains and uniform red refinement.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Radius of the disk domain.
pub const DISK_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
pub fn signed_area2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    UnitSquare,
    LShape,
    Disk,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "l_shape",
            Domain::Disk => "disk",
        }
    }

    /// Exact area of the continuous domain.
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 0.75,
            Domain::Disk => PI * DISK_RADIUS * DISK_RADIUS,
        }
    }

    pub fn is_polygonal(self) -> bool {
        !matches!(self, Domain::Disk)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" | "square" => Ok(Domain::UnitSquare),
            "l_shape" | "lshape" => Ok(Domain::LShape),
            "disk" | "circle" => Ok(Domain::Disk),
            other => Err(Error::InvalidArgument(format!(
                "unknown domain `{other}` (expected unit_square, l_shape or disk)"
            ))),
        }
    }
}

/// A conforming, counter-clockwise oriented triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    /// Sorted indices of vertices on the boundary.
    pub boundary_vertices: Vec<usize>,
    /// Boundary edges, oriented as in their (unique) triangle.
    pub boundary_edges: Vec<[usize; 2]>,
    pub domain: Domain,
    /// Number of uniform refinements applied to the generated mesh.
    pub level: usize,
    /// Longest edge.
    pub h: f64,
    /// Subdivisions per unit length of the generated (level 0) mesh.
    pub base_n: usize,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Nominal grid spacing `1 / (n · 2^level)`.
    pub fn nominal_h(&self) -> f64 {
        1.0 / (self.base_n as f64 * (1u64 << self.level) as f64)
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area2(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Per-vertex boundary flag.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &v in &self.boundary_vertices {
            mask[v] = true;
        }
        mask
    }

    /// All undirected edges with their incident-triangle counts, in first-seen order.
    pub fn edges(&self) -> Vec<([usize; 2], usize)> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out: Vec<([usize; 2], usize)> = Vec::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    Some(&i) => out[i].1 += 1,
                    None => {
                        index.insert(key, out.len());
                        out.push(([key.0, key.1], 1));
                    }
                }
            }
        }
        out
    }

    /// Writes the plain-text mesh export (`nv nt nb`, vertices, triangles).
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_vertices.len()
        )?;
        let mask = self.boundary_mask();
        for (p, b) in self.vertices.iter().zip(&mask) {
            writeln!(w, "{:.17e} {:.17e} {}", p.x, p.y, u8::from(*b))?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    fn from_parts(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        domain: Domain,
        level: usize,
        base_n: usize,
    ) -> Self {
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary_vertices: Vec::new(),
            boundary_edges: Vec::new(),
            domain,
            level,
            h: 0.0,
            base_n,
        };
        mesh.rebuild_topology();
        mesh
    }

    fn rebuild_topology(&mut self) {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut edges = Vec::new();
        let mut on_boundary = vec![false; self.vertices.len()];
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                h = h.max(self.vertices[a].dist(self.vertices[b]));
                if count[&(a.min(b), a.max(b))] == 1 {
                    edges.push([a, b]);
                    on_boundary[a] = true;
                    on_boundary[b] = true;
                }
            }
        }
        self.boundary_edges = edges;
        self.boundary_vertices = (0..self.vertices.len()).filter(|&v| on_boundary[v]).collect();
        self.h = h;
    }
}

/// Builds the level-0 mesh of `domain` with `n` subdivisions per unit length.
///
/// Square and L-shape use an `n × n` tensor grid whose cells are split along the
/// lower-left to upper-right diagonal; vertices are numbered lexicographically by
/// `(y, x)`. The disk of radius 1/2 is triangulated by concentric rings
/// (6k vertices on ring k) with its outer ring exactly on the circle.
pub fn make_mesh(domain: Domain, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("subdivision count n must be >= 1".into()));
    }
    match domain {
        Domain::UnitSquare => Ok(grid_mesh(n, |_, _| true, Domain::UnitSquare)),
        Domain::LShape => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "l_shape needs an even n so that (1/2, 1/2) is a vertex (got n = {n})"
                )));
            }
            let half = n / 2;
            Ok(grid_mesh(n, |i, j| i < half || j < half, Domain::LShape))
        }
        Domain::Disk => Ok(disk_mesh(n)),
    }
}

fn grid_mesh(n: usize, keep_cell: impl Fn(usize, usize) -> bool, domain: Domain) -> Mesh {
    let stride = n + 1;
    let mut used = vec![false; stride * stride];
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if keep_cell(i, j) {
                let a = j * stride + i;
                let quad = [a, a + 1, a + stride + 1, a + stride];
                for &v in &quad {
                    used[v] = true;
                }
                cells.push(quad);
            }
        }
    }
    let mut new_index = vec![usize::MAX; stride * stride];
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let g = j * stride + i;
            if used[g] {
                new_index[g] = vertices.len();
                vertices.push(Point2::new(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells.len());
    for [a, b, c, d] in cells {
        let (a, b, c, d) = (new_index[a], new_index[b], new_index[c], new_index[d]);
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    }
    Mesh::from_parts(vertices, triangles, domain, 0, n)
}

fn disk_mesh(n: usize) -> Mesh {
    let rings = ((DISK_RADIUS * n as f64).round() as usize).max(1);
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        let r = DISK_RADIUS * k as f64 / rings as f64;
        let m = 6 * k;
        for j in 0..m {
            let theta = 2.0 * PI * j as f64 / m as f64;
            vertices.push(Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }
    let mut triangles = Vec::new();
    for k in 1..=rings {
        let outer = ring_start[k];
        let m_out = 6 * k;
        if k == 1 {
            for j in 0..m_out {
                triangles.push([0, outer + j, outer + (j + 1) % m_out]);
            }
            continue;
        }
        let inner = ring_start[k - 1];
        let m_in = 6 * (k - 1);
        // Merge the two rings by angle; advance whichever side has the smaller next angle.
        let (mut i, mut j) = (0usize, 0usize);
        while i < m_in || j < m_out {
            let next_in = (i + 1) as f64 / m_in as f64;
            let next_out = (j + 1) as f64 / m_out as f64;
            let a = inner + i % m_in;
            let b = outer + j % m_out;
            if j < m_out && (i == m_in || next_out <= next_in) {
                triangles.push([a, b, outer + (j + 1) % m_out]);
                j += 1;
            } else {
                triangles.push([a, b, inner + (i + 1) % m_in]);
                i += 1;
            }
        }
    }
    for tri in &mut triangles {
        let [a, b, c] = *tri;
        if signed_area2(vertices[a], vertices[b], vertices[c]) < 0.0 {
            *tri = [a, c, b];
        }
    }
    Mesh::from_parts(vertices, triangles, Domain::Disk, 0, n)
}

/// Red refinement: each triangle is split into four through its edge midpoints.
///
/// Old vertices keep their indices; new midpoints are appended in order of first
/// appearance. On the disk, midpoints of boundary edges are projected radially
/// onto the circle.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let project = mesh.domain == Domain::Disk;
    let boundary: std::collections::HashSet<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .map(|&[a, b]| (a.min(b), a.max(b)))
        .collect();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point2>| -> usize {
        let key = (a.min(b), a.max(b));
        *mids.entry(key).or_insert_with(|| {
            let mut p = vertices[a].midpoint(vertices[b]);
            if project && boundary.contains(&key) {
                let s = DISK_RADIUS / p.norm();
                p = Point2::new(p.x * s, p.y * s);
            }
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Mesh::from_parts(vertices, triangles, mesh.domain, mesh.level + 1, mesh.base_n)
}

/// Applies [`refine_uniform`] `times` times.
pub fn refine_times(mesh: &Mesh, times: usize) -> Mesh {
    let mut m = mesh.clone();
    for _ in 0..times {
        m = refine_uniform(&m);
    }
    m
}

/// Longest edge and smallest interior angle (radians).
pub fn mesh_quality(mesh: &Mesh) -> (f64, f64) {
    let mut min_angle = f64::INFINITY;
    for t in 0..mesh.triangles.len() {
        let p = mesh.triangle_points(t);
        for k in 0..3 {
            let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let (vx, vy) = (c.x - a.x, c.y - a.y);
            let ang = (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy);
            min_angle = min_angle.min(ang);
        }
    }
    (mesh.h, min_angle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_topology(mesh: &Mesh) {
        for t in 0..mesh.num_triangles() {
            assert!(mesh.triangle_area(t) > 0.0, "triangle {t} not ccw");
        }
        let edges = mesh.edges();
        let nb = edges.iter().filter(|(_, c)| *c == 1).count();
        assert!(edges.iter().all(|(_, c)| *c == 1 || *c == 2));
        assert_eq!(nb, mesh.boundary_edges.len());
        if mesh.domain.is_polygonal() {
            let euler = mesh.num_vertices() as i64 - edges.len() as i64 + mesh.num_triangles() as i64;
            assert_eq!(euler, 1);
        }
    }

    #[test]
    fn square_counts() {
        let m = make_mesh(Domain::UnitSquare, 1).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (4, 2));
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
        let m = make_mesh(Domain::UnitSquare, 10).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (121, 200));
        check_topology(&m);
        assert_eq!(m.boundary_vertices.len(), 40);
    }

    #[test]
    fn l_shape_counts_and_validation() {
        let m = make_mesh(Domain::LShape, 2).unwrap();
        assert_eq!(m.num_triangles(), 6);
        assert_eq!(m.num_vertices(), 8);
        check_topology(&m);
        assert!((m.total_area() - 0.75).abs() < 1e-15);
        assert!(make_mesh(Domain::LShape, 3).is_err());
        assert!(make_mesh(Domain::UnitSquare, 0).is_err());
    }

    #[test]
    fn refinement_counts() {
        let m = make_mesh(Domain::UnitSquare, 10).unwrap();
        let r = refine_uniform(&m);
        assert_eq!((r.num_vertices(), r.num_triangles()), (441, 800));
        assert_eq!(r.boundary_edges.len(), 2 * m.boundary_edges.len());
        assert!((r.h - m.h / 2.0).abs() <= 1e-15);
        assert_eq!(&r.vertices[..m.num_vertices()], &m.vertices[..]);
        assert_eq!(r.level, 1);
        check_topology(&r);
    }

    #[test]
    fn disk_boundary_on_circle() {
        let mut m = make_mesh(Domain::Disk, 10).unwrap();
        let mut prev_area = m.total_area();
        for _ in 0..3 {
            check_topology(&m);
            for &v in &m.boundary_vertices {
                assert!((m.vertices[v].norm() - DISK_RADIUS).abs() < 1e-12);
            }
            m = refine_uniform(&m);
            let area = m.total_area();
            assert!(area > prev_area && area < Domain::Disk.area());
            prev_area = area;
        }
    }

    #[test]
    fn quality_of_square() {
        let m = make_mesh(Domain::UnitSquare, 10).unwrap();
        let (h, a) = mesh_quality(&m);
        assert!((h - 2f64.sqrt() / 10.0).abs() < 1e-15);
        assert!((a - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn export_header() {
        let m = make_mesh(Domain::UnitSquare, 2).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("9 8 8"));
        assert_eq!(s.lines().count(), 1 + 9 + 8);
    }
}
