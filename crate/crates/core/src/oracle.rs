//! Analytic dispersion relation for radially symmetric transmission
//! eigenfunctions on a disk: Bessel series, the determinant `Z₀(ω)`, real
//! roots, and magnitude maps over the complex plane.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::assembly::{DensityPair, ElasticParams};
use crate::ddouble::Cdd;
use crate::error::{Error, Result};
use crate::mesh::DISK_RADIUS;
use crate::par::Exec;

/// Largest |z| accepted by the series evaluation.
pub const BESSEL_RANGE: f64 = 40.0;

/// Default relative truncation threshold of the series.
pub const SERIES_THRESHOLD: f64 = 1e-20;

fn check_range(z: C64) -> Result<()> {
    let modulus = z.norm();
    if !(modulus <= BESSEL_RANGE) {
        return Err(Error::OutOfRange {
            modulus,
            limit: BESSEL_RANGE,
        });
    }
    Ok(())
}

/// Sums `Σ_m weight(m) · c_m` with `c_0 = lead`, `c_m = c_{m-1} · q / (m (m + ν))`.
fn series(lead: Cdd, q: Cdd, order: u32, z_norm: f64, threshold: f64, weight: impl Fn(u64) -> f64) -> Cdd {
    let mut c = lead;
    let mut sum = c.mul_f64(weight(0));
    // Terms grow until m ≈ |z|/2; only test for truncation past the peak.
    let peak = (z_norm / 2.0).ceil() as u64;
    for m in 1u64.. {
        c = (c * q).div_f64((m * (m + order as u64)) as f64);
        let term = c.mul_f64(weight(m));
        sum = sum + term;
        if m > peak && term.norm() <= threshold * sum.norm() {
            break;
        }
        if m > 10_000 {
            break;
        }
    }
    sum
}

fn half_and_q(z: C64) -> (Cdd, Cdd) {
    let half = Cdd::from_c64(z * 0.5);
    (half, -(half * half))
}

pub(crate) fn bessel_j_dd(order: u32, z: C64, threshold: f64) -> Cdd {
    if z == C64::new(0.0, 0.0) {
        return if order == 0 { Cdd::from_c64(C64::new(1.0, 0.0)) } else { Cdd::ZERO };
    }
    let (half, q) = half_and_q(z);
    let mut lead = Cdd::from_c64(C64::new(1.0, 0.0));
    for j in 1..=order {
        lead = (lead * half).div_f64(j as f64);
    }
    series(lead, q, order, z.norm(), threshold, |_| 1.0)
}

pub(crate) fn bessel_j1_prime_dd(z: C64, threshold: f64) -> Cdd {
    let (_, q) = half_and_q(z);
    // J₁'(z) = Σ (2m+1)/2 · (−1)^m (z/2)^{2m} / (m! (m+1)!)
    series(Cdd::from_c64(C64::new(1.0, 0.0)), q, 1, z.norm(), threshold, |m| (2 * m + 1) as f64 * 0.5)
}

/// `J_ν(z)` for integer order by its power series, relative error about 1e-15
/// for `|z| ≤ 40`.
pub fn bessel_j(order: u32, z: C64) -> Result<C64> {
    bessel_j_with_threshold(order, z, SERIES_THRESHOLD)
}

/// [`bessel_j`] with an explicit relative truncation threshold.
pub fn bessel_j_with_threshold(order: u32, z: C64, threshold: f64) -> Result<C64> {
    check_range(z)?;
    Ok(bessel_j_dd(order, z, threshold).to_c64())
}

/// `J₁'(z)`, summed from the differentiated series; `J₁'(0) = 1/2`.
pub fn bessel_j1_prime(z: C64) -> Result<C64> {
    check_range(z)?;
    Ok(bessel_j1_prime_dd(z, SERIES_THRESHOLD).to_c64())
}

/// Radially symmetric transmission problem on a disk of radius `radius`.
/// Densities may coincide here (the determinant then vanishes identically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskProblem {
    pub params: ElasticParams,
    pub rho0: f64,
    pub rho1: f64,
    pub radius: f64,
}

impl DiskProblem {
    pub fn new(params: ElasticParams, rho0: f64, rho1: f64, radius: f64) -> Result<Self> {
        params.validate()?;
        if !(rho0 > 0.0 && rho1 > 0.0 && rho0.is_finite() && rho1.is_finite()) {
            return Err(Error::InvalidArgument("densities must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if params.p_modulus() <= 0.0 {
            return Err(Error::InvalidArgument("need 2 mu + lambda > 0".into()));
        }
        Ok(Self {
            params,
            rho0,
            rho1,
            radius,
        })
    }

    /// The disk used by the finite element meshes.
    pub fn unit_disk(params: ElasticParams, densities: DensityPair) -> Result<Self> {
        Self::new(params, densities.rho0, densities.rho1, DISK_RADIUS)
    }

    /// `(a₁, a₂) = ω (√(ρ₀/(2μ+λ)), √(ρ₁/(2μ+λ)))`
    pub fn wavenumbers(&self, omega: C64) -> (C64, C64) {
        let m = self.params.p_modulus();
        (omega * (self.rho0 / m).sqrt(), omega * (self.rho1 / m).sqrt())
    }

    /// The same problem with ρ₀ and ρ₁ exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            rho0: self.rho1,
            rho1: self.rho0,
            ..*self
        }
    }

    /// Largest |ω| for which both Bessel arguments stay in range.
    pub fn omega_limit(&self) -> f64 {
        let c = (self.rho0.max(self.rho1) / self.params.p_modulus()).sqrt() * self.radius;
        BESSEL_RANGE / c
    }
}

/// `Z₀(ω) = J₁(a₁R)·a₂J₁'(a₂R) − J₁(a₂R)·a₁J₁'(a₁R)`
pub fn z0(omega: C64, problem: &DiskProblem) -> Result<C64> {
    let (a1, a2) = problem.wavenumbers(omega);
    let r = problem.radius;
    check_range(a1 * r)?;
    check_range(a2 * r)?;
    let t = SERIES_THRESHOLD;
    let j1a = bessel_j_dd(1, a1 * r, t);
    let j1b = bessel_j_dd(1, a2 * r, t);
    let da = bessel_j1_prime_dd(a1 * r, t);
    let db = bessel_j1_prime_dd(a2 * r, t);
    let (a1d, a2d) = (Cdd::from_c64(a1), Cdd::from_c64(a2));
    Ok((j1a * (a2d * db) - j1b * (a1d * da)).to_c64())
}

/// The constant `C = J₁(a₁R)/J₁(a₂R)` matching the two radial profiles at the
/// boundary; `None` when `J₁(a₂R)` vanishes.
pub fn matching_constant(omega: C64, problem: &DiskProblem) -> Result<Option<C64>> {
    let (a1, a2) = problem.wavenumbers(omega);
    let num = bessel_j(1, a1 * problem.radius)?;
    let den = bessel_j(1, a2 * problem.radius)?;
    Ok((den.norm() > 0.0).then(|| num / den))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealRoots {
    /// Isolated roots in ascending order.
    Isolated(Vec<f64>),
    /// `Z₀` vanished identically on the scan interval.
    Degenerate,
}

impl RealRoots {
    pub fn roots(&self) -> &[f64] {
        match self {
            RealRoots::Isolated(r) => r,
            RealRoots::Degenerate => &[],
        }
    }
}

fn z0_real(omega: f64, problem: &DiskProblem) -> Result<f64> {
    Ok(z0(C64::new(omega, 0.0), problem)?.re)
}

/// Sign-change scan of `Z₀` on `(0, omega_max]` with bisection to `tol`.
pub fn find_real_roots(problem: &DiskProblem, omega_max: f64, step: f64, tol: f64) -> Result<RealRoots> {
    if !(step > 0.0 && tol > 0.0 && omega_max > 0.0) {
        return Err(Error::InvalidArgument("omega_max, step and tol must be positive".into()));
    }
    let n = (omega_max / step).ceil() as usize;
    let grid: Vec<f64> = (1..=n).map(|i| (i as f64 * step).min(omega_max)).collect();
    let values = grid.iter().map(|&w| z0_real(w, problem)).collect::<Result<Vec<f64>>>()?;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(RealRoots::Degenerate);
    }
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let mut flo = values[i];
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = z0_real(mid, problem)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    Ok(RealRoots::Isolated(roots))
}

/// `|Z₀|` on a rectangular grid; values are row-major with `im` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct Z0Map {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: Vec<f64>,
}

impl Z0Map {
    pub fn get(&self, i_im: usize, j_re: usize) -> f64 {
        self.values[i_im * self.re.len() + j_re]
    }

    /// CSV with header `re,im,absz0`, real index fastest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re,im,absz0")?;
        for (i, &y) in self.im.iter().enumerate() {
            for (j, &x) in self.re.iter().enumerate() {
                writeln!(out, "{x:.12e},{y:.12e},{:.12e}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect()
}

/// `resolution = (points along Re, points along Im)`.
pub fn z0_magnitude_map(
    problem: &DiskProblem,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
    exec: Exec,
) -> Result<Z0Map> {
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(Error::InvalidArgument("map resolution must be positive".into()));
    }
    if !(re_range.0 <= re_range.1 && im_range.0 <= im_range.1) {
        return Err(Error::InvalidArgument("map ranges must be ascending".into()));
    }
    let limit = problem.omega_limit();
    let corner = re_range.0.abs().max(re_range.1.abs()).hypot(im_range.0.abs().max(im_range.1.abs()));
    if corner > limit {
        return Err(Error::OutOfRange {
            modulus: corner,
            limit,
        });
    }
    let re = linspace(re_range, resolution.0);
    let im = linspace(im_range, resolution.1);
    let nre = re.len();
    let values = exec
        .map_range(nre * im.len(), |k| z0(C64::new(re[k % nre], im[k / nre]), problem).map(|z| z.norm()))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(Z0Map { re, im, values })
}

/// One root per line, 12 significant digits.
pub fn write_roots<W: Write>(mut out: W, roots: &[f64]) -> std::io::Result<()> {
    for r in roots {
        writeln!(out, "{r:.11e}")?;
    }
    Ok(())
}
