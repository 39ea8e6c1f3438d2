//! JSON configuration for each subcommand. Every field is optional in the file;
//! missing fields take the defaults below, and command-line flags override both.
//!
//! | key | default |
//! |---|---|
//! | `material.mu`, `material.lambda` | 1/16, 1/4 |
//! | `material.rho0`, `material.rho1` | 1, 4 |
//! | `solver.k` | 6 (`solve`), 12 (`study`) |
//! | `solver.krylov_dim` | `max(2k + 10, 30)`, capped at the system size |
//! | `solver.tol` | 1e-9 |
//! | `solver.max_restarts` | 200 |
//! | `solver.shift` | 0 |
//! | `solver.theta_cutoff` | 1e-10 |
//! | `domain` | `unit_square` |
//! | `n0` | 10 |
//! | `levels` (`study`) | `[1, 2, 3, 4]` |
//! | `level` (`solve`) | 1 |
//! | `branches` (`study`) | `[{"real": 0}, {"real": 1}, {"complex": 0}]` |
//! | `tracking` (`study`) | `rank` |
//! | `radius` (`z0`) | 0.5 |
//! | `omega_max`, `step`, `tol` (`z0`) | 6, 0.01, 1e-12 |
//! | `re`, `im`, `nre`, `nim` (`z0` map) | `[0, 6]`, `[-1, 1]`, 300, 100 |

use std::path::{Path, PathBuf};

use elastic_te::arnoldi::SolverOptions;
use elastic_te::assembly::{DensityPair, ElasticParams};
use elastic_te::mesh::Domain;
use elastic_te::study::{BranchSpec, Class, Tracking};
use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DomainName {
    UnitSquare,
    LShape,
    Disk,
}

impl From<DomainName> for Domain {
    fn from(d: DomainName) -> Self {
        match d {
            DomainName::UnitSquare => Domain::UnitSquare,
            DomainName::LShape => Domain::LShape,
            DomainName::Disk => Domain::Disk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
    pub rho0: f64,
    pub rho1: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            mu: 1.0 / 16.0,
            lambda: 0.25,
            rho0: 1.0,
            rho1: 4.0,
        }
    }
}

impl Material {
    pub fn params(&self) -> Result<(ElasticParams, DensityPair), CliError> {
        Ok((ElasticParams::new(self.mu, self.lambda)?, DensityPair::new(self.rho0, self.rho1)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub k: usize,
    pub krylov_dim: Option<usize>,
    pub tol: f64,
    pub max_restarts: usize,
    pub shift: f64,
    pub theta_cutoff: f64,
}

impl Solver {
    fn with_k(k: usize) -> Self {
        let d = SolverOptions::with_k(k);
        Self {
            k,
            krylov_dim: d.m,
            tol: d.tol,
            max_restarts: d.max_restarts,
            shift: d.shift,
            theta_cutoff: d.theta_cutoff,
        }
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            k: self.k,
            m: self.krylov_dim,
            tol: self.tol,
            max_restarts: self.max_restarts,
            theta_cutoff: self.theta_cutoff,
            shift: self.shift,
        }
    }
}

impl Default for Solver {
    fn default() -> Self {
        Self::with_k(6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub domain: DomainName,
    pub n: usize,
    /// Writes levels `1..=levels`; level 1 is the unrefined mesh.
    pub levels: usize,
    pub out: PathBuf,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            domain: DomainName::UnitSquare,
            n: 10,
            levels: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub domain: DomainName,
    pub n0: usize,
    pub level: usize,
    pub material: Material,
    pub solver: Solver,
    /// Number of eigenpairs written as eigenfunction files.
    pub export: usize,
    pub out: PathBuf,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            domain: DomainName::UnitSquare,
            n0: 10,
            level: 1,
            material: Material::default(),
            solver: Solver::default(),
            export: 2,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Branch {
    Real(usize),
    Complex(usize),
    /// `[re, im]`
    Target([f64; 2]),
}

impl From<Branch> for BranchSpec {
    fn from(b: Branch) -> Self {
        match b {
            Branch::Real(index) => BranchSpec::Rank { class: Class::Real, index },
            Branch::Complex(index) => BranchSpec::Rank { class: Class::Complex, index },
            Branch::Target([re, im]) => BranchSpec::Target { omega: C64::new(re, im) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TrackingName {
    Rank,
    Nearest,
}

impl From<TrackingName> for Tracking {
    fn from(t: TrackingName) -> Self {
        match t {
            TrackingName::Rank => Tracking::Rank,
            TrackingName::Nearest => Tracking::Nearest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyFile {
    pub domain: DomainName,
    pub n0: usize,
    pub levels: Vec<usize>,
    pub material: Material,
    pub solver: Solver,
    pub branches: Vec<Branch>,
    pub tracking: TrackingName,
    pub out: PathBuf,
}

impl Default for StudyFile {
    fn default() -> Self {
        Self {
            domain: DomainName::UnitSquare,
            n0: 10,
            levels: vec![1, 2, 3, 4],
            material: Material::default(),
            solver: Solver::with_k(12),
            branches: vec![Branch::Real(0), Branch::Real(1), Branch::Complex(0)],
            tracking: TrackingName::Rank,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Z0Mode {
    Roots,
    Map,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Z0Config {
    pub material: Material,
    pub radius: f64,
    pub mode: Z0Mode,
    pub omega_max: f64,
    pub step: f64,
    pub tol: f64,
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub nre: usize,
    pub nim: usize,
    pub out: PathBuf,
}

impl Default for Z0Config {
    fn default() -> Self {
        Self {
            material: Material::default(),
            radius: 0.5,
            mode: Z0Mode::Roots,
            omega_max: 6.0,
            step: 0.01,
            tol: 1e-12,
            re: [0.0, 6.0],
            im: [-1.0, 1.0],
            nre: 300,
            nim: 100,
            out: PathBuf::from("out"),
        }
    }
}

/// Reads a config file. A run manifest is accepted too, in which case its
/// resolved `config` is used.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("subcommand") && map.contains_key("config") => {
            map.remove("config").unwrap()
        }
        other => other,
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        CliError::Config(format!("{}: at `{key}`: {}", path.display(), e.inner()))
    })
}
