//! Multi-level convergence studies: solve on a sequence of uniformly refined
//! meshes, follow eigenvalue branches across levels and report relative
//! errors and observed orders.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64 as C64;

use crate::assembly::{assemble_block_system_ordered, DensityPair, DofMap, ElasticParams};
use crate::eigensolve::{solve_transmission_eigs, EigenPair, SolverOptions};
use crate::error::{Error, Result};
use crate::mesh::{make_mesh, refine_times, Domain, Mesh};
use crate::par::Exec;

/// `|Im Λ| ≤ REAL_TOL · |Λ|` classifies an eigenvalue as real.
pub const REAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Real,
    Complex,
}

impl Class {
    pub fn of(value: C64) -> Class {
        if value.im.abs() <= REAL_TOL * value.norm() {
            Class::Real
        } else {
            Class::Complex
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Real => "real",
            Class::Complex => "complex",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which eigenvalue a branch follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchSpec {
    /// The `index`-th (0-based) eigenvalue of a class at the first level.
    /// Complex branches follow the `Im ω < 0` member.
    Rank { class: Class, index: usize },
    /// At every level, the eigenvalue of the target's class nearest `omega`.
    Target { omega: C64 },
}

impl BranchSpec {
    pub fn label(&self) -> String {
        match self {
            BranchSpec::Rank { class, index } => format!("{}{}", class.name(), index + 1),
            BranchSpec::Target { omega } if omega.im == 0.0 => format!("near{}", omega.re),
            BranchSpec::Target { omega } => format!("near{}{:+}i", omega.re, omega.im),
        }
    }

    pub fn class(&self) -> Class {
        match self {
            BranchSpec::Rank { class, .. } => *class,
            BranchSpec::Target { omega } => Class::of(*omega),
        }
    }
}

/// How rank branches are continued after the first level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tracking {
    /// Keep the class rank: the i-th real stays the i-th real.
    #[default]
    Rank,
    /// Greedy nearest-neighbour matching to the previous level.
    Nearest,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub domain: Domain,
    pub params: ElasticParams,
    pub densities: DensityPair,
    pub levels: Vec<usize>,
    /// Subdivisions of the level-1 mesh per unit length.
    pub n0: usize,
    pub solver: SolverOptions,
    pub branches: Vec<BranchSpec>,
    pub tracking: Tracking,
    pub exec: Exec,
    pub output_dir: Option<PathBuf>,
}

impl StudyConfig {
    /// Levels 1–4 from `n0 = 10`, tracking the first two real branches and the
    /// first complex branch.
    pub fn new(domain: Domain, params: ElasticParams, densities: DensityPair) -> Self {
        Self {
            domain,
            params,
            densities,
            levels: vec![1, 2, 3, 4],
            n0: 10,
            solver: SolverOptions::with_k(12),
            branches: vec![
                BranchSpec::Rank { class: Class::Real, index: 0 },
                BranchSpec::Rank { class: Class::Real, index: 1 },
                BranchSpec::Rank { class: Class::Complex, index: 0 },
            ],
            tracking: Tracking::Rank,
            exec: Exec::default(),
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.densities.validate()?;
        if self.levels.is_empty() || self.levels.contains(&0) || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "levels must be strictly ascending and start at 1 or above, got {:?}",
                self.levels
            )));
        }
        if self.solver.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidArgument("n0 must be positive".into()));
        }
        Ok(())
    }
}

/// Solution at one refinement level.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub mesh: Mesh,
    pub dof_map: DofMap,
    /// Exactly `k` pairs, sorted by `|ω²|`.
    pub pairs: Vec<EigenPair>,
}

impl LevelResult {
    pub fn omegas(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.omega).collect()
    }

    pub fn dofs(&self) -> usize {
        self.dof_map.n_all() + self.dof_map.n_interior()
    }
}

/// Builds the level-`level` mesh (`n0` subdivisions refined `level − 1` times),
/// assembles and solves for `k` eigenpairs.
pub fn run_level(config: &StudyConfig, level: usize) -> Result<LevelResult> {
    if level == 0 {
        return Err(Error::InvalidArgument("levels are numbered from 1".into()));
    }
    let mesh = refine_times(&make_mesh(config.domain, config.n0)?, level - 1);
    let order: Vec<usize> = (0..mesh.num_triangles()).collect();
    let system = assemble_block_system_ordered(&mesh, config.params, config.densities, &order, config.exec)?;
    let mut pairs = solve_transmission_eigs(&system, &config.solver)?;
    if pairs.len() < config.solver.k {
        return Err(Error::Eigen(format!(
            "only {} finite eigenpairs found, {} requested",
            pairs.len(),
            config.solver.k
        )));
    }
    pairs.truncate(config.solver.k);
    if let Some(bad) = pairs.iter().find(|p| !(p.residual <= config.solver.tol)) {
        return Err(Error::Eigen(format!("eigenpair at omega = {} has residual {:e}", bad.omega, bad.residual)));
    }
    log::info!(
        "level {level}: {} dofs, {} eigenpairs, h = {}",
        system.dim(),
        pairs.len(),
        mesh.nominal_h()
    );
    Ok(LevelResult {
        level,
        h: mesh.nominal_h(),
        dof_map: system.dof_map.clone(),
        mesh,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// `(previous index, current index)`, in order of increasing distance.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_previous: Vec<usize>,
}

impl Matching {
    pub fn partner(&self, previous: usize) -> Option<usize> {
        self.pairs.iter().find(|(p, _)| *p == previous).map(|(_, c)| *c)
    }
}

/// Greedy nearest-neighbour matching in the complex plane; real values only
/// match real values and complex only complex, each value used at most once.
pub fn match_eigenvalues(previous: &[C64], current: &[C64]) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &p) in previous.iter().enumerate() {
        for (j, &c) in current.iter().enumerate() {
            if Class::of(p) == Class::of(c) {
                candidates.push(((p - c).norm(), i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_prev = vec![false; previous.len()];
    let mut used_cur = vec![false; current.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_prev[i] && !used_cur[j] {
            used_prev[i] = true;
            used_cur[j] = true;
            pairs.push((i, j));
        }
    }
    let unmatched_previous = (0..previous.len()).filter(|&i| !used_prev[i]).collect();
    Matching {
        pairs,
        unmatched_previous,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStats {
    /// `E_{i+1} = |Λ_{i+1} − Λ_i| / |Λ_i|`, one per consecutive pair of levels.
    pub errors: Vec<f64>,
    /// `log₂(E_{i+1} / E_{i+2})`; `None` where the ratio is undefined.
    pub orders: Vec<Option<f64>>,
}

/// Relative errors and observed orders of a branch; complex values use the
/// modulus of the difference.
pub fn convergence_statistics(values: &[C64]) -> ConvergenceStats {
    let errors: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm() / w[0].norm()).collect();
    let orders = errors
        .windows(2)
        .map(|e| (e[0] > 0.0 && e[1] > 0.0 && e[0].is_finite() && e[1].is_finite()).then(|| (e[0] / e[1]).log2()))
        .collect();
    ConvergenceStats { errors, orders }
}

/// `fine + (fine − coarse) / (2^p − 1)` for mesh halving.
pub fn richardson(coarse: C64, fine: C64, order: f64) -> C64 {
    fine + (fine - coarse) / (2f64.powf(order) - 1.0)
}

/// Least-squares fit of `Λ(h) = Λ₀ + c·h^p`; returns `Λ₀`. Needs at least two
/// distinct mesh sizes.
pub fn extrapolate(hs: &[f64], values: &[C64], order: f64) -> Result<C64> {
    if hs.len() != values.len() || hs.len() < 2 {
        return Err(Error::InvalidArgument("extrapolation needs matching h and values, at least two".into()));
    }
    let x: Vec<f64> = hs.iter().map(|h| h.powf(order)).collect();
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let det = n * sxx - sx * sx;
    if det.abs() <= 1e-300 {
        return Err(Error::InvalidArgument("extrapolation needs distinct mesh sizes".into()));
    }
    let sy: C64 = values.iter().sum();
    let sxy: C64 = x.iter().zip(values).map(|(a, b)| b * *a).sum();
    Ok((sy * sxx - sxy * sx) / det)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub omega: C64,
    pub rel_error: Option<f64>,
    pub order: Option<f64>,
    pub class: Class,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: String,
    pub class: Class,
    pub rows: Vec<ConvergenceRow>,
}

impl Branch {
    fn from_values(label: String, class: Class, levels: &[(usize, f64)], values: &[C64]) -> Self {
        let stats = convergence_statistics(values);
        let rows = levels
            .iter()
            .zip(values)
            .enumerate()
            .map(|(i, (&(level, h), &omega))| ConvergenceRow {
                level,
                h,
                omega,
                rel_error: i.checked_sub(1).map(|j| stats.errors[j]),
                order: i.checked_sub(2).and_then(|j| stats.orders[j]),
                class: Class::of(omega),
            })
            .collect();
        Branch { label, class, rows }
    }

    pub fn values(&self) -> Vec<C64> {
        self.rows.iter().map(|r| r.omega).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub omegas: Vec<C64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub branches: Vec<Branch>,
    pub levels: Vec<LevelSummary>,
    /// Branches that lost their eigenvalue or changed class.
    pub tracking_failures: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.10e}"))
}

impl ConvergenceTable {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    /// Schema `branch,level,h,omega_re,omega_im,rel_error,order,class`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "branch,level,h,omega_re,omega_im,rel_error,order,class")?;
        for b in &self.branches {
            for r in &b.rows {
                writeln!(
                    out,
                    "{},{},{:.10e},{:.15e},{:.15e},{},{},{}",
                    b.label,
                    r.level,
                    r.h,
                    r.omega.re,
                    r.omega.im,
                    opt(r.rel_error),
                    opt(r.order),
                    r.class
                )?;
            }
        }
        Ok(())
    }

    /// One block per branch, laid out like the published tables.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for b in &self.branches {
            let _ = writeln!(s, "branch {} ({})", b.label, b.class);
            let _ = writeln!(s, "{:>5}  {:>10}  {:>24}  {:>12}  {:>9}", "level", "h", "omega", "rel. error", "order");
            for r in &b.rows {
                let omega = if r.class == Class::Real {
                    format!("{:.6}", r.omega.re)
                } else {
                    format!("{:.6}{:+.6}i", r.omega.re, r.omega.im)
                };
                let e = r.rel_error.map_or("-".to_string(), |e| format!("{e:.6e}"));
                let o = r.order.map_or("-".to_string(), |o| format!("{o:.6}"));
                let _ = writeln!(s, "{:>5}  {:>10.6}  {:>24}  {:>12}  {:>9}", r.level, r.h, omega, e, o);
            }
            s.push('\n');
        }
        for f in &self.tracking_failures {
            let _ = writeln!(s, "tracking failure: {f}");
        }
        s
    }

    /// Writes `{stem}.csv` and `{stem}.txt` into `dir`; returns the paths.
    pub fn write_files(&self, dir: &std::path::Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let txt = dir.join(format!("{stem}.txt"));
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
        std::fs::write(&txt, self.to_text())?;
        Ok(vec![csv, txt])
    }
}

/// A level failed; `partial` holds the table over the completed levels.
#[derive(Debug, thiserror::Error)]
#[error("study failed at level {level}: {source}")]
pub struct StudyFailure {
    pub level: usize,
    #[source]
    pub source: Error,
    pub partial: ConvergenceTable,
}

/// Branch values over the levels run so far.
struct Tracker {
    specs: Vec<BranchSpec>,
    tracking: Tracking,
    levels: Vec<(usize, f64)>,
    values: Vec<Vec<C64>>,
    alive: Vec<bool>,
    failures: Vec<String>,
    summaries: Vec<LevelSummary>,
}

impl Tracker {
    fn new(specs: &[BranchSpec], tracking: Tracking) -> Self {
        Self {
            specs: specs.to_vec(),
            tracking,
            levels: Vec::new(),
            values: vec![Vec::new(); specs.len()],
            alive: vec![true; specs.len()],
            failures: Vec::new(),
            summaries: Vec::new(),
        }
    }

    fn by_rank(omegas: &[C64], class: Class, index: usize) -> Option<C64> {
        omegas
            .iter()
            .filter(|w| Class::of(**w) == class && (class == Class::Real || w.im < 0.0))
            .nth(index)
            .copied()
    }

    fn push(&mut self, result: &LevelResult) {
        let omegas = result.omegas();
        let first = self.levels.is_empty();
        self.levels.push((result.level, result.h));
        self.summaries.push(LevelSummary {
            level: result.level,
            h: result.h,
            dofs: result.dofs(),
            omegas: omegas.clone(),
            max_residual: result.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
        });

        let nearest = if !first && self.tracking == Tracking::Nearest {
            let prev: Vec<C64> = self.values.iter().map(|v| *v.last().unwrap_or(&C64::new(f64::NAN, 0.0))).collect();
            Some(match_eigenvalues(&prev, &omegas))
        } else {
            None
        };
        for (b, spec) in self.specs.iter().enumerate() {
            if !self.alive[b] {
                continue;
            }
            let found = match (*spec, &nearest) {
                (BranchSpec::Target { omega }, _) => omegas
                    .iter()
                    .filter(|w| Class::of(**w) == Class::of(omega))
                    .min_by(|a, b| (**a - omega).norm().total_cmp(&(**b - omega).norm()))
                    .copied(),
                (BranchSpec::Rank { .. }, Some(m)) => m.partner(b).map(|j| omegas[j]),
                (BranchSpec::Rank { class, index }, None) => Self::by_rank(&omegas, class, index),
            };
            match found {
                Some(w) if Class::of(w) == spec.class() => self.values[b].push(w),
                Some(w) => {
                    self.failures.push(format!(
                        "branch {} changed class at level {} (omega = {w})",
                        spec.label(),
                        result.level
                    ));
                    self.alive[b] = false;
                }
                None => {
                    self.failures
                        .push(format!("branch {} has no eigenvalue at level {}", spec.label(), result.level));
                    self.alive[b] = false;
                }
            }
        }
    }

    fn table(&self) -> ConvergenceTable {
        let branches = self
            .specs
            .iter()
            .zip(&self.values)
            .map(|(spec, vals)| Branch::from_values(spec.label(), spec.class(), &self.levels[..vals.len()], vals))
            .collect();
        ConvergenceTable {
            branches,
            levels: self.summaries.clone(),
            tracking_failures: self.failures.clone(),
        }
    }
}

/// Runs all levels in order and tabulates the branches. With an output
/// directory, writes `table.csv`/`table.txt`, or `partial.csv`/`partial.txt`
/// when a level fails.
pub fn run_study(config: &StudyConfig) -> std::result::Result<ConvergenceTable, StudyFailure> {
    run_study_with(config, |_| {})
}

/// As [`run_study`], calling `on_level` after each level completes.
pub fn run_study_with(
    config: &StudyConfig,
    mut on_level: impl FnMut(&LevelResult),
) -> std::result::Result<ConvergenceTable, StudyFailure> {
    let fail = |level: usize, source: Error, partial: ConvergenceTable| {
        if let Some(dir) = &config.output_dir {
            if let Err(e) = partial.write_files(dir, "partial") {
                log::error!("could not write partial results: {e}");
            }
        }
        StudyFailure { level, source, partial }
    };
    if let Err(e) = config.validate() {
        return Err(fail(0, e, ConvergenceTable::default()));
    }
    let mut tracker = Tracker::new(&config.branches, config.tracking);
    for &level in &config.levels {
        match run_level(config, level) {
            Ok(result) => {
                tracker.push(&result);
                on_level(&result);
            }
            Err(e) => return Err(fail(level, e, tracker.table())),
        }
    }
    let table = tracker.table();
    for f in &table.tracking_failures {
        log::warn!("{f}");
    }
    if let Some(dir) = &config.output_dir {
        if let Err(e) = table.write_files(dir, "table") {
            return Err(fail(*config.levels.last().unwrap(), e, table));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_threshold() {
        assert_eq!(Class::of(C64::new(1.0, 1e-7)), Class::Real);
        assert_eq!(Class::of(C64::new(1.0, 1e-5)), Class::Complex);
    }

    #[test]
    fn labels() {
        assert_eq!(BranchSpec::Rank { class: Class::Complex, index: 0 }.label(), "complex1");
        assert_eq!(BranchSpec::Target { omega: C64::new(3.5, 0.0) }.label(), "near3.5");
    }

    #[test]
    fn csv_schema() {
        let levels = [(1, 0.1), (2, 0.05), (3, 0.025)];
        let vals = [C64::new(1.5, 0.0), C64::new(1.4, 0.0), C64::new(1.39, 0.0)];
        let table = ConvergenceTable {
            branches: vec![Branch::from_values("real1".into(), Class::Real, &levels, &vals)],
            ..Default::default()
        };
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "branch,level,h,omega_re,omega_im,rel_error,order,class");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",,,real"));
        assert_eq!(lines[3].split(',').count(), 8);
        assert!(table.to_text().contains("branch real1 (real)"));
    }
}
