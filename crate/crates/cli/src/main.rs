mod config;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use elastic_te::assembly::assemble_block_system;
use elastic_te::eigensolve::{solve_transmission_eigs, write_eigenpair};
use elastic_te::mesh::{make_mesh, mesh_quality, refine_uniform, Domain, DISK_RADIUS};
use elastic_te::oracle::{find_real_roots, write_roots, z0_magnitude_map, DiskProblem, RealRoots};
use elastic_te::par::Exec;
use elastic_te::study::{run_study_with, Class, StudyConfig};
use serde::Serialize;

use config::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] elastic_te::Error),
    #[error("{0}")]
    Study(#[from] elastic_te::study::StudyFailure),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Config(_) => return 2,
            CliError::Io(_) => return 1,
            CliError::Core(e) => e,
            CliError::Study(f) => &f.source,
        };
        match core {
            elastic_te::Error::Io(_) => 1,
            e if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "elastic-te", version, about = "Elastic interior transmission eigenvalues by mixed finite elements")]
struct Cli {
    /// Worker threads for assembly and the Z0 map (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate meshes and print their statistics.
    Mesh(MeshArgs),
    /// Solve for the eigenpairs on one mesh level.
    Solve(SolveArgs),
    /// Multi-level convergence study.
    Study(StudyArgs),
    /// Roots or magnitude map of the disk dispersion determinant.
    Z0(Z0Args),
}

#[derive(Args)]
struct MaterialArgs {
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho1: Option<f64>,
}

impl MaterialArgs {
    fn apply(&self, m: &mut Material) {
        set(&mut m.mu, self.mu);
        set(&mut m.lambda, self.lambda);
        set(&mut m.rho0, self.rho0);
        set(&mut m.rho1, self.rho1);
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    krylov_dim: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_restarts: Option<usize>,
    /// Real spectral shift σ; eigenvalues nearest σ are found.
    #[arg(long, allow_negative_numbers = true)]
    shift: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, s: &mut Solver) {
        set(&mut s.k, self.k);
        if self.krylov_dim.is_some() {
            s.krylov_dim = self.krylov_dim;
        }
        set(&mut s.tol, self.tol);
        set(&mut s.max_restarts, self.max_restarts);
        set(&mut s.shift, self.shift);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    domain: Option<DomainName>,
    /// Subdivisions per unit length of level 1.
    #[arg(long)]
    n: Option<usize>,
    /// Number of levels to write (level L is refined L − 1 times).
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    domain: Option<DomainName>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    level: Option<usize>,
    #[command(flatten)]
    material: MaterialArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Number of eigenfunctions to write.
    #[arg(long)]
    export: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    domain: Option<DomainName>,
    #[arg(long)]
    n0: Option<usize>,
    /// Comma-separated, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[command(flatten)]
    material: MaterialArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum)]
    tracking: Option<TrackingName>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Z0Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    material: MaterialArgs,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Z0Mode>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// `min,max` of the real axis.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    re: Option<Vec<f64>>,
    /// `min,max` of the imaginary axis.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    im: Option<Vec<f64>>,
    #[arg(long)]
    nre: Option<usize>,
    #[arg(long)]
    nim: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    subcommand: &'a str,
    version: &'a str,
    config: &'a C,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
}

fn write_manifest<C: Serialize>(name: &str, config: &C, out: &Path, start: Instant, outputs: &[PathBuf]) -> Result<(), CliError> {
    let manifest = Manifest {
        subcommand: name,
        version: env!("CARGO_PKG_VERSION"),
        config,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = out.join("manifest.json");
    log::info!("{name} finished in {:.3} s", manifest.wall_clock_seconds);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    println!("wrote {}", path.display());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>, CliError> {
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

fn cmd_mesh(args: &MeshArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut c: MeshConfig = load(args.config.as_deref())?;
    set(&mut c.domain, args.domain);
    set(&mut c.n, args.n);
    set(&mut c.levels, args.levels);
    set(&mut c.out, args.out.clone());
    if c.levels == 0 {
        return Err(CliError::Config("levels must be at least 1".into()));
    }
    let domain: Domain = c.domain.into();
    let mut mesh = make_mesh(domain, c.n)?;
    std::fs::create_dir_all(&c.out)?;
    let mut outputs = Vec::new();
    for level in 1..=c.levels {
        if level > 1 {
            mesh = refine_uniform(&mesh);
        }
        let (h, min_angle) = mesh_quality(&mesh);
        println!(
            "level {level}: {} vertices, {} triangles, {} boundary vertices, h = {h:.6}, min angle = {:.2} deg",
            mesh.num_vertices(),
            mesh.num_triangles(),
            mesh.boundary_vertices.len(),
            min_angle.to_degrees()
        );
        if domain == Domain::Disk {
            let dev = mesh
                .boundary_vertices
                .iter()
                .map(|&v| (mesh.vertices[v].norm() - DISK_RADIUS).abs())
                .fold(0.0, f64::max);
            println!("  max boundary deviation from |x| = {DISK_RADIUS}: {dev:.2e}");
        }
        let path = c.out.join(format!("mesh_level{level}.txt"));
        let mut f = create(&path)?;
        mesh.write_to(&mut f)?;
        f.flush()?;
        outputs.push(path);
    }
    write_manifest("mesh", &c, &c.out, start, &outputs)
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut c: SolveConfig = load(args.config.as_deref())?;
    set(&mut c.domain, args.domain);
    set(&mut c.n0, args.n0);
    set(&mut c.level, args.level);
    args.material.apply(&mut c.material);
    args.solver.apply(&mut c.solver);
    set(&mut c.export, args.export);
    set(&mut c.out, args.out.clone());
    let (params, densities) = c.material.params()?;
    if c.level == 0 {
        return Err(CliError::Config("level must be at least 1".into()));
    }
    let opts = c.solver.options();
    if opts.k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }

    let mut mesh = make_mesh(c.domain.into(), c.n0)?;
    for _ in 1..c.level {
        mesh = refine_uniform(&mesh);
    }
    let system = assemble_block_system(&mesh, params, densities)?;
    let pairs = solve_transmission_eigs(&system, &opts)?;
    println!(
        "{} level {}: h = {}, {} vertices, {} unknowns",
        c.domain_name(),
        c.level,
        mesh.nominal_h(),
        mesh.num_vertices(),
        system.dim()
    );
    println!("{:>3}  {:>26}  {:>12}  {:>9}  class", "#", "omega", "|omega^2|", "residual");
    for (i, p) in pairs.iter().enumerate() {
        println!(
            "{:>3}  {:>12.6} {:>+12.6}i  {:>12.6}  {:>9.2e}  {}",
            i + 1,
            p.omega.re,
            p.omega.im,
            p.omega_sq.norm(),
            p.residual,
            Class::of(p.omega)
        );
    }

    std::fs::create_dir_all(&c.out)?;
    let mut outputs = Vec::new();
    let list = c.out.join("eigenvalues.csv");
    {
        let mut f = create(&list)?;
        writeln!(f, "index,omega_re,omega_im,omega_sq_re,omega_sq_im,residual,class")?;
        for (i, p) in pairs.iter().enumerate() {
            writeln!(
                f,
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.6e},{}",
                i + 1,
                p.omega.re,
                p.omega.im,
                p.omega_sq.re,
                p.omega_sq.im,
                p.residual,
                Class::of(p.omega)
            )?;
        }
        f.flush()?;
    }
    outputs.push(list);
    if c.export > 0 {
        let mesh_path = c.out.join("mesh.txt");
        let mut f = create(&mesh_path)?;
        mesh.write_to(&mut f)?;
        f.flush()?;
        outputs.push(mesh_path);
        for (i, p) in pairs.iter().take(c.export).enumerate() {
            let path = c.out.join(format!("eigenpair_{}.txt", i + 1));
            let mut f = create(&path)?;
            write_eigenpair(&mut f, &mesh, &system.dof_map, p)?;
            f.flush()?;
            outputs.push(path);
        }
    }
    write_manifest("solve", &c, &c.out, start, &outputs)
}

impl SolveConfig {
    fn domain_name(&self) -> &'static str {
        Domain::from(self.domain).name()
    }
}

fn cmd_study(args: &StudyArgs, exec: Exec) -> Result<(), CliError> {
    let start = Instant::now();
    let mut c: StudyFile = load(args.config.as_deref())?;
    set(&mut c.domain, args.domain);
    set(&mut c.n0, args.n0);
    set(&mut c.levels, args.levels.clone());
    args.material.apply(&mut c.material);
    args.solver.apply(&mut c.solver);
    set(&mut c.tracking, args.tracking);
    set(&mut c.out, args.out.clone());
    let (params, densities) = c.material.params()?;
    let config = StudyConfig {
        domain: c.domain.into(),
        params,
        densities,
        levels: c.levels.clone(),
        n0: c.n0,
        solver: c.solver.options(),
        branches: c.branches.iter().map(|&b| b.into()).collect(),
        tracking: c.tracking.into(),
        exec,
        output_dir: Some(c.out.clone()),
    };
    config.validate()?;
    let table = run_study_with(&config, |level| {
        let max_res = level.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
        println!(
            "level {}: h = {}, {} unknowns, max residual {max_res:.1e}, {:.2} s",
            level.level,
            level.h,
            level.dofs(),
            start.elapsed().as_secs_f64()
        );
    })?;
    print!("{}", table.to_text());
    let outputs = vec![c.out.join("table.csv"), c.out.join("table.txt")];
    write_manifest("study", &c, &c.out, start, &outputs)
}

fn cmd_z0(args: &Z0Args, exec: Exec) -> Result<(), CliError> {
    let start = Instant::now();
    let mut c: Z0Config = load(args.config.as_deref())?;
    args.material.apply(&mut c.material);
    set(&mut c.radius, args.radius);
    set(&mut c.mode, args.mode);
    set(&mut c.omega_max, args.omega_max);
    set(&mut c.step, args.step);
    set(&mut c.tol, args.tol);
    if let Some(re) = &args.re {
        c.re = [re[0], re[1]];
    }
    if let Some(im) = &args.im {
        c.im = [im[0], im[1]];
    }
    set(&mut c.nre, args.nre);
    set(&mut c.nim, args.nim);
    set(&mut c.out, args.out.clone());
    let params = elastic_te::assembly::ElasticParams::new(c.material.mu, c.material.lambda)?;
    let problem = DiskProblem::new(params, c.material.rho0, c.material.rho1, c.radius)?;
    std::fs::create_dir_all(&c.out)?;
    let outputs = match c.mode {
        Z0Mode::Roots => {
            let path = c.out.join("z0_roots.txt");
            let roots = match find_real_roots(&problem, c.omega_max, c.step, c.tol)? {
                RealRoots::Degenerate => {
                    println!("Z0 vanishes identically (rho0 = rho1): every omega is degenerate, no isolated roots");
                    Vec::new()
                }
                RealRoots::Isolated(r) => r,
            };
            let mut f = create(&path)?;
            write_roots(&mut f, &roots)?;
            f.flush()?;
            for r in &roots {
                println!("{r:.11e}");
            }
            vec![path]
        }
        Z0Mode::Map => {
            let map = z0_magnitude_map(&problem, (c.re[0], c.re[1]), (c.im[0], c.im[1]), (c.nre, c.nim), exec)?;
            let path = c.out.join("z0_map.csv");
            let mut f = create(&path)?;
            map.write_csv(&mut f)?;
            f.flush()?;
            println!("{} x {} grid written", c.nre, c.nim);
            vec![path]
        }
    };
    write_manifest("z0", &c, &c.out, start, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure threads: {e}");
            return ExitCode::from(2);
        }
    }
    let exec = Exec::default();
    let result = match &cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Study(a) => cmd_study(a, exec),
        Command::Z0(a) => cmd_z0(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
