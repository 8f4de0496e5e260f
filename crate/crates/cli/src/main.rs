//! `whitney` command-line front end.
//!
//! Reports go to stdout (or `-o`) as JSON, or as CSV with `--csv`; a
//! human-readable table always goes to stderr. Exit status is 0 when every
//! check passes, 1 when a check fails and 2 on usage or input errors.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use whitney::complex::{check_commuting_with, check_exactness, DiscreteComplex, Variant2d};
use whitney::elasticity::{aw_battery, aw_commutativity_check, aw_unisolvence_sweep, AwSpace, Lame};
use whitney::experiments::{
    galerkin_quasioptimality_demo, laplace_eigenvalues, maxwell_eigenvalues,
    maxwell_mixed_eigenvalues, mixed_elasticity_convergence, mixed_poisson_convergence, Domain,
    ElasticityOptions, MaxwellFamily, MaxwellOptions, MixedPoissonOptions,
};
use whitney::mesh::{
    generate_annulus_mesh_with_rings, generate_cube_mesh, generate_disk_mesh,
    generate_ellipse_mesh, generate_square_mesh, read_mesh, write_mesh, Mesh, Pattern,
};
use whitney::par::Execution;
use whitney::report::{csv_string, render_checks, render_table, to_json, Check, Tabular};
use whitney::spaces::BoundaryCondition;
use whitney::Error;

const SEED_ENV: &str = "WHITNEY_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "whitney",
    version,
    about = "Finite element complexes, audits and experiments"
)]
struct Cli {
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Write the report (or mesh) to this file instead of stdout.
    #[arg(short, long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Seed for randomized runs; the WHITNEY_SEED environment variable
    /// takes precedence.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Suppress the table on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Exactness and commuting-diagram audits of discrete complexes.
    #[command(subcommand)]
    Complex(ComplexCommand),
    /// Eigenvalue experiments.
    #[command(subcommand)]
    Eig(EigCommand),
    /// Source problems with convergence studies.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Arnold–Winther element checks.
    #[command(subcommand)]
    Aw(AwCommand),
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Write a generated mesh in the text format.
    Gen(MeshArgs),
    /// Entity counts and topology of a mesh.
    Info(MeshArgs),
}

#[derive(Subcommand, Debug)]
enum ComplexCommand {
    /// Ranks, kernels and cohomology of the discrete complex.
    Check {
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        complex: ComplexArgs,
        /// Expected cohomology dimensions, comma separated (default: the
        /// domain's Betti numbers, relative ones under --bc essential).
        #[arg(long, value_delimiter = ',')]
        betti: Option<Vec<i64>>,
    },
    /// Residuals of the commuting diagram over a polynomial battery.
    Commute {
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        complex: ComplexArgs,
        /// Maximum total degree of the battery.
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum EigCommand {
    /// Dirichlet Laplacian on the π-square or an ellipse.
    Laplace {
        #[arg(long, value_enum, default_value_t = EigDomain::Square)]
        domain: EigDomain,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = Pattern::Uniform)]
        pattern: Pattern,
        #[arg(long, default_value_t = PI)]
        side: f64,
        /// Rings of the disk triangulation (ellipse only).
        #[arg(long, default_value_t = 8)]
        rings: usize,
        #[arg(long, default_value_t = 3.0)]
        aspect: f64,
        /// Lagrange order.
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Number of eigenvalues compared with the reference.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Maxwell cavity on the square with E × n = 0.
    Maxwell {
        #[arg(long, default_value = "edge1")]
        family: MaxwellFamily,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = Pattern::Crossed)]
        pattern: Pattern,
        #[arg(long, default_value_t = PI)]
        side: f64,
        /// Eigenvalues below this fraction of the largest count as zero.
        #[arg(long, default_value_t = 1e-8)]
        zero_threshold: f64,
        /// Relative tolerance on the compared eigenvalues (edge elements).
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Number of positive eigenvalues compared with the reference.
        #[arg(long, default_value_t = 10)]
        compare: usize,
        /// Upper end of the counting window (nodal elements).
        #[arg(long, default_value_t = 10.0)]
        window: f64,
        /// Relative distance for a reference value to count as matched.
        #[arg(long, default_value_t = 0.05)]
        match_tolerance: f64,
        /// Perturb interior vertices by up to this fraction of h (uses --seed).
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
    },
    /// Mixed formulation, compared with the edge-element Galerkin spectrum.
    MaxwellMixed {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = Pattern::Crossed)]
        pattern: Pattern,
        #[arg(long, default_value_t = PI)]
        side: f64,
        /// Relative agreement required with the Galerkin spectrum.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
}

#[derive(Subcommand, Debug)]
enum SolveCommand {
    /// Dirichlet Poisson with Lagrange elements, H¹ errors.
    Poisson {
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = Pattern::Uniform)]
        pattern: Pattern,
        /// Minimum observed order (default: order − 0.1).
        #[arg(long)]
        min_order: Option<f64>,
    },
    /// Mixed Poisson with face1/dg0 and inf-sup monitoring.
    MixedPoisson {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        levels: Vec<usize>,
        /// Coefficient C as c11,c12,c21,c22.
        #[arg(long, value_delimiter = ',', default_value = "1,0,0,1")]
        coefficient: Vec<f64>,
        #[arg(long, default_value_t = Pattern::Uniform)]
        pattern: Pattern,
        #[arg(long, default_value_t = 0.9)]
        min_order: f64,
        #[arg(long, default_value_t = 0.1)]
        max_infsup_variation: f64,
        /// Skip the inf-sup eigenproblems.
        #[arg(long)]
        no_infsup: bool,
    },
    /// Mixed elasticity with Arnold–Winther stresses.
    Elasticity {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = Pattern::Uniform)]
        pattern: Pattern,
        #[arg(long, default_value_t = 1.0)]
        min_order: f64,
        #[arg(long, default_value_t = 1e-8)]
        residual_tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        equilibrium_tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum AwCommand {
    /// DOF-matrix rank on the reference and seeded random triangles.
    Unisolvence {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Residual of div Π^S τ = Π^V div τ over a polynomial battery.
    Commute {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DomainKind {
    Square,
    Cube,
    Annulus,
    Disk,
    Ellipse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EigDomain {
    Square,
    Ellipse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    /// Lagrange, edge, discontinuous.
    Edge,
    /// Lagrange, face, discontinuous.
    Face,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BcArg {
    None,
    Essential,
}

#[derive(Args, Debug)]
struct MeshArgs {
    /// Read the mesh from a file instead of generating one.
    #[arg(long, value_name = "FILE", conflicts_with = "domain")]
    mesh: Option<PathBuf>,
    #[arg(long, value_enum)]
    domain: Option<DomainKind>,
    /// Cells per side (square, cube) or angular cells (annulus).
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = Pattern::Uniform)]
    pattern: Pattern,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    /// Rings of cells (disk, ellipse, annulus).
    #[arg(long, default_value_t = 3)]
    rings: usize,
    #[arg(long, default_value_t = 0.5)]
    r_inner: f64,
    #[arg(long, default_value_t = 1.0)]
    r_outer: f64,
    #[arg(long, default_value_t = 3.0)]
    aspect: f64,
}

#[derive(Args, Debug)]
struct ComplexArgs {
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// 2D complex variant (ignored in 3D).
    #[arg(long, value_enum, default_value_t = VariantArg::Edge)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = BcArg::None)]
    bc: BcArg,
}

impl MeshArgs {
    fn build(&self) -> whitney::Result<Mesh> {
        if let Some(path) = &self.mesh {
            return read_mesh(&fs::read_to_string(path)?);
        }
        match self.domain.unwrap_or(DomainKind::Square) {
            DomainKind::Square => generate_square_mesh(self.n, self.pattern, self.side),
            DomainKind::Cube => generate_cube_mesh(self.n),
            DomainKind::Annulus => {
                generate_annulus_mesh_with_rings(self.n, self.rings, self.r_inner, self.r_outer)
            }
            DomainKind::Disk => generate_disk_mesh(self.rings),
            DomainKind::Ellipse => generate_ellipse_mesh(self.rings, self.aspect),
        }
    }
}

/// What a subcommand produced.
enum Output {
    /// Machine-readable text with its human-readable rendering.
    Report {
        json: String,
        csv: String,
        table: String,
        pass: bool,
    },
    /// Raw text (mesh files).
    Text(String),
}

fn report<T: serde::Serialize + Tabular>(r: &T, checks: &[Check], pass: bool) -> whitney::Result<Output> {
    let mut table = render_table(r);
    if !checks.is_empty() {
        table.push('\n');
        table.push_str(&render_checks(checks));
    }
    Ok(Output::Report {
        json: to_json(r)?,
        csv: csv_string(r)?,
        table,
        pass,
    })
}

fn pass_check(name: &str, pass: bool) -> Vec<Check> {
    vec![Check::new(name, pass, "")]
}

/// Betti numbers of the domain a mesh came from, from its Euler
/// characteristic (disk-like or annulus-like in 2D, ball-like in 3D).
fn default_betti(mesh: &Mesh, bc: BoundaryCondition) -> Vec<i64> {
    let chi = mesh.euler_characteristic();
    let mut b = vec![0i64; mesh.dim() + 1];
    match bc {
        BoundaryCondition::None => {
            b[0] = 1;
            if mesh.dim() == 2 && chi == 0 {
                b[1] = 1;
            }
        }
        BoundaryCondition::Essential => {
            b[mesh.dim()] = 1;
            if mesh.dim() == 2 && chi == 0 {
                b[1] = 1;
            }
        }
    }
    b
}

fn build_complex(mesh: &Arc<Mesh>, args: &ComplexArgs) -> whitney::Result<DiscreteComplex> {
    let bc = bc(args.bc);
    if mesh.dim() == 3 {
        if args.order != 1 {
            return Err(Error::InvalidInput("3D complexes are lowest order only".into()));
        }
        return DiscreteComplex::whitney_3d(mesh, bc);
    }
    let v = match args.variant {
        VariantArg::Edge => Variant2d::Edge,
        VariantArg::Face => Variant2d::Face,
    };
    DiscreteComplex::de_rham_2d(mesh, v, args.order, bc)
}

fn bc(b: BcArg) -> BoundaryCondition {
    match b {
        BcArg::None => BoundaryCondition::None,
        BcArg::Essential => BoundaryCondition::Essential,
    }
}

fn run(cli: &Cli, seed: u64) -> whitney::Result<Output> {
    match &cli.command {
        Command::Mesh(MeshCommand::Gen(args)) => Ok(Output::Text(write_mesh(&args.build()?))),
        Command::Mesh(MeshCommand::Info(args)) => {
            let m = args.build()?;
            let info = MeshInfo(m);
            report(&info, &[], true)
        }
        Command::Complex(ComplexCommand::Check { mesh, complex, betti }) => {
            let m = Arc::new(mesh.build()?);
            let c = build_complex(&m, complex)?;
            let betti = betti.clone().unwrap_or_else(|| default_betti(&m, bc(complex.bc)));
            let r = check_exactness(&c, &betti)?;
            report(&r, &pass_check("cohomology_matches", r.pass), r.pass)
        }
        Command::Complex(ComplexCommand::Commute { mesh, complex, degree, tol }) => {
            let m = Arc::new(mesh.build()?);
            let c = build_complex(&m, complex)?;
            let r = check_commuting_with(&c, *degree, *tol, Execution::default())?;
            report(&r, &pass_check("commuting", r.pass), r.pass)
        }
        Command::Eig(EigCommand::Laplace { domain, n, pattern, side, rings, aspect, order, count }) => {
            let d = match domain {
                EigDomain::Square => Domain::Square { side: *side, n: *n, pattern: *pattern },
                EigDomain::Ellipse => Domain::Ellipse { rings: *rings, aspect: *aspect },
            };
            let r = laplace_eigenvalues(&d, *order, *count)?;
            report(&r, &r.checks, r.pass)
        }
        Command::Eig(EigCommand::Maxwell {
            family,
            n,
            pattern,
            side,
            zero_threshold,
            tolerance,
            compare,
            window,
            match_tolerance,
            jitter,
        }) => {
            let r = maxwell_eigenvalues(&MaxwellOptions {
                family: *family,
                n: *n,
                pattern: *pattern,
                side: *side,
                zero_threshold: *zero_threshold,
                tolerance: *tolerance,
                compare: *compare,
                window: *window,
                match_tolerance: *match_tolerance,
                jitter: *jitter,
                seed,
            })?;
            report(&r, &r.checks, r.pass)
        }
        Command::Eig(EigCommand::MaxwellMixed { n, pattern, side, tolerance }) => {
            let r = maxwell_mixed_eigenvalues(*n, *pattern, *side, *tolerance)?;
            report(&r, &r.checks, r.pass)
        }
        Command::Solve(SolveCommand::Poisson { order, levels, pattern, min_order }) => {
            let min = min_order.unwrap_or(*order as f64 - 0.1);
            let r = galerkin_quasioptimality_demo(levels, *order, *pattern, min)?;
            report(&r, &r.checks, r.pass)
        }
        Command::Solve(SolveCommand::MixedPoisson {
            levels,
            coefficient,
            pattern,
            min_order,
            max_infsup_variation,
            no_infsup,
        }) => {
            let c: [f64; 4] = coefficient.as_slice().try_into().map_err(|_| {
                Error::InvalidInput(format!("coefficient needs 4 entries, got {}", coefficient.len()))
            })?;
            let r = mixed_poisson_convergence(&MixedPoissonOptions {
                ns: levels.clone(),
                coefficient: [[c[0], c[1]], [c[2], c[3]]],
                pattern: *pattern,
                min_order: *min_order,
                max_infsup_variation: *max_infsup_variation,
                infsup: !no_infsup,
            })?;
            report(&r, &r.checks, r.pass)
        }
        Command::Solve(SolveCommand::Elasticity {
            levels,
            lambda,
            mu,
            pattern,
            min_order,
            residual_tol,
            equilibrium_tol,
        }) => {
            let r = mixed_elasticity_convergence(&ElasticityOptions {
                ns: levels.clone(),
                lame: Lame::new(*lambda, *mu)?,
                pattern: *pattern,
                min_order: *min_order,
                residual_tolerance: *residual_tol,
                equilibrium_tolerance: *equilibrium_tol,
            })?;
            report(&r, &r.checks, r.pass)
        }
        Command::Aw(AwCommand::Unisolvence { trials }) => {
            let r = aw_unisolvence_sweep(seed, *trials)?;
            report(&r, &pass_check("unisolvent", r.pass), r.pass)
        }
        Command::Aw(AwCommand::Commute { mesh, degree, tol }) => {
            let m = Arc::new(mesh.build()?);
            if m.dim() != 2 {
                return Err(Error::DimensionMismatch("the AW element needs a triangle mesh".into()));
            }
            let r = aw_commutativity_check(&AwSpace::new(&m)?, &aw_battery(*degree), *tol)?;
            report(&r, &pass_check("commuting", r.pass), r.pass)
        }
    }
}

struct MeshInfo(Mesh);

impl serde::Serialize for MeshInfo {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m = &self.0;
        json!({
            "domain": m.domain_tag(),
            "dim": m.dim(),
            "entities": m.entity_counts(),
            "boundary_entities": (0..=m.dim()).map(|k| m.num_boundary(k)).collect::<Vec<_>>(),
            "interior_vertices": m.num_interior_vertices(),
            "euler_characteristic": m.euler_characteristic(),
            "h": m.max_edge_length(),
        })
        .serialize(s)
    }
}

impl Tabular for MeshInfo {
    fn header(&self) -> Vec<String> {
        ["k", "entities", "boundary"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let m = &self.0;
        (0..=m.dim())
            .map(|k| vec![k.to_string(), m.num_entities(k).to_string(), m.num_boundary(k).to_string()])
            .collect()
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::NotInCatalog(_)
            | Error::DimensionMismatch(_)
            | Error::Io(_)
    )
}

fn resolve_seed(flag: u64) -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    faer::set_global_parallelism(faer::Par::Seq);
    let seed = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let out = match run(&cli, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if is_input_error(&e) { 2 } else { 1 });
        }
    };
    let (text, pass) = match out {
        Output::Text(t) => (t, true),
        Output::Report { json, csv, table, pass } => {
            if !cli.quiet {
                eprint!("{table}");
            }
            (if cli.csv { csv } else { json }, pass)
        }
    };
    if let Err(e) = emit(&cli, &text) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
