//! gridforge: generate, inspect and verify flux-aligned and elliptic grids.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridforge::elliptic::{solve_ubar, ChiSpec, SolverConfig};
use gridforge::elliptic_grid::generate_elliptic;
use gridforge::error::{GridError, Result};
use gridforge::flux::AnalyticField;
use gridforge::gridfile::{GridFile, GridKind, Tolerances};
use gridforge::ode::IntegratorConfig;
use gridforge::ortho::{generate_orthogonal, FirstLine, WeightMode};
use gridforge::quality::{
    convergence_order, quality_report, solve_benchmark, BenchmarkProblem,
};
use gridforge::svg::emit_svg;

#[derive(Parser)]
#[command(name = "gridforge", version, about = "Elliptic grid generation by streamline integration")]
struct Cli {
    /// Cap worker threads (overrides GRIDFORGE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report errors as JSON on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a grid and write it as JSON.
    Generate(GenerateArgs),
    /// Cell-size, area and orthogonality metrics of a grid file.
    Quality(QualityArgs),
    /// Solve an analytic benchmark problem on one or more grid files.
    Verify(VerifyArgs),
    /// Render the coordinate lines of a grid file as SVG.
    Svg(SvgArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridType {
    Orthogonal,
    Conformal,
    Adapted,
    Monitor,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    Unity,
    Gradpsi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FirstLineArg {
    Inner,
    Outer,
}

#[derive(Args)]
struct GenerateArgs {
    /// Built-in field name (annulus, solovev, ...) or path to a flux JSON.
    #[arg(long, default_value = "solovev")]
    flux: String,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    psi0: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    psi1: f64,
    #[arg(long = "type", value_enum, default_value = "monitor")]
    grid_type: GridType,
    /// Radial cell count of the output grid.
    #[arg(long, default_value_t = 32)]
    nu: usize,
    /// Angle-like cell count of the output grid.
    #[arg(long, default_value_t = 320)]
    nv: usize,
    /// Monitor-metric anisotropy.
    #[arg(long, default_value_t = 0.1)]
    k: f64,
    /// Monitor-metric regularization.
    #[arg(long, default_value_t = 0.001)]
    eps: f64,
    /// Adaption weight for the orthogonal grid.
    #[arg(long, value_enum, default_value = "gradpsi")]
    weight: WeightArg,
    /// Which boundary carries the equidistant discretization.
    #[arg(long, value_enum, default_value = "inner")]
    first_line: FirstLineArg,
    /// Radial resolution of the internal flux-aligned solve lattice
    /// (elliptic types only; default scales with --nu).
    #[arg(long)]
    solve_n1: Option<usize>,
    /// Angle resolution of the internal solve lattice.
    #[arg(long)]
    solve_n2: Option<usize>,
    #[arg(long, default_value_t = 1e-11)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-13)]
    atol: f64,
    /// Residual tolerance of the conjugate-gradient solver.
    #[arg(long, default_value_t = 1e-11)]
    solver_tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also render the grid to this SVG path.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct QualityArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Grid file; repeat or use --sweep for a refinement series.
    #[arg(long, required_unless_present = "sweep")]
    grid: Option<PathBuf>,
    /// Comma-separated grid files of a 2x refinement sweep.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<PathBuf>>,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long, default_value_t = 1e-11)]
    solver_tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Fluxaligned,
    Localized,
}

#[derive(Args)]
struct SvgArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

fn load_flux(spec: &str) -> Result<AnalyticField> {
    if spec.ends_with(".json") || Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec)?;
        return Ok(serde_json::from_str(&text)?);
    }
    AnalyticField::by_name(spec)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let start = Instant::now();
    if args.nu == 0 || args.nv == 0 {
        return Err(GridError::Config("resolutions must be positive".into()));
    }
    let field = load_flux(&args.flux)?;
    let ode_cfg = IntegratorConfig {
        rtol: args.rtol,
        atol: args.atol,
        ..Default::default()
    };
    let tolerances =
        Tolerances { rtol: args.rtol, atol: args.atol, solver_tol: args.solver_tol };
    let weight = match args.weight {
        WeightArg::Unity => WeightMode::Unity,
        WeightArg::Gradpsi => WeightMode::GradPsi,
    };
    let first_line = match args.first_line {
        FirstLineArg::Inner => FirstLine::Inner,
        FirstLineArg::Outer => FirstLine::Outer,
    };
    let file = match args.grid_type {
        GridType::Orthogonal => {
            let grid = generate_orthogonal(
                &field, args.psi0, args.psi1, args.nu, args.nv, weight, first_line, &ode_cfg,
            )?;
            println!(
                "flux_aligned grid {}x{}: f0 = {:.10e}, zeta1 = {:.10e}, closure = {:.2e}",
                grid.n_zeta, grid.n_eta, grid.f0, grid.zeta1, grid.closure_gap
            );
            GridFile::from_flux_aligned(&grid, field.clone(), tolerances)
        }
        _ => {
            let chi = match args.grid_type {
                GridType::Conformal => ChiSpec::Conformal,
                GridType::Adapted => ChiSpec::Adapted { weight: WeightMode::GradPsi },
                GridType::Monitor => ChiSpec::Monitor { k: args.k, eps: args.eps },
                GridType::Orthogonal => unreachable!(),
            };
            let n1s = args.solve_n1.unwrap_or_else(|| (4 * args.nu).max(128));
            let n2s = args.solve_n2.unwrap_or_else(|| args.nv.max(64));
            let pass1 = generate_orthogonal(
                &field,
                args.psi0,
                args.psi1,
                n1s,
                n2s,
                WeightMode::GradPsi,
                FirstLine::Inner,
                &ode_cfg,
            )?;
            let solver_cfg = SolverConfig { tol: args.solver_tol, ..Default::default() };
            let (ubar, stats) = solve_ubar(&pass1, &chi, &field, &solver_cfg)?;
            let grid =
                generate_elliptic(&field, &pass1, &ubar, &chi, args.nu, args.nv, &ode_cfg)?;
            println!(
                "elliptic grid {}x{}: c0 = {:.10e}, u1 = {:.10e}, solve {}x{} ({} iterations, residual {:.2e}), v closure = {:.2e}",
                grid.n_u,
                grid.n_v,
                grid.c0,
                grid.u1,
                n1s,
                n2s,
                stats.iterations,
                stats.residual,
                grid.v_closure_gap
            );
            GridFile::from_elliptic(&grid, field.clone(), chi, tolerances)
        }
    };
    file.save(&args.out)?;
    if let Some(svg_path) = &args.svg {
        std::fs::write(svg_path, emit_svg(&file, args.stride)?)?;
    }
    println!(
        "wrote {} ({} nodes) in {:.2} s",
        args.out.display(),
        file.n1 * file.n2,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_quality(args: &QualityArgs) -> Result<()> {
    let file = GridFile::load(&args.grid)?;
    let report = quality_report(&file.view())?;
    let label = match file.kind {
        GridKind::FluxAligned => "flux_aligned",
        GridKind::Elliptic => "elliptic",
    };
    print!("{}", report.table(label));
    println!(
        "area = {:.8e}, max interior non-orthogonality = {:.3e} rad",
        report.area, report.max_interior_nonorthogonality
    );
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let problem = match args.problem {
        ProblemArg::Fluxaligned => BenchmarkProblem::FluxAligned,
        ProblemArg::Localized => BenchmarkProblem::Localized,
    };
    let files: Vec<PathBuf> = match (&args.grid, &args.sweep) {
        (_, Some(sweep)) => sweep.clone(),
        (Some(grid), None) => vec![grid.clone()],
        (None, None) => return Err(GridError::Config("pass --grid or --sweep".into())),
    };
    let cfg = SolverConfig { tol: args.solver_tol, ..Default::default() };
    let mut errors = Vec::new();
    for path in &files {
        let file = GridFile::load(path)?;
        let result =
            solve_benchmark(&file.view(), &file.provenance.flux, &file.theta_frame(), problem, &cfg)?;
        println!(
            "{}: {}x{} rel_error = {:.6e} ({} iterations, residual {:.2e})",
            path.display(),
            file.n1,
            file.n2,
            result.rel_error,
            result.stats.iterations,
            result.stats.residual
        );
        errors.push(result.rel_error);
    }
    if errors.len() >= 2 {
        let orders = convergence_order(&errors)?;
        let formatted: Vec<String> = orders.iter().map(|o| format!("{o:.2}")).collect();
        println!("orders: {}", formatted.join(", "));
    }
    Ok(())
}

fn cmd_svg(args: &SvgArgs) -> Result<()> {
    let file = GridFile::load(&args.grid)?;
    std::fs::write(&args.out, emit_svg(&file, args.stride)?)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Quality(a) => cmd_quality(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Svg(a) => cmd_svg(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    {
        let threads = cli
            .threads
            .or_else(|| std::env::var("GRIDFORGE_THREADS").ok().and_then(|s| s.parse().ok()));
        if let Some(n) = threads {
            if n > 0 {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if cli.json_errors {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": err.to_string(), "code": err.exit_code() })
                );
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
