//! Command-line front end: generate synthetic frameworks, align them by
//! Riemannian gradient descent, certify non-degeneracy, analyze rigidity and
//! run noise-sweep experiments. Exit codes: 0 success, 2 input error,
//! 3 non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use patchalign::certify;
use patchalign::fixtures;
use patchalign::framework::{self, GridParams, PatchFramework};
use patchalign::manifold::Alignment;
use patchalign::rgd::{self, RgdConfig, TerminationReason};
use patchalign::rigidity;
use patchalign::spectral;
use patchalign::stress;

#[derive(Parser)]
#[command(
    name = "patchalign",
    about = "Rigid alignment of overlapping point-cloud views with non-degeneracy \
             and rigidity certification",
    version
)]
struct Cli {
    /// RNG seed for everything stochastic in the invoked command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print progress details to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic grid framework (or a named fixture) with its
    /// ground-truth alignment.
    Generate(GenerateArgs),
    /// Minimize the alignment error by Riemannian gradient descent.
    Align(AlignArgs),
    /// Certify non-degeneracy of an alignment and compute convergence radii.
    Certify(CertifyArgs),
    /// Analyze rigidity of the realization induced by an alignment.
    Rigidity(RigidityArgs),
    /// Noise-sweep experiment: spectral init + descent across noise levels.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Grid resolution (points per axis).
    #[arg(long, default_value_t = 10)]
    grid: usize,
    /// Ambient dimension (1..=3 for the grid generator).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Tiles per axis.
    #[arg(long, default_value_t = 3)]
    tiles: usize,
    /// Desired overlap fraction between adjacent tiles, in (0,1).
    #[arg(long, default_value_t = 0.3)]
    overlap: f64,
    /// Materialize a named fixture instead of a grid ("list" to enumerate).
    #[arg(long, conflicts_with_all = ["grid", "tiles", "overlap"])]
    fixture: Option<String>,
    /// Scramble each view by a random rigid motion (fixtures only; grids are
    /// always scrambled).
    #[arg(long)]
    scramble: bool,
    /// Noise bound applied to the written framework (ground truth stays
    /// noiseless).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Output path for the framework JSON; the ground-truth alignment goes
    /// to the same path with extension .gt.json. Not needed for
    /// --fixture list.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitKind {
    Spectral,
    Identity,
}

#[derive(Args)]
struct AlignArgs {
    /// Framework JSON file.
    #[arg(long)]
    framework: PathBuf,
    /// Initialization: "spectral", "identity", or a path to an alignment
    /// JSON file.
    #[arg(long, default_value = "spectral")]
    init: String,
    /// Optional reference alignment for distance/ratio columns.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Gradient-norm stopping tolerance; defaults to 1e-10·(1+|C|_F).
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 60)]
    max_backtracks: usize,
    /// Result JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for CSV dumps of C, B, D and the Laplacian.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    framework: PathBuf,
    #[arg(long)]
    alignment: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Skip the random-gauge invariance cross-check.
    #[arg(long)]
    no_invariance_check: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RigidityArgs {
    #[arg(long)]
    framework: PathBuf,
    #[arg(long)]
    alignment: PathBuf,
    /// Partition enumeration cap (2^(m-1) subsets).
    #[arg(long, default_value_t = 16)]
    max_m: usize,
    /// Also dump the kernel certificates as JSON (lists of d×d skew blocks
    /// with triviality flags).
    #[arg(long)]
    dump_certificates: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Noiseless framework JSON.
    #[arg(long)]
    framework: PathBuf,
    /// Ground-truth alignment JSON.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Noise levels as start:step:end (inclusive).
    #[arg(long, default_value = "0:0.05:0.3")]
    eps: String,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Descent iterations per trial.
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Sweep CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args, cli.seed, cli.verbose),
        Command::Align(args) => cmd_align(args, cli.seed, cli.verbose),
        Command::Certify(args) => cmd_certify(args, cli.seed),
        Command::Rigidity(args) => cmd_rigidity(args),
        Command::Experiment(args) => cmd_experiment(args, cli.seed, cli.verbose),
    }
}

fn ground_truth_path(out: &Path) -> PathBuf {
    match out.extension() {
        Some(ext) if ext == "json" => out.with_extension("gt.json"),
        _ => {
            let mut p = out.to_path_buf();
            p.set_extension("gt.json");
            p
        }
    }
}

fn cmd_generate(args: GenerateArgs, seed: u64, verbose: bool) -> anyhow::Result<ExitCode> {
    let (framework, truth) = match &args.fixture {
        Some(name) if name == "list" => {
            for fixture in fixtures::all() {
                println!("{:<22} {}", fixture.name, fixture.summary);
            }
            return Ok(ExitCode::SUCCESS);
        }
        Some(name) => {
            let fixture = fixtures::by_name(name).ok_or_else(|| {
                anyhow!(
                    "unknown fixture {name:?}; available: {}",
                    fixtures::all()
                        .iter()
                        .map(|f| f.name)
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })?;
            if args.scramble {
                fixtures::with_random_gauges(&fixture.framework, seed)?
            } else {
                (fixture.framework, fixture.perfect)
            }
        }
        None => {
            let grid = framework::generate_grid(&GridParams {
                resolution: args.grid,
                d: args.d,
                tiles: args.tiles,
                overlap: args.overlap,
                seed,
            })?;
            (grid.framework, grid.ground_truth)
        }
    };
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| anyhow!("--out is required when generating"))?;
    let written = if args.noise > 0.0 {
        framework.inject_noise(&framework::NoiseSpec {
            epsilon: args.noise,
            seed: seed.wrapping_add(1),
        })
    } else {
        framework.clone()
    };
    std::fs::write(out, framework::serialize_framework(&written))
        .with_context(|| format!("writing {}", out.display()))?;
    let gt_path = ground_truth_path(out);
    std::fs::write(&gt_path, truth.to_json())
        .with_context(|| format!("writing {}", gt_path.display()))?;
    let report = written.validate();
    println!(
        "n = {}, m = {}, d = {}, edges = {}, connected = {}, affinely nondegenerate views = {}/{}",
        written.n(),
        written.m(),
        written.d(),
        written.edge_count(),
        report.connected,
        report.affine_nondegenerate.iter().filter(|&&b| b).count(),
        written.m()
    );
    if verbose {
        eprintln!(
            "framework -> {}, ground truth -> {}",
            out.display(),
            gt_path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn load_framework(path: &Path) -> anyhow::Result<PatchFramework> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(framework::parse_framework(&text)?)
}

/// Accepts a plain alignment JSON or an align result JSON (which embeds the
/// final alignment under "alignment").
fn load_alignment(path: &Path) -> anyhow::Result<Alignment> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match Alignment::from_json(&text) {
        Ok(alignment) => Ok(alignment),
        Err(direct_err) => {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|_| anyhow!("{direct_err:#} in {}", path.display()))?;
            match value.get("alignment") {
                Some(embedded) => Ok(Alignment::from_json(&embedded.to_string())?),
                None => Err(anyhow!("{direct_err:#} in {}", path.display())),
            }
        }
    }
}

fn dump_matrix(dir: &Path, name: &str, mat: &DMatrix<f64>) -> anyhow::Result<()> {
    let mut out = String::from("rows,cols\n");
    out.push_str(&format!("{},{}\n", mat.nrows(), mat.ncols()));
    for r in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols()).map(|c| format!("{:.17e}", mat[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_align(args: AlignArgs, seed: u64, verbose: bool) -> anyhow::Result<ExitCode> {
    let fw = load_framework(&args.framework)?;
    let sys = stress::build_patch_stress(&fw)?;
    if let Some(dir) = &args.dump_matrices {
        std::fs::create_dir_all(dir)?;
        dump_matrix(dir, "c.csv", &sys.c)?;
        dump_matrix(dir, "b.csv", &sys.b)?;
        dump_matrix(dir, "d.csv", &sys.d_mat)?;
        dump_matrix(dir, "laplacian.csv", &sys.laplacian)?;
    }
    let start = match args.init.as_str() {
        "spectral" => spectral::spectral_init(&sys).alignment.project(),
        "identity" => Alignment::identity(sys.d, sys.m).project(),
        path => load_alignment(Path::new(path))?.project(),
    };
    let reference = args.reference.as_deref().map(load_alignment).transpose()?;
    let cfg = RgdConfig {
        beta: args.beta,
        gamma: args.gamma,
        grad_tol: args.grad_tol,
        max_iters: args.max_iters,
        max_backtracks: args.max_backtracks,
    };
    let (result, trace) = rgd::run_rgd(&sys, &start, &cfg, reference.as_ref())?;
    if let Some(path) = &args.trace {
        std::fs::write(path, trace.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let lift = result.canonical_lift();
    let result_json = serde_json::json!({
        "termination": trace.termination,
        "iterations": trace.iterations,
        "final_f": trace.final_f(),
        "final_grad_norm": trace.final_grad_norm(),
        "f_star": trace.f_star,
        "alignment": serde_json::from_str::<serde_json::Value>(&lift.to_json())?,
        "quotient_blocks": result.blocks().len(),
        "seed": seed,
    });
    std::fs::write(&args.out, serde_json::to_string_pretty(&result_json)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "{:?} after {} iterations: F = {:.6e}, |grad| = {:.6e}",
        trace.termination,
        trace.iterations,
        trace.final_f(),
        trace.final_grad_norm()
    );
    if verbose {
        eprintln!("result -> {}", args.out.display());
    }
    match trace.termination {
        TerminationReason::MaxIterations => Ok(ExitCode::from(3)),
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn cmd_certify(args: CertifyArgs, seed: u64) -> anyhow::Result<ExitCode> {
    let fw = load_framework(&args.framework)?;
    let s = load_alignment(&args.alignment)?;
    let sys = stress::build_patch_stress(&fw)?;
    let invariance_seed = (!args.no_invariance_check).then_some(seed);
    let report = certify::certify(&sys, &s, args.zeta, args.gamma, invariance_seed)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "critical = {} (residual {:.3e}), verdict = {:?}, lambda_key = {:.6e}, rank 𝕃 = {}/{}",
        report.critical,
        report.critical_residual,
        report.verdict,
        report.lambda_key,
        report.rank_ll,
        report.rank_target
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_rigidity(args: RigidityArgs) -> anyhow::Result<ExitCode> {
    let fw = load_framework(&args.framework)?;
    let s = load_alignment(&args.alignment)?;
    let sys = stress::build_patch_stress(&fw)?;
    let aligned = certify::build_aligned_stress(&sys, &s)?;
    let cert = certify::build_certificate_matrix(&aligned);
    let report = rigidity::analyze(&fw, &sys, &s, &aligned, &cert, args.max_m)?;
    if let Some(path) = &args.dump_certificates {
        let certificates = rigidity::extract_certificates(&sys, &s, &aligned, &cert)?;
        let dump: Vec<serde_json::Value> = certificates
            .iter()
            .map(|c| {
                serde_json::json!({
                    "trivial": c.trivial,
                    "skew_blocks": c
                        .skews
                        .iter()
                        .map(|sk| sk.transpose().as_slice().to_vec())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&dump)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let opt = |v: Option<usize>| v.map_or_else(|| "n/a".into(), |x| x.to_string());
    println!(
        "inf_rigid = {} (rank {}/{}), affine_rigid = {} (rank C = {}/{}), \
         |G*| = {}, |Ḡ*| = {}, nontrivial certificates = {}",
        report.infinitesimally_rigid,
        report.rank_rigidity_matrix,
        report.rank_rigidity_target,
        report.affinely_rigid,
        report.rank_c,
        report.rank_c_target,
        opt(report.graphs.as_ref().map(|g| g.coarse_size)),
        opt(report.graphs.as_ref().map(|g| g.coarse_size_bar)),
        opt(report.certificates_nontrivial)
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_eps_range(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--eps expects start:step:end, got {spec:?}");
    }
    let start: f64 = parts[0].parse().context("eps start")?;
    let step: f64 = parts[1].parse().context("eps step")?;
    let end: f64 = parts[2].parse().context("eps end")?;
    if step <= 0.0 || end < start || start < 0.0 {
        bail!("--eps range must satisfy 0 <= start <= end with positive step");
    }
    let mut out = Vec::new();
    let mut value = start;
    while value <= end + step * 1e-9 {
        out.push(value);
        value = start + step * (out.len() as f64);
    }
    Ok(out)
}

fn cmd_experiment(args: ExperimentArgs, seed: u64, verbose: bool) -> anyhow::Result<ExitCode> {
    let fw = load_framework(&args.framework)?;
    let truth = load_alignment(&args.ground_truth)?;
    let eps = parse_eps_range(&args.eps)?;
    let cfg = RgdConfig {
        max_iters: args.iters,
        ..RgdConfig::default()
    };
    let result = spectral::noise_sweep_experiment(&fw, &truth, &eps, args.trials, &cfg, seed)?;
    std::fs::write(&args.out, result.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let inversions = result.lambda_median_inversions();
    println!(
        "lambda_(d+1) medians over {} levels: {} inversion(s)",
        result.lambda_medians.len(),
        inversions
    );
    for (eps, median) in &result.lambda_medians {
        println!("  eps = {eps:<8.4}: median lambda_(d+1) = {median:.6e}");
    }
    let slopes: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.ratio_slope)
        .collect();
    if slopes.is_empty() {
        println!("ratio slopes: no converged runs with enough decay points");
    } else {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        println!(
            "ratio slopes over {} converged runs: mean {mean:.4e} (negative = geometric decay)",
            slopes.len()
        );
    }
    if verbose {
        eprintln!("sweep -> {}", args.out.display());
    }
    Ok(ExitCode::SUCCESS)
}
