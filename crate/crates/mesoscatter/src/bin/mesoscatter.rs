// Batch front-end for the scattering pipeline.
//
// Every subcommand loads one JSON experiment config, runs a single stage of
// the pipeline, prints a one-line summary per stage, and writes the artifacts
// declared under `outputs`. Exit codes: 0 success, 1 internal/module error,
// 2 config problem (with a path-to-field diagnostic), 3 solver stall (the
// residual history is written next to the other artifacts).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mesoscatter::analysis::{
    compare_far_fields, convergence_study, fit_loglog_slope, l2_comparison_vectors, AnalysisError,
    StudyConfig, SweepPoint,
};
use mesoscatter::cluster::{counting_sums, Cluster};
use mesoscatter::config::{self, ClusterConfig, ConfigError, ExperimentConfig};
use mesoscatter::effective::{compute_c_tensors, compute_k0, effective_parameters};
use mesoscatter::foldy_lax::{discrete_far_field, moment_l2_bounds, solve_with, FoldyLaxError};
use mesoscatter::ls_solver::{effective_far_field, g_alpha_k, ls_solve_with, LsContrasts, LsError};
use mesoscatter::report;

#[derive(Parser)]
#[command(
    name = "mesoscatter",
    about = "Electromagnetic scattering by clusters of small anisotropic particles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete multiple-scattering system and write its far field
    FoldyLax(RunArgs),
    /// Solve the effective-medium volume equation on a voxel grid
    LsSolve(RunArgs),
    /// Corrected effective tensors for the configured shape and dilution
    Effective(RunArgs),
    /// Print the averaging tensor K0 and its deviation from -I/3
    K0(RunArgs),
    /// Interaction counting sums and their fitted scaling exponents
    Counting(RunArgs),
    /// One discrete-vs-effective far-field comparison at the configured c_r
    Compare(RunArgs),
    /// Dilution sweep with a fitted far-field convergence slope
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Directory that relative output paths are resolved against (created on
    /// demand); defaults to the current directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

enum CliError {
    // exit 2
    Config(ConfigError),
    // exit 3; history may be empty when a dense solve missed the tolerance
    Solver {
        stage: &'static str,
        residual: f64,
        history: Vec<f64>,
    },
    // exit 1
    Module(String),
    Io {
        path: PathBuf,
        message: String,
    },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn module_err(e: impl std::fmt::Display) -> CliError {
    CliError::Module(e.to_string())
}

fn fl_err(e: FoldyLaxError) -> CliError {
    match e {
        FoldyLaxError::NotConverged { residual, history } => CliError::Solver {
            stage: "foldy-lax",
            residual,
            history,
        },
        other => CliError::Module(other.to_string()),
    }
}

fn ls_err(e: LsError) -> CliError {
    match e {
        LsError::NotConverged { residual, history } => CliError::Solver {
            stage: "ls-solve",
            residual,
            history,
        },
        other => CliError::Module(other.to_string()),
    }
}

fn analysis_err(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::FoldyLax(inner) => fl_err(inner),
        AnalysisError::Ls(inner) => ls_err(inner),
        other => CliError::Module(other.to_string()),
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Command::FoldyLax(a) => ("foldy-lax", a),
        Command::LsSolve(a) => ("ls-solve", a),
        Command::Effective(a) => ("effective", a),
        Command::K0(a) => ("k0", a),
        Command::Counting(a) => ("counting", a),
        Command::Compare(a) => ("compare", a),
        Command::Sweep(a) => ("sweep", a),
    };
    match run(sub, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Solver {
            stage,
            residual,
            history,
        }) => {
            let path = resolve(&args.out_dir, Path::new("residual_history.txt"));
            let mut lines = String::new();
            for r in &history {
                lines.push_str(&format!("{r:.16e}\n"));
            }
            if history.is_empty() {
                lines.push_str(&format!("{residual:.16e}\n"));
            }
            let note = match write_file(&path, &lines) {
                Ok(()) => format!("residual history in {}", path.display()),
                Err(_) => format!("could not write residual history to {}", path.display()),
            };
            eprintln!(
                "{stage}: solver stalled at relative residual {residual:.3e} after {} iterations; {note}",
                history.len()
            );
            ExitCode::from(3)
        }
        Err(CliError::Module(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
        Err(CliError::Io { path, message }) => {
            eprintln!("cannot write {}: {message}", path.display());
            ExitCode::FAILURE
        }
    }
}

// Respect MESOSCATTER_THREADS before any parallel region spins up the
// default pool. A bad value is reported but never fatal.
fn init_threads() {
    if let Ok(v) = std::env::var("MESOSCATTER_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("MESOSCATTER_THREADS ignored: expected a positive integer, got {v:?}"),
        }
    }
}

fn run(sub: &'static str, args: &RunArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    println!("loaded {}", args.config.display());
    // Fail before any work if the config declares an artifact this
    // subcommand cannot produce: a zero-exit run must leave every declared
    // output on disk.
    let produces_csv = matches!(sub, "foldy-lax" | "ls-solve" | "compare");
    if cfg.outputs.far_field_csv.is_some() && !produces_csv {
        return Err(config_invalid(
            "outputs.far_field_csv",
            format!("not produced by the {sub} subcommand"),
        ));
    }
    match sub {
        "foldy-lax" => run_foldy_lax(&cfg, args),
        "ls-solve" => run_ls_solve(&cfg, args),
        "effective" => run_effective(&cfg, args),
        "k0" => run_k0(&cfg, args),
        "counting" => run_counting(&cfg, args),
        "compare" => run_compare(&cfg, args),
        "sweep" => run_sweep(&cfg, args),
        _ => unreachable!(),
    }
}

fn config_invalid(path: &str, message: String) -> CliError {
    CliError::Config(ConfigError::Invalid {
        path: path.to_string(),
        message,
    })
}

fn resolve(out_dir: &Option<PathBuf>, declared: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if !declared.is_absolute() => dir.join(declared),
        _ => declared.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_artifact(
    args: &RunArgs,
    declared: &Option<PathBuf>,
    contents: &str,
) -> Result<(), CliError> {
    if let Some(declared) = declared {
        let path = resolve(&args.out_dir, declared);
        write_file(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_cluster(cluster: &Cluster, layer: Option<f64>) {
    println!(
        "cluster: {} particles, delta = {:.4e}, radius a = {:.4e}, min separation = {:.4e}",
        cluster.len(),
        cluster.delta(),
        cluster.delta() / cluster.c_r(),
        cluster.min_separation()
    );
    if let Some(volume) = layer {
        println!(
            "boundary layer: volume {:.4e} ({:.3} x delta)",
            volume,
            volume / cluster.delta()
        );
    }
}

fn run_foldy_lax(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let pw = cfg.plane_wave().map_err(module_err)?;
    let pair = cfg.polarization_pair().map_err(module_err)?;
    let (cluster, layer) = cfg.build_cluster().map_err(module_err)?;
    print_cluster(&cluster, layer);

    let t = Instant::now();
    let sol = solve_with(&cluster, &pair, &pw, cfg.solve_method(), &cfg.gmres()).map_err(fl_err)?;
    println!(
        "foldy-lax: {} unknowns, {} iterations, residual {:.3e}, {:.2} s",
        6 * cluster.len(),
        sol.solver_iterations,
        sol.residual_norm,
        t.elapsed().as_secs_f64()
    );

    let dirs = cfg.build_directions();
    let far =
        discrete_far_field(&sol, &cluster, &pair, pw.wavenumber(), &dirs).map_err(module_err)?;
    println!(
        "far field: {} directions, sup {:.4e}, transversality {:.3e}",
        dirs.len(),
        far.sup_norm(),
        far.transversality_defect()
    );

    let bounds = moment_l2_bounds(&sol, &cluster, &pair, &pw);
    println!(
        "moment bounds: electric {:.4e} <= {:.4e}, magnetic {:.4e} <= {:.4e}, hold = {}{}",
        bounds.electric_lhs,
        bounds.electric_rhs,
        bounds.magnetic_lhs,
        bounds.magnetic_rhs,
        bounds.hold(),
        if bounds.regime_ok {
            ""
        } else {
            " (outside the proved dilution regime)"
        }
    );

    write_artifact(
        args,
        &cfg.outputs.far_field_csv,
        &report::far_field_csv(&far),
    )?;
    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::foldy_lax_report(cluster.len(), &sol, &far, &bounds),
    )
}

fn run_ls_solve(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let pw = cfg.plane_wave().map_err(module_err)?;
    let pair = cfg.polarization_pair().map_err(module_err)?;
    let c_r = cfg.cluster.c_r();
    let k = pw.wavenumber().value();

    let k0 = compute_k0(cfg.k0_order);
    let tensors = compute_c_tensors(&pair, c_r, &k0).map_err(module_err)?;
    let contrasts = LsContrasts::corrected(&tensors, c_r);
    let g = g_alpha_k(cfg.ls.alpha, k);
    println!(
        "regularity gate: g(alpha = {}, k = {}) = {:.6e}, c_reg treated as 1",
        cfg.ls.alpha, k, g
    );

    let t = Instant::now();
    let field = ls_solve_with(cfg.ls.n, &contrasts, &pw, &cfg.ls_gmres()).map_err(ls_err)?;
    println!(
        "ls-solve: N = {} ({} voxels), {} iterations, residual {:.3e}, {:.2} s",
        field.n,
        field.n * field.n * field.n,
        field.iterations,
        field.residual_norm,
        t.elapsed().as_secs_f64()
    );

    let dirs = cfg.build_directions();
    let far = effective_far_field(&field, &contrasts, k, &dirs).map_err(module_err)?;
    println!(
        "far field: {} directions, sup {:.4e}, transversality {:.3e}",
        dirs.len(),
        far.sup_norm(),
        far.transversality_defect()
    );

    write_artifact(
        args,
        &cfg.outputs.far_field_csv,
        &report::far_field_csv(&far),
    )?;
    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::volume_field_json(&field, g),
    )
}

fn run_effective(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let pair = cfg.polarization_pair().map_err(module_err)?;
    let c_r = cfg.cluster.c_r();
    let k0 = compute_k0(cfg.k0_order);
    let tensors = compute_c_tensors(&pair, c_r, &k0).map_err(module_err)?;
    let params = effective_parameters(&tensors, &pair, c_r);

    println!(
        "effective: c_r = {}, spectral radius of c_r^-3 P0 K0 = {:.4e}",
        c_r, tensors.spectral_radius
    );
    println!(
        "eps_ring diag: [{:.8}, {:.8}, {:.8}] (leading [{:.8}, {:.8}, {:.8}])",
        params.eps_ring[0][0],
        params.eps_ring[1][1],
        params.eps_ring[2][2],
        params.eps_ring_leading[0][0],
        params.eps_ring_leading[1][1],
        params.eps_ring_leading[2][2]
    );
    println!(
        "mu_ring diag:  [{:.8}, {:.8}, {:.8}] (leading [{:.8}, {:.8}, {:.8}])",
        params.mu_ring[0][0],
        params.mu_ring[1][1],
        params.mu_ring[2][2],
        params.mu_ring_leading[0][0],
        params.mu_ring_leading[1][1],
        params.mu_ring_leading[2][2]
    );

    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::effective_report(c_r, &tensors, &params),
    )
}

fn run_k0(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let k0 = compute_k0(cfg.k0_order);
    let mut dev2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { -1.0 / 3.0 } else { 0.0 };
            dev2 += (k0[i][j] - target) * (k0[i][j] - target);
        }
    }
    let deviation = dev2.sqrt();

    println!("K0 (Gauss-Legendre order {}):", cfg.k0_order);
    for row in &k0 {
        println!("  [{:+.12e}, {:+.12e}, {:+.12e}]", row[0], row[1], row[2]);
    }
    println!("deviation from -I/3 (Frobenius): {deviation:.4e}");

    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::k0_report(&k0, deviation),
    )
}

fn run_counting(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let counting = cfg.counting.clone().unwrap_or_default();
    let c_r = cfg.cluster.c_r();
    let mut entries = Vec::with_capacity(counting.exponents.len());
    for &kappa in &counting.exponents {
        let mut points = Vec::with_capacity(counting.n.len());
        for &n in &counting.n {
            let cluster = Cluster::lattice(n, c_r).map_err(module_err)?;
            let sums = counting_sums(&cluster, kappa);
            points.push(report::CountingPoint {
                n,
                delta: cluster.delta(),
                max_sum: sums.max,
                mean_sum: sums.mean,
            });
        }
        let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.delta, p.max_sum)).collect();
        let fitted_slope = fit_loglog_slope(&samples);
        println!(
            "counting kappa = {}: fitted slope {:.4} of max sum vs delta over n = {:?}",
            kappa, fitted_slope, counting.n
        );
        entries.push(report::CountingEntry {
            exponent: kappa,
            points,
            fitted_slope,
        });
    }

    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::counting_report(&entries),
    )
}

fn run_compare(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let pw = cfg.plane_wave().map_err(module_err)?;
    let pair = cfg.polarization_pair().map_err(module_err)?;
    let (cluster, layer) = cfg.build_cluster().map_err(module_err)?;
    print_cluster(&cluster, layer);
    let c_r = cluster.c_r();
    let k = pw.wavenumber().value();

    let k0 = compute_k0(cfg.k0_order);
    let ops = compute_c_tensors(&pair, c_r, &k0).map_err(module_err)?;

    let t = Instant::now();
    let sol = solve_with(&cluster, &pair, &pw, cfg.solve_method(), &cfg.gmres()).map_err(fl_err)?;
    println!(
        "foldy-lax: {} unknowns, {} iterations, residual {:.3e}, {:.2} s",
        6 * cluster.len(),
        sol.solver_iterations,
        sol.residual_norm,
        t.elapsed().as_secs_f64()
    );

    let dirs = cfg.build_directions();
    let e_disc =
        discrete_far_field(&sol, &cluster, &pair, pw.wavenumber(), &dirs).map_err(module_err)?;

    let contrasts = LsContrasts::corrected(&ops, c_r);
    let t = Instant::now();
    let field = ls_solve_with(cfg.ls.n, &contrasts, &pw, &cfg.ls_gmres()).map_err(ls_err)?;
    println!(
        "ls-solve: N = {} ({} voxels), {} iterations, residual {:.3e}, {:.2} s",
        field.n,
        field.n * field.n * field.n,
        field.iterations,
        field.residual_norm,
        t.elapsed().as_secs_f64()
    );
    let e_eff = effective_far_field(&field, &contrasts, k, &dirs).map_err(module_err)?;

    let cmp = compare_far_fields(&e_disc, &e_eff).map_err(module_err)?;
    let l2 = l2_comparison_vectors(&sol, &field, &cluster, &ops).map_err(module_err)?;
    let point = SweepPoint {
        c_r,
        abs_err: cmp.abs_err,
        rel_err: cmp.rel_err,
        l2_eps: l2.eps_norm,
        l2_mu: l2.mu_norm,
        transversality_disc: e_disc.transversality_defect(),
        transversality_eff: e_eff.transversality_defect(),
    };
    println!(
        "compare: abs err {:.4e}, rel err {:.4e}, l2 (eps, mu) = ({:.4e}, {:.4e}){}",
        point.abs_err,
        point.rel_err,
        point.l2_eps,
        point.l2_mu,
        if l2.interpolated {
            " [interpolated ball averages]"
        } else {
            ""
        }
    );

    write_artifact(
        args,
        &cfg.outputs.far_field_csv,
        &report::far_field_csv(&e_disc),
    )?;
    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::compare_report(&point, &cfg.echo_json()),
    )
}

fn run_sweep(cfg: &ExperimentConfig, args: &RunArgs) -> Result<(), CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_invalid("sweep", "required by the sweep subcommand".to_string()))?;
    let lattice_n = match &cfg.cluster {
        ClusterConfig::Lattice { n, .. } => *n,
        _ => {
            return Err(config_invalid(
                "cluster.type",
                "the sweep subcommand runs on a lattice cluster".to_string(),
            ))
        }
    };
    let pw = cfg.plane_wave().map_err(module_err)?;
    let pair = cfg.polarization_pair().map_err(module_err)?;
    let study = StudyConfig {
        lattice_n,
        ls_grid: cfg.ls.n,
        pw,
        pair,
        c_r_values: sweep.c_r.clone(),
        directions: cfg.build_directions(),
        method: cfg.solve_method(),
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        k0_order: cfg.k0_order,
    };

    let t = Instant::now();
    let rep = convergence_study(&study).map_err(analysis_err)?;
    for p in &rep.sweep {
        println!(
            "c_r = {}: rel err {:.4e}, abs err {:.4e}, l2 (eps, mu) = ({:.4e}, {:.4e})",
            p.c_r, p.rel_err, p.abs_err, p.l2_eps, p.l2_mu
        );
    }
    println!(
        "sweep: fitted slope {:.4} over {} points, {:.2} s",
        rep.fitted_slope,
        rep.sweep.len(),
        t.elapsed().as_secs_f64()
    );

    write_artifact(
        args,
        &cfg.outputs.report_json,
        &report::sweep_report(&rep, &cfg.echo_json()),
    )
}
