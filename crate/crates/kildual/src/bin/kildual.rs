//! Command-line front end: curvature verification, dualization, rotational
//! classification, Cheeger estimates, Dirichlet solves, disk exhaustion and
//! canned reproduction runs. Exit codes: 0 success, 1 tolerance failure,
//! 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use kildual::config::{ConfigError, RunConfig};
use kildual::curvature::{
    riemann_closed_form_ctx, riemann_finite_difference, CurvatureCtx, FdControl,
};
use kildual::duality::{curl_tolerance, dualize, verify_duality, GraphSource};
use kildual::expr::ScalarField;
use kildual::field::C1Field;
use kildual::geometry::{ChartDomain, Epsilon, SubmersionSpec};
use kildual::graphs::{GraphGrid, PolarMesh};
use kildual::quad::QuadControl;
use kildual::report::{fmt_f64, write_csv, write_json};
use kildual::rotational::{
    causality_radius, cheeger_radial, classify, profile_h, radial_point, rotational_profile,
    Classification, RadialData, DEFAULT_HORIZON,
};
use kildual::sampling;
use kildual::solver::{
    prescribe_normal, solve_dirichlet, BoundaryData, DirichletProblem, SolveControls,
};

#[derive(Parser)]
#[command(
    name = "kildual",
    about = "Killing submersions, Killing graphs and their conformal duality",
    version
)]
struct Cli {
    /// Output directory for reports and tables
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed of the randomized samplers
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Multiplier applied to the pass/fail tolerances
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the closed-form Riemann tensor against the finite-difference
    /// oracle on random samples
    CurvatureCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Dualize an analytic graph and verify the duality identities
    Dualize {
        #[arg(long)]
        config: PathBuf,
        /// graph function on the chart
        #[arg(long)]
        u: String,
        /// its prescribed mean curvature
        #[arg(long = "H")]
        h: String,
        /// disk radius of the grid
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// polar grid resolution `n_rho,n_theta`
        #[arg(long, default_value = "32,128")]
        grid: String,
    },
    /// Classify the rotational H-surface of radial data
    Classify {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        mu: String,
        #[arg(long = "H")]
        h: f64,
        /// outer radius, `inf` for entire bases
        #[arg(long = "R", alias = "radius", default_value = "inf")]
        radius: String,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
    },
    /// Weighted Cheeger constant of rotational data
    Cheeger {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        mu: String,
        #[arg(long = "R", alias = "radius", default_value = "inf")]
        radius: String,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
    },
    /// Solve the prescribed-mean-curvature Dirichlet problem on a disk
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "H")]
        h: String,
        #[arg(long)]
        r: f64,
        /// Dirichlet boundary values (expression on the chart)
        #[arg(long)]
        boundary: Option<String>,
        /// frame components `n1,n2,n3` of the target normal at the origin
        #[arg(long)]
        target_normal: Option<String>,
        #[arg(long, default_value = "32,128")]
        grid: String,
    },
    /// Run the disk-exhaustion pipeline with the vertical normal at the
    /// origin
    Exhaust {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "H")]
        h: String,
        /// comma-separated increasing radii
        #[arg(long, default_value = "1,2,4")]
        radii: String,
        #[arg(long, default_value = "24,96")]
        grid: String,
    },
    /// Reproduce a canned verification table
    Reproduce {
        /// `hemisphere` or `ek-tau`
        case: String,
    },
}

#[derive(Debug)]
enum AppError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "configuration error: {m}"),
            AppError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Numerical(format!("io: {e}"))
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for AppError {
            fn from(e: $t) -> Self {
                AppError::Numerical(e.to_string())
            }
        }
    )*};
}

numerical_from!(
    kildual::geometry::GeoError,
    kildual::graphs::GraphError,
    kildual::rotational::RotationalError,
    kildual::solver::SolverError,
    kildual::expr::EvalError
);

fn parse_expr(text: &str, what: &str) -> Result<ScalarField, AppError> {
    ScalarField::parse(text).map_err(|e| AppError::Config(format!("{what}: {e}")))
}

fn parse_radial_expr(text: &str, what: &str) -> Result<ScalarField, AppError> {
    ScalarField::parse_radial(text).map_err(|e| AppError::Config(format!("{what}: {e}")))
}

fn parse_grid(text: &str) -> Result<(usize, usize), AppError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(AppError::Config(format!("bad grid spec `{text}`")));
    }
    let n = parts[0]
        .trim()
        .parse()
        .map_err(|_| AppError::Config(format!("bad grid spec `{text}`")))?;
    let m = parts[1]
        .trim()
        .parse()
        .map_err(|_| AppError::Config(format!("bad grid spec `{text}`")))?;
    Ok((n, m))
}

fn parse_radius(text: &str) -> Result<f64, AppError> {
    if text.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    text.parse()
        .map_err(|_| AppError::Config(format!("bad radius `{text}`")))
}

fn load_config(path: &Path) -> Result<RunConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(RunConfig::from_text(&text)?)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(AppError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<bool, AppError> {
    match &cli.command {
        Command::CurvatureCheck { config, samples } => curvature_check(cli, config, *samples),
        Command::Dualize {
            config,
            u,
            h,
            r,
            grid,
        } => dualize_cmd(cli, config, u, h, *r, grid),
        Command::Classify {
            lambda,
            mu,
            h,
            radius,
            horizon,
        } => classify_cmd(cli, lambda, mu, *h, radius, *horizon),
        Command::Cheeger {
            lambda,
            mu,
            radius,
            horizon,
        } => cheeger_cmd(cli, lambda, mu, radius, *horizon),
        Command::Solve {
            config,
            h,
            r,
            boundary,
            target_normal,
            grid,
        } => solve_cmd(
            cli,
            config,
            h,
            *r,
            boundary.as_deref(),
            target_normal.as_deref(),
            grid,
        ),
        Command::Exhaust {
            config,
            h,
            radii,
            grid,
        } => exhaust_cmd(cli, config, h, radii, grid),
        Command::Reproduce { case } => reproduce_cmd(cli, case),
    }
}

#[derive(Serialize)]
struct CurvatureReport {
    samples: usize,
    max_rel_err: f64,
    tolerance: f64,
    points: Vec<CurvaturePoint>,
}

#[derive(Serialize)]
struct CurvaturePoint {
    x: f64,
    y: f64,
    closed_form: f64,
    finite_difference: f64,
    rel_err: f64,
}

fn curvature_check(cli: &Cli, config: &Path, samples: usize) -> Result<bool, AppError> {
    let cfg = load_config(config)?;
    let mut rng = StdRng::seed_from_u64(cli.seed);
    let ctx = CurvatureCtx::new(&cfg.spec);
    let window = match cfg.spec.chart.domain {
        ChartDomain::Disk { radius } => radius.min(3.0) * 0.8,
        _ => 1.0,
    };
    let mut max_rel: f64 = 0.0;
    let mut points = Vec::new();
    for _ in 0..samples {
        let p = sampling::random_disk_point(&mut rng, window);
        let vs = [
            sampling::random_vec3(&mut rng),
            sampling::random_vec3(&mut rng),
            sampling::random_vec3(&mut rng),
            sampling::random_vec3(&mut rng),
        ];
        let cf = riemann_closed_form_ctx(
            &cfg.spec, &ctx, &cfg.model, p, &vs[0], &vs[1], &vs[2], &vs[3],
        )?;
        let fd = riemann_finite_difference(
            &cfg.spec,
            &cfg.model,
            p,
            &vs[0],
            &vs[1],
            &vs[2],
            &vs[3],
            FdControl::default(),
        )?;
        let rel = (cf - fd).abs() / (1.0 + cf.abs());
        max_rel = max_rel.max(rel);
        if points.len() < 32 {
            points.push(CurvaturePoint {
                x: p.0,
                y: p.1,
                closed_form: cf,
                finite_difference: fd,
                rel_err: rel,
            });
        }
    }
    let tolerance = 1e-4 * cli.tol_scale;
    let report = CurvatureReport {
        samples,
        max_rel_err: max_rel,
        tolerance,
        points,
    };
    write_json(&cli.out.join("curvature_check.json"), &report)?;
    println!(
        "curvature check: max relative error {} over {samples} samples",
        fmt_f64(max_rel)
    );
    Ok(max_rel < tolerance)
}

#[derive(Serialize)]
struct DualizeReportOut {
    curl_residual: f64,
    curl_tolerance: f64,
    path_mismatch: f64,
    omega_product_residual: f64,
    angle_function_residual: f64,
    conformal_residual: f64,
    dual_mean_curvature_error: f64,
    h_max: f64,
}

fn dualize_cmd(
    cli: &Cli,
    config: &Path,
    u_text: &str,
    h_text: &str,
    r: f64,
    grid: &str,
) -> Result<bool, AppError> {
    let cfg = load_config(config)?;
    if cfg.spec.epsilon != Epsilon::Riemannian {
        return Err(AppError::Config(
            "dualize expects a Riemannian (epsilon = 1) configuration".into(),
        ));
    }
    let h = parse_expr(h_text, "--H")?;
    let (shape, source) = if u_text.ends_with(".csv") {
        let grid = read_node_csv(Path::new(u_text))?;
        (grid.clone(), GraphSource::Grid(grid))
    } else {
        let u = parse_expr(u_text, "--u")?;
        let (n, m) = parse_grid(grid)?;
        let mesh = PolarMesh::new(r, n, m);
        let uc2 = kildual::field::C2Field::new(u);
        let shape = GraphGrid::polar_from_field(mesh, &uc2)
            .map_err(|e| AppError::Numerical(e.to_string()))?;
        (shape, GraphSource::Analytic(uc2))
    };
    let pair = dualize(
        &cfg.spec,
        &cfg.model,
        source,
        &h,
        &shape,
        QuadControl::default(),
    )?;
    let rep = verify_duality(&pair, 500)?;
    let out = DualizeReportOut {
        curl_residual: rep.curl_residual,
        curl_tolerance: curl_tolerance(rep.h_max) * cli.tol_scale,
        path_mismatch: rep.path_mismatch,
        omega_product_residual: rep.omega_product_residual,
        angle_function_residual: rep.angle_function_residual,
        conformal_residual: rep.conformal_residual,
        dual_mean_curvature_error: rep.dual_mean_curvature_error,
        h_max: rep.h_max,
    };
    write_json(&cli.out.join("pair.json"), &out)?;
    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(
        cli.out.join("primal.csv"),
        shape.to_csv(&cfg.spec, &cfg.model)?,
    )?;
    std::fs::write(
        cli.out.join("dual.csv"),
        pair.v.to_csv(&pair.dual_spec, &pair.dual_model)?,
    )?;
    println!(
        "dualize: curl residual {}, dual mean-curvature error {}",
        fmt_f64(rep.curl_residual),
        fmt_f64(rep.dual_mean_curvature_error)
    );
    Ok(rep.curl_residual < out.curl_tolerance)
}

#[derive(Serialize)]
struct ClassifyReport {
    classification: String,
    #[serde(rename = "rho_H")]
    rho_h: f64,
    half_height: Option<f64>,
    #[serde(rename = "g2_prime_at_rho_H")]
    g2_prime_at_rho_h: Option<f64>,
    cheeger: f64,
    cheeger_minimizing_rho: f64,
    #[serde(rename = "H0")]
    h0: f64,
    #[serde(rename = "H")]
    h: f64,
}

fn radial_data(lambda: &str, mu: &str, h: f64, radius: &str) -> Result<RadialData, AppError> {
    let lam = parse_radial_expr(lambda, "--lambda")?;
    let mu = parse_radial_expr(mu, "--mu")?;
    let r = parse_radius(radius)?;
    RadialData::new(lam, mu, r, h).map_err(|e| AppError::Config(e.to_string()))
}

fn classify_cmd(
    cli: &Cli,
    lambda: &str,
    mu: &str,
    h: f64,
    radius: &str,
    horizon: f64,
) -> Result<bool, AppError> {
    let data = radial_data(lambda, mu, h, radius)?;
    let class = classify(&data, horizon)?;
    let profile = rotational_profile(&data, horizon, 200)?;
    let cheeger = cheeger_radial(&data, horizon)?;
    let (name, half_height) = match &class {
        Classification::EntireGraph { horizon_limited } => (
            if *horizon_limited {
                "EntireGraph (horizon-limited)".to_string()
            } else {
                "EntireGraph".to_string()
            },
            None,
        ),
        Classification::HSphere { half_height, .. } => {
            ("HSphere".to_string(), Some(*half_height))
        }
        Classification::HCigar { .. } => ("HCigar".to_string(), None),
    };
    let report = ClassifyReport {
        classification: name.clone(),
        rho_h: profile.rho_h,
        half_height,
        g2_prime_at_rho_h: profile.g2_prime_at_rho_h,
        cheeger: cheeger.value,
        cheeger_minimizing_rho: cheeger.minimizing_rho,
        h0: 0.5 * cheeger.value,
        h,
    };
    write_json(&cli.out.join("classify.json"), &report)?;
    let rows: Vec<Vec<f64>> = profile
        .rho_samples
        .iter()
        .enumerate()
        .map(|(k, &rho)| {
            vec![
                rho,
                profile.c[k],
                profile.g1[k],
                profile.g2[k],
                profile.h_profile[k],
            ]
        })
        .collect();
    write_csv(&cli.out.join("profile.csv"), "rho,c,g1,g2,h", &rows)?;
    println!(
        "classification: {name}, rho_H = {}, Ch = {}, H0 = {}",
        fmt_f64(report.rho_h),
        fmt_f64(report.cheeger),
        fmt_f64(report.h0)
    );
    Ok(true)
}

#[derive(Serialize)]
struct CheegerReport {
    cheeger: f64,
    minimizing_rho: f64,
    at_boundary: bool,
}

fn cheeger_cmd(
    cli: &Cli,
    lambda: &str,
    mu: &str,
    radius: &str,
    horizon: f64,
) -> Result<bool, AppError> {
    let data = radial_data(lambda, mu, 0.0, radius)?;
    let est = cheeger_radial(&data, horizon)?;
    let report = CheegerReport {
        cheeger: est.value,
        minimizing_rho: est.minimizing_rho,
        at_boundary: est.at_boundary,
    };
    write_json(&cli.out.join("cheeger.json"), &report)?;
    println!(
        "Cheeger constant estimate {} (minimizing rho {}{})",
        fmt_f64(est.value),
        fmt_f64(est.minimizing_rho),
        if est.at_boundary {
            ", at the scan boundary"
        } else {
            ""
        }
    );
    Ok(true)
}

#[derive(Serialize)]
struct SolveReportOut {
    residual_sup: f64,
    tolerance: f64,
    newton_iters: usize,
    gradient_sup: f64,
    divergence_line_suspect: bool,
    phi: Option<[f64; 3]>,
    normal_residual: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn solve_cmd(
    cli: &Cli,
    config: &Path,
    h_text: &str,
    r: f64,
    boundary: Option<&str>,
    target_normal: Option<&str>,
    grid: &str,
) -> Result<bool, AppError> {
    let cfg = load_config(config)?;
    let h = parse_expr(h_text, "--H")?;
    let (n, m) = parse_grid(grid)?;
    let mesh = PolarMesh::new(r, n, m);
    let controls = SolveControls {
        tol: 1e-8 * cli.tol_scale,
        ..Default::default()
    };
    let (report, phi, normal_residual) = match (boundary, target_normal) {
        (Some(b), None) => {
            let b_field = parse_expr(b, "--boundary")?;
            let problem = DirichletProblem {
                spec: cfg.spec.clone(),
                model: cfg.model.clone(),
                h: C1Field::new(h),
                radius: r,
                boundary: BoundaryData::Field(b_field),
                mesh: mesh.clone(),
                controls,
            };
            (solve_dirichlet(&problem)?, None, None)
        }
        (None, Some(t)) => {
            let parts: Vec<f64> = t
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| AppError::Config(format!("bad target normal `{t}`")))?;
            if parts.len() != 3 {
                return Err(AppError::Config(format!("bad target normal `{t}`")));
            }
            let result = prescribe_normal(
                &cfg.spec,
                &cfg.model,
                &h,
                &mesh,
                &[parts[0], parts[1], parts[2]],
                controls,
                1e-6,
            )?;
            (result.report, Some(result.phi), Some(result.residual))
        }
        (None, None) => {
            let problem = DirichletProblem {
                spec: cfg.spec.clone(),
                model: cfg.model.clone(),
                h: C1Field::new(h),
                radius: r,
                boundary: BoundaryData::Values(vec![0.0; m]),
                mesh: mesh.clone(),
                controls,
            };
            (solve_dirichlet(&problem)?, None, None)
        }
        (Some(_), Some(_)) => {
            return Err(AppError::Config(
                "give either --boundary or --target-normal, not both".into(),
            ))
        }
    };
    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(
        cli.out.join("solution.csv"),
        report.u.to_csv(&cfg.spec, &cfg.model)?,
    )?;
    std::fs::write(cli.out.join("solution_grid.csv"), write_node_csv(&report.u))?;
    let out = SolveReportOut {
        residual_sup: report.residual_sup,
        tolerance: controls.tol,
        newton_iters: report.newton_iters,
        gradient_sup: report.gradient_sup,
        divergence_line_suspect: report
            .divergence_line
            .as_ref()
            .map(|d| d.is_straight)
            .unwrap_or(false),
        phi: phi.map(|p| [p[0], p[1], p[2]]),
        normal_residual,
    };
    write_json(&cli.out.join("solve.json"), &out)?;
    println!(
        "solve: residual {} after {} Newton iterations",
        fmt_f64(report.residual_sup),
        report.newton_iters
    );
    Ok(report.residual_sup < controls.tol)
}

#[derive(Serialize)]
struct ExhaustStepOut {
    radius: f64,
    phi: [f64; 3],
    residual_sup: f64,
    gradient_half_disk: f64,
    cauchy_delta: Option<f64>,
    divergence_line_suspect: bool,
}

fn exhaust_cmd(
    cli: &Cli,
    config: &Path,
    h_text: &str,
    radii: &str,
    grid: &str,
) -> Result<bool, AppError> {
    let cfg = load_config(config)?;
    let h = parse_expr(h_text, "--H")?;
    let radii: Vec<f64> = radii
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| AppError::Config(format!("bad radii list `{radii}`")))?;
    let (n, m) = parse_grid(grid)?;
    let steps = kildual::solver::disk_exhaustion(
        &cfg.spec,
        &cfg.model,
        &h,
        &radii,
        n,
        m,
        SolveControls::default(),
    )?;
    let out: Vec<ExhaustStepOut> = steps
        .iter()
        .map(|s| ExhaustStepOut {
            radius: s.radius,
            phi: [s.phi[0], s.phi[1], s.phi[2]],
            residual_sup: s.report.residual_sup,
            gradient_half_disk: s.gradient_half_disk,
            cauchy_delta: s.cauchy_delta,
            divergence_line_suspect: s
                .report
                .divergence_line
                .as_ref()
                .map(|d| d.is_straight)
                .unwrap_or(false),
        })
        .collect();
    write_json(&cli.out.join("exhaust.json"), &out)?;
    for s in &out {
        println!(
            "r = {}: sup|Gu| on half disk {}, cauchy {}",
            fmt_f64(s.radius),
            fmt_f64(s.gradient_half_disk),
            s.cauchy_delta.map(fmt_f64).unwrap_or_else(|| "-".into())
        );
    }
    Ok(true)
}

fn reproduce_cmd(cli: &Cli, case: &str) -> Result<bool, AppError> {
    match case {
        "hemisphere" => {
            // flat radial data with H = 1/2: sphere of radius 2
            let data = radial_data("1", "1", 0.5, "inf")?;
            let cr = causality_radius(&data, DEFAULT_HORIZON)?;
            let class = classify(&data, DEFAULT_HORIZON)?;
            let h_rim = profile_h(&data, cr.rho_h)?;
            let mut rows = Vec::new();
            for k in 0..=40 {
                let rho = cr.rho_h * k as f64 / 40.0 * (1.0 - 1e-9);
                let p = radial_point(&data, rho).map_err(AppError::from)?;
                rows.push(vec![
                    rho,
                    p.c,
                    p.g1,
                    p.g2,
                    profile_h(&data, rho).map_err(AppError::from)?,
                ]);
            }
            write_csv(&cli.out.join("hemisphere.csv"), "rho,c,g1,g2,h", &rows)?;
            #[derive(Serialize)]
            struct Hemisphere {
                rho_h: f64,
                half_height: f64,
                full_height_after_reflection: f64,
                classification: String,
            }
            let ok = (cr.rho_h - 2.0).abs() < 1e-9
                && (h_rim - 2.0).abs() < 1e-6
                && matches!(class, Classification::HSphere { .. });
            write_json(
                &cli.out.join("hemisphere.json"),
                &Hemisphere {
                    rho_h: cr.rho_h,
                    half_height: h_rim,
                    full_height_after_reflection: 2.0 * h_rim,
                    classification: format!("{class:?}"),
                },
            )?;
            println!(
                "hemisphere: rho_H = {}, height after reflection = {}",
                fmt_f64(cr.rho_h),
                fmt_f64(2.0 * h_rim)
            );
            Ok(ok)
        }
        "ek-tau" => {
            // homogeneous-space regression: C = τλ, a = −ετy, b = ετx,
            // K_M = κ, horizontal sectional curvature κ − 3ετ²
            let kappa = 1.0;
            let tau = 0.5;
            let spec = SubmersionSpec::homogeneous(kappa, tau, Epsilon::Riemannian);
            let model =
                kildual::geometry::connection_from_potential(&spec, QuadControl::default())?;
            let mut sup_c: f64 = 0.0;
            let mut sup_ab: f64 = 0.0;
            let mut sup_k: f64 = 0.0;
            let nn = 50;
            for i in 0..nn {
                for j in 0..nn {
                    let x = -0.9 + 1.8 * i as f64 / (nn - 1) as f64;
                    let y = -0.9 + 1.8 * j as f64 / (nn - 1) as f64;
                    let lam = spec
                        .chart
                        .lambda1
                        .f
                        .eval(x, y)
                        .map_err(AppError::from)?;
                    let c =
                        kildual::geometry::calabi_potential(&spec, (x, y), QuadControl::default())?;
                    sup_c = sup_c.max((c - tau * lam).abs());
                    let a = kildual::field::Field::value(&model.a, x, y)?;
                    let b = kildual::field::Field::value(&model.b, x, y)?;
                    sup_ab = sup_ab.max((a + tau * y).abs()).max((b - tau * x).abs());
                    let k = kildual::curvature::gauss_curvature(&spec.chart, (x, y))?;
                    sup_k = sup_k.max((k - kappa).abs());
                }
            }
            let p = (0.2, -0.3);
            let frame = kildual::geometry::frame_at(&spec, &model, (p.0, p.1, 0.0))?;
            let sec = kildual::curvature::sectional_curvature(&spec, &model, p, &frame.e[2])?;
            let sec_err = (sec - (kappa - 3.0 * tau * tau)).abs();
            #[derive(Serialize)]
            struct EkTau {
                sup_calabi_error: f64,
                sup_connection_error: f64,
                sup_gauss_error: f64,
                horizontal_sectional_error: f64,
            }
            write_json(
                &cli.out.join("ek_tau.json"),
                &EkTau {
                    sup_calabi_error: sup_c,
                    sup_connection_error: sup_ab,
                    sup_gauss_error: sup_k,
                    horizontal_sectional_error: sec_err,
                },
            )?;
            println!(
                "ek-tau: sup errors C {}, (a,b) {}, K {}, sectional {}",
                fmt_f64(sup_c),
                fmt_f64(sup_ab),
                fmt_f64(sup_k),
                fmt_f64(sec_err)
            );
            Ok(sup_c < 1e-8 && sup_ab < 1e-8 && sup_k < 1e-8 && sec_err < 1e-6)
        }
        other => Err(AppError::Config(format!(
            "unknown reproduction case `{other}` (expected `hemisphere` or `ek-tau`)"
        ))),
    }
}


/// Nodal polar-grid CSV (header `i,j,x,y,u`), reconstructible by
/// [`read_node_csv`]; the center node is row `0,0`.
fn write_node_csv(grid: &GraphGrid) -> String {
    let GraphGrid::Polar { mesh, u } = grid else {
        return String::new();
    };
    let mut out = String::from("i,j,x,y,u\n");
    out.push_str(&format!("0,0,0,0,{}\n", fmt_f64(u[0])));
    for i in 1..=mesh.n_rho {
        for j in 0..mesh.n_theta {
            let p = mesh.point(i, j);
            out.push_str(&format!(
                "{i},{j},{},{},{}\n",
                fmt_f64(p.0),
                fmt_f64(p.1),
                fmt_f64(u[mesh.idx(i, j as isize)])
            ));
        }
    }
    out
}

fn read_node_csv(path: &Path) -> Result<GraphGrid, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 5 {
            return Err(AppError::Config(format!(
                "{}: line {} has {} columns, expected i,j,x,y,u",
                path.display(),
                k + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, AppError> {
            s.trim()
                .parse()
                .map_err(|_| AppError::Config(format!("{}: bad number `{s}`", path.display())))
        };
        let i = parse(cols[0])? as usize;
        let j = parse(cols[1])? as usize;
        let x = parse(cols[2])?;
        let y = parse(cols[3])?;
        let uval = parse(cols[4])?;
        rows.push((i, j, x, y, uval));
    }
    let n_rho = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let n_theta = rows
        .iter()
        .filter(|r| r.0 == n_rho)
        .map(|r| r.1)
        .max()
        .unwrap_or(0)
        + 1;
    let radius = rows
        .iter()
        .map(|r| r.2.hypot(r.3))
        .fold(0.0f64, f64::max);
    if n_rho < 4 || n_theta < 8 || radius <= 0.0 {
        return Err(AppError::Config(format!(
            "{}: not a nodal polar grid export",
            path.display()
        )));
    }
    let mesh = PolarMesh::new(radius, n_rho, n_theta);
    let mut u = vec![f64::NAN; mesh.node_count()];
    for (i, j, _, _, uval) in rows {
        u[mesh.idx(i, j as isize)] = uval;
    }
    if u.iter().any(|v| v.is_nan()) {
        return Err(AppError::Config(format!(
            "{}: incomplete nodal grid",
            path.display()
        )));
    }
    Ok(GraphGrid::Polar { mesh, u })
}
