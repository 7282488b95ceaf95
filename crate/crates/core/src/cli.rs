//! Command-line front end. [`run`] is the whole program minus process exit.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::forms::is_umbilic;
use crate::integrator::{build_mesh, path_independence_check, IsoMesh, MarchOptions, MeshParams};
use crate::isothermic::{existence_residual, existence_residual_special, select_reduction, FieldSource};
use crate::obj::write_obj;
use crate::report::{
    MeshStats, PointResidual, PointStatus, Report, ReportConfig, Residuals, SurfaceInfo, Timing,
    Verdict, SCHEMA_VERSION,
};
use crate::surface::{builtin_catalog, parse_surface, SurfaceDef};
use crate::verify::{hopf_realness, mesh_diagnostics, DiagnosticsReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Two values given as `a,b` (or `axb` for integers); a single value is used twice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair<T>(pub T, pub T);

impl<T: FromStr + Copy> FromStr for Pair<T> {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
        let parse = |t: &str| t.parse::<T>().map_err(|_| format!("cannot parse `{t}`"));
        match parts.as_slice() {
            [a] => {
                let v = parse(a)?;
                Ok(Pair(v, v))
            }
            [a, b] => Ok(Pair(parse(a)?, parse(b)?)),
            _ => Err(format!("expected one or two values, got `{s}`")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isothermic", version, about = "Isothermic reparameterization of parametric surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in surfaces.
    List,
    /// Evaluate the existence condition on a grid of sample points.
    Check(CheckArgs),
    /// Build an isothermic mesh, verify it and export it.
    Reparam(ReparamArgs),
    /// Recompute the diagnostics stored in a `reparam` report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// `builtin:<name>?k=v,...`, a path to a surface document, or inline document text.
    #[arg(long)]
    surface: String,
    #[arg(long, default_value_t = 0)]
    branch: u8,
    #[arg(long = "tol-umbilic", default_value_t = crate::forms::DEFAULT_UMBILIC_TOL)]
    tol_umbilic: f64,
    /// Finite-difference step override.
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
    /// JSON report path; without it the report goes to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Sample grid `n,m`.
    #[arg(long, default_value = "20,20")]
    size: Pair<usize>,
    #[arg(long = "tol-residual", default_value_t = 1e-4)]
    tol_residual: f64,
}

#[derive(Debug, Args)]
struct ReparamArgs {
    #[command(flatten)]
    common: Common,
    /// Seed `x,y`; defaults to the centre of the domain.
    #[arg(long, allow_hyphen_values = true)]
    origin: Option<Pair<f64>>,
    #[arg(long, default_value_t = 1.0)]
    k0: f64,
    /// `h_beta,h_gamma`; negative steps march backwards.
    #[arg(long, default_value = "0.02", allow_hyphen_values = true)]
    steps: Pair<f64>,
    /// `n_beta,n_gamma`.
    #[arg(long, default_value = "51,51")]
    size: Pair<usize>,
    #[arg(long = "tol-residual", default_value_t = 1e-4)]
    tol_residual: f64,
    /// Threshold for every mesh diagnostic.
    #[arg(long = "tol-diagnostic", default_value_t = 1e-3)]
    tol_diagnostic: f64,
    /// OBJ output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Report written by `reparam`.
    report: Option<PathBuf>,
    #[arg(long = "report")]
    report_flag: Option<PathBuf>,
}

/// Runs the program on `args` (including the binary name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::List => cmd_list(out),
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Reparam(a) => cmd_reparam(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(e.to_string())
}

/// Resolves `--surface`: URI, file path, or inline document. Returns the
/// parsed surface and the text it came from.
pub fn load_surface(spec: &str) -> Result<(SurfaceDef, String)> {
    let trimmed = spec.trim();
    if trimmed.starts_with("builtin:") {
        return Ok((parse_surface(trimmed)?, trimmed.to_string()));
    }
    let path = Path::new(trimmed);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        return Ok((parse_surface(&text)?, text));
    }
    if trimmed.contains('=') {
        return Ok((parse_surface(spec)?, spec.to_string()));
    }
    Err(Error::Config(format!("`{spec}` is neither a builtin URI nor a readable file")))
}

fn cmd_list(out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "{:<10} {:<16} {:<44} description", "name", "parameters", "domain").map_err(io_err)?;
    for d in builtin_catalog() {
        let params: Vec<String> = d.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        let domain = parse_surface(&format!("builtin:{}", d.name))?.domain;
        let axis = |lo: f64, hi: f64, periodic: bool| {
            format!("[{lo:.4}, {hi:.4}]{}", if periodic { "p" } else { "" })
        };
        let dom = format!(
            "{} x {}",
            axis(domain.x_min, domain.x_max, domain.periodic_x),
            axis(domain.y_min, domain.y_max, domain.periodic_y)
        );
        let params = if params.is_empty() { "-".to_string() } else { params.join(",") };
        writeln!(out, "{:<10} {:<16} {:<44} {}", d.name, params, dom, d.description).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn check_sizes(size: Pair<usize>) -> Result<()> {
    if size.0 < 2 || size.1 < 2 {
        return Err(Error::Config(format!("sizes must be at least 2, got {}x{}", size.0, size.1)));
    }
    Ok(())
}

fn check_tolerances(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    Ok(())
}

fn emit_report(report: &Report, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, json + "\n").map_err(io_err),
        None => writeln!(out, "{json}").map_err(io_err),
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32> {
    let start = Instant::now();
    let c = &a.common;
    check_sizes(a.size)?;
    check_tolerances(&[("tol-umbilic", c.tol_umbilic), ("tol-residual", a.tol_residual)])?;
    if c.branch > 3 {
        return Err(Error::Config(format!("branch must be 0..=3, got {}", c.branch)));
    }
    let (surface, spec) = load_surface(&c.surface)?;
    let d = surface.domain;
    let (n, m) = (a.size.0, a.size.1);

    let mut points = Vec::with_capacity(n * m);
    let mut umbilic_count = 0;
    for i in 0..n {
        for j in 0..m {
            let x = d.x_min + (i as f64 + 0.5) * (d.x_max - d.x_min) / n as f64;
            let y = d.y_min + (j as f64 + 0.5) * (d.y_max - d.y_min) / m as f64;
            let eval = || -> Result<(Option<crate::isothermic::Reduction>, f64)> {
                let fd = surface.fundamental_at(x, y)?;
                if is_umbilic(&fd, c.tol_umbilic) {
                    return Err(Error::UmbilicPoint { x, y });
                }
                match select_reduction(&fd) {
                    Some(r) => Ok((Some(r), existence_residual_special(&surface, (x, y), r, c.fd_step, c.tol_umbilic)?)),
                    None => Ok((None, existence_residual(&surface, (x, y), c.branch, c.fd_step, c.tol_umbilic)?)),
                }
            };
            let (reduction, residual, status) = match eval() {
                Ok((r, v)) => (r, Some(v), PointStatus::Evaluated),
                Err(Error::UmbilicPoint { .. }) => {
                    umbilic_count += 1;
                    (None, None, PointStatus::Umbilic)
                }
                Err(e) => (None, None, PointStatus::Error(e.to_string())),
            };
            points.push(PointResidual {
                x,
                y,
                reduction,
                residual,
                status,
            });
        }
    }
    let evaluated: Vec<f64> = points.iter().filter_map(|p| p.residual).collect();
    let errors = points.iter().filter(|p| matches!(p.status, PointStatus::Error(_))).count();
    let max_abs = evaluated.iter().map(|r| r.abs()).reduce(f64::max);
    let verdict = match max_abs {
        Some(v) if !(v <= a.tol_residual) => Verdict::Fail,
        Some(_) if errors == 0 => Verdict::Pass,
        _ => Verdict::Undefined,
    };

    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "check".into(),
        surface: SurfaceInfo {
            name: surface.name.clone(),
            spec,
        },
        config: ReportConfig {
            origin: None,
            k0: 1.0,
            branch: c.branch,
            steps: [0.0, 0.0],
            size: [n, m],
            tol_umbilic: c.tol_umbilic,
            tol_residual: a.tol_residual,
            tol_diagnostic: 0.0,
            fd_step: c.fd_step,
            workers: c.workers,
        },
        residuals: Residuals::Existence {
            max_abs,
            threshold: a.tol_residual,
            points,
        },
        umbilic_count,
        verdict,
        mesh_stats: None,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
        },
        mesh: None,
    };
    if c.report.is_some() {
        writeln!(
            out,
            "check {}: verdict {}, max |residual| {}, umbilic points {umbilic_count}, errors {errors}",
            surface.name,
            verdict,
            max_abs.map_or("n/a".into(), |v| format!("{v:.3e}")),
        )
        .map_err(io_err)?;
    }
    emit_report(&report, c.report.as_deref(), out)?;
    Ok(verdict.exit_code())
}

/// Diagnostics, Hopf realness and path independence of a mesh, as stored in reports.
fn evaluate_mesh(mesh: &IsoMesh) -> Result<(DiagnosticsReport, Option<f64>)> {
    let mut diag = mesh_diagnostics(mesh, &mesh.surface)?;
    let n = mesh.params.n_beta.min(mesh.params.n_gamma) - 1;
    diag.path_independence = path_independence_check(&mesh.surface, &mesh.params, n).ok();
    let hopf = match hopf_realness(mesh, &mesh.surface) {
        Ok(v) => Some(v),
        Err(Error::NotConformalEnough { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((diag, hopf))
}

fn mesh_verdict(diag: &DiagnosticsReport, hopf: Option<f64>, tol: f64) -> Verdict {
    let under = |v: f64| v <= tol;
    let ok = under(diag.conformality_max)
        && under(diag.orthogonality_max)
        && under(diag.curvature_line_max)
        && under(diag.integral_drift_max)
        && diag.path_independence.is_none_or(under)
        && hopf.is_some_and(under);
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn cmd_reparam(a: &ReparamArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let start = Instant::now();
    let c = &a.common;
    check_sizes(a.size)?;
    check_tolerances(&[
        ("tol-umbilic", c.tol_umbilic),
        ("tol-residual", a.tol_residual),
        ("tol-diagnostic", a.tol_diagnostic),
    ])?;
    let (surface, spec) = load_surface(&c.surface)?;
    let origin = a.origin.map_or(surface.domain.center(), |p| (p.0, p.1));
    let params = MeshParams {
        origin,
        k0: a.k0,
        branch: c.branch,
        h_beta: a.steps.0,
        h_gamma: a.steps.1,
        n_beta: a.size.0,
        n_gamma: a.size.1,
        workers: c.workers,
        options: MarchOptions {
            umbilic_tol: c.tol_umbilic,
            fd_step: c.fd_step,
        },
    };
    let mesh = build_mesh(&surface, &params)?;
    let invalid_rows = mesh.grid.iter().filter(|r| r.iter().all(|n| !n.valid)).count();
    if invalid_rows > 0 {
        writeln!(err, "warning: {invalid_rows} grid rows have no valid node").map_err(io_err)?;
    }
    let (diag, hopf) = evaluate_mesh(&mesh)?;
    if diag.path_independence.is_none() {
        writeln!(err, "warning: path-independence check left the domain; not reported").map_err(io_err)?;
    }
    if hopf.is_none() {
        writeln!(err, "warning: mesh not conformal enough for the Hopf check").map_err(io_err)?;
    }
    let verdict = mesh_verdict(&diag, hopf, a.tol_diagnostic);

    let mut buf = Vec::new();
    let obj = write_obj(&mesh, &mut buf).map_err(io_err)?;
    if let Some(path) = &a.out {
        std::fs::write(path, buf).map_err(io_err)?;
    }

    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "reparam".into(),
        surface: SurfaceInfo {
            name: surface.name.clone(),
            spec,
        },
        config: ReportConfig {
            origin: Some([origin.0, origin.1]),
            k0: a.k0,
            branch: c.branch,
            steps: [a.steps.0, a.steps.1],
            size: [a.size.0, a.size.1],
            tol_umbilic: c.tol_umbilic,
            tol_residual: a.tol_residual,
            tol_diagnostic: a.tol_diagnostic,
            fd_step: c.fd_step,
            workers: c.workers,
        },
        residuals: Residuals::Mesh {
            diagnostics: diag.clone(),
            hopf_realness: hopf,
            threshold: a.tol_diagnostic,
        },
        umbilic_count: 0,
        verdict,
        mesh_stats: Some(MeshStats {
            n_beta: a.size.0,
            n_gamma: a.size.1,
            valid_nodes: mesh.valid_count(),
            vertices: obj.vertices,
            faces: obj.faces,
            invalid_rows,
        }),
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
        },
        mesh: Some(mesh.grid.clone()),
    };
    if c.report.is_some() {
        writeln!(
            out,
            "reparam {}: verdict {}, conformality {:.3e}, orthogonality {:.3e}, curvature-line {:.3e}, hopf {}",
            surface.name,
            verdict,
            diag.conformality_max,
            diag.orthogonality_max,
            diag.curvature_line_max,
            hopf.map_or("n/a".into(), |v| format!("{v:.3e}")),
        )
        .map_err(io_err)?;
    }
    emit_report(&report, c.report.as_deref(), out)?;
    Ok(verdict.exit_code())
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b),
        (None, None) => true,
        _ => false,
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let path = a
        .report
        .as_ref()
        .or(a.report_flag.as_ref())
        .ok_or_else(|| Error::Config("verify needs a report path".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let report: Report =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("report schema: {e}")))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "report schema version {} is not {SCHEMA_VERSION}",
            report.schema_version
        )));
    }
    let (Some(grid), Residuals::Mesh { diagnostics, hopf_realness, threshold }) = (&report.mesh, &report.residuals)
    else {
        return Err(Error::Config("report schema: not a reparam report".into()));
    };
    let cfg = &report.config;
    let origin = cfg
        .origin
        .ok_or_else(|| Error::Config("report schema: missing origin".into()))?;
    let shape_ok = grid.len() == cfg.size[0] && grid.iter().all(|r| r.len() == cfg.size[1]);
    if !shape_ok {
        return Err(Error::Config("report schema: mesh shape does not match config.size".into()));
    }
    let surface = parse_surface(&report.surface.spec)?;
    let mesh = IsoMesh {
        grid: grid.clone(),
        params: MeshParams {
            origin: (origin[0], origin[1]),
            k0: cfg.k0,
            branch: cfg.branch,
            h_beta: cfg.steps[0],
            h_gamma: cfg.steps[1],
            n_beta: cfg.size[0],
            n_gamma: cfg.size[1],
            workers: cfg.workers,
            options: MarchOptions {
                umbilic_tol: cfg.tol_umbilic,
                fd_step: cfg.fd_step,
            },
        },
        surface,
    };
    let (diag, hopf) = evaluate_mesh(&mesh)?;
    let s = diagnostics;
    let mut mismatches = Vec::new();
    let mut cmp = |name: &str, ok: bool| {
        if !ok {
            mismatches.push(name.to_string());
        }
    };
    cmp("conformality_max", close(diag.conformality_max, s.conformality_max));
    cmp("orthogonality_max", close(diag.orthogonality_max, s.orthogonality_max));
    cmp("curvature_line_max", close(diag.curvature_line_max, s.curvature_line_max));
    cmp("hopf_imag_max", close(diag.hopf_imag_max, s.hopf_imag_max));
    cmp("integral_drift_max", close(diag.integral_drift_max, s.integral_drift_max));
    cmp("path_independence", close_opt(diag.path_independence, s.path_independence));
    cmp("interior_nodes", diag.interior_nodes == s.interior_nodes);
    cmp("valid_nodes", diag.valid_nodes == s.valid_nodes);
    cmp("hopf_realness", close_opt(hopf, *hopf_realness));
    cmp("verdict", mesh_verdict(&diag, hopf, *threshold) == report.verdict);
    if mismatches.is_empty() {
        writeln!(out, "verified: {} diagnostics reproduced", path.display()).map_err(io_err)?;
        Ok(EXIT_OK)
    } else {
        writeln!(err, "mismatch in {}", mismatches.join(", ")).map_err(io_err)?;
        Ok(EXIT_FAIL)
    }
}
