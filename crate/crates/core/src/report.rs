//! JSON run report.

use serde::{Deserialize, Serialize};

use crate::integrator::MeshNode;
use crate::isothermic::Reduction;
use crate::verify::DiagnosticsReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Undefined,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail | Verdict::Undefined => 2,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Undefined => "UNDEFINED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceInfo {
    pub name: String,
    /// Builtin URI or the full document text.
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub origin: Option<[f64; 2]>,
    pub k0: f64,
    pub branch: u8,
    pub steps: [f64; 2],
    pub size: [usize; 2],
    pub tol_umbilic: f64,
    pub tol_residual: f64,
    pub tol_diagnostic: f64,
    pub fd_step: Option<f64>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub x: f64,
    pub y: f64,
    /// `None` for the general condition.
    pub reduction: Option<Reduction>,
    pub residual: Option<f64>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Evaluated,
    Umbilic,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Residuals {
    Existence {
        max_abs: Option<f64>,
        threshold: f64,
        points: Vec<PointResidual>,
    },
    Mesh {
        diagnostics: DiagnosticsReport,
        /// `None` when the mesh is not conformal enough for the check.
        hopf_realness: Option<f64>,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub n_beta: usize,
    pub n_gamma: usize,
    pub valid_nodes: usize,
    pub vertices: usize,
    pub faces: usize,
    pub invalid_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub surface: SurfaceInfo,
    pub config: ReportConfig,
    pub residuals: Residuals,
    pub umbilic_count: usize,
    pub verdict: Verdict,
    pub mesh_stats: Option<MeshStats>,
    pub timing: Timing,
    /// Nodes `[i_β][i_γ]`, stored by `reparam` so the run can be re-verified.
    pub mesh: Option<Vec<Vec<MeshNode>>>,
}
