//! JSON problem, point and solution documents, and CSV trace export.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::ConeSpec;
use crate::error::SocpError;
use crate::geometry::Status;
use crate::ipm::{SolveResult, SolveTrace, SolverParams};
use crate::kkt::ScalingKind;
use crate::problem::{validate_problem, HsdPoint, SocpProblem, ValidationReport};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("A triplet {index} ({row}, {col}) lies outside the {rows}x{cols} matrix")]
    TripletOutOfRange { index: usize, row: usize, col: usize, rows: usize, cols: usize },
    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] SocpError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConesDoc {
    pub l: usize,
    #[serde(default)]
    pub q: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseDoc {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: String,
    pub cones: ConesDoc,
    #[serde(rename = "A")]
    pub a: SparseDoc,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub name: String,
    pub problem: SocpProblem,
    pub report: ValidationReport,
}

fn dense_from_triplets(doc: &SparseDoc) -> Result<DMatrix<f64>, IoError> {
    let mut a = DMatrix::zeros(doc.rows, doc.cols);
    for (index, &(row, col, v)) in doc.triplets.iter().enumerate() {
        if row >= doc.rows || col >= doc.cols {
            return Err(IoError::TripletOutOfRange { index, row, col, rows: doc.rows, cols: doc.cols });
        }
        a[(row, col)] += v;
    }
    Ok(a)
}

/// Builds the problem; duplicate triplets are summed.
pub fn problem_from_file(doc: &ProblemFile) -> Result<ParsedProblem, IoError> {
    let cones = ConeSpec::new(doc.cones.l, doc.cones.q.clone())?;
    let a = dense_from_triplets(&doc.a)?;
    let problem = SocpProblem::new(a, DVector::from_vec(doc.b.clone()), DVector::from_vec(doc.c.clone()), cones)?;
    let report = validate_problem(&problem);
    Ok(ParsedProblem { name: doc.name.clone(), problem, report })
}

pub fn parse_problem(text: &str) -> Result<ParsedProblem, IoError> {
    let doc: ProblemFile = serde_json::from_str(text)?;
    problem_from_file(&doc)
}

/// Canonical document: nonzero entries of `A` in row-major order.
pub fn problem_to_file(name: &str, p: &SocpProblem) -> ProblemFile {
    let mut triplets = Vec::new();
    for i in 0..p.a.nrows() {
        for j in 0..p.a.ncols() {
            let v = p.a[(i, j)];
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    ProblemFile {
        name: name.to_string(),
        cones: ConesDoc { l: p.cones.l(), q: p.cones.soc_dims().to_vec() },
        a: SparseDoc { rows: p.a.nrows(), cols: p.a.ncols(), triplets },
        b: p.b.iter().copied().collect(),
        c: p.c.iter().copied().collect(),
    }
}

pub fn write_problem(name: &str, p: &SocpProblem) -> String {
    to_json(&problem_to_file(name, p))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
}

impl PointFile {
    pub fn from_point(z: &HsdPoint) -> Self {
        PointFile {
            x: z.x.iter().copied().collect(),
            y: z.y.iter().copied().collect(),
            s: z.s.iter().copied().collect(),
            kappa: z.kappa,
            tau: z.tau,
        }
    }

    pub fn to_point(&self) -> HsdPoint {
        HsdPoint {
            x: DVector::from_vec(self.x.clone()),
            y: DVector::from_vec(self.y.clone()),
            s: DVector::from_vec(self.s.clone()),
            kappa: self.kappa,
            tau: self.tau,
        }
    }
}

/// Reads a point; solution documents are accepted as well.
pub fn parse_point(text: &str) -> Result<HsdPoint, IoError> {
    let doc: PointFile = serde_json::from_str(text)?;
    Ok(doc.to_point())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub scaling: String,
}

impl ParamsDoc {
    pub fn from_params(p: &SolverParams) -> Self {
        ParamsDoc {
            gamma: p.gamma,
            delta: p.delta,
            epsilon: p.eps,
            scaling: scaling_name(p.scaling).to_string(),
        }
    }
}

pub fn scaling_name(kind: ScalingKind) -> &'static str {
    match kind {
        ScalingKind::Identity => "identity",
        ScalingKind::Nt => "nt",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primal_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual_objective: Option<f64>,
    pub iterations: usize,
    pub predicted_iterations: usize,
    pub mu: f64,
    pub rp_norm: f64,
    pub rd_norm: f64,
    pub params: ParamsDoc,
}

impl SolutionFile {
    pub fn from_result(p: &SocpProblem, res: &SolveResult, params: &SolverParams) -> Self {
        let z = &res.point;
        let (primal_objective, dual_objective) = match &res.status {
            Status::Optimal { .. } => (Some(p.c.dot(&z.x) / z.tau), Some(p.b.dot(&z.y) / z.tau)),
            _ => (None, None),
        };
        SolutionFile {
            status: res.status.tag().to_string(),
            x: z.x.iter().copied().collect(),
            y: z.y.iter().copied().collect(),
            s: z.s.iter().copied().collect(),
            kappa: z.kappa,
            tau: z.tau,
            primal_objective,
            dual_objective,
            iterations: res.iterations,
            predicted_iterations: res.predicted_iterations,
            mu: res.mu,
            rp_norm: res.rp_norm,
            rd_norm: res.rd_norm,
            params: ParamsDoc::from_params(params),
        }
    }
}

pub const TRACE_HEADER: &str =
    "iter,mu,d2,dinf,rp_norm,rd_norm,rg_abs,tau,kappa,lambda_min_x,lambda_min_s,orth_defect,kkt_residual";

/// CSV with 17 significant digits per value.
pub fn write_trace(trace: &SolveTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = write!(out, "{}", r.iter);
        for v in [
            r.mu, r.d2, r.dinf, r.rp_norm, r.rd_norm, r.rg_abs, r.tau, r.kappa,
            r.lambda_min_x, r.lambda_min_s, r.orth_defect, r.kkt_residual,
        ] {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}
