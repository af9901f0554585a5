//! Standard-form problem `min c^T x  s.t. Ax = b, x in K`, its dual
//! `max b^T y  s.t. A^T y + s = c, s in K`, and the homogeneous self-dual
//! iterate `(x, y, s, kappa, tau)`.

use nalgebra::{DMatrix, DVector};

use crate::cone::{ConeSpec, ConeVector};
use crate::error::{check_len, Result, SocpError};

/// Relative singular-value threshold below which `A` is reported rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SocpProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub cones: ConeSpec,
}

impl SocpProblem {
    /// Builds a problem after checking that the dimensions agree. Rank is
    /// not enforced here; see [`validate_problem`].
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, cones: ConeSpec) -> Result<Self> {
        check_len("A columns vs cone dimension", cones.n(), a.ncols())?;
        check_len("b vs rows of A", a.nrows(), b.len())?;
        check_len("c vs cone dimension", cones.n(), c.len())?;
        Ok(SocpProblem { a, b, c, cones })
    }

    /// Number of equality constraints `p`.
    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.cones.n()
    }

    pub fn k(&self) -> usize {
        self.cones.k()
    }

    pub(crate) fn check_point(&self, z: &HsdPoint) -> Result<()> {
        check_len("x", self.n(), z.x.len())?;
        check_len("s", self.n(), z.s.len())?;
        check_len("y", self.p(), z.y.len())
    }
}

/// Iterate of the homogeneous self-dual embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct HsdPoint {
    pub x: ConeVector,
    pub y: DVector<f64>,
    pub s: ConeVector,
    pub kappa: f64,
    pub tau: f64,
}

impl HsdPoint {
    /// `self + alpha * dir`, componentwise.
    pub fn step(&self, dir: &HsdPoint, alpha: f64) -> HsdPoint {
        HsdPoint {
            x: &self.x + &dir.x * alpha,
            y: &self.y + &dir.y * alpha,
            s: &self.s + &dir.s * alpha,
            kappa: self.kappa + alpha * dir.kappa,
            tau: self.tau + alpha * dir.tau,
        }
    }

    pub fn scale(&self, t: f64) -> HsdPoint {
        HsdPoint {
            x: &self.x * t,
            y: &self.y * t,
            s: &self.s * t,
            kappa: self.kappa * t,
            tau: self.tau * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `Ax - tau b`
    pub r_p: DVector<f64>,
    /// `A^T y + s - tau c`
    pub r_d: DVector<f64>,
    /// `b^T y - c^T x - kappa`
    pub r_g: f64,
    pub r_p_norm: f64,
    pub r_d_norm: f64,
}

pub fn compute_residuals(p: &SocpProblem, z: &HsdPoint) -> Result<Residuals> {
    p.check_point(z)?;
    let r_p = &p.a * &z.x - &p.b * z.tau;
    let r_d = p.a.tr_mul(&z.y) + &z.s - &p.c * z.tau;
    let r_g = p.b.dot(&z.y) - p.c.dot(&z.x) - z.kappa;
    Ok(Residuals {
        r_p_norm: r_p.norm(),
        r_d_norm: r_d.norm(),
        r_p,
        r_d,
        r_g,
    })
}

/// Constant residual directions of the embedding, fixed by the start point.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConstants {
    pub r_p: DVector<f64>,
    pub r_d: DVector<f64>,
    pub r_g: f64,
    pub beta: f64,
}

/// Residual constants of the embedding at `z0` for scale `nu0` (usually 1).
/// The dual constant uses the opposite sign to [`Residuals::r_d`].
pub fn embed_residual_constants(p: &SocpProblem, z0: &HsdPoint, nu0: f64) -> Result<EmbeddingConstants> {
    if !(nu0 > 0.0) {
        return Err(SocpError::InvalidParams(format!("nu0 must be positive, got {nu0}")));
    }
    p.check_point(z0)?;
    let r_p = (&p.a * &z0.x - &p.b * z0.tau) / nu0;
    let r_d = (-p.a.tr_mul(&z0.y) + &p.c * z0.tau - &z0.s) / nu0;
    let r_g = (p.b.dot(&z0.y) - p.c.dot(&z0.x) - z0.kappa) / nu0;
    let beta = -(r_p.dot(&z0.y) + r_d.dot(&z0.x) + r_g * z0.tau);
    Ok(EmbeddingConstants { r_p, r_d, r_g, beta })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    /// `A` has more rows than columns.
    TooManyRows { p: usize, n: usize },
    /// Cone dimension and column count of `A` differ.
    ConeDimension { cone_n: usize, columns: usize },
    RhsLength { expected: usize, actual: usize },
    CostLength { expected: usize, actual: usize },
    /// Smallest singular value is below `RANK_TOLERANCE` times the largest.
    RankDeficient { rank: usize, p: usize, sigma_min: f64, sigma_max: f64 },
    NonFinite { field: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub rank_estimate: Option<usize>,
    pub singular_values: Vec<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Structural checks on raw problem data. Never fails; problems are
/// returned as findings.
pub fn validate_data(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    cones: &ConeSpec,
) -> ValidationReport {
    let mut findings = Vec::new();
    let (p, n) = a.shape();
    if cones.n() != n {
        findings.push(Finding::ConeDimension { cone_n: cones.n(), columns: n });
    }
    if b.len() != p {
        findings.push(Finding::RhsLength { expected: p, actual: b.len() });
    }
    if c.len() != n {
        findings.push(Finding::CostLength { expected: n, actual: c.len() });
    }
    if p > n {
        findings.push(Finding::TooManyRows { p, n });
    }
    for (field, ok) in [
        ("A", a.iter().all(|v| v.is_finite())),
        ("b", b.iter().all(|v| v.is_finite())),
        ("c", c.iter().all(|v| v.is_finite())),
    ] {
        if !ok {
            findings.push(Finding::NonFinite { field });
        }
    }
    let mut singular_values = Vec::new();
    let mut rank_estimate = None;
    if p > 0 && n > 0 && a.iter().all(|v| v.is_finite()) {
        let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let smax = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
        // Rank cannot exceed min(p, n); the SVD returns that many values.
        if rank < p {
            findings.push(Finding::RankDeficient {
                rank,
                p,
                sigma_min: sv.last().copied().unwrap_or(0.0),
                sigma_max: smax,
            });
        }
        rank_estimate = Some(rank);
        singular_values = sv;
    }
    ValidationReport { findings, rank_estimate, singular_values }
}

pub fn validate_problem(p: &SocpProblem) -> ValidationReport {
    validate_data(&p.a, &p.b, &p.c, &p.cones)
}
