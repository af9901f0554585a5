//! Central-path geometry of the embedding: complementarity `mu`, the
//! distances `d2` and `dinf`, neighborhoods, the hat-form packing that folds
//! `(tau, kappa)` into an extra 1-dimensional block, and status
//! classification of a terminal iterate.

use nalgebra::DVector;

use crate::cone::{block_spectral_bounds, membership, unit_element, w_vector, ConeSpec, ConeVector};
use crate::error::{Result, SocpError};
use crate::problem::{HsdPoint, SocpProblem};

/// `(x^T s + kappa tau) / (k + 1)`.
pub fn mu(z: &HsdPoint, spec: &ConeSpec) -> f64 {
    (z.x.dot(&z.s) + z.kappa * z.tau) / (spec.k() + 1) as f64
}

/// `x^T s / k` for a plain primal-dual pair.
pub fn pair_mu(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> f64 {
    x.dot(s) / spec.k() as f64
}

/// `sqrt(2) |w - mu e|` with `w = T_x s` and `mu = x^T s / k`.
pub fn pair_d2(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> Result<f64> {
    let w = w_vector(x, s, spec)?;
    let m = pair_mu(x, s, spec);
    Ok(std::f64::consts::SQRT_2 * (w - unit_element(spec) * m).norm())
}

/// Largest deviation of a spectral value of `w` from `mu`.
pub fn pair_dinf(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> Result<f64> {
    let w = w_vector(x, s, spec)?;
    Ok(spectral_deviation(&w, pair_mu(x, s, spec), spec))
}

fn spectral_deviation(w: &ConeVector, m: f64, spec: &ConeSpec) -> f64 {
    spec.blocks()
        .iter()
        .map(|b| {
            let (lo, hi) = block_spectral_bounds(&w.as_slice()[b.range()]);
            (lo - m).abs().max((hi - m).abs())
        })
        .fold(0.0, f64::max)
}

pub fn d2(z: &HsdPoint, spec: &ConeSpec) -> Result<f64> {
    let w = w_vector(&z.x, &z.s, spec)?;
    let m = mu(z, spec);
    let dev = (w - unit_element(spec) * m).norm_squared() + (z.kappa * z.tau - m).powi(2);
    Ok(std::f64::consts::SQRT_2 * dev.sqrt())
}

pub fn dinf(z: &HsdPoint, spec: &ConeSpec) -> Result<f64> {
    let w = w_vector(&z.x, &z.s, spec)?;
    let m = mu(z, spec);
    Ok(spectral_deviation(&w, m, spec).max((z.kappa * z.tau - m).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    N2,
    NInf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodParams {
    pub gamma: f64,
    pub flavor: Flavor,
}

impl NeighborhoodParams {
    pub fn new(gamma: f64, flavor: Flavor) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(SocpError::InvalidParams(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(NeighborhoodParams { gamma, flavor })
    }
}

/// Interior test plus the distance bound. Never errors.
pub fn in_neighborhood(z: &HsdPoint, spec: &ConeSpec, params: NeighborhoodParams) -> bool {
    if !(z.kappa > 0.0 && z.tau > 0.0) || !membership(&z.x, spec, true) || !membership(&z.s, spec, true) {
        return false;
    }
    let dist = match params.flavor {
        Flavor::N2 => d2(z, spec),
        Flavor::NInf => dinf(z, spec),
    };
    match dist {
        Ok(d) => d <= params.gamma * mu(z, spec),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    /// Scaled solution `(x/tau, y/tau, s/tau)`.
    Optimal { x: ConeVector, y: DVector<f64>, s: ConeVector },
    /// Certificate `y` with `b^T y > 0`.
    PrimalInfeasible { y: DVector<f64> },
    /// Certificate `x` with `c^T x < 0`.
    DualInfeasible { x: ConeVector },
    IllPosed,
}

impl Status {
    pub fn tag(&self) -> &'static str {
        match self {
            Status::Optimal { .. } => "optimal",
            Status::PrimalInfeasible { .. } => "primal_infeasible",
            Status::DualInfeasible { .. } => "dual_infeasible",
            Status::IllPosed => "ill_posed",
        }
    }
}

pub fn classify_status(z: &HsdPoint, p: &SocpProblem, eps: f64) -> Result<Status> {
    if z.tau <= 0.0 && z.kappa <= 0.0 {
        return Err(SocpError::InvalidPoint(format!(
            "tau = {} and kappa = {} are both nonpositive",
            z.tau, z.kappa
        )));
    }
    if z.tau >= eps * z.kappa.max(1.0) {
        return Ok(Status::Optimal {
            x: &z.x / z.tau,
            y: &z.y / z.tau,
            s: &z.s / z.tau,
        });
    }
    if p.b.dot(&z.y) > 0.0 {
        Ok(Status::PrimalInfeasible { y: z.y.clone() })
    } else if p.c.dot(&z.x) < 0.0 {
        Ok(Status::DualInfeasible { x: z.x.clone() })
    } else {
        Ok(Status::IllPosed)
    }
}

/// `x_hat = (x, tau)`, `s_hat = (s, kappa)` over the spec with an extra
/// 1-dimensional block.
#[derive(Debug, Clone, PartialEq)]
pub struct HatPoint {
    pub x: ConeVector,
    pub s: ConeVector,
    pub y: DVector<f64>,
    pub spec: ConeSpec,
}

impl HatPoint {
    /// `x_hat^T s_hat / (k + 1)`.
    pub fn mu(&self) -> f64 {
        pair_mu(&self.x, &self.s, &self.spec)
    }
}

pub fn hat_pack(z: &HsdPoint, spec: &ConeSpec) -> HatPoint {
    let n = spec.n();
    let mut x = DVector::zeros(n + 1);
    let mut s = DVector::zeros(n + 1);
    x.rows_mut(0, n).copy_from(&z.x);
    s.rows_mut(0, n).copy_from(&z.s);
    x[n] = z.tau;
    s[n] = z.kappa;
    HatPoint {
        x,
        s,
        y: z.y.clone(),
        spec: spec.with_scalar_block(),
    }
}

pub fn hat_unpack(h: &HatPoint) -> HsdPoint {
    let n = h.x.len() - 1;
    HsdPoint {
        x: h.x.rows(0, n).into_owned(),
        y: h.y.clone(),
        s: h.s.rows(0, n).into_owned(),
        kappa: h.s[n],
        tau: h.x[n],
    }
}
