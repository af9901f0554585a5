//! Cold and warm start points, the warm-start condition constants, and the
//! admissible range of the blending coefficient `omega`.
//!
//! A warm start blends a previous solution `(x_o, y_o, s_o)` (normalized so
//! that `tau = 1`) with the cold start `(e, 0, e, 1, 1)`.

use nalgebra::{DMatrix, DVector};

use crate::cone::{require_interior, unit_element, ConeSpec, ConeVector};
use crate::error::{Result, SocpError};
use crate::geometry::{d2, mu};
use crate::ipm::centering_nu;
use crate::problem::{compute_residuals, HsdPoint, SocpProblem};

/// Grid spacing used by [`choose_omega`].
pub const OMEGA_GRID: f64 = 1e-4;

/// A previous solution, already divided by its `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrevSolution {
    pub x: ConeVector,
    pub y: DVector<f64>,
    pub s: ConeVector,
}

impl PrevSolution {
    /// `(x/tau, y/tau, s/tau)` of an embedding iterate.
    pub fn from_point(z: &HsdPoint) -> Result<Self> {
        if !(z.tau > 0.0) {
            return Err(SocpError::InvalidPoint(format!("tau must be positive, got {}", z.tau)));
        }
        Ok(PrevSolution {
            x: &z.x / z.tau,
            y: &z.y / z.tau,
            s: &z.s / z.tau,
        })
    }
}

/// `(e, 0, e, 1, 1)` with `y` of length `p`.
pub fn cold_start(spec: &ConeSpec, p: usize) -> HsdPoint {
    HsdPoint {
        x: unit_element(spec),
        y: DVector::zeros(p),
        s: unit_element(spec),
        kappa: 1.0,
        tau: 1.0,
    }
}

/// `x_w = omega x_o + (1 - omega) e`, likewise `s_w`, `y_w = omega y_o`,
/// `kappa_w = x_w^T s_w / k`, `tau_w = 1`.
pub fn warm_start_point(prev: &PrevSolution, omega: f64, spec: &ConeSpec) -> Result<HsdPoint> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(SocpError::InvalidParams(format!("omega must lie in [0,1], got {omega}")));
    }
    spec.check("previous x", &prev.x)?;
    spec.check("previous s", &prev.s)?;
    let e = unit_element(spec);
    let x = &prev.x * omega + &e * (1.0 - omega);
    let s = &prev.s * omega + &e * (1.0 - omega);
    require_interior("warm-start x", &x, spec)?;
    require_interior("warm-start s", &s, spec)?;
    let kappa = x.dot(&s) / spec.k() as f64;
    Ok(HsdPoint { x, y: &prev.y * omega, s, kappa, tau: 1.0 })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn beta(v: &[f64]) -> f64 {
    let t: f64 = v[1..].iter().map(|a| a * a).sum();
    (v[0] * v[0] - t).max(0.0).sqrt()
}

/// Lower end of the admissible `omega` range from the centrality condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMin {
    Value(f64),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartDiagnostics {
    pub c_a: f64,
    pub c_b: f64,
    pub c_p: f64,
    pub c_at: f64,
    pub c_c: f64,
    pub c_d: f64,
    /// `mu(q_o)`
    pub c_mu: f64,
    /// At `omega_eval`.
    pub c_xs: f64,
    pub psi_o: f64,
    /// `max_i |1 - frac_i|` at `omega_eval`.
    pub rho: f64,
    /// `max_i (1 - frac_i)` at `omega_eval`, unclamped.
    pub rho_raw: f64,
    pub xi_o: f64,
    pub omega_eval: f64,
    pub omega_min: OmegaMin,
    pub gamma: f64,
    pub gamma_o: f64,
    pub mu_o: f64,
    pub nu: f64,
    pub c_w: f64,
    pub predicted_saving: usize,
    /// Cold-start primal residual is zero, so the primal constants are undefined.
    pub vacuous_primal: bool,
    pub vacuous_dual: bool,
    spec: ConeSpec,
    x_o: ConeVector,
    s_o: ConeVector,
    /// `|(x_o + s_o) - psi_o e|`
    spread: f64,
}

impl WarmStartDiagnostics {
    /// `(rho_raw, rho)` at `omega`.
    pub fn rho_at(&self, omega: f64) -> (f64, f64) {
        let e = unit_element(&self.spec);
        let xw = &self.x_o * omega + &e * (1.0 - omega);
        let mut raw = f64::NEG_INFINITY;
        let mut abs = 0.0f64;
        for b in self.spec.blocks() {
            let xo = &self.x_o.as_slice()[b.range()];
            let frac = (2.0 * omega * xo[0] + 1.0 - omega)
                / (beta(&xw.as_slice()[b.range()]) + omega * beta(xo));
            raw = raw.max(1.0 - frac);
            abs = abs.max((1.0 - frac).abs());
        }
        (raw, abs)
    }

    /// `sqrt(2) (|(x_o + s_o) - psi_o e| + rho |s_o|) - gamma psi_o` at `omega`.
    pub fn xi_at(&self, omega: f64) -> f64 {
        let (_, rho) = self.rho_at(omega);
        std::f64::consts::SQRT_2 * (self.spread + rho * self.s_o.norm()) - self.gamma * self.psi_o
    }

    pub fn omega_min_at(&self, omega: f64) -> OmegaMin {
        omega_min_rule(self.xi_at(omega), self.gamma, self.gamma_o, self.mu_o)
    }

    /// Whether the sufficient centrality condition holds at `omega`.
    pub fn centrality_ok_at(&self, omega: f64) -> bool {
        let xi = self.xi_at(omega);
        xi <= omega * (xi + (self.gamma - self.gamma_o) * self.mu_o)
    }

    /// Primal, dual and gap contraction bounds at `omega`.
    pub fn bounds_at(&self, omega: f64) -> (f64, f64, f64) {
        (
            1.0 - omega * (1.0 - self.c_a - self.c_b - self.c_p),
            1.0 - omega * (1.0 - self.c_at - self.c_c - self.c_d),
            self.c_mu + (1.0 - omega) * (self.psi_o + 1.0),
        )
    }

    pub fn c_w_at(&self, omega: f64) -> f64 {
        let (p, d, g) = self.bounds_at(omega);
        p.max(d).max(g)
    }

    pub fn predicted_saving_at(&self, omega: f64) -> usize {
        saving(self.c_w_at(omega), self.nu)
    }

    pub fn admissible(&self, omega: f64) -> bool {
        let sums_ok = self.c_a + self.c_b + self.c_p <= 1.0
            && self.c_at + self.c_c + self.c_d <= 1.0
            && self.c_mu + (1.0 - omega) * (self.psi_o + 1.0) <= 1.0;
        sums_ok && self.c_w_at(omega) < 1.0 && self.centrality_ok_at(omega)
    }
}

fn saving(c_w: f64, nu: f64) -> usize {
    if !(c_w > 0.0 && c_w < 1.0) {
        return 0;
    }
    (c_w.ln() / nu.ln()).floor() as usize
}

fn omega_min_rule(xi: f64, gamma: f64, gamma_o: f64, mu_o: f64) -> OmegaMin {
    if xi <= 0.0 {
        OmegaMin::Value(0.0)
    } else if gamma > gamma_o {
        OmegaMin::Value(xi / (xi + (gamma - gamma_o) * mu_o))
    } else {
        OmegaMin::Infeasible
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Condition constants for warm starting `new_p` from a solution of `prev_p`.
pub fn diagnostics(
    prev_p: &SocpProblem,
    new_p: &SocpProblem,
    prev: &PrevSolution,
    gamma: f64,
    delta: f64,
    omega_eval: f64,
) -> Result<WarmStartDiagnostics> {
    if prev_p.cones != new_p.cones || prev_p.a.shape() != new_p.a.shape() {
        return Err(SocpError::ConeSpecMismatch);
    }
    if !(0.0..=1.0).contains(&omega_eval) {
        return Err(SocpError::InvalidParams(format!("omega must lie in [0,1], got {omega_eval}")));
    }
    let spec = &new_p.cones;
    let k = spec.k();
    let q_o = warm_start_point(prev, 1.0, spec)?;
    if prev.y.len() != new_p.p() {
        return Err(SocpError::DimensionMismatch {
            context: "previous y",
            expected: new_p.p(),
            actual: prev.y.len(),
        });
    }
    let q_c = cold_start(spec, new_p.p());
    let cold = compute_residuals(new_p, &q_c)?;
    let old = compute_residuals(prev_p, &q_o)?;

    let da = spectral_norm(&(&new_p.a - &prev_p.a));
    let db = (&new_p.b - &prev_p.b).norm();
    let dc = (&new_p.c - &prev_p.c).norm();
    let (rp, rd) = (cold.r_p_norm, cold.r_d_norm);

    let mu_o = mu(&q_o, spec);
    let gamma_o = d2(&q_o, spec)? / mu_o;
    let e = unit_element(spec);
    let sum = &prev.x + &prev.s;
    let psi_o = spec.unit_dot(&sum) / k as f64;
    let spread = (sum - &e * psi_o).norm();

    let mut diag = WarmStartDiagnostics {
        c_a: ratio(da * prev.x.norm(), rp),
        c_b: ratio(db, rp),
        c_p: ratio(old.r_p_norm, rp),
        c_at: ratio(da * prev.y.norm(), rd),
        c_c: ratio(dc, rd),
        c_d: ratio(old.r_d_norm, rd),
        c_mu: mu_o,
        c_xs: (1.0 - omega_eval) * (psi_o + 1.0),
        psi_o,
        rho: 0.0,
        rho_raw: 0.0,
        xi_o: 0.0,
        omega_eval,
        omega_min: OmegaMin::Infeasible,
        gamma,
        gamma_o,
        mu_o,
        nu: centering_nu(delta, k),
        c_w: 0.0,
        predicted_saving: 0,
        vacuous_primal: rp == 0.0,
        vacuous_dual: rd == 0.0,
        spec: spec.clone(),
        x_o: prev.x.clone(),
        s_o: prev.s.clone(),
        spread,
    };
    let (rho_raw, rho) = diag.rho_at(omega_eval);
    diag.rho_raw = rho_raw;
    diag.rho = rho;
    diag.xi_o = diag.xi_at(omega_eval);
    diag.omega_min = omega_min_rule(diag.xi_o, gamma, gamma_o, mu_o);
    diag.c_w = diag.c_w_at(omega_eval);
    diag.predicted_saving = saving(diag.c_w, diag.nu);
    Ok(diag)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaPolicy {
    MaxAdmissible,
    Fixed(f64),
}

/// Picks `omega`. The max-admissible policy scans a grid downward from 1
/// and re-evaluates `rho` at each candidate.
pub fn choose_omega(diag: &WarmStartDiagnostics, policy: OmegaPolicy) -> Result<f64> {
    match policy {
        OmegaPolicy::MaxAdmissible => {
            let steps = (1.0 / OMEGA_GRID).round() as usize;
            (0..=steps)
                .rev()
                .map(|i| i as f64 * OMEGA_GRID)
                .find(|&w| matches!(diag.omega_min_at(w), OmegaMin::Value(lo) if w >= lo) && diag.admissible(w))
                .ok_or(SocpError::EmptyAdmissibleSet)
        }
        OmegaPolicy::Fixed(w) => match diag.omega_min {
            OmegaMin::Value(lo) => Ok(w.clamp(lo, 1.0)),
            OmegaMin::Infeasible => Err(SocpError::EmptyAdmissibleSet),
        },
    }
}
