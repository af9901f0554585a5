//! Short-step infeasible interior-point method on the homogeneous
//! self-dual embedding with a fixed centering parameter and full steps.

use crate::cone::min_eigenvalue;
use crate::error::{Result, SocpError};
use crate::geometry::{classify_status, d2, dinf, in_neighborhood, mu, Flavor, NeighborhoodParams, Status};
use crate::kkt::{newton_direction, NewtonDirection};
use crate::problem::{compute_residuals, HsdPoint, SocpProblem};

pub use crate::kkt::ScalingKind;

pub const DEFAULT_GAMMA: f64 = 0.08;
pub const DEFAULT_DELTA: f64 = 0.03;
pub const DEFAULT_EPS: f64 = 1e-6;

/// Which stop test the solver applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Each of `mu`, `|r_p|`, `|r_d|` reduced by `eps` relative to the start.
    Relative,
    /// Each of `mu`, `|r_p|`, `|r_d|` at most the absolute level `eps_u`.
    Unified { eps_u: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub scaling: ScalingKind,
    /// `None` means `2 * predicted + 100`.
    pub max_iterations: Option<usize>,
    pub trace_enabled: bool,
    pub stop_rule: StopRule,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            gamma: DEFAULT_GAMMA,
            delta: DEFAULT_DELTA,
            eps: DEFAULT_EPS,
            scaling: ScalingKind::Identity,
            max_iterations: None,
            trace_enabled: false,
            stop_rule: StopRule::Relative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCheck {
    pub ok: bool,
    /// `gamma - gamma_tilde`
    pub margin: f64,
    pub gamma_tilde: f64,
}

/// `nu = 1 - delta / sqrt(2 (k + 1))`.
pub fn centering_nu(delta: f64, k: usize) -> f64 {
    1.0 - delta / (2.0 * (k as f64 + 1.0)).sqrt()
}

/// Checks `4 (gamma^2 + delta^2) / (1 - 3 gamma)^2 / nu < gamma`.
pub fn validate_params(gamma: f64, delta: f64, k: usize) -> ParamCheck {
    let nu = centering_nu(delta, k);
    let gamma_tilde = 4.0 * (gamma * gamma + delta * delta) / (1.0 - 3.0 * gamma).powi(2) / nu;
    ParamCheck {
        ok: gamma_tilde < gamma,
        margin: gamma - gamma_tilde,
        gamma_tilde,
    }
}

fn check_ranges(params: &SolverParams, k: usize) -> Result<()> {
    let in_open = |v: f64, hi: f64| v > 0.0 && v < hi;
    if !in_open(params.gamma, 1.0 / 3.0) {
        return Err(SocpError::InvalidParams(format!("gamma must lie in (0,1/3), got {}", params.gamma)));
    }
    if !in_open(params.delta, 1.0) {
        return Err(SocpError::InvalidParams(format!("delta must lie in (0,1), got {}", params.delta)));
    }
    if !in_open(params.eps, 1.0) {
        return Err(SocpError::InvalidParams(format!("eps must lie in (0,1), got {}", params.eps)));
    }
    if let StopRule::Unified { eps_u } = params.stop_rule {
        if !(eps_u > 0.0) {
            return Err(SocpError::InvalidParams(format!("eps_u must be positive, got {eps_u}")));
        }
    }
    let check = validate_params(params.gamma, params.delta, k);
    if !check.ok {
        return Err(SocpError::InvalidParams(format!(
            "gamma = {}, delta = {} fail the centrality condition for k = {k} (gamma_tilde = {})",
            params.gamma, params.delta, check.gamma_tilde
        )));
    }
    Ok(())
}

/// Iterations of a fixed-ratio reduction needed to bring `value` to `target`.
fn reduction_steps(value: f64, target: f64, nu: f64) -> usize {
    if value <= target {
        return 0;
    }
    ((value / target).ln() / -nu.ln()).ceil() as usize
}

/// Closed-form iteration count from the start point.
pub fn predicted_iterations(start: &HsdPoint, p: &SocpProblem, params: &SolverParams) -> Result<usize> {
    let nu = centering_nu(params.delta, p.k());
    let r = compute_residuals(p, start)?;
    let m = mu(start, &p.cones);
    Ok(match params.stop_rule {
        StopRule::Relative => reduction_steps(1.0, params.eps, nu),
        StopRule::Unified { eps_u } => {
            let worst = r.r_p_norm.max(r.r_d_norm).max(m);
            reduction_steps(worst, eps_u, nu)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub mu: f64,
    pub d2: f64,
    pub dinf: f64,
    pub rp_norm: f64,
    pub rd_norm: f64,
    pub rg_abs: f64,
    pub tau: f64,
    pub kappa: f64,
    pub lambda_min_x: f64,
    pub lambda_min_s: f64,
    /// From the direction that produced this iterate; 0 for the start.
    pub orth_defect: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub point: HsdPoint,
    pub iterations: usize,
    pub predicted_iterations: usize,
    pub nu: f64,
    pub mu0: f64,
    pub mu: f64,
    pub rp_norm: f64,
    pub rd_norm: f64,
    /// Iterates found outside the neighborhood; only checked with tracing on.
    pub neighborhood_violations: usize,
    pub trace: SolveTrace,
}

/// Passed to an observer once per iteration, before the step is taken.
pub struct IterationEvent<'a> {
    pub iter: usize,
    pub point: &'a HsdPoint,
    pub direction: &'a NewtonDirection,
    pub mu: f64,
    pub nu: f64,
}

pub fn solve(p: &SocpProblem, start: &HsdPoint, params: &SolverParams) -> Result<SolveResult> {
    solve_observed(p, start, params, |_| {})
}

fn record(p: &SocpProblem, z: &HsdPoint, iter: usize, dir: Option<&NewtonDirection>) -> Result<TraceRecord> {
    let r = compute_residuals(p, z)?;
    Ok(TraceRecord {
        iter,
        mu: mu(z, &p.cones),
        d2: d2(z, &p.cones)?,
        dinf: dinf(z, &p.cones)?,
        rp_norm: r.r_p_norm,
        rd_norm: r.r_d_norm,
        rg_abs: r.r_g.abs(),
        tau: z.tau,
        kappa: z.kappa,
        lambda_min_x: min_eigenvalue(&z.x, &p.cones),
        lambda_min_s: min_eigenvalue(&z.s, &p.cones),
        orth_defect: dir.map_or(0.0, |d| d.orthogonality_defect),
        kkt_residual: dir.map_or(0.0, |d| d.residual_norm),
    })
}

pub fn solve_observed<F>(p: &SocpProblem, start: &HsdPoint, params: &SolverParams, mut observer: F) -> Result<SolveResult>
where
    F: FnMut(&IterationEvent<'_>),
{
    let spec = &p.cones;
    check_ranges(params, spec.k())?;
    p.check_point(start)?;
    let nb = NeighborhoodParams::new(params.gamma, Flavor::N2)?;
    let mu0 = mu(start, spec);
    if !in_neighborhood(start, spec, nb) {
        let dist = d2(start, spec).unwrap_or(f64::INFINITY);
        return Err(SocpError::StartOutsideNeighborhood { d2: dist, bound: params.gamma * mu0 });
    }
    let nu = centering_nu(params.delta, spec.k());
    let predicted = predicted_iterations(start, p, params)?;
    let limit = params.max_iterations.unwrap_or(2 * predicted + 100);

    let r0 = compute_residuals(p, start)?;
    let done = |m: f64, rp: f64, rd: f64| match params.stop_rule {
        StopRule::Relative => {
            m <= params.eps * mu0
                && (r0.r_p_norm == 0.0 || rp <= params.eps * r0.r_p_norm)
                && (r0.r_d_norm == 0.0 || rd <= params.eps * r0.r_d_norm)
        }
        StopRule::Unified { eps_u } => m <= eps_u && rp <= eps_u && rd <= eps_u,
    };

    let mut trace = SolveTrace::default();
    if params.trace_enabled {
        trace.records.push(record(p, start, 0, None)?);
    }
    let mut z = start.clone();
    let mut iter = 0;
    let mut violations = 0;
    let (mut m, mut rp, mut rd) = (mu0, r0.r_p_norm, r0.r_d_norm);
    while !done(m, rp, rd) {
        if iter >= limit {
            return Err(SocpError::MaxIterationsExceeded { limit });
        }
        let dir = newton_direction(p, &z, params.scaling, nu)?;
        observer(&IterationEvent { iter, point: &z, direction: &dir, mu: m, nu });
        z = z.step(&dir.as_point(), 1.0);
        iter += 1;
        let r = compute_residuals(p, &z)?;
        m = mu(&z, spec);
        rp = r.r_p_norm;
        rd = r.r_d_norm;
        if params.trace_enabled {
            if !in_neighborhood(&z, spec, nb) {
                violations += 1;
            }
            trace.records.push(record(p, &z, iter, Some(&dir))?);
        }
    }

    Ok(SolveResult {
        status: classify_status(&z, p, params.eps)?,
        point: z,
        iterations: iter,
        predicted_iterations: predicted,
        nu,
        mu0,
        mu: m,
        rp_norm: rp,
        rd_norm: rd,
        neighborhood_violations: violations,
        trace,
    })
}
