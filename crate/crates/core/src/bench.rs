//! Drift sequences of perturbed problems, solved cold and warm.
//!
//! Both solves of a step stop at the same absolute level
//! `eps_u = eps * max(|r_p(q_c)|, |r_d(q_c)|, 1)` on the new problem, so the
//! iteration counts are directly comparable.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, SocpError};
use crate::generate::{gaussian_matrix, gaussian_vector};
use crate::geometry::{in_neighborhood, Flavor, NeighborhoodParams};
use crate::ipm::{solve, SolverParams, StopRule};
use crate::kkt::ScalingKind;
use crate::problem::{compute_residuals, SocpProblem};
use crate::warm_start::{choose_omega, cold_start, diagnostics, warm_start_point, OmegaPolicy, PrevSolution};

/// Upper bounds on `|dA|_2`, `|db|`, `|dc|` per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationBounds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Keeps rescaled norms safely at or below the requested bound.
const NORM_SAFETY: f64 = 1.0 - 1e-12;

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Gaussian noise on the nonzero pattern of `A` and on all of `b`, `c`,
/// each rescaled to its bound.
pub fn perturb(p: &SocpProblem, bounds: PerturbationBounds, rng: &mut ChaCha8Rng) -> SocpProblem {
    let (rows, cols) = p.a.shape();
    let mut da = gaussian_matrix(rng, rows, cols);
    da.zip_apply(&p.a, |d, a| {
        if a == 0.0 {
            *d = 0.0
        }
    });
    let na = spectral_norm(&da);
    let da = if na > 0.0 { da * (bounds.a * NORM_SAFETY / na) } else { da };
    let rescale = |v: nalgebra::DVector<f64>, bound: f64| {
        let nv = v.norm();
        if nv > 0.0 { v * (bound * NORM_SAFETY / nv) } else { v }
    };
    let db = rescale(gaussian_vector(rng, rows), bounds.b);
    let dc = rescale(gaussian_vector(rng, cols), bounds.c);
    SocpProblem {
        a: &p.a + da,
        b: &p.b + db,
        c: &p.c + dc,
        cones: p.cones.clone(),
    }
}

/// `base` followed by `steps` successive perturbations.
pub fn drift_sequence(base: &SocpProblem, steps: usize, bounds: PerturbationBounds, seed: u64) -> Vec<SocpProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = vec![base.clone()];
    for _ in 0..steps {
        let next = perturb(seq.last().expect("non-empty"), bounds, &mut rng);
        seq.push(next);
    }
    seq
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub scaling: ScalingKind,
    pub omega: OmegaPolicy,
}

impl Default for BenchParams {
    fn default() -> Self {
        let d = SolverParams::default();
        BenchParams {
            gamma: d.gamma,
            delta: d.delta,
            eps: d.eps,
            scaling: d.scaling,
            omega: OmegaPolicy::MaxAdmissible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub da_norm: f64,
    pub db_norm: f64,
    pub dc_norm: f64,
    pub eps_u: f64,
    /// `None` when the warm start fell back to the cold point.
    pub omega: Option<f64>,
    pub c_w: Option<f64>,
    pub predicted_saving: usize,
    pub cold_iterations: usize,
    pub warm_iterations: usize,
    pub measured_saving: i64,
    pub cold_status: String,
    pub warm_status: String,
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub bounds: PerturbationBounds,
    pub base_iterations: usize,
    pub steps: Vec<StepReport>,
    pub total_cold_iterations: usize,
    pub total_warm_iterations: usize,
}

/// `eps * max(|r_p(q_c)|, |r_d(q_c)|, 1)` for `p`.
pub fn unified_level(p: &SocpProblem, eps: f64) -> Result<f64> {
    let r = compute_residuals(p, &cold_start(&p.cones, p.p()))?;
    Ok(eps * r.r_p_norm.max(r.r_d_norm).max(1.0))
}

/// Solves `problems[0]` cold, then each later problem cold and warm
/// started from the previous warm solution.
pub fn run_sequence(problems: &[SocpProblem], params: &BenchParams) -> Result<(usize, Vec<StepReport>)> {
    let base_params = SolverParams {
        gamma: params.gamma,
        delta: params.delta,
        eps: params.eps,
        scaling: params.scaling,
        ..Default::default()
    };
    let first = problems.first().ok_or_else(|| SocpError::InvalidParams("empty problem sequence".into()))?;
    let base = solve(first, &cold_start(&first.cones, first.p()), &base_params)?;
    let mut prev = PrevSolution::from_point(&base.point)?;
    let nb = NeighborhoodParams::new(params.gamma, Flavor::N2)?;

    let mut steps = Vec::new();
    for (i, pair) in problems.windows(2).enumerate() {
        let (old, new) = (&pair[0], &pair[1]);
        let eps_u = unified_level(new, params.eps)?;
        let unified = SolverParams { stop_rule: StopRule::Unified { eps_u }, ..base_params.clone() };
        let q_c = cold_start(&new.cones, new.p());
        let cold = solve(new, &q_c, &unified)?;

        let diag = diagnostics(old, new, &prev, params.gamma, params.delta, 1.0)?;
        let mut fallback_reason = None;
        let mut chosen = None;
        match choose_omega(&diag, params.omega) {
            Ok(w) => {
                let q_w = warm_start_point(&prev, w, &new.cones)?;
                if in_neighborhood(&q_w, &new.cones, nb) {
                    chosen = Some((w, q_w));
                } else {
                    fallback_reason = Some(format!("warm point at omega = {w} is outside N2(gamma)"));
                }
            }
            Err(e) => fallback_reason = Some(e.to_string()),
        }
        let (omega, start) = match chosen {
            Some((w, q)) => (Some(w), q),
            None => (None, q_c),
        };
        let warm = solve(new, &start, &unified)?;
        steps.push(StepReport {
            step: i + 1,
            da_norm: spectral_norm(&(&new.a - &old.a)),
            db_norm: (&new.b - &old.b).norm(),
            dc_norm: (&new.c - &old.c).norm(),
            eps_u,
            omega,
            c_w: omega.map(|w| diag.c_w_at(w)),
            predicted_saving: omega.map_or(0, |w| diag.predicted_saving_at(w)),
            cold_iterations: cold.iterations,
            warm_iterations: warm.iterations,
            measured_saving: cold.iterations as i64 - warm.iterations as i64,
            cold_status: cold.status.tag().to_string(),
            warm_status: warm.status.tag().to_string(),
            fallback_reason,
        });
        prev = PrevSolution::from_point(&warm.point)?;
    }
    Ok((base.iterations, steps))
}

pub fn run_bench(
    base: &SocpProblem,
    steps: usize,
    bounds: PerturbationBounds,
    seed: u64,
    params: &BenchParams,
) -> Result<BenchReport> {
    let problems = drift_sequence(base, steps, bounds, seed);
    let (base_iterations, steps) = run_sequence(&problems, params)?;
    Ok(BenchReport {
        seed,
        bounds,
        base_iterations,
        total_cold_iterations: steps.iter().map(|s| s.cold_iterations).sum(),
        total_warm_iterations: steps.iter().map(|s| s.warm_iterations).sum(),
        steps,
    })
}
