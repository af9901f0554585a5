//! Random cone structures, interior points and feasible problems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cone::{ConeSpec, ConeVector};
use crate::problem::SocpProblem;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Strictly interior point with `lambda_min` of every block in `[margin, margin + 2]`.
pub fn random_interior<R: Rng + ?Sized>(rng: &mut R, spec: &ConeSpec, margin: f64) -> ConeVector {
    let mut v = DVector::zeros(spec.n());
    for b in spec.blocks() {
        let mut tail = 0.0;
        for j in 1..b.dim {
            let t = normal(rng);
            v[b.offset + j] = t;
            tail += t * t;
        }
        v[b.offset] = tail.sqrt() + margin + rng.random_range(0.0..2.0);
    }
    v
}

/// Point of the closed cone, on the boundary of a random subset of blocks.
pub fn random_closed<R: Rng + ?Sized>(rng: &mut R, spec: &ConeSpec) -> ConeVector {
    let mut v = random_interior(rng, spec, 0.0);
    for b in spec.blocks() {
        if rng.random_bool(0.3) {
            let tail: f64 = (1..b.dim).map(|j| v[b.offset + j].powi(2)).sum();
            v[b.offset] = tail.sqrt();
        }
    }
    v
}

/// Mixed linear / second-order structure with `n <= max_n` and `k <= max_k`.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_k: usize) -> ConeSpec {
    let k = rng.random_range(2..=max_k.max(2));
    let l = rng.random_range(0..k);
    let mut budget = max_n.saturating_sub(l);
    let mut soc = Vec::new();
    for i in 0..k - l {
        let left = k - l - i - 1;
        let cap = budget.saturating_sub(left).clamp(1, 8);
        let d = rng.random_range(1..=cap);
        soc.push(d);
        budget -= d;
    }
    ConeSpec::new(l, soc).expect("generated spec is valid")
}

/// Problem with a strictly feasible primal point and a strictly feasible
/// dual slack, so it has an optimal solution.
pub fn random_feasible_problem<R: Rng + ?Sized>(rng: &mut R, spec: &ConeSpec, p: usize) -> SocpProblem {
    let n = spec.n();
    let a = gaussian_matrix(rng, p, n);
    let x0 = random_interior(rng, spec, 0.5);
    let s0 = random_interior(rng, spec, 0.5);
    let y0 = gaussian_vector(rng, p);
    let b = &a * &x0;
    let c = a.tr_mul(&y0) + s0;
    SocpProblem::new(a, b, c, spec.clone()).expect("dimensions agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::membership;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn specs_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = random_spec(&mut rng, 60, 12);
            assert!(s.n() <= 60 && s.k() <= 12 && s.k() >= 2);
        }
    }

    #[test]
    fn interior_points_are_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = ConeSpec::new(2, vec![3, 1, 5]).unwrap();
        for _ in 0..100 {
            assert!(membership(&random_interior(&mut rng, &spec, 0.1), &spec, true));
            assert!(membership(&random_closed(&mut rng, &spec), &spec, false));
        }
    }

    #[test]
    fn feasible_problem_is_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = ConeSpec::new(1, vec![3]).unwrap();
        let p = random_feasible_problem(&mut rng, &spec, 2);
        assert_eq!(p.a.shape(), (2, 4));
        assert!(crate::problem::validate_problem(&p).is_valid());
    }
}
