//! Scaling matrices: the `T_v` family, its `U`/`P` decomposition, the
//! automorphism group of the cone, and Nesterov-Todd scaling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{arrow_matrix, require_interior, tail_norm, ConeSpec, ConeVector};
use crate::error::{check_len, Result, SocpError};

/// `beta_v = sqrt(v_1^2 - |v_{2:}|^2)` for an interior block.
fn beta(v: &[f64]) -> f64 {
    let t = tail_norm(v);
    ((v[0] - t) * (v[0] + t)).sqrt()
}

fn tail_dot(a: &[f64], b: &[f64]) -> f64 {
    a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum()
}

/// Dense `T_v` for one interior block.
fn t_block(v: &[f64]) -> DMatrix<f64> {
    let m = v.len();
    if m == 1 {
        return DMatrix::from_element(1, 1, v[0]);
    }
    let b = beta(v);
    let denom = b + v[0];
    let mut t = DMatrix::zeros(m, m);
    t[(0, 0)] = v[0];
    for i in 1..m {
        t[(0, i)] = v[i];
        t[(i, 0)] = v[i];
        for j in 1..m {
            t[(i, j)] = v[i] * v[j] / denom;
        }
        t[(i, i)] += b;
    }
    t
}

/// `T_v u` for one block without forming the matrix.
fn t_block_apply(v: &[f64], u: &[f64], out: &mut [f64]) {
    if v.len() == 1 {
        out[0] = v[0] * u[0];
        return;
    }
    let b = beta(v);
    let vu = tail_dot(v, u);
    out[0] = v[0] * u[0] + vu;
    let coef = u[0] + vu / (b + v[0]);
    for j in 1..v.len() {
        out[j] = v[j] * coef + b * u[j];
    }
}

/// `T_v^{-1} u = Q T_v Q u / beta_v^2` for one block.
fn t_block_inverse_apply(v: &[f64], u: &[f64], out: &mut [f64]) {
    if v.len() == 1 {
        out[0] = u[0] / v[0];
        return;
    }
    let b = beta(v);
    let b2 = b * b;
    let vu = tail_dot(v, u);
    out[0] = (v[0] * u[0] - vu) / b2;
    let coef = -u[0] + vu / (b + v[0]);
    for j in 1..v.len() {
        out[j] = (v[j] * coef + b * u[j]) / b2;
    }
}

/// Block-diagonal `T_v`, the unique symmetric positive definite member of the
/// scaling group with `T_v e = v`.
pub fn t_scaling_matrix(v: &ConeVector, spec: &ConeSpec) -> Result<DMatrix<f64>> {
    require_interior("v", v, spec)?;
    let mut t = DMatrix::zeros(spec.n(), spec.n());
    for b in spec.blocks() {
        t.view_mut((b.offset, b.offset), (b.dim, b.dim))
            .copy_from(&t_block(&v.as_slice()[b.range()]));
    }
    Ok(t)
}

/// `T_v u` using the block structure.
pub fn t_scaling_apply(v: &ConeVector, u: &ConeVector, spec: &ConeSpec) -> Result<ConeVector> {
    require_interior("v", v, spec)?;
    spec.check("t_scaling_apply(u)", u)?;
    let mut out = DVector::zeros(spec.n());
    for b in spec.blocks() {
        t_block_apply(
            &v.as_slice()[b.range()],
            &u.as_slice()[b.range()],
            &mut out.as_mut_slice()[b.range()],
        );
    }
    Ok(out)
}

/// `T_v^{-1} u` using the block structure.
pub fn t_scaling_inverse_apply(
    v: &ConeVector,
    u: &ConeVector,
    spec: &ConeSpec,
) -> Result<ConeVector> {
    require_interior("v", v, spec)?;
    spec.check("t_scaling_inverse_apply(u)", u)?;
    let mut out = DVector::zeros(spec.n());
    for b in spec.blocks() {
        t_block_inverse_apply(
            &v.as_slice()[b.range()],
            &u.as_slice()[b.range()],
            &mut out.as_mut_slice()[b.range()],
        );
    }
    Ok(out)
}

/// `U_v = mat(v) - T_v` together with the embedded projector `P_v`.
#[derive(Debug, Clone)]
pub struct UpMatrices {
    pub u: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

/// Builds `U_v` and `P_v`. A block whose tail is exactly zero gets `P = 0`.
pub fn u_p_matrices(v: &ConeVector, spec: &ConeSpec) -> Result<UpMatrices> {
    require_interior("v", v, spec)?;
    let n = spec.n();
    let mut u = DMatrix::zeros(n, n);
    let mut p = DMatrix::zeros(n, n);
    for b in spec.blocks() {
        if b.dim == 1 {
            continue;
        }
        let vb = &v.as_slice()[b.range()];
        let t2: f64 = vb[1..].iter().map(|t| t * t).sum();
        if t2 == 0.0 {
            continue;
        }
        let scale = vb[0] - beta(vb);
        for i in 1..b.dim {
            for j in 1..b.dim {
                let mut pij = -vb[i] * vb[j] / t2;
                if i == j {
                    pij += 1.0;
                }
                p[(b.offset + i, b.offset + j)] = pij;
                u[(b.offset + i, b.offset + j)] = scale * pij;
            }
        }
    }
    Ok(UpMatrices { u, p })
}

/// `w_xs = T_x s`.
pub fn w_vector(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> Result<ConeVector> {
    require_interior("x", x, spec)?;
    spec.check("w_vector(s)", s)?;
    t_scaling_apply(x, s, spec)
}

/// `R(x, s) = T_x X^{-1} S T_x` as a dense matrix.
pub fn r_matrix(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> Result<DMatrix<f64>> {
    require_interior("x", x, spec)?;
    require_interior("s", s, spec)?;
    let t = t_scaling_matrix(x, spec)?;
    let x_inv = arrow_matrix(x, spec)?
        .try_inverse()
        .ok_or(SocpError::NotInterior {
            what: "x",
            block: 0,
            lambda_min: 0.0,
        })?;
    let smat = arrow_matrix(s, spec)?;
    Ok(&t * x_inv * smat * &t)
}

/// A member `D = (Theta G)^{-1}` of the cone automorphism group, kept in
/// factored form per block. `G^i` satisfies `(G^i)^T Q G^i = Q` and
/// `theta^i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMatrix {
    spec: ConeSpec,
    g: Vec<DMatrix<f64>>,
    theta: Vec<f64>,
    d: Vec<DMatrix<f64>>,
    d_inv: Vec<DMatrix<f64>>,
}

/// `Q = diag(1, -1, ..., -1)` applied on both sides: `Q M Q`.
fn q_sandwich(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if (i == 0) != (j == 0) {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

impl ScalingMatrix {
    /// Builds `D` from per-block group factors `(G^i, theta^i)`.
    pub fn from_group_blocks(spec: &ConeSpec, blocks: Vec<(DMatrix<f64>, f64)>) -> Result<Self> {
        check_len("scaling blocks", spec.k(), blocks.len())?;
        let mut g = Vec::with_capacity(blocks.len());
        let mut theta = Vec::with_capacity(blocks.len());
        let mut d = Vec::with_capacity(blocks.len());
        let mut d_inv = Vec::with_capacity(blocks.len());
        for (b, (gi, ti)) in spec.blocks().iter().zip(blocks) {
            if gi.nrows() != b.dim || gi.ncols() != b.dim {
                return Err(SocpError::DimensionMismatch {
                    context: "scaling block",
                    expected: b.dim,
                    actual: gi.nrows(),
                });
            }
            if !(ti > 0.0) || !ti.is_finite() {
                return Err(SocpError::InvalidParams(format!(
                    "scaling factor theta must be positive, got {ti}"
                )));
            }
            // G^{-1} = Q G^T Q for group members.
            d.push(q_sandwich(&gi.transpose()) / ti);
            d_inv.push(&gi * ti);
            g.push(gi);
            theta.push(ti);
        }
        Ok(ScalingMatrix {
            spec: spec.clone(),
            g,
            theta,
            d,
            d_inv,
        })
    }

    pub fn identity(spec: &ConeSpec) -> Self {
        let blocks = spec
            .blocks()
            .iter()
            .map(|b| (DMatrix::identity(b.dim, b.dim), 1.0))
            .collect();
        Self::from_group_blocks(spec, blocks).expect("identity is a group member")
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn group_factor(&self, block: usize) -> &DMatrix<f64> {
        &self.g[block]
    }

    pub fn theta(&self, block: usize) -> f64 {
        self.theta[block]
    }

    /// Block `i` of `D`.
    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.d[i]
    }

    /// Block `i` of `D^{-1}`.
    pub fn inverse_block(&self, i: usize) -> &DMatrix<f64> {
        &self.d_inv[i]
    }

    /// Appends a unit 1-dimensional block, matching [`ConeSpec::with_scalar_block`].
    pub fn with_scalar_block(&self) -> ScalingMatrix {
        let mut blocks: Vec<_> = self
            .g
            .iter()
            .cloned()
            .zip(self.theta.iter().copied())
            .collect();
        blocks.push((DMatrix::identity(1, 1), 1.0));
        Self::from_group_blocks(&self.spec.with_scalar_block(), blocks)
            .expect("appending an identity block stays in the group")
    }

    fn assemble(&self, parts: &[DMatrix<f64>]) -> DMatrix<f64> {
        let n = self.spec.n();
        let mut m = DMatrix::zeros(n, n);
        for (b, part) in self.spec.blocks().iter().zip(parts) {
            m.view_mut((b.offset, b.offset), (b.dim, b.dim)).copy_from(part);
        }
        m
    }

    pub fn dense(&self) -> DMatrix<f64> {
        self.assemble(&self.d)
    }

    pub fn dense_inverse(&self) -> DMatrix<f64> {
        self.assemble(&self.d_inv)
    }

    fn apply_with(&self, v: &ConeVector, parts: &[DMatrix<f64>], transpose: bool) -> ConeVector {
        assert_eq!(v.len(), self.spec.n(), "scaling applied to wrong dimension");
        let mut out = DVector::zeros(v.len());
        for (b, part) in self.spec.blocks().iter().zip(parts) {
            let src = v.rows(b.offset, b.dim);
            let r = if transpose {
                part.tr_mul(&src)
            } else {
                part * src
            };
            out.rows_mut(b.offset, b.dim).copy_from(&r);
        }
        out
    }

    /// `D v`
    pub fn apply(&self, v: &ConeVector) -> ConeVector {
        self.apply_with(v, &self.d, false)
    }

    /// `D^{-1} v`
    pub fn apply_inverse(&self, v: &ConeVector) -> ConeVector {
        self.apply_with(v, &self.d_inv, false)
    }

    /// `D^T v`
    pub fn apply_transpose(&self, v: &ConeVector) -> ConeVector {
        self.apply_with(v, &self.d, true)
    }

    /// `D^{-T} v`
    pub fn apply_inverse_transpose(&self, v: &ConeVector) -> ConeVector {
        self.apply_with(v, &self.d_inv, true)
    }

    /// Largest Frobenius residual of `(G^i)^T Q G^i - Q` over the blocks.
    pub fn group_residual(&self) -> f64 {
        self.g
            .iter()
            .map(|gi| {
                let m = gi.nrows();
                let mut q = DMatrix::identity(m, m);
                for i in 1..m {
                    q[(i, i)] = -1.0;
                }
                (gi.transpose() * &q * gi - q).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest Frobenius asymmetry `|D^i - (D^i)^T|` over the blocks.
    pub fn asymmetry(&self) -> f64 {
        self.d
            .iter()
            .map(|di| (di - di.transpose()).norm())
            .fold(0.0, f64::max)
    }
}

/// Nesterov-Todd scaling: the symmetric `D` in the group with `D^2 s = x`.
///
/// Per block the scaling point `w` is built from the determinant-normalized
/// `x` and `s`; then `D = sqrt(beta_x / beta_s) T_w`.
pub fn nt_scaling(x: &ConeVector, s: &ConeVector, spec: &ConeSpec) -> Result<ScalingMatrix> {
    require_interior("x", x, spec)?;
    require_interior("s", s, spec)?;
    let mut blocks = Vec::with_capacity(spec.k());
    for b in spec.blocks() {
        let xb = &x.as_slice()[b.range()];
        let sb = &s.as_slice()[b.range()];
        if b.dim == 1 {
            blocks.push((DMatrix::identity(1, 1), (sb[0] / xb[0]).sqrt()));
            continue;
        }
        let bx = beta(xb);
        let bs = beta(sb);
        let xn: Vec<f64> = xb.iter().map(|v| v / bx).collect();
        let sn: Vec<f64> = sb.iter().map(|v| v / bs).collect();
        let dot: f64 = xn.iter().zip(&sn).map(|(a, c)| a * c).sum();
        let gamma = ((1.0 + dot) / 2.0).sqrt();
        let mut w = vec![0.0; b.dim];
        w[0] = (xn[0] + sn[0]) / (2.0 * gamma);
        for j in 1..b.dim {
            w[j] = (xn[j] - sn[j]) / (2.0 * gamma);
        }
        // det(w) = 1 up to rounding; renormalize so T_w is exactly in the group.
        let bw = beta(&w);
        for wj in &mut w {
            *wj /= bw;
        }
        let tw = t_block(&w);
        // D = theta_d T_w  =>  D^{-1} = T_w^{-1} / theta_d = (Q T_w Q) / theta_d.
        let theta_d = (bx / bs).sqrt();
        blocks.push((q_sandwich(&tw), 1.0 / theta_d));
    }
    ScalingMatrix::from_group_blocks(spec, blocks)
}

/// Deterministic sampler over the automorphism group, built from hyperbolic
/// rotations in the `(1, j)` planes, plane rotations among the tail
/// coordinates, and a factor `theta in [0.5, 2]` per block.
pub fn random_automorphism(spec: &ConeSpec, seed: u64) -> ScalingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(spec.k());
    for b in spec.blocks() {
        let m = b.dim;
        let mut g = DMatrix::<f64>::identity(m, m);
        if m >= 2 {
            for j in 1..m {
                let t: f64 = rng.random_range(-1.0..1.0);
                let mut h = DMatrix::<f64>::identity(m, m);
                h[(0, 0)] = t.cosh();
                h[(j, j)] = t.cosh();
                h[(0, j)] = t.sinh();
                h[(j, 0)] = t.sinh();
                g = h * g;
            }
            if m >= 3 {
                for _ in 0..m {
                    let a = rng.random_range(1..m);
                    let c = rng.random_range(1..m);
                    if a == c {
                        continue;
                    }
                    let phi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let mut r = DMatrix::<f64>::identity(m, m);
                    r[(a, a)] = phi.cos();
                    r[(c, c)] = phi.cos();
                    r[(a, c)] = -phi.sin();
                    r[(c, a)] = phi.sin();
                    g = r * g;
                }
            }
        }
        let theta = rng.random_range(0.5..=2.0);
        blocks.push((g, theta));
    }
    ScalingMatrix::from_group_blocks(spec, blocks).expect("sampled factors are group members")
}

/// Scaled pair `(D^{-T} x, D s)`.
pub fn apply_scaling(
    d: &ScalingMatrix,
    x: &ConeVector,
    s: &ConeVector,
) -> Result<(ConeVector, ConeVector)> {
    d.spec().check("apply_scaling(x)", x)?;
    d.spec().check("apply_scaling(s)", s)?;
    Ok((d.apply_inverse_transpose(x), d.apply(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{jordan_product, membership, unit_element};
    use nalgebra::dvector;

    fn spec(l: usize, q: &[usize]) -> ConeSpec {
        ConeSpec::new(l, q.to_vec()).unwrap()
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn t_matrix_examples() {
        let s = spec(1, &[3]);
        let e = unit_element(&s);
        assert!(close(&t_scaling_matrix(&e, &s).unwrap(), &DMatrix::identity(4, 4), 1e-15));

        let s2 = spec(0, &[2]);
        let t = t_scaling_matrix(&dvector![2.0, 1.0], &s2).unwrap();
        assert!(close(&t, &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]), 1e-14));

        let s3 = spec(0, &[3]);
        let t = t_scaling_matrix(&dvector![2.0, 1.0, 0.0], &s3).unwrap();
        let r3 = 3f64.sqrt();
        let expect =
            DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, r3]);
        assert!(close(&t, &expect, 1e-14));
    }

    #[test]
    fn t_matrix_rejects_boundary() {
        let s = spec(0, &[2]);
        assert!(matches!(
            t_scaling_matrix(&dvector![1.0, 1.0], &s),
            Err(SocpError::NotInterior { .. })
        ));
    }

    #[test]
    fn t_inverse_apply_inverts() {
        let s = spec(1, &[3, 2]);
        let v = dvector![0.7, 3.0, 1.0, -2.0, 1.5, 0.4];
        let u = dvector![0.3, -1.0, 2.0, 0.5, 0.1, 0.9];
        let tu = t_scaling_apply(&v, &u, &s).unwrap();
        let back = t_scaling_inverse_apply(&v, &tu, &s).unwrap();
        assert!((back - u).amax() < 1e-13);
    }

    #[test]
    fn u_p_examples() {
        let s = spec(1, &[3]);
        let up = u_p_matrices(&unit_element(&s), &s).unwrap();
        assert_eq!(up.u, DMatrix::zeros(4, 4));
        assert_eq!(up.p, DMatrix::zeros(4, 4));

        let s2 = spec(0, &[2]);
        let up = u_p_matrices(&dvector![2.0, 1.0], &s2).unwrap();
        assert!(up.u.amax() < 1e-15);

        let s3 = spec(0, &[3]);
        let v = dvector![2.0, 1.0, 0.0];
        let up = u_p_matrices(&v, &s3).unwrap();
        let oracle = arrow_matrix(&v, &s3).unwrap() - t_scaling_matrix(&v, &s3).unwrap();
        assert!(close(&up.u, &oracle, 1e-12));
        let expect_u = DMatrix::from_diagonal(&dvector![0.0, 0.0, 2.0 - 3f64.sqrt()]);
        assert!(close(&up.u, &expect_u, 1e-12));
        assert_eq!(up.p, DMatrix::from_diagonal(&dvector![0.0, 0.0, 1.0]));
    }

    #[test]
    fn w_vector_examples() {
        let s = spec(0, &[2]);
        let e = unit_element(&s);
        let any = dvector![0.3, -4.0];
        assert_eq!(w_vector(&e, &any, &s).unwrap(), any);
        assert_eq!(w_vector(&e, &e, &s).unwrap(), e);
        let w = w_vector(&dvector![2.0, 1.0], &dvector![1.0, 0.0], &s).unwrap();
        assert!((w - dvector![2.0, 1.0]).amax() < 1e-14);
    }

    #[test]
    fn r_matrix_at_unit_is_mat_s() {
        let s = spec(1, &[3]);
        let e = unit_element(&s);
        let sv = dvector![0.5, 2.0, 0.3, -0.4];
        let r = r_matrix(&e, &sv, &s).unwrap();
        assert!(close(&r, &arrow_matrix(&sv, &s).unwrap(), 1e-14));
    }

    #[test]
    fn r_matrix_times_unit_is_w() {
        let s = spec(1, &[3, 2]);
        let x = dvector![1.3, 2.0, 0.5, -0.7, 1.1, 0.2];
        let r = r_matrix(&x, &x, &s).unwrap();
        let e = unit_element(&s);
        let w = w_vector(&x, &x, &s).unwrap();
        assert!((r * e - w).amax() < 1e-12);
    }

    #[test]
    fn nt_scaling_examples() {
        let s = spec(1, &[3]);
        let x = dvector![2.0, 3.0, 1.0, -1.0];
        let d = nt_scaling(&x, &x, &s).unwrap();
        assert!(close(&d.dense(), &DMatrix::identity(4, 4), 1e-14));

        let lin = spec(1, &[]);
        let d = nt_scaling(&dvector![4.0], &dvector![1.0], &lin).unwrap();
        assert!((d.block(0)[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn nt_scaling_contract() {
        let s = spec(2, &[3, 4]);
        let x = dvector![0.5, 3.0, 2.0, 0.5, -1.0, 1.0, 0.2, 0.1, -0.3];
        let sv = dvector![1.5, 0.1, 1.0, -0.5, 0.2, 4.0, 1.0, 2.0, 0.5];
        let d = nt_scaling(&x, &sv, &s).unwrap();
        assert!(d.asymmetry() < 1e-12);
        assert!(d.group_residual() < 1e-10);
        let dd = d.dense();
        let xs = &dd * &dd * &sv;
        assert!((xs - &x).norm() <= 1e-10 * (1.0 + x.norm()));
        // scaled iterates coincide
        let (xb, sb) = apply_scaling(&d, &x, &sv).unwrap();
        assert!((xb - sb).amax() < 1e-12);
    }

    #[test]
    fn random_automorphism_examples() {
        let lin = spec(1, &[]);
        let d = random_automorphism(&lin, 7);
        assert_eq!(d.group_factor(0), &DMatrix::identity(1, 1));
        assert!(d.theta(0) > 0.0);

        let s2 = spec(0, &[2]);
        let d = random_automorphism(&s2, 0);
        assert!(d.group_residual() < 1e-12);

        let s = spec(2, &[3, 5]);
        assert_eq!(random_automorphism(&s, 11), random_automorphism(&s, 11));
        assert_ne!(random_automorphism(&s, 11), random_automorphism(&s, 12));
    }

    #[test]
    fn apply_scaling_identity_and_invariants() {
        let s = spec(1, &[3]);
        let x = dvector![0.4, 2.0, 1.0, 0.5];
        let sv = dvector![1.1, 3.0, -1.0, 2.0];
        let (xb, sb) = apply_scaling(&ScalingMatrix::identity(&s), &x, &sv).unwrap();
        assert_eq!((xb, sb), (x.clone(), sv.clone()));

        let d = random_automorphism(&s, 3);
        let (xb, sb) = apply_scaling(&d, &x, &sv).unwrap();
        assert!((xb.dot(&sb) - x.dot(&sv)).abs() <= 1e-10 * x.dot(&sv).abs());
        assert!(membership(&xb, &s, true));
        // D^{-1} and D really are inverses
        let back = d.apply_inverse(&d.apply(&sv));
        assert!((back - &sv).amax() < 1e-12);
        let _ = jordan_product(&xb, &sb, &s).unwrap();
    }
}
