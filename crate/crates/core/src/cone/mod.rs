//! Euclidean Jordan algebra over a product of linear and second-order cones.
//!
//! A cone product `K = K_L^l x K_S^{n_1} x ... x K_S^{n_m}` is described by a
//! [`ConeSpec`]. Vectors over `K` are plain `DVector<f64>` values addressed
//! block by block; the linear part comes first and every linear entry is its
//! own 1-dimensional block, so the block count is `k = l + m`.
//!
//! One-dimensional second-order cones coincide with linear cones and are
//! handled by the same code path everywhere.

mod scaling;

pub use scaling::{
    apply_scaling, nt_scaling, r_matrix, random_automorphism, t_scaling_inverse_apply,
    t_scaling_apply, t_scaling_matrix, u_p_matrices, w_vector, ScalingMatrix, UpMatrices,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Result, SocpError};

/// A vector over the cone product. Blocks are addressed through [`ConeSpec`].
pub type ConeVector = DVector<f64>;

/// One cone block: a contiguous index range of a [`ConeVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub dim: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }
}

/// Structure of the cone product: `l` linear entries followed by
/// second-order cones of the listed dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    l: usize,
    soc_dims: Vec<usize>,
    blocks: Vec<Block>,
    n: usize,
}

impl ConeSpec {
    pub fn new(l: usize, soc_dims: Vec<usize>) -> Result<Self> {
        if let Some(pos) = soc_dims.iter().position(|&d| d == 0) {
            return Err(SocpError::InvalidConeSpec(format!(
                "second-order cone {pos} has dimension 0"
            )));
        }
        if l + soc_dims.len() == 0 {
            return Err(SocpError::InvalidConeSpec(
                "cone product has no blocks".to_string(),
            ));
        }
        let mut blocks = Vec::with_capacity(l + soc_dims.len());
        let mut offset = 0;
        for _ in 0..l {
            blocks.push(Block { offset, dim: 1 });
            offset += 1;
        }
        for &dim in &soc_dims {
            blocks.push(Block { offset, dim });
            offset += dim;
        }
        Ok(ConeSpec {
            l,
            soc_dims,
            blocks,
            n: offset,
        })
    }

    /// Nonnegative orthant of dimension `l`.
    pub fn linear(l: usize) -> Result<Self> {
        Self::new(l, Vec::new())
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn soc_dims(&self) -> &[usize] {
        &self.soc_dims
    }

    /// Number of cone blocks `k`.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Total dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The spec with one extra 1-dimensional block appended, used to fold
    /// the homogenizing pair (tau, kappa) into the cone variables.
    pub fn with_scalar_block(&self) -> ConeSpec {
        let mut soc = self.soc_dims.clone();
        soc.push(1);
        ConeSpec::new(self.l, soc).expect("extending a valid spec stays valid")
    }

    pub(crate) fn check(&self, context: &'static str, v: &ConeVector) -> Result<()> {
        check_len(context, self.n, v.len())
    }

    /// `e^T v`: sum of the leading entry of every block.
    pub fn unit_dot(&self, v: &ConeVector) -> f64 {
        self.blocks.iter().map(|b| v[b.offset]).sum()
    }
}

/// Euclidean norm of the tail `v_{2:}` of a block.
pub(crate) fn tail_norm(v: &[f64]) -> f64 {
    v[1..].iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// The unit element `e` of the algebra.
pub fn unit_element(spec: &ConeSpec) -> ConeVector {
    let mut e = DVector::zeros(spec.n());
    for b in spec.blocks() {
        e[b.offset] = 1.0;
    }
    e
}

/// Jordan product `u o v`, blockwise `(u^T v, u_1 v_{2:} + v_1 u_{2:})`.
pub fn jordan_product(u: &ConeVector, v: &ConeVector, spec: &ConeSpec) -> Result<ConeVector> {
    spec.check("jordan_product(u)", u)?;
    spec.check("jordan_product(v)", v)?;
    let mut out = DVector::zeros(spec.n());
    for b in spec.blocks() {
        let ub = &u.as_slice()[b.range()];
        let vb = &v.as_slice()[b.range()];
        out[b.offset] = ub.iter().zip(vb).map(|(a, c)| a * c).sum();
        for j in 1..b.dim {
            out[b.offset + j] = ub[0] * vb[j] + vb[0] * ub[j];
        }
    }
    Ok(out)
}

/// Block-diagonal arrow-head matrix `mat(v)`, so that `mat(u) v = u o v`.
pub fn arrow_matrix(v: &ConeVector, spec: &ConeSpec) -> Result<DMatrix<f64>> {
    spec.check("arrow_matrix", v)?;
    let mut m = DMatrix::zeros(spec.n(), spec.n());
    for b in spec.blocks() {
        let o = b.offset;
        m[(o, o)] = v[o];
        for j in 1..b.dim {
            m[(o, o + j)] = v[o + j];
            m[(o + j, o)] = v[o + j];
            m[(o + j, o + j)] = v[o];
        }
    }
    Ok(m)
}

/// Spectral values of one block: `(v_1 - |v_{2:}|, v_1 + |v_{2:}|)`.
pub fn block_spectral_bounds(v: &[f64]) -> (f64, f64) {
    let t = tail_norm(v);
    (v[0] - t, v[0] + t)
}

/// Per-block `(lambda_min, lambda_max)`.
pub fn spectral_bounds(v: &ConeVector, spec: &ConeSpec) -> Result<Vec<(f64, f64)>> {
    spec.check("spectral_bounds", v)?;
    Ok(spec
        .blocks()
        .iter()
        .map(|b| block_spectral_bounds(&v.as_slice()[b.range()]))
        .collect())
}

/// Smallest spectral value over all blocks. NaN if any block is NaN.
pub fn min_eigenvalue(v: &ConeVector, spec: &ConeSpec) -> f64 {
    spec.blocks()
        .iter()
        .map(|b| block_spectral_bounds(&v.as_slice()[b.range()]).0)
        .fold(f64::INFINITY, |acc, x| if x.is_nan() || x < acc { x } else { acc })
}

/// Cone membership with exact comparison; `strict` asks for the interior.
pub fn membership(v: &ConeVector, spec: &ConeSpec, strict: bool) -> bool {
    if v.len() != spec.n() {
        return false;
    }
    let lmin = min_eigenvalue(v, spec);
    if strict {
        lmin > 0.0
    } else {
        lmin >= 0.0
    }
}

/// Errors with [`SocpError::NotInterior`] naming the first offending block.
pub(crate) fn require_interior(what: &'static str, v: &ConeVector, spec: &ConeSpec) -> Result<()> {
    spec.check(what, v)?;
    for (i, b) in spec.blocks().iter().enumerate() {
        let (lmin, _) = block_spectral_bounds(&v.as_slice()[b.range()]);
        // `!(x > 0)` also rejects NaN.
        if !(lmin > 0.0) {
            return Err(SocpError::NotInterior {
                what,
                block: i,
                lambda_min: lmin,
            });
        }
    }
    Ok(())
}
