//! Scaled Newton system of the embedding.
//!
//! The solver assembles the hat form: unknowns `(dx_hat, dy, ds_hat)` with
//! `dx_hat = (dx, dtau)` and `ds_hat = (ds, dkappa)`, which in memory is the
//! order `[dx, dtau, dy, ds, dkappa]`. A literal five-block assembly in the
//! order `[dx, dy, ds, dkappa, dtau]` is kept as a cross-check.

use nalgebra::{DMatrix, DVector};

use crate::cone::{require_interior, t_scaling_apply, t_scaling_inverse_apply, jordan_product,
    nt_scaling, unit_element, ConeSpec, ConeVector, ScalingMatrix};
use crate::error::{Result, SocpError};
use crate::geometry::{hat_pack, mu};
use crate::problem::{HsdPoint, SocpProblem};

/// Pivots below this fraction of the largest pivot mark the system singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalingKind {
    #[default]
    Identity,
    Nt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Hat,
    FiveBlock,
}

#[derive(Debug, Clone)]
pub struct KktSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub layout: Layout,
    n: usize,
    p: usize,
}

impl KktSystem {
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonDirection {
    pub dx: ConeVector,
    pub dy: DVector<f64>,
    pub ds: ConeVector,
    pub dkappa: f64,
    pub dtau: f64,
    /// `|M d - rhs|` after refinement.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    /// `|dx^T ds + dkappa dtau|`
    pub orthogonality_defect: f64,
}

impl NewtonDirection {
    pub fn as_point(&self) -> HsdPoint {
        HsdPoint {
            x: self.dx.clone(),
            y: self.dy.clone(),
            s: self.ds.clone(),
            kappa: self.dkappa,
            tau: self.dtau,
        }
    }
}

fn arrow_block(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    let mut m = DMatrix::from_diagonal_element(d, d, v[0]);
    for j in 1..d {
        m[(0, j)] = v[j];
        m[(j, 0)] = v[j];
    }
    m
}

fn check_inputs(p: &SocpProblem, z: &HsdPoint, d: &ScalingMatrix) -> Result<()> {
    if d.spec() != &p.cones {
        return Err(SocpError::ConeSpecMismatch);
    }
    p.check_point(z)?;
    require_interior("x", &z.x, &p.cones)?;
    require_interior("s", &z.s, &p.cones)?;
    for (what, v) in [("tau", z.tau), ("kappa", z.kappa)] {
        if !(v > 0.0) {
            return Err(SocpError::NotInterior { what, block: 0, lambda_min: v });
        }
    }
    Ok(())
}

/// Hat-form assembly; `mu` is the centering target (normally `mu(z)`).
pub fn assemble(p: &SocpProblem, z: &HsdPoint, d: &ScalingMatrix, nu: f64, mu: f64) -> Result<KktSystem> {
    check_inputs(p, z, d)?;
    let (n, m) = (p.n(), p.p());
    let n1 = n + 1;
    let hat = hat_pack(z, &p.cones);
    let dh = d.with_scalar_block();

    // A_hat = [A, -b]
    let mut a_hat = DMatrix::zeros(m, n1);
    a_hat.columns_mut(0, n).copy_from(&p.a);
    a_hat.set_column(n, &(-&p.b));
    // G = [[0, c], [-c^T, 0]]
    let mut g = DMatrix::zeros(n1, n1);
    g.view_mut((0, n), (n, 1)).copy_from(&p.c);
    g.view_mut((n, 0), (1, n)).copy_from(&(-p.c.transpose()));

    let (ox, oy, os) = (0, n1, n1 + m);
    let (r1, r2, r3) = (0, m, m + n1);
    let order = 2 * n1 + m;
    let mut mat = DMatrix::zeros(order, order);
    let mut rhs = DVector::zeros(order);

    mat.view_mut((r1, ox), (m, n1)).copy_from(&a_hat);
    rhs.rows_mut(r1, m).copy_from(&(-(1.0 - nu) * (&a_hat * &hat.x)));

    mat.view_mut((r2, oy), (n1, m)).copy_from(&(-a_hat.transpose()));
    mat.view_mut((r2, ox), (n1, n1)).copy_from(&g);
    mat.view_mut((r2, os), (n1, n1)).fill_diagonal(-1.0);
    let dual = -a_hat.tr_mul(&hat.y) + &g * &hat.x - &hat.s;
    rhs.rows_mut(r2, n1).copy_from(&(-(1.0 - nu) * dual));

    let xbar = dh.apply_inverse_transpose(&hat.x);
    let sbar = dh.apply(&hat.s);
    for (i, b) in hat.spec.blocks().iter().enumerate() {
        let xb = arrow_block(&xbar.as_slice()[b.range()]);
        let sb = arrow_block(&sbar.as_slice()[b.range()]);
        let row = r3 + b.offset;
        mat.view_mut((row, os + b.offset), (b.dim, b.dim)).copy_from(&(&xb * dh.block(i)));
        mat.view_mut((row, ox + b.offset), (b.dim, b.dim))
            .copy_from(&(&sb * dh.inverse_block(i).transpose()));
    }
    let comp = unit_element(&hat.spec) * (nu * mu) - jordan_product(&xbar, &sbar, &hat.spec)?;
    rhs.rows_mut(r3, n1).copy_from(&comp);

    Ok(KktSystem { matrix: mat, rhs, layout: Layout::Hat, n, p: m })
}

/// Literal five-block assembly in unknown order `[dx, dy, ds, dkappa, dtau]`.
pub fn assemble_five_block(
    p: &SocpProblem,
    z: &HsdPoint,
    d: &ScalingMatrix,
    nu: f64,
    mu: f64,
) -> Result<KktSystem> {
    check_inputs(p, z, d)?;
    let (n, m) = (p.n(), p.p());
    let (cx, cy, cs, ck, ct) = (0, n, n + m, 2 * n + m, 2 * n + m + 1);
    let order = 2 * n + m + 2;
    let mut mat = DMatrix::zeros(order, order);
    let mut rhs = DVector::zeros(order);
    let damp = -(1.0 - nu);

    // (i) A dx - b dtau
    let r = 0;
    mat.view_mut((r, cx), (m, n)).copy_from(&p.a);
    mat.view_mut((r, ct), (m, 1)).copy_from(&(-&p.b));
    rhs.rows_mut(r, m).copy_from(&((&p.a * &z.x - &p.b * z.tau) * damp));

    // (ii) -A^T dy + c dtau - ds
    let r = m;
    mat.view_mut((r, cy), (n, m)).copy_from(&(-p.a.transpose()));
    mat.view_mut((r, ct), (n, 1)).copy_from(&p.c);
    mat.view_mut((r, cs), (n, n)).fill_diagonal(-1.0);
    rhs.rows_mut(r, n)
        .copy_from(&((-p.a.tr_mul(&z.y) + &p.c * z.tau - &z.s) * damp));

    // (iii) b^T dy - c^T dx - dkappa
    let r = m + n;
    mat.view_mut((r, cy), (1, m)).copy_from(&p.b.transpose());
    mat.view_mut((r, cx), (1, n)).copy_from(&(-p.c.transpose()));
    mat[(r, ck)] = -1.0;
    rhs[r] = (p.b.dot(&z.y) - p.c.dot(&z.x) - z.kappa) * damp;

    // (iv) Xbar D ds + Sbar D^-T dx
    let r = m + n + 1;
    let xbar = d.apply_inverse_transpose(&z.x);
    let sbar = d.apply(&z.s);
    let big_x = crate::cone::arrow_matrix(&xbar, &p.cones)?;
    let big_s = crate::cone::arrow_matrix(&sbar, &p.cones)?;
    mat.view_mut((r, cs), (n, n)).copy_from(&(&big_x * d.dense()));
    mat.view_mut((r, cx), (n, n))
        .copy_from(&(&big_s * d.dense_inverse().transpose()));
    rhs.rows_mut(r, n).copy_from(
        &(unit_element(&p.cones) * (nu * mu) - &big_x * &sbar),
    );

    // (v) kappa dtau + tau dkappa
    let r = 2 * n + m + 1;
    mat[(r, ct)] = z.kappa;
    mat[(r, ck)] = z.tau;
    rhs[r] = nu * mu - z.kappa * z.tau;

    Ok(KktSystem { matrix: mat, rhs, layout: Layout::FiveBlock, n, p: m })
}

/// Dense LU with partial pivoting and one refinement step.
pub fn solve_direction(sys: &KktSystem) -> Result<NewtonDirection> {
    let lu = sys.matrix.clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max_pivot = diag.amax();
    let min_pivot = diag.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let threshold = PIVOT_TOLERANCE * max_pivot;
    if !(min_pivot >= threshold) || max_pivot == 0.0 {
        return Err(SocpError::SingularSystem { pivot: min_pivot, threshold });
    }
    let mut sol = lu
        .solve(&sys.rhs)
        .ok_or(SocpError::SingularSystem { pivot: min_pivot, threshold })?;
    let res = &sys.rhs - &sys.matrix * &sol;
    if let Some(corr) = lu.solve(&res) {
        sol += corr;
    }
    let residual_norm = (&sys.matrix * &sol - &sys.rhs).norm();
    Ok(unpack(sys, &sol, residual_norm))
}

fn unpack(sys: &KktSystem, sol: &DVector<f64>, residual_norm: f64) -> NewtonDirection {
    let (n, m) = (sys.n, sys.p);
    let (dx, dtau, dy, ds, dkappa) = match sys.layout {
        Layout::Hat => (
            sol.rows(0, n).into_owned(),
            sol[n],
            sol.rows(n + 1, m).into_owned(),
            sol.rows(n + 1 + m, n).into_owned(),
            sol[2 * n + 1 + m],
        ),
        Layout::FiveBlock => (
            sol.rows(0, n).into_owned(),
            sol[2 * n + m + 1],
            sol.rows(n, m).into_owned(),
            sol.rows(n + m, n).into_owned(),
            sol[2 * n + m],
        ),
    };
    let orthogonality_defect = (dx.dot(&ds) + dkappa * dtau).abs();
    NewtonDirection {
        dx,
        dy,
        ds,
        dkappa,
        dtau,
        residual_norm,
        rhs_norm: sys.rhs.norm(),
        orthogonality_defect,
    }
}

/// Scaling matrix of the requested kind at `z`.
pub fn scaling_for(kind: ScalingKind, z: &HsdPoint, spec: &ConeSpec) -> Result<ScalingMatrix> {
    match kind {
        ScalingKind::Identity => Ok(ScalingMatrix::identity(spec)),
        ScalingKind::Nt => nt_scaling(&z.x, &z.s, spec),
    }
}

/// Assemble and solve at `z` with centering target `nu * mu(z)`.
pub fn newton_direction(p: &SocpProblem, z: &HsdPoint, kind: ScalingKind, nu: f64) -> Result<NewtonDirection> {
    let d = scaling_for(kind, z, &p.cones)?;
    solve_direction(&assemble(p, z, &d, nu, mu(z, &p.cones))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementDiagnostics {
    pub dx_norm: f64,
    pub ds_norm: f64,
    pub gamma_p: f64,
}

/// `Gamma_p = 2 (gamma^2/2 + (1-nu)^2 (k+1))^{1/2} / (1 - 3 gamma)`.
pub fn gamma_p(gamma: f64, delta: f64, k: usize) -> f64 {
    let nu = crate::ipm::centering_nu(delta, k);
    let t = (1.0 - nu).powi(2) * (k + 1) as f64;
    2.0 * (gamma * gamma / 2.0 + t).sqrt() / (1.0 - 3.0 * gamma)
}

/// Norms of `T_xhat^{-1} dx_hat` and `T_xhat ds_hat` together with `Gamma_p`.
pub fn scaled_increment_diagnostics(
    z: &HsdPoint,
    dir: &NewtonDirection,
    spec: &ConeSpec,
    gamma: f64,
    delta: f64,
) -> Result<IncrementDiagnostics> {
    let hat = hat_pack(z, spec);
    let step = hat_pack(&dir.as_point(), spec);
    let dx = t_scaling_inverse_apply(&hat.x, &step.x, &hat.spec)?;
    let ds = t_scaling_apply(&hat.x, &step.s, &hat.spec)?;
    Ok(IncrementDiagnostics {
        dx_norm: dx.norm(),
        ds_norm: ds.norm(),
        gamma_p: gamma_p(gamma, delta, spec.k()),
    })
}
