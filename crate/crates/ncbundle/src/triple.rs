//! Finite truncations of G-spectral triples with vertical geometry: vertical
//! and horizontal Dirac operators, canonical remainder, mean curvature,
//! shape operator, factorisation and index checks.

use crate::error::{Error, Result};
use crate::group::{GroupModel, ModuleLayout};
use crate::numerics::{
    anticomm, comm, compress, cx, dagger, diag_real, direct_sum, eigvalsh, eye, inverse, kron_all, mul,
    norm_bound, pauli, sym_inv, CMat, GradedMatrix, RMat,
};
use crate::weil::cubic_coefficients;

/// A named algebra generator together with its infinitesimal G-action
/// d alpha(eps_i)(a), when known.
#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub op: CMat,
    pub derivation: Option<Vec<CMat>>,
}

#[derive(Clone, Debug)]
pub struct GroupAction {
    pub group: GroupModel,
    pub du: Vec<CMat>,
    pub layout: ModuleLayout,
}

/// Vertical metric rho as a Gram matrix G_ij = <eps^i, rho eps^j>. The
/// diagonal variant stores commuting positive operators G_ii.
#[derive(Clone, Debug)]
pub enum VerticalMetric {
    Constant(RMat),
    Diagonal(Vec<CMat>),
}

#[derive(Clone, Debug)]
pub struct VerticalGeometry {
    pub metric: VerticalMetric,
    /// c(eps^i), odd and skew-adjoint.
    pub c_gen: Vec<CMat>,
    /// Orbit length operator for U(1) scenarios.
    pub ell: Option<CMat>,
}

impl VerticalGeometry {
    pub fn rank(&self) -> usize {
        self.c_gen.len()
    }

    /// G_ij as an operator on H.
    pub fn rho(&self, i: usize, j: usize) -> CMat {
        let n = self.c_gen[0].nrows();
        match &self.metric {
            VerticalMetric::Constant(g) => eye(n) * cx(g[(i, j)], 0.0),
            VerticalMetric::Diagonal(ops) => {
                if i == j {
                    ops[i].clone()
                } else {
                    CMat::zeros(n, n)
                }
            }
        }
    }

    /// (G^{-1})_ij as an operator on H.
    pub fn rho_inv(&self, i: usize, j: usize) -> Result<CMat> {
        let n = self.c_gen[0].nrows();
        match &self.metric {
            VerticalMetric::Constant(g) => Ok(eye(n) * cx(sym_inv(g)?[(i, j)], 0.0)),
            VerticalMetric::Diagonal(ops) => {
                if i == j {
                    inverse(&ops[i])
                } else {
                    Ok(CMat::zeros(n, n))
                }
            }
        }
    }

    /// c(eps_i flat) = sum_l (G^{-1})_il c(eps^l).
    pub fn c_flat(&self, i: usize) -> Result<CMat> {
        let n = self.c_gen[0].nrows();
        let mut out = CMat::zeros(n, n);
        for l in 0..self.rank() {
            out += mul(&self.rho_inv(i, l)?, &self.c_gen[l]);
        }
        Ok(out)
    }

    fn scalar_metric(&self) -> Option<&RMat> {
        match &self.metric {
            VerticalMetric::Constant(g) => Some(g),
            VerticalMetric::Diagonal(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TripleInstance {
    pub d: GradedMatrix,
    pub generators: Vec<Generator>,
    /// Cl_n multigrading generators (odd, supercommuting with everything).
    pub multigrading: Vec<CMat>,
    pub action: Option<GroupAction>,
    pub vertical: Option<VerticalGeometry>,
    pub remainder: Option<GradedMatrix>,
    /// Basis indices on which the truncation reproduces the untruncated
    /// operator identities. None means everywhere.
    pub interior: Option<Vec<usize>>,
}

impl TripleInstance {
    /// Validates that D is odd and self-adjoint and that every generator is
    /// even.
    pub fn new(d: GradedMatrix, generators: Vec<Generator>) -> Result<TripleInstance> {
        let tol = 1e-10 * norm_bound(&d.data).max(1.0);
        let r = d.hermitian_residual();
        if r > tol {
            return Err(Error::NotHermitian { residual: r, tol });
        }
        let odd = d.even_part();
        if norm_bound(&odd.data) > tol {
            return Err(Error::DimensionMismatch("D must be odd".into()));
        }
        for g in &generators {
            if g.op.nrows() != d.dim() {
                return Err(Error::DimensionMismatch(format!("generator {} has wrong size", g.name)));
            }
            let ga = d.like(g.op.clone());
            if norm_bound(&ga.odd_part().data) > 1e-10 * norm_bound(&g.op).max(1.0) {
                return Err(Error::DimensionMismatch(format!("generator {} must be even", g.name)));
            }
        }
        Ok(TripleInstance {
            d,
            generators,
            multigrading: Vec::new(),
            action: None,
            vertical: None,
            remainder: None,
            interior: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    pub fn graded(&self, a: CMat) -> GradedMatrix {
        self.d.like(a)
    }

    /// ||[D, a]|| per generator.
    pub fn commutator_norms(&self) -> Vec<(String, f64)> {
        self.generators.iter().map(|g| (g.name.clone(), norm_bound(&comm(&self.d.data, &g.op)))).collect()
    }

    /// Norm bound of `a` restricted to the interior window.
    pub fn interior_norm(&self, a: &CMat) -> f64 {
        match &self.interior {
            Some(idx) => norm_bound(&compress(a, idx)),
            None => norm_bound(a),
        }
    }

    fn vertical(&self) -> Result<&VerticalGeometry> {
        self.vertical.as_ref().ok_or(Error::MissingVerticalGeometry)
    }

    fn action(&self) -> Result<&GroupAction> {
        self.action.as_ref().ok_or(Error::MissingVerticalGeometry)
    }

    /// Max residuals of the vertical-geometry axioms on the interior.
    pub fn vertical_residuals(&self) -> Result<VerticalResiduals> {
        let v = self.vertical()?;
        let act = self.action()?;
        let m = v.rank();
        let mut out = VerticalResiduals::default();
        for i in 0..m {
            let c = &v.c_gen[i];
            out.skew = out.skew.max(norm_bound(&(dagger(c) + c)));
            out.parity = out.parity.max(norm_bound(&self.graded(c.clone()).even_part().data));
            for j in 0..m {
                let x = anticomm(&v.c_gen[i], &v.c_gen[j]) + v.rho(i, j) * cx(2.0, 0.0);
                out.clifford = out.clifford.max(self.interior_norm(&x));
                let mut e = comm(&act.du[i], &v.c_gen[j]);
                for k in 0..m {
                    e += &v.c_gen[k] * cx(act.group.structure[i][k][j], 0.0);
                }
                out.equivariance = out.equivariance.max(self.interior_norm(&e));
                let r = v.rho(i, j);
                out.rho_selfadjoint = out.rho_selfadjoint.max(norm_bound(&(dagger(&r) - &r)));
                for k in 0..m {
                    out.supercentre = out.supercentre.max(self.interior_norm(&comm(&r, &v.c_gen[k])));
                    for l in 0..m {
                        out.supercentre = out.supercentre.max(self.interior_norm(&comm(&r, &v.rho(k, l))));
                    }
                }
                for g in &self.generators {
                    out.supercentre = out.supercentre.max(self.interior_norm(&comm(&r, &g.op)));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerticalResiduals {
    pub skew: f64,
    pub parity: f64,
    pub clifford: f64,
    pub equivariance: f64,
    pub rho_selfadjoint: f64,
    pub supercentre: f64,
}

impl VerticalResiduals {
    pub fn max(&self) -> f64 {
        [self.skew, self.parity, self.clifford, self.equivariance, self.rho_selfadjoint, self.supercentre]
            .iter()
            .fold(0.0f64, |a, &b| a.max(b))
    }
}

/// sum_ijk t_ijk c^i c^j c^k with t_ijk = (G^{-1})_il f_jk^l, operator-valued
/// when the metric is.
fn cubic_clifford(t: &TripleInstance) -> Result<CMat> {
    let v = t.vertical()?;
    let act = t.action()?;
    let n = t.dim();
    let m = v.rank();
    if act.group.is_abelian() {
        return Ok(CMat::zeros(n, n));
    }
    let mut out = CMat::zeros(n, n);
    if let Some(g) = v.scalar_metric() {
        let coeff = cubic_coefficients(&act.group, g)?;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if coeff[i][j][k] != 0.0 {
                        out += mul(&mul(&v.c_gen[i], &v.c_gen[j]), &v.c_gen[k]) * cx(coeff[i][j][k], 0.0);
                    }
                }
            }
        }
    } else {
        for i in 0..m {
            let gi = v.rho_inv(i, i)?;
            for j in 0..m {
                for k in 0..m {
                    let f = act.group.structure[j][k][i];
                    if f != 0.0 {
                        let ccc = mul(&mul(&v.c_gen[i], &v.c_gen[j]), &v.c_gen[k]);
                        out += mul(&gi, &ccc) * cx(f, 0.0);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// D_v = c(eps^i) dU(eps_i) - 1/6 t_ijk c(eps^i eps^j eps^k).
pub fn vertical_dirac(t: &TripleInstance) -> Result<GradedMatrix> {
    let v = t.vertical()?;
    let act = t.action()?;
    let n = t.dim();
    let mut d = CMat::zeros(n, n);
    for (c, u) in v.c_gen.iter().zip(&act.du) {
        d += mul(c, u);
    }
    d -= cubic_clifford(t)? * cx(1.0 / 6.0, 0.0);
    Ok(t.graded(d))
}

/// Max over generators with known derivation of ||[D_v, a] - c(eps^i) d alpha(eps_i)(a)||.
pub fn vertical_derivation_residual(t: &TripleInstance, dv: &GradedMatrix) -> Result<f64> {
    let v = t.vertical()?;
    let mut r: f64 = 0.0;
    for g in &t.generators {
        if let Some(der) = &g.derivation {
            let mut x = comm(&dv.data, &g.op);
            for (c, da) in v.c_gen.iter().zip(der) {
                x -= mul(c, da);
            }
            r = r.max(t.interior_norm(&x));
        }
    }
    Ok(r)
}

/// The three summands of the canonical remainder, kept separately.
#[derive(Clone, Debug)]
pub struct RemainderTerms {
    /// mu(eps_i) = -1/2 [D, c(eps_i flat)] - dU(eps_i)
    pub moment: Vec<CMat>,
    /// c(eps^i) mu(eps_i)
    pub moment_term: CMat,
    /// -1/4 (G^{-1})_ij [D, G_ij]
    pub middle: CMat,
    /// -1/12 t_ijk c(eps^i eps^j eps^k)
    pub cubic: CMat,
}

impl RemainderTerms {
    pub fn total(&self) -> CMat {
        &self.moment_term + &self.middle + &self.cubic
    }
}

pub fn remainder_terms(t: &TripleInstance) -> Result<RemainderTerms> {
    let v = t.vertical()?;
    let act = t.action()?;
    let m = v.rank();
    let n = t.dim();
    let d = &t.d.data;
    let mut moment = Vec::new();
    let mut moment_term = CMat::zeros(n, n);
    for i in 0..m {
        let mu = anticomm(d, &v.c_flat(i)?) * cx(-0.5, 0.0) - &act.du[i];
        moment_term += mul(&v.c_gen[i], &mu);
        moment.push(mu);
    }
    let mut middle = CMat::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let g = v.rho(i, j);
            let dg = comm(d, &g);
            if norm_bound(&dg) > 0.0 {
                middle -= mul(&v.rho_inv(i, j)?, &dg) * cx(0.25, 0.0);
            }
        }
    }
    let cubic = cubic_clifford(t)? * cx(-1.0 / 12.0, 0.0);
    Ok(RemainderTerms { moment, moment_term, middle, cubic })
}

/// Z = c(eps^i) mu(eps_i) - 1/4 (G^{-1})_ij [D, G_ij] - 1/12 t_ijk c(eps^i eps^j eps^k).
pub fn canonical_remainder(t: &TripleInstance) -> Result<GradedMatrix> {
    Ok(t.graded(remainder_terms(t)?.total()))
}

/// Checks that Z is odd, self-adjoint and G-invariant on the interior.
pub fn validate_remainder(t: &TripleInstance, z: &GradedMatrix, tol: f64) -> Result<()> {
    let scale = norm_bound(&t.d.data).max(1.0);
    let lim = tol * scale;
    let even = t.interior_norm(&z.even_part().data);
    if even > lim {
        return Err(Error::InvalidRemainder(format!("even part {even:.3e}")));
    }
    let sa = t.interior_norm(&(dagger(&z.data) - &z.data));
    if sa > lim {
        return Err(Error::InvalidRemainder(format!("not self-adjoint, residual {sa:.3e}")));
    }
    if let Some(act) = &t.action {
        for u in &act.du {
            let r = t.interior_norm(&comm(&z.data, u));
            if r > lim {
                return Err(Error::InvalidRemainder(format!("not invariant, residual {r:.3e}")));
            }
        }
    }
    Ok(())
}

/// D_h[Z] = D - D_v - Z, with Z validated at tolerance 1e-9 (relative to ||D||).
pub fn horizontal_dirac(t: &TripleInstance, z: &GradedMatrix) -> Result<GradedMatrix> {
    horizontal_dirac_tol(t, z, 1e-9)
}

pub fn horizontal_dirac_tol(t: &TripleInstance, z: &GradedMatrix, tol: f64) -> Result<GradedMatrix> {
    validate_remainder(t, z, tol)?;
    let dv = vertical_dirac(t)?;
    Ok(t.graded(&t.d.data - &dv.data - &z.data))
}

/// kappa = -1/2 (G^{-1})_ij [D, G_ij] and T[Z](eps_i) = [D_h[Z], c(eps_i flat)].
pub fn mean_curvature_and_shape(t: &TripleInstance, z: &GradedMatrix) -> Result<(GradedMatrix, Vec<CMat>)> {
    let kappa = t.graded(remainder_terms(t)?.middle * cx(2.0, 0.0));
    let dh = t.graded(&t.d.data - &vertical_dirac(t)?.data - &z.data);
    let v = t.vertical()?;
    let mut shape = Vec::new();
    for i in 0..v.rank() {
        shape.push(anticomm(&dh.data, &v.c_flat(i)?));
    }
    Ok((kappa, shape))
}

/// Residual of [D_h, c(eps^i)] rebuilt from the shape operator:
/// c(eps^i) = G_ij c(eps_j flat), so [D_h, c(eps^i)] = G_ij T_j + [D_h, G_ij] c(eps_j flat).
pub fn shape_reconstruction_residual(t: &TripleInstance, dh: &GradedMatrix, shape: &[CMat]) -> Result<f64> {
    let v = t.vertical()?;
    let m = v.rank();
    let mut r: f64 = 0.0;
    for i in 0..m {
        let direct = anticomm(&dh.data, &v.c_gen[i]);
        let mut rebuilt = CMat::zeros(t.dim(), t.dim());
        for j in 0..m {
            let g = v.rho(i, j);
            rebuilt += mul(&g, &shape[j]) + mul(&comm(&dh.data, &g), &v.c_flat(j)?);
        }
        r = r.max(t.interior_norm(&(direct - rebuilt)));
    }
    Ok(r)
}

/// Max over i of ||[D_h, c(eps^i)] + (1/m) kappa c(eps^i)||.
pub fn umbilic_residual(t: &TripleInstance, dh: &GradedMatrix, kappa: &GradedMatrix) -> Result<f64> {
    let v = t.vertical()?;
    let m = v.rank() as f64;
    let mut r: f64 = 0.0;
    for c in &v.c_gen {
        let x = anticomm(&dh.data, c) + mul(&kappa.data, c) * cx(1.0 / m, 0.0);
        r = r.max(t.interior_norm(&x));
    }
    Ok(r)
}

/// Block data identifying H with (module) (x) H^G for principal-type
/// scenarios. Blocks are contiguous and of equal size.
#[derive(Clone, Debug)]
pub struct PrincipalBlocks {
    pub labels: Vec<Vec<i64>>,
    pub block_dim: usize,
    /// Position of the trivial label.
    pub invariant: usize,
    /// Vertical symbol on each block, acting on the block space.
    pub vertical_symbol: Vec<CMat>,
    /// Connection term added to D^G on each block; None means zero.
    pub connection: Option<Vec<CMat>>,
    /// Module-side action of each triple generator on (+)_k copies of H^G.
    pub algebra_model: Vec<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationReport {
    pub unitarity: f64,
    pub intertwining: f64,
    pub vertical: f64,
    pub horizontal: f64,
    pub geodesic: bool,
    pub shape_norm: f64,
    pub anticommutator: f64,
    pub square: f64,
    /// (epsilon, sign, C) with C = max eig(sign {D_v,D_h} - epsilon D_v^2).
    pub weak_anticommutation: Vec<(f64, f64, f64)>,
}

pub fn multiplication_map(blocks: &PrincipalBlocks) -> CMat {
    // copy k of H^G sits at block k; lambda_k carries block 0 onto block k
    // without changing the block coordinates, so M is the identity in this
    // ordering. It is still assembled from the block embeddings.
    let n = blocks.labels.len() * blocks.block_dim;
    let mut m = CMat::zeros(n, n);
    for b in 0..blocks.labels.len() {
        for i in 0..blocks.block_dim {
            m[(b * blocks.block_dim + i, b * blocks.block_dim + i)] = cx(1.0, 0.0);
        }
    }
    m
}

pub fn factorization_check(
    t: &TripleInstance,
    z: &GradedMatrix,
    blocks: &PrincipalBlocks,
    tol: f64,
) -> Result<FactorizationReport> {
    let n = t.dim();
    if blocks.labels.len() * blocks.block_dim != n {
        return Err(Error::NotFactorisable("block metadata does not cover H".into()));
    }
    let m = multiplication_map(blocks);
    let md = dagger(&m);
    let unitarity = norm_bound(&(mul(&md, &m) - eye(n))).max(norm_bound(&(mul(&m, &md) - eye(n))));
    let mut intertwining: f64 = 0.0;
    for (g, model) in t.generators.iter().zip(&blocks.algebra_model) {
        intertwining = intertwining.max(t.interior_norm(&(mul(&mul(&m, model), &md) - &g.op)));
    }
    let dv = vertical_dirac(t)?;
    let vmodel = direct_sum(&blocks.vertical_symbol);
    let vertical = norm_bound(&(mul(&mul(&m, &vmodel), &md) - &dv.data));
    let dh = t.graded(&t.d.data - &dv.data - &z.data);
    let bd = blocks.block_dim;
    let inv: Vec<usize> = (blocks.invariant * bd..(blocks.invariant + 1) * bd).collect();
    let dg = compress(&dh.data, &inv);
    let hblocks: Vec<CMat> = (0..blocks.labels.len())
        .map(|b| match &blocks.connection {
            Some(conn) => &dg + &conn[b],
            None => dg.clone(),
        })
        .collect();
    let hmodel = direct_sum(&hblocks);
    let horizontal = t.interior_norm(&(mul(&mul(&m, &hmodel), &md) - &dh.data));
    for (name, r) in [
        ("multiplication map unitarity", unitarity),
        ("algebra intertwining", intertwining),
        ("vertical model", vertical),
        ("horizontal model", horizontal),
    ] {
        if r > tol {
            return Err(Error::NotFactorisable(format!("{name}: residual {r:.3e}")));
        }
    }
    let (_, shape) = mean_curvature_and_shape(t, z)?;
    let shape_norm = shape.iter().map(|s| t.interior_norm(s)).fold(0.0, f64::max);
    let geodesic = shape_norm <= tol;
    let ac = anticomm(&dv.data, &dh.data);
    let anticommutator = t.interior_norm(&ac);
    let dz = &t.d.data - &z.data;
    let square = t.interior_norm(&(mul(&dz, &dz) - mul(&dv.data, &dv.data) - mul(&dh.data, &dh.data)));
    let mut wac = Vec::new();
    if geodesic {
        if anticommutator > tol || square > tol {
            return Err(Error::NotFactorisable(format!(
                "geodesic but {{D_v,D_h}} = {anticommutator:.3e}, square defect {square:.3e}"
            )));
        }
    } else {
        wac = weak_anticommutation(&dv.data, &dh.data, &[0.5, 1.0]);
    }
    Ok(FactorizationReport {
        unitarity,
        intertwining,
        vertical,
        horizontal,
        geodesic,
        shape_norm,
        anticommutator,
        square,
        weak_anticommutation: wac,
    })
}

/// C(eps, sign) = max eigenvalue of sign {D_v, D_h} - eps D_v^2, so that
/// sign {D_v, D_h} <= eps D_v^2 + C.
pub fn weak_anticommutation(dv: &CMat, dh: &CMat, eps: &[f64]) -> Vec<(f64, f64, f64)> {
    let ac = anticomm(dv, dh);
    let dv2 = mul(dv, dv);
    let mut out = Vec::new();
    for &e in eps {
        for sign in [1.0, -1.0] {
            let x = &ac * cx(sign, 0.0) - &dv2 * cx(e, 0.0);
            let ev = eigvalsh(&((&x + dagger(&x)) * cx(0.5, 0.0)));
            out.push((e, sign, *ev.last().unwrap_or(&0.0)));
        }
    }
    out
}

/// (dim ker D on even vectors, dim ker D on odd vectors), counting singular
/// values of the odd-to-even corner at or below tol.
pub fn graded_kernel(t: &TripleInstance, tol: f64) -> (usize, usize) {
    let mask = &t.d.parity_mask;
    let even: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    let odd: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if even.is_empty() || odd.is_empty() {
        return (even.len(), odd.len());
    }
    // D maps even -> odd through the corner A = D[odd, even].
    let a = CMat::from_fn(odd.len(), even.len(), |r, c| t.d.data[(odd[r], even[c])]);
    let sv = a.singular_values();
    let rank = sv.iter().filter(|&&s| s > tol).count();
    (even.len() - rank, odd.len() - rank)
}

/// dim ker D ∩ even - dim ker D ∩ odd.
pub fn graded_index(t: &TripleInstance, tol: f64) -> i64 {
    let (e, o) = graded_kernel(t, tol);
    e as i64 - o as i64
}

/// Spin Dirac operator on the Fourier truncation {-k..k}^2 of the flat
/// torus: sum_j sigma_j (x) 2 pi n_j, graded by sigma_3.
pub fn flat_torus_dirac(k: i64) -> TripleInstance {
    let [s1, s2, _] = pauli();
    let ns: Vec<f64> = (-k..=k).map(|n| 2.0 * std::f64::consts::PI * n as f64).collect();
    let p = diag_real(&ns);
    let one = eye(ns.len());
    let d = kron_all(&[&s1, &p, &one]) + kron_all(&[&s2, &one, &p]);
    let nb = ns.len() * ns.len();
    let mask: Vec<bool> = (0..2 * nb).map(|i| i >= nb).collect();
    TripleInstance::new(GradedMatrix { data: d, parity_mask: mask, multigrade: 0 }, Vec::new())
        .expect("flat torus Dirac is odd and self-adjoint")
}

/// Warped U(1) scenario on C^2 (x) l^2(|n| <= fibre) (x) l^2(|q| <= base):
/// ell = multiplication by `ell_coeffs` (Fourier coefficients c_{-d..d} of a
/// positive trigonometric polynomial), c(d theta) = 2 pi i sigma_1 (x) ell^{-1},
/// D = D_v + sigma_2 (x) P with P = 2 pi q.
pub fn warped_u1(fibre: i64, base: i64, ell_coeffs: &[f64], margin: i64) -> Result<TripleInstance> {
    use std::f64::consts::PI;
    let deg = (ell_coeffs.len() as i64 - 1) / 2;
    if ell_coeffs.len() % 2 == 0 || deg > base {
        return Err(Error::TruncationExceeded("ell degree exceeds the base window".into()));
    }
    let [s1, s2, _] = pauli();
    let nb = (2 * base + 1) as usize;
    let nf = (2 * fibre + 1) as usize;
    let ell_b = CMat::from_fn(nb, nb, |r, c| {
        let d = r as i64 - c as i64;
        if d.abs() <= deg {
            cx(ell_coeffs[(d + deg) as usize], 0.0)
        } else {
            cx(0.0, 0.0)
        }
    });
    let ell_inv_b = inverse(&ell_b)?;
    let p = diag_real(&(-base..=base).map(|q| 2.0 * PI * q as f64).collect::<Vec<_>>());
    let du_f = crate::numerics::diag(&(-fibre..=fibre).map(|n| cx(0.0, n as f64)).collect::<Vec<_>>());
    let i2 = eye(2);
    let ifb = eye(nf);
    let ib = eye(nb);
    let ell = kron_all(&[&i2, &ifb, &ell_b]);
    let c = kron_all(&[&(&s1 * cx(0.0, 2.0 * PI)), &ifb, &ell_inv_b]);
    let du = kron_all(&[&i2, &du_f, &ib]);
    let ell_inv = kron_all(&[&i2, &ifb, &ell_inv_b]);
    let g = mul(&ell_inv, &ell_inv) * cx(4.0 * PI * PI, 0.0);
    let dv = mul(&c, &du);
    let d = &dv + kron_all(&[&s2, &ifb, &p]);
    let n = d.nrows();
    let block = nf * nb;
    let mask: Vec<bool> = (0..n).map(|i| i >= block).collect();
    let shift = |k: usize| CMat::from_fn(k, k, |r, c| if r == c + 1 { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
    let fib = kron_all(&[&i2, &shift(nf), &ib]);
    let fib_der = &fib * cx(0.0, 1.0);
    let gens = vec![
        Generator { name: "e_x".into(), op: kron_all(&[&i2, &ifb, &shift(nb)]), derivation: Some(vec![CMat::zeros(n, n)]) },
        Generator { name: "e_theta".into(), op: fib, derivation: Some(vec![fib_der]) },
    ];
    let mut t = TripleInstance::new(GradedMatrix { data: d, parity_mask: mask, multigrade: 0 }, gens)?;
    let group = GroupModel::torus(1, 2.0 * PI, fibre as u32);
    let labels: Vec<Vec<i64>> = (0..n).map(|i| vec![((i % block) / nb) as i64 - fibre]).collect();
    t.action = Some(GroupAction { group, du: vec![du], layout: ModuleLayout::Torus { labels } });
    t.vertical = Some(VerticalGeometry { metric: VerticalMetric::Diagonal(vec![g]), c_gen: vec![c], ell: Some(ell) });
    let inner = base - margin;
    t.interior = Some(
        (0..n)
            .filter(|&i| {
                let q = (i % nb) as i64 - base;
                q.abs() <= inner
            })
            .collect(),
    );
    Ok(t)
}

/// SU(2) group scenario: H = truncated regular module (x) spinors, D = c(D̸).
pub fn su2_group_triple(twice_j: u32, rho: &RMat) -> Result<TripleInstance> {
    use crate::weil::{represent_cubic_dirac, RepresentedWeil};
    let group = GroupModel::su2(twice_j);
    let w = RepresentedWeil::su2_regular(&group, rho)?;
    let d = represent_cubic_dirac(&w);
    let mut t = TripleInstance::new(d, Vec::new())?;
    t.action = Some(GroupAction { group, du: w.du_total.clone(), layout: w.layout.clone() });
    t.vertical = Some(VerticalGeometry { metric: VerticalMetric::Constant(rho.clone()), c_gen: w.c_gen, ell: None });
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::su2_kappa;
    use crate::numerics::{dist, Parity};
    use crate::weil::cubic_term;

    fn warped() -> TripleInstance {
        warped_u1(2, 30, &[0.5, 2.0, 0.5], 24).unwrap()
    }

    #[test]
    fn warped_vertical_geometry() {
        let t = warped();
        let r = t.vertical_residuals().unwrap();
        assert!(r.max() <= 1e-9, "{r:?}");
    }

    #[test]
    fn warped_vertical_dirac() {
        let t = warped();
        let dv = vertical_dirac(&t).unwrap();
        assert!(dv.is_homogeneous(Parity::Odd));
        assert!(dv.hermitian_residual() <= 1e-10);
        assert!(vertical_derivation_residual(&t, &dv).unwrap() <= 1e-9);
    }

    #[test]
    fn warped_middle_term_is_half_mean_curvature() {
        let t = warped();
        let terms = remainder_terms(&t).unwrap();
        let v = t.vertical.as_ref().unwrap();
        let ell = v.ell.as_ref().unwrap();
        let kappa = mul(&inverse(ell).unwrap(), &comm(&t.d.data, ell));
        let r = t.interior_norm(&(&terms.middle - &kappa * cx(0.5, 0.0)));
        assert!(r <= 1e-9, "{r:e}");
        assert!(t.interior_norm(&kappa) > 0.1);
        let z = canonical_remainder(&t).unwrap();
        assert!(t.interior_norm(&(dagger(&z.data) - &z.data)) <= 1e-9);
        validate_remainder(&t, &z, 1e-9).unwrap();
    }

    #[test]
    fn warped_shape_and_umbilic() {
        let t = warped();
        let z = canonical_remainder(&t).unwrap();
        let (kappa, shape) = mean_curvature_and_shape(&t, &z).unwrap();
        let dh = horizontal_dirac(&t, &z).unwrap();
        assert!(shape_reconstruction_residual(&t, &dh, &shape).unwrap() <= 1e-9);
        assert!(umbilic_residual(&t, &dh, &kappa).unwrap() <= 1e-9);
        assert!(t.interior_norm(&shape[0]) > 1e-3);
        // kappa does not depend on the remainder
        let z0 = t.graded(CMat::zeros(t.dim(), t.dim()));
        let (k0, _) = mean_curvature_and_shape(&t, &z0).unwrap();
        assert_eq!(dist(&k0.data, &kappa.data), 0.0);
    }

    #[test]
    fn su2_canonical_remainder_is_cubic() {
        let t = su2_group_triple(2, &RMat::identity(3, 3)).unwrap();
        let terms = remainder_terms(&t).unwrap();
        assert!(norm_bound(&terms.moment_term) <= 1e-9);
        assert!(norm_bound(&terms.middle) == 0.0);
        let act = t.action.as_ref().unwrap();
        let v = t.vertical.as_ref().unwrap();
        let expect = cubic_term(&act.group, &RMat::identity(3, 3), &v.c_gen).unwrap() * cx(-1.0 / 12.0, 0.0);
        let z = canonical_remainder(&t).unwrap();
        assert!(dist(&z.data, &expect) <= 1e-9);
        assert!(z.hermitian_residual() <= 1e-9);
        let dh = horizontal_dirac(&t, &z).unwrap();
        assert!(dist(&dh.data, &(-&z.data)) <= 1e-9);
    }

    #[test]
    fn su2_index_and_gap() {
        let t = su2_group_triple(4, &RMat::identity(3, 3)).unwrap();
        assert_eq!(graded_kernel(&t, 1e-8), (0, 0));
        assert_eq!(graded_index(&t, 1e-8), 0);
        let gap = eigvalsh(&t.d.data).iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        assert!(gap >= su2_kappa() / 2.0 - 1e-9);
    }

    #[test]
    fn flat_torus_kernel() {
        let t = flat_torus_dirac(3);
        assert_eq!(graded_kernel(&t, 1e-9), (1, 1));
        assert_eq!(graded_index(&t, 1e-9), 0);
    }

    #[test]
    fn zero_dirac_balanced() {
        let d = GradedMatrix { data: CMat::zeros(4, 4), parity_mask: vec![false, false, true, true], multigrade: 0 };
        let t = TripleInstance::new(d, Vec::new()).unwrap();
        assert_eq!(graded_kernel(&t, 1e-12), (2, 2));
        assert_eq!(graded_index(&t, 1e-12), 0);
    }

    #[test]
    fn missing_vertical() {
        let t = flat_torus_dirac(1);
        assert_eq!(vertical_dirac(&t).unwrap_err(), Error::MissingVerticalGeometry);
        assert_eq!(canonical_remainder(&t).unwrap_err(), Error::MissingVerticalGeometry);
    }

    #[test]
    fn invalid_remainder_rejected() {
        let t = su2_group_triple(1, &RMat::identity(3, 3)).unwrap();
        let z = t.graded(eye(t.dim()));
        assert!(matches!(horizontal_dirac(&t, &z), Err(Error::InvalidRemainder(_))));
    }

    #[test]
    fn weak_anticommutation_constants() {
        let t = warped();
        let z = canonical_remainder(&t).unwrap();
        let dv = vertical_dirac(&t).unwrap();
        let dh = horizontal_dirac(&t, &z).unwrap();
        let idx = t.interior.clone().unwrap();
        let dvi = compress(&dv.data, &idx);
        let dhi = compress(&dh.data, &idx);
        for (e, s, c) in weak_anticommutation(&dvi, &dhi, &[0.5, 1.0]) {
            let x = eye(idx.len()) * cx(c, 0.0) + mul(&dvi, &dvi) * cx(e, 0.0) - anticomm(&dvi, &dhi) * cx(s, 0.0);
            let min = eigvalsh(&((&x + dagger(&x)) * cx(0.5, 0.0)))[0];
            assert!(min >= -1e-8 * c.abs().max(1.0));
        }
    }

    #[test]
    fn one_dimensional_factorisation() {
        let d = GradedMatrix { data: CMat::zeros(1, 1), parity_mask: vec![false], multigrade: 0 };
        let mut t = TripleInstance::new(d, Vec::new()).unwrap();
        t.action = Some(GroupAction {
            group: GroupModel::u1(0),
            du: vec![CMat::zeros(1, 1)],
            layout: ModuleLayout::Torus { labels: vec![vec![0]] },
        });
        t.vertical = Some(VerticalGeometry {
            metric: VerticalMetric::Constant(RMat::identity(1, 1)),
            c_gen: vec![CMat::zeros(1, 1)],
            ell: None,
        });
        let blocks = PrincipalBlocks {
            labels: vec![vec![0]],
            block_dim: 1,
            invariant: 0,
            vertical_symbol: vec![CMat::zeros(1, 1)],
            connection: None,
            algebra_model: Vec::new(),
        };
        let z = t.graded(CMat::zeros(1, 1));
        let rep = factorization_check(&t, &z, &blocks, 1e-12).unwrap();
        assert_eq!(rep.unitarity + rep.vertical + rep.horizontal + rep.anticommutator + rep.square, 0.0);
    }
}
