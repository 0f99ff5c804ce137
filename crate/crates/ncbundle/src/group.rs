//! Harmonic analysis for T^m and SU(2).
//!
//! Conventions. A torus T^m = R^m / P Z^m has basis eps_i = d/dt^i, inner
//! product delta_ij / P^2 (unit volume) and characters e_n(t) = exp(2 pi i
//! <n,t>/P), so dU(eps_i) = 2 pi i n_i / P and lambda_n = 2 pi n / P. With
//! P = 2 pi this is the angle model of U(1).
//!
//! SU(2) uses an orthonormal basis with [eps_i, eps_j] = kappa eps_k (cyclic).
//! Unit Haar volume forces kappa^3 = 16 pi^2: the metric <X_i,X_j> = delta for
//! X_k = -i sigma_k / 2 makes SU(2) the round 3-sphere of radius 2, of volume
//! 16 pi^2, and eps_k = kappa X_k rescales lengths by 1/kappa.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{
    cx, dagger, diag, eigh, eye, kron, max_abs, mul, op_norm, sym_fn_pd, CMat, RMat, C64, ZERO,
};

/// SU(2) structure-constant scale fixed by unit Haar volume.
pub fn su2_kappa() -> f64 {
    (16.0 * PI * PI).cbrt()
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Torus { m: usize, period: f64 },
    Su2,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrrepLabel {
    /// Fourier index n in Z^m.
    Torus(Vec<i64>),
    /// Spin j, stored as 2j.
    Spin(u32),
}

impl std::fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IrrepLabel::Torus(n) => {
                let parts: Vec<String> = n.iter().map(|x| x.to_string()).collect();
                write!(f, "n=({})", parts.join(","))
            }
            IrrepLabel::Spin(tj) => {
                if tj % 2 == 0 {
                    write!(f, "j={}", tj / 2)
                } else {
                    write!(f, "j={}/2", tj)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct IrrepData {
    pub label: IrrepLabel,
    pub dim: usize,
    /// Coordinates lambda(eps_i) of the highest weight.
    pub highest_weight: Vec<f64>,
    pub du: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub struct GroupModel {
    pub kind: GroupKind,
    pub dim: usize,
    /// f[i][j][k] with [eps_i, eps_j] = f_ij^k eps_k.
    pub structure: Vec<Vec<Vec<f64>>>,
    /// Gram matrix of the fixed Ad-invariant inner product on g.
    pub inner: RMat,
    /// Coordinates of the half-sum of positive roots.
    pub rho_plus: Vec<f64>,
    /// Truncation: ||n||_inf <= K for tori, 2j <= 2J for SU(2).
    pub truncation: u32,
}

/// Spin-j angular momentum matrices (J1, J2, J3) in the basis m = j, j-1, ..., -j.
pub fn spin_matrices(twice_j: u32) -> [CMat; 3] {
    let j = twice_j as f64 / 2.0;
    let d = twice_j as usize + 1;
    let m = |a: usize| j - a as f64;
    let mut jp = CMat::zeros(d, d);
    for a in 1..d {
        // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; index a-1 holds m+1.
        let mm = m(a);
        jp[(a - 1, a)] = cx((j * (j + 1.0) - mm * (mm + 1.0)).sqrt(), 0.0);
    }
    let jm = dagger(&jp);
    let j1 = (&jp + &jm) * cx(0.5, 0.0);
    let j2 = (&jp - &jm) * cx(0.0, -0.5);
    let j3 = diag(&(0..d).map(|a| cx(m(a), 0.0)).collect::<Vec<_>>());
    [j1, j2, j3]
}

impl GroupModel {
    pub fn torus(m: usize, period: f64, k: u32) -> GroupModel {
        GroupModel {
            kind: GroupKind::Torus { m, period },
            dim: m,
            structure: vec![vec![vec![0.0; m]; m]; m],
            inner: RMat::identity(m, m) / (period * period),
            rho_plus: vec![0.0; m],
            truncation: k,
        }
    }

    /// U(1) in the angle model, period 2 pi.
    pub fn u1(k: u32) -> GroupModel {
        Self::torus(1, 2.0 * PI, k)
    }

    pub fn su2(twice_jmax: u32) -> GroupModel {
        let kappa = su2_kappa();
        let mut f = vec![vec![vec![0.0; 3]; 3]; 3];
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            f[i][j][k] = kappa;
            f[j][i][k] = -kappa;
        }
        GroupModel {
            kind: GroupKind::Su2,
            dim: 3,
            structure: f,
            inner: RMat::identity(3, 3),
            rho_plus: vec![0.0, 0.0, kappa / 2.0],
            truncation: twice_jmax,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.kind {
            GroupKind::Su2 => Some(self.structure[0][1][2]),
            GroupKind::Torus { .. } => None,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self.kind, GroupKind::Torus { .. })
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let mut out = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += x[i] * y[j] * self.structure[i][j][k];
                }
            }
        }
        out
    }

    /// Max residual of antisymmetry and the Jacobi identity on basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let m = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; m];
            v[i] = 1.0;
            v
        };
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    r = r.max((self.structure[i][j][k] + self.structure[j][i][k]).abs());
                    let a = self.bracket(&e(i), &self.bracket(&e(j), &e(k)));
                    let b = self.bracket(&e(j), &self.bracket(&e(k), &e(i)));
                    let c = self.bracket(&e(k), &self.bracket(&e(i), &e(j)));
                    for t in 0..m {
                        r = r.max((a[t] + b[t] + c[t]).abs());
                    }
                }
            }
        }
        r
    }

    /// Max over basis triples of |<[X,Y],Z> + <Y,[X,Z]>|.
    pub fn ad_invariance_residual(&self) -> f64 {
        let m = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; m];
            v[i] = 1.0;
            v
        };
        let ip = |a: &[f64], b: &[f64]| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += a[i] * self.inner[(i, j)] * b[j];
                }
            }
            s
        };
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let v = ip(&self.bracket(&e(i), &e(j)), &e(k)) + ip(&e(j), &self.bracket(&e(i), &e(k)));
                    r = r.max(v.abs());
                }
            }
        }
        r
    }

    /// Labels inside the truncation, in a fixed order.
    pub fn labels(&self) -> Vec<IrrepLabel> {
        match &self.kind {
            GroupKind::Torus { m, .. } => torus_indices(*m, self.truncation as i64)
                .into_iter()
                .map(IrrepLabel::Torus)
                .collect(),
            GroupKind::Su2 => (0..=self.truncation).map(IrrepLabel::Spin).collect(),
        }
    }

    pub fn irrep(&self, label: &IrrepLabel) -> Result<IrrepData> {
        match (&self.kind, label) {
            (GroupKind::Torus { m, period }, IrrepLabel::Torus(n)) => {
                if n.len() != *m {
                    return Err(Error::UnknownIrrep(label.to_string()));
                }
                if n.iter().any(|x| x.unsigned_abs() > self.truncation as u64) {
                    return Err(Error::TruncationExceeded(format!("{label} outside ||n|| <= {}", self.truncation)));
                }
                let w: Vec<f64> = n.iter().map(|&x| 2.0 * PI * x as f64 / period).collect();
                let du = w.iter().map(|&l| CMat::from_element(1, 1, cx(0.0, l))).collect();
                Ok(IrrepData { label: label.clone(), dim: 1, highest_weight: w, du })
            }
            (GroupKind::Su2, IrrepLabel::Spin(tj)) => {
                if *tj > self.truncation {
                    return Err(Error::TruncationExceeded(format!("{label} above 2J = {}", self.truncation)));
                }
                let kappa = self.kappa().unwrap();
                let js = spin_matrices(*tj);
                let du = js.iter().map(|j| j * cx(0.0, -kappa)).collect();
                Ok(IrrepData {
                    label: label.clone(),
                    dim: *tj as usize + 1,
                    highest_weight: vec![0.0, 0.0, kappa * *tj as f64 / 2.0],
                    du,
                })
            }
            _ => Err(Error::UnknownIrrep(label.to_string())),
        }
    }

    /// sum_i x_i dpi(eps_i)
    pub fn du_of(&self, irrep: &IrrepData, x: &[f64]) -> CMat {
        let mut out = CMat::zeros(irrep.dim, irrep.dim);
        for (xi, d) in x.iter().zip(&irrep.du) {
            out += d * cx(*xi, 0.0);
        }
        out
    }
}

/// All n in Z^m with ||n||_inf <= k, lexicographic with the first index major.
pub fn torus_indices(m: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for v in &out {
            for x in -k..=k {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn check_metric(model: &GroupModel, rho: &RMat) -> Result<()> {
    if rho.nrows() != model.dim || rho.ncols() != model.dim {
        return Err(Error::DimensionMismatch(format!("metric {}x{} for dim {}", rho.nrows(), rho.ncols(), model.dim)));
    }
    sym_fn_pd(rho, |x| x)?;
    if !model.is_abelian() {
        let scalar = rho[(0, 0)];
        let off = (rho - RMat::identity(model.dim, model.dim) * scalar).abs().max();
        if off > 1e-12 * scalar.abs().max(1.0) {
            return Err(Error::RelationViolated {
                relation: "Ad-invariance of the vertical metric".into(),
                residual: off,
                tol: 1e-12,
            });
        }
    }
    Ok(())
}

/// Omega_{pi,rho} = <lambda_pi + 2 rho_+, rho lambda_pi>, the eigenvalue of
/// -G_ij dpi(eps_i) dpi(eps_j) on V_pi. `rho` is the Gram matrix G_ij.
pub fn casimir_eigenvalue(model: &GroupModel, pi: &IrrepLabel, rho: &RMat) -> Result<f64> {
    check_metric(model, rho)?;
    let irrep = model.irrep(pi)?;
    let l = &irrep.highest_weight;
    let m = model.dim;
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += (l[i] + 2.0 * model.rho_plus[i]) * rho[(i, j)] * l[j];
        }
    }
    Ok(s)
}

/// The value <lambda_pi + rho_+, rho lambda_pi> as printed in the source
/// formula, kept for comparison. It differs from the represented Casimir by
/// <rho_+, rho lambda_pi> for non-abelian groups.
pub fn casimir_literal(model: &GroupModel, pi: &IrrepLabel, rho: &RMat) -> Result<f64> {
    check_metric(model, rho)?;
    let irrep = model.irrep(pi)?;
    let l = &irrep.highest_weight;
    let m = model.dim;
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += (l[i] + model.rho_plus[i]) * rho[(i, j)] * l[j];
        }
    }
    Ok(s)
}

/// Brute-force Casimir -G_ij dpi(eps_i) dpi(eps_j) on V_pi.
pub fn represented_casimir(model: &GroupModel, irrep: &IrrepData, rho: &RMat) -> CMat {
    let mut out = CMat::zeros(irrep.dim, irrep.dim);
    for i in 0..model.dim {
        for j in 0..model.dim {
            out -= mul(&irrep.du[i], &irrep.du[j]) * cx(rho[(i, j)], 0.0);
        }
    }
    out
}

/// (||dpi(X)||, (1 + Omega)^{1/2} ||rho^{-T}||^{1/2} ||X||).
pub fn du_norm_check(model: &GroupModel, pi: &IrrepLabel, rho: &RMat, x: &[f64]) -> Result<(f64, f64)> {
    let omega = casimir_eigenvalue(model, pi, rho)?;
    let irrep = model.irrep(pi)?;
    let lhs = op_norm(&model.du_of(&irrep, x));
    // rho as an operator on g* has matrix B G, with B the Gram matrix on g.
    let bh = sym_fn_pd(&model.inner, f64::sqrt)?;
    let r = &bh * rho * &bh;
    let min = r.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    let xv = nalgebra::DVector::from_column_slice(x);
    let xnorm = (xv.transpose() * &model.inner * &xv)[(0, 0)].max(0.0).sqrt();
    let rhs = (1.0 + omega).sqrt() * (1.0 / min).sqrt() * xnorm;
    Ok((lhs, rhs))
}

/// Basis layout of a truncated SU(2)-module
/// H = (+)_j V_j (x) C^{mult_j} (x) S, with an optional spin action on S.
#[derive(Clone, Debug)]
pub struct Su2Module {
    /// (2j, multiplicity) per block, in basis order.
    pub blocks: Vec<(u32, usize)>,
    /// Skew-adjoint generators s_k on S; None means S = C with trivial action.
    pub spin: Option<Vec<CMat>>,
}

impl Su2Module {
    /// Truncated regular module: blocks V_j (x) C^{2j+1} for 2j <= 2J.
    pub fn regular(twice_jmax: u32, spin: Option<Vec<CMat>>) -> Su2Module {
        Su2Module { blocks: (0..=twice_jmax).map(|t| (t, t as usize + 1)).collect(), spin }
    }

    pub fn spin_dim(&self) -> usize {
        self.spin.as_ref().map_or(1, |s| s[0].nrows())
    }

    pub fn block_dim(&self, b: usize) -> usize {
        let (tj, mult) = self.blocks[b];
        (tj as usize + 1) * mult * self.spin_dim()
    }

    pub fn dim(&self) -> usize {
        (0..self.blocks.len()).map(|b| self.block_dim(b)).sum()
    }

    pub fn block_offset(&self, b: usize) -> usize {
        (0..b).map(|i| self.block_dim(i)).sum()
    }

    /// Total infinitesimal action dU(eps_k) on H.
    pub fn du(&self, model: &GroupModel) -> Result<Vec<CMat>> {
        let ds = self.spin_dim();
        let mut out = Vec::new();
        for k in 0..3 {
            let mut blocks = Vec::new();
            for &(tj, mult) in &self.blocks {
                let ir = model.irrep(&IrrepLabel::Spin(tj))?;
                let mut b = kron(&kron(&ir.du[k], &eye(mult)), &eye(ds));
                if let Some(s) = &self.spin {
                    b += kron(&eye((tj as usize + 1) * mult), &s[k]);
                }
                blocks.push(b);
            }
            out.push(crate::numerics::direct_sum(&blocks));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub enum ModuleLayout {
    /// Per-basis-vector Fourier index.
    Torus { labels: Vec<Vec<i64>> },
    Su2(Su2Module),
    Unlabelled { dim: usize },
}

impl ModuleLayout {
    pub fn dim(&self) -> usize {
        match self {
            ModuleLayout::Torus { labels } => labels.len(),
            ModuleLayout::Su2(m) => m.dim(),
            ModuleLayout::Unlabelled { dim } => *dim,
        }
    }
}

/// exp(t A) for fixed skew-Hermitian A, reusing one eigendecomposition.
struct SkewExp {
    vals: Vec<f64>,
    vecs: CMat,
}

impl SkewExp {
    fn new(a: &CMat) -> SkewExp {
        let (vals, vecs) = eigh(&(a * cx(0.0, -1.0)));
        SkewExp { vals, vecs }
    }

    fn at(&self, t: f64) -> CMat {
        let ph: Vec<C64> = self.vals.iter().map(|&l| C64::from_polar(1.0, t * l)).collect();
        mul(&mul(&self.vecs, &diag(&ph)), &dagger(&self.vecs))
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// P_pi = d_pi int conj(chi_pi(g)) U_g dg, by exact quadrature in Euler
/// angles g = exp(a X3) exp(b X2) exp(c X3), X_k = eps_k / kappa.
/// The result acts on the space of `du` (dimension d).
pub fn su2_character_projection(model: &GroupModel, du: &[CMat], twice_pi: u32, twice_max: u32) -> Result<CMat> {
    let kappa = model.kappa().ok_or(Error::UnknownIrrep("SU(2) projection on a torus".into()))?;
    let target = IrrepLabel::Spin(twice_pi);
    let ir = GroupModel { truncation: u32::MAX, ..model.clone() }.irrep(&target)?;
    let e_u3 = SkewExp::new(&(&du[2] * cx(1.0 / kappa, 0.0)));
    let e_u2 = SkewExp::new(&(&du[1] * cx(1.0 / kappa, 0.0)));
    let e_p3 = SkewExp::new(&(&ir.du[2] * cx(1.0 / kappa, 0.0)));
    let e_p2 = SkewExp::new(&(&ir.du[1] * cx(1.0 / kappa, 0.0)));
    // Frequencies in a and c are half-integers of size at most (twice_pi + twice_max)/2.
    let n_ang = (twice_pi + twice_max) as usize + 2;
    let n_beta = ((twice_pi + twice_max) as usize) / 2 + 2;
    let d = du[0].nrows();
    let mut acc = CMat::zeros(d, d);
    let angles: Vec<f64> = (0..n_ang).map(|i| 4.0 * PI * i as f64 / n_ang as f64).collect();
    let ua: Vec<CMat> = angles.iter().map(|&t| e_u3.at(t)).collect();
    let pa: Vec<CMat> = angles.iter().map(|&t| e_p3.at(t)).collect();
    for (x, w) in gauss_legendre(n_beta) {
        let b = x.acos();
        let ub = e_u2.at(b);
        let pb = e_p2.at(b);
        for ia in 0..n_ang {
            let ua_ub = mul(&ua[ia], &ub);
            let pa_pb = mul(&pa[ia], &pb);
            for ic in 0..n_ang {
                let chi = mul(&pa_pb, &pa[ic]).trace();
                acc += mul(&ua_ub, &ua[ic]) * (chi.conj() * w);
            }
        }
    }
    // dg = (1/16 pi^2) (1/2) da sin(b) db dc over a, c in [0, 4 pi).
    let cell = (4.0 * PI / n_ang as f64).powi(2);
    Ok(acc * cx(ir.dim as f64 * cell / (32.0 * PI * PI), 0.0))
}

/// Orthogonal projection onto the pi-isotypic component.
pub fn peter_weyl_project(model: &GroupModel, h: &ModuleLayout, pi: &IrrepLabel) -> Result<CMat> {
    match (h, pi) {
        (ModuleLayout::Unlabelled { .. }, _) => Err(Error::UnlabelledSpace),
        (ModuleLayout::Torus { labels }, IrrepLabel::Torus(n)) => {
            model.irrep(pi)?;
            let d: Vec<C64> = labels.iter().map(|l| if l == n { cx(1.0, 0.0) } else { ZERO }).collect();
            Ok(diag(&d))
        }
        (ModuleLayout::Su2(module), IrrepLabel::Spin(tp)) => {
            if !matches!(model.kind, GroupKind::Su2) {
                return Err(Error::UnknownIrrep(pi.to_string()));
            }
            // Isotypes of V_j (x) S reach 2j + 1 when S carries spin 1/2.
            let spin_extra = if module.spin.is_some() { 1 } else { 0 };
            let top = module.blocks.iter().map(|b| b.0).max().unwrap_or(0) + spin_extra;
            if *tp > top.max(model.truncation) {
                return Err(Error::TruncationExceeded(format!("{pi} above the module content")));
            }
            let ds = module.spin_dim();
            let mut blocks = Vec::new();
            for &(tj, mult) in &module.blocks {
                let ir = GroupModel { truncation: u32::MAX, ..model.clone() }.irrep(&IrrepLabel::Spin(tj))?;
                let vd = tj as usize + 1;
                let du: Vec<CMat> = (0..3)
                    .map(|k| {
                        let mut a = kron(&ir.du[k], &eye(ds));
                        if let Some(s) = &module.spin {
                            a += kron(&eye(vd), &s[k]);
                        }
                        a
                    })
                    .collect();
                let q = su2_character_projection(model, &du, *tp, tj + spin_extra)?;
                // reorder V (x) S -> V (x) C^mult (x) S
                let n = vd * mult * ds;
                let p = CMat::from_fn(n, n, |r, c| {
                    let (ra, rm, rs) = (r / (mult * ds), (r / ds) % mult, r % ds);
                    let (ca, cm, cs) = (c / (mult * ds), (c / ds) % mult, c % ds);
                    if rm == cm {
                        q[(ra * ds + rs, ca * ds + cs)]
                    } else {
                        ZERO
                    }
                });
                blocks.push(p);
            }
            Ok(crate::numerics::direct_sum(&blocks))
        }
        _ => Err(Error::UnknownIrrep(pi.to_string())),
    }
}

/// Labels occurring in a module (for resolution-of-identity checks).
pub fn module_labels(h: &ModuleLayout) -> Result<Vec<IrrepLabel>> {
    match h {
        ModuleLayout::Unlabelled { .. } => Err(Error::UnlabelledSpace),
        ModuleLayout::Torus { labels } => {
            let mut ls: Vec<Vec<i64>> = labels.clone();
            ls.sort();
            ls.dedup();
            Ok(ls.into_iter().map(IrrepLabel::Torus).collect())
        }
        ModuleLayout::Su2(m) => {
            let extra = if m.spin.is_some() { 1 } else { 0 };
            let top = m.blocks.iter().map(|b| b.0).max().unwrap_or(0) + extra;
            Ok((0..=top).map(IrrepLabel::Spin).collect())
        }
    }
}

/// Torus character integral over the grid of n^m points; exact for Fourier
/// indices with ||n||_inf < points / 2. Used as an oracle for the label path.
pub fn torus_character_projection(labels: &[Vec<i64>], n: &[i64], points: usize) -> CMat {
    let m = n.len();
    let d = labels.len();
    let mut out = vec![ZERO; d];
    let total = points.pow(m as u32);
    for flat in 0..total {
        let mut t = vec![0.0; m];
        let mut r = flat;
        for ti in t.iter_mut() {
            *ti = (r % points) as f64 / points as f64;
            r /= points;
        }
        let chi: f64 = n.iter().zip(&t).map(|(a, b)| *a as f64 * b).sum();
        for (i, l) in labels.iter().enumerate() {
            let ph: f64 = l.iter().zip(&t).map(|(a, b)| *a as f64 * b).sum();
            out[i] += C64::from_polar(1.0, 2.0 * PI * (ph - chi));
        }
    }
    diag(&out.iter().map(|z| z / total as f64).collect::<Vec<_>>())
}

/// Residual of [dU(eps_i), dU(eps_j)] - f_ij^k dU(eps_k) and of skewness.
pub fn irrep_relation_residual(model: &GroupModel, ir: &IrrepData) -> f64 {
    let m = model.dim;
    let mut r: f64 = 0.0;
    for i in 0..m {
        r = r.max(max_abs(&(dagger(&ir.du[i]) + &ir.du[i])));
        for j in 0..m {
            let mut lhs = mul(&ir.du[i], &ir.du[j]) - mul(&ir.du[j], &ir.du[i]);
            for k in 0..m {
                lhs -= &ir.du[k] * cx(model.structure[i][j][k], 0.0);
            }
            r = r.max(max_abs(&lhs));
        }
    }
    r
}

/// True when +-i lambda(eps_last) is an eigenvalue of the Cartan generator.
pub fn highest_weight_is_weight(model: &GroupModel, ir: &IrrepData) -> bool {
    let cartan: Vec<usize> = match model.kind {
        GroupKind::Torus { m, .. } => (0..m).collect(),
        GroupKind::Su2 => vec![2],
    };
    cartan.iter().all(|&c| {
        let l = ir.highest_weight[c];
        let h = &ir.du[c] * cx(0.0, -1.0);
        let (vals, _) = eigh(&h);
        vals.iter().any(|v| (v - l).abs() < 1e-10 || (v + l).abs() < 1e-10)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dist, norm_bound, I};

    #[test]
    fn kappa_gives_unit_volume() {
        let k = su2_kappa();
        assert!((16.0 * PI * PI / k.powi(3) - 1.0).abs() < 1e-14);
        assert!((k - 5.405_135_380_126_98).abs() < 1e-9);
    }

    #[test]
    fn structure_invariants() {
        for g in [GroupModel::su2(2), GroupModel::torus(2, 1.0, 3), GroupModel::u1(2)] {
            assert!(g.jacobi_residual() <= 1e-12);
            assert!(g.ad_invariance_residual() <= 1e-12);
        }
        let t = GroupModel::torus(3, 1.0, 1);
        assert!(t.structure.iter().flatten().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn irrep_invariants() {
        let su2 = GroupModel::su2(6);
        for l in su2.labels() {
            let ir = su2.irrep(&l).unwrap();
            assert!(irrep_relation_residual(&su2, &ir) <= 1e-10);
            assert!(highest_weight_is_weight(&su2, &ir));
        }
        let t = GroupModel::torus(2, 1.0, 2);
        for l in t.labels() {
            let ir = t.irrep(&l).unwrap();
            assert!(irrep_relation_residual(&t, &ir) <= 1e-12);
            assert!(highest_weight_is_weight(&t, &ir));
        }
    }

    #[test]
    fn unknown_and_out_of_range_labels() {
        let su2 = GroupModel::su2(2);
        assert!(matches!(su2.irrep(&IrrepLabel::Torus(vec![1])), Err(Error::UnknownIrrep(_))));
        assert!(matches!(su2.irrep(&IrrepLabel::Spin(5)), Err(Error::TruncationExceeded(_))));
        let t = GroupModel::torus(2, 1.0, 2);
        assert!(matches!(t.irrep(&IrrepLabel::Torus(vec![1])), Err(Error::UnknownIrrep(_))));
        assert!(matches!(t.irrep(&IrrepLabel::Torus(vec![3, 0])), Err(Error::TruncationExceeded(_))));
    }

    #[test]
    fn u1_casimir_values() {
        let g = GroupModel::u1(5);
        for ell in [0.5, 1.0, 3.0] {
            let rho = RMat::from_element(1, 1, 4.0 * PI * PI / (ell * ell));
            for n in -5..=5i64 {
                let v = casimir_eigenvalue(&g, &IrrepLabel::Torus(vec![n]), &rho).unwrap();
                let expect = 4.0 * PI * PI * (n * n) as f64 / (ell * ell);
                assert!((v - expect).abs() <= 1e-12 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn trivial_irrep_casimir_zero() {
        let su2 = GroupModel::su2(2);
        assert_eq!(casimir_eigenvalue(&su2, &IrrepLabel::Spin(0), &(RMat::identity(3, 3) * 2.0)).unwrap(), 0.0);
        let t = GroupModel::torus(2, 1.0, 2);
        let rho = RMat::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(casimir_eigenvalue(&t, &IrrepLabel::Torus(vec![0, 0]), &rho).unwrap(), 0.0);
    }

    #[test]
    fn su2_casimir_matches_brute_force() {
        let su2 = GroupModel::su2(6);
        let k = su2_kappa();
        for tj in 0..=6 {
            let l = IrrepLabel::Spin(tj);
            let ir = su2.irrep(&l).unwrap();
            let c = represented_casimir(&su2, &ir, &RMat::identity(3, 3));
            let omega = casimir_eigenvalue(&su2, &l, &RMat::identity(3, 3)).unwrap();
            let j = tj as f64 / 2.0;
            assert!((omega - k * k * j * (j + 1.0)).abs() < 1e-10);
            assert!(dist(&c, &(eye(ir.dim) * cx(omega, 0.0))) <= 1e-9 * omega.max(1.0));
            // The literal formula undercounts by <rho_+, lambda> = kappa^2 j / 2.
            let lit = casimir_literal(&su2, &l, &RMat::identity(3, 3)).unwrap();
            assert!((omega - lit - k * k * j / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn torus_casimir_matches_brute_force() {
        let t = GroupModel::torus(2, 1.0, 3);
        let rho = RMat::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        for l in t.labels() {
            let ir = t.irrep(&l).unwrap();
            let c = represented_casimir(&t, &ir, &rho);
            let omega = casimir_eigenvalue(&t, &l, &rho).unwrap();
            assert!((c[(0, 0)].re - omega).abs() <= 1e-10 * omega.max(1.0));
        }
    }

    #[test]
    fn non_invariant_su2_metric_rejected() {
        let su2 = GroupModel::su2(2);
        let rho = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert!(casimir_eigenvalue(&su2, &IrrepLabel::Spin(1), &rho).is_err());
    }

    #[test]
    fn casimir_monotone_in_rho() {
        let t = GroupModel::torus(2, 1.0, 3);
        let rho1 = RMat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let rho2 = &rho1 + RMat::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        for l in t.labels() {
            let a = casimir_eigenvalue(&t, &l, &rho1).unwrap();
            let b = casimir_eigenvalue(&t, &l, &rho2).unwrap();
            assert!(a <= b + 1e-12);
        }
        let su2 = GroupModel::su2(4);
        for l in su2.labels() {
            let a = casimir_eigenvalue(&su2, &l, &RMat::identity(3, 3)).unwrap();
            let b = casimir_eigenvalue(&su2, &l, &(RMat::identity(3, 3) * 1.5)).unwrap();
            assert!(a <= b);
        }
    }

    #[test]
    fn torus_casimir_increases_along_rays() {
        let t = GroupModel::torus(2, 1.0, 8);
        let rho = RMat::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        for dir in [[1i64, 0], [0, 1], [1, 1], [2, -1]] {
            let mut prev = -1.0;
            for s in 0..=4 {
                let n = vec![dir[0] * s, dir[1] * s];
                let v = casimir_eigenvalue(&t, &IrrepLabel::Torus(n), &rho).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn norm_estimate() {
        let g = GroupModel::u1(4);
        let rho = RMat::from_element(1, 1, 1.0);
        assert_eq!(du_norm_check(&g, &IrrepLabel::Torus(vec![3]), &rho, &[0.0]).unwrap(), (0.0, 0.0));
        for ell in [0.3, 1.0, 4.0] {
            let rho = RMat::from_element(1, 1, 4.0 * PI * PI / (ell * ell));
            for n in -4..=4i64 {
                let x = 0.7;
                let (lhs, rhs) = du_norm_check(&g, &IrrepLabel::Torus(vec![n]), &rho, &[x]).unwrap();
                assert!((lhs - (n as f64 * x).abs()).abs() < 1e-12);
                let expect = (1.0 + 4.0 * PI * PI * (n * n) as f64 / (ell * ell)).sqrt() * ell / (2.0 * PI) * x;
                assert!((rhs - expect).abs() < 1e-10);
                assert!(lhs <= rhs + 1e-10);
            }
        }
        let su2 = GroupModel::su2(2);
        let (lhs, rhs) = du_norm_check(&su2, &IrrepLabel::Spin(2), &RMat::identity(3, 3), &[1.0, 0.0, 0.0]).unwrap();
        assert!((lhs - su2_kappa()).abs() < 1e-10);
        assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn torus_projection_matches_character_integral() {
        let labels = torus_indices(2, 2);
        let h = ModuleLayout::Torus { labels: labels.clone() };
        let g = GroupModel::torus(2, 1.0, 2);
        for n in g.labels() {
            let IrrepLabel::Torus(nv) = &n else { unreachable!() };
            let p = peter_weyl_project(&g, &h, &n).unwrap();
            let q = torus_character_projection(&labels, nv, 9);
            assert!(dist(&p, &q) < 1e-12);
        }
    }

    #[test]
    fn unlabelled_space_rejected() {
        let g = GroupModel::su2(2);
        let h = ModuleLayout::Unlabelled { dim: 4 };
        assert!(matches!(peter_weyl_project(&g, &h, &IrrepLabel::Spin(0)), Err(Error::UnlabelledSpace)));
    }

    fn check_resolution(g: &GroupModel, h: &ModuleLayout, du: &[CMat]) -> Vec<(IrrepLabel, CMat)> {
        let labels = module_labels(h).unwrap();
        let ps: Vec<(IrrepLabel, CMat)> =
            labels.iter().map(|l| (l.clone(), peter_weyl_project(g, h, l).unwrap())).collect();
        let n = h.dim();
        let mut sum = CMat::zeros(n, n);
        for (_, p) in &ps {
            sum += p;
            assert!(dist(&mul(p, p), p) <= 1e-10);
            assert!(dist(&dagger(p), p) <= 1e-10);
            for d in du {
                assert!(norm_bound(&(mul(p, d) - mul(d, p))) <= 1e-10 * norm_bound(d).max(1.0));
            }
        }
        for (a, (_, p)) in ps.iter().enumerate() {
            for (b, (_, q)) in ps.iter().enumerate() {
                if a != b {
                    assert!(norm_bound(&mul(p, q)) <= 1e-10);
                }
            }
        }
        assert!(dist(&sum, &eye(n)) <= 1e-10);
        ps
    }

    #[test]
    fn su2_plain_regular_module() {
        let g = GroupModel::su2(4);
        let m = Su2Module::regular(4, None);
        let du = m.du(&g).unwrap();
        let h = ModuleLayout::Su2(m);
        for (l, p) in check_resolution(&g, &h, &du) {
            let IrrepLabel::Spin(tj) = l else { unreachable!() };
            let rank = p.trace().re.round() as usize;
            assert_eq!(rank, (tj as usize + 1).pow(2));
        }
    }

    #[test]
    fn su2_regular_module_with_spinors() {
        // S = C^4 carrying two copies of spin 1/2.
        let g = GroupModel::su2(4);
        let [j1, j2, j3] = spin_matrices(1);
        let k = su2_kappa();
        let s: Vec<CMat> = [j1, j2, j3].iter().map(|j| kron(&eye(2), j) * cx(0.0, -k)).collect();
        let m = Su2Module::regular(4, Some(s));
        let du = m.du(&g).unwrap();
        let h = ModuleLayout::Su2(m);
        for (l, p) in check_resolution(&g, &h, &du) {
            let IrrepLabel::Spin(tj) = l else { unreachable!() };
            let rank = p.trace().re.round() as usize;
            // complete isotypic components below the top spin
            if tj <= 3 {
                assert_eq!(rank, 4 * (tj as usize + 1).pow(2));
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let q = gauss_legendre(5);
        for deg in 0..10 {
            let s: f64 = q.iter().map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn spin_matrix_algebra() {
        for tj in 0..5 {
            let [a, b, c] = spin_matrices(tj);
            assert!(dist(&(mul(&a, &b) - mul(&b, &a)), &(&c * I)) < 1e-12);
            let j = tj as f64 / 2.0;
            let cas = mul(&a, &a) + mul(&b, &b) + mul(&c, &c);
            assert!(dist(&cas, &(eye(tj as usize + 1) * cx(j * (j + 1.0), 0.0))) < 1e-12);
        }
    }
}
