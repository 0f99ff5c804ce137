//! Representations of the quantum Weil algebra W(g; rho) on truncated
//! G-modules carrying a vertical Clifford action.

use std::ops::Range;

use crate::clifford::{rescale_c0, spinor_rep, CliffordModel};
use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupModel, IrrepLabel, ModuleLayout, Su2Module};
use crate::numerics::{
    anticomm, comm, cx, dagger, diag, eigvalsh, eye, kron, mul, norm_bound, sym_inv, tensor_mask, CMat,
    GradedMatrix, RMat, C64,
};

#[derive(Clone, Debug)]
pub struct RepresentedWeil {
    pub group: GroupModel,
    /// Gram matrix G_ij = <eps^i, rho eps^j>.
    pub rho: RMat,
    pub clifford: CliffordModel,
    pub du_total: Vec<CMat>,
    pub c_gen: Vec<CMat>,
    pub parity_mask: Vec<bool>,
    pub layout: ModuleLayout,
    /// Basis ranges of the blocks on which the group acts through a single
    /// irrep before the spinor factor is added.
    pub blocks: Vec<(IrrepLabel, Range<usize>)>,
}

impl RepresentedWeil {
    pub fn dim(&self) -> usize {
        self.parity_mask.len()
    }

    pub fn graded(&self, data: CMat) -> GradedMatrix {
        GradedMatrix { data, parity_mask: self.parity_mask.clone(), multigrade: 0 }
    }

    /// H = (+)_n C_n (x) S over the torus truncation; S = spinors of Cl_m
    /// rescaled to the metric rho.
    pub fn torus_module(group: &GroupModel, rho: &RMat) -> Result<RepresentedWeil> {
        let GroupKind::Torus { m, .. } = group.kind else {
            return Err(Error::UnknownIrrep("torus_module needs a torus".into()));
        };
        let cl = rescale_c0(rho, &spinor_rep(m))?;
        let ds = cl.spinor_dim();
        let labels = group.labels();
        let mut weights = vec![Vec::new(); m];
        let mut basis_labels = Vec::new();
        let mut blocks = Vec::new();
        for (b, l) in labels.iter().enumerate() {
            let ir = group.irrep(l)?;
            for (i, w) in weights.iter_mut().enumerate() {
                w.push(ir.du[i][(0, 0)]);
            }
            let IrrepLabel::Torus(n) = l else { unreachable!() };
            basis_labels.extend(std::iter::repeat(n.clone()).take(ds));
            blocks.push((l.clone(), b * ds..(b + 1) * ds));
        }
        let nb = labels.len();
        let du_total = weights.iter().map(|w| kron(&diag(w), &eye(ds))).collect();
        let c_gen = cl.generators.iter().map(|c| kron(&eye(nb), c)).collect();
        let parity_mask = tensor_mask(&vec![false; nb], &cl.parity_mask);
        Ok(RepresentedWeil {
            group: group.clone(),
            rho: rho.clone(),
            clifford: cl,
            du_total,
            c_gen,
            parity_mask,
            layout: ModuleLayout::Torus { labels: basis_labels },
            blocks,
        })
    }

    /// Truncated regular module (+)_{j <= J} V_j (x) C^{2j+1} (x) S with
    /// S = spinors of Cl_3 (inside Cl_4) rescaled to rho. G acts on S through
    /// s_i = 1/4 sum_ab (F_i G^{-1})_ab c^a c^b, (F_i)_kj = f_ik^j, which
    /// makes every c(beta) equivariant.
    pub fn su2_regular(group: &GroupModel, rho: &RMat) -> Result<RepresentedWeil> {
        if !matches!(group.kind, GroupKind::Su2) {
            return Err(Error::UnknownIrrep("su2_regular needs SU(2)".into()));
        }
        let cl = rescale_c0(rho, &spinor_rep(3))?;
        let s = spin_lift(group, &cl)?;
        let module = Su2Module::regular(group.truncation, Some(s));
        let du_total = module.du(group)?;
        let ds = cl.spinor_dim();
        let mut blocks = Vec::new();
        let mut parity_mask = Vec::new();
        for (b, &(tj, mult)) in module.blocks.iter().enumerate() {
            let off = module.block_offset(b);
            let n = module.block_dim(b);
            blocks.push((IrrepLabel::Spin(tj), off..off + n));
            parity_mask.extend(tensor_mask(&vec![false; (tj as usize + 1) * mult], &cl.parity_mask));
        }
        let c_gen = cl
            .generators
            .iter()
            .map(|c| kron(&eye(module.dim() / ds), c))
            .collect();
        Ok(RepresentedWeil {
            group: group.clone(),
            rho: rho.clone(),
            clifford: cl,
            du_total,
            c_gen,
            parity_mask,
            layout: ModuleLayout::Su2(module),
            blocks,
        })
    }

    /// Max residual of [dU_i, c^j] + sum_k f_ik^j c^k (equivariance of c).
    pub fn equivariance_residual(&self) -> f64 {
        let m = self.group.dim;
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut x = comm(&self.du_total[i], &self.c_gen[j]);
                for k in 0..m {
                    x += &self.c_gen[k] * cx(self.group.structure[i][k][j], 0.0);
                }
                r = r.max(norm_bound(&x));
            }
        }
        r
    }

    /// Max residual of the bracket relations and skewness of dU.
    pub fn bracket_residual(&self) -> f64 {
        let m = self.group.dim;
        let mut r: f64 = 0.0;
        for i in 0..m {
            r = r.max(norm_bound(&(dagger(&self.du_total[i]) + &self.du_total[i])));
            for j in 0..m {
                let mut x = comm(&self.du_total[i], &self.du_total[j]);
                for k in 0..m {
                    x -= &self.du_total[k] * cx(self.group.structure[i][j][k], 0.0);
                }
                r = r.max(norm_bound(&x));
            }
        }
        r
    }

    /// Max residual of {c^i, c^j} + 2 G_ij.
    pub fn clifford_residual(&self) -> f64 {
        let m = self.group.dim;
        let n = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = anticomm(&self.c_gen[i], &self.c_gen[j]) + eye(n) * cx(2.0 * self.rho[(i, j)], 0.0);
                r = r.max(norm_bound(&x));
            }
        }
        r
    }

    /// c(beta) for covector coordinates beta.
    pub fn c(&self, beta: &[f64]) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for (b, c) in beta.iter().zip(&self.c_gen) {
            out += c * cx(*b, 0.0);
        }
        out
    }

    /// dU(X) for vector coordinates X.
    pub fn du(&self, x: &[f64]) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for (b, d) in x.iter().zip(&self.du_total) {
            out += d * cx(*b, 0.0);
        }
        out
    }
}

/// Lift of the coadjoint action to spinors: [s_i, c^j] = -f_ik^j c^k.
pub fn spin_lift(group: &GroupModel, cl: &CliffordModel) -> Result<Vec<CMat>> {
    let m = group.dim;
    let ginv = sym_inv(&cl.metric)?;
    let ds = cl.spinor_dim();
    let mut out = Vec::new();
    for i in 0..m {
        let f = RMat::from_fn(m, m, |k, j| group.structure[i][k][j]);
        let a = &f * &ginv;
        let mut s = CMat::zeros(ds, ds);
        for p in 0..m {
            for q in 0..m {
                if a[(p, q)] != 0.0 {
                    s += mul(&cl.generators[p], &cl.generators[q]) * cx(0.25 * a[(p, q)], 0.0);
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Coefficients t_ijk = <eps_i, rho^{-T}[eps_j, eps_k]> = (G^{-1})_il f_jk^l.
pub fn cubic_coefficients(group: &GroupModel, rho: &RMat) -> Result<Vec<Vec<Vec<f64>>>> {
    let m = group.dim;
    let ginv = sym_inv(rho)?;
    let mut t = vec![vec![vec![0.0; m]; m]; m];
    for (i, ti) in t.iter_mut().enumerate() {
        for (j, tij) in ti.iter_mut().enumerate() {
            for (k, v) in tij.iter_mut().enumerate() {
                *v = (0..m).map(|l| ginv[(i, l)] * group.structure[j][k][l]).sum();
            }
        }
    }
    Ok(t)
}

/// sum_ijk t_ijk c^i c^j c^k for the given Clifford generators on H.
pub fn cubic_term(group: &GroupModel, rho: &RMat, c_gen: &[CMat]) -> Result<CMat> {
    let t = cubic_coefficients(group, rho)?;
    let n = c_gen[0].nrows();
    let m = group.dim;
    let mut out = CMat::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                if t[i][j][k] != 0.0 {
                    out += mul(&mul(&c_gen[i], &c_gen[j]), &c_gen[k]) * cx(t[i][j][k], 0.0);
                }
            }
        }
    }
    Ok(out)
}

/// c(Delta) = -G_ij dU(eps_i) dU(eps_j).
pub fn represent_casimir(w: &RepresentedWeil) -> GradedMatrix {
    let m = w.group.dim;
    let n = w.dim();
    let mut out = CMat::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            if w.rho[(i, j)] != 0.0 {
                out -= mul(&w.du_total[i], &w.du_total[j]) * cx(w.rho[(i, j)], 0.0);
            }
        }
    }
    w.graded(out)
}

/// c(D) = c(eps^i) dU(eps_i) - 1/6 t_ijk c(eps^i) c(eps^j) c(eps^k).
pub fn represent_cubic_dirac(w: &RepresentedWeil) -> GradedMatrix {
    let n = w.dim();
    let mut out = CMat::zeros(n, n);
    for (c, d) in w.c_gen.iter().zip(&w.du_total) {
        out += mul(c, d);
    }
    if !w.group.is_abelian() {
        let cubic = cubic_term(&w.group, &w.rho, &w.c_gen).expect("metric validated at construction");
        out -= cubic * cx(1.0 / 6.0, 0.0);
    }
    w.graded(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KostantReport {
    /// max_X ||[c(D), dU(X)]||
    pub dirac_du: f64,
    /// max_beta ||[c(D), c(beta)] + 2 dU(beta^#)||
    pub dirac_c: f64,
    /// max_i ||[c(D)^2, c(eps^i)]||
    pub square_c: f64,
    /// max_i ||[c(D)^2, dU(eps_i)]||
    pub square_du: f64,
    /// ||c(D)||^2
    pub scale: f64,
}

impl KostantReport {
    pub fn max_relative(&self) -> f64 {
        [self.dirac_du, self.dirac_c, self.square_c, self.square_du]
            .iter()
            .fold(0.0f64, |m, &x| m.max(x))
            / self.scale.max(1.0)
    }
}

/// Checks (AMK1)-(AMK3) on the truncation. Residuals are norm bounds; the
/// scale ||c(D)||^2 is exact.
pub fn kostant_relations_check(w: &RepresentedWeil, tol: f64) -> Result<KostantReport> {
    let d = represent_cubic_dirac(w).data;
    let d2 = mul(&d, &d);
    let m = w.group.dim;
    let ev = eigvalsh(&d);
    let dn = ev.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut rep = KostantReport { dirac_du: 0.0, dirac_c: 0.0, square_c: 0.0, square_du: 0.0, scale: dn * dn };
    for i in 0..m {
        rep.dirac_du = rep.dirac_du.max(norm_bound(&comm(&d, &w.du_total[i])));
        // beta = eps^i, beta^# = G_ij eps_j
        let sharp: Vec<f64> = (0..m).map(|j| w.rho[(i, j)]).collect();
        let x = anticomm(&d, &w.c_gen[i]) + w.du(&sharp) * cx(2.0, 0.0);
        rep.dirac_c = rep.dirac_c.max(norm_bound(&x));
        rep.square_c = rep.square_c.max(norm_bound(&comm(&d2, &w.c_gen[i])));
        rep.square_du = rep.square_du.max(norm_bound(&comm(&d2, &w.du_total[i])));
    }
    let limit = tol * rep.scale.max(1.0);
    for (name, r) in [
        ("[c(D), dU(X)] = 0", rep.dirac_du),
        ("[c(D), c(beta)] = -2 dU(beta^#)", rep.dirac_c),
        ("[c(D)^2, c(eps^i)] = 0", rep.square_c),
        ("[c(D)^2, dU(eps_i)] = 0", rep.square_du),
    ] {
        if r > limit {
            return Err(Error::RelationViolated { relation: name.into(), residual: r, tol: limit });
        }
    }
    Ok(rep)
}

/// One row of the Kostant-square table: the spectrum of c(D)^2 on a block
/// together with closed-form candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareRow {
    pub label: IrrepLabel,
    pub eigen_min: f64,
    pub eigen_max: f64,
    /// ||lambda||^2 + <lambda, rho_+> + ||rho_+||^2
    pub literal: f64,
    /// ||lambda + rho_+||^2
    pub shifted: f64,
}

/// Diagonalises c(D)^2 block by block and records the closed forms next to
/// the observed eigenvalues. Norms on g* use the metric rho.
pub fn kostant_square_table(w: &RepresentedWeil) -> Result<Vec<SquareRow>> {
    let d = represent_cubic_dirac(w).data;
    let d2 = mul(&d, &d);
    let m = w.group.dim;
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += a[i] * w.rho[(i, j)] * b[j];
            }
        }
        s
    };
    let rp = &w.group.rho_plus;
    let mut rows = Vec::new();
    for (label, range) in &w.blocks {
        let idx: Vec<usize> = range.clone().collect();
        let blk = crate::numerics::compress(&d2, &idx);
        let ev = eigvalsh(&blk);
        let l = w.group.irrep(label)?.highest_weight;
        let lp: Vec<f64> = l.iter().zip(rp).map(|(a, b)| a + b).collect();
        rows.push(SquareRow {
            label: label.clone(),
            eigen_min: ev[0],
            eigen_max: *ev.last().unwrap(),
            literal: ip(&l, &l) + ip(&l, rp) + ip(rp, rp),
            shifted: ip(&lp, &lp),
        });
    }
    Ok(rows)
}

/// Smallest |eigenvalue| of c(D).
pub fn spectral_gap(w: &RepresentedWeil) -> f64 {
    eigvalsh(&represent_cubic_dirac(w).data).iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

/// Block value of c(Delta) on each truncation block of a torus module.
pub fn torus_casimir_blocks(w: &RepresentedWeil) -> Vec<(IrrepLabel, C64)> {
    let cas = represent_casimir(w).data;
    w.blocks.iter().map(|(l, r)| (l.clone(), cas[(r.start, r.start)])).collect()
}

/// Max off-block entry of an operator with respect to `w.blocks`.
pub fn off_block_residual(w: &RepresentedWeil, a: &CMat) -> f64 {
    let mut owner = vec![0usize; w.dim()];
    for (b, (_, r)) in w.blocks.iter().enumerate() {
        for i in r.clone() {
            owner[i] = b;
        }
    }
    let mut r: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if owner[i] != owner[j] {
                r = r.max(a[(i, j)].norm());
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{casimir_eigenvalue, peter_weyl_project, su2_kappa};
    use crate::numerics::{dist, Parity};
    use std::f64::consts::PI;

    fn u1_weil(k: u32, ell: f64) -> RepresentedWeil {
        let g = GroupModel::u1(k);
        RepresentedWeil::torus_module(&g, &RMat::from_element(1, 1, 4.0 * PI * PI / (ell * ell))).unwrap()
    }

    #[test]
    fn u1_casimir_blocks() {
        let ell = 1.3;
        let w = u1_weil(6, ell);
        let cas = represent_casimir(&w);
        assert!(cas.is_homogeneous(Parity::Even));
        for (l, v) in torus_casimir_blocks(&w) {
            let IrrepLabel::Torus(n) = l else { unreachable!() };
            let expect = 4.0 * PI * PI * (n[0] * n[0]) as f64 / (ell * ell);
            assert!((v.re - expect).abs() <= 1e-10 * expect.max(1.0));
        }
        assert_eq!(off_block_residual(&w, &cas.data), 0.0);
    }

    #[test]
    fn u1_dirac_is_dtheta_ddtheta() {
        let ell = 0.9;
        let w = u1_weil(4, ell);
        let d = represent_cubic_dirac(&w);
        assert!(d.is_homogeneous(Parity::Odd));
        assert!(dist(&d.data, &mul(&w.c_gen[0], &w.du_total[0])) == 0.0);
        // [D, c(d theta)] = -2 (4 pi^2 l^-2) dU(d/dtheta)
        let g = 4.0 * PI * PI / (ell * ell);
        let lhs = anticomm(&d.data, &w.c_gen[0]);
        let rhs = &w.du_total[0] * cx(-2.0 * g, 0.0);
        assert!(dist(&lhs, &rhs) <= 1e-10 * g);
        // abelian: c(D)^2 = c(Delta)
        let cas = represent_casimir(&w).data;
        assert!(dist(&mul(&d.data, &d.data), &cas) <= 1e-10 * norm_bound(&cas));
    }

    #[test]
    fn torus_relations_exact() {
        let g = GroupModel::torus(2, 1.0, 3);
        let rho = RMat::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let w = RepresentedWeil::torus_module(&g, &rho).unwrap();
        assert!(w.clifford_residual() <= 1e-12);
        assert!(w.equivariance_residual() <= 1e-12);
        let rep = kostant_relations_check(&w, 1e-12).unwrap();
        assert!(rep.max_relative() <= 1e-12);
        let d = represent_cubic_dirac(&w).data;
        let cas = represent_casimir(&w).data;
        assert!(dist(&mul(&d, &d), &cas) <= 1e-10 * norm_bound(&cas));
    }

    fn su2_weil(tj: u32) -> RepresentedWeil {
        RepresentedWeil::su2_regular(&GroupModel::su2(tj), &RMat::identity(3, 3)).unwrap()
    }

    #[test]
    fn su2_module_invariants() {
        let w = su2_weil(3);
        assert!(w.clifford_residual() <= 1e-12);
        assert!(w.bracket_residual() <= 1e-10);
        assert!(w.equivariance_residual() <= 1e-10);
    }

    #[test]
    fn su2_kostant_relations_sign() {
        let w = su2_weil(4);
        let rep = kostant_relations_check(&w, 1e-9).unwrap();
        assert!(rep.max_relative() <= 1e-9, "{rep:?}");
        // The opposite sign in (AMK2) is far off.
        let d = represent_cubic_dirac(&w).data;
        let wrong = anticomm(&d, &w.c_gen[0]) - &w.du_total[0] * cx(2.0, 0.0);
        assert!(norm_bound(&wrong) > 1.0);
    }

    #[test]
    fn su2_dirac_is_odd_selfadjoint_invariant() {
        let w = su2_weil(2);
        let d = represent_cubic_dirac(&w);
        assert!(d.is_homogeneous(Parity::Odd));
        assert!(d.hermitian_residual() <= 1e-12);
        for x in &w.du_total {
            assert!(norm_bound(&comm(&d.data, x)) <= 1e-10);
        }
    }

    #[test]
    fn su2_square_is_shifted_casimir() {
        // Brute-force oracle first: c(D)^2 is scalar on each block with value
        // kappa^2 (j + 1/2)^2.
        let w = su2_weil(4);
        let k = su2_kappa();
        for row in kostant_square_table(&w).unwrap() {
            let IrrepLabel::Spin(tj) = row.label else { unreachable!() };
            let j = tj as f64 / 2.0;
            let v = k * k * (j + 0.5).powi(2);
            assert!((row.eigen_min - v).abs() <= 1e-8 * v);
            assert!((row.eigen_max - v).abs() <= 1e-8 * v);
            assert!((row.shifted - v).abs() <= 1e-10 * v);
            // The literal closed form misses <lambda, rho_+> = kappa^2 j / 2.
            assert!((v - row.literal - k * k * j / 2.0).abs() <= 1e-9 * v);
        }
    }

    #[test]
    fn su2_spectral_gap_is_rho_plus() {
        let w = su2_weil(4);
        let gap = spectral_gap(&w);
        assert!((gap - su2_kappa() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn su2_casimir_is_sum_of_projections() {
        let w = su2_weil(3);
        let cas = represent_casimir(&w).data;
        let mut sum = CMat::zeros(w.dim(), w.dim());
        for tp in 0..=4 {
            let l = IrrepLabel::Spin(tp);
            let p = peter_weyl_project(&w.group, &w.layout, &l).unwrap();
            let big = GroupModel { truncation: 8, ..w.group.clone() };
            sum += p * cx(casimir_eigenvalue(&big, &l, &w.rho).unwrap(), 0.0);
        }
        assert!(dist(&cas, &sum) <= 1e-9 * norm_bound(&cas));
    }

    #[test]
    fn su2_square_minus_casimir_is_first_order() {
        let w = su2_weil(6);
        let d = represent_cubic_dirac(&w).data;
        let diff = mul(&d, &d) - represent_casimir(&w).data;
        let mut ratios = Vec::new();
        for (l, r) in &w.blocks {
            let idx: Vec<usize> = r.clone().collect();
            let blk = crate::numerics::compress(&diff, &idx);
            let om = casimir_eigenvalue(&w.group, l, &w.rho).unwrap();
            ratios.push(norm_bound(&blk) / (1.0 + om).sqrt());
        }
        let first = ratios[1];
        assert!(ratios.iter().all(|&x| x <= 4.0 * first.max(1.0)), "{ratios:?}");
    }

    #[test]
    fn scaled_metric_kostant() {
        let g = GroupModel::su2(3);
        let w = RepresentedWeil::su2_regular(&g, &(RMat::identity(3, 3) * 2.5)).unwrap();
        assert!(w.equivariance_residual() <= 1e-10);
        let rep = kostant_relations_check(&w, 1e-9).unwrap();
        assert!(rep.max_relative() <= 1e-9);
    }

    #[test]
    fn spinor_action_block() {
        let w = su2_weil(1);
        let s = spin_lift(&w.group, &w.clifford).unwrap();
        // spin 1/2: s_1^2 = -(kappa/2)^2
        let k = su2_kappa();
        assert!(dist(&mul(&s[0], &s[0]), &(eye(4) * cx(-k * k / 4.0, 0.0))) < 1e-10);
    }
}
