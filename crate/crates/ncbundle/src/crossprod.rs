//! Crossed products Z^m ⋉ B with the dual T^m action: the triple on
//! l^2(Z^m, V (x) H0), cocycles, gauge potentials and gauge unitaries, the
//! irrational rotation algebra, and frame-induced connections.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::clifford::spinor_rep;
use crate::error::{Error, Result};
use crate::group::{torus_indices, GroupModel, ModuleLayout};
use crate::numerics::{
    anticomm, comm, compress, cx, dagger, diag, diag_real, direct_sum, eye, kron, mul, norm_bound, op_norm, pauli,
    tensor_mask, CMat, GradedMatrix, RMat, C64,
};
use crate::triple::{Generator, GroupAction, PrincipalBlocks, TripleInstance, VerticalGeometry, VerticalMetric};

/// Base spectral triple (B, H0, D0) with its grading and Cl_{n-m} multigrading.
#[derive(Clone, Debug)]
pub struct BaseTriple {
    pub generators: Vec<(String, CMat)>,
    pub d0: CMat,
    pub parity_mask: Vec<bool>,
    pub multigrading: Vec<CMat>,
    /// Fourier index of each basis vector of H0, when H0 is a Fourier
    /// truncation; used to locate the window where truncation is exact.
    pub fourier: Option<Vec<i64>>,
}

impl BaseTriple {
    pub fn dim(&self) -> usize {
        self.d0.nrows()
    }

    /// Basis indices of H0 at Fourier distance at least `margin` from the
    /// truncation edge.
    pub fn interior(&self, margin: i64) -> Vec<usize> {
        match &self.fourier {
            Some(f) => {
                let top = f.iter().map(|x| x.abs()).max().unwrap_or(0);
                (0..f.len()).filter(|&i| f[i].abs() <= top - margin).collect()
            }
            None => (0..self.dim()).collect(),
        }
    }

    fn is_odd(&self, x: &CMat) -> bool {
        let g = GradedMatrix { data: x.clone(), parity_mask: self.parity_mask.clone(), multigrade: 0 };
        norm_bound(&g.even_part().data) <= 1e-12 * norm_bound(x).max(1.0)
    }

    fn is_even(&self, x: &CMat) -> bool {
        let g = GradedMatrix { data: x.clone(), parity_mask: self.parity_mask.clone(), multigrade: 0 };
        norm_bound(&g.odd_part().data) <= 1e-12 * norm_bound(x).max(1.0)
    }
}

/// Z^m action on H0 implemented spatially: beta_k(x) = R^k x R^{-k} with
/// R^k = R_1^{k_1} ... R_m^{k_m}.
#[derive(Clone, Debug)]
pub struct CrossedConfig {
    pub m: usize,
    pub radius: i64,
    pub base: BaseTriple,
    pub implementers: Vec<CMat>,
    /// Fourier distance from the base truncation edge below which commutant
    /// and unitarity checks are not trusted.
    pub commutant_margin: i64,
}

/// Spinor module V of Cl_m (+) (R^m)^*: vertical generators c0 and the
/// Cl_m multigrading, inside the spinors of Cl_{2m}.
#[derive(Clone, Debug)]
pub struct VSpinor {
    pub c0: Vec<CMat>,
    pub multigrading: Vec<CMat>,
    pub gamma: CMat,
    pub mask: Vec<bool>,
}

impl VSpinor {
    pub fn new(m: usize) -> VSpinor {
        let cl = spinor_rep(2 * m);
        VSpinor {
            multigrading: cl.generators[..m].to_vec(),
            c0: cl.generators[m..].to_vec(),
            gamma: cl.chirality.clone(),
            mask: cl.parity_mask.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// s(k) = -2 pi i c0(k).
    pub fn symbol(&self, k: &[i64]) -> CMat {
        let n = self.dim();
        let mut s = CMat::zeros(n, n);
        for (ki, c) in k.iter().zip(&self.c0) {
            s += c * cx(0.0, -2.0 * PI * *ki as f64);
        }
        s
    }
}

impl CrossedConfig {
    pub fn lattice(&self) -> Vec<Vec<i64>> {
        torus_indices(self.m, self.radius)
    }

    pub fn lattice_index(&self) -> HashMap<Vec<i64>, usize> {
        self.lattice().into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    }

    pub fn v(&self) -> VSpinor {
        VSpinor::new(self.m)
    }

    /// R^k.
    pub fn implementer(&self, k: &[i64]) -> CMat {
        let n = self.base.dim();
        let mut out = eye(n);
        for (ki, r) in k.iter().zip(&self.implementers) {
            let step = if *ki >= 0 { r.clone() } else { dagger(r) };
            for _ in 0..ki.unsigned_abs() {
                out = mul(&out, &step);
            }
        }
        out
    }

    pub fn beta(&self, k: &[i64], x: &CMat) -> CMat {
        let r = self.implementer(k);
        mul(&mul(&r, x), &dagger(&r))
    }

    /// beta_k(b) for every generator and every k in the window.
    pub fn action_images(&self) -> Vec<Vec<CMat>> {
        let lat = self.lattice();
        self.base.generators.iter().map(|(_, b)| lat.iter().map(|k| self.beta(k, b)).collect()).collect()
    }

    /// Checks the implementers and records sup_k ||[D0, beta_k(b)]|| per
    /// generator.
    pub fn validate(&self) -> Result<Vec<(String, f64)>> {
        if self.implementers.len() != self.m {
            return Err(Error::DimensionMismatch(format!("{} implementers for rank {}", self.implementers.len(), self.m)));
        }
        let n = self.base.dim();
        for r in &self.implementers {
            let u = norm_bound(&(mul(&dagger(r), r) - eye(n)));
            if u > 1e-12 {
                return Err(Error::NotUnitary(u));
            }
            if norm_bound(&comm(r, &self.base.d0)) > 1e-10 * norm_bound(&self.base.d0).max(1.0) {
                return Err(Error::ActionNotCocycle(norm_bound(&comm(r, &self.base.d0))));
            }
        }
        for i in 0..self.m {
            for j in 0..i {
                let c = norm_bound(&comm(&self.implementers[i], &self.implementers[j]));
                if c > 1e-12 {
                    return Err(Error::ActionNotCocycle(c));
                }
            }
        }
        let d = &self.base.d0;
        if norm_bound(&(dagger(d) - d)) > 1e-12 * norm_bound(d).max(1.0) || !self.base.is_odd(d) {
            return Err(Error::NotHermitian { residual: norm_bound(&(dagger(d) - d)), tol: 1e-12 });
        }
        // beta_{j+k} = beta_j beta_k on the generators
        let lat = self.lattice();
        let idx = self.lattice_index();
        let mut worst: f64 = 0.0;
        for (_, b) in &self.base.generators {
            for j in &lat {
                for k in &lat {
                    let s: Vec<i64> = j.iter().zip(k).map(|(a, c)| a + c).collect();
                    if idx.contains_key(&s) {
                        let lhs = self.beta(&s, b);
                        let rhs = self.beta(j, &self.beta(k, b));
                        worst = worst.max(norm_bound(&(lhs - rhs)));
                    }
                }
            }
        }
        if worst > 1e-10 {
            return Err(Error::ActionNotCocycle(worst));
        }
        Ok(self
            .base
            .generators
            .iter()
            .map(|(name, b)| {
                let sup = lat.iter().map(|k| norm_bound(&comm(d, &self.beta(k, b)))).fold(0.0, f64::max);
                (name.clone(), sup)
            })
            .collect())
    }

    /// Largest Fourier distance |f_r - f_c| over entries of x above 1e-14,
    /// or 0 without Fourier metadata.
    pub fn bandwidth(&self, x: &CMat) -> i64 {
        let Some(f) = &self.base.fourier else { return 0 };
        let mut w = 0;
        for r in 0..x.nrows() {
            for c in 0..x.ncols() {
                if x[(r, c)].norm() > 1e-14 {
                    w = w.max((f[r] - f[c]).abs());
                }
            }
        }
        w
    }

    fn interior_norm(&self, x: &CMat) -> f64 {
        norm_bound(&compress(x, &self.base.interior(self.commutant_margin)))
    }

    /// Max residual of x commuting with B and supercommuting with the base
    /// multigrading, on the trusted window.
    pub fn commutant_residual(&self, x: &CMat, odd: bool) -> f64 {
        let mut r: f64 = 0.0;
        for (_, b) in &self.base.generators {
            r = r.max(self.interior_norm(&comm(x, b)));
            r = r.max(self.interior_norm(&comm(x, &dagger(b))));
        }
        for g in &self.base.multigrading {
            let s = if odd { anticomm(x, g) } else { comm(x, g) };
            r = r.max(self.interior_norm(&s));
        }
        r
    }
}

/// Operator on H = l^2(window) (x) V (x) H0 that is block diagonal in the
/// lattice index, stored per block.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub blocks: Vec<CMat>,
}

impl BlockOperator {
    pub fn dense(&self) -> CMat {
        direct_sum(&self.blocks)
    }
}

/// id_V (^)(x) x: Gamma_V (x) x for odd x, 1 (x) x for even x.
pub fn lift_odd(v: &VSpinor, x: &CMat) -> CMat {
    kron(&v.gamma, x)
}

pub fn lift_even(v: &VSpinor, x: &CMat) -> CMat {
    kron(&eye(v.dim()), x)
}

/// Block of D on the lattice point k: s(k) (x) 1 + Gamma_V (x) D0.
pub fn block_dirac(cfg: &CrossedConfig, k: &[i64]) -> CMat {
    let v = cfg.v();
    kron(&v.symbol(k), &eye(cfg.base.dim())) + lift_odd(&v, &cfg.base.d0)
}

#[derive(Clone, Debug)]
pub struct CrossedTriple {
    pub cfg: CrossedConfig,
    pub triple: TripleInstance,
    pub lattice: Vec<Vec<i64>>,
    pub block_dim: usize,
    /// ||D_v - Op(s (x) id)|| and ||D_h[0] - id (x) D0|| at construction.
    pub vertical_identity: f64,
    pub horizontal_identity: f64,
    pub equicontinuity: Vec<(String, f64)>,
}

/// D = Op(s (x) id) + id (x) D0 on l^2(Z^m, V (x) H0), truncated to the window.
pub fn build_crossed_triple(cfg: &CrossedConfig) -> Result<CrossedTriple> {
    let equicontinuity = cfg.validate()?;
    let v = cfg.v();
    let lat = cfg.lattice();
    let idx = cfg.lattice_index();
    let d0n = cfg.base.dim();
    let bd = v.dim() * d0n;
    let nl = lat.len();
    let n = nl * bd;
    let d = direct_sum(&lat.iter().map(|k| block_dirac(cfg, k)).collect::<Vec<_>>());
    let block_mask = tensor_mask(&v.mask, &cfg.base.parity_mask);
    let mask: Vec<bool> = (0..nl).flat_map(|_| block_mask.iter().copied()).collect();
    let mut gens = Vec::new();
    for (name, b) in &cfg.base.generators {
        let op = direct_sum(&lat.iter().map(|k| lift_even(&v, &cfg.beta(k, b))).collect::<Vec<_>>());
        gens.push(Generator { name: name.clone(), op, derivation: Some(vec![CMat::zeros(n, n); cfg.m]) });
    }
    for i in 0..cfg.m {
        let op = translation(&lat, &idx, i, bd);
        let der = (0..cfg.m)
            .map(|j| if i == j { &op * cx(0.0, 2.0 * PI) } else { CMat::zeros(n, n) })
            .collect();
        gens.push(Generator { name: format!("lambda_{}", i + 1), op, derivation: Some(der) });
    }
    let multigrade = cfg.m + cfg.base.multigrading.len();
    let mut t = TripleInstance::new(GradedMatrix { data: d, parity_mask: mask, multigrade }, gens)?;
    let group = GroupModel::torus(cfg.m, 1.0, cfg.radius as u32);
    let du: Vec<CMat> = (0..cfg.m)
        .map(|i| {
            let w: Vec<C64> =
                lat.iter().flat_map(|k| std::iter::repeat(cx(0.0, 2.0 * PI * k[i] as f64)).take(bd)).collect();
            diag(&w)
        })
        .collect();
    let labels: Vec<Vec<i64>> = lat.iter().flat_map(|k| std::iter::repeat(k.clone()).take(bd)).collect();
    t.action = Some(GroupAction { group, du, layout: ModuleLayout::Torus { labels } });
    let c_gen: Vec<CMat> = v
        .c0
        .iter()
        .map(|c| kron(&eye(nl), &kron(&(-c), &eye(d0n))))
        .collect();
    t.vertical = Some(VerticalGeometry { metric: VerticalMetric::Constant(RMat::identity(cfg.m, cfg.m)), c_gen, ell: None });
    let mut mg: Vec<CMat> = v.multigrading.iter().map(|g| kron(&eye(nl), &kron(g, &eye(d0n)))).collect();
    mg.extend(cfg.base.multigrading.iter().map(|g| kron(&eye(nl), &lift_odd(&v, g))));
    t.multigrading = mg;
    let dv = crate::triple::vertical_dirac(&t)?;
    let op_s = direct_sum(&lat.iter().map(|k| kron(&v.symbol(k), &eye(d0n))).collect::<Vec<_>>());
    let vertical_identity = norm_bound(&(&dv.data - &op_s));
    let id_d0 = kron(&eye(nl), &lift_odd(&v, &cfg.base.d0));
    let horizontal_identity = norm_bound(&(&t.d.data - &dv.data - &id_d0));
    Ok(CrossedTriple { cfg: cfg.clone(), triple: t, lattice: lat, block_dim: bd, vertical_identity, horizontal_identity, equicontinuity })
}

/// lambda_{e_i}: block k -> block k + e_i, dropped outside the window.
fn translation(lat: &[Vec<i64>], idx: &HashMap<Vec<i64>, usize>, i: usize, bd: usize) -> CMat {
    let n = lat.len() * bd;
    let mut op = CMat::zeros(n, n);
    for (b, k) in lat.iter().enumerate() {
        let mut t = k.clone();
        t[i] += 1;
        if let Some(&tb) = idx.get(&t) {
            for r in 0..bd {
                op[(tb * bd + r, b * bd + r)] = cx(1.0, 0.0);
            }
        }
    }
    op
}

impl CrossedTriple {
    /// Block metadata for factorization_check; the connection term is
    /// Gamma_V (x) omega(k) when a potential is present.
    pub fn principal_blocks(&self, omega: Option<&Cocycle>) -> PrincipalBlocks {
        let v = self.cfg.v();
        let d0n = self.cfg.base.dim();
        let invariant = self.lattice.iter().position(|k| k.iter().all(|&x| x == 0)).unwrap();
        let vertical_symbol = self.lattice.iter().map(|k| kron(&v.symbol(k), &eye(d0n))).collect();
        let connection = omega.map(|w| w.values.iter().map(|x| lift_odd(&v, x)).collect());
        let mut algebra_model = Vec::new();
        for (_, b) in &self.cfg.base.generators {
            let blocks: Vec<CMat> = self.lattice.iter().map(|k| lift_even(&v, &self.cfg.beta(k, b))).collect();
            algebra_model.push(direct_sum(&blocks));
        }
        // lambda_{e_i} on copies: e_k (x) xi -> e_{k + e_i} (x) xi
        let nl = self.lattice.len();
        for i in 0..self.cfg.m {
            let mut shift = CMat::zeros(nl, nl);
            for (b, k) in self.lattice.iter().enumerate() {
                if k[i] < self.cfg.radius {
                    // lexicographic order: +e_i moves by (2K+1)^{m-1-i}
                    let stride = (2 * self.cfg.radius + 1).pow((self.cfg.m - 1 - i) as u32) as usize;
                    shift[(b + stride, b)] = cx(1.0, 0.0);
                }
            }
            algebra_model.push(kron(&shift, &eye(self.block_dim)));
        }
        PrincipalBlocks {
            labels: self.lattice.clone(),
            block_dim: self.block_dim,
            invariant,
            vertical_symbol,
            connection,
            algebra_model,
        }
    }

    /// Copy of the triple with D replaced by D + F.
    pub fn perturbed(&self, f: &BlockOperator) -> Result<TripleInstance> {
        let mut t = self.triple.clone();
        let d = &t.d.data + f.dense();
        t.d = t.graded(d);
        let r = t.d.hermitian_residual();
        if r > 1e-10 * norm_bound(&t.d.data).max(1.0) {
            return Err(Error::NotHermitian { residual: r, tol: 1e-10 });
        }
        Ok(t)
    }
}

/// Additive 1-cocycle omega(j + k) = omega(j) + beta_j(omega(k)), stored by
/// generator values and closed over the window.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub generators: Vec<CMat>,
    /// Values aligned with `cfg.lattice()`.
    pub values: Vec<CMat>,
}

/// Multiplicative 1-cocycle upsilon(j + k) = upsilon(j) beta_j(upsilon(k)).
#[derive(Clone, Debug)]
pub struct UnitaryCocycle {
    pub generators: Vec<CMat>,
    pub values: Vec<CMat>,
}

/// Visits the window from 0 outward along coordinate steps and returns, for
/// each point other than 0, (predecessor, direction, step sign).
fn closure_order(cfg: &CrossedConfig) -> Vec<(usize, usize, usize, i64)> {
    let lat = cfg.lattice();
    let idx = cfg.lattice_index();
    let mut order: Vec<usize> = (0..lat.len()).collect();
    order.sort_by_key(|&i| lat[i].iter().map(|x| x.abs()).sum::<i64>());
    let mut out = Vec::new();
    for &p in &order {
        let k = &lat[p];
        if let Some(dir) = k.iter().position(|&x| x != 0) {
            let sign = k[dir].signum();
            let mut prev = k.clone();
            prev[dir] -= sign;
            out.push((p, idx[&prev], dir, sign));
        }
    }
    out
}

impl Cocycle {
    pub fn new(cfg: &CrossedConfig, generators: Vec<CMat>) -> Result<Cocycle> {
        if generators.len() != cfg.m {
            return Err(Error::DimensionMismatch(format!("{} cocycle generators for rank {}", generators.len(), cfg.m)));
        }
        let lat = cfg.lattice();
        let n = cfg.base.dim();
        let mut values = vec![CMat::zeros(n, n); lat.len()];
        let e = |dir: usize, sign: i64| -> CMat {
            if sign > 0 {
                generators[dir].clone()
            } else {
                let mut step = vec![0; cfg.m];
                step[dir] = -1;
                -cfg.beta(&step, &generators[dir])
            }
        };
        for (p, prev, dir, sign) in closure_order(cfg) {
            // omega(prev + s e) = omega(prev) + beta_prev(omega(s e))
            values[p] = &values[prev] + cfg.beta(&lat[prev], &e(dir, sign));
        }
        let c = Cocycle { generators, values };
        let r = c.identity_residual(cfg);
        if r > 1e-10 * c.scale() {
            return Err(Error::CocycleViolation(format!("cocycle identity residual {r:.3e}")));
        }
        Ok(c)
    }

    /// Homomorphism-type cocycle omega(k) = sum_i k_i x_i, valid when every
    /// x_i is beta-invariant.
    pub fn homomorphism(cfg: &CrossedConfig, x: Vec<CMat>) -> Result<Cocycle> {
        Cocycle::new(cfg, x)
    }

    /// Coboundary omega(k) = xi - beta_k(xi).
    pub fn coboundary(cfg: &CrossedConfig, xi: &CMat) -> Result<Cocycle> {
        let gens = (0..cfg.m)
            .map(|i| {
                let mut e = vec![0; cfg.m];
                e[i] = 1;
                xi - cfg.beta(&e, xi)
            })
            .collect();
        Cocycle::new(cfg, gens)
    }

    fn scale(&self) -> f64 {
        self.values.iter().map(norm_bound).fold(1.0, f64::max)
    }

    pub fn at(&self, cfg: &CrossedConfig, k: &[i64]) -> Option<&CMat> {
        cfg.lattice_index().get(k).map(|&i| &self.values[i])
    }

    /// Max over stored pairs of ||omega(j+k) - omega(j) - beta_j(omega(k))||.
    pub fn identity_residual(&self, cfg: &CrossedConfig) -> f64 {
        let lat = cfg.lattice();
        let idx = cfg.lattice_index();
        let mut r: f64 = 0.0;
        for (a, j) in lat.iter().enumerate() {
            let rj = cfg.implementer(j);
            let rjd = dagger(&rj);
            for (b, k) in lat.iter().enumerate() {
                let s: Vec<i64> = j.iter().zip(k).map(|(x, y)| x + y).collect();
                if let Some(&c) = idx.get(&s) {
                    let x = &self.values[c] - &self.values[a] - mul(&mul(&rj, &self.values[b]), &rjd);
                    r = r.max(norm_bound(&x));
                }
            }
        }
        r
    }

    /// Checks every value is odd, self-adjoint and in the commutant.
    pub fn validate_values(&self, cfg: &CrossedConfig, tol: f64) -> Result<()> {
        for x in &self.values {
            let sa = norm_bound(&(dagger(x) - x));
            if sa > tol * norm_bound(x).max(1.0) || !cfg.base.is_odd(x) {
                return Err(Error::CocycleViolation(format!("value not odd self-adjoint ({sa:.3e})")));
            }
            let c = cfg.commutant_residual(x, true);
            if c > tol * norm_bound(x).max(1.0) {
                return Err(Error::NotCommutant(format!("cocycle value, residual {c:.3e}")));
            }
        }
        Ok(())
    }

    /// (C, max_k ||omega(k)|| - C ||k||_1) with C the largest operator norm of
    /// omega on the symmetric generating set {+-e_i}. The norms of omega(e_i)
    /// and omega(-e_i) agree up to rounding, and using both keeps the
    /// inequality exact on the generators themselves.
    pub fn growth(&self, cfg: &CrossedConfig) -> (f64, f64) {
        let lat = cfg.lattice();
        let c = lat
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| k.iter().map(|v| v.abs()).sum::<i64>() == 1)
            .map(|(_, x)| op_norm(x))
            .fold(0.0, f64::max);
        let excess = lat
            .iter()
            .zip(&self.values)
            .map(|(k, x)| op_norm(x) - c * k.iter().map(|v| v.abs() as f64).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        (c, excess)
    }
}

impl UnitaryCocycle {
    pub fn new(cfg: &CrossedConfig, generators: Vec<CMat>) -> Result<UnitaryCocycle> {
        if generators.len() != cfg.m {
            return Err(Error::DimensionMismatch(format!("{} cocycle generators for rank {}", generators.len(), cfg.m)));
        }
        let lat = cfg.lattice();
        let n = cfg.base.dim();
        let mut values = vec![eye(n); lat.len()];
        for (p, prev, dir, sign) in closure_order(cfg) {
            let step = if sign > 0 {
                generators[dir].clone()
            } else {
                let mut e = vec![0; cfg.m];
                e[dir] = -1;
                dagger(&cfg.beta(&e, &generators[dir]))
            };
            values[p] = mul(&values[prev], &cfg.beta(&lat[prev], &step));
        }
        let u = UnitaryCocycle { generators, values };
        let r = u.identity_residual(cfg);
        if r > 1e-10 {
            return Err(Error::CocycleViolation(format!("unitary cocycle identity residual {r:.3e}")));
        }
        Ok(u)
    }

    pub fn trivial(cfg: &CrossedConfig) -> UnitaryCocycle {
        let n = cfg.base.dim();
        UnitaryCocycle { generators: vec![eye(n); cfg.m], values: vec![eye(n); cfg.lattice().len()] }
    }

    pub fn identity_residual(&self, cfg: &CrossedConfig) -> f64 {
        let lat = cfg.lattice();
        let idx = cfg.lattice_index();
        let mut r: f64 = 0.0;
        let band: Vec<i64> = self.values.iter().map(|x| cfg.bandwidth(x)).collect();
        for (a, j) in lat.iter().enumerate() {
            for (b, k) in lat.iter().enumerate() {
                let s: Vec<i64> = j.iter().zip(k).map(|(x, y)| x + y).collect();
                if let Some(&c) = idx.get(&s) {
                    // truncated products are exact away from the edge by the band widths
                    let window = cfg.base.interior(cfg.commutant_margin + band[a] + band[b]);
                    let x = &self.values[c] - mul(&self.values[a], &cfg.beta(j, &self.values[b]));
                    r = r.max(norm_bound(&compress(&x, &window)));
                }
            }
        }
        r
    }
}

/// Relative residual of the least-squares fit of x by the span of
/// w [D0, g] with g a generator or its adjoint and w a word of length at most
/// `degree` in the generators and their adjoints, on the trusted window.
pub fn omega1_residual(cfg: &CrossedConfig, x: &CMat, degree: usize) -> Result<f64> {
    let window = cfg.base.interior(cfg.commutant_margin);
    let n = cfg.base.dim();
    let mut letters = Vec::new();
    for (_, b) in &cfg.base.generators {
        letters.push(b.clone());
        letters.push(dagger(b));
    }
    let mut words = vec![eye(n)];
    let mut frontier = vec![eye(n)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                next.push(mul(w, l));
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let diffs: Vec<CMat> = letters.iter().map(|l| comm(&cfg.base.d0, l)).collect();
    let mut basis = Vec::new();
    for w in &words {
        for d in &diffs {
            basis.push(compress(&mul(w, d), &window));
        }
    }
    let rows = window.len() * window.len();
    let a = CMat::from_fn(rows, basis.len(), |r, c| basis[c][(r % window.len(), r / window.len())]);
    let target = compress(x, &window);
    let b = CMat::from_fn(rows, 1, |r, _| target[(r % window.len(), r / window.len())]);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).map_err(|e| Error::ScenarioBuild(e.to_string()))?;
    let res = &a * coef - &b;
    Ok(res.norm() / b.norm().max(1e-300))
}

/// F(omega, M) = Op(id_V (^)(x) (omega + M)).
pub fn gauge_potential(cfg: &CrossedConfig, omega: &Cocycle, m_op: &CMat) -> Result<BlockOperator> {
    let tol = 1e-9;
    let sa = norm_bound(&(dagger(m_op) - m_op));
    if sa > tol * norm_bound(m_op).max(1.0) || !cfg.base.is_odd(m_op) {
        return Err(Error::NotCommutant(format!("M must be odd and self-adjoint ({sa:.3e})")));
    }
    let c = cfg.commutant_residual(m_op, true);
    if c > tol * norm_bound(m_op).max(1.0) {
        return Err(Error::NotCommutant(format!("M residual {c:.3e}")));
    }
    let r = omega.identity_residual(cfg);
    if r > 1e-10 * omega.scale() {
        return Err(Error::CocycleViolation(format!("cocycle identity residual {r:.3e}")));
    }
    omega.validate_values(cfg, tol)?;
    let v = cfg.v();
    Ok(BlockOperator { blocks: omega.values.iter().map(|x| lift_odd(&v, &(x + m_op))).collect() })
}

/// U(upsilon, w) = Op(id_V (x) w upsilon).
pub fn gauge_unitary(cfg: &CrossedConfig, upsilon: &UnitaryCocycle, w: &CMat) -> Result<BlockOperator> {
    let window = cfg.base.interior(cfg.commutant_margin);
    let n = cfg.base.dim();
    let unit = |x: &CMat| norm_bound(&compress(&(mul(&dagger(x), x) - eye(n)), &window));
    let uw = unit(w);
    if uw > 1e-10 {
        return Err(Error::NotUnitary(uw));
    }
    if !cfg.base.is_even(w) {
        return Err(Error::NotCommutant("w must be even".into()));
    }
    let c = cfg.commutant_residual(w, false);
    if c > 1e-10 {
        return Err(Error::NotCommutant(format!("w residual {c:.3e}")));
    }
    let r = upsilon.identity_residual(cfg);
    if r > 1e-10 {
        return Err(Error::CocycleViolation(format!("unitary cocycle identity residual {r:.3e}")));
    }
    for g in &upsilon.generators {
        let u = unit(g);
        if u > 1e-10 {
            return Err(Error::NotUnitary(u));
        }
    }
    for x in &upsilon.values {
        let c = cfg.commutant_residual(x, false);
        if c > 1e-10 {
            return Err(Error::NotCommutant(format!("cocycle value residual {c:.3e}")));
        }
    }
    let v = cfg.v();
    Ok(BlockOperator { blocks: upsilon.values.iter().map(|x| lift_even(&v, &mul(w, x))).collect() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    /// U[D,U*] + U F(omega,M) U* - F(omega + upsilon[D0,upsilon*], w M w*)
    pub literal: f64,
    /// Same with w[D0,w*] added to the constant part on the right.
    pub corrected: f64,
    pub blocks_checked: usize,
}

/// Evaluates the gauge-equivariance identity block by block on lattice points
/// with |k|_inf < K, compressed to base vectors at Fourier distance at least
/// `margin(k)` from the edge.
pub fn equivariance_check(
    cfg: &CrossedConfig,
    omega: &Cocycle,
    m_op: &CMat,
    upsilon: &UnitaryCocycle,
    w: &CMat,
    margin: impl Fn(&[i64]) -> i64,
) -> Result<EquivarianceReport> {
    let f = gauge_potential(cfg, omega, m_op)?;
    let u = gauge_unitary(cfg, upsilon, w)?;
    let v = cfg.v();
    let d0 = &cfg.base.d0;
    let wmw = mul(&mul(w, m_op), &dagger(w));
    let wdw = mul(w, &comm(d0, &dagger(w)));
    let mut rep = EquivarianceReport { literal: 0.0, corrected: 0.0, blocks_checked: 0 };
    for (b, k) in cfg.lattice().iter().enumerate() {
        if k.iter().any(|x| x.abs() >= cfg.radius) {
            continue;
        }
        let window = cfg.base.interior(margin(k));
        if window.is_empty() {
            continue;
        }
        let idx: Vec<usize> = (0..v.dim()).flat_map(|a| window.iter().map(move |&i| a * d0.nrows() + i)).collect();
        let dk = block_dirac(cfg, k);
        let uk = &u.blocks[b];
        let ud = dagger(uk);
        let lhs = mul(&mul(uk, &dk), &ud) - mul(&mul(uk, &ud), &dk) + mul(&mul(uk, &f.blocks[b]), &ud);
        let ups = &upsilon.values[b];
        let shift = mul(ups, &comm(d0, &dagger(ups)));
        let rhs = lift_odd(&v, &(&omega.values[b] + &shift + &wmw));
        let rhs_c = &rhs + lift_odd(&v, &wdw);
        rep.literal = rep.literal.max(norm_bound(&compress(&(&lhs - &rhs), &idx)));
        rep.corrected = rep.corrected.max(norm_bound(&compress(&(&lhs - &rhs_c), &idx)));
        rep.blocks_checked += 1;
    }
    Ok(rep)
}

/// Truncated shift S_q on l^2({-l..l}): e_n -> e_{n+q}, i.e. multiplication
/// by exp(2 pi i q t).
pub fn shift(l: i64, q: i64) -> CMat {
    let n = (2 * l + 1) as usize;
    CMat::from_fn(n, n, |r, c| if r as i64 - c as i64 == q { cx(1.0, 0.0) } else { cx(0.0, 0.0) })
}

/// Multiplication by the trigonometric polynomial with Fourier coefficients
/// coeffs[j] at frequency j - d, truncated to {-l..l}.
pub fn toeplitz(l: i64, coeffs: &[C64]) -> CMat {
    let d = (coeffs.len() as i64 - 1) / 2;
    let n = (2 * l + 1) as usize;
    CMat::from_fn(n, n, |r, c| {
        let q = r as i64 - c as i64;
        if q.abs() <= d {
            coeffs[(q + d) as usize]
        } else {
            cx(0.0, 0.0)
        }
    })
}

/// Irrational rotation algebra as Z ⋉ C(T): H0 = C^2 (x) l^2({-l..l}),
/// D0 = -i sigma_2 (x) d/dt, grading sigma_3, multigrading i sigma_1,
/// B generated by u = exp(2 pi i t), beta_1(u) = exp(2 pi i theta) u.
pub fn torus_theta(theta: f64, k: i64, l: i64) -> CrossedConfig {
    let [s1, s2, _] = pauli();
    let ns: Vec<f64> = (-l..=l).map(|n| 2.0 * PI * n as f64).collect();
    let one = eye(ns.len());
    let d0 = kron(&s2, &diag_real(&ns));
    let mask = tensor_mask(&[false, true], &vec![false; ns.len()]);
    let r = diag(&(-l..=l).map(|n| C64::from_polar(1.0, 2.0 * PI * theta * n as f64)).collect::<Vec<_>>());
    CrossedConfig {
        m: 1,
        radius: k,
        base: BaseTriple {
            generators: vec![("u".into(), kron(&eye(2), &shift(l, 1)))],
            d0,
            parity_mask: mask,
            multigrading: vec![kron(&(&s1 * cx(0.0, 1.0)), &one)],
            fourier: Some((-l..=l).chain(-l..=l).collect()),
        },
        implementers: vec![kron(&eye(2), &r)],
        commutant_margin: 4,
    }
}

/// Spinor mixing (i/sqrt 2)(sigma_3 (x) 1 + sigma_2 (x) sigma_1) on V (x) C^2.
pub fn theta_w_spinor() -> CMat {
    let [s1, s2, s3] = pauli();
    (kron(&s3, &eye(2)) + kron(&s2, &s1)) * cx(0.0, 1.0 / 2f64.sqrt())
}

/// The unitary W on one lattice block of the irrational-torus triple.
pub fn theta_w_block(l: i64) -> CMat {
    kron(&theta_w_spinor(), &eye((2 * l + 1) as usize))
}

/// Block n1 = k of id (^)(x) D̸_{T^2, tau} on C^2 (x) C^2 (x) l^2(n2):
/// sigma_3 (x) 2 pi ((Re tau sigma_2 + Im tau sigma_1) k + sigma_2 n2).
pub fn t2_dirac_block(tau: C64, k: i64, l: i64) -> CMat {
    let [s1, s2, s3] = pauli();
    let n = (2 * l + 1) as usize;
    let inner = kron(&((&s2 * cx(tau.re, 0.0) + &s1 * cx(tau.im, 0.0)) * cx(2.0 * PI * k as f64, 0.0)), &eye(n))
        + kron(&s2, &diag_real(&(-l..=l).map(|q| 2.0 * PI * q as f64).collect::<Vec<_>>()));
    kron(&s3, &inner)
}

/// max over blocks |k| < K of ||W (D + F(i omega_s dt)) W* - id (^)(x) D̸_{s+i}||
/// with omega_s(k) = 2 pi s k sigma_2.
pub fn tau_shift_residual(cfg: &CrossedConfig, s: f64) -> Result<f64> {
    let l = (cfg.base.dim() as i64 / 2 - 1) / 2;
    let [_, s2, _] = pauli();
    let gen = kron(&s2, &eye((2 * l + 1) as usize)) * cx(2.0 * PI * s, 0.0);
    let omega = Cocycle::homomorphism(cfg, vec![gen])?;
    let f = gauge_potential(cfg, &omega, &CMat::zeros(cfg.base.dim(), cfg.base.dim()))?;
    let w = theta_w_block(l);
    let wd = dagger(&w);
    let mut r: f64 = 0.0;
    for (b, k) in cfg.lattice().iter().enumerate() {
        if k[0].abs() >= cfg.radius {
            continue;
        }
        let lhs = mul(&mul(&w, &(block_dirac(cfg, k) + &f.blocks[b])), &wd);
        r = r.max(norm_bound(&(lhs - t2_dirac_block(cx(s, 1.0), k[0], l))));
    }
    Ok(r)
}

/// upsilon_k with upsilon_k(1) = exp(-2 pi i k t).
pub fn upsilon_k(cfg: &CrossedConfig, k: i64) -> Result<UnitaryCocycle> {
    let l = (cfg.base.dim() as i64 / 2 - 1) / 2;
    UnitaryCocycle::new(cfg, vec![kron(&eye(2), &shift(l, -k))])
}

/// max over blocks |p| < K of ||W U(upsilon_k) D U(upsilon_k)* W* - id (^)(x) D̸_{k+i}||
/// on base modes |n| <= L - |k p| - 1.
pub fn gauge_shift_residual(cfg: &CrossedConfig, k: i64) -> Result<f64> {
    let l = (cfg.base.dim() as i64 / 2 - 1) / 2;
    let ups = upsilon_k(cfg, k)?;
    let u = gauge_unitary(cfg, &ups, &eye(cfg.base.dim()))?;
    let w = theta_w_block(l);
    let wd = dagger(&w);
    let mut r: f64 = 0.0;
    for (b, p) in cfg.lattice().iter().enumerate() {
        if p[0].abs() >= cfg.radius {
            continue;
        }
        let ub = &u.blocks[b];
        let lhs = mul(&mul(&w, &mul(&mul(ub, &block_dirac(cfg, p)), &dagger(ub))), &wd);
        let diff = lhs - t2_dirac_block(cx(k as f64, 1.0), p[0], l);
        let window = cfg.base.interior((k * p[0]).abs() + 1);
        let nb = (2 * l + 1) as usize;
        // W mixes the four spinor components; keep base modes only
        let keep: Vec<usize> = (0..4).flat_map(|a| window.iter().filter(|&&i| i < nb).map(move |&i| a * nb + i)).collect();
        r = r.max(norm_bound(&compress(&diff, &keep)));
    }
    Ok(r)
}

/// Real trigonometric polynomial of degree <= 2 with coefficients in [-1, 1],
/// as Fourier coefficients at frequencies -2..2.
pub fn random_real_trig<R: Rng>(rng: &mut R) -> Vec<C64> {
    let a0: f64 = rng.gen_range(-1.0..1.0);
    let mut c = vec![cx(0.0, 0.0); 5];
    c[2] = cx(a0, 0.0);
    for d in 1..=2usize {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        c[2 + d] = cx(a / 2.0, -b / 2.0);
        c[2 - d] = cx(a / 2.0, b / 2.0);
    }
    c
}

/// Random gauge data on the irrational torus: omega(1) = sigma_2 (x) g,
/// M = sigma_2 (x) h, upsilon(1) = e^{i phi} e^{2 pi i q t}, w = e^{i psi} e^{2 pi i r t}.
#[derive(Clone, Debug)]
pub struct RandomGaugeData {
    pub omega: Cocycle,
    pub m_op: CMat,
    pub upsilon: UnitaryCocycle,
    pub w: CMat,
    pub q: i64,
    pub r: i64,
}

impl RandomGaugeData {
    pub fn sample<R: Rng>(cfg: &CrossedConfig, rng: &mut R) -> Result<RandomGaugeData> {
        let l = (cfg.base.dim() as i64 / 2 - 1) / 2;
        let [_, s2, _] = pauli();
        let g = toeplitz(l, &random_real_trig(rng));
        let h = toeplitz(l, &random_real_trig(rng));
        let omega = Cocycle::new(cfg, vec![kron(&s2, &g)])?;
        let q = rng.gen_range(-1..=1);
        let r = rng.gen_range(-1..=1);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let psi: f64 = rng.gen_range(0.0..2.0 * PI);
        let upsilon = UnitaryCocycle::new(cfg, vec![kron(&eye(2), &shift(l, q)) * C64::from_polar(1.0, phi)])?;
        let w = kron(&eye(2), &shift(l, r)) * C64::from_polar(1.0, psi);
        Ok(RandomGaugeData { omega, m_op: kron(&s2, &h), upsilon, w, q, r })
    }

    /// Base margin for lattice point k: upsilon(k) shifts by |q k|, w by |r|,
    /// and the coefficients have degree 2.
    pub fn margin(&self, k: &[i64]) -> i64 {
        (self.q * k[0]).abs() + self.r.abs() + 3
    }
}

/// Connection induced by a frame {xi_i} through a conditional expectation:
/// nabla(a) = sum_i xi_i (x) E(xi_i^* nabla0(a)). Elements of the module are
/// represented as operators on H, the balanced tensor product as the operator
/// H0 -> H given by sum_i xi_i iota E(..).
#[derive(Clone, Debug)]
pub struct FrameConnection {
    pub frame: Vec<CMat>,
    /// iota: H0 -> H, the invariant summand.
    pub embed: CMat,
}

impl FrameConnection {
    /// E(X) = iota^* X iota.
    pub fn expectation(&self, x: &CMat) -> CMat {
        mul(&mul(&dagger(&self.embed), x), &self.embed)
    }

    /// Checks sum_i xi_i iota E(xi_i^* a) = a iota on the test elements and
    /// E(b x) = b E(x), E(x b) = E(x) b for base elements b.
    pub fn new(frame: Vec<CMat>, embed: CMat, test: &[CMat], base: &[(CMat, CMat)]) -> Result<FrameConnection> {
        let fc = FrameConnection { frame, embed };
        let mut r: f64 = 0.0;
        for a in test {
            r = r.max(norm_bound(&(fc.reconstruct(a) - mul(a, &fc.embed))));
        }
        if r > 1e-10 {
            return Err(Error::NotAFrame(r));
        }
        // base: (b on H, b on H0)
        let mut e: f64 = 0.0;
        for x in test {
            for (bh, b0) in base {
                e = e.max(norm_bound(&(fc.expectation(&mul(bh, x)) - mul(b0, &fc.expectation(x)))));
                e = e.max(norm_bound(&(fc.expectation(&mul(x, bh)) - mul(&fc.expectation(x), b0))));
            }
        }
        if e > 1e-10 {
            return Err(Error::ExpectationNotBimodular(e));
        }
        Ok(fc)
    }

    fn reconstruct(&self, a: &CMat) -> CMat {
        let mut out = CMat::zeros(a.nrows(), self.embed.ncols());
        for xi in &self.frame {
            out += mul(&mul(xi, &self.embed), &self.expectation(&mul(&dagger(xi), a)));
        }
        out
    }

    /// nabla(a) for nabla0(a) supplied as an operator on H.
    pub fn apply(&self, nabla0_a: &CMat) -> CMat {
        self.reconstruct(nabla0_a)
    }
}

/// Z_2 crossed product of the diagonal algebra on N points by the reflection
/// p -> N-1-p, over the base triple (C^N-valued functions, C^2 (x) C^N,
/// T = sigma_2 (x) X) with X a weighted path-graph hopping matrix.
/// L^2(A) (x)_B H0 = H0 (+) H0 with b -> diag(b, beta(b)), delta -> swap.
#[derive(Clone, Debug)]
pub struct Z2Fibration {
    pub n: usize,
    pub t: CMat,
    pub reflection: CMat,
    pub mask: Vec<bool>,
}

impl Z2Fibration {
    pub fn new(n: usize, weights: &[f64]) -> Z2Fibration {
        let [_, s2, _] = pauli();
        let mut x = CMat::zeros(n, n);
        for p in 0..n - 1 {
            x[(p, p + 1)] = cx(weights[p % weights.len()], 0.0);
            x[(p + 1, p)] = cx(weights[p % weights.len()], 0.0);
        }
        let refl = CMat::from_fn(n, n, |r, c| if r + c == n - 1 { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        Z2Fibration {
            n,
            t: kron(&s2, &x),
            reflection: kron(&eye(2), &refl),
            mask: tensor_mask(&[false, true], &vec![false; n]),
        }
    }

    pub fn h0_dim(&self) -> usize {
        2 * self.n
    }

    /// Base element from point values.
    pub fn base(&self, f: &[C64]) -> CMat {
        kron(&eye(2), &diag(f))
    }

    pub fn beta(&self, b: &CMat) -> CMat {
        mul(&mul(&self.reflection, b), &self.reflection)
    }

    /// pi(b0 + b1 delta) on H0 (+) H0.
    pub fn element(&self, b0: &CMat, b1: &CMat) -> CMat {
        let d = self.h0_dim();
        let mut out = CMat::zeros(2 * d, 2 * d);
        let blocks = [[b0.clone(), b1.clone()], [self.beta(b1), self.beta(b0)]];
        for (r, row) in blocks.iter().enumerate() {
            for (c, blk) in row.iter().enumerate() {
                out.view_mut((r * d, c * d), (d, d)).copy_from(blk);
            }
        }
        out
    }

    pub fn delta(&self) -> CMat {
        let d = self.h0_dim();
        self.element(&CMat::zeros(d, d), &eye(d))
    }

    /// D_h = T (+) T; nabla0 = [D_h, .].
    pub fn horizontal(&self) -> CMat {
        kron(&eye(2), &self.t)
    }

    pub fn embed(&self) -> CMat {
        let d = self.h0_dim();
        CMat::from_fn(2 * d, d, |r, c| if r == c { cx(1.0, 0.0) } else { cx(0.0, 0.0) })
    }

    pub fn standard_frame(&self) -> Vec<CMat> {
        let d = self.h0_dim();
        vec![eye(2 * d), self.delta()]
    }

    /// {(1 + delta)/sqrt 2, (1 - delta)/sqrt 2}.
    pub fn rotated_frame(&self) -> Vec<CMat> {
        let d = self.h0_dim();
        let s = 1.0 / 2f64.sqrt();
        vec![(eye(2 * d) + self.delta()) * cx(s, 0.0), (eye(2 * d) - self.delta()) * cx(s, 0.0)]
    }

    pub fn random_base<R: Rng>(&self, rng: &mut R) -> CMat {
        let f: Vec<C64> = (0..self.n).map(|_| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        self.base(&f)
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> CMat {
        let b0 = self.random_base(rng);
        let b1 = self.random_base(rng);
        self.element(&b0, &b1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub leibniz: f64,
    pub hermitian: f64,
    pub frame_independence: f64,
}

/// Leibniz rule, Hermitian property and frame independence of the frame
/// connection on random elements of the Z_2 fibration. All elements are even,
/// so the grading acts trivially on them.
pub fn frame_connection_report<R: Rng>(z: &Z2Fibration, samples: usize, rng: &mut R) -> Result<FrameReport> {
    let dh = z.horizontal();
    let nabla0 = |a: &CMat| comm(&dh, a);
    let embed = z.embed();
    let mut test = Vec::new();
    let mut base = Vec::new();
    for _ in 0..samples {
        test.push(z.random_element(rng));
        let b = z.random_base(rng);
        base.push((z.element(&b, &CMat::zeros(z.h0_dim(), z.h0_dim())), b));
    }
    let f1 = FrameConnection::new(z.standard_frame(), embed.clone(), &test, &base)?;
    let f2 = FrameConnection::new(z.rotated_frame(), embed.clone(), &test, &base)?;
    let mut rep = FrameReport { leibniz: 0.0, hermitian: 0.0, frame_independence: 0.0 };
    for (i, a) in test.iter().enumerate() {
        let (bh, b0) = &base[i];
        let na = f1.apply(&nabla0(a));
        rep.frame_independence = rep.frame_independence.max(norm_bound(&(&na - f2.apply(&nabla0(a)))));
        // nabla(a b) = nabla(a) b + a (x) [T, b]
        let lhs = f1.apply(&nabla0(&mul(a, bh)));
        let rhs = mul(&na, b0) + mul(&mul(a, &embed), &comm(&z.t, b0));
        rep.leibniz = rep.leibniz.max(norm_bound(&(lhs - rhs)));
        // [T, <a1, a2>] = <a1, nabla a2> - <nabla a1, a2>
        let a2 = &test[(i + 1) % test.len()];
        let ip = f1.expectation(&mul(&dagger(a), a2));
        let lhs = comm(&z.t, &ip);
        let n2 = f1.apply(&nabla0(a2));
        let rhs = mul(&mul(&dagger(&embed), &dagger(a)), &n2) - mul(&dagger(&na), &mul(a2, &embed));
        rep.hermitian = rep.hermitian.max(norm_bound(&(lhs - rhs)));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dist, eigvalsh};
    use crate::triple::{canonical_remainder, factorization_check, vertical_dirac};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    fn scalar_base() -> CrossedConfig {
        CrossedConfig {
            m: 1,
            radius: 3,
            base: BaseTriple {
                generators: Vec::new(),
                d0: CMat::zeros(1, 1),
                parity_mask: vec![false],
                multigrading: Vec::new(),
                fourier: None,
            },
            implementers: vec![eye(1)],
            commutant_margin: 0,
        }
    }

    #[test]
    fn v_spinor_conventions() {
        let v = VSpinor::new(1);
        let [s1, s2, s3] = pauli();
        assert!(dist(&v.c0[0], &(&s2 * cx(0.0, 1.0))) < 1e-15);
        assert!(dist(&v.multigrading[0], &(&s1 * cx(0.0, 1.0))) < 1e-15);
        assert!(dist(&v.gamma, &s3) < 1e-15);
        assert!(dist(&v.symbol(&[2]), &(&s2 * cx(4.0 * PI, 0.0))) < 1e-12);
        let w = theta_w_block(3);
        assert!(dist(&mul(&dagger(&w), &w), &eye(28)) < 1e-14);
    }

    #[test]
    fn scalar_base_spectrum() {
        let ct = build_crossed_triple(&scalar_base()).unwrap();
        let ev = eigvalsh(&ct.triple.d.data);
        let mut expect: Vec<f64> = (-3..=3).flat_map(|n| [2.0 * PI * n as f64, -2.0 * PI * n as f64]).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_torus_factorisation() {
        for theta in [0.0, golden()] {
            let cfg = torus_theta(theta, 3, 4);
            let ct = build_crossed_triple(&cfg).unwrap();
            assert!(ct.vertical_identity <= 1e-12);
            assert!(ct.horizontal_identity <= 1e-12);
            let t = &ct.triple;
            assert!(t.vertical_residuals().unwrap().max() <= 1e-12);
            let z = canonical_remainder(t).unwrap();
            assert!(norm_bound(&z.data) <= 1e-12);
            let rep = factorization_check(t, &z, &ct.principal_blocks(None), 1e-10).unwrap();
            assert!(rep.geodesic);
            assert!(rep.anticommutator <= 1e-10 && rep.square <= 1e-10, "{rep:?}");
            let dv = vertical_dirac(t).unwrap();
            assert!(crate::triple::vertical_derivation_residual(t, &dv).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn perturbed_factorisation_and_geodesy() {
        let cfg = torus_theta(golden(), 3, 6);
        let ct = build_crossed_triple(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = RandomGaugeData::sample(&cfg, &mut rng).unwrap();
        let f = gauge_potential(&cfg, &data.omega, &data.m_op).unwrap();
        let t = ct.perturbed(&f).unwrap();
        let z = t.graded(CMat::zeros(t.dim(), t.dim()));
        // D^G = Gamma (x) (D0 + M), so the connection is Gamma (x) omega(k).
        let rep = factorization_check(&t, &z, &ct.principal_blocks(Some(&data.omega)), 1e-9).unwrap();
        assert!(rep.horizontal <= 1e-9);
        assert!(rep.geodesic);
        assert!(rep.anticommutator <= 1e-9);
    }

    #[test]
    fn trivial_action_gives_block_constant_dh() {
        let cfg = torus_theta(0.0, 2, 3);
        let ct = build_crossed_triple(&cfg).unwrap();
        let dv = vertical_dirac(&ct.triple).unwrap();
        let dh = &ct.triple.d.data - &dv.data;
        let bd = ct.block_dim;
        let first = compress(&dh, &(0..bd).collect::<Vec<_>>());
        for b in 1..ct.lattice.len() {
            let blk = compress(&dh, &(b * bd..(b + 1) * bd).collect::<Vec<_>>());
            assert_eq!(dist(&blk, &first), 0.0);
        }
    }

    #[test]
    fn tau_shift() {
        let cfg = torus_theta(golden(), 8, 6);
        for s in [0.0, 0.5, 1.0, 2.0] {
            assert!(tau_shift_residual(&cfg, s).unwrap() <= 1e-9);
        }
        let cfg = torus_theta(golden(), 8, 24);
        for k in [1, 2] {
            assert!(gauge_shift_residual(&cfg, k).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn equivariance_trivial_and_shift() {
        let cfg = torus_theta(golden(), 4, 12);
        let n = cfg.base.dim();
        let zero = Cocycle::new(&cfg, vec![CMat::zeros(n, n)]).unwrap();
        let triv = UnitaryCocycle::trivial(&cfg);
        let rep = equivariance_check(&cfg, &zero, &CMat::zeros(n, n), &triv, &eye(n), |_| 0).unwrap();
        assert_eq!(rep.literal, 0.0);
        let ups = upsilon_k(&cfg, 1).unwrap();
        let rep = equivariance_check(&cfg, &zero, &CMat::zeros(n, n), &ups, &eye(n), |k| k[0].abs() + 1).unwrap();
        assert!(rep.literal <= 1e-10, "{rep:?}");
    }

    #[test]
    fn equivariance_random_needs_w_term() {
        let cfg = torus_theta(golden(), 8, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut saw_nonconstant = false;
        for _ in 0..6 {
            let d = RandomGaugeData::sample(&cfg, &mut rng).unwrap();
            let rep = equivariance_check(&cfg, &d.omega, &d.m_op, &d.upsilon, &d.w, |k| d.margin(k)).unwrap();
            assert!(rep.corrected <= 1e-9, "{rep:?}");
            if d.r == 0 {
                assert!(rep.literal <= 1e-9);
            } else {
                saw_nonconstant = true;
                // w[D0, w*] = -2 pi r sigma_2 is missing on the right
                assert!((rep.literal - 2.0 * PI * d.r.abs() as f64).abs() < 1e-6, "{rep:?}");
            }
        }
        assert!(saw_nonconstant);
    }

    #[test]
    fn cocycle_growth_and_membership() {
        let cfg = torus_theta(golden(), 8, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let d = RandomGaugeData::sample(&cfg, &mut rng).unwrap();
            let (c, excess) = d.omega.growth(&cfg);
            assert!(c > 0.0 && excess <= 0.0, "{excess}");
            assert!(d.omega.identity_residual(&cfg) <= 1e-10);
            assert!(omega1_residual(&cfg, &d.omega.values[3], 2).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn coboundary_is_bounded() {
        let cfg = torus_theta(golden(), 5, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let [_, s2, _] = pauli();
        let xi = kron(&s2, &toeplitz(10, &random_real_trig(&mut rng)));
        let cb = Cocycle::coboundary(&cfg, &xi).unwrap();
        let bound = 2.0 * op_norm(&xi);
        assert!(cb.values.iter().all(|x| op_norm(x) <= bound + 1e-12));
    }

    #[test]
    fn non_commutant_rejected() {
        let cfg = torus_theta(golden(), 2, 8);
        let n = cfg.base.dim();
        let zero = Cocycle::new(&cfg, vec![CMat::zeros(n, n)]).unwrap();
        let [s1, _, _] = pauli();
        let bad = kron(&s1, &eye(17));
        assert!(matches!(gauge_potential(&cfg, &zero, &bad), Err(Error::NotCommutant(_))));
    }

    #[test]
    fn gauge_unitary_preserves_vertical_dirac() {
        let cfg = torus_theta(golden(), 3, 10);
        let ct = build_crossed_triple(&cfg).unwrap();
        let ups = upsilon_k(&cfg, 1).unwrap();
        let u = gauge_unitary(&cfg, &ups, &eye(cfg.base.dim())).unwrap().dense();
        let dv = vertical_dirac(&ct.triple).unwrap().data;
        assert_eq!(norm_bound(&comm(&u, &dv)), 0.0);
    }

    #[test]
    fn frame_connection_z2() {
        let z = Z2Fibration::new(5, &[1.0, 0.7, 1.3, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = frame_connection_report(&z, 6, &mut rng).unwrap();
        assert!(rep.leibniz <= 1e-9 && rep.hermitian <= 1e-9 && rep.frame_independence <= 1e-9, "{rep:?}");
        // nabla(delta b) = delta (x) [T, b]
        let b = z.random_base(&mut rng);
        let d = z.h0_dim();
        let db = mul(&z.delta(), &z.element(&b, &CMat::zeros(d, d)));
        let fc = FrameConnection { frame: z.standard_frame(), embed: z.embed() };
        let lhs = fc.apply(&comm(&z.horizontal(), &db));
        let rhs = mul(&mul(&z.delta(), &z.embed()), &comm(&z.t, &b));
        assert!(dist(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn trivial_frame() {
        let z = Z2Fibration::new(3, &[1.0]);
        let d = z.h0_dim();
        let fc = FrameConnection { frame: vec![eye(d)], embed: eye(d) };
        let b = z.base(&[cx(1.0, 0.0), cx(2.0, 0.5), cx(-1.0, 0.0)]);
        assert!(dist(&fc.apply(&comm(&z.t, &b)), &comm(&z.t, &b)) == 0.0);
    }

    #[test]
    fn not_a_frame() {
        let z = Z2Fibration::new(3, &[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = z.random_element(&mut rng);
        let r = FrameConnection::new(vec![eye(2 * z.h0_dim())], z.embed(), &[a], &[]);
        assert!(matches!(r, Err(Error::NotAFrame(_))));
    }
}
