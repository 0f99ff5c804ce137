//! Rieffel star products on finitely supported Fourier series over T^N, the
//! Connes–Landi representation L_Theta, and isospectral deformation of
//! T^N-equivariant triples.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::crossprod::{build_crossed_triple, theta_w_spinor, torus_theta};
use crate::error::{Error, Result};
use crate::group::{torus_indices, GroupModel, ModuleLayout};
use crate::numerics::{cx, dagger, diag, eye, kron, mul, norm_bound, op_norm, pauli, tensor_mask, CMat, GradedMatrix, RMat, C64};
use crate::triple::{flat_torus_dirac, Generator, GroupAction, TripleInstance};

/// Finitely supported map Z^N -> b x b complex matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierElement {
    pub n: usize,
    pub block: usize,
    pub coeffs: BTreeMap<Vec<i64>, CMat>,
}

/// <x, Theta y>.
fn pairing(x: &[i64], theta: &RMat, y: &[i64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            s += x[i] as f64 * theta[(i, j)] * y[j] as f64;
        }
    }
    s
}

fn phase(t: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * t)
}

impl FourierElement {
    pub fn zero(n: usize, block: usize) -> FourierElement {
        FourierElement { n, block, coeffs: BTreeMap::new() }
    }

    /// Scalar character e_x.
    pub fn character(x: &[i64]) -> FourierElement {
        FourierElement::from_scalars(x.len(), &[(x.to_vec(), cx(1.0, 0.0))])
    }

    pub fn from_scalars(n: usize, terms: &[(Vec<i64>, C64)]) -> FourierElement {
        let mut a = FourierElement::zero(n, 1);
        for (x, c) in terms {
            a.add_term(x, &CMat::from_element(1, 1, *c));
        }
        a
    }

    pub fn add_term(&mut self, x: &[i64], c: &CMat) {
        let e = self.coeffs.entry(x.to_vec()).or_insert_with(|| CMat::zeros(c.nrows(), c.ncols()));
        *e += c;
    }

    /// `terms` distinct modes in {-radius..radius}^n with coefficients whose
    /// real and imaginary parts are uniform in [-1, 1].
    pub fn random<R: Rng>(rng: &mut R, n: usize, block: usize, radius: i64, terms: usize) -> FourierElement {
        let mut a = FourierElement::zero(n, block);
        while a.coeffs.len() < terms {
            let x: Vec<i64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
            let c = CMat::from_fn(block, block, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            a.coeffs.insert(x, c);
        }
        a
    }

    pub fn get(&self, x: &[i64]) -> CMat {
        self.coeffs.get(x).cloned().unwrap_or_else(|| CMat::zeros(self.block, self.block))
    }

    /// Undeformed adjoint: a*(x) = a(-x)^*.
    pub fn adjoint(&self) -> FourierElement {
        let coeffs = self.coeffs.iter().map(|(x, c)| (x.iter().map(|v| -v).collect(), dagger(c))).collect();
        FourierElement { n: self.n, block: self.block, coeffs }
    }

    /// Largest coefficient entry difference over the union of supports.
    pub fn dist(&self, other: &FourierElement) -> f64 {
        let mut r: f64 = 0.0;
        for x in self.coeffs.keys().chain(other.coeffs.keys()) {
            r = r.max((self.get(x) - other.get(x)).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        r
    }

    /// Modes with a nonzero coefficient.
    pub fn support(&self) -> Vec<Vec<i64>> {
        self.coeffs.iter().filter(|(_, c)| c.iter().any(|z| *z != cx(0.0, 0.0))).map(|(x, _)| x.clone()).collect()
    }

    /// Largest |x|_inf over the support.
    pub fn radius(&self) -> i64 {
        self.coeffs.keys().flat_map(|x| x.iter().map(|v| v.abs())).max().unwrap_or(0)
    }
}

fn check_theta(n: usize, theta: &RMat) -> Result<()> {
    if theta.nrows() != n || theta.ncols() != n {
        return Err(Error::ShapeMismatch(format!("Theta is {}x{} for N = {n}", theta.nrows(), theta.ncols())));
    }
    Ok(())
}

/// (a *_Theta b)(z) = sum_y exp(-2 pi i <z - y, Theta y>) a(z - y) b(y).
pub fn star_product(a: &FourierElement, b: &FourierElement, theta: &RMat) -> Result<FourierElement> {
    if a.n != b.n || a.block != b.block {
        return Err(Error::ShapeMismatch(format!(
            "N = {} with block {} against N = {} with block {}",
            a.n, a.block, b.n, b.block
        )));
    }
    check_theta(a.n, theta)?;
    let mut out = FourierElement::zero(a.n, a.block);
    for (x, ax) in &a.coeffs {
        for (y, by) in &b.coeffs {
            let z: Vec<i64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
            out.add_term(&z, &(mul(ax, by) * phase(-pairing(x, theta, y))));
        }
    }
    Ok(out)
}

/// a^{*_Theta}(x) = exp(-2 pi i <x, Theta x>) a(-x)^*.
pub fn star_involution(a: &FourierElement, theta: &RMat) -> Result<FourierElement> {
    check_theta(a.n, theta)?;
    let mut out = FourierElement::zero(a.n, a.block);
    for (x, c) in &a.coeffs {
        let mx: Vec<i64> = x.iter().map(|v| -v).collect();
        out.add_term(&mx, &(dagger(c) * phase(-pairing(&mx, theta, &mx))));
    }
    Ok(out)
}

/// H = C^spin (x) C^block (x) l^2({-radius..radius}^n) with the translation
/// representation of C(T^n) and the weight of each basis vector given by its
/// lattice point.
#[derive(Clone, Debug)]
pub struct FourierModule {
    pub n: usize,
    pub radius: i64,
    pub block: usize,
    pub spin_mask: Vec<bool>,
}

impl FourierModule {
    pub fn lattice(&self) -> Vec<Vec<i64>> {
        torus_indices(self.n, self.radius)
    }

    pub fn dim(&self) -> usize {
        self.spin_mask.len() * self.block * self.lattice().len()
    }

    pub fn weights(&self) -> Vec<Vec<i64>> {
        let lat = self.lattice();
        (0..self.spin_mask.len() * self.block).flat_map(|_| lat.iter().cloned()).collect()
    }

    pub fn parity_mask(&self) -> Vec<bool> {
        tensor_mask(&self.spin_mask, &vec![false; self.block * self.lattice().len()])
    }

    /// Truncated translation T_x: e_p -> e_{p + x}, times V_t = exp(2 pi i <p, t>)
    /// on the right.
    fn mode(&self, x: &[i64], t: &[f64]) -> CMat {
        let lat = self.lattice();
        let idx: BTreeMap<&Vec<i64>, usize> = lat.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut m = CMat::zeros(lat.len(), lat.len());
        for (c, p) in lat.iter().enumerate() {
            let q: Vec<i64> = p.iter().zip(x).map(|(a, b)| a + b).collect();
            if let Some(&r) = idx.get(&q) {
                let arg: f64 = p.iter().zip(t).map(|(a, b)| *a as f64 * b).sum();
                m[(r, c)] = phase(arg);
            }
        }
        m
    }

    fn represent(&self, a: &FourierElement, theta: Option<&RMat>) -> Result<CMat> {
        if a.n != self.n || a.block != self.block {
            return Err(Error::ShapeMismatch(format!("element over Z^{} with block {} on module over Z^{} with block {}", a.n, a.block, self.n, self.block)));
        }
        let nl = self.lattice().len();
        let mut out = CMat::zeros(self.block * nl, self.block * nl);
        for (x, c) in &a.coeffs {
            // V_{-Theta^T x}
            let t: Vec<f64> = match theta {
                Some(th) => {
                    check_theta(self.n, th)?;
                    (0..self.n).map(|i| -(0..self.n).map(|j| th[(j, i)] * x[j] as f64).sum::<f64>()).collect()
                }
                None => vec![0.0; self.n],
            };
            out += kron(c, &self.mode(x, &t));
        }
        Ok(kron(&eye(self.spin_mask.len()), &out))
    }

    pub fn undeformed(&self, a: &FourierElement) -> Result<GradedMatrix> {
        Ok(GradedMatrix { data: self.represent(a, None)?, parity_mask: self.parity_mask(), multigrade: 0 })
    }
}

/// L_Theta(a) = sum_x a(x) pi(e_x) V_{-Theta^T x}.
pub fn deformed_rep(a: &FourierElement, module: &FourierModule, theta: &RMat) -> Result<GradedMatrix> {
    Ok(GradedMatrix { data: module.represent(a, Some(theta))?, parity_mask: module.parity_mask(), multigrade: 0 })
}

/// Applies L_Theta to an operator given its weight decomposition: the entry
/// from weight p to weight p + x picks up exp(-2 pi i <p, Theta^T x>).
pub fn deform_operator(a: &CMat, weights: &[Vec<i64>], theta: &RMat) -> Result<CMat> {
    if weights.len() != a.nrows() || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!("{} weights for a {}x{} operator", weights.len(), a.nrows(), a.ncols())));
    }
    if let Some(w) = weights.first() {
        check_theta(w.len(), theta)?;
    }
    Ok(CMat::from_fn(a.nrows(), a.ncols(), |r, c| {
        let x: Vec<i64> = weights[r].iter().zip(&weights[c]).map(|(p, q)| p - q).collect();
        // <p, Theta^T x> = <x, Theta p>
        a[(r, c)] * phase(-pairing(&x, theta, &weights[c]))
    }))
}

/// Largest entry of `a` connecting different weights.
pub fn weight_leakage(a: &CMat, weights: &[Vec<i64>]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if weights[i] != weights[j] {
                r = r.max(a[(i, j)].norm());
            }
        }
    }
    r
}

fn triple_weights(t: &TripleInstance) -> Result<&[Vec<i64>]> {
    match t.action.as_ref().map(|a| &a.layout) {
        Some(ModuleLayout::Torus { labels }) => Ok(labels),
        _ => Err(Error::WeightMetadataMissing),
    }
}

/// Same H and D; generators and their derivations replaced by L_Theta of
/// themselves. Vertical geometry and remainder carry over unchanged.
pub fn deform_triple(t: &TripleInstance, theta: &RMat) -> Result<TripleInstance> {
    let weights = triple_weights(t)?;
    let leak = weight_leakage(&t.d.data, weights);
    if leak > 1e-12 * norm_bound(&t.d.data).max(1.0) {
        return Err(Error::NotInvariant(format!("D connects different torus weights ({leak:.3e})")));
    }
    let mut out = t.clone();
    for g in &mut out.generators {
        g.op = deform_operator(&g.op, weights, theta)?;
        if let Some(der) = &mut g.derivation {
            for d in der.iter_mut() {
                *d = deform_operator(d, weights, theta)?;
            }
        }
    }
    Ok(out)
}

/// Max over generators and modes x of | ||[D, L(a_x)]|| - ||[D, a_x]|| |, with
/// a_x the weight-x piece of the generator.
pub fn homogeneous_commutator_defect(t: &TripleInstance, deformed: &TripleInstance) -> Result<f64> {
    let weights = triple_weights(t)?;
    let mut r: f64 = 0.0;
    for (g, h) in t.generators.iter().zip(&deformed.generators) {
        let mut modes: Vec<Vec<i64>> = Vec::new();
        for i in 0..g.op.nrows() {
            for j in 0..g.op.ncols() {
                if g.op[(i, j)].norm() > 0.0 {
                    let x: Vec<i64> = weights[i].iter().zip(&weights[j]).map(|(p, q)| p - q).collect();
                    if !modes.contains(&x) {
                        modes.push(x);
                    }
                }
            }
        }
        for x in modes {
            let piece = |a: &CMat| {
                CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
                    let y: Vec<i64> = weights[i].iter().zip(&weights[j]).map(|(p, q)| p - q).collect();
                    if y == x {
                        a[(i, j)]
                    } else {
                        cx(0.0, 0.0)
                    }
                })
            };
            let d = &t.d.data;
            let before = op_norm(&crate::numerics::comm(d, &piece(&g.op)));
            let after = op_norm(&crate::numerics::comm(d, &piece(&h.op)));
            r = r.max((before - after).abs());
        }
    }
    Ok(r)
}

/// Theta = -theta E_21 on T^2.
pub fn theta_t2(theta: f64) -> RMat {
    let mut m = RMat::zeros(2, 2);
    m[(1, 0)] = -theta;
    m
}

/// Flat T^2 spin triple on C^2 (x) l^2({-k..k}^2) with generators e_(1,0),
/// e_(0,1) and the T^2 weights recorded in the action.
pub fn flat_torus_triple(k: i64) -> Result<TripleInstance> {
    let mut t = flat_torus_dirac(k);
    let module = FourierModule { n: 2, radius: k, block: 1, spin_mask: vec![false, true] };
    let weights = module.weights();
    for (name, x) in [("u", [1, 0]), ("v", [0, 1])] {
        let op = module.undeformed(&FourierElement::character(&x))?.data;
        let der = (0..2).map(|i| &op * cx(0.0, 2.0 * PI * x[i] as f64)).collect();
        t.generators.push(Generator { name: name.into(), op, derivation: Some(der) });
    }
    let du = (0..2)
        .map(|i| diag(&weights.iter().map(|w| cx(0.0, 2.0 * PI * w[i] as f64)).collect::<Vec<_>>()))
        .collect();
    t.action = Some(GroupAction { group: GroupModel::torus(2, 1.0, k as u32), du, layout: ModuleLayout::Torus { labels: weights } });
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceReport {
    pub dirac: f64,
    pub u: f64,
    pub v: f64,
}

/// Compares the crossed-product triple for T^2_theta (lattice and base radius
/// k) with the deformed flat T^2 triple: after W and the reordering
/// (lattice, V, spinor, base) -> (V, spinor, lattice, base), D goes to
/// sigma_3 (x) D_flat, u to 1 (x) L(e_(0,1)) and lambda to 1 (x) L(e_(1,0)).
pub fn theta_torus_correspondence(theta: f64, k: i64) -> Result<CorrespondenceReport> {
    let ct = build_crossed_triple(&torus_theta(theta, k, k))?;
    let flat = deform_triple(&flat_torus_triple(k)?, &theta_t2(theta))?;
    let nk = (2 * k + 1) as usize;
    let n = 4 * nk * nk;
    let wt = kron(&eye(nk), &kron(&theta_w_spinor(), &eye(nk)));
    // (kk, a, s, nn) -> (a, s, kk, nn)
    let mut perm = CMat::zeros(n, n);
    for kk in 0..nk {
        for as_ in 0..4 {
            for nn in 0..nk {
                perm[((as_ * nk + kk) * nk + nn, (kk * 4 + as_) * nk + nn)] = cx(1.0, 0.0);
            }
        }
    }
    let w = mul(&perm, &wt);
    let wd = dagger(&w);
    let conj = |x: &CMat| mul(&mul(&w, x), &wd);
    let [_, _, s3] = pauli();
    let dirac = norm_bound(&(conj(&ct.triple.d.data) - kron(&s3, &flat.d.data)));
    let find = |t: &TripleInstance, name: &str| t.generators.iter().find(|g| g.name == name).map(|g| g.op.clone());
    let missing = || Error::ScenarioBuild("generator missing".into());
    let u = norm_bound(&(conj(&find(&ct.triple, "u").ok_or_else(missing)?) - kron(&eye(2), &find(&flat, "v").ok_or_else(missing)?)));
    let v = norm_bound(
        &(conj(&find(&ct.triple, "lambda_1").ok_or_else(missing)?) - kron(&eye(2), &find(&flat, "u").ok_or_else(missing)?)),
    );
    Ok(CorrespondenceReport { dirac, u, v })
}
