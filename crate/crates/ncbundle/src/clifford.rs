//! Complex Clifford algebras Cl_n and Cl(g*; rho) on spinor spaces.
//!
//! Metrics are Gram matrices G_ij = <eps^i, rho eps^j> in a fixed basis of
//! g*; generators satisfy c^i c^j + c^j c^i = -2 G_ij.

use crate::error::{Error, Result};
use crate::numerics::{
    anticomm, cx, dagger, eye, graded_tensor, max_abs, mul, pauli, sym_fn_pd, sym_inv, sym_sqrt,
    CMat, GradedMatrix, RMat, I, ZERO,
};

#[derive(Clone, Debug)]
pub struct CliffordModel {
    pub n: usize,
    pub generators: Vec<CMat>,
    pub metric: RMat,
    pub parity_mask: Vec<bool>,
    /// i^{k} e_1 ... e_{2k} of the ambient even algebra.
    pub chirality: CMat,
    /// For odd n, the generator of the ambient Cl_{n+1} left unused.
    pub spare: Option<CMat>,
}

impl CliffordModel {
    pub fn spinor_dim(&self) -> usize {
        self.parity_mask.len()
    }

    /// c(lambda) for a covector given by its coordinates.
    pub fn c(&self, lambda: &[f64]) -> CMat {
        let d = self.spinor_dim();
        let mut out = CMat::zeros(d, d);
        for (l, g) in lambda.iter().zip(&self.generators) {
            out += g * cx(*l, 0.0);
        }
        out
    }

    pub fn graded(&self, i: usize) -> GradedMatrix {
        GradedMatrix { data: self.generators[i].clone(), parity_mask: self.parity_mask.clone(), multigrade: 0 }
    }

    /// Max over i,j of |{c^i, c^j} + 2 G_ij|.
    pub fn relation_residual(&self) -> f64 {
        let d = self.spinor_dim();
        let mut r: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let ac = anticomm(&self.generators[i], &self.generators[j]);
                r = r.max(max_abs(&(ac + eye(d) * cx(2.0 * self.metric[(i, j)], 0.0))));
            }
        }
        r
    }

    /// Product e_S for the index set encoded by the bits of `mask`.
    pub fn monomial(&self, mask: usize) -> CMat {
        let mut out = eye(self.spinor_dim());
        for i in 0..self.n {
            if mask & (1 << i) != 0 {
                out = mul(&out, &self.generators[i]);
            }
        }
        out
    }

    /// Numerical rank of the Gram matrix of all 2^n monomials under the
    /// Hilbert-Schmidt pairing.
    pub fn monomial_rank(&self) -> usize {
        let count = 1usize << self.n;
        let mons: Vec<CMat> = (0..count).map(|s| self.monomial(s)).collect();
        let gram = CMat::from_fn(count, count, |a, b| {
            mons[a].iter().zip(mons[b].iter()).map(|(x, y)| x.conj() * y).sum()
        });
        let ev = crate::numerics::eigvalsh(&gram);
        let top = ev.last().copied().unwrap_or(0.0);
        ev.iter().filter(|&&l| l > 1e-9 * top).count()
    }
}

fn cl2() -> (Vec<CMat>, CMat) {
    let [s1, s2, _] = pauli();
    let e1 = &s1 * I;
    let e2 = &s2 * I;
    let gamma = mul(&e1, &e2) * I;
    (vec![e1, e2], gamma)
}

fn mask_of(gamma: &CMat) -> Vec<bool> {
    (0..gamma.nrows()).map(|i| gamma[(i, i)].re < 0.0).collect()
}

/// Irreducible graded spinor representation of Cl_n. Cl_{2k+2} is obtained
/// from Cl_{2k} by graded tensoring with Cl_2; odd n sits inside Cl_{n+1}.
pub fn spinor_rep(n: usize) -> CliffordModel {
    assert!(n >= 1, "spinor_rep needs n >= 1");
    let even_n = n + n % 2;
    let (mut gens, mut gamma) = cl2();
    let (base_gens, base_gamma) = cl2();
    let base_mask = mask_of(&base_gamma);
    while gens.len() < even_n {
        let mask = mask_of(&gamma);
        let one_l = GradedMatrix::identity(mask.clone());
        let one_r = GradedMatrix::identity(base_mask.clone());
        let mut next: Vec<CMat> = gens
            .iter()
            .map(|g| graded_tensor(&GradedMatrix { data: g.clone(), parity_mask: mask.clone(), multigrade: 0 }, &one_r).data)
            .collect();
        for b in &base_gens {
            let bg = GradedMatrix { data: b.clone(), parity_mask: base_mask.clone(), multigrade: 0 };
            next.push(graded_tensor(&one_l, &bg).data);
        }
        gens = next;
        gamma = crate::numerics::kron(&gamma, &base_gamma);
    }
    // i^{k} e_1 ... e_{2k}
    let k = even_n / 2;
    let mut chir = eye(gens[0].nrows());
    for g in &gens {
        chir = mul(&chir, g);
    }
    let chir = chir * I.powu(k as u32);
    debug_assert!(max_abs(&(&chir - &gamma)) < 1e-12);
    let spare = if n % 2 == 1 { gens.pop() } else { None };
    CliffordModel {
        n,
        generators: gens,
        metric: RMat::identity(n, n),
        parity_mask: mask_of(&chir),
        chirality: chir,
        spare,
    }
}

/// c_rho(eps^i) = sum_j (rho^{1/2})_{ij} c(eps^j). The new metric is
/// rho^{1/2} G0 rho^{1/2}, which is rho for a Euclidean base.
pub fn rescale_c0(rho: &RMat, base: &CliffordModel) -> Result<CliffordModel> {
    if rho.nrows() != base.n {
        return Err(Error::DimensionMismatch(format!(
            "metric of size {} for {} generators",
            rho.nrows(),
            base.n
        )));
    }
    let s = sym_sqrt(rho)?;
    let gens = (0..base.n)
        .map(|i| {
            let row: Vec<f64> = (0..base.n).map(|j| s[(i, j)]).collect();
            base.c(&row)
        })
        .collect();
    Ok(CliffordModel {
        n: base.n,
        generators: gens,
        metric: &s * &base.metric * &s,
        parity_mask: base.parity_mask.clone(),
        chirality: base.chirality.clone(),
        spare: base.spare.clone(),
    })
}

/// (sharp, flat): sharp maps covector coordinates to vector coordinates.
pub fn musical(rho: &RMat) -> Result<(RMat, RMat)> {
    let flat = sym_inv(rho)?;
    Ok((rho.clone(), flat))
}

/// Orbitwise volume det(sqrt(rho))^{-1}.
pub fn orbit_volume(rho: &RMat) -> Result<f64> {
    let s = sym_fn_pd(rho, |x| x.sqrt())?;
    Ok(1.0 / s.determinant())
}

/// Skew-adjointness residual max_i |c_i* + c_i|.
pub fn skew_residual(model: &CliffordModel) -> f64 {
    model.generators.iter().fold(0.0, |m, g| m.max(max_abs(&(dagger(g) + g))))
}

/// True when every generator is odd for the model's parity mask.
pub fn generators_odd(model: &CliffordModel) -> bool {
    model.generators.iter().all(|g| {
        (0..g.nrows()).all(|i| {
            (0..g.ncols()).all(|j| model.parity_mask[i] != model.parity_mask[j] || g[(i, j)] == ZERO)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dist, norm_bound};
    use std::f64::consts::PI;

    #[test]
    fn cl2_pauli_type() {
        let m = spinor_rep(2);
        assert_eq!(m.spinor_dim(), 2);
        assert!(m.relation_residual() <= 1e-12);
        let g = &m.chirality;
        assert!(dist(&mul(g, g), &eye(2)) < 1e-15);
        assert!(dist(&dagger(g), g) < 1e-15);
    }

    #[test]
    fn cl4_pairwise() {
        let m = spinor_rep(4);
        assert_eq!(m.spinor_dim(), 4);
        assert!(m.relation_residual() <= 1e-12);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!(max_abs(&anticomm(&m.generators[i], &m.generators[j])) <= 1e-12);
            }
        }
    }

    #[test]
    fn invariants_all_small_n() {
        for n in 1..=6 {
            let m = spinor_rep(n);
            assert_eq!(m.spinor_dim(), 1 << ((n + 1) / 2));
            assert!(m.relation_residual() <= 1e-12);
            assert_eq!(skew_residual(&m), 0.0);
            assert!(generators_odd(&m));
            assert_eq!(m.monomial_rank(), 1 << n);
            assert_eq!(m.spare.is_some(), n % 2 == 1);
            let g = &m.chirality;
            assert!(dist(&mul(g, g), &eye(m.spinor_dim())) < 1e-12);
        }
    }

    #[test]
    fn identity_rescale() {
        let base = spinor_rep(3);
        let r = rescale_c0(&RMat::identity(3, 3), &base).unwrap();
        for (a, b) in r.generators.iter().zip(&base.generators) {
            assert!(dist(a, b) < 1e-15);
        }
    }

    #[test]
    fn circle_rescale() {
        let ell: f64 = 1.7;
        let g = 4.0 * PI * PI / (ell * ell);
        let base = spinor_rep(1);
        let r = rescale_c0(&RMat::from_element(1, 1, g), &base).unwrap();
        let sq = mul(&r.generators[0], &r.generators[0]);
        assert!(dist(&sq, &(eye(2) * cx(-g, 0.0))) < 1e-12);
    }

    #[test]
    fn diagonal_rescale() {
        let rho = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0, 9.0]));
        let r = rescale_c0(&rho, &spinor_rep(3)).unwrap();
        let sq = mul(&r.generators[1], &r.generators[1]);
        assert!(dist(&sq, &(eye(4) * cx(-4.0, 0.0))) < 1e-12);
        assert!(r.relation_residual() < 1e-12);
    }

    #[test]
    fn rescale_random_covectors() {
        let rho = RMat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = rescale_c0(&rho, &spinor_rep(2)).unwrap();
        for lam in [[1.0, 0.0], [0.3, -1.2], [2.0, 0.7]] {
            let c = r.c(&lam);
            let q = lam[0] * lam[0] * 2.0 + 2.0 * lam[0] * lam[1] * 0.5 + lam[1] * lam[1];
            assert!(dist(&mul(&c, &c), &(eye(2) * cx(-q, 0.0))) < 1e-12);
        }
        let back = rescale_c0(&sym_inv(&rho).unwrap(), &r).unwrap();
        let base = spinor_rep(2);
        for (a, b) in back.generators.iter().zip(&base.generators) {
            assert!(dist(a, b) < 1e-12);
        }
    }

    #[test]
    fn rescale_composes_along_commuting_metrics() {
        // rho_t = exp(t log rho) for t = 1/2 and t = 1 commute.
        let rho2 = RMat::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let rho1 = sym_sqrt(&rho2).unwrap();
        let base = spinor_rep(2);
        let step = rescale_c0(&(&rho2 * sym_inv(&rho1).unwrap()), &rescale_c0(&rho1, &base).unwrap()).unwrap();
        let direct = rescale_c0(&rho2, &base).unwrap();
        for (a, b) in step.generators.iter().zip(&direct.generators) {
            assert!(dist(a, b) < 1e-12);
        }
    }

    #[test]
    fn not_positive_definite() {
        let bad = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(rescale_c0(&bad, &spinor_rep(2)), Err(Error::NotPositiveDefinite(_))));
        assert!(matches!(musical(&bad), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn musical_maps() {
        let (s, f) = musical(&RMat::identity(3, 3)).unwrap();
        assert_eq!(s, RMat::identity(3, 3));
        assert!((f - RMat::identity(3, 3)).abs().max() < 1e-15);

        let rho = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 5.0]));
        let (s, f) = musical(&rho).unwrap();
        assert!((&s * &f - RMat::identity(2, 2)).abs().max() < 1e-12);
        assert!((&f * &s - RMat::identity(2, 2)).abs().max() < 1e-12);
        assert!((f[(0, 0)] - 0.5).abs() < 1e-15 && (f[(1, 1)] - 0.2).abs() < 1e-15);

        // U(1): (d theta)^# = 4 pi^2 l^-2 d/dtheta and (d/dtheta)^b = l^2/(4 pi^2) d theta
        let ell: f64 = 0.8;
        let g = 4.0 * PI * PI / (ell * ell);
        let (s, f) = musical(&RMat::from_element(1, 1, g)).unwrap();
        assert!((s[(0, 0)] - g).abs() < 1e-12);
        assert!((f[(0, 0)] - ell * ell / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn orbit_volume_of_circle_is_length() {
        // det(sqrt(rho))^{-1} = (2 pi / l)^{-1} relative to d theta
        let ell: f64 = 2.5;
        let g = 4.0 * PI * PI / (ell * ell);
        let v = orbit_volume(&RMat::from_element(1, 1, g)).unwrap();
        assert!((v - ell / (2.0 * PI)).abs() < 1e-14);
        assert!(norm_bound(&spinor_rep(2).generators[0]) > 0.0);
    }
}
