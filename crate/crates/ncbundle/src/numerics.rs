//! Graded dense complex linear algebra.
//!
//! Everything is built on `nalgebra::DMatrix<Complex64>`. Products go through
//! [`mul`], which skips structural zeros; most operators in this crate are
//! Kronecker products of small blocks and are very sparse.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default relative tolerance for residual checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&DVector::from_column_slice(entries))
}

pub fn diag_real(entries: &[f64]) -> CMat {
    CMat::from_fn(entries.len(), entries.len(), |i, j| {
        if i == j {
            cx(entries[i], 0.0)
        } else {
            ZERO
        }
    })
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(|x| cx(x, 0.0))
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    a * s
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left factor major.
pub fn kron_all(factors: &[&CMat]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for f in factors {
        out = kron(&out, f);
    }
    out
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Matrix product that skips zero entries of both factors.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "mul: inner dimensions differ");
    let (n, k, m) = (a.nrows(), a.ncols(), b.ncols());
    let a_cols: Vec<Vec<(usize, C64)>> = (0..k)
        .map(|c| {
            a.column(c)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != ZERO)
                .map(|(r, v)| (r, *v))
                .collect()
        })
        .collect();
    let mut out = CMat::zeros(n, m);
    if n == 0 || m == 0 {
        return out;
    }
    let bs = b.as_slice();
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            let bcol = &bs[j * k..(j + 1) * k];
            for (kk, bv) in bcol.iter().enumerate() {
                if *bv == ZERO {
                    continue;
                }
                for &(r, av) in &a_cols[kk] {
                    col[r] += av * bv;
                }
            }
        });
    out
}

pub fn mul3(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    mul(&mul(a, b), c)
}

/// `u a u*`
pub fn conj(u: &CMat, a: &CMat) -> CMat {
    mul(&mul(u, a), &dagger(u))
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    mul(a, b) - mul(b, a)
}

pub fn anticomm(a: &CMat, b: &CMat) -> CMat {
    mul(a, b) + mul(b, a)
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Upper bound sqrt(||A||_1 ||A||_inf) for the operator norm. Cheap and
/// conservative, so it is what residual checks use.
pub fn norm_bound(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let col = (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let row = (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    (col * row).sqrt()
}

/// Exact operator norm from the spectrum of A*A.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ata = mul(&dagger(a), a);
    let ev = eigvalsh(&ata);
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn hermitian_residual(a: &CMat) -> f64 {
    norm_bound(&(a - dagger(a)))
}

/// `||A - B||` (norm bound).
pub fn dist(a: &CMat, b: &CMat) -> f64 {
    norm_bound(&(a - b))
}

fn hermitize(a: &CMat) -> CMat {
    (a + dagger(a)) * cx(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let se = hermitize(a).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return vec![];
    }
    let mut v: Vec<f64> = hermitize(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// exp(A) for skew-Hermitian A, via the spectrum of iA.
pub fn expm_skew(a: &CMat) -> CMat {
    let h = a * cx(0.0, -1.0);
    let (vals, v) = eigh(&h);
    let phases: Vec<C64> = vals.iter().map(|&l| C64::from_polar(1.0, l)).collect();
    mul(&mul(&v, &diag(&phases)), &dagger(&v))
}

/// f(M) for real symmetric M through its eigendecomposition. Fails if an
/// eigenvalue is not strictly positive.
pub fn sym_fn_pd(m: &RMat, f: impl Fn(f64) -> f64) -> Result<RMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::NotPositiveDefinite(f64::NAN));
    }
    let sym = (m + m.transpose()) * 0.5;
    let se = sym.symmetric_eigen();
    let min = se.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite(min));
    }
    let d = RMat::from_diagonal(&se.eigenvalues.map(f));
    Ok(&se.eigenvectors * d * se.eigenvectors.transpose())
}

pub fn sym_sqrt(m: &RMat) -> Result<RMat> {
    sym_fn_pd(m, f64::sqrt)
}

pub fn sym_inv(m: &RMat) -> Result<RMat> {
    sym_fn_pd(m, |x| 1.0 / x)
}

/// Inverse of a general square complex matrix.
pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::DimensionMismatch("singular matrix".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn from_odd(odd: bool) -> Self {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn add(self, other: Parity) -> Parity {
        Parity::from_odd(self.is_odd() ^ other.is_odd())
    }

    pub fn sign(self) -> f64 {
        if self.is_odd() {
            -1.0
        } else {
            1.0
        }
    }
}

/// A complex square matrix on a Z2-graded space. `parity_mask[i]` is true
/// when basis vector i is odd.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedMatrix {
    pub data: CMat,
    pub parity_mask: Vec<bool>,
    pub multigrade: usize,
}

impl GradedMatrix {
    pub fn new(data: CMat, parity_mask: Vec<bool>, multigrade: usize) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                data.nrows(),
                data.ncols()
            )));
        }
        if parity_mask.len() != data.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "parity mask of length {} for dimension {}",
                parity_mask.len(),
                data.nrows()
            )));
        }
        Ok(Self { data, parity_mask, multigrade })
    }

    /// Operator on a trivially graded (all even) space.
    pub fn ungraded(data: CMat) -> Self {
        let n = data.nrows();
        Self { data, parity_mask: vec![false; n], multigrade: 0 }
    }

    pub fn identity(parity_mask: Vec<bool>) -> Self {
        let n = parity_mask.len();
        Self { data: eye(n), parity_mask, multigrade: 0 }
    }

    /// Same grading, new data.
    pub fn like(&self, data: CMat) -> Self {
        assert_eq!(data.nrows(), self.dim());
        Self { data, parity_mask: self.parity_mask.clone(), multigrade: self.multigrade }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// The grading operator diag(+1 even, -1 odd).
    pub fn grading(&self) -> CMat {
        grading_operator(&self.parity_mask)
    }

    fn part(&self, odd: bool) -> CMat {
        let m = &self.parity_mask;
        CMat::from_fn(self.dim(), self.dim(), |i, j| {
            if (m[i] ^ m[j]) == odd {
                self.data[(i, j)]
            } else {
                ZERO
            }
        })
    }

    pub fn even_part(&self) -> GradedMatrix {
        self.like(self.part(false))
    }

    pub fn odd_part(&self) -> GradedMatrix {
        self.like(self.part(true))
    }

    /// Parity if the matrix is homogeneous up to `tol` (absolute, entrywise).
    pub fn parity_within(&self, tol: f64) -> Option<Parity> {
        let odd = max_abs(&self.part(true));
        let even = max_abs(&self.part(false));
        match (even <= tol, odd <= tol) {
            (true, true) => Some(Parity::Even),
            (false, true) => Some(Parity::Even),
            (true, false) => Some(Parity::Odd),
            (false, false) => None,
        }
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity_within(1e-13 * (1.0 + max_abs(&self.data)))
    }

    pub fn is_homogeneous(&self, p: Parity) -> bool {
        let tol = 1e-13 * (1.0 + max_abs(&self.data));
        max_abs(&self.part(!p.is_odd())) <= tol
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.data)
    }
}

pub fn grading_operator(mask: &[bool]) -> CMat {
    let e: Vec<f64> = mask.iter().map(|&o| if o { -1.0 } else { 1.0 }).collect();
    diag_real(&e)
}

/// Sorted spectrum with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// All eigenvectors as columns, in ascending eigenvalue order.
    pub eigenvectors: Option<CMat>,
}

impl Spectrum {
    /// Group sorted values into clusters whose neighbours differ by at most `gap`.
    pub fn from_sorted(values: &[f64], gap: f64) -> Spectrum {
        let mut eigenvalues = Vec::new();
        let mut multiplicities = Vec::new();
        let mut i = 0;
        while i < values.len() {
            let mut j = i + 1;
            while j < values.len() && values[j] - values[j - 1] <= gap {
                j += 1;
            }
            let mean = values[i..j].iter().sum::<f64>() / (j - i) as f64;
            eigenvalues.push(mean);
            multiplicities.push(j - i);
            i = j;
        }
        Spectrum { eigenvalues, multiplicities, eigenvectors: None }
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Eigenvalues repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&l, &m)| std::iter::repeat(l).take(m))
            .collect()
    }
}

pub fn herm_eig(a: &GradedMatrix, tol: f64) -> Result<Spectrum> {
    let scale = norm_bound(&a.data).max(1.0);
    let res = a.hermitian_residual();
    if res > tol * scale {
        return Err(Error::NotHermitian { residual: res, tol: tol * scale });
    }
    let (vals, vecs) = eigh(&a.data);
    let mut s = Spectrum::from_sorted(&vals, tol * scale);
    s.eigenvectors = Some(vecs);
    Ok(s)
}

/// Graded tensor product with Koszul sign (a (x) b)(x (x) y) = (-1)^{|b||x|} ax (x) by.
/// An inhomogeneous right factor is split into its even and odd parts.
pub fn graded_tensor(a: &GradedMatrix, b: &GradedMatrix) -> GradedMatrix {
    let gamma_a = a.grading();
    let b_even = b.even_part().data;
    let b_odd = b.odd_part().data;
    let data = kron(&a.data, &b_even) + kron(&mul(&a.data, &gamma_a), &b_odd);
    let mask = tensor_mask(&a.parity_mask, &b.parity_mask);
    GradedMatrix { data, parity_mask: mask, multigrade: a.multigrade + b.multigrade }
}

/// Parity mask of a tensor product space, left factor major.
pub fn tensor_mask(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x ^ y)).collect()
}

/// AB - (-1)^{|A||B|} BA, extended bilinearly to inhomogeneous arguments.
pub fn supercommutator(a: &GradedMatrix, b: &GradedMatrix) -> Result<GradedMatrix> {
    if a.dim() != b.dim() || a.parity_mask != b.parity_mask {
        return Err(Error::DimensionMismatch(format!(
            "supercommutator of {} and {} dimensional operators",
            a.dim(),
            b.dim()
        )));
    }
    let (ae, ao) = (a.even_part().data, a.odd_part().data);
    let (be, bo) = (b.even_part().data, b.odd_part().data);
    let data = comm(&ae, &be) + comm(&ae, &bo) + comm(&ao, &be) + anticomm(&ao, &bo);
    Ok(a.like(data))
}

/// Supercommutator of plain matrices of known parities.
pub fn scomm(a: &CMat, pa: Parity, b: &CMat, pb: Parity) -> CMat {
    if pa.is_odd() && pb.is_odd() {
        anticomm(a, b)
    } else {
        comm(a, b)
    }
}

pub fn pauli() -> [CMat; 3] {
    let s1 = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let s2 = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let s3 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [s1, s2, s3]
}

/// Restrict `a` to rows and columns whose index satisfies `keep`.
pub fn compress(a: &CMat, keep: &[usize]) -> CMat {
    CMat::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])])
}

/// `a` restricted to the columns in `cols`, all rows kept.
pub fn columns(a: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}
