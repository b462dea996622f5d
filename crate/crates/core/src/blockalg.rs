//! Finite-dimensional type-I algebras `⊕_k M_{n_k}` with a weighted trace.
//!
//! A [`BlockStructure`] fixes the block sizes `n_k` and trace weights `w_k`,
//! so that `τ(a) = Σ_k w_k Tr(a_k)`. Elements are stored block by block in
//! [`AlgebraElement`]. All inner products are `⟨a, b⟩ = τ(a* b)`.
//!
//! The orthonormal basis returned by [`BlockStructure::orthonormal_basis`]
//! lists the normalized central projections `P_k / √(w_k n_k)` first, then
//! for each block the traceless generalized Gell-Mann matrices (symmetric,
//! antisymmetric, diagonal) scaled by `1/√w_k`. Every basis element is
//! Hermitian, which the superoperator layer relies on.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMatrix, C64, I, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructure {
    dims: Vec<usize>,
    weights: Vec<f64>,
}

impl BlockStructure {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Structure("at least one block is required".into()));
        }
        if dims.len() != weights.len() {
            return Err(Error::Structure(format!(
                "{} block dimensions but {} weights",
                dims.len(),
                weights.len()
            )));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Structure(format!("block {k} has dimension 0")));
        }
        if let Some(k) = weights.iter().position(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::Structure(format!(
                "block {k} has non-positive trace weight {}",
                weights[k]
            )));
        }
        Ok(Self { dims, weights })
    }

    /// Blocks with unit trace weights.
    pub fn unweighted(dims: Vec<usize>) -> Result<Self> {
        let weights = vec![1.0; dims.len()];
        Self::new(dims, weights)
    }

    /// The full matrix algebra `M_n` with the standard trace.
    pub fn factor(n: usize) -> Result<Self> {
        Self::unweighted(vec![n])
    }

    /// Same blocks, different trace weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.dims.clone(), weights)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    /// `d = Σ_k n_k²`.
    pub fn algebra_dim(&self) -> usize {
        self.dims.iter().map(|n| n * n).sum()
    }

    /// `Σ_k n_k`, the size of the block-diagonal embedding.
    pub fn ambient_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Row offset of each block inside the ambient block-diagonal matrix.
    pub fn offsets(&self) -> Vec<usize> {
        self.dims
            .iter()
            .scan(0, |acc, &n| {
                let off = *acc;
                *acc += n;
                Some(off)
            })
            .collect()
    }

    pub fn is_factor(&self) -> bool {
        self.dims.len() == 1
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.dims.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.dims.iter().map(|&n| CMatrix::identity(n, n)).collect(),
        }
    }

    /// Matrix unit `E_ij` of block `k` (zero-based indices).
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> Result<AlgebraElement> {
        let n = *self
            .dims
            .get(block)
            .ok_or_else(|| Error::Shape(format!("block {block} out of range")))?;
        if i >= n || j >= n {
            return Err(Error::Shape(format!(
                "index ({i}, {j}) outside block {block} of size {n}"
            )));
        }
        let mut a = self.zero();
        a.blocks[block][(i, j)] = ONE;
        Ok(a)
    }

    /// Element supported in one block.
    pub fn embed_block(&self, block: usize, m: CMatrix) -> Result<AlgebraElement> {
        let n = *self
            .dims
            .get(block)
            .ok_or_else(|| Error::Shape(format!("block {block} out of range")))?;
        if m.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "block {block} expects {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut a = self.zero();
        a.blocks[block] = m;
        Ok(a)
    }

    /// Wraps blocks into an element after checking their shapes.
    pub fn element(&self, blocks: Vec<CMatrix>) -> Result<AlgebraElement> {
        let a = AlgebraElement { blocks };
        self.check(&a)?;
        Ok(a)
    }

    /// Splits a block-diagonal ambient matrix into blocks. Off-block entries
    /// must vanish.
    pub fn from_ambient(&self, m: &CMatrix, tol: f64) -> Result<AlgebraElement> {
        let n = self.ambient_dim();
        if m.shape() != (n, n) {
            return Err(Error::Shape(format!("expected {n}x{n} ambient matrix")));
        }
        let offsets = self.offsets();
        let mut inside = DMatrix::from_element(n, n, false);
        let mut blocks = Vec::with_capacity(self.dims.len());
        for (&off, &nk) in offsets.iter().zip(&self.dims) {
            blocks.push(m.view((off, off), (nk, nk)).into_owned());
            for i in off..off + nk {
                for j in off..off + nk {
                    inside[(i, j)] = true;
                }
            }
        }
        let leak = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !inside[(i, j)])
            .map(|(i, j)| m[(i, j)].norm())
            .fold(0.0, f64::max);
        if leak > tol {
            return Err(Error::Validation(format!(
                "matrix has off-block entries of size {leak:e}"
            )));
        }
        Ok(AlgebraElement { blocks })
    }

    pub fn check(&self, a: &AlgebraElement) -> Result<()> {
        if a.blocks.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "element has {} blocks, structure has {}",
                a.blocks.len(),
                self.dims.len()
            )));
        }
        for (k, (b, &n)) in a.blocks.iter().zip(&self.dims).enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::Shape(format!(
                    "block {k} is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(())
    }

    /// `τ(a) = Σ_k w_k Tr(a_k)`.
    pub fn trace(&self, a: &AlgebraElement) -> C64 {
        a.blocks
            .iter()
            .zip(&self.weights)
            .map(|(b, &w)| b.trace() * w)
            .sum()
    }

    /// `τ(a* b)`.
    pub fn hs_inner(&self, a: &AlgebraElement, b: &AlgebraElement) -> C64 {
        a.blocks
            .iter()
            .zip(&b.blocks)
            .zip(&self.weights)
            .map(|((x, y), &w)| x.dotc(y) * w)
            .sum()
    }

    /// `τ(a b)` without forming the product.
    pub fn trace_of_product(&self, a: &AlgebraElement, b: &AlgebraElement) -> C64 {
        a.blocks
            .iter()
            .zip(&b.blocks)
            .zip(&self.weights)
            .map(|((x, y), &w)| x.transpose().dot(y) * w)
            .sum()
    }

    pub fn hs_norm(&self, a: &AlgebraElement) -> f64 {
        self.hs_inner(a, a).re.max(0.0).sqrt()
    }

    pub fn orthonormal_basis(&self) -> Vec<AlgebraElement> {
        let mut basis = Vec::with_capacity(self.algebra_dim());
        for (k, (&n, &w)) in self.dims.iter().zip(&self.weights).enumerate() {
            let p = CMatrix::identity(n, n) * C64::new(1.0 / (w * n as f64).sqrt(), 0.0);
            basis.push(self.embed_block(k, p).expect("shape by construction"));
        }
        for (k, (&n, &w)) in self.dims.iter().zip(&self.weights).enumerate() {
            let scale = C64::new(1.0 / w.sqrt(), 0.0);
            for g in traceless_hermitian_basis(n) {
                basis.push(
                    self.embed_block(k, g * scale)
                        .expect("shape by construction"),
                );
            }
        }
        basis
    }

    /// Index range of the traceless basis elements of block `k` inside
    /// [`Self::orthonormal_basis`].
    pub fn block_basis_range(&self, block: usize) -> std::ops::Range<usize> {
        let k = self.dims.len();
        let start = k + self.dims[..block].iter().map(|n| n * n - 1).sum::<usize>();
        start..start + self.dims[block] * self.dims[block] - 1
    }

    /// Block owning basis element `alpha`.
    pub fn basis_block(&self, alpha: usize) -> usize {
        let k = self.dims.len();
        if alpha < k {
            return alpha;
        }
        let mut start = k;
        for (b, &n) in self.dims.iter().enumerate() {
            let len = n * n - 1;
            if alpha < start + len {
                return b;
            }
            start += len;
        }
        panic!("basis index {alpha} out of range");
    }

    /// Coordinates `c_α = ⟨G_α, a⟩` in the orthonormal basis.
    pub fn coords(&self, basis: &[AlgebraElement], a: &AlgebraElement) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_iterator(basis.len(), basis.iter().map(|g| self.hs_inner(g, a)))
    }

    pub fn from_coords(
        &self,
        basis: &[AlgebraElement],
        c: &nalgebra::DVector<C64>,
    ) -> AlgebraElement {
        let mut out = self.zero();
        for (g, &ca) in basis.iter().zip(c.iter()) {
            if ca != ZERO {
                out.axpy(ca, g);
            }
        }
        out
    }

    pub fn central_projections(&self) -> Vec<CenterElement> {
        (0..self.dims.len())
            .map(|k| {
                let mut scalars = vec![ZERO; self.dims.len()];
                scalars[k] = ONE;
                CenterElement { scalars }
            })
            .collect()
    }

    /// `z_k = Tr(a_k) / n_k`.
    pub fn center_project(&self, a: &AlgebraElement) -> CenterElement {
        CenterElement {
            scalars: a
                .blocks
                .iter()
                .zip(&self.dims)
                .map(|(b, &n)| b.trace() / n as f64)
                .collect(),
        }
    }

    pub fn embed_center(&self, z: &CenterElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .dims
                .iter()
                .zip(&z.scalars)
                .map(|(&n, &s)| CMatrix::identity(n, n) * s)
                .collect(),
        }
    }

    /// `max_α ‖[a, G_α]‖`, the distance of `a` from commuting with the algebra.
    pub fn centrality_defect(&self, a: &AlgebraElement) -> f64 {
        self.orthonormal_basis()
            .iter()
            .map(|g| a.commutator(g).operator_norm())
            .fold(0.0, f64::max)
    }

    pub fn is_central(&self, a: &AlgebraElement, tol: f64) -> bool {
        self.centrality_defect(a) <= tol
    }

    /// Random anti-self-adjoint element `H = (X − X*)/2` where the real and
    /// imaginary parts of every entry of `X` are independent standard normals,
    /// drawn block by block in row-major order from a ChaCha8 stream seeded
    /// with `seed`. `H* = −H` holds exactly.
    pub fn random_antiselfadjoint(&self, seed: u64) -> AlgebraElement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_antiselfadjoint_with(&mut rng)
    }

    pub fn random_antiselfadjoint_with<R: rand::Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> AlgebraElement {
        let x = self.random_element_with(rng);
        let blocks = x
            .blocks
            .iter()
            .map(|b| {
                CMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
                    (b[(i, j)] - b[(j, i)].conj()) * 0.5
                })
            })
            .collect();
        AlgebraElement { blocks }
    }

    /// Element with i.i.d. standard complex normal entries (unit variance per
    /// real component).
    pub fn random_element_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let mut blocks = Vec::with_capacity(self.dims.len());
        for &n in &self.dims {
            let mut b = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    b[(i, j)] = C64::new(re, im);
                }
            }
            blocks.push(b);
        }
        AlgebraElement { blocks }
    }

    pub fn random_selfadjoint_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let h = self.random_antiselfadjoint_with(rng);
        h.scale(-I)
    }
}

/// Frobenius-orthonormal Hermitian basis of the traceless part of `M_n`:
/// `(E_jk + E_kj)/√2` and `−i(E_jk − E_kj)/√2` for `j < k`, followed by the
/// diagonal elements `(Σ_{j<l} E_jj − l E_ll)/√(l(l+1))`.
pub fn traceless_hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for j in 0..n {
        for k in j + 1..n {
            let mut s = CMatrix::zeros(n, n);
            s[(j, k)] = r;
            s[(k, j)] = r;
            out.push(s);
            let mut a = CMatrix::zeros(n, n);
            a[(j, k)] = -I * r;
            a[(k, j)] = I * r;
            out.push(a);
        }
    }
    for l in 1..n {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut d = CMatrix::zeros(n, n);
        for j in 0..l {
            d[(j, j)] = C64::new(norm, 0.0);
        }
        d[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(d);
    }
    out
}

/// Frobenius-orthonormal Hermitian basis of `M_n` with `I/√n` first.
pub fn hermitian_block_basis(n: usize) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::identity(n, n) * C64::new(1.0 / (n as f64).sqrt(), 0.0)];
    out.extend(traceless_hermitian_basis(n));
    out
}

/// Block-diagonal complex matrix; the concrete element of the algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMatrix {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.shape() == b.shape())
    }

    fn shape_error(&self, other: &Self) -> Error {
        let dims = |a: &Self| a.blocks.iter().map(|b| b.nrows()).collect::<Vec<_>>();
        Error::Shape(format!("blocks {:?} vs {:?}", dims(self), dims(other)))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        Ok(self.zip_with(other, |a, b| a * b))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        Ok(self.zip_with(other, |a, b| a + b))
    }

    /// `ab − ba`.
    pub fn checked_commutator(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(self.shape_error(other));
        }
        Ok(self.commutator(other))
    }

    /// `ab − ba`; panics on mismatched shapes.
    pub fn commutator(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b - b * a)
    }

    /// `ab + ba`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b + b * a)
    }

    pub fn adjoint(&self) -> Self {
        self.map(|a| a.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|a| a * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self += c·x`.
    pub fn axpy(&mut self, c: C64, x: &Self) {
        assert!(self.same_shape(x), "{}", self.shape_error(x));
        for (a, b) in self.blocks.iter_mut().zip(&x.blocks) {
            a.zip_apply(b, |s, t| *s += c * t);
        }
    }

    /// Maximum over blocks of the spectral norm.
    pub fn operator_norm(&self) -> f64 {
        self.blocks.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn selfadjointness_defect(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    pub fn antiselfadjointness_defect(&self) -> f64 {
        (self + &self.adjoint()).max_abs()
    }

    /// Block-diagonal ambient matrix.
    pub fn to_ambient(&self) -> CMatrix {
        let n: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut m = CMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            m.view_mut((off, off), b.shape()).copy_from(b);
            off += b.nrows();
        }
        m
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        assert!(self.same_shape(other), "{}", self.shape_error(other));
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: Self) -> AlgebraElement {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.map(|a| -a)
    }
}

/// `⊕_k λ_k I_{n_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterElement {
    pub scalars: Vec<C64>,
}

impl CenterElement {
    pub fn max_abs(&self) -> f64 {
        self.scalars.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m2() -> BlockStructure {
        BlockStructure::factor(2).unwrap()
    }

    fn el(s: &BlockStructure, rows: &[[f64; 2]; 2]) -> AlgebraElement {
        let m = CMatrix::from_fn(2, 2, |i, j| C64::new(rows[i][j], 0.0));
        s.element(vec![m]).unwrap()
    }

    #[test]
    fn structure_validation() {
        assert!(BlockStructure::new(vec![], vec![]).is_err());
        assert!(BlockStructure::new(vec![2, 0], vec![1.0, 1.0]).is_err());
        assert!(BlockStructure::new(vec![2], vec![0.0]).is_err());
        assert!(BlockStructure::new(vec![2], vec![1.0, 2.0]).is_err());
        let s = BlockStructure::unweighted(vec![3, 2, 2]).unwrap();
        assert_eq!(s.algebra_dim(), 17);
        assert_eq!(s.ambient_dim(), 7);
        assert_eq!(s.offsets(), vec![0, 3, 5]);
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let s = BlockStructure::unweighted(vec![3, 2]).unwrap();
        let a = s.random_element_with(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(s.identity().commutator(&a).max_abs(), 0.0);
    }

    #[test]
    fn adjoint_of_i_times_selfadjoint() {
        let s = m2();
        let h = el(&s, &[[1.0, 2.0], [2.0, -3.0]]);
        let ih = h.scale(I);
        assert_eq!(ih.adjoint(), h.scale(-I));
    }

    #[test]
    fn sigma_z_commutator_with_e12() {
        let s = m2();
        let z = el(&s, &[[1.0, 0.0], [0.0, -1.0]]);
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        assert_eq!(z.commutator(&e12), e12.scale_real(2.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = m2().identity();
        let b = BlockStructure::factor(3).unwrap().identity();
        assert!(matches!(a.checked_mul(&b), Err(Error::Shape(_))));
        assert!(matches!(a.checked_commutator(&b), Err(Error::Shape(_))));
        assert!(m2().element(vec![CMatrix::zeros(3, 3)]).is_err());
    }

    #[test]
    fn trace_examples() {
        let s = BlockStructure::unweighted(vec![2, 3]).unwrap();
        assert_eq!(s.trace(&s.identity()), C64::new(5.0, 0.0));
        let e12 = m2().matrix_unit(0, 0, 1).unwrap();
        assert_eq!(m2().trace(&e12), ZERO);
        let w = BlockStructure::new(vec![1, 1], vec![2.0, 3.0]).unwrap();
        assert_eq!(w.trace(&w.identity()), C64::new(5.0, 0.0));
    }

    #[test]
    fn hs_inner_examples() {
        let s = m2();
        let e11 = s.matrix_unit(0, 0, 0).unwrap();
        let e22 = s.matrix_unit(0, 1, 1).unwrap();
        assert_eq!(s.hs_inner(&e11, &e22), ZERO);
        let w = BlockStructure::new(vec![2, 1], vec![2.5, 1.0]).unwrap();
        let e12 = w.matrix_unit(0, 0, 1).unwrap();
        assert_eq!(w.hs_inner(&e12, &e12), C64::new(2.5, 0.0));
    }

    #[test]
    fn basis_is_orthonormal_with_central_projections_first() {
        let s = BlockStructure::new(vec![3, 1, 2], vec![1.0, 0.5, 4.0]).unwrap();
        let basis = s.orthonormal_basis();
        assert_eq!(basis.len(), s.algebra_dim());
        for (a, ga) in basis.iter().enumerate() {
            for (b, gb) in basis.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s.hs_inner(ga, gb).re, expect, epsilon = 1e-14);
                assert_abs_diff_eq!(s.hs_inner(ga, gb).im, 0.0, epsilon = 1e-14);
            }
            assert_eq!(ga.selfadjointness_defect(), 0.0);
            if a >= s.num_blocks() {
                assert!(s.trace(ga).norm() < 1e-15);
            }
        }
        assert!(basis[..3].iter().all(|z| s.is_central(z, 1e-14)));
        assert_eq!(s.block_basis_range(2), 11..14);
        assert_eq!(s.basis_block(12), 2);
        assert_eq!(s.basis_block(3), 0);
    }

    #[test]
    fn m2_basis_contains_pauli_directions() {
        let s = m2();
        let basis = s.orthonormal_basis();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sz = el(&s, &[[r, 0.0], [0.0, -r]]);
        let id = el(&s, &[[r, 0.0], [0.0, r]]);
        assert_eq!(basis.len(), 4);
        assert!((&basis[0] - &id).max_abs() < 1e-15);
        assert!(basis.iter().any(|g| (g - &sz).max_abs() < 1e-15));
    }

    #[test]
    fn abelian_basis() {
        let s = BlockStructure::new(vec![1, 1], vec![4.0, 9.0]).unwrap();
        let basis = s.orthonormal_basis();
        assert_eq!(basis.len(), 2);
        assert_abs_diff_eq!(basis[0].block(0)[(0, 0)].re, 0.5);
        assert_abs_diff_eq!(basis[1].block(1)[(0, 0)].re, 1.0 / 3.0);
    }

    #[test]
    fn center_examples() {
        let s = BlockStructure::unweighted(vec![2, 3]).unwrap();
        let sum = s
            .central_projections()
            .iter()
            .map(|p| s.embed_center(p))
            .fold(s.zero(), |acc, p| &acc + &p);
        assert_eq!(sum, s.identity());
        let traceless = s.orthonormal_basis()[4].clone();
        assert!(s.center_project(&traceless).max_abs() < 1e-15);
        let z = el(&m2(), &[[1.0, 0.0], [0.0, -1.0]]);
        assert!(!m2().is_central(&z, 1e-9));
    }

    #[test]
    fn norms() {
        let s = m2();
        assert_abs_diff_eq!(s.identity().operator_norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            el(&s, &[[3.0, 0.0], [0.0, -1.0]]).operator_norm(),
            3.0,
            epsilon = 1e-14
        );
        let h = BlockStructure::unweighted(vec![3, 2])
            .unwrap()
            .random_antiselfadjoint(7);
        assert_eq!((&h + &h.adjoint()).max_abs(), 0.0);
        assert_eq!(
            h,
            BlockStructure::unweighted(vec![3, 2])
                .unwrap()
                .random_antiselfadjoint(7)
        );
    }

    #[test]
    fn ambient_round_trip() {
        let s = BlockStructure::unweighted(vec![2, 1]).unwrap();
        let a = s.random_element_with(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(s.from_ambient(&a.to_ambient(), 0.0).unwrap(), a);
        let mut m = a.to_ambient();
        m[(0, 2)] = ONE;
        assert!(s.from_ambient(&m, 1e-12).is_err());
    }
}
