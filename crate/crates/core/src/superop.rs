//! Linear maps on the algebra and the generator-level checks.
//!
//! A [`SuperOperator`] is stored as the `d×d` matrix `M[α,β] = ⟨G_α, Λ(G_β)⟩`
//! over the Hermitian orthonormal basis of its [`BlockStructure`].
//!
//! Every check returns a [`CheckReport`] carrying the raw residual. The
//! pass threshold is `tol · scale` where `scale = max(1, ‖M‖₂)`.
//!
//! The center relation `∂(az, az) = z* ∂(a, a) z` for central `z` (the
//! `relation2` check) is tested in the polarized cross form
//!
//! ```text
//! ∂(G_α P_k, G_β P_l) = P_k ∂(G_α, G_β) P_l    for all α, β, k, l.
//! ```
//!
//! Both sides are sesquilinear in `(a, b)` and in `(z, z')`, so the cross
//! form on a basis and on the central projections implies
//! `∂(a z, b z') = z* ∂(a, b) z'` for all `a, b` and central `z, z'`, which
//! contains the relation at `b = a, z' = z`. Conversely the relation
//! polarizes in `a` to `∂(a z, b z) = z* ∂(a, b) z`, and with `z = P_k + λ P_l` the coefficient
//! of `λ` (separated from that of `λ̄` by using `λ = 1` and `λ = i`) gives
//! the cross term.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::blockalg::{AlgebraElement, BlockStructure};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenpair, spectral_norm, CMatrix, C64, I, ONE};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SuperOperator {
    structure: BlockStructure,
    basis: Arc<[AlgebraElement]>,
    matrix: CMatrix,
}

impl PartialEq for SuperOperator {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure && self.matrix == other.matrix
    }
}

impl SuperOperator {
    pub fn from_matrix(structure: BlockStructure, matrix: CMatrix) -> Result<Self> {
        let d = structure.algebra_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::Shape(format!(
                "superoperator matrix is {}x{}, algebra dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let basis = structure.orthonormal_basis().into();
        Ok(Self {
            structure,
            basis,
            matrix,
        })
    }

    /// Tabulates a linear map given by its action on elements.
    pub fn from_fn(
        structure: BlockStructure,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
    ) -> Self {
        let basis: Arc<[AlgebraElement]> = structure.orthonormal_basis().into();
        let d = basis.len();
        let mut matrix = CMatrix::zeros(d, d);
        for (b, g) in basis.iter().enumerate() {
            let image = f(g);
            for (a, ga) in basis.iter().enumerate() {
                matrix[(a, b)] = structure.hs_inner(ga, &image);
            }
        }
        Self {
            structure,
            basis,
            matrix,
        }
    }

    pub fn zero(structure: BlockStructure) -> Self {
        let d = structure.algebra_dim();
        Self::from_matrix(structure, CMatrix::zeros(d, d)).expect("square by construction")
    }

    pub fn identity(structure: BlockStructure) -> Self {
        let d = structure.algebra_dim();
        Self::from_matrix(structure, CMatrix::identity(d, d)).expect("square by construction")
    }

    /// `x ↦ i[H, x]` for self-adjoint `H`.
    pub fn from_hamiltonian(structure: BlockStructure, h: &AlgebraElement) -> Result<Self> {
        structure.check(h)?;
        let defect = h.selfadjointness_defect();
        if defect > DEFAULT_TOL * h.operator_norm().max(1.0) {
            return Err(Error::Validation(format!(
                "Hamiltonian is not self-adjoint (defect {defect:e})"
            )));
        }
        Ok(Self::from_fn(structure, |x| h.commutator(x).scale(I)))
    }

    /// `ψ(x) = Σ_j R_j* x R_j`.
    pub fn from_kraus(structure: BlockStructure, kraus: &[AlgebraElement]) -> Result<Self> {
        for r in kraus {
            structure.check(r)?;
        }
        let adjoints: Vec<_> = kraus.iter().map(AlgebraElement::adjoint).collect();
        Ok(Self::from_fn(structure.clone(), |x| {
            let mut out = structure.zero();
            for (r, rs) in kraus.iter().zip(&adjoints) {
                out.axpy(ONE, &(&(rs * x) * r));
            }
            out
        }))
    }

    /// `ℒ(a) = ψ(a) + k a + a k + i[H, a]` with `ψ` given by Kraus operators.
    pub fn gkls(
        structure: BlockStructure,
        kraus: &[AlgebraElement],
        k: &AlgebraElement,
        h: &AlgebraElement,
    ) -> Result<Self> {
        structure.check(k)?;
        let defect = k.selfadjointness_defect();
        if defect > DEFAULT_TOL * k.operator_norm().max(1.0) {
            return Err(Error::Validation(format!(
                "k is not self-adjoint (defect {defect:e})"
            )));
        }
        let psi = Self::from_kraus(structure.clone(), kraus)?;
        let ham = Self::from_hamiltonian(structure.clone(), h)?;
        let anti = Self::from_fn(structure, |x| k.anticommutator(x));
        Ok(&(&psi + &anti) + &ham)
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.structure.check(a)?;
        Ok(self.apply_unchecked(a))
    }

    pub(crate) fn apply_unchecked(&self, a: &AlgebraElement) -> AlgebraElement {
        let c = self.structure.coords(&self.basis, a);
        self.structure.from_coords(&self.basis, &(&self.matrix * c))
    }

    /// Image of basis element `β`.
    pub fn apply_basis(&self, beta: usize) -> AlgebraElement {
        self.structure
            .from_coords(&self.basis, &self.matrix.column(beta).into_owned())
    }

    /// `∂(x, y) = ℒ(x* y) − ℒ(x*) y − x* ℒ(y)`.
    pub fn dissipation(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        self.structure.check(x)?;
        self.structure.check(y)?;
        let xs = x.adjoint();
        let lxy = self.apply_unchecked(&(&xs * y));
        let lxs = self.apply_unchecked(&xs);
        let ly = self.apply_unchecked(y);
        Ok(&(&lxy - &(&lxs * y)) - &(&xs * &ly))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_structure(other)?;
        Ok(self.with_matrix(&self.matrix * &other.matrix))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.with_matrix(&self.matrix * C64::new(c, 0.0))
    }

    /// Spectral norm of the matrix, i.e. the norm as a map on `L²(τ)`.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// `max(1, ‖M‖₂)`, the factor applied to check tolerances.
    pub fn tolerance_scale(&self) -> f64 {
        self.norm().max(1.0)
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_structure(other)?;
        Ok(spectral_norm(&(&self.matrix - &other.matrix)))
    }

    /// `T_t = exp(tℒ)` by Padé scaling and squaring.
    pub fn exp_semigroup(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "semigroup time must be finite and >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(Self::identity(self.structure.clone()));
        }
        Ok(self.with_matrix((&self.matrix * C64::new(t, 0.0)).exp()))
    }

    /// Same map expressed over `structure` (same blocks, possibly other
    /// weights).
    pub fn reexpress(&self, structure: BlockStructure) -> Result<Self> {
        if structure.dims() != self.structure.dims() {
            return Err(Error::Shape("block dimensions differ".into()));
        }
        let src = self.clone();
        Ok(Self::from_fn(structure, move |x| src.apply_unchecked(x)))
    }

    fn with_matrix(&self, matrix: CMatrix) -> Self {
        Self {
            structure: self.structure.clone(),
            basis: Arc::clone(&self.basis),
            matrix,
        }
    }

    fn same_structure(&self, other: &Self) -> Result<()> {
        if self.structure != other.structure {
            return Err(Error::Shape(
                "superoperators act on different structures".into(),
            ));
        }
        Ok(())
    }
}

impl std::ops::Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: Self) -> SuperOperator {
        self.same_structure(rhs)
            .expect("superoperator structures differ");
        self.with_matrix(&self.matrix + &rhs.matrix)
    }
}

impl std::ops::Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: Self) -> SuperOperator {
        self.same_structure(rhs)
            .expect("superoperator structures differ");
        self.with_matrix(&self.matrix - &rhs.matrix)
    }
}

/// Elements realizing a maximal violation.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub description: String,
    pub elements: Vec<AlgebraElement>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub witness: Option<Witness>,
}

impl CheckReport {
    /// Builds a report with `passed = residual <= tol·scale`; the witness is
    /// kept only for failures.
    pub fn new(name: &str, residual: f64, scale: f64, tol: f64, witness: Option<Witness>) -> Self {
        let tolerance = tol * scale;
        let passed = residual <= tolerance;
        Self {
            name: name.to_string(),
            residual,
            scale,
            tolerance,
            passed,
            witness: if passed { None } else { witness },
        }
    }

    /// `residual / scale`.
    pub fn normalized(&self) -> f64 {
        self.residual / self.scale
    }
}

pub fn check_conservative(l: &SuperOperator, tol: f64) -> CheckReport {
    let one = l.structure.identity();
    let image = l.apply_unchecked(&one);
    let residual = image.operator_norm();
    let witness = Witness {
        description: "L(1)".into(),
        elements: vec![image],
    };
    CheckReport::new(
        "conservative",
        residual,
        l.tolerance_scale(),
        tol,
        Some(witness),
    )
}

/// `max_{α,β} |τ(ℒ(G_α) G_β) − τ(G_α ℒ(G_β))|`.
pub fn check_symmetric(l: &SuperOperator, tol: f64) -> CheckReport {
    let s = &l.structure;
    let images: Vec<_> = (0..l.dim()).map(|b| l.apply_basis(b)).collect();
    let mut worst = (0.0, 0, 0);
    for (a, ga) in l.basis.iter().enumerate() {
        for (b, gb) in l.basis.iter().enumerate() {
            let lhs = s.trace_of_product(&images[a], gb);
            let rhs = s.trace_of_product(ga, &images[b]);
            let r = (lhs - rhs).norm();
            if r > worst.0 {
                worst = (r, a, b);
            }
        }
    }
    let (residual, a, b) = worst;
    let witness = Witness {
        description: format!("basis pair ({a}, {b})"),
        elements: vec![l.basis[a].clone(), l.basis[b].clone()],
    };
    CheckReport::new(
        "symmetric",
        residual,
        l.tolerance_scale(),
        tol,
        Some(witness),
    )
}

fn embed_kernel(kernel: &mut CMatrix, a: usize, b: usize, n: usize, block: &AlgebraElement) {
    let m = block.to_ambient();
    kernel.view_mut((a * n, b * n), (n, n)).copy_from(&m);
}

/// PSD test for a kernel of operator blocks; the residual also covers a
/// failure of the kernel to be Hermitian.
fn kernel_report(
    name: &str,
    kernel: &CMatrix,
    basis: &[AlgebraElement],
    n: usize,
    scale: f64,
    tol: f64,
) -> (CheckReport, f64) {
    let asym = spectral_norm(&(kernel - kernel.adjoint())) * 0.5;
    let (lam_min, v) = min_eigenpair(kernel);
    let residual = (-lam_min).max(0.0).max(asym);
    let dominant = (0..basis.len())
        .max_by(|&x, &y| {
            let nx: f64 = (0..n).map(|i| v[x * n + i].norm_sqr()).sum();
            let ny: f64 = (0..n).map(|i| v[y * n + i].norm_sqr()).sum();
            nx.total_cmp(&ny)
        })
        .unwrap_or(0);
    let witness = basis.get(dominant).map(|g| Witness {
        description: format!("min eigenvalue {lam_min:e}, dominant basis element {dominant}"),
        elements: vec![g.clone()],
    });
    (
        CheckReport::new(name, residual, scale, tol, witness),
        lam_min,
    )
}

/// Conditional complete positivity as positivity of the kernel
/// `[∂(G_α, G_β)]` of ambient operator blocks.
pub fn check_ccp(l: &SuperOperator, tol: f64) -> CheckReport {
    ccp_with_eigenvalue(l, tol).0
}

/// [`check_ccp`] together with the smallest kernel eigenvalue.
pub fn ccp_with_eigenvalue(l: &SuperOperator, tol: f64) -> (CheckReport, f64) {
    let s = &l.structure;
    let n = s.ambient_dim();
    let d = l.dim();
    let images: Vec<_> = (0..d).map(|b| l.apply_basis(b)).collect();
    let mut kernel = CMatrix::zeros(d * n, d * n);
    for a in 0..d {
        // basis elements are Hermitian, so G_α* = G_α and ℒ(G_α*) = ℒ(G_α)
        let ga = &l.basis[a];
        for b in 0..d {
            let gb = &l.basis[b];
            let lxy = l.apply_unchecked(&(ga * gb));
            let dis = &(&lxy - &(&images[a] * gb)) - &(ga * &images[b]);
            embed_kernel(&mut kernel, a, b, n, &dis);
        }
    }
    kernel_report("ccp", &kernel, &l.basis, n, l.tolerance_scale(), tol)
}

/// Complete positivity of a map `T` via the kernel `[T(G_α* G_β)]`.
pub fn check_cp_map(t: &SuperOperator, tol: f64) -> CheckReport {
    let s = &t.structure;
    let n = s.ambient_dim();
    let d = t.dim();
    let mut kernel = CMatrix::zeros(d * n, d * n);
    for a in 0..d {
        let gas = t.basis[a].adjoint();
        for b in 0..d {
            let img = t.apply_unchecked(&(&gas * &t.basis[b]));
            embed_kernel(&mut kernel, a, b, n, &img);
        }
    }
    kernel_report("cp_map", &kernel, &t.basis, n, t.tolerance_scale(), tol).0
}

/// The center relation in polarized cross form; see the module docs.
pub fn relation2_check(l: &SuperOperator, tol: f64) -> CheckReport {
    let s = &l.structure;
    let d = l.dim();
    let projections: Vec<_> = s
        .central_projections()
        .iter()
        .map(|p| s.embed_center(p))
        .collect();
    let images: Vec<_> = (0..d).map(|b| l.apply_basis(b)).collect();
    // G_α P_k is Hermitian (commuting Hermitian factors), so ℒ(x*) = ℒ(x).
    let dis = |x: &AlgebraElement, lx: &AlgebraElement, y: &AlgebraElement, ly: &AlgebraElement| {
        let lxy = l.apply_unchecked(&(x * y));
        &(&lxy - &(lx * y)) - &(x * ly)
    };
    // Cross pairs k ≠ l come first so that ties report a mixed witness.
    let k_count = projections.len();
    let pairs = (0..k_count)
        .flat_map(|k| (0..k_count).map(move |l| (k, l)))
        .filter(|(k, l)| k != l)
        .chain((0..k_count).map(|k| (k, k)));
    let mut worst = (0.0_f64, None);
    for (k, lidx) in pairs {
        let (pk, pl) = (&projections[k], &projections[lidx]);
        for a in 0..d {
            let ga = &l.basis[a];
            let gak = ga * pk;
            let lgak = l.apply_unchecked(&gak);
            for b in 0..d {
                let gb = &l.basis[b];
                let gbl = gb * pl;
                let lgbl = l.apply_unchecked(&gbl);
                let lhs = dis(&gak, &lgak, &gbl, &lgbl);
                let base = dis(ga, &images[a], gb, &images[b]);
                let rhs = &(pk * &base) * pl;
                let r = (&lhs - &rhs).operator_norm();
                if r > worst.0 {
                    worst = (
                        r,
                        Some(Witness {
                            description: format!(
                                "basis pair ({a}, {b}) with central projections (P_{}, P_{})",
                                k + 1,
                                lidx + 1
                            ),
                            elements: vec![gak.clone(), gbl.clone()],
                        }),
                    );
                }
            }
        }
    }
    CheckReport::new("relation2", worst.0, l.tolerance_scale(), tol, worst.1)
}

/// `max_α |τ(ψ(G_α)) − τ(G_α ψ(1))|`.
pub fn trace_identity_residual(psi: &SuperOperator) -> f64 {
    let s = &psi.structure;
    let psi_one = psi.apply_unchecked(&s.identity());
    (0..psi.dim())
        .map(|a| {
            (s.trace(&psi.apply_basis(a)) - s.trace_of_product(&psi.basis[a], &psi_one)).norm()
        })
        .fold(0.0, f64::max)
}

/// Per-block transpose `x ↦ xᵀ`, the standard positive but not completely
/// positive map.
pub fn transpose_map(structure: BlockStructure) -> SuperOperator {
    let s = structure.clone();
    SuperOperator::from_fn(structure, move |x| {
        s.element(x.blocks().iter().map(|b| b.transpose()).collect())
            .expect("shape preserved")
    })
}

/// Classical Markov generator `(ℒf)_i = Σ_j Q_ij f_j` on the abelian algebra
/// with `dims = (1, …, 1)`.
pub fn markov_generator(structure: BlockStructure, q: &DMatrix<f64>) -> Result<SuperOperator> {
    let k = structure.num_blocks();
    if structure.dims().iter().any(|&n| n != 1) || q.shape() != (k, k) {
        return Err(Error::Shape(
            "Markov generator needs an abelian structure matching Q".into(),
        ));
    }
    let s = structure.clone();
    let q = q.clone();
    Ok(SuperOperator::from_fn(structure, move |f| {
        let blocks = (0..k)
            .map(|i| {
                let v: C64 = (0..k).map(|j| f.block(j)[(0, 0)] * q[(i, j)]).sum();
                CMatrix::from_element(1, 1, v)
            })
            .collect();
        s.element(blocks).expect("1x1 blocks")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivgen::DerivationFamily;

    fn m2() -> BlockStructure {
        BlockStructure::factor(2).unwrap()
    }

    fn diag(s: &BlockStructure, a: f64, b: f64) -> AlgebraElement {
        s.element(vec![CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            vec![C64::new(a, 0.0), C64::new(b, 0.0)],
        ))])
        .unwrap()
    }

    fn dephasing() -> SuperOperator {
        let s = m2();
        let h = diag(&s, 1.0, -1.0).scale(I);
        DerivationFamily::new(s, vec![h]).unwrap().build()
    }

    fn markov() -> SuperOperator {
        let s = BlockStructure::unweighted(vec![1, 1]).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        markov_generator(s, &q).unwrap()
    }

    #[test]
    fn apply_reconstructs_basis_columns() {
        let s = BlockStructure::new(vec![2, 1], vec![1.0, 2.5]).unwrap();
        let l = DerivationFamily::random(s.clone(), 2, 4).build();
        for b in 0..l.dim() {
            let img = l.apply(&l.basis()[b]).unwrap();
            let col = s.coords(l.basis(), &img);
            assert!((col - l.matrix().column(b)).norm() < 1e-12);
        }
        let x = s.random_antiselfadjoint(9);
        assert_eq!(
            SuperOperator::zero(s.clone()).apply(&x).unwrap().max_abs(),
            0.0
        );
        assert!((&SuperOperator::identity(s).apply(&x).unwrap() - &x).max_abs() < 1e-14);
    }

    #[test]
    fn apply_rejects_foreign_elements() {
        let l = dephasing();
        let other = BlockStructure::factor(3).unwrap().identity();
        assert!(matches!(l.apply(&other), Err(Error::Shape(_))));
    }

    #[test]
    fn dephasing_on_e12() {
        let s = m2();
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        let out = dephasing().apply(&e12).unwrap();
        assert!((&out - &e12.scale_real(-2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_examples() {
        let s = m2();
        assert!(
            SuperOperator::from_hamiltonian(s.clone(), &s.identity())
                .unwrap()
                .norm()
                < 1e-15
        );
        let h = diag(&s, 1.0, -1.0);
        let l = SuperOperator::from_hamiltonian(s.clone(), &h).unwrap();
        assert!(l.apply(&h).unwrap().max_abs() < 1e-15);
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        assert!((&l.apply(&e12).unwrap() - &e12.scale(I * 2.0)).max_abs() < 1e-14);
        assert!(matches!(
            SuperOperator::from_hamiltonian(s.clone(), &s.identity().scale(I)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn kraus_examples() {
        let s = m2();
        let id = SuperOperator::from_kraus(s.clone(), &[s.identity()]).unwrap();
        assert!(id.distance(&SuperOperator::identity(s.clone())).unwrap() < 1e-14);
        let z = diag(&s, 1.0, -1.0);
        let psi = SuperOperator::from_kraus(s.clone(), &[z]).unwrap();
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        assert!((&psi.apply(&e12).unwrap() + &e12).max_abs() < 1e-14);

        let ws = BlockStructure::new(vec![2, 2], vec![1.0, 4.0]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let kraus: Vec<_> = (0..3).map(|_| ws.random_element_with(&mut rng)).collect();
        let psi = SuperOperator::from_kraus(ws.clone(), &kraus).unwrap();
        assert!(check_cp_map(&psi, 1e-9).passed);

        // τ(ψ(a)) = τ(a Σ R R*), which matches τ(a ψ(1)) once Σ R R* = Σ R* R.
        let hermitian: Vec<_> = (0..3)
            .map(|_| ws.random_selfadjoint_with(&mut rng))
            .collect();
        let psi = SuperOperator::from_kraus(ws, &hermitian).unwrap();
        assert!(trace_identity_residual(&psi) <= 1e-10 * psi.tolerance_scale());
        // R = E_12: τ(ψ(σ_z/√2)) = 1/√2 but τ(σ_z ψ(1))/√2 = −1/√2
        let damping = SuperOperator::from_kraus(s.clone(), &[e12]).unwrap();
        assert!((trace_identity_residual(&damping) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn gkls_examples() {
        let s = m2();
        let z = diag(&s, 1.0, -1.0);
        let k = s.identity().scale_real(-0.5);
        let l = SuperOperator::gkls(s.clone(), std::slice::from_ref(&z), &k, &s.zero()).unwrap();
        assert!(l.distance(&dephasing()).unwrap() < 1e-14);
        assert!(l.apply(&s.identity()).unwrap().max_abs() < 1e-15);

        let h = diag(&s, 0.3, -0.7);
        let pure = SuperOperator::gkls(s.clone(), &[], &s.zero(), &h).unwrap();
        let ham = SuperOperator::from_hamiltonian(s.clone(), &h).unwrap();
        assert!(pure.distance(&ham).unwrap() < 1e-15);

        let not_conservative = SuperOperator::gkls(s.clone(), &[z], &s.zero(), &s.zero()).unwrap();
        assert!(!check_conservative(&not_conservative, 1e-9).passed);
        assert!(check_conservative(&SuperOperator::zero(s), 1e-9).passed);
    }

    #[test]
    fn dissipation_examples() {
        let s = m2();
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        let e22 = s.matrix_unit(0, 1, 1).unwrap();
        let dis = dephasing().dissipation(&e12, &e12).unwrap();
        assert!((&dis - &e22.scale_real(4.0)).max_abs() < 1e-14);

        let ham = SuperOperator::from_hamiltonian(s.clone(), &diag(&s, 2.0, 0.5)).unwrap();
        let e21 = s.matrix_unit(0, 1, 0).unwrap();
        assert!(ham.dissipation(&e12, &e21).unwrap().max_abs() < 1e-14);
        assert!(
            dephasing()
                .dissipation(&s.identity(), &e12)
                .unwrap()
                .max_abs()
                < 1e-14
        );
    }

    #[test]
    fn symmetry_examples() {
        let s = m2();
        assert!(check_symmetric(&dephasing(), 1e-9).passed);
        let ham = SuperOperator::from_hamiltonian(s.clone(), &diag(&s, 1.0, -1.0)).unwrap();
        let report = check_symmetric(&ham, 1e-9);
        assert!(!report.passed);
        assert_eq!(report.witness.unwrap().elements.len(), 2);
        assert!(check_symmetric(&markov(), 1e-9).passed);
    }

    #[test]
    fn ccp_examples() {
        let s = m2();
        assert!(check_ccp(&dephasing(), 1e-9).passed);
        assert!(!check_ccp(&dephasing().scale(-1.0), 1e-9).passed);
        let ham = SuperOperator::from_hamiltonian(s.clone(), &diag(&s, 1.0, -1.0)).unwrap();
        let (report, lam) = ccp_with_eigenvalue(&ham, 1e-9);
        assert!(report.passed && lam.abs() < 1e-12);
    }

    #[test]
    fn relation2_examples() {
        let s = BlockStructure::factor(3).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let kraus: Vec<_> = (0..2).map(|_| s.random_element_with(&mut rng)).collect();
        let k = s.random_selfadjoint_with(&mut rng);
        let h = s.random_selfadjoint_with(&mut rng);
        let l = SuperOperator::gkls(s, &kraus, &k, &h).unwrap();
        assert!(relation2_check(&l, 1e-9).passed);

        let report = relation2_check(&markov(), 1e-9);
        assert!(!report.passed);
        assert!((report.residual - 1.0).abs() < 1e-12);
        assert!(report.witness.unwrap().description.contains("(P_1, P_2)"));

        let s22 = BlockStructure::unweighted(vec![2, 2]).unwrap();
        assert!(relation2_check(&DerivationFamily::random(s22, 2, 7).build(), 1e-9).passed);
    }

    #[test]
    fn semigroup_examples() {
        let s = m2();
        let l = dephasing();
        let t0 = l.exp_semigroup(0.0).unwrap();
        assert!(t0.distance(&SuperOperator::identity(s.clone())).unwrap() < 1e-15);
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0] {
            let tt = l.exp_semigroup(t).unwrap();
            let v = tt.apply(&e12).unwrap().block(0)[(0, 1)];
            assert!((v - C64::new((-2.0 * t).exp(), 0.0)).norm() < 1e-10);
            assert!((&tt.apply(&s.identity()).unwrap() - &s.identity()).max_abs() < 1e-12);
        }
        assert!(matches!(l.exp_semigroup(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn semigroup_law() {
        let s = BlockStructure::unweighted(vec![2, 2]).unwrap();
        let l = DerivationFamily::random(s, 2, 21).build();
        for (a, b) in [(0.3, 1.7), (2.0, 8.0), (10.0, 10.0)] {
            let lhs = l
                .exp_semigroup(a)
                .unwrap()
                .compose(&l.exp_semigroup(b).unwrap())
                .unwrap();
            assert!(lhs.distance(&l.exp_semigroup(a + b).unwrap()).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn cp_map_examples() {
        let s = m2();
        assert!(check_cp_map(&SuperOperator::identity(s.clone()), 1e-9).passed);
        assert!(check_cp_map(&dephasing().exp_semigroup(1.0).unwrap(), 1e-9).passed);
        let report = check_cp_map(&transpose_map(s), 1e-9);
        assert!(!report.passed);
        // The kernel of the transpose on M_2 is the swap operator, λ_min = −1.
        assert!((report.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_tolerance_is_scaled() {
        let r = CheckReport::new("x", 3.0, 4.0, 1.0, None);
        assert!(r.passed && r.tolerance == 4.0 && r.normalized() == 0.75);
        let w = Witness {
            description: "w".into(),
            elements: vec![],
        };
        assert!(CheckReport::new("x", 1.0, 1.0, 1e-9, Some(w.clone()))
            .witness
            .is_some());
        assert!(CheckReport::new("x", 0.0, 1.0, 1e-9, Some(w))
            .witness
            .is_none());
    }
}
