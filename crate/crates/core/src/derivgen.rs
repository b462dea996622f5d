//! Generators `ℒ(a) = ½ Σ_j [H_j, [H_j, a]]` built from finite families of
//! anti-self-adjoint elements.
//!
//! The family has two gauge freedoms that leave `ℒ` unchanged: adding a
//! central element to any `H_j` (fixed by [`DerivationFamily::normalize_central`])
//! and mixing the `H_j` by a real orthogonal matrix (left free).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blockalg::{AlgebraElement, BlockStructure};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMatrix, C64};
use crate::superop::SuperOperator;

/// Maximum tolerated `‖H + H*‖` (entrywise, relative to `max(1, ‖H‖)`).
pub const ANTI_SELFADJOINT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DerivationFamily {
    structure: BlockStructure,
    generators: Vec<AlgebraElement>,
}

impl DerivationFamily {
    /// Validates `H_j* = −H_j` to [`ANTI_SELFADJOINT_TOL`] and stores the exact
    /// anti-self-adjoint parts `(H_j − H_j*)/2`.
    pub fn new(structure: BlockStructure, generators: Vec<AlgebraElement>) -> Result<Self> {
        let mut clean = Vec::with_capacity(generators.len());
        for (j, h) in generators.into_iter().enumerate() {
            structure.check(&h)?;
            let defect = h.antiselfadjointness_defect();
            if defect > ANTI_SELFADJOINT_TOL * h.operator_norm().max(1.0) {
                return Err(Error::Validation(format!(
                    "generator {j} is not anti-self-adjoint (‖H + H*‖ = {defect:e})"
                )));
            }
            clean.push((&h - &h.adjoint()).scale_real(0.5));
        }
        Ok(Self {
            structure,
            generators: clean,
        })
    }

    pub fn empty(structure: BlockStructure) -> Self {
        Self {
            structure,
            generators: Vec::new(),
        }
    }

    /// `J` independent draws of [`BlockStructure::random_antiselfadjoint_with`]
    /// from one ChaCha8 stream seeded with `seed`.
    pub fn random(structure: BlockStructure, members: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generators = (0..members)
            .map(|_| structure.random_antiselfadjoint_with(&mut rng))
            .collect();
        Self {
            structure,
            generators,
        }
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn generators(&self) -> &[AlgebraElement] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `ℒ(a) = ½ Σ_j [H_j, [H_j, a]]`.
    pub fn build(&self) -> SuperOperator {
        let gens = &self.generators;
        let s = self.structure.clone();
        SuperOperator::from_fn(self.structure.clone(), move |a| {
            let mut out = s.zero();
            for h in gens {
                out.axpy(C64::new(0.5, 0.0), &h.commutator(&h.commutator(a)));
            }
            out
        })
    }

    /// `Σ_j H_j²`.
    pub fn sum_of_squares(&self) -> AlgebraElement {
        self.generators
            .iter()
            .fold(self.structure.zero(), |acc, h| &acc + &(h * h))
    }

    /// The map `R: u ↦ Σ_j H_j u ⊗ e_j` as the vertical stack of the ambient
    /// block-diagonal matrices of `H_1, …, H_J` (shape `nJ × n`).
    pub fn r_operator(&self) -> CMatrix {
        let n = self.structure.ambient_dim();
        let mut r = CMatrix::zeros(n * self.generators.len(), n);
        for (j, h) in self.generators.iter().enumerate() {
            r.view_mut((j * n, 0), (n, n)).copy_from(&h.to_ambient());
        }
        r
    }

    /// `‖R‖²` and `‖Σ_j H_j²‖`.
    pub fn r_norm_identity(&self) -> (f64, f64) {
        let r = spectral_norm(&self.r_operator());
        (r * r, self.sum_of_squares().operator_norm())
    }

    /// `ℒ(a) = R*(a ⊗ 1)R − ½R*R a − ½ a R*R`, evaluated with the stacked
    /// matrix of [`Self::r_operator`].
    pub fn r_form_generator(&self) -> SuperOperator {
        let r = self.r_operator();
        let rs = r.adjoint();
        let rr = &rs * &r;
        let j = self.generators.len();
        let s = self.structure.clone();
        SuperOperator::from_fn(self.structure.clone(), move |a| {
            let am = a.to_ambient();
            let n = am.nrows();
            let mut amp = CMatrix::zeros(n * j, n * j);
            for k in 0..j {
                amp.view_mut((k * n, k * n), (n, n)).copy_from(&am);
            }
            let half = C64::new(0.5, 0.0);
            let m = &rs * amp * &r - (&rr * &am) * half - (&am * &rr) * half;
            s.from_ambient(&m, f64::INFINITY)
                .expect("shape by construction")
        })
    }

    /// Removes the central component `center_project(H_j)` from every member.
    pub fn normalize_central(&self) -> Self {
        let s = &self.structure;
        let generators = self
            .generators
            .iter()
            .map(|h| h - &s.embed_center(&s.center_project(h)))
            .collect();
        Self {
            structure: self.structure.clone(),
            generators,
        }
    }

    /// `H'_j = Σ_k O_jk H_k` for a real `J' × J` matrix `O`.
    pub fn mix(&self, o: &nalgebra::DMatrix<f64>) -> Result<Self> {
        if o.ncols() != self.generators.len() {
            return Err(Error::Shape(format!(
                "mixing matrix has {} columns for {} generators",
                o.ncols(),
                self.generators.len()
            )));
        }
        let generators = (0..o.nrows())
            .map(|r| {
                let mut acc = self.structure.zero();
                for (k, h) in self.generators.iter().enumerate() {
                    acc.axpy(C64::new(o[(r, k)], 0.0), h);
                }
                acc
            })
            .collect();
        Ok(Self {
            structure: self.structure.clone(),
            generators,
        })
    }

    /// Same generators over another weighting of the same blocks.
    pub fn with_structure(&self, structure: BlockStructure) -> Result<Self> {
        if structure.dims() != self.structure.dims() {
            return Err(Error::Shape("block dimensions differ".into()));
        }
        Ok(Self {
            structure,
            generators: self.generators.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{I, ZERO};
    use crate::superop::{check_ccp, check_conservative, check_symmetric, relation2_check};

    fn i_sigma_z() -> (BlockStructure, AlgebraElement) {
        let s = BlockStructure::factor(2).unwrap();
        let h = s
            .element(vec![CMatrix::from_row_slice(2, 2, &[I, ZERO, ZERO, -I])])
            .unwrap();
        (s, h)
    }

    #[test]
    fn empty_family_gives_zero_map() {
        let s = BlockStructure::unweighted(vec![2, 1]).unwrap();
        let l = DerivationFamily::empty(s.clone()).build();
        assert_eq!(l, SuperOperator::zero(s));
    }

    #[test]
    fn dephasing_from_i_sigma_z() {
        let (s, h) = i_sigma_z();
        let l = DerivationFamily::new(s.clone(), vec![h]).unwrap().build();
        let e12 = s.matrix_unit(0, 0, 1).unwrap();
        let e11 = s.matrix_unit(0, 0, 0).unwrap();
        assert!((&l.apply(&e12).unwrap() - &e12.scale_real(-2.0)).max_abs() < 1e-15);
        assert!(l.apply(&e11).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn central_generators_give_zero_map() {
        let s = BlockStructure::unweighted(vec![2, 3]).unwrap();
        let z = s.embed_center(&crate::blockalg::CenterElement {
            scalars: vec![I * 2.0, I * -0.5],
        });
        let l = DerivationFamily::new(s, vec![z]).unwrap().build();
        assert!(l.norm() < 1e-14);
    }

    #[test]
    fn rejects_non_antiselfadjoint() {
        let s = BlockStructure::factor(2).unwrap();
        assert!(matches!(
            DerivationFamily::new(s.clone(), vec![s.identity()]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn theorem_one_checks_on_a_random_family() {
        let s = BlockStructure::new(vec![2, 2], vec![1.0, 3.0]).unwrap();
        let l = DerivationFamily::random(s, 3, 11).build();
        for report in [
            check_conservative(&l, 1e-9),
            check_symmetric(&l, 1e-9),
            check_ccp(&l, 1e-9),
            relation2_check(&l, 1e-9),
        ] {
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn r_operator_examples() {
        let (s, h) = i_sigma_z();
        let f = DerivationFamily::new(s.clone(), vec![h]).unwrap();
        let (r2, sq) = f.r_norm_identity();
        assert!((r2 - 1.0).abs() < 1e-14 && (sq - 1.0).abs() < 1e-14);
        let e = DerivationFamily::empty(s);
        assert_eq!(e.r_norm_identity(), (0.0, 0.0));
        let g = f.mix(&nalgebra::DMatrix::from_element(1, 1, 3.0)).unwrap();
        assert!((g.r_norm_identity().0 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn r_form_reproduces_build() {
        let s = BlockStructure::unweighted(vec![3, 2]).unwrap();
        let f = DerivationFamily::random(s, 3, 5);
        let l = f.build();
        assert!(l.distance(&f.r_form_generator()).unwrap() <= 1e-10 * l.norm());
    }

    #[test]
    fn normalize_central_examples() {
        let (s, h) = i_sigma_z();
        let shifted = &h + &s.identity().scale(I);
        let f = DerivationFamily::new(s.clone(), vec![shifted]).unwrap();
        assert_eq!(f.normalize_central().generators()[0], h);
        let clean = DerivationFamily::new(s, vec![h]).unwrap();
        assert_eq!(clean.normalize_central(), clean);
    }
}
