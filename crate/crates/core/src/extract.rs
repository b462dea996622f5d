//! Recovery of a derivation family from a symmetric conservative generator.
//!
//! For each block `k` the generator restricted to `M_{n_k}` is expanded in
//! the two-sided basis `x ↦ G_α* x G_β`, where `{G_α}` is the Frobenius
//! orthonormal Hermitian basis of the block with `G_0 = I/√n_k`. With the
//! Choi matrix `C[(i,p),(j,q)] = ℒ(E_ij)[p,q]` the coefficients are
//!
//! ```text
//! c_αβ = Σ G_α[i,p] C[(i,p),(j,q)] conj(G_β[j,q]),
//! ```
//!
//! and the traceless corner `A = (c_αβ)_{α,β≥1}` is the Kossakowski matrix.
//! Writing `A = U diag(γ) U*` gives Kraus operators
//! `R_j = √γ_j Σ_β conj(U_βj) G_β`, traceless by construction, so that
//! `Σ_αβ A_αβ G_α* x G_β = Σ_j R_j* x R_j`. Each eigenvector is scaled so
//! that its largest entry is real and positive. The Frobenius basis makes
//! `γ` independent of the trace weights: the dephasing generator
//! `x ↦ σ_z x σ_z − x` has `γ = 2` and `R = σ_z`.
//!
//! The remainder `Δ = ℒ − Σ_j (R_j* · R_j − ½{R_j* R_j, ·})` is fitted by
//! `i[H, ·]` in least squares over traceless self-adjoint `H`. The maps
//! `x ↦ i[G_γ, x]` are mutually orthogonal with squared norm `2n` in the
//! Hilbert–Schmidt inner product on maps, so the normal equations are
//! diagonal and `H` is the traceless self-adjoint part of `−iY/(2n)` with
//! `Y = Y₁ − Y₂`, `Y₁[p,i] = Σ_j Δ(E_ij)[p,j]` and `Y₂[j,q] = Σ_i Δ(E_ij)[i,q]`.
//!
//! Symmetry forces `[H, x] = 0`, and a traceless central `H` vanishes; the
//! returned derivations are `½(R_j − R_j*)` and `(i/2)(R_j + R_j*)`.

use std::fmt;

use rayon::prelude::*;

use crate::blockalg::{hermitian_block_basis, AlgebraElement, BlockStructure};
use crate::derivgen::DerivationFamily;
use crate::linalg::{hermitian_eigh, spectral_norm, CMatrix, C64, I, ONE, ZERO};
use crate::superop::{
    check_ccp, check_conservative, check_symmetric, relation2_check, CheckReport, SuperOperator,
    Witness, DEFAULT_TOL,
};

/// Stage failures of [`Decomposer::decompose`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExtractError {
    /// One of the four generator checks failed.
    PreconditionFailed(CheckReport),
    /// The generator maps some block into another.
    BlockMixing(CheckReport),
    /// The Kossakowski matrix is not Hermitian positive semidefinite.
    NotCcp {
        block: usize,
        min_eigenvalue: f64,
        report: CheckReport,
    },
    /// The part left after removing the Kraus dissipator is not of the form
    /// `i[H, ·]`.
    ResidualNotHamiltonian(CheckReport),
    ResidualHamiltonianNotCentral(CheckReport),
    /// `Σ R_j x R_j* − Σ R_j* x R_j ≠ 2i[H, x]`.
    SymmetryIdentityFailed(CheckReport),
    RoundTripFailed(CheckReport),
}

impl ExtractError {
    pub fn report(&self) -> &CheckReport {
        match self {
            Self::PreconditionFailed(r)
            | Self::BlockMixing(r)
            | Self::ResidualNotHamiltonian(r)
            | Self::ResidualHamiltonianNotCentral(r)
            | Self::SymmetryIdentityFailed(r)
            | Self::RoundTripFailed(r) => r,
            Self::NotCcp { report, .. } => report,
        }
    }
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.report();
        match self {
            Self::PreconditionFailed(_) => write!(f, "precondition failed: {}", r.name)?,
            Self::BlockMixing(_) => write!(f, "generator mixes blocks")?,
            Self::NotCcp {
                block,
                min_eigenvalue,
                ..
            } => write!(
                f,
                "Kossakowski matrix of block {block} has eigenvalue {min_eigenvalue:e}"
            )?,
            Self::ResidualNotHamiltonian(_) => write!(f, "remainder is not a commutator")?,
            Self::ResidualHamiltonianNotCentral(_) => {
                write!(f, "residual Hamiltonian is not central")?
            }
            Self::SymmetryIdentityFailed(_) => write!(f, "Kraus symmetry identity violated")?,
            Self::RoundTripFailed(_) => write!(f, "round trip failed")?,
        }
        write!(
            f,
            " (residual {:e}, tolerance {:e})",
            r.residual, r.tolerance
        )
    }
}

impl std::error::Error for ExtractError {}

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    pub family: DerivationFamily,
    pub kraus: Vec<AlgebraElement>,
    /// Retained Kossakowski eigenvalues per block, descending.
    pub kossakowski_eigenvalues: Vec<Vec<f64>>,
    pub residual_hamiltonian: AlgebraElement,
    /// `‖ℒ − build(family)‖ / ‖ℒ‖` (absolute when `ℒ = 0`).
    pub roundtrip_residual: f64,
    pub reports: Vec<CheckReport>,
}

#[derive(Clone, Copy, Debug)]
pub struct Decomposer {
    pub tol: f64,
    /// Eigenvalues `γ ≤ rank_cutoff · γ_max` are discarded.
    pub rank_cutoff: f64,
    /// Run the four generator checks first. The CCP kernel has size
    /// `(d·n)²`, which is prohibitive for large single blocks; the pipeline's
    /// own Kossakowski positivity test still applies when this is off.
    pub check_preconditions: bool,
}

impl Default for Decomposer {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            rank_cutoff: 1e-12,
            check_preconditions: true,
        }
    }
}

/// [`Decomposer::decompose`] with default settings and tolerance `tol`.
pub fn decompose(l: &SuperOperator, tol: f64) -> Result<ExtractionResult, ExtractError> {
    Decomposer {
        tol,
        ..Decomposer::default()
    }
    .decompose(l)
}

struct BlockExtraction {
    kraus: Vec<CMatrix>,
    gammas: Vec<f64>,
    hamiltonian: CMatrix,
    hermiticity: f64,
    min_gamma: f64,
    ls_residual: f64,
    symmetry_residual: f64,
}

impl Decomposer {
    pub fn decompose(&self, l: &SuperOperator) -> Result<ExtractionResult, ExtractError> {
        let s = l.structure().clone();
        let scale = l.tolerance_scale();
        let tol = self.tol;
        let mut reports = Vec::new();

        if self.check_preconditions {
            for report in [
                check_conservative(l, tol),
                check_symmetric(l, tol),
                check_ccp(l, tol),
                relation2_check(l, tol),
            ] {
                if !report.passed {
                    return Err(ExtractError::PreconditionFailed(report));
                }
                reports.push(report);
            }
        }

        let mixing = block_mixing(l, tol);
        if !mixing.passed {
            return Err(ExtractError::BlockMixing(mixing));
        }
        reports.push(mixing);

        let blocks: Vec<BlockExtraction> = (0..s.num_blocks())
            .into_par_iter()
            .map(|k| self.extract_block(l, k))
            .collect();

        let hermiticity = blocks.iter().map(|b| b.hermiticity).fold(0.0, f64::max);
        let herm_report = CheckReport::new("kossakowski_hermitian", hermiticity, scale, tol, None);
        if !herm_report.passed {
            return Err(ExtractError::NotCcp {
                block: 0,
                min_eigenvalue: f64::NAN,
                report: herm_report,
            });
        }
        reports.push(herm_report);
        let (worst_block, min_gamma) = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| (k, b.min_gamma))
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
        let min_gamma = if min_gamma.is_finite() {
            min_gamma
        } else {
            0.0
        };
        let psd = CheckReport::new("kossakowski_psd", (-min_gamma).max(0.0), scale, tol, None);
        if !psd.passed {
            return Err(ExtractError::NotCcp {
                block: worst_block,
                min_eigenvalue: min_gamma,
                report: psd,
            });
        }
        reports.push(psd);

        let ls = blocks.iter().map(|b| b.ls_residual).fold(0.0, f64::max);
        let ls_report = CheckReport::new("hamiltonian_least_squares", ls, scale, tol, None);
        if !ls_report.passed {
            return Err(ExtractError::ResidualNotHamiltonian(ls_report));
        }
        reports.push(ls_report);

        let hamiltonian = s
            .element(blocks.iter().map(|b| b.hamiltonian.clone()).collect())
            .expect("block shapes by construction");
        let central = CheckReport::new(
            "residual_hamiltonian_central",
            s.centrality_defect(&hamiltonian),
            scale,
            tol,
            Some(Witness {
                description: "residual Hamiltonian".into(),
                elements: vec![hamiltonian.clone()],
            }),
        );
        if !central.passed {
            return Err(ExtractError::ResidualHamiltonianNotCentral(central));
        }
        reports.push(central);

        let sym = blocks
            .iter()
            .map(|b| b.symmetry_residual)
            .fold(0.0, f64::max);
        let sym_report = CheckReport::new("kraus_symmetry_identity", sym, scale, tol, None);
        if !sym_report.passed {
            return Err(ExtractError::SymmetryIdentityFailed(sym_report));
        }
        reports.push(sym_report);

        let mut kraus = Vec::new();
        let mut generators = Vec::new();
        for (k, b) in blocks.iter().enumerate() {
            for r in &b.kraus {
                let re = s.embed_block(k, r.clone()).expect("block shape");
                let rs = re.adjoint();
                let odd = (&re - &rs).scale_real(0.5);
                let even = (&re + &rs).scale(I * 0.5);
                for h in [odd, even] {
                    if h.operator_norm() > tol {
                        generators.push(h);
                    }
                }
                kraus.push(re);
            }
        }
        let family = DerivationFamily::new(s.clone(), generators)
            .expect("½(R − R*) and (i/2)(R + R*) are anti-self-adjoint");

        let rebuilt = family.build();
        let lnorm = l.norm();
        let diff = l.distance(&rebuilt).expect("same structure");
        let roundtrip_residual = if lnorm > 0.0 { diff / lnorm } else { diff };
        let rt = CheckReport::new("round_trip", roundtrip_residual, 1.0, tol, None);
        if !rt.passed {
            return Err(ExtractError::RoundTripFailed(rt));
        }
        reports.push(rt);

        Ok(ExtractionResult {
            family,
            kraus,
            kossakowski_eigenvalues: blocks.into_iter().map(|b| b.gammas).collect(),
            residual_hamiltonian: hamiltonian,
            roundtrip_residual,
            reports,
        })
    }

    fn extract_block(&self, l: &SuperOperator, k: usize) -> BlockExtraction {
        let s = l.structure();
        let n = s.dims()[k];
        let phi = |x: &CMatrix| -> CMatrix {
            let e = s.embed_block(k, x.clone()).expect("block shape");
            l.apply_unchecked(&e).block(k).clone()
        };
        let unit = |i: usize, j: usize| {
            let mut e = CMatrix::zeros(n, n);
            e[(i, j)] = ONE;
            e
        };
        let images: Vec<Vec<CMatrix>> = (0..n)
            .map(|i| (0..n).map(|j| phi(&unit(i, j))).collect())
            .collect();

        let kossakowski = kossakowski_matrix(&images);
        let hermiticity = spectral_norm(&(&kossakowski - kossakowski.adjoint())) * 0.5;
        let (values, vectors) = hermitian_eigh(&kossakowski);
        let min_gamma = values.first().copied().unwrap_or(0.0);
        let gamma_max = values.last().copied().unwrap_or(0.0).max(0.0);
        let basis = hermitian_block_basis(n);

        let mut kraus = Vec::new();
        let mut gammas = Vec::new();
        for j in (0..values.len()).rev() {
            let gamma = values[j];
            if gamma_max == 0.0 || gamma <= self.rank_cutoff * gamma_max {
                continue;
            }
            let u = fix_phase(vectors.column(j).iter().copied().collect());
            let mut r = CMatrix::zeros(n, n);
            for (beta, ub) in u.iter().enumerate() {
                r += &basis[beta + 1] * ub.conj();
            }
            kraus.push(r * C64::new(gamma.sqrt(), 0.0));
            gammas.push(gamma);
        }

        let psi1 = kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, r| acc + r.adjoint() * r);
        let half = C64::new(0.5, 0.0);
        let remainder: Vec<Vec<CMatrix>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let e = unit(i, j);
                        let mut lind = (&psi1 * &e + &e * &psi1) * (-half);
                        for r in &kraus {
                            lind += r.adjoint() * &e * r;
                        }
                        &images[i][j] - lind
                    })
                    .collect()
            })
            .collect();
        let hamiltonian = fit_commutator(&remainder);
        let ls_residual = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let e = unit(i, j);
                let fit = (&hamiltonian * &e - &e * &hamiltonian) * I;
                spectral_norm(&(&remainder[i][j] - fit))
            })
            .fold(0.0, f64::max);

        let symmetry_residual = basis
            .iter()
            .map(|g| {
                let mut lhs = CMatrix::zeros(n, n);
                for r in &kraus {
                    lhs += r * g * r.adjoint() - r.adjoint() * g * r;
                }
                let rhs = (&hamiltonian * g - g * &hamiltonian) * (I * 2.0);
                spectral_norm(&(lhs - rhs))
            })
            .fold(0.0, f64::max);

        BlockExtraction {
            kraus,
            gammas,
            hamiltonian,
            hermiticity,
            min_gamma,
            ls_residual,
            symmetry_residual,
        }
    }
}

/// Largest off-block component of `ℒ(G)` over basis elements `G`.
fn block_mixing(l: &SuperOperator, tol: f64) -> CheckReport {
    let s = l.structure();
    let mut worst = (0.0, 0);
    for beta in 0..l.dim() {
        let home = s.basis_block(beta);
        let image = l.apply_basis(beta);
        let leak = image
            .blocks()
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != home)
            .map(|(_, b)| spectral_norm(b))
            .fold(0.0, f64::max);
        if leak > worst.0 {
            worst = (leak, beta);
        }
    }
    let witness = Witness {
        description: format!("basis element {}", worst.1),
        elements: vec![l.basis()[worst.1].clone()],
    };
    CheckReport::new(
        "block_preservation",
        worst.0,
        l.tolerance_scale(),
        tol,
        Some(witness),
    )
}

/// Traceless corner of the two-sided expansion; `images[i][j] = Φ(E_ij)`.
pub(crate) fn kossakowski_matrix(images: &[Vec<CMatrix>]) -> CMatrix {
    let n = images.len();
    let n2 = n * n;
    let basis = hermitian_block_basis(n);
    let mut choi = CMatrix::zeros(n2, n2);
    for i in 0..n {
        for j in 0..n {
            let img = &images[i][j];
            for p in 0..n {
                for q in 0..n {
                    choi[(i * n + p, j * n + q)] = img[(p, q)];
                }
            }
        }
    }
    let v = CMatrix::from_fn(n2, n2, |row, alpha| basis[alpha][(row / n, row % n)].conj());
    let c = v.adjoint() * choi * v;
    c.view((1, 1), (n2 - 1, n2 - 1)).into_owned()
}

/// Least-squares traceless self-adjoint `H` with `Δ(x) ≈ i[H, x]`; see the
/// module docs for the closed-form normal equations.
pub(crate) fn fit_commutator(remainder: &[Vec<CMatrix>]) -> CMatrix {
    let n = remainder.len();
    let mut y = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = &remainder[i][j];
            for p in 0..n {
                y[(p, i)] += d[(p, j)];
                y[(j, p)] -= d[(i, p)];
            }
        }
    }
    let z = y * (-I / (2.0 * n as f64));
    let herm = (&z + z.adjoint()) * C64::new(0.5, 0.0);
    let shift = herm.trace() / n as f64;
    herm - CMatrix::identity(n, n) * shift
}

fn fix_phase(mut u: Vec<C64>) -> Vec<C64> {
    let pivot = u.iter().copied().fold(ZERO, |best, z| {
        if z.norm() > best.norm() + 1e-12 {
            z
        } else {
            best
        }
    });
    if pivot != ZERO {
        let phase = pivot.conj() / pivot.norm();
        for z in &mut u {
            *z *= phase;
        }
    }
    u
}

/// Outcome of [`roundtrip_fuzz`].
#[derive(Clone, Debug, Default)]
pub struct FuzzSummary {
    pub seeds: usize,
    pub passed: usize,
    pub max_residual: f64,
    /// `(seed, members in, derivations out)` per seed.
    pub gauge: Vec<(u64, usize, usize)>,
    pub failures: Vec<(u64, String)>,
}

impl FuzzSummary {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.passed == self.seeds
    }
}

/// Seed `s ∈ 0..n_seeds` draws `1 + s mod j_max` random members with
/// [`DerivationFamily::random`], builds the generator and decomposes it.
pub fn roundtrip_fuzz(
    structure: &BlockStructure,
    n_seeds: u64,
    j_max: usize,
    tol: f64,
) -> FuzzSummary {
    let outcomes: Vec<_> = (0..n_seeds)
        .into_par_iter()
        .map(|seed| {
            let members = 1 + (seed as usize) % j_max.max(1);
            let family = DerivationFamily::random(structure.clone(), members, seed);
            (seed, members, decompose(&family.build(), tol))
        })
        .collect();
    let mut summary = FuzzSummary {
        seeds: n_seeds as usize,
        ..FuzzSummary::default()
    };
    for (seed, members, outcome) in outcomes {
        match outcome {
            Ok(res) => {
                summary.max_residual = summary.max_residual.max(res.roundtrip_residual);
                summary.gauge.push((seed, members, res.family.len()));
                summary.passed += 1;
            }
            Err(e) => summary.failures.push((seed, e.to_string())),
        }
    }
    summary
}
