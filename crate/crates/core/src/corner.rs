//! Grid truncations of partial derivatives and nested corner algebras.
//!
//! The ambient space is `ℂ^{n^N}` for an `N`-dimensional grid with `n` points
//! per axis, flattened row-major (the last axis varies fastest). Axis `a`
//! (1-based) then has stride `n^{N−a}` in the flattened index, and its
//! central-difference derivative is banded with that bandwidth. The corner
//! algebra `𝒜_m` consists of operators supported on the first `m` flattened
//! basis vectors `ξ_1, …, ξ_m`, and `V_m = span{ξ_1, …, ξ_m}`.
//!
//! Maps on the ambient algebra are abstracted by [`AmbientMap`], so that
//! inner derivations and double-commutator generators on large grids never
//! have to be tabulated as superoperator matrices.

use crate::blockalg::{AlgebraElement, BlockStructure};
use crate::derivgen::DerivationFamily;
use crate::error::{Error, Result};
use crate::extract::{Decomposer, ExtractError};
use crate::linalg::{spectral_norm, CMatrix, C64, I, ONE};
use crate::superop::{CheckReport, SuperOperator, Witness};

/// Desk-scale bound on `n^N`.
pub const MAX_GRID_POINTS: usize = 4096;

/// Entries at or below this modulus count as structural zeros.
pub const SUPPORT_THRESHOLD: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(dimension: usize, points_per_axis: usize, spacing: f64) -> Result<Self> {
        if dimension == 0 || points_per_axis == 0 {
            return Err(Error::Config(
                "grid dimension and size must be positive".into(),
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        let spec = Self {
            dimension,
            points_per_axis,
            spacing,
        };
        match points_per_axis.checked_pow(dimension as u32) {
            Some(total) if total <= MAX_GRID_POINTS => Ok(spec),
            _ => Err(Error::Config(format!(
                "grid has more than {MAX_GRID_POINTS} points ({points_per_axis}^{dimension})"
            ))),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    /// Flattened-index stride of `axis` (1-based).
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dimension - axis) as u32)
    }

    /// Largest stride over all axes.
    pub fn bandwidth(&self) -> usize {
        self.stride(1)
    }

    /// `(Df)_k = (f_{k+1} − f_{k−1}) / (2Δ)` along `axis` (1-based) with
    /// zero boundary values; exactly real antisymmetric.
    pub fn derivative(&self, axis: usize) -> Result<CMatrix> {
        if axis == 0 || axis > self.dimension {
            return Err(Error::Domain(format!(
                "axis {axis} outside 1..={} for a {}-dimensional grid",
                self.dimension, self.dimension
            )));
        }
        let total = self.ambient_dim();
        let stride = self.stride(axis);
        let n = self.points_per_axis;
        let c = C64::new(1.0 / (2.0 * self.spacing), 0.0);
        let mut d = CMatrix::zeros(total, total);
        for k in 0..total {
            let coord = (k / stride) % n;
            if coord + 1 < n {
                d[(k, k + stride)] = c;
            }
            if coord > 0 {
                d[(k, k - stride)] = -c;
            }
        }
        Ok(d)
    }

    /// [`Self::derivative`] as an element of the single-block algebra.
    pub fn grid_derivative(&self, axis: usize) -> Result<AlgebraElement> {
        let s = BlockStructure::factor(self.ambient_dim())?;
        s.element(vec![self.derivative(axis)?])
    }

    pub fn derivatives(&self) -> Vec<CMatrix> {
        (1..=self.dimension)
            .map(|a| self.derivative(a).expect("axis in range"))
            .collect()
    }
}

/// A linear map on the full matrix algebra of the ambient space.
pub trait AmbientMap {
    fn ambient_dim(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> CMatrix;
}

/// `x ↦ [H, x]`.
#[derive(Clone, Debug)]
pub struct InnerDerivation(pub CMatrix);

impl AmbientMap for InnerDerivation {
    fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        &self.0 * x - x * &self.0
    }
}

/// `x ↦ ½ Σ_j [H_j, [H_j, x]]`.
#[derive(Clone, Debug)]
pub struct DoubleCommutator(pub Vec<CMatrix>);

impl AmbientMap for DoubleCommutator {
    fn ambient_dim(&self) -> usize {
        self.0.first().map_or(0, |h| h.nrows())
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for h in &self.0 {
            let c = h * x - x * h;
            out += (h * &c - &c * h) * C64::new(0.5, 0.0);
        }
        out
    }
}

/// Arbitrary map given by a closure.
pub struct FnMap<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&CMatrix) -> CMatrix> AmbientMap for FnMap<F> {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        (self.f)(x)
    }
}

/// A superoperator on a single-block structure acts on the ambient algebra.
impl AmbientMap for SuperOperator {
    fn ambient_dim(&self) -> usize {
        self.structure().ambient_dim()
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let s = self.structure();
        let a = s.from_ambient(x, f64::INFINITY).expect("ambient shape");
        SuperOperator::apply(self, &a).expect("shape").to_ambient()
    }
}

/// The nested corners `𝒜_1 ⊆ 𝒜_2 ⊆ … ⊆ 𝒜_n` of `M_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CornerFamily {
    pub ambient: usize,
}

impl CornerFamily {
    pub fn new(ambient: usize) -> Self {
        Self { ambient }
    }

    /// Orthogonal projection onto `V_m`.
    pub fn projector(&self, m: usize) -> CMatrix {
        CMatrix::from_fn(self.ambient, self.ambient, |i, j| {
            if i == j && i < m {
                ONE
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `|ξ_i⟩⟨ξ_j|` with zero-based `i, j`.
    pub fn unit(&self, i: usize, j: usize) -> CMatrix {
        let mut e = CMatrix::zeros(self.ambient, self.ambient);
        e[(i, j)] = ONE;
        e
    }

    /// Matrix units spanning `𝒜_m`, as `(i, j, E_ij)`.
    pub fn units(&self, m: usize) -> impl Iterator<Item = (usize, usize, CMatrix)> + '_ {
        (0..m).flat_map(move |i| (0..m).map(move |j| (i, j, self.unit(i, j))))
    }

    /// Self-adjoint basis of `𝒜_m`: `E_ii`, `(E_ij + E_ji)/√2`, `i(E_ij − E_ji)/√2`.
    pub fn selfadjoint_basis(&self, m: usize) -> Vec<CMatrix> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            out.push(self.unit(i, i));
            for j in i + 1..m {
                out.push((self.unit(i, j) + self.unit(j, i)) * C64::new(r, 0.0));
                out.push((self.unit(i, j) - self.unit(j, i)) * (I * r));
            }
        }
        out
    }

    /// Smallest `n` with `x ∈ 𝒜_n` at `threshold`.
    pub fn support_bound(&self, x: &CMatrix, threshold: f64) -> usize {
        let mut bound = 0;
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if x[(i, j)].norm() > threshold {
                    bound = bound.max(i + 1).max(j + 1);
                }
            }
        }
        bound
    }

    pub fn contains(&self, x: &CMatrix, m: usize, threshold: f64) -> bool {
        self.support_bound(x, threshold) <= m
    }
}

/// Minimal `n` with `ℒ(𝒜_m) ⊆ 𝒜_n`, from the support of `ℒ` on the matrix
/// units of `𝒜_m` at [`SUPPORT_THRESHOLD`].
pub fn corner_mapping_bound(l: &dyn AmbientMap, m: usize) -> usize {
    let corners = CornerFamily::new(l.ambient_dim());
    corners
        .units(m)
        .map(|(_, _, e)| corners.support_bound(&l.apply(&e), SUPPORT_THRESHOLD))
        .fold(m, usize::max)
}

/// `α(x) ξ = 0` for `ξ ⊥ V_n` and `P_{V_n}^⊥ α(x) P_{V_n} = 0`, over the
/// self-adjoint basis `x` of `𝒜_m`.
pub fn check_vn_invariance(alpha: &dyn AmbientMap, m: usize, n: usize, tol: f64) -> CheckReport {
    let corners = CornerFamily::new(alpha.ambient_dim());
    let dim = corners.ambient;
    let mut worst = (0.0, None);
    for x in corners.selfadjoint_basis(m) {
        let y = alpha.apply(&x);
        let outside = (n..dim).map(|k| y.column(k).norm()).fold(0.0, f64::max);
        let leak = if n < dim && n > 0 {
            spectral_norm(&y.view((n, 0), (dim - n, n)).into_owned())
        } else {
            0.0
        };
        let r = outside.max(leak);
        if r > worst.0 {
            worst = (r, Some(x));
        }
    }
    let witness = worst.1.map(|x| Witness {
        description: format!("self-adjoint basis element of A_{m} leaking out of V_{n}"),
        elements: vec![ambient_element(x)],
    });
    CheckReport::new("vn_invariance", worst.0, 1.0, tol, witness)
}

/// `max_x |τ(α(x))|` over the matrix units of `𝒜_m`.
pub fn check_traceless_derivation(alpha: &dyn AmbientMap, m: usize, tol: f64) -> CheckReport {
    let corners = CornerFamily::new(alpha.ambient_dim());
    let mut worst = (0.0, None);
    for (i, j, e) in corners.units(m) {
        let r = alpha.apply(&e).trace().norm();
        if r > worst.0 {
            worst = (r, Some((i, j, e)));
        }
    }
    let witness = worst.1.map(|(i, j, e)| Witness {
        description: format!("matrix unit E_{}{}", i + 1, j + 1),
        elements: vec![ambient_element(e)],
    });
    CheckReport::new("traceless_derivation", worst.0, 1.0, tol, witness)
}

/// `2τ(xℒ(y)) = −Σ_j τ(α_j(x)α_j(y)) = Σ_j τ(xα_j²(y))` over the matrix
/// units `x, y` of `𝒜_m`. Both sides are bilinear, so matrix units suffice.
pub fn check_weak_form(
    l: &dyn AmbientMap,
    alphas: &[&dyn AmbientMap],
    m: usize,
    tol: f64,
) -> CheckReport {
    let corners = CornerFamily::new(l.ambient_dim());
    let units: Vec<_> = corners.units(m).collect();
    let l_img: Vec<CMatrix> = units.iter().map(|(_, _, e)| l.apply(e)).collect();
    let a_img: Vec<Vec<CMatrix>> = alphas
        .iter()
        .map(|a| units.iter().map(|(_, _, e)| a.apply(e)).collect())
        .collect();
    let a_sq: Vec<Vec<CMatrix>> = alphas
        .iter()
        .zip(&a_img)
        .map(|(a, imgs)| imgs.iter().map(|y| a.apply(y)).collect())
        .collect();
    let mut worst = (0.0, 0, 0);
    for (p, (xi, xj, _)) in units.iter().enumerate() {
        for (q, _) in units.iter().enumerate() {
            // τ(E_ij z) = z[j, i]
            let lhs = l_img[q][(*xj, *xi)] * 2.0;
            let mut first = C64::new(0.0, 0.0);
            let mut second = C64::new(0.0, 0.0);
            for (imgs, sq) in a_img.iter().zip(&a_sq) {
                first += imgs[p].transpose().dot(&imgs[q]);
                second += sq[q][(*xj, *xi)];
            }
            let r = (lhs + first).norm().max((lhs - second).norm());
            if r > worst.0 {
                worst = (r, p, q);
            }
        }
    }
    let witness = (!units.is_empty()).then(|| {
        let (x, y) = (&units[worst.1], &units[worst.2]);
        Witness {
            description: format!("x = E_{}{}, y = E_{}{}", x.0 + 1, x.1 + 1, y.0 + 1, y.1 + 1),
            elements: vec![ambient_element(x.2.clone()), ambient_element(y.2.clone())],
        }
    });
    CheckReport::new("weak_form", worst.0, 1.0, tol, witness)
}

/// `‖δ_j(x)* δ_j(x)‖ ≤ ‖ℒ(x*x) − ℒ(x*)x − x*ℒ(x)‖` for every `j` and every
/// self-adjoint basis element `x` of `𝒜_m`; the residual is the largest
/// excess of the left side.
pub fn check_dissipation_domination(
    l: &dyn AmbientMap,
    deltas: &[&dyn AmbientMap],
    m: usize,
    tol: f64,
) -> CheckReport {
    let corners = CornerFamily::new(l.ambient_dim());
    let mut worst: f64 = 0.0;
    for x in corners.selfadjoint_basis(m) {
        let lx = l.apply(&x);
        let dis = l.apply(&(&x * &x)) - &lx * &x - &x * &lx;
        let bound = spectral_norm(&dis);
        for delta in deltas {
            let dx = delta.apply(&x);
            worst = worst.max(spectral_norm(&(dx.adjoint() * dx)) - bound);
        }
    }
    CheckReport::new("dissipation_domination", worst.max(0.0), 1.0, tol, None)
}

fn ambient_element(x: CMatrix) -> AlgebraElement {
    let s = BlockStructure::factor(x.nrows()).expect("nonempty");
    s.element(vec![x]).expect("square")
}

/// `δ†(x) = δ(x*)*`.
pub fn dagger(delta: &SuperOperator) -> SuperOperator {
    let d = delta.clone();
    SuperOperator::from_fn(delta.structure().clone(), move |x| {
        SuperOperator::apply(&d, &x.adjoint())
            .expect("shape")
            .adjoint()
    })
}

/// Largest Leibniz defect `‖δ(xy) − δ(x)y − xδ(y)‖` over basis pairs.
pub fn leibniz_defect(delta: &SuperOperator) -> f64 {
    let basis = delta.basis();
    let images: Vec<_> = (0..basis.len()).map(|b| delta.apply_basis(b)).collect();
    let mut worst: f64 = 0.0;
    for (a, x) in basis.iter().enumerate() {
        for (b, y) in basis.iter().enumerate() {
            let lhs = SuperOperator::apply(delta, &(x * y)).expect("shape");
            let rhs = &(&images[a] * y) + &(x * &images[b]);
            worst = worst.max((&lhs - &rhs).operator_norm());
        }
    }
    worst
}

/// `α_even = ½(δ + δ†)` and `α_odd = (i/2)(δ† − δ)`; both satisfy `α† = α`
/// and `δ = α_even + i α_odd`.
pub fn alpha_split(delta: &SuperOperator, tol: f64) -> Result<(SuperOperator, SuperOperator)> {
    let defect = leibniz_defect(delta);
    if defect > tol * delta.tolerance_scale() {
        return Err(Error::Validation(format!(
            "map is not a derivation (Leibniz defect {defect:e})"
        )));
    }
    let dd = dagger(delta);
    let s = delta.structure().clone();
    let even = SuperOperator::from_matrix(
        s.clone(),
        (delta.matrix() + dd.matrix()) * C64::new(0.5, 0.0),
    )?;
    let odd = SuperOperator::from_matrix(s, (dd.matrix() - delta.matrix()) * (I * 0.5))?;
    Ok((even, odd))
}

/// Derivations recovered on the corner `𝒜_corner` and embedded in the
/// ambient algebra.
///
/// Each ambient derivative `D` is compressed to `P D P` with `P` the
/// projector onto `V_corner`; the family `{P D P}` generates a symmetric
/// conservative generator on `M_corner`, which is decomposed without the
/// precondition checks (the CCP kernel would have size `corner⁶`). The
/// pipeline's own Kossakowski positivity, centrality and round-trip checks
/// still apply.
pub fn extract_corner_derivations(
    derivatives: &[CMatrix],
    corner: usize,
    tol: f64,
) -> std::result::Result<Vec<CMatrix>, ExtractError> {
    let ambient = derivatives.first().map_or(corner, |d| d.nrows());
    let s = BlockStructure::factor(corner).expect("corner >= 1");
    let compressed: Vec<AlgebraElement> = derivatives
        .iter()
        .map(|d| {
            s.element(vec![d.view((0, 0), (corner, corner)).into_owned()])
                .expect("square")
        })
        .collect();
    let family =
        DerivationFamily::new(s, compressed).expect("compressions of antisymmetric matrices");
    let decomposer = Decomposer {
        tol,
        check_preconditions: false,
        ..Decomposer::default()
    };
    let result = decomposer.decompose(&family.build())?;
    Ok(result
        .family
        .generators()
        .iter()
        .map(|h| {
            let mut big = CMatrix::zeros(ambient, ambient);
            big.view_mut((0, 0), (corner, corner)).copy_from(h.block(0));
            big
        })
        .collect())
}

/// One row of [`proposition_suite`].
#[derive(Clone, Debug)]
pub struct CornerSuiteRow {
    pub m: usize,
    pub mapping_bound: usize,
    pub n_derivations: usize,
    /// V_n invariance of every extracted derivation at `n = m + bandwidth`.
    pub invariance: CheckReport,
    /// V_n invariance at `n = m − 1`, worst over the extracted derivations.
    pub invariance_below: CheckReport,
    pub traceless: CheckReport,
    pub weak_form: CheckReport,
    pub domination: CheckReport,
}

fn worst_of(reports: Vec<CheckReport>, name: &str, tol: f64) -> CheckReport {
    reports
        .into_iter()
        .max_by(|a, b| a.residual.total_cmp(&b.residual))
        .unwrap_or_else(|| CheckReport::new(name, 0.0, 1.0, tol, None))
}

/// Runs the corner checks on the generator `½ Σ_axes [D, [D, ·]]` of `grid`
/// for each corner size in `ms`.
pub fn proposition_suite(
    grid: &GridSpec,
    ms: &[usize],
    tol: f64,
) -> std::result::Result<Vec<CornerSuiteRow>, Box<dyn std::error::Error + Send + Sync>> {
    let ambient = grid.ambient_dim();
    let derivs = grid.derivatives();
    let generator = DoubleCommutator(derivs.clone());
    let band = grid.bandwidth();
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        if m == 0 || m > ambient {
            return Err(format!("corner size {m} outside 1..={ambient}").into());
        }
        let corner = (m + band).min(ambient);
        let hs = extract_corner_derivations(&derivs, corner, tol)?;
        let alphas: Vec<InnerDerivation> = hs.into_iter().map(InnerDerivation).collect();
        let refs: Vec<&dyn AmbientMap> = alphas.iter().map(|a| a as &dyn AmbientMap).collect();
        let n_inv = corner;
        let invariance = worst_of(
            refs.iter()
                .map(|a| check_vn_invariance(*a, m, n_inv, tol))
                .collect(),
            "vn_invariance",
            tol,
        );
        let invariance_below = worst_of(
            refs.iter()
                .map(|a| check_vn_invariance(*a, m, m.saturating_sub(1), tol))
                .collect(),
            "vn_invariance",
            tol,
        );
        let traceless = worst_of(
            refs.iter()
                .map(|a| check_traceless_derivation(*a, m, tol))
                .collect(),
            "traceless_derivation",
            tol,
        );
        rows.push(CornerSuiteRow {
            m,
            mapping_bound: corner_mapping_bound(&generator, m),
            n_derivations: alphas.len(),
            invariance,
            invariance_below,
            traceless,
            weak_form: check_weak_form(&generator, &refs, m, tol),
            domination: check_dissipation_domination(&generator, &refs, m, tol),
        });
    }
    Ok(rows)
}
