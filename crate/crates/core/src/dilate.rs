//! Random-unitary dilation of `T_t = exp(tℒ)` for `ℒ = ½ Σ_j [H_j, [H_j, ·]]`
//! driven by classical Brownian motion.
//!
//! Each path evolves a block-diagonal `U_t` by
//!
//! ```text
//! dU = Σ_j H_j U dB_j + ½ (Σ_j H_j²) U dt,     U_0 = 1,
//! ```
//!
//! and `j_t(x) = U_t* x U_t`. Since `dU* = −Σ_j U* H_j dB_j + ½ U* (Σ_j H_j²) dt`,
//! Itô's product rule gives
//!
//! ```text
//! d(U* x U) = U* (½ Σ_j (H_j² x + x H_j²) − Σ_j H_j x H_j) U dt + martingale
//!           = U* ℒ(x) U dt + martingale,
//! ```
//!
//! because the cross variation `dU* x dU = −Σ_j U* H_j x H_j U dt`. Hence
//! `E[j_t(x)]` solves `d/dt E[j_t(x)] = E[j_t(ℒx)]` and equals `T_t(x)`.
//!
//! Schemes:
//! - [`Scheme::UnitaryIncrement`]: `U ← exp(Σ_j H_j ΔB_j) U`, exactly unitary.
//!   The drift is carried by the Itô correction of the exponential.
//! - [`Scheme::EulerMaruyama`]: `U ← (1 + Σ_j H_j ΔB_j + ½ Σ_j H_j² Δt) U`,
//!   unitary only on average.
//!
//! Path `p` draws its increments from `ChaCha8Rng::seed_from_u64(seed)` with
//! stream number `p` (`set_stream(p)`), step-major and driver-minor. Results
//! are reduced by pairwise summation in path order, so estimates are
//! bitwise reproducible for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::blockalg::AlgebraElement;
use crate::derivgen::DerivationFamily;
use crate::error::{Error, Result};
use crate::linalg::{
    expm_antihermitian, pairwise_sum, pairwise_sum_real, unitarity_defect, CMatrix, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    UnitaryIncrement,
    EulerMaruyama,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitary" | "unitary-increment" | "UnitaryIncrement" => Ok(Self::UnitaryIncrement),
            "euler" | "euler-maruyama" | "EulerMaruyama" => Ok(Self::EulerMaruyama),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::UnitaryIncrement => "unitary-increment",
            Self::EulerMaruyama => "euler-maruyama",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationConfig {
    pub t_final: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl DilationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DilationEstimate {
    /// Sample mean of `U* x U`.
    pub mean: AlgebraElement,
    /// Per-entry `sqrt(Σ_p |z_p − z̄|² / (N − 1)) / √N`, block by block.
    pub std_error: Vec<nalgebra::DMatrix<f64>>,
    pub n_paths: usize,
    pub scheme: Scheme,
    /// Largest `‖U*U − 1‖` seen at any step of any path.
    pub max_unitarity_defect: f64,
}

impl DilationEstimate {
    pub fn max_std_error(&self) -> f64 {
        self.std_error
            .iter()
            .flat_map(|m| m.iter())
            .copied()
            .fold(0.0, f64::max)
    }
}

struct PathResult {
    values: Vec<C64>,
    defect: f64,
}

fn check_inputs(family: &DerivationFamily, x: &AlgebraElement, cfg: &DilationConfig) -> Result<()> {
    cfg.validate()?;
    family.structure().check(x)
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Per-block data of the family.
struct Drivers {
    /// `gens[j][k]`: block `k` of `H_j`.
    gens: Vec<Vec<CMatrix>>,
    /// `½ Σ_j H_j²` per block.
    half_square: Vec<CMatrix>,
    dims: Vec<usize>,
}

impl Drivers {
    fn new(family: &DerivationFamily) -> Self {
        let gens: Vec<Vec<CMatrix>> = family
            .generators()
            .iter()
            .map(|h| h.blocks().to_vec())
            .collect();
        let half_square = family
            .sum_of_squares()
            .blocks()
            .iter()
            .map(|b| b * C64::new(0.5, 0.0))
            .collect();
        Self {
            gens,
            half_square,
            dims: family.structure().dims().to_vec(),
        }
    }

    fn identity(&self) -> Vec<CMatrix> {
        self.dims.iter().map(|&n| CMatrix::identity(n, n)).collect()
    }

    fn step(&self, u: &mut [CMatrix], increments: &[f64], dt: f64, scheme: Scheme) {
        for (k, uk) in u.iter_mut().enumerate() {
            let n = self.dims[k];
            let mut kmat = CMatrix::zeros(n, n);
            for (h, &db) in self.gens.iter().zip(increments) {
                kmat += &h[k] * C64::new(db, 0.0);
            }
            *uk = match scheme {
                Scheme::UnitaryIncrement => expm_antihermitian(&kmat) * &*uk,
                Scheme::EulerMaruyama => {
                    let m =
                        CMatrix::identity(n, n) + kmat + &self.half_square[k] * C64::new(dt, 0.0);
                    m * &*uk
                }
            };
        }
    }
}

/// `U* x U` flattened block by block in column-major order.
fn conjugate(u: &[CMatrix], x: &AlgebraElement) -> Vec<C64> {
    u.iter()
        .zip(x.blocks())
        .flat_map(|(uk, xk)| (uk.adjoint() * xk * uk).iter().copied().collect::<Vec<_>>())
        .collect()
}

fn run_path(
    drivers: &Drivers,
    x: &AlgebraElement,
    cfg: &DilationConfig,
    path: usize,
) -> PathResult {
    let mut rng = path_rng(cfg.seed, path);
    let dt = cfg.dt();
    let sd = dt.sqrt();
    let mut u = drivers.identity();
    let mut increments = vec![0.0; drivers.gens.len()];
    let mut defect: f64 = 0.0;
    if !drivers.gens.is_empty() {
        for _ in 0..cfg.n_steps {
            for db in increments.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *db = z * sd;
            }
            drivers.step(&mut u, &increments, dt, cfg.scheme);
            defect = u.iter().map(unitarity_defect).fold(defect, f64::max);
        }
    }
    PathResult {
        values: conjugate(&u, x),
        defect,
    }
}

fn reduce(family: &DerivationFamily, paths: Vec<PathResult>, scheme: Scheme) -> DilationEstimate {
    let s = family.structure();
    let n_paths = paths.len();
    let defect = paths.iter().map(|p| p.defect).fold(0.0, f64::max);
    let values: Vec<Vec<C64>> = paths.into_iter().map(|p| p.values).collect();
    let mean: Vec<C64> = pairwise_sum(&values)
        .into_iter()
        .map(|z| z / n_paths as f64)
        .collect();
    let sq: Vec<Vec<f64>> = values
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mean)
                .map(|(z, m)| (z - m).norm_sqr())
                .collect()
        })
        .collect();
    let var = pairwise_sum_real(&sq);
    let denom = if n_paths > 1 {
        (n_paths - 1) as f64
    } else {
        1.0
    };
    let mut blocks = Vec::new();
    let mut errors = Vec::new();
    let mut off = 0;
    for &n in s.dims() {
        blocks.push(CMatrix::from_iterator(
            n,
            n,
            mean[off..off + n * n].iter().copied(),
        ));
        errors.push(nalgebra::DMatrix::from_iterator(
            n,
            n,
            var[off..off + n * n]
                .iter()
                .map(|v| (v / denom).sqrt() / (n_paths as f64).sqrt()),
        ));
        off += n * n;
    }
    DilationEstimate {
        mean: s.element(blocks).expect("block shapes"),
        std_error: errors,
        n_paths,
        scheme,
        max_unitarity_defect: defect,
    }
}

/// Monte Carlo estimate of `T_t(x)`.
pub fn simulate(
    family: &DerivationFamily,
    x: &AlgebraElement,
    cfg: &DilationConfig,
) -> Result<DilationEstimate> {
    check_inputs(family, x, cfg)?;
    let drivers = Drivers::new(family);
    let paths: Vec<PathResult> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| run_path(&drivers, x, cfg, p))
        .collect();
    Ok(reduce(family, paths, cfg.scheme))
}

#[derive(Clone, Debug)]
pub struct DilationComparison {
    pub mc: DilationEstimate,
    pub exact: AlgebraElement,
    /// `|mean − exact| / std_error` per entry; `None` where the standard error
    /// vanishes.
    pub z_scores: Vec<nalgebra::DMatrix<Option<f64>>>,
    /// Largest `|mean − exact|` over zero-variance entries.
    pub zero_variance_mismatch: f64,
}

impl DilationComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores
            .iter()
            .flat_map(|m| m.iter())
            .filter_map(|z| *z)
            .fold(0.0, f64::max)
    }

    /// Fraction of finite z-scores with `|z| ≤ bound`.
    pub fn fraction_within(&self, bound: f64) -> f64 {
        let zs: Vec<f64> = self
            .z_scores
            .iter()
            .flat_map(|m| m.iter())
            .filter_map(|z| *z)
            .collect();
        if zs.is_empty() {
            return 1.0;
        }
        zs.iter().filter(|z| **z <= bound).count() as f64 / zs.len() as f64
    }
}

/// Runs [`simulate`] and compares with `exp(t·build(F))(x)`.
pub fn compare_with_semigroup(
    family: &DerivationFamily,
    x: &AlgebraElement,
    cfg: &DilationConfig,
) -> Result<DilationComparison> {
    let mc = simulate(family, x, cfg)?;
    let exact = family.build().exp_semigroup(cfg.t_final)?.apply(x)?;
    let mut mismatch: f64 = 0.0;
    let z_scores = mc
        .mean
        .blocks()
        .iter()
        .zip(exact.blocks())
        .zip(&mc.std_error)
        .map(|((m, e), se)| {
            nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                let diff = (m[(i, j)] - e[(i, j)]).norm();
                if se[(i, j)] > 0.0 {
                    Some(diff / se[(i, j)])
                } else {
                    mismatch = mismatch.max(diff);
                    None
                }
            })
        })
        .collect();
    Ok(DilationComparison {
        mc,
        exact,
        z_scores,
        zero_variance_mismatch: mismatch,
    })
}

/// Means for several step counts over common Brownian paths.
///
/// Every level must divide `fine_steps`. Increments are drawn on the grid of
/// `fine_steps` steps with the stream layout of [`simulate`], and coarse
/// increments are sums of consecutive fine ones, so all levels (and all
/// calls with the same `seed` and `fine_steps`) share the same noise.
#[allow(clippy::too_many_arguments)]
pub fn weak_convergence_study(
    family: &DerivationFamily,
    x: &AlgebraElement,
    t_final: f64,
    n_paths: usize,
    levels: &[usize],
    fine_steps: usize,
    seed: u64,
    scheme: Scheme,
) -> Result<Vec<(usize, AlgebraElement)>> {
    let finest = fine_steps;
    if levels.iter().any(|&l| l == 0 || !finest.is_multiple_of(l)) {
        return Err(Error::Config(
            "step levels must be positive divisors of fine_steps".into(),
        ));
    }
    let cfg = DilationConfig {
        t_final,
        n_paths,
        n_steps: finest,
        seed,
        scheme,
    };
    check_inputs(family, x, &cfg)?;
    let drivers = Drivers::new(family);
    let jn = drivers.gens.len();
    let per_path: Vec<Vec<Vec<C64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let sd = cfg.dt().sqrt();
            let fine: Vec<f64> = (0..finest * jn)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * sd
                })
                .collect();
            levels
                .iter()
                .map(|&steps| {
                    let ratio = finest / steps;
                    let dt = t_final / steps as f64;
                    let mut u = drivers.identity();
                    let mut inc = vec![0.0; jn];
                    for s in 0..steps {
                        for (j, v) in inc.iter_mut().enumerate() {
                            *v = (0..ratio).map(|r| fine[(s * ratio + r) * jn + j]).sum();
                        }
                        if jn > 0 {
                            drivers.step(&mut u, &inc, dt, scheme);
                        }
                    }
                    conjugate(&u, x)
                })
                .collect()
        })
        .collect();
    let s = family.structure();
    levels
        .iter()
        .enumerate()
        .map(|(li, &steps)| {
            let vals: Vec<Vec<C64>> = per_path.iter().map(|v| v[li].clone()).collect();
            let mean = pairwise_sum(&vals);
            let mut blocks = Vec::new();
            let mut off = 0;
            for &n in s.dims() {
                blocks.push(CMatrix::from_iterator(
                    n,
                    n,
                    mean[off..off + n * n].iter().map(|z| z / n_paths as f64),
                ));
                off += n * n;
            }
            Ok((steps, s.element(blocks)?))
        })
        .collect()
}
