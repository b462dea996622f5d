//! Python bindings, importable as `qds`.
//!
//! Algebra elements cross the boundary as lists of blocks, each block a
//! row-major nested list of Python `complex`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use qds_core::corner::{proposition_suite, GridSpec};
use qds_core::dilate::{compare_with_semigroup, simulate as mc_simulate, DilationConfig, Scheme};
use qds_core::superop::{
    check_ccp, check_conservative, check_cp_map, check_symmetric, relation2_check,
};
use qds_core::{
    AlgebraElement, BlockStructure, CheckReport, Decomposer, DerivationFamily, SuperOperator,
};

create_exception!(
    qds,
    QdsError,
    PyValueError,
    "Invalid input to a qds operation."
);
create_exception!(
    qds,
    ExtractError,
    PyException,
    "A stage of the decomposition pipeline failed."
);

type Matrix = Vec<Vec<Complex64>>;
type Element = Vec<Matrix>;

fn err(e: impl std::fmt::Display) -> PyErr {
    QdsError::new_err(e.to_string())
}

fn matrix_to_py(m: &DMatrix<Complex64>) -> Matrix {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_py(m: &Matrix) -> PyResult<DMatrix<Complex64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| m[i][j]))
}

fn element_to_py(a: &AlgebraElement) -> Element {
    a.blocks().iter().map(matrix_to_py).collect()
}

fn element_from_py(s: &BlockStructure, e: &Element) -> PyResult<AlgebraElement> {
    let blocks = e.iter().map(matrix_from_py).collect::<PyResult<Vec<_>>>()?;
    s.element(blocks).map_err(err)
}

#[pyclass(name = "BlockStructure", module = "qds", frozen)]
struct PyBlockStructure {
    inner: BlockStructure,
}

#[pymethods]
impl PyBlockStructure {
    #[new]
    #[pyo3(signature = (dims, weights = None))]
    fn new(dims: Vec<usize>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let weights = weights.unwrap_or_else(|| vec![1.0; dims.len()]);
        Ok(Self {
            inner: BlockStructure::new(dims, weights).map_err(err)?,
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn algebra_dim(&self) -> usize {
        self.inner.algebra_dim()
    }

    fn identity(&self) -> Element {
        element_to_py(&self.inner.identity())
    }

    fn zero(&self) -> Element {
        element_to_py(&self.inner.zero())
    }

    /// `E_ij` in block `block` (all indices 0-based).
    fn matrix_unit(&self, block: usize, i: usize, j: usize) -> PyResult<Element> {
        self.inner
            .matrix_unit(block, i, j)
            .map(|e| element_to_py(&e))
            .map_err(err)
    }

    fn random_antiselfadjoint(&self, seed: u64) -> Element {
        element_to_py(&self.inner.random_antiselfadjoint(seed))
    }

    /// The orthonormal self-adjoint basis that indexes superoperator matrices.
    fn orthonormal_basis(&self) -> Vec<Element> {
        self.inner
            .orthonormal_basis()
            .iter()
            .map(element_to_py)
            .collect()
    }

    fn trace(&self, a: Element) -> PyResult<Complex64> {
        Ok(self.inner.trace(&element_from_py(&self.inner, &a)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "BlockStructure(dims={:?}, weights={:?})",
            self.inner.dims(),
            self.inner.weights()
        )
    }
}

#[pyclass(name = "SuperOperator", module = "qds", frozen)]
struct PySuperOperator {
    inner: SuperOperator,
}

#[pymethods]
impl PySuperOperator {
    /// Wraps a matrix given in the structure's orthonormal basis.
    #[staticmethod]
    fn from_matrix(structure: &PyBlockStructure, matrix: Matrix) -> PyResult<Self> {
        let m = matrix_from_py(&matrix)?;
        Ok(Self {
            inner: SuperOperator::from_matrix(structure.inner.clone(), m).map_err(err)?,
        })
    }

    /// `ψ(a) + k a + a k + i[h, a]` with `ψ(a) = Σ R* a R`.
    #[staticmethod]
    fn gkls(
        structure: &PyBlockStructure,
        kraus: Vec<Element>,
        k: Element,
        h: Element,
    ) -> PyResult<Self> {
        let s = &structure.inner;
        let kraus = kraus
            .iter()
            .map(|r| element_from_py(s, r))
            .collect::<PyResult<Vec<_>>>()?;
        let k = element_from_py(s, &k)?;
        let h = element_from_py(s, &h)?;
        Ok(Self {
            inner: SuperOperator::gkls(s.clone(), &kraus, &k, &h).map_err(err)?,
        })
    }

    #[getter]
    fn structure(&self) -> PyBlockStructure {
        PyBlockStructure {
            inner: self.inner.structure().clone(),
        }
    }

    #[getter]
    fn matrix(&self) -> Matrix {
        matrix_to_py(self.inner.matrix())
    }

    fn apply(&self, x: Element) -> PyResult<Element> {
        let x = element_from_py(self.inner.structure(), &x)?;
        self.inner.apply(&x).map(|y| element_to_py(&y)).map_err(err)
    }

    /// `exp(tℒ)`.
    fn exp(&self, t: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.exp_semigroup(t).map_err(err)?,
        })
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn distance(&self, other: &PySuperOperator) -> PyResult<f64> {
        self.inner.distance(&other.inner).map_err(err)
    }
}

#[pyclass(name = "DerivationFamily", module = "qds", frozen)]
struct PyDerivationFamily {
    inner: DerivationFamily,
}

#[pymethods]
impl PyDerivationFamily {
    #[new]
    fn new(structure: &PyBlockStructure, generators: Vec<Element>) -> PyResult<Self> {
        let s = &structure.inner;
        let hs = generators
            .iter()
            .map(|h| element_from_py(s, h))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: DerivationFamily::new(s.clone(), hs).map_err(err)?,
        })
    }

    #[staticmethod]
    fn random(structure: &PyBlockStructure, members: usize, seed: u64) -> Self {
        Self {
            inner: DerivationFamily::random(structure.inner.clone(), members, seed),
        }
    }

    #[getter]
    fn generators(&self) -> Vec<Element> {
        self.inner.generators().iter().map(element_to_py).collect()
    }

    #[getter]
    fn structure(&self) -> PyBlockStructure {
        PyBlockStructure {
            inner: self.inner.structure().clone(),
        }
    }

    /// `ℒ = ½ Σ_j [H_j, [H_j, ·]]`.
    fn build(&self) -> PySuperOperator {
        PySuperOperator {
            inner: self.inner.build(),
        }
    }

    /// `(‖R‖², ‖Σ H_j²‖)`, which agree.
    fn r_norm_identity(&self) -> (f64, f64) {
        self.inner.r_norm_identity()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "CheckReport", module = "qds", frozen, get_all)]
struct PyCheckReport {
    name: String,
    residual: f64,
    normalized_residual: f64,
    scale: f64,
    tolerance: f64,
    passed: bool,
    witness: Option<String>,
}

impl From<&CheckReport> for PyCheckReport {
    fn from(r: &CheckReport) -> Self {
        Self {
            name: r.name.clone(),
            residual: r.residual,
            normalized_residual: r.normalized(),
            scale: r.scale,
            tolerance: r.tolerance,
            passed: r.passed,
            witness: r.witness.as_ref().map(|w| w.description.clone()),
        }
    }
}

#[pymethods]
impl PyCheckReport {
    fn __bool__(&self) -> bool {
        self.passed
    }

    fn __repr__(&self) -> String {
        format!(
            "CheckReport(name={:?}, residual={:e}, tolerance={:e}, passed={})",
            self.name,
            self.residual,
            self.tolerance,
            if self.passed { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "ExtractionResult", module = "qds", frozen)]
struct PyExtractionResult {
    #[pyo3(get)]
    family: Py<PyDerivationFamily>,
    #[pyo3(get)]
    kraus: Vec<Element>,
    #[pyo3(get)]
    kossakowski_eigenvalues: Vec<Vec<f64>>,
    #[pyo3(get)]
    roundtrip_residual: f64,
    #[pyo3(get)]
    reports: Vec<Py<PyCheckReport>>,
}

#[pyclass(name = "DilationEstimate", module = "qds", frozen, get_all)]
struct PyDilationEstimate {
    mean: Element,
    exact: Element,
    std_error: Vec<Vec<Vec<f64>>>,
    max_abs_z: f64,
    fraction_within_4: f64,
    max_unitarity_defect: f64,
}

#[pyclass(name = "CornerRow", module = "qds", frozen, get_all)]
struct PyCornerRow {
    m: usize,
    mapping_bound: usize,
    n_derivations: usize,
    checks: Vec<Py<PyCheckReport>>,
}

macro_rules! check_fn {
    ($py_name:ident, $core:ident, $name:literal) => {
        #[pyfunction(name = $name)]
        #[pyo3(signature = (l, tol = 1e-9))]
        fn $py_name(l: &PySuperOperator, tol: f64) -> PyCheckReport {
            (&$core(&l.inner, tol)).into()
        }
    };
}

check_fn!(
    py_check_conservative,
    check_conservative,
    "check_conservative"
);
check_fn!(py_check_symmetric, check_symmetric, "check_symmetric");
check_fn!(py_check_ccp, check_ccp, "check_ccp");
check_fn!(py_relation2_check, relation2_check, "relation2_check");
check_fn!(py_check_cp_map, check_cp_map, "check_cp_map");

/// The four generator checks, in order.
#[pyfunction]
#[pyo3(signature = (l, tol = 1e-9))]
fn check_all(l: &PySuperOperator, tol: f64) -> Vec<PyCheckReport> {
    [
        check_conservative,
        check_symmetric,
        check_ccp,
        relation2_check,
    ]
    .iter()
    .map(|c| (&c(&l.inner, tol)).into())
    .collect()
}

/// Extracts a derivation family; raises `ExtractError` naming the failed stage.
#[pyfunction]
#[pyo3(signature = (l, tol = 1e-9, check_preconditions = true))]
fn decompose(
    py: Python<'_>,
    l: &PySuperOperator,
    tol: f64,
    check_preconditions: bool,
) -> PyResult<PyExtractionResult> {
    let d = Decomposer {
        tol,
        check_preconditions,
        ..Decomposer::default()
    };
    let out = py
        .detach(|| d.decompose(&l.inner))
        .map_err(|e| ExtractError::new_err(e.to_string()))?;
    Ok(PyExtractionResult {
        family: Py::new(py, PyDerivationFamily { inner: out.family })?,
        kraus: out.kraus.iter().map(element_to_py).collect(),
        kossakowski_eigenvalues: out.kossakowski_eigenvalues,
        roundtrip_residual: out.roundtrip_residual,
        reports: out
            .reports
            .iter()
            .map(|r| Py::new(py, PyCheckReport::from(r)))
            .collect::<PyResult<_>>()?,
    })
}

/// Monte Carlo estimate of `E[U_t* x U_t]` next to `exp(tℒ)(x)`.
#[pyfunction]
#[pyo3(signature = (family, x, t = 1.0, paths = 20_000, steps = 1000, seed = 0, scheme = "unitary"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    family: &PyDerivationFamily,
    x: Element,
    t: f64,
    paths: usize,
    steps: usize,
    seed: u64,
    scheme: &str,
) -> PyResult<PyDilationEstimate> {
    let f = &family.inner;
    let x = element_from_py(f.structure(), &x)?;
    let scheme: Scheme = scheme.parse().map_err(err)?;
    let cfg = DilationConfig {
        t_final: t,
        n_paths: paths,
        n_steps: steps,
        seed,
        scheme,
    };
    let cmp = py
        .detach(|| compare_with_semigroup(f, &x, &cfg))
        .map_err(err)?;
    Ok(PyDilationEstimate {
        mean: element_to_py(&cmp.mc.mean),
        exact: element_to_py(&cmp.exact),
        std_error: cmp
            .mc
            .std_error
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect())
                    .collect()
            })
            .collect(),
        max_abs_z: cmp.max_abs_z(),
        fraction_within_4: cmp.fraction_within(4.0),
        max_unitarity_defect: cmp.mc.max_unitarity_defect,
    })
}

/// Sample mean only, skipping the exact semigroup.
#[pyfunction]
#[pyo3(signature = (family, x, t = 1.0, paths = 20_000, steps = 1000, seed = 0))]
fn dilation_mean(
    py: Python<'_>,
    family: &PyDerivationFamily,
    x: Element,
    t: f64,
    paths: usize,
    steps: usize,
    seed: u64,
) -> PyResult<Element> {
    let f = &family.inner;
    let x = element_from_py(f.structure(), &x)?;
    let cfg = DilationConfig {
        t_final: t,
        n_paths: paths,
        n_steps: steps,
        seed,
        scheme: Scheme::UnitaryIncrement,
    };
    py.detach(|| mc_simulate(f, &x, &cfg))
        .map(|e| element_to_py(&e.mean))
        .map_err(err)
}

/// Corner checks for the central-difference derivatives of a grid.
#[pyfunction]
#[pyo3(signature = (dim = 1, size = 64, spacing = 1.0, ms = vec![4, 8, 16], tol = 1e-10))]
fn corner(
    py: Python<'_>,
    dim: usize,
    size: usize,
    spacing: f64,
    ms: Vec<usize>,
    tol: f64,
) -> PyResult<Vec<PyCornerRow>> {
    let grid = GridSpec::new(dim, size, spacing).map_err(err)?;
    let rows = py
        .detach(|| proposition_suite(&grid, &ms, tol))
        .map_err(err)?;
    rows.iter()
        .map(|r| {
            let checks = [
                &r.invariance,
                &r.invariance_below,
                &r.traceless,
                &r.weak_form,
                &r.domination,
            ]
            .into_iter()
            .map(|c| Py::new(py, PyCheckReport::from(c)))
            .collect::<PyResult<_>>()?;
            Ok(PyCornerRow {
                m: r.m,
                mapping_bound: r.mapping_bound,
                n_derivations: r.n_derivations,
                checks,
            })
        })
        .collect()
}

#[pymodule]
fn qds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QdsError", m.py().get_type::<QdsError>())?;
    m.add("ExtractError", m.py().get_type::<ExtractError>())?;
    m.add_class::<PyBlockStructure>()?;
    m.add_class::<PySuperOperator>()?;
    m.add_class::<PyDerivationFamily>()?;
    m.add_class::<PyCheckReport>()?;
    m.add_class::<PyExtractionResult>()?;
    m.add_class::<PyDilationEstimate>()?;
    m.add_class::<PyCornerRow>()?;
    m.add_function(wrap_pyfunction!(py_check_conservative, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_ccp, m)?)?;
    m.add_function(wrap_pyfunction!(py_relation2_check, m)?)?;
    m.add_function(wrap_pyfunction!(py_check_cp_map, m)?)?;
    m.add_function(wrap_pyfunction!(check_all, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(dilation_mean, m)?)?;
    m.add_function(wrap_pyfunction!(corner, m)?)?;
    Ok(())
}
