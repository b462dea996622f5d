//! JSON problem files (`qds-spec-1`).
//!
//! Complex scalars are `[re, im]`, matrices are row-major nested arrays and
//! algebra elements are lists of blocks. See `docs/FORMAT.md` for the full
//! description, including the basis behind the `superop` variant.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qds_core::{AlgebraElement, BlockStructure, DerivationFamily, SuperOperator};
use serde::{Deserialize, Serialize};

use crate::InputError;

pub const SPEC_SCHEMA: &str = "qds-spec-1";
pub const HS_BASIS_TAG: &str = "hs-orthonormal-v1";

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;
pub type ElementJson = Vec<MatrixJson>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub schema: String,
    pub structure: StructureSpec,
    pub generator: GeneratorSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub dims: Vec<usize>,
    /// Trace weights; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Anti-self-adjoint `H_j` of `ℒ = ½ Σ_j [H_j, [H_j, ·]]`.
    Derivations(Vec<ElementJson>),
    Superop(SuperopSpec),
    Gkls(GklsSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperopSpec {
    pub basis: String,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GklsSpec {
    pub kraus: Vec<ElementJson>,
    pub k: ElementJson,
    pub h: ElementJson,
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError::new(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| InputError::new(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            // serde_json's message already ends with the line and column
            InputError::new(format!("field `{}`: {}", e.path(), e.inner()))
        })?;
        if spec.schema != SPEC_SCHEMA {
            return Err(InputError::new(format!(
                "field `schema`: expected \"{SPEC_SCHEMA}\", found \"{}\"",
                spec.schema
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite values serialize")
    }

    pub fn from_family(family: &DerivationFamily, metadata: BTreeMap<String, String>) -> Self {
        let s = family.structure();
        Self {
            schema: SPEC_SCHEMA.into(),
            structure: StructureSpec::from_structure(s),
            generator: GeneratorSpec::Derivations(
                family.generators().iter().map(element_to_json).collect(),
            ),
            metadata,
        }
    }
}

impl StructureSpec {
    pub fn from_structure(s: &BlockStructure) -> Self {
        let weights = (!s.weights().iter().all(|&w| w == 1.0)).then(|| s.weights().to_vec());
        Self {
            dims: s.dims().to_vec(),
            weights,
        }
    }

    pub fn build(&self, weights_override: Option<&[f64]>) -> Result<BlockStructure, InputError> {
        let weights = match (weights_override, &self.weights) {
            (Some(w), _) => w.to_vec(),
            (None, Some(w)) => w.clone(),
            (None, None) => vec![1.0; self.dims.len()],
        };
        BlockStructure::new(self.dims.clone(), weights)
            .map_err(|e| InputError::new(format!("field `structure`: {e}")))
    }
}

/// A parsed problem with every matrix checked against the structure.
pub struct Resolved {
    pub structure: BlockStructure,
    pub generator: SuperOperator,
    /// Present when the file gives derivations directly.
    pub family: Option<DerivationFamily>,
}

impl ProblemSpec {
    /// Builds the generator; `weights_override` replaces the file's weights
    /// (a `superop` matrix is read in the file's basis and re-expressed).
    pub fn resolve(&self, weights_override: Option<&[f64]>) -> Result<Resolved, InputError> {
        let file_structure = self.structure.build(None)?;
        let structure = self.structure.build(weights_override)?;
        match &self.generator {
            GeneratorSpec::Derivations(hs) => {
                let elements = hs
                    .iter()
                    .enumerate()
                    .map(|(j, h)| {
                        element_from_json(&structure, h, &format!("generator.derivations[{j}]"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let family = DerivationFamily::new(structure.clone(), elements)
                    .map_err(|e| InputError::new(format!("field `generator.derivations`: {e}")))?;
                Ok(Resolved {
                    structure,
                    generator: family.build(),
                    family: Some(family),
                })
            }
            GeneratorSpec::Superop(op) => {
                if op.basis != HS_BASIS_TAG {
                    return Err(InputError::new(format!(
                        "field `generator.superop.basis`: expected \"{HS_BASIS_TAG}\", found \"{}\"",
                        op.basis
                    )));
                }
                let d = file_structure.algebra_dim();
                let m = matrix_from_json(&op.matrix, d, d, "generator.superop.matrix")?;
                let l = SuperOperator::from_matrix(file_structure, m)
                    .and_then(|l| l.reexpress(structure.clone()))
                    .map_err(|e| InputError::new(format!("field `generator.superop`: {e}")))?;
                Ok(Resolved {
                    structure,
                    generator: l,
                    family: None,
                })
            }
            GeneratorSpec::Gkls(g) => {
                let kraus = g
                    .kraus
                    .iter()
                    .enumerate()
                    .map(|(j, r)| {
                        element_from_json(&structure, r, &format!("generator.gkls.kraus[{j}]"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let k = element_from_json(&structure, &g.k, "generator.gkls.k")?;
                let h = element_from_json(&structure, &g.h, "generator.gkls.h")?;
                let l = SuperOperator::gkls(structure.clone(), &kraus, &k, &h)
                    .map_err(|e| InputError::new(format!("field `generator.gkls`: {e}")))?;
                Ok(Resolved {
                    structure,
                    generator: l,
                    family: None,
                })
            }
        }
    }
}

pub fn matrix_from_json(
    m: &MatrixJson,
    rows: usize,
    cols: usize,
    field: &str,
) -> Result<DMatrix<Complex64>, InputError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let found_cols = m.first().map_or(0, Vec::len);
        return Err(InputError::new(format!(
            "field `{field}`: expected a {rows}x{cols} matrix, found {} rows (first row has {found_cols} entries)",
            m.len()
        )));
    }
    if m.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(InputError::new(format!(
            "field `{field}`: non-finite entry"
        )));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(m[i][j][0], m[i][j][1])
    }))
}

pub fn matrix_to_json(m: &DMatrix<Complex64>) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn element_from_json(
    s: &BlockStructure,
    e: &ElementJson,
    field: &str,
) -> Result<AlgebraElement, InputError> {
    if e.len() != s.num_blocks() {
        return Err(InputError::new(format!(
            "field `{field}`: expected {} blocks, found {}",
            s.num_blocks(),
            e.len()
        )));
    }
    let blocks = e
        .iter()
        .zip(s.dims())
        .enumerate()
        .map(|(k, (b, &n))| matrix_from_json(b, n, n, &format!("{field}[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    s.element(blocks)
        .map_err(|err| InputError::new(format!("field `{field}`: {err}")))
}

pub fn element_to_json(a: &AlgebraElement) -> ElementJson {
    a.blocks().iter().map(matrix_to_json).collect()
}
