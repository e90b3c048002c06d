//! On-disk representation of instances and results. Complex numbers are
//! `[re, im]`, matrices are arrays of rows, algebra elements are arrays of
//! blocks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, CStarSignature, MatrixOverA};
use crate::error::{Error, Result};
use crate::ksgns::Clause;
use crate::modules::{AdjointableMap, HilbertModule, ModuleMap, SesquiMap};
use crate::numkernel::{ComplexMatrix, TolerancePolicy};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;
/// One matrix per block.
pub type JsonBlocks = Vec<JsonMatrix>;
/// `m × m` array of algebra elements.
pub type JsonGram = Vec<Vec<JsonBlocks>>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hermiticity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
}

impl ToleranceOverride {
    pub fn apply(&self, base: TolerancePolicy) -> Result<TolerancePolicy> {
        TolerancePolicy::new(
            self.hermiticity_tol.unwrap_or(base.hermiticity_tol),
            self.psd_tol.unwrap_or(base.psd_tol),
            self.rank_cutoff.unwrap_or(base.rank_cutoff),
            self.residual_tol.unwrap_or(base.residual_tol),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceFile {
    Kernel {
        algebra: Vec<usize>,
        m: usize,
        points: Vec<String>,
        /// `table[x][y]` is the Gram of `K(x, y)`.
        table: Vec<Vec<JsonGram>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceOverride>,
    },
    Cpmap {
        algebra: Vec<usize>,
        domain: Vec<usize>,
        m: usize,
        /// Values on the matrix units of the domain, block by block, row-major.
        values: Vec<JsonGram>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceOverride>,
    },
    Povm {
        algebra: Vec<usize>,
        m: usize,
        effects: Vec<JsonGram>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceOverride>,
    },
    Measure {
        algebra: Vec<usize>,
        m: usize,
        atoms: Vec<String>,
        values: Vec<JsonGram>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<ToleranceOverride>,
    },
}

impl InstanceFile {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Kernel { .. } => "kernel",
            Self::Cpmap { .. } => "cpmap",
            Self::Povm { .. } => "povm",
            Self::Measure { .. } => "measure",
        }
    }

    pub fn tolerance(&self) -> Option<&ToleranceOverride> {
        match self {
            Self::Kernel { tolerance, .. }
            | Self::Cpmap { tolerance, .. }
            | Self::Povm { tolerance, .. }
            | Self::Measure { tolerance, .. } => tolerance.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Output {
    /// `D(x)` per point, one `r_k × m·n_k` matrix per block.
    Decomposition { points: Vec<String>, maps: Vec<JsonBlocks> },
    /// `π` on each matrix unit `[block, row, col]`, `J`, and `D(u) = π(u)J`.
    Dilation {
        units: Vec<[usize; 3]>,
        pi: Vec<JsonBlocks>,
        j: JsonBlocks,
        d: Vec<JsonBlocks>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalized: Option<bool>,
    },
    /// Dominating masses per atom and the density Grams.
    Density {
        atoms: Vec<String>,
        dominating: Vec<f64>,
        user_supplied: bool,
        densities: Vec<JsonGram>,
    },
    /// Positivity verdict and witness.
    Check(CheckReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub positive: bool,
    pub certificate: String,
    /// Absent when the Gram is not Hermitian.
    pub min_eigenvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplification_positive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub toolkit_version: String,
    pub input_digest: String,
    pub command: String,
    pub kind: String,
    pub seed: u64,
    pub trials: usize,
    pub tolerance: TolerancePolicy,
    pub ranks: Vec<usize>,
    pub output: Output,
    pub residuals: Vec<Clause>,
    pub passed: bool,
}

/// Weights file for `density`: either the `m × m` weights `p_ij` (row-major)
/// or a dominating measure given by its atom masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum WeightsFile {
    Weights { weights: Vec<f64> },
    Dominating { dominating: Vec<f64> },
}

pub fn complex_to_json(z: Complex64) -> JsonComplex {
    [z.re, z.im]
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows()).map(|i| m.row(i).iter().map(|z| complex_to_json(*z)).collect()).collect()
}

/// Parses a `rows × cols` matrix; an empty array is accepted when `rows = 0`.
pub fn matrix_from_json(j: &JsonMatrix, rows: usize, cols: usize, what: &str) -> Result<ComplexMatrix> {
    if j.len() != rows || j.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch(format!("{what}: expected a {rows}x{cols} matrix")));
    }
    let data = j.iter().flatten().map(|[re, im]| Complex64::new(*re, *im)).collect();
    ComplexMatrix::new(rows, cols, data)
}

pub fn element_to_json(a: &AlgElement) -> JsonBlocks {
    a.blocks().iter().map(matrix_to_json).collect()
}

pub fn element_from_json(sig: &CStarSignature, j: &JsonBlocks, what: &str) -> Result<AlgElement> {
    if j.len() != sig.num_blocks() {
        return Err(Error::ShapeMismatch(format!("{what}: expected {} blocks", sig.num_blocks())));
    }
    let blocks = j
        .iter()
        .enumerate()
        .map(|(k, b)| matrix_from_json(b, sig.block_dim(k), sig.block_dim(k), what))
        .collect::<Result<_>>()?;
    AlgElement::new(sig.clone(), blocks)
}

pub fn gram_to_json(s: &SesquiMap) -> JsonGram {
    let m = s.width();
    (0..m)
        .map(|i| (0..m).map(|j| element_to_json(s.gram().entry(i, j))).collect())
        .collect()
}

pub fn gram_from_json(sig: &CStarSignature, m: usize, j: &JsonGram, what: &str) -> Result<SesquiMap> {
    if j.len() != m || j.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch(format!("{what}: expected a {m}x{m} Gram")));
    }
    let entries = j
        .iter()
        .flatten()
        .map(|e| element_from_json(sig, e, what))
        .collect::<Result<_>>()?;
    Ok(SesquiMap::new(MatrixOverA::new(sig.clone(), m, entries)?))
}

pub fn module_map_to_json(f: &ModuleMap) -> JsonBlocks {
    (0..f.codomain().signature().num_blocks())
        .map(|k| matrix_to_json(&f.block_matrix(k)))
        .collect()
}

pub fn module_map_from_json(module: &HilbertModule, m: usize, j: &JsonBlocks, what: &str) -> Result<ModuleMap> {
    let sig = module.signature();
    if j.len() != sig.num_blocks() {
        return Err(Error::ShapeMismatch(format!("{what}: expected {} blocks", sig.num_blocks())));
    }
    let mats: Vec<ComplexMatrix> = j
        .iter()
        .enumerate()
        .map(|(k, b)| matrix_from_json(b, module.rank(k), m * sig.block_dim(k), what))
        .collect::<Result<_>>()?;
    ModuleMap::from_block_matrices(module, m, &mats)
}

pub fn adjointable_to_json(t: &AdjointableMap) -> JsonBlocks {
    t.blocks().iter().map(matrix_to_json).collect()
}

pub fn adjointable_from_json(module: &HilbertModule, j: &JsonBlocks, what: &str) -> Result<AdjointableMap> {
    if j.len() != module.signature().num_blocks() {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {} blocks",
            module.signature().num_blocks()
        )));
    }
    let blocks = j
        .iter()
        .enumerate()
        .map(|(k, b)| matrix_from_json(b, module.rank(k), module.rank(k), what))
        .collect::<Result<_>>()?;
    AdjointableMap::new(module.clone(), module.clone(), blocks)
}
