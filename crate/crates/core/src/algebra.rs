//! Finite-dimensional C*-algebras `A = ⊕_k M_{n_k}(ℂ)`, their elements, and
//! matrices over them.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, psd_check, scale, ComplexMatrix, TolerancePolicy, ONE};

/// Block sizes `(n_1, …, n_K)` of a direct sum of full matrix algebras.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CStarSignature {
    block_dims: Vec<usize>,
}

impl CStarSignature {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "signature needs at least one block and positive block sizes, got {block_dims:?}"
            )));
        }
        Ok(Self { block_dims })
    }

    /// The scalars, `M_1(ℂ)`.
    pub fn complex() -> Self {
        Self { block_dims: vec![1] }
    }

    /// `ℂ^q`: `q` one-dimensional blocks.
    pub fn commutative(q: usize) -> Result<Self> {
        Self::new(vec![1; q])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn block_dim(&self, k: usize) -> usize {
        self.block_dims[k]
    }

    /// Complex dimension `Σ n_k²`.
    pub fn dimension(&self) -> usize {
        self.block_dims.iter().map(|n| n * n).sum()
    }

    /// Sum of block sizes, the trace of the unit.
    pub fn total_size(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub(crate) fn check_same(&self, other: &CStarSignature) -> Result<()> {
        if self != other {
            return Err(Error::SignatureMismatch {
                left: self.block_dims.clone(),
                right: other.block_dims.clone(),
            });
        }
        Ok(())
    }

    /// Position of `E^{(block)}_{row,col}` in [`matrix_units`] order.
    pub fn unit_index(&self, unit: MatrixUnit) -> usize {
        let offset: usize = self.block_dims[..unit.block].iter().map(|n| n * n).sum();
        offset + unit.row * self.block_dims[unit.block] + unit.col
    }

    /// All matrix units in (block, row, column) order.
    pub fn units(&self) -> Vec<MatrixUnit> {
        let mut out = Vec::with_capacity(self.dimension());
        for (block, &n) in self.block_dims.iter().enumerate() {
            for row in 0..n {
                for col in 0..n {
                    out.push(MatrixUnit { block, row, col });
                }
            }
        }
        out
    }
}

/// Label of the matrix unit `E^{(block)}_{row,col}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixUnit {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}

impl MatrixUnit {
    pub fn adjoint(self) -> Self {
        Self {
            block: self.block,
            row: self.col,
            col: self.row,
        }
    }

    /// `E_ij E_kl = δ_jk E_il` within a block, zero across blocks.
    pub fn product(self, other: MatrixUnit) -> Option<MatrixUnit> {
        (self.block == other.block && self.col == other.row).then_some(MatrixUnit {
            block: self.block,
            row: self.row,
            col: other.col,
        })
    }

    pub fn is_diagonal(self) -> bool {
        self.row == self.col
    }
}

/// An element of `⊕_k M_{n_k}(ℂ)`, one square block per summand.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElement {
    signature: CStarSignature,
    blocks: Vec<ComplexMatrix>,
}

impl AlgElement {
    pub fn new(signature: CStarSignature, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != signature.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for a signature with {}",
                blocks.len(),
                signature.num_blocks()
            )));
        }
        for (k, (b, &n)) in blocks.iter().zip(signature.block_dims()).enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "block {k} is {}x{}, expected {n}x{n}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { signature, blocks })
    }

    pub fn zero(signature: &CStarSignature) -> Self {
        let blocks = signature.block_dims().iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    pub fn identity(signature: &CStarSignature) -> Self {
        Self::scalar(signature, ONE)
    }

    pub fn scalar(signature: &CStarSignature, c: Complex64) -> Self {
        let blocks = signature
            .block_dims()
            .iter()
            .map(|&n| ComplexMatrix::identity(n).scale(c))
            .collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    pub fn unit(signature: &CStarSignature, unit: MatrixUnit) -> Self {
        let mut e = Self::zero(signature);
        e.blocks[unit.block][(unit.row, unit.col)] = ONE;
        e
    }

    /// Builds the element block by block from a closure `(k, n_k) -> block`.
    pub fn from_blocks_fn(signature: &CStarSignature, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let blocks = signature.block_dims().iter().enumerate().map(|(k, &n)| f(k, n)).collect();
        Self::new(signature.clone(), blocks)
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    /// Coefficient on the matrix unit `unit`.
    pub fn coefficient(&self, unit: MatrixUnit) -> Complex64 {
        self.blocks[unit.block][(unit.row, unit.col)]
    }

    pub fn try_mul(&self, other: &AlgElement) -> Result<AlgElement> {
        self.signature.check_same(&other.signature)?;
        Ok(self.zip_blocks(other, |a, b| a * b))
    }

    pub fn try_add(&self, other: &AlgElement) -> Result<AlgElement> {
        self.signature.check_same(&other.signature)?;
        Ok(self.zip_blocks(other, |a, b| a + b))
    }

    fn zip_blocks(&self, other: &AlgElement, f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix) -> AlgElement {
        AlgElement {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn map_blocks(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> AlgElement {
        AlgElement {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn adjoint(&self) -> AlgElement {
        self.map_blocks(ComplexMatrix::adjoint)
    }

    pub fn scale(&self, c: Complex64) -> AlgElement {
        self.map_blocks(|b| b.scale(c))
    }

    /// C*-norm: the largest operator norm over blocks.
    pub fn norm(&self) -> f64 {
        let tol = TolerancePolicy::default();
        self.blocks
            .iter()
            .map(|b| {
                let gram = (&b.adjoint() * b).hermitian_part();
                let eig = hermitian_eig(&gram, &tol).expect("a*a is Hermitian");
                eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Frobenius distance over all blocks; infinite across signatures.
    pub fn distance(&self, other: &AlgElement) -> f64 {
        if self.signature != other.signature {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Sum of block traces.
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(ComplexMatrix::trace).sum()
    }

    pub fn is_hermitian(&self, tol: &TolerancePolicy) -> bool {
        self.blocks
            .iter()
            .all(|b| b.hermitian_deviation() <= tol.hermiticity_tol * scale(b.frobenius_norm()))
    }

    /// `a ≥ 0`: every block Hermitian and positive semidefinite within `tol`.
    pub fn is_positive(&self, tol: &TolerancePolicy) -> bool {
        self.is_hermitian(tol) && self.blocks.iter().all(|b| psd_check(b, tol).unwrap_or(false))
    }

    /// `‖u*u − e‖ + ‖uu* − e‖`.
    pub fn unitarity_defect(&self) -> f64 {
        let e = AlgElement::identity(&self.signature);
        let uu = self.adjoint().try_mul(self).expect("same signature");
        let vv = self.try_mul(&self.adjoint()).expect("same signature");
        uu.distance(&e) + vv.distance(&e)
    }
}

impl Mul for &AlgElement {
    type Output = AlgElement;

    fn mul(self, rhs: &AlgElement) -> AlgElement {
        self.try_mul(rhs).expect("signature mismatch in product")
    }
}

impl Add for &AlgElement {
    type Output = AlgElement;

    fn add(self, rhs: &AlgElement) -> AlgElement {
        self.try_add(rhs).expect("signature mismatch in sum")
    }
}

impl Sub for &AlgElement {
    type Output = AlgElement;

    fn sub(self, rhs: &AlgElement) -> AlgElement {
        self.signature.check_same(&rhs.signature).expect("signature mismatch in difference");
        self.zip_blocks(rhs, |a, b| a - b)
    }
}

/// The canonical basis `E^{(k)}_{ij}` in (block, row, column) order.
pub fn matrix_units(signature: &CStarSignature) -> Vec<AlgElement> {
    signature.units().into_iter().map(|u| AlgElement::unit(signature, u)).collect()
}

/// An `m×m` matrix with entries in `A`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOverA {
    signature: CStarSignature,
    m: usize,
    entries: Vec<AlgElement>,
}

impl MatrixOverA {
    pub fn new(signature: CStarSignature, m: usize, entries: Vec<AlgElement>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::ShapeMismatch(format!("{} entries for an {m}x{m} matrix over A", entries.len())));
        }
        for e in &entries {
            signature.check_same(e.signature())?;
        }
        Ok(Self { signature, m, entries })
    }

    pub fn from_fn(signature: &CStarSignature, m: usize, mut f: impl FnMut(usize, usize) -> AlgElement) -> Result<Self> {
        let mut entries = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                entries.push(f(i, j));
            }
        }
        Self::new(signature.clone(), m, entries)
    }

    pub fn zeros(signature: &CStarSignature, m: usize) -> Self {
        Self {
            signature: signature.clone(),
            m,
            entries: vec![AlgElement::zero(signature); m * m],
        }
    }

    pub fn identity(signature: &CStarSignature, m: usize) -> Self {
        let mut out = Self::zeros(signature, m);
        for i in 0..m {
            out.entries[i * m + i] = AlgElement::identity(signature);
        }
        out
    }

    /// `(a_i* a_j)_{ij}`.
    pub fn outer(tuple: &[AlgElement]) -> Result<Self> {
        let first = tuple
            .first()
            .ok_or_else(|| Error::InvalidInput("empty tuple".into()))?;
        let sig = first.signature().clone();
        let adj: Vec<AlgElement> = tuple.iter().map(AlgElement::adjoint).collect();
        let mut entries = Vec::with_capacity(tuple.len() * tuple.len());
        for a in &adj {
            for b in tuple {
                entries.push(a.try_mul(b)?);
            }
        }
        Self::new(sig, tuple.len(), entries)
    }

    /// Rebuilds a matrix over `A` from its per-block flattenings.
    pub fn from_flattened(signature: &CStarSignature, m: usize, flats: &[ComplexMatrix]) -> Result<Self> {
        if flats.len() != signature.num_blocks() {
            return Err(Error::ShapeMismatch("one flattened block per summand expected".into()));
        }
        for (k, f) in flats.iter().enumerate() {
            let d = m * signature.block_dim(k);
            if f.shape() != (d, d) {
                return Err(Error::ShapeMismatch(format!("flattened block {k} should be {d}x{d}")));
            }
        }
        Self::from_fn(signature, m, |i, j| {
            AlgElement::from_blocks_fn(signature, |k, n| flats[k].submatrix(i * n, j * n, n, n))
                .expect("shapes checked")
        })
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &AlgElement {
        &self.entries[i * self.m + j]
    }

    pub fn entries(&self) -> &[AlgElement] {
        &self.entries
    }

    /// Block `k` of every entry, assembled into an `(m·n_k)×(m·n_k)` matrix.
    pub fn flatten(&self, k: usize) -> ComplexMatrix {
        let n = self.signature.block_dim(k);
        let mut out = ComplexMatrix::zeros(self.m * n, self.m * n);
        for i in 0..self.m {
            for j in 0..self.m {
                out.set_submatrix(i * n, j * n, self.entry(i, j).block(k));
            }
        }
        out
    }

    pub fn flattened(&self) -> Vec<ComplexMatrix> {
        (0..self.signature.num_blocks()).map(|k| self.flatten(k)).collect()
    }

    /// The *-transpose `(a_ji*)_{ij}`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(&self.signature, self.m, |i, j| self.entry(j, i).adjoint()).expect("same shape")
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            signature: self.signature.clone(),
            m: self.m,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn try_add(&self, other: &MatrixOverA) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self::new(self.signature.clone(), self.m, entries)
    }

    pub fn try_sub(&self, other: &MatrixOverA) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Self::new(self.signature.clone(), self.m, entries)
    }

    fn check_same_shape(&self, other: &MatrixOverA) -> Result<()> {
        self.signature.check_same(&other.signature)?;
        if self.m != other.m {
            return Err(Error::DimensionMismatch(format!("{}x{} vs {}x{} over A", self.m, self.m, other.m, other.m)));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &MatrixOverA) -> f64 {
        if self.signature != other.signature || self.m != other.m {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_self_adjoint(&self, tol: &TolerancePolicy) -> bool {
        self.distance(&self.adjoint()) <= tol.hermiticity_tol * scale(self.frobenius_norm())
    }

    /// Positive in `M_m(A)`: every flattened block is PSD within `tol`.
    pub fn is_positive(&self, tol: &TolerancePolicy) -> bool {
        self.flattened().iter().all(|f| psd_check(f, tol).unwrap_or(false))
    }

    /// As `is_positive`, but an eigensolver failure is an error instead of a
    /// negative verdict. A non-Hermitian block is still `Ok(false)`.
    pub fn try_is_positive(&self, tol: &TolerancePolicy) -> Result<bool> {
        for f in self.flattened() {
            match psd_check(&f, tol) {
                Ok(true) => {}
                Ok(false) | Err(Error::NotHermitian { .. }) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    }

    /// Smallest eigenvalue over all flattened blocks and the block attaining
    /// it, or `None` when some block is not Hermitian.
    pub fn min_eigenvalue(&self, tol: &TolerancePolicy) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (k, f) in self.flattened().iter().enumerate() {
            let eig = hermitian_eig(f, tol).ok()?;
            let lo = eig.eigenvalues.last().copied().unwrap_or(0.0);
            if best.is_none_or(|(b, _)| lo < b) {
                best = Some((lo, k));
            }
        }
        best
    }

    /// `Σ_ij a_i* G_ij a_j`.
    pub fn compress(&self, tuple: &[AlgElement]) -> Result<AlgElement> {
        if tuple.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "tuple of length {} for an {}x{} matrix",
                tuple.len(),
                self.m,
                self.m
            )));
        }
        let mut acc = AlgElement::zero(&self.signature);
        for (i, ai) in tuple.iter().enumerate() {
            let left = ai.adjoint();
            for (j, aj) in tuple.iter().enumerate() {
                acc = acc.try_add(&left.try_mul(self.entry(i, j))?.try_mul(aj)?)?;
            }
        }
        Ok(acc)
    }

    /// Whether `Σ_ij a_i* G_ij a_j ≥ 0` for the given tuple.
    pub fn compress_test(&self, tuple: &[AlgElement], tol: &TolerancePolicy) -> Result<bool> {
        Ok(self.compress(tuple)?.is_positive(tol))
    }

    /// Sum of all entries.
    pub fn entry_sum(&self) -> AlgElement {
        self.entries.iter().fold(AlgElement::zero(&self.signature), |acc, e| &acc + e)
    }
}

/// `b = Σ c_i u_i` with each `u_i` unitary.
#[derive(Debug, Clone)]
pub struct FourUnitaries {
    pub coeffs: [Complex64; 4],
    pub unitaries: [AlgElement; 4],
}

impl FourUnitaries {
    pub fn reconstruct(&self) -> AlgElement {
        let sig = self.unitaries[0].signature();
        self.coeffs
            .iter()
            .zip(&self.unitaries)
            .fold(AlgElement::zero(sig), |acc, (c, u)| &acc + &u.scale(*c))
    }
}

/// Writes `b` as a linear combination of four unitaries.
///
/// `b = h + i·k` with `h, k` Hermitian; a Hermitian `x` with `‖x‖ ≤ 1` equals
/// `(u + u*)/2` for the unitary `u = x + i·√(1 − x²)`.
pub fn four_unitaries(b: &AlgElement) -> Result<FourUnitaries> {
    let half = Complex64::new(0.5, 0.0);
    let h = (b + &b.adjoint()).scale(half);
    let k = (b - &b.adjoint()).scale(Complex64::new(0.0, -0.5));

    let (s, u1) = hermitian_to_unitary(&h)?;
    let (t, u2) = hermitian_to_unitary(&k)?;
    let i = Complex64::new(0.0, 1.0);
    Ok(FourUnitaries {
        coeffs: [half * s, half * s, i * half * t, i * half * t],
        unitaries: [u1.clone(), u1.adjoint(), u2.clone(), u2.adjoint()],
    })
}

/// Returns `(‖x‖, u)` with `x = ‖x‖·(u + u*)/2`.
fn hermitian_to_unitary(x: &AlgElement) -> Result<(f64, AlgElement)> {
    let norm = x.norm();
    if norm == 0.0 {
        return Ok((0.0, AlgElement::identity(x.signature())));
    }
    let tol = TolerancePolicy::default();
    let y = x.scale(Complex64::new(1.0 / norm, 0.0));
    let u = AlgElement::from_blocks_fn(x.signature(), |kb, n| {
        let block = y.block(kb).hermitian_part();
        let eig = hermitian_eig(&block, &tol).expect("Hermitian by construction");
        let phases: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                let l = l.clamp(-1.0, 1.0);
                Complex64::new(l, (1.0 - l * l).max(0.0).sqrt())
            })
            .collect();
        let v = &eig.vectors;
        let d = ComplexMatrix::diagonal(&phases);
        let u = &(v * &d) * &v.adjoint();
        debug_assert_eq!(u.rows(), n);
        u
    })?;
    Ok((norm, u))
}
