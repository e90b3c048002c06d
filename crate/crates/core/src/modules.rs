//! Free right modules `A^m`, `A`-sesquilinear maps on them, and Hilbert
//! `A`-modules in the normal form `⊕_k ℂ^{r_k×n_k}`.
//!
//! An `A`-sesquilinear map `s` on `A^m` is determined by its Gram matrix
//! `S_ij = s(e_i, e_j)`: `s(v, w) = Σ_ij v_i* S_ij w_j`.

use num_complex::Complex64;

use crate::algebra::{AlgElement, CStarSignature, MatrixOverA};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eig, scale, ComplexMatrix, TolerancePolicy};

/// An element `(v_1, …, v_m)` of the free right module `A^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    signature: CStarSignature,
    coords: Vec<AlgElement>,
}

impl ModuleElement {
    pub fn new(signature: CStarSignature, coords: Vec<AlgElement>) -> Result<Self> {
        for c in &coords {
            signature.check_same(c.signature())?;
        }
        Ok(Self { signature, coords })
    }

    pub fn zero(signature: &CStarSignature, m: usize) -> Self {
        Self {
            signature: signature.clone(),
            coords: vec![AlgElement::zero(signature); m],
        }
    }

    /// The `j`-th free generator `e_j`.
    pub fn generator(signature: &CStarSignature, m: usize, j: usize) -> Self {
        let mut v = Self::zero(signature, m);
        v.coords[j] = AlgElement::identity(signature);
        v
    }

    /// Rebuilds an element from its per-block stacked columns, each of shape
    /// `(m·n_k)×n_k`.
    pub fn from_stacked(signature: &CStarSignature, m: usize, stacked: &[ComplexMatrix]) -> Result<Self> {
        if stacked.len() != signature.num_blocks() {
            return Err(Error::ShapeMismatch("one stacked block per summand expected".into()));
        }
        for (k, s) in stacked.iter().enumerate() {
            let n = signature.block_dim(k);
            if s.shape() != (m * n, n) {
                return Err(Error::ShapeMismatch(format!("stacked block {k} should be {}x{n}", m * n)));
            }
        }
        let coords = (0..m)
            .map(|i| AlgElement::from_blocks_fn(signature, |k, n| stacked[k].submatrix(i * n, 0, n, n)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(signature.clone(), coords)
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn width(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[AlgElement] {
        &self.coords
    }

    /// `v·a`, coordinatewise right multiplication.
    pub fn right_mul(&self, a: &AlgElement) -> Result<Self> {
        let coords = self.coords.iter().map(|c| c.try_mul(a)).collect::<Result<_>>()?;
        Ok(Self {
            signature: self.signature.clone(),
            coords,
        })
    }

    pub fn try_add(&self, other: &ModuleElement) -> Result<Self> {
        self.check_compatible(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(Self {
            signature: self.signature.clone(),
            coords,
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            signature: self.signature.clone(),
            coords: self.coords.iter().map(|a| a.scale(c)).collect(),
        }
    }

    fn check_compatible(&self, other: &ModuleElement) -> Result<()> {
        self.signature.check_same(&other.signature)?;
        if self.width() != other.width() {
            return Err(Error::DimensionMismatch(format!("A^{} vs A^{}", self.width(), other.width())));
        }
        Ok(())
    }

    /// Block `k` of every coordinate stacked vertically: `(m·n_k)×n_k`.
    pub fn stacked(&self, k: usize) -> ComplexMatrix {
        let n = self.signature.block_dim(k);
        let mut out = ComplexMatrix::zeros(self.width() * n, n);
        for (i, c) in self.coords.iter().enumerate() {
            out.set_submatrix(i * n, 0, c.block(k));
        }
        out
    }

    pub fn distance(&self, other: &ModuleElement) -> f64 {
        if self.check_compatible(other).is_err() {
            return f64::INFINITY;
        }
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.coords.iter().map(|c| c.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// An `A`-sesquilinear map on `A^m`, stored as its Gram matrix over `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SesquiMap {
    gram: MatrixOverA,
}

impl SesquiMap {
    pub fn new(gram: MatrixOverA) -> Self {
        Self { gram }
    }

    pub fn zero(signature: &CStarSignature, m: usize) -> Self {
        Self::new(MatrixOverA::zeros(signature, m))
    }

    /// `s(v, w) = Σ_i v_i* w_i`.
    pub fn identity(signature: &CStarSignature, m: usize) -> Self {
        Self::new(MatrixOverA::identity(signature, m))
    }

    pub fn gram(&self) -> &MatrixOverA {
        &self.gram
    }

    pub fn width(&self) -> usize {
        self.gram.size()
    }

    pub fn signature(&self) -> &CStarSignature {
        self.gram.signature()
    }

    /// `s(v, w) = Σ_ij v_i* S_ij w_j`.
    pub fn eval(&self, v: &ModuleElement, w: &ModuleElement) -> Result<AlgElement> {
        if v.width() != self.width() || w.width() != self.width() {
            return Err(Error::DimensionMismatch(format!(
                "sesquilinear map on A^{} evaluated on A^{} x A^{}",
                self.width(),
                v.width(),
                w.width()
            )));
        }
        self.signature().check_same(v.signature())?;
        self.signature().check_same(w.signature())?;
        let mut acc = AlgElement::zero(self.signature());
        for (i, vi) in v.coords().iter().enumerate() {
            let left = vi.adjoint();
            for (j, wj) in w.coords().iter().enumerate() {
                acc = &acc + &(&(&left * self.gram.entry(i, j)) * wj);
            }
        }
        Ok(acc)
    }

    /// Positive iff the Gram is positive in `M_m(A)`, equivalently
    /// `s(v, v) ≥ 0` for every `v`.
    pub fn is_positive(&self, tol: &TolerancePolicy) -> bool {
        self.gram.is_positive(tol)
    }

    /// A vector `v` with `s(v, v)` not positive, built from the most negative
    /// eigendirection of a flattened Gram block.
    pub fn negative_witness(&self, tol: &TolerancePolicy) -> Option<ModuleElement> {
        let sig = self.signature();
        let m = self.width();
        for (k, flat) in self.gram.flattened().iter().enumerate() {
            let eig = hermitian_eig(flat, tol).ok()?;
            let Some(&lo) = eig.eigenvalues.last() else {
                continue;
            };
            if lo >= -tol.psd_tol * scale(eig.max_abs_eigenvalue()) {
                continue;
            }
            let col = eig.vectors.cols() - 1;
            let stacked: Vec<ComplexMatrix> = sig
                .block_dims()
                .iter()
                .enumerate()
                .map(|(kk, &n)| {
                    let mut s = ComplexMatrix::zeros(m * n, n);
                    if kk == k {
                        for r in 0..m * n {
                            s[(r, 0)] = eig.vectors[(r, col)];
                        }
                    }
                    s
                })
                .collect();
            return ModuleElement::from_stacked(sig, m, &stacked).ok();
        }
        None
    }

    /// The *-transpose `(S_ji*)`, i.e. `s*(v, w) = s(w, v)*`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.gram.adjoint())
    }

    pub fn try_add(&self, other: &SesquiMap) -> Result<Self> {
        Ok(Self::new(self.gram.try_add(&other.gram)?))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.gram.scale(c))
    }

    pub fn distance(&self, other: &SesquiMap) -> f64 {
        self.gram.distance(&other.gram)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.gram.frobenius_norm()
    }
}

/// A Hilbert `A`-module `⊕_k ℂ^{r_k×n_k}` with `⟨T|S⟩ = (T_k* S_k)_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertModule {
    signature: CStarSignature,
    ranks: Vec<usize>,
}

impl HilbertModule {
    pub fn new(signature: CStarSignature, ranks: Vec<usize>) -> Result<Self> {
        if ranks.len() != signature.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} ranks for a signature with {} blocks",
                ranks.len(),
                signature.num_blocks()
            )));
        }
        Ok(Self { signature, ranks })
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, k: usize) -> usize {
        self.ranks[k]
    }

    /// Complex dimension `Σ r_k·n_k`.
    pub fn complex_dimension(&self) -> usize {
        self.ranks.iter().zip(self.signature.block_dims()).map(|(r, n)| r * n).sum()
    }

    pub fn zero(&self) -> HilbertElement {
        HilbertElement {
            blocks: self
                .ranks
                .iter()
                .zip(self.signature.block_dims())
                .map(|(&r, &n)| ComplexMatrix::zeros(r, n))
                .collect(),
        }
    }

    pub fn element(&self, blocks: Vec<ComplexMatrix>) -> Result<HilbertElement> {
        let e = HilbertElement { blocks };
        self.check_element(&e)?;
        Ok(e)
    }

    pub fn check_element(&self, e: &HilbertElement) -> Result<()> {
        if e.blocks.len() != self.ranks.len() {
            return Err(Error::ShapeMismatch("wrong number of blocks for module element".into()));
        }
        for (k, b) in e.blocks.iter().enumerate() {
            let want = (self.ranks[k], self.signature.block_dim(k));
            if b.shape() != want {
                return Err(Error::ShapeMismatch(format!(
                    "module block {k} is {}x{}, expected {}x{}",
                    b.rows(),
                    b.cols(),
                    want.0,
                    want.1
                )));
            }
        }
        Ok(())
    }

    /// The `A`-valued inner product `⟨T|S⟩`.
    pub fn inner_product(&self, t: &HilbertElement, s: &HilbertElement) -> Result<AlgElement> {
        self.check_element(t)?;
        self.check_element(s)?;
        let blocks = t.blocks.iter().zip(&s.blocks).map(|(a, b)| &a.adjoint() * b).collect();
        AlgElement::new(self.signature.clone(), blocks)
    }
}

/// An element of a [`HilbertModule`]: one `r_k×n_k` block per summand.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertElement {
    blocks: Vec<ComplexMatrix>,
}

impl HilbertElement {
    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix> {
        self.blocks
    }

    /// `T·a`.
    pub fn right_mul(&self, a: &AlgElement) -> Result<Self> {
        if a.blocks().len() != self.blocks.len() {
            return Err(Error::ShapeMismatch("element and algebra have different block counts".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(a.blocks())
            .map(|(t, ak)| t.matmul(ak))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn try_add(&self, other: &HilbertElement) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    pub fn distance(&self, other: &HilbertElement) -> f64 {
        if self.blocks.len() != other.blocks.len() {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// An `A`-linear map `A^m → M`, determined by the images of the free
/// generators. Block `k` acts as the `r_k×(m·n_k)` matrix
/// `[g_1,k … g_m,k]` on stacked coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleMap {
    codomain: HilbertModule,
    images: Vec<HilbertElement>,
}

impl ModuleMap {
    pub fn new(codomain: HilbertModule, images: Vec<HilbertElement>) -> Result<Self> {
        for g in &images {
            codomain.check_element(g)?;
        }
        Ok(Self { codomain, images })
    }

    pub fn zero(codomain: &HilbertModule, m: usize) -> Self {
        Self {
            codomain: codomain.clone(),
            images: vec![codomain.zero(); m],
        }
    }

    /// Splits per-block matrices of shape `r_k×(m·n_k)` into generator images.
    pub fn from_block_matrices(codomain: &HilbertModule, m: usize, mats: &[ComplexMatrix]) -> Result<Self> {
        let sig = codomain.signature();
        if mats.len() != sig.num_blocks() {
            return Err(Error::ShapeMismatch("one block matrix per summand expected".into()));
        }
        let images = (0..m)
            .map(|j| {
                let blocks = mats
                    .iter()
                    .enumerate()
                    .map(|(k, mat)| {
                        let n = sig.block_dim(k);
                        mat.submatrix(0, j * n, codomain.rank(k), n)
                    })
                    .collect();
                codomain.element(blocks)
            })
            .collect::<Result<_>>()?;
        Self::new(codomain.clone(), images)
    }

    pub fn codomain(&self) -> &HilbertModule {
        &self.codomain
    }

    pub fn width(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[HilbertElement] {
        &self.images
    }

    pub fn image(&self, j: usize) -> &HilbertElement {
        &self.images[j]
    }

    /// `[g_1,k … g_m,k]`, an `r_k×(m·n_k)` matrix.
    pub fn block_matrix(&self, k: usize) -> ComplexMatrix {
        let n = self.codomain.signature().block_dim(k);
        let mut out = ComplexMatrix::zeros(self.codomain.rank(k), self.width() * n);
        for (j, g) in self.images.iter().enumerate() {
            out.set_submatrix(0, j * n, g.block(k));
        }
        out
    }

    /// `f(v) = Σ_j g_j·v_j`.
    pub fn apply(&self, v: &ModuleElement) -> Result<HilbertElement> {
        if v.width() != self.width() {
            return Err(Error::DimensionMismatch(format!(
                "map on A^{} applied to an element of A^{}",
                self.width(),
                v.width()
            )));
        }
        self.codomain.signature().check_same(v.signature())?;
        let blocks = (0..self.codomain.signature().num_blocks())
            .map(|k| &self.block_matrix(k) * &v.stacked(k))
            .collect();
        self.codomain.element(blocks)
    }

    pub fn try_add(&self, other: &ModuleMap) -> Result<Self> {
        if self.codomain != other.codomain || self.width() != other.width() {
            return Err(Error::ShapeMismatch("adding module maps with different shapes".into()));
        }
        let images = self
            .images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            codomain: self.codomain.clone(),
            images,
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            codomain: self.codomain.clone(),
            images: self.images.iter().map(|g| g.scale(c)).collect(),
        }
    }

    pub fn distance(&self, other: &ModuleMap) -> f64 {
        if self.width() != other.width() {
            return f64::INFINITY;
        }
        self.images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.images.iter().map(|g| g.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// The sesquilinear map `(v, w) ↦ ⟨f(v)|f(w)⟩`.
    pub fn pullback_gram(&self) -> SesquiMap {
        let sig = self.codomain.signature();
        let gram = MatrixOverA::from_fn(sig, self.width(), |i, j| {
            self.codomain
                .inner_product(&self.images[i], &self.images[j])
                .expect("images live in the codomain")
        })
        .expect("shapes consistent");
        SesquiMap::new(gram)
    }
}

/// An adjointable map between Hilbert modules over the same algebra, acting
/// by left multiplication with an `r'_k×r_k` matrix on each block. Left
/// multiplication commutes with the right `A`-action, so every such map is
/// `A`-linear; its adjoint is the blockwise conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointableMap {
    domain: HilbertModule,
    codomain: HilbertModule,
    blocks: Vec<ComplexMatrix>,
}

impl AdjointableMap {
    pub fn new(domain: HilbertModule, codomain: HilbertModule, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        domain.signature().check_same(codomain.signature())?;
        if blocks.len() != domain.ranks().len() {
            return Err(Error::ShapeMismatch("one block per summand expected".into()));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.shape() != (codomain.rank(k), domain.rank(k)) {
                return Err(Error::ShapeMismatch(format!(
                    "operator block {k} is {}x{}, expected {}x{}",
                    b.rows(),
                    b.cols(),
                    codomain.rank(k),
                    domain.rank(k)
                )));
            }
        }
        Ok(Self { domain, codomain, blocks })
    }

    pub fn identity(module: &HilbertModule) -> Self {
        Self {
            domain: module.clone(),
            codomain: module.clone(),
            blocks: module.ranks().iter().map(|&r| ComplexMatrix::identity(r)).collect(),
        }
    }

    pub fn zero(domain: &HilbertModule, codomain: &HilbertModule) -> Self {
        Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            blocks: domain
                .ranks()
                .iter()
                .zip(codomain.ranks())
                .map(|(&r, &rr)| ComplexMatrix::zeros(rr, r))
                .collect(),
        }
    }

    pub fn domain(&self) -> &HilbertModule {
        &self.domain
    }

    pub fn codomain(&self) -> &HilbertModule {
        &self.codomain
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    pub fn apply(&self, t: &HilbertElement) -> Result<HilbertElement> {
        self.domain.check_element(t)?;
        let blocks = self.blocks.iter().zip(t.blocks()).map(|(p, b)| p * b).collect();
        self.codomain.element(blocks)
    }

    /// `self ∘ f` for a map `f: A^m → domain`.
    pub fn compose_map(&self, f: &ModuleMap) -> Result<ModuleMap> {
        if f.codomain() != &self.domain {
            return Err(Error::ShapeMismatch("composition through different modules".into()));
        }
        let images = f.images().iter().map(|g| self.apply(g)).collect::<Result<_>>()?;
        ModuleMap::new(self.codomain.clone(), images)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AdjointableMap) -> Result<AdjointableMap> {
        if other.codomain != self.domain {
            return Err(Error::ShapeMismatch("composition through different modules".into()));
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect();
        AdjointableMap::new(other.domain.clone(), self.codomain.clone(), blocks)
    }

    pub fn adjoint(&self) -> AdjointableMap {
        AdjointableMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            blocks: self.blocks.iter().map(ComplexMatrix::adjoint).collect(),
        }
    }

    pub fn try_add(&self, other: &AdjointableMap) -> Result<AdjointableMap> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::ShapeMismatch("adding operators with different shapes".into()));
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect();
        Ok(AdjointableMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            blocks,
        })
    }

    pub fn scale(&self, c: Complex64) -> AdjointableMap {
        AdjointableMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    pub fn distance(&self, other: &AdjointableMap) -> f64 {
        if self.blocks.len() != other.blocks.len() {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// `‖U*U − I‖ + ‖UU* − I‖`, summed over blocks.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|u| {
                let uu = &u.adjoint() * u;
                let vv = u * &u.adjoint();
                uu.distance(&ComplexMatrix::identity(u.cols())) + vv.distance(&ComplexMatrix::identity(u.rows()))
            })
            .sum()
    }
}

/// A complex basis of the degenerate submodule
/// `{w ∈ A^m : s(v, w) = 0 for every listed s and every v}`.
#[derive(Debug, Clone)]
pub struct DegenerateSubmodule {
    pub signature: CStarSignature,
    pub width: usize,
    pub basis: Vec<ModuleElement>,
    /// Per block, an orthonormal basis (as columns) of the common null space
    /// of the flattened Grams.
    pub null_spaces: Vec<ComplexMatrix>,
}

impl DegenerateSubmodule {
    /// Complex dimension of the submodule.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Largest distance from `b·E` to the subspace, over basis elements `b`
    /// and matrix units `E` of `A`. Zero when the subspace is a submodule.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.basis {
            for unit in self.signature.units() {
                let moved = b
                    .right_mul(&AlgElement::unit(&self.signature, unit))
                    .expect("same signature");
                worst = worst.max(self.distance_to_span(&moved));
            }
        }
        worst
    }

    fn distance_to_span(&self, v: &ModuleElement) -> f64 {
        let mut acc = 0.0;
        for (k, null) in self.null_spaces.iter().enumerate() {
            let s = v.stacked(k);
            let proj = &(null * &null.adjoint()) * &s;
            acc += proj.distance(&s).powi(2);
        }
        acc.sqrt()
    }
}

/// Common degenerate directions of a family of sesquilinear maps on `A^m`.
///
/// Per block, the stacked columns of `w` must lie in the joint null space of
/// every flattened Gram; the basis pairs each null vector with each column
/// position.
pub fn degenerate_submodule(
    signature: &CStarSignature,
    m: usize,
    maps: &[SesquiMap],
    tol: &TolerancePolicy,
) -> Result<DegenerateSubmodule> {
    for s in maps {
        signature.check_same(s.signature())?;
        if s.width() != m {
            return Err(Error::DimensionMismatch(format!("map on A^{} in a family on A^{m}", s.width())));
        }
    }
    let mut basis = Vec::new();
    let mut null_spaces = Vec::new();
    for (k, &n) in signature.block_dims().iter().enumerate() {
        let d = m * n;
        let mut normal = ComplexMatrix::zeros(d, d);
        for s in maps {
            let f = s.gram().flatten(k);
            normal = &normal + &(&f.adjoint() * &f);
        }
        let eig = hermitian_eig(&normal.hermitian_part(), tol)?;
        let lambda_max = eig.max_abs_eigenvalue();
        let null_cols: Vec<usize> = (0..d)
            .filter(|&i| lambda_max == 0.0 || eig.eigenvalues[i] <= tol.rank_cutoff * lambda_max)
            .collect();
        let null = eig.vectors.select_columns(&null_cols);
        for z in 0..null.cols() {
            for c in 0..n {
                let stacked: Vec<ComplexMatrix> = signature
                    .block_dims()
                    .iter()
                    .enumerate()
                    .map(|(kk, &nn)| {
                        let mut s = ComplexMatrix::zeros(m * nn, nn);
                        if kk == k {
                            for r in 0..d {
                                s[(r, c)] = null[(r, z)];
                            }
                        }
                        s
                    })
                    .collect();
                basis.push(ModuleElement::from_stacked(signature, m, &stacked)?);
            }
        }
        null_spaces.push(null);
    }
    Ok(DegenerateSubmodule {
        signature: signature.clone(),
        width: m,
        basis,
        null_spaces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(d: &[usize]) -> CStarSignature {
        CStarSignature::new(d.to_vec()).unwrap()
    }

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn cplx(rng: &mut impl Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn random_element(s: &CStarSignature, rng: &mut impl Rng) -> AlgElement {
        AlgElement::from_blocks_fn(s, |_, n| ComplexMatrix::from_fn(n, n, |_, _| cplx(rng))).unwrap()
    }

    fn random_vector(s: &CStarSignature, m: usize, rng: &mut impl Rng) -> ModuleElement {
        ModuleElement::new(s.clone(), (0..m).map(|_| random_element(s, rng)).collect()).unwrap()
    }

    fn random_sesqui(s: &CStarSignature, m: usize, rng: &mut impl Rng) -> SesquiMap {
        SesquiMap::new(MatrixOverA::from_fn(s, m, |_, _| random_element(s, rng)).unwrap())
    }

    fn random_hilbert_element(module: &HilbertModule, rng: &mut impl Rng) -> HilbertElement {
        let blocks = module
            .ranks()
            .iter()
            .zip(module.signature().block_dims())
            .map(|(&r, &n)| ComplexMatrix::from_fn(r, n, |_, _| cplx(rng)))
            .collect();
        module.element(blocks).unwrap()
    }

    #[test]
    fn module_axioms() {
        let s = sig(&[2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let v = random_vector(&s, 2, &mut rng);
            let w = random_vector(&s, 2, &mut rng);
            let a = random_element(&s, &mut rng);
            let b = random_element(&s, &mut rng);
            let lam = cplx(&mut rng);
            // (v + w)a = va + wa
            let lhs = v.try_add(&w).unwrap().right_mul(&a).unwrap();
            let rhs = v.right_mul(&a).unwrap().try_add(&w.right_mul(&a).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-12);
            // v(a + b) = va + vb
            let lhs = v.right_mul(&(&a + &b)).unwrap();
            let rhs = v.right_mul(&a).unwrap().try_add(&v.right_mul(&b).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-12);
            // (va)b = v(ab)
            let lhs = v.right_mul(&a).unwrap().right_mul(&b).unwrap();
            let rhs = v.right_mul(&(&a * &b)).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-12);
            // λ(va) = (λv)a = v(λa)
            let x = v.right_mul(&a).unwrap().scale(lam);
            assert!(x.distance(&v.scale(lam).right_mul(&a).unwrap()) <= 1e-12);
            assert!(x.distance(&v.right_mul(&a.scale(lam)).unwrap()) <= 1e-12);
            // v·e = v
            assert!(v.right_mul(&AlgElement::identity(&s)).unwrap().distance(&v) <= 1e-12);
        }
    }

    #[test]
    fn sesqui_eval_examples() {
        let s = sig(&[2]);
        let id = SesquiMap::identity(&s, 3);
        let e0 = ModuleElement::generator(&s, 3, 0);
        assert_eq!(id.eval(&e0, &e0).unwrap(), AlgElement::identity(&s));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let smap = random_sesqui(&s, 2, &mut rng);
        let v = random_vector(&s, 2, &mut rng);
        let w = random_vector(&s, 2, &mut rng);
        let a = random_element(&s, &mut rng);
        let lhs = smap.eval(&v.right_mul(&a).unwrap(), &w).unwrap();
        let rhs = &a.adjoint() * &smap.eval(&v, &w).unwrap();
        assert!(lhs.distance(&rhs) < 1e-12);
        let lhs = smap.eval(&v, &w.right_mul(&a).unwrap()).unwrap();
        let rhs = &smap.eval(&v, &w).unwrap() * &a;
        assert!(lhs.distance(&rhs) < 1e-12);

        // flatten-to-ℂ oracle: V_k* G_k W_k
        let direct = &(&v.stacked(0).adjoint() * &smap.gram().flatten(0)) * &w.stacked(0);
        assert!(smap.eval(&v, &w).unwrap().block(0).distance(&direct) < 1e-12);

        let short = random_vector(&s, 1, &mut rng);
        assert!(matches!(smap.eval(&short, &w), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn sesqui_positivity_examples() {
        let s = sig(&[2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tuple: Vec<AlgElement> = (0..2).map(|_| random_element(&s, &mut rng)).collect();
        let pos = SesquiMap::new(MatrixOverA::outer(&tuple).unwrap());
        assert!(pos.is_positive(&tol()));
        assert!(pos.negative_witness(&tol()).is_none());
        assert!(SesquiMap::zero(&s, 2).is_positive(&tol()));
        let neg = SesquiMap::identity(&s, 2).scale(Complex64::new(-1.0, 0.0));
        assert!(!neg.is_positive(&tol()));
    }

    #[test]
    fn positivity_matches_values_on_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..40 {
            let s = sig(&[rng.gen_range(1..3), rng.gen_range(1..3)]);
            let m = rng.gen_range(1..3);
            let tuple: Vec<AlgElement> = (0..m).map(|_| random_element(&s, &mut rng)).collect();
            let mut gram = MatrixOverA::outer(&tuple).unwrap();
            if trial % 2 == 1 {
                gram = gram.try_sub(&MatrixOverA::identity(&s, m).scale(Complex64::new(0.5, 0.0))).unwrap();
            }
            let smap = SesquiMap::new(gram);
            if smap.is_positive(&tol()) {
                for _ in 0..100 {
                    let v = random_vector(&s, m, &mut rng);
                    assert!(smap.eval(&v, &v).unwrap().is_positive(&tol()));
                }
            } else {
                let w = smap.negative_witness(&tol()).expect("witness for a non-positive map");
                let value = smap.eval(&w, &w).unwrap();
                assert!(!value.is_positive(&tol()));
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let s = sig(&[2]);
        let module = HilbertModule::new(s.clone(), vec![3]).unwrap();
        let t = module
            .element(vec![ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]])])
            .unwrap();
        assert_eq!(module.inner_product(&t, &t).unwrap(), AlgElement::identity(&s));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_hilbert_element(&module, &mut rng);
        let u = random_hilbert_element(&module, &mut rng);
        let a = random_element(&s, &mut rng);
        let lhs = module.inner_product(&t, &u.right_mul(&a).unwrap()).unwrap();
        let rhs = &module.inner_product(&t, &u).unwrap() * &a;
        assert!(lhs.distance(&rhs) < 1e-12);
        // conjugate symmetry
        let tu = module.inner_product(&t, &u).unwrap();
        let ut = module.inner_product(&u, &t).unwrap();
        assert!(tu.distance(&ut.adjoint()) < 1e-12);

        let wrong = HilbertModule::new(s, vec![2]).unwrap().zero();
        assert!(matches!(module.inner_product(&t, &wrong), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn cauchy_schwarz_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let s = sig(&[rng.gen_range(1..3), rng.gen_range(1..3)]);
            let module = HilbertModule::new(s.clone(), vec![rng.gen_range(0..4), rng.gen_range(1..4)]).unwrap();
            let v = random_hilbert_element(&module, &mut rng);
            let w = random_hilbert_element(&module, &mut rng);
            let ww = module.inner_product(&w, &w).unwrap();
            let vv = module.inner_product(&v, &v).unwrap();
            let vw = module.inner_product(&v, &w).unwrap();
            let gap = &vv.scale(Complex64::new(ww.norm(), 0.0)) - &(&vw * &vw.adjoint());
            assert!(gap.is_positive(&tol()));
        }
    }

    #[test]
    fn module_maps_are_a_linear_and_adjointable() {
        let s = sig(&[2, 1]);
        let module = HilbertModule::new(s.clone(), vec![3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = ModuleMap::new(module.clone(), (0..2).map(|_| random_hilbert_element(&module, &mut rng)).collect())
            .unwrap();
        for _ in 0..10 {
            let v = random_vector(&s, 2, &mut rng);
            let a = random_element(&s, &mut rng);
            let lhs = f.apply(&v.right_mul(&a).unwrap()).unwrap();
            let rhs = f.apply(&v).unwrap().right_mul(&a).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-10);
        }
        let p = AdjointableMap::new(
            module.clone(),
            module.clone(),
            module
                .ranks()
                .iter()
                .map(|&r| ComplexMatrix::from_fn(r, r, |_, _| cplx(&mut rng)))
                .collect(),
        )
        .unwrap();
        for _ in 0..10 {
            let t = random_hilbert_element(&module, &mut rng);
            let u = random_hilbert_element(&module, &mut rng);
            let lhs = module.inner_product(&p.adjoint().apply(&t).unwrap(), &u).unwrap();
            let rhs = module.inner_product(&t, &p.apply(&u).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-10);
            // endomorphisms commute with the right action
            let a = random_element(&s, &mut rng);
            let lhs = p.apply(&t.right_mul(&a).unwrap()).unwrap();
            let rhs = p.apply(&t).unwrap().right_mul(&a).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-10);
        }
    }

    #[test]
    fn degenerate_submodule_examples() {
        let s = sig(&[2, 1]);
        let m = 2;
        let full = degenerate_submodule(&s, m, &[SesquiMap::zero(&s, m)], &tol()).unwrap();
        assert_eq!(full.dimension(), m * s.dimension());
        assert!(full.closure_residual() < 1e-12);

        let none = degenerate_submodule(&s, m, &[SesquiMap::identity(&s, m)], &tol()).unwrap();
        assert_eq!(none.dimension(), 0);

        // Gram (a_i* a_j) with a single tuple entry: rank deficient in M_2(A)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tuple = vec![random_element(&s, &mut rng), AlgElement::zero(&s)];
        let smap = SesquiMap::new(MatrixOverA::outer(&tuple).unwrap());
        let deg = degenerate_submodule(&s, m, std::slice::from_ref(&smap), &tol()).unwrap();
        assert_eq!(deg.dimension(), s.dimension());
        assert!(deg.closure_residual() < 1e-10);
        for b in &deg.basis {
            for _ in 0..3 {
                let v = random_vector(&s, m, &mut rng);
                assert!(smap.eval(&v, b).unwrap().frobenius_norm() < 1e-10);
            }
        }
    }
}
