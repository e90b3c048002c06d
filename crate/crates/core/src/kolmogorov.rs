//! Positive-definite `A`-kernels on finite index sets and their minimal
//! Kolmogorov decompositions `K(x, x')(v, v') = ⟨D(x)v | D(x')v'⟩`.

use serde::{Deserialize, Serialize};

use crate::algebra::{CStarSignature, MatrixOverA};
use crate::error::{Error, Result};
use crate::modules::{AdjointableMap, HilbertModule, ModuleMap, SesquiMap};
use crate::numkernel::{
    hermitian_eig, lstsq_solve, psd_factor, psd_factor_with, scale, ComplexMatrix, TieBreak, TolerancePolicy,
};

/// A kernel `X × X → S_A(A^m)` on a finite ordered set of labelled points.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    signature: CStarSignature,
    m: usize,
    points: Vec<String>,
    table: Vec<SesquiMap>,
}

impl Kernel {
    /// `table` is row-major: entry `i·N + j` is `K(x_i, x_j)`.
    pub fn new(signature: CStarSignature, m: usize, points: Vec<String>, table: Vec<SesquiMap>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("kernel needs at least one point".into()));
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::InvalidInput("kernel point labels must be distinct".into()));
        }
        let n = points.len();
        if table.len() != n * n {
            return Err(Error::ShapeMismatch(format!("{} kernel entries for {n} points", table.len())));
        }
        for s in &table {
            signature.check_same(s.signature())?;
            if s.width() != m {
                return Err(Error::DimensionMismatch(format!("kernel entry on A^{} in a kernel on A^{m}", s.width())));
            }
        }
        Ok(Self {
            signature,
            m,
            points,
            table,
        })
    }

    pub fn from_fn(
        signature: &CStarSignature,
        m: usize,
        points: Vec<String>,
        mut f: impl FnMut(usize, usize) -> SesquiMap,
    ) -> Result<Self> {
        let n = points.len();
        let mut table = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                table.push(f(i, j));
            }
        }
        Self::new(signature.clone(), m, points, table)
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> &SesquiMap {
        &self.table[i * self.points.len() + j]
    }

    pub fn table(&self) -> &[SesquiMap] {
        &self.table
    }

    /// `K(x', x)` equals the *-transpose of `K(x, x')` for all pairs.
    pub fn is_conjugate_symmetric(&self, tol: &TolerancePolicy) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let a = self.entry(i, j);
                let b = self.entry(j, i).adjoint();
                a.distance(&b) <= tol.hermiticity_tol * scale(a.frobenius_norm())
            })
        })
    }

    /// The `(N·m)×(N·m)` Gram over `A` with entry `((x, i), (x', j)) = K(x, x')_ij`.
    pub fn assemble_gram(&self) -> MatrixOverA {
        let m = self.m;
        let n = self.len();
        MatrixOverA::from_fn(&self.signature, n * m, |r, c| {
            self.entry(r / m, c / m).gram().entry(r % m, c % m).clone()
        })
        .expect("entries share the kernel signature")
    }

    pub fn is_positive_definite(&self, tol: &TolerancePolicy) -> bool {
        self.assemble_gram().is_positive(tol)
    }

    pub fn try_is_positive_definite(&self, tol: &TolerancePolicy) -> Result<bool> {
        self.assemble_gram().try_is_positive(tol)
    }

    /// Most negative eigenvalue of the flattened Gram and its block.
    pub fn min_eigenvalue(&self, tol: &TolerancePolicy) -> Option<(f64, usize)> {
        self.assemble_gram().min_eigenvalue(tol)
    }

    pub fn decompose(&self, tol: &TolerancePolicy) -> Result<KolmogorovDecomposition> {
        self.decompose_with(tol, TieBreak::Ascending)
    }

    /// Minimal decomposition from a rank-revealing factorization of each
    /// flattened Gram block, `G_k = F_k* F_k`. The generator image `D(x)e_j`
    /// in block `k` is the `(x, j)` column group of `F_k`.
    pub fn decompose_with(&self, tol: &TolerancePolicy, tie: TieBreak) -> Result<KolmogorovDecomposition> {
        let gram = self.assemble_gram();
        let mut factors = Vec::with_capacity(self.signature.num_blocks());
        for k in 0..self.signature.num_blocks() {
            let flat = gram.flatten(k);
            let f = psd_factor_with(&flat, tol, tie).map_err(|e| match e {
                Error::NotPsd { min_eigenvalue } => Error::NotPositiveDefinite { min_eigenvalue, block: k },
                Error::NotHermitian { .. } => Error::NotPositiveDefinite {
                    min_eigenvalue: f64::NAN,
                    block: k,
                },
                other => other,
            })?;
            factors.push(f.factor);
        }
        let decomposition = KolmogorovDecomposition::from_factors(&self.signature, self.m, self.len(), factors)?;
        let report = decomposition.verify(self, tol)?;
        if !report.passed(tol) {
            return Err(Error::ResidualExceeded {
                clause: "kernel reconstruction".into(),
                residual: report.reconstruction_residual,
                allowed: tol.residual_tol,
            });
        }
        Ok(decomposition)
    }
}

/// `(M, D)` with `M = ⊕_k ℂ^{r_k×n_k}` and one `A`-linear `D(x): A^m → M`
/// per point.
#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovDecomposition {
    module: HilbertModule,
    maps: Vec<ModuleMap>,
}

/// Residuals of the decomposition contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `‖G − F*F‖ / max(1, ‖G‖)` over all blocks.
    pub reconstruction_residual: f64,
    /// Per block, the rank of the span of all generator images.
    pub span_ranks: Vec<usize>,
    pub module_ranks: Vec<usize>,
}

impl DecompositionReport {
    pub fn minimal(&self) -> bool {
        self.span_ranks == self.module_ranks
    }

    pub fn passed(&self, tol: &TolerancePolicy) -> bool {
        self.reconstruction_residual <= tol.residual_tol && self.minimal()
    }
}

impl KolmogorovDecomposition {
    pub fn new(module: HilbertModule, maps: Vec<ModuleMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidInput("decomposition needs at least one point".into()));
        }
        let m = maps[0].width();
        for d in &maps {
            if d.codomain() != &module || d.width() != m {
                return Err(Error::ShapeMismatch("decomposition maps disagree on shape".into()));
            }
        }
        Ok(Self { module, maps })
    }

    /// Splits per-block factors `F_k` (`r_k × (N·m·n_k)`) into point maps.
    pub fn from_factors(
        signature: &CStarSignature,
        m: usize,
        points: usize,
        factors: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let ranks: Vec<usize> = factors.iter().map(ComplexMatrix::rows).collect();
        let module = HilbertModule::new(signature.clone(), ranks)?;
        let maps = (0..points)
            .map(|x| {
                let mats: Vec<ComplexMatrix> = factors
                    .iter()
                    .enumerate()
                    .map(|(k, f)| {
                        let w = m * signature.block_dim(k);
                        f.submatrix(0, x * w, f.rows(), w)
                    })
                    .collect();
                ModuleMap::from_block_matrices(&module, m, &mats)
            })
            .collect::<Result<_>>()?;
        Self::new(module, maps)
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn maps(&self) -> &[ModuleMap] {
        &self.maps
    }

    pub fn map(&self, x: usize) -> &ModuleMap {
        &self.maps[x]
    }

    pub fn gram_rank(&self) -> &[usize] {
        self.module.ranks()
    }

    pub fn width(&self) -> usize {
        self.maps[0].width()
    }

    /// `F_k = [D(x_1)_k … D(x_N)_k]`, an `r_k × (N·m·n_k)` matrix.
    pub fn factor(&self, k: usize) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self.maps.iter().map(|d| d.block_matrix(k)).collect();
        ComplexMatrix::hstack(&parts).expect("equal ranks across points")
    }

    /// The kernel `(x, x') ↦ ⟨D(x)·|D(x')·⟩` realized by this decomposition.
    pub fn realized_kernel(&self, points: Vec<String>) -> Result<Kernel> {
        let sig = self.module.signature().clone();
        let m = self.width();
        let n = self.maps.len();
        let factors: Vec<ComplexMatrix> = (0..sig.num_blocks()).map(|k| self.factor(k)).collect();
        let flats: Vec<ComplexMatrix> = factors.iter().map(|f| &f.adjoint() * f).collect();
        let gram = MatrixOverA::from_flattened(&sig, n * m, &flats)?;
        Kernel::from_fn(&sig, m, points, |x, y| {
            SesquiMap::new(
                MatrixOverA::from_fn(&sig, m, |i, j| gram.entry(x * m + i, y * m + j).clone()).expect("square"),
            )
        })
    }

    /// Checks reconstruction of `kernel` and minimality (full row rank of
    /// every `F_k`).
    pub fn verify(&self, kernel: &Kernel, tol: &TolerancePolicy) -> Result<DecompositionReport> {
        if kernel.len() != self.maps.len() || kernel.width() != self.width() {
            return Err(Error::DimensionMismatch("decomposition and kernel disagree on shape".into()));
        }
        kernel.signature().check_same(self.module.signature())?;
        let gram = kernel.assemble_gram();
        let mut err2 = 0.0;
        let mut span_ranks = Vec::new();
        for k in 0..kernel.signature().num_blocks() {
            let f = self.factor(k);
            err2 += (&f.adjoint() * &f).distance(&gram.flatten(k)).powi(2);
            span_ranks.push(row_rank(&f, tol)?);
        }
        Ok(DecompositionReport {
            reconstruction_residual: err2.sqrt() / scale(gram.frobenius_norm()),
            span_ranks,
            module_ranks: self.module.ranks().to_vec(),
        })
    }

    /// `(M', U∘D)` for an adjointable `U: M → M'`.
    pub fn transformed(&self, u: &AdjointableMap) -> Result<Self> {
        let maps = self.maps.iter().map(|d| u.compose_map(d)).collect::<Result<_>>()?;
        Self::new(u.codomain().clone(), maps)
    }
}

/// Rank of the row space of `f`, from the spectrum of `f·f*`.
pub(crate) fn row_rank(f: &ComplexMatrix, tol: &TolerancePolicy) -> Result<usize> {
    if f.rows() == 0 {
        return Ok(0);
    }
    Ok(psd_factor(&(f * &f.adjoint()).hermitian_part(), tol)?.rank)
}

/// The unitary `U: M → M'` with `U·D(x) = D'(x)` for every point.
pub fn intertwiner(
    d1: &KolmogorovDecomposition,
    d2: &KolmogorovDecomposition,
    tol: &TolerancePolicy,
) -> Result<AdjointableMap> {
    d1.module.signature().check_same(d2.module.signature())?;
    if d1.maps.len() != d2.maps.len() || d1.width() != d2.width() {
        return Err(Error::DimensionMismatch("decompositions over different index sets".into()));
    }
    if d1.gram_rank() != d2.gram_rank() {
        return Err(Error::RankMismatch {
            left: d1.gram_rank().to_vec(),
            right: d2.gram_rank().to_vec(),
        });
    }
    let sig = d1.module.signature();
    let mut blocks = Vec::with_capacity(sig.num_blocks());
    let mut worst: f64 = 0.0;
    for k in 0..sig.num_blocks() {
        let f1 = d1.factor(k);
        let f2 = d2.factor(k);
        let solved = lstsq_solve(&f1, &f2, tol)?;
        worst = worst.max(solved.residual / scale(f2.frobenius_norm()));
        blocks.push(solved.x);
    }
    let u = AdjointableMap::new(d1.module.clone(), d2.module.clone(), blocks)?;
    worst = worst.max(u.unitarity_defect());
    if worst > tol.residual_tol {
        return Err(Error::NotUnitary { residual: worst });
    }
    Ok(u)
}

/// Smallest eigenvalue of each flattened Gram block, in block order.
pub fn block_min_eigenvalues(kernel: &Kernel, tol: &TolerancePolicy) -> Result<Vec<f64>> {
    kernel
        .assemble_gram()
        .flattened()
        .iter()
        .map(|f| Ok(hermitian_eig(f, tol)?.eigenvalues.last().copied().unwrap_or(0.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgElement;
    use crate::modules::{HilbertElement, ModuleElement};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn scalar_kernel(values: &[&[f64]]) -> Kernel {
        let s = CStarSignature::complex();
        let n = values.len();
        Kernel::from_fn(&s, 1, (0..n).map(|i| format!("x{i}")).collect(), |i, j| {
            SesquiMap::new(MatrixOverA::identity(&s, 1).scale(Complex64::new(values[i][j], 0.0)))
        })
        .unwrap()
    }

    fn cplx(rng: &mut impl Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    /// Kernel `⟨D(x)·|D(x')·⟩` from random generator images in a module of the
    /// given ranks.
    fn random_kernel(sig: &CStarSignature, m: usize, points: usize, ranks: &[usize], rng: &mut impl Rng) -> Kernel {
        let module = HilbertModule::new(sig.clone(), ranks.to_vec()).unwrap();
        let maps: Vec<ModuleMap> = (0..points)
            .map(|_| {
                let images: Vec<HilbertElement> = (0..m)
                    .map(|_| {
                        module
                            .element(
                                ranks
                                    .iter()
                                    .zip(sig.block_dims())
                                    .map(|(&r, &n)| ComplexMatrix::from_fn(r, n, |_, _| cplx(rng)))
                                    .collect(),
                            )
                            .unwrap()
                    })
                    .collect();
                ModuleMap::new(module.clone(), images).unwrap()
            })
            .collect();
        let d = KolmogorovDecomposition::new(module, maps).unwrap();
        d.realized_kernel((0..points).map(|i| format!("p{i}")).collect()).unwrap()
    }

    #[test]
    fn assemble_gram_examples() {
        let s = CStarSignature::new(vec![2]).unwrap();
        let k = Kernel::from_fn(&s, 1, vec!["x".into()], |_, _| SesquiMap::identity(&s, 1)).unwrap();
        assert_eq!(k.assemble_gram(), MatrixOverA::identity(&s, 1));

        let ones = scalar_kernel(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let flat = ones.assemble_gram().flatten(0);
        assert_eq!(flat, ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]));
    }

    #[test]
    fn assembled_gram_matches_forward_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let s = CStarSignature::new(vec![2, 1]).unwrap();
        let k = random_kernel(&s, 2, 3, &[2, 3], &mut rng);
        let g = k.assemble_gram();
        for x in 0..3 {
            for y in 0..3 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert_eq!(g.entry(x * 2 + i, y * 2 + j), k.entry(x, y).gram().entry(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn positive_definiteness_examples() {
        assert!(scalar_kernel(&[&[1.0, 1.0], &[1.0, 1.0]]).is_positive_definite(&tol()));
        let bad = scalar_kernel(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(!bad.is_positive_definite(&tol()));
        let (lo, _) = bad.min_eigenvalue(&tol()).unwrap();
        assert!((lo + 1.0).abs() < 1e-12);
        assert!(matches!(bad.decompose(&tol()), Err(Error::NotPositiveDefinite { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = CStarSignature::new(vec![2, 2]).unwrap();
        assert!(random_kernel(&s, 2, 3, &[3, 1], &mut rng).is_positive_definite(&tol()));
    }

    #[test]
    fn sub_selections_of_positive_kernels_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = CStarSignature::new(vec![2]).unwrap();
        let k = random_kernel(&s, 1, 4, &[3], &mut rng);
        for subset in [vec![0usize], vec![1, 3], vec![0, 2, 3], vec![3, 1]] {
            let sub = Kernel::from_fn(&s, 1, subset.iter().map(|i| format!("q{i}")).collect(), |i, j| {
                k.entry(subset[i], subset[j]).clone()
            })
            .unwrap();
            assert!(sub.is_positive_definite(&tol()));
        }
    }

    #[test]
    fn decompose_examples() {
        let single = scalar_kernel(&[&[1.0]]);
        let d = single.decompose(&tol()).unwrap();
        assert_eq!(d.gram_rank(), &[1]);
        assert!((d.map(0).image(0).block(0)[(0, 0)].norm() - 1.0).abs() < 1e-14);

        let ones = scalar_kernel(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let d = ones.decompose(&tol()).unwrap();
        assert_eq!(d.gram_rank(), &[1]);
        let a = d.map(0).image(0).block(0)[(0, 0)];
        let b = d.map(1).image(0).block(0)[(0, 0)];
        assert!((a - b).norm() < 1e-14 && (a.norm() - 1.0).abs() < 1e-14);

        // identity kernel on two points over M_2: the flattened Gram is I_4
        let s = CStarSignature::new(vec![2]).unwrap();
        let id = Kernel::from_fn(&s, 1, vec!["x".into(), "y".into()], |i, j| {
            if i == j {
                SesquiMap::identity(&s, 1)
            } else {
                SesquiMap::zero(&s, 1)
            }
        })
        .unwrap();
        let d = id.decompose(&tol()).unwrap();
        assert_eq!(d.gram_rank(), &[4]);
        assert_eq!(d.module().complex_dimension(), 8);
        let report = d.verify(&id, &tol()).unwrap();
        assert!(report.reconstruction_residual <= 1e-10);
        assert!(report.minimal());
    }

    #[test]
    fn decomposition_maps_are_a_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = CStarSignature::new(vec![2, 1]).unwrap();
        let k = random_kernel(&s, 2, 2, &[2, 2], &mut rng);
        let d = k.decompose(&tol()).unwrap();
        for _ in 0..10 {
            let v = ModuleElement::new(
                s.clone(),
                (0..2)
                    .map(|_| AlgElement::from_blocks_fn(&s, |_, n| ComplexMatrix::from_fn(n, n, |_, _| cplx(&mut rng))).unwrap())
                    .collect(),
            )
            .unwrap();
            let a = AlgElement::from_blocks_fn(&s, |_, n| ComplexMatrix::from_fn(n, n, |_, _| cplx(&mut rng))).unwrap();
            for map in d.maps() {
                let lhs = map.apply(&v.right_mul(&a).unwrap()).unwrap();
                let rhs = map.apply(&v).unwrap().right_mul(&a).unwrap();
                assert!(lhs.distance(&rhs) <= 1e-10);
            }
        }
    }

    #[test]
    fn intertwiner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let s = CStarSignature::new(vec![2, 2]).unwrap();
        let k = random_kernel(&s, 1, 3, &[2, 3], &mut rng);
        let d1 = k.decompose(&tol()).unwrap();

        let u = intertwiner(&d1, &d1, &tol()).unwrap();
        assert!(u.distance(&AdjointableMap::identity(d1.module())) < 1e-9);

        let d_rev = k.decompose_with(&tol(), TieBreak::Descending).unwrap();
        let u = intertwiner(&d1, &d_rev, &tol()).unwrap();
        assert!(u.unitarity_defect() < 1e-9);

        let other = random_kernel(&s, 1, 3, &[2, 3], &mut rng).decompose(&tol()).unwrap();
        assert!(matches!(intertwiner(&d1, &other, &tol()), Err(Error::NotUnitary { .. })));

        let smaller = random_kernel(&s, 1, 3, &[1, 3], &mut rng).decompose(&tol()).unwrap();
        assert!(matches!(intertwiner(&d1, &smaller, &tol()), Err(Error::RankMismatch { .. })));
    }
}
