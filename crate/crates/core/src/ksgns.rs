//! Completely positive maps `E: B → S_A(A^m)` on a finite-dimensional
//! C*-algebra `B` and their minimal dilations `(M, π, J)` with
//! `E(b)(v, v') = ⟨Jv | π(b)Jv'⟩`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, CStarSignature, MatrixOverA, MatrixUnit};
use crate::error::{Error, Result};
use crate::kolmogorov::{self, row_rank, Kernel, KolmogorovDecomposition};
use crate::modules::{
    degenerate_submodule, AdjointableMap, DegenerateSubmodule, HilbertElement, HilbertModule, ModuleElement,
    ModuleMap, SesquiMap,
};
use crate::numkernel::{lstsq_solve, psd_factor, scale, ComplexMatrix, TolerancePolicy, ONE};

/// A linear map `B → S_A(A^m)` given by its values on the matrix units of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMapTable {
    domain: CStarSignature,
    codomain: CStarSignature,
    m: usize,
    values: Vec<SesquiMap>,
}

impl CpMapTable {
    /// `values` follow the order of `domain.units()`.
    pub fn new(domain: CStarSignature, codomain: CStarSignature, m: usize, values: Vec<SesquiMap>) -> Result<Self> {
        if values.len() != domain.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a domain with {} matrix units",
                values.len(),
                domain.dimension()
            )));
        }
        for v in &values {
            codomain.check_same(v.signature())?;
            if v.width() != m {
                return Err(Error::DimensionMismatch(format!("value on A^{} in a map into S_A(A^{m})", v.width())));
            }
        }
        Ok(Self {
            domain,
            codomain,
            m,
            values,
        })
    }

    pub fn from_fn(
        domain: &CStarSignature,
        codomain: &CStarSignature,
        m: usize,
        f: impl FnMut(MatrixUnit) -> SesquiMap,
    ) -> Result<Self> {
        let values = domain.units().into_iter().map(f).collect();
        Self::new(domain.clone(), codomain.clone(), m, values)
    }

    pub fn zero(domain: &CStarSignature, codomain: &CStarSignature, m: usize) -> Self {
        Self::from_fn(domain, codomain, m, |_| SesquiMap::zero(codomain, m)).expect("consistent shapes")
    }

    /// `b ↦ b` on `M_n`, as forms on `A = M_n`, `m = 1`.
    pub fn identity_channel(n: usize) -> Result<Self> {
        let s = CStarSignature::new(vec![n])?;
        Self::from_fn(&s, &s, 1, |u| single_entry(AlgElement::unit(&s, u)))
    }

    /// `b ↦ bᵀ` on `M_n`; positive but not completely positive for `n ≥ 2`.
    pub fn transpose_map(n: usize) -> Result<Self> {
        let s = CStarSignature::new(vec![n])?;
        Self::from_fn(&s, &s, 1, |u| single_entry(AlgElement::unit(&s, u.adjoint())))
    }

    /// `b ↦ (1 − p)·b + (p/n)·tr(b)·e` on `M_n`.
    pub fn depolarizing(n: usize, p: f64) -> Result<Self> {
        let s = CStarSignature::new(vec![n])?;
        Self::from_fn(&s, &s, 1, |u| {
            let mut value = AlgElement::unit(&s, u).scale(Complex64::new(1.0 - p, 0.0));
            if u.is_diagonal() {
                value = &value + &AlgElement::scalar(&s, Complex64::new(p / n as f64, 0.0));
            }
            single_entry(value)
        })
    }

    pub fn domain(&self) -> &CStarSignature {
        &self.domain
    }

    pub fn codomain(&self) -> &CStarSignature {
        &self.codomain
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[SesquiMap] {
        &self.values
    }

    pub fn value(&self, unit: MatrixUnit) -> &SesquiMap {
        &self.values[self.domain.unit_index(unit)]
    }

    /// Largest Frobenius norm of a table value.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(SesquiMap::frobenius_norm).fold(0.0, f64::max)
    }

    /// Linear extension from the matrix-unit basis.
    pub fn eval(&self, b: &AlgElement) -> Result<SesquiMap> {
        self.domain.check_same(b.signature())?;
        let mut acc = SesquiMap::zero(&self.codomain, self.m);
        for (unit, value) in self.domain.units().into_iter().zip(&self.values) {
            let c = b.coefficient(unit);
            if c != Complex64::new(0.0, 0.0) {
                acc = acc.try_add(&value.scale(c))?;
            }
        }
        Ok(acc)
    }

    /// `E(E_ji) = E(E_ij)*` for every unit.
    pub fn is_hermitian(&self, tol: &TolerancePolicy) -> bool {
        self.domain.units().into_iter().all(|u| {
            let a = self.value(u);
            let b = self.value(u.adjoint()).adjoint();
            a.distance(&b) <= tol.hermiticity_tol * scale(a.frobenius_norm())
        })
    }

    /// The kernel `(u, u') ↦ E(u*u')` on the matrix units of `B`.
    pub fn choi_gram(&self) -> Kernel {
        let units = self.domain.units();
        let zero = SesquiMap::zero(&self.codomain, self.m);
        Kernel::from_fn(&self.codomain, self.m, units.iter().map(|u| unit_label(*u)).collect(), |i, j| {
            match units[i].adjoint().product(units[j]) {
                Some(p) => self.value(p).clone(),
                None => zero.clone(),
            }
        })
        .expect("units are distinct")
    }

    /// Certifies complete positivity through positivity of the Choi-Gram.
    pub fn is_completely_positive(&self, tol: &TolerancePolicy) -> bool {
        self.choi_gram().is_positive_definite(tol)
    }

    pub fn try_is_completely_positive(&self, tol: &TolerancePolicy) -> Result<bool> {
        self.choi_gram().try_is_positive_definite(tol)
    }

    /// Most negative eigenvalue of the flattened Choi-Gram and its block.
    pub fn choi_min_eigenvalue(&self, tol: &TolerancePolicy) -> Option<(f64, usize)> {
        self.choi_gram().min_eigenvalue(tol)
    }

    /// Searches for a positive `(b_ij) ∈ M_n(B)` whose image under the `n`-th
    /// amplification is not positive. Returns `false` as soon as one is found.
    ///
    /// The first trials are the Choi witnesses `(E^{(l)}_{ij})_{ij}`, one per
    /// block of `B`; the rest are random `c*c`.
    pub fn amplification_check(&self, n: usize, trials: usize, tol: &TolerancePolicy, seed: u64) -> Result<bool> {
        if n == 0 {
            return Err(Error::InvalidInput("amplification order must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = self.domain.block_dims().to_vec();
        let canonical = dims.len();
        for t in 0..trials.max(canonical) {
            // per-block positive matrices of size n·p_l
            let blocks: Vec<ComplexMatrix> = if t < canonical {
                dims.iter()
                    .enumerate()
                    .map(|(l, &p)| {
                        let mut w = ComplexMatrix::zeros(n * p, n * p);
                        if l == t {
                            for i in 0..n.min(p) {
                                for j in 0..n.min(p) {
                                    w[(i * p + i, j * p + j)] = ONE;
                                }
                            }
                        }
                        w
                    })
                    .collect()
            } else {
                dims.iter()
                    .map(|&p| {
                        let c = gaussian_matrix(n * p, n * p, &mut rng);
                        &c.adjoint() * &c
                    })
                    .collect()
            };
            let entries: Vec<SesquiMap> = (0..n * n)
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    let b = AlgElement::from_blocks_fn(&self.domain, |l, p| blocks[l].submatrix(i * p, j * p, p, p))
                        .expect("block shapes follow the domain");
                    self.eval(&b)
                })
                .collect::<Result<_>>()?;
            let m = self.m;
            let assembled = MatrixOverA::from_fn(&self.codomain, n * m, |r, c| {
                entries[(r / m) * n + c / m].gram().entry(r % m, c % m).clone()
            })?;
            if !assembled.is_positive(tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Complex basis of the common degenerate directions of all values.
    pub fn degenerate_submodule(&self, tol: &TolerancePolicy) -> Result<DegenerateSubmodule> {
        degenerate_submodule(&self.codomain, self.m, &self.values, tol)
    }

    /// Minimal dilation `(M, π, J)`.
    ///
    /// The Choi-Gram is a direct sum, over blocks `M_p` of `B`, of `p` copies
    /// of the `p·m`-point Gram `C = (E(E_jj'))`. Each `C` is factored once
    /// and replicated, then `π` on each matrix unit solves
    /// `π(u)·D(u') = D(u·u')` by least squares and `J = D(e)`.
    pub fn dilate(&self, tol: &TolerancePolicy) -> Result<Dilation> {
        if !self.try_is_completely_positive(tol)? {
            let (min_eigenvalue, block) = self.choi_min_eigenvalue(tol).unwrap_or((f64::NAN, 0));
            return Err(Error::NotCompletelyPositive { min_eigenvalue, block });
        }
        let units = self.domain.units();
        let kernel = self.choi_gram();
        let decomposition = self.structured_decomposition(tol)?;
        let report = decomposition.verify(&kernel, tol)?;
        if !report.passed(tol) {
            return Err(Error::ResidualExceeded {
                clause: "Choi-Gram factorization".into(),
                residual: report.reconstruction_residual,
                allowed: tol.residual_tol,
            });
        }
        let module = decomposition.module().clone();
        let sig = self.codomain.clone();

        let mut pi = Vec::with_capacity(units.len());
        for &u in &units {
            let mut blocks = Vec::with_capacity(sig.num_blocks());
            for k in 0..sig.num_blocks() {
                let f = decomposition.factor(k);
                let w = self.m * sig.block_dim(k);
                let mut target = ComplexMatrix::zeros(f.rows(), f.cols());
                for (idx, &u2) in units.iter().enumerate() {
                    if let Some(prod) = u.product(u2) {
                        let src = self.domain.unit_index(prod);
                        target.set_submatrix(0, idx * w, &f.submatrix(0, src * w, f.rows(), w));
                    }
                }
                let solved = lstsq_solve(&f, &target, tol)?;
                let allowed = tol.residual_tol * scale(target.frobenius_norm());
                if solved.residual > allowed {
                    return Err(Error::ResidualExceeded {
                        clause: "π(u)·D(u') = D(u·u')".into(),
                        residual: solved.residual,
                        allowed,
                    });
                }
                blocks.push(solved.x);
            }
            pi.push(AdjointableMap::new(module.clone(), module.clone(), blocks)?);
        }

        let mut j = ModuleMap::zero(&module, self.m);
        for (idx, u) in units.iter().enumerate() {
            if u.is_diagonal() {
                j = j.try_add(decomposition.map(idx))?;
            }
        }
        Dilation::new(self.domain.clone(), module, pi, j)
    }

    fn structured_decomposition(&self, tol: &TolerancePolicy) -> Result<KolmogorovDecomposition> {
        let sig = &self.codomain;
        let m = self.m;
        let units = self.domain.units();
        let mut factors = Vec::with_capacity(sig.num_blocks());
        for k in 0..sig.num_blocks() {
            let n = sig.block_dim(k);
            let w = m * n;
            // per block of B: factor of the compressed Gram C_l
            let mut pieces = Vec::new();
            for (l, &p) in self.domain.block_dims().iter().enumerate() {
                let c = MatrixOverA::from_fn(sig, p * m, |r, col| {
                    let u = MatrixUnit { block: l, row: r / m, col: col / m };
                    self.value(u).gram().entry(r % m, col % m).clone()
                })?;
                let phi = psd_factor(&c.flatten(k), tol).map_err(|e| match e {
                    Error::NotPsd { min_eigenvalue } => Error::NotCompletelyPositive { min_eigenvalue, block: k },
                    other => other,
                })?;
                pieces.push((l, p, phi.factor));
            }
            let rank: usize = pieces.iter().map(|(_, p, phi)| p * phi.rows()).sum();
            let mut f = ComplexMatrix::zeros(rank, units.len() * w);
            let mut row0 = 0;
            for (l, p, phi) in &pieces {
                for i in 0..*p {
                    for j in 0..*p {
                        let idx = self.domain.unit_index(MatrixUnit { block: *l, row: i, col: j });
                        f.set_submatrix(row0 + i * phi.rows(), idx * w, &phi.submatrix(0, j * w, phi.rows(), w));
                    }
                }
                row0 += p * phi.rows();
            }
            factors.push(f);
        }
        KolmogorovDecomposition::from_factors(sig, m, units.len(), factors)
    }
}

fn single_entry(a: AlgElement) -> SesquiMap {
    let sig = a.signature().clone();
    SesquiMap::new(MatrixOverA::new(sig, 1, vec![a]).expect("1x1"))
}

fn unit_label(u: MatrixUnit) -> String {
    format!("E{}[{},{}]", u.block, u.row, u.col)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

fn gaussian_element(sig: &CStarSignature, rng: &mut impl Rng) -> AlgElement {
    AlgElement::from_blocks_fn(sig, |_, n| gaussian_matrix(n, n, rng)).expect("square blocks")
}

fn gaussian_vector(sig: &CStarSignature, m: usize, rng: &mut impl Rng) -> ModuleElement {
    ModuleElement::new(sig.clone(), (0..m).map(|_| gaussian_element(sig, rng)).collect()).expect("same signature")
}

fn gaussian_module_element(module: &HilbertModule, rng: &mut impl Rng) -> HilbertElement {
    let blocks = module
        .ranks()
        .iter()
        .zip(module.signature().block_dims())
        .map(|(&r, &n)| gaussian_matrix(r, n, rng))
        .collect();
    module.element(blocks).expect("shapes follow the module")
}

/// `(M, π, J)`: a Hilbert module, a representation of `B` on it given on
/// matrix units, and `J: A^m → M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    domain: CStarSignature,
    module: HilbertModule,
    pi: Vec<AdjointableMap>,
    j: ModuleMap,
}

impl Dilation {
    pub fn new(domain: CStarSignature, module: HilbertModule, pi: Vec<AdjointableMap>, j: ModuleMap) -> Result<Self> {
        if pi.len() != domain.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "{} representation values for {} matrix units",
                pi.len(),
                domain.dimension()
            )));
        }
        for p in &pi {
            if p.domain() != &module || p.codomain() != &module {
                return Err(Error::ShapeMismatch("π must act on the dilation module".into()));
            }
        }
        if j.codomain() != &module {
            return Err(Error::ShapeMismatch("J must map into the dilation module".into()));
        }
        Ok(Self { domain, module, pi, j })
    }

    pub fn domain(&self) -> &CStarSignature {
        &self.domain
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn ranks(&self) -> &[usize] {
        self.module.ranks()
    }

    pub fn pi_table(&self) -> &[AdjointableMap] {
        &self.pi
    }

    pub fn pi_unit(&self, u: MatrixUnit) -> &AdjointableMap {
        &self.pi[self.domain.unit_index(u)]
    }

    pub fn j(&self) -> &ModuleMap {
        &self.j
    }

    pub fn width(&self) -> usize {
        self.j.width()
    }

    /// Linear extension of `π` from the matrix units.
    pub fn pi(&self, b: &AlgElement) -> Result<AdjointableMap> {
        self.domain.check_same(b.signature())?;
        let mut acc = AdjointableMap::zero(&self.module, &self.module);
        for (unit, p) in self.domain.units().into_iter().zip(&self.pi) {
            let c = b.coefficient(unit);
            if c != Complex64::new(0.0, 0.0) {
                acc = acc.try_add(&p.scale(c))?;
            }
        }
        Ok(acc)
    }

    /// `D(u) = π(u)∘J` for every matrix unit, as a Kolmogorov decomposition
    /// of the Choi-Gram.
    pub fn generator_decomposition(&self) -> Result<KolmogorovDecomposition> {
        let maps = self.pi.iter().map(|p| p.compose_map(&self.j)).collect::<Result<_>>()?;
        KolmogorovDecomposition::new(self.module.clone(), maps)
    }

    /// The map `b ↦ ⟨J·|π(b)J·⟩` this triple realizes.
    pub fn realized_map(&self, codomain_width: usize) -> Result<CpMapTable> {
        let sig = self.module.signature().clone();
        let values = self
            .pi
            .iter()
            .map(|p| {
                let pj = p.compose_map(&self.j)?;
                MatrixOverA::from_fn(&sig, codomain_width, |i, k| {
                    self.module
                        .inner_product(self.j.image(i), pj.image(k))
                        .expect("images in the module")
                })
                .map(SesquiMap::new)
            })
            .collect::<Result<_>>()?;
        CpMapTable::new(self.domain.clone(), sig, codomain_width, values)
    }

    /// `(M', UπU*, UJ)` for a unitary `U: M → M'`.
    pub fn transformed(&self, u: &AdjointableMap) -> Result<Self> {
        let u_star = u.adjoint();
        let pi = self
            .pi
            .iter()
            .map(|p| u.compose(p)?.compose(&u_star))
            .collect::<Result<_>>()?;
        Self::new(self.domain.clone(), u.codomain().clone(), pi, u.compose_map(&self.j)?)
    }

    /// Replaces `J`, keeping `M` and `π`.
    pub fn with_j(&self, j: ModuleMap) -> Result<Self> {
        Self::new(self.domain.clone(), self.module.clone(), self.pi.clone(), j)
    }

    /// Replaces the representation table, keeping `M` and `J`.
    pub fn with_pi(&self, pi: Vec<AdjointableMap>) -> Result<Self> {
        Self::new(self.domain.clone(), self.module.clone(), pi, self.j.clone())
    }

    /// `(‖E(b)(v, v') − ⟨Jv|π(b)Jv'⟩‖, ‖E(b)(v, v')‖)`.
    pub fn reconstruction_residual(
        &self,
        e: &CpMapTable,
        b: &AlgElement,
        v: &ModuleElement,
        w: &ModuleElement,
    ) -> Result<(f64, f64)> {
        let expected = e.eval(b)?.eval(v, w)?;
        let jv = self.j.apply(v)?;
        let pjw = self.pi(b)?.apply(&self.j.apply(w)?)?;
        let got = self.module.inner_product(&jv, &pjw)?;
        Ok((expected.distance(&got), expected.frobenius_norm()))
    }

    /// Checks every dilation contract against `e`. Random probes are drawn
    /// from a generator seeded with `seed`.
    pub fn verify(&self, e: &CpMapTable, trials: usize, seed: u64, tol: &TolerancePolicy) -> Result<DilationReport> {
        e.domain().check_same(&self.domain)?;
        e.codomain().check_same(self.module.signature())?;
        if e.width() != self.width() {
            return Err(Error::DimensionMismatch("map and dilation act on different free modules".into()));
        }
        let sig = self.module.signature().clone();
        let units = self.domain.units();
        let m = self.width();
        let e_norm = e.norm();

        // clause (i) on generators and units, exact by sesquilinearity
        let mut generators: f64 = 0.0;
        for (u, value) in units.iter().zip(e.values()) {
            let pj = self.pi_unit(*u).compose_map(&self.j)?;
            for i in 0..m {
                for k in 0..m {
                    let got = self.module.inner_product(self.j.image(i), pj.image(k))?;
                    generators = generators.max(got.distance(value.gram().entry(i, k)));
                }
            }
        }
        let generators = generators / scale(e_norm);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random: f64 = 0.0;
        for _ in 0..trials {
            let b = gaussian_element(&self.domain, &mut rng);
            let v = gaussian_vector(&sig, m, &mut rng);
            let w = gaussian_vector(&sig, m, &mut rng);
            let (abs, _) = self.reconstruction_residual(e, &b, &v, &w)?;
            let s = scale(e_norm * b.frobenius_norm() * v.frobenius_norm() * w.frobenius_norm());
            random = random.max(abs / s);
        }

        let identity = AdjointableMap::identity(&self.module);
        let unitality = self.pi(&AlgElement::identity(&self.domain))?.distance(&identity);

        let mut star: f64 = 0.0;
        let mut multiplicativity: f64 = 0.0;
        for &u in &units {
            let pu = self.pi_unit(u);
            star = star.max(self.pi_unit(u.adjoint()).distance(&pu.adjoint()) / scale(pu.frobenius_norm()));
            for &u2 in &units {
                let pu2 = self.pi_unit(u2);
                let lhs = pu.compose(pu2)?;
                let rhs = match u.product(u2) {
                    Some(p) => self.pi_unit(p).clone(),
                    None => AdjointableMap::zero(&self.module, &self.module),
                };
                let s = scale(pu.frobenius_norm() * pu2.frobenius_norm());
                multiplicativity = multiplicativity.max(lhs.distance(&rhs) / s);
            }
        }
        let mut adjointability: f64 = 0.0;
        for _ in 0..trials {
            let b = gaussian_element(&self.domain, &mut rng);
            let b2 = gaussian_element(&self.domain, &mut rng);
            let pb = self.pi(&b)?;
            let pb2 = self.pi(&b2)?;
            let s = scale(pb.frobenius_norm() * pb2.frobenius_norm());
            multiplicativity = multiplicativity.max(pb.compose(&pb2)?.distance(&self.pi(&(&b * &b2))?) / s);
            star = star.max(self.pi(&b.adjoint())?.distance(&pb.adjoint()) / scale(pb.frobenius_norm()));

            let x = gaussian_module_element(&self.module, &mut rng);
            let y = gaussian_module_element(&self.module, &mut rng);
            let lhs = self.module.inner_product(&pb.adjoint().apply(&x)?, &y)?;
            let rhs = self.module.inner_product(&x, &pb.apply(&y)?)?;
            let s = scale(pb.frobenius_norm() * x.frobenius_norm() * y.frobenius_norm());
            adjointability = adjointability.max(lhs.distance(&rhs) / s);
        }

        let mut span_ranks = Vec::with_capacity(sig.num_blocks());
        for k in 0..sig.num_blocks() {
            let parts: Vec<ComplexMatrix> = self
                .pi
                .iter()
                .map(|p| p.block(k) * &self.j.block_matrix(k))
                .collect();
            span_ranks.push(row_rank(&ComplexMatrix::hstack(&parts)?, tol)?);
        }

        let e_unit = e.eval(&AlgElement::identity(&self.domain))?;
        let j_gram = self.j.pullback_gram().distance(&e_unit) / scale(e_unit.frobenius_norm());

        Ok(DilationReport {
            reconstruction_generators: generators,
            reconstruction_random: random,
            unitality,
            star,
            multiplicativity,
            adjointability,
            j_gram,
            span_ranks,
            module_ranks: self.module.ranks().to_vec(),
            trials,
            seed,
        })
    }
}

/// Residuals of the dilation contracts. Every residual is relative to
/// `max(1, scale)` of the quantities involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub reconstruction_generators: f64,
    pub reconstruction_random: f64,
    pub unitality: f64,
    pub star: f64,
    pub multiplicativity: f64,
    pub adjointability: f64,
    /// `‖⟨J·|J·⟩ − E(e)‖`, implied by reconstruction at `b = e`.
    pub j_gram: f64,
    pub span_ranks: Vec<usize>,
    pub module_ranks: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

/// One named pass/fail line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Clause {
    pub fn residual(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    /// Rank deficit of a minimality check; passes only at zero.
    pub fn minimality(name: &str, span: &[usize], ranks: &[usize]) -> Self {
        let deficit: usize = span.iter().zip(ranks).map(|(s, r)| r.abs_diff(*s)).sum();
        Self {
            name: name.to_string(),
            value: deficit as f64,
            threshold: 0.0,
            passed: deficit == 0 && span.len() == ranks.len(),
        }
    }
}

impl DilationReport {
    pub fn clauses(&self, tol: &TolerancePolicy) -> Vec<Clause> {
        let t = tol.residual_tol;
        vec![
            Clause::residual("reconstruction (generators)", self.reconstruction_generators, t),
            Clause::residual("reconstruction (random)", self.reconstruction_random, t),
            Clause::residual("unitality", self.unitality, t),
            Clause::residual("*-preservation", self.star, t),
            Clause::residual("multiplicativity", self.multiplicativity, t),
            Clause::residual("adjointability", self.adjointability, t),
            Clause::residual("J*J = E(e)", self.j_gram, t),
            Clause::minimality("minimality", &self.span_ranks, &self.module_ranks),
        ]
    }

    pub fn passed(&self, tol: &TolerancePolicy) -> bool {
        self.clauses(tol).iter().all(|c| c.passed)
    }

    pub fn minimal(&self) -> bool {
        self.span_ranks == self.module_ranks
    }
}

/// The unitary `U: M → M'` with `π'(b) = Uπ(b)U*` and `J' = UJ`.
pub fn dilation_intertwiner(d1: &Dilation, d2: &Dilation, tol: &TolerancePolicy) -> Result<AdjointableMap> {
    d1.domain.check_same(&d2.domain)?;
    let g1 = d1.generator_decomposition()?;
    let g2 = d2.generator_decomposition()?;
    let u = kolmogorov::intertwiner(&g1, &g2, tol)?;
    let u_star = u.adjoint();
    let mut worst: f64 = 0.0;
    for (p1, p2) in d1.pi.iter().zip(&d2.pi) {
        let conj = u.compose(p1)?.compose(&u_star)?;
        worst = worst.max(conj.distance(p2) / scale(p2.frobenius_norm()));
    }
    worst = worst.max(u.compose_map(&d1.j)?.distance(&d2.j) / scale(d2.j.frobenius_norm()));
    if worst > tol.residual_tol {
        return Err(Error::NotUnitary { residual: worst });
    }
    Ok(u)
}

/// Naimark dilation of a family of effects, with the normalization status.
#[derive(Debug, Clone)]
pub struct NaimarkDilation {
    pub table: CpMapTable,
    pub dilation: Dilation,
    /// `‖Σ_k E_k − I‖ / max(1, ‖I‖)`.
    pub normalization_residual: f64,
    pub normalized: bool,
}

/// Dilates a POVM `{E_k}` as the completely positive map `ℂ^q → S_A(A^m)`
/// with `χ_k ↦ E_k`; `π(χ_k)` are the orthogonal projections of the
/// dilation. Non-normalized families are accepted and flagged.
pub fn naimark(effects: &[SesquiMap], tol: &TolerancePolicy) -> Result<NaimarkDilation> {
    let first = effects
        .first()
        .ok_or_else(|| Error::InvalidInput("a POVM needs at least one effect".into()))?;
    let sig = first.signature().clone();
    let m = first.width();
    for (index, effect) in effects.iter().enumerate() {
        if !effect.is_positive(tol) {
            let min_eigenvalue = effect.gram().min_eigenvalue(tol).map_or(f64::NAN, |(l, _)| l);
            return Err(Error::NotPositiveEffect { index, min_eigenvalue });
        }
    }
    let domain = CStarSignature::commutative(effects.len())?;
    let table = CpMapTable::new(domain, sig.clone(), m, effects.to_vec())?;
    let dilation = table.dilate(tol)?;
    let total = effects
        .iter()
        .try_fold(SesquiMap::zero(&sig, m), |acc, e| acc.try_add(e))?;
    let id = SesquiMap::identity(&sig, m);
    let normalization_residual = total.distance(&id) / scale(id.frobenius_norm());
    Ok(NaimarkDilation {
        table,
        dilation,
        normalization_residual,
        normalized: normalization_residual <= tol.residual_tol,
    })
}
