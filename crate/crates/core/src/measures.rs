//! Sesquilinear-map valued measures on a finite measurable space `(Ω, 2^Ω)`.

use num_complex::Complex64;

use crate::algebra::{AlgElement, CStarSignature, MatrixUnit};
use crate::error::{Error, Result};
use crate::ksgns::{naimark, CpMapTable, Dilation, NaimarkDilation};
use crate::modules::{ModuleMap, SesquiMap};
use crate::numkernel::{scale, TolerancePolicy};

/// Largest space on which `verify_subsets` enumerates every subset.
pub const MAX_SUBSET_ATOMS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMeasurableSpace {
    atoms: Vec<String>,
}

impl FiniteMeasurableSpace {
    pub fn new(atoms: Vec<String>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("a measurable space needs at least one atom".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate atom {a:?}")));
            }
        }
        Ok(Self { atoms })
    }

    /// Atoms labelled `"0"`, `"1"`, ...
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.atoms
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownAtom(label.to_string()))
    }

    /// Membership mask of a set of labels.
    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for l in labels {
            mask[self.index(l.as_ref())?] = true;
        }
        Ok(mask)
    }
}

fn check_mask(space: &FiniteMeasurableSpace, mask: &[bool]) -> Result<()> {
    if mask.len() != space.len() {
        return Err(Error::DimensionMismatch(format!(
            "subset mask of length {} on a space with {} atoms",
            mask.len(),
            space.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMeasure {
    space: FiniteMeasurableSpace,
    values: Vec<Complex64>,
}

impl ComplexMeasure {
    pub fn new(space: FiniteMeasurableSpace, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} atoms", values.len(), space.len())));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("measure values must be finite".into()));
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &FiniteMeasurableSpace {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn eval(&self, mask: &[bool]) -> Result<Complex64> {
        check_mask(&self.space, mask)?;
        Ok(self.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v).sum())
    }

    /// `|μ|({x}) = |μ({x})|`.
    pub fn total_variation(&self) -> PositiveMeasure {
        PositiveMeasure {
            space: self.space.clone(),
            values: self.values.iter().map(|z| z.norm()).collect(),
        }
    }
}

/// A finite positive measure, stored by its atom masses.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMeasure {
    space: FiniteMeasurableSpace,
    values: Vec<f64>,
}

impl PositiveMeasure {
    pub fn new(space: FiniteMeasurableSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} atoms", values.len(), space.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("positive measure values must be finite and nonnegative".into()));
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &FiniteMeasurableSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, mask: &[bool]) -> Result<f64> {
        check_mask(&self.space, mask)?;
        Ok(self.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v).sum())
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `p_ij = 2^{-(i+j+2)}` for `0 ≤ i, j < m`, row-major.
pub fn default_weights(m: usize) -> Vec<f64> {
    (0..m * m).map(|idx| 0.5f64.powi((idx / m + idx % m + 2) as i32)).collect()
}

/// `E(X) = Σ_{x∈X} E({x})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SesquiMeasure {
    space: FiniteMeasurableSpace,
    signature: CStarSignature,
    m: usize,
    values: Vec<SesquiMap>,
}

impl SesquiMeasure {
    pub fn new(space: FiniteMeasurableSpace, values: Vec<SesquiMap>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} atoms", values.len(), space.len())));
        }
        let signature = values[0].signature().clone();
        let m = values[0].width();
        for v in &values[1..] {
            signature.check_same(v.signature())?;
            if v.width() != m {
                return Err(Error::DimensionMismatch("atom values act on different free modules".into()));
            }
        }
        Ok(Self {
            space,
            signature,
            m,
            values,
        })
    }

    pub fn space(&self) -> &FiniteMeasurableSpace {
        &self.space
    }

    pub fn signature(&self) -> &CStarSignature {
        &self.signature
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[SesquiMap] {
        &self.values
    }

    pub fn value(&self, label: &str) -> Result<&SesquiMap> {
        Ok(&self.values[self.space.index(label)?])
    }

    pub fn eval<S: AsRef<str>>(&self, labels: &[S]) -> Result<SesquiMap> {
        self.eval_mask(&self.space.subset(labels)?)
    }

    pub fn eval_mask(&self, mask: &[bool]) -> Result<SesquiMap> {
        check_mask(&self.space, mask)?;
        let mut acc = SesquiMap::zero(&self.signature, self.m);
        for (v, _) in self.values.iter().zip(mask).filter(|(_, &m)| m) {
            acc = acc.try_add(v)?;
        }
        Ok(acc)
    }

    /// `Σ_x f(x)·E({x})`.
    pub fn integrate(&self, f: &[Complex64]) -> Result<SesquiMap> {
        if f.len() != self.space.len() {
            return Err(Error::DimensionMismatch(format!(
                "integrand with {} values on {} atoms",
                f.len(),
                self.space.len()
            )));
        }
        let mut acc = SesquiMap::zero(&self.signature, self.m);
        for (v, c) in self.values.iter().zip(f) {
            acc = acc.try_add(&v.scale(*c))?;
        }
        Ok(acc)
    }

    /// `μ_ij({x}) = tr E({x})_{ij}`, row-major over `(i, j)`.
    pub fn scalarize(&self) -> Vec<ComplexMeasure> {
        (0..self.m * self.m)
            .map(|idx| {
                let (i, j) = (idx / self.m, idx % self.m);
                let values = self.values.iter().map(|v| v.gram().entry(i, j).trace()).collect();
                ComplexMeasure::new(self.space.clone(), values).expect("traces of finite entries")
            })
            .collect()
    }

    /// `𝛍({x}) = Σ_ij p_ij·|μ_ij|({x})`. Fails with `NotDominating` when some
    /// atom has zero mass but a nonzero value, which can only happen for
    /// atoms whose value has vanishing traces without vanishing.
    pub fn dominating_measure(&self, weights: &[f64], tol: &TolerancePolicy) -> Result<PositiveMeasure> {
        if weights.len() != self.m * self.m {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} scalar measures",
                weights.len(),
                self.m * self.m
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidInput("weights must be finite and strictly positive".into()));
        }
        let mut masses = vec![0.0; self.space.len()];
        for (mu, w) in self.scalarize().iter().zip(weights) {
            for (mass, v) in masses.iter_mut().zip(mu.total_variation().values()) {
                *mass += w * v;
            }
        }
        let measure = PositiveMeasure::new(self.space.clone(), masses)?;
        self.check_dominated(&measure, tol)?;
        Ok(measure)
    }

    /// Atom scan: `𝛍({x}) = 0 ⇒ E({x}) = 0`, up to `residual_tol`.
    pub fn check_dominated(&self, dominating: &PositiveMeasure, tol: &TolerancePolicy) -> Result<()> {
        if dominating.space() != &self.space {
            return Err(Error::InvalidInput("dominating measure lives on another space".into()));
        }
        let largest = self.values.iter().map(SesquiMap::frobenius_norm).fold(0.0, f64::max);
        let allowed = tol.residual_tol * scale(largest);
        for ((label, v), mass) in self.space.atoms().iter().zip(&self.values).zip(dominating.values()) {
            if *mass == 0.0 && v.frobenius_norm() > allowed {
                return Err(Error::NotDominating { atom: label.clone() });
            }
        }
        Ok(())
    }

    /// `C(x) = E({x}) / 𝛍({x})`, and zero on null atoms.
    pub fn density(&self, dominating: &PositiveMeasure, tol: &TolerancePolicy) -> Result<Vec<SesquiMap>> {
        self.check_dominated(dominating, tol)?;
        Ok(self
            .values
            .iter()
            .zip(dominating.values())
            .map(|(v, &mass)| {
                if mass > 0.0 {
                    v.scale(Complex64::new(1.0 / mass, 0.0))
                } else {
                    SesquiMap::zero(&self.signature, self.m)
                }
            })
            .collect())
    }

    /// Largest `‖Σ_{x∈X} C(x)·𝛍({x}) − E(X)‖` over singletons and `Ω`.
    pub fn density_residual(&self, densities: &[SesquiMap], dominating: &PositiveMeasure) -> Result<f64> {
        let mut total = SesquiMap::zero(&self.signature, self.m);
        let mut worst: f64 = 0.0;
        for ((c, &mass), v) in densities.iter().zip(dominating.values()).zip(&self.values) {
            let back = c.scale(Complex64::new(mass, 0.0));
            worst = worst.max(back.distance(v));
            total = total.try_add(&back)?;
        }
        let all = self.eval_mask(&vec![true; self.space.len()])?;
        Ok(worst.max(total.distance(&all)))
    }

    /// First atom whose value is not positive, with its smallest eigenvalue.
    pub fn negative_atom(&self, tol: &TolerancePolicy) -> Result<Option<(String, f64)>> {
        for (label, v) in self.space.atoms().iter().zip(&self.values) {
            if !v.gram().try_is_positive(tol)? {
                let lo = v.gram().min_eigenvalue(tol).map_or(f64::NAN, |(l, _)| l);
                return Ok(Some((label.clone(), lo)));
            }
        }
        Ok(None)
    }

    pub fn is_positive(&self, tol: &TolerancePolicy) -> bool {
        is_positive_commutative(&self.values, tol)
    }

    /// The map `ℂ^{|Ω|} → S_A(A^m)`, `χ_x ↦ E({x})`, after certifying
    /// complete positivity of the result.
    pub fn to_cpmap(&self, tol: &TolerancePolicy) -> Result<CpMapTable> {
        if let Some((atom, min_eigenvalue)) = self.negative_atom(tol)? {
            return Err(Error::NotPositive { atom, min_eigenvalue });
        }
        let domain = CStarSignature::commutative(self.space.len())?;
        let table = CpMapTable::new(domain, self.signature.clone(), self.m, self.values.clone())?;
        if !table.is_completely_positive(tol) {
            let (min_eigenvalue, block) = table.choi_min_eigenvalue(tol).unwrap_or((f64::NAN, 0));
            return Err(Error::NotCompletelyPositive { min_eigenvalue, block });
        }
        Ok(table)
    }

    /// Dilation `E(f)(v, v') = ⟨Jv|π(f)Jv'⟩` of a positive measure.
    pub fn dilate(&self, tol: &TolerancePolicy) -> Result<NaimarkDilation> {
        if let Some((atom, min_eigenvalue)) = self.negative_atom(tol)? {
            return Err(Error::NotPositive { atom, min_eigenvalue });
        }
        naimark(&self.values, tol)
    }

    /// Largest relative residual of `E(X)(e_i, e_j) = ⟨Je_i|π(χ_X)Je_j⟩` over
    /// every subset `X ⊆ Ω`.
    pub fn verify_subsets(&self, dilation: &Dilation) -> Result<f64> {
        let q = self.space.len();
        if q > MAX_SUBSET_ATOMS {
            return Err(Error::InvalidInput(format!(
                "subset enumeration is limited to {MAX_SUBSET_ATOMS} atoms, got {q}"
            )));
        }
        let module = dilation.module();
        let j = dilation.j();
        // π(χ_x)J per atom, summed per subset below
        let images: Vec<_> = (0..q)
            .map(|x| dilation.pi_unit(MatrixUnit { block: x, row: 0, col: 0 }).compose_map(j))
            .collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for bits in 0u32..(1 << q) {
            let mask: Vec<bool> = (0..q).map(|x| bits >> x & 1 == 1).collect();
            let expected = self.eval_mask(&mask)?;
            let mut pj = ModuleMap::zero(module, self.m);
            for (x, img) in images.iter().enumerate() {
                if mask[x] {
                    pj = pj.try_add(img)?;
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..self.m {
                for k in 0..self.m {
                    let got: AlgElement = module.inner_product(j.image(i), pj.image(k))?;
                    err = err.max(got.distance(expected.gram().entry(i, k)));
                }
            }
            worst = worst.max(err / scale(expected.frobenius_norm()));
        }
        Ok(worst)
    }
}

/// Positivity of the induced map on `ℂ^{|Ω|}` reduces to positivity of
/// every atom value.
pub fn is_positive_commutative(values: &[SesquiMap], tol: &TolerancePolicy) -> bool {
    values.iter().all(|v| v.is_positive(tol))
}
