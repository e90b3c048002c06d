#![allow(dead_code)]

use opdilate::algebra::{four_unitaries, AlgElement, CStarSignature, MatrixOverA, MatrixUnit};
use opdilate::kolmogorov::{Kernel, KolmogorovDecomposition};
use opdilate::ksgns::{CpMapTable, Dilation};
use opdilate::measures::{FiniteMeasurableSpace, SesquiMeasure};
use opdilate::modules::{AdjointableMap, HilbertElement, HilbertModule, ModuleElement, ModuleMap, SesquiMap};
use opdilate::numkernel::ComplexMatrix;
use opdilate::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller keeps the test generators independent of the library's sampler
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    Complex64::new(r * t.cos(), r * t.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Up to `max_blocks` blocks, each of size at most `max_dim`.
pub fn signature(max_blocks: usize, max_dim: usize, rng: &mut ChaCha8Rng) -> CStarSignature {
    let q = rng.gen_range(1..=max_blocks);
    CStarSignature::new((0..q).map(|_| rng.gen_range(1..=max_dim)).collect()).unwrap()
}

pub fn element(sig: &CStarSignature, rng: &mut ChaCha8Rng) -> AlgElement {
    AlgElement::from_blocks_fn(sig, |_, n| matrix(n, n, rng)).unwrap()
}

pub fn vector(sig: &CStarSignature, m: usize, rng: &mut ChaCha8Rng) -> ModuleElement {
    ModuleElement::new(sig.clone(), (0..m).map(|_| element(sig, rng)).collect()).unwrap()
}

pub fn module_element(module: &HilbertModule, rng: &mut ChaCha8Rng) -> HilbertElement {
    let blocks = module
        .ranks()
        .iter()
        .zip(module.signature().block_dims())
        .map(|(&r, &n)| matrix(r, n, rng))
        .collect();
    module.element(blocks).unwrap()
}

pub fn module_map(module: &HilbertModule, m: usize, rng: &mut ChaCha8Rng) -> ModuleMap {
    let sig = module.signature();
    let mats: Vec<ComplexMatrix> = (0..sig.num_blocks())
        .map(|k| matrix(module.rank(k), m * sig.block_dim(k), rng))
        .collect();
    ModuleMap::from_block_matrices(module, m, &mats).unwrap()
}

/// Random block-diagonal unitary on `module`.
pub fn unitary(module: &HilbertModule, rng: &mut ChaCha8Rng) -> AdjointableMap {
    let blocks = module
        .ranks()
        .iter()
        .map(|&r| {
            if r == 0 {
                return ComplexMatrix::zeros(0, 0);
            }
            let s = CStarSignature::new(vec![r]).unwrap();
            let a = AlgElement::new(s, vec![matrix(r, r, rng)]).unwrap();
            four_unitaries(&a).unwrap().unitaries[0].block(0).clone()
        })
        .collect();
    AdjointableMap::new(module.clone(), module.clone(), blocks).unwrap()
}

/// Positive kernel `K(x, y) = ⟨D(x)·|D(y)·⟩` from random generator images in a
/// module whose ranks are drawn from `0..=max_rank`.
pub fn kernel(
    sig: &CStarSignature,
    m: usize,
    points: usize,
    max_rank: usize,
    rng: &mut ChaCha8Rng,
) -> (Kernel, KolmogorovDecomposition) {
    let ranks = (0..sig.num_blocks()).map(|_| rng.gen_range(0..=max_rank)).collect();
    let module = HilbertModule::new(sig.clone(), ranks).unwrap();
    let maps = (0..points).map(|_| module_map(&module, m, rng)).collect();
    let d = KolmogorovDecomposition::new(module, maps).unwrap();
    let labels = (0..points).map(|i| format!("x{i}")).collect();
    (d.realized_kernel(labels).unwrap(), d)
}

/// Completely positive `E(b) = ⟨J·|π0(b)J·⟩` for a random-multiplicity
/// representation `π0` of `domain` and a random `J`.
pub fn cp_map(domain: &CStarSignature, codomain: &CStarSignature, m: usize, rng: &mut ChaCha8Rng) -> CpMapTable {
    let mult: Vec<Vec<usize>> = (0..domain.num_blocks())
        .map(|_| (0..codomain.num_blocks()).map(|_| rng.gen_range(0..=2)).collect())
        .collect();
    let ranks: Vec<usize> = (0..codomain.num_blocks())
        .map(|k| (0..domain.num_blocks()).map(|l| domain.block_dim(l) * mult[l][k]).sum())
        .collect();
    let module = HilbertModule::new(codomain.clone(), ranks.clone()).unwrap();
    let pi: Vec<AdjointableMap> = domain
        .units()
        .into_iter()
        .map(|u| {
            let blocks = (0..codomain.num_blocks())
                .map(|k| {
                    let mut b = ComplexMatrix::zeros(ranks[k], ranks[k]);
                    let mut offset = 0;
                    for (l, counts) in mult.iter().enumerate() {
                        let p = domain.block_dim(l);
                        let size = p * counts[k];
                        if l == u.block && size > 0 {
                            let e = AlgElement::unit(&CStarSignature::new(vec![p]).unwrap(), MatrixUnit {
                                block: 0,
                                row: u.row,
                                col: u.col,
                            });
                            let piece = e.block(0).kron(&ComplexMatrix::identity(counts[k]));
                            b.set_submatrix(offset, offset, &piece);
                        }
                        offset += size;
                    }
                    b
                })
                .collect();
            AdjointableMap::new(module.clone(), module.clone(), blocks).unwrap()
        })
        .collect();
    let j = module_map(&module, m, rng);
    Dilation::new(domain.clone(), module, pi, j).unwrap().realized_map(m).unwrap()
}

/// `Σ_r (a_i* a_j)` over `terms` random tuples: positive by construction.
pub fn takesaki(sig: &CStarSignature, m: usize, terms: usize, rng: &mut ChaCha8Rng) -> MatrixOverA {
    let mut g = MatrixOverA::zeros(sig, m);
    for _ in 0..terms {
        let tuple: Vec<AlgElement> = (0..m).map(|_| element(sig, rng)).collect();
        g = g.try_add(&MatrixOverA::outer(&tuple).unwrap()).unwrap();
    }
    g
}

pub fn positive_measure(
    sig: &CStarSignature,
    m: usize,
    atoms: usize,
    rng: &mut ChaCha8Rng,
) -> SesquiMeasure {
    let values = (0..atoms)
        .map(|_| {
            let terms = rng.gen_range(0..=2);
            SesquiMap::new(takesaki(sig, m, terms, rng))
        })
        .collect();
    SesquiMeasure::new(FiniteMeasurableSpace::numbered(atoms).unwrap(), values).unwrap()
}

pub fn any_measure(sig: &CStarSignature, m: usize, atoms: usize, rng: &mut ChaCha8Rng) -> SesquiMeasure {
    let values = (0..atoms)
        .map(|_| {
            let entries = (0..m * m).map(|_| element(sig, rng)).collect();
            SesquiMap::new(MatrixOverA::new(sig.clone(), m, entries).unwrap())
        })
        .collect();
    SesquiMeasure::new(FiniteMeasurableSpace::numbered(atoms).unwrap(), values).unwrap()
}

/// Rank by Gaussian elimination with complete pivoting.
pub fn elimination_rank(m: &ComplexMatrix, rel: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let thresh = rel * a.max_abs().max(1e-300);
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (0.0, rank, rank);
        for i in rank..rows {
            for j in rank..cols {
                let v = a[(i, j)].norm();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= thresh {
            break;
        }
        for j in 0..cols {
            let t = a[(rank, j)];
            a[(rank, j)] = a[(best.1, j)];
            a[(best.1, j)] = t;
        }
        for i in 0..rows {
            let t = a[(i, rank)];
            a[(i, rank)] = a[(i, best.2)];
            a[(i, best.2)] = t;
        }
        let pivot = a[(rank, rank)];
        for i in (rank + 1)..rows {
            let f = a[(i, rank)] / pivot;
            for j in rank..cols {
                let v = a[(rank, j)];
                a[(i, j)] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}
