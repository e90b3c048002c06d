use num_complex::Complex64;

use super::{hermitian_eig, scale, ComplexMatrix, EigenResult, TolerancePolicy};
use crate::error::{Error, Result};

/// Smallest eigenvalue of a Hermitian matrix (0 for an empty matrix).
pub fn min_eigenvalue(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<f64> {
    let eig = hermitian_eig(m, tol)?;
    Ok(eig.eigenvalues.last().copied().unwrap_or(0.0))
}

/// True iff the smallest eigenvalue is at least `−psd_tol·max(1, ‖M‖₂)`.
pub fn psd_check(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<bool> {
    let eig = hermitian_eig(m, tol)?;
    Ok(is_psd_spectrum(&eig, tol))
}

fn is_psd_spectrum(eig: &EigenResult, tol: &TolerancePolicy) -> bool {
    let floor = -tol.psd_tol * scale(eig.max_abs_eigenvalue());
    eig.eigenvalues.last().is_none_or(|&l| l >= floor)
}

/// Order of rows inside a cluster of (numerically) equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Ascending,
    Descending,
}

/// `G ≈ F* F` with `F` of full row rank.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub factor: ComplexMatrix,
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub residual: f64,
}

pub fn psd_factor(g: &ComplexMatrix, tol: &TolerancePolicy) -> Result<PsdFactor> {
    psd_factor_with(g, tol, TieBreak::Ascending)
}

/// Rank-revealing factorization `F = diag(√λ)·V*` over the eigenvalues above
/// `rank_cutoff·λ_max`. Rows are ordered by descending eigenvalue; rows whose
/// eigenvalues agree within the cutoff are ordered by `tie`.
pub fn psd_factor_with(g: &ComplexMatrix, tol: &TolerancePolicy, tie: TieBreak) -> Result<PsdFactor> {
    let eig = hermitian_eig(g, tol)?;
    if !is_psd_spectrum(&eig, tol) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.eigenvalues.last().copied().unwrap_or(0.0),
        });
    }
    let lambda_max = eig.max_abs_eigenvalue();
    let cutoff = tol.rank_cutoff * lambda_max;
    let mut kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| lambda_max > 0.0 && eig.eigenvalues[i] > cutoff)
        .collect();

    if tie == TieBreak::Descending {
        let mut start = 0;
        while start < kept.len() {
            let mut end = start + 1;
            while end < kept.len()
                && (eig.eigenvalues[kept[end - 1]] - eig.eigenvalues[kept[end]]).abs() <= cutoff
            {
                end += 1;
            }
            kept[start..end].reverse();
            start = end;
        }
    }

    let n = g.cols();
    let factor = ComplexMatrix::from_fn(kept.len(), n, |r, c| {
        let idx = kept[r];
        eig.vectors[(c, idx)].conj() * eig.eigenvalues[idx].sqrt()
    });
    let residual = (&factor.adjoint() * &factor).distance(&g.hermitian_part());
    let allowed = tol.residual_tol * g.frobenius_norm();
    if residual > allowed {
        return Err(Error::ResidualExceeded {
            clause: "psd factor reconstruction".into(),
            residual,
            allowed,
        });
    }
    Ok(PsdFactor {
        rank: kept.len(),
        factor,
        eigenvalues: kept.iter().map(|&i| eig.eigenvalues[i]).collect(),
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: ComplexMatrix,
    pub residual: f64,
}

/// Minimum-norm least-squares solution of `X·A = B`, computed as
/// `X = B·A*·(A·A*)⁺` with the pseudo-inverse truncated at `rank_cutoff`.
pub fn lstsq_solve(a: &ComplexMatrix, b: &ComplexMatrix, tol: &TolerancePolicy) -> Result<LstsqSolution> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X·A = B needs A and B with equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let gram = a * &a.adjoint();
    let eig = hermitian_eig(&gram, tol)?;
    let lambda_max = eig.max_abs_eigenvalue();
    let p = a.rows();
    let mut pinv = ComplexMatrix::zeros(p, p);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda_max == 0.0 || lambda <= tol.rank_cutoff * lambda_max {
            continue;
        }
        let inv = Complex64::new(1.0 / lambda, 0.0);
        for i in 0..p {
            let vi = eig.vectors[(i, k)] * inv;
            for j in 0..p {
                pinv[(i, j)] += vi * eig.vectors[(j, k)].conj();
            }
        }
    }
    let x = &(b * &a.adjoint()) * &pinv;
    let residual = (&x * a).distance(b);
    Ok(LstsqSolution { x, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn psd_check_examples() {
        assert!(psd_check(&ComplexMatrix::identity(3), &tol()).unwrap());
        assert!(psd_check(&ComplexMatrix::zeros(2, 2), &tol()).unwrap());
        // eigenvalues 3 and −1
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(!psd_check(&m, &tol()).unwrap());
        assert!((min_eigenvalue(&m, &tol()).unwrap() + 1.0).abs() < 1e-14);
        let skew = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(matches!(psd_check(&skew, &tol()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_factor_examples() {
        let one = psd_factor(&ComplexMatrix::identity(1), &tol()).unwrap();
        assert_eq!(one.rank, 1);
        assert!(one.factor.distance(&ComplexMatrix::identity(1)) < 1e-15);

        let zero = psd_factor(&ComplexMatrix::zeros(2, 2), &tol()).unwrap();
        assert_eq!(zero.rank, 0);
        assert_eq!(zero.factor.shape(), (0, 2));

        let g = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let f = psd_factor(&g, &tol()).unwrap();
        assert_eq!(f.rank, 2);
        assert!((&f.factor.adjoint() * &f.factor).distance(&g) < 1e-12);

        let bad = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(psd_factor(&bad, &tol()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn reversed_ties_permute_rows_of_degenerate_spectrum() {
        let g = ComplexMatrix::identity(3).scale_real(2.0);
        let asc = psd_factor_with(&g, &tol(), TieBreak::Ascending).unwrap();
        let desc = psd_factor_with(&g, &tol(), TieBreak::Descending).unwrap();
        assert_eq!(asc.rank, 3);
        assert_eq!(desc.factor.row(0), asc.factor.row(2));
        assert!((&desc.factor.adjoint() * &desc.factor).distance(&g) < 1e-12);
    }

    #[test]
    fn lstsq_examples() {
        let b = ComplexMatrix::from_real_rows(&[&[1.0, -2.0, 0.5], &[3.0, 0.0, 1.0]]);
        let id = ComplexMatrix::identity(3);
        let s = lstsq_solve(&id, &b, &tol()).unwrap();
        assert!(s.x.distance(&b) < 1e-14);
        assert!(s.residual < 1e-14);

        // construct-then-solve: A has full row rank, B = C·A
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 0.0, 1.0], &[0.0, 1.0, -1.0, 3.0]]);
        let c = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.5, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(2.0, -0.5),
                Complex64::new(0.0, 0.25),
            ],
        )
        .unwrap();
        let s = lstsq_solve(&a, &(&c * &a), &tol()).unwrap();
        assert!(s.x.distance(&c) < 1e-10);

        let z = ComplexMatrix::zeros(2, 3);
        let s = lstsq_solve(&z, &b, &tol()).unwrap();
        assert_eq!(s.x, ComplexMatrix::zeros(2, 2));
        assert!((s.residual - b.frobenius_norm()).abs() < 1e-14);

        assert!(matches!(
            lstsq_solve(&ComplexMatrix::zeros(2, 2), &b, &tol()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    /// Rank by Gaussian elimination with complete pivoting, independent of the
    /// eigensolver.
    fn elimination_rank(m: &ComplexMatrix) -> usize {
        let mut a = m.clone();
        let (rows, cols) = a.shape();
        let thresh = 1e-9 * a.max_abs().max(1e-300);
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

    fn integer_matrix() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3i32..=3, r * c).prop_map(move |v| {
                ComplexMatrix::from_fn(r, c, |i, j| Complex64::new(v[i * c + j] as f64, 0.0))
            })
        })
    }

    fn complex_matrix() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * c).prop_map(move |v| {
                ComplexMatrix::from_fn(r, c, |i, j| Complex64::new(v[i * c + j].0, v[i * c + j].1))
            })
        })
    }

    proptest! {
        #[test]
        fn factor_roundtrip(b in complex_matrix()) {
            let g = &b.adjoint() * &b;
            prop_assert!(psd_check(&g, &tol()).unwrap());
            let f = psd_factor(&g, &tol()).unwrap();
            let err = (&f.factor.adjoint() * &f.factor).distance(&g);
            prop_assert!(err <= 1e-8 * g.frobenius_norm());
        }

        #[test]
        fn factor_rank_matches_elimination(b in integer_matrix()) {
            let g = &b.adjoint() * &b;
            let f = psd_factor(&g, &tol()).unwrap();
            prop_assert_eq!(f.rank, elimination_rank(&b));
        }
    }
}
