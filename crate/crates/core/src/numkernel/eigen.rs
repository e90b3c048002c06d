use num_complex::Complex64;

use super::{scale, ComplexMatrix, TolerancePolicy};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted descending with the matching orthonormal eigenvectors
/// as columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenResult {
    /// `V Λ V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let lambda = self.eigenvalues[j];
            for i in 0..self.vectors.rows() {
                scaled[(i, j)] *= lambda;
            }
        }
        &scaled * &self.vectors.adjoint()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// The input is symmetrized as `(M + M*)/2` after the hermiticity check. Ties
/// in the final ordering keep the original diagonal position, so repeated
/// runs on the same input give the same vectors.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<EigenResult> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let norm = m.frobenius_norm();
    let deviation = m.hermitian_deviation();
    let allowed = tol.hermiticity_tol * scale(norm);
    if deviation > allowed {
        return Err(Error::NotHermitian { deviation, allowed });
    }

    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let floor = (n.max(1) as f64) * f64::EPSILON * norm;

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off_diagonal_norm(&a) > floor {
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    // stable sort: equal eigenvalues keep their original index order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let result = EigenResult {
        eigenvalues: order.iter().map(|&i| diag[i]).collect(),
        vectors: v.select_columns(&order),
    };

    let residual = result.reconstruct().distance(&m.hermitian_part());
    if residual > tol.residual_tol * norm {
        return Err(Error::NoConvergence { residual, sweeps });
    }
    Ok(result)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `a[(p, q)]` with the unitary `W = diag(1, ē)·R(θ)`, where `e`
/// is the phase of `a[(p, q)]`, and accumulates `W` into `v`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e = apq / g;
    let e_bar = e.conj();
    let n = a.rows();

    // A <- A W
    for i in 0..n {
        let x = a[(i, p)];
        let y = a[(i, q)];
        a[(i, p)] = x * c - y * e_bar * s;
        a[(i, q)] = x * s + y * e_bar * c;
    }
    // A <- W* A
    for j in 0..n {
        let x = a[(p, j)];
        let y = a[(q, j)];
        a[(p, j)] = x * c - y * e * s;
        a[(q, j)] = x * s + y * e * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(app - t * g, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * g, 0.0);

    for i in 0..v.rows() {
        let x = v[(i, p)];
        let y = v[(i, q)];
        v[(i, p)] = x * c - y * e_bar * s;
        v[(i, q)] = x * s + y * e_bar * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unitarity_defect(v: &ComplexMatrix) -> f64 {
        (&v.adjoint() * v).distance(&ComplexMatrix::identity(v.cols()))
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let r = hermitian_eig(&ComplexMatrix::identity(2), &TolerancePolicy::default()).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 1.0]);
        assert!(unitarity_defect(&r.vectors) < 1e-15);
    }

    #[test]
    fn two_by_two_symmetric() {
        // characteristic polynomial λ² − 4λ + 3
        let m = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let r = hermitian_eig(&m, &TolerancePolicy::default()).unwrap();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(r.reconstruct().distance(&m) < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let r = hermitian_eig(&ComplexMatrix::zeros(3, 3), &TolerancePolicy::default()).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            hermitian_eig(&m, &TolerancePolicy::default()),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::zeros(2, 3), &TolerancePolicy::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn complex_hermitian_pauli_y() {
        let y = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let r = hermitian_eig(&y, &TolerancePolicy::default()).unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] + 1.0).abs() < 1e-14);
        assert!(r.reconstruct().distance(&y) < 1e-14);
    }

    fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=12).prop_flat_map(|n| {
            proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n * n).prop_map(move |raw| {
                let b = ComplexMatrix::from_fn(n, n, |i, j| {
                    let (re, im) = raw[i * n + j];
                    Complex64::new(re, im)
                });
                b.hermitian_part()
            })
        })
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthonormality(m in hermitian_strategy()) {
            let r = hermitian_eig(&m, &TolerancePolicy::default()).unwrap();
            let norm = m.frobenius_norm();
            prop_assert!(r.reconstruct().distance(&m) <= 1e-8 * norm.max(1e-300));
            prop_assert!(unitarity_defect(&r.vectors) <= 1e-10);
            prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
