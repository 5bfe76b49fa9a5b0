use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Asymmetry tolerated by [`cholesky`], relative to the largest entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Lower-triangular `L` with `L·Lᵀ = a + jitter·I`.
///
/// Only the lower triangle of `a` is read after the symmetry check.
pub fn cholesky(a: &Matrix, jitter: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    if !a.all_finite() {
        return Err(Error::NonFinite("cholesky input"));
    }
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    let data = l.as_mut_slice();
    for i in 0..n {
        let (prev, cur) = data.split_at_mut(i * n);
        let row_i = &mut cur[..n];
        for j in 0..i {
            let row_j = &prev[j * n..j * n + j];
            let s: f64 = row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
            row_i[j] = (a[(i, j)] - s) / prev[j * n + j];
        }
        let s: f64 = row_i[..i].iter().map(|v| v * v).sum();
        let pivot = a[(i, i)] + jitter - s;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { row: i, pivot, jitter });
        }
        row_i[i] = pivot.sqrt();
    }
    Ok(l)
}

/// Cholesky with geometric jitter escalation: tries 0, then `start`,
/// `10·start`, … up to `max`. Returns the factor and the jitter used.
pub fn cholesky_escalating(a: &Matrix, start: f64, max: f64) -> Result<(Matrix, f64)> {
    match cholesky(a, 0.0) {
        Ok(l) => return Ok((l, 0.0)),
        Err(Error::NotPositiveDefinite { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut jitter = start;
    loop {
        match cholesky(a, jitter) {
            Ok(l) => return Ok((l, jitter)),
            Err(e @ Error::NotPositiveDefinite { .. }) => {
                if jitter >= max * (1.0 - 1e-12) {
                    return Err(e);
                }
                jitter = (jitter * 10.0).min(max);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Solves `L·y = b` by forward substitution.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if b.len() != n || !l.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
        y[i] = (b[i] - s) / row[i];
    }
    Ok(y)
}

/// Solves `Lᵀ·x = y` by back substitution.
pub fn solve_lower_transpose(l: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if y.len() != n || !l.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        x[i] /= l[(i, i)];
        let xi = x[i];
        let row = l.row(i);
        for (xk, lik) in x[..i].iter_mut().zip(&row[..i]) {
            *xk -= lik * xi;
        }
    }
    Ok(x)
}

/// Solves `(L·Lᵀ)·x = b`.
pub fn solve_cholesky(l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let y = solve_lower(l, b)?;
    solve_lower_transpose(l, &y)
}

/// `log|L·Lᵀ|`.
pub fn log_det(l: &Matrix) -> f64 {
    2.0 * (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_factor() {
        let l = cholesky(&Matrix::identity(3), 0.0).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn two_by_two_hand_expansion() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&a, 0.0).unwrap();
        assert_relative_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert_relative_eq!(l[(1, 0)], 1.0);
        assert_relative_eq!(l[(1, 1)], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn indefinite_rejected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&a, 0.0),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn asymmetric_rejected() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [0.5, 2.0]]).unwrap();
        assert!(matches!(cholesky(&a, 0.0), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn solve_identity() {
        let x = solve_cholesky(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_two_by_two() {
        // Direct inversion: A⁻¹ = (1/8)[[3,-2],[-2,4]], so A⁻¹·[2,1] = [0.5, 0].
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&a, 0.0).unwrap();
        let x = solve_cholesky(&l, &[2.0, 1.0]).unwrap();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-15);
        assert!(x[1].abs() < 1e-15);
    }

    #[test]
    fn solve_length_mismatch() {
        let l = Matrix::identity(2);
        assert!(matches!(
            solve_cholesky(&l, &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jitter_escalation_rescues_singular_matrix() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let (_, jitter) = cholesky_escalating(&a, 1e-10, 1e-6).unwrap();
        assert!(jitter > 0.0 && jitter <= 1e-6);
        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(cholesky_escalating(&bad, 1e-10, 1e-6).is_err());
    }

    fn random_spd(n: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.normal());
        let mut a = b.transpose().matmul(&b).unwrap();
        a.add_diagonal(1.0);
        // Exact symmetry.
        Matrix::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)] })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn reconstruction_error_is_small(seed in any::<u64>()) {
            let a = random_spd(10, seed);
            let l = cholesky(&a, 0.0).unwrap();
            let r = l.matmul(&l.transpose()).unwrap();
            let err = r.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
            prop_assert!(err < 1e-8, "relative error {err}");
        }

        #[test]
        fn solve_recovers_rhs(seed in any::<u64>(), n in 1usize..200) {
            let a = random_spd(n, seed);
            let mut rng = Rng::new(seed ^ 0x9e37);
            let b: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let l = cholesky(&a, 0.0).unwrap();
            let x = solve_cholesky(&l, &b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let num: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(num / den < 1e-8);
        }
    }
}
