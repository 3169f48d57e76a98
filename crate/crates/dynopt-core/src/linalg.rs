//! Small dense linear-algebra helpers: Gaussian elimination with partial
//! pivoting, sized for desk-scale models (tens to a few hundred unknowns).

use crate::error::{Error, Result};

/// Solves the dense square system `A x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major, consumed as a scratch copy.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected {n}x{n} matrix for rhs of length {n}"
        )));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();

    for col in 0..n {
        // Partial pivoting: bring the largest remaining entry into the pivot.
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty pivot range");
        if m[pivot_row][col].abs() < 1e-300 {
            return Err(Error::SingularSystem(format!(
                "zero pivot in column {col}"
            )));
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);

        let pivot = m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let upper = m[col][k];
                m[row][k] -= factor * upper;
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    // Back substitution.
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem(
            "non-finite solution from elimination".to_string(),
        ));
    }
    Ok(x)
}

/// Maximum absolute entry of `‖A x − b‖∞` for a candidate solution.
pub fn residual_inf(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, &bi)| {
            let ax: f64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            (ax - bi).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm distance between two equal-length vectors.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sup norm of a vector.
pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_identity() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = solve_dense(&a, &[3.0, -4.0]).unwrap();
        assert_eq!(x, vec![3.0, -4.0]);
    }

    #[test]
    fn solves_general_2x2() {
        // 2x + y = 5, x - y = 1  =>  x = 2, y = 1
        let a = vec![vec![2.0, 1.0], vec![1.0, -1.0]];
        let x = solve_dense(&a, &[5.0, 1.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(&a, &[1.0, 2.0]).is_err());
    }
}
