//! Small dense linear-algebra helpers.
//!
//! The allocator only ever factors systems of a few dozen unknowns, so plain
//! Gaussian elimination with partial pivoting is enough. The symmetric
//! eigenvalue routine backs the PSD checks on estimated covariances.

use ndarray::{Array1, Array2};

use crate::scalar::Scalar;

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `S::solver_eps()` times the largest
/// absolute entry of `a`, i.e. the system is numerically singular.
pub fn solve<S: Scalar>(a: &Array2<S>, b: &Array1<S>) -> Option<Array1<S>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "solve: matrix must be square");
    assert_eq!(b.len(), n, "solve: rhs length mismatch");
    if n == 0 {
        return Some(Array1::zeros(0));
    }

    let scale = a.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    if scale == S::zero() {
        return None;
    }
    let tiny = scale * S::solver_eps();

    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[[r, col]].abs()))
            .fold((col, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= tiny {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                m.swap([col, c], [pivot_row, c]);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[[col, col]];
        for r in (col + 1)..n {
            let factor = m[[r, col]] / pivot;
            if factor == S::zero() {
                continue;
            }
            for c in col..n {
                let v = m[[col, c]];
                m[[r, c]] = m[[r, c]] - factor * v;
            }
            let v = rhs[col];
            rhs[r] = rhs[r] - factor * v;
        }
    }

    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..n {
            acc = acc - m[[row, c]] * x[c];
        }
        x[row] = acc / m[[row, row]];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<S: Scalar>(a: &Array2<S>) -> Vec<S> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "symmetric_eigenvalues: matrix must be square");
    let mut m = a.clone();
    let two = S::lit(2.0);

    for _sweep in 0..100 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let diag: S = (0..n).map(|i| m[[i, i]] * m[[i, i]]).sum();
        if off <= S::epsilon() * S::epsilon() * diag.max(S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == S::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[[p, k]];
                    let aqk = m[[q, k]];
                    m[[p, k]] = c * apk - s * aqk;
                    m[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<S> = (0..n).map(|i| m[[i, i]]).collect();
    eig.sort_by(crate::scalar::total_cmp);
    eig
}

/// `x^T a x` for a dense symmetric matrix.
pub fn quad_form<S: Scalar>(a: &Array2<S>, x: &[S]) -> S {
    let n = x.len();
    let mut acc = S::zero();
    for i in 0..n {
        if x[i] == S::zero() {
            continue;
        }
        let mut row = S::zero();
        for j in 0..n {
            row = row + a[[i, j]] * x[j];
        }
        acc = acc + x[i] * row;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_small_system() {
        let a = array![[2.0f64, 1.0], [1.0, 3.0]];
        let b = array![3.0, 5.0];
        let x = solve(&a, &b).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn needs_pivoting() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let x = solve(&a, &array![2.0, 3.0]).unwrap();
        assert_eq!(x.to_vec(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_none() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(solve(&a, &array![1.0, 2.0]).is_none());
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let e = symmetric_eigenvalues(&array![[2.0f64, 1.0], [1.0, 2.0]]);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_f32() {
        let e = symmetric_eigenvalues(&array![[4.0f32, 0.0], [0.0, -1.0]]);
        assert_eq!(e, vec![-1.0, 4.0]);
    }
}
