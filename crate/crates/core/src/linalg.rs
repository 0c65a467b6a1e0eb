//! Symmetric eigendecomposition and column-space helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SymMatrix};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, matching `values`.
    pub vectors: Matrix,
}

/// Symmetric eigendecomposition with deterministic ordering and signs.
///
/// Eigenvalues are sorted in descending order (stable with respect to the
/// solver's output). Each eigenvector is flipped so that its entry of
/// largest magnitude is positive; ties (up to a relative 1e-10) go to the
/// lowest row index.
pub fn sym_eigen(s: &SymMatrix) -> SymEigen {
    let n = s.order();
    let dm = DMatrix::from_fn(n, n, |i, j| s.get(i, j));
    let eig = nalgebra::SymmetricEigen::new(dm);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        // entries equal up to round-off count as tied
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pivot = (0..n)
            .find(|&i| col[i].abs() >= peak * (1.0 - 1e-10))
            .unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors.set(i, dst, sign * col[i]);
        }
    }
    SymEigen { values, vectors }
}

/// The `r` leading eigenvectors scaled by `scale`, plus all eigenvalues.
pub fn leading_eigenvectors(s: &SymMatrix, r: usize, scale: f64) -> Result<(Matrix, Vec<f64>)> {
    let n = s.order();
    if r == 0 || r > n {
        return Err(Error::InvalidRank(format!(
            "cannot take {r} leading eigenvectors of an order-{n} matrix"
        )));
    }
    let eig = sym_eigen(s);
    let data = eig.vectors.data()[..n * r].iter().map(|v| v * scale).collect();
    Ok((Matrix::new(n, r, data)?, eig.values))
}

/// Orthogonal projector `A (AᵀA)⁻¹ Aᵀ` onto the column space of `a`.
pub fn projector(a: &Matrix) -> Result<SymMatrix> {
    let gram = a.gram();
    let eig = sym_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0);
    let bottom = eig.values.last().copied().unwrap_or(0.0);
    if !(top > 0.0) || bottom <= top * 1e-12 {
        return Err(Error::RankDeficient);
    }
    // A V Λ^{-1/2} has orthonormal columns spanning col(A).
    let r = a.cols();
    let v = &eig.vectors;
    let mut basis = a.matmul(v)?;
    for j in 0..r {
        let s = 1.0 / eig.values[j].sqrt();
        for i in 0..basis.rows() {
            basis.set(i, j, basis.get(i, j) * s);
        }
    }
    let n = a.rows();
    let mut lower = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            lower.push((0..r).map(|c| basis.get(i, c) * basis.get(j, c)).sum());
        }
    }
    SymMatrix::from_vech(n, lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_with_sign_convention() {
        let s = SymMatrix::from_lower_of(
            &Matrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, 5.0]]).unwrap(),
        )
        .unwrap();
        let e = sym_eigen(&s);
        assert!((e.values[0] - 5.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
        assert!((e.values[2] - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let col = e.vectors.column(j);
            let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let first = col.iter().find(|v| v.abs() >= peak * (1.0 - 1e-10)).unwrap();
            assert!(*first > 0.0);
        }
        // eigenvector for 1 is (1,-1)/√2: tie resolved to the first entry.
        let v = e.vectors.column(2);
        assert!(v[0] > 0.0 && v[1] < 0.0);
    }

    #[test]
    fn projector_is_idempotent_and_rank_checked() {
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 2.0]]).unwrap();
        let p = projector(&a).unwrap().to_matrix();
        let pp = p.matmul(&p).unwrap();
        assert!(pp.max_abs_diff(&p) < 1e-12);
        let tr: f64 = (0..3).map(|i| p.get(i, i)).sum();
        assert!((tr - 2.0).abs() < 1e-12);
        let deficient = Matrix::from_rows(&[&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(projector(&deficient), Err(Error::RankDeficient)));
    }
}
