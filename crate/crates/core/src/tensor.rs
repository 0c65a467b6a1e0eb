//! Dense order-K tensors with mode-1-fastest storage.
//!
//! Entry `(i_1, …, i_K)` lives at `i_1 + p_1 (i_2 + p_2 (i_3 + …))`. The
//! mode-`k` unfolding puts `i_k` on the rows and the remaining indices on the
//! columns with the lowest remaining mode varying fastest, which is the
//! ordering produced by Kronecker products taken in descending mode order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidShape("tensor order must be at least 1".into()));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidShape(format!(
            "all dimensions must be positive, got {dims:?}"
        )));
    }
    Ok(dims.iter().product())
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "tensor of shape {dims:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = check_dims(&dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[linear_index(&self.dims, index)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Mode-`mode` unfolding (`mode` is zero-based).
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        check_mode(&self.dims, mode)?;
        let (left, pk, right) = split_dims(&self.dims, mode);
        let mut out = vec![0.0; self.data.len()];
        // Column of mat_k for (l, r) is l + left * r.
        for r in 0..right {
            for i in 0..pk {
                for l in 0..left {
                    out[i + pk * (l + left * r)] = self.data[l + left * (i + pk * r)];
                }
            }
        }
        Matrix::new(pk, left * right, out)
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<Tensor> {
        let len = check_dims(dims)?;
        check_mode(dims, mode)?;
        let (left, pk, right) = split_dims(dims, mode);
        if m.rows() != pk || m.cols() * m.rows() != len {
            return Err(Error::DimensionMismatch(format!(
                "cannot fold a {}x{} matrix into shape {dims:?} along mode {mode}",
                m.rows(),
                m.cols()
            )));
        }
        let src = m.data();
        let mut data = vec![0.0; len];
        for r in 0..right {
            for i in 0..pk {
                for l in 0..left {
                    data[l + left * (i + pk * r)] = src[i + pk * (l + left * r)];
                }
            }
        }
        Tensor::new(dims.to_vec(), data)
    }

    /// `self ×_mode m`, so that `unfold(result, mode) = m · unfold(self, mode)`.
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<Tensor> {
        check_mode(&self.dims, mode)?;
        if m.cols() != self.dims[mode] {
            return Err(Error::DimensionMismatch(format!(
                "mode-{mode} product needs {} matrix columns, got {}",
                self.dims[mode],
                m.cols()
            )));
        }
        let mut dims = self.dims.clone();
        dims[mode] = m.rows();
        let mut data = vec![0.0; dims.iter().product()];
        mode_product_into(&self.data, &self.dims, m, mode, &mut data);
        Ok(Tensor { dims, data })
    }

    /// Applies `ms[k]` along mode `k` for every mode with `Some` matrix.
    pub fn multi_mode_product(&self, ms: &[Option<&Matrix>]) -> Result<Tensor> {
        if ms.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} mode matrices, got {}",
                self.order(),
                ms.len()
            )));
        }
        let mut current = self.clone();
        for (k, m) in ms.iter().enumerate() {
            if let Some(m) = m {
                current = current.mode_product(m, k)?;
            }
        }
        Ok(current)
    }
}

pub(crate) fn check_mode(dims: &[usize], mode: usize) -> Result<()> {
    if mode >= dims.len() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    Ok(())
}

pub(crate) fn linear_index(dims: &[usize], index: &[usize]) -> usize {
    assert_eq!(dims.len(), index.len(), "index order mismatch");
    let mut offset = 0;
    let mut stride = 1;
    for (d, i) in dims.iter().zip(index) {
        assert!(i < d, "index out of bounds");
        offset += i * stride;
        stride *= d;
    }
    offset
}

/// `(Π_{j<k} p_j, p_k, Π_{j>k} p_j)`.
#[inline]
pub(crate) fn split_dims(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}

/// `C = alpha · A · B + beta · C` on strided column-major buffers.
///
/// Each operand is `(buffer, row_stride, col_stride)`; `A` is `m × k`,
/// `B` is `k × n` and `C` is `m × n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: (&mut [f64], isize, isize),
) {
    let extent = |rows: usize, cols: usize, rs: isize, cs: isize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows as isize - 1) * rs + (cols as isize - 1) * cs + 1
        }
    };
    assert!(a.0.len() as isize >= extent(m, k, a.1, a.2));
    assert!(b.0.len() as isize >= extent(k, n, b.1, b.2));
    assert!(c.0.len() as isize >= extent(m, n, c.1, c.2));
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is a unique borrow so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.0.as_mut_ptr(),
            c.1,
            c.2,
        );
    }
}

/// Writes `src ×_mode m` into `dst` (which must have the output size).
pub(crate) fn mode_product_into(
    src: &[f64],
    dims: &[usize],
    m: &Matrix,
    mode: usize,
    dst: &mut [f64],
) {
    let (left, pk, right) = split_dims(dims, mode);
    let q = m.rows();
    debug_assert_eq!(m.cols(), pk);
    debug_assert_eq!(dst.len(), left * q * right);
    if left == 1 {
        // dst (q × right) = M (q × pk) · src (pk × right)
        gemm(
            q,
            pk,
            right,
            1.0,
            (m.data(), 1, q as isize),
            (src, 1, pk as isize),
            0.0,
            (dst, 1, q as isize),
        );
        return;
    }
    for r in 0..right {
        // dst_r (left × q) = src_r (left × pk) · Mᵀ
        let s = &src[r * left * pk..(r + 1) * left * pk];
        let d = &mut dst[r * left * q..(r + 1) * left * q];
        gemm(
            left,
            pk,
            q,
            1.0,
            (s, 1, left as isize),
            (m.data(), q as isize, 1),
            0.0,
            (d, 1, left as isize),
        );
    }
}

/// `acc += alpha · mat_k(src) · mat_k(src)ᵀ` with `acc` a full `p_k × p_k`
/// column-major buffer.
pub(crate) fn accumulate_mode_gram(
    src: &[f64],
    dims: &[usize],
    mode: usize,
    alpha: f64,
    acc: &mut [f64],
) {
    let (left, pk, right) = split_dims(dims, mode);
    debug_assert_eq!(acc.len(), pk * pk);
    if left == 1 {
        gemm(
            pk,
            right,
            pk,
            alpha,
            (src, 1, pk as isize),
            (src, pk as isize, 1),
            1.0,
            (acc, 1, pk as isize),
        );
        return;
    }
    for r in 0..right {
        // Block B_r is pk × left with B_r[i, l] = src[l + left (i + pk r)].
        let s = &src[r * left * pk..(r + 1) * left * pk];
        gemm(
            pk,
            left,
            pk,
            alpha,
            (s, left as isize, 1),
            (s, 1, left as isize),
            1.0,
            (acc, 1, pk as isize),
        );
    }
}

/// Applies `ms[j]` along every mode `j` that has a matrix, choosing the
/// order that shrinks the tensor fastest. Returns the result and its dims.
pub(crate) fn project_modes(
    src: &[f64],
    dims: &[usize],
    ms: &[Option<&Matrix>],
    scratch: &mut Vec<f64>,
) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..dims.len()).filter(|&j| ms[j].is_some()).collect();
    // Largest reduction ratio first.
    order.sort_by(|&a, &b| {
        let ra = ms[a].unwrap().rows() as f64 / dims[a] as f64;
        let rb = ms[b].unwrap().rows() as f64 / dims[b] as f64;
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    let mut cur_dims = dims.to_vec();
    let mut cur = src.to_vec();
    for j in order {
        let m = ms[j].unwrap();
        let mut next_dims = cur_dims.clone();
        next_dims[j] = m.rows();
        scratch.clear();
        scratch.resize(next_dims.iter().product(), 0.0);
        mode_product_into(&cur, &cur_dims, m, j, scratch);
        std::mem::swap(&mut cur, scratch);
        cur_dims = next_dims;
    }
    (cur, cur_dims)
}
