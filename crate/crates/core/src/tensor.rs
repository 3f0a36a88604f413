//! Dense real tensors and multilinear algebra.
//!
//! Storage is flat with the last index varying fastest. Modes are numbered
//! from zero: mode `k` of a tensor with dims `(b_0, ..., b_{p-1})` is the axis
//! of length `b_k`.
//!
//! Matricization along mode `k` produces a `b_k x (prod_{j != k} b_j)` matrix
//! whose columns are the mode-`k` fibers. Column `c` is the fiber whose fixed
//! indices `(i_0, .., i_{k-1}, i_{k+1}, .., i_{p-1})` enumerate `c` with the
//! last index varying fastest, i.e. the same order as the flat layout.

use std::fmt;

use crate::error::{Error, Result};

/// Dimensions of a tensor. Every dim is at least one and the order is at
/// least one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("tensor order must be at least 1".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dimension {pos} is zero")));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n <= isize::MAX as usize / std::mem::size_of::<f64>())
            .ok_or_else(|| Error::InvalidShape(format!("element count of {dims:?} overflows")))?;
        Ok(Self {
            dims: dims.to_vec(),
            len,
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

    /// Number of elements.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Flat offset of a multi-index. Panics on out-of-bounds indices.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.dims.len(), "index order mismatch");
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            assert!(i < d, "index {i} out of bounds for dim {d}");
            acc * d + i
        })
    }

    /// Multi-index of a flat offset.
    pub fn unravel(&self, mut offset: usize) -> Vec<usize> {
        let mut index = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            index[k] = offset % self.dims[k];
            offset /= self.dims[k];
        }
        index
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// `(outer, b_k, inner)` split around `mode`: products of the dims before
    /// and after it.
    pub(crate) fn split(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.dims[..mode].iter().product();
        let inner = self.dims[mode + 1..].iter().product();
        (outer, self.dims[mode], inner)
    }

    fn with_dim(&self, mode: usize, size: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims[mode] = size;
        Shape::new(&dims)
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

/// Dense p-th order real array.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

impl Tensor {
    /// Builds a tensor from flat row-major data, rejecting non-finite entries.
    pub fn new(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.len() {
            return Err(Error::InvalidShape(format!(
                "{} elements supplied for shape {:?} ({} required)",
                data.len(),
                dims,
                shape.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_parts(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Self { shape, data }
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![0.0; shape.len()];
        Ok(Self { shape, data })
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self {
            shape: other.shape.clone(),
            data: vec![0.0; other.data.len()],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = (0..shape.len()).map(|o| f(&shape.unravel(o))).collect();
        Self::new(dims, data)
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(&[n], data)
    }

    /// Row-major matrix.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(&[rows, cols], data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::InvalidShape(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::matrix(nrows, ncols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(&[n, n], |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.order()
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.shape.offset(index)]
    }

    /// Row count of an order-2 tensor.
    pub fn nrows(&self) -> usize {
        assert_eq!(self.order(), 2, "nrows on order-{} tensor", self.order());
        self.dims()[0]
    }

    pub fn ncols(&self) -> usize {
        assert_eq!(self.order(), 2, "ncols on order-{} tensor", self.order());
        self.dims()[1]
    }

    /// Row `i` of an order-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.ncols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::from_parts(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    /// Same data under different dims with equal element count.
    pub fn reshape(&self, dims: &[usize]) -> Result<Tensor> {
        let shape = Shape::new(dims)?;
        if shape.len() != self.len() {
            return Err(Error::InvalidShape(format!(
                "cannot reshape {:?} into {dims:?}",
                self.dims()
            )));
        }
        Ok(Tensor::from_parts(shape, self.data.clone()))
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.dims().to_vec(),
                actual: other.dims().to_vec(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor::from_parts(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|v| v * factor)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a + factor * b)
    }

    /// Sum of products of same-index elements.
    pub fn inner(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Squared array norm, `<T, T>`.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mode-`mode` matricization: a `b_k x (len / b_k)` matrix with the
    /// mode-`mode` fibers as columns.
    pub fn matricize(&self, mode: usize) -> Result<Tensor> {
        self.shape.check_mode(mode)?;
        let (outer, bk, inner) = self.shape.split(mode);
        let ncols = outer * inner;
        let mut out = vec![0.0; self.len()];
        for o in 0..outer {
            for i in 0..bk {
                let src = (o * bk + i) * inner;
                let dst = i * ncols + o * inner;
                out[dst..dst + inner].copy_from_slice(&self.data[src..src + inner]);
            }
        }
        Ok(Tensor::from_parts(Shape::new(&[bk, ncols])?, out))
    }

    /// Inverse of [`Tensor::matricize`]: folds a `b_k x rest` matrix back into
    /// a tensor of shape `dims`.
    pub fn dematricize(matrix: &Tensor, mode: usize, dims: &[usize]) -> Result<Tensor> {
        let shape = Shape::new(dims)?;
        shape.check_mode(mode)?;
        let (outer, bk, inner) = shape.split(mode);
        if matrix.dims() != [bk, outer * inner] {
            return Err(Error::ShapeMismatch {
                expected: vec![bk, outer * inner],
                actual: matrix.dims().to_vec(),
            });
        }
        let ncols = outer * inner;
        let mut out = vec![0.0; shape.len()];
        for o in 0..outer {
            for i in 0..bk {
                let dst = (o * bk + i) * inner;
                let src = i * ncols + o * inner;
                out[dst..dst + inner].copy_from_slice(&matrix.data[src..src + inner]);
            }
        }
        Ok(Tensor::from_parts(shape, out))
    }

    /// Mode-`mode` product `T x_k C` with `C` of shape `m x b_k`:
    /// `(T x_k C)[.., j, ..] = sum_i T[.., i, ..] C[j, i]`.
    pub fn mode_product(&self, c: &Tensor, mode: usize) -> Result<Tensor> {
        self.shape.check_mode(mode)?;
        if c.order() != 2 {
            return Err(Error::InvalidShape(format!(
                "mode product needs a matrix, got order {}",
                c.order()
            )));
        }
        let (outer, bk, inner) = self.shape.split(mode);
        let (m, cols) = (c.dims()[0], c.dims()[1]);
        if cols != bk {
            return Err(Error::ShapeMismatch {
                expected: vec![m, bk],
                actual: c.dims().to_vec(),
            });
        }
        let shape = self.shape.with_dim(mode, m)?;
        let mut out = vec![0.0; shape.len()];
        for o in 0..outer {
            for j in 0..m {
                let dst = (o * m + j) * inner;
                let crow = &c.data[j * bk..(j + 1) * bk];
                for (i, &cji) in crow.iter().enumerate() {
                    if cji == 0.0 {
                        continue;
                    }
                    let src = (o * bk + i) * inner;
                    for r in 0..inner {
                        out[dst + r] += cji * self.data[src + r];
                    }
                }
            }
        }
        Ok(Tensor::from_parts(shape, out))
    }

    /// Tucker product: the sequential mode products against every matrix of
    /// `list`, starting at the list's first mode.
    pub fn tucker_product(&self, list: &MatrixList) -> Result<Tensor> {
        list.matrices
            .iter()
            .enumerate()
            .try_fold(self.clone(), |acc, (offset, m)| {
                acc.mode_product(m, list.first_mode + offset)
            })
    }

    /// Contracts mode 0 against the row vector `z` and drops that mode:
    /// `T x_0 z` for `z` of length `b_0`, returned as an order `p-1` tensor.
    pub fn contract_leading(&self, z: &[f64]) -> Result<Tensor> {
        if self.order() < 2 {
            return Err(Error::InvalidShape(
                "leading contraction needs order >= 2".into(),
            ));
        }
        let b0 = self.dims()[0];
        if z.len() != b0 {
            return Err(Error::ShapeMismatch {
                expected: vec![b0],
                actual: vec![z.len()],
            });
        }
        let inner = self.len() / b0;
        let mut out = vec![0.0; inner];
        for (i, &zi) in z.iter().enumerate() {
            let src = &self.data[i * inner..(i + 1) * inner];
            for (o, s) in out.iter_mut().zip(src) {
                *o += zi * s;
            }
        }
        Ok(Tensor::from_parts(Shape::new(&self.dims()[1..])?, out))
    }

    /// Outer product `z o T`, a tensor of shape `(len(z), dims(T)..)`. This is
    /// `T x_0 z^T` after lifting `T` with a leading singleton mode.
    pub fn outer_leading(z: &[f64], t: &Tensor) -> Result<Tensor> {
        let mut dims = Vec::with_capacity(t.order() + 1);
        dims.push(z.len());
        dims.extend_from_slice(t.dims());
        let shape = Shape::new(&dims)?;
        let mut data = Vec::with_capacity(shape.len());
        for &zi in z {
            data.extend(t.data.iter().map(|v| zi * v));
        }
        Ok(Tensor::from_parts(shape, data))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Transpose of an order-2 tensor.
    pub fn transpose(&self) -> Result<Tensor> {
        if self.order() != 2 {
            return Err(Error::InvalidShape("transpose needs a matrix".into()));
        }
        let (r, c) = (self.dims()[0], self.dims()[1]);
        Tensor::from_fn(&[c, r], |ix| self.data[ix[1] * c + ix[0]])
    }

    /// Matrix product of two order-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.order() != 2 || other.order() != 2 {
            return Err(Error::InvalidShape("matmul needs matrices".into()));
        }
        let (n, k) = (self.dims()[0], self.dims()[1]);
        let (k2, m) = (other.dims()[0], other.dims()[1]);
        if k != k2 {
            return Err(Error::ShapeMismatch {
                expected: vec![k, m],
                actual: other.dims().to_vec(),
            });
        }
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for l in 0..k {
                let a = self.data[i * k + l];
                for j in 0..m {
                    out[i * m + j] += a * other.data[l * m + j];
                }
            }
        }
        Ok(Tensor::from_parts(Shape::new(&[n, m])?, out))
    }
}

/// Ordered list of matrices applied to consecutive modes starting at
/// `first_mode`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixList {
    first_mode: usize,
    matrices: Vec<Tensor>,
}

impl MatrixList {
    pub fn new(first_mode: usize, matrices: Vec<Tensor>) -> Result<Self> {
        if let Some(m) = matrices.iter().find(|m| m.order() != 2) {
            return Err(Error::InvalidShape(format!(
                "matrix list entries must be order 2, got {:?}",
                m.dims()
            )));
        }
        Ok(Self {
            first_mode,
            matrices,
        })
    }

    /// One matrix per mode, starting at mode 0.
    pub fn full(matrices: Vec<Tensor>) -> Result<Self> {
        Self::new(0, matrices)
    }

    pub fn first_mode(&self) -> usize {
        self.first_mode
    }

    pub fn matrices(&self) -> &[Tensor] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}
