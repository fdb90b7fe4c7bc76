//! Dense NHWC tensors and row-major matrices.

use alloc::vec;
use alloc::vec::Vec;

use super::scalar::Scalar;

/// Batched image tensor, shape (batch, height, width, channels), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(n: usize, h: usize, w: usize, c: usize) -> Self {
        Tensor4 {
            n,
            h,
            w,
            c,
            data: vec![T::ZERO; n * h * w * c],
        }
    }

    pub fn from_data(n: usize, h: usize, w: usize, c: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * h * w * c, "tensor data length mismatch");
        Tensor4 { n, h, w, c, data }
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Elements per sample.
    pub fn sample_len(&self) -> usize {
        self.h * self.w * self.c
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &[T] {
        let len = self.sample_len();
        &self.data[i * len..(i + 1) * len]
    }

    #[inline]
    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        let len = self.sample_len();
        &mut self.data[i * len..(i + 1) * len]
    }

    #[inline]
    pub fn at(&self, n: usize, y: usize, x: usize, c: usize) -> T {
        self.data[((n * self.h + y) * self.w + x) * self.c + c]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, y: usize, x: usize, c: usize) -> &mut T {
        &mut self.data[((n * self.h + y) * self.w + x) * self.c + c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }
}

/// Row-major matrix (batch x features).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// `self (rows x cols) * other (cols x n) -> rows x n`.
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        unsafe {
            T::gemm(
                self.rows,
                self.cols,
                other.cols,
                T::ONE,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                T::ZERO,
                out.data.as_mut_ptr(),
                other.cols as isize,
                1,
            );
        }
        out
    }
}

/// Activation flowing through a layer stack: image-shaped before Flatten,
/// matrix-shaped after.
#[derive(Debug, Clone)]
pub enum Act<T> {
    Image(Tensor4<T>),
    Matrix(Mat<T>),
}

impl<T: Scalar> Act<T> {
    pub fn flat(&self) -> &[T] {
        match self {
            Act::Image(t) => t.data(),
            Act::Matrix(m) => m.data(),
        }
    }

    pub fn flat_mut(&mut self) -> &mut [T] {
        match self {
            Act::Image(t) => t.data_mut(),
            Act::Matrix(m) => m.data_mut(),
        }
    }

    pub fn batch(&self) -> usize {
        match self {
            Act::Image(t) => t.n,
            Act::Matrix(m) => m.rows,
        }
    }

    pub fn expect_image(self) -> Tensor4<T> {
        match self {
            Act::Image(t) => t,
            Act::Matrix(_) => panic!("expected image activation"),
        }
    }

    pub fn expect_matrix(self) -> Mat<T> {
        match self {
            Act::Matrix(m) => m,
            Act::Image(_) => panic!("expected matrix activation"),
        }
    }
}
