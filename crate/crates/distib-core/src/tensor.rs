//! Dense row-major `f64` tensors.
//!
//! A [`Tensor`] is a shape paired with a flat buffer. Scalars use the empty
//! shape `[]` with a single element. All layouts are contiguous row-major;
//! there are no views or strides.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A dense row-major tensor of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that the buffer length matches the shape.
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(Error::BadShape {
                op: "tensor_new",
                shape,
                reason: "buffer length does not match shape product",
            });
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; numel],
        }
    }

    /// Constant-filled tensor of the given shape.
    pub fn filled(shape: impl Into<Vec<usize>>, value: f64) -> Self {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: vec![value; numel],
        }
    }

    /// Tensor populated by a function of the flat element index.
    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(usize) -> f64) -> Self {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        Self {
            shape,
            data: (0..numel).map(|i| f(i)).collect(),
        }
    }

    /// Rank-0 scalar.
    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Row vector of shape `[1, values.len()]`.
    pub fn row(values: Vec<f64>) -> Self {
        let shape = vec![1, values.len()];
        Self {
            shape,
            data: values,
        }
    }

    /// Matrix of shape `[rows, cols]` from a row-major buffer.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new([rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Interprets the tensor as a matrix, returning `(rows, cols)`.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::BadShape {
                op: "dims2",
                shape: self.shape.clone(),
                reason: "expected rank 2",
            }),
        }
    }

    /// The single element of a one-element tensor.
    ///
    /// Panics if the tensor holds more than one element; callers use this
    /// only on outputs they constructed as scalars.
    pub fn item(&self) -> f64 {
        assert_eq!(
            self.data.len(),
            1,
            "item() on tensor of shape {:?}",
            self.shape
        );
        self.data[0]
    }

    /// Element `(i, j)` of a rank-2 tensor. Panics out of bounds.
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        let (r, c) = self.dims2().expect("at2 on non-matrix");
        assert!(i < r && j < c, "index ({i}, {j}) out of bounds ({r}, {c})");
        self.data[i * c + j]
    }

    /// Row `i` of a rank-2 tensor as a slice. Panics out of bounds.
    pub fn row_slice(&self, i: usize) -> &[f64] {
        let (r, c) = self.dims2().expect("row_slice on non-matrix");
        assert!(i < r, "row {i} out of bounds for {r} rows");
        &self.data[i * c..(i + 1) * c]
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks the selected rows of a rank-2 tensor into a new matrix.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Self> {
        let (rows, cols) = self.dims2()?;
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if i >= rows {
                return Err(Error::BadShape {
                    op: "gather_rows",
                    shape: self.shape.clone(),
                    reason: "row index out of bounds",
                });
            }
            data.extend_from_slice(&self.data[i * cols..(i + 1) * cols]);
        }
        Self::new([indices.len(), cols], data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_mismatched_buffer() {
        let err = Tensor::new([2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, Error::BadShape { op: "tensor_new", .. }));
    }

    #[test]
    fn scalar_has_empty_shape_and_one_element() {
        let s = Tensor::scalar(4.5);
        assert_eq!(s.shape(), &[] as &[usize]);
        assert_eq!(s.numel(), 1);
        assert_eq!(s.item(), 4.5);
    }

    #[test]
    fn matrix_indexing_is_row_major() {
        let t = Tensor::matrix(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(t.at2(0, 2), 2.0);
        assert_eq!(t.at2(1, 0), 3.0);
        assert_eq!(t.row_slice(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn gather_rows_stacks_in_request_order() {
        let t = Tensor::matrix(3, 2, vec![0.0, 1.0, 10.0, 11.0, 20.0, 21.0]).unwrap();
        let g = t.gather_rows(&[2, 0]).unwrap();
        assert_eq!(g.shape(), &[2, 2]);
        assert_eq!(g.data(), &[20.0, 21.0, 0.0, 1.0]);
    }

    #[test]
    fn all_finite_detects_nan_and_inf() {
        let mut t = Tensor::zeros([2, 2]);
        assert!(t.all_finite());
        t.data_mut()[3] = f64::NAN;
        assert!(!t.all_finite());
        t.data_mut()[3] = f64::INFINITY;
        assert!(!t.all_finite());
    }
}
