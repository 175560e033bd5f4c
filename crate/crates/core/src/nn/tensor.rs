use std::fmt;

use super::Rng;
use crate::{Error, Result};

/// Row-major 2-D float64 array with a gradient buffer of the same shape.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            grad: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(
                "Tensor::from_vec",
                format!("{} values", rows * cols),
                format!("{} values", values.len()),
            ));
        }
        Ok(Tensor {
            rows,
            cols,
            grad: vec![0.0; values.len()],
            values,
        })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        let mut t = Tensor::zeros(rows, cols);
        t.values.fill(value);
        t
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.values[i * n + i] = 1.0;
        }
        t
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    #[inline]
    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Split borrow of values and gradient, used by optimizers.
    pub fn values_and_grad_mut(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.values, &self.grad)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Columns `start..end` as a new tensor (gradient not copied).
    pub fn columns(&self, start: usize, end: usize) -> Tensor {
        assert!(
            start <= end && end <= self.cols,
            "column range out of bounds"
        );
        let width = end - start;
        let mut values = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            values.extend_from_slice(&self.values[r * self.cols + start..r * self.cols + end]);
        }
        Tensor {
            rows: self.rows,
            cols: width,
            grad: vec![0.0; values.len()],
            values,
        }
    }

    pub(crate) fn expect_shape(&self, op: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.rows == rows && self.cols == cols {
            Ok(())
        } else {
            Err(Error::shape(
                op,
                format!("{rows}x{cols}"),
                format!("{}x{}", self.rows, self.cols),
            ))
        }
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

/// Fills a `rows × cols` tensor with iid draws from `U[lo, hi)`.
///
/// Draws are taken from `rng` in row-major order, one per entry.
pub fn init_uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Result<Tensor> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidArgument(format!(
            "uniform range requires lo < hi, got [{lo}, {hi}]"
        )));
    }
    let values = (0..rows * cols).map(|_| rng.uniform(lo, hi)).collect();
    Tensor::from_vec(rows, cols, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(2, 3, vec![0.0; 5]).is_err());
        let t = Tensor::from_vec(2, 3, (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 2), 5.0);
        assert_eq!(t.grad().len(), 6);
    }

    #[test]
    fn uniform_range_containment() {
        let eps = 1e-3;
        let mut rng = Rng::new(17);
        let t = init_uniform(20, 30, 0.0, eps, &mut rng).unwrap();
        assert!(t.values().iter().all(|&v| (0.0..eps).contains(&v)));
    }

    #[test]
    fn uniform_is_deterministic() {
        let a = init_uniform(7, 5, -2.0, 3.0, &mut Rng::new(99)).unwrap();
        let b = init_uniform(7, 5, -2.0, 3.0, &mut Rng::new(99)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn uniform_sample_mean() {
        let t = init_uniform(100, 100, -1.0, 1.0, &mut Rng::new(5)).unwrap();
        let mean = t.values().iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn uniform_rejects_empty_range() {
        let mut rng = Rng::new(0);
        assert!(init_uniform(1, 1, 1.0, 1.0, &mut rng).is_err());
        assert!(init_uniform(1, 1, 2.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn columns_slice() {
        let t = Tensor::from_vec(2, 4, (0..8).map(f64::from).collect()).unwrap();
        let c = t.columns(1, 3);
        assert_eq!(c.values(), &[1.0, 2.0, 5.0, 6.0]);
    }
}
