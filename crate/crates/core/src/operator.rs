use crate::dense::{matmul, DenseMatrix};
use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

/// A Hermitian matrix seen through block products `A·X`.
pub trait HermitianOperator<T: Scalar> {
    fn dim(&self) -> usize;

    /// `A·X` for an n×k block.
    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;

    /// Dense storage, when the operator has it.
    fn dense(&self) -> Option<&DenseMatrix<T>> {
        None
    }
}

impl<T: Scalar> HermitianOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        matmul(self, x)
    }

    fn dense(&self) -> Option<&DenseMatrix<T>> {
        Some(self)
    }
}

/// Real diagonal matrix, applied without densifying.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    pub diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }
}

impl<T: Scalar> HermitianOperator<T> for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.diag.len() {
            return dim_err(
                "DiagonalOperator::apply",
                format!("order {} against {} rows", self.diag.len(), x.rows()),
            );
        }
        let d = &self.diag;
        Ok(DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
            x[(i, j)].scale(d[i])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matches_dense() {
        let d = DiagonalOperator::new(vec![1.0, -2.0, 3.5]);
        let dense = DenseMatrix::from_diag(&[1.0, -2.0, 3.5]);
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        assert_eq!(d.apply(&x).unwrap(), dense.apply(&x).unwrap());
        assert!(HermitianOperator::<f64>::dense(&d).is_none());
    }
}
