use crate::dense::DenseMatrix;

/// A square real operator available through products with `A` and `A^T`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `y = A^T x`
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert!(self.is_square());
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.as_nalgebra();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let m = self.as_nalgebra();
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = m.column(j).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}
