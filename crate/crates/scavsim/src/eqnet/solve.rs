//! Small dense linear solver for the MNA system.

use crate::float::Scalar;

/// Row-major dense matrix sized for MNA systems (tens of unknowns).
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn clear(&mut self) {
        self.data.fill(T::zero());
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] = self.data[row * self.n + col] + value;
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Residual r = A·x - b, appended into `out`.
    pub fn residual(&self, x: &[T], b: &[T], out: &mut [T]) {
        for row in 0..self.n {
            let mut acc = T::zero();
            for col in 0..self.n {
                acc = acc + self.get(row, col) * x[col];
            }
            out[row] = acc - b[row];
        }
    }

    /// LU factorization with partial pivoting, solving A·x = b in place.
    /// Destroys the matrix. Returns the pivot row on singularity.
    pub fn solve_in_place(&mut self, b: &mut [T]) -> Result<(), usize> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let scale = self.max_abs().max(T::one());
        let tiny = scale * T::epsilon() * T::of(16.0);
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_abs = self.get(k, k).abs();
            for row in (k + 1)..n {
                let candidate = self.get(row, k).abs();
                if candidate > pivot_abs {
                    pivot_abs = candidate;
                    pivot_row = row;
                }
            }
            if !(pivot_abs > tiny) {
                return Err(k);
            }
            if pivot_row != k {
                for col in 0..n {
                    self.data.swap(k * n + col, pivot_row * n + col);
                }
                b.swap(k, pivot_row);
            }
            let pivot = self.get(k, k);
            for row in (k + 1)..n {
                let factor = self.get(row, k) / pivot;
                if factor == T::zero() {
                    continue;
                }
                for col in (k + 1)..n {
                    let value = self.get(row, col) - factor * self.get(k, col);
                    self.data[row * n + col] = value;
                }
                b[row] = b[row] - factor * b[k];
                self.data[row * n + k] = T::zero();
            }
        }
        for row in (0..n).rev() {
            let mut acc = b[row];
            for col in (row + 1)..n {
                acc = acc - self.get(row, col) * b[col];
            }
            b[row] = acc / self.get(row, row);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_system() {
        let mut a = DenseMatrix::new(3);
        // | 2 1 0 |       | 1 |
        // | 1 3 1 | x  =  | 2 |
        // | 0 1 4 |       | 3 |
        a.add(0, 0, 2.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 3.0);
        a.add(1, 2, 1.0);
        a.add(2, 1, 1.0);
        a.add(2, 2, 4.0);
        let reference = a.clone();
        let mut b = vec![1.0, 2.0, 3.0];
        a.solve_in_place(&mut b).unwrap();
        let mut r = vec![0.0; 3];
        reference.residual(&b, &[1.0, 2.0, 3.0], &mut r);
        for value in r {
            assert!(value.abs() < 1e-12);
        }
    }

    #[test]
    fn pivots_through_a_zero_diagonal() {
        let mut a = DenseMatrix::new(2);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let mut b = vec![3.0, 5.0];
        a.solve_in_place(&mut b).unwrap();
        assert_eq!(b, vec![5.0, 3.0]);
    }

    #[test]
    fn reports_singularity() {
        let mut a = DenseMatrix::new(2);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 2.0);
        let mut b = vec![1.0, 2.0];
        assert!(a.solve_in_place(&mut b).is_err());
    }
}
