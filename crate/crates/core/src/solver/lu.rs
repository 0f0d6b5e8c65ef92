//! Dense LU factorization with partial pivoting.

#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    // row-major, L below the diagonal (unit diagonal implied), U on and above
    lu: Vec<f64>,
    // perm[i] = original row placed at position i
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factors a row-major `n x n` matrix. Returns `None` when a pivot falls
    /// below `pivot_tol` relative to the largest entry of its column.
    pub(crate) fn factor(mut a: Vec<f64>, n: usize, pivot_tol: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_abs = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs <= pivot_tol {
                return None;
            }
            if best != k {
                for j in 0..n {
                    a.swap(k * n + j, best * n + j);
                }
                perm.swap(k, best);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let mut s = x[i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A^T x = b` in place.
    pub(crate) fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        // U^T z = b
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        // L^T w = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        // x = P^T w
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = z[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(a: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn solves_both_orientations() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 4.0];
        let lu = DenseLu::factor(a.clone(), 3, 1e-12).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b = matvec(&a, &x, 3);
        lu.solve(&mut b);
        for (u, v) in b.iter().zip(x) {
            assert!((u - v).abs() < 1e-12);
        }
        let at: Vec<f64> = (0..9).map(|k| a[(k % 3) * 3 + k / 3]).collect();
        let mut bt = matvec(&at, &x, 3);
        lu.solve_transpose(&mut bt);
        for (u, v) in bt.iter().zip(x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(DenseLu::factor(a, 2, 1e-12).is_none());
    }
}
