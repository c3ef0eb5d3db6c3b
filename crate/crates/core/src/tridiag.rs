/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting: the callers only
/// pass diagonally dominant M-matrices.
pub(crate) fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    Factorized::new(lower, diag, upper).solve(rhs);
}

/// Forward-elimination coefficients of a tridiagonal matrix, reusable across
/// right-hand sides.
#[derive(Clone, Debug)]
pub(crate) struct Factorized {
    lower: Vec<f64>,
    c: Vec<f64>,
    inv_beta: Vec<f64>,
}

impl Factorized {
    pub(crate) fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        debug_assert!(lower.len() == n && upper.len() == n);
        let mut c = vec![0.0; n];
        let mut inv_beta = vec![0.0; n];
        inv_beta[0] = 1.0 / diag[0];
        c[0] = upper[0] * inv_beta[0];
        for i in 1..n {
            inv_beta[i] = 1.0 / (diag[i] - lower[i] * c[i - 1]);
            c[i] = upper[i] * inv_beta[i];
        }
        Self {
            lower: lower.to_vec(),
            c,
            inv_beta,
        }
    }

    pub(crate) fn solve(&self, rhs: &mut [f64]) {
        let n = self.c.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_beta[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let mut rhs = vec![1.0, 0.0, 1.0];
        solve(&[0.0, -1.0, -1.0], &[2.0; 3], &[-1.0, -1.0, 0.0], &mut rhs);
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn factorization_is_reusable() {
        let f = Factorized::new(&[0.0, -1.0, -1.0], &[2.0; 3], &[-1.0, -1.0, 0.0]);
        let mut a = vec![1.0, 0.0, 1.0];
        let mut b = vec![2.0, 0.0, 2.0];
        f.solve(&mut a);
        f.solve(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 1.0).abs() < 1e-15 && (y - 2.0).abs() < 1e-15);
        }
    }
}
