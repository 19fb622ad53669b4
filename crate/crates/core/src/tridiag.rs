//! Complex tridiagonal systems: Thomas algorithm with a reusable factorization.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<C<T>>,
    pub diag: Vec<C<T>>,
    pub upper: Vec<C<T>>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        let z = C::new(T::zero(), T::zero());
        Self {
            lower: vec![z; n],
            diag: vec![z; n],
            upper: vec![z; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A x`.
    pub fn mul_into(&self, x: &[C<T>], out: &mut [C<T>]) {
        let n = self.len();
        debug_assert!(x.len() == n && out.len() == n);
        if n == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.upper[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1];
        }
        out[n - 1] = self.lower[n - 1] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// LU factorization without pivoting.
    ///
    /// Fails if a pivot vanishes relative to the row scale. Matrices whose
    /// Hermitian part is positive definite (Crank–Nicolson with a
    /// dissipative Hamiltonian) never trigger this.
    pub fn factorize(&self) -> Result<ThomasFactors<T>> {
        let n = self.len();
        let zero = C::new(T::zero(), T::zero());
        let mut sweep = vec![zero; n];
        let mut inv_pivot = vec![zero; n];
        let tiny = T::epsilon() * T::epsilon();
        let mut prev = zero;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * prev
            };
            let scale = self.diag[i].norm() + self.lower[i].norm() + self.upper[i].norm();
            if !(pivot.norm() > tiny * scale) || !pivot.re.is_finite() || !pivot.im.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            let inv = pivot.inv();
            inv_pivot[i] = inv;
            prev = if i + 1 < n { self.upper[i] * inv } else { zero };
            sweep[i] = prev;
        }
        Ok(ThomasFactors {
            lower: self.lower.clone(),
            sweep,
            inv_pivot,
        })
    }

    /// One-shot solve.
    pub fn solve(&self, rhs: &[C<T>]) -> Result<Vec<C<T>>> {
        let f = self.factorize()?;
        let mut x = rhs.to_vec();
        f.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Precomputed elimination coefficients; solving is then `O(n)` with no divisions.
#[derive(Debug, Clone)]
pub struct ThomasFactors<T> {
    lower: Vec<C<T>>,
    sweep: Vec<C<T>>,
    inv_pivot: Vec<C<T>>,
}

impl<T: Real> ThomasFactors<T> {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, x: &mut [C<T>]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        x[0] = x[0] * self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.sweep[i] * x[i + 1];
        }
    }
}
