//! Matrix form of the linear operator and the shifted operator `A = L - sI`.
//!
//! All norms here are operator norms induced by the sup norm on `C^n`, which
//! for a dense matrix is the largest row sum of entry moduli.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::lattice::{LatticeField, LatticeParams};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Default ratio `s / ||L||`.
pub const DEFAULT_SHIFT_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("shift factor must exceed 1, got {0}")]
    InvalidShiftFactor(f64),
    #[error("A = L - sI is numerically singular for s = {s}")]
    SingularShift { s: f64 },
}

/// Assembles the `TK x TK` matrix of `L` acting on row-major flattened fields.
pub fn assemble_l(params: &LatticeParams) -> ComplexMatrix {
    let (tp, kp) = (params.t_period as i64, params.k_period as i64);
    let n = params.nodes();
    let idx = |t: i64, k: i64| (t.rem_euclid(tp) * kp + k.rem_euclid(kp)) as usize;
    let ib = Complex64::new(0.0, params.beta);
    let eps = Complex64::new(params.epsilon, 0.0);
    let mut m = ComplexMatrix::zeros(n, n);
    for t in 0..tp {
        for k in 0..kp {
            let row = idx(t, k);
            // coincident stencil points (T <= 2, K = 2) accumulate; the time
            // contributions then cancel exactly
            m[(row, idx(t + 1, k))] += ib;
            m[(row, idx(t - 1, k))] -= ib;
            m[(row, idx(t, k + 1))] += eps;
            m[(row, idx(t, k - 1))] += eps;
            m[(row, row)] -= 2.0 * eps;
        }
    }
    m
}

/// Operator norm induced by the sup norm: the maximum absolute row sum.
pub fn operator_norm_sup(matrix: &ComplexMatrix) -> f64 {
    assert!(matrix.is_square(), "operator norm needs a square matrix");
    matrix
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn mat_vec(matrix: &ComplexMatrix, phi: &LatticeField) -> LatticeField {
    let v = DVector::from_column_slice(phi.as_slice());
    let out = matrix * v;
    LatticeField::from_flat(phi.t_period(), phi.k_period(), out.as_slice().to_vec())
}

/// Real `2n x 2n` form of a complex matrix on interleaved `(re, im)` coordinates.
pub fn realify(matrix: &ComplexMatrix) -> DMatrix<f64> {
    let (rows, cols) = matrix.shape();
    DMatrix::from_fn(2 * rows, 2 * cols, |r, c| {
        let z = matrix[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// `L` with the shift `s > ||L||`, the factorization of `A = L - sI`, and the
/// three norms the existence argument needs.
#[derive(Debug, Clone)]
pub struct ShiftedOperator {
    params: LatticeParams,
    l_matrix: ComplexMatrix,
    a_matrix: ComplexMatrix,
    a_inverse: ComplexMatrix,
    lu: LU<Complex64, Dyn, Dyn>,
    s: f64,
    norm_l: f64,
    norm_a: f64,
    norm_a_inv: f64,
}

impl ShiftedOperator {
    /// Picks `s = shift_factor * ||L||` (or `s = shift_factor` if `||L|| = 0`).
    pub fn build(params: &LatticeParams, shift_factor: f64) -> Result<Self, OperatorError> {
        if !(shift_factor.is_finite() && shift_factor > 1.0) {
            return Err(OperatorError::InvalidShiftFactor(shift_factor));
        }
        let l_matrix = assemble_l(params);
        let norm_l = operator_norm_sup(&l_matrix);
        let s = if norm_l == 0.0 {
            shift_factor
        } else {
            shift_factor * norm_l
        };
        let n = params.nodes();
        let a_matrix = &l_matrix - ComplexMatrix::identity(n, n) * Complex64::new(s, 0.0);
        let lu = a_matrix.clone().lu();
        let a_inverse = lu.try_inverse().ok_or(OperatorError::SingularShift { s })?;
        let norm_a = operator_norm_sup(&a_matrix);
        let norm_a_inv = operator_norm_sup(&a_inverse);
        Ok(Self {
            params: *params,
            l_matrix,
            a_matrix,
            a_inverse,
            lu,
            s,
            norm_l,
            norm_a,
            norm_a_inv,
        })
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.nodes()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn norm_l(&self) -> f64 {
        self.norm_l
    }

    pub fn norm_a(&self) -> f64 {
        self.norm_a
    }

    pub fn norm_a_inv(&self) -> f64 {
        self.norm_a_inv
    }

    pub fn l_matrix(&self) -> &ComplexMatrix {
        &self.l_matrix
    }

    pub fn a_matrix(&self) -> &ComplexMatrix {
        &self.a_matrix
    }

    pub fn a_inverse(&self) -> &ComplexMatrix {
        &self.a_inverse
    }

    pub fn apply_a(&self, phi: &LatticeField) -> LatticeField {
        mat_vec(&self.a_matrix, phi)
    }

    /// `A^{-1} psi` via the LU factors.
    pub fn solve(&self, psi: &LatticeField) -> LatticeField {
        let rhs = DVector::from_column_slice(psi.as_slice());
        let x = self
            .lu
            .solve(&rhs)
            .expect("A was verified invertible at construction");
        LatticeField::from_flat(psi.t_period(), psi.k_period(), x.as_slice().to_vec())
    }
}
