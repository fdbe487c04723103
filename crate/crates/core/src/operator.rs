//! Square complex matrices standing in for bounded operators on a finite
//! dimensional space.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded operator on `C^dim`, stored as a dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorJson", try_from = "OperatorJson")]
pub struct Operator(DMatrix<Complex64>);

/// Wire form: `{dim, entries: [[re, im], ...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<Operator> for OperatorJson {
    fn from(op: Operator) -> Self {
        let n = op.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = op.0[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorJson { dim: n, entries }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;

    fn try_from(json: OperatorJson) -> Result<Self> {
        let n = json.dim;
        if n == 0 {
            return Err(Error::Format("matrix dimension must be positive".into()));
        }
        if json.entries.len() != n * n {
            return Err(Error::Format(format!(
                "expected {} entries for dim {}, found {}",
                n * n,
                n,
                json.entries.len()
            )));
        }
        if json.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Format("matrix entries must be finite".into()));
        }
        Ok(Operator(DMatrix::from_row_iterator(
            n,
            n,
            json.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        )))
    }
}

/// Eigendecomposition `A = V diag(values) V⁻¹`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// `‖V‖₂ ‖V⁻¹‖₂`
    pub condition: f64,
}

/// Largest eigenvector condition number accepted as diagonalizable.
pub const MAX_EIGVEC_CONDITION: f64 = 1e8;

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Operator(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        Operator(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must form a square matrix".into()));
        }
        Operator::new(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Operator {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c·I`
    pub fn shift(&self, c: Complex64) -> Operator {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        Operator(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Spectral norm (largest singular value).
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.0)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Ratio of extreme singular values; infinite for singular matrices.
    pub fn condition(&self) -> f64 {
        let sv = self.0.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn powi(&self, n: u32) -> Operator {
        let mut result = Operator::identity(self.dim());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        result
    }

    /// Solves `self · X = rhs` by partial-pivot LU.
    pub fn solve(&self, rhs: &Operator) -> Result<Operator> {
        if rhs.dim() != self.dim() {
            return Err(Error::Dimension("solve: operand sizes differ".into()));
        }
        let lu = self.0.clone().lu();
        let x = lu
            .solve(&rhs.0)
            .ok_or_else(|| Error::Singular("LU factorization hit a zero pivot".into()))?;
        let x = Operator(x);
        if !x.is_finite() {
            return Err(Error::Singular("solution is not finite".into()));
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Operator> {
        self.solve(&Operator::identity(self.dim()))
    }

    /// `exp(t·self)` by Padé scaling and squaring.
    pub fn exp_scaled(&self, t: f64) -> Operator {
        Operator((&self.0 * Complex64::new(t, 0.0)).exp())
    }

    /// Complex Schur form `self = Q T Q*` with `T` upper triangular.
    pub fn schur(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        self.0.clone().schur().unpack()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let (_, t) = self.schur();
        (0..t.nrows()).map(|i| t[(i, i)]).collect()
    }

    /// Eigendecomposition via the Schur form and triangular back
    /// substitution. Fails when the eigenvector basis is numerically
    /// degenerate (defective or nearly so).
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.dim();
        let (q, t) = self.schur();
        let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
        let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            y[(k, k)] = Complex64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = Complex64::new(0.0, 0.0);
                for j in (i + 1)..=k {
                    s += t[(i, j)] * y[(j, k)];
                }
                let mut d = t[(i, i)] - t[(k, k)];
                if d.norm() < 1e-14 * scale {
                    d = Complex64::new(1e-14 * scale, 0.0);
                }
                y[(i, k)] = -s / d;
            }
        }
        let mut v = q * y;
        for mut col in v.column_iter_mut() {
            let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            col /= Complex64::new(nrm, 0.0);
        }
        let inverse = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Defective("eigenvector matrix is singular".into()))?;
        let condition = spectral_norm(&v) * spectral_norm(&inverse);
        if !condition.is_finite() || condition > MAX_EIGVEC_CONDITION {
            return Err(Error::Defective(format!(
                "eigenvector condition number {condition:.3e} exceeds {MAX_EIGVEC_CONDITION:.0e}"
            )));
        }
        Ok(Eigen {
            values,
            vectors: v,
            inverse,
            condition,
        })
    }

    /// Largest real part of the spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Eigen {
    /// `V diag(f(λ_i)) V⁻¹`
    pub fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> Operator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, lam) in self.values.iter().enumerate() {
            let c = f(*lam);
            for i in 0..n {
                scaled[(i, j)] *= c;
            }
        }
        Operator(scaled * &self.inverse)
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}
