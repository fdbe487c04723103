//! Finite-dimensional semigroups `t ↦ T(t)`.
//!
//! Three realizations are provided:
//!
//! * `matrix_exp(A)`: `T(t) = e^{tA}` by Padé scaling and squaring;
//! * `diagonal(eigs)`: `T(t) = diag(e^{t·a_i})`;
//! * `nilpotent_shift(dim, unit)`: the lattice shift `T(t) = S^{⌈t/unit⌉}`
//!   for `t > 0`, `T(0) = I`, where `S` is the sub-diagonal shift on
//!   `C^dim`. Every `T(t)` with `t > 0` is nilpotent and `T(t) = 0` once
//!   `t > (dim-1)·unit`, so the growth bound is `-∞`. The semigroup law is
//!   exact on the lattice `unit·ℕ`; off the lattice the exponents
//!   `⌈s/h⌉ + ⌈t/h⌉` and `⌈(s+t)/h⌉` differ by at most one, so
//!   `‖T(s+t) − T(s)T(t)‖ ≤ 1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{TimeGrid, Weight};
use crate::error::{Error, Result};
use crate::operator::Operator;

/// Node blocks used for parallel work. Fixed so that floating point
/// reductions happen in the same order on every run.
pub(crate) const CHUNK: usize = 512;

/// Which family realizes `T(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendKind {
    MatrixExp(Operator),
    Diagonal(Vec<Complex64>),
    NilpotentShift { dim: usize, unit: f64 },
}

/// A semigroup together with cached growth data and per-grid orbits.
/// Orbits keyed by grid step bits and node count.
type OrbitCache = RwLock<HashMap<(u64, usize), Arc<Vec<Operator>>>>;

pub struct SemigroupBackend {
    kind: BackendKind,
    growth: f64,
    schur: Option<(DMatrix<Complex64>, DMatrix<Complex64>)>,
    orbits: OrbitCache,
}

impl fmt::Debug for SemigroupBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemigroupBackend")
            .field("kind", &self.kind)
            .field("growth", &self.growth)
            .finish()
    }
}

impl Clone for SemigroupBackend {
    fn clone(&self) -> Self {
        SemigroupBackend {
            kind: self.kind.clone(),
            growth: self.growth,
            schur: self.schur.clone(),
            orbits: RwLock::new(HashMap::new()),
        }
    }
}

impl SemigroupBackend {
    pub fn matrix_exp(generator: Operator) -> Result<Self> {
        if !generator.is_finite() {
            return Err(Error::Format("generator has non-finite entries".into()));
        }
        let schur = generator.schur();
        let growth = (0..schur.1.nrows())
            .map(|i| schur.1[(i, i)].re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(SemigroupBackend {
            kind: BackendKind::MatrixExp(generator),
            growth,
            schur: Some(schur),
            orbits: RwLock::new(HashMap::new()),
        })
    }

    pub fn diagonal(eigs: Vec<Complex64>) -> Result<Self> {
        if eigs.is_empty() {
            return Err(Error::Dimension(
                "diagonal backend needs at least one eigenvalue".into(),
            ));
        }
        if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("eigenvalues must be finite".into()));
        }
        let growth = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(SemigroupBackend {
            kind: BackendKind::Diagonal(eigs),
            growth,
            schur: None,
            orbits: RwLock::new(HashMap::new()),
        })
    }

    pub fn nilpotent_shift(dim: usize, unit: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("shift dimension must be positive".into()));
        }
        if !(unit > 0.0) || !unit.is_finite() {
            return Err(Error::Precondition(format!(
                "shift unit must be positive, got {unit}"
            )));
        }
        Ok(SemigroupBackend {
            kind: BackendKind::NilpotentShift { dim, unit },
            growth: f64::NEG_INFINITY,
            schur: None,
            orbits: RwLock::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> &BackendKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BackendKind::MatrixExp(a) => a.dim(),
            BackendKind::Diagonal(e) => e.len(),
            BackendKind::NilpotentShift { dim, .. } => *dim,
        }
    }

    /// `log ρ_T`: the spectral abscissa of the generator, or `-∞` for the
    /// eventually vanishing shift.
    pub fn growth_bound(&self) -> f64 {
        self.growth
    }

    /// Whether the image algebra has no characters (quasinilpotent case).
    pub fn is_radical(&self) -> bool {
        matches!(self.kind, BackendKind::NilpotentShift { .. })
    }

    /// The generator matrix, when the backend has one.
    pub fn generator_matrix(&self) -> Option<Operator> {
        match &self.kind {
            BackendKind::MatrixExp(a) => Some(a.clone()),
            BackendKind::Diagonal(e) => Some(Operator::from_diagonal(e)),
            BackendKind::NilpotentShift { .. } => None,
        }
    }

    /// Rough size of the generator, used to pick quadrature panel widths.
    pub fn generator_scale(&self) -> f64 {
        match &self.kind {
            BackendKind::MatrixExp(a) => a.norm(),
            BackendKind::Diagonal(e) => e.iter().map(|z| z.norm()).fold(0.0, f64::max),
            BackendKind::NilpotentShift { unit, .. } => 1.0 / unit,
        }
    }

    /// The sub-diagonal shift `S` of the lattice backend.
    pub fn shift_matrix(dim: usize) -> Operator {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 1..dim {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        Operator::new(m).expect("square")
    }

    fn shift_power(dim: usize, k: usize) -> Operator {
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            if j + k < dim {
                m[(j + k, j)] = Complex64::new(1.0, 0.0);
            }
        }
        Operator::new(m).expect("square")
    }

    /// Lattice exponent `⌈t/unit⌉` (0 at `t = 0`).
    pub(crate) fn lattice_index(t: f64, unit: f64) -> usize {
        if t == 0.0 {
            0
        } else {
            ((t / unit) - 1e-9).ceil().max(1.0) as usize
        }
    }

    /// `T(t)`, with `T(0) = I`.
    pub fn evaluate(&self, t: f64) -> Result<Operator> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        Ok(match &self.kind {
            BackendKind::MatrixExp(a) => {
                if t == 0.0 {
                    Operator::identity(a.dim())
                } else {
                    a.exp_scaled(t)
                }
            }
            BackendKind::Diagonal(e) => {
                let d: Vec<Complex64> = e.iter().map(|a| (a * t).exp()).collect();
                Operator::from_diagonal(&d)
            }
            BackendKind::NilpotentShift { dim, unit } => {
                Self::shift_power(*dim, Self::lattice_index(t, *unit))
            }
        })
    }

    /// `‖T(t)‖` without materializing the matrix where possible.
    pub fn norm_at(&self, t: f64) -> Result<f64> {
        match &self.kind {
            BackendKind::Diagonal(e) => {
                if t < 0.0 {
                    return Err(Error::NegativeTime(t));
                }
                Ok(e.iter().map(|a| (a.re * t).exp()).fold(0.0, f64::max))
            }
            BackendKind::NilpotentShift { dim, unit } => {
                if t < 0.0 {
                    return Err(Error::NegativeTime(t));
                }
                Ok(if Self::lattice_index(t, *unit) < *dim {
                    1.0
                } else {
                    0.0
                })
            }
            BackendKind::MatrixExp(_) => Ok(self.evaluate(t)?.norm()),
        }
    }

    /// `T(t_k)` for every node of `grid`, cached per grid.
    pub fn orbit(&self, grid: &TimeGrid) -> Arc<Vec<Operator>> {
        let key = (grid.step().to_bits(), grid.count());
        if let Some(o) = self.orbits.read().expect("orbit cache poisoned").get(&key) {
            return Arc::clone(o);
        }
        let computed = Arc::new(self.compute_orbit(grid));
        let mut cache = self.orbits.write().expect("orbit cache poisoned");
        Arc::clone(cache.entry(key).or_insert(computed))
    }

    fn compute_orbit(&self, grid: &TimeGrid) -> Vec<Operator> {
        let n = grid.count();
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let step_op = self.evaluate(grid.step()).expect("positive step");
        let blocks: Vec<Vec<Operator>> = starts
            .par_iter()
            .map(|&s| {
                let end = (s + CHUNK).min(n);
                let mut block = Vec::with_capacity(end - s);
                let mut cur = self.evaluate(grid.node(s)).expect("nonnegative node");
                block.push(cur.clone());
                for _ in (s + 1)..end {
                    cur = match self.kind {
                        BackendKind::MatrixExp(_) => &cur * &step_op,
                        _ => self.evaluate(grid.node(s + block.len())).expect("node"),
                    };
                    block.push(cur.clone());
                }
                block
            })
            .collect();
        blocks.into_iter().flatten().collect()
    }

    /// `Σ_k c_k T(t_k)` over the grid nodes.
    pub fn weighted_sum(&self, grid: &TimeGrid, coeffs: &[Complex64]) -> Operator {
        assert_eq!(coeffs.len(), grid.count());
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            BackendKind::Diagonal(e) => {
                let d: Vec<Complex64> = e
                    .iter()
                    .map(|a| chunked_sum(coeffs.len(), |k| coeffs[k] * (a * grid.node(k)).exp()))
                    .collect();
                Operator::from_diagonal(&d)
            }
            BackendKind::NilpotentShift { dim, unit } => {
                let mut per_power = vec![zero; *dim];
                for (k, c) in coeffs.iter().enumerate() {
                    let p = Self::lattice_index(grid.node(k), *unit);
                    if p < *dim {
                        per_power[p] += c;
                    }
                }
                toeplitz_lower(&per_power)
            }
            BackendKind::MatrixExp(a) => {
                let orbit = self.orbit(grid);
                let dim = a.dim();
                let partial: Vec<DMatrix<Complex64>> = (0..coeffs.len())
                    .step_by(CHUNK)
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|&s| {
                        let mut acc = DMatrix::zeros(dim, dim);
                        for k in s..(s + CHUNK).min(coeffs.len()) {
                            if coeffs[k] != zero {
                                acc += orbit[k].matrix() * coeffs[k];
                            }
                        }
                        acc
                    })
                    .collect();
                let mut total = DMatrix::zeros(dim, dim);
                for p in partial {
                    total += p;
                }
                Operator::new(total).expect("square")
            }
        }
    }

    /// `ω_T(t_k) = ‖T(t_k)‖`, clamped below at the smallest positive float
    /// so that eventually vanishing semigroups still give a valid weight.
    pub fn semigroup_weight(&self, grid: &TimeGrid) -> Weight {
        let values: Vec<f64> = match &self.kind {
            BackendKind::MatrixExp(_) => self.orbit(grid).iter().map(|t| t.norm()).collect(),
            _ => grid
                .nodes()
                .map(|t| self.norm_at(t).expect("nonnegative node"))
                .collect(),
        };
        Weight::new(
            *grid,
            values
                .into_iter()
                .map(|v| v.max(f64::MIN_POSITIVE))
                .collect(),
        )
        .expect("norms are finite")
    }

    /// `‖u‖_λ = sup_{s ≥ 0} e^{-λs} ‖T(s)u‖`, the supremum taken over the
    /// nodes of `sample` (which include `s = 0`).
    pub fn lambda_norm(&self, u: &Operator, lambda: f64, sample: &TimeGrid) -> Result<f64> {
        if !(lambda > self.growth) {
            return Err(Error::Abscissa(format!(
                "lambda = {lambda} must exceed the growth bound {}",
                self.growth
            )));
        }
        if u.dim() != self.dim() {
            return Err(Error::Dimension("lambda_norm: operator size".into()));
        }
        let values: Vec<f64> = match &self.kind {
            BackendKind::MatrixExp(_) => {
                let orbit = self.orbit(sample);
                orbit
                    .par_iter()
                    .enumerate()
                    .map(|(k, t)| (-lambda * sample.node(k)).exp() * (t * u).norm())
                    .collect()
            }
            _ => (0..sample.count())
                .into_par_iter()
                .map(|k| {
                    let s = sample.node(k);
                    (-lambda * s).exp() * (&self.evaluate(s).expect("node") * u).norm()
                })
                .collect(),
        };
        Ok(values.into_iter().fold(0.0, f64::max))
    }

    /// Exact resolvent `(λI − A)⁻¹` by a direct solve. For the lattice
    /// shift this is the closed form of `∫ e^{-λs} T(s) ds`,
    /// `((1 − e^{-λh})/λ) · S (I − e^{-λh} S)⁻¹`, which is entire in `λ`.
    pub fn resolvent_direct(&self, lambda: Complex64) -> Result<Operator> {
        match &self.kind {
            BackendKind::MatrixExp(a) => {
                let m = (-a).shift(lambda);
                let r = m.inverse()?;
                if m.condition() > 1e14 {
                    return Err(Error::Singular(format!("λ = {lambda} is in the spectrum")));
                }
                Ok(r)
            }
            BackendKind::Diagonal(e) => {
                let mut d = Vec::with_capacity(e.len());
                for a in e {
                    let gap = lambda - a;
                    if gap.norm() <= 1e-14 * (1.0 + a.norm()) {
                        return Err(Error::Singular(format!("λ = {lambda} is an eigenvalue")));
                    }
                    d.push(1.0 / gap);
                }
                Ok(Operator::from_diagonal(&d))
            }
            BackendKind::NilpotentShift { dim, unit } => {
                let s = Self::shift_matrix(*dim);
                let q = (-lambda * *unit).exp();
                let m = Operator::identity(*dim) - s.scale(q);
                let inv = m.inverse()?;
                Ok((&s * &inv).scale(cell_integral(lambda, *unit)))
            }
        }
    }

    /// `Σ_k w_k (A + z_k I)⁻¹`, the building block of vertical-line
    /// integrals. Matrix generators are reduced to Schur form once; each
    /// node then costs a triangular inverse.
    pub fn line_resolvent_sum(&self, points: &[(Complex64, Complex64)]) -> Result<Operator> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            BackendKind::Diagonal(e) => {
                let mut d = Vec::with_capacity(e.len());
                for a in e {
                    d.push(chunked_sum(points.len(), |k| {
                        let (z, w) = points[k];
                        w / (a + z)
                    }));
                }
                if d.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::Singular("line passes through the spectrum".into()));
                }
                Ok(Operator::from_diagonal(&d))
            }
            BackendKind::NilpotentShift { dim, unit } => {
                let h = *unit;
                let blocks: Vec<Vec<Complex64>> = (0..points.len())
                    .step_by(CHUNK)
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|&s| {
                        let mut c = vec![zero; *dim];
                        for &(z, w) in &points[s..(s + CHUNK).min(points.len())] {
                            // (A + zI)⁻¹ = −R(−z) = −c(−z) Σ_{k≥1} e^{z(k−1)h} S^k
                            let lead = -w * cell_integral(-z, h);
                            let q = (z * h).exp();
                            let mut pw = Complex64::new(1.0, 0.0);
                            for ck in c.iter_mut().skip(1) {
                                *ck += lead * pw;
                                pw *= q;
                            }
                        }
                        c
                    })
                    .collect();
                let mut coeffs = vec![zero; *dim];
                for b in blocks {
                    for (c, v) in coeffs.iter_mut().zip(b) {
                        *c += v;
                    }
                }
                Ok(toeplitz_lower(&coeffs))
            }
            BackendKind::MatrixExp(_) => {
                let (q, t) = self.schur.as_ref().expect("schur cached");
                let n = t.nrows();
                let blocks: Vec<Option<DMatrix<Complex64>>> = (0..points.len())
                    .step_by(CHUNK)
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|&s| {
                        let mut acc = DMatrix::zeros(n, n);
                        for &(z, w) in &points[s..(s + CHUNK).min(points.len())] {
                            let inv = upper_triangular_inverse_shifted(t, z)?;
                            acc += inv * w;
                        }
                        Some(acc)
                    })
                    .collect();
                let mut m = DMatrix::zeros(n, n);
                for b in blocks {
                    m += b.ok_or_else(|| {
                        Error::Singular("line passes through the spectrum".into())
                    })?;
                }
                Operator::new(q * m * q.adjoint())
            }
        }
    }
}

/// `∫_0^h e^{-λs} ds = (1 − e^{-λh})/λ`, stable near `λ = 0`.
pub(crate) fn cell_integral(lambda: Complex64, h: f64) -> Complex64 {
    let x = lambda * h;
    if x.norm() < 1e-4 {
        // h (1 − x/2 + x²/6 − x³/24)
        h * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        (1.0 - (-x).exp()) / lambda
    }
}

/// Lower-triangular Toeplitz matrix `Σ_k c_k S^k`.
pub(crate) fn toeplitz_lower(coeffs: &[Complex64]) -> Operator {
    let dim = coeffs.len();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i >= j {
            coeffs[i - j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Operator::new(m).expect("square")
}

/// `(T + zI)⁻¹` for upper-triangular `T`; `None` on a zero pivot.
fn upper_triangular_inverse_shifted(
    t: &DMatrix<Complex64>,
    z: Complex64,
) -> Option<DMatrix<Complex64>> {
    let n = t.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for i in (0..n).rev() {
        let d = t[(i, i)] + z;
        if d == Complex64::new(0.0, 0.0) {
            return None;
        }
        inv[(i, i)] = 1.0 / d;
        for j in (i + 1)..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                s += t[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / d;
        }
    }
    Some(inv)
}

/// Sum of `term(0..n)` in fixed-size blocks evaluated in parallel, added
/// in block order.
pub(crate) fn chunked_sum(n: usize, term: impl Fn(usize) -> Complex64 + Sync) -> Complex64 {
    let parts: Vec<Complex64> = (0..n)
        .step_by(CHUNK)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&s| (s..(s + CHUNK).min(n)).map(&term).sum())
        .collect();
    parts.into_iter().sum()
}
