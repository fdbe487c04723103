//! Weighted convolution algebra on a uniform time grid.
//!
//! Functions on `(0, ∞)` are sampled at `t_k = k·step`; integrals use the
//! trapezoid rule and are truncated at the grid horizon, with the truncated
//! tail estimated from the decay over the last tenth of the grid.

mod ops;

pub use ops::{
    convolve, dirac_member, fundamental_identity_check, laplace, regularized_weight,
    weighted_l1_norm,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default grid spacing, `2⁻¹⁰`.
pub const DEFAULT_STEP: f64 = 1.0 / 1024.0;
/// Default grid horizon in time units.
pub const DEFAULT_HORIZON: f64 = 40.0;

/// Uniform grid `t_k = k·step`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {count}"
            )));
        }
        if !(step * (count - 1) as f64).is_finite() {
            return Err(Error::InvalidGrid("horizon is not finite".into()));
        }
        Ok(TimeGrid { step, count })
    }

    /// Grid covering `[0, horizon]` with the given step (horizon rounded up
    /// to a whole number of steps).
    pub fn with_horizon(step: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let count = (horizon / step - 1e-9).ceil() as usize + 1;
        TimeGrid::new(step, count)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.count - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.node(k))
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.count {
            0.5 * self.step
        } else {
            self.step
        }
    }

    /// Index of `t` when it lies on the grid (to within `1e-6` steps).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step;
        let k = x.round();
        if (x - k).abs() <= 1e-6 && k >= 0.0 && (k as usize) < self.count {
            Some(k as usize)
        } else {
            None
        }
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: step {} / {} nodes vs step {} / {} nodes",
                self.step, self.count, other.step, other.count
            )))
        }
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::with_horizon(DEFAULT_STEP, DEFAULT_HORIZON).expect("default grid is valid")
    }
}

/// Positive weight sampled on a grid, `values[k] = ω(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidWeight(format!(
                "{} values for {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "value {} at node {k} is not a positive finite number",
                values[k]
            )));
        }
        Ok(Weight { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Weight::new(grid, grid.nodes().map(f).collect())
    }

    /// `u_λ(t) = e^{λt}`
    pub fn exponential(grid: TimeGrid, lambda: f64) -> Result<Self> {
        Weight::from_fn(grid, |t| (lambda * t).exp())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation at an arbitrary `t ∈ [0, horizon]`.
    pub fn at(&self, t: f64) -> Option<f64> {
        interpolate(&self.grid, t, |k| self.values[k])
    }

    /// Largest relative violation of `ω(t_j + t_k) ≤ ω(t_j) ω(t_k)` over
    /// in-grid pairs. Long grids are checked on a strided subset of `j`.
    pub fn submultiplicativity_defect(&self) -> f64 {
        let n = self.values.len();
        let stride = (n / 512).max(1);
        let mut worst: f64 = 0.0;
        for j in (0..n).step_by(stride) {
            for k in (0..(n - j)).step_by(stride) {
                let lhs = self.values[j + k];
                let rhs = self.values[j] * self.values[k];
                worst = worst.max(lhs / rhs - 1.0);
            }
        }
        worst
    }

    pub fn is_submultiplicative(&self, tol: f64) -> bool {
        self.submultiplicativity_defect() <= tol
    }
}

/// Complex samples `values[k] = f(t_k)` of an element of `L¹_ω(ℝ⁺)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GridFunctionJson", try_from = "GridFunctionJson")]
pub struct GridFunction {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

/// Wire form `{step, values: [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunctionJson {
    pub step: f64,
    pub values: Vec<[f64; 2]>,
}

impl From<GridFunction> for GridFunctionJson {
    fn from(f: GridFunction) -> Self {
        GridFunctionJson {
            step: f.grid.step(),
            values: f.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<GridFunctionJson> for GridFunction {
    type Error = Error;
    fn try_from(json: GridFunctionJson) -> Result<Self> {
        let grid = TimeGrid::new(json.step, json.values.len())?;
        GridFunction::new(
            grid,
            json.values
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect(),
        )
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFunctionJson {
            step: self.grid.step(),
            values: self.values.iter().map(|v| [*v, 0.0]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = GridFunctionJson::deserialize(d)?;
        if json.values.iter().any(|[_, im]| *im != 0.0) {
            return Err(serde::de::Error::custom("weight values must be real"));
        }
        let grid = TimeGrid::new(json.step, json.values.len()).map_err(serde::de::Error::custom)?;
        Weight::new(grid, json.values.iter().map(|[re, _]| *re).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.count()
            )));
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Format("grid function values must be finite".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        GridFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.count()],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        GridFunction {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn from_real_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        GridFunction::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    /// `v_λ(t) = t e^{-λt}`
    pub fn v_lambda(grid: TimeGrid, lambda: f64) -> Self {
        GridFunction::from_real_fn(grid, |t| t * (-lambda * t).exp())
    }

    /// `v_λ'(t) = (1 - λt) e^{-λt}`
    pub fn v_lambda_prime(grid: TimeGrid, lambda: f64) -> Self {
        GridFunction::from_real_fn(grid, |t| (1.0 - lambda * t) * (-lambda * t).exp())
    }

    /// Unit-mass mollifier `v_{n,α}(t) = (n-α)² t e^{-(n-α)t}`.
    pub fn mollifier(grid: TimeGrid, n: f64, alpha: f64) -> Self {
        let c = n - alpha;
        GridFunction::from_real_fn(grid, |t| c * c * t * (-c * t).exp())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, t: f64) -> Option<Complex64> {
        interpolate(&self.grid, t, |k| self.values[k])
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(&other.grid, "add")?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Trapezoid integral `∫ f dt` over the grid.
    pub fn integral(&self) -> Complex64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.grid.weight(k))
            .sum()
    }

    /// Unweighted trapezoid `∫ |f| dt`.
    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v.norm() * self.grid.weight(k))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Shift by a whole number of grid steps: `(f*δ_{s·step})(t) = f(t - s·step)`.
    pub fn shift_nodes(&self, s: usize) -> GridFunction {
        let n = self.values.len();
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        if s < n {
            values[s..].copy_from_slice(&self.values[..n - s]);
        }
        GridFunction {
            grid: self.grid,
            values,
        }
    }
}

/// Point mass `mass·δ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub re: f64,
    pub im: f64,
}

impl Atom {
    pub fn new(t: f64, mass: Complex64) -> Self {
        Atom {
            t,
            re: mass.re,
            im: mass.im,
        }
    }

    pub fn mass(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Measure on `[0, ∞)` made of a sampled density and finitely many atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureRepr {
    pub density: Option<GridFunction>,
    pub atoms: Vec<Atom>,
}

impl MeasureRepr {
    pub fn new(density: Option<GridFunction>, atoms: Vec<Atom>) -> Result<Self> {
        let m = MeasureRepr { density, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn zero() -> Self {
        MeasureRepr::default()
    }

    pub fn dirac(t: f64) -> Result<Self> {
        MeasureRepr::new(None, vec![Atom::new(t, Complex64::new(1.0, 0.0))])
    }

    pub fn from_density(f: GridFunction) -> Self {
        MeasureRepr {
            density: Some(f),
            atoms: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(a.t >= 0.0) || !a.t.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {} must be a finite nonnegative time",
                    a.t
                )));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidMeasure("atom mass must be finite".into()));
            }
        }
        Ok(())
    }

    /// `∫ ω d|μ|`: trapezoid over the density plus weighted atom masses.
    pub fn weighted_variation(&self, w: &Weight) -> Result<f64> {
        let mut total = 0.0;
        if let Some(f) = &self.density {
            total += weighted_l1_norm(f, w)?;
        }
        for a in &self.atoms {
            let wt = w.at(a.t).ok_or_else(|| {
                Error::InvalidMeasure(format!(
                    "atom at t = {} lies beyond the weight horizon {}",
                    a.t,
                    w.grid().horizon()
                ))
            })?;
            total += a.mass().norm() * wt;
        }
        Ok(total)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.mass() == Complex64::new(0.0, 0.0))
            && self
                .density
                .as_ref()
                .is_none_or(|f| f.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)))
    }
}

fn interpolate<T>(grid: &TimeGrid, t: f64, value: impl Fn(usize) -> T) -> Option<T>
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    if !(t >= 0.0) || t > grid.horizon() * (1.0 + 1e-12) {
        return None;
    }
    let x = t / grid.step();
    let k = (x.floor() as usize).min(grid.count() - 1);
    if k + 1 >= grid.count() {
        return Some(value(grid.count() - 1) * 1.0);
    }
    let frac = x - k as f64;
    Some(value(k) * (1.0 - frac) + value(k + 1) * frac)
}

/// Estimated `∫_{horizon}^{∞}` of a nonnegative integrand whose grid
/// samples are `magnitude(k)`, assuming the exponential decay rate seen
/// over the last tenth of the grid persists. Infinite when the samples do
/// not decay there.
pub(crate) fn tail_estimate(grid: &TimeGrid, magnitude: impl Fn(usize) -> f64) -> f64 {
    let last = grid.count() - 1;
    let m_last = magnitude(last);
    if m_last == 0.0 {
        return 0.0;
    }
    let k0 = last - (last / 10).max(1);
    let m0 = magnitude(k0);
    if !(m0 > m_last) {
        return f64::INFINITY;
    }
    let rate = (m0 / m_last).ln() / (grid.node(last) - grid.node(k0));
    m_last / rate
}
