use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{tail_estimate, GridFunction, MeasureRepr, TimeGrid, Weight};
use crate::error::{Error, Result};
use crate::Estimate;

/// `ω_λ(t) = e^{λt} sup_{s ≥ t} e^{-λs} ω(s)`, with the supremum taken over
/// the grid tail.
///
/// Rejects `lambda` when `e^{-λt} ω(t)` is still rising at the horizon,
/// which is what happens for `λ ≤ log ρ`.
pub fn regularized_weight(w: &Weight, lambda: f64) -> Result<Weight> {
    let grid = *w.grid();
    let scaled: Vec<f64> = w
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| (-lambda * grid.node(k)).exp() * v)
        .collect();
    let last = scaled.len() - 1;
    let max = scaled.iter().copied().fold(0.0, f64::max);
    if scaled[last] >= max && scaled[last] > scaled[0] * (1.0 + 1e-12) {
        return Err(Error::DivergentWeight(format!(
            "e^(-{lambda} t) w(t) is still increasing at t = {}",
            grid.horizon()
        )));
    }
    let mut running = 0.0f64;
    let mut out = vec![0.0; scaled.len()];
    for k in (0..scaled.len()).rev() {
        running = running.max(scaled[k]);
        out[k] = ((lambda * grid.node(k)).exp() * running).max(w.values()[k]);
    }
    Weight::new(grid, out)
}

/// Trapezoid-weighted discrete convolution
/// `(f*g)(t_k) ≈ step·Σ'_{j=0..k} f_j g_{k-j}` (endpoint terms halved),
/// truncated at the common horizon. Computed by zero-padded FFT.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.grid().ensure_same(g.grid(), "convolve")?;
    let grid = *f.grid();
    let n = grid.count();
    let len = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; len];
    let mut b = vec![zero; len];
    a[..n].copy_from_slice(f.values());
    b[..n].copy_from_slice(g.values());
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);

    let h = grid.step();
    let scale = h / len as f64;
    let (fv, gv) = (f.values(), g.values());
    let values = (0..n)
        .map(|k| a[k] * scale - (fv[0] * gv[k] + fv[k] * gv[0]) * (0.5 * h))
        .collect();
    GridFunction::new(grid, values)
}

/// Trapezoid `∫ |f| ω dt`.
pub fn weighted_l1_norm(f: &GridFunction, w: &Weight) -> Result<f64> {
    f.grid().ensure_same(w.grid(), "weighted_l1_norm")?;
    let grid = f.grid();
    Ok(f.values()
        .iter()
        .zip(w.values())
        .enumerate()
        .map(|(k, (v, wt))| v.norm() * wt * grid.weight(k))
        .sum())
}

/// Trapezoid sum with a Richardson estimate of its discretization error
/// (comparison against the rule with doubled step).
pub(crate) fn trapezoid_with_error(
    grid: &TimeGrid,
    g: impl Fn(usize) -> Complex64,
) -> (Complex64, f64) {
    let n = grid.count();
    let values: Vec<Complex64> = (0..n).map(&g).collect();
    let h = grid.step();
    let full: Complex64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * grid.weight(k))
        .sum();
    let m = (n - 1) / 2;
    if m == 0 {
        return (full, 0.0);
    }
    let end = 2 * m;
    let mut fine = Complex64::new(0.0, 0.0);
    for (k, v) in values[..=end].iter().enumerate() {
        let w = if k == 0 || k == end { 0.5 } else { 1.0 };
        fine += v * (w * h);
    }
    let mut coarse = Complex64::new(0.0, 0.0);
    for j in 0..=m {
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        coarse += values[2 * j] * (w * 2.0 * h);
    }
    (full, (fine - coarse).norm() / 3.0)
}

/// `𝓛(μ)(z) = ∫ e^{-zt} dμ(t)`: trapezoid over the density plus the exact
/// atom sum. The budget holds the discretization estimate and the
/// truncated tail; callers should treat a budget above their tolerance as
/// a warning that `Re z` is too close to the measure's abscissa.
pub fn laplace(mu: &MeasureRepr, z: Complex64) -> Estimate<Complex64> {
    let mut value: Complex64 = mu.atoms.iter().map(|a| a.mass() * (-z * a.t).exp()).sum();
    let mut budget = 0.0;
    if let Some(f) = &mu.density {
        let grid = f.grid();
        let fv = f.values();
        let (s, err) = trapezoid_with_error(grid, |k| fv[k] * (-z * grid.node(k)).exp());
        value += s;
        let tail = tail_estimate(grid, |k| fv[k].norm() * (-z.re * grid.node(k)).exp());
        budget += err + tail;
    }
    Estimate::new(value, budget)
}

/// Member `f_n` of the box-kernel Dirac sequence: constant on
/// `[0, a_n]`, `a_n = 1/n`, normalized to unit trapezoid mass.
pub fn dirac_member(n: u64, grid: &TimeGrid) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::Precondition(
            "Dirac sequence index starts at 1".into(),
        ));
    }
    let support = 1.0 / n as f64;
    if support < grid.step() {
        return Err(Error::Precondition(format!(
            "support 1/{n} is below the grid step {}",
            grid.step()
        )));
    }
    let last = ((support / grid.step()) + 1e-9).floor() as usize;
    let last = last.min(grid.count() - 1);
    let box_fn = GridFunction::from_fn(*grid, |t| {
        if t <= support * (1.0 + 1e-12) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    debug_assert!(box_fn.values()[last].re == 1.0);
    let mass = box_fn.integral().re;
    Ok(box_fn.scale(Complex64::new(1.0 / mass, 0.0)))
}

/// L¹ norm of `f*δ_t − f + ∫₀ᵗ (f'*δ_s) ds` for on-grid `t`.
///
/// The inner integral uses the trapezoid rule over `s`; where `s` crosses
/// the jump of the shifted derivative the rule is first order, so the
/// residual is `O(step)` with constant about `t·|f'(0)|/2`.
pub fn fundamental_identity_check(f: &GridFunction, fprime: &GridFunction, t: f64) -> Result<f64> {
    f.grid()
        .ensure_same(fprime.grid(), "fundamental_identity_check")?;
    let grid = *f.grid();
    let shift = grid.index_of(t).ok_or_else(|| {
        Error::Precondition(format!(
            "t = {t} must be a grid node (step {})",
            grid.step()
        ))
    })?;
    let scale = f.max_abs().max(fprime.max_abs() * grid.step());
    if f.values()[0].norm() > 1e-8 * scale.max(1e-300) {
        return Err(Error::Precondition(format!(
            "f(0) = {} must vanish",
            f.values()[0]
        )));
    }
    let h = grid.step();
    let fv = f.values();
    let dv = fprime.values();
    let n = grid.count();
    let shifted = f.shift_nodes(shift);
    let residual: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut integral = Complex64::new(0.0, 0.0);
            for j in 0..=shift {
                let w = if j == 0 || j == shift { 0.5 * h } else { h };
                if j <= k {
                    integral += dv[k - j] * w;
                }
            }
            shifted.values()[k] - fv[k] + integral
        })
        .collect();
    Ok(GridFunction::new(grid, residual)?.l1_norm())
}
