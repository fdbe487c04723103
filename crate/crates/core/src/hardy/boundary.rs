use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::HalfPlaneFunction;
use crate::algebra::{GridFunction, TimeGrid};
use crate::error::{Error, Result};
use crate::quad::adaptive;
use crate::Estimate;

/// Samples `F(α + ε + i y_k)`. Serialized as rows `[y, re, im]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    pub y: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Serialize for BoundaryTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<[f64; 3]> = self
            .y
            .iter()
            .zip(&self.values)
            .map(|(y, v)| [*y, v.re, v.im])
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<[f64; 3]>::deserialize(d)?;
        Ok(BoundaryTable {
            y: rows.iter().map(|r| r[0]).collect(),
            values: rows.iter().map(|r| Complex64::new(r[1], r[2])).collect(),
        })
    }
}

/// `m` samples on `[−Y, Y]` (both ends included) of `F` on the line
/// `Re z = alpha + offset`. The budget is the estimated `∫_{|y|>Y} |F|`.
pub fn boundary_samples(
    f: &HalfPlaneFunction,
    alpha: f64,
    y_max: f64,
    m: usize,
    offset: f64,
) -> Result<Estimate<BoundaryTable>> {
    if alpha < f.alpha() {
        return Err(Error::Abscissa(format!(
            "line Re z = {alpha} lies left of the half-plane Re z > {}",
            f.alpha()
        )));
    }
    if !m.is_power_of_two() || m < 2 {
        return Err(Error::Precondition(format!(
            "sample count {m} is not a power of two"
        )));
    }
    if !(y_max > 0.0) || !(offset >= 0.0) {
        return Err(Error::Precondition(
            "Y must be positive and the offset nonnegative".into(),
        ));
    }
    f.check_poles(alpha)?;
    let re = alpha + offset;
    let y: Vec<f64> = (0..m)
        .map(|k| -y_max + 2.0 * y_max * k as f64 / (m - 1) as f64)
        .collect();
    let values: Vec<Complex64> = y
        .par_iter()
        .map(|&y| f.eval(Complex64::new(re, y)))
        .collect();
    if let Some(k) = values
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::Singularity(format!(
            "F is not finite at {re}{:+}i on the sampled line",
            y[k]
        )));
    }
    Ok(Estimate::new(
        BoundaryTable { y, values },
        tail_l1(f, re, y_max),
    ))
}

/// Local power-law decay exponent of `|F(β + iy)|` around `y`.
pub(crate) fn decay_exponent(f: &HalfPlaneFunction, beta: f64, y: f64) -> f64 {
    let m = |s: f64| f.eval(Complex64::new(beta, s * y)).norm();
    let (m1, m2, m4) = (m(1.0), m(2.0), m(4.0));
    if m2 == 0.0 && m4 == 0.0 {
        return f64::INFINITY;
    }
    (m1 / m2).log2().min((m2 / m4).log2())
}

/// Estimated `∫_{|y|>Y} |F(β + iy)| dy`; infinite when either tail does
/// not decay faster than `1/|y|`. Each tail is integrated after the
/// substitution `y = Y/s`, which maps it onto `(0, 1]` with a bounded
/// integrand for power-law decay.
pub fn tail_l1(f: &HalfPlaneFunction, beta: f64, y_max: f64) -> f64 {
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        if decay_exponent(f, beta, sign * y_max) <= 1.05 {
            return f64::INFINITY;
        }
        let q = adaptive(
            |s| {
                let y = sign * y_max / s;
                Complex64::new(
                    f.eval(Complex64::new(beta, y)).norm() * y_max / (s * s),
                    0.0,
                )
            },
            0.0,
            1.0,
            &[],
            1e-14,
            1e-8,
            400,
        );
        total += q.value.re + q.error;
    }
    total
}

/// `‖F‖₁ = ∫ |F(α + iy)| dy`, integrated over `θ` with `y = tan θ`.
pub fn h1_norm(f: &HalfPlaneFunction, alpha: f64) -> Result<Estimate<f64>> {
    if alpha < f.alpha() {
        return Err(Error::Abscissa(format!(
            "line Re z = {alpha} lies left of the half-plane Re z > {}",
            f.alpha()
        )));
    }
    f.check_poles(alpha)?;
    for y in [256.0, -256.0] {
        if decay_exponent(f, alpha, y) <= 1.05 {
            return Err(Error::ClassCheck("boundary trace is not integrable".into()));
        }
    }
    let q = adaptive(
        |th| {
            let c = th.cos();
            let y = th.tan();
            Complex64::new(f.eval(Complex64::new(alpha, y)).norm() / (c * c), 0.0)
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &[0.0],
        1e-13,
        1e-10,
        4000,
    );
    if !q.converged {
        return Err(Error::TailBudget(format!(
            "H1 norm quadrature did not converge (estimate {:.3e})",
            q.error
        )));
    }
    Ok(Estimate::new(q.value.re, q.error))
}

/// Output of [`inverse_laplace_fft`].
#[derive(Debug, Clone)]
pub struct InverseLaplace {
    pub function: GridFunction,
    /// L¹ budget on `[0, H]`: aliasing + truncation + rounding
    pub budget: f64,
    /// `∫_{-P/2}^0 |k(t)| dt` of the discarded negative-time output, where
    /// `k = e^{-αt} 𝓛⁻¹(F)` is the line integral itself
    pub leakage: f64,
}

/// `𝓛⁻¹(F)(t) = (1/2π) e^{αt} ∫ F(α + iy) e^{iyt} dy` by one FFT.
///
/// The line integral is sampled at `y ∈ [−π/h, π/h)` with spacing
/// `2π/P`, `P ≥ 2H` a power-of-two multiple of the step, which yields the
/// `P`-periodization of `𝓛⁻¹(F)` on the grid nodes. Negative times are
/// dropped and reported as leakage; their size also bounds the aliasing
/// on `[0, H]`.
pub fn inverse_laplace_fft(
    f: &HalfPlaneFunction,
    alpha: f64,
    grid: &TimeGrid,
) -> Result<InverseLaplace> {
    if alpha < f.alpha() {
        return Err(Error::Abscissa(format!(
            "line Re z = {alpha} lies left of the half-plane Re z > {}",
            f.alpha()
        )));
    }
    f.check_poles(alpha)?;
    let h = grid.step();
    let n = grid.count();
    let y_max = PI / h;
    for y in [y_max, -y_max] {
        if decay_exponent(f, alpha, y) <= 1.05 {
            return Err(Error::ClassCheck(format!(
                "F is not in H1 on Re z = {alpha}: boundary trace decays too slowly"
            )));
        }
    }
    let m = (2 * (n - 1)).next_power_of_two().max(16);
    let period = m as f64 * h;
    let dy = 2.0 * PI / period;

    let mut buf: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|k| f.eval(Complex64::new(alpha, (k as f64 - (m / 2) as f64) * dy)))
        .collect();
    if buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Singularity(format!(
            "F is not finite on Re z = {alpha}"
        )));
    }
    let fmax = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    FftPlanner::<f64>::new()
        .plan_fft_inverse(m)
        .process(&mut buf);
    // e^{i y_k t_j} = (−1)^j e^{2πi kj/m}
    let scale = dy / (2.0 * PI);
    let k_at = |j: usize| {
        let s = if j.is_multiple_of(2) { scale } else { -scale };
        buf[j] * s
    };

    let real = f.is_conjugate_symmetric();
    let values: Vec<Complex64> = (0..n)
        .map(|j| {
            let v = k_at(j) * (alpha * grid.node(j)).exp();
            if real {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        })
        .collect();

    // negative times t_j − P for j ≥ m/2. Far from t = 0 the output is
    // pure periodization, which bounds the aliasing on [0, H]; the part
    // next to t = 0 also carries the truncation ringing.
    let mut leakage = 0.0;
    let mut alias: f64 = 0.0;
    for j in m / 2..m {
        let v = k_at(j).norm();
        if j < m - m / 8 {
            alias = alias.max(v);
        }
        leakage += v * h;
    }
    let envelope: f64 = (0..n)
        .map(|j| (alpha * grid.node(j)).exp() * grid.weight(j))
        .sum();
    let aliasing = alias * envelope;

    let t1 = tail_l1(f, alpha, y_max) / (2.0 * PI);
    let edge =
        f.eval(Complex64::new(alpha, y_max)).norm() + f.eval(Complex64::new(alpha, -y_max)).norm();
    let t2 = 2.0 * edge / (2.0 * PI);
    let truncation: f64 = (0..n)
        .map(|j| {
            let t = grid.node(j);
            let bound = if t > 0.0 { t1.min(t2 / t) } else { t1 };
            bound * (alpha * t).exp() * grid.weight(j)
        })
        .sum();
    let rounding = 1e-15 * (m as f64).log2() * fmax * m as f64 * scale * envelope;

    let function = GridFunction::new(*grid, values)?;
    let size = function.l1_norm().max(1.0);
    if aliasing > 1e-2 * size {
        return Err(Error::Aliasing(format!(
            "periodization error {aliasing:.3e} on [0, {}]; move alpha right or shorten the horizon",
            grid.horizon()
        )));
    }
    Ok(InverseLaplace {
        function,
        budget: aliasing + truncation + rounding,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::ClassTag;

    fn hp(src: &str, alpha: f64) -> HalfPlaneFunction {
        HalfPlaneFunction::parse(src, alpha, ClassTag::H1).unwrap()
    }

    #[test]
    fn samples_are_direct_evaluations() {
        let f = hp("1/((z+1.5)^2)", 0.0);
        let t = boundary_samples(&f, 0.0, 200.0, 64, 0.0).unwrap();
        for (y, v) in t.value.y.iter().zip(&t.value.values) {
            let d = Complex64::new(1.5, *y);
            assert!((v - 1.0 / (d * d)).norm() < 1e-15);
        }
        assert_eq!(t.value.y[0], -200.0);
        assert_eq!(*t.value.y.last().unwrap(), 200.0);
        // ∫_{|y|>Y} dy/(y² + 2.25) ≤ 2/Y
        assert!(t.budget <= 2.0 / 200.0, "{}", t.budget);
        let exact = 2.0 * (1.5f64 / 200.0).atan() / 1.5;
        assert!((t.budget - exact).abs() < 1e-9);
        assert!(boundary_samples(&f, 0.0, 200.0, 63, 0.0).is_err());
    }

    #[test]
    fn samples_reject_poles_on_the_closed_half_plane() {
        let f = HalfPlaneFunction::parse("1/((z+0.2)^2)", -0.2, ClassTag::H1);
        // the pole sits on the boundary line itself
        assert!(matches!(f, Err(Error::Singularity(_))));
        let g = hp("1/((z+0.2)^2)", 0.0);
        assert!(boundary_samples(&g, 0.0, 10.0, 8, 0.0).is_ok());
        assert!(matches!(
            boundary_samples(&g, -0.3, 10.0, 8, 0.0),
            Err(Error::Abscissa(_))
        ));
    }

    #[test]
    fn table_json_rows() {
        let t = BoundaryTable {
            y: vec![-1.0, 1.0],
            values: vec![Complex64::new(0.5, -0.25), Complex64::new(0.5, 0.25)],
        };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[[-1.0,0.5,-0.25],[1.0,0.5,0.25]]");
        assert_eq!(serde_json::from_str::<BoundaryTable>(&s).unwrap(), t);
    }

    #[test]
    fn h1_norm_of_double_pole() {
        // ∫ dy/(c² + y²) = π/c
        let f = hp("1/((z+1)^2)", -0.5);
        for (a, c) in [(-0.5, 0.5), (0.0, 1.0), (1.0, 2.0)] {
            let n = h1_norm(&f, a).unwrap();
            assert!((n.value - PI / c).abs() < 1e-8, "{a}: {}", n.value);
        }
        assert!(h1_norm(&hp("1/(z+1)", 0.0), 0.0).is_err());
    }

    #[test]
    fn inverse_laplace_of_double_pole() {
        let grid = TimeGrid::default();
        let f = hp("1/((z+1)^2)", -0.5);
        let g = inverse_laplace_fft(&f, -0.5, &grid).unwrap();
        let exact = GridFunction::from_real_fn(grid, |t| t * (-t).exp());
        let err = g.function.sub(&exact).unwrap().l1_norm();
        assert!(err < 1e-4, "{err}");
        assert!(g.budget < 1e-4, "{}", g.budget);
        assert!(g.leakage < 1e-6, "{}", g.leakage);
        assert!(g.function.values().iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn inverse_laplace_of_cubic_pole() {
        let grid = TimeGrid::default();
        let alpha = -0.3;
        let f = hp("2/((z+1.3)^3)", alpha);
        let g = inverse_laplace_fft(&f, alpha, &grid).unwrap();
        let exact = GridFunction::from_real_fn(grid, |t| t * t * ((alpha - 1.0) * t).exp());
        assert!(g.function.sub(&exact).unwrap().l1_norm() < 1e-5);
    }

    #[test]
    fn inverse_laplace_of_zero() {
        let grid = TimeGrid::with_horizon(1.0 / 64.0, 4.0).unwrap();
        let f = HalfPlaneFunction::parse("0", 0.0, ClassTag::H1).unwrap();
        let g = inverse_laplace_fft(&f, 0.0, &grid).unwrap();
        assert_eq!(g.function.max_abs(), 0.0);
        assert_eq!(g.budget, 0.0);
    }

    #[test]
    fn inverse_laplace_rejects_slow_decay() {
        let grid = TimeGrid::with_horizon(1.0 / 64.0, 4.0).unwrap();
        let f = HalfPlaneFunction::parse("1/(z+1)", 0.0, ClassTag::H1).unwrap();
        assert!(matches!(
            inverse_laplace_fft(&f, 0.0, &grid),
            Err(Error::ClassCheck(_))
        ));
    }

    #[test]
    fn inverse_laplace_detects_aliasing() {
        // e^{-αt} g(t) = t e^{-0.01 t} is far from negligible after one period
        let grid = TimeGrid::with_horizon(1.0 / 16.0, 40.0).unwrap();
        let f = hp("1/((z+0.01)^2)", 0.0);
        assert!(matches!(
            inverse_laplace_fft(&f, 0.0, &grid),
            Err(Error::Aliasing(_))
        ));
    }
}
