use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{Body, ClassTag, HalfPlaneFunction};
use crate::error::{Error, Result};
use crate::quad::adaptive;

/// Boundary log-modulus `u(t)` of an outer function on `α + iℝ`.
#[derive(Debug, Clone)]
pub enum Modulus {
    /// Piecewise linear through the samples, constant beyond both ends.
    Table { y: Vec<f64>, u: Vec<f64> },
    /// `sign · log|F(α + it)|`, optionally capped above.
    LogAbs {
        f: Box<HalfPlaneFunction>,
        sign: f64,
        cap: Option<f64>,
    },
}

impl Modulus {
    pub fn table(y: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if y.len() != u.len() || y.is_empty() {
            return Err(Error::Dimension(
                "modulus table: y and u lengths differ".into(),
            ));
        }
        if y.windows(2).any(|w| !(w[1] > w[0])) || y.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::Format(
                "modulus table needs strictly increasing finite abscissae and finite values".into(),
            ));
        }
        Ok(Modulus::Table { y, u })
    }

    fn at(&self, alpha: f64, t: f64) -> f64 {
        match self {
            Modulus::Table { y, u } => {
                let last = y.len() - 1;
                if t <= y[0] {
                    return u[0];
                }
                if t >= y[last] {
                    return u[last];
                }
                let k = y.partition_point(|v| *v <= t) - 1;
                let s = (t - y[k]) / (y[k + 1] - y[k]);
                u[k] + s * (u[k + 1] - u[k])
            }
            Modulus::LogAbs { f, sign, cap } => {
                let v = sign * f.eval(Complex64::new(alpha, t)).norm().ln();
                match cap {
                    Some(c) => v.min(*c),
                    None => v,
                }
            }
        }
    }

    fn is_even(&self) -> bool {
        match self {
            Modulus::Table { y, u } => {
                let n = y.len();
                (0..n).all(|k| y[k] == -y[n - 1 - k] && u[k] == u[n - 1 - k])
            }
            Modulus::LogAbs { f, .. } => f.is_conjugate_symmetric(),
        }
    }

    fn sup(&self) -> f64 {
        match self {
            Modulus::Table { u, .. } => u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Modulus::LogAbs { cap, .. } => cap.unwrap_or(f64::INFINITY),
        }
    }
}

/// `exp((1/π) ∫ (1 − it(z−α))/(z−α − it) · u(t)/(1+t²) dt)`.
///
/// The kernel's real part is the Poisson kernel of `Π_α` centred at the
/// boundary point `α + it`, so `|F*(α+it)| = e^{u(t)}`.
#[derive(Debug, Clone)]
pub struct OuterFunction {
    alpha: f64,
    modulus: Modulus,
}

impl OuterFunction {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub(crate) fn is_real(&self) -> bool {
        self.modulus.is_even()
    }

    /// The exponent `log F(z)`; NaN off the open half-plane.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        let w = z - self.alpha;
        if !(w.re > 0.0) {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let i = Complex64::new(0.0, 1.0);
        // t = tan θ, dt/(1+t²) = dθ; the peak sits at t = Im w
        let th0 = w.im.atan();
        let width = w.re * th0.cos().powi(2);
        let cuts = [
            th0 - 8.0 * width,
            th0 - width,
            th0,
            th0 + width,
            th0 + 8.0 * width,
        ];
        let q = adaptive(
            |th| {
                let t = th.tan();
                let k = (1.0 - i * t * w) / (w - i * t);
                k * self.modulus.at(self.alpha, t)
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            &cuts,
            1e-12,
            1e-11,
            4000,
        );
        q.value / PI
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }
}

/// The outer function on `Π_α` with boundary log-modulus `u`.
///
/// Tagged `Hinf` when `u` is bounded above, `Smirnov` otherwise.
pub fn outer_from_modulus(u: Modulus, alpha: f64) -> Result<HalfPlaneFunction> {
    if let Modulus::LogAbs { f, .. } = &u {
        if alpha < f.alpha() {
            return Err(Error::Abscissa(format!(
                "modulus source is defined on Re z > {}, not on Re z = {alpha}",
                f.alpha()
            )));
        }
        // ∫ |u|/(1+t²) diverges once |u| grows like |t|
        let big = 1e6;
        for s in [1.0, -1.0] {
            let (a, b) = (u.at(alpha, s * big).abs(), u.at(alpha, 2.0 * s * big).abs());
            if !b.is_finite() || (b > 1.0 && (b / a).log2() > 0.9) {
                return Err(Error::TailBudget(
                    "divergent Poisson integral: log-modulus grows at least linearly".into(),
                ));
            }
        }
    }
    let class = if u.sup() < f64::INFINITY {
        ClassTag::Hinf
    } else {
        ClassTag::Smirnov
    };
    let outer = OuterFunction { alpha, modulus: u };
    HalfPlaneFunction::new(Body::Outer(std::sync::Arc::new(outer)), alpha, class)
}

/// `F_n = outer(min(−log|F*|, n))`, so that `|F_n| ≤ e^n` and
/// `|F F_n| ≤ 1`, with `F F_n → 1` locally uniformly as `n → ∞`.
pub fn outer_regularizer(f: &HalfPlaneFunction, n: u32, alpha: f64) -> Result<HalfPlaneFunction> {
    f.check_poles(alpha)?;
    outer_from_modulus(
        Modulus::LogAbs {
            f: Box::new(f.clone()),
            sign: -1.0,
            cap: Some(n as f64),
        },
        alpha,
    )
}
