//! Holomorphic functions on right half-planes `Π_α = {Re z > α}`:
//! expressions, boundary traces, H¹ norms, inverse Laplace transforms and
//! outer functions.

mod boundary;
mod expr;
mod outer;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boundary::{
    boundary_samples, h1_norm, inverse_laplace_fft, tail_l1, BoundaryTable, InverseLaplace,
};
pub use expr::{parse, Expr};
pub use outer::{outer_from_modulus, outer_regularizer, Modulus, OuterFunction};

/// Function class declared by the caller. It is spot-checked numerically,
/// never inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    H1,
    Hinf,
    Smirnov,
    MeasureLaplace,
}

#[derive(Debug, Clone)]
pub enum Body {
    Expr(Expr),
    Outer(Arc<OuterFunction>),
    Product(Box<Body>, Box<Body>),
}

impl Body {
    fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Body::Expr(e) => e.eval(z),
            Body::Outer(o) => o.eval(z),
            Body::Product(a, b) => a.eval(z) * b.eval(z),
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        match self {
            Body::Expr(e) => vec![e],
            Body::Outer(_) => vec![],
            Body::Product(a, b) => {
                let mut v = a.exprs();
                v.extend(b.exprs());
                v
            }
        }
    }

    fn is_real(&self) -> bool {
        match self {
            Body::Expr(e) => e.is_real(),
            Body::Outer(o) => o.is_real(),
            Body::Product(a, b) => a.is_real() && b.is_real(),
        }
    }
}

/// A holomorphic function on `Π_α` together with its declared class.
#[derive(Debug, Clone)]
pub struct HalfPlaneFunction {
    alpha: f64,
    body: Body,
    class: ClassTag,
}

impl HalfPlaneFunction {
    /// Checks that no denominator vanishes on the closed half-plane and
    /// that the function is finite at the probe points.
    pub fn new(body: Body, alpha: f64, class: ClassTag) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Precondition("alpha must be finite".into()));
        }
        let f = HalfPlaneFunction { alpha, body, class };
        f.check_poles(alpha)?;
        for z in probe_points(alpha + 1e-3) {
            let v = f.eval(z);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Singularity(format!("F({z}) is not finite")));
            }
        }
        Ok(f)
    }

    pub fn from_expr(e: Expr, alpha: f64, class: ClassTag) -> Result<Self> {
        Self::new(Body::Expr(e), alpha, class)
    }

    pub fn parse(src: &str, alpha: f64, class: ClassTag) -> Result<Self> {
        Self::from_expr(parse(src)?, alpha, class)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn class(&self) -> ClassTag {
        self.class
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.body {
            Body::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.body.eval(z)
    }

    /// The restriction to the smaller half-plane `Π_β`, `β ≥ α`.
    pub fn restrict(&self, beta: f64) -> Result<Self> {
        if beta < self.alpha {
            return Err(Error::Abscissa(format!(
                "cannot extend from Re z > {} to Re z > {beta}",
                self.alpha
            )));
        }
        Ok(HalfPlaneFunction {
            alpha: beta,
            ..self.clone()
        })
    }

    /// The same function under another declared class.
    pub fn with_class(&self, class: ClassTag) -> Self {
        HalfPlaneFunction {
            class,
            ..self.clone()
        }
    }

    /// Pointwise product on the common half-plane, tagged `class`.
    pub fn product(&self, other: &HalfPlaneFunction, class: ClassTag) -> Result<Self> {
        let alpha = self.alpha.max(other.alpha);
        let body = match (&self.body, &other.body) {
            (Body::Expr(a), Body::Expr(b)) => {
                Body::Expr(Expr::Mul(Box::new(a.clone()), Box::new(b.clone())))
            }
            (a, b) => Body::Product(Box::new(a.clone()), Box::new(b.clone())),
        };
        Self::new(body, alpha, class)
    }

    /// `F(z̄) = conj F(z)` for every expression constant real.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.body.is_real()
    }

    /// Zeros of the expression denominators in `Re z ≥ beta` are poles of
    /// `F` there.
    pub fn check_poles(&self, beta: f64) -> Result<()> {
        for e in self.body.exprs() {
            for d in e.denominators() {
                if let Some(z) = find_zeros(d, beta)
                    .into_iter()
                    .find(|z| z.re >= beta - 1e-9)
                {
                    return Err(Error::Singularity(format!(
                        "denominator {d} vanishes at {:.6}{:+.6}i, inside Re z >= {beta}",
                        z.re, z.im
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distance from the line `Re z = beta` to the nearest pole on its
    /// left; infinite when none was found.
    pub fn singularity_distance(&self, beta: f64) -> f64 {
        self.body
            .exprs()
            .iter()
            .flat_map(|e| e.denominators())
            .flat_map(|d| find_zeros(d, beta))
            .map(|z| beta - z.re)
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Spot-checks the declared class on `Re z = beta`.
    ///
    /// * `H1`: both boundary tails decay faster than `|y|^{-1}`.
    /// * `Hinf`: `|F|` stays bounded along the probe rays.
    /// * `Smirnov`, `MeasureLaplace`: finiteness only.
    pub fn check_class(&self, beta: f64) -> Result<()> {
        if beta < self.alpha {
            return Err(Error::Abscissa(format!(
                "line Re z = {beta} lies left of the half-plane Re z > {}",
                self.alpha
            )));
        }
        self.check_poles(beta)?;
        match self.class {
            ClassTag::H1 => {
                for s in [1.0, -1.0] {
                    let p = boundary::decay_exponent(self, beta, s * 256.0);
                    if p <= 1.05 {
                        return Err(Error::ClassCheck(format!(
                            "|F(beta+iy)| decays like |y|^-{p:.3} as y -> {}infinity; not in H1",
                            if s > 0.0 { "+" } else { "-" }
                        )));
                    }
                }
            }
            ClassTag::Hinf => {
                let rays = |r: f64| {
                    [
                        Complex64::new(beta + 1e-9, r),
                        Complex64::new(beta + 1e-9, -r),
                        Complex64::new(beta + r, 0.0),
                    ]
                };
                let mut sup: f64 = 0.0;
                for k in 0..24 {
                    for z in rays(2f64.powi(k)) {
                        sup = sup.max(self.eval(z).norm());
                    }
                }
                // still growing at the far end of a ray
                let growing = rays(2f64.powi(20))
                    .iter()
                    .zip(rays(2f64.powi(23)))
                    .any(|(a, b)| {
                        let (a, b) = (self.eval(*a).norm(), self.eval(b).norm());
                        b > 1.0 && b > 1.5 * a
                    });
                if growing || !sup.is_finite() || sup > 1e12 {
                    return Err(Error::ClassCheck(format!(
                        "|F| reaches {sup:.3e} on the probe rays; not bounded"
                    )));
                }
            }
            ClassTag::Smirnov | ClassTag::MeasureLaplace => {}
        }
        Ok(())
    }
}

/// Probe points in `Π_β` used by spot checks.
pub fn probe_points(beta: f64) -> Vec<Complex64> {
    let mut v = Vec::new();
    for re in [0.0, 0.5, 1.0, 2.0, 4.0] {
        for im in [0.0, 1.0, -1.0, 3.0, -3.0, 8.0, -8.0] {
            v.push(Complex64::new(beta + re, im));
        }
    }
    v
}

const SEARCH_RIGHT: f64 = 64.0;
const SEARCH_LEFT: f64 = 8.0;

/// Zeros of `d` found by damped Newton iteration from a lattice of
/// starting points covering `[beta − 8, beta + 64] × [−64, 64]`.
fn find_zeros(d: &Expr, beta: f64) -> Vec<Complex64> {
    let dd = d.derivative();
    let mut found: Vec<Complex64> = Vec::new();
    let nre = 10;
    let nim = 13;
    for i in 0..nre {
        for j in 0..nim {
            let mut z = Complex64::new(
                beta - SEARCH_LEFT + (SEARCH_LEFT + SEARCH_RIGHT) * i as f64 / (nre - 1) as f64,
                -64.0 + 128.0 * j as f64 / (nim - 1) as f64,
            );
            let mut converged = false;
            for _ in 0..200 {
                let f = d.eval(z);
                if f == Complex64::new(0.0, 0.0) {
                    converged = true;
                    break;
                }
                let fp = dd.eval(z);
                if !(fp.norm() > 0.0) || !f.re.is_finite() || !f.im.is_finite() {
                    break;
                }
                let mut step = f / fp;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    break;
                }
                if step.norm() > 8.0 {
                    step *= 8.0 / step.norm();
                }
                z -= step;
                if step.norm() <= 1e-13 * (1.0 + z.norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                continue;
            }
            // a genuine zero: |d| small against the scale of its derivative
            let f = d.eval(z);
            let scale = dd.eval(z).norm().max(1e-300);
            if !(f.norm() <= 1e-8 * scale * (1.0 + z.norm()) || f.norm() < 1e-200) {
                continue;
            }
            if !found
                .iter()
                .any(|w| (w - z).norm() < 1e-6 * (1.0 + z.norm()))
            {
                found.push(z);
            }
        }
    }
    found
}
