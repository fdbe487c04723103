//! Resolvents through the Laplace formula `(λI − A)⁻¹ = ∫ e^{-λs} T(s) ds`,
//! their continuation across the resolvent set, and the Arveson spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{laplace, MeasureRepr};
use crate::backend::{BackendKind, SemigroupBackend};
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::pettis::phi;
use crate::quad::PanelRule;
use crate::Estimate;

/// Default distance required between `Re λ` and the growth bound.
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Truncation target `e^{-Re λ·H} ‖T(H)‖` for the Laplace integral.
pub const TRUNCATION: f64 = 1e-12;
const MAX_HORIZON: f64 = 1e4;
const ORDER: usize = 10;
const CHECK_ORDER: usize = 6;

/// `∫_0^H e^{-λs} T(s) ds` by composite Gauss–Legendre quadrature.
///
/// `H` is grown from the growth bound until `e^{-Re λ·H} ‖T(H)‖ ≤ 1e-12`.
/// The lattice shift is integrated cell by cell over its finite support,
/// so any `λ` is accepted there.
pub fn resolvent_laplace(
    b: &SemigroupBackend,
    lambda: Complex64,
    margin: f64,
) -> Result<Estimate<Operator>> {
    if let BackendKind::NilpotentShift { dim, unit } = b.kind() {
        return Ok(lattice_laplace(*dim, *unit, lambda));
    }
    let g = b.growth_bound();
    if !(lambda.re > g + margin) {
        return Err(Error::Abscissa(format!(
            "Re(lambda) = {} must exceed the growth bound {g} by {margin}",
            lambda.re
        )));
    }
    let gap = lambda.re - g;
    let mut horizon = (TRUNCATION.recip().ln() / gap).max(1.0);
    let decay = |h: f64| -> Result<f64> { Ok((-lambda.re * h).exp() * b.norm_at(h)?) };
    while decay(horizon)? > TRUNCATION {
        horizon *= 1.5;
        if horizon > MAX_HORIZON {
            return Err(Error::TailBudget(format!(
                "e^(-Re(lambda) t)‖T(t)‖ is still above {TRUNCATION:e} at t = {MAX_HORIZON}"
            )));
        }
    }
    let width = 0.25f64.min(1.0 / (lambda.norm() + b.generator_scale()));
    let panels = (horizon / width).ceil() as usize;
    let width = horizon / panels as f64;

    // Over panel p the integral is e^{-λ s_p} T(s_p) ∫_0^w e^{-λo} T(o) do.
    let inner = |order: usize| -> Result<Operator> {
        let rule = PanelRule::new(order);
        let mut acc = Operator::zeros(b.dim());
        for (o, w) in rule.points(0.0, width, 1) {
            acc = &acc + &b.evaluate(o)?.scale((-lambda * o).exp() * w);
        }
        Ok(acc)
    };
    let panel = inner(ORDER)?;
    let panel_check = inner(CHECK_ORDER)?;
    let step = b.evaluate(width)?.scale((-lambda * width).exp());
    let mut start = Operator::identity(b.dim());
    let mut starts = Operator::zeros(b.dim());
    for _ in 0..panels {
        starts = &starts + &start;
        start = &start * &step;
    }
    let value = &starts * &panel;
    let check = &starts * &panel_check;
    let tail = decay(horizon)? / gap;
    let rounding = 1e-15 * panels as f64 * value.norm();
    Ok(Estimate::new(
        value.clone(),
        (&value - &check).norm() + tail + rounding,
    ))
}

fn lattice_laplace(dim: usize, unit: f64, lambda: Complex64) -> Estimate<Operator> {
    // T(s) = S^k on ((k−1)h, kh]
    let rule = PanelRule::new(ORDER);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
    for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
        let a = (k - 1) as f64 * unit;
        *c = rule
            .points(a, a + unit, 1)
            .into_iter()
            .map(|(s, w)| (-lambda * s).exp() * w)
            .sum();
    }
    let value = crate::backend::toeplitz_lower(&coeffs);
    let budget = 1e-15 * dim as f64 * value.norm();
    Estimate::new(value, budget)
}

/// Analytic continuation `(μI − A)⁻¹ = a (I + (μ − λ) a)⁻¹` from the
/// Laplace resolvent `a` at `seed`, stepping along the segment
/// `seed → mu` with `|Δ| ‖a‖ ≤ 1/2` per step.
pub fn resolvent_continued(
    b: &SemigroupBackend,
    mu: Complex64,
    seed: Complex64,
) -> Result<Estimate<Operator>> {
    let start = resolvent_laplace(b, seed, DEFAULT_MARGIN)?;
    let mut a = start.value;
    let seed_norm = a.norm().max(1e-300);
    let mut cur = seed;
    let mut steps = 0usize;
    const MAX_STEPS: usize = 100_000;
    const NORM_CAP: f64 = 1e10;
    let id = Operator::identity(b.dim());
    while cur != mu {
        let remaining = mu - cur;
        let an = a.norm();
        if an > NORM_CAP {
            return Err(Error::Singular(format!(
                "resolvent norm {an:.3e} near {cur}: the path reaches the spectrum"
            )));
        }
        let limit = 0.5 / an.max(1e-300);
        let delta = if remaining.norm() <= limit {
            remaining
        } else {
            remaining * (limit / remaining.norm())
        };
        let m = &id + &a.scale(delta);
        if m.condition() > 1e12 {
            return Err(Error::Singular(format!("I + (μ−λ)a is singular at {cur}")));
        }
        a = m.solve(&a)?;
        cur = if delta == remaining { mu } else { cur + delta };
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Singular(format!(
                "continuation toward {mu} stalled after {MAX_STEPS} steps"
            )));
        }
    }
    let growth = (a.norm() / seed_norm).max(1.0);
    let budget = start.budget * growth * growth + 1e-15 * steps as f64 * a.norm() * growth;
    Ok(Estimate::new(a, budget))
}

/// `σ_ar(A_T)` as seen through the characters of the image algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub points: Vec<[f64; 2]>,
    pub radical: bool,
    /// The generator has a numerically defective eigenvector basis; the
    /// points are eigenvalues and the Jordan structure is not resolved.
    pub defective: bool,
}

impl SpectrumReport {
    pub fn complex_points(&self) -> Vec<Complex64> {
        self.points
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect()
    }
}

pub fn arveson_spectrum(b: &SemigroupBackend) -> SpectrumReport {
    match b.generator_matrix() {
        None => SpectrumReport {
            points: Vec::new(),
            radical: true,
            defective: false,
        },
        Some(a) => {
            let defective = match b.kind() {
                BackendKind::Diagonal(_) => false,
                _ => a.eigen().is_err(),
            };
            let pts = match b.kind() {
                BackendKind::Diagonal(e) => e.clone(),
                _ => a.eigenvalues(),
            };
            SpectrumReport {
                points: pts.iter().map(|z| [z.re, z.im]).collect(),
                radical: false,
                defective,
            }
        }
    }
}

/// Result of the character check `χ(φ(μ)) = 𝓛(μ)(−χ(A))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMapping {
    pub residual: f64,
    pub budget: f64,
    /// Set when the generator is not diagonalizable; characters were then
    /// paired through the Schur basis alone.
    pub defective: bool,
}

/// `max_χ |χ(φ(μ)) − 𝓛(μ)(−χ(A))|`. Characters are read off the diagonal
/// of `Q* φ(μ) Q` in the Schur basis `A = Q T Q*` of the generator, which
/// triangularizes every function of `A`.
pub fn spectral_mapping_residual(
    b: &SemigroupBackend,
    mu: &MeasureRepr,
) -> Result<SpectralMapping> {
    let a = b.generator_matrix().ok_or_else(|| {
        Error::Radical("the image algebra of the lattice shift has no characters".into())
    })?;
    let p = phi(b, mu)?;
    let (q, t) = a.schur();
    let tri = q.adjoint() * p.value.matrix() * &q;
    let mut residual: f64 = 0.0;
    let mut budget = p.budget;
    for i in 0..t.nrows() {
        let l = laplace(mu, -t[(i, i)]);
        residual = residual.max((tri[(i, i)] - l.value).norm());
        budget += l.budget;
    }
    let defective = !matches!(b.kind(), BackendKind::Diagonal(_)) && a.eigen().is_err();
    Ok(SpectralMapping {
        residual,
        budget,
        defective,
    })
}
