//! Operator-valued integration `φ_T(μ) = ∫ T(t) dμ(t)` and the checks
//! that it is a bounded algebra homomorphism with an approximate identity.

use num_complex::Complex64;

use crate::algebra::{convolve, dirac_member, tail_estimate, GridFunction, MeasureRepr, TimeGrid};
use crate::backend::SemigroupBackend;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::Estimate;

/// Relative size of the estimated truncated tail above which a density is
/// treated as not integrable against `ω_T` on its grid.
pub const DIVERGENT_TAIL: f64 = 1e-3;

/// `φ_T(μ)`: trapezoid quadrature of `∫ T(t) f(t) dt` over the density
/// plus `Σ m·T(t_atom)` over the atoms.
///
/// The budget combines a Richardson estimate of the trapezoid error with
/// the estimated tail `∫_H^∞ |f| ω_T`.
pub fn phi(b: &SemigroupBackend, mu: &MeasureRepr) -> Result<Estimate<Operator>> {
    mu.validate()?;
    let mut value = Operator::zeros(b.dim());
    let mut budget = 0.0;
    for a in &mu.atoms {
        value = &value + &b.evaluate(a.t)?.scale(a.mass());
    }
    if let Some(f) = &mu.density {
        let grid = *f.grid();
        let fv = f.values();
        let coeffs: Vec<Complex64> = (0..grid.count()).map(|k| fv[k] * grid.weight(k)).collect();
        let integral = b.weighted_sum(&grid, &coeffs);

        let tail = tail_estimate(&grid, |k| {
            fv[k].norm() * b.norm_at(grid.node(k)).expect("nonnegative node")
        });
        let scale = f.l1_norm().max(1e-300);
        if !tail.is_finite() || tail > DIVERGENT_TAIL * scale.max(1.0) {
            return Err(Error::TailBudget(format!(
                "density is not integrable against ‖T(t)‖ on [0, {}] (tail estimate {tail:.3e})",
                grid.horizon()
            )));
        }
        budget += tail + richardson(b, &grid, fv, &integral);
        value = &value + &integral;
    }
    Ok(Estimate::new(value, budget))
}

/// `|T_h − T_{2h}| / 3` on the even-length prefix of the grid.
fn richardson(
    b: &SemigroupBackend,
    grid: &TimeGrid,
    fv: &[Complex64],
    fine_full: &Operator,
) -> f64 {
    let n = grid.count();
    let m = (n - 1) / 2;
    if m == 0 {
        return 0.0;
    }
    let end = 2 * m;
    let h = grid.step();
    let zero = Complex64::new(0.0, 0.0);
    let mut coarse = vec![zero; n];
    let mut fine = vec![zero; n];
    for k in 0..=end {
        let w = if k == 0 || k == end { 0.5 } else { 1.0 };
        fine[k] = fv[k] * (w * h);
        if k % 2 == 0 {
            let j = k / 2;
            let w2 = if j == 0 || j == m { 0.5 } else { 1.0 };
            coarse[k] = fv[k] * (w2 * 2.0 * h);
        }
    }
    let diff: Vec<Complex64> = fine.iter().zip(&coarse).map(|(a, c)| a - c).collect();
    let d = b.weighted_sum(grid, &diff).norm() / 3.0;
    // rounding in the accumulated sum
    d + 1e-15 * fine_full.norm() * (n as f64).sqrt()
}

/// `φ_T(f)` with the trapezoid sums on steps `h, 2h, 4h` combined by
/// Richardson extrapolation, which removes the `O(h²)` endpoint error.
/// The budget is `‖S_h − S_{2h}‖/15` of the extrapolated sums plus the
/// tail estimate. Uses the even-length prefix of the grid divisible by 4.
pub fn phi_refined(b: &SemigroupBackend, f: &GridFunction) -> Result<Estimate<Operator>> {
    let base = phi_density(b, f)?;
    let grid = *f.grid();
    let m = (grid.count() - 1) / 4 * 4;
    if m == 0 {
        return Ok(base);
    }
    let fv = f.values();
    let trap = |stride: usize| {
        let h = grid.step() * stride as f64;
        let coeffs: Vec<Complex64> = (0..grid.count())
            .map(|k| {
                if k > m || k % stride != 0 {
                    Complex64::new(0.0, 0.0)
                } else if k == 0 || k == m {
                    fv[k] * (0.5 * h)
                } else {
                    fv[k] * h
                }
            })
            .collect();
        b.weighted_sum(&grid, &coeffs)
    };
    let (t1, t2, t4) = (trap(1), trap(2), trap(4));
    let s1 = (&t1.scale_real(4.0) - &t2).scale_real(1.0 / 3.0);
    let s2 = (&t2.scale_real(4.0) - &t4).scale_real(1.0 / 3.0);
    // the nodes past the prefix still need their trapezoid share
    let rest = &base.value - &t1;
    let tail = tail_estimate(&grid, |k| {
        fv[k].norm() * b.norm_at(grid.node(k)).expect("nonnegative node")
    });
    let budget = (&s1 - &s2).norm() / 15.0 + tail + 1e-15 * s1.norm() * (m as f64).sqrt();
    Ok(Estimate::new(&s1 + &rest, budget))
}

/// `φ_T(f)` for a density.
pub fn phi_density(b: &SemigroupBackend, f: &GridFunction) -> Result<Estimate<Operator>> {
    phi(b, &MeasureRepr::from_density(f.clone()))
}

/// `‖φ(f*g) − φ(f)φ(g)‖`.
pub fn homomorphism_residual(
    b: &SemigroupBackend,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<f64> {
    let fg = convolve(f, g)?;
    let lhs = phi_density(b, &fg)?.value;
    let rhs = &phi_density(b, f)?.value * &phi_density(b, g)?.value;
    Ok((&lhs - &rhs).norm())
}

/// Trace of the bounded approximate identity `e_n = φ(f_{n²} * δ_{1/n²})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateIdentityTrace {
    /// `‖e_n u − u‖`, `n = 1..=nmax`
    pub residuals: Vec<f64>,
    /// `‖e_n‖`
    pub unit_norms: Vec<f64>,
}

/// `e_n = φ(f_{n²} * δ_{ε_n})` with `ε_n = 1/n²`, where `f_m` is the box
/// Dirac kernel of width `1/m`. The subsequence `m = n²` keeps the kernel
/// width on the same scale as the shift `ε_n`; it is itself a Dirac
/// sequence. Each kernel is integrated on its own grid, 64 steps per
/// support width, padded with zeros so the tail check sees compact support.
pub fn approximate_identity_element(b: &SemigroupBackend, n: u64) -> Result<Operator> {
    if n == 0 {
        return Err(Error::Precondition(
            "approximate identity index starts at 1".into(),
        ));
    }
    let m = n * n;
    let width = 1.0 / m as f64;
    let grid = TimeGrid::new(width / 64.0, 129)?;
    let kernel = dirac_member(m, &grid)?;
    let smoothing = phi_density(b, &kernel)?.value;
    Ok(&smoothing * &b.evaluate(width)?)
}

pub fn approximate_identity_trace(
    b: &SemigroupBackend,
    u: &Operator,
    nmax: u64,
) -> Result<ApproximateIdentityTrace> {
    if u.dim() != b.dim() {
        return Err(Error::Dimension(
            "approximate_identity_trace: operator size".into(),
        ));
    }
    let mut residuals = Vec::with_capacity(nmax as usize);
    let mut unit_norms = Vec::with_capacity(nmax as usize);
    for n in 1..=nmax {
        let e = approximate_identity_element(b, n)?;
        residuals.push((&(&e * u) - u).norm());
        unit_norms.push(e.norm());
    }
    Ok(ApproximateIdentityTrace {
        residuals,
        unit_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Atom, Weight};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag12() -> SemigroupBackend {
        SemigroupBackend::diagonal(vec![c(-1.0), c(-2.0)]).unwrap()
    }

    #[test]
    fn phi_of_atom_is_exact() {
        let b = diag12();
        let mu = MeasureRepr::dirac(0.7).unwrap();
        let p = phi(&b, &mu).unwrap();
        assert_eq!(p.value, b.evaluate(0.7).unwrap());
        assert_eq!(p.budget, 0.0);
    }

    #[test]
    fn phi_of_v1_on_diagonal() {
        let b = diag12();
        let grid = TimeGrid::default();
        let p = phi_density(&b, &GridFunction::v_lambda(grid, 1.0)).unwrap();
        // ∫ t e^{-t} e^{-kt} dt = 1/(1+k)²
        let exact = Operator::from_diagonal(&[c(0.25), c(1.0 / 9.0)]);
        let err = (&p.value - &exact).norm();
        assert!(err < 1e-6, "{err}");
        assert!(
            p.budget >= err * 0.5 && p.budget < 1e-5,
            "budget {}",
            p.budget
        );
    }

    #[test]
    fn phi_rejects_divergent_density() {
        let b = SemigroupBackend::diagonal(vec![c(0.5)]).unwrap();
        let grid = TimeGrid::with_horizon(1.0 / 64.0, 10.0).unwrap();
        let f = GridFunction::from_real_fn(grid, |t| (-0.1 * t).exp());
        assert!(matches!(phi_density(&b, &f), Err(Error::TailBudget(_))));
    }

    #[test]
    fn phi_is_linear_and_norm_bounded() {
        let a = Operator::from_real_rows(&[&[-1.0, 2.0], &[0.0, -1.5]]).unwrap();
        let b = SemigroupBackend::matrix_exp(a).unwrap();
        let grid = TimeGrid::with_horizon(1.0 / 256.0, 30.0).unwrap();
        let f = GridFunction::from_real_fn(grid, |t| (t.sin() + 1.2) * (-0.3 * t).exp());
        let g = GridFunction::v_lambda(grid, 0.5);
        let mu = MeasureRepr::new(Some(f.clone()), vec![Atom::new(0.4, c(-0.5))]).unwrap();
        let nu = MeasureRepr::from_density(g.clone());
        let combo = MeasureRepr::new(
            Some(f.scale(c(2.0)).add(&g.scale(c(-3.0))).unwrap()),
            vec![Atom::new(0.4, c(-1.0))],
        )
        .unwrap();
        let lhs = phi(&b, &combo).unwrap().value;
        let rhs = &phi(&b, &mu).unwrap().value.scale_real(2.0)
            - &phi(&b, &nu).unwrap().value.scale_real(3.0);
        assert!((&lhs - &rhs).norm() < 1e-12 * (1.0 + lhs.norm()));

        let w: Weight = b.semigroup_weight(&grid);
        let bound = mu.weighted_variation(&w).unwrap();
        assert!(phi(&b, &mu).unwrap().value.norm() <= bound * (1.0 + 1e-6));
    }

    #[test]
    fn refined_phi_removes_endpoint_error() {
        let b = diag12();
        let grid = TimeGrid::default();
        let p = phi_refined(&b, &GridFunction::v_lambda(grid, 1.0)).unwrap();
        let exact = Operator::from_diagonal(&[c(0.25), c(1.0 / 9.0)]);
        let err = (&p.value - &exact).norm();
        assert!(err < 1e-12, "{err}");
        assert!(p.budget < 1e-10);
        let q = phi_refined(&b, &GridFunction::v_lambda_prime(grid, 1.0)).unwrap();
        // ∫ (1 − t) e^{-t} e^{at} dt = −a/(1 − a)²
        let exact = Operator::from_diagonal(&[c(0.25), c(2.0 / 9.0)]);
        assert!((&q.value - &exact).norm() < 1e-12);
    }

    #[test]
    fn homomorphism_on_v1() {
        let b = diag12();
        let grid = TimeGrid::default();
        let v = GridFunction::v_lambda(grid, 1.0);
        assert!(homomorphism_residual(&b, &v, &v).unwrap() < 1e-5);
        let z = GridFunction::zeros(grid);
        assert!(homomorphism_residual(&b, &z, &v).unwrap() < 1e-15);
    }

    #[test]
    fn approximate_identity_trends_to_zero() {
        let b = diag12();
        let u = phi_density(&b, &GridFunction::v_lambda(TimeGrid::default(), 1.0))
            .unwrap()
            .value;
        let tr = approximate_identity_trace(&b, &u, 64).unwrap();
        assert!(tr.residuals.windows(2).all(|w| w[1] < w[0]));
        assert!(*tr.residuals.last().unwrap() < 1e-3);
        assert!(tr.unit_norms.iter().all(|n| *n <= 1.0 + 1e-9));
        let zero = approximate_identity_trace(&b, &Operator::zeros(2), 5).unwrap();
        assert!(zero.residuals.iter().all(|r| *r == 0.0));
    }
}
