//! `F(−A)` for half-plane functions `F`: the vertical-line integral for H¹
//! functions, measure transforms, and quotients `(FH)(−A)/H(−A)` for
//! bounded and Smirnov-class `F`. Also the generator as a fraction and the
//! mollified calculus.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::algebra::{tail_estimate, GridFunction, MeasureRepr, TimeGrid};
use crate::backend::{BackendKind, SemigroupBackend};
use crate::error::{Error, Result};
use crate::hardy::{outer_from_modulus, ClassTag, HalfPlaneFunction, Modulus};
use crate::operator::Operator;
use crate::pettis::{phi, phi_refined};
use crate::quad::gk15_points;
use crate::Estimate;

/// Denominators above this condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Divergence guard of [`regularity_probe`].
pub const PROBE_OVERFLOW: f64 = 1e12;

fn check_abscissa(b: &SemigroupBackend, alpha: f64) -> Result<()> {
    let g = b.growth_bound();
    if !(alpha < -g) {
        return Err(Error::Abscissa(format!(
            "alpha = {alpha} must lie left of -(growth bound) = {}",
            -g
        )));
    }
    Ok(())
}

fn check_h1(f: &HalfPlaneFunction, alpha: f64) -> Result<()> {
    if alpha < f.alpha() {
        return Err(Error::Abscissa(format!(
            "line Re z = {alpha} lies left of the half-plane Re z > {}",
            f.alpha()
        )));
    }
    f.restrict(alpha)?
        .with_class(ClassTag::H1)
        .check_class(alpha)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: Operator,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

const LINE_MAX_PANELS: usize = 3000;

/// `∫ F(α+iy) (A + (α+iy)I)⁻¹ dy` by adaptive G7/K15 in `θ`, `y = tan θ`.
fn line_integral(
    b: &SemigroupBackend,
    f: impl Fn(Complex64) -> Complex64,
    alpha: f64,
    tol: f64,
) -> Result<Estimate<Operator>> {
    let panel = |lo: f64, hi: f64| -> Result<Panel> {
        let mut kron = Vec::with_capacity(15);
        let mut diff = Vec::with_capacity(15);
        for (th, wk, wg) in gk15_points(lo, hi) {
            let c = th.cos();
            let z = Complex64::new(alpha, th.tan());
            let v = f(z) / (c * c);
            kron.push((z, v * wk));
            diff.push((z, v * (wk - wg)));
        }
        let value = b.line_resolvent_sum(&kron)?;
        let error = b.line_resolvent_sum(&diff)?.frobenius();
        Ok(Panel {
            a: lo,
            b: hi,
            value,
            error,
        })
    };

    // cut at the imaginary parts of the spectrum, where the resolvent peaks
    let mut cuts = vec![-FRAC_PI_2, 0.0, FRAC_PI_2];
    let spectrum: Vec<Complex64> = match b.kind() {
        BackendKind::Diagonal(e) => e.clone(),
        BackendKind::MatrixExp(a) => a.eigenvalues(),
        BackendKind::NilpotentShift { .. } => vec![],
    };
    for a in spectrum {
        cuts.push((-a.im).atan());
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let p = panel(w[0], w[1])?;
        err += p.error;
        heap.push(p);
    }
    let sum = |heap: &BinaryHeap<Panel>| {
        heap.iter()
            .fold(Operator::zeros(b.dim()), |acc, p| &acc + &p.value)
    };
    let mut scale = sum(&heap).norm();
    let mut iterations = 0;
    while err > tol * scale.max(1.0) && heap.len() < LINE_MAX_PANELS {
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (p1, p2) = (panel(worst.a, mid)?, panel(mid, worst.b)?);
        err += p1.error + p2.error - worst.error;
        heap.push(p1);
        heap.push(p2);
        iterations += 1;
        if iterations % 64 == 0 {
            scale = sum(&heap).norm();
        }
    }
    let value = sum(&heap);
    let err: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Singular("line integral is not finite".into()));
    }
    if err > 1e3 * tol * value.norm().max(1.0) {
        return Err(Error::TailBudget(format!(
            "line integral did not converge: estimated error {err:.3e}"
        )));
    }
    let rounding = 1e-15 * value.norm() * (heap.len() as f64).sqrt() * 15.0;
    Ok(Estimate::new(value, err + rounding))
}

/// `F(−A) = −(1/2π) ∫ F(α+iy) (A + (α+iy)I)⁻¹ dy` for `F ∈ H¹(Π_α)`.
pub fn funcalc_h1(
    f: &HalfPlaneFunction,
    b: &SemigroupBackend,
    alpha: f64,
) -> Result<Estimate<Operator>> {
    check_abscissa(b, alpha)?;
    check_h1(f, alpha)?;
    let r = line_integral(b, |z| f.eval(z), alpha, 1e-12)?;
    let s = -1.0 / (2.0 * PI);
    Ok(Estimate::new(r.value.scale_real(s), r.budget / (2.0 * PI)))
}

/// `𝓛(μ)(−A) = φ(μ)`.
pub fn funcalc_measure(mu: &MeasureRepr, b: &SemigroupBackend) -> Result<Estimate<Operator>> {
    phi(b, mu).map_err(|e| match e {
        Error::TailBudget(m) => Error::TailBudget(format!(
            "exponential moment not verifiable on the horizon: {m}"
        )),
        e => e,
    })
}

/// Provenance of a fraction's denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// `H(−A)` for an outer `H ∈ H¹`
    OuterH1,
    /// `φ(v_λ * ·)`
    PhiVLambda,
    User,
}

/// A formal quotient `num/den` of commuting operators.
#[derive(Debug, Clone)]
pub struct QuasimultiplierFraction {
    pub num: Operator,
    pub den: Operator,
    pub witness: WitnessKind,
    pub num_budget: f64,
    pub den_budget: f64,
    radical: bool,
}

impl QuasimultiplierFraction {
    pub fn new(
        num: Operator,
        den: Operator,
        witness: WitnessKind,
        backend: &SemigroupBackend,
    ) -> Result<Self> {
        if num.dim() != den.dim() || num.dim() != backend.dim() {
            return Err(Error::Dimension("fraction: operator sizes differ".into()));
        }
        Ok(QuasimultiplierFraction {
            num,
            den,
            witness,
            num_budget: 0.0,
            den_budget: 0.0,
            radical: backend.is_radical(),
        })
    }

    /// `(a·num)/(a·den)`, an equal fraction for any admissible `a`.
    pub fn expand(&self, a: &Operator) -> QuasimultiplierFraction {
        QuasimultiplierFraction {
            num: a * &self.num,
            den: a * &self.den,
            num_budget: self.num_budget * a.norm(),
            den_budget: self.den_budget * a.norm(),
            ..self.clone()
        }
    }

    pub fn is_radical(&self) -> bool {
        self.radical
    }
}

/// Spot-check that `H` is outer: compare `|H|` with the outer function
/// built from `log|H*|` at a few interior points.
pub fn outer_check(h: &HalfPlaneFunction, alpha: f64) -> Result<f64> {
    let o = outer_from_modulus(
        Modulus::LogAbs {
            f: Box::new(h.clone()),
            sign: 1.0,
            cap: None,
        },
        alpha,
    )?;
    let mut worst: f64 = 0.0;
    for z in [
        Complex64::new(alpha + 1.0, 0.0),
        Complex64::new(alpha + 0.5, 2.0),
        Complex64::new(alpha + 2.0, -3.0),
    ] {
        let (a, b) = (h.eval(z).norm(), o.eval(z).norm());
        worst = worst.max((a - b).abs() / b);
    }
    if !(worst <= 1e-4) {
        return Err(Error::ClassCheck(format!(
            "denominator function is not outer: modulus mismatch {worst:.3e}"
        )));
    }
    Ok(worst)
}

/// The default denominator `1/(z − α + 1)²`.
pub fn default_denominator(alpha: f64) -> Result<HalfPlaneFunction> {
    HalfPlaneFunction::parse(&format!("1/((z-{}+1)^2)", Num(alpha)), alpha, ClassTag::H1)
}

/// Prints a real number so the expression parser reads it back exactly.
pub(crate) struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 < 0.0 {
            write!(f, "(-{})", -self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `F(−A) = (FH)(−A)/H(−A)` for `F` bounded or of Smirnov class, with
/// `H` outer in `H¹(Π_α)` (default `1/(z − α + 1)²`) and `FH ∈ H¹`.
pub fn funcalc_quotient(
    f: &HalfPlaneFunction,
    h: Option<&HalfPlaneFunction>,
    b: &SemigroupBackend,
    alpha: f64,
) -> Result<QuasimultiplierFraction> {
    check_abscissa(b, alpha)?;
    let default;
    let h = match h {
        Some(h) => h,
        None => {
            default = default_denominator(alpha)?;
            &default
        }
    };
    check_h1(h, alpha)?;
    outer_check(h, alpha)?;
    let fh = f
        .restrict(alpha.max(f.alpha()))?
        .product(h, ClassTag::H1)
        .map_err(|e| Error::ClassCheck(format!("F·H: {e}")))?;
    check_h1(&fh, alpha).map_err(|e| Error::ClassCheck(format!("F·H is not in H1: {e}")))?;
    let num = funcalc_h1(&fh, b, alpha)?;
    let den = funcalc_h1(h, b, alpha)?;
    let mut q = QuasimultiplierFraction::new(num.value, den.value, WitnessKind::OuterH1, b)?;
    q.num_budget = num.budget;
    q.den_budget = den.budget;
    Ok(q)
}

/// Solves `den·X = num`. The budget propagates the fraction's budgets
/// through `‖den⁻¹‖`.
pub fn qm_evaluate(s: &QuasimultiplierFraction) -> Result<Estimate<Operator>> {
    if s.radical {
        return Err(Error::Radical(
            "the denominator is quasinilpotent on the lattice shift".into(),
        ));
    }
    let cond = s.den.condition();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Singular(format!(
            "denominator condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}"
        )));
    }
    let x = s.den.solve(&s.num)?;
    let residual = (&(&s.den * &x) - &s.num).norm();
    if residual > 1e-10 * s.num.norm().max(1e-300) * cond.max(1.0) {
        return Err(Error::Singular(format!(
            "solve residual {residual:.3e} is too large"
        )));
    }
    let inv_norm = cond / s.den.norm();
    let budget = inv_norm * (s.num_budget + s.den_budget * x.norm()) + residual * inv_norm;
    Ok(Estimate::new(x, budget))
}

/// `‖n₁d₂ − n₂d₁‖ ≤ tol · max(‖n₁‖‖d₂‖, ‖n₂‖‖d₁‖)`.
pub fn qm_equal(s1: &QuasimultiplierFraction, s2: &QuasimultiplierFraction, tol: f64) -> bool {
    let lhs = &s1.num * &s2.den;
    let rhs = &s2.num * &s1.den;
    let scale = (s1.num.norm() * s2.den.norm()).max(s2.num.norm() * s1.den.norm());
    (&lhs - &rhs).norm() <= tol * scale
}

/// The generator `A = −φ(v_λ′)/φ(v_λ)`, `v_λ(t) = t e^{−λt}`.
pub fn generator(b: &SemigroupBackend, lambda: f64) -> Result<QuasimultiplierFraction> {
    let g = b.growth_bound();
    if !(lambda > g) {
        return Err(Error::Abscissa(format!(
            "lambda = {lambda} must exceed the growth bound {g}"
        )));
    }
    let grid = TimeGrid::default();
    let num = phi_refined(b, &GridFunction::v_lambda_prime(grid, lambda))?;
    let den = phi_refined(b, &GridFunction::v_lambda(grid, lambda))?;
    let mut q = QuasimultiplierFraction::new(
        num.value.scale_real(-1.0),
        den.value,
        WitnessKind::PhiVLambda,
        b,
    )?;
    q.num_budget = num.budget;
    q.den_budget = den.budget;
    Ok(q)
}

/// `‖(T(t)u − u)/t − Au‖` for each `t`.
pub fn difference_quotient_check(
    b: &SemigroupBackend,
    u: &Operator,
    ts: &[f64],
) -> Result<Vec<f64>> {
    if u.dim() != b.dim() {
        return Err(Error::Dimension(
            "difference quotient: operator size".into(),
        ));
    }
    let a = match b.generator_matrix() {
        Some(a) => a,
        None => qm_evaluate(&generator(b, 0.0)?)?.value,
    };
    let au = &a * u;
    ts.iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::NegativeTime(t));
            }
            let q = (&(&b.evaluate(t)? * u) - u).scale_real(1.0 / t);
            Ok((&q - &au).norm())
        })
        .collect()
}

/// Outcome of [`regularity_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityProbe {
    /// `max_{n≤N} ‖λⁿ Sⁿ w‖` over the computed powers
    pub value: f64,
    /// the guard `1e12` was crossed
    pub diverged: bool,
    /// the fraction could not be evaluated (radical case)
    pub radical: bool,
    pub powers: usize,
}

/// Probes pseudoboundedness of `(λⁿSⁿ)` against a witness.
pub fn regularity_probe(
    s: &QuasimultiplierFraction,
    lambda: f64,
    n: usize,
    witness: &Operator,
) -> Result<RegularityProbe> {
    let x = match qm_evaluate(s) {
        Ok(x) => x.value,
        Err(Error::Radical(_)) => {
            return Ok(RegularityProbe {
                value: f64::NAN,
                diverged: false,
                radical: true,
                powers: 0,
            })
        }
        Err(e) => return Err(e),
    };
    if witness.dim() != x.dim() {
        return Err(Error::Dimension("regularity probe: witness size".into()));
    }
    let step = x.scale_real(lambda);
    let mut p = witness.clone();
    let mut value: f64 = 0.0;
    for k in 1..=n {
        p = &step * &p;
        let norm = p.norm();
        value = value.max(norm);
        if !(norm <= PROBE_OVERFLOW) {
            return Ok(RegularityProbe {
                value,
                diverged: true,
                radical: false,
                powers: k,
            });
        }
    }
    Ok(RegularityProbe {
        value,
        diverged: false,
        radical: false,
        powers: n,
    })
}

/// The `n`-th approximant of the mollified calculus,
/// `−(1/2π) ∫ M_n(z) 𝓛(f)(z) (A + zI)⁻¹ dy` on `z = α + iy`, with
/// `M_n(z) = (n−α)²/(z+n−α)²` the transform of the mollifier `v_{n,α}`.
///
/// `𝓛(f)` is taken from one FFT of the grid samples, so the `y`-integral
/// is the trapezoid rule on the FFT frequencies in `[−π/h, π/h)`. The
/// budget compares against the rule on every second frequency.
pub fn regularized_funcalc(
    f: &GridFunction,
    b: &SemigroupBackend,
    alpha: f64,
    n: u32,
) -> Result<Estimate<Operator>> {
    check_abscissa(b, alpha)?;
    if n == 0 || (n as f64) <= alpha {
        return Err(Error::Precondition(format!(
            "mollifier index n = {n} must exceed alpha = {alpha}"
        )));
    }
    let grid = *f.grid();
    let h = grid.step();
    let count = grid.count();
    // e^{-αt} f must be integrable on the horizon
    let envelope = |k: usize| f.values()[k].norm() * (-alpha * grid.node(k)).exp();
    let tail = tail_estimate(&grid, envelope);
    if envelope(count - 1) > 1e-6 * (0..count).map(envelope).fold(0.0, f64::max).max(1e-300) {
        return Err(Error::TailBudget(format!(
            "e^(-alpha t) f(t) is not negligible at the horizon t = {}",
            grid.horizon()
        )));
    }
    let m = (2 * (count - 1)).next_power_of_two();
    let period = m as f64 * h;
    let dy = 2.0 * PI / period;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, slot) in buf[..count].iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *slot = f.values()[k] * (grid.weight(k) * (-alpha * grid.node(k)).exp() * sign);
    }
    FftPlanner::<f64>::new()
        .plan_fft_forward(m)
        .process(&mut buf);

    let nn = n as f64 - alpha;
    let node = |k: usize| {
        let z = Complex64::new(alpha, (k as f64 - (m / 2) as f64) * dy);
        let mollifier = nn * nn / ((z + nn) * (z + nn));
        (z, mollifier * buf[k])
    };
    let fine: Vec<(Complex64, Complex64)> = (0..m)
        .map(|k| {
            let (z, v) = node(k);
            (z, v * dy)
        })
        .collect();
    let coarse: Vec<(Complex64, Complex64)> = (0..m)
        .step_by(2)
        .map(|k| {
            let (z, v) = node(k);
            (z, v * (2.0 * dy))
        })
        .collect();
    let s = -1.0 / (2.0 * PI);
    let value = b.line_resolvent_sum(&fine)?.scale_real(s);
    let half = b.line_resolvent_sum(&coarse)?.scale_real(s);
    // the truncated tail of e^{-αt} f enters as an L¹ error
    let budget = (&value - &half).norm() + tail + 1e-15 * value.norm() * (m as f64).sqrt();
    Ok(Estimate::new(value, budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Atom;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag12() -> SemigroupBackend {
        SemigroupBackend::diagonal(vec![c(-1.0), c(-2.0)]).unwrap()
    }

    fn h1(src: &str, alpha: f64) -> HalfPlaneFunction {
        HalfPlaneFunction::parse(src, alpha, ClassTag::H1).unwrap()
    }

    #[test]
    fn h1_calculus_on_diagonal() {
        let b = diag12();
        let f = h1("1/((z+1)^2)", -0.5);
        let r = funcalc_h1(&f, &b, -0.5).unwrap();
        let exact = Operator::from_diagonal(&[c(0.25), c(1.0 / 9.0)]);
        let err = (&r.value - &exact).norm();
        assert!(err < 1e-10, "{err}");
        assert!(r.budget < 1e-8);
        let s = funcalc_h1(&f, &b, -0.25).unwrap();
        assert!((&r.value - &s.value).norm() <= 2.0 * (r.budget + s.budget));
        let zero = funcalc_h1(&h1("0", -0.5), &b, -0.5).unwrap();
        assert_eq!(zero.value.norm(), 0.0);
    }

    #[test]
    fn h1_calculus_preconditions() {
        let b = diag12();
        let f = h1("1/((z+1)^2)", -0.5);
        assert!(matches!(funcalc_h1(&f, &b, 1.0), Err(Error::Abscissa(_))));
        assert!(matches!(funcalc_h1(&f, &b, -0.7), Err(Error::Abscissa(_))));
        let g = h1("1/(z+1)", -0.5);
        assert!(matches!(
            funcalc_h1(&g, &b, -0.5),
            Err(Error::ClassCheck(_))
        ));
    }

    #[test]
    fn measure_calculus() {
        let b = diag12();
        let d = funcalc_measure(&MeasureRepr::dirac(0.5).unwrap(), &b).unwrap();
        assert_eq!(d.value, b.evaluate(0.5).unwrap());
        let grid = TimeGrid::default();
        let v = funcalc_measure(
            &MeasureRepr::from_density(GridFunction::v_lambda(grid, 1.0)),
            &b,
        )
        .unwrap();
        let w = funcalc_h1(&h1("1/((z+1)^2)", -0.5), &b, -0.5).unwrap();
        assert!((&v.value - &w.value).norm() <= 2.0 * (v.budget + w.budget));
        assert_eq!(
            funcalc_measure(&MeasureRepr::zero(), &b)
                .unwrap()
                .value
                .norm(),
            0.0
        );
        let mixed = MeasureRepr::new(None, vec![Atom::new(0.0, c(1.0))]).unwrap();
        assert_eq!(
            funcalc_measure(&mixed, &b).unwrap().value,
            Operator::identity(2)
        );
    }

    #[test]
    fn quotient_reproduces_the_semigroup() {
        let b = diag12();
        let alpha = -0.5;
        let f = HalfPlaneFunction::parse("exp(-0.5*z)", alpha, ClassTag::Hinf).unwrap();
        let q = funcalc_quotient(&f, None, &b, alpha).unwrap();
        let x = qm_evaluate(&q).unwrap();
        let err = (&x.value - &b.evaluate(0.5).unwrap()).norm();
        assert!(err < 1e-8, "{err}");
        let one = HalfPlaneFunction::parse("1", alpha, ClassTag::Hinf).unwrap();
        let id = qm_evaluate(&funcalc_quotient(&one, None, &b, alpha).unwrap()).unwrap();
        assert!((&id.value - &Operator::identity(2)).norm() < 1e-10);
    }

    #[test]
    fn quotient_rejects_non_outer_denominators() {
        let b = diag12();
        let alpha = -0.5;
        let f = HalfPlaneFunction::parse("exp(-0.5*z)", alpha, ClassTag::Hinf).unwrap();
        // (z − α − 1)/(z − α + 1)³ vanishes at α + 1: not outer
        let h = h1("(z-0.5)/((z+1.5)^3)", alpha);
        assert!(matches!(
            funcalc_quotient(&f, Some(&h), &b, alpha),
            Err(Error::ClassCheck(_))
        ));
        let g = HalfPlaneFunction::parse("z*z", alpha, ClassTag::Smirnov).unwrap();
        assert!(matches!(
            funcalc_quotient(&g, None, &b, alpha),
            Err(Error::ClassCheck(_))
        ));
    }

    #[test]
    fn generator_fractions() {
        let b = diag12();
        let g1 = generator(&b, 1.0).unwrap();
        let a = qm_evaluate(&g1).unwrap();
        let exact = Operator::from_diagonal(&[c(-1.0), c(-2.0)]);
        assert!((&a.value - &exact).norm() < 1e-9);
        let g2 = generator(&b, 2.0).unwrap();
        let g3 = generator(&b, 3.0).unwrap();
        assert!(qm_equal(&g2, &g3, 1e-8));
        let wrong = QuasimultiplierFraction::new(
            g2.num.scale_real(-1.0),
            g2.den.clone(),
            WitnessKind::User,
            &b,
        )
        .unwrap();
        assert!(!qm_equal(&g2, &wrong, 1e-6));
        let expanded = g2.expand(&b.evaluate(0.3).unwrap());
        assert!(qm_equal(&g2, &expanded, 1e-12));
        assert!(matches!(generator(&b, -1.5), Err(Error::Abscissa(_))));
    }

    #[test]
    fn radical_fractions_are_reported() {
        let b = SemigroupBackend::nilpotent_shift(8, 0.125).unwrap();
        let g = generator(&b, 1.0).unwrap();
        assert!(matches!(qm_evaluate(&g), Err(Error::Radical(_))));
        let p = regularity_probe(&g, 1.0, 5, &g.den).unwrap();
        assert!(p.radical);
    }

    #[test]
    fn difference_quotients_shrink_linearly() {
        let b = diag12();
        let u = phi_refined(&b, &GridFunction::v_lambda(TimeGrid::default(), 1.0))
            .unwrap()
            .value;
        let r = difference_quotient_check(&b, &u, &[0.1, 0.01, 0.001]).unwrap();
        assert!(r[0] > r[1] && r[1] > r[2] && r[2] <= 5e-3);
        assert!((r[1] / r[2] - 10.0).abs() < 1.0);
        let z = difference_quotient_check(&b, &Operator::zeros(2), &[0.1, 0.01]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let i = difference_quotient_check(&b, &Operator::identity(2), &[0.01, 0.001]).unwrap();
        assert!(i[1] < i[0] && i[1] < 5e-3);
    }

    #[test]
    fn regularity_probes() {
        let b = diag12();
        let grid = TimeGrid::default();
        let w = phi_refined(&b, &GridFunction::v_lambda(grid, 1.0))
            .unwrap()
            .value;
        let t1 = QuasimultiplierFraction::new(
            &w * &b.evaluate(1.0).unwrap(),
            w.clone(),
            WitnessKind::PhiVLambda,
            &b,
        )
        .unwrap();
        let p = regularity_probe(&t1, 1.0, 30, &w).unwrap();
        assert!(!p.diverged && p.value <= w.norm());
        let g = generator(&b, 1.0).unwrap();
        let p = regularity_probe(&g, 1.0, 60, &w).unwrap();
        assert!(p.diverged);
        let zero =
            QuasimultiplierFraction::new(Operator::zeros(2), w.clone(), WitnessKind::User, &b)
                .unwrap();
        assert_eq!(regularity_probe(&zero, 1.0, 10, &w).unwrap().value, 0.0);
    }

    #[test]
    fn mollified_calculus_matches_scalar_formula() {
        let b = diag12();
        let grid = TimeGrid::default();
        let alpha = -0.5;
        let f = GridFunction::v_lambda(grid, 1.0);
        for n in [4u32, 16] {
            let r = regularized_funcalc(&f, &b, alpha, n).unwrap();
            let nn = n as f64 - alpha;
            let expect: Vec<Complex64> = [-1.0, -2.0]
                .iter()
                .map(|a: &f64| c(nn * nn / ((nn - a) * (nn - a)) / ((1.0 - a) * (1.0 - a))))
                .collect();
            let err = (&r.value - &Operator::from_diagonal(&expect)).norm();
            assert!(err < 1e-6, "n = {n}: {err}");
        }
        let z = regularized_funcalc(&GridFunction::zeros(grid), &b, alpha, 4).unwrap();
        assert_eq!(z.value.norm(), 0.0);
    }
}
