use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semigroup_calculus::algebra::{convolve, laplace};
use semigroup_calculus::hardy::{parse, Expr};
use semigroup_calculus::verify::random_stable;
use semigroup_calculus::{Complex64, GridFunction, MeasureRepr, SemigroupBackend, TimeGrid};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Samples on a short grid with `f(0) = 0`, where the trapezoid
/// convolution has no endpoint terms and is exactly associative.
fn samples(n: usize) -> impl Strategy<Value = GridFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n - 1).prop_map(move |v| {
        let grid = TimeGrid::new(0.125, v.len() + 1).unwrap();
        let mut values = vec![c(0.0, 0.0)];
        values.extend(v.into_iter().map(|(re, im)| c(re, im)));
        GridFunction::new(grid, values).unwrap()
    })
}

fn max_diff(f: &GridFunction, g: &GridFunction) -> f64 {
    f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_commutes(f in samples(40), g in samples(40)) {
        let (fg, gf) = (convolve(&f, &g).unwrap(), convolve(&g, &f).unwrap());
        prop_assert!(max_diff(&fg, &gf) < 1e-12);
    }

    #[test]
    fn convolution_associates(f in samples(40), g in samples(40), h in samples(40)) {
        let left = convolve(&convolve(&f, &g).unwrap(), &h).unwrap();
        let right = convolve(&f, &convolve(&g, &h).unwrap()).unwrap();
        prop_assert!(max_diff(&left, &right) < 1e-11);
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let a = random_stable(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let b = SemigroupBackend::matrix_exp(a).unwrap();
        let lhs = b.evaluate(s + t).unwrap();
        let rhs = &b.evaluate(s).unwrap() * &b.evaluate(t).unwrap();
        prop_assert!((&lhs - &rhs).norm() < 1e-12 * (1.0 + lhs.norm()));

        let d = SemigroupBackend::diagonal(vec![c(-1.0, 2.0), c(-0.5, 0.0)]).unwrap();
        let lhs = d.evaluate(s + t).unwrap();
        let rhs = &d.evaluate(s).unwrap() * &d.evaluate(t).unwrap();
        prop_assert!((&lhs - &rhs).norm() < 1e-14);
    }

    #[test]
    fn lattice_semigroup_law(j in 0usize..12, k in 0usize..12) {
        let unit = 0.125;
        let b = SemigroupBackend::nilpotent_shift(8, unit).unwrap();
        let lhs = b.evaluate((j + k) as f64 * unit).unwrap();
        let rhs = &b.evaluate(j as f64 * unit).unwrap() * &b.evaluate(k as f64 * unit).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `𝓛(f*g) = 𝓛(f)𝓛(g)` for `f = t e^{-at}`, `g = e^{-bt}`.
    #[test]
    fn laplace_of_convolution(a in 1.0f64..3.0, b in 1.0f64..3.0, x in 0.0f64..2.0, y in -3.0f64..3.0) {
        let grid = TimeGrid::default();
        let f = GridFunction::from_real_fn(grid, |t| t * (-a * t).exp());
        let g = GridFunction::from_real_fn(grid, |t| (-b * t).exp());
        let fg = convolve(&f, &g).unwrap();
        let z = c(x, y);
        let lf = laplace(&MeasureRepr::from_density(f), z).value;
        let lg = laplace(&MeasureRepr::from_density(g), z).value;
        let lfg = laplace(&MeasureRepr::from_density(fg), z).value;
        prop_assert!((lfg - lf * lg).norm() < 1e-6, "{} vs {}", lfg, lf * lg);
    }
}

fn constant() -> impl Strategy<Value = Complex64> {
    prop_oneof![
        (-16i32..16).prop_map(|k| c(k as f64 / 4.0, 0.0)),
        (-16i32..16).prop_map(|k| c(0.0, k as f64 / 4.0)),
        (-8i32..8, -8i32..8).prop_map(|(a, b)| c(a as f64 / 2.0, b as f64 / 2.0)),
        (-1e3f64..1e3).prop_map(|v| c(v, 0.0)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::Var), constant().prop_map(Expr::Const)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), 1i32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.prop_map(|a| Expr::Exp(Box::new(a))),
        ]
    })
}

fn close(a: Complex64, b: Complex64) -> bool {
    if !(a.is_finite() && b.is_finite()) {
        return !a.is_finite() && !b.is_finite() || a.is_nan() && b.is_nan();
    }
    (a - b).norm() <= 1e-9 * (1.0 + a.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn parse_print_round_trip(e in expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        for z in [c(0.7, 0.3), c(1.5, -2.0)] {
            prop_assert!(close(back.eval(z), e.eval(z)), "{}: {} vs {}", text, back.eval(z), e.eval(z));
        }
    }
}
