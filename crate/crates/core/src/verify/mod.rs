//! Independent oracles and the numbered criteria battery.

mod criteria;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hardy::HalfPlaneFunction;
use crate::operator::Operator;

pub use criteria::CRITERIA;

/// Eigenvector condition bound for [`eig_oracle`] inputs.
pub const ORACLE_MAX_CONDITION: f64 = 1e6;

/// `V diag(F(−a_i)) V⁻¹` from an eigendecomposition `A = V diag(a) V⁻¹`.
pub fn eig_oracle(f: &HalfPlaneFunction, a: &Operator) -> Result<Operator> {
    let e = a.eigen()?;
    if e.condition > ORACLE_MAX_CONDITION {
        return Err(Error::Defective(format!(
            "eigenvector condition {:.3e} is too large for the oracle",
            e.condition
        )));
    }
    Ok(e.apply(|l| f.eval(-l)))
}

/// A random real `n × n` generator with spectral abscissa in
/// `[−3, −0.5]` and eigenvector condition at most 100. Complex
/// eigenvalues come in conjugate pairs.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    loop {
        let mut block = vec![vec![0.0; n]; n];
        let mut k = 0;
        while k < n {
            if k + 1 < n && rng.random_bool(0.5) {
                let a = -rng.random_range(0.5..2.5);
                let b = rng.random_range(0.3..2.0);
                block[k][k] = a;
                block[k + 1][k + 1] = a;
                block[k][k + 1] = b;
                block[k + 1][k] = -b;
                k += 2;
            } else {
                block[k][k] = -rng.random_range(0.5..3.0);
                k += 1;
            }
        }
        let v: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let g: f64 = rng.sample(StandardNormal);
                        if i == j {
                            1.0 + 0.35 * g
                        } else {
                            0.35 * g
                        }
                    })
                    .collect()
            })
            .collect();
        let rows = |m: &Vec<Vec<f64>>| {
            let r: Vec<&[f64]> = m.iter().map(|r| r.as_slice()).collect();
            Operator::from_real_rows(&r).expect("square")
        };
        let (v, b) = (rows(&v), rows(&block));
        let Ok(vinv) = v.inverse() else { continue };
        let a = &(&v * &b) * &vinv;
        // keep it exactly real
        let re: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j).re).collect())
            .collect();
        let a = rows(&re);
        let abscissa = a.spectral_abscissa();
        let Ok(e) = a.eigen() else { continue };
        if e.condition <= 100.0 && abscissa <= -0.5 + 1e-9 {
            return a;
        }
    }
}

/// Which stock backend family a criterion exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StockBackend {
    /// random stable 4×4 generators
    MatrixExp,
    /// `diag{−1, −2}` and the scalar transforms
    Diagonal,
    /// the lattice shift of size 8 and unit 1/8
    NilpotentShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub backends: Vec<StockBackend>,
    /// restrict to these criterion ids; all when `None`
    #[serde(default)]
    pub only: Option<Vec<u32>>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            backends: vec![
                StockBackend::MatrixExp,
                StockBackend::Diagonal,
                StockBackend::NilpotentShift,
            ],
            only: None,
        }
    }
}

/// One report row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub description: String,
    /// worst measured deviation; `null` when the computation failed
    #[serde(serialize_with = "finite_or_null")]
    pub residual: f64,
    /// the tolerance the residual is held to
    pub budget: f64,
    pub pass: bool,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Runs every selected criterion whose backend family is configured.
/// Criteria run in parallel; rows come back ordered by id.
pub fn run_suite(config: &SuiteConfig) -> Vec<CriterionReport> {
    let selected: Vec<&criteria::Criterion> = CRITERIA
        .iter()
        .filter(|c| config.backends.contains(&c.family))
        .filter(|c| config.only.as_ref().is_none_or(|o| o.contains(&c.id)))
        .collect();
    selected.par_iter().map(|c| c.run(config.seed)).collect()
}

pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SemigroupBackend;
    use crate::hardy::ClassTag;
    use rand::SeedableRng;

    #[test]
    fn oracle_examples() {
        let a = Operator::from_diagonal(&[c64(-1.0, 0.0), c64(-2.0, 0.0)]);
        let f = HalfPlaneFunction::parse("exp(-0.5*z)", 0.0, ClassTag::Hinf).unwrap();
        let o = eig_oracle(&f, &a).unwrap();
        let exact = Operator::from_diagonal(&[c64((-0.5f64).exp(), 0.0), c64((-1f64).exp(), 0.0)]);
        assert!((&o - &exact).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_stable(&mut rng, 4);
        let minus = HalfPlaneFunction::parse("-z", 0.0, ClassTag::Smirnov).unwrap();
        assert!((&eig_oracle(&minus, &a).unwrap() - &a).norm() < 1e-12 * a.norm());
        let one = HalfPlaneFunction::parse("1", 0.0, ClassTag::Hinf).unwrap();
        assert!((&eig_oracle(&one, &a).unwrap() - &Operator::identity(4)).norm() < 1e-12);
        let jordan = Operator::from_real_rows(&[&[-1.0, 1.0], &[0.0, -1.0]]).unwrap();
        assert!(eig_oracle(&one, &jordan).is_err());
    }

    #[test]
    fn oracle_agrees_with_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_stable(&mut rng, 4);
            let b = SemigroupBackend::matrix_exp(a.clone()).unwrap();
            for t in [0.1, 0.5, 2.0] {
                let f =
                    HalfPlaneFunction::parse(&format!("exp(-{t}*z)"), 0.0, ClassTag::Hinf).unwrap();
                let err = (&eig_oracle(&f, &a).unwrap() - &b.evaluate(t).unwrap()).norm();
                assert!(err < 1e-10, "{err}");
            }
        }
    }

    #[test]
    fn random_generators_meet_the_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_stable(&mut rng, 4);
            assert!(a.spectral_abscissa() <= -0.5 + 1e-9);
            assert!(a.eigen().unwrap().condition <= 100.0);
            assert!((0..4).all(|i| (0..4).all(|j| a.get(i, j).im == 0.0)));
        }
    }

    #[test]
    fn empty_backend_list_gives_empty_report() {
        let cfg = SuiteConfig {
            seed: 1,
            backends: vec![],
            only: None,
        };
        assert!(run_suite(&cfg).is_empty());
    }
}
