//! Numerical realization of one-parameter operator semigroups on finite
//! dimensional spaces: weighted convolution algebras, operator-valued
//! integration against measures, resolvents and their continuation, the
//! Arveson spectrum, and a holomorphic functional calculus `F(-A)` for
//! functions on right half-planes (H¹, H∞ and Smirnov quotients).
//!
//! Every public routine that integrates returns an [`Estimate`] carrying a
//! numerical error budget next to the value.

// `!(x > y)` guards are deliberate: they reject NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod backend;
pub mod cli;
pub mod error;
pub mod funcalc;
pub mod hardy;
pub mod json;
pub mod operator;
pub mod pettis;
pub mod quad;
pub mod resolvent;
pub mod verify;

pub use num_complex::Complex64;

pub use algebra::{GridFunction, MeasureRepr, TimeGrid, Weight};
pub use backend::SemigroupBackend;
pub use error::{Error, Result};
pub use funcalc::{QuasimultiplierFraction, WitnessKind};
pub use hardy::{ClassTag, Expr, HalfPlaneFunction};
pub use operator::Operator;
pub use resolvent::SpectrumReport;

/// A computed value together with an absolute error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub budget: f64,
}

impl<T> Estimate<T> {
    pub fn new(value: T, budget: f64) -> Self {
        Estimate { value, budget }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Estimate<U> {
        Estimate {
            value: f(self.value),
            budget: self.budget,
        }
    }
}
