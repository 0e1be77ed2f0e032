use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Where an oracle's derivatives come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Exact formulas.
    ClosedForm,
    /// Differentiated spline fits of sampled data; unreliable at high order.
    SplineNumeric,
    /// Derivatives computed by quadrature or series from other oracles.
    Computed,
}

/// A function on the time axis that can report `φ⁽ᵏ⁾(t)` for any order it supports.
///
/// Implementations must be deterministic and thread safe; operators evaluate
/// oracles in parallel.
pub trait DerivativeOracle<F: Scalar>: Send + Sync {
    fn eval(&self, order: usize, t: F) -> Result<F>;

    /// Highest derivative order available, `None` when unbounded.
    fn max_order(&self) -> Option<usize> {
        None
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }
}

/// Fails with [`Error::Capability`] when `order` exceeds the oracle's cap.
pub fn ensure_order<F: Scalar>(
    oracle: &(impl DerivativeOracle<F> + ?Sized),
    order: usize,
) -> Result<()> {
    match oracle.max_order() {
        Some(max) if order > max => Err(Error::Capability {
            requested: order,
            max,
        }),
        _ => Ok(()),
    }
}

impl<F: Scalar, O: DerivativeOracle<F> + ?Sized> DerivativeOracle<F> for &O {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        (**self).eval(order, t)
    }
    fn max_order(&self) -> Option<usize> {
        (**self).max_order()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

impl<F: Scalar, O: DerivativeOracle<F> + ?Sized> DerivativeOracle<F> for Box<O> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        (**self).eval(order, t)
    }
    fn max_order(&self) -> Option<usize> {
        (**self).max_order()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

impl<F: Scalar, O: DerivativeOracle<F> + ?Sized> DerivativeOracle<F> for Arc<O> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        (**self).eval(order, t)
    }
    fn max_order(&self) -> Option<usize> {
        (**self).max_order()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

type DerivFn<F> = dyn Fn(usize, F) -> Result<F> + Send + Sync;

/// Oracle backed by a closure `(k, t) ↦ φ⁽ᵏ⁾(t)`.
pub struct ClosedForm<F> {
    name: String,
    max_order: Option<usize>,
    f: Box<DerivFn<F>>,
}

impl<F: Scalar> ClosedForm<F> {
    pub fn new(
        name: impl Into<String>,
        max_order: Option<usize>,
        f: impl Fn(usize, F) -> Result<F> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            max_order,
            f: Box::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<F: Scalar> std::fmt::Debug for ClosedForm<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedForm")
            .field("name", &self.name)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl<F: Scalar> DerivativeOracle<F> for ClosedForm<F> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        ensure_order(self, order)?;
        (self.f)(order, t)
    }

    fn max_order(&self) -> Option<usize> {
        self.max_order
    }
}

/// The derivative `φ⁽ʲ⁾` seen as an oracle in its own right.
#[derive(Clone, Debug)]
pub struct Shifted<O> {
    inner: O,
    by: usize,
}

impl<O> Shifted<O> {
    pub fn new(inner: O, by: usize) -> Self {
        Self { inner, by }
    }
}

impl<F: Scalar, O: DerivativeOracle<F>> DerivativeOracle<F> for Shifted<O> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        self.inner.eval(order + self.by, t)
    }

    fn max_order(&self) -> Option<usize> {
        self.inner.max_order().map(|m| m.saturating_sub(self.by))
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// `c·φ`.
#[derive(Clone, Debug)]
pub struct Scaled<F, O> {
    inner: O,
    factor: F,
}

impl<F, O> Scaled<F, O> {
    pub fn new(inner: O, factor: F) -> Self {
        Self { inner, factor }
    }
}

impl<F: Scalar, O: DerivativeOracle<F>> DerivativeOracle<F> for Scaled<F, O> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        Ok(self.factor * self.inner.eval(order, t)?)
    }

    fn max_order(&self) -> Option<usize> {
        self.inner.max_order()
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}
