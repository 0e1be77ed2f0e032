//! Uniform time grids, sampled functions, derivative oracles and the
//! flat-at-origin membership diagnostic.
//!
//! Every operator in the crate works on functions `φ(t)` on `[0, T]`. A
//! function is either known through a [`DerivativeOracle`] (any derivative
//! at any time) or only through samples on a [`TimeGrid`] (a
//! [`GridFunction`]). The operators that need high-order derivatives take
//! oracles; the ones that only integrate take grid functions.

mod csv_io;
pub mod functions;
mod oracle;
mod spline;

pub use oracle::{ensure_order, ClosedForm, DerivativeOracle, Provenance, Scaled, Shifted};
pub use spline::{CubicSpline, SplineNumeric, SPLINE_RELIABLE_ORDER};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Uniform discretization `t_i = i·h` of `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<F> {
    t_end: F,
    n_points: usize,
    step: F,
}

impl<F: Scalar> TimeGrid<F> {
    pub fn new(t_end: F, n_points: usize) -> Result<Self> {
        if !(t_end > F::zero()) || !t_end.is_finite() {
            return Err(invalid(format!(
                "end time must be positive and finite, got {t_end}"
            )));
        }
        if n_points < 2 {
            return Err(invalid(format!(
                "a grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self {
            t_end,
            n_points,
            step: t_end / F::from_usize_lossy(n_points - 1),
        })
    }

    pub fn t_end(&self) -> F {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> F {
        self.step
    }

    /// Node `t_i = i·h`; the last node is pinned to `T`.
    pub fn node(&self, i: usize) -> F {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            F::from_usize_lossy(i) * self.step
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = F> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Index of the node closest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: F) -> usize {
        let x = (t / self.step).round();
        if x <= F::zero() {
            0
        } else {
            x.to_usize().unwrap_or(usize::MAX).min(self.n_points - 1)
        }
    }

    /// Indices of the nodes with `lo <= t_i <= hi` (small slack for rounding).
    pub fn window(&self, lo: F, hi: F) -> std::ops::Range<usize> {
        let slack = self.step * F::lit(1e-9);
        let start = (0..self.n_points)
            .find(|&i| self.node(i) >= lo - slack)
            .unwrap_or(self.n_points);
        let end = (0..self.n_points)
            .rev()
            .find(|&i| self.node(i) <= hi + slack)
            .map_or(0, |i| i + 1);
        start..end.max(start)
    }
}

/// Builds the uniform grid with `n_points` nodes on `[0, t_end]`.
pub fn make_grid<F: Scalar>(t_end: F, n_points: usize) -> Result<TimeGrid<F>> {
    TimeGrid::new(t_end, n_points)
}

/// Samples of a function on a [`TimeGrid`]; all values finite.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<F> {
    grid: TimeGrid<F>,
    values: Vec<F>,
}

impl<F: Scalar> GridFunction<F> {
    pub fn new(grid: TimeGrid<F>, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid<F>) -> Self {
        Self {
            values: vec![F::zero(); grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: TimeGrid<F>, f: impl Fn(F) -> F) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn get(&self, i: usize) -> F {
        self.values[i]
    }

    /// Value at the grid node nearest to `t`.
    pub fn at(&self, t: F) -> F {
        self.values[self.grid.nearest_index(t)]
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: F) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a - *b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a + *b)
                .collect(),
        )
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(invalid("grid functions live on different grids"));
        }
        Ok(())
    }

    /// `max |values|` over the node index range.
    pub fn max_abs_on(&self, range: std::ops::Range<usize>) -> F {
        self.values[range]
            .iter()
            .fold(F::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs(&self) -> F {
        self.max_abs_on(0..self.values.len())
    }

    /// `max |self − other|` over the nodes with `lo <= t <= hi`.
    pub fn abs_err_on(&self, other: &Self, lo: F, hi: F) -> F {
        let w = self.grid.window(lo, hi);
        w.map(|i| (self.values[i] - other.values[i]).abs())
            .fold(F::zero(), F::max)
    }

    /// Relative L∞ error `‖self − reference‖∞ / ‖reference‖∞` on the nodes
    /// with `lo <= t <= hi`.
    pub fn rel_err_on(&self, reference: &Self, lo: F, hi: F) -> F {
        let w = self.grid.window(lo, hi);
        let num = self.abs_err_on(reference, lo, hi);
        let den = reference.max_abs_on(w);
        if den == F::zero() {
            if num == F::zero() {
                F::zero()
            } else {
                F::infinity()
            }
        } else {
            num / den
        }
    }
}

/// Sampled values `oracle.eval(k, t_i)` on every node.
pub fn sample<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    k: usize,
    grid: &TimeGrid<F>,
) -> Result<GridFunction<F>> {
    ensure_order(oracle, k)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i);
            oracle.eval(k, t).map_err(|e| Error::Node {
                node: i,
                t: t.as_f64(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<F>>>()?;
    GridFunction::new(*grid, values)
}

/// Fractional order `ν > 0` split as `m = ⌊ν⌋` and `α = m − ν + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalOrder<F> {
    nu: F,
    m: usize,
    alpha: F,
}

impl<F: Scalar> FractionalOrder<F> {
    pub fn new(nu: F) -> Result<Self> {
        if !(nu > F::zero()) || !nu.is_finite() {
            return Err(invalid(format!(
                "fractional order must be positive, got {nu}"
            )));
        }
        let m_f = nu.floor();
        let m = m_f
            .to_usize()
            .ok_or_else(|| invalid("fractional order too large"))?;
        Ok(Self {
            nu,
            m,
            alpha: m_f - nu + F::one(),
        })
    }

    pub fn half() -> Self {
        Self::new(F::lit(0.5)).expect("1/2 is a valid order")
    }

    pub fn nu(&self) -> F {
        self.nu
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Order `m − ν + 1 ∈ (0, 1]` of the fractional integral involved.
    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn is_integer(&self) -> bool {
        self.alpha == F::one()
    }
}

/// Per-order values `φ⁽ᵏ⁾(0)` gathered by [`check_m_membership`].
#[derive(Clone, Debug)]
pub struct MembershipReport<F> {
    pub values_at_zero: Vec<F>,
    pub tol: F,
}

impl<F: Scalar> MembershipReport<F> {
    pub fn passed(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Lowest derivative order whose value at 0 exceeds the tolerance.
    pub fn first_violation(&self) -> Option<usize> {
        self.values_at_zero
            .iter()
            .position(|v| !(v.abs() <= self.tol))
    }
}

/// Checks the flat-at-origin property: `|φ⁽ᵏ⁾(0)| <= tol` for `k = 0..=k_max`.
pub fn check_m_membership<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    k_max: usize,
    tol: F,
) -> Result<MembershipReport<F>> {
    ensure_order(oracle, k_max)?;
    let values_at_zero = (0..=k_max)
        .map(|k| oracle.eval(k, F::zero()))
        .collect::<Result<Vec<F>>>()?;
    Ok(MembershipReport {
        values_at_zero,
        tol,
    })
}

/// Like [`check_m_membership`] but turns a failure into a domain error.
pub fn require_m_membership<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    k_max: usize,
    tol: F,
) -> Result<()> {
    let report = check_m_membership(oracle, k_max, tol)?;
    match report.first_violation() {
        None => Ok(()),
        Some(k) => Err(Error::Domain(format!(
            "function is not flat at t = 0: derivative of order {k} is {} (tolerance {})",
            report.values_at_zero[k], tol
        ))),
    }
}
