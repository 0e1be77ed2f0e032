use super::oracle::{ensure_order, DerivativeOracle, Provenance};
use super::{GridFunction, TimeGrid};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Derivative orders above this are numerically unreliable on spline data.
pub const SPLINE_RELIABLE_ORDER: usize = 4;

/// Not-a-knot cubic spline through samples on a uniform grid.
#[derive(Clone, Debug)]
pub struct CubicSpline<F> {
    grid: TimeGrid<F>,
    y: Vec<F>,
    m: Vec<F>,
}

impl<F: Scalar> CubicSpline<F> {
    pub fn new(data: &GridFunction<F>) -> Self {
        let grid = *data.grid();
        let y = data.values().to_vec();
        let m = second_derivatives(&y, grid.step());
        Self { grid, y, m }
    }

    /// `S⁽ᵏ⁾(t)` for `k <= 3`; higher orders are 0. Outside the grid the end
    /// cubics are extended.
    pub fn eval(&self, k: usize, t: F) -> F {
        let h = self.grid.step();
        let n = self.y.len();
        let cell = (t / h).floor();
        let mut i = if cell <= F::zero() {
            0
        } else {
            cell.to_usize().unwrap_or(usize::MAX).min(n - 2)
        };
        // `t / h` can round below a knot; knots reproduce the data exactly.
        if i + 2 < n && t >= self.grid.node(i + 1) {
            i += 1;
        }
        if k == 0 && t == self.grid.node(n - 1) {
            return self.y[n - 1];
        }
        let u = t - self.grid.node(i);
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let six = F::lit(6.0);
        let two = F::lit(2.0);
        let b = (y1 - y0) / h - h * (two * m0 + m1) / six;
        let d = (m1 - m0) / h;
        match k {
            0 => y0 + u * (b + u * (m0 / two + u * d / six)),
            1 => b + u * (m0 + u * d / two),
            2 => m0 + u * d,
            3 => d,
            _ => F::zero(),
        }
    }

    fn derivative_samples(&self) -> GridFunction<F> {
        let values = self.grid.nodes().map(|t| self.eval(1, t)).collect();
        GridFunction::new(self.grid, values).expect("spline derivatives are finite")
    }
}

fn second_derivatives<F: Scalar>(y: &[F], h: F) -> Vec<F> {
    let n = y.len();
    if n < 3 {
        return vec![F::zero(); n];
    }
    let six = F::lit(6.0);
    let r: Vec<F> = (1..n - 1)
        .map(|i| six * (y[i - 1] - y[i] - y[i] + y[i + 1]) / (h * h))
        .collect();
    if n == 3 {
        // Single interior node: a single parabola through the three points.
        return vec![r[0] / six; 3];
    }
    // Unknowns M_1..M_{n-2}. Not-a-knot ends turn the first and last rows
    // into 6·M = r; interior rows are M_{i-1} + 4M_i + M_{i+1} = r_i.
    let k = n - 2;
    let four = F::lit(4.0);
    let mut diag = vec![four; k];
    let mut lower = vec![F::one(); k];
    let mut upper = vec![F::one(); k];
    diag[0] = six;
    upper[0] = F::zero();
    diag[k - 1] = six;
    lower[k - 1] = F::zero();
    let mut rhs = r;
    for i in 1..k {
        let w = lower[i] / diag[i - 1];
        diag[i] = diag[i] - w * upper[i - 1];
        rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    let mut inner = vec![F::zero(); k];
    inner[k - 1] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        inner[i] = (rhs[i] - upper[i] * inner[i + 1]) / diag[i];
    }
    let two = F::lit(2.0);
    let mut m = Vec::with_capacity(n);
    m.push(two * inner[0] - inner[1]);
    m.extend_from_slice(&inner);
    m.push(two * inner[k - 1] - inner[k - 2]);
    m
}

/// Oracle for measured samples: derivatives of cubic-spline fits.
///
/// Orders up to 3 differentiate one spline. Order `k >= 4` re-fits splines to
/// successive first derivatives and takes the second derivative of the
/// `(k−2)`-th fit. Beyond [`SPLINE_RELIABLE_ORDER`] the values are dominated
/// by amplified interpolation error; results derived from this oracle carry
/// [`Provenance::SplineNumeric`].
#[derive(Clone, Debug)]
pub struct SplineNumeric<F> {
    levels: Vec<CubicSpline<F>>,
    max_order: usize,
}

impl<F: Scalar> SplineNumeric<F> {
    pub fn new(data: &GridFunction<F>, max_order: usize) -> Result<Self> {
        if data.grid().len() < 4 {
            return Err(invalid("spline oracle needs at least 4 samples"));
        }
        let mut levels = vec![CubicSpline::new(data)];
        while levels.len() + 1 < max_order {
            let next = CubicSpline::new(&levels.last().expect("non-empty").derivative_samples());
            levels.push(next);
        }
        Ok(Self { levels, max_order })
    }

    pub fn reliable(&self, order: usize) -> bool {
        order <= SPLINE_RELIABLE_ORDER
    }
}

impl<F: Scalar> DerivativeOracle<F> for SplineNumeric<F> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        ensure_order(self, order)?;
        Ok(if order <= 3 {
            self.levels[0].eval(order, t)
        } else {
            self.levels[order - 2].eval(2, t)
        })
    }

    fn max_order(&self) -> Option<usize> {
        Some(self.max_order)
    }

    fn provenance(&self) -> Provenance {
        Provenance::SplineNumeric
    }
}
