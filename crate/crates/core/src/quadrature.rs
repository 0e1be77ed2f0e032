//! Quadrature rules for Abel-type integrals `∫₀ᵗ (t − s)^e f(s) ds`, `e > −1`.
//!
//! Three discretizations are provided:
//!
//! * [`QuadratureScheme::ProductTrapezoid`]: the weight `(t − s)^e` is
//!   integrated exactly against the piecewise-linear interpolant of grid
//!   samples. Second order for smooth data, including the weakly singular
//!   range `−1 < e < 0`.
//! * [`QuadratureScheme::PlainTrapezoid`]: ordinary trapezoid on the product
//!   `(t − s)^e f(s)`. Only meaningful for `e ≥ 0`.
//! * [`QuadratureScheme::CompositeGauss`]: Gauss–Legendre on every grid cell
//!   except the one touching `s = t`, which uses Gauss–Jacobi with the
//!   weight `(t − s)^e` built in. Needs `f` at off-grid points, so it is only
//!   available when `f` is a continuous function rather than samples.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::sampled::TimeGrid;
use crate::scalar::Scalar;
use crate::special::gamma;

/// Discretization used for the Abel-type integrals behind every
/// fractional operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureScheme {
    ProductTrapezoid,
    PlainTrapezoid,
    CompositeGauss { points: usize },
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme::CompositeGauss { points: 12 }
    }
}

/// Nodes and weights of an interpolatory rule on `[−1, 1]`, nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Jacobi rule for the weight `(1 − x)^a (1 + x)^b`, built with the
/// Golub–Welsch eigenvalue method. `a = b = 0` gives Gauss–Legendre.
pub fn gauss_jacobi(points: usize, a: f64, b: f64) -> Result<GaussRule> {
    if points == 0 {
        return Err(invalid("a Gauss rule needs at least one point"));
    }
    if a <= -1.0 || b <= -1.0 {
        return Err(invalid(format!(
            "Jacobi exponents must exceed -1 (a = {a}, b = {b})"
        )));
    }
    let ab = a + b;
    let mut jacobi = DMatrix::<f64>::zeros(points, points);
    for i in 0..points {
        let fi = i as f64;
        let diag = if i == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * fi + ab) * (2.0 * fi + ab + 2.0))
        };
        jacobi[(i, i)] = diag;
        if i + 1 < points {
            let k = fi + 1.0;
            let s = 2.0 * k + ab;
            let num = 4.0 * k * (k + a) * (k + b) * (k + ab);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn gauss_legendre(points: usize) -> Result<GaussRule> {
    gauss_jacobi(points, 0.0, 0.0)
}

/// Weights for `∫₀^{t_n} (t_n − s)^e P(s) ds` from samples of `P` on a
/// uniform grid, with the weight integrated exactly against the
/// piecewise-linear interpolant of `P`.
#[derive(Clone, Debug)]
pub struct ProductTrapezoid<F> {
    exponent: F,
    scale: F,
    // interior[d] is the weight attached to a sample d steps behind the
    // evaluation node (d >= 1), before scaling.
    interior: Vec<F>,
}

impl<F: Scalar> ProductTrapezoid<F> {
    pub fn new(exponent: F, step: F, n_points: usize) -> Result<Self> {
        if exponent <= -F::one() {
            return Err(invalid("product trapezoid needs an exponent above -1"));
        }
        let a = exponent + F::one();
        let p = a + F::one();
        let pw = |d: usize| F::from_usize_lossy(d).powf(p);
        let interior = (0..n_points.max(1))
            .map(|d| {
                if d == 0 {
                    F::one()
                } else {
                    pw(d + 1) - F::lit(2.0) * pw(d) + pw(d - 1)
                }
            })
            .collect();
        Ok(Self {
            exponent,
            scale: step.powf(a) / (a * p),
            interior,
        })
    }

    pub fn exponent(&self) -> F {
        self.exponent
    }

    fn first_weight(&self, n: usize) -> F {
        let a = self.exponent + F::one();
        let nf = F::from_usize_lossy(n);
        let nm1 = F::from_usize_lossy(n - 1);
        nm1.powf(a + F::one()) - (nm1 - a) * nf.powf(a)
    }

    /// Integral at grid node `n` from the samples `values[0..=n]`.
    pub fn integrate_at(&self, values: &[F], n: usize) -> F {
        if n == 0 {
            return F::zero();
        }
        let mut acc = self.first_weight(n) * values[0];
        for (j, &v) in values.iter().enumerate().take(n).skip(1) {
            acc = acc + self.interior[n - j] * v;
        }
        acc = acc + values[n];
        self.scale * acc
    }

    /// Integral at every grid node.
    pub fn integrate(&self, values: &[F]) -> Vec<F> {
        (0..values.len())
            .into_par_iter()
            .map(|n| self.integrate_at(values, n))
            .collect()
    }
}

/// Trapezoid rule for the causal convolution `∫₀^{t_n} k(t_n − τ) d(τ) dτ`
/// with both factors sampled on the same uniform grid.
pub fn trapezoid_convolution<F: Scalar>(kernel: &[F], data: &[F], step: F) -> Vec<F> {
    debug_assert_eq!(kernel.len(), data.len());
    let half = F::lit(0.5);
    (0..data.len())
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return F::zero();
            }
            let mut acc = half * kernel[n] * data[0];
            for j in 1..n {
                acc = acc + kernel[n - j] * data[j];
            }
            acc = acc + half * kernel[0] * data[n];
            acc * step
        })
        .collect()
}

/// Continuous integrand for [`weighted_integrals`].
pub type Integrand<'a, F> = dyn Fn(F) -> Result<F> + Sync + 'a;

/// Evaluates `∫₀^τ (τ − s)^e f(s) ds` at `τ = t_i + shift` for every grid
/// node `t_i`. Points with `τ ≤ 0` yield zero.
///
/// `shift` must be zero for the trapezoid schemes and lie in `(−h, h)` for
/// [`QuadratureScheme::CompositeGauss`].
pub fn weighted_integrals<F: Scalar>(
    f: &Integrand<'_, F>,
    grid: &TimeGrid<F>,
    shift: F,
    exponent: F,
    scheme: QuadratureScheme,
) -> Result<Vec<F>> {
    if exponent <= -F::one() {
        return Err(invalid("weight exponent must exceed -1"));
    }
    match scheme {
        QuadratureScheme::ProductTrapezoid | QuadratureScheme::PlainTrapezoid => {
            if shift != F::zero() {
                return Err(invalid("trapezoid schemes only evaluate at grid nodes"));
            }
            let samples = sample_nodes(f, grid)?;
            if scheme == QuadratureScheme::ProductTrapezoid {
                let rule = ProductTrapezoid::new(exponent, grid.step(), grid.len())?;
                Ok(rule.integrate(&samples))
            } else {
                if exponent < F::zero() {
                    return Err(invalid(
                        "plain trapezoid cannot integrate a singular weight; use a product rule",
                    ));
                }
                let h = grid.step();
                let kernel: Vec<F> = (0..grid.len())
                    .map(|d| (F::from_usize_lossy(d) * h).powf(exponent))
                    .collect();
                Ok(trapezoid_convolution(&kernel, &samples, h))
            }
        }
        QuadratureScheme::CompositeGauss { points } => {
            composite_gauss(f, grid, shift, exponent, points)
        }
    }
}

fn sample_nodes<F: Scalar>(f: &Integrand<'_, F>, grid: &TimeGrid<F>) -> Result<Vec<F>> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i);
            f(t).map_err(|e| Error::Node {
                node: i,
                t: t.as_f64(),
                source: Box::new(e),
            })
        })
        .collect()
}

fn composite_gauss<F: Scalar>(
    f: &Integrand<'_, F>,
    grid: &TimeGrid<F>,
    shift: F,
    exponent: F,
    points: usize,
) -> Result<Vec<F>> {
    let h = grid.step();
    if shift.abs() >= h {
        return Err(invalid("shift must be smaller than one grid step"));
    }
    let n = grid.len();
    let legendre = gauss_legendre(points)?;
    let jacobi = gauss_jacobi(points, exponent.as_f64(), 0.0)?;
    let gl_x: Vec<F> = legendre.nodes.iter().map(|&x| F::lit(x)).collect();
    let gl_w: Vec<F> = legendre.weights.iter().map(|&w| F::lit(w)).collect();
    let gj_x: Vec<F> = jacobi.nodes.iter().map(|&x| F::lit(x)).collect();
    let gj_w: Vec<F> = jacobi.weights.iter().map(|&w| F::lit(w)).collect();
    let half = F::lit(0.5);
    let one = F::one();

    // Cell c covers [max(0, t_{c-1} + shift), t_c + shift] for c = 0..n-1,
    // with t_{-1} = -h. Cell c ends exactly at evaluation point c.
    let cell_bounds = |c: usize| -> Option<(F, F, bool)> {
        let hi = grid.node(c) + shift;
        let lo_raw = if c == 0 {
            -h + shift
        } else {
            grid.node(c - 1) + shift
        };
        if hi <= F::zero() {
            return None;
        }
        let full = lo_raw >= F::zero();
        let lo = if full { lo_raw } else { F::zero() };
        (hi > lo).then_some((lo, hi, full))
    };
    let wrap = |c: usize, t: F, e: Error| Error::Node {
        node: c,
        t: t.as_f64(),
        source: Box::new(e),
    };

    // Legendre samples on every cell (used when the cell is interior).
    let legendre_samples: Vec<Option<Vec<F>>> = (0..n)
        .into_par_iter()
        .map(|c| match cell_bounds(c) {
            None => Ok(None),
            Some((lo, hi, _)) => {
                let mid = half * (lo + hi);
                let rad = half * (hi - lo);
                gl_x.iter()
                    .map(|&x| {
                        let s = mid + rad * x;
                        f(s).map_err(|e| wrap(c, s, e))
                    })
                    .collect::<Result<Vec<F>>>()
                    .map(Some)
            }
        })
        .collect::<Result<_>>()?;

    // Jacobi samples on every cell (used when the cell is the last one).
    let jacobi_samples: Vec<Option<Vec<F>>> = (0..n)
        .into_par_iter()
        .map(|c| match cell_bounds(c) {
            None => Ok(None),
            Some((lo, hi, _)) => {
                let rad = half * (hi - lo);
                gj_x.iter()
                    .map(|&x| {
                        let s = lo + rad * (one + x);
                        f(s).map_err(|e| wrap(c, s, e))
                    })
                    .collect::<Result<Vec<F>>>()
                    .map(Some)
            }
        })
        .collect::<Result<_>>()?;

    // Weight table for full interior cells, indexed by distance d = i - c >= 1.
    let toeplitz: Vec<Vec<F>> = (0..n)
        .map(|d| {
            gl_x.iter()
                .zip(&gl_w)
                .map(|(&x, &w)| {
                    if d == 0 {
                        F::zero()
                    } else {
                        let dist = (F::from_usize_lossy(d) + half * (one - x)) * h;
                        half * h * w * dist.powf(exponent)
                    }
                })
                .collect()
        })
        .collect();

    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let tau = grid.node(i) + shift;
            let Some((lo_last, _, _)) = cell_bounds(i) else {
                return F::zero();
            };
            let mut acc = F::zero();
            for c in 0..i {
                let (Some(vals), Some((lo, hi, full))) = (&legendre_samples[c], cell_bounds(c))
                else {
                    continue;
                };
                if full {
                    let row = &toeplitz[i - c];
                    for (wq, v) in row.iter().zip(vals) {
                        acc = acc + *wq * *v;
                    }
                } else {
                    let mid = half * (lo + hi);
                    let rad = half * (hi - lo);
                    for ((x, w), v) in gl_x.iter().zip(&gl_w).zip(vals) {
                        let s = mid + rad * *x;
                        acc = acc + rad * *w * (tau - s).powf(exponent) * *v;
                    }
                }
            }
            if let Some(vals) = &jacobi_samples[i] {
                let rad = half * (tau - lo_last);
                let scale = rad.powf(exponent + one);
                let mut last = F::zero();
                for (w, v) in gj_w.iter().zip(vals) {
                    last = last + *w * *v;
                }
                acc = acc + scale * last;
            }
            acc
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(5).unwrap();
        // degree 9 is exact for 5 points
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(8))
            .sum();
        assert!((got - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weight_moments() {
        // ∫_{-1}^{1} (1 - x)^a dx = 2^{a+1}/(a+1); first moment too.
        let a = -0.5;
        let rule = gauss_jacobi(6, a, 0.0).unwrap();
        let m0: f64 = rule.weights.iter().sum();
        assert!((m0 - 2f64.powf(a + 1.0) / (a + 1.0)).abs() < 1e-13);
        // ∫ (1-x)^a x^3 dx via exact expansion in y = 1 - x
        let exact = {
            // x^3 = (1 - y)^3 = 1 - 3y + 3y^2 - y^3, ∫_0^2 y^{a+k} dy = 2^{a+k+1}/(a+k+1)
            let m = |k: f64| 2f64.powf(a + k + 1.0) / (a + k + 1.0);
            m(0.0) - 3.0 * m(1.0) + 3.0 * m(2.0) - m(3.0)
        };
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(3))
            .sum();
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn product_trapezoid_reproduces_constant() {
        // ∫₀ᵗ (t − s)^{α−1} ds = t^α / α
        let alpha = 0.37_f64;
        let grid = TimeGrid::new(2.0, 41).unwrap();
        let rule = ProductTrapezoid::new(alpha - 1.0, grid.step(), grid.len()).unwrap();
        let ones = vec![1.0; grid.len()];
        for (i, v) in rule.integrate(&ones).iter().enumerate() {
            let t = grid.node(i);
            assert!((v - t.powf(alpha) / alpha).abs() < 1e-13, "node {i}");
        }
    }

    #[test]
    fn product_trapezoid_exact_on_linear_data() {
        // ∫₀ᵗ (t − s)^{-1/2} s ds = (4/3) t^{3/2}
        let grid = TimeGrid::new(1.0, 11).unwrap();
        let rule = ProductTrapezoid::new(-0.5, grid.step(), grid.len()).unwrap();
        let data: Vec<f64> = grid.nodes().collect();
        let got = rule.integrate(&data);
        assert!((got[10] - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn composite_gauss_matches_beta_integral_off_grid() {
        // ∫₀^τ (τ − s)^e s^2 ds = 2 τ^{e+3} / ((e+1)(e+2)(e+3))
        let grid = TimeGrid::new(1.0, 21).unwrap();
        for &e in &[-0.5_f64, -0.3, 0.5] {
            for &shift in &[0.0, 0.013, -0.021] {
                let f = |s: f64| Ok(s * s);
                let got = weighted_integrals(
                    &f,
                    &grid,
                    shift,
                    e,
                    QuadratureScheme::CompositeGauss { points: 8 },
                )
                .unwrap();
                for (i, v) in got.iter().enumerate() {
                    let tau = grid.node(i) + shift;
                    let want = if tau <= 0.0 {
                        0.0
                    } else {
                        2.0 * tau.powf(e + 3.0) / ((e + 1.0) * (e + 2.0) * (e + 3.0))
                    };
                    assert!((v - want).abs() < 1e-13, "e={e} shift={shift} i={i}");
                }
            }
        }
    }

    #[test]
    fn plain_trapezoid_rejects_singular_weight() {
        let grid = TimeGrid::new(1.0, 5).unwrap();
        let f = |_s: f64| Ok(1.0);
        assert!(
            weighted_integrals(&f, &grid, 0.0, -0.5, QuadratureScheme::PlainTrapezoid).is_err()
        );
    }

    #[test]
    fn trapezoid_convolution_of_constants() {
        let grid = TimeGrid::new(1.0, 11).unwrap();
        let ones = vec![1.0_f64; grid.len()];
        let got = trapezoid_convolution(&ones, &ones, grid.step());
        assert!((got[10] - 1.0).abs() < 1e-14);
    }
}
