//! Riemann–Liouville integrals and fractional derivatives.
//!
//! For `ν > 0` with `m = ⌊ν⌋` and `α = m − ν + 1`:
//!
//! - Riemann–Liouville: `D^ν φ = ∂^{m+1} J^α φ`
//! - Caputo: `D^ν φ = J^α ∂^{m+1} φ`
//! - flat form: `D^ν φ = (1/Γ(α+1)) ∫₀ᵗ (t−s)^α φ^{(m+2)}(s) ds`
//!
//! The three agree for functions whose derivatives all vanish at 0. The flat
//! form has a bounded integrand and is the default engine for such functions.
//!
//! Oracle-driven operators integrate with composite Gauss rules by default
//! (Gauss–Legendre on whole cells, Gauss–Jacobi on the cell ending at the
//! evaluation point). [`QuadratureScheme::ProductTrapezoid`] switches them to
//! piecewise-linear product integration on the grid samples.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{
    trapezoid_convolution, weighted_integrals, ProductTrapezoid, QuadratureScheme,
};
use crate::sampled::{
    ensure_order, require_m_membership, DerivativeOracle, FractionalOrder, GridFunction, Shifted,
    TimeGrid,
};
use crate::scalar::Scalar;
use crate::special::{binomial, gamma};

/// Default tolerance on `|φ⁽ᵏ⁾(0)|` for the flatness precondition.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Tuning for the oracle-driven operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracOptions<F> {
    pub scheme: QuadratureScheme,
    /// Richardson levels for the outer derivative of the Riemann–Liouville form.
    pub richardson_levels: usize,
    /// Verify flatness at `t = 0` before using the flat form.
    pub check_membership: bool,
    pub membership_tol: F,
}

impl<F: Scalar> Default for FracOptions<F> {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::default(),
            richardson_levels: 4,
            check_membership: true,
            membership_tol: F::lit(DEFAULT_MEMBERSHIP_TOL),
        }
    }
}

impl<F: Scalar> FracOptions<F> {
    pub fn with_scheme(scheme: QuadratureScheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

fn fractional_only<F: Scalar>(nu: &FractionalOrder<F>) -> Result<()> {
    if nu.is_integer() {
        return Err(invalid(format!(
            "order {} is an integer: sample the oracle's derivative of that order instead",
            nu.nu()
        )));
    }
    Ok(())
}

fn check_alpha<F: Scalar>(alpha: F) -> Result<()> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(invalid(format!(
            "integral order must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `J^α P` at every node by product trapezoid integration of the samples.
pub fn frac_integral<F: Scalar>(p: &GridFunction<F>, alpha: F) -> Result<GridFunction<F>> {
    check_alpha(alpha)?;
    let grid = *p.grid();
    let rule = ProductTrapezoid::new(alpha - F::one(), grid.step(), grid.len())?;
    let g = gamma(alpha);
    let values = rule
        .integrate(p.values())
        .into_iter()
        .map(|v| v / g)
        .collect();
    GridFunction::new(grid, values)
}

/// `J^α φ⁽ᵏ⁾` at every node, with `φ⁽ᵏ⁾` taken from the oracle.
pub fn frac_integral_oracle<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    k: usize,
    alpha: F,
    grid: &TimeGrid<F>,
    scheme: QuadratureScheme,
) -> Result<GridFunction<F>> {
    check_alpha(alpha)?;
    ensure_order(oracle, k)?;
    let values = rl_integral_shifted(oracle, k, alpha, grid, F::zero(), scheme)?;
    GridFunction::new(*grid, values)
}

fn rl_integral_shifted<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    k: usize,
    alpha: F,
    grid: &TimeGrid<F>,
    shift: F,
    scheme: QuadratureScheme,
) -> Result<Vec<F>> {
    let f = |s: F| oracle.eval(k, s);
    let g = gamma(alpha);
    Ok(
        weighted_integrals(&f, grid, shift, alpha - F::one(), scheme)?
            .into_iter()
            .map(|v| v / g)
            .collect(),
    )
}

/// Riemann–Liouville derivative with default options.
pub fn frac_derivative_rl<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
) -> Result<GridFunction<F>> {
    frac_derivative_rl_with(oracle, nu, grid, &FracOptions::default())
}

/// Riemann–Liouville derivative `∂^{m+1} J^α φ`.
///
/// With composite Gauss the integral is evaluated off-grid at `t_i ± jδ` and
/// the outer derivative is a central difference, Richardson-extrapolated over
/// halvings of `δ`. `J^α φ` is continued by zero for `t < 0`. With product
/// trapezoid, `J^α φ` is sampled on the grid and differenced there.
pub fn frac_derivative_rl_with<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
    opts: &FracOptions<F>,
) -> Result<GridFunction<F>> {
    fractional_only(&nu)?;
    let q = nu.m() + 1;
    let alpha = nu.alpha();
    match opts.scheme {
        QuadratureScheme::CompositeGauss { .. } => {
            let levels = opts.richardson_levels.max(1);
            let delta0 = grid.step() / F::from_usize_lossy(2 * q);
            let mut estimates: Vec<Vec<F>> = Vec::with_capacity(levels);
            for l in 0..levels {
                let delta = delta0 / F::lit(2f64.powi(l as i32));
                estimates.push(central_difference_shifted(oracle, alpha, grid, q, delta, opts.scheme)?);
            }
            let values = richardson(estimates);
            GridFunction::new(*grid, values)
        }
        QuadratureScheme::ProductTrapezoid => {
            let j = frac_integral_oracle(oracle, 0, alpha, grid, opts.scheme)?;
            let values = grid_derivative(j.values(), grid.step(), q);
            GridFunction::new(*grid, values)
        }
        QuadratureScheme::PlainTrapezoid => Err(invalid(
            "the Riemann-Liouville integral has a singular weight; plain trapezoid cannot evaluate it",
        )),
    }
}

/// `δ^{-q} Σ_j (−1)^{q−j} C(q,j) J(t + (j − q/2)δ)` at every node.
fn central_difference_shifted<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    alpha: F,
    grid: &TimeGrid<F>,
    q: usize,
    delta: F,
    scheme: QuadratureScheme,
) -> Result<Vec<F>> {
    let half_q = F::from_usize_lossy(q) / F::lit(2.0);
    let mut acc = vec![F::zero(); grid.len()];
    for j in 0..=q {
        let shift = (F::from_usize_lossy(j) - half_q) * delta;
        let coeff: F = binomial(q, j);
        let coeff = if (q - j) % 2 == 1 { -coeff } else { coeff };
        let vals = rl_integral_shifted(oracle, 0, alpha, grid, shift, scheme)?;
        for (a, v) in acc.iter_mut().zip(vals) {
            *a = *a + coeff * v;
        }
    }
    let scale = delta.powi(q as i32);
    Ok(acc.into_iter().map(|a| a / scale).collect())
}

/// Extrapolates estimates whose errors expand in even powers of a step that
/// halves from one level to the next.
fn richardson<F: Scalar>(mut table: Vec<Vec<F>>) -> Vec<F> {
    let levels = table.len();
    for k in 1..levels {
        let factor = F::lit(4f64.powi(k as i32));
        for l in (k..levels).rev() {
            let (coarse, fine) = table.split_at_mut(l);
            let prev = &coarse[l - 1];
            for (f, c) in fine[0].iter_mut().zip(prev) {
                *f = (factor * *f - *c) / (factor - F::one());
            }
        }
    }
    table.pop().expect("at least one level")
}

/// `q`-th derivative of uniformly sampled values, second-order accurate,
/// one-sided at the ends.
pub fn grid_derivative<F: Scalar>(values: &[F], h: F, q: usize) -> Vec<F> {
    let n = values.len();
    let two = F::lit(2.0);
    match q {
        0 => values.to_vec(),
        1 if n >= 3 => {
            let mut d = vec![F::zero(); n];
            for i in 1..n - 1 {
                d[i] = (values[i + 1] - values[i - 1]) / (two * h);
            }
            let three = F::lit(3.0);
            let four = F::lit(4.0);
            d[0] = (-three * values[0] + four * values[1] - values[2]) / (two * h);
            d[n - 1] = (three * values[n - 1] - four * values[n - 2] + values[n - 3]) / (two * h);
            d
        }
        2 if n >= 4 => {
            let h2 = h * h;
            let mut d = vec![F::zero(); n];
            for i in 1..n - 1 {
                d[i] = (values[i - 1] - two * values[i] + values[i + 1]) / h2;
            }
            let (four, five) = (F::lit(4.0), F::lit(5.0));
            d[0] = (two * values[0] - five * values[1] + four * values[2] - values[3]) / h2;
            d[n - 1] = (two * values[n - 1] - five * values[n - 2] + four * values[n - 3]
                - values[n - 4])
                / h2;
            d
        }
        1 | 2 => {
            // Too few points for second order: plain differences.
            let mut cur = values.to_vec();
            for _ in 0..q {
                cur = (0..n)
                    .map(|i| {
                        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                        if b > a {
                            (cur[b] - cur[a]) / (F::from_usize_lossy(b - a) * h)
                        } else {
                            F::zero()
                        }
                    })
                    .collect();
            }
            cur
        }
        _ => {
            let first = grid_derivative(values, h, 2);
            grid_derivative(&first, h, q - 2)
        }
    }
}

/// Riemann–Liouville derivative of sampled data: product trapezoid `J^α`
/// followed by grid differences.
pub fn rl_on_grid<F: Scalar>(
    p: &GridFunction<F>,
    nu: FractionalOrder<F>,
) -> Result<GridFunction<F>> {
    fractional_only(&nu)?;
    let j = frac_integral(p, nu.alpha())?;
    let grid = *p.grid();
    GridFunction::new(grid, grid_derivative(j.values(), grid.step(), nu.m() + 1))
}

/// Caputo derivative with default options.
pub fn frac_derivative_caputo<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
) -> Result<GridFunction<F>> {
    frac_derivative_caputo_with(oracle, nu, grid, &FracOptions::default())
}

/// Caputo derivative `J^α φ^{(m+1)}`.
pub fn frac_derivative_caputo_with<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
    opts: &FracOptions<F>,
) -> Result<GridFunction<F>> {
    fractional_only(&nu)?;
    frac_integral_oracle(oracle, nu.m() + 1, nu.alpha(), grid, opts.scheme)
}

/// Flat-form derivative with default options.
pub fn frac_derivative_m<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
) -> Result<GridFunction<F>> {
    frac_derivative_m_with(oracle, nu, grid, &FracOptions::default())
}

/// Flat-form derivative `(1/Γ(α+1)) ∫₀ᵗ (t−s)^α φ^{(m+2)}(s) ds`.
///
/// Requires `φ⁽ᵏ⁾(0) = 0` for `k <= m + 2` (checked unless disabled in the
/// options); fails with [`Error::Domain`] naming the first nonzero order.
pub fn frac_derivative_m_with<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
    opts: &FracOptions<F>,
) -> Result<GridFunction<F>> {
    fractional_only(&nu)?;
    let order = nu.m() + 2;
    ensure_order(oracle, order)?;
    if opts.check_membership {
        require_m_membership(oracle, order, opts.membership_tol)?;
    }
    let alpha = nu.alpha();
    let f = |s: F| oracle.eval(order, s);
    let g = gamma(alpha + F::one());
    let values = weighted_integrals(&f, grid, F::zero(), alpha, opts.scheme)?
        .into_iter()
        .map(|v| v / g)
        .collect();
    GridFunction::new(*grid, values)
}

/// Flat-form derivative when only `φ^{(m+2)}` samples are available.
pub fn frac_derivative_m_sampled<F: Scalar>(
    top_derivative: &GridFunction<F>,
    nu: FractionalOrder<F>,
) -> Result<GridFunction<F>> {
    fractional_only(&nu)?;
    let grid = *top_derivative.grid();
    let alpha = nu.alpha();
    let rule = ProductTrapezoid::new(alpha, grid.step(), grid.len())?;
    let g = gamma(alpha + F::one());
    let values = rule
        .integrate(top_derivative.values())
        .into_iter()
        .map(|v| v / g)
        .collect();
    GridFunction::new(grid, values)
}

/// Both sides of a two-path identity and their largest discrepancy.
#[derive(Clone, Debug)]
pub struct ResidualReport<F> {
    pub lhs: GridFunction<F>,
    pub rhs: GridFunction<F>,
    pub residual: F,
}

impl<F: Scalar> ResidualReport<F> {
    pub fn new(lhs: GridFunction<F>, rhs: GridFunction<F>) -> Self {
        let residual = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(a, b)| (*a - *b).abs())
            .fold(F::zero(), F::max);
        Self { lhs, rhs, residual }
    }

    /// Largest discrepancy over nodes with `lo <= t <= hi`.
    pub fn residual_on(&self, lo: F, hi: F) -> F {
        self.lhs.abs_err_on(&self.rhs, lo, hi)
    }
}

/// Default absolute tolerance for identity checks: `max(1e−3, 10·h)`.
pub fn default_tolerance<F: Scalar>(grid: &TimeGrid<F>) -> F {
    F::lit(1e-3).max(F::lit(10.0) * grid.step())
}

/// Convolution rule `∂^ν (φ * P) = (∂^ν φ) * P`.
///
/// The left side convolves `φ` with `P` by trapezoid and takes the
/// Riemann–Liouville derivative of the samples. The right side convolves the
/// flat-form derivative of `φ` with `P`.
pub fn frac_conv_rule_check<F: Scalar>(
    phi: &dyn DerivativeOracle<F>,
    p: &GridFunction<F>,
    nu: FractionalOrder<F>,
) -> Result<ResidualReport<F>> {
    fractional_only(&nu)?;
    let grid = *p.grid();
    require_m_membership(phi, nu.m() + 2, F::lit(DEFAULT_MEMBERSHIP_TOL))?;
    let phi_samples = crate::sampled::sample(phi, 0, &grid)?;
    let conv = trapezoid_convolution(phi_samples.values(), p.values(), grid.step());
    let lhs = rl_on_grid(&GridFunction::new(grid, conv)?, nu)?;
    let d_phi = frac_derivative_m(phi, nu, &grid)?;
    let rhs = trapezoid_convolution(d_phi.values(), p.values(), grid.step());
    Ok(ResidualReport::new(lhs, GridFunction::new(grid, rhs)?))
}

/// Semigroup law `J^α J^β P = J^{α+β} P` for `α + β < 1`.
pub fn semigroup_check<F: Scalar>(
    p: &GridFunction<F>,
    alpha: F,
    beta: F,
) -> Result<ResidualReport<F>> {
    let inner = frac_integral(p, beta)?;
    let lhs = frac_integral(&inner, alpha)?;
    let rhs = frac_integral(p, alpha + beta)?;
    Ok(ResidualReport::new(lhs, rhs))
}

/// Commutation `∂ₜ J^α φ = J^α ∂ₜ φ` for flat `φ`, by differencing the
/// product trapezoid integral on one side and integrating `φ'` on the other.
pub fn commutation_check<F: Scalar>(
    phi: &dyn DerivativeOracle<F>,
    alpha: F,
    grid: &TimeGrid<F>,
) -> Result<ResidualReport<F>> {
    require_m_membership(phi, 1, F::lit(DEFAULT_MEMBERSHIP_TOL))?;
    let scheme = QuadratureScheme::ProductTrapezoid;
    let j = frac_integral_oracle(phi, 0, alpha, grid, scheme)?;
    let lhs = GridFunction::new(*grid, grid_derivative(j.values(), grid.step(), 1))?;
    let rhs = frac_integral_oracle(phi, 1, alpha, grid, scheme)?;
    Ok(ResidualReport::new(lhs, rhs))
}

/// Composition `∂^{1/2}∂^{1/2}φ = φ'` for flat `φ`.
///
/// The inner half derivative `r = ∂^{1/2}φ` is only needed through `r''`,
/// which equals `∂^{1/2}φ''` and is computed on the grid by the flat form;
/// the outer half derivative integrates those samples by product trapezoid.
pub fn half_composition_check<F: Scalar>(
    phi: &dyn DerivativeOracle<F>,
    grid: &TimeGrid<F>,
) -> Result<ResidualReport<F>> {
    let half = FractionalOrder::half();
    require_m_membership(phi, 4, F::lit(DEFAULT_MEMBERSHIP_TOL))?;
    let r2 = frac_derivative_m(&Shifted::new(phi, 2), half, grid)?;
    let lhs = frac_derivative_m_sampled(&r2, half)?;
    let rhs = crate::sampled::sample(phi, 1, grid)?;
    Ok(ResidualReport::new(lhs, rhs))
}

/// Pairwise discrepancies between the three derivative forms.
#[derive(Clone, Debug)]
pub struct CoincidenceReport<F> {
    pub rl: GridFunction<F>,
    pub caputo: GridFunction<F>,
    pub flat: GridFunction<F>,
    pub rl_caputo: F,
    pub rl_flat: F,
    pub caputo_flat: F,
}

impl<F: Scalar> CoincidenceReport<F> {
    pub fn max_discrepancy(&self) -> F {
        self.rl_caputo.max(self.rl_flat).max(self.caputo_flat)
    }
}

/// Computes the three forms of `D^ν φ` and compares them pairwise.
pub fn coincidence_check<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    nu: FractionalOrder<F>,
    grid: &TimeGrid<F>,
    opts: &FracOptions<F>,
) -> Result<CoincidenceReport<F>> {
    let forms: Vec<GridFunction<F>> = (0..3)
        .into_par_iter()
        .map(|which| match which {
            0 => frac_derivative_rl_with(oracle, nu, grid, opts),
            1 => frac_derivative_caputo_with(oracle, nu, grid, opts),
            _ => frac_derivative_m_with(oracle, nu, grid, opts),
        })
        .collect::<Result<_>>()?;
    let [rl, caputo, flat]: [GridFunction<F>; 3] = forms
        .try_into()
        .map_err(|_| Error::Degenerate("missing derivative form".into()))?;
    let span = (F::zero(), grid.t_end());
    Ok(CoincidenceReport {
        rl_caputo: rl.abs_err_on(&caputo, span.0, span.1),
        rl_flat: rl.abs_err_on(&flat, span.0, span.1),
        caputo_flat: caputo.abs_err_on(&flat, span.0, span.1),
        rl,
        caputo,
        flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampled::{functions, make_grid};

    fn sqrt_pi() -> f64 {
        std::f64::consts::PI.sqrt()
    }

    #[test]
    fn integral_of_constant_and_linear() {
        let g = make_grid(1.0_f64, 101).unwrap();
        let one = GridFunction::from_fn(g, |_| 1.0).unwrap();
        let j = frac_integral(&one, 0.5).unwrap();
        assert!((j.get(100) - 2.0 / sqrt_pi()).abs() < 1e-12);
        assert_eq!(j.get(0), 0.0);
        let lin = GridFunction::from_fn(g, |t| t).unwrap();
        let j = frac_integral(&lin, 0.5).unwrap();
        assert!((j.get(100) - 4.0 / (3.0 * sqrt_pi())).abs() < 1e-12);
    }

    #[test]
    fn integral_rejects_bad_orders() {
        let g = make_grid(1.0_f64, 11).unwrap();
        let p = GridFunction::zeros(g);
        for a in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                frac_integral(&p, a),
                Err(Error::InvalidArgument(_))
            ));
        }
        assert!(frac_integral(&p, 0.5)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn monomial_derivatives() {
        let g = make_grid(1.0_f64, 201).unwrap();
        let half = FractionalOrder::half();
        let rl = frac_derivative_rl(&functions::monomial(1), half, &g).unwrap();
        assert!(
            (rl.get(200) - 2.0 / sqrt_pi()).abs() < 1e-8,
            "{}",
            rl.get(200)
        );
        let cap = frac_derivative_caputo(&functions::monomial(2), half, &g).unwrap();
        assert!((cap.get(200) - 8.0 / (3.0 * sqrt_pi())).abs() < 1e-10);
    }

    #[test]
    fn integer_orders_are_redirected() {
        let g = make_grid(1.0_f64, 11).unwrap();
        let one = FractionalOrder::new(1.0).unwrap();
        let err = frac_derivative_rl(&functions::zero(), one, &g).unwrap_err();
        assert!(err.to_string().contains("integer"));
        assert!(frac_derivative_m(&functions::zero(), one, &g).is_err());
    }

    #[test]
    fn flat_form_requires_flatness() {
        let g = make_grid(1.0_f64, 11).unwrap();
        match frac_derivative_m(&functions::monomial(2), FractionalOrder::half(), &g) {
            Err(Error::Domain(msg)) => assert!(msg.contains("order 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let g = make_grid(2.0_f64, 41).unwrap();
        let nu = FractionalOrder::new(1.5).unwrap();
        let z = functions::zero();
        for d in [
            frac_derivative_rl(&z, nu, &g).unwrap(),
            frac_derivative_caputo(&z, nu, &g).unwrap(),
            frac_derivative_m(&z, nu, &g).unwrap(),
        ] {
            assert!(d.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn richardson_removes_even_error_terms() {
        // f(δ) = 1 + δ² + δ⁴ + δ⁶ sampled at δ = 1, 1/2, 1/4, 1/8
        let table: Vec<Vec<f64>> = (0..4)
            .map(|l| {
                let d = 0.5f64.powi(l);
                vec![1.0 + d * d + d.powi(4) + d.powi(6)]
            })
            .collect();
        assert!((richardson(table)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_derivatives_are_exact_on_quadratics() {
        let h = 0.1;
        let v: Vec<f64> = (0..8)
            .map(|i| {
                let t = i as f64 * h;
                3.0 * t * t - t + 2.0
            })
            .collect();
        for (i, d) in grid_derivative(&v, h, 1).iter().enumerate() {
            assert!((d - (6.0 * i as f64 * h - 1.0)).abs() < 1e-12);
        }
        for d in grid_derivative(&v, h, 2) {
            assert!((d - 6.0).abs() < 1e-9);
        }
    }
}
