//! Holmgren growth classes `H(γ₁, γ₂, C)`: functions with
//! `sup_{[0, 2γ₂]} |φ⁽ⁿ⁾| < C·(2n)!/γ₁^{2n}` for every `n`.
//!
//! Membership of the sensor data in such a class makes the heat series
//! converge for `|x₀ − x| < √(2/5)·γ₁`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::sampled::{sample, DerivativeOracle, TimeGrid};
use crate::scalar::Scalar;
use crate::special::factorial;

const GAMMA1_MIN: f64 = 1e-6;
const GAMMA1_MAX: f64 = 1e6;

/// Whether a class was fitted to sampled derivatives or supplied by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassLabel {
    Empirical,
    Asserted,
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassLabel::Empirical => "empirical",
            ClassLabel::Asserted => "asserted",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolmgrenClass<F> {
    pub gamma1: F,
    pub gamma2: F,
    pub c: F,
    pub label: ClassLabel,
}

impl<F: Scalar> HolmgrenClass<F> {
    /// A user-supplied class.
    pub fn asserted(gamma1: F, gamma2: F, c: F) -> Result<Self> {
        for (name, v) in [("gamma1", gamma1), ("gamma2", gamma2), ("C", c)] {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            gamma1,
            gamma2,
            c,
            label: ClassLabel::Asserted,
        })
    }

    /// `C·(2n)!/γ₁^{2n}`.
    pub fn bound(&self, n: usize) -> F {
        self.c * factorial::<F>(2 * n) / self.gamma1.powi(2 * n as i32)
    }

    /// True when `sup_norms[n] < bound(n)` for every listed order.
    pub fn satisfied_by(&self, sup_norms: &[F]) -> bool {
        sup_norms
            .iter()
            .enumerate()
            .all(|(n, &s)| s < self.bound(n))
    }
}

/// `S_n = max |φ⁽ⁿ⁾(t_i)|` over nodes with `t_i <= 2γ₂`, for `n = 0..=n_max`.
pub fn derivative_sup_norms<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    n_max: usize,
    gamma2: F,
    grid: &TimeGrid<F>,
) -> Result<Vec<F>> {
    if !(gamma2 > F::zero()) {
        return Err(invalid("gamma2 must be positive"));
    }
    let window_end = F::lit(2.0) * gamma2;
    let slack = grid.step() * F::lit(1e-9);
    if grid.t_end() + slack < window_end {
        return Err(invalid(format!(
            "grid ends at {} but the class window is [0, {window_end}]",
            grid.t_end()
        )));
    }
    let window = grid.window(F::zero(), window_end);
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let s = sample(oracle, n, grid)?;
            Ok(s.max_abs_on(window.clone()))
        })
        .collect()
}

/// Fits a class to sampled derivatives of orders `0..=n_max`.
///
/// `γ₁ = min_{n≥1} ((2n)!·C₀/S_n)^{1/(2n)}` with `C₀ = max(S₀, 1e−300)`,
/// clamped to `[1e−6, 1e6]`; then `C` is the smallest amplitude that keeps
/// every sampled order strictly inside the bound. The result is labelled
/// [`ClassLabel::Empirical`].
pub fn estimate_class<F: Scalar>(
    oracle: &dyn DerivativeOracle<F>,
    n_max: usize,
    gamma2: F,
    grid: &TimeGrid<F>,
) -> Result<HolmgrenClass<F>> {
    let sup = derivative_sup_norms(oracle, n_max, gamma2, grid)?;
    fit_class(&sup, gamma2)
}

/// The fit of [`estimate_class`] applied to given sup norms.
pub fn fit_class<F: Scalar>(sup_norms: &[F], gamma2: F) -> Result<HolmgrenClass<F>> {
    let s: Vec<f64> = sup_norms.iter().map(|v| v.as_f64()).collect();
    if s.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate(
            "all sampled derivatives vanish; gamma1 is unbounded".into(),
        ));
    }
    let c0 = s[0].max(1e-300);
    let mut gamma1 = f64::INFINITY;
    for (n, &sn) in s.iter().enumerate().skip(1) {
        if sn > 0.0 {
            let g = (factorial::<f64>(2 * n) * c0 / sn).powf(1.0 / (2 * n) as f64);
            gamma1 = gamma1.min(g);
        }
    }
    let gamma1 = gamma1.clamp(GAMMA1_MIN, GAMMA1_MAX);
    let c = s
        .iter()
        .enumerate()
        .map(|(n, &sn)| sn * gamma1.powi(2 * n as i32) / factorial::<f64>(2 * n))
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let mut class = HolmgrenClass {
        gamma1: F::lit(gamma1),
        gamma2,
        c: F::lit(c),
        label: ClassLabel::Empirical,
    };
    // Nudge C up until the strict bound holds in the working precision.
    let mut tries = 0;
    while !class.satisfied_by(sup_norms) {
        class.c = class.c * (F::one() + F::epsilon() * F::lit(16.0));
        tries += 1;
        if tries > 64 {
            return Err(Error::Degenerate("could not fit a class amplitude".into()));
        }
    }
    Ok(class)
}

fn sqrt_two_fifths<F: Scalar>() -> F {
    F::lit(0.4).sqrt()
}

/// Class of `φ'` given the class of `φ`: `(√(2/5)·γ₁, γ₂, (24/5)·C/γ₁²)`.
pub fn propagate_derivative<F: Scalar>(h: &HolmgrenClass<F>) -> HolmgrenClass<F> {
    HolmgrenClass {
        gamma1: sqrt_two_fifths::<F>() * h.gamma1,
        gamma2: h.gamma2,
        c: F::lit(4.8) * h.c / (h.gamma1 * h.gamma1),
        label: h.label,
    }
}

/// Class of `∂^{1/2}φ` for flat `φ`:
/// `(√(2/5)·γ₁, γ₂, 48√(2γ₂)/(5√π)·C/γ₁²)`.
pub fn propagate_half_derivative<F: Scalar>(h: &HolmgrenClass<F>) -> HolmgrenClass<F> {
    let factor = F::lit(48.0) * (F::lit(2.0) * h.gamma2).sqrt() / (F::lit(5.0) * F::PI().sqrt());
    HolmgrenClass {
        gamma1: sqrt_two_fifths::<F>() * h.gamma1,
        gamma2: h.gamma2,
        c: factor * h.c / (h.gamma1 * h.gamma1),
        label: h.label,
    }
}

/// Guaranteed convergence radius `√(2/5)·γ₁` of the heat series.
pub fn convergence_radius<F: Scalar>(h: &HolmgrenClass<F>) -> F {
    sqrt_two_fifths::<F>() * h.gamma1
}

/// Verdict of [`covers_origin`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage<F> {
    /// `x₀` lies strictly inside the radius, so the series converges on `[0, x₀]`.
    pub covers: bool,
    pub radius: F,
    /// Left end of the guaranteed interval `(x₀ − r, x₀]`, floored at 0.
    pub convergent_from: F,
}

/// Whether the series anchored at `x₀` is guaranteed to converge down to `x = 0`.
pub fn covers_origin<F: Scalar>(x0: F, h: &HolmgrenClass<F>) -> Result<Coverage<F>> {
    if !(x0 > F::zero()) {
        return Err(invalid(format!(
            "sensor position must be positive, got {x0}"
        )));
    }
    let radius = convergence_radius(h);
    Ok(Coverage {
        covers: x0 < radius,
        radius,
        convergent_from: (x0 - radius).max(F::zero()),
    })
}

/// Checks `(2j+1)(2j+2) <= 2β(6/β)^j` for `j = 0..=j_max`, `1 <= β <= 12/5`.
///
/// Equality holds at several points of the range (for instance `β = 1`,
/// `j = 0, 1` and `β = 12/5`, `j = 2`), so the right side is granted a
/// relative slack of a few units in the last place.
pub fn check_factorial_inequality(beta: f64, j_max: usize) -> Result<bool> {
    let upper = 12.0 / 5.0;
    if !(beta >= 1.0 - 1e-12 && beta <= upper + 1e-12) {
        return Err(invalid(format!("beta must lie in [1, 12/5], got {beta}")));
    }
    let slack = 1.0 + 8.0 * f64::EPSILON;
    Ok((0..=j_max).all(|j| {
        let lhs = ((2 * j + 1) * (2 * j + 2)) as f64;
        let rhs = 2.0 * beta * (6.0 / beta).powi(j as i32);
        lhs <= rhs * slack
    }))
}
