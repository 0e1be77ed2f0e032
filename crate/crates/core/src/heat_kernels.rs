//! Heat kernels, their time and space derivatives, and forward solvers.
//!
//! With diffusivity `κ`:
//!
//! - `Φ₁(x,t) = (4πκt)^{-1/2} exp(−x²/(4κt))`, the free-space Gaussian;
//! - `K(x,t) = x/(2√(πκ) t^{3/2}) exp(−x²/(4κt)) = −2κ ∂ₓΦ₁(x,t)`, the
//!   boundary-to-interior kernel of the half line;
//! - `N(x,y,t) = Φ₁(x−y,t) − Φ₁(x+y,t)`, the zero-Dirichlet image kernel.
//!
//! All kernels are 0 at `t = 0`. Spatial derivatives of `Φ₁` come from the
//! Hermite recurrence and time derivatives from `∂ₜΦ₁ = κ∂ₓ²Φ₁`. Kernel
//! arithmetic runs in `f64` whatever the caller's scalar type.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fractional::{frac_derivative_m_with, FracOptions, ResidualReport};
use crate::quadrature::trapezoid_convolution;
use crate::sampled::{
    sample, DerivativeOracle, FractionalOrder, GridFunction, Provenance, TimeGrid,
};
use crate::scalar::Scalar;
use crate::special::erfc;

/// Highest time-derivative order served by the superposition oracles.
pub const DIRECT_HEAT_MAX_ORDER: usize = 12;

/// Simpson nodes across the support of initial data.
pub const SIMPSON_NODES: usize = 2001;

/// Beyond this `z² = x²/(4κt)` every derivative of `Φ₁` underflows.
const Z2_CUTOFF: f64 = 2000.0;

/// Thermal diffusivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams<F> {
    kappa: F,
}

impl<F: Scalar> KernelParams<F> {
    pub fn new(kappa: F) -> Result<Self> {
        if !(kappa > F::zero()) || !kappa.is_finite() {
            return Err(invalid(format!(
                "diffusivity must be positive, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }

    pub fn unit() -> Self {
        Self { kappa: F::one() }
    }

    pub fn kappa(&self) -> F {
        self.kappa
    }
}

impl<F: Scalar> Default for KernelParams<F> {
    fn default() -> Self {
        Self::unit()
    }
}

/// `∂ₓⁿΦ₁(x,t) = (−s)ⁿ Hₙ(xs) Φ₁(x,t)` with `s = (4κt)^{-1/2}`.
fn phi1_dx_f64(n: usize, x: f64, t: f64, kappa: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let s = 1.0 / (4.0 * kappa * t).sqrt();
    let z = x * s;
    let z2 = z * z;
    if z2 > Z2_CUTOFF {
        return 0.0;
    }
    let h = hermite(n, z);
    if h == 0.0 {
        return 0.0;
    }
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    let log_mag = n as f64 * s.ln() - z2 - 0.5 * (4.0 * std::f64::consts::PI * kappa * t).ln();
    sign * h * log_mag.exp()
}

/// Physicists' Hermite polynomial `Hₙ(z)`.
fn hermite(n: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * z);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * z * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn require_positive_x<F: Scalar>(x: F) -> Result<()> {
    if !(x > F::zero()) || !x.is_finite() {
        return Err(invalid(format!(
            "kernel position must be positive, got x = {x}"
        )));
    }
    Ok(())
}

/// `K(x,t)`; rejects `x <= 0`.
pub fn eval_k<F: Scalar>(x: F, t: F, p: KernelParams<F>) -> Result<F> {
    require_positive_x(x)?;
    let (x, t, kappa) = (x.as_f64(), t.as_f64(), p.kappa.as_f64());
    if !(t > 0.0) {
        return Ok(F::zero());
    }
    let log_mag = x.ln()
        - (2.0 * (std::f64::consts::PI * kappa).sqrt()).ln()
        - 1.5 * t.ln()
        - x * x / (4.0 * kappa * t);
    Ok(F::lit(log_mag.exp()))
}

/// `Φ₁(x,t)`, taken as 0 at `t = 0` including the singular point `x = 0`.
pub fn eval_phi1<F: Scalar>(x: F, t: F, p: KernelParams<F>) -> F {
    F::lit(phi1_dx_f64(0, x.as_f64(), t.as_f64(), p.kappa.as_f64()))
}

/// `N(x,y,t) = Φ₁(x−y,t) − Φ₁(x+y,t)`.
pub fn eval_n<F: Scalar>(x: F, y: F, t: F, p: KernelParams<F>) -> F {
    eval_phi1(x - y, t, p) - eval_phi1(x + y, t, p)
}

/// `∂ₓⁿΦ₁(x,t)`.
pub fn phi1_dx<F: Scalar>(n: usize, x: F, t: F, p: KernelParams<F>) -> F {
    F::lit(phi1_dx_f64(n, x.as_f64(), t.as_f64(), p.kappa.as_f64()))
}

/// `∂ₜᵏ∂ₓʲΦ₁(x,t) = κᵏ ∂ₓ^{2k+j}Φ₁(x,t)`.
pub fn phi1_dt_dx<F: Scalar>(k: usize, j: usize, x: F, t: F, p: KernelParams<F>) -> F {
    let kappa = p.kappa.as_f64();
    F::lit(kappa.powi(k as i32) * phi1_dx_f64(2 * k + j, x.as_f64(), t.as_f64(), kappa))
}

/// `∂ₜᵏ∂ₓʲK(x,t) = −2κ^{k+1} ∂ₓ^{2k+j+1}Φ₁(x,t)`.
pub fn kernel_dt_dx<F: Scalar>(k: usize, j: usize, x: F, t: F, p: KernelParams<F>) -> Result<F> {
    require_positive_x(x)?;
    let kappa = p.kappa.as_f64();
    let v =
        -2.0 * kappa.powi(k as i32 + 1) * phi1_dx_f64(2 * k + j + 1, x.as_f64(), t.as_f64(), kappa);
    Ok(F::lit(v))
}

/// `∂ₓK(x,t)`.
pub fn kernel_dx<F: Scalar>(x: F, t: F, p: KernelParams<F>) -> Result<F> {
    kernel_dt_dx(0, 1, x, t, p)
}

/// `t ↦ ∂ₓʲK(x,t)` for fixed `x > 0`, with all time derivatives.
#[derive(Clone, Copy, Debug)]
pub struct KernelOracle<F> {
    x: F,
    space_order: usize,
    params: KernelParams<F>,
}

impl<F: Scalar> KernelOracle<F> {
    pub fn new(x: F, params: KernelParams<F>) -> Result<Self> {
        Self::with_space_order(x, 0, params)
    }

    /// The oracle of `∂ₓʲK(x,·)`.
    pub fn with_space_order(x: F, space_order: usize, params: KernelParams<F>) -> Result<Self> {
        require_positive_x(x)?;
        Ok(Self {
            x,
            space_order,
            params,
        })
    }
}

impl<F: Scalar> DerivativeOracle<F> for KernelOracle<F> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        kernel_dt_dx(order, self.space_order, self.x, t, self.params)
    }
}

/// `t ↦ Φ₁(x,t)` for fixed `x ≠ 0`.
#[derive(Clone, Copy, Debug)]
pub struct Phi1Oracle<F> {
    x: F,
    params: KernelParams<F>,
}

impl<F: Scalar> Phi1Oracle<F> {
    pub fn new(x: F, params: KernelParams<F>) -> Result<Self> {
        if x == F::zero() {
            return Err(invalid("Φ₁(0,·) is not flat at t = 0"));
        }
        Ok(Self { x, params })
    }
}

impl<F: Scalar> DerivativeOracle<F> for Phi1Oracle<F> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        Ok(phi1_dt_dx(order, 0, self.x, t, self.params))
    }
}

/// Flux identity `∂ₓK(x,·) = −κ^{-1/2} ∂ₜ^{1/2}K(x,·)`: the left side is
/// analytic, the right side the flat-form half derivative.
pub fn kernel_flux_identity_check<F: Scalar>(
    x: F,
    grid: &TimeGrid<F>,
    p: KernelParams<F>,
) -> Result<ResidualReport<F>> {
    kernel_flux_identity_check_with(x, F::one(), grid, p, &FracOptions::default())
}

/// [`kernel_flux_identity_check`] for the scaled kernel `c·K(x,·)`.
pub fn kernel_flux_identity_check_with<F: Scalar>(
    x: F,
    scale: F,
    grid: &TimeGrid<F>,
    p: KernelParams<F>,
    opts: &FracOptions<F>,
) -> Result<ResidualReport<F>> {
    let k = crate::sampled::Scaled::new(KernelOracle::new(x, p)?, scale);
    let kx = crate::sampled::Scaled::new(KernelOracle::with_space_order(x, 1, p)?, scale);
    let lhs = sample(&kx, 0, grid)?;
    let half = frac_derivative_m_with(&k, FractionalOrder::half(), grid, opts)?;
    let rhs = half.scale(-F::one() / p.kappa.sqrt())?;
    Ok(ResidualReport::new(lhs, rhs))
}

/// `g(t) = ∫₀ᵗ K(dx, t−τ) u(τ) dτ` on the grid of `u`.
///
/// The kernel is integrated exactly against the piecewise-linear interpolant
/// of `u`, so the rule stays accurate when `K(dx,·)` is much sharper than the
/// grid (small `dx`).
pub fn forward_volterra<F: Scalar>(
    u: &GridFunction<F>,
    dx: F,
    p: KernelParams<F>,
) -> Result<GridFunction<F>> {
    if !(dx > F::zero()) || !dx.is_finite() {
        return Err(invalid(format!("dx must be positive, got {dx}")));
    }
    let grid = *u.grid();
    let n = grid.len();
    let h = grid.step().as_f64();
    let x = dx.as_f64();
    let kappa = p.kappa.as_f64();
    let a = x * x / (4.0 * kappa);
    let c = x / (2.0 * (std::f64::consts::PI * kappa).sqrt());
    // Antiderivatives of K(x,·) and s·K(x,·) from 0.
    let a0 = |s: f64| {
        if s > 0.0 {
            erfc(x / (2.0 * (kappa * s).sqrt()))
        } else {
            0.0
        }
    };
    let a1 = |s: f64| {
        if s > 0.0 {
            c * (2.0 * s.sqrt() * (-a / s).exp()
                - 2.0 * (std::f64::consts::PI * a).sqrt() * erfc((a / s).sqrt()))
        } else {
            0.0
        }
    };
    let s_at = |l: usize| l as f64 * h;
    let prim: Vec<(f64, f64)> = (0..n).map(|l| (a0(s_at(l)), a1(s_at(l)))).collect();
    // Cell [s_l, s_{l+1}]: `left[l]` weights u at the near end (τ = t − s_l),
    // `right[l]` at the far end.
    let mut left = vec![0.0; n.saturating_sub(1)];
    let mut right = vec![0.0; n.saturating_sub(1)];
    for l in 0..n - 1 {
        let i0 = prim[l + 1].0 - prim[l].0;
        let i1 = prim[l + 1].1 - prim[l].1;
        left[l] = (s_at(l + 1) * i0 - i1) / h;
        right[l] = (i1 - s_at(l) * i0) / h;
    }
    let uv: Vec<f64> = u.values().iter().map(|v| v.as_f64()).collect();
    let values = (0..n)
        .into_par_iter()
        .map(|m| {
            let mut acc = 0.0;
            for d in 0..m {
                let w = left[d] + if d >= 1 { right[d - 1] } else { 0.0 };
                acc += w * uv[m - d];
            }
            if m >= 1 {
                acc += right[m - 1] * uv[0];
            }
            F::lit(acc)
        })
        .collect();
    GridFunction::new(grid, values)
}

/// Which semigroup relation [`kernel_semigroup_check`] tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemigroupVariant {
    /// `∫₀ᵗ K(x′−x, t−τ) Φ₁(x−y, τ) dτ = Φ₁(x′−y, t)`.
    Gaussian,
    /// `∫₀ᵗ K(x′−x, t−τ) K(x−y, τ) dτ = K(x′−y, t)`.
    Kernel,
}

/// Convolves sampled kernels by trapezoid and compares with the closed form.
pub fn kernel_semigroup_check<F: Scalar>(
    x_prime: F,
    x: F,
    y: F,
    grid: &TimeGrid<F>,
    p: KernelParams<F>,
    variant: SemigroupVariant,
) -> Result<ResidualReport<F>> {
    if !(x_prime > x && x > y) {
        return Err(invalid(format!(
            "semigroup check needs x' > x > y, got ({x_prime}, {x}, {y})"
        )));
    }
    let outer = sample(&KernelOracle::new(x_prime - x, p)?, 0, grid)?;
    let (inner, exact): (GridFunction<F>, GridFunction<F>) = match variant {
        SemigroupVariant::Gaussian => (
            sample(&Phi1Oracle::new(x - y, p)?, 0, grid)?,
            sample(&Phi1Oracle::new(x_prime - y, p)?, 0, grid)?,
        ),
        SemigroupVariant::Kernel => (
            sample(&KernelOracle::new(x - y, p)?, 0, grid)?,
            sample(&KernelOracle::new(x_prime - y, p)?, 0, grid)?,
        ),
    };
    let conv = trapezoid_convolution(outer.values(), inner.values(), grid.step());
    Ok(ResidualReport::new(GridFunction::new(*grid, conv)?, exact))
}

/// A bounded profile with compact support `[lo, hi]`, pre-tabulated for
/// composite Simpson quadrature.
#[derive(Clone)]
pub struct InitialData {
    lo: f64,
    hi: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    nodes: Arc<Vec<(f64, f64)>>,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl InitialData {
    /// Profile `f` on `[lo, hi]`, zero outside.
    pub fn new(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("bad support [{lo}, {hi}]")));
        }
        let m = SIMPSON_NODES - 1;
        let step = (hi - lo) / m as f64;
        let mut nodes = Vec::new();
        for j in 0..=m {
            let y = if j == m { hi } else { lo + j as f64 * step };
            let v = f(y);
            if !v.is_finite() {
                return Err(invalid(format!("profile is not finite at y = {y}")));
            }
            let w = match j {
                0 => 1.0,
                _ if j == m => 1.0,
                _ if j % 2 == 1 => 4.0,
                _ => 2.0,
            } * step
                / 3.0;
            if v != 0.0 {
                nodes.push((y, w * v));
            }
        }
        Ok(Self {
            lo,
            hi,
            profile: Arc::new(f),
            nodes: Arc::new(nodes),
        })
    }

    pub fn zero() -> Self {
        Self::new(-1.0, 0.0, |_| 0.0).expect("valid support")
    }

    /// `g₀(y) = exp(−1/(1−(y+2)²))` on `(−3, −1)`.
    pub fn reference_bump() -> Self {
        Self::new(-3.0, -1.0, |y| {
            let r = 1.0 - (y + 2.0) * (y + 2.0);
            if r > 0.0 {
                (-1.0 / r).exp()
            } else {
                0.0
            }
        })
        .expect("valid support")
    }

    /// Smooth bump of half-width `w` centred at `c`.
    pub fn bump(c: f64, w: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(invalid("bump width must be positive"));
        }
        Self::new(c - w, c + w, move |y| {
            let u = (y - c) / w;
            let r = 1.0 - u * u;
            if r > 0.0 {
                (-1.0 / r).exp()
            } else {
                0.0
            }
        })
    }

    /// Constant `value` on `[y_min, 0]`.
    pub fn constant(value: f64, y_min: f64) -> Result<Self> {
        Self::new(y_min, 0.0, move |_| value)
    }

    /// The same profile cut to `[lo, hi] ∩ support`, `None` when empty.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Option<Self>> {
        let (a, b) = (lo.max(self.lo), hi.min(self.hi));
        if !(a < b) {
            return Ok(None);
        }
        let f = Arc::clone(&self.profile);
        Self::new(a, b, move |y| f(y)).map(Some)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn value(&self, y: f64) -> f64 {
        if y < self.lo || y > self.hi {
            0.0
        } else {
            (self.profile)(y)
        }
    }

    /// `∫ ∂ₓ^j Φ₁(x − y, t) g(y) dy`, optionally minus the image term
    /// `∫ ∂ₓ^j Φ₁(x + y, t) g(y) dy`.
    fn superpose(&self, j: usize, x: f64, t: f64, kappa: f64, mirror: bool) -> f64 {
        let mut acc = 0.0;
        for &(y, wv) in self.nodes.iter() {
            let mut v = phi1_dx_f64(j, x - y, t, kappa);
            if mirror {
                v -= phi1_dx_f64(j, x + y, t, kappa);
            }
            acc += wv * v;
        }
        acc
    }
}

/// Which solution of the heat equation a [`DirectHeatOracle`] samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatSolution {
    /// Whole line, initial data supported in `y < 0`.
    FreeSpace,
    /// Half line `x > 0` with `u(0,t) = 0`, initial data supported in `y > 0`.
    ZeroDirichlet,
}

fn require_left_support(g0: &InitialData) -> Result<()> {
    if g0.hi > 0.0 {
        return Err(invalid("initial data must vanish for y >= 0"));
    }
    Ok(())
}

fn require_positive_t<F: Scalar>(t: F) -> Result<()> {
    if !(t > F::zero()) {
        return Err(invalid(format!(
            "the solution is defined for t > 0, got {t}"
        )));
    }
    Ok(())
}

/// `u(x,t) = ∫ Φ₁(x−y,t) g₀(y) dy` by Simpson over the support of `g₀`.
pub fn direct_heat_u<F: Scalar>(g0: &InitialData, x: F, t: F, p: KernelParams<F>) -> Result<F> {
    direct_heat_dt(g0, x, t, 0, p)
}

/// `∂ₜᵏ u(x,t)`, by differentiating `Φ₁` under the integral.
pub fn direct_heat_dt<F: Scalar>(
    g0: &InitialData,
    x: F,
    t: F,
    k: usize,
    p: KernelParams<F>,
) -> Result<F> {
    direct_heat_derivative(g0, x, t, k, 0, p)
}

/// `∂ₜᵏ∂ₓʲ u(x,t)`.
pub fn direct_heat_derivative<F: Scalar>(
    g0: &InitialData,
    x: F,
    t: F,
    k: usize,
    j: usize,
    p: KernelParams<F>,
) -> Result<F> {
    require_left_support(g0)?;
    require_positive_x(x)?;
    require_positive_t(t)?;
    if k > DIRECT_HEAT_MAX_ORDER {
        return Err(Error::Capability {
            requested: k,
            max: DIRECT_HEAT_MAX_ORDER,
        });
    }
    let kappa = p.kappa.as_f64();
    Ok(F::lit(
        kappa.powi(k as i32) * g0.superpose(2 * k + j, x.as_f64(), t.as_f64(), kappa, false),
    ))
}

/// `t ↦ ∂ₓʲu(x,t)` for a heat solution built from initial data, as an
/// oracle with time derivatives up to [`DIRECT_HEAT_MAX_ORDER`]. Values at
/// `t <= 0` are 0.
#[derive(Clone, Debug)]
pub struct DirectHeatOracle<F> {
    data: InitialData,
    x: F,
    space_order: usize,
    params: KernelParams<F>,
    solution: HeatSolution,
}

impl<F: Scalar> DirectHeatOracle<F> {
    /// Free-space solution with data supported in `y < 0`, observed at `x > 0`.
    pub fn new(data: InitialData, x: F, params: KernelParams<F>) -> Result<Self> {
        require_left_support(&data)?;
        require_positive_x(x)?;
        Ok(Self {
            data,
            x,
            space_order: 0,
            params,
            solution: HeatSolution::FreeSpace,
        })
    }

    /// Half-line solution with `u(0,t) = 0` and data supported in `y > 0`,
    /// observed at `x >= 0`.
    pub fn zero_dirichlet(data: InitialData, x: F, params: KernelParams<F>) -> Result<Self> {
        if data.lo < 0.0 {
            return Err(invalid("half-line initial data must vanish for y < 0"));
        }
        if !(x >= F::zero()) {
            return Err(invalid("position must be on the half line"));
        }
        Ok(Self {
            data,
            x,
            space_order: 0,
            params,
            solution: HeatSolution::ZeroDirichlet,
        })
    }

    /// The oracle of `∂ₓʲu(x,·)` instead of `u(x,·)`.
    pub fn space_derivative(mut self, j: usize) -> Self {
        self.space_order = j;
        self
    }

    pub fn x(&self) -> F {
        self.x
    }
}

impl<F: Scalar> DerivativeOracle<F> for DirectHeatOracle<F> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        crate::sampled::ensure_order(self, order)?;
        if !(t > F::zero()) {
            return Ok(F::zero());
        }
        let kappa = self.params.kappa.as_f64();
        let mirror = self.solution == HeatSolution::ZeroDirichlet;
        let v = kappa.powi(order as i32)
            * self.data.superpose(
                2 * order + self.space_order,
                self.x.as_f64(),
                t.as_f64(),
                kappa,
                mirror,
            );
        Ok(F::lit(v))
    }

    fn max_order(&self) -> Option<usize> {
        Some(DIRECT_HEAT_MAX_ORDER)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Computed
    }
}

/// `2∫ ∂ₜᵏΦ₁(x − y, t) ψ(y) dy`; used to correct sensor data for an initial
/// distribution to the right of the sensor.
pub(crate) fn gaussian_mass<F: Scalar>(
    data: &InitialData,
    x: F,
    k: usize,
    t: F,
    p: KernelParams<F>,
) -> F {
    if !(t > F::zero()) {
        return F::zero();
    }
    let kappa = p.kappa.as_f64();
    F::lit(2.0 * kappa.powi(k as i32) * data.superpose(2 * k, x.as_f64(), t.as_f64(), kappa, false))
}
