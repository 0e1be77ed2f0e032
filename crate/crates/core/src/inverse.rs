//! The sideways heat problem: from the temperature `g(t) = u(x₀,t)` at a
//! sensor, recover the flux there and the temperature on `0 <= x <= x₀`.
//!
//! The reconstruction is
//!
//! ```text
//! u(x,t) = Σₙ cₙ(t) (x₀ − x)ⁿ / (n! κ^{n/2}),   cₙ = ∂ₜ^{n/2} g,
//! ```
//!
//! with even coefficients `c_{2k} = g⁽ᵏ⁾` read from the oracle and odd ones
//! `c_{2k+1} = ∂^{1/2} g⁽ᵏ⁾` from the flat-form half derivative of the
//! shifted oracle.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fractional::{frac_derivative_m_with, grid_derivative, FracOptions};
use crate::heat_kernels::{forward_volterra, gaussian_mass, InitialData, KernelParams};
use crate::holmgren::{convergence_radius, estimate_class, HolmgrenClass};
use crate::sampled::{
    ensure_order, require_m_membership, sample, DerivativeOracle, FractionalOrder, GridFunction,
    Provenance, Shifted, TimeGrid, SPLINE_RELIABLE_ORDER,
};
use crate::scalar::{KahanSum, Scalar};
use crate::special::factorial;

/// Default truncation order of the series.
pub const DEFAULT_TRUNCATION: usize = 8;

/// Coefficients `c₀..c_N` of the heat series anchored at `x₀`.
#[derive(Clone, Debug)]
pub struct SeriesSolution<F> {
    pub x0: F,
    pub kappa: F,
    pub coefficients: Vec<GridFunction<F>>,
    pub provenance: Vec<Provenance>,
}

impl<F: Scalar> SeriesSolution<F> {
    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        self.coefficients[0].grid()
    }

    fn check_x(&self, x: F) -> Result<F> {
        if !(x >= F::zero() && x <= self.x0) {
            return Err(invalid(format!(
                "x = {x} lies outside [0, x0 = {}]; use extend_beyond_sensor past the sensor",
                self.x0
            )));
        }
        Ok(self.x0 - x)
    }

    /// Scale `rⁿ/(n! κ^{n/2})` of the `n`-th term at distance `r`.
    fn term_scale(&self, n: usize, r: F) -> F {
        r.powi(n as i32) / (factorial::<F>(n) * self.kappa.powf(F::lit(n as f64 / 2.0)))
    }

    /// Partial sum through order `n_terms` at position `x`.
    pub fn partial_sum(&self, x: F, n_terms: usize) -> Result<GridFunction<F>> {
        let r = self.check_x(x)?;
        let n_terms = n_terms.min(self.order());
        let scales: Vec<F> = (0..=n_terms).map(|n| self.term_scale(n, r)).collect();
        let grid = *self.grid();
        let values = (0..grid.len())
            .map(|i| {
                let mut acc = KahanSum::default();
                for (n, s) in scales.iter().enumerate() {
                    acc.add(self.coefficients[n].get(i) * *s);
                }
                acc.value()
            })
            .collect();
        GridFunction::new(grid, values)
    }

    /// Term magnitudes `|cₙ(t)| rⁿ/(n! κ^{n/2})` at grid node `i`.
    pub fn term_magnitudes(&self, x: F, i: usize) -> Result<Vec<F>> {
        let r = self.check_x(x)?;
        Ok((0..=self.order())
            .map(|n| (self.coefficients[n].get(i) * self.term_scale(n, r)).abs())
            .collect())
    }

    /// `∂ₜw − κ∂ₓ²w` for the partial sum `w` through order `n_terms`: the
    /// space derivative is exact, the time derivative a grid difference.
    pub fn heat_residual(&self, x: F, n_terms: usize) -> Result<GridFunction<F>> {
        let r = self.check_x(x)?;
        let n_terms = n_terms.min(self.order());
        let w = self.partial_sum(x, n_terms)?;
        let grid = *self.grid();
        let dt = grid_derivative(w.values(), grid.step(), 1);
        // κ∂ₓ² of cₙ rⁿ/(n! κ^{n/2}) is c_n r^{n−2}/((n−2)! κ^{(n−2)/2}).
        let values = (0..grid.len())
            .map(|i| {
                let mut acc = KahanSum::default();
                for n in 2..=n_terms {
                    acc.add(self.coefficients[n].get(i) * self.term_scale(n - 2, r));
                }
                dt[i] - acc.value()
            })
            .collect();
        GridFunction::new(grid, values)
    }
}

/// Per-term magnitudes and divergence diagnostics of a reconstruction.
#[derive(Clone, Debug)]
pub struct ConvergenceReport<F> {
    pub x: F,
    pub sample_times: Vec<F>,
    /// `magnitudes[j][n]` is the size of term `n` at `sample_times[j]`.
    pub magnitudes: Vec<Vec<F>>,
    /// Geometric extrapolation of the truncated tail per sample time
    /// (infinite when the last terms do not shrink).
    pub tail_estimates: Vec<F>,
    /// Grid nodes where the last three terms grow.
    pub divergent_nodes: Vec<usize>,
    /// Radius `√(2/5)·γ₁` from a fitted class, when one was computed.
    pub holmgren: Option<(HolmgrenClass<F>, F)>,
    pub warnings: Vec<String>,
}

impl<F: Scalar> ConvergenceReport<F> {
    /// Whether the tail at sample time `j` shrinks: grouping terms in pairs
    /// `(a_{N−1}, a_N), (a_{N−3}, a_{N−2}), (a_{N−5}, a_{N−4})`, the pair
    /// maxima decrease strictly. Pairs absorb isolated dips where a single
    /// derivative of the data crosses zero.
    pub fn eventually_decreasing(&self, j: usize) -> bool {
        eventually_decreasing(&self.magnitudes[j])
    }

    pub fn diverging(&self) -> bool {
        !self.divergent_nodes.is_empty()
    }
}

fn eventually_decreasing<F: Scalar>(a: &[F]) -> bool {
    let n = a.len();
    if n < 6 {
        return false;
    }
    let pair = |k: usize| a[n - 2 - 2 * k].max(a[n - 1 - 2 * k]);
    let (newest, middle, oldest) = (pair(0), pair(1), pair(2));
    (newest < middle && middle < oldest)
        || (oldest == F::zero() && middle == F::zero() && newest == F::zero())
}

fn growing_tail<F: Scalar>(a: &[F]) -> bool {
    let n = a.len();
    n >= 3 && a[n - 3] < a[n - 2] && a[n - 2] < a[n - 1]
}

fn tail_estimate<F: Scalar>(a: &[F]) -> F {
    let n = a.len();
    if n < 3 || a[n - 1] == F::zero() {
        return F::zero();
    }
    if a[n - 3] == F::zero() {
        return F::infinity();
    }
    let q = (a[n - 1] / a[n - 3]).sqrt();
    if q < F::one() {
        a[n - 1] * q / (F::one() - q)
    } else {
        F::infinity()
    }
}

/// Options for [`reconstruct_with`].
#[derive(Clone, Debug)]
pub struct ReconstructOptions<F> {
    pub frac: FracOptions<F>,
    /// Times at which term magnitudes are reported; default `T/4, T/2, T`.
    pub sample_times: Option<Vec<F>>,
    /// Fit a Holmgren class (orders `0..=6`, `γ₂ = T/2`) when divergence is seen.
    pub holmgren_on_divergence: bool,
}

impl<F: Scalar> Default for ReconstructOptions<F> {
    fn default() -> Self {
        Self {
            frac: FracOptions::default(),
            sample_times: None,
            holmgren_on_divergence: true,
        }
    }
}

fn check_sensor<F: Scalar>(x0: F, kappa: F) -> Result<()> {
    if !(x0 > F::zero()) || !x0.is_finite() {
        return Err(invalid(format!(
            "sensor position must be positive, got {x0}"
        )));
    }
    if !(kappa > F::zero()) || !kappa.is_finite() {
        return Err(invalid(format!(
            "diffusivity must be positive, got {kappa}"
        )));
    }
    Ok(())
}

/// Builds `c₀..c_N` for data `g`.
pub fn build_series<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    x0: F,
    grid: &TimeGrid<F>,
    n: usize,
    kappa: F,
    opts: &FracOptions<F>,
) -> Result<SeriesSolution<F>> {
    check_sensor(x0, kappa)?;
    if n == 0 {
        return Err(invalid("truncation order must be at least 1"));
    }
    // c_{2k} needs g⁽ᵏ⁾; c_{2k+1} needs g⁽ᵏ⁺²⁾.
    let highest = (0..=n)
        .map(|j| if j % 2 == 0 { j / 2 } else { j / 2 + 2 })
        .max()
        .unwrap_or(0);
    ensure_order(g, highest)?;
    if opts.check_membership {
        require_m_membership(g, n.div_ceil(2) + 2, opts.membership_tol)?;
    }
    let inner = FracOptions {
        check_membership: false,
        ..*opts
    };
    let coefficients = (0..=n)
        .into_par_iter()
        .map(|j| {
            let k = j / 2;
            if j % 2 == 0 {
                sample(g, k, grid)
            } else {
                frac_derivative_m_with(&Shifted::new(g, k), FractionalOrder::half(), grid, &inner)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = vec![g.provenance(); n + 1];
    Ok(SeriesSolution {
        x0,
        kappa,
        coefficients,
        provenance,
    })
}

/// Reconstructs `u(x,·)` from sensor data with default options.
pub fn reconstruct<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    x0: F,
    x: F,
    grid: &TimeGrid<F>,
    n: usize,
    kappa: F,
) -> Result<(GridFunction<F>, ConvergenceReport<F>)> {
    reconstruct_with(g, x0, x, grid, n, kappa, &ReconstructOptions::default())
}

pub fn reconstruct_with<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    x0: F,
    x: F,
    grid: &TimeGrid<F>,
    n: usize,
    kappa: F,
    opts: &ReconstructOptions<F>,
) -> Result<(GridFunction<F>, ConvergenceReport<F>)> {
    check_sensor(x0, kappa)?;
    if !(x >= F::zero() && x <= x0) {
        return Err(invalid(format!(
            "x = {x} lies outside [0, x0 = {x0}]; use extend_beyond_sensor past the sensor"
        )));
    }
    let series = build_series(g, x0, grid, n, kappa, &opts.frac)?;
    let u = series.partial_sum(x, n)?;
    let mut report = convergence_report(&series, x, opts.sample_times.as_deref())?;
    if report.diverging() && opts.holmgren_on_divergence {
        attach_holmgren(&mut report, g, grid);
    }
    Ok((u, report))
}

/// Term diagnostics of the series at `x`.
pub fn convergence_report<F: Scalar>(
    series: &SeriesSolution<F>,
    x: F,
    sample_times: Option<&[F]>,
) -> Result<ConvergenceReport<F>> {
    let grid = *series.grid();
    let t_end = grid.t_end();
    let times: Vec<F> = match sample_times {
        Some(ts) => ts.to_vec(),
        None => vec![t_end / F::lit(4.0), t_end / F::lit(2.0), t_end],
    };
    let mut magnitudes = Vec::with_capacity(times.len());
    for &t in &times {
        magnitudes.push(series.term_magnitudes(x, grid.nearest_index(t))?);
    }
    let tail_estimates = magnitudes.iter().map(|a| tail_estimate(a)).collect();
    let mut divergent_nodes = Vec::new();
    for i in 0..grid.len() {
        if growing_tail(&series.term_magnitudes(x, i)?) {
            divergent_nodes.push(i);
        }
    }
    let mut warnings = Vec::new();
    if !divergent_nodes.is_empty() {
        warnings.push(format!(
            "series terms grow over the last three orders at {} grid node(s), first at t = {}",
            divergent_nodes.len(),
            grid.node(divergent_nodes[0])
        ));
    }
    if series.provenance.contains(&Provenance::SplineNumeric)
        && series.order().div_ceil(2) + 2 > SPLINE_RELIABLE_ORDER
    {
        warnings.push(format!(
            "coefficients use spline derivatives above order {SPLINE_RELIABLE_ORDER}; values are unreliable"
        ));
    }
    Ok(ConvergenceReport {
        x,
        sample_times: times,
        magnitudes,
        tail_estimates,
        divergent_nodes,
        holmgren: None,
        warnings,
    })
}

/// Fits a class to `g` over the whole grid and records the radius.
pub fn attach_holmgren<F: Scalar>(
    report: &mut ConvergenceReport<F>,
    g: &dyn DerivativeOracle<F>,
    grid: &TimeGrid<F>,
) {
    let n_max = g.max_order().map_or(6, |m| m.min(6));
    match estimate_class(g, n_max, grid.t_end() / F::lit(2.0), grid) {
        Ok(class) => report.holmgren = Some((class, convergence_radius(&class))),
        Err(e) => report
            .warnings
            .push(format!("no Holmgren class could be fitted: {e}")),
    }
}

/// Flux `∂ₓu(x₀,·) = −κ^{-1/2} ∂ₜ^{1/2} g`.
pub fn recover_flux<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    grid: &TimeGrid<F>,
    kappa: F,
) -> Result<GridFunction<F>> {
    recover_flux_with(g, grid, kappa, &FracOptions::default())
}

pub fn recover_flux_with<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    grid: &TimeGrid<F>,
    kappa: F,
    opts: &FracOptions<F>,
) -> Result<GridFunction<F>> {
    if !(kappa > F::zero()) {
        return Err(invalid(format!(
            "diffusivity must be positive, got {kappa}"
        )));
    }
    frac_derivative_m_with(g, FractionalOrder::half(), grid, opts)?.scale(-F::one() / kappa.sqrt())
}

/// Cauchy series with temperature `h` and flux `f` given at `x = l` (unit
/// diffusivity):
/// `w(x,t) = Σ_{m≤N} h⁽ᵐ⁾ r^{2m}/(2m)! − Σ_{m≤N} f⁽ᵐ⁾ r^{2m+1}/(2m+1)!`, `r = l − x`.
pub fn finite_bar_series<F: Scalar>(
    h: &dyn DerivativeOracle<F>,
    f: &dyn DerivativeOracle<F>,
    l: F,
    x: F,
    grid: &TimeGrid<F>,
    n: usize,
) -> Result<GridFunction<F>> {
    ensure_order(h, n)?;
    ensure_order(f, n)?;
    let hs = (0..=n)
        .map(|m| sample(h, m, grid))
        .collect::<Result<Vec<_>>>()?;
    let fs = (0..=n)
        .map(|m| sample(f, m, grid))
        .collect::<Result<Vec<_>>>()?;
    finite_bar_sum(&hs, &fs, l, x)
}

fn finite_bar_sum<F: Scalar>(
    hs: &[GridFunction<F>],
    fs: &[GridFunction<F>],
    l: F,
    x: F,
) -> Result<GridFunction<F>> {
    if !(l > F::zero()) {
        return Err(invalid(format!("bar length must be positive, got {l}")));
    }
    if !(x >= F::zero() && x <= l) {
        return Err(invalid(format!("x = {x} lies outside [0, {l}]")));
    }
    let r = l - x;
    let grid = *hs[0].grid();
    let scale = |n: usize| r.powi(n as i32) / factorial::<F>(n);
    let values = (0..grid.len())
        .map(|i| {
            let mut acc = KahanSum::default();
            for m in 0..hs.len() {
                acc.add(hs[m].get(i) * scale(2 * m));
                acc.add(-(fs[m].get(i) * scale(2 * m + 1)));
            }
            acc.value()
        })
        .collect();
    GridFunction::new(grid, values)
}

/// Sensor data with the contribution of an initial distribution to the right
/// of the sensor removed: `g̃ = g − 2∫_{x₀}^∞ Φ₁(x₀ − y, t) ψ(y) dy`.
///
/// On `x > x₀` the solution splits into `K(·−x₀)*g` plus the zero-Dirichlet
/// image solution about `x₀`; the latter carries flux `∂^{1/2}` of the
/// Gaussian mass above, hence `∂ₓv(x₀,·) = −∂^{1/2} g̃`.
#[derive(Clone, Debug)]
pub struct CorrectedData<O> {
    g: O,
    psi: Option<InitialData>,
    x0: f64,
}

impl<O> CorrectedData<O> {
    pub fn new(g: O, psi: &InitialData, x0: f64) -> Result<Self> {
        if !(x0 > 0.0) {
            return Err(invalid("sensor position must be positive"));
        }
        Ok(Self {
            g,
            psi: psi.restrict(x0, f64::INFINITY)?,
            x0,
        })
    }
}

impl<F: Scalar, O: DerivativeOracle<F>> DerivativeOracle<F> for CorrectedData<O> {
    fn eval(&self, order: usize, t: F) -> Result<F> {
        let g = self.g.eval(order, t)?;
        Ok(match &self.psi {
            None => g,
            Some(psi) => g - gaussian_mass(psi, F::lit(self.x0), order, t, KernelParams::unit()),
        })
    }

    fn max_order(&self) -> Option<usize> {
        let cap = crate::heat_kernels::DIRECT_HEAT_MAX_ORDER;
        Some(self.g.max_order().map_or(cap, |m| m.min(cap)))
    }

    fn provenance(&self) -> Provenance {
        self.g.provenance()
    }
}

/// Reconstruction with an initial distribution `ψ` on `x >= 0` (unit
/// diffusivity): the Cauchy series with `h = g` and `f = −∂^{1/2} g̃`, summed
/// through `m = N`.
pub fn generalized_reconstruct<F: Scalar>(
    g: &dyn DerivativeOracle<F>,
    psi: &InitialData,
    x0: F,
    x: F,
    grid: &TimeGrid<F>,
    n: usize,
) -> Result<GridFunction<F>> {
    check_sensor(x0, F::one())?;
    let corrected = CorrectedData::new(g, psi, x0.as_f64())?;
    let opts = FracOptions::<F>::default();
    ensure_order(g, n)?;
    ensure_order(&corrected, n + 2)?;
    require_m_membership(&corrected, n + 2, opts.membership_tol).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("corrected data: {msg}")),
        other => other,
    })?;
    let inner = FracOptions {
        check_membership: false,
        ..opts
    };
    let hs = (0..=n)
        .map(|m| sample(g, m, grid))
        .collect::<Result<Vec<_>>>()?;
    let fs = (0..=n)
        .into_par_iter()
        .map(|m| {
            frac_derivative_m_with(
                &Shifted::new(&corrected, m),
                FractionalOrder::half(),
                grid,
                &inner,
            )?
            .scale(-F::one())
        })
        .collect::<Result<Vec<_>>>()?;
    finite_bar_sum(&hs, &fs, x0, x)
}

/// `u(x,·) = ∫₀ᵗ K(x − x₀, t − τ) g(τ) dτ` for `x > x₀`.
pub fn extend_beyond_sensor<F: Scalar>(
    g: &GridFunction<F>,
    x: F,
    x0: F,
    p: KernelParams<F>,
) -> Result<GridFunction<F>> {
    if !(x > x0) {
        return Err(invalid(format!(
            "x = {x} is not beyond the sensor at {x0}; use reconstruct for x <= x0"
        )));
    }
    forward_volterra(g, x - x0, p)
}
