use std::io::Write;
use std::path::PathBuf;

use fracheat_core::fractional::{
    coincidence_check, frac_conv_rule_check, frac_integral, half_composition_check,
    semigroup_check, FracOptions,
};
use fracheat_core::heat_kernels::{
    forward_volterra, kernel_flux_identity_check, kernel_semigroup_check, DirectHeatOracle,
    InitialData, KernelOracle, KernelParams, SemigroupVariant, DIRECT_HEAT_MAX_ORDER,
};
use fracheat_core::holmgren::{
    check_factorial_inequality, convergence_radius, covers_origin, derivative_sup_norms,
    estimate_class, propagate_derivative, propagate_half_derivative, HolmgrenClass,
};
use fracheat_core::inverse::{
    attach_holmgren, build_series, convergence_report, finite_bar_series, recover_flux,
    recover_flux_with, DEFAULT_TRUNCATION,
};
use fracheat_core::sampled::functions;
use fracheat_core::sampled::SplineNumeric;
use fracheat_core::{make_grid, sample, DerivativeOracle, FractionalOrder, GridFunction, TimeGrid};

use crate::config::RunConfig;
use crate::output::{data_sink, num, Report};
use crate::{CliError, Cmd};

const SPLINE_MAX_ORDER: usize = 12;

pub fn allowed_keys(cmd: Cmd) -> &'static [&'static str] {
    match cmd {
        Cmd::Verify => &["T", "n", "tol", "out", "report"],
        Cmd::Forward => &["T", "n", "kappa", "demo", "input", "x0", "dx", "out"],
        Cmd::Flux => &[
            "T",
            "n",
            "kappa",
            "demo",
            "input",
            "x0",
            "membership_tol",
            "out",
        ],
        Cmd::Reconstruct => &[
            "T",
            "n",
            "kappa",
            "demo",
            "input",
            "x0",
            "x",
            "N",
            "membership_tol",
            "out",
            "report",
        ],
        Cmd::Holmgren => &[
            "T", "n", "kappa", "demo", "input", "x0", "n_max", "gamma1", "gamma2", "C", "report",
        ],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Demo {
    /// Reference bump initial data, observed at `x0`.
    Bump,
    /// `exp(−1/t²)`.
    Psi,
    /// Reference bump with temperature and flux given at `x0`.
    FiniteBar,
    Zero,
}

impl Demo {
    fn name(self) -> &'static str {
        match self {
            Demo::Bump => "bump",
            Demo::Psi => "psi",
            Demo::FiniteBar => "finite-bar",
            Demo::Zero => "zero",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "bump" => Ok(Demo::Bump),
            "psi" => Ok(Demo::Psi),
            "finite-bar" => Ok(Demo::FiniteBar),
            "zero" => Ok(Demo::Zero),
            _ => Err(CliError::Usage(format!(
                "unknown demo {s:?} (expected bump, psi, finite-bar or zero)"
            ))),
        }
    }
}

enum Source {
    Demo(Demo),
    Csv(PathBuf),
}

struct Setup {
    grid: TimeGrid<f64>,
    params: KernelParams<f64>,
    x0: f64,
    source: Option<Source>,
}

impl Setup {
    fn read(cfg: &RunConfig, need_source: bool) -> Result<Self, CliError> {
        let source = match (cfg.str("demo"), cfg.path("input")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "give either --demo or --input, not both".into(),
                ))
            }
            (Some(d), None) => Some(Source::Demo(Demo::parse(d)?)),
            (None, Some(p)) => Some(Source::Csv(p)),
            (None, None) if need_source => {
                return Err(CliError::Usage(
                    "a data source is required: --demo NAME or --input FILE".into(),
                ))
            }
            (None, None) => None,
        };
        let kappa = cfg.positive("kappa", Some(1.0))?;
        let x0 = cfg.positive("x0", Some(1.0))?;
        let grid = match &source {
            Some(Source::Csv(p)) => {
                if cfg.has("T") || cfg.has("n") {
                    return Err(CliError::Usage(
                        "T and n come from the input file; drop them".into(),
                    ));
                }
                *GridFunction::<f64>::read_csv_path(p)?.grid()
            }
            _ => {
                let t_end = cfg.positive("T", Some(2.0))?;
                let n = cfg.get_or::<usize>("n", 801)?;
                if n < 2 {
                    return Err(CliError::Usage(format!("n must be at least 2, got {n}")));
                }
                make_grid(t_end, n)?
            }
        };
        Ok(Self {
            grid,
            params: KernelParams::new(kappa)?,
            x0,
            source,
        })
    }

    fn bump(&self) -> Result<DirectHeatOracle<f64>, CliError> {
        Ok(DirectHeatOracle::new(
            InitialData::reference_bump(),
            self.x0,
            self.params,
        )?)
    }

    /// Oracle for the sensor data `g`, and whether it came from a spline fit.
    fn oracle(&self) -> Result<(Box<dyn DerivativeOracle<f64>>, bool), CliError> {
        Ok(
            match self.source.as_ref().expect("source checked by caller") {
                Source::Demo(Demo::Bump | Demo::FiniteBar) => (Box::new(self.bump()?), false),
                Source::Demo(Demo::Psi) => (Box::new(functions::exp_neg_inv_sq()), false),
                Source::Demo(Demo::Zero) => (Box::new(functions::zero()), false),
                Source::Csv(p) => {
                    let data = GridFunction::<f64>::read_csv_path(p)?;
                    (Box::new(SplineNumeric::new(&data, SPLINE_MAX_ORDER)?), true)
                }
            },
        )
    }

    fn describe(&self) -> String {
        let src = match &self.source {
            Some(Source::Demo(d)) => format!("demo {}", d.name()),
            Some(Source::Csv(p)) => format!("input {}", p.display()),
            None => "no data".into(),
        };
        format!(
            "# {src} x0={} kappa={} T={} n={}",
            self.x0,
            self.params.kappa(),
            self.grid.t_end(),
            self.grid.len()
        )
    }
}

/// Operator options; `membership_tol` loosens the flat-at-zero check, which
/// spline fits of sampled data only meet approximately at higher orders.
fn frac_options(cfg: &RunConfig) -> Result<FracOptions<f64>, CliError> {
    let mut opts = FracOptions::default();
    if let Some(tol) = cfg.get::<f64>("membership_tol")? {
        if !(tol >= 0.0) || !tol.is_finite() {
            return Err(CliError::Usage(format!(
                "membership_tol must be non-negative, got {tol}"
            )));
        }
        opts.membership_tol = tol;
    }
    Ok(opts)
}

fn reject_finite_bar(setup: &Setup, cmd: &str) -> Result<(), CliError> {
    if matches!(setup.source, Some(Source::Demo(Demo::FiniteBar))) {
        return Err(CliError::Usage(format!(
            "demo finite-bar is only available for reconstruct, not {cmd}"
        )));
    }
    Ok(())
}

fn write_series(
    cfg: &RunConfig,
    f: &GridFunction<f64>,
    header: &str,
    extra: Option<&str>,
) -> Result<(), CliError> {
    let mut out = data_sink(cfg.path("out").as_deref())?;
    match extra {
        None => writeln!(out, "t,{header}")?,
        Some(_) => writeln!(out, "t,{header},provenance")?,
    }
    for (t, v) in f.grid().nodes().zip(f.values()) {
        match extra {
            None => writeln!(out, "{},{}", num(t), num(*v))?,
            Some(tag) => writeln!(out, "{},{},{tag}", num(t), num(*v))?,
        }
    }
    out.flush()?;
    Ok(())
}

// verify

struct Check {
    name: &'static str,
    residual: f64,
    tol: f64,
}

fn verify_checks() -> Result<Vec<Check>, CliError> {
    let grid = make_grid(2.0, 801)?;
    let unit = KernelParams::unit();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut checks = Vec::new();
    let mut push = |name, residual, tol| {
        checks.push(Check {
            name,
            residual,
            tol,
        })
    };

    let t2 = GridFunction::from_fn(grid, |t| t * t)?;
    push(
        "integral-semigroup",
        semigroup_check(&t2, 0.3, 0.4)?.residual,
        5e-3,
    );

    let lin = GridFunction::from_fn(grid, |t| t)?;
    let j = frac_integral(&lin, 0.5)?;
    push(
        "monomial-half-integral",
        (j.at(1.0) - 4.0 / (3.0 * sqrt_pi)).abs(),
        1e-4,
    );

    let opts = FracOptions::default();
    let mut worst = 0.0_f64;
    let oracles: Vec<Box<dyn DerivativeOracle<f64>>> = vec![
        Box::new(functions::exp_neg_inv()),
        Box::new(KernelOracle::new(1.0, unit)?),
        Box::new(KernelOracle::new(0.5, unit)?),
    ];
    for o in &oracles {
        for nu in [0.5, 1.5] {
            let rep = coincidence_check(o.as_ref(), FractionalOrder::new(nu)?, &grid, &opts)?;
            worst = worst.max(rep.max_discrepancy());
        }
    }
    push("rl-caputo-flat-coincidence", worst, 1e-3);

    let comp = half_composition_check(&functions::exp_neg_inv(), &grid)?;
    push(
        "half-derivative-composition",
        comp.lhs.rel_err_on(&comp.rhs, 0.2, 2.0),
        1e-2,
    );

    push(
        "kernel-flux-identity",
        kernel_flux_identity_check(1.0, &grid, unit)?.residual,
        1e-3,
    );

    let s = GridFunction::from_fn(grid, f64::sin)?;
    let mut errs = Vec::new();
    for dx in [0.4, 0.2, 0.1, 0.05] {
        errs.push(forward_volterra(&s, dx, unit)?.abs_err_on(&s, 0.2, 2.0));
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    // A non-monotone sequence cannot pass at any tolerance.
    let last = if monotone { errs[3] } else { f64::INFINITY };
    push("approximate-identity", last, 5e-2);

    let gauss = kernel_semigroup_check(2.0, 1.0, 0.0, &grid, unit, SemigroupVariant::Gaussian)?;
    push("gaussian-semigroup", gauss.residual, 2e-3);
    let kern = kernel_semigroup_check(3.0, 1.0, 0.0, &grid, unit, SemigroupVariant::Kernel)?;
    push("kernel-semigroup", kern.residual, 2e-3);

    let phi = KernelOracle::new(1.0, unit)?;
    push(
        "convolution-rule",
        frac_conv_rule_check(&phi, &s, FractionalOrder::half())?.residual,
        1e-3,
    );

    let bump = DirectHeatOracle::new(InitialData::reference_bump(), 1.0, unit)?;
    let flux = recover_flux(&bump, &grid, 1.0)?;
    let exact = sample(&bump.clone().space_derivative(1), 0, &grid)?;
    push("flux-recovery", flux.rel_err_on(&exact, 0.2, 2.0), 1e-2);

    let h = HolmgrenClass::asserted(1.0_f64, 1.0, 1.0)?;
    let c2 = propagate_half_derivative(&h).c;
    push(
        "half-derivative-class-constant",
        (c2 - 48.0 * 2f64.sqrt() / (5.0 * sqrt_pi)).abs(),
        1e-12,
    );
    let d = propagate_derivative(&h);
    push(
        "derivative-class-constants",
        (d.gamma1 - 0.4_f64.sqrt()).abs() + (d.gamma2 - 1.0).abs() + (d.c - 4.8).abs(),
        1e-12,
    );
    let mut ineq = true;
    for beta in [1.0, 1.5, 2.0, 2.4] {
        ineq &= check_factorial_inequality(beta, 50)?;
    }
    push(
        "factorial-inequality",
        if ineq { 0.0 } else { f64::INFINITY },
        0.5,
    );
    Ok(checks)
}

pub fn verify(cfg: &RunConfig) -> Result<bool, CliError> {
    let tol_override = cfg.get::<f64>("tol")?;
    if let Some(t) = tol_override {
        if !(t >= 0.0) {
            return Err(CliError::Usage(format!(
                "tol must be non-negative, got {t}"
            )));
        }
    }
    let checks = verify_checks()?;
    let mut report = Report::default();
    let mut out = data_sink(cfg.path("out").as_deref())?;
    writeln!(out, "check,residual,tolerance,pass")?;
    let mut all = true;
    for c in &checks {
        let tol = tol_override.unwrap_or(c.tol);
        let pass = report.check(c.name, c.residual, tol);
        all &= pass;
        writeln!(out, "{},{},{},{}", c.name, num(c.residual), num(tol), pass)?;
    }
    out.flush()?;
    report.emit("verify", cfg.path("report").as_deref())?;
    Ok(all)
}

// forward

pub fn forward(cfg: &RunConfig) -> Result<bool, CliError> {
    let setup = Setup::read(cfg, true)?;
    reject_finite_bar(&setup, "forward")?;
    let dx = match cfg.get::<f64>("dx")? {
        Some(dx) if !(dx > 0.0) || !dx.is_finite() => {
            return Err(CliError::Usage(format!("dx must be positive, got {dx}")))
        }
        other => other,
    };
    if dx.is_none() && matches!(setup.source, Some(Source::Csv(_))) {
        return Err(CliError::Usage(
            "forward from an input file needs --dx".into(),
        ));
    }
    let source = match &setup.source {
        Some(Source::Csv(p)) => GridFunction::read_csv_path(p)?,
        _ => sample(setup.oracle()?.0.as_ref(), 0, &setup.grid)?,
    };
    let g = match dx {
        Some(dx) => forward_volterra(&source, dx, setup.params)?,
        None => source,
    };
    write_series(cfg, &g, "g", None)?;
    Ok(true)
}

// flux

pub fn flux(cfg: &RunConfig) -> Result<bool, CliError> {
    let setup = Setup::read(cfg, true)?;
    reject_finite_bar(&setup, "flux")?;
    let opts = frac_options(cfg)?;
    let (g, spline) = setup.oracle()?;
    let q = recover_flux_with(g.as_ref(), &setup.grid, setup.params.kappa(), &opts)?;
    write_series(cfg, &q, "flux", spline.then_some("spline-numeric"))?;
    Ok(true)
}

// reconstruct

pub fn reconstruct(cfg: &RunConfig) -> Result<bool, CliError> {
    let setup = Setup::read(cfg, true)?;
    let opts = frac_options(cfg)?;
    let n = cfg.get_or::<usize>("N", DEFAULT_TRUNCATION)?;
    let xs = cfg.list("x")?.unwrap_or_else(|| vec![setup.x0 / 2.0]);
    if xs.is_empty() {
        return Err(CliError::Usage("x needs at least one position".into()));
    }
    for &x in &xs {
        if !(0.0..=setup.x0).contains(&x) {
            return Err(CliError::Usage(format!(
                "x = {x} lies outside [0, x0 = {}]",
                setup.x0
            )));
        }
    }
    let mut report = Report::default();
    report.line(setup.describe());
    report.line(format!("# N={n}"));

    let columns: Vec<GridFunction<f64>> = if matches!(
        setup.source,
        Some(Source::Demo(Demo::FiniteBar))
    ) {
        if setup.params.kappa() != 1.0 {
            return Err(CliError::Usage(
                "demo finite-bar uses unit diffusivity".into(),
            ));
        }
        if n > DIRECT_HEAT_MAX_ORDER {
            return Err(CliError::Usage(format!(
                "demo finite-bar supports N <= {DIRECT_HEAT_MAX_ORDER}"
            )));
        }
        let h = setup.bump()?;
        let f = h.clone().space_derivative(1);
        xs.iter()
            .map(|&x| finite_bar_series(&h, &f, setup.x0, x, &setup.grid, n))
            .collect::<Result<_, _>>()?
    } else {
        let (g, _) = setup.oracle()?;
        let series = build_series(
            g.as_ref(),
            setup.x0,
            &setup.grid,
            n,
            setup.params.kappa(),
            &opts,
        )?;
        let mut cols = Vec::with_capacity(xs.len());
        for &x in &xs {
            cols.push(series.partial_sum(x, n)?);
            let mut rep = convergence_report(&series, x, None)?;
            if rep.diverging() {
                attach_holmgren(&mut rep, g.as_ref(), &setup.grid);
            }
            for (j, t) in rep.sample_times.iter().enumerate() {
                let terms: Vec<String> = rep.magnitudes[j]
                    .iter()
                    .map(|a| format!("{a:.3e}"))
                    .collect();
                report.line(format!("x={x} t={t} terms {}", terms.join(" ")));
                report.line(format!(
                    "x={x} t={t} tail_estimate {:.3e} decreasing {}",
                    rep.tail_estimates[j],
                    rep.eventually_decreasing(j)
                ));
            }
            if let Some((class, radius)) = rep.holmgren {
                report.line(format!(
                    "x={x} holmgren gamma1={:.6e} gamma2={:.6e} C={:.6e} radius={radius:.6e} ({:?})",
                    class.gamma1, class.gamma2, class.c, class.label
                ));
            }
            for w in &rep.warnings {
                report.line(format!("WARN x={x} {w}"));
            }
        }
        cols
    };

    let mut out = data_sink(cfg.path("out").as_deref())?;
    writeln!(out, "x,t,u")?;
    for (x, col) in xs.iter().zip(&columns) {
        for (t, v) in col.grid().nodes().zip(col.values()) {
            writeln!(out, "{},{},{}", num(*x), num(t), num(*v))?;
        }
    }
    out.flush()?;
    report.emit("reconstruct", cfg.path("report").as_deref())?;
    Ok(true)
}

// holmgren

pub fn holmgren(cfg: &RunConfig) -> Result<bool, CliError> {
    let setup = Setup::read(cfg, false)?;
    reject_finite_bar(&setup, "holmgren")?;
    let gamma2 = cfg.positive("gamma2", Some(setup.grid.t_end() / 2.0))?;
    let n_max = cfg.get_or::<usize>("n_max", 6)?;
    if n_max == 0 {
        return Err(CliError::Usage("n_max must be at least 1".into()));
    }
    let given = ["gamma1", "C"].iter().filter(|k| cfg.has(k)).count();
    let mut report = Report::default();
    report.line(setup.describe());

    let class = match given {
        2 => {
            if !cfg.has("gamma2") {
                return Err(CliError::Usage(
                    "an asserted class needs gamma1, gamma2 and C".into(),
                ));
            }
            let class = HolmgrenClass::asserted(
                cfg.positive("gamma1", None)?,
                gamma2,
                cfg.positive("C", None)?,
            )?;
            if setup.source.is_some() {
                let (g, _) = setup.oracle()?;
                let sup = derivative_sup_norms(g.as_ref(), n_max, gamma2, &setup.grid)?;
                let ok = class.satisfied_by(&sup);
                report.line(format!(
                    "data within asserted class up to order {n_max}: {ok}"
                ));
                if !ok {
                    report.emit("holmgren", cfg.path("report").as_deref())?;
                    return Ok(false);
                }
            }
            class
        }
        0 => {
            if setup.source.is_none() {
                return Err(CliError::Usage(
                    "give a data source to fit, or assert gamma1, gamma2 and C".into(),
                ));
            }
            let (g, _) = setup.oracle()?;
            let n_max = g.max_order().map_or(n_max, |m| m.min(n_max));
            estimate_class(g.as_ref(), n_max, gamma2, &setup.grid)?
        }
        _ => {
            return Err(CliError::Usage(
                "an asserted class needs gamma1, gamma2 and C".into(),
            ))
        }
    };
    let cover = covers_origin(setup.x0, &class)?;
    let d1 = propagate_derivative(&class);
    let dh = propagate_half_derivative(&class);
    report.line(format!(
        "class gamma1={:.6e} gamma2={:.6e} C={:.6e} ({:?})",
        class.gamma1, class.gamma2, class.c, class.label
    ));
    report.line(format!("radius {:.6e}", convergence_radius(&class)));
    report.line(format!(
        "covers_origin {} from x0={} (guaranteed on ({:.6e}, x0])",
        cover.covers, setup.x0, cover.convergent_from
    ));
    report.line(format!(
        "derivative class gamma1={:.6e} C={:.6e}",
        d1.gamma1, d1.c
    ));
    report.line(format!(
        "half-derivative class gamma1={:.6e} C={:.6e}",
        dh.gamma1, dh.c
    ));
    report.emit("holmgren", cfg.path("report").as_deref())?;
    Ok(true)
}
