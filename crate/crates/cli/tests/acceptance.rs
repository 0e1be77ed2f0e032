//! Acceptance suite: one PASS/FAIL line per criterion on the reference grid
//! `T = 2`, `n = 801`, `κ = 1`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fracheat_core::fractional::{
    coincidence_check, frac_conv_rule_check, frac_integral, half_composition_check,
    semigroup_check, FracOptions,
};
use fracheat_core::heat_kernels::{
    forward_volterra, kernel_flux_identity_check, kernel_semigroup_check, DirectHeatOracle,
    InitialData, KernelOracle, KernelParams, SemigroupVariant,
};
use fracheat_core::holmgren::{
    check_factorial_inequality, propagate_derivative, propagate_half_derivative, HolmgrenClass,
};
use fracheat_core::inverse::{reconstruct, recover_flux, ReconstructOptions};
use fracheat_core::sampled::functions;
use fracheat_core::{make_grid, sample, DerivativeOracle, FractionalOrder, GridFunction, TimeGrid};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn grid() -> TimeGrid<f64> {
    make_grid(2.0, 801).expect("reference grid")
}

fn unit() -> KernelParams<f64> {
    KernelParams::unit()
}

fn sqrt_pi() -> f64 {
    std::f64::consts::PI.sqrt()
}

fn sci(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.2e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_err(e: fracheat_core::Error) -> String {
    e.to_string()
}

fn semigroup() -> Outcome {
    let g = grid();
    let p = GridFunction::from_fn(g, |t| t * t).map_err(fmt_err)?;
    let rep = semigroup_check(&p, 0.3, 0.4).map_err(fmt_err)?;
    Ok((
        rep.residual < 5e-3,
        format!("residual {:.3e} tol 5e-3", rep.residual),
    ))
}

fn monomial_integral() -> Outcome {
    let g = grid();
    let p = GridFunction::from_fn(g, |t| t).map_err(fmt_err)?;
    let j = frac_integral(&p, 0.5).map_err(fmt_err)?;
    // Beta integral: ∫₀¹ (1−s)^{-1/2} s ds / Γ(1/2) = B(2, 1/2)/√π = (4/3)/√π.
    let want = 4.0 / (3.0 * sqrt_pi());
    let err = (j.at(1.0) - want).abs();
    Ok((err < 1e-4, format!("error {err:.3e} tol 1e-4")))
}

fn coincidence() -> Outcome {
    let g = grid();
    let opts = FracOptions::default();
    let oracles: Vec<(&str, Box<dyn DerivativeOracle<f64>>)> = vec![
        ("exp(-1/t)", Box::new(functions::exp_neg_inv())),
        (
            "K(1,.)",
            Box::new(KernelOracle::new(1.0, unit()).map_err(fmt_err)?),
        ),
        (
            "K(0.5,.)",
            Box::new(KernelOracle::new(0.5, unit()).map_err(fmt_err)?),
        ),
    ];
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, o) in &oracles {
        for nu in [0.5, 1.5] {
            let rep = coincidence_check(
                o.as_ref(),
                FractionalOrder::new(nu).map_err(fmt_err)?,
                &g,
                &opts,
            )
            .map_err(fmt_err)?;
            let d = rep.max_discrepancy();
            worst = worst.max(d);
            parts.push(format!("{name} nu={nu}: {d:.2e}"));
        }
    }
    Ok((
        worst < 1e-3,
        format!("max {worst:.3e} tol 1e-3 [{}]", parts.join(", ")),
    ))
}

fn composition() -> Outcome {
    let g = grid();
    let rep = half_composition_check(&functions::exp_neg_inv(), &g).map_err(fmt_err)?;
    let rel = rep.lhs.rel_err_on(&rep.rhs, 0.2, 2.0);
    Ok((rel < 0.01, format!("rel {rel:.3e} tol 1e-2")))
}

fn kernel_flux() -> Outcome {
    let rep = kernel_flux_identity_check(1.0, &grid(), unit()).map_err(fmt_err)?;
    Ok((
        rep.residual < 1e-3,
        format!("residual {:.3e} tol 1e-3", rep.residual),
    ))
}

fn approximate_identity() -> Outcome {
    let g = grid();
    let p = GridFunction::from_fn(g, f64::sin).map_err(fmt_err)?;
    let mut errs = Vec::new();
    for dx in [0.4, 0.2, 0.1, 0.05] {
        let out = forward_volterra(&p, dx, unit()).map_err(fmt_err)?;
        errs.push(out.abs_err_on(&p, 0.2, 2.0));
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().expect("four values");
    Ok((
        monotone && last < 0.05,
        format!("errors [{}] monotone {monotone} last tol 5e-2", sci(&errs)),
    ))
}

fn kernel_semigroup() -> Outcome {
    let g = grid();
    let a = kernel_semigroup_check(2.0, 1.0, 0.0, &g, unit(), SemigroupVariant::Gaussian)
        .map_err(fmt_err)?;
    let b = kernel_semigroup_check(3.0, 1.0, 0.0, &g, unit(), SemigroupVariant::Kernel)
        .map_err(fmt_err)?;
    Ok((
        a.residual < 2e-3 && b.residual < 2e-3,
        format!(
            "gaussian {:.3e} kernel {:.3e} tol 2e-3",
            a.residual, b.residual
        ),
    ))
}

fn convolution_rule() -> Outcome {
    let g = grid();
    let p = GridFunction::from_fn(g, f64::sin).map_err(fmt_err)?;
    let phi = KernelOracle::new(1.0, unit()).map_err(fmt_err)?;
    let rep = frac_conv_rule_check(&phi, &p, FractionalOrder::half()).map_err(fmt_err)?;
    Ok((
        rep.residual < 1e-3,
        format!("residual {:.3e} tol 1e-3", rep.residual),
    ))
}

fn bump_data() -> Result<DirectHeatOracle<f64>, String> {
    DirectHeatOracle::new(InitialData::reference_bump(), 1.0, unit()).map_err(fmt_err)
}

fn end_to_end() -> Outcome {
    let g = grid();
    let data = bump_data()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [0.8, 0.6] {
        let (u, _) = reconstruct(&data, 1.0, x, &g, 8, 1.0).map_err(fmt_err)?;
        let exact = sample(
            &DirectHeatOracle::new(InitialData::reference_bump(), x, unit()).map_err(fmt_err)?,
            0,
            &g,
        )
        .map_err(fmt_err)?;
        let rel = u.rel_err_on(&exact, 0.2, 2.0);
        let abs = u.abs_err_on(&exact, 0.0, 0.2);
        ok &= rel < 0.02 && abs < 1e-6;
        parts.push(format!("x={x}: rel {rel:.3e} early abs {abs:.3e}"));
    }
    Ok((ok, format!("{} tol 2e-2 / 1e-6", parts.join(", "))))
}

fn flux_recovery() -> Outcome {
    let g = grid();
    let flux = recover_flux(&bump_data()?, &g, 1.0).map_err(fmt_err)?;
    let exact = sample(&bump_data()?.space_derivative(1), 0, &g).map_err(fmt_err)?;
    let rel = flux.rel_err_on(&exact, 0.2, 2.0);
    Ok((rel < 0.01, format!("rel {rel:.3e} tol 1e-2")))
}

fn round_trip() -> Outcome {
    let g = grid();
    let data = bump_data()?;
    let gs = sample(&data, 0, &g).map_err(fmt_err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [0.8, 0.6] {
        let (u, _) = reconstruct(&data, 1.0, x, &g, 8, 1.0).map_err(fmt_err)?;
        let back = forward_volterra(&u, 1.0 - x, unit()).map_err(fmt_err)?;
        let rel = back.rel_err_on(&gs, 0.2, 2.0);
        ok &= rel < 0.03;
        parts.push(format!("x={x}: rel {rel:.3e}"));
    }
    Ok((ok, format!("{} tol 3e-2", parts.join(", "))))
}

fn holmgren_constants() -> Outcome {
    let h = HolmgrenClass::asserted(1.0_f64, 1.0, 1.0).map_err(fmt_err)?;
    let d = propagate_derivative(&h);
    let exact = d.gamma1 == 0.4_f64.sqrt() && d.gamma2 == 1.0 && d.c == 4.8;
    let c2 = propagate_half_derivative(&h).c;
    let c2_err = (c2 - 48.0 * 2f64.sqrt() / (5.0 * sqrt_pi())).abs();
    let mut ineq = true;
    for beta in [1.0, 1.5, 2.0, 12.0 / 5.0] {
        ineq &= check_factorial_inequality(beta, 50).map_err(fmt_err)?;
    }
    Ok((
        exact && c2_err < 1e-12 && ineq,
        format!(
            "derivative class exact {exact}, C2 error {c2_err:.1e} tol 1e-12, inequality {ineq}"
        ),
    ))
}

fn psi_series() -> Outcome {
    let g = grid();
    let psi = functions::exp_neg_inv_sq();
    let opts = ReconstructOptions {
        sample_times: Some(vec![0.5, 1.0, 2.0]),
        ..ReconstructOptions::default()
    };
    let x0 = 1.25;
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [0.25, 0.5, 1.0] {
        let (_, rep) = fracheat_core::inverse::reconstruct_with(&psi, x0, x, &g, 16, 1.0, &opts)
            .map_err(fmt_err)?;
        for (j, t) in rep.sample_times.iter().enumerate() {
            let dec = rep.eventually_decreasing(j);
            ok &= dec;
            if !dec {
                parts.push(format!(
                    "x={x} t={t} not decreasing: [{}]",
                    sci(&rep.magnitudes[j])
                ));
            }
        }
    }
    if ok {
        parts.push("all 9 (x, t) pairs decreasing at N=16, x0=1.25".into());
    }
    Ok((ok, parts.join("; ")))
}

fn run_cli(bin: &Path, dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("fracheat {args:?} exited with {status}"))
    }
}

fn determinism() -> Outcome {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_fracheat"));
    let base = std::env::temp_dir().join(format!("fracheat-acceptance-{}", std::process::id()));
    let mut same = true;
    let mut parts = Vec::new();
    for (cmd, extra) in [
        (
            "verify",
            vec!["--out", "verify.csv", "--report", "verify.txt"],
        ),
        (
            "reconstruct",
            vec![
                "--demo", "bump", "--x", "0.8,0.6", "--out", "u.csv", "--report", "rec.txt",
            ],
        ),
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let dir = base.join(format!("{cmd}-{run}"));
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let mut args = vec![cmd];
            args.extend(extra.iter().copied());
            run_cli(&bin, &dir, &args)?;
            let data =
                std::fs::read(dir.join(extra[extra.len() - 3])).map_err(|e| e.to_string())?;
            outputs.push(data);
        }
        let eq = outputs[0] == outputs[1] && !outputs[0].is_empty();
        same &= eq;
        parts.push(format!("{cmd}: {} bytes identical {eq}", outputs[0].len()));
    }
    let _ = std::fs::remove_dir_all(&base);
    Ok((same, parts.join(", ")))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("01 fractional-integral semigroup", semigroup),
        ("02 monomial half integral", monomial_integral),
        ("03 RL = Caputo = flat form", coincidence),
        ("04 half-derivative composition", composition),
        ("05 kernel flux identity", kernel_flux),
        ("06 approximate identity", approximate_identity),
        ("07 kernel semigroup", kernel_semigroup),
        ("08 convolution rule", convolution_rule),
        ("09 end-to-end reconstruction", end_to_end),
        ("10 flux recovery", flux_recovery),
        ("11 round trip", round_trip),
        ("12 Holmgren constants", holmgren_constants),
        ("13 psi-series term decay", psi_series),
        ("14 CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 14 criteria passed");
}
