//! Closed-form oracles for functions used as test data and demos.

use super::oracle::ClosedForm;
use crate::error::Result;
use crate::scalar::Scalar;

/// `φ ≡ 0`.
pub fn zero<F: Scalar>() -> ClosedForm<F> {
    ClosedForm::new("zero", None, |_k, _t| Ok(F::zero()))
}

/// `φ(t) = t^p`.
pub fn monomial<F: Scalar>(p: u32) -> ClosedForm<F> {
    ClosedForm::new(format!("t^{p}"), None, move |k, t: F| {
        if k > p as usize {
            return Ok(F::zero());
        }
        let mut c = F::one();
        for j in 0..k {
            c = c * F::from_usize_lossy(p as usize - j);
        }
        Ok(c * t.powi((p as usize - k) as i32))
    })
}

/// `φ(t) = sin t`.
pub fn sin<F: Scalar>() -> ClosedForm<F> {
    ClosedForm::new("sin", None, |k, t: F| {
        Ok(match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        })
    })
}

/// `φ(t) = exp(−1/t)` for `t > 0`, extended by 0.
pub fn exp_neg_inv<F: Scalar>() -> ClosedForm<F> {
    flat_exponential("exp(-1/t)", 1, 60)
}

/// `φ(t) = exp(−1/t²)` for `t > 0`, extended by 0.
pub fn exp_neg_inv_sq<F: Scalar>() -> ClosedForm<F> {
    flat_exponential("exp(-1/t^2)", 2, 40)
}

/// Derivatives of `exp(−s^q)` with `s = 1/t` are `P_n(s)·exp(−s^q)` for
/// polynomials obeying `P_{n+1} = s²(q·s^{q−1}P_n − P_n')`.
fn flat_exponential<F: Scalar>(name: &str, q: usize, orders: usize) -> ClosedForm<F> {
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    while polys.len() <= orders {
        let p = polys.last().expect("non-empty");
        let mut next = vec![0.0; p.len() + q + 1];
        for (j, &c) in p.iter().enumerate() {
            next[j + q + 1] += q as f64 * c;
            if j > 0 {
                next[j + 1] -= j as f64 * c;
            }
        }
        if next.iter().any(|c| !c.is_finite()) {
            break;
        }
        polys.push(next);
    }
    let max = polys.len() - 1;
    ClosedForm::new(name, Some(max), move |k, t: F| {
        Ok(F::lit(eval_flat(&polys[k], q as i32, t.as_f64())))
    })
}

fn eval_flat(poly: &[f64], q: i32, t: f64) -> f64 {
    if !(t >= 1e-300) {
        return 0.0;
    }
    let s = 1.0 / t;
    if !s.is_finite() {
        return 0.0;
    }
    let ln_s = s.ln();
    let decay = s.powi(q);
    poly.iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| c * (j as f64 * ln_s - decay).exp())
        .sum()
}

/// Convenience for closures that cannot fail.
pub fn from_fn<F: Scalar>(
    name: &str,
    max_order: Option<usize>,
    f: impl Fn(usize, F) -> F + Send + Sync + 'static,
) -> ClosedForm<F> {
    ClosedForm::new(name, max_order, move |k, t| -> Result<F> { Ok(f(k, t)) })
}

#[cfg(test)]
mod tests {
    use super::super::oracle::DerivativeOracle;
    use super::*;

    fn central(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn flat_exponentials_match_finite_differences() {
        for oracle in [exp_neg_inv::<f64>(), exp_neg_inv_sq::<f64>()] {
            for k in 0..8 {
                for &t in &[0.3, 0.7, 1.0, 1.9] {
                    let f = |s: f64| oracle.eval(k, s).unwrap();
                    let fd = central(&f, t, 1e-4);
                    let exact = oracle.eval(k + 1, t).unwrap();
                    assert!(
                        (fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                        "{} k={k} t={t}: {fd} vs {exact}",
                        oracle.name()
                    );
                }
            }
        }
    }

    #[test]
    fn flat_exponential_closed_forms() {
        let e = exp_neg_inv::<f64>();
        let t: f64 = 0.8;
        let v = (-1.0 / t).exp();
        assert!((e.eval(0, t).unwrap() - v).abs() < 1e-16);
        assert!((e.eval(1, t).unwrap() - v / (t * t)).abs() < 1e-15);
        assert!((e.eval(2, t).unwrap() - v * (1.0 - 2.0 * t) / t.powi(4)).abs() < 1e-14);
        let p = exp_neg_inv_sq::<f64>();
        let w = (-1.0 / (t * t)).exp();
        assert!((p.eval(1, t).unwrap() - 2.0 * w / t.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn flat_exponentials_vanish_near_zero() {
        for oracle in [exp_neg_inv::<f64>(), exp_neg_inv_sq::<f64>()] {
            for k in 0..=oracle.max_order().unwrap() {
                for &t in &[0.0, -1.0, 1e-320, 1e-200, 1e-5] {
                    let v = oracle.eval(k, t).unwrap();
                    assert!(v.is_finite() && v.abs() < 1e-100, "k={k} t={t} v={v}");
                }
            }
        }
    }

    #[test]
    fn monomial_derivatives() {
        let m = monomial::<f64>(3);
        assert_eq!(m.eval(0, 2.0).unwrap(), 8.0);
        assert_eq!(m.eval(2, 2.0).unwrap(), 12.0);
        assert_eq!(m.eval(3, 2.0).unwrap(), 6.0);
        assert_eq!(m.eval(4, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sin_cycle() {
        let s = sin::<f64>();
        assert_eq!(s.eval(4, 0.3).unwrap(), 0.3_f64.sin());
        assert_eq!(s.eval(3, 0.3).unwrap(), -(0.3_f64.cos()));
    }
}
