//! Bessel-function expansions of the elliptic motion in powers of the eccentricity.
//!
//! Series in `(e, M)` are stored as one-degree-of-freedom Poisson series whose
//! "action" is `e^2`: a square-root exponent `k` is then the power `e^k`, and the
//! grade equals that power so truncation at `N` is truncation in `e`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::math;
use crate::series::{PoissonSeries, Term, Trig};

/// Coefficients (index = power of e) of `J_nu(arg_mult * e)` truncated at degree `n`.
pub fn bessel_poly(nu: u32, arg_mult: i32, n: u32) -> Vec<f64> {
    let mut c = vec![0.0; n as usize + 1];
    if arg_mult == 0 {
        if nu == 0 {
            c[0] = 1.0;
        }
        return c;
    }
    let h = arg_mult as f64 / 2.0;
    let mut m = 0;
    while nu + 2 * m <= n {
        let p = nu + 2 * m;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        c[p as usize] = sign * math::powi(h, p as i32) / (math::factorial(m) * math::factorial(nu + m));
        m += 1;
    }
    c
}

/// Evaluates a power series in e.
pub fn poly_eval(c: &[f64], e: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * e + a)
}

fn push_poly(s: &mut PoissonSeries, poly: &[f64], kind: Trig, nu: i32) -> Result<()> {
    for (k, &c) in poly.iter().enumerate() {
        if c != 0.0 {
            s.add_term(Term::new(c, &[k as u32], kind, &[nu], k as u32))?;
        }
    }
    Ok(())
}

/// Elliptic-motion series, each truncated at degree `n` in e.
pub struct KeplerSeries {
    pub r_over_a: PoissonSeries,
    pub cos_f: PoissonSeries,
    pub sin_f: PoissonSeries,
}

/// `r/a`, `cos f`, `sin f` as trigonometric series in the mean anomaly.
pub fn kepler_series(n: u32) -> Result<KeplerSeries> {
    let np = n as usize + 1;
    let mut r = PoissonSeries::zero(1, n);
    let mut cf = PoissonSeries::zero(1, n);
    let mut sf = PoissonSeries::zero(1, n);
    r.add_term(Term::new(1.0, &[0], Trig::Const, &[0], 0))?;
    if n >= 2 {
        r.add_term(Term::new(0.5, &[2], Trig::Const, &[0], 2))?;
    }
    if n >= 1 {
        cf.add_term(Term::new(-1.0, &[1], Trig::Const, &[0], 1))?;
    }
    // sqrt(1 - e^2)
    let mut root = vec![0.0; np];
    for m in 0..=n / 2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        root[2 * m as usize] = sign * math::binom(0.5, m);
    }
    for nu in 1..=(n + 1) {
        let jm = bessel_poly(nu - 1, nu as i32, n + 1);
        let jp = bessel_poly(nu + 1, nu as i32, n + 1);
        let j0 = bessel_poly(nu, nu as i32, n + 1);
        // J'_nu(nu e) = (J_{nu-1} - J_{nu+1}) / 2
        let dj: Vec<f64> = jm.iter().zip(&jp).map(|(a, b)| 0.5 * (a - b)).collect();
        let nuf = nu as f64;
        // r/a: -2 e J'_nu / nu
        let mut pr = vec![0.0; np];
        for k in 0..n as usize {
            pr[k + 1] = -2.0 * dj[k] / nuf;
        }
        push_poly(&mut r, &pr, Trig::Cos, nu as i32)?;
        // cos f: 2 (1 - e^2) / e * J_nu
        let mut pc = vec![0.0; np];
        for k in 1..=(n as usize + 1) {
            let v = 2.0 * j0[k];
            if k - 1 < np {
                pc[k - 1] += v;
            }
            if k + 1 < np {
                pc[k + 1] -= v;
            }
        }
        push_poly(&mut cf, &pc, Trig::Cos, nu as i32)?;
        // sin f: 2 sqrt(1 - e^2) J'_nu
        let mut ps = vec![0.0; np];
        for a in 0..np {
            for b in 0..np - a {
                ps[a + b] += 2.0 * root[a] * dj[b];
            }
        }
        push_poly(&mut sf, &ps, Trig::Sin, nu as i32)?;
    }
    Ok(KeplerSeries { r_over_a: r, cos_f: cf, sin_f: sf })
}

/// Evaluates an `(e, M)` series.
pub fn eval_em(s: &PoissonSeries, e: f64, m: f64) -> f64 {
    s.evaluate(&[e * e], &[m]).unwrap_or(f64::NAN)
}

/// Eccentric anomaly by Newton iteration on Kepler's equation.
pub fn solve_kepler(e: f64, m: f64) -> f64 {
    let mut ea = if e < 0.8 { m } else { math::PI };
    for _ in 0..100 {
        let d = (ea - e * math::sin(ea) - m) / (1.0 - e * math::cos(ea));
        ea -= d;
        if math::abs(d) < 1e-14 {
            break;
        }
    }
    ea
}

/// Exact `(r/a, cos f, sin f)` from Kepler's equation.
pub fn kepler_exact(e: f64, m: f64) -> (f64, f64, f64) {
    let ea = solve_kepler(e, m);
    let r = 1.0 - e * math::cos(ea);
    let cf = (math::cos(ea) - e) / r;
    let sf = math::sqrt(1.0 - e * e) * math::sin(ea) / r;
    (r, cf, sf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_small_cases() {
        assert_eq!(bessel_poly(0, 0, 5)[0], 1.0);
        let j1 = bessel_poly(1, 1, 3);
        assert_eq!(j1, vec![0.0, 0.5, 0.0, -1.0 / 16.0]);
    }

    #[test]
    fn circular_limit() {
        let k = kepler_series(8).unwrap();
        for m in [0.0, 0.7, 2.0] {
            assert!((eval_em(&k.r_over_a, 0.0, m) - 1.0).abs() < 1e-15);
            assert!((eval_em(&k.cos_f, 0.0, m) - libm::cos(m)).abs() < 1e-15);
            assert!((eval_em(&k.sin_f, 0.0, m) - libm::sin(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_radius() {
        // the constant part of r/a is 1 + e^2/2
        let k = kepler_series(10).unwrap();
        let c: f64 = k.r_over_a.terms().filter(|t| t.kind == Trig::Const).map(|t| t.coeff * libm::pow(0.1, t.exps[0] as f64)).sum();
        assert!((c - 1.005).abs() < 1e-15);
    }

    #[test]
    fn matches_kepler_equation() {
        let k = kepler_series(15).unwrap();
        let (e, m) = (0.05, 1.0);
        let (r, cf, sf) = kepler_exact(e, m);
        assert!((eval_em(&k.r_over_a, e, m) - r).abs() < 1e-10);
        assert!((eval_em(&k.cos_f, e, m) - cf).abs() < 1e-10);
        assert!((eval_em(&k.sin_f, e, m) - sf).abs() < 1e-10);
    }
}
