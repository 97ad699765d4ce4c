//! Kepler + J2 Hamiltonian in modified Delaunay variables around a reference
//! semimajor axis.
//!
//! Variables: actions `(dL, P, Q)`, angles `(lambda, p, q)` with
//! `L = sqrt(mu a)`, `P = L (1 - sqrt(1-e^2))`, `Q = L sqrt(1-e^2) (1 - cos i)`,
//! `lambda = M + omega + Omega`, `p = -omega - Omega`, `q = -Omega`, `dL = L - L*`.

use alloc::vec::Vec;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::kepler::kepler_series;
use crate::math;
use crate::series::{PoissonSeries, Term, Trig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J2ModelConfig {
    /// Reference semimajor axis, R_E.
    pub a_star: f64,
    /// Truncation order of the book-keeping grade.
    pub n: u32,
}

impl J2ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_star > 1.0) {
            return Err(Error::Domain("a_star must exceed one Earth radius".into()));
        }
        if self.n < 3 {
            return Err(Error::Domain("truncation order must be at least 3".into()));
        }
        Ok(())
    }
}

/// `(n*, omega1*, omega2*)`: mean motion and the two J2 secular frequencies at `a_star`.
pub fn j2_frequencies(a_star: f64, k: &PhysicalConstants) -> (f64, f64, f64) {
    let base = k.j2 * math::sqrt(k.mu_e) / math::pow(a_star, 3.5);
    let n = math::sqrt(k.mu_e / (a_star * a_star * a_star)) + 3.0 * base;
    let w1 = -1.5 * base;
    (n, w1, -w1)
}

/// Built J2 model: the series graded by total square-root degree, plus frequencies.
#[derive(Clone, Debug)]
pub struct J2Model {
    pub cfg: J2ModelConfig,
    pub l_star: f64,
    pub omega: [f64; 3],
    /// Hamiltonian (constant removed) with grade = total sqrt-action degree, up to `n + 2`.
    pub by_degree: PoissonSeries,
}

/// Substitutes `e^k trig(nu M)` by `E_k trig(nu (lambda + p))`.
fn substitute(em: &PoissonSeries, ek: &[PoissonSeries], max_bk: u32) -> Result<PoissonSeries> {
    let mut out = Vec::new();
    for t in em.terms() {
        let k = t.exps[0] as usize;
        let nu = t.wave[0];
        for u in ek[k].terms() {
            out.push(Term::new(t.coeff * u.coeff, &u.exps[..3], t.kind, &[nu, nu, 0], u.grade));
        }
    }
    PoissonSeries::from_terms(3, max_bk, out)
}

fn mono(c: f64, exps: [u32; 3], kind: Trig, wave: [i32; 3], d: u32) -> Result<PoissonSeries> {
    let g: u32 = exps.iter().sum();
    PoissonSeries::monomial(3, d, Term::new(c, &exps, kind, &wave, g))
}

/// Builds the truncated Kepler + J2 Hamiltonian.
pub fn build_j2_hamiltonian(cfg: &J2ModelConfig, k: &PhysicalConstants) -> Result<J2Model> {
    cfg.validate()?;
    let d = cfg.n + 2;
    let mu = k.mu_e;
    let ls = k.big_l(cfg.a_star);
    let x = mono(1.0 / ls, [2, 0, 0], Trig::Const, [0, 0, 0], d)?;
    let pl = mono(1.0 / ls, [0, 2, 0], Trig::Const, [0, 0, 0], d)?;
    let qq = mono(1.0, [0, 0, 2], Trig::Const, [0, 0, 0], d)?;

    let inv1px = PoissonSeries::one_plus_pow(&x, -1.0)?;
    let kep = PoissonSeries::one_plus_pow(&x, -2.0)?.scale(-mu * mu / (2.0 * ls * ls));

    // e^k = (2/L*)^{k/2} sqrt(P)^k (1+x)^{-k/2} (1 - u/2)^{k/2}, u = P/L
    let u = pl.mul(&inv1px)?;
    let mut ek = Vec::with_capacity(d as usize + 1);
    for kk in 0..=d {
        let half = kk as f64 / 2.0;
        let c = math::pow(2.0 / ls, half);
        let root = mono(c, [0, kk, 0], Trig::Const, [0, 0, 0], d)?;
        let f1 = PoissonSeries::one_plus_pow(&x, -half)?;
        let f2 = PoissonSeries::one_plus_pow(&u.scale(-0.5), half)?;
        ek.push(root.mul(&f1)?.mul(&f2)?);
    }

    // (a/r)^3, (a/r)^3 cos 2f, (a/r)^3 sin 2f in (e, M)
    let ks = kepler_series(d)?;
    let y = ks.r_over_a.sub(&PoissonSeries::constant(1, d, 1.0))?;
    let rho3 = PoissonSeries::one_plus_pow(&y, -3.0)?;
    let c2f = ks.cos_f.mul(&ks.cos_f)?.sub(&ks.sin_f.mul(&ks.sin_f)?)?;
    let s2f = ks.cos_f.mul(&ks.sin_f)?.scale(2.0);
    let r3 = substitute(&rho3, &ek, d)?;
    let c2 = substitute(&rho3.mul(&c2f)?, &ek, d)?;
    let s2 = substitute(&rho3.mul(&s2f)?, &ek, d)?;
    // cos 2omega, sin 2omega with omega = q - p
    let cos2w = mono(1.0, [0, 0, 0], Trig::Cos, [0, -2, 2], d)?;
    let sin2w = mono(1.0, [0, 0, 0], Trig::Sin, [0, -2, 2], d)?;
    let t = c2.mul(&cos2w)?.sub(&s2.mul(&sin2w)?)?;

    // sin^2 i = 2Q/G - Q^2/G^2, 1/G = (1/L*) (1 + x - P/L*)^{-1}
    let w = x.sub(&pl)?;
    let inv_g = PoissonSeries::one_plus_pow(&w, -1.0)?.scale(1.0 / ls);
    let qg = qq.mul(&inv_g)?;
    let s2i = qg.scale(2.0).sub(&qg.mul(&qg)?)?;

    // V = J2 mu R^2 / a^3 = J2 mu^4 / L^6 (R = 1)
    let v = PoissonSeries::one_plus_pow(&x, -6.0)?.scale(k.j2 * math::powi(mu, 4) / math::powi(ls, 6));
    let bracket = r3.scale(0.5).add(&s2i.mul(&t.sub(&r3)?)?.scale(0.75))?;
    let hj2 = v.mul(&bracket)?.neg();

    let h = kep.add(&hj2)?.filter(|t| !(t.kind == Trig::Const && t.degree() == 0));
    let (n, w1, w2) = j2_frequencies(cfg.a_star, k);
    Ok(J2Model { cfg: *cfg, l_star: ls, omega: [n, w1, w2], by_degree: h })
}

/// Delaunay actions `(dL = 0, P, Q)` for given `(e, i)` at `L*`.
pub fn elements_to_actions(e: f64, i: f64, l_star: f64) -> [f64; 3] {
    let r = math::sqrt(1.0 - e * e);
    [0.0, l_star * (1.0 - r), l_star * r * (1.0 - math::cos(i))]
}

/// Osculating elements `(a, e, i, M, omega, Omega)` from Delaunay variables.
pub fn delaunay_to_elements(l: f64, p: f64, q: f64, lam: f64, pp: f64, qq: f64, mu: f64) -> [f64; 6] {
    let g = l - p;
    let th = g - q;
    let a = l * l / mu;
    let e = math::sqrt((1.0 - (g / l) * (g / l)).max(0.0));
    let ci = (th / g).clamp(-1.0, 1.0);
    [a, e, math::acos(ci), lam + pp, qq - pp, -qq]
}

/// Direct evaluation of Kepler + J2 minus the Kepler constant at `L*`,
/// through Kepler's equation and `z = r sin i sin(f + omega)`.
pub fn direct_hamiltonian(l_star: f64, actions: &[f64; 3], angles: &[f64; 3], k: &PhysicalConstants) -> f64 {
    let mu = k.mu_e;
    let l = l_star + actions[0];
    let el = delaunay_to_elements(l, actions[1], actions[2], angles[0], angles[1], angles[2], mu);
    let (a, e, i, m, w) = (el[0], el[1], el[2], el[3], el[4]);
    let (ra, cf, sf) = crate::kepler::kepler_exact(e, m);
    let r = a * ra;
    let sfw = sf * math::cos(w) + cf * math::sin(w);
    let zr = math::sin(i) * sfw;
    let v = -k.j2 * mu / (r * r * r) * (0.5 - 1.5 * zr * zr);
    // Kepler energy difference written without cancellation
    let dl = actions[0];
    0.5 * mu * mu * dl * (2.0 * l_star + dl) / (l * l * l_star * l_star) + v
}

/// Averaged J2 term `-J2 mu R^2 / (a^3 (1-e^2)^{3/2}) (1/2 - 3/4 sin^2 i)`.
pub fn average_j2(a: f64, e: f64, i: f64, k: &PhysicalConstants) -> f64 {
    let s = math::sin(i);
    -k.j2 * k.mu_e / (a * a * a * math::pow(1.0 - e * e, 1.5)) * (0.5 - 0.75 * s * s)
}

/// The averaged J2 term expanded to degree `n` in e, as a series whose two
/// "actions" are `e^2` and `sin^2 i` (square-root exponents = powers of e, sin i).
pub fn average_j2_series(a: f64, n: u32, k: &PhysicalConstants) -> Result<PoissonSeries> {
    let c = -k.j2 * k.mu_e / (a * a * a);
    let mut s = PoissonSeries::zero(2, n + 2);
    for m in 0..=n / 2 {
        let b = math::binom(-1.5, m) * if m % 2 == 0 { 1.0 } else { -1.0 };
        let p = 2 * m;
        s.add_term(Term::new(0.5 * c * b, &[p, 0], Trig::Const, &[0, 0], p))?;
        s.add_term(Term::new(-0.75 * c * b, &[p, 2], Trig::Const, &[0, 0], p + 2))?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn frequencies_antisymmetric() {
        let (n, w1, w2) = j2_frequencies(6.6107, &k());
        assert_eq!(w1 + w2, 0.0);
        // geostationary: one sidereal day
        let sidereal = 2.0 * math::PI * 366.2564;
        assert!((n / sidereal - 1.0).abs() < 1e-3, "{}", n / sidereal);
    }

    #[test]
    fn linear_part_matches_frequencies() {
        let cfg = J2ModelConfig { a_star: 6.6107, n: 7 };
        let m = build_j2_hamiltonian(&cfg, &k()).unwrap();
        let lin: Vec<Term> = m.by_degree.terms().filter(|t| t.kind == Trig::Const && t.degree() == 2).collect();
        assert_eq!(lin.len(), 3);
        for t in lin {
            let j = t.exps.iter().position(|&e| e == 2).unwrap();
            assert!((t.coeff / m.omega[j] - 1.0).abs() < 1e-12, "{j} {} {}", t.coeff, m.omega[j]);
        }
    }

    #[test]
    fn kepler_limit_has_no_angles() {
        let mut kk = k();
        kk.j2 = 0.0;
        let m = build_j2_hamiltonian(&J2ModelConfig { a_star: 3.0, n: 5 }, &kk).unwrap();
        assert!(m.by_degree.terms().all(|t| t.kind == Trig::Const));
    }

    #[test]
    fn matches_direct_evaluation() {
        let cfg = J2ModelConfig { a_star: 6.6107, n: 11 };
        let kk = k();
        let m = build_j2_hamiltonian(&cfg, &kk).unwrap();
        let act = elements_to_actions(0.05, 0.05, m.l_star);
        let ang = [0.4, 1.3, -2.1];
        let series = m.by_degree.evaluate(&act, &ang).unwrap();
        let direct = direct_hamiltonian(m.l_star, &act, &ang, &kk) - direct_hamiltonian(m.l_star, &[0.0; 3], &ang, &kk);
        assert!(((series - direct) / direct).abs() < 1e-11, "{series} {direct}");
    }

    #[test]
    fn average_closed_form() {
        let kk = k();
        let a = 6.6107;
        assert!((average_j2(a, 0.0, 0.0, &kk) + kk.j2 * kk.mu_e / (2.0 * a * a * a)).abs() < 1e-12);
        let s = average_j2_series(a, 15, &kk).unwrap();
        let (e, i) = (0.1f64, 0.2f64);
        let v = s.evaluate(&[e * e, libm::sin(i).powi(2)], &[0.0, 0.0]).unwrap();
        assert!((v / average_j2(a, e, i, &kk) - 1.0).abs() < 1e-12);
    }
}
