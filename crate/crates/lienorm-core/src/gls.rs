//! Secular geolunisolar model: averaged J2 plus doubly averaged lunar and solar
//! quadrupoles, expanded around the forced equilibrium (Laplace plane) in
//! rescaled Poincare variables and written in action-angle form `(I1, I2, phi1, phi2)`.
//!
//! `(I1, phi1)` comes from the inclination pair `(Q, q)` and `(I2, phi2)` from the
//! eccentricity pair `(P, p)`.

use alloc::vec::Vec;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::j2::average_j2;
use crate::math;
use crate::series::{PoissonSeries, Term, Trig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlsModelConfig {
    /// Semimajor axis, R_E (a fixed parameter of the secular problem).
    pub a: f64,
    /// Truncation order of the book-keeping grade.
    pub n: u32,
}

impl GlsModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 1.0) {
            return Err(Error::Domain("semimajor axis must exceed one Earth radius".into()));
        }
        if self.n < 3 {
            return Err(Error::Domain("truncation order must be at least 3".into()));
        }
        Ok(())
    }
}

/// A perturbing body on an ellipse in a plane inclined `i0` on the equator, node at x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyParams {
    pub mu: f64,
    pub a: f64,
    pub e: f64,
    pub i0: f64,
}

impl BodyParams {
    pub fn moon(k: &PhysicalConstants) -> BodyParams {
        BodyParams { mu: k.mu_m, a: k.a_m, e: k.e_m, i0: k.i0 }
    }
    pub fn sun(k: &PhysicalConstants) -> BodyParams {
        BodyParams { mu: k.mu_s, a: k.a_s, e: k.e_s, i0: k.i0 }
    }
    /// `mu_b / (a_b^3 (1 - e_b^2)^{3/2})`.
    pub fn tidal_coefficient(&self) -> f64 {
        self.mu / (self.a * self.a * self.a * math::pow(1.0 - self.e * self.e, 1.5))
    }
    /// Unit normal of the perturber's orbital plane.
    pub fn normal(&self) -> [f64; 3] {
        [0.0, -math::sin(self.i0), math::cos(self.i0)]
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Unit angular-momentum vector and perigee direction for `(i, omega, Omega)`.
pub fn orbit_frame(i: f64, w: f64, o: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (so, co) = (math::sin(o), math::cos(o));
    let (sw, cw) = (math::sin(w), math::cos(w));
    let (si, ci) = (math::sin(i), math::cos(i));
    let p = [co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si];
    let q = [-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si];
    let h = [si * so, -si * co, ci];
    (p, q, h)
}

/// Quadrupole tidal potential `mu_b (r^2/2 - 3 (r.r_b)^2 / (2 r_b^2)) / r_b^3`.
pub fn quadrupole_potential(mu_b: f64, r: &[f64; 3], rb: &[f64; 3]) -> f64 {
    let rb2 = dot(rb, rb);
    let rb3 = rb2 * math::sqrt(rb2);
    let rr = dot(r, rb);
    mu_b / rb3 * (0.5 * dot(r, r) - 1.5 * rr * rr / rb2)
}

/// Closed-form double average of the quadrupole over both mean anomalies.
pub fn average_third_body(body: &BodyParams, a: f64, e: f64, i: f64, w: f64, o: f64) -> Result<f64> {
    if a >= body.a {
        return Err(Error::Domain("satellite semimajor axis must be below the perturber's".into()));
    }
    let (p, _, h) = orbit_frame(i, w, o);
    let n = body.normal();
    let hn = dot(&h, &n);
    let en = e * dot(&p, &n);
    let r2 = 1.0 + 1.5 * e * e;
    let rn2 = 0.5 * (1.0 - e * e) * (1.0 - hn * hn) + 2.5 * en * en;
    Ok(body.tidal_coefficient() * a * a * (-0.25 * r2 + 0.75 * rn2))
}

/// Full secular Hamiltonian in elements: averaged J2 plus both tidal terms.
pub fn secular_elements(a: f64, e: f64, i: f64, w: f64, o: f64, k: &PhysicalConstants) -> Result<f64> {
    Ok(average_j2(a, e, i, k)
        + average_third_body(&BodyParams::moon(k), a, e, i, w, o)?
        + average_third_body(&BodyParams::sun(k), a, e, i, w, o)?)
}

/// Secular Hamiltonian in Poincare variables `(X1, Y1, X2, Y2)`.
pub fn secular_poincare(a: f64, k: &PhysicalConstants, x: &[f64; 4]) -> f64 {
    let l = k.big_l(a);
    let (x1, y1, x2, y2) = (x[0], x[1], x[2], x[3]);
    let q = 0.5 * (x1 * x1 + y1 * y1);
    let p = 0.5 * (x2 * x2 + y2 * y2);
    let g = l - p;
    let th = g - q;
    let s = math::sqrt(g - 0.5 * q);
    let kj = k.j2 * k.mu_e * l * l * l / (a * a * a);
    let mut h = -kj * (-0.25 / (g * g * g) + 0.75 * th * th / math::powi(g, 5));
    let e2 = p * (2.0 * l - p) / (l * l);
    let se = math::sqrt(l - 0.5 * p) / l;
    let wm = y2 * x1 - x2 * y1;
    for body in [BodyParams::moon(k), BodyParams::sun(k)] {
        let (si0, ci0) = (math::sin(body.i0), math::cos(body.i0));
        let hn = (y1 * s * si0 + th * ci0) / g;
        let en = se * (x2 * si0 + wm * y1 * si0 / (2.0 * g) + s / g * wm * ci0);
        let rn2 = 0.5 * (g * g / (l * l)) * (1.0 - hn * hn) + 2.5 * en * en;
        h += body.tidal_coefficient() * a * a * (-0.25 * (1.0 + 1.5 * e2) + 0.75 * rn2);
    }
    h
}

/// Poincare variables from elements.
pub fn elements_to_poincare(a: f64, e: f64, i: f64, w: f64, o: f64, k: &PhysicalConstants) -> [f64; 4] {
    let l = k.big_l(a);
    let g = l * math::sqrt(1.0 - e * e);
    let p = l - g;
    let q = g * (1.0 - math::cos(i));
    let (pa, qa) = (-w - o, -o);
    let (rq, rp) = (math::sqrt(2.0 * q), math::sqrt(2.0 * p));
    [rq * math::sin(qa), rq * math::cos(qa), rp * math::sin(pa), rp * math::cos(pa)]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForcedEquilibrium {
    pub i_eq: f64,
    /// First-order estimate from the linear/quadratic coefficients.
    pub i_eq_first_order: f64,
    pub q_eq_action: f64,
    pub q_eq: f64,
    pub y1_eq: f64,
    pub a1: f64,
    pub b1: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub c12: f64,
    pub c34: f64,
    /// Quadratic coefficients `alpha X^2 + beta Y^2` of the two blocks before rescaling.
    pub quad: [f64; 4],
}

/// `kappa_J sin 2i + kappa_b sin 2(i - i0)` is the inclination gradient at `e = 0`, `Omega = 0`.
fn incl_coefficients(a: f64, k: &PhysicalConstants) -> (f64, f64, f64) {
    let kj = 0.75 * k.j2 * k.mu_e / (a * a * a);
    let mut kb = 0.0;
    for body in [BodyParams::moon(k), BodyParams::sun(k)] {
        kb += 0.375 * body.tidal_coefficient() * a * a;
    }
    (kj, kb, k.i0)
}

/// Linear and quadratic coefficients `A1 Y1 + B1 (X1^2 + Y1^2)` of the inclination block.
pub fn a1_b1(a: f64, k: &PhysicalConstants) -> (f64, f64) {
    let r = math::sqrt(k.mu_e);
    let tid = k.mu_m / (k.a_m * k.a_m * k.a_m) + k.mu_s / (k.a_s * k.a_s * k.a_s);
    let a1 = -3.0 * math::pow(a, 1.75) * math::sin(2.0 * k.i0) / (8.0 * math::pow(k.mu_e, 0.25)) * tid;
    let b1 = 0.75 * r * k.j2 / math::pow(a, 3.5)
        + 3.0 * tid * (2.0 - 3.0 * math::sin(k.i0) * math::sin(k.i0)) / (16.0 * math::sqrt(k.mu_e / (a * a * a)));
    (a1, b1)
}

/// Forced inclination: first-order guess then Newton on the inclination gradient.
pub fn forced_inclination(a: f64, k: &PhysicalConstants) -> Result<(f64, f64)> {
    let (a1, b1) = a1_b1(a, k);
    let first = -a1 / (2.0 * b1) / math::pow(k.mu_e * a, 0.25);
    let (kj, kb, i0) = incl_coefficients(a, k);
    let mut i = first;
    for _ in 0..50 {
        let f = kj * math::sin(2.0 * i) + kb * math::sin(2.0 * (i - i0));
        let df = 2.0 * kj * math::cos(2.0 * i) + 2.0 * kb * math::cos(2.0 * (i - i0));
        let d = f / df;
        i -= d;
        if math::abs(d) < 1e-15 {
            return Ok((i, first));
        }
    }
    Err(Error::Convergence("forced inclination Newton iteration".into()))
}

/// Taylor expansion `(c0 + dev)^alpha` for a series `dev` of positive grade.
fn pow_about(c0: f64, dev: &PoissonSeries, alpha: f64) -> Result<PoissonSeries> {
    Ok(PoissonSeries::one_plus_pow(&dev.scale(1.0 / c0), alpha)?.scale(math::pow(c0, alpha)))
}

/// Builds the secular Hamiltonian as a degree-graded series given the Poincare
/// variables as series (`y1` carries the constant `Y1_eq`).
fn secular_series(a: f64, k: &PhysicalConstants, x1: &PoissonSeries, y1: &PoissonSeries, x2: &PoissonSeries, y2: &PoissonSeries) -> Result<PoissonSeries> {
    let nd = x1.n_dof();
    let d = x1.max_bk();
    let l = k.big_l(a);
    let cst = |c: f64| PoissonSeries::constant(nd, d, c);
    let q = x1.mul(x1)?.add(&y1.mul(y1)?)?.scale(0.5);
    let p = x2.mul(x2)?.add(&y2.mul(y2)?)?.scale(0.5);
    let q0 = q.grade_part(0).max_abs_coeff();
    let dq = q.sub(&cst(q0))?;
    // G = L - P, Theta = G - Q
    let g_dev = p.neg();
    let inv_g = pow_about(l, &g_dev, -1.0)?;
    let inv_g3 = pow_about(l, &g_dev, -3.0)?;
    let inv_g5 = pow_about(l, &g_dev, -5.0)?;
    let th = cst(l).sub(&p)?.sub(&q)?;
    let s = pow_about(l - 0.5 * q0, &p.neg().sub(&dq.scale(0.5))?, 0.5)?;
    let kj = k.j2 * k.mu_e * l * l * l / (a * a * a);
    let mut h = inv_g3.scale(0.25).sub(&th.mul(&th)?.mul(&inv_g5)?.scale(0.75))?.scale(kj);
    let e2 = p.mul(&cst(2.0 * l).sub(&p)?)?.scale(1.0 / (l * l));
    let g2l2 = cst(l).sub(&p)?.powi(2)?.scale(1.0 / (l * l));
    let se = pow_about(l, &p.scale(-0.5), 0.5)?.scale(1.0 / l);
    let wm = y2.mul(x1)?.sub(&x2.mul(y1)?)?;
    let y1s = y1.mul(&s)?;
    for body in [BodyParams::moon(k), BodyParams::sun(k)] {
        let (si0, ci0) = (math::sin(body.i0), math::cos(body.i0));
        let hn = y1s.scale(si0).add(&th.scale(ci0))?.mul(&inv_g)?;
        let inner = x2
            .scale(si0)
            .add(&wm.mul(y1)?.mul(&inv_g)?.scale(0.5 * si0))?
            .add(&s.mul(&inv_g)?.mul(&wm)?.scale(ci0))?;
        let en = se.mul(&inner)?;
        let rn2 = g2l2.mul(&cst(1.0).sub(&hn.mul(&hn)?)?)?.scale(0.5).add(&en.mul(&en)?.scale(2.5))?;
        let hb = cst(1.0).add(&e2.scale(1.5))?.scale(-0.25).add(&rn2.scale(0.75))?;
        h = h.add(&hb.scale(body.tidal_coefficient() * a * a))?;
    }
    Ok(h)
}

/// Built geolunisolar model.
#[derive(Clone, Debug)]
pub struct GlsModel {
    pub cfg: GlsModelConfig,
    pub l: f64,
    pub eq: ForcedEquilibrium,
    /// Hamiltonian (constant and vanishing linear terms removed), grade = sqrt-action degree, up to `n + 2`.
    pub by_degree: PoissonSeries,
    /// Largest linear (gradient) coefficient found at the equilibrium before removal.
    pub gradient_residual: f64,
}

fn aa_pair(c: f64, dof: usize, d: u32) -> Result<(PoissonSeries, PoissonSeries)> {
    let mut e = [0u32; 2];
    e[dof] = 1;
    let mut w = [0i32; 2];
    w[dof] = 1;
    let r2 = math::sqrt(2.0);
    let x = PoissonSeries::monomial(2, d, Term::new(c * r2, &e, Trig::Sin, &w, 1))?;
    let y = PoissonSeries::monomial(2, d, Term::new(r2 / c, &e, Trig::Cos, &w, 1))?;
    Ok((x, y))
}

fn block_quadratic(h: &PoissonSeries, dof: usize) -> (f64, f64) {
    // alpha X^2 + beta Y^2 with X = sqrt(2I) sin, Y = sqrt(2I) cos: I (alpha+beta) + I (beta-alpha) cos 2phi
    let (mut c0, mut c2) = (0.0, 0.0);
    for t in h.terms() {
        if t.degree() == 2 && t.exps[dof] == 2 {
            match t.kind {
                Trig::Const => c0 += t.coeff,
                Trig::Cos if t.wave[dof] == 2 => c2 += t.coeff,
                _ => {}
            }
        }
    }
    (0.5 * (c0 - c2), 0.5 * (c0 + c2))
}

/// Builds the geolunisolar Hamiltonian around the forced equilibrium.
pub fn build_gls_hamiltonian(cfg: &GlsModelConfig, k: &PhysicalConstants) -> Result<GlsModel> {
    cfg.validate()?;
    let d = cfg.n + 2;
    let l = k.big_l(cfg.a);
    let (i_closed, first) = forced_inclination(cfg.a, k)?;
    let build = |y1_eq: f64, c12: f64, c34: f64, deg: u32| -> Result<PoissonSeries> {
        let (x1, dy1) = aa_pair(c12, 0, deg)?;
        let (x2, y2) = aa_pair(c34, 1, deg)?;
        let y1 = dy1.add(&PoissonSeries::constant(2, deg, y1_eq))?;
        secular_series(cfg.a, k, &x1, &y1, &x2, &y2)
    };
    // Newton polish of Y1_eq on the series itself; with unit scaling Y1 - Y1_eq = sqrt(2 I1) cos(phi1)
    let mut y1_eq = math::sqrt(2.0 * l * (1.0 - math::cos(i_closed)));
    let mut h0 = build(y1_eq, 1.0, 1.0, 2)?;
    for _ in 0..4 {
        let g = h0.terms().filter(|t| t.degree() == 1 && t.exps[0] == 1 && t.kind == Trig::Cos).map(|t| t.coeff).sum::<f64>()
            / math::sqrt(2.0);
        let (_, be) = block_quadratic(&h0, 0);
        let step = g / (2.0 * be);
        if !(math::abs(step) > 1e-16 * y1_eq.max(1e-300)) {
            break;
        }
        y1_eq -= step;
        h0 = build(y1_eq, 1.0, 1.0, 2)?;
    }
    let q_eq = 0.5 * y1_eq * y1_eq;
    let i_eq = math::acos(1.0 - q_eq / l);
    let (al1, be1) = block_quadratic(&h0, 0);
    let (al2, be2) = block_quadratic(&h0, 1);
    if al1 * be1 <= 0.0 || al2 * be2 <= 0.0 {
        return Err(Error::Domain("equilibrium is not elliptic".into()));
    }
    let c12 = math::pow(be1 / al1, 0.25);
    let c34 = math::pow(be2 / al2, 0.25);
    let nu1 = 2.0 * al1.signum() * math::sqrt(al1 * be1);
    let nu2 = 2.0 * al2.signum() * math::sqrt(al2 * be2);
    let full = build(y1_eq, c12, c34, d)?;
    let scale = full.max_abs_coeff();
    let gradient_residual = full.filter(|t| t.degree() == 1).max_abs_coeff();
    // after rescaling the degree-2 angle terms vanish up to round-off
    let leftover = full.filter(|t| t.degree() == 2 && t.kind != Trig::Const).max_abs_coeff();
    if leftover > 1e-9 * (math::abs(nu1) + math::abs(nu2)) {
        return Err(Error::Domain("quadratic part not diagonalized by the rescaling".into()));
    }
    if gradient_residual > 1e-9 * scale {
        return Err(Error::Convergence("equilibrium gradient does not vanish".into()));
    }
    let by_degree = full.filter(|t| t.degree() >= 3 || (t.degree() == 2 && t.kind == Trig::Const));
    let (a1, b1) = a1_b1(cfg.a, k);
    let eq = ForcedEquilibrium {
        i_eq,
        i_eq_first_order: first,
        q_eq_action: q_eq,
        q_eq: 0.0,
        y1_eq,
        a1,
        b1,
        nu1,
        nu2,
        c12,
        c34,
        quad: [al1, be1, al2, be2],
    };
    Ok(GlsModel { cfg: *cfg, l, eq, by_degree, gradient_residual })
}

impl GlsModel {
    /// Poincare variables from action-angle variables.
    pub fn poincare(&self, act: &[f64; 2], ang: &[f64; 2]) -> [f64; 4] {
        let r1 = math::sqrt(2.0 * act[0].max(0.0));
        let r2 = math::sqrt(2.0 * act[1].max(0.0));
        [
            self.eq.c12 * r1 * math::sin(ang[0]),
            self.eq.y1_eq + r1 * math::cos(ang[0]) / self.eq.c12,
            self.eq.c34 * r2 * math::sin(ang[1]),
            r2 * math::cos(ang[1]) / self.eq.c34,
        ]
    }

    /// Action-angle variables from Poincare variables.
    pub fn action_angle(&self, x: &[f64; 4]) -> ([f64; 2], [f64; 2]) {
        let u1 = x[0] / self.eq.c12;
        let v1 = (x[1] - self.eq.y1_eq) * self.eq.c12;
        let u2 = x[2] / self.eq.c34;
        let v2 = x[3] * self.eq.c34;
        (
            [0.5 * (u1 * u1 + v1 * v1), 0.5 * (u2 * u2 + v2 * v2)],
            [math::atan2(u1, v1), math::atan2(u2, v2)],
        )
    }

    /// Poincare inclination pair for an orbit normal tilted `i_rel` from the
    /// Laplace-plane normal, at azimuth `psi` around it.
    pub fn tilted_pair(&self, g: f64, i_rel: f64, psi: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.eq.i_eq), math::cos(self.eq.i_eq));
        let n = [0.0, -s, c];
        let v = [0.0, c, s];
        let (sr, cr) = (math::sin(i_rel), math::cos(i_rel));
        let (sp, cp) = (math::sin(psi), math::cos(psi));
        let h = [sr * cp, cr * n[1] + sr * sp * v[1], cr * n[2] + sr * sp * v[2]];
        let i = math::acos(h[2].clamp(-1.0, 1.0));
        let o = math::atan2(h[0], -h[1]);
        let rq = math::sqrt(2.0 * g * (1.0 - math::cos(i)));
        (-rq * math::sin(o), rq * math::cos(o))
    }

    /// Angle-maximized actions `(I1, I2)` for eccentricity `e` and inclination
    /// `i_rel` measured from the Laplace plane; `(0, 0)` maps to the equilibrium.
    pub fn elements_to_actions(&self, e: f64, i_rel: f64) -> [f64; 2] {
        let g = self.l * math::sqrt(1.0 - e * e);
        let p = self.l - g;
        let c2 = self.eq.c34;
        let i2 = p * (1.0 / (c2 * c2)).max(c2 * c2);
        let f = |t: f64| {
            let (x1, y1) = self.tilted_pair(g, i_rel, t);
            self.action_angle(&[x1, y1, 0.0, 0.0]).0[0]
        };
        [max_on_circle(f), i2]
    }
}

/// Max of a smooth periodic function: 720-node scan then golden-section refinement.
fn max_on_circle(f: impl Fn(f64) -> f64) -> f64 {
    let nodes = 720;
    let h = math::TAU / nodes as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for m in 0..nodes {
        let v = f(h * m as f64);
        if v > best {
            best = v;
            arg = h * m as f64;
        }
    }
    let (mut lo, mut hi) = (arg - h, arg + h);
    let gr = 0.5 * (math::sqrt(5.0) - 1.0);
    for _ in 0..60 {
        let m1 = hi - gr * (hi - lo);
        let m2 = lo + gr * (hi - lo);
        if f(m1) > f(m2) { hi = m2 } else { lo = m1 }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// Action-angle `(I1, I2)` of an orbit with given elements (angles included).
pub fn elements_to_action_angle(model: &GlsModel, e: f64, i: f64, w: f64, o: f64, k: &PhysicalConstants) -> ([f64; 2], [f64; 2]) {
    model.action_angle(&elements_to_poincare(model.cfg.a, e, i, w, o, k))
}

/// Leading-order secular frequency `(3/2) sqrt(mu) R^2 J2 / a^{7/2}`.
pub fn j2_secular_rate(a: f64, k: &PhysicalConstants) -> f64 {
    1.5 * math::sqrt(k.mu_e) * k.j2 / math::pow(a, 3.5)
}

/// Laplace-plane inclinations over a list of semimajor axes.
pub fn laplace_plane(a_list: &[f64], k: &PhysicalConstants) -> Result<Vec<f64>> {
    a_list.iter().map(|&a| forced_inclination(a, k).map(|(i, _)| i)).collect()
}
