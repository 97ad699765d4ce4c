//! Independent numerical checks: Hamiltonian flows of series (in Cartesian
//! Poincare-type variables where the actions may vanish), drift measurement and
//! trapezoidal quadrature averages of the closed-form builders.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::gls::{BodyParams, orbit_frame, quadrupole_potential};
use crate::kepler::kepler_exact;
use crate::math;
use crate::series::{MAX_DOF, PoissonSeries, Trig};

/// How a degree of freedom is represented in the state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    /// `(x, y) = sqrt(2A) (sin phi, cos phi)`; regular at `A = 0`.
    Cartesian,
    /// `(phi, A)`; the action may be negative if it only enters with even square-root powers.
    Polar,
}

struct FieldTerm {
    coeff: f64,
    kind: Trig,
    /// Index of the `(exponent, harmonic)` factor of each dof in [`HamiltonianField::keys`].
    slot: [usize; MAX_DOF],
}

/// A series compiled for evaluation of the value and the Hamiltonian vector field.
///
/// Terms that are not polynomial in a Cartesian dof are dropped when their coefficient is
/// below [`FIELD_DROP_TOL`] times the largest one (truncation debris) and rejected otherwise.
///
/// The state holds one `(coordinate, momentum)` pair per dof: `(x, y)` or `(phi, A)`,
/// so that `q' = dH/dp`, `p' = -dH/dq` in both cases.
pub const FIELD_DROP_TOL: f64 = 1e-12;

pub struct HamiltonianField {
    coords: Vec<Coord>,
    terms: Vec<FieldTerm>,
    /// Distinct `(exponent, harmonic)` pairs per dof; each is evaluated once per call.
    keys: Vec<Vec<(u32, i32)>>,
}

fn cpowi(z: C, k: u32) -> C {
    let mut r = C::new(1.0, 0.0);
    for _ in 0..k {
        r *= z;
    }
    r
}

impl HamiltonianField {
    pub fn new(s: &PoissonSeries, coords: &[Coord]) -> Result<HamiltonianField> {
        if coords.len() != s.n_dof() {
            return Err(Error::Dimension { left: s.n_dof(), right: coords.len() });
        }
        let mut terms = Vec::with_capacity(s.len());
        let floor = FIELD_DROP_TOL * s.max_abs_coeff();
        let mut index: Vec<BTreeMap<(u32, i32), usize>> = vec![BTreeMap::new(); coords.len()];
        'terms: for t in s.terms() {
            for (j, c) in coords.iter().enumerate() {
                let (m, k) = (t.exps[j], t.wave[j].unsigned_abs());
                if *c == Coord::Cartesian && (m < k || (m - k) % 2 != 0) {
                    if math::abs(t.coeff) <= floor {
                        continue 'terms;
                    }
                    return Err(Error::NonPolynomial { dof: j });
                }
            }
            let mut slot = [0; MAX_DOF];
            for j in 0..coords.len() {
                let key = (t.exps[j], t.wave[j]);
                let next = index[j].len();
                slot[j] = *index[j].entry(key).or_insert(next);
            }
            terms.push(FieldTerm { coeff: t.coeff, kind: t.kind, slot });
        }
        let keys = index
            .into_iter()
            .map(|m| {
                let mut v = vec![(0, 0); m.len()];
                for (k, i) in m {
                    v[i] = k;
                }
                v
            })
            .collect();
        Ok(HamiltonianField { coords: coords.to_vec(), terms, keys })
    }

    pub fn n_dof(&self) -> usize {
        self.coords.len()
    }

    /// Options with the polar angles of this field added to the wrapped components.
    fn wrapping(&self, opts: &IntegratorOptions) -> IntegratorOptions {
        let mut o = opts.clone();
        for (j, c) in self.coords.iter().enumerate() {
            if *c == Coord::Polar && !o.wrap.contains(&(2 * j)) {
                o.wrap.push(2 * j);
            }
        }
        o
    }

    /// Factor of dof `j` and its partials with respect to `(q_j, p_j)`.
    fn factor(&self, j: usize, m: u32, k: i32, q: f64, p: f64) -> (C, C, C) {
        match self.coords[j] {
            Coord::Polar => {
                let ph = C::new(math::cos(k as f64 * q), math::sin(k as f64 * q));
                let (r, dr) = if m == 0 {
                    (1.0, 0.0)
                } else if m % 2 == 0 {
                    let e = (m / 2) as i32;
                    (math::powi(p, e), e as f64 * math::powi(p, e - 1))
                } else {
                    let h = m as f64 / 2.0;
                    (math::pow(p, h), h * math::pow(p, h - 1.0))
                };
                (ph * r, ph * C::new(0.0, k as f64 * r), ph * dr)
            }
            Coord::Cartesian => {
                let (x, y) = (q, p);
                let ak = k.unsigned_abs();
                let z = if k >= 0 { C::new(y, x) } else { C::new(y, -x) };
                let w = cpowi(z, ak);
                // dz/dx = i (or -i for the conjugate), dz/dy = 1
                let dw = if ak == 0 { C::new(0.0, 0.0) } else { cpowi(z, ak - 1) * ak as f64 };
                let dwx = if k >= 0 { dw * C::new(0.0, 1.0) } else { dw * C::new(0.0, -1.0) };
                let dwy = dw;
                let pw = (m - ak) / 2;
                let rho = x * x + y * y;
                let rp = math::powi(rho, pw as i32);
                let drp = if pw == 0 { 0.0 } else { pw as f64 * math::powi(rho, pw as i32 - 1) };
                let s = math::pow(2.0, -(m as f64) / 2.0);
                let g = w * (rp * s);
                let gx = (dwx * rp + w * (2.0 * x * drp)) * s;
                let gy = (dwy * rp + w * (2.0 * y * drp)) * s;
                (g, gx, gy)
            }
        }
    }

    /// Every distinct factor of every dof at `state`.
    fn factor_tables(&self, state: &[f64]) -> Vec<Vec<(C, C, C)>> {
        self.keys
            .iter()
            .enumerate()
            .map(|(j, ks)| ks.iter().map(|&(m, k)| self.factor(j, m, k, state[2 * j], state[2 * j + 1])).collect())
            .collect()
    }

    /// Value and gradient `dH/d(state)`.
    pub fn value_grad(&self, state: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n_dof();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let tables = self.factor_tables(state);
        let mut total = 0.0;
        let mut f = [(C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)); MAX_DOF];
        for t in &self.terms {
            for j in 0..n {
                f[j] = tables[j][t.slot[j]];
            }
            let part = |z: C| match t.kind {
                Trig::Const | Trig::Cos => z.re,
                Trig::Sin => z.im,
            };
            let mut prod = C::new(1.0, 0.0);
            for fj in f.iter().take(n) {
                prod *= fj.0;
            }
            total += t.coeff * part(prod);
            for j in 0..n {
                let mut others = C::new(1.0, 0.0);
                for (i, fi) in f.iter().enumerate().take(n) {
                    if i != j {
                        others *= fi.0;
                    }
                }
                grad[2 * j] += t.coeff * part(others * f[j].1);
                grad[2 * j + 1] += t.coeff * part(others * f[j].2);
            }
        }
        total
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        let mut g = vec![0.0; state.len()];
        self.value_grad(state, &mut g)
    }

    /// Sum of the absolute values of the individual terms: the scale of `H` free of cancellations.
    pub fn abs_sum(&self, state: &[f64]) -> f64 {
        let n = self.n_dof();
        let tables = self.factor_tables(state);
        let mut total = 0.0;
        for t in &self.terms {
            let mut prod = C::new(1.0, 0.0);
            for j in 0..n {
                prod *= tables[j][t.slot[j]].0;
            }
            total += math::abs(t.coeff) * math::sqrt(prod.norm_sqr());
        }
        total
    }

    /// `(q', p') = (dH/dp, -dH/dq)`.
    pub fn vector_field(&self, state: &[f64], out: &mut [f64]) {
        let mut g = vec![0.0; state.len()];
        self.value_grad(state, &mut g);
        for j in 0..self.n_dof() {
            out[2 * j] = g[2 * j + 1];
            out[2 * j + 1] = -g[2 * j];
        }
    }

    /// State from actions and angles.
    pub fn state_from(&self, actions: &[f64], angles: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; 2 * self.n_dof()];
        for j in 0..self.n_dof() {
            match self.coords[j] {
                Coord::Polar => {
                    s[2 * j] = angles[j];
                    s[2 * j + 1] = actions[j];
                }
                Coord::Cartesian => {
                    let r = math::sqrt(2.0 * actions[j].max(0.0));
                    s[2 * j] = r * math::sin(angles[j]);
                    s[2 * j + 1] = r * math::cos(angles[j]);
                }
            }
        }
        s
    }

    /// Actions and angles from a state.
    pub fn actions_angles(&self, s: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_dof();
        let (mut a, mut p) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            match self.coords[j] {
                Coord::Polar => {
                    p[j] = s[2 * j];
                    a[j] = s[2 * j + 1];
                }
                Coord::Cartesian => {
                    let (x, y) = (s[2 * j], s[2 * j + 1]);
                    a[j] = 0.5 * (x * x + y * y);
                    p[j] = math::atan2(x, y);
                }
            }
        }
        (a, p)
    }
}

/// Step-size controller settings.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Keep every `sample_every`-th accepted step (the last one is always kept).
    pub sample_every: usize,
    /// State components reduced modulo `2 pi` after every step (polar angles).
    pub wrap: Vec<usize>,
    /// Constant step without error control.
    pub fixed_step: Option<f64>,
}

impl IntegratorOptions {
    pub fn new(tol: f64) -> IntegratorOptions {
        IntegratorOptions { tol, h0: 0.0, h_min: 1e-14, max_steps: 50_000_000, sample_every: 1, wrap: Vec::new(), fixed_step: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    /// Energy magnitude the relative error refers to.
    pub energy_scale: f64,
    pub steps: usize,
    pub tol: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Largest energy deviation from the initial value, relative to `energy_scale`.
    pub fn energy_error(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0f64, |m, e| m.max(math::abs(e - e0))) / self.energy_scale.max(f64::MIN_POSITIVE)
    }
}

// Dormand-Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Starting step from the sizes of the state, the field and its first difference.
#[allow(clippy::too_many_arguments)]
fn initial_step(f: &dyn Fn(&[f64], &mut [f64]), y: &[f64], f0: &[f64], dir: f64, span: f64, tol: f64, y1: &mut [f64], f1: &mut [f64]) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| tol * (1.0 + math::abs(*v))).collect();
    let rms = |v: &dyn Fn(usize) -> f64| math::sqrt((0..y.len()).map(|i| v(i) * v(i)).sum::<f64>() / y.len().max(1) as f64);
    let d0 = rms(&|i| y[i] / sc[i]);
    let d1 = rms(&|i| f0[i] / sc[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    for i in 0..y.len() {
        y1[i] = y[i] + dir * h0 * f0[i];
    }
    f(y1, f1);
    let d2 = rms(&|i| (f1[i] - f0[i]) / sc[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { math::pow(0.01 / d1.max(d2), 0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Adaptive Dormand-Prince 5(4) integration of `y' = f(y)` from 0 to `t_end` (may be negative).
pub fn integrate_ode(
    f: &dyn Fn(&[f64], &mut [f64]),
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    energy: &dyn Fn(&[f64]) -> f64,
) -> Result<Trajectory> {
    let n = y0.len();
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let span = math::abs(t_end);
    let mut y = y0.to_vec();
    let mut t = 0.0f64;
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(&y, &mut k[0]);
    let mut h = match opts.fixed_step {
        Some(hf) if hf > 0.0 => hf,
        Some(_) => return Err(Error::Argument("fixed step must be positive".into())),
        None if opts.h0 > 0.0 => opts.h0,
        None => initial_step(f, &y, &k[0], dir, span, opts.tol, &mut tmp, &mut ynew),
    };
    let mut traj = Trajectory { times: vec![0.0], states: vec![y.clone()], energy: vec![energy(&y)], energy_scale: 0.0, steps: 0, tol: opts.tol };
    traj.energy_scale = math::abs(traj.energy[0]);
    let mut accepted = 0usize;
    while t < span {
        if traj.steps >= opts.max_steps {
            return Err(Error::Convergence("integrator exceeded the step budget".into()));
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let hs = h * dir;
        let stage = |coef: &[(usize, f64)], k: &Vec<Vec<f64>>, out: &mut Vec<f64>| {
            for i in 0..n {
                out[i] = y[i] + hs * coef.iter().map(|&(s, c)| c * k[s][i]).sum::<f64>();
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        f(&tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        f(&tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        f(&tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        f(&tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        f(&tmp, &mut k[5]);
        stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k, &mut ynew);
        f(&ynew, &mut k[6]);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = opts.tol * (1.0 + math::abs(y[i]).max(math::abs(ynew[i])));
            err = err.max(math::abs(e) / sc);
        }
        traj.steps += 1;
        if opts.fixed_step.is_some() {
            err = 0.0;
        }
        if err <= 1.0 {
            t = if last { span } else { t + h };
            y.copy_from_slice(&ynew);
            for &i in &opts.wrap {
                y[i] -= math::TAU * libm::floor(y[i] / math::TAU);
            }
            let (a, b) = k.split_at_mut(6);
            a[0].copy_from_slice(&b[0]);
            accepted += 1;
            if accepted % opts.sample_every.max(1) == 0 || t >= span {
                traj.times.push(t * dir);
                traj.states.push(y.clone());
                traj.energy.push(energy(&y));
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Domain("non-finite state; try Cartesian coordinates near zero actions".into()));
            }
        }
        if let Some(hf) = opts.fixed_step {
            h = hf;
            continue;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * math::pow(err, -0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < opts.h_min * span.max(1.0) && t < span {
            return Err(Error::Domain("step size underflow near a coordinate singularity; use Cartesian coordinates".into()));
        }
    }
    Ok(traj)
}

/// Integrates Hamilton's equations of a compiled series.
pub fn integrate(field: &HamiltonianField, initial: &[f64], t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let opts = field.wrapping(opts);
    let mut tr = integrate_ode(&|y, out| field.vector_field(y, out), initial, t_end, &opts, &|y| field.value(y))?;
    tr.energy_scale = field.abs_sum(initial);
    Ok(tr)
}

/// As [`integrate`], with one extra state component accumulating `int rate(x(t)) dt`.
///
/// The accumulated component measures the change of a quasi-integral whose rate
/// is `rate`; its error scales with the rate, not with the state.
pub fn integrate_tracked(
    field: &HamiltonianField,
    rate: &HamiltonianField,
    initial: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if rate.coords != field.coords {
        return Err(Error::Argument("rate and field use different coordinates".into()));
    }
    let n = initial.len();
    let mut y0 = initial.to_vec();
    y0.push(0.0);
    let opts = &field.wrapping(opts);
    let mut tr = integrate_ode(
        &|y, out| {
            field.vector_field(&y[..n], &mut out[..n]);
            out[n] = rate.value(&y[..n]);
        },
        &y0,
        t_end,
        opts,
        &|y| field.value(&y[..n]),
    )?;
    tr.energy_scale = field.abs_sum(initial);
    Ok(tr)
}

/// Largest `|q(t) - q(0)|` over the samples.
pub fn drift_check(traj: &Trajectory, quantity: &dyn Fn(&[f64]) -> f64) -> f64 {
    let q0 = quantity(&traj.states[0]);
    traj.states.iter().fold(0.0f64, |m, s| m.max(math::abs(quantity(s) - q0)))
}

/// Tensor-product trapezoidal average over the listed angle slots of `base`.
pub fn quadrature_average(f: &dyn Fn(&[f64]) -> f64, base: &[f64], angle_dims: &[usize], nodes: usize) -> Result<f64> {
    if nodes == 0 || angle_dims.iter().any(|&d| d >= base.len()) {
        return Err(Error::Argument("bad quadrature specification".into()));
    }
    let mut x = base.to_vec();
    let mut idx = vec![0usize; angle_dims.len()];
    let total = nodes.pow(angle_dims.len() as u32);
    let h = math::TAU / nodes as f64;
    let mut sum = 0.0;
    for _ in 0..total {
        for (q, &d) in angle_dims.iter().enumerate() {
            x[d] = h * idx[q] as f64;
        }
        sum += f(&x);
        for v in idx.iter_mut() {
            *v += 1;
            if *v < nodes {
                break;
            }
            *v = 0;
        }
    }
    Ok(sum / total as f64)
}

/// Position on a Keplerian ellipse at mean anomaly `m`.
pub fn kepler_position(a: f64, e: f64, i: f64, w: f64, o: f64, m: f64) -> [f64; 3] {
    let (p, q, _) = orbit_frame(i, w, o);
    let (r, cf, sf) = kepler_exact(e, m);
    let (x, y) = (a * r * cf, a * r * sf);
    [x * p[0] + y * q[0], x * p[1] + y * q[1], x * p[2] + y * q[2]]
}

/// Quadrature average over the mean anomaly of the J2 potential term.
pub fn j2_average_quadrature(a: f64, e: f64, i: f64, w: f64, k: &PhysicalConstants, nodes: usize) -> Result<f64> {
    let f = |x: &[f64]| {
        let r = kepler_position(a, e, i, w, 0.0, x[0]);
        let rr = math::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
        k.j2 * k.mu_e / (rr * rr * rr) * (1.5 * r[2] * r[2] / (rr * rr) - 0.5)
    };
    quadrature_average(&f, &[0.0], &[0], nodes)
}

/// Quadrature average of the quadrupole over both mean anomalies.
pub fn third_body_quadrature(body: &BodyParams, a: f64, e: f64, i: f64, w: f64, o: f64, nodes: usize) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::Argument("bad quadrature specification".into()));
    }
    let h = math::TAU / nodes as f64;
    let sat: Vec<[f64; 3]> = (0..nodes).map(|j| kepler_position(a, e, i, w, o, h * j as f64)).collect();
    let per: Vec<[f64; 3]> = (0..nodes).map(|j| kepler_position(body.a, body.e, body.i0, 0.0, 0.0, h * j as f64)).collect();
    let mut sum = 0.0;
    for r in &sat {
        for rb in &per {
            sum += quadrupole_potential(body.mu, r, rb);
        }
    }
    Ok(sum / (nodes * nodes) as f64)
}
