//! Stability estimates from normal-form remainders: sup-norms over `(e, i)`
//! boxes, drift norms of quasi-integrals, stability times, critical inclination,
//! optimal-order scans and the a-priori Lie-series bound.

use alloc::vec::Vec;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::math;
use crate::norm::{NormMode, sup_norm_points};
use crate::normalform::{NormalFormResult, NormalizeOptions, ResonantModule, normalize_with};
use crate::series::{MAX_DOF, PoissonSeries, Term, Trig};

/// Rectangle in `(e, i)` with grid resolution and angle nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub e_range: [f64; 2],
    pub i_range: [f64; 2],
    pub grid: [usize; 2],
    pub angle_nodes: usize,
}

impl DomainBox {
    pub fn new(e_range: [f64; 2], i_range: [f64; 2], grid: [usize; 2], angle_nodes: usize) -> Result<DomainBox> {
        let d = DomainBox { e_range, i_range, grid, angle_nodes };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let [e0, e1] = self.e_range;
        let [i0, i1] = self.i_range;
        if !(0.0 <= e0 && e0 <= e1 && e1 < 1.0) {
            return Err(Error::Domain("eccentricity range must satisfy 0 <= e_min <= e_max < 1".into()));
        }
        if !(i0 <= i1) || !i0.is_finite() || !i1.is_finite() {
            return Err(Error::Domain("inclination range is empty".into()));
        }
        if self.grid[0] == 0 || self.grid[1] == 0 || self.angle_nodes == 0 {
            return Err(Error::Argument("empty grid".into()));
        }
        Ok(())
    }

    /// Same box with a different inclination upper bound.
    pub fn with_i_max(&self, i_max: f64) -> DomainBox {
        DomainBox { i_range: [self.i_range[0], i_max], ..self.clone() }
    }

    /// Grid nodes (endpoints included; a single node sits at the lower corner).
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let lin = |r: [f64; 2], n: usize, k: usize| if n <= 1 { r[0] } else { r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(self.grid[0] * self.grid[1]);
        for a in 0..self.grid[0] {
            for b in 0..self.grid[1] {
                out.push((lin(self.e_range, self.grid[0], a), lin(self.i_range, self.grid[1], b)));
            }
        }
        out
    }

    /// Action points for a model-specific `(e, i) -> actions` map.
    pub fn action_points(&self, map: &dyn Fn(f64, f64) -> Vec<f64>) -> Vec<Vec<f64>> {
        self.nodes().into_iter().map(|(e, i)| map(e, i)).collect()
    }
}

/// A sup-norm in both modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormPair {
    pub grid: f64,
    pub majorant: f64,
}

impl NormPair {
    pub fn get(&self, mode: NormMode) -> f64 {
        match mode {
            NormMode::Grid => self.grid,
            NormMode::Majorant => self.majorant,
        }
    }
}

/// Sup-norm of `s` over the box.
pub fn domain_norm(s: &PoissonSeries, dom: &DomainBox, map: &dyn Fn(f64, f64) -> Vec<f64>, mode: NormMode) -> Result<f64> {
    dom.validate()?;
    sup_norm_points(s, &dom.action_points(map), dom.angle_nodes, mode)
}

/// Sup-norm of `s` over the box in both modes.
pub fn domain_norm_pair(s: &PoissonSeries, dom: &DomainBox, map: &dyn Fn(f64, f64) -> Vec<f64>) -> Result<NormPair> {
    dom.validate()?;
    let pts = dom.action_points(map);
    Ok(NormPair {
        grid: sup_norm_points(s, &pts, dom.angle_nodes, NormMode::Grid)?,
        majorant: sup_norm_points(s, &pts, dom.angle_nodes, NormMode::Majorant)?,
    })
}

/// Remainder restricted to the slice where the listed actions vanish.
pub fn remainder_on_slice(res: &NormalFormResult, zero_dofs: &[usize]) -> Result<PoissonSeries> {
    Ok(res.remainder()?.filter(|t| zero_dofs.iter().all(|&j| t.exps[j] == 0)))
}

/// `dA_j/dt = -dR/dphi_j` restricted to the slice where `zero_dofs` vanish.
pub fn action_drift_series(remainder: &PoissonSeries, j: usize, zero_dofs: &[usize]) -> Result<PoissonSeries> {
    Ok(remainder.d_angle(j)?.neg().filter(|t| zero_dofs.iter().all(|&d| t.exps[d] == 0)))
}

/// The linear integral `m . A` conserved by a normal form whose module has generator `m`.
pub fn module_integral(n_dof: usize, max_bk: u32, m: &[i32]) -> Result<PoissonSeries> {
    let mut s = PoissonSeries::zero(n_dof, max_bk);
    for (j, &c) in m.iter().enumerate().take(n_dof) {
        if c != 0 {
            let mut e = [0u32; MAX_DOF];
            e[j] = 2;
            s.add_term(Term { coeff: c as f64, exps: e, kind: Trig::Const, wave: [0; MAX_DOF], grade: 0 })?;
        }
    }
    Ok(s)
}

/// `{K, R}` with `K = m . I` the quasi-integral of a one-generator resonant module.
pub fn kozai_drift_series(res: &NormalFormResult) -> Result<PoissonSeries> {
    let m = res.module.generators.first().ok_or_else(|| Error::Argument("module has no generator".into()))?;
    let r = res.remainder()?;
    let k = module_integral(r.n_dof(), r.max_bk(), m)?;
    k.poisson_bracket(&r)
}

/// `T1 = delta_L / ||dL/dt||` (infinite for a vanishing drift).
pub fn stability_time_l(delta_l: f64, drift_norm: f64) -> f64 {
    if drift_norm == 0.0 { f64::INFINITY } else { delta_l / drift_norm }
}

/// `Delta L` corresponding to `Delta a` at `a*`: `(1/2) sqrt(mu/a*) Delta a`.
pub fn delta_l_from_a(delta_a: f64, a_star: f64, k: &PhysicalConstants) -> f64 {
    0.5 * math::sqrt(k.mu_e / a_star) * delta_a
}

/// `T2 = (1/2) sqrt(mu/a*) Delta a / ||dL/dt||`.
pub fn stability_time_a(delta_a: f64, a_star: f64, drift_norm: f64, k: &PhysicalConstants) -> f64 {
    stability_time_l(delta_l_from_a(delta_a, a_star, k), drift_norm)
}

/// Default allowed variation of the Kozai-Lidov integral: `(1/2) sqrt(mu/a) 0.1`.
pub fn default_gamma(a: f64, k: &PhysicalConstants) -> f64 {
    delta_l_from_a(0.1, a, k)
}

/// `T = Gamma / ||{I1+I2, R}||`.
pub fn stability_time_kozai(gamma: f64, drift_norm: f64) -> f64 {
    stability_time_l(gamma, drift_norm)
}

/// Smallest `i_max` in `[i_lo, pi/2]` for which the norm over `[e] x [i_lo, i_max]`
/// reaches `threshold`, by bisection to `resolution`; `pi/2` if never reached.
pub fn critical_inclination(
    s: &PoissonSeries,
    dom: &DomainBox,
    map: &dyn Fn(f64, f64) -> Vec<f64>,
    threshold: f64,
    resolution: f64,
    mode: NormMode,
) -> Result<f64> {
    let top = math::PI / 2.0;
    let norm = |i_max: f64| domain_norm(s, &dom.with_i_max(i_max), map, mode);
    if norm(top)? < threshold {
        return Ok(top);
    }
    let (mut lo, mut hi) = (dom.i_range[0], top);
    if norm(lo)? >= threshold {
        return Ok(lo);
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if norm(mid)? >= threshold { hi = mid } else { lo = mid }
    }
    Ok(hi)
}

/// Which remainder functional a scan records.
pub type RemainderFunctional<'a> = &'a dyn Fn(&PoissonSeries) -> Result<PoissonSeries>;

/// Normalizes once up to `m_max`, recording `(M, norm of f(remainder at step M))` for `M = 1..=m_max`.
pub fn optimal_order_scan(
    h: &PoissonSeries,
    omega: &[f64],
    module: &ResonantModule,
    m_max: u32,
    opts: &NormalizeOptions,
    dom: &DomainBox,
    map: &dyn Fn(f64, f64) -> Vec<f64>,
    f: RemainderFunctional,
    mode: NormMode,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(m_max as usize);
    let mut err = None;
    normalize_with(h, omega, module, m_max, opts, |r, cur| {
        if err.is_some() {
            return;
        }
        let rem = cur.filter(|t| t.grade > r);
        match f(&rem).and_then(|s| domain_norm(&s, dom, map, mode)) {
            Ok(v) => out.push((r, v)),
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Inputs of the a-priori bound for the non-resonant Lie-series normal form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub f_norm: f64,
    pub gamma: f64,
    pub tau: f64,
    pub rho: f64,
    pub sigma: f64,
    pub delta: f64,
    pub xi: f64,
    pub n: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoreticalBound {
    pub epsilon_star_1: f64,
    pub epsilon_star_r: f64,
    /// Orders below this value satisfy the smallness condition.
    pub r_threshold: f64,
    pub remainder_bound: f64,
    /// Natural log of the bound (finite where the bound itself overflows).
    pub ln_remainder_bound: f64,
    /// False when `r >= r_threshold` (the bound does not hold).
    pub applicable: bool,
}

fn factorial_real(x: f64) -> f64 {
    math::exp(libm::lgamma(x + 1.0))
}

/// Evaluates `eps*_1`, `eps*_r`, the order threshold and the remainder bound at order `r`.
pub fn theoretical_bound(b: &BoundInputs, r: u32) -> Result<TheoreticalBound> {
    if !(b.delta < b.rho / 2.0 && b.xi < b.sigma / 2.0) {
        return Err(Error::Domain("restrictions must satisfy delta < rho/2 and xi < sigma/2".into()));
    }
    if r == 0 || !(b.f_norm > 0.0) || !(b.gamma > 0.0) || !(b.delta > 0.0) || !(b.xi > 0.0) || b.tau < 0.0 {
        return Err(Error::Argument("bound inputs must be positive and r >= 1".into()));
    }
    let tp2 = b.tau + 2.0;
    let num = b.gamma * b.delta * math::pow(b.xi, b.tau + 1.0);
    let den = math::pow(2.0, b.n as f64 - b.tau + 4.0) * math::sqrt(factorial_real(2.0 * b.tau + 2.0));
    let e1 = num / (den * b.f_norm);
    let rf = r as f64;
    let er = e1 / math::pow(rf, tp2);
    let r_threshold = math::pow(num / den, 1.0 / tp2) / math::pow(b.f_norm, 1.0 / tp2);
    // log form avoids overflow of (1/eps_r)^r
    let log_bound = math::ln(b.f_norm / (4.0 * math::pow(rf, tp2))) - rf * math::ln(er) + math::ln(er / (er - 1.0));
    let applicable = rf < r_threshold && er > 1.0;
    let remainder_bound = if er > 1.0 { math::exp(log_bound) } else { f64::INFINITY };
    let ln_remainder_bound = if er > 1.0 { log_bound } else { f64::INFINITY };
    Ok(TheoreticalBound { epsilon_star_1: e1, epsilon_star_r: er, r_threshold, remainder_bound, ln_remainder_bound, applicable })
}
