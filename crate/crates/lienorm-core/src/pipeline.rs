//! End-to-end runs per model: build, normalize, and derive the quantities the
//! stability, steepness and oracle reports need.

use alloc::vec;
use alloc::vec::Vec;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::estimates::{self, DomainBox, NormPair};
use crate::gls::{GlsModel, GlsModelConfig, build_gls_hamiltonian};
use crate::j2::{J2Model, J2ModelConfig, build_j2_hamiltonian, elements_to_actions};
use crate::math;
use crate::norm::NormMode;
use crate::normalform::{
    BookKeepingRule, NormalFormResult, NormalizeOptions, Prune, ResonantModule, assign_bookkeeping, frequencies, normalize,
};
use crate::oracle::{Coord, HamiltonianField, IntegratorOptions, Trajectory, integrate, integrate_tracked};
use crate::series::PoissonSeries;
use crate::steepness::{IntegrableHamiltonian, SteepnessVerdict, classify, secular_part};

/// Grade floor of the book-keeping rule used by both models.
pub const GRADE_FLOOR: u32 = 1;

/// Normalization order recommended for truncation order `n`.
pub fn recommended_m(n: u32) -> u32 {
    n.saturating_sub(3).max(1)
}

/// J2 model normalized against the fast angle.
#[derive(Clone, Debug)]
pub struct J2Run {
    pub model: J2Model,
    pub h: PoissonSeries,
    pub result: NormalFormResult,
}

/// Built J2 model and its graded Hamiltonian.
pub fn prepare_j2(a_star: f64, n: u32, k: &PhysicalConstants) -> Result<(J2Model, PoissonSeries)> {
    let model = build_j2_hamiltonian(&J2ModelConfig { a_star, n }, k)?;
    let h = assign_bookkeeping(&model.by_degree, BookKeepingRule::DegreeMinusTwo { floor: GRADE_FLOOR }, n)?;
    Ok((model, h))
}

pub fn j2_module() -> Result<ResonantModule> {
    ResonantModule::fast_angles(3, vec![0])
}

pub fn j2_options(n: u32) -> NormalizeOptions {
    NormalizeOptions { prune: Some(Prune { dofs: vec![0], limit: n }), ..Default::default() }
}

pub fn run_j2(a_star: f64, n: u32, m: u32, k: &PhysicalConstants) -> Result<J2Run> {
    let (model, h) = prepare_j2(a_star, n, k)?;
    let result = normalize(&h, &model.omega, &j2_module()?, m, &j2_options(n))?;
    Ok(J2Run { model, h, result })
}

impl J2Run {
    /// `(e, i) -> (dL = 0, P, Q)`.
    pub fn map(&self) -> impl Fn(f64, f64) -> Vec<f64> + '_ {
        move |e, i| elements_to_actions(e, i, self.model.l_star).to_vec()
    }

    /// Remainder on the reference torus `dL = 0`.
    pub fn remainder(&self) -> Result<PoissonSeries> {
        estimates::remainder_on_slice(&self.result, &[0])
    }

    /// `dL/dt = -dR/dlambda` at `dL = 0`.
    pub fn dl_drift(&self) -> Result<PoissonSeries> {
        estimates::action_drift_series(&self.result.remainder()?, 0, &[0])
    }

    /// Fast-angle-free part of the normal form (must be all of it).
    pub fn secular(&self) -> Result<PoissonSeries> {
        Ok(self.result.normal_form()?.filter(|t| t.wave[0] == 0))
    }

    /// Angle-free secular part in `(P, Q)` at `dL = 0`, up to grade `max_grade`.
    pub fn integrable(&self, max_grade: u32) -> Result<IntegrableHamiltonian> {
        let z = secular_part(&self.result.normal_form()?, max_grade, &[0]);
        IntegrableHamiltonian::from_series(&z, [1, 2], "J2-secular-full")
    }
}

/// Geolunisolar model normalized with the 1:1 inclination-eccentricity resonance kept.
#[derive(Clone, Debug)]
pub struct GlsRun {
    pub model: GlsModel,
    pub h: PoissonSeries,
    pub result: NormalFormResult,
}

/// Module generator of the 1:1 resonance in the canonical action-angle frame.
///
/// In these variables the two secular frequencies have opposite signs, so the
/// slow combination is `phi1 + phi2` and the resonant module is spanned by `(1, -1)`;
/// the quasi-integral is `I1 - I2`.
pub const GLS_GENERATOR: [i32; 2] = [1, -1];

/// Built geolunisolar model and its graded Hamiltonian.
pub fn prepare_gls(a: f64, n: u32, k: &PhysicalConstants) -> Result<(GlsModel, PoissonSeries)> {
    let model = build_gls_hamiltonian(&GlsModelConfig { a, n }, k)?;
    let h = assign_bookkeeping(&model.by_degree, BookKeepingRule::DegreeMinusTwo { floor: GRADE_FLOOR }, n)?;
    Ok((model, h))
}

pub fn gls_module() -> Result<ResonantModule> {
    ResonantModule::new(2, vec![GLS_GENERATOR.to_vec()], vec![])
}

pub fn run_gls(a: f64, n: u32, m: u32, k: &PhysicalConstants) -> Result<GlsRun> {
    let (model, h) = prepare_gls(a, n, k)?;
    let result = normalize(&h, &frequencies(&h), &gls_module()?, m, &NormalizeOptions::default())?;
    Ok(GlsRun { model, h, result })
}

impl GlsRun {
    /// `(e, i relative to the Laplace plane) -> (I1, I2)` (largest over the node azimuth).
    pub fn map(&self) -> impl Fn(f64, f64) -> Vec<f64> + '_ {
        move |e, i| self.model.elements_to_actions(e, i).to_vec()
    }

    pub fn remainder(&self) -> Result<PoissonSeries> {
        self.result.remainder()
    }

    /// `d(I1 - I2)/dt` generated by the remainder.
    pub fn kozai_drift(&self) -> Result<PoissonSeries> {
        estimates::kozai_drift_series(&self.result)
    }

    /// The quasi-integral `I1 - I2`.
    pub fn integral(&self) -> Result<PoissonSeries> {
        estimates::module_integral(2, self.result.n, &GLS_GENERATOR)
    }

    /// `{I1 - I2, Z}`; must vanish identically.
    pub fn integral_bracket(&self) -> Result<PoissonSeries> {
        self.integral()?.poisson_bracket(&self.result.normal_form()?)
    }

    /// Angle-free part of the normal form up to grade 2 (quadratic in the actions).
    pub fn integrable(&self) -> Result<IntegrableHamiltonian> {
        let z = secular_part(&self.result.normal_form()?, 2, &[]);
        IntegrableHamiltonian::from_series(&z, [0, 1], "gls-quadratic")
    }
}

/// `(e, i)` box of the J2 tables.
pub fn j2_domain(grid: [usize; 2], angle_nodes: usize) -> Result<DomainBox> {
    DomainBox::new([0.0, 0.15], [0.0, math::PI / 2.0], grid, angle_nodes)
}

/// `(e, i)` box of the geolunisolar tables.
pub fn gls_domain(grid: [usize; 2], angle_nodes: usize) -> Result<DomainBox> {
    DomainBox::new([0.0, 0.1], [0.0, 0.1], grid, angle_nodes)
}

/// One row of the J2 stability tables.
#[derive(Clone, Debug, PartialEq)]
pub struct J2Estimate {
    pub a_star: f64,
    pub altitude_km: f64,
    pub remainder: NormPair,
    pub dl_dt: NormPair,
    /// `T2` for `delta_a` (yr), from the majorant drift norm.
    pub t_stability: f64,
    pub delta_a: f64,
    pub remainder_terms: usize,
}

pub fn estimate_j2(run: &J2Run, dom: &DomainBox, delta_a: f64, k: &PhysicalConstants) -> Result<J2Estimate> {
    let map = run.map();
    let remainder = estimates::domain_norm_pair(&run.remainder()?, dom, &map)?;
    let dl_dt = estimates::domain_norm_pair(&run.dl_drift()?, dom, &map)?;
    let a = run.model.cfg.a_star;
    Ok(J2Estimate {
        a_star: a,
        altitude_km: k.a_to_altitude(a),
        remainder,
        dl_dt,
        t_stability: estimates::stability_time_a(delta_a, a, dl_dt.majorant, k),
        delta_a,
        remainder_terms: run.result.remainder()?.len(),
    })
}

/// One row of the geolunisolar stability tables.
#[derive(Clone, Debug, PartialEq)]
pub struct GlsEstimate {
    pub a: f64,
    pub altitude_km: f64,
    pub i_eq: f64,
    pub nu: [f64; 2],
    pub remainder: NormPair,
    pub kozai_dt: NormPair,
    pub gamma: f64,
    /// `Gamma / ||{I1 - I2, R}||` (yr), from the majorant drift norm.
    pub t_stability: f64,
    /// Smallest inclination where the remainder norm reaches the threshold (rad).
    pub i_crit: Option<f64>,
}

/// Resolution (rad) of the critical-inclination bisection.
pub const I_CRIT_RESOLUTION: f64 = 0.01;

pub fn estimate_gls(run: &GlsRun, dom: &DomainBox, i_crit_threshold: Option<f64>, k: &PhysicalConstants) -> Result<GlsEstimate> {
    let map = run.map();
    let rem = run.remainder()?;
    let remainder = estimates::domain_norm_pair(&rem, dom, &map)?;
    let kozai_dt = estimates::domain_norm_pair(&run.kozai_drift()?, dom, &map)?;
    let a = run.model.cfg.a;
    let gamma = estimates::default_gamma(a, k);
    let i_crit = match i_crit_threshold {
        Some(th) => Some(estimates::critical_inclination(&rem, dom, &map, th, I_CRIT_RESOLUTION, NormMode::Grid)?),
        None => None,
    };
    Ok(GlsEstimate {
        a,
        altitude_km: k.a_to_altitude(a),
        i_eq: run.model.eq.i_eq,
        nu: [run.model.eq.nu1, run.model.eq.nu2],
        remainder,
        kozai_dt,
        gamma,
        t_stability: estimates::stability_time_kozai(gamma, kozai_dt.majorant),
        i_crit,
    })
}

/// Action points of the steepness grid: `n x n` over `(e, i) in [0, 0.1]^2`.
pub fn steepness_points(map: &dyn Fn(f64, f64) -> [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let step = |j: usize| if n <= 1 { 0.0 } else { 0.1 * j as f64 / (n - 1) as f64 };
    let mut pts = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            pts.push(map(step(a), step(b)));
        }
    }
    pts
}

/// Default zero tolerance, relative to the largest bordered-matrix entry cubed.
pub const TOL_ZERO: f64 = 1e-8;

pub fn steepness_j2(run: &J2Run, grid: usize, tol_zero: f64) -> Result<SteepnessVerdict> {
    steepness_j2_capped(run, grid, tol_zero, run.result.m)
}

/// As [`steepness_j2`], keeping secular terms up to `grade_cap` only.
pub fn steepness_j2_capped(run: &J2Run, grid: usize, tol_zero: f64, grade_cap: u32) -> Result<SteepnessVerdict> {
    let h = run.integrable(grade_cap)?;
    let l = run.model.l_star;
    let pts = steepness_points(&|e, i| {
        let a = elements_to_actions(e, i, l);
        [a[1], a[2]]
    }, grid);
    classify(&h, &pts, tol_zero)
}

pub fn steepness_gls(run: &GlsRun, grid: usize, tol_zero: f64) -> Result<SteepnessVerdict> {
    let h = run.integrable()?;
    let pts = steepness_points(&|e, i| run.model.elements_to_actions(e, i), grid);
    classify(&h, &pts, tol_zero)
}

/// Initial condition of an oracle run: elements and angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleInitial {
    pub e: f64,
    pub i: f64,
    pub angles: [f64; 3],
}

/// Outcome of one oracle trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub initial: OracleInitial,
    pub horizon: f64,
    /// Largest measured change of the quasi-integral.
    pub drift: f64,
    /// `drift_norm * horizon`.
    pub bound: f64,
    pub energy_error: f64,
    pub trajectory: Trajectory,
}

impl OracleCheck {
    pub fn within_bound(&self) -> bool {
        self.drift <= self.bound * (1.0 + 1e-6)
    }
}

/// Integrates the normalized J2 Hamiltonian (normal form plus remainder) in
/// `(lambda, dL)` polar and `(P, Q)` Cartesian variables and measures the `dL` drift.
pub fn oracle_j2(run: &J2Run, ic: &OracleInitial, horizon: f64, drift_norm: f64, tol: f64) -> Result<OracleCheck> {
    let h = run.result.hamiltonian()?;
    let field = HamiltonianField::new(&h, &[Coord::Polar, Coord::Cartesian, Coord::Cartesian])?;
    let act = elements_to_actions(ic.e, ic.i, run.model.l_star);
    let y0 = field.state_from(&act, &ic.angles);
    let mut opts = IntegratorOptions::new(tol);
    opts.sample_every = 16;
    let tr = integrate(&field, &y0, horizon, &opts)?;
    let drift = crate::oracle::drift_check(&tr, &|s: &[f64]| s[1]);
    Ok(OracleCheck { initial: *ic, horizon, drift, bound: drift_norm * horizon, energy_error: tr.energy_error(), trajectory: tr })
}

/// Integrates the normalized geolunisolar Hamiltonian in Cartesian variables and
/// measures the drift of `I1 - I2` as the time integral of its rate `{I1 - I2, R}`.
pub fn oracle_gls(run: &GlsRun, ic: &OracleInitial, horizon: f64, drift_norm: f64, tol: f64) -> Result<OracleCheck> {
    let h = run.result.hamiltonian()?;
    let field = HamiltonianField::new(&h, &[Coord::Cartesian, Coord::Cartesian])?;
    let act = run.model.elements_to_actions(ic.e, ic.i);
    let rate = HamiltonianField::new(&run.kozai_drift()?, &[Coord::Cartesian, Coord::Cartesian])?;
    let y0 = field.state_from(&act, &ic.angles[..2]);
    let mut opts = IntegratorOptions::new(tol);
    opts.sample_every = 16;
    let tr = integrate_tracked(&field, &rate, &y0, horizon, &opts)?;
    let drift = crate::oracle::drift_check(&tr, &|s: &[f64]| s[4]);
    Ok(OracleCheck { initial: *ic, horizon, drift, bound: drift_norm * horizon, energy_error: tr.energy_error(), trajectory: tr })
}

/// Checks the implication chain `convex => quasi-convex => three-jet` on a verdict.
pub fn implication_chain_holds(v: &SteepnessVerdict) -> bool {
    (!v.convex || v.quasi_convex) && (!v.quasi_convex || v.three_jet)
}

/// Validates an altitude (km) and returns the semimajor axis (R_E).
pub fn semimajor_from_altitude(alt_km: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(alt_km > 0.0) || !alt_km.is_finite() {
        return Err(Error::Domain(alloc::format!("altitude must be positive, got {alt_km}")));
    }
    Ok(k.altitude_to_a(alt_km))
}
