//! Sufficient steepness conditions for an integrable Hamiltonian `h(J1, J2)`:
//! convexity, quasi-convexity (bordered Hessian) and three-jet non-degeneracy.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::{PoissonSeries, Term};

/// Angle-free Hamiltonian in two actions with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrableHamiltonian {
    /// `(coeff, [e1, e2])` with `e` counting square roots of the actions.
    terms: Vec<(f64, [u32; 2])>,
    pub provenance: String,
}

/// `d^k/dx^k x^{e/2}` at `x`.
fn dpow(x: f64, e: u32, k: u32) -> f64 {
    let mut c = 1.0;
    let mut p = e as f64 / 2.0;
    for _ in 0..k {
        if p == 0.0 {
            return 0.0;
        }
        c *= p;
        p -= 1.0;
    }
    if p == 0.0 {
        c
    } else if e % 2 == 0 {
        c * math::powi(x, p as i32)
    } else {
        c * math::pow(x, p)
    }
}

impl IntegrableHamiltonian {
    /// Picks the two action dofs `dofs` of an angle-free series; every other
    /// dof must carry zero exponents.
    pub fn from_series(s: &PoissonSeries, dofs: [usize; 2], provenance: &str) -> Result<IntegrableHamiltonian> {
        let mut terms = Vec::new();
        for t in s.terms() {
            if !t.is_angle_free() {
                return Err(Error::Argument("integrable part contains angle-dependent terms".into()));
            }
            if (0..s.n_dof()).any(|j| !dofs.contains(&j) && t.exps[j] != 0) {
                return Err(Error::Argument("term depends on an action outside the selected pair".into()));
            }
            terms.push((t.coeff, [t.exps[dofs[0]], t.exps[dofs[1]]]));
        }
        Ok(IntegrableHamiltonian { terms, provenance: provenance.into() })
    }

    pub fn from_terms(terms: Vec<(f64, [u32; 2])>, provenance: &str) -> IntegrableHamiltonian {
        IntegrableHamiltonian { terms, provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Mixed derivative `d^{a+b} h / dJ1^a dJ2^b`.
    pub fn derivative(&self, j: [f64; 2], a: u32, b: u32) -> f64 {
        self.terms.iter().map(|(c, e)| c * dpow(j[0], e[0], a) * dpow(j[1], e[1], b)).sum()
    }

    pub fn value(&self, j: [f64; 2]) -> f64 {
        self.derivative(j, 0, 0)
    }

    pub fn gradient(&self, j: [f64; 2]) -> [f64; 2] {
        [self.derivative(j, 1, 0), self.derivative(j, 0, 1)]
    }

    pub fn hessian(&self, j: [f64; 2]) -> [[f64; 2]; 2] {
        let h12 = self.derivative(j, 1, 1);
        [[self.derivative(j, 2, 0), h12], [h12, self.derivative(j, 0, 2)]]
    }

    /// `[h111, h112, h122, h222]`.
    pub fn third(&self, j: [f64; 2]) -> [f64; 4] {
        [self.derivative(j, 3, 0), self.derivative(j, 2, 1), self.derivative(j, 1, 2), self.derivative(j, 0, 3)]
    }

    /// True if the Hessian does not depend on the point (polynomial of degree <= 2 in the actions).
    pub fn constant_hessian(&self) -> bool {
        self.terms.iter().all(|(_, e)| e[0] % 2 == 0 && e[1] % 2 == 0 && e[0] + e[1] <= 4)
    }
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn eigenvalues(h: &[[f64; 2]; 2]) -> [f64; 2] {
    let m = 0.5 * (h[0][0] + h[1][1]);
    let d = math::sqrt(math::powi(0.5 * (h[0][0] - h[1][1]), 2) + h[0][1] * h[0][1]);
    [m - d, m + d]
}

/// Product of the Hessian eigenvalues (= its determinant).
pub fn hessian_eigprod(h: &IntegrableHamiltonian, j: [f64; 2]) -> f64 {
    let q = h.hessian(j);
    q[0][0] * q[1][1] - q[0][1] * q[1][0]
}

/// Determinant of the Hessian bordered by the gradient.
pub fn bordered_det(h: &IntegrableHamiltonian, j: [f64; 2]) -> f64 {
    let q = h.hessian(j);
    let w = h.gradient(j);
    -(w[0] * w[0] * q[1][1] - 2.0 * w[0] * w[1] * q[0][1] + w[1] * w[1] * q[0][0])
}

fn max_entry(h: &IntegrableHamiltonian, j: [f64; 2]) -> f64 {
    let q = h.hessian(j);
    let w = h.gradient(j);
    [q[0][0], q[0][1], q[1][1], w[0], w[1]].iter().fold(0.0f64, |m, v| m.max(math::abs(*v)))
}

/// `det A` counts as zero below `tol_zero * (largest entry of A)^3`.
pub fn bordered_det_is_zero(h: &IntegrableHamiltonian, j: [f64; 2], tol_zero: f64) -> bool {
    let m = max_entry(h, j);
    math::abs(bordered_det(h, j)) <= tol_zero * m * m * m
}

/// Outcome of the three-jet test at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetOutcome {
    Pass,
    /// Non-trivial `u` with all three forms vanishing.
    Fail { u: [f64; 2] },
    /// Gradient vanishes: `u` is unconstrained.
    CriticalPoint,
}

/// Three-jet test at a point: on the direction `u` orthogonal to the gradient,
/// the quadratic and cubic forms must not both vanish.
pub fn three_jet_point(h: &IntegrableHamiltonian, j: [f64; 2], tol_zero: f64) -> JetOutcome {
    let w = h.gradient(j);
    let nw = math::sqrt(w[0] * w[0] + w[1] * w[1]);
    if nw == 0.0 {
        return JetOutcome::CriticalPoint;
    }
    let u = [-w[1] / nw, w[0] / nw];
    let q = h.hessian(j);
    let c = h.third(j);
    let quad = q[0][0] * u[0] * u[0] + 2.0 * q[0][1] * u[0] * u[1] + q[1][1] * u[1] * u[1];
    let cub = c[0] * math::powi(u[0], 3) + 3.0 * c[1] * u[0] * u[0] * u[1] + 3.0 * c[2] * u[0] * u[1] * u[1] + c[3] * math::powi(u[1], 3);
    let qs = [q[0][0], q[0][1], q[1][1]].iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    let cs = c.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    let quad_zero = math::abs(quad) <= tol_zero * qs || qs == 0.0;
    let cub_zero = math::abs(cub) <= tol_zero * cs || cs == 0.0;
    if quad_zero && cub_zero { JetOutcome::Fail { u } } else { JetOutcome::Pass }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Steepness {
    Convex,
    QuasiConvex,
    ThreeJet,
    Degenerate,
}

impl Steepness {
    pub fn label(self) -> &'static str {
        match self {
            Steepness::Convex => "convex",
            Steepness::QuasiConvex => "quasi-convex",
            Steepness::ThreeJet => "three-jet",
            Steepness::Degenerate => "degenerate",
        }
    }
}

/// Interval hull of a sampled quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn empty() -> Interval {
        Interval { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }
    fn push(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteepnessVerdict {
    pub classification: Steepness,
    pub eigprod: Interval,
    pub lambda_min: Interval,
    pub lambda_max: Interval,
    pub bordered_det: Interval,
    pub convex: bool,
    pub quasi_convex: bool,
    pub three_jet: bool,
    pub grid_points: usize,
    pub tol_zero: f64,
    /// A point where the final test failed, if any.
    pub witness: Option<([f64; 2], Option<[f64; 2]>)>,
}

/// Runs convexity, quasi-convexity and three-jet tests on every point, in that order of precedence.
pub fn classify(h: &IntegrableHamiltonian, points: &[[f64; 2]], tol_zero: f64) -> Result<SteepnessVerdict> {
    if points.is_empty() {
        return Err(Error::Argument("empty grid".into()));
    }
    let mut v = SteepnessVerdict {
        classification: Steepness::Degenerate,
        eigprod: Interval::empty(),
        lambda_min: Interval::empty(),
        lambda_max: Interval::empty(),
        bordered_det: Interval::empty(),
        convex: true,
        quasi_convex: true,
        three_jet: true,
        grid_points: points.len(),
        tol_zero,
        witness: None,
    };
    let mut jet_witness = None;
    let mut qc_witness = None;
    for &p in points {
        let ep = hessian_eigprod(h, p);
        let ev = eigenvalues(&h.hessian(p));
        v.eigprod.push(ep);
        v.lambda_min.push(ev[0]);
        v.lambda_max.push(ev[1]);
        v.bordered_det.push(bordered_det(h, p));
        if !(ep > 0.0) {
            v.convex = false;
        }
        if bordered_det_is_zero(h, p, tol_zero) {
            v.quasi_convex = false;
            qc_witness.get_or_insert((p, None));
        }
        match three_jet_point(h, p, tol_zero) {
            JetOutcome::Pass => {}
            JetOutcome::Fail { u } => {
                v.three_jet = false;
                jet_witness.get_or_insert((p, Some(u)));
            }
            JetOutcome::CriticalPoint => {
                v.convex = false;
                v.quasi_convex = false;
                v.three_jet = false;
                jet_witness.get_or_insert((p, None));
            }
        }
    }
    v.classification = if v.convex {
        Steepness::Convex
    } else if v.quasi_convex {
        Steepness::QuasiConvex
    } else if v.three_jet {
        v.witness = qc_witness;
        Steepness::ThreeJet
    } else {
        v.witness = jet_witness;
        Steepness::Degenerate
    };
    Ok(v)
}

/// Angle-free part of `s` of grade at most `max_grade`, on the slice where `zero_dofs` vanish.
pub fn secular_part(s: &PoissonSeries, max_grade: u32, zero_dofs: &[usize]) -> PoissonSeries {
    s.filter(|t: &Term| t.is_angle_free() && t.grade <= max_grade && zero_dofs.iter().all(|&j| t.exps[j] == 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> IntegrableHamiltonian {
        // (J1^2 + J2^2) / 2
        IntegrableHamiltonian::from_terms(alloc::vec![(0.5, [4, 0]), (0.5, [0, 4])], "control")
    }

    #[test]
    fn convex_control() {
        let h = quad();
        assert!((hessian_eigprod(&h, [0.3, 0.7]) - 1.0).abs() < 1e-15);
        assert!((bordered_det(&h, [1.0, 1.0]) + 2.0).abs() < 1e-15);
        let pts = [[0.5, 0.5], [1.0, 2.0]];
        assert_eq!(classify(&h, &pts, 1e-8).unwrap().classification, Steepness::Convex);
    }

    #[test]
    fn linear_is_degenerate() {
        let h = IntegrableHamiltonian::from_terms(alloc::vec![(1.0, [2, 0]), (-2.0, [0, 2])], "linear");
        assert!(matches!(three_jet_point(&h, [0.1, 0.2], 1e-8), JetOutcome::Fail { .. }));
        assert_eq!(classify(&h, &[[0.1, 0.2]], 1e-8).unwrap().classification, Steepness::Degenerate);
    }

    #[test]
    fn quasi_convex_not_convex() {
        // omega = (1, 1), Hessian diag(1, -2): indefinite but nonzero on omega-perp
        let h = IntegrableHamiltonian::from_terms(alloc::vec![(1.0, [2, 0]), (1.0, [0, 2]), (0.5, [4, 0]), (-1.0, [0, 4])], "qc");
        let v = classify(&h, &[[0.0, 0.0]], 1e-8).unwrap();
        assert_eq!(v.classification, Steepness::QuasiConvex);
        assert!(v.three_jet);
    }

    #[test]
    fn half_integer_derivatives() {
        let h = IntegrableHamiltonian::from_terms(alloc::vec![(1.0, [3, 0])], "x^1.5");
        let x: f64 = 0.7;
        assert!((h.derivative([x, 0.0], 1, 0) - 1.5 * x.sqrt()).abs() < 1e-15);
        assert!((h.derivative([x, 0.0], 3, 0) + 0.375 * x.powf(-1.5)).abs() < 1e-14);
        assert_eq!(h.derivative([x, 0.0], 0, 1), 0.0);
    }
}
