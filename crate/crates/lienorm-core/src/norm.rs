//! Sup-norms of series over grids of action points and angle nodes.
//!
//! A series is compiled into harmonics (kind, wave) each carrying a polynomial in the
//! square-root actions. At an action point the harmonic amplitudes are computed once;
//! the sup over the angle lattice then only needs table lookups of cos/sin.

use alloc::vec;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::math;
use crate::series::{MAX_DOF, PoissonSeries, Trig};

struct Harmonic {
    kind: Trig,
    wave: [i32; MAX_DOF],
    /// (monomial index, coeff)
    parts: Vec<(usize, f64)>,
}

/// A series preprocessed for repeated evaluation.
pub struct Compiled {
    n_dof: usize,
    monomials: Vec<[u32; MAX_DOF]>,
    harmonics: Vec<Harmonic>,
    /// per monomial: sum of |coeff| over all terms using it (majorant weights)
    abs_weights: Vec<f64>,
}

impl Compiled {
    pub fn new(s: &PoissonSeries) -> Compiled {
        let mut mono_idx: HashMap<[u32; MAX_DOF], usize> = HashMap::new();
        let mut monomials = Vec::new();
        let mut abs_weights = Vec::new();
        let mut harm_idx: HashMap<(Trig, [i32; MAX_DOF]), usize> = HashMap::new();
        let mut harmonics: Vec<Harmonic> = Vec::new();
        for t in s.terms() {
            let m = *mono_idx.entry(t.exps).or_insert_with(|| {
                monomials.push(t.exps);
                abs_weights.push(0.0);
                monomials.len() - 1
            });
            abs_weights[m] += math::abs(t.coeff);
            let h = *harm_idx.entry((t.kind, t.wave)).or_insert_with(|| {
                harmonics.push(Harmonic { kind: t.kind, wave: t.wave, parts: Vec::new() });
                harmonics.len() - 1
            });
            harmonics[h].parts.push((m, t.coeff));
        }
        Compiled { n_dof: s.n_dof(), monomials, harmonics, abs_weights }
    }

    fn monomial_values(&self, actions: &[f64]) -> Vec<f64> {
        let roots: Vec<f64> = actions.iter().map(|&a| math::sqrt(a.max(0.0))).collect();
        self.monomials
            .iter()
            .map(|e| (0..self.n_dof).map(|j| if e[j] == 0 { 1.0 } else { math::powi(roots[j], e[j] as i32) }).product())
            .collect()
    }

    fn amplitudes(&self, actions: &[f64]) -> Vec<f64> {
        let mv = self.monomial_values(actions);
        self.harmonics.iter().map(|h| h.parts.iter().map(|&(m, c)| c * mv[m]).sum()).collect()
    }

    /// Sum of |coeff| * monomial: every trig factor replaced by 1.
    pub fn majorant(&self, actions: &[f64]) -> f64 {
        let mv = self.monomial_values(actions);
        mv.iter().zip(&self.abs_weights).map(|(v, w)| v * w).sum()
    }

    /// Upper bound on the sup over angles: sum of |harmonic amplitude|.
    pub fn harmonic_bound(&self, actions: &[f64]) -> f64 {
        self.amplitudes(actions).iter().map(|a| math::abs(*a)).sum()
    }

    /// Max of |series| over the uniform angle lattice with `nodes` points per angle.
    pub fn angle_sup(&self, actions: &[f64], nodes: usize) -> f64 {
        let amps = self.amplitudes(actions);
        let n = self.n_dof;
        // only angles that actually appear are sampled
        let active: Vec<usize> = (0..n).filter(|&j| self.harmonics.iter().any(|h| h.wave[j] != 0)).collect();
        let ct: Vec<f64> = (0..nodes).map(|m| math::cos(math::TAU * m as f64 / nodes as f64)).collect();
        let st: Vec<f64> = (0..nodes).map(|m| math::sin(math::TAU * m as f64 / nodes as f64)).collect();
        let live: Vec<(usize, f64)> = amps.iter().copied().enumerate().filter(|&(_, a)| a != 0.0).collect();
        let total = nodes.pow(active.len() as u32);
        let nn = nodes as i64;
        let mut best = 0.0f64;
        let mut idx = vec![0usize; active.len()];
        for _ in 0..total {
            let mut v = 0.0;
            for &(h, a) in &live {
                let hm = &self.harmonics[h];
                let mut ph = 0i64;
                for (q, &j) in active.iter().enumerate() {
                    ph += hm.wave[j] as i64 * idx[q] as i64;
                }
                let p = ph.rem_euclid(nn) as usize;
                v += a * match hm.kind {
                    Trig::Const => 1.0,
                    Trig::Cos => ct[p],
                    Trig::Sin => st[p],
                };
            }
            best = best.max(math::abs(v));
            for d in idx.iter_mut() {
                *d += 1;
                if *d < nodes {
                    break;
                }
                *d = 0;
            }
        }
        best
    }
}

/// Which estimate of the sup over angles is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// Max over the angle lattice.
    Grid,
    /// Sum of |coeff| with all trig factors set to 1.
    Majorant,
}

/// Sup-norm over a set of action points. `Grid` mode prunes points whose
/// harmonic bound cannot beat the current best.
pub fn sup_norm_points(s: &PoissonSeries, points: &[Vec<f64>], angle_nodes: usize, mode: NormMode) -> Result<f64> {
    if points.is_empty() || angle_nodes == 0 {
        return Err(Error::Argument("empty grid".into()));
    }
    let c = Compiled::new(s);
    match mode {
        NormMode::Majorant => Ok(points.iter().map(|p| c.majorant(p)).fold(0.0, f64::max)),
        NormMode::Grid => {
            let mut order: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (c.harmonic_bound(p), i)).collect();
            order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
            let mut best = 0.0f64;
            for (bound, i) in order {
                if bound <= best {
                    break;
                }
                best = best.max(c.angle_sup(&points[i], angle_nodes));
            }
            Ok(best)
        }
    }
}
