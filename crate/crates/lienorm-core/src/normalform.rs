//! Lie-series normalization: book-keeping, homological equation, `exp(L_chi)`,
//! the step-by-step normal form algorithm and composition of transformations.
//!
//! Convention: `L_chi f = {f, chi}`; the homological equation is `{omega.A, chi} + h = 0`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::{MAX_DOF, PoissonSeries, Term, Trig};

/// Wave vectors kept in the normal form: `k . m_l = 0` for every generator and
/// `k_j = 0` for every fast angle `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResonantModule {
    pub generators: Vec<Vec<i32>>,
    pub fast: Vec<usize>,
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

impl ResonantModule {
    pub fn new(n_dof: usize, generators: Vec<Vec<i32>>, fast: Vec<usize>) -> Result<ResonantModule> {
        for g in &generators {
            if g.len() != n_dof {
                return Err(Error::Argument("generator length differs from n_dof".into()));
            }
            if g.iter().fold(0, |a, &b| gcd(a, b)) != 1 {
                return Err(Error::Argument("generator is zero or not irreducible".into()));
            }
        }
        if generators.len() > n_dof || (generators.len() == 2 && {
            let (a, b) = (&generators[0], &generators[1]);
            (0..n_dof).all(|i| (0..n_dof).all(|j| a[i] * b[j] == a[j] * b[i]))
        }) {
            return Err(Error::Argument("generators are linearly dependent".into()));
        }
        if fast.iter().any(|&j| j >= n_dof) {
            return Err(Error::Argument("fast-angle index out of range".into()));
        }
        Ok(ResonantModule { generators, fast })
    }

    /// Only the listed fast angles are removed; every other harmonic is kept.
    pub fn fast_angles(n_dof: usize, fast: Vec<usize>) -> Result<ResonantModule> {
        ResonantModule::new(n_dof, Vec::new(), fast)
    }

    /// No resonance: normal form = angle-free terms (Birkhoff).
    pub fn nonresonant(n_dof: usize) -> ResonantModule {
        ResonantModule { generators: Vec::new(), fast: (0..n_dof).collect() }
    }

    pub fn contains(&self, wave: &[i32]) -> bool {
        self.fast.iter().all(|&j| wave[j] == 0)
            && self.generators.iter().all(|g| g.iter().zip(wave).map(|(a, b)| a * b).sum::<i32>() == 0)
    }
}

/// Grade assignment for series built with grade = total square-root degree `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BookKeepingRule {
    /// grade `s - 2`; terms `A_j` (the frequency part) get grade 0, and any other
    /// term whose `s - 2` falls below `floor` is lifted to `floor`.
    DegreeMinusTwo { floor: u32 },
}

impl BookKeepingRule {
    pub fn grade(&self, t: &Term) -> u32 {
        match *self {
            BookKeepingRule::DegreeMinusTwo { floor } => {
                if is_linear_action(t) {
                    0
                } else {
                    (t.degree() as i64 - 2).max(floor as i64) as u32
                }
            }
        }
    }
}

fn is_linear_action(t: &Term) -> bool {
    t.kind == Trig::Const && t.degree() == 2 && t.exps.iter().any(|&e| e == 2)
}

/// Regrades a degree-graded series; checks that the grade-0 part is exactly `omega.A`.
pub fn assign_bookkeeping(h: &PoissonSeries, rule: BookKeepingRule, max_bk: u32) -> Result<PoissonSeries> {
    let out = h.regrade(max_bk, |t| Some(rule.grade(t)))?;
    for t in out.grade_part(0).terms() {
        if !is_linear_action(&t) {
            return Err(Error::Rule(String::from("grade-0 part contains terms other than omega.A")));
        }
    }
    Ok(out)
}

/// Frequencies read off the grade-0 part.
pub fn frequencies(h: &PoissonSeries) -> Vec<f64> {
    let mut w = alloc::vec![0.0; h.n_dof()];
    for t in h.grade_part(0).terms() {
        if let Some(j) = t.exps.iter().position(|&e| e == 2) {
            w[j] += t.coeff;
        }
    }
    w
}

/// Solves `{omega.A, chi} + h_r = 0` termwise.
pub fn solve_homological(h_r: &PoissonSeries, omega: &[f64], module: &ResonantModule, tol_divisor: f64) -> Result<PoissonSeries> {
    if h_r.is_empty() {
        return Err(Error::NothingToNormalize);
    }
    let wmax = omega.iter().fold(0.0f64, |m, w| m.max(math::abs(*w)));
    let mut terms = Vec::with_capacity(h_r.len());
    for t in h_r.terms() {
        if module.contains(&t.wave[..h_r.n_dof()]) {
            return Err(Error::Argument(alloc::format!("term with wave {:?} belongs to the normal form", &t.wave[..h_r.n_dof()])));
        }
        let div: f64 = (0..h_r.n_dof()).map(|j| t.wave[j] as f64 * omega[j]).sum();
        if math::abs(div) < tol_divisor * wmax {
            return Err(Error::SmallDivisor { wave: t.wave[..h_r.n_dof()].to_vec(), divisor: div });
        }
        let (kind, c) = match t.kind {
            Trig::Cos => (Trig::Sin, t.coeff / div),
            Trig::Sin => (Trig::Cos, -t.coeff / div),
            Trig::Const => unreachable!("angle-free terms are always in the module"),
        };
        terms.push(Term { coeff: c, kind, ..t });
    }
    PoissonSeries::from_terms(h_r.n_dof(), h_r.max_bk(), terms)
}

/// Drops terms that can never reach the evaluation slice `A_j = 0` (j in `dofs`)
/// at grade <= `limit`: brackets with generators of grade >= 1 never decrease
/// `grade + (exponent of A_j)/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prune {
    pub dofs: Vec<usize>,
    pub limit: u32,
}

impl Prune {
    pub fn apply(&self, s: &PoissonSeries) -> PoissonSeries {
        s.filter(|t| t.grade + self.dofs.iter().map(|&j| t.exps[j] / 2).sum::<u32>() <= self.limit)
    }
}

/// `sum_j (1/j!) L_chi^j f` truncated at `max_order`.
pub fn lie_transform(f: &PoissonSeries, chi: &PoissonSeries, max_order: u32, prune: Option<&Prune>) -> Result<PoissonSeries> {
    if chi.is_empty() {
        return Ok(f.truncate(max_order));
    }
    if chi.min_grade() == Some(0) {
        return Err(Error::Argument("generator with grade-0 terms: Lie series does not terminate".into()));
    }
    let f = f.truncate(max_order);
    let mut out = f.clone();
    let mut term = f;
    let mut j = 1.0;
    loop {
        term = term.poisson_bracket(chi)?.scale(1.0 / j);
        if let Some(p) = prune {
            term = p.apply(&term);
        }
        if term.is_empty() {
            break;
        }
        out = out.add(&term)?;
        j += 1.0;
    }
    Ok(out)
}

/// Applies `exp(L_chi_M) o ... o exp(L_chi_1)` (forward) or the inverse.
pub fn compose_transform(f: &PoissonSeries, generators: &[PoissonSeries], inverse: bool, max_order: u32) -> Result<PoissonSeries> {
    let mut out = f.truncate(max_order);
    if inverse {
        for chi in generators.iter().rev() {
            out = lie_transform(&out, &chi.neg(), max_order, None)?;
        }
    } else {
        for chi in generators {
            out = lie_transform(&out, chi, max_order, None)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    pub tol_divisor: f64,
    pub prune: Option<Prune>,
    /// Check `{omega.A, chi_r} + h_r = 0` at every step.
    pub check_homological: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { tol_divisor: 1e-9, prune: None, check_homological: true }
    }
}

#[derive(Clone, Debug)]
pub struct NormalFormResult {
    /// `Z_0 .. Z_M`.
    pub z_parts: Vec<PoissonSeries>,
    /// `R_{M+1} .. R_N`.
    pub remainder_parts: Vec<PoissonSeries>,
    pub generators: Vec<PoissonSeries>,
    pub omega: Vec<f64>,
    pub module: ResonantModule,
    pub m: u32,
    pub n: u32,
    /// Largest relative homological residual seen over all steps.
    pub max_homological_residual: f64,
    /// Largest dropped out-of-module coefficient at its own step, relative to `h_r`.
    pub max_cancellation_residue: f64,
}

impl NormalFormResult {
    pub fn normal_form(&self) -> Result<PoissonSeries> {
        sum_all(&self.z_parts)
    }
    pub fn remainder(&self) -> Result<PoissonSeries> {
        sum_all(&self.remainder_parts)
    }
    /// Normal form plus remainder: the transformed Hamiltonian.
    pub fn hamiltonian(&self) -> Result<PoissonSeries> {
        self.normal_form()?.add(&self.remainder()?)
    }
}

fn sum_all(parts: &[PoissonSeries]) -> Result<PoissonSeries> {
    let mut it = parts.iter();
    let mut s = it.next().cloned().ok_or_else(|| Error::Argument("no parts".into()))?;
    for p in it {
        s = s.add(p)?;
    }
    Ok(s)
}

/// Splits a series into (terms in the module, terms outside).
pub fn split_module(s: &PoissonSeries, module: &ResonantModule) -> (PoissonSeries, PoissonSeries) {
    let n = s.n_dof();
    (s.filter(|t| module.contains(&t.wave[..n])), s.filter(|t| !module.contains(&t.wave[..n])))
}

/// Homological residual `{omega.A, chi} + h`, relative to max|h|.
pub fn homological_residual(h_r: &PoissonSeries, chi: &PoissonSeries, omega: &[f64]) -> Result<f64> {
    let n = h_r.n_dof();
    let mut lin = PoissonSeries::zero(n, h_r.max_bk());
    for (j, &w) in omega.iter().enumerate() {
        let mut e = [0u32; MAX_DOF];
        e[j] = 2;
        lin.add_term(Term { coeff: w, exps: e, kind: Trig::Const, wave: [0; MAX_DOF], grade: 0 })?;
    }
    let r = lin.poisson_bracket(chi)?.add(h_r)?;
    Ok(r.max_abs_coeff() / h_r.max_abs_coeff().max(f64::MIN_POSITIVE))
}

/// Normalizes `h` (graded, grade-0 part = omega.A) through `m` steps.
pub fn normalize(h: &PoissonSeries, omega: &[f64], module: &ResonantModule, m: u32, opts: &NormalizeOptions) -> Result<NormalFormResult> {
    normalize_with(h, omega, module, m, opts, |_, _| {})
}

/// As [`normalize`], calling `observe(r, H^(r))` after every step.
pub fn normalize_with(
    h: &PoissonSeries,
    omega: &[f64],
    module: &ResonantModule,
    m: u32,
    opts: &NormalizeOptions,
    mut observe: impl FnMut(u32, &PoissonSeries),
) -> Result<NormalFormResult> {
    let n = h.max_bk();
    if m > n {
        return Err(Error::Argument("normalization order exceeds truncation order".into()));
    }
    let mut cur = match &opts.prune {
        Some(p) => p.apply(h),
        None => h.clone(),
    };
    let mut generators = Vec::with_capacity(m as usize);
    let mut worst = 0.0f64;
    let mut cancel = 0.0f64;
    for r in 1..=m {
        let (_, h_r) = split_module(&cur.grade_part(r), module);
        if h_r.is_empty() {
            generators.push(PoissonSeries::zero(h.n_dof(), n));
            observe(r, &cur);
            continue;
        }
        let chi = solve_homological(&h_r, omega, module, opts.tol_divisor)?;
        if opts.check_homological {
            worst = worst.max(homological_residual(&h_r, &chi, omega)?);
        }
        cur = lie_transform(&cur, &chi, n, opts.prune.as_ref())?;
        // out-of-module grade-r terms cancel exactly; drop their rounding residue
        let scale = h_r.max_abs_coeff();
        let mut residue = 0.0f64;
        cur = cur.filter(|t| {
            let keep = t.grade != r || module.contains(&t.wave[..omega.len()]);
            if !keep {
                residue = residue.max(math::abs(t.coeff));
            }
            keep
        });
        if scale > 0.0 {
            cancel = cancel.max(residue / scale);
        }
        generators.push(chi);
        observe(r, &cur);
    }
    let z_parts = (0..=m).map(|g| cur.grade_part(g)).collect();
    let remainder_parts = (m + 1..=n).map(|g| cur.grade_part(g)).collect();
    Ok(NormalFormResult {
        z_parts,
        remainder_parts,
        generators,
        omega: omega.to_vec(),
        module: module.clone(),
        m,
        n,
        max_homological_residual: worst,
        max_cancellation_residue: cancel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin2(w: [f64; 2], n: u32) -> PoissonSeries {
        PoissonSeries::from_terms(
            2,
            n,
            [Term::new(w[0], &[2, 0], Trig::Const, &[0, 0], 0), Term::new(w[1], &[0, 2], Trig::Const, &[0, 0], 0)],
        )
        .unwrap()
    }

    #[test]
    fn module_membership() {
        let m = ResonantModule::new(2, alloc::vec![alloc::vec![1, 1]], alloc::vec![]).unwrap();
        assert!(m.contains(&[1, -1]));
        assert!(!m.contains(&[1, 1]));
        let f = ResonantModule::fast_angles(3, alloc::vec![0]).unwrap();
        assert!(f.contains(&[0, 3, -2]));
        assert!(!f.contains(&[1, 0, 0]));
        assert!(ResonantModule::new(2, alloc::vec![alloc::vec![2, 2]], alloc::vec![]).is_err());
    }

    #[test]
    fn single_harmonic_generator() {
        let h = PoissonSeries::from_terms(3, 4, [Term::new(0.3, &[0, 0, 0], Trig::Cos, &[1, 0, 0], 1)]).unwrap();
        let w = [2.0, -0.1, 0.1];
        let m = ResonantModule::fast_angles(3, alloc::vec![0]).unwrap();
        let chi = solve_homological(&h, &w, &m, 1e-9).unwrap();
        let t: Vec<Term> = chi.terms().collect();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, Trig::Sin);
        assert!((t[0].coeff - 0.15).abs() < 1e-16);
        assert!(homological_residual(&h, &chi, &w).unwrap() < 1e-15);
    }

    #[test]
    fn module_terms_rejected() {
        let m = ResonantModule::new(2, alloc::vec![alloc::vec![1, 1]], alloc::vec![]).unwrap();
        let h = PoissonSeries::from_terms(2, 3, [Term::new(1.0, &[1, 1], Trig::Cos, &[1, -1], 1)]).unwrap();
        assert!(matches!(solve_homological(&h, &[1.0, 1.0], &m, 1e-9), Err(Error::Argument(_))));
        let z = PoissonSeries::zero(2, 3);
        assert_eq!(solve_homological(&z, &[1.0, 1.0], &m, 1e-9), Err(Error::NothingToNormalize));
    }

    #[test]
    fn small_divisor_named() {
        let m = ResonantModule::nonresonant(2);
        let h = PoissonSeries::from_terms(2, 3, [Term::new(1.0, &[1, 1], Trig::Cos, &[1, -1], 1)]).unwrap();
        match solve_homological(&h, &[1.0, 1.0], &m, 1e-9) {
            Err(Error::SmallDivisor { wave, .. }) => assert_eq!(wave, alloc::vec![1, -1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lie_identity_and_homological_identity() {
        let w = [1.0, 0.7];
        let f = lin2(w, 5);
        assert_eq!(lie_transform(&f, &PoissonSeries::zero(2, 5), 5, None).unwrap(), f);
        let h = PoissonSeries::from_terms(2, 5, [Term::new(0.2, &[2, 1], Trig::Cos, &[1, 2], 1)]).unwrap();
        let m = ResonantModule::nonresonant(2);
        let chi = solve_homological(&h, &w, &m, 1e-9).unwrap();
        let g = lie_transform(&f, &chi, 5, None).unwrap();
        let diff = g.sub(&f).unwrap().add(&h).unwrap();
        assert!(diff.grade_part(1).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn grade_zero_generator_rejected() {
        let f = lin2([1.0, 1.0], 3);
        let chi = PoissonSeries::from_terms(2, 3, [Term::new(1.0, &[1, 0], Trig::Sin, &[1, 0], 0)]).unwrap();
        assert!(lie_transform(&f, &chi, 3, None).is_err());
    }

    #[test]
    fn bookkeeping_rules() {
        let rule = BookKeepingRule::DegreeMinusTwo { floor: 1 };
        assert_eq!(rule.grade(&Term::new(1.0, &[0, 2], Trig::Const, &[0, 0], 2)), 0);
        assert_eq!(rule.grade(&Term::new(1.0, &[1, 2], Trig::Cos, &[1, 0], 3)), 1);
        assert_eq!(rule.grade(&Term::new(1.0, &[1, 0], Trig::Cos, &[1, 0], 1)), 1);
        let h = PoissonSeries::from_terms(
            2,
            6,
            [Term::new(1.0, &[2, 0], Trig::Const, &[0, 0], 2), Term::new(1.0, &[1, 2], Trig::Cos, &[1, 0], 3)],
        )
        .unwrap();
        let g = assign_bookkeeping(&h, rule, 4).unwrap();
        assert_eq!(assign_bookkeeping(&g.regrade(6, |t| Some(t.degree())).unwrap(), rule, 4).unwrap(), g);
        let strict = BookKeepingRule::DegreeMinusTwo { floor: 0 };
        let bad = PoissonSeries::from_terms(2, 4, [Term::new(1.0, &[1, 1], Trig::Cos, &[1, 1], 2)]).unwrap();
        assert!(matches!(assign_bookkeeping(&bad, strict, 4), Err(Error::Rule(_))));
    }

    #[test]
    fn m_zero_is_split_by_grade() {
        let mut h = lin2([1.0, 0.5], 4);
        h.add_term(Term::new(0.1, &[1, 2], Trig::Cos, &[1, 0], 1)).unwrap();
        let r = normalize(&h, &[1.0, 0.5], &ResonantModule::nonresonant(2), 0, &NormalizeOptions::default()).unwrap();
        assert_eq!(r.z_parts.len(), 1);
        assert_eq!(r.remainder().unwrap().len(), 1);
    }
}
