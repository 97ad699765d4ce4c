//! Sparse truncated Poisson series.
//!
//! A term is `coeff * prod_j sqrt(A_j)^{m_j} * trig(k . phi)` carrying an integer
//! book-keeping grade. Terms are stored in one sorted layer per grade, keyed by a
//! packed `u64` holding the square-root exponents, the trig kind and the wave vector.

use alloc::vec;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::math;

/// Maximum number of action/angle pairs a packed key can hold.
pub const MAX_DOF: usize = 4;

const EXP_BITS: u32 = 7;
const EXP_MAX: u32 = (1 << EXP_BITS) - 1;
const WAVE_MAX: i32 = 127;
const KIND_SHIFT: u32 = 32;
const EXP_MASK: u64 = !((1u64 << 35) - 1);

#[inline]
fn exp_shift(j: usize) -> u32 {
    56 - EXP_BITS * j as u32
}
#[inline]
fn wave_shift(j: usize) -> u32 {
    24 - 8 * j as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    Const,
    Cos,
    Sin,
}

impl Trig {
    fn code(self) -> u64 {
        match self {
            Trig::Const => 0,
            Trig::Cos => 1,
            Trig::Sin => 2,
        }
    }
    fn from_code(c: u64) -> Trig {
        match c {
            0 => Trig::Const,
            1 => Trig::Cos,
            _ => Trig::Sin,
        }
    }
    pub fn symbol(self) -> char {
        match self {
            Trig::Const => 'k',
            Trig::Cos => 'c',
            Trig::Sin => 's',
        }
    }
    pub fn from_symbol(c: char) -> Option<Trig> {
        match c {
            'k' => Some(Trig::Const),
            'c' => Some(Trig::Cos),
            's' => Some(Trig::Sin),
            _ => None,
        }
    }
}

/// One term of a series. Only the first `n_dof` entries of `exps` and `wave` are meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exps: [u32; MAX_DOF],
    pub kind: Trig,
    pub wave: [i32; MAX_DOF],
    pub grade: u32,
}

impl Term {
    pub fn new(coeff: f64, exps: &[u32], kind: Trig, wave: &[i32], grade: u32) -> Term {
        let mut e = [0; MAX_DOF];
        let mut w = [0; MAX_DOF];
        e[..exps.len()].copy_from_slice(exps);
        w[..wave.len()].copy_from_slice(wave);
        Term { coeff, exps: e, kind, wave: w, grade }
    }

    /// Total degree in square roots of the actions.
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_angle_free(&self) -> bool {
        self.kind == Trig::Const
    }
}

/// Key with its exponents and wave vector unpacked for arithmetic.
#[derive(Clone, Copy)]
struct Unpacked {
    exp_bits: u64,
    exps: [u32; MAX_DOF],
    kind: Trig,
    wave: [i32; MAX_DOF],
    coeff: f64,
}

fn unpack(key: u64, coeff: f64) -> Unpacked {
    let mut exps = [0; MAX_DOF];
    let mut wave = [0; MAX_DOF];
    for j in 0..MAX_DOF {
        exps[j] = ((key >> exp_shift(j)) as u32) & EXP_MAX;
        wave[j] = (((key >> wave_shift(j)) & 0xff) as u8 as i8) as i32;
    }
    Unpacked {
        exp_bits: key & EXP_MASK,
        exps,
        kind: Trig::from_code((key >> KIND_SHIFT) & 3),
        wave,
        coeff,
    }
}

fn pack_exps(exps: &[u32; MAX_DOF]) -> u64 {
    let mut k = 0u64;
    for (j, &e) in exps.iter().enumerate() {
        k |= (e as u64) << exp_shift(j);
    }
    k
}

fn pack_trig(kind: Trig, wave: &[i32; MAX_DOF]) -> u64 {
    let mut k = kind.code() << KIND_SHIFT;
    for (j, &w) in wave.iter().enumerate() {
        k |= ((w as i8 as u8) as u64) << wave_shift(j);
    }
    k
}

/// Brings `(kind, wave, coeff)` to canonical form: zero wave only as constant,
/// first nonzero wave entry positive. Returns `None` for an identically zero term.
#[inline]
fn canonical(kind: Trig, mut wave: [i32; MAX_DOF], mut coeff: f64) -> Option<(Trig, [i32; MAX_DOF], f64)> {
    match wave.iter().find(|&&w| w != 0) {
        None => match kind {
            Trig::Sin => None,
            _ => Some((Trig::Const, wave, coeff)),
        },
        Some(&first) => {
            if first < 0 {
                for w in wave.iter_mut() {
                    *w = -*w;
                }
                if kind == Trig::Sin {
                    coeff = -coeff;
                }
            }
            Some((if kind == Trig::Const { Trig::Cos } else { kind }, wave, coeff))
        }
    }
}

type Acc = HashMap<u64, f64>;

#[inline]
fn emit(acc: &mut Acc, exp_bits: u64, kind: Trig, wave: [i32; MAX_DOF], coeff: f64) -> Result<()> {
    if coeff == 0.0 {
        return Ok(());
    }
    if let Some((kind, wave, coeff)) = canonical(kind, wave, coeff) {
        if wave.iter().any(|w| w.abs() > WAVE_MAX) {
            return Err(Error::Overflow("wave number exceeds 127".into()));
        }
        *acc.entry(exp_bits | pack_trig(kind, &wave)).or_insert(0.0) += coeff;
    }
    Ok(())
}

#[inline]
fn wsum(a: &[i32; MAX_DOF], b: &[i32; MAX_DOF], sign: i32) -> [i32; MAX_DOF] {
    let mut r = [0; MAX_DOF];
    for j in 0..MAX_DOF {
        r[j] = a[j] + sign * b[j];
    }
    r
}

/// Emits `c * T_a(wa) * T_b(wb)` expanded by product-to-sum identities.
#[inline]
fn emit_product(
    acc: &mut Acc,
    exp_bits: u64,
    ka: Trig,
    wa: &[i32; MAX_DOF],
    kb: Trig,
    wb: &[i32; MAX_DOF],
    c: f64,
) -> Result<()> {
    use Trig::*;
    match (ka, kb) {
        (Const, k) => emit(acc, exp_bits, k, *wb, c),
        (k, Const) => emit(acc, exp_bits, k, *wa, c),
        (Cos, Cos) => {
            emit(acc, exp_bits, Cos, wsum(wa, wb, -1), 0.5 * c)?;
            emit(acc, exp_bits, Cos, wsum(wa, wb, 1), 0.5 * c)
        }
        (Sin, Sin) => {
            emit(acc, exp_bits, Cos, wsum(wa, wb, -1), 0.5 * c)?;
            emit(acc, exp_bits, Cos, wsum(wa, wb, 1), -0.5 * c)
        }
        (Sin, Cos) => {
            emit(acc, exp_bits, Sin, wsum(wa, wb, 1), 0.5 * c)?;
            emit(acc, exp_bits, Sin, wsum(wa, wb, -1), 0.5 * c)
        }
        (Cos, Sin) => {
            emit(acc, exp_bits, Sin, wsum(wa, wb, 1), 0.5 * c)?;
            emit(acc, exp_bits, Sin, wsum(wa, wb, -1), -0.5 * c)
        }
    }
}

/// Derivative of a trig factor with respect to its phase: cos -> -sin, sin -> cos.
#[inline]
fn dtrig(k: Trig) -> (Trig, f64) {
    match k {
        Trig::Cos => (Trig::Sin, -1.0),
        Trig::Sin => (Trig::Cos, 1.0),
        Trig::Const => (Trig::Const, 0.0),
    }
}

fn finish(acc: Acc) -> Vec<(u64, f64)> {
    let mut v: Vec<(u64, f64)> = acc.into_iter().filter(|&(_, c)| c != 0.0).collect();
    v.sort_unstable_by_key(|&(k, _)| k);
    v
}

/// Sparse truncated Poisson series in `n_dof` action/angle pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSeries {
    n_dof: usize,
    max_bk: u32,
    layers: Vec<Vec<(u64, f64)>>,
}

impl PoissonSeries {
    pub fn zero(n_dof: usize, max_bk: u32) -> PoissonSeries {
        assert!(n_dof >= 1 && n_dof <= MAX_DOF, "n_dof must be in 1..={MAX_DOF}");
        PoissonSeries { n_dof, max_bk, layers: vec![Vec::new(); max_bk as usize + 1] }
    }

    pub fn constant(n_dof: usize, max_bk: u32, c: f64) -> PoissonSeries {
        let mut s = PoissonSeries::zero(n_dof, max_bk);
        if c != 0.0 {
            s.layers[0].push((0, c));
        }
        s
    }

    /// A single monomial term; terms above `max_bk` give the zero series.
    pub fn monomial(n_dof: usize, max_bk: u32, term: Term) -> Result<PoissonSeries> {
        let mut s = PoissonSeries::zero(n_dof, max_bk);
        s.add_term(term)?;
        Ok(s)
    }

    pub fn from_terms<I: IntoIterator<Item = Term>>(n_dof: usize, max_bk: u32, terms: I) -> Result<PoissonSeries> {
        let mut accs: Vec<Acc> = (0..=max_bk).map(|_| Acc::new()).collect();
        for t in terms {
            if t.grade > max_bk {
                continue;
            }
            let eb = Self::checked_exps(n_dof, &t)?;
            emit(&mut accs[t.grade as usize], eb, t.kind, t.wave, t.coeff)?;
        }
        Ok(PoissonSeries { n_dof, max_bk, layers: accs.into_iter().map(finish).collect() })
    }

    fn checked_exps(n_dof: usize, t: &Term) -> Result<u64> {
        for j in n_dof..MAX_DOF {
            if t.exps[j] != 0 || t.wave[j] != 0 {
                return Err(Error::Argument("term uses more degrees of freedom than the series".into()));
            }
        }
        if t.exps.iter().any(|&e| e > EXP_MAX) {
            return Err(Error::Overflow("sqrt-action exponent exceeds 127".into()));
        }
        Ok(pack_exps(&t.exps))
    }

    /// Adds one term, merging with an existing like term.
    pub fn add_term(&mut self, t: Term) -> Result<()> {
        if t.grade > self.max_bk {
            return Ok(());
        }
        let eb = Self::checked_exps(self.n_dof, &t)?;
        let Some((kind, wave, coeff)) = canonical(t.kind, t.wave, t.coeff) else {
            return Ok(());
        };
        if coeff == 0.0 {
            return Ok(());
        }
        if wave.iter().any(|w| w.abs() > WAVE_MAX) {
            return Err(Error::Overflow("wave number exceeds 127".into()));
        }
        let key = eb | pack_trig(kind, &wave);
        let layer = &mut self.layers[t.grade as usize];
        match layer.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(pos) => {
                layer[pos].1 += coeff;
                if layer[pos].1 == 0.0 {
                    layer.remove(pos);
                }
            }
            Err(pos) => layer.insert(pos, (key, coeff)),
        }
        Ok(())
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }
    pub fn max_bk(&self) -> u32 {
        self.max_bk
    }
    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(Vec::is_empty)
    }

    /// Terms in deterministic order: by grade, then by packed key.
    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.layers.iter().enumerate().flat_map(|(g, layer)| {
            layer.iter().map(move |&(k, c)| {
                let u = unpack(k, c);
                Term { coeff: c, exps: u.exps, kind: u.kind, wave: u.wave, grade: g as u32 }
            })
        })
    }

    pub fn min_grade(&self) -> Option<u32> {
        self.layers.iter().position(|l| !l.is_empty()).map(|g| g as u32)
    }
    pub fn top_grade(&self) -> Option<u32> {
        self.layers.iter().rposition(|l| !l.is_empty()).map(|g| g as u32)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.layers.iter().flatten().fold(0.0, |m, &(_, c)| m.max(math::abs(c)))
    }

    /// Sum of |coeff| over all terms.
    pub fn l1_coeff(&self) -> f64 {
        self.layers.iter().flatten().map(|&(_, c)| math::abs(c)).sum()
    }

    /// The part of grade exactly `g`.
    pub fn grade_part(&self, g: u32) -> PoissonSeries {
        let mut s = PoissonSeries::zero(self.n_dof, self.max_bk);
        if g <= self.max_bk {
            s.layers[g as usize] = self.layers[g as usize].clone();
        }
        s
    }

    /// Drops every term with grade above `order`; `max_bk` is lowered accordingly.
    pub fn truncate(&self, order: u32) -> PoissonSeries {
        let n = order.min(self.max_bk);
        PoissonSeries { n_dof: self.n_dof, max_bk: n, layers: self.layers[..=n as usize].to_vec() }
    }

    /// Changes the truncation order, dropping terms above it or padding with empty layers.
    pub fn with_max_bk(&self, max_bk: u32) -> PoissonSeries {
        let mut layers = self.layers.clone();
        layers.resize(max_bk as usize + 1, Vec::new());
        PoissonSeries { n_dof: self.n_dof, max_bk, layers }
    }

    /// Keeps the terms accepted by `pred`.
    pub fn filter(&self, mut pred: impl FnMut(&Term) -> bool) -> PoissonSeries {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(g, layer)| {
                layer
                    .iter()
                    .copied()
                    .filter(|&(k, c)| {
                        let u = unpack(k, c);
                        pred(&Term { coeff: c, exps: u.exps, kind: u.kind, wave: u.wave, grade: g as u32 })
                    })
                    .collect()
            })
            .collect();
        PoissonSeries { n_dof: self.n_dof, max_bk: self.max_bk, layers }
    }

    /// Reassigns grades. `rule` returns the new grade or `None` to drop the term.
    pub fn regrade(&self, max_bk: u32, mut rule: impl FnMut(&Term) -> Option<u32>) -> Result<PoissonSeries> {
        let mut out: Vec<Acc> = (0..=max_bk).map(|_| Acc::new()).collect();
        for t in self.terms() {
            if let Some(g) = rule(&t) {
                if g <= max_bk {
                    *out[g as usize].entry(pack_exps(&t.exps) | pack_trig(t.kind, &t.wave)).or_insert(0.0) += t.coeff;
                }
            }
        }
        Ok(PoissonSeries { n_dof: self.n_dof, max_bk, layers: out.into_iter().map(finish).collect() })
    }

    /// Drops terms with |coeff| <= rel * max|coeff|.
    pub fn chop(&self, rel: f64) -> PoissonSeries {
        let thr = rel * self.max_abs_coeff();
        self.filter(|t| math::abs(t.coeff) > thr)
    }

    fn check_dims(&self, other: &PoissonSeries) -> Result<()> {
        if self.n_dof != other.n_dof {
            return Err(Error::Dimension { left: self.n_dof, right: other.n_dof });
        }
        Ok(())
    }

    pub fn scale(&self, f: f64) -> PoissonSeries {
        if f == 0.0 {
            return PoissonSeries::zero(self.n_dof, self.max_bk);
        }
        let layers = self.layers.iter().map(|l| l.iter().map(|&(k, c)| (k, c * f)).collect()).collect();
        PoissonSeries { n_dof: self.n_dof, max_bk: self.max_bk, layers }
    }

    pub fn neg(&self) -> PoissonSeries {
        self.scale(-1.0)
    }

    /// `self + f * other`, merged layer by layer.
    pub fn axpy(&self, f: f64, other: &PoissonSeries) -> Result<PoissonSeries> {
        self.check_dims(other)?;
        let max_bk = self.max_bk.min(other.max_bk);
        let mut layers = Vec::with_capacity(max_bk as usize + 1);
        for g in 0..=max_bk as usize {
            let (a, b) = (&self.layers[g], &other.layers[g]);
            let mut out = Vec::with_capacity(a.len() + b.len());
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                    out.push(a[i]);
                    i += 1;
                } else if i == a.len() || b[j].0 < a[i].0 {
                    out.push((b[j].0, f * b[j].1));
                    j += 1;
                } else {
                    let c = a[i].1 + f * b[j].1;
                    if c != 0.0 {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
            out.retain(|&(_, c)| c != 0.0);
            layers.push(out);
        }
        Ok(PoissonSeries { n_dof: self.n_dof, max_bk, layers })
    }

    pub fn add(&self, other: &PoissonSeries) -> Result<PoissonSeries> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PoissonSeries) -> Result<PoissonSeries> {
        self.axpy(-1.0, other)
    }

    fn unpacked_layers(&self) -> Vec<Vec<Unpacked>> {
        self.layers.iter().map(|l| l.iter().map(|&(k, c)| unpack(k, c)).collect()).collect()
    }

    fn max_exps(&self) -> [u32; MAX_DOF] {
        let mut m = [0; MAX_DOF];
        for &(k, _) in self.layers.iter().flatten() {
            let u = unpack(k, 0.0);
            for j in 0..MAX_DOF {
                m[j] = m[j].max(u.exps[j]);
            }
        }
        m
    }

    fn check_exp_headroom(&self, other: &PoissonSeries) -> Result<()> {
        let (a, b) = (self.max_exps(), other.max_exps());
        if (0..MAX_DOF).any(|j| a[j] + b[j] > EXP_MAX) {
            return Err(Error::Overflow("product exponent exceeds 127".into()));
        }
        Ok(())
    }

    /// Product with product-to-sum expansion; grades add, terms above `max_bk` are dropped.
    pub fn mul(&self, other: &PoissonSeries) -> Result<PoissonSeries> {
        self.check_dims(other)?;
        self.check_exp_headroom(other)?;
        let max_bk = self.max_bk.min(other.max_bk) as usize;
        let (ua, ub) = (self.unpacked_layers(), other.unpacked_layers());
        let mut accs: Vec<Acc> = (0..=max_bk).map(|_| Acc::new()).collect();
        for (ga, la) in ua.iter().enumerate().take(max_bk + 1) {
            for (gb, lb) in ub.iter().enumerate().take(max_bk + 1 - ga) {
                let acc = &mut accs[ga + gb];
                for ta in la {
                    for tb in lb {
                        emit_product(acc, ta.exp_bits + tb.exp_bits, ta.kind, &ta.wave, tb.kind, &tb.wave, ta.coeff * tb.coeff)?;
                    }
                }
            }
        }
        Ok(PoissonSeries { n_dof: self.n_dof, max_bk: max_bk as u32, layers: accs.into_iter().map(finish).collect() })
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Result<PoissonSeries> {
        let mut r = PoissonSeries::constant(self.n_dof, self.max_bk, 1.0);
        for _ in 0..n {
            r = r.mul(self)?;
        }
        Ok(r)
    }

    /// `(1 + x)^alpha` by the binomial series; `x` must have no grade-0 part.
    pub fn one_plus_pow(x: &PoissonSeries, alpha: f64) -> Result<PoissonSeries> {
        if !x.layers[0].is_empty() {
            return Err(Error::Argument("binomial series needs an argument of positive grade".into()));
        }
        let mut out = PoissonSeries::constant(x.n_dof, x.max_bk, 1.0);
        let mut pw = out.clone();
        for j in 1..=x.max_bk {
            pw = pw.mul(x)?;
            if pw.is_empty() {
                break;
            }
            out = out.axpy(math::binom(alpha, j), &pw)?;
        }
        Ok(out)
    }

    /// Poisson bracket `{a,b} = sum_j (da/dphi_j db/dA_j - da/dA_j db/dphi_j)`; grades add.
    pub fn poisson_bracket(&self, other: &PoissonSeries) -> Result<PoissonSeries> {
        self.check_dims(other)?;
        self.check_exp_headroom(other)?;
        let n = self.n_dof;
        let max_bk = self.max_bk.min(other.max_bk) as usize;
        let (ua, ub) = (self.unpacked_layers(), other.unpacked_layers());
        let mut accs: Vec<Acc> = (0..=max_bk).map(|_| Acc::new()).collect();
        // negative-exponent leftovers, keyed by (grade, key with the offending exponent zeroed, dof)
        let mut bad: HashMap<(usize, u64, usize), f64> = HashMap::new();
        let mut scale = 0.0f64;
        for (ga, la) in ua.iter().enumerate().take(max_bk + 1) {
            for (gb, lb) in ub.iter().enumerate().take(max_bk + 1 - ga) {
                let g = ga + gb;
                for ta in la {
                    for tb in lb {
                        let cab = ta.coeff * tb.coeff;
                        let base = ta.exp_bits + tb.exp_bits;
                        for j in 0..n {
                            let c1 = ta.wave[j] as f64 * tb.exps[j] as f64 * 0.5;
                            let c2 = -(ta.exps[j] as f64) * tb.wave[j] as f64 * 0.5;
                            if c1 == 0.0 && c2 == 0.0 {
                                continue;
                            }
                            let esum = ta.exps[j] + tb.exps[j];
                            if esum < 2 {
                                // only reachable with esum == 1
                                let zeroed = base & !((EXP_MAX as u64) << exp_shift(j));
                                let mut tmp = Acc::new();
                                if c1 != 0.0 {
                                    let (dk, s) = dtrig(ta.kind);
                                    emit_product(&mut tmp, zeroed, dk, &ta.wave, tb.kind, &tb.wave, s * c1 * cab)?;
                                }
                                if c2 != 0.0 {
                                    let (dk, s) = dtrig(tb.kind);
                                    emit_product(&mut tmp, zeroed, ta.kind, &ta.wave, dk, &tb.wave, s * c2 * cab)?;
                                }
                                for (k, c) in tmp {
                                    scale = scale.max(math::abs(c));
                                    *bad.entry((g, k, j)).or_insert(0.0) += c;
                                }
                                continue;
                            }
                            let eb = base - (2u64 << exp_shift(j));
                            let acc = &mut accs[g];
                            if c1 != 0.0 {
                                let (dk, s) = dtrig(ta.kind);
                                emit_product(acc, eb, dk, &ta.wave, tb.kind, &tb.wave, s * c1 * cab)?;
                            }
                            if c2 != 0.0 {
                                let (dk, s) = dtrig(tb.kind);
                                emit_product(acc, eb, ta.kind, &ta.wave, dk, &tb.wave, s * c2 * cab)?;
                            }
                        }
                    }
                }
            }
        }
        for (&(_, _, j), &c) in bad.iter() {
            if math::abs(c) > 1e-12 * scale {
                return Err(Error::NonPolynomial { dof: j });
            }
        }
        Ok(PoissonSeries { n_dof: n, max_bk: max_bk as u32, layers: accs.into_iter().map(finish).collect() })
    }

    /// Partial derivative with respect to action `j` (exponent m -> m-2, factor m/2).
    pub fn d_action(&self, j: usize) -> Result<PoissonSeries> {
        self.index_check(j)?;
        let mut out = PoissonSeries::zero(self.n_dof, self.max_bk);
        for (g, layer) in self.layers.iter().enumerate() {
            let mut acc = Acc::new();
            for &(k, c) in layer {
                let u = unpack(k, c);
                let m = u.exps[j];
                if m == 0 {
                    continue;
                }
                if m == 1 {
                    return Err(Error::NonPolynomial { dof: j });
                }
                *acc.entry(k - (2u64 << exp_shift(j))).or_insert(0.0) += c * m as f64 * 0.5;
            }
            out.layers[g] = finish(acc);
        }
        Ok(out)
    }

    /// Partial derivative with respect to angle `j`.
    pub fn d_angle(&self, j: usize) -> Result<PoissonSeries> {
        self.index_check(j)?;
        let mut out = PoissonSeries::zero(self.n_dof, self.max_bk);
        for (g, layer) in self.layers.iter().enumerate() {
            let mut acc = Acc::new();
            for &(k, c) in layer {
                let u = unpack(k, c);
                if u.wave[j] == 0 {
                    continue;
                }
                let (dk, s) = dtrig(u.kind);
                emit(&mut acc, u.exp_bits, dk, u.wave, s * u.wave[j] as f64 * c)?;
            }
            out.layers[g] = finish(acc);
        }
        Ok(out)
    }

    fn index_check(&self, j: usize) -> Result<()> {
        if j >= self.n_dof {
            return Err(Error::Argument("variable index out of range".into()));
        }
        Ok(())
    }

    /// Value at the given actions (nonnegative) and angles.
    pub fn evaluate(&self, actions: &[f64], angles: &[f64]) -> Result<f64> {
        if actions.len() != self.n_dof || angles.len() != self.n_dof {
            return Err(Error::Dimension { left: self.n_dof, right: actions.len() });
        }
        if actions.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::Domain("negative action".into()));
        }
        let roots: Vec<f64> = actions.iter().map(|&a| math::sqrt(a)).collect();
        let mut sum = 0.0;
        for t in self.terms() {
            let mut v = t.coeff;
            for j in 0..self.n_dof {
                if t.exps[j] > 0 {
                    v *= math::powi(roots[j], t.exps[j] as i32);
                }
            }
            let phase: f64 = (0..self.n_dof).map(|j| t.wave[j] as f64 * angles[j]).sum();
            v *= match t.kind {
                Trig::Const => 1.0,
                Trig::Cos => math::cos(phase),
                Trig::Sin => math::sin(phase),
            };
            sum += v;
        }
        Ok(sum)
    }

    /// Largest difference of coefficients between two series, termwise.
    pub fn max_coeff_diff(&self, other: &PoissonSeries) -> Result<f64> {
        Ok(self.sub(other)?.max_abs_coeff())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: f64, e: &[u32], k: Trig, w: &[i32], g: u32) -> Term {
        Term::new(c, e, k, w, g)
    }

    fn s1(terms: &[Term]) -> PoissonSeries {
        PoissonSeries::from_terms(terms[0].exps.len().min(2), 6, terms.iter().copied()).unwrap()
    }

    #[test]
    fn like_terms_merge() {
        let a = s1(&[t(2.0, &[0, 0], Trig::Cos, &[1, 0], 0)]);
        let b = s1(&[t(3.0, &[0, 0], Trig::Cos, &[1, 0], 0)]);
        let c = a.add(&b).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.terms().next().unwrap().coeff, 5.0);
        assert!(a.sub(&a).unwrap().is_empty());
    }

    #[test]
    fn canonical_sign() {
        let a = s1(&[t(1.0, &[0, 0], Trig::Sin, &[-1, 2], 1)]);
        let term = a.terms().next().unwrap();
        assert_eq!(term.wave[..2], [1, -2]);
        assert_eq!(term.coeff, -1.0);
        let z = s1(&[t(1.0, &[0, 0], Trig::Sin, &[0, 0], 1)]);
        assert!(z.is_empty());
    }

    #[test]
    fn cos_squared() {
        let a = s1(&[t(1.0, &[0, 0], Trig::Cos, &[1, 0], 0)]);
        let sq = a.mul(&a).unwrap();
        let v: Vec<Term> = sq.terms().collect();
        assert_eq!(v.len(), 2);
        assert!(v.iter().any(|t| t.kind == Trig::Const && t.coeff == 0.5));
        assert!(v.iter().any(|t| t.kind == Trig::Cos && t.wave[0] == 2 && t.coeff == 0.5));
    }

    #[test]
    fn sin_p_squared() {
        // sqrt(P) sin p squared = P/2 - P/2 cos 2p
        let a = s1(&[t(1.0, &[1, 0], Trig::Sin, &[1, 0], 1)]);
        let sq = a.mul(&a).unwrap();
        let v: Vec<Term> = sq.terms().collect();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|t| t.exps[0] == 2 && t.grade == 2));
        assert!(v.iter().any(|t| t.kind == Trig::Const && t.coeff == 0.5));
        assert!(v.iter().any(|t| t.kind == Trig::Cos && t.coeff == -0.5));
    }

    #[test]
    fn truncation_drops_high_grades() {
        let a = PoissonSeries::from_terms(1, 3, [t(1.0, &[1], Trig::Cos, &[1], 2)]).unwrap();
        assert!(a.mul(&a).unwrap().is_empty());
        assert_eq!(a.truncate(0).len(), 0);
        assert_eq!(a.truncate(3), a);
    }

    #[test]
    fn canonical_pair_bracket() {
        let a = PoissonSeries::from_terms(2, 4, [t(1.0, &[2, 0], Trig::Const, &[0, 0], 0)]).unwrap();
        // phi_1 itself is not a Poisson series; use {A1, sin phi1} = -cos phi1
        let s = PoissonSeries::from_terms(2, 4, [t(1.0, &[0, 0], Trig::Sin, &[1, 0], 0)]).unwrap();
        let b = a.poisson_bracket(&s).unwrap();
        let v: Vec<Term> = b.terms().collect();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].kind, v[0].coeff), (Trig::Cos, -1.0));
        let a2 = PoissonSeries::from_terms(2, 4, [t(1.0, &[0, 2], Trig::Const, &[0, 0], 0)]).unwrap();
        assert!(a.poisson_bracket(&a2).unwrap().is_empty());
    }

    #[test]
    fn bracket_p_cos_p_sin() {
        // {P cos p, P sin p} = -P
        let a = PoissonSeries::from_terms(1, 4, [t(1.0, &[2], Trig::Cos, &[1], 0)]).unwrap();
        let b = PoissonSeries::from_terms(1, 4, [t(1.0, &[2], Trig::Sin, &[1], 0)]).unwrap();
        let v: Vec<Term> = a.poisson_bracket(&b).unwrap().terms().collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, Trig::Const);
        assert_eq!(v[0].exps[0], 2);
        assert!((v[0].coeff + 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives() {
        let a = PoissonSeries::from_terms(1, 2, [t(1.0, &[0], Trig::Cos, &[1], 0)]).unwrap();
        let d: Vec<Term> = a.d_angle(0).unwrap().terms().collect();
        assert_eq!((d[0].kind, d[0].coeff), (Trig::Sin, -1.0));
        let p = PoissonSeries::from_terms(1, 2, [t(1.0, &[2], Trig::Const, &[0], 0)]).unwrap();
        let d: Vec<Term> = p.d_action(0).unwrap().terms().collect();
        assert_eq!((d[0].exps[0], d[0].coeff), (0, 1.0));
        let r = PoissonSeries::from_terms(1, 2, [t(1.0, &[1], Trig::Cos, &[1], 0)]).unwrap();
        assert_eq!(r.d_action(0), Err(Error::NonPolynomial { dof: 0 }));
    }

    #[test]
    fn isolated_negative_exponent_is_an_error() {
        let a = PoissonSeries::from_terms(1, 4, [t(1.0, &[1], Trig::Cos, &[1], 0)]).unwrap();
        let b = PoissonSeries::from_terms(1, 4, [t(1.0, &[0], Trig::Cos, &[1], 0)]).unwrap();
        assert!(matches!(a.poisson_bracket(&b), Err(Error::NonPolynomial { .. })));
    }

    #[test]
    fn evaluate_basic() {
        let a = PoissonSeries::from_terms(1, 2, [t(5.0, &[0], Trig::Cos, &[1], 0)]).unwrap();
        assert_eq!(a.evaluate(&[0.3], &[0.0]).unwrap(), 5.0);
        let p = PoissonSeries::from_terms(1, 2, [t(1.0, &[2], Trig::Const, &[0], 0)]).unwrap();
        assert!((p.evaluate(&[0.25], &[1.0]).unwrap() - 0.25).abs() < 1e-16);
        assert!(matches!(p.evaluate(&[-1.0], &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let a = PoissonSeries::zero(1, 2);
        let b = PoissonSeries::zero(2, 2);
        assert!(matches!(a.add(&b), Err(Error::Dimension { .. })));
        assert!(matches!(a.mul(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn binomial_series() {
        let x = PoissonSeries::from_terms(1, 8, [t(0.1, &[2], Trig::Const, &[0], 1)]).unwrap();
        let y = PoissonSeries::one_plus_pow(&x, -1.5).unwrap();
        let v = y.evaluate(&[1.0], &[0.0]).unwrap();
        assert!((v - 1.1f64.powf(-1.5)).abs() < 1e-7);
    }
}
