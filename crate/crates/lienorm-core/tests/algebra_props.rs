//! Randomized identities of the series algebra: bracket antisymmetry, Jacobi,
//! Leibniz, canonicity of Lie transforms and forward/inverse composition.

use lienorm_core::normalform::lie_transform;
use lienorm_core::{PoissonSeries, Term, Trig};
use proptest::prelude::*;

const N_DOF: usize = 2;
const MAX_BK: u32 = 4;
const TOL: f64 = 1e-12;

fn term(min_grade: u32) -> impl Strategy<Value = Term> {
    (
        -1.0f64..1.0,
        prop::array::uniform2(0u32..4),
        0u8..3,
        prop::array::uniform2(-2i32..=2),
        min_grade..=MAX_BK,
    )
        .prop_map(|(c, e, k, w, g)| {
            // even exponents keep every derivative polynomial
            let kind = [Trig::Const, Trig::Cos, Trig::Sin][k as usize];
            let w = if kind == Trig::Const { [0, 0] } else { w };
            Term::new(c, &[2 * e[0], 2 * e[1]], kind, &w, g)
        })
}

fn series(min_grade: u32) -> impl Strategy<Value = PoissonSeries> {
    prop::collection::vec(term(min_grade), 1..6).prop_map(|ts| PoissonSeries::from_terms(N_DOF, MAX_BK, ts).unwrap())
}

/// Asserts `sum(parts) == 0` termwise relative to the largest coefficient of the parts.
fn assert_cancels(parts: &[PoissonSeries]) {
    let scale = parts.iter().map(PoissonSeries::max_abs_coeff).fold(1.0f64, f64::max);
    let mut sum = PoissonSeries::zero(N_DOF, MAX_BK);
    for p in parts {
        sum = sum.add(p).unwrap();
    }
    let resid = sum.max_abs_coeff();
    assert!(resid <= TOL * scale, "residual {resid:e} at scale {scale:e}");
}

fn br(a: &PoissonSeries, b: &PoissonSeries) -> PoissonSeries {
    a.poisson_bracket(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bracket_is_antisymmetric(f in series(0), g in series(0)) {
        assert_cancels(&[br(&f, &g), br(&g, &f)]);
    }

    #[test]
    fn jacobi_identity(f in series(0), g in series(0), h in series(0)) {
        assert_cancels(&[br(&f, &br(&g, &h)), br(&g, &br(&h, &f)), br(&h, &br(&f, &g))]);
    }

    #[test]
    fn leibniz_rule(f in series(0), g in series(0), h in series(0)) {
        let lhs = br(&f, &g.mul(&h).unwrap());
        let a = br(&f, &g).mul(&h).unwrap();
        let b = g.mul(&br(&f, &h)).unwrap();
        assert_cancels(&[lhs.neg(), a, b]);
    }

    #[test]
    fn lie_transform_is_canonical(f in series(0), g in series(0), chi in series(1)) {
        let t = |s: &PoissonSeries| lie_transform(s, &chi, MAX_BK, None).unwrap();
        assert_cancels(&[t(&br(&f, &g)), br(&t(&f), &t(&g)).neg()]);
    }

    #[test]
    fn forward_then_inverse_is_identity(f in series(0), chi in series(1)) {
        let fwd = lie_transform(&f, &chi, MAX_BK, None).unwrap();
        let back = lie_transform(&fwd, &chi.neg(), MAX_BK, None).unwrap();
        assert_cancels(&[back, f.neg()]);
    }
}
