//! Acceptance run: one PASS/FAIL line per criterion, with the measured values.
//!
//! Failing criteria are reported, not hidden; the process exits 0 so the rest of
//! the test suite still runs. Set `LIENORM_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use lienorm_core::constants::PhysicalConstants;
use lienorm_core::estimates::{self, DomainBox};
use lienorm_core::gls::{self, BodyParams};
use lienorm_core::j2;
use lienorm_core::norm::NormMode;
use lienorm_core::normalform::{NormalizeOptions, frequencies, lie_transform};
use lienorm_core::oracle::{j2_average_quadrature, third_body_quadrature};
use lienorm_core::pipeline::{self, OracleInitial};
use lienorm_core::steepness::Steepness as Classification;
use lienorm_core::{PoissonSeries, Term, Trig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const J2_A: [f64; 4] = [6.6107, 4.16422, 1.33656, 1.13806];
const GLS_KM: [f64; 5] = [3000.0, 20000.0, 35786.0, 50000.0, 100000.0];
const STEEP_KM: [f64; 4] = [3000.0, 20000.0, 35786.0, 50000.0];

const REF_J2_REMAINDER: [f64; 4] = [1.28967e-11, 1.60737e-10, 6.26588e-8, 1.43864e-7];
const REF_J2_DLDT: [f64; 4] = [2.7216e-10, 6.66832e-10, 1.63251e-7, 3.4383e-7];
const REF_GLS_REMAINDER: [f64; 5] = [3.74442e-16, 1.82777e-15, 8.7787e-15, 4.97867e-12, 1.64614e-9];
const REF_GLS_TIME: [f64; 5] = [3.86102e14, 4.49464e14, 1.17054e14, 2.11051e10, 1.21928e7];
const REF_I_CRIT_DEG: [f64; 5] = [90.0, 68.75, 68.75, 60.73, 24.06];
const REF_ENLARGED_TIME: f64 = 0.00164;
const REF_GLS_DET: [[f64; 2]; 4] = [[2206.82, 2335.21], [0.0271813, 0.0287145], [0.000309172, 0.000323288], [0.000113523, 0.000118622]];
const REF_GLS_EIG_3000: [f64; 2] = [-11.6416, 3.046];

const N: u32 = 15;
const M: u32 = 12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within_factor(got: f64, want: f64, f: f64) -> bool {
    got > 0.0 && want > 0.0 && got <= f * want && got >= want / f
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn k() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn criterion_1() -> Outcome {
    let k = k();
    let dom = pipeline::j2_domain([21, 21], 12).unwrap();
    let mut norms = Vec::new();
    let mut slowest = 0.0f64;
    for a in J2_A {
        let t = Instant::now();
        let run = pipeline::run_j2(a, N, M, &k).unwrap();
        norms.push(pipeline::estimate_j2(&run, &dom, 0.1, &k).unwrap().remainder.grid);
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    let fast: Vec<f64> = J2_A
        .iter()
        .map(|&a| pipeline::estimate_j2(&pipeline::run_j2(a, 7, 4, &k).unwrap(), &dom, 0.1, &k).unwrap().remainder.grid)
        .collect();
    let fast_time = t.elapsed().as_secs_f64();
    let values = norms.iter().zip(REF_J2_REMAINDER).all(|(g, w)| within_factor(*g, w, 2.0));
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let ordering = increasing(&fast) && increasing(&REF_J2_REMAINDER);
    Outcome {
        pass: values && slowest <= 1800.0 && ordering && fast_time <= 60.0,
        detail: format!(
            "norms [{}] vs [{}] (factor 2: {values}); slowest altitude {slowest:.1} s; fast tier [{}] ordered {ordering} in {fast_time:.1} s",
            list(&norms),
            list(&REF_J2_REMAINDER),
            list(&fast)
        ),
    }
}

fn criterion_2() -> Outcome {
    let k = k();
    let dom = pipeline::j2_domain([21, 21], 12).unwrap();
    let drift: Vec<f64> = J2_A
        .iter()
        .map(|&a| pipeline::estimate_j2(&pipeline::run_j2(a, N, M, &k).unwrap(), &dom, 0.1, &k).unwrap().dl_dt.grid)
        .collect();
    let values = drift.iter().zip(REF_J2_DLDT).all(|(g, w)| within_factor(*g, w, 2.0));
    let (lo, hi) = (1.15679, 16.6786);
    let times: Vec<f64> = (0..1000)
        .map(|j| {
            let a = lo + (hi - lo) * j as f64 / 999.0;
            pipeline::estimate_j2(&pipeline::run_j2(a, N, M, &k).unwrap(), &dom, 0.1, &k).unwrap().t_stability
        })
        .collect();
    let monotone = times.windows(2).all(|w| w[1] > w[0]);
    let (first, last) = (times[0], times[999]);
    let of_order = |x: f64, target: f64| x >= target / 10.0 && x <= target * 10.0;
    let ends = of_order(first, 1.0) && of_order(last, 1e4);
    Outcome {
        pass: values && monotone && ends,
        detail: format!(
            "dL/dt [{}] vs [{}] (factor 2: {values}); T2 curve monotone {monotone}, ends {first:.3e} yr and {last:.3e} yr",
            list(&drift),
            list(&REF_J2_DLDT)
        ),
    }
}

fn criterion_3() -> (Outcome, Vec<f64>) {
    let k = k();
    let dom = pipeline::gls_domain([21, 21], 12).unwrap();
    let wide = DomainBox::new([0.0, 0.1], [0.0, FRAC_PI_2], [21, 21], 12).unwrap();
    let mut rem = Vec::new();
    let mut times = Vec::new();
    let mut icrit = Vec::new();
    let mut enlarged = f64::NAN;
    for alt in GLS_KM {
        let run = pipeline::run_gls(k.altitude_to_a(alt), N, M, &k).unwrap();
        let est = pipeline::estimate_gls(&run, &dom, None, &k).unwrap();
        rem.push(est.remainder.grid);
        times.push(est.t_stability);
        let ic = estimates::critical_inclination(&run.remainder().unwrap(), &wide, &run.map(), 1.0, pipeline::I_CRIT_RESOLUTION, NormMode::Grid).unwrap();
        icrit.push(ic.to_degrees());
        if alt == 100000.0 {
            let big = DomainBox::new([0.0, 0.1], [0.0, 0.5], [21, 21], 12).unwrap();
            enlarged = pipeline::estimate_gls(&run, &big, None, &k).unwrap().t_stability;
        }
    }
    let r_ok = rem.iter().zip(REF_GLS_REMAINDER).all(|(g, w)| within_factor(*g, w, 2.0));
    let t_ok = times.iter().zip(REF_GLS_TIME).all(|(g, w)| within_factor(*g, w, 3.0));
    let i_ok = icrit.iter().zip(REF_I_CRIT_DEG).all(|(g, w)| (g - w).abs() <= 2.0);
    let e_ok = within_factor(enlarged, REF_ENLARGED_TIME, 3.0);
    let o = Outcome {
        pass: r_ok && t_ok && i_ok && e_ok,
        detail: format!(
            "remainder [{}] vs [{}] ({r_ok}); T [{}] vs [{}] ({t_ok}); i_crit deg [{}] vs [{}] ({i_ok}); enlarged T {enlarged:.3e} vs {REF_ENLARGED_TIME:e} ({e_ok})",
            list(&rem),
            list(&REF_GLS_REMAINDER),
            list(&times),
            list(&REF_GLS_TIME),
            list(&icrit),
            list(&REF_I_CRIT_DEG)
        ),
    };
    (o, icrit)
}

fn criterion_4() -> Outcome {
    let k = k();
    let j2run = pipeline::run_j2(J2_A[0], N, M, &k).unwrap();
    let z = j2run.result.normal_form().unwrap();
    let lam = z.terms().filter(|t| t.wave[0] != 0).fold(0.0f64, |m, t| m.max(t.coeff.abs())) / z.max_abs_coeff();
    let glsrun = pipeline::run_gls(k.altitude_to_a(35786.0), N, M, &k).unwrap();
    let zg = glsrun.result.normal_form().unwrap();
    let br = glsrun.integral_bracket().unwrap().max_abs_coeff() / zg.max_abs_coeff();
    let hom = j2run.result.max_homological_residual.max(glsrun.result.max_homological_residual);
    Outcome {
        pass: lam < 1e-14 && br < 1e-14 && hom < 1e-14,
        detail: format!("J2 lambda terms {lam:.1e}; gls integral bracket {br:.1e}; homological residual {hom:.1e} (relative)"),
    }
}

fn random_series(rng: &mut ChaCha8Rng, min_grade: u32, max_bk: u32) -> PoissonSeries {
    let count = rng.random_range(1..6);
    let ts: Vec<Term> = (0..count)
        .map(|_| {
            let kind = [Trig::Const, Trig::Cos, Trig::Sin][rng.random_range(0..3)];
            let w = if kind == Trig::Const { [0, 0] } else { [rng.random_range(-2..=2), rng.random_range(-2..=2)] };
            let e = [2 * rng.random_range(0..4), 2 * rng.random_range(0..4)];
            Term::new(rng.random_range(-1.0..1.0), &e, kind, &w, rng.random_range(min_grade..=max_bk))
        })
        .collect();
    PoissonSeries::from_terms(2, max_bk, ts).unwrap()
}

fn residual(parts: &[PoissonSeries]) -> f64 {
    let scale = parts.iter().map(PoissonSeries::max_abs_coeff).fold(1.0f64, f64::max);
    let mut sum = PoissonSeries::zero(2, parts[0].max_bk());
    for p in parts {
        sum = sum.add(p).unwrap();
    }
    sum.max_abs_coeff() / scale
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bk = 4;
    let br = |a: &PoissonSeries, b: &PoissonSeries| a.poisson_bracket(b).unwrap();
    let mut worst = [0.0f64; 5];
    for _ in 0..1000 {
        let f = random_series(&mut rng, 0, bk);
        let g = random_series(&mut rng, 0, bk);
        let h = random_series(&mut rng, 0, bk);
        let chi = random_series(&mut rng, 1, bk);
        worst[0] = worst[0].max(residual(&[br(&f, &g), br(&g, &f)]));
        worst[1] = worst[1].max(residual(&[br(&f, &br(&g, &h)), br(&g, &br(&h, &f)), br(&h, &br(&f, &g))]));
        worst[2] = worst[2].max(residual(&[br(&f, &g.mul(&h).unwrap()).neg(), br(&f, &g).mul(&h).unwrap(), g.mul(&br(&f, &h)).unwrap()]));
        let t = |s: &PoissonSeries| lie_transform(s, &chi, bk, None).unwrap();
        worst[3] = worst[3].max(residual(&[t(&br(&f, &g)), br(&t(&f), &t(&g)).neg()]));
        let back = lie_transform(&t(&f), &chi.neg(), bk, None).unwrap();
        worst[4] = worst[4].max(residual(&[back, f.neg()]));
    }
    Outcome {
        pass: worst.iter().all(|w| *w <= 1e-12),
        detail: format!(
            "1000 cases each; worst relative residual: antisymmetry {:.1e}, Jacobi {:.1e}, Leibniz {:.1e}, canonicity {:.1e}, inverse {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    }
}

fn criterion_6() -> Outcome {
    let k = k();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let angles = |rng: &mut ChaCha8Rng| [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];

    let a = J2_A[3];
    let run = pipeline::run_j2(a, N, M, &k).unwrap();
    let est = pipeline::estimate_j2(&run, &pipeline::j2_domain([21, 21], 12).unwrap(), 0.1, &k).unwrap();
    let horizon = 0.01 * est.t_stability;
    let mut j2_ratio = 0.0f64;
    let mut ok = true;
    for _ in 0..10 {
        let ic = OracleInitial { e: rng.random_range(0.0..0.15), i: rng.random_range(0.0..FRAC_PI_2), angles: angles(&mut rng) };
        let c = pipeline::oracle_j2(&run, &ic, horizon, est.dl_dt.majorant, 1e-10).unwrap();
        ok &= c.within_bound();
        j2_ratio = j2_ratio.max(c.drift / c.bound);
    }

    let run = pipeline::run_gls(k.altitude_to_a(35786.0), N, M, &k).unwrap();
    let est = pipeline::estimate_gls(&run, &pipeline::gls_domain([21, 21], 12).unwrap(), None, &k).unwrap();
    let g_horizon = (0.01 * est.t_stability).min(20.0 * TAU / est.nu[0].abs());
    let mut gls_ratio = 0.0f64;
    for _ in 0..10 {
        let ic = OracleInitial { e: rng.random_range(0.0..0.1), i: rng.random_range(0.0..0.1), angles: angles(&mut rng) };
        let c = pipeline::oracle_gls(&run, &ic, g_horizon, est.kozai_dt.majorant, 1e-10).unwrap();
        ok &= c.within_bound();
        gls_ratio = gls_ratio.max(c.drift / c.bound);
    }
    Outcome {
        pass: ok,
        detail: format!(
            "J2 at a* = {a} over {horizon:.3e} yr: max drift/bound {j2_ratio:.2e}; gls at GEO over {g_horizon:.3e} yr: max drift/bound {gls_ratio:.2e}"
        ),
    }
}

fn criterion_7() -> (Outcome, String) {
    let k = k();
    let mut j2_labels = Vec::new();
    let mut j2_det = Vec::new();
    let mut gls_labels = Vec::new();
    let mut det_ok = true;
    let mut gls_det = Vec::new();
    let mut eig = [0.0; 2];
    for (j, alt) in STEEP_KM.iter().enumerate() {
        let a = k.altitude_to_a(*alt);
        let v = pipeline::steepness_j2(&pipeline::run_j2(a, N, M, &k).unwrap(), 100, pipeline::TOL_ZERO).unwrap();
        j2_labels.push(v.classification);
        j2_det.push(v.bordered_det.lo.abs().max(v.bordered_det.hi.abs()));
        let g = pipeline::steepness_gls(&pipeline::run_gls(a, N, M, &k).unwrap(), 100, pipeline::TOL_ZERO).unwrap();
        gls_labels.push(g.classification);
        let [lo, hi] = REF_GLS_DET[j];
        det_ok &= g.bordered_det.lo <= 2.0 * hi && g.bordered_det.hi >= lo / 2.0;
        gls_det.push((g.bordered_det.lo, g.bordered_det.hi));
        if j == 0 {
            eig = [g.lambda_min.lo, g.lambda_max.lo];
        }
    }
    let j2_ok = j2_labels.iter().all(|c| *c == Classification::ThreeJet);
    let gls_ok = gls_labels.iter().all(|c| *c == Classification::QuasiConvex);
    let eig_ok = eig.iter().zip(REF_GLS_EIG_3000).all(|(g, w)| ((g - w) / w).abs() <= 0.01);
    let sep_min_gls = gls_det.iter().map(|(lo, hi)| lo.abs().min(hi.abs())).fold(f64::INFINITY, f64::min);
    let sep_max_j2 = j2_det.iter().copied().fold(0.0, f64::max);
    let sep = format!(
        "zero-tolerance separation: largest |J2 det| {sep_max_j2:.2e} (below tol_zero: {}), smallest |gls det| {sep_min_gls:.2e} ({} orders above)",
        sep_max_j2 < pipeline::TOL_ZERO,
        (sep_min_gls / pipeline::TOL_ZERO).log10().floor()
    );
    let labels = |v: &[Classification]| v.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ");
    (
        Outcome {
            pass: j2_ok && gls_ok && det_ok && eig_ok,
            detail: format!(
                "J2 [{}] ({j2_ok}); gls [{}] ({gls_ok}); gls det {:?} vs {:?} ({det_ok}); eigenvalues at 3000 km [{}] vs [{}] ({eig_ok})",
                labels(&j2_labels),
                labels(&gls_labels),
                gls_det.iter().map(|(a, b)| format!("[{a:.3e}, {b:.3e}]")).collect::<Vec<_>>(),
                REF_GLS_DET,
                list(&eig),
                list(&REF_GLS_EIG_3000)
            ),
        },
        sep,
    )
}

fn criterion_8() -> Outcome {
    let k = k();
    let bodies = [BodyParams::moon(&k), BodyParams::sun(&k)];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for alt in STEEP_KM {
        let a = k.altitude_to_a(alt);
        for _ in 0..20 {
            let (e, i) = (rng.random_range(0.0..0.3), rng.random_range(0.0..FRAC_PI_2));
            let (w, o) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            let q = j2_average_quadrature(a, e, i, w, &k, 256).unwrap();
            worst = worst.max((q / j2::average_j2(a, e, i, &k) - 1.0).abs());
            for b in &bodies {
                let q = third_body_quadrature(b, a, e, i, w, o, 256).unwrap();
                worst = worst.max((q / gls::average_third_body(b, a, e, i, w, o).unwrap() - 1.0).abs());
            }
        }
    }
    let a: Vec<f64> = (0..20).map(|j| k.altitude_to_a(500.0 * 1.5f64.powi(j))).collect();
    let i = gls::laplace_plane(&a, &k).unwrap();
    let (low, high) = (i[0].to_degrees(), i[19].to_degrees());
    let limits = low < 0.01 && (high - k.i0.to_degrees()).abs() < 0.5 && i.windows(2).all(|w| w[1] >= w[0]);
    Outcome {
        pass: worst <= 1e-8 && limits,
        detail: format!("worst quadrature mismatch {worst:.1e}; i_eq from {low:.2e} deg to {high:.3} deg (i0 = {:.2} deg)", k.i0.to_degrees()),
    }
}

fn criterion_9() -> Outcome {
    let k = k();
    let (model, h) = pipeline::prepare_gls(k.altitude_to_a(35786.0), N, &k).unwrap();
    let dom = pipeline::gls_domain([21, 21], 12).unwrap();
    let map = |e: f64, i: f64| model.elements_to_actions(e, i).to_vec();
    let ident = |s: &PoissonSeries| Ok(s.clone());
    let scan = estimates::optimal_order_scan(
        &h,
        &frequencies(&h),
        &pipeline::gls_module().unwrap(),
        11,
        &NormalizeOptions::default(),
        &dom,
        &map,
        &ident,
        NormMode::Grid,
    )
    .unwrap();
    let norms: Vec<f64> = scan.iter().map(|s| s.1).collect();
    Outcome { pass: norms.windows(2).all(|w| w[1] <= w[0]), detail: format!("remainder for M = 1..11: [{}]", list(&norms)) }
}

fn main() {
    let strict = std::env::var("LIENORM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failed = 0;
    let mut line = |n: u32, title: &str, o: Outcome| {
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n} [{}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    let t = Instant::now();
    line(1, "J2 remainder norms", criterion_1());
    line(2, "J2 dL/dt norms and stability-time curve", criterion_2());
    let (c3, icrit) = criterion_3();
    line(3, "geolunisolar norms, times and critical inclination", c3);
    line(4, "structural exactness", criterion_4());
    line(5, "algebra identities", criterion_5());
    line(6, "integration against the drift bounds", criterion_6());
    let (c7, sep) = criterion_7();
    line(7, "steepness verdicts", c7);
    line(8, "builders against quadrature", criterion_8());
    line(9, "remainder decrease with the normalization order", criterion_9());
    let monotone = icrit.windows(2).all(|w| w[1] <= w[0]);
    println!("note: critical inclination non-increasing in altitude: {monotone} ([{}] deg)", list(&icrit));
    println!("note: {sep}");
    println!("acceptance: {} of 9 criteria failed ({:.0} s)", failed, t.elapsed().as_secs_f64());
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
