//! The subcommands: each returns a [`Report`] and writes its artifacts under the output directory.

use std::f64::consts::{FRAC_PI_2, TAU};

use lienorm_core::estimates::{self, DomainBox};
use lienorm_core::gls;
use lienorm_core::norm::{NormMode, sup_norm_points};
use lienorm_core::normalform::NormalizeOptions;
use lienorm_core::pipeline::{self, GlsRun, J2Run, OracleCheck, OracleInitial};
use lienorm_core::steepness::SteepnessVerdict;
use lienorm_core::{PoissonSeries, Trig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Model, RunConfig};
use crate::error::CliError;
use crate::format::{Metadata, format_coeff, join_f64, write_kv, write_series};
use crate::report::{Cell, Report, Table};
use crate::store::{self, Run, write_file};

/// Reference semimajor axes (R_E) of the J2 stability tables.
pub const J2_TABLE_A: [f64; 4] = [6.6107, 4.16422, 1.33656, 1.13806];
/// Altitudes (km) of the geolunisolar stability tables.
pub const GLS_ALTITUDES: [f64; 5] = [3000.0, 20000.0, 35786.0, 50000.0, 100000.0];
/// Altitudes (km) of the steepness tables.
pub const STEEP_ALTITUDES: [f64; 4] = [3000.0, 20000.0, 35786.0, 50000.0];
/// Semimajor-axis range (R_E) of the stability-time curve.
pub const FIG5_RANGE: [f64; 2] = [1.15679, 16.6786];
/// Relative zero tolerance of the structural self-checks.
pub const STRUCT_TOL: f64 = 1e-14;

/// Order-preserving parallel map over a slice using scoped threads.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<U>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn new_report(cfg: &RunConfig, title: &str) -> Report {
    Report::new(title, cfg.echo(), cfg.config_hash())
}

fn require(cfg: &RunConfig, model: Model) -> Result<(), CliError> {
    if cfg.model != model {
        return Err(CliError::Config(format!("`{}` needs model = {}", cfg.command, model.name())));
    }
    Ok(())
}

fn domain(cfg: &RunConfig) -> Result<DomainBox, CliError> {
    Ok(DomainBox::new(cfg.e_range, cfg.i_range, cfg.grid, cfg.angle_nodes)?)
}

fn artifact_meta(cfg: &RunConfig) -> Metadata {
    let mut m = Metadata::new();
    m.insert("model".into(), cfg.model.name().into());
    m.insert("a_star".into(), format_coeff(cfg.a_star));
    m.insert("N".into(), cfg.n.to_string());
    m.insert("constants_fingerprint".into(), format!("{:016x}", cfg.constants.fingerprint()));
    m.insert("config_hash".into(), format!("{:016x}", cfg.config_hash()));
    m
}

fn kv_table(name: &str, kv: &Metadata) -> Table {
    let mut t = Table::new(name, &["key", "value"]);
    for (k, v) in kv {
        t.push(vec![k.as_str().into(), v.as_str().into()]);
    }
    t
}

/// Builds the model Hamiltonian and writes it with a manifest.
pub fn cmd_build(cfg: &RunConfig) -> Result<Report, CliError> {
    let k = &cfg.constants;
    let mut meta = artifact_meta(cfg);
    let mut man = meta.clone();
    let series = match cfg.model {
        Model::J2 => {
            let (model, h) = pipeline::prepare_j2(cfg.a_star, cfg.n, k)?;
            man.insert("L_star".into(), format_coeff(model.l_star));
            man.insert("omega".into(), join_f64(&model.omega));
            let lin = h.grade_part(0);
            let coeff = |j: usize| lin.terms().find(|t| t.kind == Trig::Const && t.exps[j] == 2).map(|t| t.coeff).unwrap_or(0.0);
            man.insert("linear_part".into(), join_f64(&[coeff(0), coeff(1), coeff(2)]));
            h
        }
        Model::Gls => {
            let (model, h) = pipeline::prepare_gls(cfg.a_star, cfg.n, k)?;
            let e = model.eq;
            man.insert("i_eq".into(), format_coeff(e.i_eq));
            man.insert("i_eq_deg".into(), format_coeff(e.i_eq.to_degrees()));
            man.insert("i_eq_first_order".into(), format_coeff(e.i_eq_first_order));
            man.insert("nu1".into(), format_coeff(e.nu1));
            man.insert("nu2".into(), format_coeff(e.nu2));
            man.insert("c12".into(), format_coeff(e.c12));
            man.insert("c34".into(), format_coeff(e.c34));
            man.insert("A1".into(), format_coeff(e.a1));
            man.insert("B1".into(), format_coeff(e.b1));
            man.insert("Q_eq".into(), format_coeff(e.q_eq_action));
            man.insert("gradient_residual".into(), format_coeff(model.gradient_residual));
            h
        }
    };
    man.insert("terms".into(), series.len().to_string());
    meta.insert("kind".into(), "hamiltonian".into());
    let base = format!("{}_hamiltonian", cfg.model.name());
    write_file(&cfg.output.join(format!("{base}.ps")), &write_series(&series, &meta))?;
    write_file(&cfg.output.join(format!("{base}.manifest")), &write_kv(&man))?;
    let mut r = new_report(cfg, "build");
    r.tables.push(kv_table("manifest", &man));
    Ok(r)
}

/// Structural checks of a normal form: fast-angle freedom (J2) or the conserved integral (gls).
pub fn structural_check(run: &Run) -> Result<(f64, String), CliError> {
    let res = run.result();
    let z = res.normal_form()?;
    let scale = z.max_abs_coeff().max(f64::MIN_POSITIVE);
    let (worst, what) = match run {
        Run::J2(r) => (r.result.normal_form()?.terms().filter(|t| t.wave[0] != 0).fold(0.0f64, |m, t| m.max(t.coeff.abs())), "fast-angle terms in the normal form"),
        Run::Gls(r) => (r.integral_bracket()?.max_abs_coeff(), "{I1 - I2, Z}"),
    };
    Ok((worst / scale, what.to_string()))
}

/// Normalizes and writes the normal-form directory.
pub fn cmd_normalize(cfg: &RunConfig) -> Result<Report, CliError> {
    let run = store::normalized_run(cfg)?;
    let res = run.result();
    let dir = cfg.output.join(format!("{}_normal_form", cfg.model.name()));
    store::write_normal_form(&dir, res, &artifact_meta(cfg))?;
    let mut r = new_report(cfg, "normalize");
    if cfg.m + 3 > cfg.n {
        let w = format!("M = {} exceeds N - 3 = {}: the remainder keeps fewer than three grades", cfg.m, cfg.n.saturating_sub(3));
        eprintln!("warning: {w}");
        r.notes.push(w);
    }
    let (rel, what) = structural_check(&run)?;
    if rel >= STRUCT_TOL {
        r.violations.push(format!("{what}: largest coefficient {rel:e} of the normal-form scale"));
    }
    if res.max_homological_residual > 1e-12 {
        r.violations.push(format!("homological residual {:e}", res.max_homological_residual));
    }
    let mut t = Table::new("normal_form", &["quantity", "value"]);
    t.push(vec!["normal_form_terms".into(), res.normal_form()?.len().into()]);
    t.push(vec!["remainder_terms".into(), res.remainder()?.len().into()]);
    t.push(vec!["structural_residual".into(), rel.into()]);
    t.push(vec!["max_homological_residual".into(), res.max_homological_residual.into()]);
    t.push(vec!["max_cancellation_residue".into(), res.max_cancellation_residue.into()]);
    t.push(vec!["omega".into(), join_f64(&res.omega).into()]);
    r.tables.push(t);
    Ok(r)
}

fn j2_run(cfg: &RunConfig) -> Result<J2Run, CliError> {
    match store::normalized_run(cfg)? {
        Run::J2(r) => Ok(r),
        Run::Gls(_) => Err(CliError::Config("expected the J2 model".into())),
    }
}

fn gls_run(cfg: &RunConfig) -> Result<GlsRun, CliError> {
    match store::normalized_run(cfg)? {
        Run::Gls(r) => Ok(r),
        Run::J2(_) => Err(CliError::Config("expected the gls model".into())),
    }
}

const J2_COLUMNS: [&str; 10] =
    ["altitude_km", "a_star", "remainder_grid", "remainder_majorant", "dLdt_grid", "dLdt_majorant", "delta_a", "T2_yr", "delta_L", "T1_yr"];

fn j2_row(cfg: &RunConfig, run: &J2Run) -> Result<Vec<Cell>, CliError> {
    let est = pipeline::estimate_j2(run, &domain(cfg)?, cfg.delta_a, &cfg.constants)?;
    let dl = cfg.delta_l.unwrap_or_else(|| estimates::delta_l_from_a(cfg.delta_a, J2_TABLE_A[0], &cfg.constants));
    Ok(vec![
        est.altitude_km.into(),
        est.a_star.into(),
        est.remainder.grid.into(),
        est.remainder.majorant.into(),
        est.dl_dt.grid.into(),
        est.dl_dt.majorant.into(),
        cfg.delta_a.into(),
        est.t_stability.into(),
        dl.into(),
        estimates::stability_time_l(dl, est.dl_dt.majorant).into(),
    ])
}

/// Remainder and `dL/dt` norms and stability times for the J2 model.
pub fn cmd_estimate_semimajor(cfg: &RunConfig) -> Result<Report, CliError> {
    require(cfg, Model::J2)?;
    let run = j2_run(cfg)?;
    let mut r = new_report(cfg, "estimate-semimajor");
    let mut t = Table::new("semimajor", &J2_COLUMNS);
    t.push(j2_row(cfg, &run)?);
    r.tables.push(t);
    r.notes.push("T2 uses delta_a; T1 uses delta_L (default: the delta_a-equivalent at the first table altitude)".into());
    Ok(r)
}

const GLS_COLUMNS: [&str; 13] = [
    "altitude_km", "a", "i_eq_deg", "nu1", "nu2", "remainder_grid", "remainder_majorant", "kozai_grid", "kozai_majorant", "gamma",
    "T_yr", "i_crit_deg", "M",
];

fn gls_row(cfg: &RunConfig, run: &GlsRun, with_icrit: bool) -> Result<Vec<Cell>, CliError> {
    let dom = domain(cfg)?;
    let est = pipeline::estimate_gls(run, &dom, None, &cfg.constants)?;
    let icrit = if with_icrit {
        let wide = DomainBox::new(cfg.e_range, [0.0, FRAC_PI_2], cfg.grid, cfg.angle_nodes)?;
        let map = run.map();
        let ic = estimates::critical_inclination(&run.remainder()?, &wide, &map, cfg.i_crit_threshold, pipeline::I_CRIT_RESOLUTION, NormMode::Grid)?;
        ic.to_degrees()
    } else {
        f64::NAN
    };
    Ok(vec![
        est.altitude_km.into(),
        est.a.into(),
        est.i_eq.to_degrees().into(),
        est.nu[0].into(),
        est.nu[1].into(),
        est.remainder.grid.into(),
        est.remainder.majorant.into(),
        est.kozai_dt.grid.into(),
        est.kozai_dt.majorant.into(),
        est.gamma.into(),
        est.t_stability.into(),
        icrit.into(),
        run.result.m.into(),
    ])
}

/// Remainder and Kozai-Lidov drift norms, stability time and critical inclination (gls).
pub fn cmd_estimate_kozai(cfg: &RunConfig) -> Result<Report, CliError> {
    require(cfg, Model::Gls)?;
    let run = gls_run(cfg)?;
    let mut r = new_report(cfg, "estimate-kozai");
    let mut t = Table::new("kozai", &GLS_COLUMNS);
    t.push(gls_row(cfg, &run, true)?);
    r.tables.push(t);
    r.notes.push("the quasi-integral is I1 - I2 in the canonical frame (the 1:1 resonant combination)".into());
    Ok(r)
}

fn sweep_altitudes(cfg: &RunConfig) -> Vec<f64> {
    let (a, b, n) = cfg.sweep;
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
}

/// Forced (Laplace-plane) inclination over an altitude sweep.
pub fn cmd_laplace_plane(cfg: &RunConfig) -> Result<Report, CliError> {
    let k = &cfg.constants;
    let mut t = Table::new("laplace_plane", &["altitude_km", "a", "i_eq_deg", "i_eq_first_order_deg"]);
    for alt in sweep_altitudes(cfg) {
        let a = pipeline::semimajor_from_altitude(alt, k)?;
        let (i, first) = gls::forced_inclination(a, k)?;
        t.push(vec![alt.into(), a.into(), i.to_degrees().into(), first.to_degrees().into()]);
    }
    let mut r = new_report(cfg, "laplace-plane");
    r.tables.push(t);
    Ok(r)
}

const STEEP_COLUMNS: [&str; 16] = [
    "altitude_km", "eigprod_lo", "eigprod_hi", "lambda1_lo", "lambda1_hi", "lambda2_lo", "lambda2_hi", "det_lo", "det_hi", "det_over_mu_lo",
    "det_over_mu_hi", "convex", "quasi_convex", "three_jet", "classification", "grid_points",
];

fn steep_row(cfg: &RunConfig, v: &SteepnessVerdict) -> Vec<Cell> {
    let mu = cfg.constants.mu_e;
    vec![
        cfg.altitude_km.into(),
        v.eigprod.lo.into(),
        v.eigprod.hi.into(),
        v.lambda_min.lo.into(),
        v.lambda_min.hi.into(),
        v.lambda_max.lo.into(),
        v.lambda_max.hi.into(),
        v.bordered_det.lo.into(),
        v.bordered_det.hi.into(),
        (v.bordered_det.lo / mu).into(),
        (v.bordered_det.hi / mu).into(),
        v.convex.into(),
        v.quasi_convex.into(),
        v.three_jet.into(),
        v.classification.label().into(),
        v.grid_points.into(),
    ]
}

fn steepness_verdict(cfg: &RunConfig) -> Result<SteepnessVerdict, CliError> {
    Ok(match store::normalized_run(cfg)? {
        Run::J2(r) => pipeline::steepness_j2_capped(&r, cfg.steep_grid, cfg.tol_zero, cfg.secular_grade_cap.unwrap_or(cfg.m))?,
        Run::Gls(r) => pipeline::steepness_gls(&r, cfg.steep_grid, cfg.tol_zero)?,
    })
}

/// Convexity, quasi-convexity and three-jet tests of the integrable part.
pub fn cmd_steepness(cfg: &RunConfig) -> Result<Report, CliError> {
    let v = steepness_verdict(cfg)?;
    let mut r = new_report(cfg, "steepness");
    if !pipeline::implication_chain_holds(&v) {
        r.violations.push("convex => quasi-convex => three-jet chain broken".into());
    }
    let mut t = Table::new("steepness", &STEEP_COLUMNS);
    t.push(steep_row(cfg, &v));
    r.tables.push(t);
    r.notes.push(format!("altitude {} km: {}", format_coeff(cfg.altitude_km), v.classification.label()));
    Ok(r)
}

/// Random initial conditions in the configured `(e, i)` box.
pub fn random_initials(cfg: &RunConfig) -> Vec<OracleInitial> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.samples)
        .map(|_| {
            let e = rng.random_range(cfg.e_range[0]..=cfg.e_range[1]);
            let i = rng.random_range(cfg.i_range[0]..=cfg.i_range[1]);
            let angles = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            OracleInitial { e, i, angles }
        })
        .collect()
}

fn trajectory_dump(c: &OracleCheck, tracked_index: usize, n_dof: usize, coords: &[bool]) -> String {
    let mut out = String::from("# t");
    for j in 0..n_dof {
        out.push_str(&format!(" A{j}"));
    }
    for j in 0..n_dof {
        out.push_str(&format!(" phi{j}"));
    }
    out.push_str(" energy tracked\n");
    let tr = &c.trajectory;
    let q0 = tr.states[0][tracked_index];
    for (s, (t, e)) in tr.states.iter().zip(tr.times.iter().zip(&tr.energy)) {
        let mut acts = Vec::with_capacity(n_dof);
        let mut angs = Vec::with_capacity(n_dof);
        for j in 0..n_dof {
            let (q, p) = (s[2 * j], s[2 * j + 1]);
            if coords[j] {
                acts.push(0.5 * (q * q + p * p));
                angs.push(q.atan2(p));
            } else {
                acts.push(p);
                angs.push(q);
            }
        }
        out.push_str(&format!("{} {} {} {} {}\n", format_coeff(*t), join_f64(&acts), join_f64(&angs), format_coeff(*e), format_coeff(s[tracked_index] - q0)));
    }
    out
}

/// Integrates the normalized Hamiltonian from random initial conditions and compares the
/// measured quasi-integral drift with the remainder-based bound.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<Report, CliError> {
    let k = &cfg.constants;
    let ics = random_initials(cfg);
    let dom = domain(cfg)?;
    let mut r = new_report(cfg, "oracle");
    let mut t = Table::new("oracle", &["sample", "e", "i", "horizon_yr", "drift", "bound", "within_bound", "energy_error", "steps"]);
    let (checks, t_stab, label) = match store::normalized_run(cfg)? {
        Run::J2(run) => {
            let est = pipeline::estimate_j2(&run, &dom, cfg.delta_a, k)?;
            let h = cfg.horizon.min(0.01 * est.t_stability);
            let out = par_map(&ics, |ic| pipeline::oracle_j2(&run, ic, h, est.dl_dt.majorant, cfg.tol));
            (out, est.t_stability, "dL")
        }
        Run::Gls(run) => {
            let est = pipeline::estimate_gls(&run, &dom, None, k)?;
            let h = cfg.horizon.min(0.01 * est.t_stability);
            let out = par_map(&ics, |ic| pipeline::oracle_gls(&run, ic, h, est.kozai_dt.majorant, cfg.tol));
            (out, est.t_stability, "I1 - I2")
        }
    };
    let dir = cfg.output.join(format!("{}_oracle", cfg.model.name()));
    for (j, c) in checks.into_iter().enumerate() {
        let c = c?;
        let (idx, nd, coords): (usize, usize, Vec<bool>) = match cfg.model {
            Model::J2 => (1, 3, vec![false, true, true]),
            Model::Gls => (4, 2, vec![true, true]),
        };
        write_file(&dir.join(format!("trajectory_{j:03}.txt")), &trajectory_dump(&c, idx, nd, &coords))?;
        if !c.within_bound() {
            r.violations.push(format!("sample {j}: drift {:e} exceeds bound {:e}", c.drift, c.bound));
        }
        t.push(vec![
            j.into(),
            c.initial.e.into(),
            c.initial.i.into(),
            c.horizon.into(),
            c.drift.into(),
            c.bound.into(),
            c.within_bound().into(),
            c.energy_error.into(),
            c.trajectory.steps.into(),
        ]);
    }
    r.notes.push(format!("tracked quantity {label}; horizon = min(horizon, 0.01 T) with T = {} yr", format_coeff(t_stab)));
    r.tables.push(t);
    Ok(r)
}

/// What `report` renders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportItem {
    Table(u32),
    Fig(u32),
}

/// Pointwise sup over angles at each `(e, i)` node.
fn pointwise_map(s: &PoissonSeries, nodes: &[(f64, f64)], map: &dyn Fn(f64, f64) -> Vec<f64>, angle_nodes: usize) -> Result<Vec<f64>, CliError> {
    nodes.iter().map(|&(e, i)| Ok(sup_norm_points(s, &[map(e, i)], angle_nodes, NormMode::Grid)?)).collect()
}

fn j2_runs(cfg: &RunConfig, a_list: &[f64]) -> Result<Vec<(RunConfig, J2Run)>, CliError> {
    let cfgs: Vec<RunConfig> = a_list.iter().map(|&a| RunConfig { model: Model::J2, ..cfg.at(a) }).collect();
    par_map(&cfgs, |c| j2_run(c).map(|r| (c.clone(), r))).into_iter().collect()
}

fn gls_runs(cfg: &RunConfig, alts: &[f64]) -> Result<Vec<(RunConfig, GlsRun)>, CliError> {
    let k = &cfg.constants;
    let cfgs: Vec<RunConfig> = alts.iter().map(|&h| RunConfig { model: Model::Gls, ..cfg.at(k.altitude_to_a(h)) }).collect();
    par_map(&cfgs, |c| gls_run(c).map(|r| (c.clone(), r))).into_iter().collect()
}

/// Model-specific default box when the configuration was resolved for the other model.
fn with_domain(cfg: &RunConfig, model: Model) -> RunConfig {
    let mut c = cfg.clone();
    if cfg.model != model {
        c.model = model;
        (c.e_range, c.i_range) = match model {
            Model::J2 => ([0.0, 0.15], [0.0, FRAC_PI_2]),
            Model::Gls => ([0.0, 0.1], [0.0, 0.1]),
        };
    }
    c
}

/// Tables and figure data across the reference altitudes.
pub fn cmd_report(cfg: &RunConfig, item: ReportItem, points: usize) -> Result<Report, CliError> {
    let k = &cfg.constants;
    let mut r = new_report(cfg, &match item {
        ReportItem::Table(n) => format!("report table {n}"),
        ReportItem::Fig(n) => format!("report fig {n}"),
    });
    match item {
        ReportItem::Table(1) | ReportItem::Table(2) => {
            let c = with_domain(cfg, Model::J2);
            let mut t = Table::new("j2_stability", &J2_COLUMNS);
            for (rc, run) in j2_runs(&c, &J2_TABLE_A)? {
                t.push(j2_row(&rc, &run)?);
            }
            r.tables.push(t);
        }
        ReportItem::Table(n @ (3..=5)) => {
            let c = with_domain(cfg, Model::Gls);
            let runs = gls_runs(&c, &GLS_ALTITUDES)?;
            let rows = par_map(&runs, |(rc, run)| gls_row(rc, run, n == 4));
            let mut t = Table::new("gls_stability", &GLS_COLUMNS);
            for row in rows {
                t.push(row?);
            }
            r.tables.push(t);
            if n == 5 {
                let (rc, run) = &runs[4];
                let big = RunConfig { i_range: [0.0, 0.5], ..rc.clone() };
                let mut e = Table::new("enlarged_domain", &GLS_COLUMNS);
                e.push(gls_row(&big, run, false)?);
                r.tables.push(e);
                r.notes.push("enlarged_domain: (e, i) in [0, 0.1] x [0, 0.5] at the last altitude".into());
            }
        }
        ReportItem::Table(n @ (6..=9)) => {
            let model = if n <= 7 { Model::J2 } else { Model::Gls };
            let c = with_domain(cfg, model);
            let cfgs: Vec<RunConfig> = STEEP_ALTITUDES.iter().map(|&h| c.at(k.altitude_to_a(h))).collect();
            let vs = par_map(&cfgs, steepness_verdict);
            let mut t = Table::new(if model == Model::J2 { "j2_steepness" } else { "gls_steepness" }, &STEEP_COLUMNS);
            for (rc, v) in cfgs.iter().zip(vs) {
                t.push(steep_row(rc, &v?));
            }
            r.tables.push(t);
        }
        ReportItem::Fig(1) => {
            let c = with_domain(cfg, Model::J2);
            let dom = domain(&c)?;
            let nodes = dom.nodes();
            for (rc, run) in j2_runs(&c, &[J2_TABLE_A[0], J2_TABLE_A[3]])? {
                let vals = pointwise_map(&run.remainder()?, &nodes, &run.map(), dom.angle_nodes)?;
                let mut t = Table::new(&format!("remainder_a{}", format_coeff(rc.a_star)), &["e", "i", "norm"]);
                for (&(e, i), v) in nodes.iter().zip(vals) {
                    t.push(vec![e.into(), i.into(), v.into()]);
                }
                r.tables.push(t);
            }
        }
        ReportItem::Fig(n @ (2 | 3)) => {
            let c = with_domain(cfg, Model::J2);
            let a = if n == 2 { J2_TABLE_A[0] } else { J2_TABLE_A[3] };
            let (_, run) = j2_runs(&c, &[a])?.remove(0);
            let drift = run.dl_drift()?;
            let map = run.map();
            let steps = 51;
            let lin = |r: [f64; 2], j: usize| r[0] + (r[1] - r[0]) * j as f64 / (steps - 1) as f64;
            for &i in &[0.1, 0.5, 1.0, 1.5] {
                let nodes: Vec<(f64, f64)> = (0..steps).map(|j| (lin(c.e_range, j), i)).collect();
                let vals = pointwise_map(&drift, &nodes, &map, c.angle_nodes)?;
                let mut t = Table::new(&format!("dLdt_vs_e_at_i{i}"), &["e", "norm"]);
                for (&(e, _), v) in nodes.iter().zip(vals) {
                    t.push(vec![e.into(), v.into()]);
                }
                r.tables.push(t);
            }
            for &e in &[0.01, 0.05, 0.1, 0.15] {
                let nodes: Vec<(f64, f64)> = (0..steps).map(|j| (e, lin(c.i_range, j))).collect();
                let vals = pointwise_map(&drift, &nodes, &map, c.angle_nodes)?;
                let mut t = Table::new(&format!("dLdt_vs_i_at_e{e}"), &["i", "norm"]);
                for (&(_, i), v) in nodes.iter().zip(vals) {
                    t.push(vec![i.into(), v.into()]);
                }
                r.tables.push(t);
            }
        }
        ReportItem::Fig(4) => {
            let lp = cmd_laplace_plane(cfg)?;
            r.tables.extend(lp.tables);
        }
        ReportItem::Fig(5) => {
            let c = RunConfig { cache: crate::config::CachePolicy::Off, ..with_domain(cfg, Model::J2) };
            let dom = domain(&c)?;
            let a_list: Vec<f64> = (0..points)
                .map(|j| if points == 1 { FIG5_RANGE[0] } else { FIG5_RANGE[0] + (FIG5_RANGE[1] - FIG5_RANGE[0]) * j as f64 / (points - 1) as f64 })
                .collect();
            let rows = par_map(&a_list, |&a| -> Result<(f64, f64), CliError> {
                let run = pipeline::run_j2(a, c.n, c.m, k)?;
                let map = run.map();
                let drift = estimates::domain_norm(&run.dl_drift()?, &dom, &map, NormMode::Majorant)?;
                Ok((a, estimates::stability_time_a(c.delta_a, a, drift, k)))
            });
            let mut t = Table::new("stability_time_vs_a", &["a_star", "T2_yr"]);
            for row in rows {
                let (a, t2) = row?;
                t.push(vec![a.into(), t2.into()]);
            }
            r.tables.push(t);
        }
        ReportItem::Fig(6) => {
            let c = with_domain(cfg, Model::Gls);
            let wide = DomainBox::new(c.e_range, [0.0, FRAC_PI_2], c.grid, c.angle_nodes)?;
            let nodes = wide.nodes();
            for (rc, run) in gls_runs(&c, &GLS_ALTITUDES)? {
                let vals = pointwise_map(&run.remainder()?, &nodes, &run.map(), wide.angle_nodes)?;
                let mut t = Table::new(&format!("remainder_alt{}", rc.altitude_km.round()), &["e", "i", "norm"]);
                for (&(e, i), v) in nodes.iter().zip(vals) {
                    t.push(vec![e.into(), i.into(), v.into()]);
                }
                r.tables.push(t);
            }
        }
        ReportItem::Fig(7) => {
            let c = with_domain(cfg, Model::Gls);
            let scan = optimal_order(&c.at(k.altitude_to_a(35786.0)))?;
            let mut t = Table::new("remainder_vs_M", &["M", "norm_grid", "norm_majorant"]);
            for (m, g, mj) in scan {
                t.push(vec![m.into(), g.into(), mj.into()]);
            }
            r.tables.push(t);
        }
        ReportItem::Table(n) | ReportItem::Fig(n) => {
            return Err(CliError::Config(format!("no such report item {n} (tables 1-9, figures 1-7)")));
        }
    }
    Ok(r)
}

/// `(M, grid norm, majorant norm)` of the remainder after each step `M = 1..=cfg.m` (gls).
pub fn optimal_order(cfg: &RunConfig) -> Result<Vec<(u32, f64, f64)>, CliError> {
    let k = &cfg.constants;
    let (model, h) = pipeline::prepare_gls(cfg.a_star, cfg.n, k)?;
    let dom = domain(cfg)?;
    let map = |e: f64, i: f64| model.elements_to_actions(e, i).to_vec();
    let omega = lienorm_core::normalform::frequencies(&h);
    let module = pipeline::gls_module()?;
    let opts = NormalizeOptions::default();
    let ident = |s: &PoissonSeries| Ok(s.clone());
    let g = estimates::optimal_order_scan(&h, &omega, &module, cfg.m, &opts, &dom, &map, &ident, NormMode::Grid)?;
    let mj = estimates::optimal_order_scan(&h, &omega, &module, cfg.m, &opts, &dom, &map, &ident, NormMode::Majorant)?;
    Ok(g.into_iter().zip(mj).map(|((m, a), (_, b))| (m, a, b)).collect())
}
