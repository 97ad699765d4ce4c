//! On-disk artifacts: built Hamiltonians, normal-form directories and the
//! normalization cache keyed by the configuration hash.

use std::fs;
use std::path::{Path, PathBuf};

use lienorm_core::PoissonSeries;
use lienorm_core::constants::PhysicalConstants;
use lienorm_core::normalform::{NormalFormResult, ResonantModule};
use lienorm_core::pipeline::{self, GlsRun, J2Run};

use crate::config::{CachePolicy, Model, RunConfig};
use crate::error::CliError;
use crate::format::{Metadata, format_coeff, join_f64, read_kv, read_series, write_kv, write_series};

/// Writes `text` only if the file content differs (keeps timestamps of identical outputs).
pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    if fs::read_to_string(path).ok().as_deref() == Some(text) {
        return Ok(());
    }
    fs::write(path, text)?;
    Ok(())
}

fn modules_text(m: &ResonantModule) -> String {
    let g: Vec<String> = m.generators.iter().map(|g| g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")).collect();
    g.join(";")
}

fn parse_module(n_dof: usize, gens: &str, fast: &str) -> Result<ResonantModule, CliError> {
    let bad = || CliError::Config("malformed module in manifest".into());
    let mut g = Vec::new();
    for part in gens.split(';').filter(|s| !s.is_empty()) {
        g.push(part.split(',').map(|x| x.trim().parse::<i32>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?);
    }
    let f = fast.split(',').filter(|s| !s.is_empty()).map(|x| x.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
    Ok(ResonantModule::new(n_dof, g, f)?)
}

/// Serializes a normal form as a directory of series files plus `manifest.txt`.
pub fn write_normal_form(dir: &Path, res: &NormalFormResult, meta: &Metadata) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut man = meta.clone();
    man.insert("M".into(), res.m.to_string());
    man.insert("N".into(), res.n.to_string());
    man.insert("omega".into(), join_f64(&res.omega));
    man.insert("module_generators".into(), modules_text(&res.module));
    man.insert("module_fast".into(), res.module.fast.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    man.insert("max_homological_residual".into(), format_coeff(res.max_homological_residual));
    man.insert("max_cancellation_residue".into(), format_coeff(res.max_cancellation_residue));
    let empty = Metadata::new();
    for (g, z) in res.z_parts.iter().enumerate() {
        write_file(&dir.join(format!("z_{g:02}.ps")), &write_series(z, &empty))?;
    }
    for (j, r) in res.remainder_parts.iter().enumerate() {
        write_file(&dir.join(format!("r_{:02}.ps", res.m as usize + 1 + j)), &write_series(r, &empty))?;
    }
    for (j, c) in res.generators.iter().enumerate() {
        write_file(&dir.join(format!("chi_{:02}.ps", j + 1)), &write_series(c, &empty))?;
    }
    write_file(&dir.join("manifest.txt"), &write_kv(&man))
}

fn read_one(path: PathBuf) -> Result<PoissonSeries, CliError> {
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(read_series(&text)?.0)
}

/// Reads a directory written by [`write_normal_form`].
pub fn read_normal_form(dir: &Path) -> Result<(NormalFormResult, Metadata), CliError> {
    let man = read_kv(&fs::read_to_string(dir.join("manifest.txt"))?)?;
    let num = |k: &str| -> Result<u32, CliError> {
        man.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| CliError::Config(format!("manifest lacks {k}")))
    };
    let (m, n) = (num("M")?, num("N")?);
    let omega: Vec<f64> = man
        .get("omega")
        .ok_or_else(|| CliError::Config("manifest lacks omega".into()))?
        .split_whitespace()
        .map(|x| x.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config("bad omega".into()))?;
    let module = parse_module(
        omega.len(),
        man.get("module_generators").map(String::as_str).unwrap_or(""),
        man.get("module_fast").map(String::as_str).unwrap_or(""),
    )?;
    let z_parts = (0..=m).map(|g| read_one(dir.join(format!("z_{g:02}.ps")))).collect::<Result<Vec<_>, _>>()?;
    let remainder_parts = (m + 1..=n).map(|g| read_one(dir.join(format!("r_{g:02}.ps")))).collect::<Result<Vec<_>, _>>()?;
    let generators = (1..=m).map(|g| read_one(dir.join(format!("chi_{g:02}.ps")))).collect::<Result<Vec<_>, _>>()?;
    let f = |k: &str| man.get(k).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
    let res = NormalFormResult {
        z_parts,
        remainder_parts,
        generators,
        omega,
        module,
        m,
        n,
        max_homological_residual: f("max_homological_residual"),
        max_cancellation_residue: f("max_cancellation_residue"),
    };
    Ok((res, man))
}

/// Either model's normalized run.
#[derive(Clone, Debug)]
pub enum Run {
    J2(J2Run),
    Gls(GlsRun),
}

impl Run {
    pub fn result(&self) -> &NormalFormResult {
        match self {
            Run::J2(r) => &r.result,
            Run::Gls(r) => &r.result,
        }
    }
}

fn cache_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("cache").join(format!("{}-{:016x}", cfg.model.name(), cfg.normalization_key()))
}

fn compute(cfg: &RunConfig, k: &PhysicalConstants) -> Result<Run, CliError> {
    Ok(match cfg.model {
        Model::J2 => Run::J2(pipeline::run_j2(cfg.a_star, cfg.n, cfg.m, k)?),
        Model::Gls => Run::Gls(pipeline::run_gls(cfg.a_star, cfg.n, cfg.m, k)?),
    })
}

/// Builds and normalizes, reusing a cached normal form when the policy allows.
///
/// The model itself is always rebuilt (it is cheap); only the normalization is cached.
pub fn normalized_run(cfg: &RunConfig) -> Result<Run, CliError> {
    let k = &cfg.constants;
    let dir = cache_dir(cfg);
    if cfg.cache == CachePolicy::Use && dir.join("manifest.txt").exists() {
        if let Ok((result, _)) = read_normal_form(&dir) {
            return Ok(match cfg.model {
                Model::J2 => {
                    let (model, h) = pipeline::prepare_j2(cfg.a_star, cfg.n, k)?;
                    Run::J2(J2Run { model, h, result })
                }
                Model::Gls => {
                    let (model, h) = pipeline::prepare_gls(cfg.a_star, cfg.n, k)?;
                    Run::Gls(GlsRun { model, h, result })
                }
            });
        }
    }
    let run = compute(cfg, k)?;
    if cfg.cache != CachePolicy::Off {
        let mut meta = Metadata::new();
        meta.insert("model".into(), cfg.model.name().into());
        meta.insert("a_star".into(), format_coeff(cfg.a_star));
        meta.insert("constants_fingerprint".into(), format!("{:016x}", k.fingerprint()));
        write_normal_form(&dir, run.result(), &meta)?;
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_form_directory_round_trip() {
        let k = PhysicalConstants::default();
        let run = pipeline::run_j2(6.6107, 6, 3, &k).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        write_normal_form(tmp.path(), &run.result, &Metadata::new()).unwrap();
        let (back, man) = read_normal_form(tmp.path()).unwrap();
        assert_eq!(man.get("M").unwrap(), "3");
        assert_eq!(back.module, run.result.module);
        assert_eq!(back.omega, run.result.omega);
        assert_eq!(back.normal_form().unwrap(), run.result.normal_form().unwrap());
        assert_eq!(back.remainder().unwrap(), run.result.remainder().unwrap());
    }
}
