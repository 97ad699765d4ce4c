//! Run configuration: defaults, overlaid by command-line flags, overlaid by a
//! `key = value` file.

use std::path::PathBuf;

use lienorm_core::constants::PhysicalConstants;
use lienorm_core::pipeline;

use crate::error::CliError;
use crate::format::{Metadata, format_coeff, read_kv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    J2,
    Gls,
}

impl Model {
    pub fn parse(s: &str) -> Result<Model, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "j2" => Ok(Model::J2),
            "gls" | "geolunisolar" => Ok(Model::Gls),
            _ => Err(CliError::Config(format!("unknown model `{s}` (expected j2 or gls)"))),
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Model::J2 => "j2",
            Model::Gls => "gls",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CachePolicy {
    Use,
    Off,
    Refresh,
}

/// Fully resolved configuration of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub model: Model,
    /// Reference semimajor axis, R_E.
    pub a_star: f64,
    pub altitude_km: f64,
    pub n: u32,
    pub m: u32,
    pub e_range: [f64; 2],
    pub i_range: [f64; 2],
    pub grid: [usize; 2],
    pub angle_nodes: usize,
    pub steep_grid: usize,
    /// Highest grade of the J2 secular part in the steepness tests; `None` means M.
    pub secular_grade_cap: Option<u32>,
    pub tol_zero: f64,
    pub delta_a: f64,
    /// Fixed `Delta L` instead of `Delta a` when set.
    pub delta_l: Option<f64>,
    pub i_crit_threshold: f64,
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub sweep: (f64, f64, usize),
    pub output: PathBuf,
    pub cache: CachePolicy,
    pub constants: PhysicalConstants,
}

/// Keys accepted in configuration files and generated from flags.
pub const KEYS: &[&str] = &[
    "model", "altitude_km", "a_star_km", "a_star", "N", "M", "J2_sign", "e_min", "e_max", "i_min", "i_max", "grid_e", "grid_i",
    "angle_nodes", "steep_grid", "secular_grade_cap", "tol_zero", "delta_a", "delta_L", "i_crit_threshold", "horizon", "samples", "seed", "tol",
    "sweep_from_km", "sweep_to_km", "sweep_count", "output", "cache", "mu_E", "R_E", "J2", "mu_m", "a_m", "e_m", "mu_s", "a_s",
    "e_s", "i0_deg",
];

fn get<T: std::str::FromStr>(m: &Metadata, key: &str) -> Result<Option<T>, CliError> {
    match m.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| CliError::Config(format!("bad value `{v}` for `{key}`"))),
    }
}

impl RunConfig {
    /// Resolves `flags` overlaid by the optional file text.
    pub fn resolve(command: &str, flags: &Metadata, file: Option<&str>) -> Result<RunConfig, CliError> {
        let mut m = flags.clone();
        if let Some(text) = file {
            for (k, v) in read_kv(text)? {
                m.insert(k, v);
            }
        }
        if let Some(bad) = m.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown configuration key `{bad}`")));
        }
        let model = Model::parse(m.get("model").map(String::as_str).unwrap_or("j2"))?;

        let mut k = PhysicalConstants::default();
        let over = |key: &str, slot: &mut f64| -> Result<(), CliError> {
            if let Some(v) = get::<f64>(&m, key)? {
                *slot = v;
            }
            Ok(())
        };
        let mu_default_ratio = (k.mu_m / k.mu_e, k.mu_s / k.mu_e);
        over("mu_E", &mut k.mu_e)?;
        k.mu_m = k.mu_e * mu_default_ratio.0;
        k.mu_s = k.mu_e * mu_default_ratio.1;
        over("R_E", &mut k.r_e_km)?;
        over("J2", &mut k.j2)?;
        over("mu_m", &mut k.mu_m)?;
        over("a_m", &mut k.a_m)?;
        over("e_m", &mut k.e_m)?;
        over("mu_s", &mut k.mu_s)?;
        over("a_s", &mut k.a_s)?;
        over("e_s", &mut k.e_s)?;
        if let Some(d) = get::<f64>(&m, "i0_deg")? {
            k.i0 = d.to_radians();
        }
        let sign = get::<f64>(&m, "J2_sign")?.unwrap_or(1.0);
        if sign != 1.0 && sign != -1.0 {
            return Err(CliError::Config("J2_sign must be +1 or -1".into()));
        }
        k.j2 = sign * k.j2.abs();
        k.validate()?;

        let set = ["altitude_km", "a_star_km", "a_star"].iter().filter(|key| m.contains_key(**key)).count();
        if set > 1 {
            return Err(CliError::Config("give only one of altitude_km, a_star_km, a_star".into()));
        }
        let a_star = if let Some(alt) = get::<f64>(&m, "altitude_km")? {
            pipeline::semimajor_from_altitude(alt, &k)?
        } else if let Some(km) = get::<f64>(&m, "a_star_km")? {
            pipeline::semimajor_from_altitude(km - k.r_e_km, &k)?
        } else if let Some(a) = get::<f64>(&m, "a_star")? {
            if !(a > 1.0) {
                return Err(CliError::Config(format!("a_star = {a} R_E is inside the Earth")));
            }
            a
        } else {
            k.altitude_to_a(35786.0)
        };

        let n = get::<u32>(&m, "N")?.unwrap_or(15);
        let m_order = get::<u32>(&m, "M")?.unwrap_or_else(|| pipeline::recommended_m(n));
        if n < 3 {
            return Err(CliError::Config("N must be at least 3".into()));
        }
        if m_order == 0 || m_order > n {
            return Err(CliError::Config(format!("M must be in 1..={n}")));
        }
        let (e_def, i_def) = match model {
            Model::J2 => ([0.0, 0.15], [0.0, std::f64::consts::FRAC_PI_2]),
            Model::Gls => ([0.0, 0.1], [0.0, 0.1]),
        };
        let e_range = [get(&m, "e_min")?.unwrap_or(e_def[0]), get(&m, "e_max")?.unwrap_or(e_def[1])];
        let i_range = [get(&m, "i_min")?.unwrap_or(i_def[0]), get(&m, "i_max")?.unwrap_or(i_def[1])];
        let grid = [get(&m, "grid_e")?.unwrap_or(21), get(&m, "grid_i")?.unwrap_or(21)];
        let angle_nodes = get(&m, "angle_nodes")?.unwrap_or(12);
        lienorm_core::estimates::DomainBox::new(e_range, i_range, grid, angle_nodes)?;
        let cache = match m.get("cache").map(String::as_str).unwrap_or("use") {
            "use" | "on" => CachePolicy::Use,
            "off" => CachePolicy::Off,
            "refresh" => CachePolicy::Refresh,
            other => return Err(CliError::Config(format!("cache must be use, off or refresh, not `{other}`"))),
        };
        let cfg = RunConfig {
            command: command.to_string(),
            model,
            a_star,
            altitude_km: k.a_to_altitude(a_star),
            n,
            m: m_order,
            e_range,
            i_range,
            grid,
            angle_nodes,
            steep_grid: get(&m, "steep_grid")?.unwrap_or(100),
            secular_grade_cap: get(&m, "secular_grade_cap")?,
            tol_zero: get(&m, "tol_zero")?.unwrap_or(pipeline::TOL_ZERO),
            delta_a: get(&m, "delta_a")?.unwrap_or(0.1),
            delta_l: get(&m, "delta_L")?,
            i_crit_threshold: get(&m, "i_crit_threshold")?.unwrap_or(1.0),
            horizon: get(&m, "horizon")?.unwrap_or(10.0),
            samples: get(&m, "samples")?.unwrap_or(10),
            seed: get(&m, "seed")?.unwrap_or(1),
            tol: get(&m, "tol")?.unwrap_or(1e-10),
            sweep: (
                get(&m, "sweep_from_km")?.unwrap_or(500.0),
                get(&m, "sweep_to_km")?.unwrap_or(100000.0),
                get(&m, "sweep_count")?.unwrap_or(20),
            ),
            output: PathBuf::from(m.get("output").cloned().unwrap_or_else(|| "lienorm-out".into())),
            cache,
            constants: k,
        };
        if cfg.steep_grid == 0 || cfg.samples == 0 || cfg.sweep.2 == 0 {
            return Err(CliError::Config("grid sizes and counts must be positive".into()));
        }
        if !(cfg.tol > 0.0) || !(cfg.horizon > 0.0) || !(cfg.delta_a > 0.0) {
            return Err(CliError::Config("tol, horizon and delta_a must be positive".into()));
        }
        Ok(cfg)
    }

    /// Canonical `key = value` echo of everything that affects results (the output path excluded).
    pub fn echo(&self) -> Metadata {
        let k = &self.constants;
        let mut e = Metadata::new();
        let f = format_coeff;
        e.insert("command".into(), self.command.clone());
        e.insert("model".into(), self.model.name().into());
        e.insert("a_star".into(), f(self.a_star));
        e.insert("altitude_km".into(), f(self.altitude_km));
        e.insert("N".into(), self.n.to_string());
        e.insert("M".into(), self.m.to_string());
        e.insert("e_range".into(), format!("{} {}", f(self.e_range[0]), f(self.e_range[1])));
        e.insert("i_range".into(), format!("{} {}", f(self.i_range[0]), f(self.i_range[1])));
        e.insert("grid".into(), format!("{} {}", self.grid[0], self.grid[1]));
        e.insert("angle_nodes".into(), self.angle_nodes.to_string());
        e.insert("steep_grid".into(), self.steep_grid.to_string());
        e.insert("secular_grade_cap".into(), self.secular_grade_cap.map(|c| c.to_string()).unwrap_or_else(|| "M".into()));
        e.insert("tol_zero".into(), f(self.tol_zero));
        e.insert("delta_a".into(), f(self.delta_a));
        e.insert("delta_L".into(), self.delta_l.map(f).unwrap_or_else(|| "none".into()));
        e.insert("i_crit_threshold".into(), f(self.i_crit_threshold));
        e.insert("horizon".into(), f(self.horizon));
        e.insert("samples".into(), self.samples.to_string());
        e.insert("seed".into(), self.seed.to_string());
        e.insert("tol".into(), f(self.tol));
        e.insert("sweep".into(), format!("{} {} {}", f(self.sweep.0), f(self.sweep.1), self.sweep.2));
        e.insert(
            "constants".into(),
            [k.mu_e, k.r_e_km, k.j2, k.mu_m, k.a_m, k.e_m, k.mu_s, k.a_s, k.e_s, k.i0].iter().map(|v| f(*v)).collect::<Vec<_>>().join(" "),
        );
        e.insert("constants_fingerprint".into(), format!("{:016x}", k.fingerprint()));
        e
    }

    /// Hash of the canonical echo.
    pub fn config_hash(&self) -> u64 {
        fnv1a(crate::format::write_kv(&self.echo()).as_bytes())
    }

    /// Hash of the inputs of the normalization only: the cache key.
    pub fn normalization_key(&self) -> u64 {
        let s = format!("{} {} {} {} {:016x}", self.model.name(), format_coeff(self.a_star), self.n, self.m, self.constants.fingerprint());
        fnv1a(s.as_bytes())
    }

    /// Copy with a different reference semimajor axis.
    pub fn at(&self, a_star: f64) -> RunConfig {
        RunConfig { a_star, altitude_km: self.constants.a_to_altitude(a_star), ..self.clone() }
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Metadata {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn file_overrides_flags() {
        let c = RunConfig::resolve("build", &flags(&[("model", "j2"), ("N", "9")]), Some("N = 11\nmodel = gls # comment\n")).unwrap();
        assert_eq!(c.n, 11);
        assert_eq!(c.model, Model::Gls);
        assert_eq!(c.m, 8);
        assert_eq!(c.e_range, [0.0, 0.1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::resolve("build", &flags(&[("altitude_km", "0")]), None).is_err());
        assert!(RunConfig::resolve("build", &flags(&[("bogus", "1")]), None).is_err());
        assert!(RunConfig::resolve("build", &flags(&[("J2_sign", "2")]), None).is_err());
        assert!(RunConfig::resolve("build", &flags(&[("altitude_km", "100"), ("a_star", "2")]), None).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::resolve("build", &flags(&[("altitude_km", "20000")]), None).unwrap();
        let b = RunConfig::resolve("build", &flags(&[("altitude_km", "20000")]), None).unwrap();
        let c = RunConfig::resolve("build", &flags(&[("altitude_km", "20001")]), None).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.normalization_key(), a.at(a.a_star).normalization_key());
    }

    #[test]
    fn a_star_km_is_geocentric() {
        let c = RunConfig::resolve("build", &flags(&[("a_star_km", "42164")]), None).unwrap();
        assert!((c.altitude_km - 35785.86).abs() < 1e-6);
    }
}
