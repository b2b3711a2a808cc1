//! Flat `key = value` scan configuration.
//!
//! One key per line, `#` starts a comment, lists are comma-separated.
//! Temperatures are absolute (`30`) or fractions of T_C (`0.63Tc`).

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::idealgas::critical_temperature;
use crate::meanfield::GpeParams;
use crate::sampler::{SamplerConfig, StartMode};

/// Help text listing every key with its default.
pub const KEYS_HELP: &str = "\
config keys (key = value, '#' comments, lists comma-separated):
  N                    atom number (required)
  g_list               couplings, e.g. -0.01,-0.005,0 (required)
  T_list               temperatures, absolute or as 0.63Tc (required)
  burn_in_sweeps       2000
  measure_sweeps       20000
  thin                 10
  target_acceptance    0.4
  initial_theta        0.3
  resync_every         1000
  seed                 1
  chains               1
  start                thermal | cold (thermal)
  oversample           1.0  (quadrature order = ceil(oversample*(2 n_max + 1)))
  jackknife_blocks     8    (time blocks per chain for width errors)
  output_dir           scan_out
  emit_profiles        false
  gpe_extent           10
  gpe_points           1024
  gpe_dt               0.001
  gpe_tol              1e-10
  gpe_max_iterations   1000000";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature {
    Absolute(f64),
    /// Multiple of T_C(N).
    Relative(f64),
}

impl Temperature {
    pub fn resolve(self, tc: f64) -> f64 {
        match self {
            Temperature::Absolute(t) => t,
            Temperature::Relative(f) => f * tc,
        }
    }
}

impl FromStr for Temperature {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (num, rel) = match s.strip_suffix("Tc").or_else(|| s.strip_suffix("TC")) {
            Some(head) => (head.trim(), true),
            None => (s, false),
        };
        let v: f64 = num.parse().map_err(|_| format!("bad temperature `{s}`"))?;
        Ok(if rel { Temperature::Relative(v) } else { Temperature::Absolute(v) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub n_atoms: usize,
    pub g_list: Vec<f64>,
    pub t_list: Vec<Temperature>,
    pub sampler: SamplerConfig,
    pub gpe: GpeParams,
    pub start: StartMode,
    pub oversample: f64,
    pub jackknife_blocks: usize,
    pub output_dir: PathBuf,
    pub emit_profiles: bool,
}

impl ScanConfig {
    /// Defaults for everything except the required keys.
    pub fn new(n_atoms: usize, g_list: Vec<f64>, t_list: Vec<Temperature>) -> Self {
        ScanConfig {
            n_atoms,
            g_list,
            t_list,
            sampler: SamplerConfig::default(),
            gpe: GpeParams::default(),
            start: StartMode::ThermalGuess,
            oversample: 1.0,
            jackknife_blocks: 8,
            output_dir: PathBuf::from("scan_out"),
            emit_profiles: false,
        }
    }

    pub fn critical_temperature(&self) -> f64 {
        critical_temperature(self.n_atoms as f64)
    }

    /// Absolute temperatures in list order.
    pub fn temperatures(&self) -> Vec<f64> {
        let tc = self.critical_temperature();
        self.t_list.iter().map(|t| t.resolve(tc)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, reason: String| Err(Error::OutOfRange { key: key.into(), reason });
        if self.n_atoms == 0 {
            return range("N", "must be > 0".into());
        }
        if self.g_list.is_empty() {
            return range("g_list", "must not be empty".into());
        }
        if let Some(g) = self.g_list.iter().find(|g| !g.is_finite()) {
            return range("g_list", format!("{g} is not finite"));
        }
        if self.t_list.is_empty() {
            return range("T_list", "must not be empty".into());
        }
        if let Some(t) = self.temperatures().iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return range("T_list", format!("temperature {t} must be > 0"));
        }
        if !(self.oversample >= 1.0 && self.oversample.is_finite()) {
            return range("oversample", "must be >= 1".into());
        }
        if self.jackknife_blocks == 0 {
            return range("jackknife_blocks", "must be >= 1".into());
        }
        if !(self.gpe.grid_extent > 0.0) {
            return range("gpe_extent", "must be > 0".into());
        }
        if self.gpe.grid_points < 16 {
            return range("gpe_points", "must be >= 16".into());
        }
        if !(self.gpe.dt > 0.0) {
            return range("gpe_dt", "must be > 0".into());
        }
        if !(self.gpe.tol > 0.0) {
            return range("gpe_tol", "must be > 0".into());
        }
        if self.gpe.max_iterations == 0 {
            return range("gpe_max_iterations", "must be > 0".into());
        }
        self.sampler.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::OutOfRange { key: name, reason },
            other => other,
        })
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.trim().parse().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("cannot parse `{}` for {key}", v.trim()),
    })
}

fn parse_count(key: &str, v: &str, line: usize) -> Result<usize> {
    let x: i64 = parse_value(key, v, line)?;
    usize::try_from(x).map_err(|_| Error::OutOfRange {
        key: key.into(),
        reason: format!("{x} must be >= 0"),
    })
}

fn parse_list<T: FromStr>(key: &str, v: &str, line: usize) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s, line))
        .collect()
}

pub fn parse_config(text: &str) -> Result<ScanConfig> {
    let mut n_atoms = None;
    let mut g_list = None;
    let mut t_list = None;
    let mut cfg = ScanConfig::new(0, Vec::new(), Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, v) = body.split_once('=').ok_or_else(|| Error::MalformedLine {
            line,
            reason: format!("expected key=value, got `{body}`"),
        })?;
        let key = key.trim();
        match key {
            "N" => n_atoms = Some(parse_count(key, v, line)?),
            "g_list" => g_list = Some(parse_list::<f64>(key, v, line)?),
            "T_list" => {
                t_list = Some(
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|reason| Error::MalformedLine { line, reason }))
                        .collect::<Result<Vec<Temperature>>>()?,
                )
            }
            "burn_in_sweeps" => cfg.sampler.burn_in_sweeps = parse_count(key, v, line)?,
            "measure_sweeps" => cfg.sampler.measure_sweeps = parse_count(key, v, line)?,
            "thin" => cfg.sampler.thin = parse_count(key, v, line)?,
            "target_acceptance" => cfg.sampler.target_acceptance = parse_value(key, v, line)?,
            "initial_theta" => cfg.sampler.initial_theta = parse_value(key, v, line)?,
            "resync_every" => cfg.sampler.resync_every = parse_count(key, v, line)?,
            "seed" => cfg.sampler.seed = parse_value(key, v, line)?,
            "chains" => cfg.sampler.chains = parse_count(key, v, line)?,
            "start" => {
                cfg.start = match v.trim() {
                    "thermal" => StartMode::ThermalGuess,
                    "cold" => StartMode::Cold,
                    other => {
                        return Err(Error::OutOfRange {
                            key: key.into(),
                            reason: format!("`{other}` is not thermal or cold"),
                        })
                    }
                }
            }
            "oversample" => cfg.oversample = parse_value(key, v, line)?,
            "jackknife_blocks" => cfg.jackknife_blocks = parse_count(key, v, line)?,
            "output_dir" => cfg.output_dir = PathBuf::from(v.trim()),
            "emit_profiles" => cfg.emit_profiles = parse_value(key, v, line)?,
            "gpe_extent" => cfg.gpe.grid_extent = parse_value(key, v, line)?,
            "gpe_points" => cfg.gpe.grid_points = parse_count(key, v, line)?,
            "gpe_dt" => cfg.gpe.dt = parse_value(key, v, line)?,
            "gpe_tol" => cfg.gpe.tol = parse_value(key, v, line)?,
            "gpe_max_iterations" => cfg.gpe.max_iterations = parse_count(key, v, line)?,
            _ => return Err(Error::UnknownKey(key.into())),
        }
    }
    let missing = |key: &str| Error::OutOfRange {
        key: key.into(),
        reason: "required key missing".into(),
    };
    cfg.n_atoms = n_atoms.ok_or_else(|| missing("N"))?;
    cfg.g_list = g_list.ok_or_else(|| missing("g_list"))?;
    cfg.t_list = t_list.ok_or_else(|| missing("T_list"))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_with_relative_temperature() {
        let cfg = parse_config("N=500\ng_list=-0.01\nT_list=0.63Tc").unwrap();
        assert_eq!(cfg.n_atoms, 500);
        assert_eq!(cfg.g_list, vec![-0.01]);
        assert_eq!(cfg.t_list, vec![Temperature::Relative(0.63)]);
        let t = cfg.temperatures()[0];
        assert!((t - 0.63 * critical_temperature(500.0)).abs() < 1e-12);
        assert_eq!(cfg.sampler, SamplerConfig::default());
    }

    #[test]
    fn negative_atom_number_names_key() {
        match parse_config("N=-5\ng_list=0\nT_list=1") {
            Err(Error::OutOfRange { key, .. }) => assert_eq!(key, "N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key() {
        match parse_config("n_atoms=500") {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "n_atoms"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_temperature_list() {
        match parse_config("N=500\ng_list=0\nT_list=") {
            Err(Error::OutOfRange { key, .. }) => assert_eq!(key, "T_list"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_config("# header\nN=500\ng_list 0\n") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("N=500\ng_list=0,x\nT_list=1") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_config() {
        let text = "
            N = 500            # atoms
            g_list = -0.01, -0.005 ,0
            T_list = 0.26Tc, 30
            burn_in_sweeps = 100
            measure_sweeps = 400
            thin = 2
            seed = 77
            chains = 3
            start = cold
            oversample = 1.5
            jackknife_blocks = 4
            output_dir = /tmp/x
            emit_profiles = true
            gpe_points = 512
            gpe_tol = 1e-9
        ";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.g_list, vec![-0.01, -0.005, 0.0]);
        assert_eq!(cfg.t_list, vec![Temperature::Relative(0.26), Temperature::Absolute(30.0)]);
        assert_eq!(cfg.sampler.burn_in_sweeps, 100);
        assert_eq!(cfg.sampler.measure_sweeps, 400);
        assert_eq!(cfg.sampler.thin, 2);
        assert_eq!(cfg.sampler.seed, 77);
        assert_eq!(cfg.sampler.chains, 3);
        assert_eq!(cfg.start, StartMode::Cold);
        assert_eq!(cfg.oversample, 1.5);
        assert_eq!(cfg.jackknife_blocks, 4);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert!(cfg.emit_profiles);
        assert_eq!(cfg.gpe.grid_points, 512);
        assert_eq!(cfg.gpe.tol, 1e-9);
    }

    #[test]
    fn range_errors_name_their_key() {
        for (line, key) in [
            ("chains=0", "chains"),
            ("thin=0", "thin"),
            ("target_acceptance=1.5", "target_acceptance"),
            ("oversample=0.5", "oversample"),
            ("start=hot", "start"),
            ("T_list=-3", "T_list"),
        ] {
            let text = format!("N=500\ng_list=0\nT_list=1\n{line}");
            match parse_config(&text) {
                Err(Error::OutOfRange { key: k, .. }) => assert_eq!(k, key, "{line}"),
                other => panic!("{line}: {other:?}"),
            }
        }
    }
}
