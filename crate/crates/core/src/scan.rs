//! End-to-end (g, T) scans: ideal-gas N0, GPE frequency, cutoff, sampling,
//! observables, CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::basis::{build_quadrature, BasisSpec, ModeAmplitudes};
use crate::config::ScanConfig;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::idealgas::{canonical_occupations, default_level_count};
use crate::meanfield::{cutoff, effective_frequency, gpe_ground_state, GpeParams};
use crate::observables::{analyze, PointObservables};
use crate::sampler::{run_chain, SamplerConfig, StartMode};

pub const CSV_HEADER: &str = "g,T,T_over_Tc,N0_ideal,omega_eff,n_max,n0_mean,n0_err,dn0,dn0_err,dn0_rel,dn0_rel_err,\
g1_fwhm,g1_fwhm_err,cond_fwhm,cond_fwhm_err,lambda0,acceptance,sweeps,seed,status";

/// One row of `scan.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub g: f64,
    pub t: f64,
    pub t_over_tc: f64,
    pub n0_ideal: f64,
    pub omega_eff: f64,
    pub n_max: usize,
    pub n0_mean: f64,
    pub n0_err: f64,
    pub dn0: f64,
    pub dn0_err: f64,
    pub dn0_rel: f64,
    pub dn0_rel_err: f64,
    pub g1_fwhm: f64,
    pub g1_fwhm_err: f64,
    pub cond_fwhm: f64,
    pub cond_fwhm_err: f64,
    pub lambda0: f64,
    pub acceptance: f64,
    pub sweeps: usize,
    pub seed: u64,
    /// `ok`, or `;`-separated diagnostics.
    pub status: String,
}

impl ScanPoint {
    fn pending(g: f64, t: f64, tc: f64, seed: u64) -> Self {
        ScanPoint {
            g,
            t,
            t_over_tc: t / tc,
            n0_ideal: f64::NAN,
            omega_eff: f64::NAN,
            n_max: 0,
            n0_mean: f64::NAN,
            n0_err: f64::NAN,
            dn0: f64::NAN,
            dn0_err: f64::NAN,
            dn0_rel: f64::NAN,
            dn0_rel_err: f64::NAN,
            g1_fwhm: f64::NAN,
            g1_fwhm_err: f64::NAN,
            cond_fwhm: f64::NAN,
            cond_fwhm_err: f64::NAN,
            lambda0: f64::NAN,
            acceptance: f64::NAN,
            sweeps: 0,
            seed,
            status: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.g,
            self.t,
            self.t_over_tc,
            self.n0_ideal,
            self.omega_eff,
            self.n_max,
            self.n0_mean,
            self.n0_err,
            self.dn0,
            self.dn0_err,
            self.dn0_rel,
            self.dn0_rel_err,
            self.g1_fwhm,
            self.g1_fwhm_err,
            self.cond_fwhm,
            self.cond_fwhm_err,
            self.lambda0,
            self.acceptance,
            self.sweeps,
            self.seed,
            self.status.replace([',', '\n'], ";")
        );
        s
    }
}

/// Spatial profiles of one point on the diagnostic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PointProfile {
    pub x: Vec<f64>,
    pub g1: Vec<f64>,
    pub density: Vec<f64>,
    /// N0·|φ_cond(x)|², on the same points as `x`.
    pub condensate_density: Vec<f64>,
}

impl PointProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,g1,density,condensate_density\n");
        for k in 0..self.x.len() {
            let _ = writeln!(s, "{},{},{},{}", self.x[k], self.g1[k], self.density[k], self.condensate_density[k]);
        }
        s
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of point (g, T) under a master seed; independent of list order.
pub fn point_seed(master: u64, g: f64, t: f64) -> u64 {
    // +0.0 and -0.0 are the same coupling.
    let g = if g == 0.0 { 0.0 } else { g };
    splitmix64(splitmix64(splitmix64(master) ^ g.to_bits()) ^ t.to_bits())
}

/// Everything fixed before sampling starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointPlan {
    pub g: f64,
    pub t: f64,
    pub tc: f64,
    pub n0_ideal: f64,
    pub omega_eff: f64,
    pub n_max: usize,
}

/// Ideal-gas N0 at T, the GPE frequency for that N0 and the cutoff.
///
/// At g = 0 the GP ground state is the trap Gaussian and ω_eff = 1 exactly.
pub fn plan_point(n_atoms: usize, g: f64, t: f64, gpe: GpeParams) -> Result<PointPlan> {
    let tc = crate::idealgas::critical_temperature(n_atoms as f64);
    let n0_ideal = canonical_occupations(n_atoms, t, default_level_count(t))?.n0_mean;
    let omega_eff = if g == 0.0 {
        1.0
    } else {
        effective_frequency(&gpe_ground_state(g, n0_ideal, gpe)?)
    };
    Ok(PointPlan {
        g,
        t,
        tc,
        n0_ideal,
        omega_eff,
        n_max: cutoff(t, omega_eff),
    })
}

/// Snapshots of every chain, in chain order, plus per-chain run summaries.
pub struct ChainOutput {
    pub samples: Vec<Vec<ModeAmplitudes>>,
    pub acceptance: f64,
    pub sweeps: usize,
    pub warnings: Vec<String>,
}

/// Runs `config.chains` independent chains (in parallel) on one model.
pub fn sample_point(
    config: &SamplerConfig,
    model: Arc<EnergyModel>,
    n_atoms: f64,
    t: f64,
    start: StartMode,
) -> Result<ChainOutput> {
    let runs: Vec<Result<(Vec<ModeAmplitudes>, crate::sampler::ChainSummary)>> = (0..config.chains)
        .into_par_iter()
        .map(|chain| {
            let mut snaps = Vec::new();
            let summary = run_chain(config, chain, model.clone(), n_atoms, t, start, |s| {
                snaps.push(s.amplitudes().clone())
            })?;
            Ok((snaps, summary))
        })
        .collect();
    let mut samples = Vec::with_capacity(runs.len());
    let mut acc = 0.0;
    let mut sweeps = 0;
    let mut warnings = Vec::new();
    let chains = runs.len() as f64;
    for r in runs {
        let (snaps, summary) = r?;
        acc += summary.acceptance / chains;
        sweeps = summary.sweeps;
        warnings.extend(summary.warnings);
        samples.push(snaps);
    }
    Ok(ChainOutput {
        samples,
        acceptance: acc,
        sweeps,
        warnings,
    })
}

/// Runs one point to completion. Errors past planning are reported in the
/// returned row's status rather than propagated.
pub fn run_point(cfg: &ScanConfig, g: f64, t: f64) -> (ScanPoint, Option<PointProfile>) {
    let tc = cfg.critical_temperature();
    let seed = point_seed(cfg.sampler.seed, g, t);
    let mut row = ScanPoint::pending(g, t, tc, seed);
    match run_point_inner(cfg, g, t, seed, &mut row) {
        Ok(profile) => (row, Some(profile)),
        Err(e) => {
            if !row.status.is_empty() {
                row.status.push(';');
            }
            row.status.push_str(&format!("error: {e}"));
            (row, None)
        }
    }
}

fn run_point_inner(cfg: &ScanConfig, g: f64, t: f64, seed: u64, row: &mut ScanPoint) -> Result<PointProfile> {
    let plan = plan_point(cfg.n_atoms, g, t, cfg.gpe)?;
    row.n0_ideal = plan.n0_ideal;
    row.omega_eff = plan.omega_eff;
    row.n_max = plan.n_max;

    let spec = BasisSpec::new(plan.omega_eff, plan.n_max)?;
    let grid = Arc::new(build_quadrature(spec, cfg.oversample)?);
    let model = Arc::new(EnergyModel::new(grid, g));
    let sampler = SamplerConfig { seed, ..cfg.sampler };
    let out = sample_point(&sampler, model, cfg.n_atoms as f64, t, cfg.start)?;
    row.acceptance = out.acceptance;
    row.sweeps = out.sweeps;

    let obs = analyze(&out.samples, &spec, cfg.jackknife_blocks)?;
    fill_row(row, &obs);
    let mut notes = out.warnings;
    notes.extend(obs.notes.iter().cloned());
    row.status = if notes.is_empty() { "ok".into() } else { notes.join(";") };

    let mid = obs.condensate_density.len() / 2;
    let half = obs.profile.x.len() / 2;
    let cond = obs.condensate_density[mid - half..=mid + half].iter().map(|d| d * obs.lambda0).collect();
    Ok(PointProfile {
        x: obs.profile.x.clone(),
        g1: obs.profile.g1.clone(),
        density: obs.profile.density.clone(),
        condensate_density: cond,
    })
}

fn fill_row(row: &mut ScanPoint, obs: &PointObservables) {
    row.lambda0 = obs.lambda0;
    row.n0_mean = obs.n0.mean;
    row.n0_err = obs.n0.mean_err;
    row.dn0 = obs.n0.std_dev;
    row.dn0_err = obs.n0.std_dev_err;
    row.dn0_rel = obs.n0.std_dev / obs.n0.mean;
    row.dn0_rel_err = row.dn0_rel * ((row.dn0_err / row.dn0).powi(2) + (row.n0_err / row.n0_mean).powi(2)).sqrt();
    if let Some(e) = obs.g1_fwhm {
        row.g1_fwhm = e.value;
        row.g1_fwhm_err = e.err;
    }
    if let Some(e) = obs.cond_fwhm {
        row.cond_fwhm = e.value;
        row.cond_fwhm_err = e.err;
    }
}

/// All points in g-major order.
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub profiles: Vec<Option<PointProfile>>,
    pub wall_seconds: f64,
}

impl ScanResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.status.contains("error")).count()
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&p.csv_row());
            s.push('\n');
        }
        s
    }
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let start = Instant::now();
    let temps = cfg.temperatures();
    let mut points = Vec::new();
    let mut profiles = Vec::new();
    for &g in &cfg.g_list {
        for &t in &temps {
            let (row, profile) = run_point(cfg, g, t);
            points.push(row);
            profiles.push(profile);
        }
    }
    Ok(ScanResult {
        points,
        profiles,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn profile_file_name(g: f64, t: f64) -> String {
    format!("profile_g{g}_T{t}.csv")
}

/// Writes `scan.csv`, `run.json` and, if requested, the profile files.
pub fn write_outputs(cfg: &ScanConfig, result: &ScanResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv = dir.join("scan.csv");
    fs::write(&csv, result.csv())?;
    written.push(csv);
    if cfg.emit_profiles {
        for (p, prof) in result.points.iter().zip(&result.profiles) {
            if let Some(prof) = prof {
                let path = dir.join(profile_file_name(p.g, p.t));
                fs::write(&path, prof.to_csv())?;
                written.push(path);
            }
        }
    }
    let json = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "wall_seconds": result.wall_seconds,
        "T_c": cfg.critical_temperature(),
        "points": result.points.len(),
        "failed_points": result.failures(),
        "config": {
            "N": cfg.n_atoms,
            "g_list": cfg.g_list,
            "T_list": cfg.temperatures(),
            "burn_in_sweeps": cfg.sampler.burn_in_sweeps,
            "measure_sweeps": cfg.sampler.measure_sweeps,
            "thin": cfg.sampler.thin,
            "target_acceptance": cfg.sampler.target_acceptance,
            "initial_theta": cfg.sampler.initial_theta,
            "resync_every": cfg.sampler.resync_every,
            "seed": cfg.sampler.seed,
            "chains": cfg.sampler.chains,
            "start": match cfg.start { StartMode::Cold => "cold", StartMode::ThermalGuess => "thermal" },
            "oversample": cfg.oversample,
            "jackknife_blocks": cfg.jackknife_blocks,
            "emit_profiles": cfg.emit_profiles,
            "gpe_extent": cfg.gpe.grid_extent,
            "gpe_points": cfg.gpe.grid_points,
            "gpe_dt": cfg.gpe.dt,
            "gpe_tol": cfg.gpe.tol,
            "gpe_max_iterations": cfg.gpe.max_iterations,
        },
    });
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.into()))?)?;
    written.push(path);
    Ok(written)
}
