//! One-body density matrix, Penrose–Onsager condensate, occupation
//! statistics, the mirror coherence g1(x, −x) and FWHM widths.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{BasisSpec, ModeAmplitudes, ModeTable};
use crate::error::{Error, Result};
use crate::stats::{self, SeriesSummary};

pub const DIAG_EXTENT: f64 = 8.0;
pub const DIAG_STEP: f64 = 0.02;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const DENSITY_FLOOR: f64 = 1e-12;

/// Running sums of α_i*·α_j over samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrixAccumulator {
    n_modes: usize,
    /// Row-major, upper triangle only (i ≤ j) until finalized.
    sum_pairs: Vec<Complex64>,
    n_total: f64,
    count: usize,
}

impl DensityMatrixAccumulator {
    pub fn new(n_modes: usize) -> Self {
        DensityMatrixAccumulator {
            n_modes,
            sum_pairs: vec![Complex64::new(0.0, 0.0); n_modes * n_modes],
            n_total: 0.0,
            count: 0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn accumulate(&mut self, sample: &ModeAmplitudes) -> Result<()> {
        if sample.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: sample.len(),
            });
        }
        let a = sample.as_slice();
        let n = self.n_modes;
        for i in 0..n {
            let ai = a[i].conj();
            let row = &mut self.sum_pairs[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += ai * a[j];
            }
        }
        self.n_total = sample.n_total();
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &DensityMatrixAccumulator) -> Result<()> {
        if other.n_modes != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: other.n_modes,
            });
        }
        for (s, o) in self.sum_pairs.iter_mut().zip(&other.sum_pairs) {
            *s += o;
        }
        if other.count > 0 {
            self.n_total = other.n_total;
        }
        self.count += other.count;
        Ok(())
    }

    /// Sums of `self` with the samples of `part` removed (leave-one-block-out).
    pub fn without(&self, part: &DensityMatrixAccumulator) -> Result<DensityMatrixAccumulator> {
        if part.n_modes != self.n_modes || part.count > self.count {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: part.n_modes,
            });
        }
        let mut out = self.clone();
        for (s, o) in out.sum_pairs.iter_mut().zip(&part.sum_pairs) {
            *s -= o;
        }
        out.count -= part.count;
        Ok(out)
    }

    /// ρ_ij = ⟨α_i*·α_j⟩ with the trace checked against N.
    pub fn finalize(&self) -> Result<DensityMatrix> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.n_modes;
        let c = self.count as f64;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.sum_pairs[i * n + j] / c;
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
        }
        let rho = DensityMatrix { n, data };
        let tr = rho.trace();
        if (tr - self.n_total).abs() > TRACE_TOL * self.n_total {
            return Err(Error::NormViolation {
                sum: tr,
                expected: self.n_total,
            });
        }
        Ok(rho)
    }
}

/// Dense ρ_ij, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(DensityMatrix { n, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    /// max |ρ_ij − ρ_ji*| relative to max |ρ_ij|.
    pub fn hermitian_residue(&self) -> f64 {
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst / scale
    }
}

/// Eigenvalues in descending order with the matching natural orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    /// `modes[k]` holds the orbital's oscillator-basis amplitudes β(k), so
    /// φ_k(x) = Σ_n β_n(k) φ_n(x) and its occupation in a sample is |Σ_n β_n* α_n|².
    pub modes: Vec<Vec<Complex64>>,
}

/// Penrose–Onsager decomposition of ρ.
///
/// With ρ_ij = ⟨α_i*α_j⟩ the orbitals are the complex conjugates of the
/// column eigenvectors of ρ. Each orbital's phase is fixed by making its
/// largest component real and positive.
pub fn diagonalize(rho: &DensityMatrix) -> Result<Eigensystem> {
    let n = rho.n;
    if n == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let residue = rho.hermitian_residue();
    if residue > HERMITIAN_TOL {
        return Err(Error::NonHermitian(residue));
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (rho.get(i, j) + rho.get(j, i).conj()));
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let scale = values[0].abs().max(1.0);
    if values[n - 1] < -PSD_TOL * scale {
        return Err(Error::InvalidParameter {
            name: "density matrix".into(),
            reason: format!("not positive semidefinite (eigenvalue {:e})", values[n - 1]),
        });
    }
    let modes = order
        .iter()
        .map(|&k| {
            let col: Vec<Complex64> = eig.eigenvectors.column(k).iter().map(|v| v.conj()).collect();
            fix_phase(col)
        })
        .collect();
    Ok(Eigensystem { values, modes })
}

fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if big.norm() > 0.0 {
        let p = big.conj() / big.norm();
        v.iter_mut().for_each(|x| *x *= p);
    }
    v
}

/// |Σ_n β_n*·α_n|²: occupation of orbital β in one sample.
pub fn project(sample: &[Complex64], mode: &[Complex64]) -> f64 {
    sample
        .iter()
        .zip(mode)
        .map(|(a, b)| b.conj() * a)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Mean and standard deviation (the dispersion ΔN0) of the per-sample
/// condensate occupation, with blocking errors. One series per chain.
pub fn condensate_statistics(chains: &[Vec<ModeAmplitudes>], mode: &[Complex64]) -> Result<SeriesSummary> {
    let series: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|s| project(s.as_slice(), mode)).collect())
        .collect();
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    stats::summarize(&refs)
}

/// Uniform grid symmetric about 0 with the basis tabulated on it.
#[derive(Clone, Debug)]
pub struct DiagnosticGrid {
    pub x: Vec<f64>,
    table: ModeTable,
}

impl DiagnosticGrid {
    pub fn new(spec: &BasisSpec, extent: f64, step: f64) -> Result<Self> {
        if !(extent > 0.0 && step > 0.0 && step < extent) {
            return Err(Error::InvalidParameter {
                name: "diagnostic grid".into(),
                reason: format!("extent {extent}, step {step}"),
            });
        }
        let half = (extent / step).round() as i64;
        let x: Vec<f64> = (-half..=half).map(|k| k as f64 * step).collect();
        let table = spec.mode_table(&x);
        Ok(DiagnosticGrid { x, table })
    }

    pub fn standard(spec: &BasisSpec) -> Result<Self> {
        Self::new(spec, DIAG_EXTENT, DIAG_STEP)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// |Σ_n β_n φ_n(x)|² on the grid.
    pub fn mode_density(&self, mode: &[Complex64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                mode.iter()
                    .enumerate()
                    .map(|(n, b)| b * self.table.get(n, k))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }
}

/// g1(x, −x) together with the density it is normalized by. Points where
/// the density falls below 1e-12 of its peak are cut off symmetrically.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceProfile {
    pub x: Vec<f64>,
    pub g1: Vec<f64>,
    pub density: Vec<f64>,
}

/// ⟨Ψ*(−x)Ψ(x)⟩ / ⟨|Ψ(x)|²⟩ from ρ, since ⟨Ψ*(y)Ψ(x)⟩ = Σ_ij ρ_ij φ_i(y) φ_j(x).
pub fn g1_profile(rho: &DensityMatrix, grid: &DiagnosticGrid) -> Result<CoherenceProfile> {
    let n = rho.dim();
    if n != grid.table.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: grid.table.n_modes(),
            got: n,
        });
    }
    let len = grid.len();
    let mut num = vec![0.0; len];
    let mut dens = vec![0.0; len];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..len {
        let mirror = len - 1 - k;
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = (0..n).map(|j| rho.get(i, j) * grid.table.get(j, k)).sum();
        }
        num[k] = (0..n).map(|i| v[i] * grid.table.get(i, mirror)).sum::<Complex64>().re;
        dens[k] = (0..n).map(|i| v[i] * grid.table.get(i, k)).sum::<Complex64>().re;
    }
    let peak = dens.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::EmptyAccumulator);
    }
    let mid = len / 2;
    let mut reach = 0;
    while reach < mid && dens[mid - reach - 1] >= DENSITY_FLOOR * peak && dens[mid + reach + 1] >= DENSITY_FLOOR * peak {
        reach += 1;
    }
    let range = mid - reach..mid + reach + 1;
    Ok(CoherenceProfile {
        x: grid.x[range.clone()].to_vec(),
        g1: range.clone().map(|k| num[k] / dens[k]).collect(),
        density: dens[range].to_vec(),
    })
}

/// Full width at half maximum, with linear interpolation of both crossings.
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let (peak, &top) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::ProfileTooWide)?;
    let half = 0.5 * top;
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    let right = (peak..y.len() - 1)
        .find(|&k| y[k + 1] < half)
        .map(|k| cross(k, k + 1))
        .ok_or(Error::ProfileTooWide)?;
    let left = (1..=peak)
        .rev()
        .find(|&k| y[k - 1] < half)
        .map(|k| cross(k - 1, k))
        .ok_or(Error::ProfileTooWide)?;
    Ok(right - left)
}

/// Value with a jackknife error; `None` when the width is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

/// Observables of one (g, T) point.
#[derive(Clone, Debug)]
pub struct PointObservables {
    pub eigen: Eigensystem,
    pub lambda0: f64,
    pub n0: SeriesSummary,
    /// Weight of odd oscillator modes in the condensate orbital.
    pub odd_weight: f64,
    pub g1_fwhm: Option<Estimate>,
    pub cond_fwhm: Option<Estimate>,
    pub profile: CoherenceProfile,
    pub condensate_density: Vec<f64>,
    pub notes: Vec<String>,
}

fn widths(rho: &DensityMatrix, grid: &DiagnosticGrid) -> Result<(Result<f64>, Result<f64>, Eigensystem, CoherenceProfile)> {
    let eigen = diagonalize(rho)?;
    let profile = g1_profile(rho, grid)?;
    let g1w = fwhm(&profile.x, &profile.g1);
    let cw = fwhm(&grid.x, &grid.mode_density(&eigen.modes[0]));
    Ok((g1w, cw, eigen, profile))
}

/// Two-pass analysis of stored snapshots, one `Vec` per chain.
///
/// Pass 1 builds ρ (and one accumulator per time block), pass 2 projects
/// every snapshot on the condensate orbital. FWHM errors come from a
/// leave-one-block-out jackknife with `blocks_per_chain` blocks per chain.
pub fn analyze(chains: &[Vec<ModeAmplitudes>], spec: &BasisSpec, blocks_per_chain: usize) -> Result<PointObservables> {
    let n_modes = spec.n_modes();
    let grid = DiagnosticGrid::standard(spec)?;
    let mut total = DensityMatrixAccumulator::new(n_modes);
    let mut blocks = Vec::new();
    for chain in chains {
        let b = blocks_per_chain.clamp(1, chain.len().max(1));
        for k in 0..b {
            let lo = k * chain.len() / b;
            let hi = (k + 1) * chain.len() / b;
            let mut acc = DensityMatrixAccumulator::new(n_modes);
            for s in &chain[lo..hi] {
                acc.accumulate(s)?;
            }
            total.merge(&acc)?;
            blocks.push(acc);
        }
    }
    let rho = total.finalize()?;
    let (g1w, cw, eigen, profile) = widths(&rho, &grid)?;
    let mode = &eigen.modes[0];
    let n0 = condensate_statistics(chains, mode)?;
    let odd_weight = mode.iter().skip(1).step_by(2).map(|b| b.norm_sqr()).sum();
    let condensate_density = grid.mode_density(mode);

    let mut notes = Vec::new();
    let mut loo_g1 = Vec::new();
    let mut loo_c = Vec::new();
    if blocks.len() >= 2 {
        for b in &blocks {
            let part = total.without(b)?.finalize()?;
            let (g, c, _, _) = widths(&part, &grid)?;
            loo_g1.push(g);
            loo_c.push(c);
        }
    } else {
        notes.push("too few blocks for jackknife".into());
    }
    let estimate = |full: Result<f64>, loo: Vec<Result<f64>>, name: &str, notes: &mut Vec<String>| match full {
        Ok(value) => {
            let vals: Result<Vec<f64>> = loo.into_iter().collect();
            match vals {
                Ok(v) if v.len() >= 2 => Some(Estimate {
                    value,
                    err: stats::jackknife(&v).1,
                }),
                Ok(_) => Some(Estimate { value, err: f64::NAN }),
                Err(e) => {
                    notes.push(format!("{name} jackknife: {e}"));
                    Some(Estimate { value, err: f64::NAN })
                }
            }
        }
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let g1_fwhm = estimate(g1w, loo_g1, "g1_fwhm", &mut notes);
    let cond_fwhm = estimate(cw, loo_c, "cond_fwhm", &mut notes);
    Ok(PointObservables {
        lambda0: eigen.values[0],
        eigen,
        n0,
        odd_weight,
        g1_fwhm,
        cond_fwhm,
        profile,
        condensate_density,
        notes,
    })
}
