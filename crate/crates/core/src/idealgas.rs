//! Exact canonical statistics of an ideal Bose gas in a 1D harmonic trap.
//!
//! Single-particle levels are ε_n = n (zero-point dropped) for
//! n = 0..level_count-1. Partition functions come from the standard
//! recursion Z_N = (1/N) Σ_k Z_1(kβ) Z_{N-k}, carried out in log space, and
//! occupation moments from P(n_j ≥ k) = e^{-kβε_j} Z_{N-k} / Z_N.

use crate::error::{Error, Result};

/// Degeneracy temperature T_C of N atoms: the root of T ln(2T) = N.
pub fn critical_temperature(n_atoms: f64) -> f64 {
    assert!(n_atoms >= 2.0, "critical_temperature needs N >= 2, got {n_atoms}");
    let f = |t: f64| t * (2.0 * t).ln() - n_atoms;
    // f(1/2) = -N < 0 and f(N) = N(ln 2N - 1) > 0 for N >= 2.
    let (mut lo, mut hi) = (0.5, n_atoms);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Level count that makes the truncated spectrum indistinguishable from the
/// infinite one at temperature `t`.
pub fn default_level_count(t: f64) -> usize {
    (20.0 * t).ceil() as usize + 64
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Canonical partition functions ln Z_0..ln Z_N for one (N, T, level count).
#[derive(Clone, Debug)]
pub struct CanonicalGas {
    n_atoms: usize,
    beta: f64,
    levels: usize,
    log_z: Vec<f64>,
}

impl CanonicalGas {
    pub fn new(n_atoms: usize, temperature: f64, levels: usize) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "temperature".into(),
                reason: format!("must be > 0, got {temperature}"),
            });
        }
        if levels < 1 {
            return Err(Error::InvalidParameter {
                name: "level_count".into(),
                reason: "must be >= 1".into(),
            });
        }
        let beta = 1.0 / temperature;
        let lf = levels as f64;
        // ln Z_1(kβ) = ln(1 - e^{-kβL}) - ln(1 - e^{-kβ})
        let log_z1: Vec<f64> = (0..=n_atoms)
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let kb = k as f64 * beta;
                (-(-kb * lf).exp_m1()).ln() - (-(-kb).exp_m1()).ln()
            })
            .collect();
        let mut log_z = Vec::with_capacity(n_atoms + 1);
        log_z.push(0.0);
        for n in 1..=n_atoms {
            let terms = (1..=n).map(|k| log_z1[k] + log_z[n - k]);
            log_z.push(log_sum_exp(terms) - (n as f64).ln());
        }
        Ok(CanonicalGas {
            n_atoms,
            beta,
            levels,
            log_z,
        })
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_z[self.n_atoms]
    }

    fn tail_probabilities(&self, energy: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.n_atoms;
        let log_zn = self.log_z[n];
        (1..=n).map(move |k| {
            let kf = k as f64;
            (kf, (-kf * self.beta * energy + self.log_z[n - k] - log_zn).exp())
        })
    }

    /// ⟨n_j⟩ for the level of energy `energy`.
    pub fn mean_occupation(&self, energy: f64) -> f64 {
        self.tail_probabilities(energy).map(|(_, p)| p).sum()
    }

    /// ⟨n_j²⟩ = Σ_k (2k−1) P(n_j ≥ k).
    pub fn second_moment(&self, energy: f64) -> f64 {
        self.tail_probabilities(energy).map(|(k, p)| (2.0 * k - 1.0) * p).sum()
    }

    /// Mean occupation a first excluded level would carry; measures truncation.
    pub fn tail_occupation(&self) -> f64 {
        self.mean_occupation(self.levels as f64)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundOccupation {
    pub n0_mean: f64,
    pub n0_second_moment: f64,
}

impl GroundOccupation {
    pub fn dispersion(&self) -> f64 {
        (self.n0_second_moment - self.n0_mean * self.n0_mean).max(0.0).sqrt()
    }
}

/// Exact canonical mean and second moment of the ground-level occupation.
pub fn canonical_occupations(n_atoms: usize, temperature: f64, level_count: usize) -> Result<GroundOccupation> {
    let gas = CanonicalGas::new(n_atoms, temperature, level_count)?;
    let tail = gas.tail_occupation();
    if tail > 1e-10 * n_atoms as f64 {
        return Err(Error::InsufficientLevels {
            levels: level_count,
            tail,
        });
    }
    Ok(GroundOccupation {
        n0_mean: gas.mean_occupation(0.0),
        n0_second_moment: gas.second_moment(0.0),
    })
}

/// Ideal-gas condensate depletion and fluctuation curve over temperatures.
#[derive(Clone, Debug)]
pub struct IdealGasCurve {
    pub n_atoms: usize,
    pub temperatures: Vec<f64>,
    pub n0_mean: Vec<f64>,
    pub n0_dispersion: Vec<f64>,
}

pub fn ideal_gas_curve(n_atoms: usize, temperatures: &[f64]) -> Result<IdealGasCurve> {
    let mut n0_mean = Vec::with_capacity(temperatures.len());
    let mut n0_dispersion = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let occ = canonical_occupations(n_atoms, t, default_level_count(t))?;
        n0_mean.push(occ.n0_mean);
        n0_dispersion.push(occ.dispersion());
    }
    Ok(IdealGasCurve {
        n_atoms,
        temperatures: temperatures.to_vec(),
        n0_mean,
        n0_dispersion,
    })
}
