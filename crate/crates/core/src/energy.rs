//! Classical energy functional of the field in an oscillator basis of
//! frequency ω (units ħ = m = ω0 = 1):
//!
//! E = Σ ω n |α_n|² + ½(1 − ω²) Σ ⟨n|x²|m⟩ α_n* α_m + (g/2) ∫ |Ψ|⁴
//!
//! The first two terms use the analytic (pentadiagonal) matrix elements; the
//! quartic term is integrated on the interaction rule of the grid, which is
//! exact for it.

use num_complex::Complex64;
use std::sync::Arc;

use crate::basis::{synthesize, x2_matrix_element, ModeAmplitudes, QuadratureGrid};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub oscillator_term: f64,
    pub x2_correction: f64,
    pub interaction: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(oscillator_term: f64, x2_correction: f64, interaction: f64) -> Self {
        EnergyBreakdown {
            oscillator_term,
            x2_correction,
            interaction,
            total: oscillator_term + x2_correction + interaction,
        }
    }
}

/// Everything needed to evaluate energies for one (basis, g).
#[derive(Clone, Debug)]
pub struct EnergyModel {
    pub grid: Arc<QuadratureGrid>,
    pub g: f64,
}

impl EnergyModel {
    pub fn new(grid: Arc<QuadratureGrid>, g: f64) -> Self {
        EnergyModel { grid, g }
    }

    pub fn omega(&self) -> f64 {
        self.grid.spec.omega()
    }

    pub fn n_modes(&self) -> usize {
        self.grid.n_modes()
    }

    /// Prefactor ½(1 − ω²) of the basis-mismatch term.
    fn mismatch(&self) -> f64 {
        0.5 * (1.0 - self.omega() * self.omega())
    }
}

pub fn oscillator_term(alphas: &[Complex64], omega: f64) -> f64 {
    omega
        * alphas
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum::<f64>()
}

/// Σ_{n,m} ⟨n|x²|m⟩ α_n* α_m, evaluated over all index pairs. Its imaginary
/// part is pure round-off.
pub fn x2_quadratic_form(alphas: &[Complex64], omega: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, an) in alphas.iter().enumerate() {
        for m in n.saturating_sub(2)..(n + 3).min(alphas.len()) {
            let x = x2_matrix_element(n, m, omega);
            if x != 0.0 {
                acc += an.conj() * alphas[m] * x;
            }
        }
    }
    acc
}

/// Real form of the same sum using Hermiticity.
fn x2_form_real(alphas: &[Complex64], omega: f64) -> f64 {
    let mut s = 0.0;
    for (n, an) in alphas.iter().enumerate() {
        s += x2_matrix_element(n, n, omega) * an.norm_sqr();
        if n + 2 < alphas.len() {
            s += 2.0 * x2_matrix_element(n, n + 2, omega) * (an.conj() * alphas[n + 2]).re;
        }
    }
    s
}

/// (g/2) Σ_k w_k |Ψ_k|⁴.
pub fn interaction_energy(field: &[Complex64], weights: &[f64], g: f64) -> f64 {
    if g == 0.0 {
        return 0.0;
    }
    let s: f64 = field
        .iter()
        .zip(weights)
        .map(|(f, w)| {
            let d = f.norm_sqr();
            w * d * d
        })
        .sum();
    0.5 * g * s
}

fn check_len(amps: &ModeAmplitudes, model: &EnergyModel) -> Result<()> {
    if amps.len() != model.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_modes(),
            got: amps.len(),
        });
    }
    Ok(())
}

pub fn total_energy(amps: &ModeAmplitudes, grid: &QuadratureGrid, g: f64) -> Result<EnergyBreakdown> {
    let field = synthesize(amps.as_slice(), &grid.interaction.table)?;
    let omega = grid.spec.omega();
    let a = amps.as_slice();
    Ok(EnergyBreakdown::new(
        oscillator_term(a, omega),
        0.5 * (1.0 - omega * omega) * x2_form_real(a, omega),
        interaction_energy(&field, &grid.interaction.weights, g),
    ))
}

/// New values for two modes i ≠ j.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeUpdate {
    pub i: usize,
    pub j: usize,
    pub new_i: Complex64,
    pub new_j: Complex64,
}

/// Diagonal and two-off-diagonal bonds of the x² form touching i or j.
fn touched_bonds(i: usize, j: usize, n_modes: usize) -> ([(usize, usize); 6], usize) {
    let mut bonds = [(0, 0); 6];
    let mut len = 0;
    let mut push = |b: (usize, usize)| {
        if !bonds[..len].contains(&b) {
            bonds[len] = b;
            len += 1;
        }
    };
    for &p in &[i, j] {
        push((p, p));
        if p >= 2 {
            push((p - 2, p));
        }
        if p + 2 < n_modes {
            push((p, p + 2));
        }
    }
    (bonds, len)
}

fn bond_sum(bonds: &[(usize, usize)], value: impl Fn(usize) -> Complex64, omega: f64) -> f64 {
    bonds
        .iter()
        .map(|&(a, b)| {
            let x = x2_matrix_element(a, b, omega);
            if a == b {
                x * value(a).norm_sqr()
            } else {
                2.0 * x * (value(a).conj() * value(b)).re
            }
        })
        .sum()
}

/// Field values on the interaction rule plus the matching energy, updated
/// incrementally under two-mode moves.
#[derive(Clone, Debug)]
pub struct FieldCache {
    field: Vec<Complex64>,
    trial: Vec<Complex64>,
    energy: EnergyBreakdown,
}

impl FieldCache {
    pub fn new(model: &EnergyModel, amps: &ModeAmplitudes) -> Result<Self> {
        check_len(amps, model)?;
        let field = synthesize(amps.as_slice(), &model.grid.interaction.table)?;
        let energy = total_energy(amps, &model.grid, model.g)?;
        let trial = vec![Complex64::new(0.0, 0.0); field.len()];
        Ok(FieldCache { field, trial, energy })
    }

    pub fn energy(&self) -> EnergyBreakdown {
        self.energy
    }

    pub fn field(&self) -> &[Complex64] {
        &self.field
    }

    /// Energy after `update`. The quadratic terms change only through bonds
    /// touching i and j; the quartic term is re-summed over the trial field,
    /// which stays in the cache until [`FieldCache::commit`] or the next call.
    pub fn energy_delta(&mut self, model: &EnergyModel, amps: &ModeAmplitudes, update: &TwoModeUpdate) -> EnergyBreakdown {
        let TwoModeUpdate { i, j, new_i, new_j } = *update;
        let a = amps.as_slice();
        let omega = model.omega();
        let (old_i, old_j) = (a[i], a[j]);

        let osc = self.energy.oscillator_term
            + omega * (i as f64 * (new_i.norm_sqr() - old_i.norm_sqr()) + j as f64 * (new_j.norm_sqr() - old_j.norm_sqr()));

        let mismatch = model.mismatch();
        let x2 = if mismatch == 0.0 {
            0.0
        } else {
            let (bonds, len) = touched_bonds(i, j, a.len());
            let bonds = &bonds[..len];
            let before = bond_sum(bonds, |n| a[n], omega);
            let after = bond_sum(
                bonds,
                |n| {
                    if n == i {
                        new_i
                    } else if n == j {
                        new_j
                    } else {
                        a[n]
                    }
                },
                omega,
            );
            self.energy.x2_correction + mismatch * (after - before)
        };

        let di = new_i - old_i;
        let dj = new_j - old_j;
        let rule = &model.grid.interaction;
        let phi_i = rule.table.row(i);
        let phi_j = rule.table.row(j);
        let mut quartic = 0.0;
        for ((((t, f), pi), pj), w) in self
            .trial
            .iter_mut()
            .zip(&self.field)
            .zip(phi_i)
            .zip(phi_j)
            .zip(&rule.weights)
        {
            *t = f + di * pi + dj * pj;
            let d = t.norm_sqr();
            quartic += w * d * d;
        }
        let interaction = if model.g == 0.0 { 0.0 } else { 0.5 * model.g * quartic };
        EnergyBreakdown::new(osc, x2, interaction)
    }

    /// Accepts the last evaluated update.
    pub fn commit(&mut self, amps: &mut ModeAmplitudes, update: &TwoModeUpdate, energy: EnergyBreakdown) {
        amps.set_pair(update.i, update.new_i, update.j, update.new_j);
        std::mem::swap(&mut self.field, &mut self.trial);
        self.energy = energy;
    }

    /// Largest relative deviation of the cached energy terms and field from a
    /// full recomputation.
    pub fn consistency_error(&self, model: &EnergyModel, amps: &ModeAmplitudes) -> Result<f64> {
        let fresh = FieldCache::new(model, amps)?;
        let scale = fresh
            .energy
            .oscillator_term
            .abs()
            .max(fresh.energy.x2_correction.abs())
            .max(fresh.energy.interaction.abs())
            .max(amps.n_total())
            .max(1e-300);
        let e = &self.energy;
        let f = &fresh.energy;
        let energy_err = [
            e.oscillator_term - f.oscillator_term,
            e.x2_correction - f.x2_correction,
            e.interaction - f.interaction,
            e.total - f.total,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()))
            / scale;
        let field_scale = amps.n_total().sqrt().max(1e-300);
        let field_err = self
            .field
            .iter()
            .zip(&fresh.field)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
            / field_scale;
        Ok(energy_err.max(field_err))
    }

    /// Replaces the cache with a full recomputation.
    pub fn resync(&mut self, model: &EnergyModel, amps: &ModeAmplitudes) -> Result<()> {
        *self = FieldCache::new(model, amps)?;
        Ok(())
    }
}
