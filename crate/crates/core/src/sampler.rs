//! Metropolis sampling of P(α) ∝ exp(−E(α)/T) on the sphere Σ|α_n|² = N.
//!
//! Moves are random unitary rotations of a mode pair followed by a phase
//! twist on one of the two modes. They conserve the norm exactly, preserve
//! the uniform measure on the sphere, and are their own family's inverse,
//! so plain Metropolis acceptance gives detailed balance.
//!
//! Both the mixing angle θ and the twist η are drawn from (−θ_max, θ_max),
//! so a small θ_max means a small move. A twist drawn from the full circle
//! would cost interaction energy at any θ_max and stall the step adaptation
//! at strong coupling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::basis::ModeAmplitudes;
use crate::energy::{EnergyBreakdown, EnergyModel, FieldCache, TwoModeUpdate};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub measure_sweeps: usize,
    /// Record every `thin`-th sweep.
    pub thin: usize,
    pub target_acceptance: f64,
    pub seed: u64,
    pub chains: usize,
    /// Starting proposal amplitude; adapted during burn-in only.
    pub initial_theta: f64,
    /// Full cache recomputation interval in sweeps (0 disables).
    pub resync_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in_sweeps: 2_000,
            measure_sweeps: 20_000,
            thin: 10,
            target_acceptance: 0.4,
            seed: 1,
            chains: 1,
            initial_theta: 0.3,
            resync_every: 1_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: reason.into(),
            })
        };
        if self.measure_sweeps == 0 {
            return bad("measure_sweeps", "must be positive");
        }
        if self.thin == 0 {
            return bad("thin", "must be >= 1");
        }
        if self.chains == 0 {
            return bad("chains", "must be >= 1");
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad("target_acceptance", "must lie in (0, 1)");
        }
        if !(self.initial_theta > 0.0 && self.initial_theta <= PI) {
            return bad("initial_theta", "must lie in (0, pi]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartMode {
    /// All atoms in mode 0.
    Cold,
    /// |α_n|² ∝ exp(−ωn/T) with random phases.
    ThermalGuess,
}

/// Two-mode unitary mix plus a phase twist on mode i.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairRotation {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub chi: f64,
    pub eta: f64,
}

impl PairRotation {
    pub fn apply(&self, ai: Complex64, aj: Complex64) -> (Complex64, Complex64) {
        let (s, c) = self.theta.sin_cos();
        let e_chi = Complex64::from_polar(1.0, self.chi);
        let e_eta = Complex64::from_polar(1.0, self.eta);
        let new_i = (ai * c + e_chi * aj * s) * e_eta;
        let new_j = -e_chi.conj() * ai * s + aj * c;
        (new_i, new_j)
    }

    /// Parameters of the inverse move, which lies in the same family with
    /// the same proposal density: (θ, χ, η) → (−θ, χ + η, −η).
    pub fn inverse(&self) -> PairRotation {
        PairRotation {
            i: self.i,
            j: self.j,
            theta: -self.theta,
            chi: (self.chi + self.eta).rem_euclid(TAU),
            eta: -self.eta,
        }
    }
}

/// Metropolis rule: accept with probability min(1, exp(−ΔE/T)).
pub fn metropolis_accept<R: Rng>(delta_e: f64, temperature: f64, rng: &mut R) -> bool {
    if delta_e <= 0.0 {
        return true;
    }
    rng.gen::<f64>() < (-delta_e / temperature).exp()
}

/// One Metropolis walker.
#[derive(Clone, Debug)]
pub struct ChainState {
    model: Arc<EnergyModel>,
    amps: ModeAmplitudes,
    cache: FieldCache,
    pub theta_max: f64,
    rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
}

/// Random stream for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl ChainState {
    pub fn initial_state(
        n_total: f64,
        model: Arc<EnergyModel>,
        mode: StartMode,
        temperature: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        let n_modes = model.n_modes();
        let mut rng = chain_rng(seed, stream);
        let amps = match mode {
            StartMode::Cold => ModeAmplitudes::condensed(n_modes, n_total),
            StartMode::ThermalGuess => {
                let omega = model.omega();
                let pops: Vec<f64> = (0..n_modes).map(|n| (-omega * n as f64 / temperature).exp()).collect();
                let scale = n_total / pops.iter().sum::<f64>();
                let alphas = pops
                    .iter()
                    .map(|p| Complex64::from_polar((p * scale).sqrt(), rng.gen_range(0.0..TAU)))
                    .collect();
                ModeAmplitudes::new(alphas, n_total)?
            }
        };
        Self::from_amplitudes(amps, model, rng)
    }

    pub fn from_amplitudes(amps: ModeAmplitudes, model: Arc<EnergyModel>, rng: ChaCha8Rng) -> Result<Self> {
        let cache = FieldCache::new(&model, &amps)?;
        Ok(ChainState {
            model,
            amps,
            cache,
            theta_max: 0.3,
            rng,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn amplitudes(&self) -> &ModeAmplitudes {
        &self.amps
    }

    pub fn energy(&self) -> EnergyBreakdown {
        self.cache.energy()
    }

    pub fn field(&self) -> &[Complex64] {
        self.cache.field()
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Uniform ordered pair i ≠ j, θ and η uniform on (−θ_max, θ_max), χ uniform.
    pub fn propose_rotation(&mut self) -> PairRotation {
        let n = self.amps.len();
        let i = self.rng.gen_range(0..n);
        let mut j = self.rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let theta = self.rng.gen_range(-self.theta_max..self.theta_max);
        let chi = self.rng.gen_range(0.0..TAU);
        let eta = self.rng.gen_range(-self.theta_max..self.theta_max);
        PairRotation { i, j, theta, chi, eta }
    }

    fn update_for(&self, mv: &PairRotation) -> TwoModeUpdate {
        let a = self.amps.as_slice();
        let (new_i, new_j) = mv.apply(a[mv.i], a[mv.j]);
        TwoModeUpdate {
            i: mv.i,
            j: mv.j,
            new_i,
            new_j,
        }
    }

    /// Metropolis test of a given move.
    pub fn try_move(&mut self, mv: &PairRotation, temperature: f64) -> bool {
        let update = self.update_for(mv);
        let trial = self.cache.energy_delta(&self.model, &self.amps, &update);
        let delta = trial.total - self.cache.energy().total;
        self.proposed += 1;
        let accept = metropolis_accept(delta, temperature, &mut self.rng);
        if accept {
            self.cache.commit(&mut self.amps, &update, trial);
            self.accepted += 1;
        }
        accept
    }

    pub fn metropolis_step(&mut self, temperature: f64) -> bool {
        let mv = self.propose_rotation();
        self.try_move(&mv, temperature)
    }

    /// n_max + 1 elementary steps; returns the number accepted.
    pub fn sweep(&mut self, temperature: f64) -> usize {
        (0..self.amps.len())
            .filter(|_| self.metropolis_step(temperature))
            .count()
    }

    pub fn resync(&mut self) -> Result<()> {
        debug_assert!(
            self.cache.consistency_error(&self.model, &self.amps)? < 1e-7,
            "field/energy cache drifted from the amplitudes"
        );
        self.cache.resync(&self.model, &self.amps)
    }

    pub fn consistency_error(&self) -> Result<f64> {
        self.cache.consistency_error(&self.model, &self.amps)
    }
}

#[derive(Clone, Debug)]
pub struct ChainSummary {
    pub chain: usize,
    pub sweeps: usize,
    pub samples: usize,
    /// Acceptance over the measurement phase.
    pub acceptance: f64,
    pub theta_max: f64,
    pub final_energy: EnergyBreakdown,
    pub warnings: Vec<String>,
}

const ADAPT_BLOCK: usize = 10;

/// Burn-in with θ_max adaptation, then measurement with θ_max frozen.
/// `sink` receives every `thin`-th amplitude snapshot.
pub fn run_chain<F>(
    config: &SamplerConfig,
    chain: usize,
    model: Arc<EnergyModel>,
    n_total: f64,
    temperature: f64,
    start: StartMode,
    mut sink: F,
) -> Result<ChainSummary>
where
    F: FnMut(&ChainState),
{
    config.validate()?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature".into(),
            reason: format!("must be > 0, got {temperature}"),
        });
    }
    let mut state = ChainState::initial_state(n_total, model, start, temperature, config.seed, chain as u64)?;
    state.theta_max = config.initial_theta;
    let steps_per_sweep = state.amps.len();

    let mut block_accepted = 0usize;
    for sweep in 0..config.burn_in_sweeps {
        block_accepted += state.sweep(temperature);
        if (sweep + 1) % ADAPT_BLOCK == 0 {
            let rate = block_accepted as f64 / (ADAPT_BLOCK * steps_per_sweep) as f64;
            state.theta_max = (state.theta_max * (rate - config.target_acceptance).exp()).clamp(1e-6, PI);
            block_accepted = 0;
        }
        if config.resync_every > 0 && (sweep + 1) % config.resync_every == 0 {
            state.resync()?;
        }
    }
    state.resync()?;
    state.accepted = 0;
    state.proposed = 0;

    let mut samples = 0;
    for sweep in 0..config.measure_sweeps {
        state.sweep(temperature);
        if config.resync_every > 0 && (sweep + 1) % config.resync_every == 0 {
            state.resync()?;
        }
        if (sweep + 1) % config.thin == 0 {
            sink(&state);
            samples += 1;
        }
    }

    let acceptance = state.acceptance_rate();
    let mut warnings = Vec::new();
    if !(0.1..=0.9).contains(&acceptance) {
        warnings.push(format!(
            "chain {chain}: acceptance {acceptance:.3} outside [0.1, 0.9] (theta_max {:.3e})",
            state.theta_max
        ));
    }
    Ok(ChainSummary {
        chain,
        sweeps: config.burn_in_sweeps + config.measure_sweeps,
        samples,
        acceptance,
        theta_max: state.theta_max,
        final_energy: state.energy(),
        warnings,
    })
}
