//! Gross–Pitaevskii ground state by imaginary-time split-step propagation,
//! the effective basis frequency derived from it, and the mode cutoff.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpeParams {
    /// Grid covers [-extent, extent) in ω0 lengths.
    pub grid_extent: f64,
    pub grid_points: usize,
    pub dt: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GpeParams {
    fn default() -> Self {
        GpeParams {
            grid_extent: 10.0,
            grid_points: 1024,
            dt: 1e-3,
            tol: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

/// Normalized, real, nodeless ground state on a uniform periodic grid.
#[derive(Clone, Debug)]
pub struct GpeGroundState {
    pub g: f64,
    pub n0: f64,
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    /// E[√N0 ψ] including the zero-point energy.
    pub energy: f64,
    pub second_moment: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl GpeGroundState {
    pub fn energy_per_atom(&self) -> f64 {
        self.energy / self.n0
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// Imaginary-time Strang splitting: half potential, full kinetic (in
/// Fourier space), half potential, renormalize.
pub struct GpeSolver {
    g: f64,
    n0: f64,
    params: GpeParams,
    x: Vec<f64>,
    dx: f64,
    k2: Vec<f64>,
    kinetic_factor: Vec<f64>,
    psi: Vec<Complex64>,
    scratch: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    iterations: usize,
}

impl GpeSolver {
    pub fn new(g: f64, n0: f64, params: GpeParams) -> Result<Self> {
        let bad = |name: &str, reason: String| Error::InvalidParameter {
            name: name.into(),
            reason,
        };
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(bad("n0", format!("must be > 0, got {n0}")));
        }
        if !(params.dt > 0.0) {
            return Err(bad("dt", format!("must be > 0, got {}", params.dt)));
        }
        if !(params.tol > 0.0) {
            return Err(bad("tol", format!("must be > 0, got {}", params.tol)));
        }
        if params.grid_points < 16 || !(params.grid_extent > 0.0) {
            return Err(bad("grid", "need >= 16 points and a positive extent".into()));
        }
        if !g.is_finite() {
            return Err(bad("g", "must be finite".into()));
        }
        let n = params.grid_points;
        let dx = 2.0 * params.grid_extent / n as f64;
        let x: Vec<f64> = (0..n).map(|j| -params.grid_extent + j as f64 * dx).collect();
        let dk = 2.0 * PI / (n as f64 * dx);
        let k2: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                (m * dk).powi(2)
            })
            .collect();
        let kinetic_factor = k2.iter().map(|k2| (-0.5 * params.dt * k2).exp()).collect();

        // Start from the trap ground state.
        let mut psi: Vec<Complex64> = x
            .iter()
            .map(|x| Complex64::new(PI.powf(-0.25) * (-0.5 * x * x).exp(), 0.0))
            .collect();
        let norm: f64 = psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * dx;
        psi.iter_mut().for_each(|p| *p /= norm.sqrt());

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(GpeSolver {
            g,
            n0,
            params,
            x,
            dx,
            k2,
            kinetic_factor,
            psi,
            scratch: vec![Complex64::new(0.0, 0.0); n],
            forward,
            inverse,
            iterations: 0,
        })
    }

    /// Energy per atom of the current normalized state.
    pub fn energy_per_atom(&mut self) -> f64 {
        let n = self.psi.len();
        self.scratch.copy_from_slice(&self.psi);
        self.forward.process(&mut self.scratch);
        let kinetic: f64 = self
            .scratch
            .iter()
            .zip(&self.k2)
            .map(|(p, k2)| 0.5 * k2 * p.norm_sqr())
            .sum::<f64>()
            * self.dx
            / n as f64;
        let gn = self.g * self.n0;
        let local: f64 = self
            .psi
            .iter()
            .zip(&self.x)
            .map(|(p, x)| {
                let d = p.norm_sqr();
                0.5 * x * x * d + 0.5 * gn * d * d
            })
            .sum::<f64>()
            * self.dx;
        kinetic + local
    }

    fn half_potential(&mut self) {
        let gn = self.g * self.n0;
        let half = 0.5 * self.params.dt;
        for (p, x) in self.psi.iter_mut().zip(&self.x) {
            let v = 0.5 * x * x + gn * p.norm_sqr();
            *p *= (-half * v).exp();
        }
    }

    fn normalize(&mut self) {
        let norm: f64 = self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dx;
        let s = 1.0 / norm.sqrt();
        self.psi.iter_mut().for_each(|p| *p *= s);
    }

    /// One imaginary-time step; returns the new energy per atom.
    pub fn step(&mut self) -> f64 {
        let n = self.psi.len() as f64;
        self.half_potential();
        self.forward.process(&mut self.psi);
        for (p, f) in self.psi.iter_mut().zip(&self.kinetic_factor) {
            *p *= f / n;
        }
        self.inverse.process(&mut self.psi);
        self.half_potential();
        self.normalize();
        self.iterations += 1;
        self.energy_per_atom()
    }

    pub fn second_moment(&self) -> f64 {
        self.psi
            .iter()
            .zip(&self.x)
            .map(|(p, x)| x * x * p.norm_sqr())
            .sum::<f64>()
            * self.dx
    }

    fn snapshot(&mut self, converged: bool) -> GpeGroundState {
        let e = self.energy_per_atom();
        GpeGroundState {
            g: self.g,
            n0: self.n0,
            x: self.x.clone(),
            psi: self.psi.iter().map(|p| p.re.abs()).collect(),
            energy: e * self.n0,
            second_moment: self.second_moment(),
            converged,
            iterations: self.iterations,
        }
    }

    fn check_resolution(&self) -> Result<()> {
        let dx2 = self.dx * self.dx;
        let m2 = self.second_moment();
        if m2 < dx2 {
            return Err(Error::UnresolvedWidth {
                second_moment: m2,
                dx2,
            });
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<GpeGroundState> {
        let mut energy = self.energy_per_atom();
        let mut change = f64::INFINITY;
        while self.iterations < self.params.max_iterations {
            let e = self.step();
            change = (e - energy).abs() / e.abs().max(f64::MIN_POSITIVE);
            energy = e;
            if self.iterations % 256 == 0 {
                self.check_resolution()?;
            }
            if change < self.params.tol {
                self.check_resolution()?;
                let state = self.snapshot(true);
                let peak = state.psi.iter().fold(0.0f64, |m, p| m.max(p * p));
                let edge = state.psi[0].powi(2).max(state.psi[state.psi.len() - 1].powi(2));
                if edge > 1e-12 * peak {
                    return Err(Error::GridTooNarrow { ratio: edge / peak });
                }
                return Ok(state);
            }
        }
        Err(Error::NotConverged {
            iterations: self.iterations,
            last_change: change,
            state: Box::new(self.snapshot(false)),
        })
    }
}

/// Ground state of the GP equation for `n0` atoms with coupling `g`.
pub fn gpe_ground_state(g: f64, n0: f64, params: GpeParams) -> Result<GpeGroundState> {
    GpeSolver::new(g, n0, params)?.run()
}

/// Frequency whose oscillator ground state has the same ⟨x²⟩: ω = 1 / (2⟨x²⟩).
pub fn effective_frequency(state: &GpeGroundState) -> f64 {
    debug_assert!(state.converged, "effective_frequency needs a converged state");
    1.0 / (2.0 * state.second_moment)
}

/// n_max = max(1, round(T / ω)), halves rounded up.
pub fn cutoff(temperature: f64, omega_eff: f64) -> usize {
    assert!(temperature > 0.0 && omega_eff > 0.0);
    ((temperature / omega_eff + 0.5).floor() as usize).max(1)
}
