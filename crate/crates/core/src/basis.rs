//! Harmonic-oscillator eigenbasis: Hermite functions, analytic `x²` matrix
//! elements, Gauss–Hermite grids and field synthesis.
//!
//! Positions are always stored in trap (ω0) oscillator units. A basis of
//! frequency ω uses φ_n(x) = ω^{1/4} h_n(√ω x), where h_n are the standard
//! normalized Hermite functions.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Default upper bound on the number of quadrature nodes.
pub const DEFAULT_ORDER_CAP: usize = 16_384;

// Rescaling threshold for the Hermite recurrence. Values above this are
// folded into a running log-scale so that large n and |x| never overflow.
const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_LN: f64 = 230.258_509_299_404_56; // ln(1e100)

/// Values φ_n(x_k), stored mode-major so one mode is a contiguous row.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    n_modes: usize,
    n_points: usize,
    data: Vec<f64>,
}

impl ModeTable {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_points..(n + 1) * self.n_points]
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.data[n * self.n_points + k]
    }

    fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Normalized Hermite functions h_0..h_{n_max} at `points`, by the stable
/// three-term recurrence with a running log-scale.
pub fn hermite_functions(n_max: usize, points: &[f64]) -> ModeTable {
    let n_modes = n_max + 1;
    let n_points = points.len();
    let mut data = vec![0.0; n_modes * n_points];
    let h0 = PI.powf(-0.25);
    for (k, &x) in points.iter().enumerate() {
        let mut log_scale = -0.5 * x * x;
        let mut factor = log_scale.exp();
        let mut prev = 0.0;
        let mut cur = h0;
        data[k] = cur * factor;
        for n in 0..n_max {
            let nf = n as f64;
            let next = x * (2.0 / (nf + 1.0)).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE_ABOVE {
                cur /= RESCALE_ABOVE;
                prev /= RESCALE_ABOVE;
                log_scale += RESCALE_LN;
                factor = log_scale.exp();
            }
            data[(n + 1) * n_points + k] = cur * factor;
        }
    }
    ModeTable {
        n_modes,
        n_points,
        data,
    }
}

/// Returns (h_n, h_{n-1}) sharing a common scale, plus the log of that scale.
fn hermite_pair_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for j in 0..n {
        let jf = j as f64;
        let next = x * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur /= RESCALE_ABOVE;
            prev /= RESCALE_ABOVE;
            log_scale += RESCALE_LN;
        }
    }
    (cur, prev, log_scale)
}

/// Gauss–Hermite rule of the given order.
///
/// Returns ascending nodes z_k and the "function" weights Λ_k = W_k e^{z_k²},
/// so that Σ Λ_k f(z_k) ≈ ∫ f(z) dz, exact when f(z) e^{z²} is a polynomial
/// of degree ≤ 2·order − 1.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Hermite order must be positive");
    let m = order;
    let mf = m as f64;
    let half = (m + 1) / 2;
    let mut roots: Vec<f64> = Vec::with_capacity(half);
    let mut weights: Vec<f64> = Vec::with_capacity(half);
    let mut z = 0.0_f64;
    for i in 0..half {
        // Initial guesses for the largest roots first, then extrapolate inward.
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.855_75 * (2.0 * mf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut converged = false;
        for _ in 0..200 {
            let (hm, hm1, _) = hermite_pair_scaled(m, z);
            let deriv = (2.0 * mf).sqrt() * hm1 - z * hm;
            let step = hm / deriv;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        debug_assert!(converged, "Gauss-Hermite Newton iteration stalled at root {i}");
        let (_, hm1, log_scale) = hermite_pair_scaled(m, z);
        // Λ = 1 / (M h_{M-1}(z)²), evaluated in log space.
        let ln_w = -mf.ln() - 2.0 * (hm1.abs().ln() + log_scale);
        roots.push(z);
        weights.push(ln_w.exp());
    }
    let mut nodes = Vec::with_capacity(m);
    let mut lambdas = Vec::with_capacity(m);
    for i in 0..half {
        nodes.push(-roots[i]);
        lambdas.push(weights[i]);
    }
    let start = if m % 2 == 1 { half - 1 } else { half };
    for i in (0..start).rev() {
        nodes.push(roots[i]);
        lambdas.push(weights[i]);
    }
    if m % 2 == 1 {
        // The middle root is exactly zero by symmetry.
        nodes[half - 1] = 0.0;
    }
    (nodes, lambdas)
}

/// ⟨n|x²|m⟩ in the oscillator basis of frequency `omega` (ω0 length units).
pub fn x2_matrix_element(n: usize, m: usize, omega: f64) -> f64 {
    let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
    if lo == hi {
        (lo as f64 + 0.5) / omega
    } else if hi == lo + 2 {
        let l = lo as f64;
        ((l + 1.0) * (l + 2.0)).sqrt() / (2.0 * omega)
    } else {
        0.0
    }
}

/// Effective oscillator basis: frequency ω (units of ω0) and cutoff n_max.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSpec {
    omega: f64,
    n_max: usize,
}

impl BasisSpec {
    pub fn new(omega: f64, n_max: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidBasis(format!("omega must be > 0, got {omega}")));
        }
        if n_max < 1 {
            return Err(Error::InvalidBasis("n_max must be >= 1".into()));
        }
        Ok(BasisSpec { omega, n_max })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_modes(&self) -> usize {
        self.n_max + 1
    }

    /// φ_n(x) of this basis at positions given in ω0 units.
    pub fn mode_table(&self, points: &[f64]) -> ModeTable {
        let s = self.omega.sqrt();
        let scaled: Vec<f64> = points.iter().map(|x| x * s).collect();
        let mut table = hermite_functions(self.n_max, &scaled);
        table.scale(self.omega.powf(0.25));
        table
    }
}

/// One set of nodes with weights and the basis evaluated on them.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Positions in ω0 units.
    pub nodes: Vec<f64>,
    /// Weights for plain integrals ∫ f(x) dx.
    pub weights: Vec<f64>,
    pub table: ModeTable,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Paired quadrature rules of a common order M for one basis.
///
/// `interaction` uses nodes rescaled by 1/√2 so that products of four basis
/// functions (the |Ψ|⁴ integrand) are integrated exactly. `overlap` is the
/// plain Gauss–Hermite rule, exact for products of two basis functions and
/// for the `x²` matrix elements.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub spec: BasisSpec,
    pub order: usize,
    pub interaction: QuadratureRule,
    pub overlap: QuadratureRule,
}

impl QuadratureGrid {
    pub fn n_modes(&self) -> usize {
        self.spec.n_modes()
    }
}

pub fn build_quadrature(spec: BasisSpec, oversample: f64) -> Result<QuadratureGrid> {
    build_quadrature_capped(spec, oversample, DEFAULT_ORDER_CAP)
}

pub fn build_quadrature_capped(spec: BasisSpec, oversample: f64, cap: usize) -> Result<QuadratureGrid> {
    if !(oversample.is_finite() && oversample >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "oversample".into(),
            reason: format!("must be >= 1, got {oversample}"),
        });
    }
    let base = 2 * spec.n_max() + 1;
    let order = (oversample * base as f64 - 1e-9).ceil().max(base as f64) as usize;
    if order > cap {
        return Err(Error::QuadratureTooLarge { order, cap });
    }
    let (z, lambda) = gauss_hermite(order);
    let inv_sqrt_omega = 1.0 / spec.omega().sqrt();

    let quartic_nodes: Vec<f64> = z.iter().map(|z| z * FRAC_1_SQRT_2 * inv_sqrt_omega).collect();
    let quartic_weights: Vec<f64> = lambda.iter().map(|l| l * FRAC_1_SQRT_2 * inv_sqrt_omega).collect();
    let interaction = QuadratureRule {
        table: spec.mode_table(&quartic_nodes),
        nodes: quartic_nodes,
        weights: quartic_weights,
    };

    let plain_nodes: Vec<f64> = z.iter().map(|z| z * inv_sqrt_omega).collect();
    let plain_weights: Vec<f64> = lambda.iter().map(|l| l * inv_sqrt_omega).collect();
    let overlap = QuadratureRule {
        table: spec.mode_table(&plain_nodes),
        nodes: plain_nodes,
        weights: plain_weights,
    };

    Ok(QuadratureGrid {
        spec,
        order,
        interaction,
        overlap,
    })
}

/// Classical-field amplitudes α_0..α_{n_max} on the sphere Σ|α_n|² = N.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudes {
    alphas: Vec<Complex64>,
    n_total: f64,
}

const NORM_TOL: f64 = 1e-12;

impl ModeAmplitudes {
    /// Checks the norm constraint against `n_total`.
    pub fn new(alphas: Vec<Complex64>, n_total: f64) -> Result<Self> {
        let sum: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
        let scale = if n_total > 0.0 { n_total } else { 1.0 };
        if !(n_total >= 0.0) || (sum - n_total).abs() / scale > NORM_TOL {
            return Err(Error::NormViolation {
                sum,
                expected: n_total,
            });
        }
        Ok(ModeAmplitudes { alphas, n_total })
    }

    /// Takes N from the amplitudes themselves.
    pub fn from_alphas(alphas: Vec<Complex64>) -> Self {
        let n_total = alphas.iter().map(|a| a.norm_sqr()).sum();
        ModeAmplitudes { alphas, n_total }
    }

    /// All atoms in mode 0.
    pub fn condensed(n_modes: usize, n_total: f64) -> Self {
        let mut alphas = vec![Complex64::new(0.0, 0.0); n_modes];
        alphas[0] = Complex64::new(n_total.sqrt(), 0.0);
        ModeAmplitudes { alphas, n_total }
    }

    pub fn n_total(&self) -> f64 {
        self.n_total
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn occupation(&self, n: usize) -> f64 {
        self.alphas[n].norm_sqr()
    }

    /// Overwrites two modes. Callers keep |a|²+|b|² equal to the old pair.
    pub(crate) fn set_pair(&mut self, i: usize, a: Complex64, j: usize, b: Complex64) {
        self.alphas[i] = a;
        self.alphas[j] = b;
    }

    /// Multiplies every amplitude by e^{iθ}.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let p = Complex64::from_polar(1.0, theta);
        ModeAmplitudes {
            alphas: self.alphas.iter().map(|a| a * p).collect(),
            n_total: self.n_total,
        }
    }
}

/// Ψ(x_k) = Σ_n α_n φ_n(x_k) on the nodes of `rule`.
pub fn field_at_points(amps: &ModeAmplitudes, rule: &QuadratureRule) -> Result<Vec<Complex64>> {
    synthesize(amps.as_slice(), &rule.table)
}

pub(crate) fn synthesize(alphas: &[Complex64], table: &ModeTable) -> Result<Vec<Complex64>> {
    if alphas.len() != table.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: table.n_modes(),
            got: alphas.len(),
        });
    }
    let mut field = vec![Complex64::new(0.0, 0.0); table.n_points()];
    for (n, a) in alphas.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        for (f, phi) in field.iter_mut().zip(table.row(n)) {
            *f += a * phi;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_orthonormality_error(rule: &QuadratureRule, n_modes: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..n_modes {
            for n in 0..=m {
                let s: f64 = (0..rule.len())
                    .map(|k| rule.weights[k] * rule.table.get(m, k) * rule.table.get(n, k))
                    .sum();
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    #[test]
    fn ground_state_value_at_origin() {
        let t = hermite_functions(0, &[0.0]);
        assert!((t.get(0, 0) - 0.751_125_544_464_942_5).abs() < 1e-15);
        let t = hermite_functions(1, &[0.0]);
        assert_eq!(t.get(1, 0), 0.0);
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        // h_2 = (4x² − 2) e^{-x²/2} / sqrt(8 sqrt(pi)), h_3 = (8x³ − 12x) e^{-x²/2} / sqrt(48 sqrt(pi))
        let xs = [-2.3, -0.7, 0.0, 0.4, 1.9];
        let t = hermite_functions(3, &xs);
        for (k, &x) in xs.iter().enumerate() {
            let g = (-0.5 * x * x).exp();
            let h2 = (4.0 * x * x - 2.0) * g / (8.0 * PI.sqrt()).sqrt();
            let h3 = (8.0 * x * x * x - 12.0 * x) * g / (48.0 * PI.sqrt()).sqrt();
            assert!((t.get(2, k) - h2).abs() < 1e-14);
            assert!((t.get(3, k) - h3).abs() < 1e-14);
        }
    }

    #[test]
    fn no_overflow_for_large_index_and_argument() {
        let t = hermite_functions(10_000, &[0.0, 13.7, 50.0, -50.0]);
        for n in 0..t.n_modes() {
            for k in 0..t.n_points() {
                let v = t.get(n, k);
                assert!(v.is_finite() && v.abs() < 1.0, "h_{n} at point {k} = {v}");
            }
        }
        // Near the classical turning point of h_{10^4} the function is clearly nonzero.
        let t = hermite_functions(1250, &[50.0]);
        assert!(t.get(1250, 0).abs() > 1e-4);
    }

    #[test]
    fn gauss_hermite_small_orders() {
        let (z, l) = gauss_hermite(1);
        assert_eq!(z, vec![0.0]);
        // W = sqrt(pi), Λ = W e^0
        assert!((l[0] - PI.sqrt()).abs() < 1e-14);

        let (z, l) = gauss_hermite(2);
        let r = FRAC_1_SQRT_2;
        assert!((z[0] + r).abs() < 1e-14 && (z[1] - r).abs() < 1e-14);
        let w = PI.sqrt() / 2.0 * (0.5f64).exp();
        assert!((l[0] - w).abs() < 1e-13 && (l[1] - w).abs() < 1e-13);
    }

    #[test]
    fn gauss_hermite_integrates_gaussian_moments() {
        for order in [3, 10, 41, 200, 601] {
            let (z, l) = gauss_hermite(order);
            let m0: f64 = z.iter().zip(&l).map(|(z, l)| l * (-z * z).exp()).sum();
            let m2: f64 = z.iter().zip(&l).map(|(z, l)| l * z * z * (-z * z).exp()).sum();
            assert!((m0 - PI.sqrt()).abs() < 1e-12, "order {order}: {m0}");
            assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12, "order {order}: {m2}");
            assert!(z.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn x2_elements_from_ladder_algebra() {
        assert_eq!(x2_matrix_element(0, 0, 1.0), 0.5);
        assert!((x2_matrix_element(0, 2, 1.0) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(x2_matrix_element(2, 0, 1.0), x2_matrix_element(0, 2, 1.0));
        assert_eq!(x2_matrix_element(0, 1, 1.0), 0.0);
        assert_eq!(x2_matrix_element(3, 7, 2.0), 0.0);
        assert!((x2_matrix_element(4, 4, 2.0) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn basis_spec_validation() {
        assert!(BasisSpec::new(0.0, 3).is_err());
        assert!(BasisSpec::new(-1.0, 3).is_err());
        assert!(BasisSpec::new(1.0, 0).is_err());
        assert!(BasisSpec::new(f64::NAN, 3).is_err());
        assert!(BasisSpec::new(1.3, 1).is_ok());
    }

    #[test]
    fn minimal_grid_normalizes_ground_state() {
        let g = build_quadrature(BasisSpec::new(1.0, 1).unwrap(), 1.0).unwrap();
        assert_eq!(g.order, 3);
        let dens: Vec<f64> = g.overlap.table.row(0).iter().map(|p| p * p).collect();
        assert!((g.overlap.integrate(&dens) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_ground_state_integral_is_exact() {
        let exact = 1.0 / (2.0 * PI).sqrt();
        let mut values = Vec::new();
        for oversample in [1.0, 2.0] {
            let g = build_quadrature(BasisSpec::new(1.0, 10).unwrap(), oversample).unwrap();
            let q: Vec<f64> = g.interaction.table.row(0).iter().map(|p| p.powi(4)).collect();
            let v = g.interaction.integrate(&q);
            assert!((v - exact).abs() < 1e-10, "oversample {oversample}: {v}");
            values.push(v);
        }
        assert!((values[0] - values[1]).abs() < 1e-10);
    }

    #[test]
    fn quartic_integral_scales_with_omega() {
        // ∫ φ_0^4 in a basis of frequency ω is sqrt(ω / 2π).
        let g = build_quadrature(BasisSpec::new(1.7, 4).unwrap(), 1.0).unwrap();
        let q: Vec<f64> = g.interaction.table.row(0).iter().map(|p| p.powi(4)).collect();
        assert!((g.interaction.integrate(&q) - (1.7 / (2.0 * PI)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn overlap_rule_is_orthonormal() {
        for (omega, n_max) in [(1.0, 1), (1.0, 5), (1.3, 20), (0.8, 60), (2.5, 150)] {
            let g = build_quadrature(BasisSpec::new(omega, n_max).unwrap(), 1.0).unwrap();
            let err = max_orthonormality_error(&g.overlap, g.n_modes());
            assert!(err < 1e-10, "omega={omega} n_max={n_max}: {err:e}");
        }
    }

    #[test]
    fn orthogonality_of_modes_three_and_five() {
        let g = build_quadrature(BasisSpec::new(1.0, 5).unwrap(), 1.0).unwrap();
        let r = &g.overlap;
        let s: f64 = (0..r.len()).map(|k| r.weights[k] * r.table.get(3, k) * r.table.get(5, k)).sum();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn x2_elements_agree_with_quadrature() {
        for (omega, n_max) in [(1.0, 8), (1.3, 30), (0.7, 45)] {
            let g = build_quadrature(BasisSpec::new(omega, n_max).unwrap(), 1.0).unwrap();
            let r = &g.overlap;
            for n in 0..=n_max {
                for m in 0..=n_max {
                    let q: f64 = (0..r.len())
                        .map(|k| r.weights[k] * r.table.get(n, k) * r.nodes[k] * r.nodes[k] * r.table.get(m, k))
                        .sum();
                    let exact = x2_matrix_element(n, m, omega);
                    assert!((q - exact).abs() < 1e-9, "({n},{m}) omega={omega}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn order_cap_is_enforced() {
        let spec = BasisSpec::new(1.0, 100).unwrap();
        assert!(matches!(
            build_quadrature_capped(spec, 1.0, 150),
            Err(Error::QuadratureTooLarge { order: 201, cap: 150 })
        ));
        let g = build_quadrature(spec, 1.5).unwrap();
        assert_eq!(g.order, 302);
    }

    #[test]
    fn field_of_ground_mode() {
        let spec = BasisSpec::new(1.0, 4).unwrap();
        let amps = ModeAmplitudes::condensed(5, 1.0);
        let field = synthesize(amps.as_slice(), &spec.mode_table(&[0.0])).unwrap();
        assert!((field[0].re - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(field[0].im, 0.0);

        let zero = ModeAmplitudes::new(vec![Complex64::new(0.0, 0.0); 5], 0.0).unwrap();
        let g = build_quadrature(spec, 1.0).unwrap();
        assert!(field_at_points(&zero, &g.interaction).unwrap().iter().all(|f| f.norm() == 0.0));
    }

    #[test]
    fn field_norm_matches_particle_number() {
        let g = build_quadrature(BasisSpec::new(1.0, 12).unwrap(), 1.0).unwrap();
        let amps = ModeAmplitudes::condensed(13, 500.0);
        let field = field_at_points(&amps, &g.overlap).unwrap();
        let dens: Vec<f64> = field.iter().map(|f| f.norm_sqr()).collect();
        assert!((g.overlap.integrate(&dens) - 500.0).abs() < 5e-8);
    }

    #[test]
    fn field_dimension_mismatch() {
        let g = build_quadrature(BasisSpec::new(1.0, 3).unwrap(), 1.0).unwrap();
        let amps = ModeAmplitudes::condensed(3, 1.0);
        assert!(matches!(
            field_at_points(&amps, &g.interaction),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn amplitude_norm_is_checked() {
        let a = vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)];
        assert!(ModeAmplitudes::new(a.clone(), 25.0).is_ok());
        assert!(ModeAmplitudes::new(a, 25.001).is_err());
    }
}
