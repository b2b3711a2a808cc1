//! Independent reference values shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b].
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

/// Coefficients (ascending powers of x) of the first three trap
/// eigenfunctions without their common factor π^{-1/4} e^{-x²/2}.
fn hermite_poly(n: usize) -> Vec<f64> {
    match n {
        0 => vec![1.0],
        1 => vec![0.0, 2f64.sqrt()],
        2 => vec![-(0.5f64).sqrt(), 0.0, 2f64.sqrt()],
        _ => unreachable!(),
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// ∫ φ_a φ_b φ_c φ_d dx for the ω = 1 trap modes a..d ≤ 2, from the
/// Gaussian moments ∫ x^{2k} e^{-2x²} dx = (2k−1)!! / 4^k · √(π/2).
pub fn quartic_overlap(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = poly_mul(&poly_mul(&hermite_poly(a), &hermite_poly(b)), &poly_mul(&hermite_poly(c), &hermite_poly(d)));
    let mut s = 0.0;
    for (k, coef) in p.iter().enumerate() {
        if k % 2 == 1 {
            continue;
        }
        let half = k / 2;
        let dfact: f64 = (1..=half).map(|j| (2 * j - 1) as f64).product();
        s += coef * dfact / 4f64.powi(half as i32) * (PI / 2.0).sqrt();
    }
    s / PI
}

/// Three ω = 1 modes: E = Σ n|α_n|² + (g/2) ∫ |Ψ|⁴ with α_n = √u_n e^{i p_n}.
/// With p_0 = 0 the quartic term is a short cosine series in (p_1, p_2).
pub struct ThreeModeEnergy {
    g: f64,
    terms: Vec<([usize; 4], f64)>,
}

impl ThreeModeEnergy {
    pub fn new(g: f64) -> Self {
        let mut terms = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let o = quartic_overlap(a, b, c, d);
                        if o.abs() > 1e-15 {
                            terms.push(([a, b, c, d], o));
                        }
                    }
                }
            }
        }
        ThreeModeEnergy { g, terms }
    }

    /// Cosine series of the energy at occupations u: entries (k1, k2, c)
    /// meaning c·cos(k1 p_1 + k2 p_2).
    pub fn series(&self, u: [f64; 3]) -> Vec<(i32, i32, f64)> {
        let amp = [u[0].sqrt(), u[1].sqrt(), u[2].sqrt()];
        let mut out: Vec<(i32, i32, f64)> = vec![(0, 0, u[1] + 2.0 * u[2])];
        if self.g == 0.0 {
            return out;
        }
        for ([a, b, c, d], o) in &self.terms {
            let mut k = [0i32; 3];
            k[*a] -= 1;
            k[*b] -= 1;
            k[*c] += 1;
            k[*d] += 1;
            let coef = 0.5 * self.g * o * amp[*a] * amp[*b] * amp[*c] * amp[*d];
            match out.iter_mut().find(|e| e.0 == k[1] && e.1 == k[2]) {
                Some(e) => e.2 += coef,
                None => out.push((k[1], k[2], coef)),
            }
        }
        out
    }

    pub fn energy(&self, u: [f64; 3], p1: f64, p2: f64) -> f64 {
        self.series(u)
            .iter()
            .map(|(k1, k2, c)| c * (*k1 as f64 * p1 + *k2 as f64 * p2).cos())
            .sum()
    }
}

/// Mean and variance of |α_0|² under exp(−E/T) on Σ|α_n|² = N for three
/// ω = 1 modes. The uniform measure on the complex sphere is uniform on the
/// occupation simplex times uniform phases, and one phase is fixed by
/// global invariance.
pub struct SphereMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn three_mode_moments(n_total: f64, g: f64, t: f64, panels: usize, phases: usize) -> SphereMoments {
    let e = ThreeModeEnergy::new(g);
    let rule = composite_rule(0.0, 1.0, panels, 10);
    let ph: Vec<f64> = (0..phases).map(|k| TAU * k as f64 / phases as f64).collect();
    let e_ref = e.energy([n_total, 0.0, 0.0], 0.0, 0.0);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    // u1 = N s, u2 = (N − u1) r.
    for &(s, ws) in &rule {
        let u1 = n_total * s;
        let rest = n_total - u1;
        for &(r, wr) in &rule {
            let u2 = rest * r;
            let u0 = rest - u2;
            let series = e.series([u0, u1, u2]);
            let mut b = 0.0;
            for &p1 in &ph {
                for &p2 in &ph {
                    let en: f64 = series
                        .iter()
                        .map(|(k1, k2, c)| c * (*k1 as f64 * p1 + *k2 as f64 * p2).cos())
                        .sum();
                    b += (-(en - e_ref) / t).exp();
                }
            }
            let w = n_total * rest * ws * wr * b;
            z += w;
            m1 += w * u0;
            m2 += w * u0 * u0;
        }
    }
    let mean = m1 / z;
    SphereMoments {
        mean,
        variance: m2 / z - mean * mean,
    }
}
