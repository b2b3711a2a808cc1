use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use bosecf::basis::{build_quadrature, BasisSpec, ModeAmplitudes};
use bosecf::energy::{total_energy, EnergyModel, FieldCache, TwoModeUpdate};
use bosecf::observables::{fwhm, DensityMatrixAccumulator};
use bosecf::sampler::PairRotation;

fn amplitudes(n_modes: usize) -> impl Strategy<Value = ModeAmplitudes> {
    prop::collection::vec((0.01f64..10.0, 0.0f64..std::f64::consts::TAU), n_modes).prop_map(|v| {
        let raw: Vec<Complex64> = v.iter().map(|(r, p)| Complex64::from_polar(*r, *p)).collect();
        let s = (500.0 / raw.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt();
        ModeAmplitudes::new(raw.iter().map(|a| a * s).collect(), 500.0).unwrap()
    })
}

fn rotation(n_modes: usize) -> impl Strategy<Value = PairRotation> {
    (0..n_modes, 1..n_modes, -3.0f64..3.0, 0.0f64..6.28, -3.0f64..3.0).prop_map(move |(i, d, theta, chi, eta)| PairRotation {
        i,
        j: (i + d) % n_modes,
        theta,
        chi,
        eta,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_phase_and_parity_invariant(a in amplitudes(8), phase in 0.0f64..6.28, omega in 0.6f64..3.0, g in -0.02f64..0.02) {
        let grid = build_quadrature(BasisSpec::new(omega, 7).unwrap(), 1.0).unwrap();
        let e = total_energy(&a, &grid, g).unwrap().total;
        let e_phase = total_energy(&a.with_global_phase(phase), &grid, g).unwrap().total;
        let flipped: Vec<Complex64> = a.as_slice().iter().enumerate().map(|(n, x)| if n % 2 == 1 { -x } else { *x }).collect();
        let e_parity = total_energy(&ModeAmplitudes::new(flipped, 500.0).unwrap(), &grid, g).unwrap().total;
        prop_assert!((e - e_phase).abs() <= 1e-10 * e.abs().max(1.0));
        prop_assert!((e - e_parity).abs() <= 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn rotations_conserve_norm_and_track_energy(a in amplitudes(10), moves in prop::collection::vec(rotation(10), 1..40)) {
        let grid = Arc::new(build_quadrature(BasisSpec::new(1.4, 9).unwrap(), 1.0).unwrap());
        let model = EnergyModel::new(grid.clone(), -0.008);
        let mut amps = a.clone();
        let mut cache = FieldCache::new(&model, &amps).unwrap();
        for mv in &moves {
            let s = amps.as_slice();
            let (new_i, new_j) = mv.apply(s[mv.i], s[mv.j]);
            let update = TwoModeUpdate { i: mv.i, j: mv.j, new_i, new_j };
            let e = cache.energy_delta(&model, &amps, &update);
            cache.commit(&mut amps, &update, e);
        }
        prop_assert!((amps.norm_sqr() - 500.0).abs() <= 1e-10 * 500.0);
        let full = total_energy(&amps, &grid, -0.008).unwrap().total;
        prop_assert!((cache.energy().total - full).abs() <= 1e-9 * full.abs().max(1.0));
    }

    #[test]
    fn rotation_inverse_restores(ai in (-20.0f64..20.0, -20.0f64..20.0), aj in (-20.0f64..20.0, -20.0f64..20.0), mv in rotation(2)) {
        let (ai, aj) = (Complex64::new(ai.0, ai.1), Complex64::new(aj.0, aj.1));
        let (bi, bj) = mv.apply(ai, aj);
        let (ci, cj) = mv.inverse().apply(bi, bj);
        prop_assert!((ci - ai).norm() < 1e-12 && (cj - aj).norm() < 1e-12);
    }

    #[test]
    fn accumulator_merge_is_order_free(samples in prop::collection::vec(amplitudes(4), 3..12), cut in 1usize..3) {
        let cut = cut.min(samples.len() - 1);
        let feed = |s: &[ModeAmplitudes]| {
            let mut acc = DensityMatrixAccumulator::new(4);
            for x in s {
                acc.accumulate(x).unwrap();
            }
            acc
        };
        let whole = feed(&samples).finalize().unwrap();
        let (a, b) = (feed(&samples[..cut]), feed(&samples[cut..]));
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        let ba = ba.finalize().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((whole.get(i, j) - ba.get(i, j)).norm() <= 1e-12 * 500.0);
            }
        }
    }

    #[test]
    fn fwhm_scales_with_width(sigma in 0.2f64..2.0, height in 0.1f64..100.0) {
        let x: Vec<f64> = (-1000..=1000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|x| height * (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let w = fwhm(&x, &y).unwrap();
        prop_assert!((w - 2.0 * sigma * (2.0 * 2f64.ln()).sqrt()).abs() < 1e-3);
    }
}
