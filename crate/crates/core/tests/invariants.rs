//! Property tests of the structural invariants: randomized inputs, exact
//! claims.

use isi2d::analysis::measure_mi;
use isi2d::equalizer::{equalize_page, llr_to_stats, EqualizerWindow, Scheme};
use isi2d::grid::{
    add_awgn, convolve2d, sigma_to_snr, snr_to_sigma, NoiseSpec, PsfKernel, SymbolPage,
};
use isi2d::ldpc::LdpcCode;
use isi2d::llr::{LlrGrid, LLR_CLIP};
use isi2d::seed::derive_seed;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psf_energy_and_interference_fraction(s in 0.0f64..1.0) {
        let k = PsfKernel::make_psf(s).unwrap();
        prop_assert!((k.energy() - 1.0).abs() < 1e-12);
        let want = (s * s + s.powi(4)) / (1.0 + s * s + s.powi(4));
        prop_assert!((k.interference_energy().unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn snr_sigma_round_trip(snr in -20.0f64..20.0, rate in 0.1f64..1.0, s in 0.0f64..1.0) {
        let psf = PsfKernel::make_psf(s).unwrap();
        let sigma = snr_to_sigma(snr, &psf, Some(rate)).unwrap();
        let back = sigma_to_snr(sigma, &psf, Some(rate)).unwrap();
        prop_assert!((back - snr).abs() < 1e-9);
    }

    #[test]
    fn prior_stats_invariants(llrs in proptest::collection::vec(-60.0f64..60.0, 24)) {
        let grid = LlrGrid::from_values(4, 6, llrs).unwrap();
        let stats = llr_to_stats(&grid);
        for i in 0..4 {
            for j in 0..6 {
                let m = stats.mean_at(i as isize, j as isize);
                let v = stats.variance_at(i as isize, j as isize);
                prop_assert!(m.abs() <= 1.0);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!((v - (1.0 - m * m)).abs() < 1e-12);
            }
        }
        // Guard band.
        prop_assert_eq!(stats.mean_at(-1, 0), 0.0);
        prop_assert_eq!(stats.variance_at(-1, 0), 0.0);
    }

    #[test]
    fn window_column_sparsity(n_half in 0usize..4, s in 0.01f64..1.0) {
        let psf = PsfKernel::make_psf(s).unwrap();
        let w = EqualizerWindow::build(&psf, n_half);
        let obs = (2 * n_half + 1) * (2 * n_half + 1);
        for c in 0..w.sym_dim() {
            prop_assert!(w.h_col(c).len() <= obs);
        }
        let l = 3usize;
        let want = l.min(2 * n_half + 1).pow(2);
        prop_assert_eq!(w.h_col(w.target_sym()).len(), want);
    }

    #[test]
    fn equalizer_output_clipped(seed in 0u64..1000, sigma in 0.05f64..2.0) {
        let psf = PsfKernel::make_psf(0.4).unwrap();
        let window = EqualizerWindow::build(&psf, 1);
        let page = SymbolPage::random(8, 8, seed);
        let clean = convolve2d(&page, &psf);
        let noise = NoiseSpec { sigma_w: sigma, snr_db: 0.0, rate_adjusted: false };
        let rec = add_awgn(&clean, &noise, derive_seed(seed, &[1])).unwrap();
        let prior = LlrGrid::zeros(8, 8);
        for scheme in [Scheme::Exact, Scheme::Approx1, Scheme::Approx2] {
            let out = equalize_page(&rec, &prior, scheme, &window, sigma).unwrap();
            for &l in out.values() {
                prop_assert!(l.is_finite() && l.abs() <= LLR_CLIP);
            }
        }
    }

    #[test]
    fn decoder_extrinsic_clipped_and_seeded(seed in 0u64..500) {
        let code = LdpcCode::build_regular(60, 3, 6, seed).unwrap();
        let mut rng = isi2d::seed::rng_from_seed(derive_seed(seed, &[9]));
        let prior: Vec<f64> = (0..60).map(|_| rng.gen_range(-50.0f64..50.0)).collect();
        let (out, _) = code.decode_iterations(&prior, 4, None).unwrap();
        for &e in &out.extrinsic {
            prop_assert!(e.is_finite() && e.abs() <= LLR_CLIP);
        }
        // Same seed rebuilds the same graph.
        let again = LdpcCode::build_regular(60, 3, 6, seed).unwrap();
        prop_assert_eq!(code, again);
    }

    #[test]
    fn mi_estimator_bounds_and_relabeling(seed in 0u64..500, scale in 0.1f64..8.0) {
        let page = SymbolPage::random(40, 40, seed);
        let mut rng = isi2d::seed::rng_from_seed(derive_seed(seed, &[3]));
        let llrs: Vec<f64> = page
            .symbols()
            .iter()
            .map(|&x| f64::from(x) * scale + rng.gen_range(-2.0f64..2.0))
            .collect();
        let mi = measure_mi(&llrs, page.symbols()).unwrap();
        prop_assert!((0.0..=1.0).contains(&mi));
        let neg: Vec<f64> = llrs.iter().map(|l| -l).collect();
        let flipped: Vec<i8> = page.symbols().iter().map(|x| -x).collect();
        prop_assert_eq!(measure_mi(&neg, &flipped).unwrap(), mi);
    }

    #[test]
    fn seed_derivation_is_pure_and_sensitive(base in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_seed(base, &[a, b]), derive_seed(base, &[a, b]));
        if a != b {
            prop_assert_ne!(derive_seed(base, &[a]), derive_seed(base, &[b]));
        }
    }
}


