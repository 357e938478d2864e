use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use oobeam::beamsel::{lw_omp_select, omp_select, WeightingConfig};
use oobeam::channel::{generate_clusters, q_sign, AngularDomain, BandSpec};
use oobeam::codebook::{beams_in_bin, random_codebook, select_correlated, structured_codebook, Ula};
use oobeam::frontend::{argmax, measure, ranked, BeamPair, NoiseModel};
use oobeam::harness::Coherence;
use oobeam::oob::{dominant_indices, prior_vector, scale_spectrum, PriorVector, SpatialSpectrum};
use oobeam::rng::seeded;

fn magnitudes(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.0f64..10.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_spans_zero_to_jp(mags in magnitudes(4, 4), j_p in 0.01f64..=1.0) {
        let max = mags.max();
        let min = mags.min();
        prop_assume!(max - min > 1e-9);
        let p = prior_vector(&mags, j_p).unwrap();
        let lo = p.p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(lo, 0.0);
        prop_assert!((hi - j_p).abs() < 1e-12);
        prop_assert!(p.p.iter().all(|&v| (0.0..=j_p + 1e-12).contains(&v)));
    }

    #[test]
    fn prior_argmax_is_the_spectrum_peak(mags in magnitudes(4, 4)) {
        let flat: Vec<f64> = mags.iter().copied().collect();
        let p = prior_vector(&mags, 1.0).unwrap();
        prop_assume!(mags.max() > mags.min());
        prop_assert_eq!(argmax(&p.p), argmax(&flat));
    }

    #[test]
    fn dominant_bin_ignores_positive_scaling(mags in magnitudes(4, 4), c in 1e-3f64..1e3) {
        let a = dominant_indices(&SpatialSpectrum::new(mags.clone()));
        let b = dominant_indices(&SpatialSpectrum::new(mags * c));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scaled_spectrum_is_nonnegative(mags in magnitudes(4, 4)) {
        let s = scale_spectrum(&SpatialSpectrum::new(mags), (32, 32)).unwrap();
        prop_assert_eq!(s.shape(), (32, 32));
        prop_assert!(s.iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn codewords_have_constant_modulus(m in 1usize..40, n in 1usize..20, bits in 1u32..8, seed: u64) {
        let cb = random_codebook(&Ula::half_wave(m), n, bits, &mut seeded(seed)).unwrap();
        let want = 1.0 / (m as f64).sqrt();
        prop_assert!(cb.matrix.iter().all(|z| (z.norm() - want).abs() < 1e-12));
        let step = 2.0 * std::f64::consts::PI / f64::from(1u32 << bits);
        for z in cb.matrix.iter() {
            let k = z.arg().rem_euclid(2.0 * std::f64::consts::PI) / step;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn structured_selection_is_repeatable(bin in 0usize..4, n in 1usize..16, seed: u64) {
        let ula = Ula::half_wave(32);
        let a = structured_codebook(&ula, bin, 4, n, 64, 5, &mut seeded(seed)).unwrap();
        let b = structured_codebook(&ula, bin, 4, n, 64, 5, &mut seeded(seed)).unwrap();
        prop_assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn full_super_codebook_is_kept(n in 1usize..12, seed: u64) {
        let ula = Ula::half_wave(16);
        let sup = random_codebook(&ula, n, 5, &mut seeded(seed)).unwrap();
        let dict = DMatrix::from_fn(16, 2, |i, j| Complex64::from_polar(0.25, 0.3 * (i * (j + 1)) as f64));
        prop_assert_eq!(select_correlated(&sup.matrix, &dict, n), (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn bins_partition_the_large_grid(m_small in 1usize..9, factor in 1usize..9) {
        let m_large = m_small * factor;
        let mut all: Vec<usize> = (0..m_small).flat_map(|b| beams_in_bin(m_large, m_small, b)).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..m_large).collect::<Vec<_>>());
        for b in 0..m_small {
            prop_assert_eq!(beams_in_bin(m_large, m_small, b).len(), factor);
        }
    }

    #[test]
    fn flat_index_round_trips(rx in 0usize..64, tx in 0usize..64, m_rx in 64usize..100) {
        let p = BeamPair { rx, tx };
        prop_assert_eq!(BeamPair::from_flat(p.flat(m_rx), m_rx), p);
    }

    #[test]
    fn ranking_is_a_descending_permutation(v in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        let order = ranked(&v);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..v.len()).collect::<Vec<_>>());
        prop_assert!(order.windows(2).all(|w| v[w[0]] >= v[w[1]]));
        prop_assert_eq!(order[0], argmax(&v));
    }

    #[test]
    fn coherence_efficiency_in_unit_interval(n in 0usize..10_000, tc in 1.0f64..10_000.0) {
        let e = Coherence::Blocks(tc).efficiency(n);
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(Coherence::Infinite.efficiency(n), 1.0);
    }

    #[test]
    fn q_sign_points_inward(x in 0.0f64..1.0, w in 0.0f64..2.0, seed: u64) {
        let s = q_sign(x, w, 0.0, 1.0, &mut seeded(seed));
        prop_assert!(s == 1.0 || s == -1.0);
        if x - w < 0.0 {
            prop_assert_eq!(s, 1.0);
        } else if x + w > 1.0 {
            prop_assert_eq!(s, -1.0);
        }
    }

    #[test]
    fn clusters_stay_in_range(seed: u64) {
        let (a, b) = (BandSpec::sub6_default(), BandSpec::mmwave_default());
        let d = generate_clusters(&a, &b, AngularDomain::Half, &mut seeded(seed)).unwrap();
        let half = std::f64::consts::FRAC_PI_2;
        for (spec, cl) in [(&a, &d.a), (&b, &d.b)] {
            prop_assert_eq!(cl.len(), spec.n_clusters);
            for c in cl.iter() {
                prop_assert!((0.0..=spec.tau_max).contains(&c.tau));
                prop_assert!((-half..half).contains(&c.aoa));
                prop_assert!((-half..half).contains(&c.aod));
            }
        }
        prop_assert!(d.shared.iter().all(|&i| i < a.n_clusters.min(b.n_clusters)));
    }

    #[test]
    fn tiny_weight_keeps_omp_choice(seed: u64) {
        let mut rng = seeded(seed);
        let ula = Ula::half_wave(8);
        let h = DMatrix::from_fn(8, 8, |i, j| Complex64::from_polar(1.0, (i * 3 + j * 5) as f64 * 0.37));
        let f = random_codebook(&ula, 4, 5, &mut rng).unwrap();
        let q = random_codebook(&ula, 4, 5, &mut rng).unwrap();
        let ms = measure(&[h], &f, &q, &NoiseModel::new(0.1), &[0], 1.0, &mut rng).unwrap();
        let scores = omp_select(&ms, 0).unwrap().scores;
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(sorted[0] - sorted[1] > 1e-6);
        let prior = PriorVector { p: (0..64).map(|r| (r as f64 * 0.618).fract()).collect(), j_p: 1.0 };
        let lw = lw_omp_select(&ms, 0, &prior, &WeightingConfig::fixed(1e-12)).unwrap();
        prop_assert_eq!(lw.pair, omp_select(&ms, 0).unwrap().pair);
    }
}
