use std::sync::Arc;

use duets::domain::{ActiveRegion, GridDomain};
use duets::experiment::ExperimentConfig;
use duets::gp::GpPosterior;
use duets::kernels::{kernel_matrix, KernelFamily, KernelSpec, Points};
use duets::protocol::{build_inducing_set, epoch_count_bound, CommEncoding, CommLedger, EpochSchedule};
use duets::rng;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![
        Just(KernelFamily::SquaredExponential),
        Just(KernelFamily::Matern12),
        Just(KernelFamily::Matern32),
        Just(KernelFamily::Matern52),
    ]
}

fn points(max: usize, d: usize) -> impl Strategy<Value = Points> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 1..max)
        .prop_map(|rows| Points::from_rows(&rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_bounded(f in family(), l in 0.05f64..3.0, s in 0.1f64..5.0,
                                       x in prop::collection::vec(-2.0f64..2.0, 3),
                                       y in prop::collection::vec(-2.0f64..2.0, 3)) {
        let k = KernelSpec::new(f, l, s).unwrap();
        let a = k.eval(&x, &y).unwrap();
        prop_assert_eq!(a, k.eval(&y, &x).unwrap());
        prop_assert!(a > 0.0 && a <= s * (1.0 + 1e-12));
        prop_assert!((k.eval(&x, &x).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn kernel_matrix_is_psd(f in family(), l in 0.05f64..2.0, pts in points(30, 2)) {
        let k = KernelSpec::new(f, l, 1.0).unwrap();
        let m = kernel_matrix(&k, &pts);
        let min = m.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-9 * pts.len() as f64);
    }

    #[test]
    fn posterior_variance_is_within_prior(l in 0.05f64..2.0, lambda in 1e-3f64..2.0,
                                          pts in points(25, 2), q in prop::collection::vec(0.0f64..1.0, 2)) {
        let k = KernelSpec::se(l).unwrap();
        let y = vec![0.3; pts.len()];
        let p = GpPosterior::variance_only(k, &pts, lambda).unwrap().predict(&q).unwrap();
        prop_assert!(p.variance >= 0.0 && p.variance <= k.diag());
        let fewer = pts.select(&(0..pts.len() / 2).collect::<Vec<_>>());
        let p_less = GpPosterior::new(k, &fewer, &y[..fewer.len()], lambda).unwrap().predict(&q).unwrap();
        prop_assert!(p.variance <= p_less.variance + 1e-9);
    }

    #[test]
    fn schedule_covers_horizon(t in 1usize..20_000, frac in 0.0f64..1.0, n in 1usize..200) {
        let t1 = ((t as f64 * frac) as usize).clamp(1, t);
        let s = EpochSchedule::new(t, t1).unwrap();
        prop_assert_eq!(s.lengths().iter().sum::<usize>(), t);
        prop_assert_eq!(s.lengths()[0], t1);
        prop_assert!(s.lengths().iter().all(|&l| l >= 1));
        if t1 >= t.div_ceil(n) {
            prop_assert!((s.epochs() as f64) <= epoch_count_bound(n, t));
        }
    }

    #[test]
    fn trimming_is_nested_and_keeps_the_best(vals in prop::collection::vec(-5.0f64..5.0, 30),
                                             beta in 0.0f64..3.0, sigma in 0.0f64..1.0) {
        let grid = Arc::new(GridDomain::boxed(&[0.0], &[1.0], 30).unwrap());
        let full = ActiveRegion::full(grid);
        let next = full.trim_with(&vals, beta, sigma).unwrap();
        prop_assert!(next.is_subset_of(&full));
        prop_assert_eq!(next.epoch(), 2);
        let (best, _) = full.sup_of(&vals).unwrap();
        prop_assert!(next.contains(best));
        let after: Vec<f64> = next.indices().iter().map(|&i| vals[i]).collect();
        let again = next.trim_with(&after, beta, sigma).unwrap();
        prop_assert!(again.is_subset_of(&next));
    }

    #[test]
    fn sampling_stays_in_region(mask in prop::collection::vec(any::<bool>(), 40), seed in any::<u64>()) {
        prop_assume!(mask.iter().any(|&b| b));
        let grid = Arc::new(GridDomain::boxed(&[0.0, 0.0], &[1.0, 1.0], 5).unwrap());
        let mut m = mask.clone();
        m.truncate(25);
        prop_assume!(m.iter().any(|&b| b));
        let region = ActiveRegion::from_mask(grid, m, 2).unwrap();
        let mut r = rng::seeded(seed);
        let draws = region.uniform_sample(&mut r, 200);
        prop_assert!(draws.iter().all(|&i| region.contains(i)));
    }

    #[test]
    fn inducing_set_is_an_ordered_subset(n in 0usize..300, sigma in 0.0f64..1.0, p0 in 0.1f64..50.0, seed in any::<u64>()) {
        let q: Vec<usize> = (0..n).map(|i| i * 3).collect();
        let mut r = rng::seeded(seed);
        let s = build_inducing_set(&q, sigma, p0, &mut r);
        prop_assert!(s.len() <= n);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|x| x % 3 == 0));
    }

    #[test]
    fn ledger_conserves_totals(epochs in prop::collection::vec((0usize..50, 1usize..12), 0..8), agents in 1usize..6) {
        let mut l = CommLedger::new(agents);
        let mut down = 0u64;
        for (j, &(s, d)) in epochs.iter().enumerate() {
            l.begin_epoch(j + 1);
            let b = CommEncoding::Points.inducing_broadcast(s, d);
            l.record_downlink(b).unwrap();
            for n in 0..agents {
                l.record_uplink(n, s as u64).unwrap();
            }
            l.record_downlink(s as u64).unwrap();
            down += b + s as u64;
        }
        let t = l.totals();
        prop_assert_eq!(t.downlink, down as f64);
        let sum: f64 = l.epochs().iter().map(|e| e.total()).sum();
        prop_assert!((t.total - sum).abs() < 1e-9);
    }

    #[test]
    fn config_text_round_trips(agents in 1usize..100, horizon in 1usize..500, p0 in 0.1f64..100.0,
                               noise in 0.0f64..1.0, seed in any::<u64>(), mc in 1usize..10) {
        let cfg = ExperimentConfig { agents, horizon, first_epoch: 1, p0, noise_std: noise, seed, mc, ..Default::default() };
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
