use dyadic_lab::approx::{best_dyadic_2d, check_b2, check_b4};
use dyadic_lab::dyadic::{group_add, tau, tau_index, BitPoint, GridFunction1D, GridFunction2D};
use dyadic_lab::harness::{execute, ExperimentConfig};
use dyadic_lab::kernels::{dirichlet, glukhov_integral};
use dyadic_lab::reference::{self, best_constant_error, dirichlet_direct};
use dyadic_lab::spectral::{analyze_1d, analyze_2d, diagonal_sums, partial_sum_2d, synthesize_1d, synthesize_2d};
use dyadic_lab::strong::{strong_exp_mean, strong_p_mean_block, SweepConfig};
use dyadic_lab::walsh::{kaczmarz_to_paley_index, walsh_function};
use dyadic_lab::WalshSystem;
use proptest::prelude::*;

fn system() -> impl Strategy<Value = WalshSystem> {
    prop_oneof![Just(WalshSystem::Paley), Just(WalshSystem::Kaczmarz)]
}

fn point(resolution: u32) -> impl Strategy<Value = BitPoint> {
    (0..1usize << resolution).prop_map(move |i| BitPoint::from_index(i, resolution).unwrap())
}

fn grid_1d(max_resolution: u32) -> impl Strategy<Value = GridFunction1D> {
    (1..=max_resolution).prop_flat_map(|r| {
        prop::collection::vec(-8i32..=8, 1usize << r)
            .prop_map(move |v| GridFunction1D::new(r, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn grid_2d(max_resolution: u32) -> impl Strategy<Value = GridFunction2D> {
    (1..=max_resolution).prop_flat_map(|r| {
        prop::collection::vec(-8i32..=8, 1usize << (2 * r))
            .prop_map(move |v| GridFunction2D::new(r, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn float_grid_2d(resolution: u32) -> impl Strategy<Value = GridFunction2D> {
    prop::collection::vec(-1.0f64..1.0, 1usize << (2 * resolution))
        .prop_map(move |v| GridFunction2D::new(resolution, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_law(r in 1u32..=40, seeds in prop::array::uniform3(any::<u64>())) {
        let mask = (1u64 << r) - 1;
        let [x, y, z] = seeds.map(|s| BitPoint::from_index((s & mask) as usize, r).unwrap());
        let zero = BitPoint::zero(r).unwrap();
        prop_assert_eq!(group_add(x, y).unwrap(), group_add(y, x).unwrap());
        prop_assert_eq!(
            group_add(group_add(x, y).unwrap(), z).unwrap(),
            group_add(x, group_add(y, z).unwrap()).unwrap()
        );
        prop_assert_eq!(group_add(x, x).unwrap(), zero);
    }

    #[test]
    fn index_bits_roundtrip_and_intervals_nest(r in 1u32..=12, i in any::<usize>()) {
        let x = BitPoint::from_index(i % (1usize << r), r).unwrap();
        prop_assert_eq!(BitPoint::from_bits(&x.bits()).unwrap(), x);
        for n in 0..r {
            let outer = x.interval_range(n).unwrap();
            let inner = x.interval_range(n + 1).unwrap();
            prop_assert!(outer.start <= inner.start && inner.end <= outer.end);
            prop_assert_eq!(inner.len() * 2, outer.len());
            prop_assert!(inner.contains(&x.index()));
        }
    }

    #[test]
    fn tau_is_a_measure_preserving_involution(f in grid_1d(10), a_frac in 0.0f64..=1.0) {
        let r = f.resolution();
        let a = (a_frac * r as f64) as u32;
        let mut seen = vec![false; 1 << r];
        for i in 0..1usize << r {
            let j = tau_index(a, i, r);
            prop_assert!(!seen[j]);
            seen[j] = true;
            prop_assert_eq!(tau_index(a, j, r), i);
            let x = BitPoint::from_index(i, r).unwrap();
            prop_assert_eq!(tau(a, x).unwrap().index(), j);
        }
        prop_assert_eq!(f.compose_tau(a).unwrap().integrate(), f.integrate());
    }

    #[test]
    fn characters_are_orthonormal(sys in system(), r in 1u32..=8, n in any::<u64>(), m in any::<u64>()) {
        let (n, m) = (n % (1 << r), m % (1 << r));
        let a = walsh_function(sys, n, r).unwrap();
        let b = walsh_function(sys, m, r).unwrap();
        let ip = a.zip_with(&b, |x, y| x * y).unwrap().integrate();
        prop_assert_eq!(ip, if n == m { 1.0 } else { 0.0 });
    }

    #[test]
    fn kaczmarz_forms_agree(x in point(12), n in 0u64..4096) {
        prop_assert_eq!(
            reference::walsh_kaczmarz_product(n, &x),
            reference::walsh_kaczmarz_tau(n, &x)
        );
        prop_assert_eq!(
            i64::from(dyadic_lab::walsh::walsh_kaczmarz(n, x).unwrap()),
            reference::walsh_paley_product(kaczmarz_to_paley_index(n), &x)
        );
    }

    #[test]
    fn rearrangement_is_blockwise_involution(n in 1u64..(1 << 40)) {
        let p = kaczmarz_to_paley_index(n);
        prop_assert_eq!(kaczmarz_to_paley_index(p), n);
        prop_assert_eq!(63 - p.leading_zeros(), 63 - n.leading_zeros());
    }

    #[test]
    fn product_characters_are_outer_products(sys in system(), n in 0u64..16, m in 0u64..16) {
        let f = GridFunction2D::separable(&walsh_function(sys, n, 4).unwrap(), &walsh_function(sys, m, 4).unwrap()).unwrap();
        let s = analyze_2d(&f, sys).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let expected = if (a as u64, b as u64) == (n, m) { 1.0 } else { 0.0 };
                prop_assert_eq!(s.at(a, b), expected);
            }
        }
    }

    #[test]
    fn kernels_are_integer_bounded_and_match_direct_sums(sys in system(), r in 1u32..=9, n in any::<u64>()) {
        let n = n % ((1 << r) + 1);
        let k = dirichlet(sys, n, r).unwrap();
        let direct = dirichlet_direct(sys, n, r);
        prop_assert_eq!(k.values(), direct.as_slice());
        prop_assert!(k.values().iter().all(|v| v.unsigned_abs() <= n));
    }

    #[test]
    fn integer_round_trip_is_exact(f in grid_1d(10), sys in system()) {
        let s = analyze_1d(&f, sys).unwrap();
        prop_assert_eq!(synthesize_1d(&s).unwrap(), f.clone());
        let energy = f.values().iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
        prop_assert!((s.sum_of_squares() - energy).abs() <= energy * 2f64.powi(-40));
    }

    #[test]
    fn integer_round_trip_2d_is_exact(f in grid_2d(5), sys in system()) {
        let s = analyze_2d(&f, sys).unwrap();
        prop_assert_eq!(synthesize_2d(&s).unwrap(), f.clone());
        let other = if sys == WalshSystem::Paley { WalshSystem::Kaczmarz } else { WalshSystem::Paley };
        prop_assert_eq!(s.reorder(other).reorder(sys), s);
    }

    #[test]
    fn partial_sums_are_projections(f in float_grid_2d(4), sys in system(), n in 0u64..=16, m in 0u64..=16) {
        let once = partial_sum_2d(&f, n, m, sys).unwrap();
        let twice = partial_sum_2d(&once, n, m, sys).unwrap();
        prop_assert!(once.max_abs_diff(&twice).unwrap() <= 1e-12);
    }

    #[test]
    fn diagonal_path_matches_truncation(f in float_grid_2d(4), sys in system()) {
        let mut sums = diagonal_sums(&f, 16, sys).unwrap();
        while let Some((l, sll)) = sums.advance() {
            let direct = partial_sum_2d(&f, l as u64, l as u64, sys).unwrap();
            prop_assert!(sll.max_abs_diff(&direct).unwrap() <= 1e-12, "l = {}", l);
        }
    }

    #[test]
    fn exp_means_are_monotone_in_the_exponent(f in float_grid_2d(4), a1 in 0.1f64..3.0, da in 0.0f64..3.0, n in 1u64..=16) {
        let (lo, _) = strong_exp_mean(&f, a1, n, WalshSystem::Kaczmarz).unwrap();
        let (hi, _) = strong_exp_mean(&f, a1 + da, n, WalshSystem::Kaczmarz).unwrap();
        prop_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
    }

    #[test]
    fn block_p_means_increase_with_p(f in float_grid_2d(4), block in 0u32..4) {
        let rows = strong_p_mean_block(&f, &[1.0, 2.0, 3.0, 4.0, 8.0], block, &SweepConfig::default()).unwrap();
        prop_assert!(rows.windows(2).all(|w| w[0].sup <= w[1].sup * (1.0 + 1e-12)));
    }

    #[test]
    fn best_approximation_is_the_oscillation(f in float_grid_2d(4), level in 0u32..=4) {
        let side = f.side();
        let block = side >> level;
        let mut brute: f64 = 0.0;
        for bx in 0..1usize << level {
            for by in 0..1usize << level {
                let vals: Vec<f64> = (0..block * block)
                    .map(|k| f.at(bx * block + k / block, by * block + k % block))
                    .collect();
                brute = brute.max(best_constant_error(&vals));
            }
        }
        prop_assert!((best_dyadic_2d(&f, level).unwrap() - brute).abs() <= 1e-12);
        let (l4, r4) = check_b4(&f, level).unwrap();
        prop_assert!(l4 <= r4);
        let (l2, r2) = check_b2(&f, level).unwrap();
        prop_assert!(l2 <= r2);
    }

    #[test]
    fn best_approximation_vanishes_exactly_on_step_functions(level in 0u32..=4, vals in prop::collection::vec(-5i32..5, 256)) {
        let shift = 4 - level;
        let f = GridFunction2D::from_fn(4, |x, y| {
            let k = ((x.index() >> shift) << level) | (y.index() >> shift);
            f64::from(vals[k])
        }).unwrap();
        prop_assert_eq!(best_dyadic_2d(&f, level).unwrap(), 0.0);
        if level > 0 {
            let coarse = best_dyadic_2d(&f, level - 1).unwrap();
            let is_coarse_step = (0..1usize << (2 * level)).all(|k| {
                let (bx, by) = (k >> level, k & ((1 << level) - 1));
                vals[k] == vals[(((bx >> 1) << 1) << level) | ((by >> 1) << 1)]
            });
            prop_assert_eq!(coarse == 0.0, is_coarse_step);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn same_config_same_bytes(seed in any::<u64>(), resolution in 3u32..=5) {
        let cfg = ExperimentConfig::from_pairs([
            "experiment=strong-means".to_string(),
            format!("seed={seed}"),
            format!("resolution={resolution}"),
            "n=8".to_string(),
        ].iter().map(String::as_str)).unwrap();
        prop_assert_eq!(execute(&cfg).unwrap(), execute(&cfg).unwrap());
    }
}

#[test]
fn kernel_products_stay_bounded_in_n() {
    for sys in WalshSystem::ALL {
        for p in 1..=2u32 {
            let values: Vec<f64> = (1..=8).map(|n| glukhov_integral(p, n, sys).unwrap().value()).collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "{sys} p={p}: {values:?}");
            let limit = 2f64.powi(p as i32) * (1..=p).product::<u32>() as f64;
            assert!(values.iter().all(|&v| v <= limit), "{sys} p={p}: {values:?}");
        }
    }
}

#[test]
fn constant_fields_have_vanishing_exp_means() {
    let f = GridFunction2D::constant(5, -0.375).unwrap();
    for n in 1..=32 {
        let (mean, sample) = strong_exp_mean(&f, 2.0, n, WalshSystem::Kaczmarz).unwrap();
        assert!(mean.iter().all(|&v| v == 0.0));
        assert_eq!(sample.sup, 0.0);
    }
}
