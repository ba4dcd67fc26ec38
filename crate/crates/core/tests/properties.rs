use l1drift::l1_estimator::{g_delta, l1_objective};
use l1drift::limit_law::{weighted_median, zeta_from_instance, LimitInstance};
use l1drift::sampler::{sample_path, stieltjes_integral, SeedSpec};
use l1drift::{Kernel, SamplePath, TimeGrid};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.05f64..0.99).prop_map(|h| Kernel::fbm(h).unwrap()),
        (0.05f64..0.99).prop_map(|h| Kernel::subfbm(h).unwrap()),
        ((0.05f64..0.99), (0.05f64..1.0)).prop_map(|(h, k)| Kernel::bifbm(h, k).unwrap()),
        Just(Kernel::bm()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_symmetric_with_nonnegative_variance(k in kernel_strategy(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let a = k.eval(s, t, 2.0).unwrap();
        let b = k.eval(t, s, 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        prop_assert!(k.eval(s, s, 2.0).unwrap() >= 0.0);
        prop_assert!(a * a <= k.eval(s, s, 2.0).unwrap() * k.eval(t, t, 2.0).unwrap() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn stieltjes_is_linear_in_the_integrand(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = TimeGrid::unit(64).unwrap();
        let path = sample_path(&Kernel::fbm(0.7).unwrap(), &g, SeedSpec::new(seed, 0)).unwrap();
        let f = SamplePath::from_fn(g, |t| (-t).exp());
        let h = SamplePath::from_fn(g, |t| t * t);
        let combo = f.combine(a, &h, b).unwrap();
        let lhs = stieltjes_integral(&combo, &path).unwrap();
        let rhs = a * stieltjes_integral(&f, &path).unwrap() + b * stieltjes_integral(&h, &path).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn zeta_scales_with_the_limit_process(seed in 0u64..1000, c in 0.01f64..100.0, theta0 in -2.0f64..2.0) {
        let g = TimeGrid::unit(64).unwrap();
        let y = sample_path(&Kernel::fbm(0.7).unwrap(), &g, SeedSpec::new(seed, 1)).unwrap();
        let scaled = SamplePath::new(g, y.values().iter().map(|v| c * v).collect()).unwrap();
        let z = zeta_from_instance(&LimitInstance::new(y, theta0, 1.0)).unwrap();
        let zc = zeta_from_instance(&LimitInstance::new(scaled, theta0, 1.0)).unwrap();
        prop_assert!((zc - c * z).abs() <= 1e-12 * (1.0 + (c * z).abs()));
    }

    #[test]
    fn weighted_median_is_homogeneous_and_translation_equivariant(
        pairs in prop::collection::vec((-10.0f64..10.0, 0.01f64..5.0), 1..40),
        c in 0.1f64..10.0,
        shift in -5.0f64..5.0,
        wscale in 0.1f64..10.0,
    ) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = weighted_median(&v, &w).unwrap();
        prop_assert!(v.contains(&m));
        let scaled: Vec<f64> = v.iter().map(|x| c * x + shift).collect();
        let ws: Vec<f64> = w.iter().map(|x| wscale * x).collect();
        let ms = weighted_median(&scaled, &ws).unwrap();
        prop_assert!((ms - (c * m + shift)).abs() <= 1e-9);
        let obj = |u: f64| v.iter().zip(&w).map(|(a, b)| b * (a - u).abs()).sum::<f64>();
        for other in &v {
            prop_assert!(obj(m) <= obj(*other) + 1e-9);
        }
    }

    #[test]
    fn objective_is_nonnegative(seed in 0u64..1000, theta in -3.0f64..3.0) {
        let g = TimeGrid::unit(32).unwrap();
        let x = sample_path(&Kernel::bm(), &g, SeedSpec::new(seed, 2)).unwrap();
        prop_assert!(l1_objective(&x, theta, 1.0) >= 0.0);
    }

    #[test]
    fn g_delta_is_strictly_increasing(theta0 in -2.0f64..2.0, x0 in 0.1f64..3.0, d1 in 0.01f64..2.0, d2 in 0.01f64..2.0) {
        prop_assume!((d1 - d2).abs() > 1e-6);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(g_delta(theta0, x0, lo, 1.0).unwrap() < g_delta(theta0, x0, hi, 1.0).unwrap());
        prop_assert_eq!(g_delta(theta0, x0, lo, 1.0).unwrap(), g_delta(theta0, -x0, lo, 1.0).unwrap());
    }
}
