use proptest::prelude::*;
use weightlab::experiments::fit_slope;
use weightlab::geometry::{decimal_to_units, units_to_decimal, Cube, DyadicGrid, Point};
use weightlab::haar::HaarBasis;
use weightlab::kernels::{tangent_psi, tangent_s};
use weightlab::measures::{random_uniform, AtomicMeasure};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decimal_units_round_trip(u in -(1i64 << 40)..(1i64 << 40)) {
        prop_assert_eq!(decimal_to_units(&units_to_decimal(u)).unwrap(), u);
    }

    #[test]
    fn children_partition_parent(x in 0i64..(1 << 24), y in 0i64..(1 << 24), level in 0i32..20) {
        let g = DyadicGrid::standard(2, 22, 0).unwrap();
        let p = Point::from_units(&[x, y]).unwrap();
        let q = g.cube_containing(&p, level);
        prop_assert!(q.contains(&p));
        let hits = q.children().iter().filter(|c| c.contains(&p)).count();
        prop_assert_eq!(hits, 1);
        prop_assert!(g.ancestor(&g.cube_containing(&p, level + 2), level) == q);
    }

    #[test]
    fn translated_grids_nest(gx in 0i64..1024, level in 0i32..10, x in -(1i64 << 25)..(1i64 << 25)) {
        let step = 1i64 << 14;
        let g = DyadicGrid::from_translation(&[gx * step], 10, 0).unwrap();
        let fine = g.cube_at(&[x], level + 1);
        let coarse = g.cube_at(&[x], level);
        prop_assert!(coarse.contains_cube(&fine));
        prop_assert!(g.contains_cube(&coarse));
    }

    #[test]
    fn measure_json_round_trip(n in 1usize..=3, count in 1usize..40, seed in any::<u64>()) {
        let mu = random_uniform(n, count, &Cube::unit(n), 12, 0.5, seed).unwrap();
        let back = AtomicMeasure::from_json(&mu.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, mu);
    }

    #[test]
    fn projection_is_f_minus_mean(count in 2usize..40, seed in any::<u64>(), f in prop::collection::vec(-5.0f64..5.0, 40)) {
        let mu = random_uniform(1, count, &Cube::unit(1), 10, 0.5, seed).unwrap();
        let g = DyadicGrid::standard(1, 10, 0).unwrap();
        let b = HaarBasis::build(&g, &mu, &Cube::unit(1)).unwrap();
        let f = &f[..mu.len()];
        let mean = b.avg(f, &Cube::unit(1)).unwrap();
        let p = b.project(f, &Cube::unit(1));
        for i in 0..mu.len() {
            prop_assert!((p[i] - (f[i] - mean)).abs() < 1e-11);
        }
    }

    #[test]
    fn psi_between_zero_and_power(r in 1e-4f64..10.0, alpha in 0.0f64..0.9, two in any::<bool>()) {
        let n = if two { 2 } else { 1 };
        let v = tangent_psi(alpha, n, 0.05, 2.0, r);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= r.powf(alpha - n as f64) * (1.0 + 1e-12));
        if r >= tangent_s(alpha, n, 2.0) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn slope_of_a_line(a in -3.0f64..3.0, b in -10.0f64..10.0) {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| a * t + b).collect();
        prop_assert!((fit_slope(&x, &y).unwrap() - a).abs() < 1e-9);
    }
}
