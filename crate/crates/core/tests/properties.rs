use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use torus_pam::covariance::{fourier_weight, NoiseSpec, SpectralWeights};
use torus_pam::heat_kernel::{kernel_sandwich_check, signed_mod, KernelConfig, TorusPoint};
use torus_pam::io::{parse_points, parse_value_list, FieldFile};
use torus_pam::moment_calculus::{gamma0, uniform_grid, HnTable};
use torus_pam::pam_solver::{j0, InitialMeasure};
use torus_pam::quadrature::periodic_trapezoid;

fn finite() -> impl Strategy<Value = f64> {
    -1e6..1e6f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn signed_mod_lands_in_fundamental_domain(x in finite(), k in -50i32..50) {
        let r = signed_mod(x).unwrap();
        prop_assert!((-PI..PI).contains(&r));
        let shifted = signed_mod(x + k as f64 * TAU).unwrap();
        let gap = (shifted - r).abs();
        prop_assert!(gap < 1e-6 || (gap - TAU).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_even_periodic_and_positive(t in 1e-3..30.0f64, x in -PI..PI) {
        let c = KernelConfig::default();
        let g = c.g(t, &[x]);
        prop_assert!(g > 0.0);
        prop_assert!((c.g(t, &[-x]) / g - 1.0).abs() < 1e-12);
        prop_assert!((c.g(t, &[x + TAU]) / g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_has_unit_mass(t in 0.05..20.0f64) {
        let c = KernelConfig::default();
        let m = periodic_trapezoid(|x| c.g(t, &[x]), 512);
        prop_assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn semigroup_property(s in 0.05..2.0f64, t in 0.05..2.0f64, x in -PI..PI) {
        let c = KernelConfig::default();
        let conv = periodic_trapezoid(|y| c.g(s, &[x - y]) * c.g(t, &[y]), 1024);
        prop_assert!((conv / c.g(s + t, &[x]) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sandwich_holds(t in 1e-3..20.0f64, x in -PI..PI, y in -PI..PI) {
        let c = KernelConfig::default();
        prop_assert!(kernel_sandwich_check(t, &TorusPoint::new(vec![x]).unwrap(), &c).unwrap().pass);
        prop_assert!(kernel_sandwich_check(t, &TorusPoint::new(vec![x, y]).unwrap(), &c).unwrap().pass);
    }

    #[test]
    fn weights_depend_on_norm_only(a in 0.05..1.5f64, rho in 0.0..5.0f64, k in -40i64..40, j in -40i64..40) {
        let s = NoiseSpec::new(2, a, rho, 1.0).unwrap();
        let w = fourier_weight(&s, &[k, j]);
        prop_assert_eq!(w, fourier_weight(&s, &[j, -k]));
        prop_assert_eq!(w, fourier_weight(&s, &[-k, -j]));
        prop_assert!(w >= 0.0);
    }

    #[test]
    fn truncated_covariance_mean_is_rho_flat(a in 0.1..1.0f64, rho in 0.0..3.0f64) {
        let s = NoiseSpec::new(1, a, rho, 1.0).unwrap();
        let w = SpectralWeights::new(&s, 8);
        let mean = periodic_trapezoid(|x| w.covariance_at(&[x]), 64) / TAU;
        prop_assert!((mean - rho / TAU).abs() < 1e-12);
    }

    #[test]
    fn j0_of_uniform_data_is_flat(mass in 0.01..10.0f64, t in 0.01..5.0f64, x in -PI..PI) {
        let v = j0(t, &TorusPoint::new(vec![x]).unwrap(), &InitialMeasure::Uniform { mass }, &KernelConfig::default()).unwrap();
        prop_assert!((v - mass / TAU).abs() < 1e-14 * mass);
    }

    #[test]
    fn field_binary_roundtrip(n in 1usize..12, d in 1usize..3, dt in 0.0..1.0f64, seed: u64, fill in finite()) {
        let len = n.pow(d as u32);
        let values: Vec<f64> = (0..len).map(|i| fill * (i as f64 + 0.5).sin()).collect();
        let f = FieldFile::new(d, n, dt, seed, values).unwrap();
        let back = FieldFile::decode(&f.encode()).unwrap();
        prop_assert_eq!(&back, &f);
        let mut short = f.encode();
        short.pop();
        prop_assert!(FieldFile::decode(&short).is_err());
    }

    #[test]
    fn field_csv_roundtrip(n in 1usize..8, d in 1usize..3, dt in 0.0..1.0f64, seed: u64, fill in finite()) {
        let len = n.pow(d as u32);
        let values: Vec<f64> = (0..len).map(|i| fill * (i as f64).cos()).collect();
        let f = FieldFile::new(d, n, dt, seed, values).unwrap();
        let back = FieldFile::parse_csv(&f.to_csv().unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn value_list_roundtrip(v in prop::collection::vec(finite(), 1..20)) {
        let s = v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_value_list(&s).unwrap(), v);
    }

    #[test]
    fn range_endpoints_and_count(a in finite(), b in finite(), c in 2usize..500) {
        let v = parse_value_list(&format!("{a}:{b}:{c}")).unwrap();
        prop_assert_eq!(v.len(), c);
        prop_assert_eq!(v[0], a);
        prop_assert!((v[c - 1] - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn points_have_dimension(v in prop::collection::vec((finite(), finite()), 1..10)) {
        let s = v.iter().map(|(a, b)| format!("{a},{b}")).collect::<Vec<_>>().join(";");
        let p = parse_points(&s, 2).unwrap();
        prop_assert_eq!(p.len(), v.len());
        prop_assert!(parse_points(&s, 3).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn h_rows_are_nondecreasing(a in 0.05..0.95f64, rho in 0.0..3.0f64) {
        let s = NoiseSpec::new(1, a, rho, 1.0).unwrap();
        let h = HnTable::new(&s, 3, &uniform_grid(2.0, 200)).unwrap();
        for row in &h.values {
            prop_assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn gamma0_increases_with_lambda(l in 0.1..20.0f64) {
        let s = NoiseSpec::new(1, 0.3, 1.0, 1.0).unwrap();
        let a = gamma0(l, &s).unwrap();
        let b = gamma0(1.1 * l, &s).unwrap();
        prop_assert!(a.residual < 1e-9);
        prop_assert!(b.gamma0 > a.gamma0);
    }
}
