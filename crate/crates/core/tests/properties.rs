use gauss_lucas::config::{parse_config, serialize_config};
use gauss_lucas::geometry::{hull2d, hull_contains};
use gauss_lucas::poly::{find_roots, ComplexPoly, RootFinderConfig};
use gauss_lucas::Complex64;
use proptest::prelude::*;

fn complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn found_roots_rebuild_the_polynomial(roots in prop::collection::vec(complex(1.0), 1..9)) {
        let p = ComplexPoly::from_roots(&roots, Complex64::new(1.0, 0.0));
        let solve = find_roots(&p, &RootFinderConfig::default()).unwrap();
        let q = ComplexPoly::from_roots(&solve.roots, Complex64::new(1.0, 0.0));
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-7 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn derivative_matches_central_difference(
        coeffs in prop::collection::vec(complex(2.0), 1..8),
        z in complex(1.5),
    ) {
        let p = ComplexPoly::new(coeffs);
        let h = 1e-5;
        let fd = (p.eval(z + h) - p.eval(z - h)) / (2.0 * h);
        let d = p.derivative().eval(z);
        prop_assert!((fd - d).norm() <= 1e-5 * (1.0 + d.norm()));
    }

    #[test]
    fn hull_contains_its_points_and_their_averages(pts in prop::collection::vec(complex(10.0), 1..20)) {
        let h = hull2d(&pts).unwrap();
        for &z in &pts {
            prop_assert!(hull_contains(&h, z, 1e-9));
        }
        let mean = pts.iter().sum::<Complex64>() / pts.len() as f64;
        prop_assert!(hull_contains(&h, mean, 1e-9));
    }

    #[test]
    fn polynomial_scenarios_round_trip(
        coeffs in prop::collection::vec(complex(5.0), 2..6),
        eps in 1e-12f64..1e-2,
        seed in any::<u32>(),
    ) {
        let list: Vec<String> = coeffs.iter().map(|c| format!("({:?},{:?})", c.re, c.im)).collect();
        let text = format!(
            "[scenario]\nid = prop\nmode = gl-poly\n[polynomial]\ncoefficients = {}\n[numeric]\neps = {eps:?}\nseed = {seed}\n",
            list.join(" ")
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
