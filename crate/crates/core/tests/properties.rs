use perpetua_core::apps::HTransform;
use perpetua_core::perpetuity::{compute_phi_i, g_fun, SignedLogFunctional, StateFns};
use perpetua_core::semimarkov::Trajectory;
use perpetua_core::stats::{hill_index, ks_two_sample, standardize, Sample};
use proptest::prelude::*;

fn segments() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..3, 0.01f64..3.0), 1..20)
}

/// `(Phi_t, I_t)` by Simpson's rule on each constant-state piece, with the
/// discount `exp(-int_s^t a)` built from the piecewise-linear `int a`.
fn quadrature_i(parts: &[(usize, f64)], a: &[f64], b: &[f64], t: f64) -> (f64, f64) {
    let mut pieces = Vec::new();
    let mut start = 0.0;
    for &(k, d) in parts {
        let end = (start + d).min(t);
        if end > start {
            pieces.push((k, start, end));
        }
        start += d;
    }
    let total_a: f64 = pieces.iter().map(|&(k, s0, s1)| a[k] * (s1 - s0)).sum();
    let mut before = 0.0;
    let mut sum = 0.0;
    for &(k, s0, s1) in &pieces {
        let n = 2000;
        let h = (s1 - s0) / n as f64;
        let f = |s: f64| b[k] * (-(total_a - before - a[k] * (s - s0))).exp();
        let mut acc = f(s0) + f(s1);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s0 + i as f64 * h);
        }
        sum += acc * h / 3.0;
        before += a[k] * (s1 - s0);
    }
    ((-total_a).exp(), sum)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functional_splits_compose(parts in segments(), cut in 0usize..20) {
        let fns = StateFns::new(vec![0.7, -0.4, 1.3], vec![1.0, -2.0, 0.5]).unwrap();
        let cut = cut.min(parts.len());
        let fold = |ps: &[(usize, f64)]| {
            ps.iter().fold(SignedLogFunctional::IDENTITY, |f, &(k, d)| f.accumulate(fns.a()[k], fns.b()[k], d))
        };
        let whole = fold(&parts);
        let joined = fold(&parts[..cut]).then(fold(&parts[cut..]));
        prop_assert!((whole.log_phi - joined.log_phi).abs() < 1e-9);
        let (x, y) = (whole.i(), joined.i());
        prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn g_fun_is_the_constant_coefficient_integral(c in -3.0f64..3.0, d in -2.0f64..2.0, x in 0.0f64..4.0) {
        // int_0^x d e^{-c(x-s)} ds by Simpson's rule.
        let n = 2000;
        let h = x / n as f64;
        let f = |s: f64| d * (-c * (x - s)).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let simpson = s * h / 3.0;
        prop_assert!((g_fun(c, d, x) - simpson).abs() <= 1e-9 * (1.0 + simpson.abs()));
    }

    #[test]
    fn ks_is_symmetric_and_permutation_invariant(
        x in prop::collection::vec(-10.0f64..10.0, 50..120),
        y in prop::collection::vec(-10.0f64..10.0, 50..120),
    ) {
        let sx = Sample::new(x.clone()).unwrap();
        let sy = Sample::new(y.clone()).unwrap();
        let d1 = ks_two_sample(&sx, &sy, 0.05).unwrap().statistic;
        let d2 = ks_two_sample(&sy, &sx, 0.05).unwrap().statistic;
        prop_assert_eq!(d1, d2);
        let mut rev = x;
        rev.reverse();
        let d3 = ks_two_sample(&Sample::new(rev).unwrap(), &sy, 0.05).unwrap().statistic;
        prop_assert_eq!(d1, d3);
        prop_assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn hill_is_scale_invariant(x in prop::collection::vec(0.01f64..1e3, 500..800), c in 0.01f64..100.0) {
        let k = 50;
        let base = hill_index(&Sample::new(x.clone()).unwrap(), k).unwrap().alpha;
        let scaled = hill_index(&Sample::new(x.iter().map(|v| v * c).collect()).unwrap(), k).unwrap().alpha;
        prop_assert!((base - scaled).abs() <= 1e-9 * base);
    }

    #[test]
    fn standardize_ignores_positive_affine_maps(
        x in prop::collection::vec(-5.0f64..5.0, 20..200),
        scale in 0.1f64..10.0,
        shift in -10.0f64..10.0,
    ) {
        let Ok(base) = standardize(&Sample::new(x.clone()).unwrap()) else { return Ok(()) };
        let moved = standardize(&Sample::new(x.iter().map(|v| scale * v + shift).collect()).unwrap()).unwrap();
        for (a, b) in base.values().iter().zip(moved.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let again = standardize(&base).unwrap();
        for (a, b) in base.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn h_inverse_undoes_h(x in -20.0f64..20.0) {
        for h in [HTransform::Identity, HTransform::Arctan, HTransform::Exp] {
            let back = h.h_inv(h.h(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn functional_matches_quadrature_on_fixed_path() {
    let parts = [(0, 0.8), (1, 1.7), (2, 0.4), (0, 1.1)];
    let traj = Trajectory::from_segments(&parts, 1).unwrap();
    let a = [0.7, -0.4, 1.3];
    let b = [1.0, -2.0, 0.5];
    let fns = StateFns::new(a.to_vec(), b.to_vec()).unwrap();
    for &t in &[0.5, 2.0, 3.3, 4.0] {
        let f = compute_phi_i(&traj, &fns, t).unwrap();
        let (phi, i) = quadrature_i(&parts, &a, &b, t);
        assert!((f.phi() - phi).abs() < 1e-10 * phi, "phi at {t}");
        assert!((f.i() - i).abs() < 1e-10 * (1.0 + i.abs()), "I at {t}: {} vs {}", f.i(), i);
    }
}
