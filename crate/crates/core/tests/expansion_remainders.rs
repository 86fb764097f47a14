use dilute_ising::expansion::{
    big_f, series_f, series_remainder_ratios, split_remainder_ratios, symmetric_split,
};

fn bounded_by_two(ratios: &[f64]) -> bool {
    let r0 = ratios[0];
    ratios.iter().all(|&r| r >= 0.5 * r0 && r <= 2.0 * r0)
}

#[test]
fn fifth_order_remainder_ratio_is_stable() {
    for &p in &[0.1, 0.3, 0.7] {
        let ratios = series_remainder_ratios(p, 0.1, 5);
        assert!(bounded_by_two(&ratios), "p={p}: {ratios:?}");
        let negative = series_remainder_ratios(p, -0.1, 5);
        assert!(bounded_by_two(&negative), "p={p}: {negative:?}");
    }
}

#[test]
fn lower_truncations_have_lower_order_remainders() {
    // Each truncation leaves a remainder of the next order in z.
    for &p in &[0.1, 0.3, 0.7] {
        for order in 1..4u32 {
            let ratio = |z: f64| {
                (big_f(p, z) - series_f(p, z, order).unwrap()).abs() / z.powi(order as i32 + 1)
            };
            let (a, b) = (ratio(0.01), ratio(0.005));
            assert!((a / b - 1.0).abs() < 0.1, "p={p} order={order}: {a} {b}");
        }
    }
}

#[test]
fn split_remainders_are_cubic_in_gamma() {
    for &p in &[0.1, 0.3, 0.7] {
        for &(z, y) in &[(1.0, 2.0), (0.5, -1.0), (2.0, 0.5), (-1.5, 1.0)] {
            let ratios = split_remainder_ratios(p, 0.02, z, y, 5);
            let even: Vec<f64> = ratios.iter().map(|s| s.even).collect();
            let odd: Vec<f64> = ratios.iter().map(|s| s.odd).collect();
            assert!(bounded_by_two(&even), "p={p} z={z} y={y}: {even:?}");
            assert!(bounded_by_two(&odd), "p={p} z={z} y={y}: {odd:?}");
        }
    }
}

#[test]
fn split_at_half_has_vanishing_cubic_term() {
    let ratios = split_remainder_ratios(0.5, 0.01, 1.0, 2.0, 5);
    for w in ratios.windows(2) {
        assert!(w[1].even < w[0].even);
    }
    let s = symmetric_split(0.5, 0.01, 1.0, 2.0);
    assert!((s.even + s.odd - big_f(0.5, 0.03)).abs() < 1e-16);
}
