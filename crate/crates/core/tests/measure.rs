use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use submonotone::funcspace::{random_weight, WeightProfile};
use submonotone::measure::{integrate_fn, Quad};
use submonotone::Weight64;

fn weight(seed: u64) -> Weight64 {
    random_weight(&WeightProfile::default(), &mut ChaCha8Rng::seed_from_u64(seed))
}

// V by quadrature of the density, without going through the primitive.
fn primitive_by_quadrature(w: &Weight64, t: f64) -> f64 {
    let bps = w.breakpoints();
    integrate_fn(|s| w.eval(s), 0.0, t, &bps, &Quad::with_tol(1e-13))
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn primitive_starts_at_zero_and_increases(seed in any::<u64>(), a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        let w = weight(seed);
        prop_assert_eq!(w.primitive(0.0), 0.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(w.primitive(lo) <= w.primitive(hi));
        prop_assert!(w.primitive(hi) <= w.v_inf());
    }

    #[test]
    fn primitive_matches_quadrature(seed in any::<u64>(), t in 1e-2f64..1e2) {
        let w = weight(seed);
        let exact = w.primitive(t);
        let quad = primitive_by_quadrature(&w, t);
        prop_assert!((exact - quad).abs() <= 1e-9 * exact, "{exact} vs {quad}");
    }

    #[test]
    fn power_moment_is_additive(seed in any::<u64>(), alpha in -0.9f64..3.0, a in 0.01f64..1.0, m in 1.0f64..5.0, b in 5.0f64..50.0) {
        let w = weight(seed);
        let whole = w.power_moment(alpha, a, b).value;
        let parts = w.power_moment(alpha, a, m).value + w.power_moment(alpha, m, b).value;
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1e-300));
    }

    #[test]
    fn inverse_primitive_round_trips(seed in any::<u64>(), t in 1e-2f64..1e2) {
        let w = weight(seed);
        let y = w.primitive(t);
        let back = w.inverse_primitive(y);
        prop_assert!((back - t).abs() <= 1e-9 * t);
    }
}

// 100 random V-moments against adaptive quadrature of V(t)^β v(t).
#[test]
fn moments_agree_with_quadrature() {
    let quad = Quad::with_tol(1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let w = weight(1000 + i);
        let beta: f64 = rand::Rng::gen_range(&mut rng, -0.9..2.0);
        let (a, b) = (0.05 + 0.01 * i as f64, 3.0 + 0.1 * i as f64);
        let exact = w.power_moment(beta, a, b).value;
        let bps = w.breakpoints();
        let num = integrate_fn(|t| w.primitive(t).powf(beta) * w.eval(t), a, b, &bps, &quad).unwrap();
        let rel = (exact - num.value).abs() / exact.abs();
        assert!(rel <= 1e-10, "weight {i}: beta {beta}: {exact} vs {} ({rel:e})", num.value);

        let t = 0.5 + 0.05 * i as f64;
        let lm = w.log_moment(t);
        let num = integrate_fn(|s| w.primitive(s).ln() * w.eval(s), 0.0, t, &bps, &Quad::with_tol(1e-11)).unwrap();
        let scale = lm.abs().max(w.primitive(t));
        assert!((lm - num.value).abs() <= 1e-9 * scale, "log moment {i}: {lm} vs {}", num.value);
    }
}

#[test]
fn lebesgue_moments() {
    let w = Weight64::lebesgue();
    // ∫_1^2 t dt = 3/2
    assert!((w.power_moment(1.0, 1.0, 2.0).value - 1.5).abs() < 1e-15);
    // ∫_1^e dt/t = 1
    assert!((w.power_moment(-1.0, 1.0, std::f64::consts::E).value - 1.0).abs() < 1e-15);
    assert_eq!(w.v_inf(), f64::INFINITY);
}
