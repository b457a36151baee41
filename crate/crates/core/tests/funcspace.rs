use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use submonotone::funcspace::{guard_for, positivize, random_weight, sample_testfn, GeneratorProfile, WeightProfile};

const TS: [f64; 7] = [0.01, 0.1, 0.5, 1.3, 4.0, 19.0, 300.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn algebra_round_trips(seed in any::<u64>(), a in 0.2f64..3.0, b in 0.2f64..3.0) {
        let f = sample_testfn(&GeneratorProfile::default().positive(), &mut ChaCha8Rng::seed_from_u64(seed));
        let ab = f.pow(a).pow(b);
        let direct = f.pow(a * b);
        let back = f.reciprocal().reciprocal();
        for t in TS {
            let (x, y) = (ab.eval(t), direct.eval(t));
            prop_assert!((x - y).abs() <= 1e-12 * x.max(y), "{} vs {}", x, y);
            prop_assert!((back.eval(t) - f.eval(t)).abs() <= 1e-14 * f.eval(t));
        }
    }

    #[test]
    fn positivize_dominates_within_budget(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_weight(&WeightProfile::default(), &mut rng);
        let profile = GeneratorProfile::default().with_guard(guard_for(&w, 2.0, 0.0));
        let f = sample_testfn(&profile, &mut rng);
        let pw = f.piecewise();
        // f is positive on (0, A) with A the start of its first zero segment
        let a = (0..pw.len()).find(|&i| pw.pieces()[i].coef == 0.0).map(|i| pw.start(i)).unwrap_or(1.0);
        prop_assume!(a > 0.0);
        let g = positivize(&f, a, eps, &w, 2.0).unwrap();
        prop_assert!(g.is_strictly_positive());
        for t in TS {
            prop_assert!(g.eval(t) >= f.eval(t));
        }
        let (nf, ng) = (f.lp_norm(&w, 2.0), g.lp_norm(&w, 2.0));
        prop_assert!(ng <= (1.0 + eps) * nf * (1.0 + 1e-12), "{} > (1+{})·{}", ng, eps, nf);
    }
}
