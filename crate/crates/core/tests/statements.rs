use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use submonotone::funcspace::{guard_for, sample_testfn, GeneratorProfile};
use submonotone::functionals::Outer;
use submonotone::measure::{integrate_fn, Quad};
use submonotone::{Functional64, Params, StatementId, StatementInstance64, TestFunction64, Weight64};

fn two_weight() -> Weight64 {
    Weight64::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap()
}

fn params() -> Params<f64> {
    Params {
        p: 2.0,
        r: 1.0,
        alpha: 0.0,
        beta: 1.0,
        ..Params::default()
    }
}

fn instance(id: StatementId) -> StatementInstance64 {
    let rho = Functional64::lq(2.0, Outer::indicator(1.0)).unwrap();
    StatementInstance64::new(id, params(), two_weight(), rho)
}

fn draw(inst: &StatementInstance64, seed: u64) -> TestFunction64 {
    let (w, s, a) = inst.rhs_moment().unwrap();
    let mut profile = GeneratorProfile::default().with_guard(guard_for(&w, s, a));
    if inst.id.needs_positive() {
        profile = profile.positive();
    }
    sample_testfn(&profile, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratio_is_scale_invariant(
        seed in any::<u64>(),
        lambda in 1e-2f64..1e2,
        id in prop::sample::select(vec![StatementId::T1I, StatementId::T1II, StatementId::T1IV, StatementId::T1VI]),
    ) {
        let inst = instance(id);
        prop_assert!(inst.check().is_ok());
        let f = draw(&inst, seed);
        let a = inst.evaluate(&f).unwrap();
        let b = inst.evaluate(&f.scale(lambda)).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 1e-8 * a.ratio.max(b.ratio), "{} vs {}", a.ratio, b.ratio);
    }

    #[test]
    fn geometric_side_is_below_hardy_side(seed in any::<u64>()) {
        let hardy = instance(StatementId::T1I);
        let geo = instance(StatementId::T1VI);
        let f = draw(&geo, seed);
        let h = hardy.evaluate(&f).unwrap();
        let g = geo.evaluate(&f).unwrap();
        prop_assert!(g.lhs <= h.lhs * (1.0 + 1e-9));
        prop_assert_eq!(g.rhs, h.rhs);
    }

    #[test]
    fn rhs_matches_quadrature(seed in any::<u64>()) {
        let inst = instance(StatementId::T1I);
        let f = draw(&inst, seed);
        let v = two_weight();
        let mut bps = v.breakpoints();
        bps.extend(f.piecewise().breakpoints());
        let num = integrate_fn(|t| f.eval(t).powi(2) * v.eval(t), 0.0, f64::INFINITY, &bps, &Quad::with_tol(1e-12));
        if let Ok(num) = num {
            let rhs = inst.rhs(&f).unwrap();
            prop_assert!((rhs - num.value.sqrt()).abs() <= 1e-8 * rhs);
        }
    }
}

#[test]
fn constant_input_returns_rho_of_one() {
    let inst = instance(StatementId::T1I);
    let rec = inst.evaluate(&TestFunction64::constant(1.0)).unwrap();
    // ρ(1) = ‖χ_(0,1)‖_2 = 1, and ∫ v = 2
    assert!((rec.lhs - 1.0).abs() < 1e-14);
    assert!((rec.rhs - 2f64.sqrt()).abs() < 1e-14);
    assert!((inst.constant_term_check().unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn constant_term_vanishes_for_infinite_mass() {
    let rho = Functional64::lq(2.0, Outer::indicator(1.0)).unwrap();
    for w in [Weight64::lebesgue(), Weight64::power(2.0, 0.5).unwrap()] {
        let inst = StatementInstance64::new(StatementId::T1II, params(), w, rho.clone());
        assert_eq!(inst.constant_term_check().unwrap(), 0.0);
    }
}

#[test]
fn invalid_alpha_names_the_constraint() {
    let rho = Functional64::lq(2.0, Outer::indicator(1.0)).unwrap();
    let bad = Params { alpha: -0.6, ..params() };
    let inst = StatementInstance64::new(StatementId::T1II, bad, two_weight(), rho);
    let err = inst.check().unwrap_err().to_string();
    assert!(err.contains("α > max{-1/p, -1/p'}"), "{err}");
}
