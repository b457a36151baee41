use std::collections::BTreeMap;

use proptest::prelude::*;

use submonotone::constants::{chain_bound, ChainEdge};
use submonotone::estimate::chain::ChainOptions;
use submonotone::functionals::Outer;
use submonotone::{
    chain_verify, discrete_oracle, hardy_const, lower_bound_search, Functional64, Params, StatementId,
    StatementInstance64, Weight64,
};

fn classical(id: StatementId) -> StatementInstance64 {
    let rho = Functional64::unweighted(2.0).unwrap();
    StatementInstance64::new(id, Params::default(), Weight64::lebesgue(), rho)
}

fn chain_config() -> StatementInstance64 {
    let v = Weight64::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap();
    let rho = Functional64::lq(2.0, Outer::indicator(1.0)).unwrap();
    let params = Params {
        p: 2.0,
        r: 1.0,
        alpha: 0.0,
        beta: 1.0,
        ..Params::default()
    };
    StatementInstance64::new(StatementId::T1I, params, v, rho)
}

#[test]
fn oracle_stays_below_the_hardy_constant() {
    let inst = classical(StatementId::T1I);
    let small = discrete_oracle(&inst, 512).unwrap();
    let big = discrete_oracle(&inst, 2048).unwrap();
    let sharp = hardy_const(2.0, 0.0).unwrap();
    assert!(big.converged);
    assert!(big.value <= sharp * (1.0 + 1e-3), "{}", big.value);
    // nested grids: 2048 cells refine 512 cells over the same window
    assert!(small.value <= big.value + 1e-6, "{} > {}", small.value, big.value);
}

#[test]
fn search_is_below_oracle_and_witness_replays() {
    for id in [StatementId::T1I, StatementId::T1II] {
        let inst = classical(id);
        let est = lower_bound_search(&inst, 2000, 5).unwrap();
        let oracle = discrete_oracle(&inst, 2048).unwrap();
        assert!(est.lower_bound <= oracle.value * 1.05, "{id}: {} vs {}", est.lower_bound, oracle.value);
        let again = inst.evaluate(&est.witness).unwrap().ratio;
        assert!((again - est.lower_bound).abs() <= 1e-12 * est.lower_bound);
    }
}

#[test]
fn corrupted_bounds_are_caught() {
    let base = chain_config();
    let mut opts = ChainOptions::new(40, 2);
    opts.edges = vec![ChainEdge::IToVi, ChainEdge::IiToIii];
    let clean = chain_verify(&base, &opts).unwrap();
    assert!(clean.clean(), "{:?}", clean.errors);
    opts.corrupt = Some(0.01);
    let bad = chain_verify(&base, &opts).unwrap();
    assert!(bad.violations > 0);
    assert!(bad.edges.iter().all(|e| e.first_violation.is_some()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Every edge bound is nondecreasing in each of its inputs.
    #[test]
    fn chain_bounds_are_monotone(
        k in 1.0f64..3.0,
        base in 0.5f64..10.0,
        bump in 1.0f64..2.0,
        alpha in 0.0f64..0.4,
    ) {
        let params = Params { p: 2.0, r: 1.0, alpha, beta: 1.0, ..Params::default() };
        for edge in ChainEdge::ALL {
            let mut inputs: BTreeMap<String, f64> = BTreeMap::new();
            inputs.insert("K".into(), k);
            for name in edge.inputs() {
                inputs.insert(name.to_string(), base);
            }
            let lo = chain_bound(edge, &inputs, &params).unwrap();
            for name in edge.inputs().iter().chain(["K"].iter()) {
                let mut up = inputs.clone();
                *up.get_mut(*name).unwrap() *= bump;
                let hi = chain_bound(edge, &up, &params).unwrap();
                for ((n, a), (_, b)) in lo.iter().zip(&hi) {
                    prop_assert!(b >= a, "{edge}: {n} decreased when {name} grew");
                }
            }
        }
    }
}
