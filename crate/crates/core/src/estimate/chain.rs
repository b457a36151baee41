//! Empirical soundness check of the implication chain of Theorem 1.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{chain_bound, muckenhoupt_upper, ChainEdge, Constants};
use crate::error::{Error, Result};
use crate::funcspace::{guard_for, sample_testfn, GeneratorProfile};
use crate::operators::Phi;
use crate::scalar::{div0, lit, Real};
use crate::schema::Segment;
use crate::statements::{Params, StatementId, StatementInstance};

use super::stream;

#[derive(Debug, Clone)]
pub struct ChainOptions<T> {
    pub samples: usize,
    pub seed: u64,
    /// Relative slack on `lhs ≤ C·rhs`.
    pub tol: T,
    /// Multiplies every checked bound; the self-test uses `0.01`.
    pub corrupt: Option<T>,
    pub edges: Vec<ChainEdge>,
    pub profile: GeneratorProfile<T>,
}

impl<T: Real> ChainOptions<T> {
    pub fn new(samples: usize, seed: u64) -> Self {
        ChainOptions {
            samples,
            seed,
            tol: lit(1e-6),
            corrupt: None,
            edges: ChainEdge::ALL.to_vec(),
            profile: GeneratorProfile::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation<T> {
    pub sample: usize,
    pub lhs: T,
    pub rhs: T,
    pub bound: T,
    pub witness: Vec<Segment<T>>,
}

/// `ρ(1)/V(∞)^{1/p}` against `C_{2,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantTerm<T> {
    pub value: T,
    pub bound: T,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeReport<T> {
    pub edge: ChainEdge,
    pub source: StatementId,
    pub target: StatementId,
    pub anchor: String,
    pub target_params: Params<T>,
    /// Output constants of the edge, before any corruption.
    pub bounds: Vec<(String, T)>,
    /// The bound the samples are held to.
    pub checked_bound: T,
    pub samples: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest sampled `lhs/rhs`: a lower bound for the target's best constant.
    pub max_ratio: T,
    pub constant_term: Option<ConstantTerm<T>>,
    pub first_violation: Option<Violation<T>>,
    pub first_error: Option<String>,
    /// Set when the edge could not be checked at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport<T> {
    /// `K`, the upper bound `C1` and every propagated constant.
    pub constants: Constants<T>,
    pub corrupt: Option<T>,
    pub edges: Vec<EdgeReport<T>>,
    pub violations: usize,
    /// Edges that could not be checked.
    pub errors: usize,
}

impl<T: Real> ChainReport<T> {
    pub fn clean(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

/// Holds every edge's target statement to the bound propagated from `C1 = muckenhoupt_upper`.
///
/// `base` supplies `v`, `ρ` and the parameters; its statement id is ignored.
/// Constants that several edges produce are merged by taking the smallest,
/// and only edges whose target parameters equal the base parameters feed the map.
pub fn chain_verify<T: Real>(base: &StatementInstance<T>, opts: &ChainOptions<T>) -> Result<ChainReport<T>> {
    let params = base.params;
    let k = base
        .rho
        .declared_k()
        .ok_or_else(|| Error::MissingUpperBound(format!("K of {}", base.rho.name())))?;
    let c1 = muckenhoupt_upper(&base.v, &base.rho, params.p)
        .map_err(|e| Error::MissingUpperBound(format!("C1: {e}")))?;
    if !c1.is_finite() {
        return Err(Error::MissingUpperBound("C1: the Muckenhoupt bound is infinite".into()));
    }
    let mut consts: Constants<T> = Constants::new();
    consts.insert("K".into(), k);
    consts.insert("C1".into(), c1);
    let factor = opts.corrupt.unwrap_or(T::one());
    let mut edges = Vec::new();
    for (ei, edge) in ChainEdge::ALL.iter().copied().enumerate() {
        let tparams = edge.target_params(&params);
        let bounds = chain_bound(edge, &consts, &params);
        if let Ok(b) = &bounds {
            if tparams == params {
                for &(name, val) in b {
                    let key = if edge == ChainEdge::IiToIii && name == "C21" { "C3" } else { name };
                    let slot = consts.entry(key.to_string()).or_insert(val);
                    *slot = slot.min(val);
                }
            }
        }
        if !opts.edges.contains(&edge) {
            continue;
        }
        let mut rep = EdgeReport {
            edge,
            source: edge.source(),
            target: edge.target(),
            anchor: edge.anchor().to_string(),
            target_params: tparams,
            bounds: vec![],
            checked_bound: T::nan(),
            samples: opts.samples,
            skipped: 0,
            violations: 0,
            max_ratio: T::zero(),
            constant_term: None,
            first_violation: None,
            first_error: None,
            error: None,
        };
        let b = match bounds {
            Ok(b) => b,
            Err(e) => {
                rep.error = Some(e.to_string());
                edges.push(rep);
                continue;
            }
        };
        rep.bounds = b.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        let bound = b[0].1 * factor;
        rep.checked_bound = bound;
        let mut tp = tparams;
        if edge.target() == StatementId::T1IX && tp.phi.is_none() {
            tp.phi = Some(Phi::Ln);
        }
        let target = StatementInstance::new(edge.target(), tp, base.v.clone(), base.rho.clone())
            .with_alpha_override(base.alpha_override);
        if let Err(e) = target.check() {
            rep.error = Some(e.to_string());
            edges.push(rep);
            continue;
        }
        let (w, s, a) = target.rhs_moment()?;
        let mut profile = opts.profile.clone().with_guard(guard_for(&w, s, a));
        if target.id.needs_positive() {
            profile = profile.positive();
        }
        profile.validate()?;
        let results: Vec<(usize, Result<(T, T)>, Vec<Segment<T>>)> = (0..opts.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(opts.seed, ((ei as u64) << 32) | i as u64);
                let f = sample_testfn(&profile, &mut rng);
                let r = target.evaluate(&f).map(|e| (e.lhs, e.rhs));
                (i, r, Segment::of(f.piecewise()))
            })
            .collect();
        let slack = T::one() + opts.tol;
        for (i, r, seg) in results {
            match r {
                Ok((lhs, rhs)) if !lhs.is_nan() && !rhs.is_nan() => {
                    rep.max_ratio = rep.max_ratio.max(div0(lhs, rhs));
                    if rhs.is_finite() && lhs > bound * rhs * slack {
                        rep.violations += 1;
                        if rep.first_violation.is_none() {
                            rep.first_violation = Some(Violation {
                                sample: i,
                                lhs,
                                rhs,
                                bound,
                                witness: seg,
                            });
                        }
                    }
                }
                Ok(_) => {
                    rep.skipped += 1;
                    rep.first_error.get_or_insert_with(|| format!("sample {i}: NaN"));
                }
                Err(e) => {
                    rep.skipped += 1;
                    rep.first_error.get_or_insert_with(|| format!("sample {i}: {e}"));
                }
            }
        }
        if matches!(edge.target(), StatementId::T1II | StatementId::T1III) && b.len() > 1 {
            let value = target.constant_term_check()?;
            let cb = b[1].1 * factor;
            let ok = !(value > cb * slack);
            if !ok {
                rep.violations += 1;
            }
            rep.constant_term = Some(ConstantTerm { value, bound: cb, ok });
        }
        edges.push(rep);
    }
    let violations = edges.iter().map(|e| e.violations).sum();
    let errors = edges.iter().filter(|e| e.error.is_some()).count();
    Ok(ChainReport {
        constants: consts,
        corrupt: opts.corrupt,
        edges,
        violations,
        errors,
    })
}
