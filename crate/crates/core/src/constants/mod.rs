//! Explicit constants, the implication chain of Theorem 1 and the proof-step checkers.

pub mod steps;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{Functional, Kind, Outer};
use crate::measure::{integrate_fn, merge_breakpoints, Quad, Weight};
use crate::statements::{Params, StatementId};
use crate::scalar::{conjugate, lit, pow0, Real};

pub use steps::{alpha_grid, proof_step_check, run_step, run_suite, StepCheckRecord, StepId, StepInputs, StepPath, StepSummary, SuiteConfig};

/// `D_γ = max{1, 2^{γ-1}}`.
pub fn d_gamma<T: Real>(gamma: T) -> T {
    T::one().max(lit::<T>(2.0).powf(gamma - T::one()))
}

/// `κ = [(β - αp/r) r' + 1]^{-(r-1)/p}` for `r > 1`, and `1` for `r = 1`.
pub fn kappa<T: Real>(r: T, p: T, alpha: T, beta: T) -> T {
    if r == T::one() {
        return T::one();
    }
    let base = (beta - alpha * p / r) * conjugate(r) + T::one();
    base.powf(-(r - T::one()) / p)
}

/// `A_{p,α} = p/(p-1-α)`, the weighted Hardy constant.
pub fn hardy_const<T: Real>(p: T, alpha: T) -> Result<T> {
    if !(p >= T::one()) || !(alpha < p - T::one()) {
        return Err(Error::ParameterOutOfRange(format!(
            "A_(p,α) needs p ≥ 1 and α < p - 1 (got p = {p}, α = {alpha})"
        )));
    }
    Ok(p / (p - T::one() - alpha))
}

/// `B_{p,α} = p/(1+α)`, the weighted Copson constant.
pub fn copson_const<T: Real>(p: T, alpha: T) -> Result<T> {
    if !(p >= T::one()) || !(alpha > -T::one()) {
        return Err(Error::ParameterOutOfRange(format!(
            "B_(p,α) needs p ≥ 1 and α > -1 (got p = {p}, α = {alpha})"
        )));
    }
    Ok(p / (T::one() + alpha))
}

/// One implication in the proof of Theorem 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChainEdge {
    #[serde(rename = "i->vi")]
    IToVi,
    #[serde(rename = "vi->ii")]
    ViToIi,
    #[serde(rename = "ii->iii")]
    IiToIii,
    #[serde(rename = "ii->iv")]
    IiToIv,
    #[serde(rename = "iv->v")]
    IvToV,
    #[serde(rename = "v->iii")]
    VToIii,
    #[serde(rename = "vi->vii")]
    ViToVii,
    #[serde(rename = "vii->viii")]
    ViiToViii,
    #[serde(rename = "viii->iii")]
    ViiiToIii,
    #[serde(rename = "i->ix")]
    IToIx,
    #[serde(rename = "ix->iii")]
    IxToIii,
    #[serde(rename = "iii->i")]
    IiiToI,
}

impl ChainEdge {
    /// In an order where every input constant is produced before it is used.
    pub const ALL: [ChainEdge; 12] = [
        ChainEdge::IToVi,
        ChainEdge::ViToIi,
        ChainEdge::IiToIii,
        ChainEdge::IiToIv,
        ChainEdge::IvToV,
        ChainEdge::VToIii,
        ChainEdge::ViToVii,
        ChainEdge::ViiToViii,
        ChainEdge::ViiiToIii,
        ChainEdge::IToIx,
        ChainEdge::IxToIii,
        ChainEdge::IiiToI,
    ];

    pub fn as_str(&self) -> &'static str {
        use ChainEdge::*;
        match self {
            IToVi => "i->vi",
            ViToIi => "vi->ii",
            IiToIii => "ii->iii",
            IiToIv => "ii->iv",
            IvToV => "iv->v",
            VToIii => "v->iii",
            ViToVii => "vi->vii",
            ViiToViii => "vii->viii",
            ViiiToIii => "viii->iii",
            IToIx => "i->ix",
            IxToIii => "ix->iii",
            IiiToI => "iii->i",
        }
    }

    pub fn source(&self) -> StatementId {
        use ChainEdge::*;
        use StatementId::*;
        match self {
            IToVi | IToIx => T1I,
            ViToIi | ViToVii => T1VI,
            IiToIii | IiToIv => T1II,
            IvToV => T1IV,
            VToIii => T1V,
            ViiToViii => T1VII,
            ViiiToIii => T1VIII,
            IxToIii => T1IX,
            IiiToI => T1III,
        }
    }

    pub fn target(&self) -> StatementId {
        use ChainEdge::*;
        use StatementId::*;
        match self {
            IToVi => T1VI,
            ViToIi => T1II,
            IiToIii | VToIii | ViiiToIii | IxToIii => T1III,
            IiToIv => T1IV,
            IvToV => T1V,
            ViToVii => T1VII,
            ViiToViii => T1VIII,
            IToIx => T1IX,
            IiiToI => T1I,
        }
    }

    /// Names of the constants the bound reads (besides `K`).
    pub fn inputs(&self) -> &'static [&'static str] {
        use ChainEdge::*;
        match self {
            IToVi | IToIx => &["C1"],
            ViToIi | ViToVii => &["C6"],
            IiToIii | IiToIv => &["C21", "C22"],
            IvToV => &["C4"],
            VToIii => &["C5"],
            ViiToViii => &["C7"],
            ViiiToIii => &["C8"],
            IxToIii => &["C9"],
            IiiToI => &["C3", "C22"],
        }
    }

    /// Names of the constants the edge produces, in the order `chain_bound` returns them.
    pub fn outputs(&self) -> &'static [&'static str] {
        use ChainEdge::*;
        match self {
            IToVi => &["C6"],
            ViToIi | IiToIii => &["C21", "C22"],
            IiToIv => &["C4"],
            IvToV => &["C5"],
            VToIii | ViiiToIii | IxToIii => &["C3", "C22"],
            ViToVii => &["C7"],
            ViiToViii => &["C8"],
            IToIx => &["C9"],
            IiiToI => &["C1"],
        }
    }

    /// Parameters at which the target statement is obtained.
    pub fn target_params<T: Real>(&self, params: &Params<T>) -> Params<T> {
        match self {
            ChainEdge::ViiiToIii => Params {
                r: T::one(),
                alpha: T::zero(),
                ..*params
            },
            ChainEdge::IxToIii => Params {
                r: params.p,
                alpha: T::zero(),
                ..*params
            },
            _ => *params,
        }
    }

    /// Where the bound comes from.
    pub fn anchor(&self) -> &'static str {
        use ChainEdge::*;
        match self {
            IToVi => "C6 <= C1 (Jensen)",
            ViToIi => "C21 <= K C6 e^a B_(r,ap)^(r/p); C22 <= C6",
            IiToIii => "trivial",
            IiToIv => "C4 = K^3 (b+1)^(r/p) D_(r/p) C21 A_(r,-br+ap)^(r/p) + K^2 C22 D_(r/p) kappa",
            IvToV => "trivial",
            VToIii => "C3 <= K C5 (b+1)^(r/p) B_(r,ap)^(r/p); C22 <= C5 c^(r/p)",
            ViToVii => "C7 <= C6",
            ViiToViii => "trivial",
            ViiiToIii => "C3 <= C8 at r = 1, a = 0; C22 <= C8",
            IToIx => "C9 <= C1",
            IxToIii => "C3 <= C9 B_(p,0) at a = 0, r = p; C22 <= C9 (also labelled C8)",
            IiiToI => "C1 <= C3 K^3 D_(r/p) ((a+1)p/r)^(r/p) A_(p,0) + C22 K^2 D_(r/p)",
        }
    }
}

impl fmt::Display for ChainEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChainEdge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChainEdge::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown chain edge {s:?}")))
    }
}

/// Named constants (`K`, `C1`, `C21`, ...).
pub type Constants<T> = BTreeMap<String, T>;

fn get<T: Real>(inputs: &Constants<T>, name: &str) -> Result<T> {
    match inputs.get(name) {
        Some(&x) if x.is_finite() => Ok(x),
        Some(_) => Err(Error::MissingInput(format!("{name} is not finite"))),
        None => Err(Error::MissingInput(format!("constant {name} is required"))),
    }
}

/// Constants of the target statement of `edge`, in the order of [`ChainEdge::outputs`].
pub fn chain_bound<T: Real>(edge: ChainEdge, inputs: &Constants<T>, params: &Params<T>) -> Result<Vec<(&'static str, T)>> {
    use ChainEdge::*;
    let one = T::one();
    let Params {
        p, r, alpha, beta, ..
    } = edge.target_params(params);
    let rp = r / p;
    let k = || get(inputs, "K");
    let names = edge.outputs();
    let values: Vec<T> = match edge {
        IToVi | IToIx => vec![get(inputs, "C1")?],
        ViToIi => {
            let c6 = get(inputs, "C6")?;
            let b = copson_const(r, alpha * p)?;
            vec![k()? * c6 * alpha.exp() * b.powf(rp), c6]
        }
        IiToIii => vec![get(inputs, "C21")?, get(inputs, "C22")?],
        IiToIv => {
            let k = k()?;
            let (c21, c22) = (get(inputs, "C21")?, get(inputs, "C22")?);
            let d = d_gamma(rp);
            let a = hardy_const(r, -beta * r + alpha * p)?;
            let c4 = k.powi(3) * (beta + one).powf(rp) * d * c21 * a.powf(rp) + k * k * c22 * d * kappa(r, p, alpha, beta);
            vec![c4]
        }
        IvToV => vec![get(inputs, "C4")?],
        VToIii => {
            let c5 = get(inputs, "C5")?;
            let b = copson_const(r, alpha * p)?;
            let c = beta - alpha * p / r + one;
            vec![k()? * c5 * (beta + one).powf(rp) * b.powf(rp), c5 * c.powf(rp)]
        }
        ViToVii => vec![get(inputs, "C6")?],
        ViiToViii => vec![get(inputs, "C7")?],
        ViiiToIii => {
            let c8 = get(inputs, "C8")?;
            vec![c8, c8]
        }
        IxToIii => {
            let c9 = get(inputs, "C9")?;
            vec![c9 * copson_const(p, T::zero())?, c9]
        }
        IiiToI => {
            let k = k()?;
            let (c3, c22) = (get(inputs, "C3")?, get(inputs, "C22")?);
            let d = d_gamma(rp);
            let a = hardy_const(p, T::zero())?;
            vec![c3 * k.powi(3) * d * ((alpha + one) * p / r).powf(rp) * a + c22 * k * k * d]
        }
    };
    Ok(names.iter().copied().zip(values).collect())
}

/// Upper bound for the best constant of statement (i) when `ρ` is a weighted `L^q` norm, `q ≥ p`.
///
/// Returns `c(p,q)·B` with `B = sup_t (∫_t^∞ w̄ V^{-q})^{1/q} V(t)^{1/p'}` and
/// `c(p,q) = (1 + q/p')^{1/q} (1 + p'/q)^{1/p'}`. The supremum is bracketed on a
/// geometric grid (tail at the left end of each cell, `V` at the right end), so the
/// result does not undershoot `B` beyond quadrature error. For `q = ∞` the bound is
/// `V(inf supp w̄)^{-1/p}`.
pub fn muckenhoupt_upper<T: Real>(v: &Weight<T>, rho: &Functional<T>, p: T) -> Result<T> {
    let (q, outer) = match &rho.kind {
        Kind::WeightedLq { q, outer } => (*q, outer),
        _ => {
            return Err(Error::UnsupportedFunctional(format!(
                "muckenhoupt_upper needs a weighted L^q functional (got {})",
                rho.name()
            )))
        }
    };
    if !(q >= p) {
        return Err(Error::UnsupportedFunctional(format!(
            "muckenhoupt_upper needs q >= p (got q = {q}, p = {p})"
        )));
    }
    let ow = match outer {
        Outer::Piecewise(pw) => pw,
        Outer::Fn(_) => {
            return Err(Error::UnsupportedFunctional(
                "muckenhoupt_upper needs a piecewise power outer weight".into(),
            ))
        }
    };
    let one = T::one();
    let pc = conjugate(p);
    if q.is_infinite() {
        let start = outer.support().first().map(|s| s.0).unwrap_or(T::infinity());
        return Ok(pow0(v.primitive(start), -one / p));
    }
    let factor = (one + q / pc).powf(one / q) * (one + pc / q).powf(one / pc);
    let b = muckenhoupt_sup(v, ow, p, q)?;
    Ok(factor * b)
}

fn muckenhoupt_sup<T: Real>(v: &Weight<T>, ow: &crate::piecewise::PiecewisePower<T>, p: T, q: T) -> Result<T> {
    let one = T::one();
    let inv_pc = one - one / p;
    let inv_q = one / q;
    let bps = merge_breakpoints(&[v.breakpoints(), ow.breakpoints()]);
    let lo = bps.first().copied().unwrap_or(one).min(one) * lit(1e-10);
    let hi = bps.last().copied().unwrap_or(one).max(one) * lit(1e10);
    let per_decade = 200usize;
    let decades = (hi / lo).log10().ceil().to_usize().unwrap_or(20);
    let n = decades * per_decade;
    let grid: Vec<T> = (0..=n)
        .map(|i| lo * (hi / lo).powf(lit::<T>(i as f64) / lit(n as f64)))
        .collect();
    let integrand = |s: T| {
        let w = ow.eval(s);
        if w.is_zero() {
            T::zero()
        } else {
            w * v.primitive(s).powf(-q)
        }
    };
    let quad = Quad::default();
    let piece = |a: T, b: T| -> Result<T> {
        match integrate_fn(integrand, a, b, &bps, &quad) {
            Ok(r) => Ok(r.value),
            Err(Error::NonConvergence { estimate, error, .. }) if error <= 1e-6 * estimate.abs() => Ok(lit(estimate)),
            Err(e) => Err(e),
        }
    };
    let far = piece(hi, T::infinity())?;
    if far.is_infinite() {
        return Ok(T::infinity());
    }
    // tails[i] = ∫_{grid[i]}^∞
    let mut tails = vec![T::zero(); n + 1];
    tails[n] = far;
    for i in (0..n).rev() {
        tails[i] = tails[i + 1] + piece(grid[i], grid[i + 1])?;
    }
    let vp = |t: T| pow0(v.primitive(t), inv_pc);
    let mut best = T::zero();
    for i in 0..n {
        best = best.max(pow0(tails[i], inv_q) * vp(grid[i + 1]));
    }

    // beyond `hi`: the product behaves like t^x
    let v_inf = v.v_inf();
    let last = ow.last();
    if !last.coef.is_zero() && far > T::zero() {
        if v_inf.is_finite() {
            best = best.max(pow0(far, inv_q) * pow0(v_inf, inv_pc));
        } else {
            let (_, gl) = v.tail();
            let k = gl + one;
            let x = (last.exponent - k * q + one) / q + k * inv_pc;
            if x > lit(1e-12) {
                return Ok(T::infinity());
            }
            best = best.max(pow0(far, inv_q) * vp(hi));
        }
    }

    // below `lo`: w̄ = c t^a and V = C t^k exactly
    let head = ow.first();
    if !head.coef.is_zero() {
        let (ck, k) = v.head_primitive();
        let g = head.coef * ck.powf(-q);
        let e = head.exponent - k * q + one;
        let x = e / q + k * inv_pc;
        if e < T::zero() && x < -lit::<T>(1e-12) {
            return Ok(T::infinity());
        }
        let extra = |t: T| -> T {
            if e.abs() < lit(1e-14) {
                g * (lo / t).ln()
            } else {
                g * (t.powf(e) - lo.powf(e)) / (-e)
            }
        };
        let m = 8000usize;
        let bottom = lo * lit(1e-40);
        let hgrid: Vec<T> = (0..=m)
            .map(|i| bottom * (lo / bottom).powf(lit::<T>(i as f64) / lit(m as f64)))
            .collect();
        for i in 0..m {
            let tail = tails[0] + extra(hgrid[i]);
            best = best.max(pow0(tail, inv_q) * pow0(ck * hgrid[i + 1].powf(k), inv_pc));
        }
        if e < T::zero() && x.abs() <= lit(1e-12) {
            best = best.max((g / (-e)).powf(inv_q) * ck.powf(inv_pc));
        } else {
            best = best.max(pow0(tails[0] + extra(bottom), inv_q) * pow0(ck * bottom.powf(k), inv_pc));
        }
    } else {
        best = best.max(pow0(tails[0], inv_q) * vp(lo));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn consts(pairs: &[(&str, f64)]) -> Constants<f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn scalar_constants() {
        assert_eq!(d_gamma(2.0), 2.0);
        assert_eq!(d_gamma(1.0), 1.0);
        assert_eq!(d_gamma(0.5), 1.0);
        assert_eq!(kappa(1.0, 2.0, 0.3, 1.0), 1.0);
        assert_relative_eq!(kappa(2.0, 2.0, 0.0, 1.0), 3f64.powf(-0.5), max_relative = 1e-15);
        assert!(kappa(2.0, 2.0, 0.0, 1e9) < 1e-4);
        assert_eq!(hardy_const(2.0, 0.0).unwrap(), 2.0);
        assert_eq!(copson_const(2.0, 0.0).unwrap(), 2.0);
        assert!(copson_const(2.0, 1e9).unwrap() < 1e-8);
        assert!(hardy_const(2.0, 1.0).is_err());
        assert!(copson_const(2.0, -1.0).is_err());
    }

    #[test]
    fn edge_examples() {
        let params = Params {
            p: 2.0,
            r: 1.0,
            alpha: 0.0,
            beta: 1.0,
            ..Params::default()
        };
        let b = chain_bound(ChainEdge::IToVi, &consts(&[("C1", 2.0)]), &params).unwrap();
        assert_eq!(b, vec![("C6", 2.0)]);
        let b = chain_bound(ChainEdge::IiToIv, &consts(&[("K", 1.0), ("C21", 1.0), ("C22", 1.0)]), &params).unwrap();
        // hand evaluation: (β+1)^{1/2} = √2, D_{1/2} = 1, A_{1,-1} = 1, κ = 1
        assert_relative_eq!(b[0].1, 2f64.sqrt() + 1.0, max_relative = 1e-15);
        let b = chain_bound(ChainEdge::ViToIi, &consts(&[("K", 1.0), ("C6", 1.0)]), &params).unwrap();
        assert_eq!(b, vec![("C21", 1.0), ("C22", 1.0)]);
        let err = chain_bound(ChainEdge::IiiToI, &consts(&[("K", 1.0)]), &params).unwrap_err();
        assert!(matches!(err, Error::MissingInput(_)));
    }

    #[test]
    fn bounds_are_monotone() {
        let params = Params {
            p: 2.5,
            r: 1.5,
            alpha: 0.2,
            beta: 0.9,
            phi: None,
            m: 1.0,
        };
        let base = consts(&[
            ("K", 1.2),
            ("C1", 1.0),
            ("C3", 1.1),
            ("C4", 1.3),
            ("C5", 0.9),
            ("C6", 1.0),
            ("C7", 0.7),
            ("C8", 0.8),
            ("C9", 1.4),
            ("C21", 2.0),
            ("C22", 0.5),
        ]);
        for edge in ChainEdge::ALL {
            let b0 = chain_bound(edge, &base, &params).unwrap();
            for name in base.keys() {
                let mut up = base.clone();
                *up.get_mut(name).unwrap() *= 1.01;
                let b1 = chain_bound(edge, &up, &params).unwrap();
                for ((_, x0), (_, x1)) in b0.iter().zip(&b1) {
                    assert!(x1 >= x0, "{edge} not monotone in {name}");
                }
            }
        }
    }

    #[test]
    fn muckenhoupt_examples() {
        let v = Weight::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap();
        let rho = Functional::lq(2.0, Outer::indicator(1.0)).unwrap();
        // B = sup_{t<1} ((1/t - 1) t)^{1/2} = 1, factor 2
        let m = muckenhoupt_upper(&v, &rho, 2.0).unwrap();
        assert!(m >= 2.0 * (1.0 - 1e-9) && m < 2.0 * 1.01, "{m}");
        // classical Hardy: ∫_t^∞ s^{-2} = 1/t, B = 1
        let m = muckenhoupt_upper(&Weight::lebesgue(), &Functional::unweighted(2.0).unwrap(), 2.0).unwrap();
        assert!(m >= 2.0 * (1.0 - 1e-9) && m < 2.0 * 1.01, "{m}");
        assert!(m >= 1.907);
        // w̄ = t^2 on a Lebesgue v: tail of t^{2-2} diverges
        let m = muckenhoupt_upper(&Weight::lebesgue(), &Functional::lq(2.0, Outer::power(1.0, 2.0)).unwrap(), 2.0).unwrap();
        assert_eq!(m, f64::INFINITY);
        let compact = Functional::lq(3.0, Outer::Piecewise(crate::piecewise::PiecewisePower::new(vec![
            crate::piecewise::Piece::new(1.0, 0.0, 0.0),
            crate::piecewise::Piece::new(2.0, 1.0, 0.0),
            crate::piecewise::Piece::new(f64::INFINITY, 0.0, 0.0),
        ]).unwrap())).unwrap();
        assert!(muckenhoupt_upper(&v, &compact, 2.0).unwrap().is_finite());
        let sup = Functional::sup_form(2.0, Outer::one(), Outer::one()).unwrap();
        assert!(matches!(muckenhoupt_upper(&v, &sup, 2.0), Err(Error::UnsupportedFunctional(_))));
    }
}
