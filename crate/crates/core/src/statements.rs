//! The inequality statements of the equivalence theorems: parameters,
//! validation, and evaluation of both sides.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::TestFunction;
use crate::functionals::{Functional, Outer};
use crate::measure::{integrate_fn, merge_breakpoints, PointFn, Quad, Weight};
use crate::operators::{copson, geo_mean, hardy_avg, harm_mean, phi_mean, LogPrefix, OperatorOutput, Phi};
use crate::piecewise::{Piece, PiecewisePower};
use crate::scalar::{conjugate, div0, inv_conjugate, mul0, pow0, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatementId {
    #[serde(rename = "T1.i")]
    T1I,
    #[serde(rename = "T1.ii")]
    T1II,
    #[serde(rename = "T1.iii")]
    T1III,
    #[serde(rename = "T1.iv")]
    T1IV,
    #[serde(rename = "T1.v")]
    T1V,
    #[serde(rename = "T1.vi")]
    T1VI,
    #[serde(rename = "T1.vii")]
    T1VII,
    #[serde(rename = "T1.viii")]
    T1VIII,
    #[serde(rename = "T1.ix")]
    T1IX,
    #[serde(rename = "T3.i")]
    T3I,
    #[serde(rename = "T3.ii")]
    T3II,
    #[serde(rename = "T3.iii")]
    T3III,
    #[serde(rename = "T4.i")]
    T4I,
    #[serde(rename = "T4.ii")]
    T4II,
    #[serde(rename = "T4.iii")]
    T4III,
}

/// How a statement quantifies over its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    /// The inequality is claimed for every admissible parameter tuple.
    ForAll,
    /// The inequality is claimed for some admissible parameter tuple.
    Exists,
    /// No free parameters beyond `p` and the weights.
    Fixed,
}

impl StatementId {
    pub const ALL: [StatementId; 15] = [
        StatementId::T1I,
        StatementId::T1II,
        StatementId::T1III,
        StatementId::T1IV,
        StatementId::T1V,
        StatementId::T1VI,
        StatementId::T1VII,
        StatementId::T1VIII,
        StatementId::T1IX,
        StatementId::T3I,
        StatementId::T3II,
        StatementId::T3III,
        StatementId::T4I,
        StatementId::T4II,
        StatementId::T4III,
    ];

    pub fn as_str(&self) -> &'static str {
        use StatementId::*;
        match self {
            T1I => "T1.i",
            T1II => "T1.ii",
            T1III => "T1.iii",
            T1IV => "T1.iv",
            T1V => "T1.v",
            T1VI => "T1.vi",
            T1VII => "T1.vii",
            T1VIII => "T1.viii",
            T1IX => "T1.ix",
            T3I => "T3.i",
            T3II => "T3.ii",
            T3III => "T3.iii",
            T4I => "T4.i",
            T4II => "T4.ii",
            T4III => "T4.iii",
        }
    }

    pub fn is_t1(&self) -> bool {
        self.as_str().starts_with("T1")
    }

    /// Statements that only make sense for strictly positive `f`.
    pub fn needs_positive(&self) -> bool {
        use StatementId::*;
        matches!(self, T1VI | T1VII | T1VIII | T1IX | T3I | T4I)
    }

    pub fn quantifier(&self) -> Quantifier {
        use StatementId::*;
        match self {
            T1II | T1IV | T1VII => Quantifier::ForAll,
            T1III | T1V | T1VIII => Quantifier::Exists,
            _ => Quantifier::Fixed,
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatementId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatementId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown statement id {s:?}")))
    }
}

/// Parameter tuple `(p, r, α, β, m, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params<T> {
    pub p: T,
    pub r: T,
    pub alpha: T,
    pub beta: T,
    pub m: T,
    pub phi: Option<Phi<T>>,
}

impl<T: Real> Default for Params<T> {
    fn default() -> Self {
        Params {
            p: T::one() + T::one(),
            r: T::one(),
            alpha: T::zero(),
            beta: T::zero(),
            m: T::one(),
            phi: None,
        }
    }
}

impl<T: Real> Params<T> {
    /// `p' = p/(p-1)`.
    pub fn p_conj(&self) -> T {
        conjugate(self.p)
    }
}

/// One statement together with its data.
#[derive(Debug, Clone)]
pub struct StatementInstance<T: Real> {
    pub id: StatementId,
    pub params: Params<T>,
    pub v: Weight<T>,
    /// Second weight, required by the Theorem 3 and 4 statements.
    pub u: Option<Weight<T>>,
    pub rho: Functional<T>,
    /// Drops `α > -1/p'` for (ii)/(iii), which the step (vi)⇒(ii) does not need.
    pub alpha_override: bool,
}

/// Both sides of a statement for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord<T> {
    pub lhs: T,
    pub rhs: T,
    /// `lhs / rhs` with `0/0 = ∞/∞ = 0`.
    pub ratio: T,
}

impl<T: Real> StatementInstance<T> {
    pub fn new(id: StatementId, params: Params<T>, v: Weight<T>, rho: Functional<T>) -> Self {
        StatementInstance {
            id,
            params,
            v,
            u: None,
            rho,
            alpha_override: false,
        }
    }

    pub fn with_u(mut self, u: Weight<T>) -> Self {
        self.u = Some(u);
        self
    }

    pub fn with_alpha_override(mut self, on: bool) -> Self {
        self.alpha_override = on;
        self
    }

    /// Every violated parameter constraint, as text.
    pub fn validate(&self) -> Vec<String> {
        use StatementId::*;
        let Params {
            p,
            r,
            alpha,
            beta,
            m,
            phi,
        } = self.params;
        let one = T::one();
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        if self.id.is_t1() {
            need(p > one && p.is_finite(), format!("p must lie in (1, ∞) (got p = {p})"));
        } else {
            need(p > T::zero() && p.is_finite(), format!("p must lie in (0, ∞) (got p = {p})"));
            need(self.u.is_some(), format!("{} needs a second weight u", self.id));
        }
        let alpha_floor = |q: T, skip_conj: bool| -> T {
            let a = -one / q;
            if skip_conj {
                a
            } else {
                a.max(-inv_conjugate(q))
            }
        };
        match self.id {
            T1II | T1III | T1IV | T1V => {
                need(r >= one && r.is_finite(), format!("r must lie in [1, ∞) (got r = {r})"));
                let skip = self.alpha_override && matches!(self.id, T1II | T1III);
                let floor = alpha_floor(p, skip);
                let text = if skip {
                    "α > -1/p"
                } else {
                    "α > max{-1/p, -1/p'}"
                };
                need(alpha > floor, format!("{text} is violated (α = {alpha}, bound {floor})"));
                if matches!(self.id, T1IV | T1V) {
                    let floor_b = -inv_conjugate(r);
                    need(beta > floor_b, format!("β > -1/r' is violated (β = {beta}, bound {floor_b})"));
                    need(
                        alpha * p - beta * r < r - one,
                        format!(
                            "αp - βr < r - 1 is violated ({} ≥ {})",
                            alpha * p - beta * r,
                            r - one
                        ),
                    );
                }
            }
            T1VII | T1VIII => {
                need(r > T::zero() && r.is_finite(), format!("r must lie in (0, ∞) (got r = {r})"));
            }
            T1IX => match phi {
                None => need(false, "statement T1.ix needs a φ from the catalogue".into()),
                Some(phi) => {
                    if let Err(e) = phi.validate() {
                        need(false, e.to_string());
                    }
                }
            },
            T3II | T3III => {
                need(r >= one && r.is_finite(), format!("r must lie in [1, ∞) (got r = {r})"));
                let mp = m * p;
                if self.id == T3II {
                    need(m >= one / p, format!("m ≥ 1/p is violated (m = {m})"));
                } else {
                    need(m > one / p, format!("m > 1/p is violated (m = {m})"));
                    need(beta > -one, format!("β > -1 is violated (β = {beta})"));
                    need(
                        alpha * mp - beta * r < r - one,
                        format!("αmp - βr < r - 1 is violated ({} ≥ {})", alpha * mp - beta * r, r - one),
                    );
                }
                let floor = alpha_floor(mp, false);
                need(alpha > floor, format!("α > max{{-1/(mp), -1/(mp)'}} is violated (α = {alpha}, bound {floor})"));
            }
            T4I | T4II | T4III => {
                need(m > T::zero() && m.is_finite(), format!("m must lie in (0, ∞) (got m = {m})"));
                need(m * p > one, format!("mp > 1 is violated (mp = {})", m * p));
                need(alpha > -one, format!("α > -1 is violated (α = {alpha})"));
                need(beta > -one, format!("β > -1 is violated (β = {beta})"));
            }
            _ => {}
        }
        bad
    }

    pub fn check(&self) -> Result<()> {
        let bad = self.validate();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }

    fn second_weight(&self) -> Result<&Weight<T>> {
        self.u
            .as_ref()
            .ok_or_else(|| Error::MissingInput(format!("{} needs a second weight u", self.id)))
    }

    /// The function inside `ρ` on the left-hand side.
    pub fn lhs_argument(&self, f: &TestFunction<T>) -> Result<OperatorOutput<T>> {
        use StatementId::*;
        let Params {
            p, r, alpha, beta, m, ..
        } = self.params;
        let one = T::one();
        if self.id.needs_positive() && !f.is_strictly_positive() {
            return Err(Error::NotStrictlyPositive(format!("{} input", self.id)));
        }
        let v = &self.v;
        Ok(match self.id {
            T1I => hardy_avg(f, v),
            T1II | T1III => {
                let vc = v.clone();
                copson(f, v).map(move |t, y| mul0(pow0(vc.primitive(t), alpha), pow0(y, r / p)), "V^a·(.)^(r/p)")
            }
            T1IV | T1V => {
                let vc = v.clone();
                let e = alpha - beta * r / p;
                hardy_avg(f, v).map(move |t, y| mul0(pow0(y, r / p), pow0(vc.primitive(t), e)), "(.)^(r/p)·V^e")
            }
            T1VI => geo_mean(f, v)?,
            T1VII | T1VIII => harm_mean(f, v, r)?,
            T1IX => {
                let phi = self
                    .params
                    .phi
                    .ok_or_else(|| Error::MissingInput("T1.ix needs φ".into()))?;
                phi_mean(f, v, phi)?
            }
            T3I => geo_mean(f, self.second_weight()?)?,
            T3II => {
                let u = self.second_weight()?.clone();
                let w = t3_derived_weight(&u, v, p);
                let uc = u.clone();
                copson(f, &u).map(
                    move |t, y| mul0(mul0(pow0(y, r / p), pow0(uc.primitive(t), alpha * m)), w.eval(t)),
                    "(.)^(r/p)·U^(am)·w",
                )
            }
            T3III => {
                let u = self.second_weight()?.clone();
                let w = t3_derived_weight(&u, v, p);
                let uc = u.clone();
                let e = alpha * m - beta * r / p;
                hardy_avg(f, &u).map(
                    move |t, y| mul0(mul0(pow0(y, r / p), pow0(uc.primitive(t), e)), w.eval(t)),
                    "(.)^(r/p)·U^e·w",
                )
            }
            T4I => harm_mean(f, self.second_weight()?, one)?,
            T4II | T4III => {
                let u = self.second_weight()?.clone();
                let ut = t4_derived_weight(&u, v, p)?;
                let utc = ut.clone();
                let (op, e) = if self.id == T4II {
                    (copson(f, &ut), alpha * m - one)
                } else {
                    (hardy_avg(f, &ut), -(beta - alpha) * m - one)
                };
                op.map(
                    move |t, y| mul0(mul0(pow0(y, m), u.primitive(t)), pow0(utc.primitive(t), e)),
                    "(.)^m·U·Ũ^e",
                )
            }
        })
    }

    pub fn lhs(&self, f: &TestFunction<T>) -> Result<T> {
        let arg = self.lhs_argument(f)?;
        self.rho.apply(&arg)
    }

    /// `(w, s, a)` with right-hand side `(∫ f^s W^a w)^{1/p}`.
    pub fn rhs_moment(&self) -> Result<(Weight<T>, T, T)> {
        use StatementId::*;
        let Params {
            p, r, alpha, beta, m, ..
        } = self.params;
        Ok(match self.id {
            T1I | T1VI | T1IX => (self.v.clone(), p, T::zero()),
            T1II | T1III => (self.v.clone(), r, alpha * p),
            T1IV | T1V => (self.v.clone(), r, alpha * p - beta * r),
            T1VII | T1VIII => (self.v.clone(), r * p, T::zero()),
            T3I | T4I => (self.v.clone(), p, T::zero()),
            T3II => (self.second_weight()?.clone(), r, alpha * m * p),
            T3III => (self.second_weight()?.clone(), r, alpha * p * m - beta * r),
            T4II => (t4_derived_weight(self.second_weight()?, &self.v, p)?, m * p, alpha * m * p),
            T4III => (t4_derived_weight(self.second_weight()?, &self.v, p)?, m * p, -(beta - alpha) * m * p),
        })
    }

    pub fn rhs(&self, f: &TestFunction<T>) -> Result<T> {
        let p = self.params.p;
        let q = Quad::default();
        let (w, s, a) = self.rhs_moment()?;
        let integral = f.weighted_moment(&w, s, a, &q)?.value;
        Ok(pow0(integral, T::one() / p))
    }

    pub fn evaluate(&self, f: &TestFunction<T>) -> Result<EvalRecord<T>> {
        let lhs = self.lhs(f)?;
        let rhs = self.rhs(f)?;
        Ok(EvalRecord {
            lhs,
            rhs,
            ratio: div0(lhs, rhs),
        })
    }

    /// `ρ(1) / (∫_0^∞ v)^{1/p}`, zero when `V(∞) = ∞`.
    pub fn constant_term_check(&self) -> Result<T> {
        let r1 = self.rho.rho_one()?;
        Ok(div0(r1, pow0(self.v.v_inf(), T::one() / self.params.p)))
    }
}

/// `w(t) = exp((1/(pU(t))) ∫_0^t ln(u/v) u)`, with the inner integral in closed form.
#[derive(Clone)]
pub struct T3Weight<T: Real> {
    u: Weight<T>,
    p: T,
    prefix: Arc<LogPrefix<T>>,
    bps: Vec<T>,
}

impl<T: Real> fmt::Debug for T3Weight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("T3Weight").field("p", &self.p).finish()
    }
}

impl<T: Real> T3Weight<T> {
    /// `∫_0^t ln(u/v) u`.
    pub fn log_integral(&self, t: T) -> T {
        self.prefix.at(t)
    }
}

impl<T: Real> PointFn<T> for T3Weight<T> {
    fn eval(&self, t: T) -> T {
        let uu = self.u.primitive(t);
        if uu.is_zero() {
            return T::zero();
        }
        let s = self.prefix.at(t);
        if s.is_nan() {
            return T::zero();
        }
        (s / (self.p * uu)).exp()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.bps.clone()
    }
}

pub fn t3_derived_weight<T: Real>(u: &Weight<T>, v: &Weight<T>, p: T) -> T3Weight<T> {
    let ratio = u.density().mul(&v.density().recip());
    T3Weight {
        u: u.clone(),
        p,
        prefix: Arc::new(LogPrefix::new(&ratio, u)),
        bps: merge_breakpoints(&[u.breakpoints(), v.breakpoints()]),
    }
}

/// The same weight with the inner integral done by quadrature (cross-check path).
pub fn t3_derived_weight_quadrature<T: Real>(u: &Weight<T>, v: &Weight<T>, p: T, t: T) -> Result<T> {
    let bps = merge_breakpoints(&[u.breakpoints(), v.breakpoints()]);
    let inner = integrate_fn(
        |s| (u.eval(s) / v.eval(s)).ln() * u.eval(s),
        T::zero(),
        t,
        &bps,
        &Quad::default(),
    )?;
    Ok((inner.value / (p * u.primitive(t))).exp())
}

/// `ũ = u^{p/(p+1)} v^{1/(p+1)}`; its primitive is `Ũ`.
pub fn t4_derived_weight<T: Real>(u: &Weight<T>, v: &Weight<T>, p: T) -> Result<Weight<T>> {
    let a = p / (p + T::one());
    let b = T::one() / (p + T::one());
    let ur = u.density().refine(&v.breakpoints());
    let vr = v.density().refine(&u.breakpoints());
    let pieces = ur
        .pieces()
        .iter()
        .zip(vr.pieces())
        .map(|(pu, pv)| {
            if pu.coef == pv.coef && pu.exponent == pv.exponent {
                *pu
            } else {
                Piece::new(
                    pu.end,
                    pu.coef.powf(a) * pv.coef.powf(b),
                    a * pu.exponent + b * pv.exponent,
                )
            }
        })
        .collect();
    Weight::from_piecewise(PiecewisePower::new(pieces)?.simplify())
}

/// Data of the two-weight Hardy inequality rewritten in the basic form:
/// `v = u^{1-p'}` and `ρ(h) = (∫ h^q w V^q)^{1/q}`.
pub fn two_weight_hardy<T: Real>(u: &Weight<T>, w: &Weight<T>, p: T, q: T) -> Result<(Weight<T>, Functional<T>)> {
    let v = Weight::from_piecewise(u.density().powf(T::one() - conjugate(p)))?;
    let (vc, wc) = (v.clone(), w.clone());
    let bps = merge_breakpoints(&[v.breakpoints(), w.breakpoints()]);
    let outer = crate::measure::FnPoint::new(move |t| mul0(wc.eval(t), pow0(vc.primitive(t), q)), bps);
    let rho = Functional::lq(q, Outer::Fn(Arc::new(outer)))?;
    Ok((v, rho))
}

/// Both sides of `(∫ (∫_0^t g)^q w)^{1/q} ≤ C (∫ g^p u)^{1/p}`, evaluated directly.
pub fn two_weight_hardy_sides<T: Real>(u: &Weight<T>, w: &Weight<T>, p: T, q: T, g: &TestFunction<T>) -> Result<(T, T)> {
    let cum = crate::piecewise::Cumulative::new(g.piecewise().clone());
    let bps = merge_breakpoints(&[g.breakpoints(), w.breakpoints()]);
    let lhs = integrate_fn(
        |t| mul0(pow0(cum.at(t), q), w.eval(t)),
        T::zero(),
        T::infinity(),
        &bps,
        &Quad::default(),
    )?;
    let rhs = g.piecewise().powf(p).mul(u.density()).integral(T::zero(), T::infinity());
    Ok((pow0(lhs.value, T::one() / q), pow0(rhs, T::one() / p)))
}
