//! Serialized forms shared by reports and configs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::funcspace::TestFunction;
use crate::functionals::{Functional, Outer};
use crate::measure::Weight;
use crate::piecewise::{Piece, PiecewisePower};
use crate::scalar::Real;
use crate::statements::{t3_derived_weight, t4_derived_weight, Params, StatementId, StatementInstance};

/// Version of the report and config layout.
pub const SCHEMA: u32 = 1;

/// One segment `c·t^e` up to `upto`; `None` stands for `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub upto: Option<T>,
    pub c: T,
    pub e: T,
}

impl<T: Real> Segment<T> {
    pub fn of(pw: &PiecewisePower<T>) -> Vec<Self> {
        pw.pieces()
            .iter()
            .map(|p| Segment {
                upto: if p.end.is_finite() { Some(p.end) } else { None },
                c: p.coef,
                e: p.exponent,
            })
            .collect()
    }

    pub fn to_piecewise(segments: &[Self]) -> Result<PiecewisePower<T>> {
        PiecewisePower::new(
            segments
                .iter()
                .map(|s| Piece::new(s.upto.unwrap_or_else(T::infinity), s.c, s.e))
                .collect(),
        )
    }
}

/// An exponent that may be `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent<T> {
    Finite(T),
    Named(Named),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Named {
    Inf,
    Infinity,
}

impl<T: Real> Exponent<T> {
    pub fn value(&self) -> T {
        match self {
            Exponent::Finite(x) => *x,
            Exponent::Named(_) => T::infinity(),
        }
    }

    pub fn of(x: T) -> Self {
        if x.is_infinite() {
            Exponent::Named(Named::Inf)
        } else {
            Exponent::Finite(x)
        }
    }
}

fn context<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Invalid(format!("{field}: {e}")))
}

fn weight<T: Real>(field: &str, segs: &[Segment<T>]) -> Result<Weight<T>> {
    context(field, Segment::to_piecewise(segs).and_then(Weight::from_piecewise))
}

fn outer<T: Real>(field: &str, segs: &Option<Vec<Segment<T>>>) -> Result<Outer<T>> {
    match segs {
        None => Ok(Outer::one()),
        Some(s) => Ok(Outer::Piecewise(context(field, Segment::to_piecewise(s))?)),
    }
}

/// A functional; omitted weights stand for `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec<T> {
    Lq {
        q: Exponent<T>,
        #[serde(default)]
        outer: Option<Vec<Segment<T>>>,
    },
    SupForm {
        q: Exponent<T>,
        #[serde(default)]
        outer: Option<Vec<Segment<T>>>,
        #[serde(default)]
        multiplier: Option<Vec<Segment<T>>>,
    },
    Iterated {
        r: T,
        #[serde(default)]
        inner: Option<Vec<Segment<T>>>,
        q: Exponent<T>,
        #[serde(default)]
        outer: Option<Vec<Segment<T>>>,
    },
    /// `w` is given directly, derived from `(u, v, p)`, or `1`.
    DerivedT3 {
        base: Box<FunctionalSpec<T>>,
        m: T,
        #[serde(default)]
        w: Option<Vec<Segment<T>>>,
        #[serde(default)]
        u: Option<Vec<Segment<T>>>,
        #[serde(default)]
        v: Option<Vec<Segment<T>>>,
        #[serde(default)]
        p: Option<T>,
    },
    /// `ũ` is given directly or derived from `(u, v, p)`.
    DerivedT4 {
        base: Box<FunctionalSpec<T>>,
        m: T,
        u: Vec<Segment<T>>,
        #[serde(default)]
        u_tilde: Option<Vec<Segment<T>>>,
        #[serde(default)]
        v: Option<Vec<Segment<T>>>,
        #[serde(default)]
        p: Option<T>,
    },
}

impl<T: Real> FunctionalSpec<T> {
    pub fn build(&self, field: &str) -> Result<Functional<T>> {
        match self {
            FunctionalSpec::Lq { q, outer: o } => {
                context(&format!("{field}.q"), Functional::lq(q.value(), outer(&format!("{field}.outer"), o)?))
            }
            FunctionalSpec::SupForm { q, outer: o, multiplier } => context(
                &format!("{field}.q"),
                Functional::sup_form(
                    q.value(),
                    outer(&format!("{field}.outer"), o)?,
                    outer(&format!("{field}.multiplier"), multiplier)?,
                ),
            ),
            FunctionalSpec::Iterated { r, inner, q, outer: o } => context(
                field,
                Functional::iterated(
                    *r,
                    outer(&format!("{field}.inner"), inner)?,
                    q.value(),
                    outer(&format!("{field}.outer"), o)?,
                ),
            ),
            FunctionalSpec::DerivedT3 { base, m, w, u, v, p } => {
                let base = base.build(&format!("{field}.base"))?;
                let w = match (w, u, v, p) {
                    (Some(_), _, _, _) | (None, None, None, None) => outer(&format!("{field}.w"), w)?,
                    (None, Some(u), Some(v), Some(p)) => {
                        let u = weight(&format!("{field}.u"), u)?;
                        let v = weight(&format!("{field}.v"), v)?;
                        Outer::Fn(Arc::new(t3_derived_weight(&u, &v, *p)))
                    }
                    _ => {
                        return Err(Error::Invalid(format!(
                            "{field}: derived_t3 needs w, or all of u, v and p"
                        )))
                    }
                };
                context(&format!("{field}.m"), Functional::derived_t3(base, *m, w))
            }
            FunctionalSpec::DerivedT4 {
                base,
                m,
                u,
                u_tilde,
                v,
                p,
            } => {
                let base = base.build(&format!("{field}.base"))?;
                let u = weight(&format!("{field}.u"), u)?;
                let ut = match (u_tilde, v, p) {
                    (Some(ut), _, _) => weight(&format!("{field}.u_tilde"), ut)?,
                    (None, Some(v), Some(p)) => {
                        let v = weight(&format!("{field}.v"), v)?;
                        context(field, t4_derived_weight(&u, &v, *p))?
                    }
                    _ => {
                        return Err(Error::Invalid(format!(
                            "{field}: derived_t4 needs u_tilde, or v and p"
                        )))
                    }
                };
                context(&format!("{field}.m"), Functional::derived_t4(base, *m, u, ut))
            }
        }
    }
}

/// A statement with its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct InstanceSpec<T> {
    /// `"T1.i"` … `"T4.iii"`.
    pub statement: String,
    #[serde(default)]
    pub params: Params<T>,
    pub v: Vec<Segment<T>>,
    #[serde(default)]
    pub u: Option<Vec<Segment<T>>>,
    pub rho: FunctionalSpec<T>,
    #[serde(default)]
    pub alpha_override: bool,
}

impl<T: Real> InstanceSpec<T> {
    /// Builds and validates the instance; errors name the offending field.
    pub fn build(&self, field: &str) -> Result<StatementInstance<T>> {
        let id: StatementId = context(&format!("{field}.statement"), self.statement.parse())?;
        let v = weight(&format!("{field}.v"), &self.v)?;
        let rho = self.rho.build(&format!("{field}.rho"))?;
        let mut inst = StatementInstance::new(id, self.params, v, rho).with_alpha_override(self.alpha_override);
        if let Some(u) = &self.u {
            inst = inst.with_u(weight(&format!("{field}.u"), u)?);
        }
        let bad = inst.validate();
        if !bad.is_empty() {
            return Err(Error::InvalidParams(
                bad.into_iter().map(|m| format!("{field}.params: {m}")).collect(),
            ));
        }
        Ok(inst)
    }
}

/// Test function given by its segments.
pub fn test_function<T: Real>(field: &str, segs: &[Segment<T>]) -> Result<TestFunction<T>> {
    Ok(TestFunction::new(context(field, Segment::to_piecewise(segs))?))
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn digest<C: Serialize>(config: &C) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Envelope written around every command's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    /// `true` when nothing was violated.
    pub clean: bool,
    pub result: R,
}

impl<R> Report<R> {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64, clean: bool, result: R) -> Self {
        Report {
            schema: SCHEMA,
            version: crate::VERSION.to_string(),
            command: command.to_string(),
            config_digest: digest(config),
            seed,
            clean,
            result,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let text = r#"{
            "statement": "T1.ii",
            "params": {"p": 2, "r": 1, "alpha": 0, "beta": 1},
            "v": [{"upto": 1, "c": 1, "e": 0}, {"upto": null, "c": 1, "e": -2}],
            "rho": {"kind": "lq", "q": 2, "outer": [{"upto": 1, "c": 1, "e": 0}, {"upto": null, "c": 0, "e": 0}]}
        }"#;
        let spec: InstanceSpec<f64> = serde_json::from_str(text).unwrap();
        let inst = spec.build("instance").unwrap();
        assert_eq!(inst.id, StatementId::T1II);
        assert_eq!(inst.v.v_inf(), 2.0);
        assert_eq!(inst.rho.declared_k(), Some(1.0));
        let again: InstanceSpec<f64> = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn infinite_exponent() {
        let f: FunctionalSpec<f64> = serde_json::from_str(r#"{"kind": "lq", "q": "inf"}"#).unwrap();
        assert_eq!(f, FunctionalSpec::Lq { q: Exponent::of(f64::INFINITY), outer: None });
        assert!(f.build("rho").unwrap().outer_q().unwrap().is_infinite());
        assert!(serde_json::from_str::<FunctionalSpec<f64>>(r#"{"kind": "lq", "q": "big"}"#).is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"{
            "statement": "T1.ii",
            "params": {"p": 2, "alpha": -0.6},
            "v": [{"upto": null, "c": 1, "e": 0}],
            "rho": {"kind": "lq", "q": 2}
        }"#;
        let spec: InstanceSpec<f64> = serde_json::from_str(text).unwrap();
        let err = spec.build("instance").unwrap_err().to_string();
        assert!(err.contains("instance.params") && err.contains("α > max{-1/p, -1/p'}"), "{err}");
        let bad_v = InstanceSpec {
            v: vec![Segment { upto: None, c: -1.0, e: 0.0 }],
            ..spec
        };
        assert!(bad_v.build("instance").unwrap_err().to_string().starts_with("invalid input: instance.v"));
    }

    #[test]
    fn digest_is_stable() {
        let a = digest(&serde_json::json!({"b": 1, "a": [1.5, null]}));
        let b = digest(&serde_json::json!({"a": [1.5, null], "b": 1}));
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }
}
