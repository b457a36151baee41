//! Weights on `(0, ∞)` with exact primitives, and the integration backends.

mod quad;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::piecewise::{power_integral, Piece, PiecewisePower};
use crate::scalar::Real;

pub use quad::{integrate, integrate_dv, integrate_fn, Quad};

/// How an integral was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Quadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult<T> {
    pub value: T,
    pub method: Method,
    /// Absolute error estimate, zero for closed forms.
    pub error: T,
}

impl<T: Real> IntegralResult<T> {
    pub fn exact(value: T) -> Self {
        IntegralResult {
            value,
            method: Method::ClosedForm,
            error: T::zero(),
        }
    }
}

/// Anything that can be evaluated pointwise on `(0, ∞)`.
///
/// `breakpoints` lists the points where the function may fail to be smooth;
/// quadrature splits its panels there.
pub trait PointFn<T: Real>: Send + Sync {
    fn eval(&self, t: T) -> T;

    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }

    /// Exact piecewise power representation when there is one.
    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        None
    }

    /// `(g, λ)` when this function is `g + λ` with `g` a piecewise power.
    fn as_shifted(&self) -> Option<(&PiecewisePower<T>, T)> {
        None
    }
}

impl<T: Real> PointFn<T> for PiecewisePower<T> {
    fn eval(&self, t: T) -> T {
        PiecewisePower::eval(self, t)
    }

    fn breakpoints(&self) -> Vec<T> {
        PiecewisePower::breakpoints(self)
    }

    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        Some(self)
    }
}

impl<T: Real, F: PointFn<T> + ?Sized> PointFn<T> for Arc<F> {
    fn eval(&self, t: T) -> T {
        (**self).eval(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        (**self).breakpoints()
    }

    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        (**self).as_piecewise()
    }

    fn as_shifted(&self) -> Option<(&PiecewisePower<T>, T)> {
        (**self).as_shifted()
    }
}

impl<T: Real, F: PointFn<T> + ?Sized> PointFn<T> for &F {
    fn eval(&self, t: T) -> T {
        (**self).eval(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        (**self).breakpoints()
    }

    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        (**self).as_piecewise()
    }

    fn as_shifted(&self) -> Option<(&PiecewisePower<T>, T)> {
        (**self).as_shifted()
    }
}

/// A closure together with its non-smooth points.
#[derive(Clone)]
pub struct FnPoint<T> {
    f: Arc<dyn Fn(T) -> T + Send + Sync>,
    breakpoints: Vec<T>,
}

impl<T: Real> FnPoint<T> {
    pub fn new(f: impl Fn(T) -> T + Send + Sync + 'static, breakpoints: Vec<T>) -> Self {
        FnPoint {
            f: Arc::new(f),
            breakpoints,
        }
    }
}

impl<T: Real> std::fmt::Debug for FnPoint<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnPoint")
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl<T: Real> PointFn<T> for FnPoint<T> {
    fn eval(&self, t: T) -> T {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.breakpoints.clone()
    }
}

/// Sorted, deduplicated union of breakpoint lists.
pub fn merge_breakpoints<T: Real>(lists: &[Vec<T>]) -> Vec<T> {
    let mut all: Vec<T> = lists
        .iter()
        .flatten()
        .copied()
        .filter(|x| *x > T::zero() && x.is_finite())
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all
}

/// Piecewise power weight `v` with primitive `V(t) = ∫_0^t v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight<T> {
    density: PiecewisePower<T>,
    /// `V` at the right end of each segment; the last entry is `V(∞)`.
    cum: Vec<T>,
}

impl<T: Real> Weight<T> {
    /// Builds from `(upto, c, γ)` segments.
    pub fn new(segments: &[(T, T, T)]) -> Result<Self> {
        let pieces = segments
            .iter()
            .map(|&(end, c, g)| Piece::new(end, c, g))
            .collect();
        let density =
            PiecewisePower::new(pieces).map_err(|e| Error::InvalidWeight(e.to_string()))?;
        Self::from_piecewise(density)
    }

    pub fn from_piecewise(density: PiecewisePower<T>) -> Result<Self> {
        for (i, p) in density.pieces().iter().enumerate() {
            if !(p.coef > T::zero()) || !p.coef.is_finite() {
                return Err(Error::InvalidWeight(format!(
                    "segment {i}: coefficient must be finite and strictly positive"
                )));
            }
        }
        let g0 = density.first().exponent;
        if !(g0 > -T::one()) {
            return Err(Error::InvalidWeight(format!(
                "initial exponent must exceed -1 (got {g0})"
            )));
        }
        let mut cum = Vec::with_capacity(density.len());
        let mut acc = T::zero();
        for (i, p) in density.pieces().iter().enumerate() {
            acc = acc + power_integral(p.coef, p.exponent, density.start(i), p.end);
            cum.push(acc);
        }
        Ok(Weight { density, cum })
    }

    /// `c·t^γ` on the whole half-line.
    pub fn power(c: T, gamma: T) -> Result<Self> {
        Self::new(&[(T::infinity(), c, gamma)])
    }

    /// `v ≡ 1`.
    pub fn lebesgue() -> Self {
        Self::power(T::one(), T::zero()).expect("valid weight")
    }

    pub fn density(&self) -> &PiecewisePower<T> {
        &self.density
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        self.density.eval(t)
    }

    pub fn breakpoints(&self) -> Vec<T> {
        self.density.breakpoints()
    }

    /// `V(t)` for `t ∈ [0, ∞]`.
    pub fn primitive(&self, t: T) -> T {
        if !(t > T::zero()) {
            return T::zero();
        }
        if t.is_infinite() {
            return self.v_inf();
        }
        let i = self.density.locate(t);
        let before = if i == 0 { T::zero() } else { self.cum[i - 1] };
        let p = &self.density.pieces()[i];
        before + power_integral(p.coef, p.exponent, self.density.start(i), t)
    }

    /// `V(∞)`, possibly infinite.
    pub fn v_inf(&self) -> T {
        self.cum[self.cum.len() - 1]
    }

    /// `V^{-1}(y)`; `∞` when `y ≥ V(∞)`.
    pub fn inverse_primitive(&self, y: T) -> T {
        if !(y > T::zero()) {
            return T::zero();
        }
        if y >= self.v_inf() {
            return T::infinity();
        }
        let i = self.cum.partition_point(|c| *c < y);
        let before = if i == 0 { T::zero() } else { self.cum[i - 1] };
        let a = self.density.start(i);
        let p = &self.density.pieces()[i];
        let rest = y - before;
        let k = p.exponent + T::one();
        if k.is_zero() {
            a * (rest / p.coef).exp()
        } else {
            let base = a.powf(k) + k * rest / p.coef;
            if base <= T::zero() {
                T::infinity()
            } else {
                base.powf(T::one() / k)
            }
        }
    }

    /// `∫_a^b V^α v = [V^{α+1}/(α+1)]_a^b` (or `[ln V]_a^b` for `α = -1`), exactly.
    pub fn power_moment(&self, alpha: T, a: T, b: T) -> IntegralResult<T> {
        let va = self.primitive(a);
        let vb = self.primitive(b);
        IntegralResult::exact(power_integral(T::one(), alpha, va, vb))
    }

    /// `∫_0^t ln(V) v = V(t)(ln V(t) - 1)`.
    pub fn log_moment(&self, t: T) -> T {
        let v = self.primitive(t);
        if v.is_zero() {
            T::zero()
        } else {
            v * (v.ln() - T::one())
        }
    }

    /// The primitive `V` as a pointwise function.
    pub fn primitive_fn(&self) -> Primitive<T> {
        Primitive(self.clone())
    }

    /// `V(t)^a` as a pointwise function.
    pub fn primitive_pow(&self, a: T) -> FnPoint<T> {
        let w = self.clone();
        FnPoint::new(
            move |t| crate::scalar::pow0(w.primitive(t), a),
            self.breakpoints(),
        )
    }

    /// Cheap summary of the segment layout, for diagnostics.
    pub fn describe(&self) -> String {
        self.density
            .pieces()
            .iter()
            .map(|p| format!("({}, {}·t^{})", p.end, p.coef, p.exponent))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Scale on which this weight is interesting: its breakpoints, or 1.
    pub fn span(&self) -> (T, T) {
        let b = self.breakpoints();
        if b.is_empty() {
            (T::one(), T::one())
        } else {
            (b[0], b[b.len() - 1])
        }
    }

    /// Weight `c·t^γ` restricted from the first piece near zero: `(c, γ)`.
    pub fn head(&self) -> (T, T) {
        let p = self.density.first();
        (p.coef, p.exponent)
    }

    pub fn tail(&self) -> (T, T) {
        let p = self.density.last();
        (p.coef, p.exponent)
    }

    /// Convenience: `V(t)` on the first piece is `c t^k / k`; returns `(c/k, k)`.
    pub fn head_primitive(&self) -> (T, T) {
        let (c, g) = self.head();
        let k = g + T::one();
        (c / k, k)
    }
}

impl<T: Real> PointFn<T> for Weight<T> {
    fn eval(&self, t: T) -> T {
        self.density.eval(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.density.breakpoints()
    }

    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        Some(&self.density)
    }
}

/// The primitive `V` of a weight.
#[derive(Debug, Clone)]
pub struct Primitive<T>(Weight<T>);

impl<T: Real> PointFn<T> for Primitive<T> {
    fn eval(&self, t: T) -> T {
        self.0.primitive(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.0.breakpoints()
    }
}
