//! Scalar abstraction and the extended-real evaluation conventions.
//!
//! Every expression of the shape `0·∞`, `0/0`, `∞/∞` or `exp(ln 0)` evaluates
//! to zero. The helpers here implement those rules once so the rest of the
//! crate never has to special-case them.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Largest `y` for which `exp(y)` is still finite, with some headroom.
    fn log_max() -> Self {
        Self::max_value().ln() * lit(0.98)
    }

    /// Smallest `y` for which `exp(y)` is still a normal number, with some headroom.
    fn log_min() -> Self {
        Self::min_positive_value().ln() * lit(0.98)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// `a·b` with `0·∞ = 0`.
#[inline]
pub fn mul0<T: Real>(a: T, b: T) -> T {
    if a.is_zero() || b.is_zero() {
        T::zero()
    } else {
        a * b
    }
}

/// `a/b` with `0/0 = 0`, `∞/∞ = 0` and `x/0 = ∞` for `x > 0`.
#[inline]
pub fn div0<T: Real>(a: T, b: T) -> T {
    if a.is_zero() || (a.is_infinite() && b.is_infinite()) {
        T::zero()
    } else if b.is_zero() {
        T::infinity()
    } else {
        a / b
    }
}

/// Replaces a `NaN` produced by an indeterminate form with zero.
#[inline]
pub fn conv<T: Real>(x: T) -> T {
    if x.is_nan() {
        T::zero()
    } else {
        x
    }
}

/// `x^e` for `x ∈ [0, ∞]`; `0^e = ∞` for `e < 0`, anything to the zero is one.
#[inline]
pub fn pow0<T: Real>(x: T, e: T) -> T {
    if e.is_zero() {
        T::one()
    } else {
        conv(x.powf(e))
    }
}

/// Relative difference `|a-b| / max(|a|,|b|)`, zero when both vanish.
pub fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale.is_zero() {
        T::zero()
    } else if a == b {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}

/// Hölder conjugate `p' = p/(p-1)`, with `1' = ∞`.
pub fn conjugate<T: Real>(p: T) -> T {
    if p == T::one() {
        T::infinity()
    } else {
        p / (p - T::one())
    }
}

/// `1/p'` computed without passing through infinity.
pub fn inv_conjugate<T: Real>(p: T) -> T {
    T::one() - T::one() / p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_conventions() {
        let inf = f64::INFINITY;
        assert_eq!(mul0(0.0, inf), 0.0);
        assert_eq!(mul0(inf, 0.0), 0.0);
        assert_eq!(div0(0.0, 0.0), 0.0);
        assert_eq!(div0(inf, inf), 0.0);
        assert_eq!(div0(3.0, inf), 0.0);
        assert_eq!(div0(3.0, 0.0), inf);
        // exp(ln 0)
        assert_eq!(0.0f64.ln().exp(), 0.0);
        assert_eq!(conv(f64::NAN), 0.0);
    }

    #[test]
    fn powers_of_extremes() {
        assert_eq!(pow0(0.0f64, -1.0), f64::INFINITY);
        assert_eq!(pow0(0.0f64, 0.0), 1.0);
        assert_eq!(pow0(f64::INFINITY, -0.5), 0.0);
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(2.0f64), 2.0);
        assert_eq!(conjugate(1.0f64), f64::INFINITY);
        assert!((inv_conjugate(3.0f64) - 2.0 / 3.0).abs() < 1e-15);
    }
}
