//! Piecewise power functions `t ↦ c_i t^{e_i}` on `(0, ∞)` and their exact integrals.

use crate::error::{Error, Result};
use crate::scalar::{conv, mul0, pow0, Real};

/// One segment `c·t^e` on `(start, end]`; the start is the previous segment's end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub end: T,
    pub coef: T,
    pub exponent: T,
}

impl<T: Real> Piece<T> {
    pub fn new(end: T, coef: T, exponent: T) -> Self {
        Piece { end, coef, exponent }
    }

    #[inline]
    pub fn at(&self, t: T) -> T {
        power_value(self.coef, self.exponent, t)
    }
}

/// `c·t^e` with the zero conventions (`0·∞ = 0`, an infinite coefficient stays infinite).
#[inline]
pub fn power_value<T: Real>(c: T, e: T, t: T) -> T {
    if c.is_zero() {
        T::zero()
    } else if c.is_infinite() {
        T::infinity()
    } else {
        mul0(c, pow0(t, e))
    }
}

/// Function that is a single power on each of finitely many intervals covering `(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePower<T> {
    pieces: Vec<Piece<T>>,
}

impl<T: Real> PiecewisePower<T> {
    /// Builds from pieces ordered by `end`; the last end must be `∞`.
    /// Coefficients may be zero or `+∞`, never negative.
    pub fn new(pieces: Vec<Piece<T>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidFunction("no segments".into()));
        }
        let mut prev = T::zero();
        for (i, p) in pieces.iter().enumerate() {
            if !(p.end > prev) {
                return Err(Error::InvalidFunction(format!(
                    "segment {i}: breakpoints must be strictly increasing and positive"
                )));
            }
            if p.end.is_infinite() && i + 1 != pieces.len() {
                return Err(Error::InvalidFunction(format!(
                    "segment {i}: only the last segment may extend to infinity"
                )));
            }
            if p.coef.is_nan() || p.coef < T::zero() {
                return Err(Error::InvalidFunction(format!(
                    "segment {i}: coefficient must be nonnegative"
                )));
            }
            if !p.exponent.is_finite() {
                return Err(Error::InvalidFunction(format!(
                    "segment {i}: exponent must be finite"
                )));
            }
            prev = p.end;
        }
        if prev.is_finite() {
            return Err(Error::InvalidFunction(
                "last segment must extend to infinity".into(),
            ));
        }
        Ok(PiecewisePower { pieces })
    }

    /// `c·t^e` on the whole half-line.
    pub fn power(c: T, e: T) -> Self {
        PiecewisePower {
            pieces: vec![Piece::new(T::infinity(), c, e)],
        }
    }

    pub fn constant(c: T) -> Self {
        Self::power(c, T::zero())
    }

    /// `χ_(0,a)`.
    pub fn indicator(a: T) -> Self {
        if a.is_infinite() {
            return Self::constant(T::one());
        }
        PiecewisePower {
            pieces: vec![
                Piece::new(a, T::one(), T::zero()),
                Piece::new(T::infinity(), T::zero(), T::zero()),
            ],
        }
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Left end of segment `i`.
    #[inline]
    pub fn start(&self, i: usize) -> T {
        if i == 0 {
            T::zero()
        } else {
            self.pieces[i - 1].end
        }
    }

    /// Index of the segment containing `t`, segments being closed on the right.
    #[inline]
    pub fn locate(&self, t: T) -> usize {
        let i = self.pieces.partition_point(|p| p.end < t);
        i.min(self.pieces.len() - 1)
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        self.pieces[self.locate(t)].at(t)
    }

    /// Finite interior breakpoints.
    pub fn breakpoints(&self) -> Vec<T> {
        self.pieces[..self.pieces.len() - 1]
            .iter()
            .map(|p| p.end)
            .collect()
    }

    pub fn first(&self) -> &Piece<T> {
        &self.pieces[0]
    }

    pub fn last(&self) -> &Piece<T> {
        &self.pieces[self.pieces.len() - 1]
    }

    /// Same function, with extra breakpoints inserted at `points`.
    pub fn refine(&self, points: &[T]) -> Self {
        let mut ends: Vec<T> = self.breakpoints();
        ends.extend(
            points
                .iter()
                .copied()
                .filter(|x| *x > T::zero() && x.is_finite()),
        );
        ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ends.dedup();
        ends.push(T::infinity());
        let pieces = ends
            .into_iter()
            .map(|end| {
                let src = &self.pieces[self.locate(end)];
                Piece::new(end, src.coef, src.exponent)
            })
            .collect();
        PiecewisePower { pieces }
    }

    /// Pointwise combination on the common refinement.
    pub fn zip(&self, other: &Self, f: impl Fn(&Piece<T>, &Piece<T>) -> (T, T)) -> Self {
        let mut ends = self.breakpoints();
        ends.extend(other.breakpoints());
        ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ends.dedup();
        ends.push(T::infinity());
        let pieces = ends
            .into_iter()
            .map(|end| {
                let a = &self.pieces[self.locate(end)];
                let b = &other.pieces[other.locate(end)];
                let (c, e) = f(a, b);
                Piece::new(end, c, e)
            })
            .collect();
        PiecewisePower { pieces }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| (mul0(a.coef, b.coef), a.exponent + b.exponent))
    }

    /// `f^θ` with `0^θ = ∞` for `θ < 0` and `f^0 = 1`.
    pub fn powf(&self, theta: T) -> Self {
        self.map(|p| (pow0(p.coef, theta), p.exponent * theta))
    }

    pub fn scale(&self, lambda: T) -> Self {
        self.map(|p| (mul0(p.coef, lambda), p.exponent))
    }

    pub fn recip(&self) -> Self {
        self.powf(-T::one())
    }

    /// `f·χ_(0,a)`.
    pub fn truncate(&self, a: T) -> Self {
        if a.is_infinite() {
            return self.clone();
        }
        let r = self.refine(&[a]);
        let pieces = r
            .pieces
            .iter()
            .map(|p| {
                if p.end > a {
                    Piece::new(p.end, T::zero(), T::zero())
                } else {
                    *p
                }
            })
            .collect();
        PiecewisePower { pieces }.simplify()
    }

    pub fn map(&self, f: impl Fn(&Piece<T>) -> (T, T)) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let (c, e) = f(p);
                Piece::new(p.end, c, e)
            })
            .collect();
        PiecewisePower { pieces }
    }

    /// Merges adjacent segments carrying the same power (and adjacent zero segments).
    pub fn simplify(self) -> Self {
        let mut out: Vec<Piece<T>> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces {
            if let Some(last) = out.last_mut() {
                let same = (last.coef == p.coef && last.exponent == p.exponent)
                    || (last.coef.is_zero() && p.coef.is_zero());
                if same {
                    last.end = p.end;
                    continue;
                }
            }
            out.push(p);
        }
        PiecewisePower { pieces: out }
    }

    /// `∫_a^b f` in closed form (`∞` when divergent).
    pub fn integral(&self, a: T, b: T) -> T {
        if !(b > a) {
            return T::zero();
        }
        let mut sum = T::zero();
        for i in self.locate(a)..self.pieces.len() {
            let lo = self.start(i).max(a);
            let hi = self.pieces[i].end.min(b);
            if hi > lo {
                let p = &self.pieces[i];
                sum = sum + power_integral(p.coef, p.exponent, lo, hi);
            }
            if self.pieces[i].end >= b {
                break;
            }
        }
        sum
    }

    /// True when every segment has a strictly positive coefficient.
    pub fn is_strictly_positive(&self) -> bool {
        self.pieces.iter().all(|p| p.coef > T::zero())
    }

    /// True when `f(t)` is finite for every `t ∈ (0, ∞)`.
    pub fn is_finite_valued(&self) -> bool {
        self.pieces.iter().all(|p| p.coef.is_finite())
    }
}

/// Running integral `t ↦ ∫_0^t g` of a piecewise power, with the segment totals cached.
#[derive(Debug, Clone)]
pub struct Cumulative<T> {
    g: PiecewisePower<T>,
    prefix: Vec<T>,
}

impl<T: Real> Cumulative<T> {
    pub fn new(g: PiecewisePower<T>) -> Self {
        let mut prefix = Vec::with_capacity(g.len());
        let mut acc = T::zero();
        for (i, p) in g.pieces().iter().enumerate() {
            acc = acc + power_integral(p.coef, p.exponent, g.start(i), p.end);
            prefix.push(acc);
        }
        Cumulative { g, prefix }
    }

    pub fn integrand(&self) -> &PiecewisePower<T> {
        &self.g
    }

    /// `∫_0^t g`.
    pub fn at(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let i = self.g.locate(t);
        let before = if i == 0 { T::zero() } else { self.prefix[i - 1] };
        let p = &self.g.pieces()[i];
        before + power_integral(p.coef, p.exponent, self.g.start(i), t)
    }

    /// `∫_0^∞ g`.
    pub fn total(&self) -> T {
        self.prefix[self.prefix.len() - 1]
    }
}

/// `∫_a^b c s^e ds` for `0 ≤ a < b ≤ ∞`, `c ∈ [0, ∞]`; divergent integrals give `∞`.
pub fn power_integral<T: Real>(c: T, e: T, a: T, b: T) -> T {
    if !(b > a) || c.is_zero() {
        return T::zero();
    }
    if c.is_infinite() {
        return T::infinity();
    }
    let k = e + T::one();
    if k.is_zero() {
        if a.is_zero() || b.is_infinite() {
            return T::infinity();
        }
        return c * (b.ln() - a.ln());
    }
    if k > T::zero() {
        if b.is_infinite() {
            return T::infinity();
        }
        if a.is_zero() {
            return c * b.powf(k) / k;
        }
        // b^k (1 - (a/b)^k) / k, stable when a is close to b
        let r = -(k * (a / b).ln()).exp_m1();
        conv(c * b.powf(k) * r / k)
    } else {
        if a.is_zero() {
            return T::infinity();
        }
        let mk = -k;
        if b.is_infinite() {
            return c * a.powf(k) / mk;
        }
        let r = -(k * (b / a).ln()).exp_m1();
        conv(c * a.powf(k) * r / mk)
    }
}

/// `∫_a^b c s^e ln(s) ds`; may be negative, `±∞` when divergent.
pub fn power_log_integral<T: Real>(c: T, e: T, a: T, b: T) -> T {
    if !(b > a) || c.is_zero() {
        return T::zero();
    }
    let k = e + T::one();
    let two = T::one() + T::one();
    // antiderivative F(s)
    let anti = |s: T| -> T {
        if k.is_zero() {
            let l = s.ln();
            l * l / two
        } else {
            let l = s.ln();
            s.powf(k) * (l / k - T::one() / (k * k))
        }
    };
    let fa = if a.is_zero() {
        if k > T::zero() {
            T::zero()
        } else {
            // s^k ln s / k -> +inf for k < 0 ; (ln s)^2/2 -> +inf for k = 0
            T::infinity()
        }
    } else {
        anti(a)
    };
    let fb = if b.is_infinite() {
        if k < T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        anti(b)
    };
    if c.is_infinite() {
        return if fb - fa > T::zero() {
            T::infinity()
        } else {
            -T::infinity()
        };
    }
    if fa.is_infinite() && fb.is_infinite() {
        // both ends diverge only for k = 0 over (0, ∞): -∞ + ∞, treated as zero
        return T::zero();
    }
    if fa.is_infinite() {
        return -T::infinity();
    }
    if fb.is_infinite() {
        return T::infinity();
    }
    if a.is_zero() || b.is_infinite() {
        return c * (fb - fa);
    }
    // Subtract the closed form in the shifted variable s = a·x to limit cancellation:
    // ∫_a^b s^e ln s = a^k [ ln a ∫_1^{b/a} x^e dx + ∫_1^{b/a} x^e ln x dx ].
    let ratio = b / a;
    let lr = ratio.ln();
    let (p1, p2) = if k.is_zero() {
        (lr, lr * lr / two)
    } else {
        let em = (k * lr).exp_m1();
        // ∫_1^R x^e = (R^k - 1)/k ; ∫_1^R x^e ln x = R^k ln R / k - (R^k - 1)/k^2
        (em / k, (em + T::one()) * lr / k - em / (k * k))
    };
    c * a.powf(k) * (a.ln() * p1 + p2)
}
