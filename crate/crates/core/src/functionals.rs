//! Sub-monotone functionals: weighted `L^q`, sup-forms, iterated forms and the
//! transforms used to reduce Theorems 3 and 4 to the basic equivalence.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{sample_testfn, GeneratorProfile, TestFunction};
use crate::measure::{integrate_fn, merge_breakpoints, PointFn, Quad, Weight};
use crate::piecewise::{Cumulative, Piece, PiecewisePower};
use crate::scalar::{div0, lit, mul0, pow0, Real};

/// A nonnegative multiplier: exact piecewise power or any pointwise function.
#[derive(Clone)]
pub enum Outer<T: Real> {
    Piecewise(PiecewisePower<T>),
    Fn(Arc<dyn PointFn<T>>),
}

impl<T: Real> Outer<T> {
    pub fn one() -> Self {
        Outer::Piecewise(PiecewisePower::constant(T::one()))
    }

    /// `χ_(0,a)`.
    pub fn indicator(a: T) -> Self {
        Outer::Piecewise(PiecewisePower::indicator(a))
    }

    pub fn power(c: T, e: T) -> Self {
        Outer::Piecewise(PiecewisePower::power(c, e))
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            Outer::Piecewise(p) => p.eval(t),
            Outer::Fn(g) => g.eval(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Outer::Piecewise(p) => p.breakpoints(),
            Outer::Fn(g) => g.breakpoints(),
        }
    }

    pub fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        match self {
            Outer::Piecewise(p) => Some(p),
            Outer::Fn(_) => None,
        }
    }

    /// Maximal intervals where the multiplier is positive (all of `(0, ∞)` for general ones).
    pub fn support(&self) -> Vec<(T, T)> {
        match self {
            Outer::Fn(_) => vec![(T::zero(), T::infinity())],
            Outer::Piecewise(p) => {
                let mut out: Vec<(T, T)> = Vec::new();
                for (i, piece) in p.pieces().iter().enumerate() {
                    if piece.coef.is_zero() {
                        continue;
                    }
                    let a = p.start(i);
                    match out.last_mut() {
                        Some(last) if last.1 == a => last.1 = piece.end,
                        _ => out.push((a, piece.end)),
                    }
                }
                out
            }
        }
    }
}

impl<T: Real> fmt::Debug for Outer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outer::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            Outer::Fn(_) => f.write_str("Fn(..)"),
        }
    }
}

impl<T: Real> From<PiecewisePower<T>> for Outer<T> {
    fn from(p: PiecewisePower<T>) -> Self {
        Outer::Piecewise(p)
    }
}

impl<T: Real> From<&Weight<T>> for Outer<T> {
    fn from(w: &Weight<T>) -> Self {
        Outer::Piecewise(w.density().clone())
    }
}

/// Borrowing pointwise adapter, used to compose inputs without allocation.
struct Adapter<F, T> {
    f: F,
    bps: Vec<T>,
}

impl<T: Real, F: Fn(T) -> T + Send + Sync> PointFn<T> for Adapter<F, T> {
    fn eval(&self, t: T) -> T {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.bps.clone()
    }
}

/// Variant of a sub-monotone functional.
#[derive(Clone, Debug)]
pub enum Kind<T: Real> {
    /// `(∫ g^q w̄)^{1/q}`; for `q = ∞`, the essential supremum of `g` where `w̄ > 0`.
    WeightedLq { q: T, outer: Outer<T> },
    /// `‖ sup_{s>t} g(s)u(s) ‖_{L^q(w̄)}`.
    SupForm {
        q: T,
        outer: Outer<T>,
        multiplier: Outer<T>,
    },
    /// `‖ (∫_0^t g^r w)^{1/r} ‖_{L^q(w̄)}`.
    Iterated {
        r: T,
        inner: Outer<T>,
        q: T,
        outer: Outer<T>,
    },
    /// `ρ(g^m w)^{1/m}`.
    DerivedT3 {
        base: Box<Functional<T>>,
        m: T,
        w: Outer<T>,
    },
    /// `ρ(g^m U/Ũ)^{1/m}`.
    DerivedT4 {
        base: Box<Functional<T>>,
        m: T,
        u: Weight<T>,
        u_tilde: Weight<T>,
    },
}

/// A sub-monotone functional with its declared constant `K` (`None` when only measured).
#[derive(Clone, Debug)]
pub struct Functional<T: Real> {
    pub kind: Kind<T>,
    k: Option<T>,
    quad: Quad<T>,
}

fn lq_constant<T: Real>(q: T) -> T {
    if q >= T::one() {
        T::one()
    } else {
        lit::<T>(2.0).powf(T::one() / q - T::one())
    }
}

impl<T: Real> Functional<T> {
    fn with_kind(kind: Kind<T>, k: Option<T>) -> Self {
        Functional {
            kind,
            k,
            quad: Quad::default(),
        }
    }

    pub fn lq(q: T, outer: impl Into<Outer<T>>) -> Result<Self> {
        check_q(q)?;
        Ok(Self::with_kind(
            Kind::WeightedLq {
                q,
                outer: outer.into(),
            },
            Some(lq_constant(q)),
        ))
    }

    /// Unweighted `L^q(0, ∞)`.
    pub fn unweighted(q: T) -> Result<Self> {
        Self::lq(q, Outer::one())
    }

    pub fn sup_form(q: T, outer: impl Into<Outer<T>>, multiplier: impl Into<Outer<T>>) -> Result<Self> {
        check_q(q)?;
        Ok(Self::with_kind(
            Kind::SupForm {
                q,
                outer: outer.into(),
                multiplier: multiplier.into(),
            },
            Some(lq_constant(q)),
        ))
    }

    pub fn iterated(r: T, inner: impl Into<Outer<T>>, q: T, outer: impl Into<Outer<T>>) -> Result<Self> {
        check_q(q)?;
        if !(r > T::zero() && r.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!("inner exponent r must be in (0, ∞) (got {r})")));
        }
        Ok(Self::with_kind(
            Kind::Iterated {
                r,
                inner: inner.into(),
                q,
                outer: outer.into(),
            },
            Some(lq_constant(r) * lq_constant(q)),
        ))
    }

    pub fn derived_t3(base: Functional<T>, m: T, w: impl Into<Outer<T>>) -> Result<Self> {
        check_m(m)?;
        Ok(Self::with_kind(
            Kind::DerivedT3 {
                base: Box::new(base),
                m,
                w: w.into(),
            },
            None,
        ))
    }

    pub fn derived_t4(base: Functional<T>, m: T, u: Weight<T>, u_tilde: Weight<T>) -> Result<Self> {
        check_m(m)?;
        Ok(Self::with_kind(
            Kind::DerivedT4 {
                base: Box::new(base),
                m,
                u,
                u_tilde,
            },
            None,
        ))
    }

    pub fn with_quad(mut self, quad: Quad<T>) -> Self {
        self.quad = quad;
        self
    }

    /// Declared `K`, or `None` for transforms whose constant is only measured.
    pub fn declared_k(&self) -> Option<T> {
        self.k
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::WeightedLq { q, .. } => format!("weighted-lq(q={q})"),
            Kind::SupForm { q, .. } => format!("sup-form(q={q})"),
            Kind::Iterated { r, q, .. } => format!("iterated(r={r}, q={q})"),
            Kind::DerivedT3 { base, m, .. } => format!("derived-t3(m={m}, {})", base.name()),
            Kind::DerivedT4 { base, m, .. } => format!("derived-t4(m={m}, {})", base.name()),
        }
    }

    /// Exponent `q` of the outermost Lebesgue layer, when there is one.
    pub fn outer_q(&self) -> Option<T> {
        match &self.kind {
            Kind::WeightedLq { q, .. } | Kind::SupForm { q, .. } | Kind::Iterated { q, .. } => Some(*q),
            _ => None,
        }
    }

    /// `ρ(g)`.
    pub fn apply<G: PointFn<T> + ?Sized>(&self, g: &G) -> Result<T> {
        self.apply_dyn(&g)
    }

    fn apply_dyn(&self, g: &dyn PointFn<T>) -> Result<T> {
        match &self.kind {
            Kind::WeightedLq { q, outer } => lq_apply(*q, outer, g, &self.quad),
            Kind::SupForm { q, outer, multiplier } => {
                let sup = suffix_sup(g, multiplier);
                lq_apply(*q, outer, sup.as_ref(), &self.quad)
            }
            Kind::Iterated { r, inner, q, outer } => iterated_apply(*r, inner, *q, outer, g, &self.quad),
            Kind::DerivedT3 { base, m, w } => {
                let m = *m;
                if let (Some(pw), Outer::Piecewise(wp)) = (g.as_piecewise(), w) {
                    let h = pw.powf(m).mul(wp);
                    return Ok(pow0(base.apply_dyn(&h)?, T::one() / m));
                }
                let bps = merge_breakpoints(&[g.breakpoints(), w.breakpoints()]);
                let h = Adapter {
                    f: |t: T| mul0(pow0(g.eval(t), m), w.eval(t)),
                    bps,
                };
                Ok(pow0(base.apply_dyn(&h)?, T::one() / m))
            }
            Kind::DerivedT4 { base, m, u, u_tilde } => {
                let m = *m;
                if u == u_tilde {
                    if let Some(pw) = g.as_piecewise() {
                        return Ok(pow0(base.apply(&pw.powf(m))?, T::one() / m));
                    }
                    let h = Adapter {
                        f: |t: T| pow0(g.eval(t), m),
                        bps: g.breakpoints(),
                    };
                    return Ok(pow0(base.apply_dyn(&h)?, T::one() / m));
                }
                let bps = merge_breakpoints(&[g.breakpoints(), u.breakpoints(), u_tilde.breakpoints()]);
                let h = Adapter {
                    f: |t: T| mul0(pow0(g.eval(t), m), div0(u.primitive(t), u_tilde.primitive(t))),
                    bps,
                };
                Ok(pow0(base.apply_dyn(&h)?, T::one() / m))
            }
        }
    }

    /// `ρ(1)`.
    pub fn rho_one(&self) -> Result<T> {
        self.apply(&PiecewisePower::constant(T::one()))
    }
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if q > T::zero() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!("q must be in (0, ∞] (got {q})")))
    }
}

fn check_m<T: Real>(m: T) -> Result<()> {
    if m > T::zero() && m.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!("m must be in (0, ∞) (got {m})")))
    }
}

/// Supremum of a piecewise power over `(a, b)`, using one-sided limits at the ends.
pub fn piecewise_sup<T: Real>(pw: &PiecewisePower<T>, a: T, b: T) -> T {
    let mut best = T::zero();
    for (i, p) in pw.pieces().iter().enumerate() {
        let lo = pw.start(i).max(a);
        let hi = p.end.min(b);
        if !(hi > lo) || p.coef.is_zero() {
            continue;
        }
        let v = p.at(lo).max(p.at(hi));
        if v > best {
            best = v;
        }
    }
    best
}

/// Log-spaced sample points in `(a, b)` plus the breakpoints and points just beside them.
fn sample_points<T: Real>(a: T, b: T, bps: &[T]) -> Vec<T> {
    let finite: Vec<T> = bps
        .iter()
        .copied()
        .filter(|x| *x > T::zero() && x.is_finite())
        .collect();
    let lo = if a > T::zero() {
        a
    } else {
        finite.iter().copied().fold(T::one(), T::min) * lit(1e-8)
    };
    let hi = if b.is_finite() {
        b
    } else {
        finite.iter().copied().fold(T::one(), T::max) * lit(1e8)
    };
    let n = 2000usize;
    let (la, lb) = (lo.ln(), hi.ln());
    let mut pts: Vec<T> = (0..=n)
        .map(|i| (la + (lb - la) * T::from_usize(i).unwrap() / T::from_usize(n).unwrap()).exp())
        .collect();
    let rel: T = lit(1e-9);
    for x in finite {
        pts.push(x);
        pts.push(x * (T::one() - rel));
        pts.push(x * (T::one() + rel));
    }
    pts.retain(|x| *x > a && *x < b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

fn ess_sup<T: Real, G: PointFn<T> + ?Sized>(g: &G, outer: &Outer<T>) -> T {
    let mut best = T::zero();
    for (a, b) in outer.support() {
        let v = if let Some(pw) = g.as_piecewise() {
            piecewise_sup(pw, a, b)
        } else if let Some((pw, lambda)) = g.as_shifted() {
            piecewise_sup(pw, a, b) + lambda
        } else {
            let bps = merge_breakpoints(&[g.breakpoints(), outer.breakpoints()]);
            sample_points(a, b, &bps)
                .into_iter()
                .map(|t| g.eval(t))
                .filter(|v| !v.is_nan())
                .fold(T::zero(), T::max)
        };
        best = best.max(v);
    }
    best
}

fn lq_apply<T: Real, G: PointFn<T> + ?Sized>(q: T, outer: &Outer<T>, g: &G, quad: &Quad<T>) -> Result<T> {
    if q.is_infinite() {
        return Ok(ess_sup(g, outer));
    }
    if let (Some(pw), Outer::Piecewise(o)) = (g.as_piecewise(), outer) {
        let total = pw.powf(q).mul(o).integral(T::zero(), T::infinity());
        return Ok(pow0(total, T::one() / q));
    }
    let bps = merge_breakpoints(&[g.breakpoints(), outer.breakpoints()]);
    let integrand = |t: T| mul0(pow0(g.eval(t), q), outer.eval(t));
    let mut total = T::zero();
    for (a, b) in outer.support() {
        total = total + near(integrate_fn(integrand, a, b, &bps, quad).map(|r| r.value))?;
    }
    Ok(pow0(total, T::one() / q))
}

/// Supremum of `a·s^e1 + b·s^e2` over `(x, y)`; with `a, b ≥ 0` it sits at an end.
fn sum_sup<T: Real>(p: &Piece<T>, q: &Piece<T>, x: T, y: T) -> T {
    let at = |s: T| {
        let v = p.at(s) + q.at(s);
        if v.is_nan() {
            T::zero()
        } else {
            v
        }
    };
    at(x).max(at(y))
}

/// Pieces of `t ↦ max(sup_{(t, end)} p, cap)` on `(start, end]`.
fn capped<T: Real>(p: &Piece<T>, start: T, cap: T, out: &mut Vec<Piece<T>>) {
    let decreasing = p.exponent < T::zero() && p.coef > T::zero() && p.coef.is_finite();
    if !decreasing {
        let top = if p.coef.is_zero() { cap } else { cap.max(p.at(p.end)) };
        out.push(Piece::new(p.end, top, T::zero()));
        return;
    }
    let cap = cap.max(p.at(p.end));
    if cap.is_zero() {
        out.push(*p);
        return;
    }
    if cap.is_infinite() {
        out.push(Piece::new(p.end, cap, T::zero()));
        return;
    }
    // c t^e = cap
    let cross = (cap / p.coef).powf(T::one() / p.exponent);
    if cross >= p.end {
        out.push(*p);
    } else if cross > start {
        out.push(Piece::new(cross, p.coef, p.exponent));
        out.push(Piece::new(p.end, cap, T::zero()));
    } else {
        out.push(Piece::new(p.end, cap, T::zero()));
    }
}

/// Points of `(x, y)` where `p + q` equals `level`. With nonnegative coefficients
/// the sum is monotone on each side of its only stationary point.
fn level_crossings<T: Real>(p: &Piece<T>, q: &Piece<T>, level: T, x: T, y: T) -> Vec<T> {
    let sum = |t: T| {
        let v = p.at(t) + q.at(t);
        if v.is_nan() {
            T::zero()
        } else {
            v
        }
    };
    if !level.is_finite() || level.is_zero() {
        return Vec::new();
    }
    let tiny = T::min_positive_value().sqrt();
    let (x, y) = (x.max(tiny), y.min(T::one() / tiny));
    if !(y > x) {
        return Vec::new();
    }
    let mut cuts = vec![x];
    let (e1, e2) = (p.exponent, q.exponent);
    let finite = |c: T| c > T::zero() && c.is_finite();
    if finite(p.coef) && finite(q.coef) && e1 * e2 < T::zero() {
        // e1 c1 s^{e1} + e2 c2 s^{e2} = 0
        let m = (-(q.coef * e2) / (p.coef * e1)).powf(T::one() / (e1 - e2));
        if m > x && m < y {
            cuts.push(m);
        }
    }
    cuts.push(y);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (sum(lo) - level, sum(hi) - level);
        if !(flo * fhi < T::zero()) {
            continue;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            if (sum(mid) - level) * flo > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(lo);
    }
    out
}

/// `t ↦ sup_{s>t} g(s)u(s)`: exact for piecewise and shifted piecewise inputs, on a sample grid otherwise.
fn suffix_sup<'a, T: Real, G: PointFn<T> + ?Sized>(g: &'a G, multiplier: &'a Outer<T>) -> Box<dyn PointFn<T> + 'a> {
    let bps = merge_breakpoints(&[g.breakpoints(), multiplier.breakpoints()]);
    if let (Some(pw), Outer::Piecewise(u)) = (g.as_piecewise(), multiplier) {
        let h = pw.mul(u);
        let n = h.len();
        let mut tail = vec![T::zero(); n + 1];
        for i in (0..n).rev() {
            tail[i] = piecewise_sup(&h, h.start(i), h.pieces()[i].end).max(tail[i + 1]);
        }
        let mut pieces = Vec::with_capacity(2 * n);
        for (i, p) in h.pieces().iter().enumerate() {
            capped(p, h.start(i), tail[i + 1], &mut pieces);
        }
        // exact, so the outer integral sees every crossover as a breakpoint
        if let Ok(step) = PiecewisePower::new(pieces) {
            return Box::new(step);
        }
        return Box::new(Adapter {
            f: move |t: T| {
                let i = h.locate(t);
                let p: &Piece<T> = &h.pieces()[i];
                let here = if t < p.end && !p.coef.is_zero() {
                    p.at(t).max(p.at(p.end))
                } else {
                    T::zero()
                };
                here.max(tail[i + 1])
            },
            bps,
        });
    }
    if let (Some((pw, lambda)), Outer::Piecewise(u)) = (g.as_shifted(), multiplier) {
        // (g + λ)u = gu + λu; refine both to common pieces
        let a = pw.mul(u);
        let b = u.scale(lambda);
        let a = a.refine(&b.breakpoints());
        let b = b.refine(&a.breakpoints());
        let n = a.len();
        let mut tail = vec![T::zero(); n + 1];
        for i in (0..n).rev() {
            tail[i] = sum_sup(&a.pieces()[i], &b.pieces()[i], a.start(i), a.pieces()[i].end).max(tail[i + 1]);
        }
        // kinks where the running sum meets the cap from the right are breakpoints too
        let mut bps = bps;
        for i in 0..n {
            let (p, q) = (&a.pieces()[i], &b.pieces()[i]);
            let cap = sum_sup(p, q, p.end, p.end).max(tail[i + 1]);
            bps.extend(level_crossings(p, q, cap, a.start(i), p.end));
        }
        let bps = merge_breakpoints(&[bps]);
        return Box::new(Adapter {
            f: move |t: T| {
                let i = a.locate(t);
                let p = &a.pieces()[i];
                let here = if t < p.end { sum_sup(p, &b.pieces()[i], t, p.end) } else { T::zero() };
                here.max(tail[i + 1])
            },
            bps,
        });
    }
    // sampled suffix maxima, kept as a step function so the outer integral is exact
    let pts = sample_points(T::zero(), T::infinity(), &bps);
    let mut tail = vec![T::zero(); pts.len() + 1];
    for i in (0..pts.len()).rev() {
        let v = mul0(g.eval(pts[i]), multiplier.eval(pts[i]));
        tail[i] = if v.is_nan() { tail[i + 1] } else { v.max(tail[i + 1]) };
    }
    let mut pieces: Vec<Piece<T>> = pts
        .iter()
        .zip(&tail)
        .map(|(&end, &c)| Piece::new(end, c, T::zero()))
        .collect();
    pieces.push(Piece::new(T::infinity(), T::zero(), T::zero()));
    match PiecewisePower::new(pieces) {
        Ok(step) => Box::new(step),
        Err(_) => Box::new(Adapter {
            f: move |t: T| tail[pts.partition_point(|x| *x <= t)],
            bps,
        }),
    }
}

fn iterated_apply<T: Real, G: PointFn<T> + ?Sized>(
    r: T,
    inner: &Outer<T>,
    q: T,
    outer: &Outer<T>,
    g: &G,
    quad: &Quad<T>,
) -> Result<T> {
    let inv = T::one() / r;
    if let (Some(pw), Outer::Piecewise(w)) = (g.as_piecewise(), inner) {
        let cum = Cumulative::new(pw.powf(r).mul(w));
        if q.is_infinite() {
            // the inner integral is nondecreasing: its sup sits at the right end of the support
            let end = outer.support().last().map(|s| s.1).unwrap_or(T::zero());
            let top = if end.is_infinite() { cum.total() } else { cum.at(end) };
            return Ok(pow0(top, inv));
        }
        let bps = merge_breakpoints(&[pw.breakpoints(), w.breakpoints()]);
        let h = Adapter {
            f: |t: T| pow0(cum.at(t), inv),
            bps,
        };
        return lq_apply(q, outer, &h, quad);
    }
    let bps = merge_breakpoints(&[g.breakpoints(), inner.breakpoints()]);
    let integrand = |s: T| mul0(pow0(g.eval(s), r), inner.eval(s));
    if q.is_infinite() {
        let end = outer.support().last().map(|s| s.1).unwrap_or(T::zero());
        let total = near(integrate_fn(integrand, T::zero(), end, &bps, quad).map(|r| r.value))?;
        return Ok(pow0(total, inv));
    }
    let h = Adapter {
        f: |t: T| match integrate_fn(integrand, T::zero(), t, &bps, quad) {
            Ok(v) => pow0(v.value, inv),
            Err(Error::NonConvergence { estimate, .. }) => pow0(lit(estimate), inv),
            Err(_) => T::zero(),
        },
        bps: bps.clone(),
    };
    lq_apply(q, outer, &h, quad)
}

/// Outcome of the empirical axiom check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport<T> {
    pub trials: usize,
    pub seed: u64,
    pub lattice_violations: usize,
    /// Smallest `K` consistent with the weak triangle inequality against `1`; `None` when `ρ(1) = ∞`.
    pub k_quasitriangle: Option<T>,
    /// Smallest `K` consistent with `ρ(λf) ≤ Kλρ(f)`.
    pub k_weak_lattice: T,
    /// Largest `|ρ(λf) - λρ(f)| / (λρ(f))` seen (zero for positively homogeneous functionals).
    pub homogeneity_defect: T,
    /// Trials skipped because an evaluation failed.
    pub failed: usize,
}

struct Trial<T> {
    lattice_violation: bool,
    k_tri: T,
    k_weak: T,
    defect: T,
    failed: bool,
}

/// Piecewise constant multiplier with values in `[0, 1]`.
fn random_damping<T: Real, R: Rng + ?Sized>(rng: &mut R, range: (T, T)) -> PiecewisePower<T> {
    let n = rng.gen_range(1..=4usize);
    let mut ends: Vec<T> = (0..n - 1)
        .map(|_| {
            let u: f64 = rng.gen();
            (range.0.ln() + (range.1.ln() - range.0.ln()) * lit(u)).exp()
        })
        .collect();
    ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ends.dedup();
    ends.push(T::infinity());
    let pieces = ends
        .into_iter()
        .map(|end| {
            let u: f64 = rng.gen();
            let c = if u < 0.15 {
                0.0
            } else if u > 0.85 {
                1.0
            } else {
                rng.gen::<f64>()
            };
            Piece::new(end, lit(c), T::zero())
        })
        .collect();
    PiecewisePower::new(pieces).expect("valid damping")
}

/// Seeded check of the lattice, weak triangle and weak homogeneity axioms.
///
/// Trial `i` uses its own ChaCha stream, so the report does not depend on thread scheduling.
pub fn check_axioms<T: Real>(rho: &Functional<T>, profile: &GeneratorProfile<T>, n: usize) -> Result<AxiomReport<T>> {
    profile.validate()?;
    if n == 0 {
        return Err(Error::Invalid("axiom check needs at least one trial".into()));
    }
    let rho_one = rho.rho_one()?;
    let check_tri = rho_one.is_finite();
    let slack: T = lit(1e-12);
    let trials: Vec<Trial<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
            rng.set_stream(i as u64);
            let g = sample_testfn(profile, &mut rng);
            let m = random_damping(&mut rng, profile.breakpoints);
            let f = TestFunction::new(g.piecewise().mul(&m));
            let u: f64 = rng.gen();
            let lambda: T = lit(10f64.powf(-3.0 + 6.0 * u));
            let run = || -> Result<Trial<T>> {
                let rf = rho.apply(&f)?;
                let rg = rho.apply(&g)?;
                let lattice_violation = rf > rg * (T::one() + slack) + slack * T::min_positive_value().sqrt();
                let rlf = rho.apply(&f.scale(lambda))?;
                let base = lambda * rf;
                let k_weak = if base.is_finite() && base > T::zero() { rlf / base } else { T::zero() };
                let defect = if base.is_finite() && base > T::zero() {
                    (rlf - base).abs() / base
                } else {
                    T::zero()
                };
                let k_tri = if check_tri {
                    let lg = g.scale(lambda);
                    let num = rho.apply(&lg.add_const(T::one()))?;
                    let den = rho.apply(&lg)? + rho_one;
                    if den.is_finite() { div0(num, den) } else { T::zero() }
                } else {
                    T::zero()
                };
                Ok(Trial {
                    lattice_violation,
                    k_tri,
                    k_weak,
                    defect,
                    failed: false,
                })
            };
            run().unwrap_or(Trial {
                lattice_violation: false,
                k_tri: T::zero(),
                k_weak: T::zero(),
                defect: T::zero(),
                failed: true,
            })
        })
        .collect();
    let mut report = AxiomReport {
        trials: n,
        seed: profile.seed,
        lattice_violations: 0,
        k_quasitriangle: None,
        k_weak_lattice: T::one(),
        homogeneity_defect: T::zero(),
        failed: 0,
    };
    let mut k_tri = T::one();
    for t in &trials {
        report.lattice_violations += t.lattice_violation as usize;
        report.failed += t.failed as usize;
        k_tri = k_tri.max(t.k_tri);
        report.k_weak_lattice = report.k_weak_lattice.max(t.k_weak);
        report.homogeneity_defect = report.homogeneity_defect.max(t.defect);
    }
    if check_tri {
        report.k_quasitriangle = Some(k_tri);
    }
    Ok(report)
}

/// Accepts an integral whose quadrature missed its tolerance but is still within `1e-6` relative.
pub(crate) fn near<T: Real>(r: Result<T>) -> Result<T> {
    match r {
        Err(Error::NonConvergence { estimate, error, .. }) if error <= 1e-6 * estimate.abs() => Ok(lit(estimate)),
        other => other,
    }
}

/// `K³cρ(f) + K²λρ(1) − ρ(cf + λ)`, nonnegative for a sub-monotone `ρ` with constant `K`.
pub fn general_lambda_check<T: Real>(rho: &Functional<T>, k: T, f: &TestFunction<T>, c: T, lambda: T) -> Result<T> {
    let lhs = rho.apply(&f.scale(c).add_const(lambda))?;
    let rf = rho.apply(f)?;
    let r1 = rho.rho_one()?;
    Ok(k.powi(3) * c * rf + k * k * lambda * r1 - lhs)
}
