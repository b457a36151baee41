//! Test functions in `M_+(0, ∞)`: piecewise powers with zero segments allowed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{integrate_fn, IntegralResult, PointFn, Quad, Weight};
use crate::piecewise::{Piece, PiecewisePower};
use crate::scalar::{lit, mul0, pow0, Real};
use crate::statements::{Params, StatementId};

/// Nonnegative piecewise power function on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction<T> {
    pw: PiecewisePower<T>,
    strictly_positive: bool,
}

impl<T: Real> TestFunction<T> {
    pub fn new(pw: PiecewisePower<T>) -> Self {
        let strictly_positive = pw.is_strictly_positive();
        TestFunction {
            pw,
            strictly_positive,
        }
    }

    /// Builds from `(upto, c, e)` segments.
    pub fn from_segments(segments: &[(T, T, T)]) -> Result<Self> {
        let pieces = segments
            .iter()
            .map(|&(end, c, e)| Piece::new(end, c, e))
            .collect();
        Ok(Self::new(PiecewisePower::new(pieces)?))
    }

    pub fn power(c: T, e: T) -> Self {
        Self::new(PiecewisePower::power(c, e))
    }

    pub fn constant(c: T) -> Self {
        Self::new(PiecewisePower::constant(c))
    }

    /// `χ_(0,a)`.
    pub fn indicator(a: T) -> Self {
        Self::new(PiecewisePower::indicator(a))
    }

    pub fn piecewise(&self) -> &PiecewisePower<T> {
        &self.pw
    }

    pub fn into_piecewise(self) -> PiecewisePower<T> {
        self.pw
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        self.pw.eval(t)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn pow(&self, theta: T) -> Self {
        Self::new(self.pw.powf(theta))
    }

    pub fn scale(&self, lambda: T) -> Self {
        Self::new(self.pw.scale(lambda))
    }

    /// `1/f`; zero segments become `∞`.
    pub fn reciprocal(&self) -> Self {
        Self::new(self.pw.recip())
    }

    /// `f·χ_(0,a)`.
    pub fn truncate(&self, a: T) -> Self {
        Self::new(self.pw.truncate(a))
    }

    /// `f + λ`, which leaves the piecewise power class.
    pub fn add_const(&self, lambda: T) -> Shifted<T> {
        Shifted {
            base: self.pw.clone(),
            lambda,
        }
    }

    /// `f·v` as a piecewise power.
    pub fn mul_weight(&self, w: &Weight<T>) -> PiecewisePower<T> {
        self.pw.mul(w.density())
    }

    /// True when `f` does not increase anywhere (including across breakpoints).
    pub fn is_nonincreasing(&self) -> bool {
        let pieces = self.pw.pieces();
        for (i, p) in pieces.iter().enumerate() {
            if p.coef.is_zero() {
                continue;
            }
            if p.exponent > T::zero() {
                return false;
            }
            if i + 1 < pieces.len() {
                let b = p.end;
                if pieces[i + 1].at(b) > p.at(b) {
                    return false;
                }
            }
        }
        true
    }

    /// `(∫ f^p v)^{1/p}`, exactly.
    pub fn lp_norm(&self, w: &Weight<T>, p: T) -> T {
        let integral = self.pw.powf(p).mul(w.density()).integral(T::zero(), T::infinity());
        pow0(integral, T::one() / p)
    }

    /// `∫_0^∞ f^s V^a v`.
    ///
    /// Exact when `a = 0` or while `V` is a single power (below the first
    /// breakpoint of `v`); quadrature beyond that.
    pub fn weighted_moment(
        &self,
        w: &Weight<T>,
        s: T,
        a: T,
        q: &Quad<T>,
    ) -> Result<IntegralResult<T>> {
        let fs = self.pw.powf(s);
        if a.is_zero() {
            return Ok(IntegralResult::exact(
                fs.mul(w.density()).integral(T::zero(), T::infinity()),
            ));
        }
        let bps = w.breakpoints();
        let cut = bps.first().copied().unwrap_or(T::infinity());
        // V = (c/k) t^k below the first breakpoint
        let (ck, k) = w.head_primitive();
        let (c, g) = w.head();
        let head_factor = PiecewisePower::power(c * pow0(ck, a), g + k * a);
        let head = fs.mul(&head_factor).integral(T::zero(), cut);
        if cut.is_infinite() || head.is_infinite() {
            return Ok(IntegralResult::exact(head));
        }
        let wc = w.clone();
        let fc = fs.clone();
        let mut b = crate::measure::merge_breakpoints(&[bps, fs.breakpoints()]);
        b.retain(|x| *x > cut);
        let rest = integrate_fn(
            move |t| mul0(mul0(fc.eval(t), pow0(wc.primitive(t), a)), wc.eval(t)),
            cut,
            T::infinity(),
            &b,
            q,
        )?;
        Ok(IntegralResult {
            value: head + rest.value,
            method: rest.method,
            error: rest.error,
        })
    }
}

impl<T: Real> PointFn<T> for TestFunction<T> {
    fn eval(&self, t: T) -> T {
        self.pw.eval(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.pw.breakpoints()
    }

    fn as_piecewise(&self) -> Option<&PiecewisePower<T>> {
        Some(&self.pw)
    }
}

/// `g + λ` for a piecewise power `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted<T> {
    pub base: PiecewisePower<T>,
    pub lambda: T,
}

impl<T: Real> PointFn<T> for Shifted<T> {
    fn eval(&self, t: T) -> T {
        self.base.eval(t) + self.lambda
    }

    fn breakpoints(&self) -> Vec<T> {
        self.base.breakpoints()
    }

    fn as_shifted(&self) -> Option<(&PiecewisePower<T>, T)> {
        Some((&self.base, self.lambda))
    }
}

/// Admissible exponent window for the first and last segment of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExponentGuard<T> {
    /// First-segment exponent must exceed this.
    pub head: Option<T>,
    /// Last-segment exponent must stay below this.
    pub tail: Option<T>,
}

impl<T: Real> ExponentGuard<T> {
    /// Intersection of both windows.
    pub fn merge(self, other: Self) -> Self {
        let pick = |a: Option<T>, b: Option<T>, f: fn(T, T) -> T| match (a, b) {
            (Some(x), Some(y)) => Some(f(x, y)),
            (x, None) => x,
            (None, y) => y,
        };
        ExponentGuard {
            head: pick(self.head, other.head, T::max),
            tail: pick(self.tail, other.tail, T::min),
        }
    }
}

/// Exponent window making `∫_0^∞ f^s V^a v` finite.
pub fn guard_for<T: Real>(w: &Weight<T>, s: T, a: T) -> ExponentGuard<T> {
    let (_, g0) = w.head();
    let (_, gl) = w.tail();
    let one = T::one();
    let head = -(a + one) * (g0 + one) / s;
    let tail = if w.v_inf().is_infinite() {
        -(a + one) * (gl + one) / s
    } else {
        -(gl + one) / s
    };
    ExponentGuard {
        head: Some(head),
        tail: Some(tail),
    }
}

/// Parameters of the random test-function generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorProfile<T> {
    pub seed: u64,
    /// Inclusive range for the number of segments.
    pub segments: (usize, usize),
    pub exponents: (T, T),
    /// Coefficients are drawn log-uniformly from this range.
    pub coefficients: (T, T),
    /// Breakpoints are drawn log-uniformly from this range.
    pub breakpoints: (T, T),
    pub guard: ExponentGuard<T>,
    /// Distance kept from the guard exponents.
    pub margin: T,
    /// Probability that a segment other than the first is zero.
    pub zero_prob: T,
    pub strictly_positive: bool,
}

impl<T: Real> Default for GeneratorProfile<T> {
    fn default() -> Self {
        GeneratorProfile {
            seed: 0,
            segments: (1, 4),
            exponents: (lit(-2.0), lit(2.0)),
            coefficients: (lit(0.1), lit(10.0)),
            breakpoints: (lit(0.05), lit(20.0)),
            guard: ExponentGuard::default(),
            margin: lit(0.05),
            zero_prob: lit(0.2),
            strictly_positive: false,
        }
    }
}

impl<T: Real> GeneratorProfile<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_guard(mut self, guard: ExponentGuard<T>) -> Self {
        self.guard = self.guard.merge(guard);
        self
    }

    pub fn positive(mut self) -> Self {
        self.strictly_positive = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.segments.0 == 0 || self.segments.0 > self.segments.1 {
            bad.push("segments: need 1 <= min <= max".to_string());
        }
        if !(self.exponents.0 <= self.exponents.1) {
            bad.push("exponents: empty range".into());
        }
        if !(self.coefficients.0 > T::zero() && self.coefficients.0 <= self.coefficients.1) {
            bad.push("coefficients: need 0 < min <= max".into());
        }
        if !(self.breakpoints.0 > T::zero() && self.breakpoints.0 <= self.breakpoints.1) {
            bad.push("breakpoints: need 0 < min <= max".into());
        }
        if !(self.zero_prob >= T::zero() && self.zero_prob <= T::one()) {
            bad.push("zero_prob: must lie in [0, 1]".into());
        }
        if !(self.margin >= T::zero()) {
            bad.push("margin: must be nonnegative".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }
}

fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    if !(hi > lo) {
        return lo;
    }
    let u: f64 = rng.gen();
    lo + (hi - lo) * lit(u)
}

fn log_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

fn sorted_breakpoints<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, range: (T, T)) -> Vec<T> {
    let mut b: Vec<T> = (0..n).map(|_| log_uniform(rng, range.0, range.1)).collect();
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup();
    b
}

/// Deterministic draw from `profile` (seeded by `profile.seed`).
pub fn random_testfn<T: Real>(profile: &GeneratorProfile<T>) -> TestFunction<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    sample_testfn(profile, &mut rng)
}

/// Draw from `profile` using the caller's generator.
pub fn sample_testfn<T: Real, R: Rng + ?Sized>(
    profile: &GeneratorProfile<T>,
    rng: &mut R,
) -> TestFunction<T> {
    let mut n = rng.gen_range(profile.segments.0..=profile.segments.1.max(profile.segments.0));
    let m = profile.margin;
    if n == 1 {
        if let (Some(h), Some(t)) = (profile.guard.head, profile.guard.tail) {
            if !(h + m + m < t) {
                n = 2;
            }
        }
    }
    let ends = sorted_breakpoints(rng, n - 1, profile.breakpoints);
    let n = ends.len() + 1;
    let mut pieces = Vec::with_capacity(n);
    for i in 0..n {
        let end = if i + 1 == n { T::infinity() } else { ends[i] };
        let zero = !profile.strictly_positive
            && i > 0
            && rng.gen_bool(profile.zero_prob.to_f64().unwrap_or(0.0));
        let c = if zero {
            T::zero()
        } else {
            log_uniform(rng, profile.coefficients.0, profile.coefficients.1)
        };
        let (mut lo, mut hi) = profile.exponents;
        let head = profile.guard.head.filter(|_| i == 0);
        let tail = profile.guard.tail.filter(|_| i + 1 == n && !zero);
        if let Some(h) = head {
            lo = lo.max(h + m);
        }
        if let Some(t) = tail {
            hi = hi.min(t - m);
        }
        let e = if lo <= hi {
            uniform(rng, lo, hi)
        } else {
            match (head, tail) {
                (Some(h), Some(t)) => (h + t) / lit(2.0),
                (Some(h), None) => h + m,
                (None, Some(t)) => t - m,
                (None, None) => lo,
            }
        };
        pieces.push(Piece::new(end, c, e));
    }
    TestFunction::new(PiecewisePower::new(pieces).expect("generator builds valid pieces"))
}

/// Nonincreasing, strictly positive draw: exponents `≤ 0` and downward jumps.
pub fn random_nonincreasing<T: Real, R: Rng + ?Sized>(
    profile: &GeneratorProfile<T>,
    rng: &mut R,
) -> TestFunction<T> {
    let n = rng.gen_range(profile.segments.0..=profile.segments.1.max(profile.segments.0));
    let ends = sorted_breakpoints(rng, n - 1, profile.breakpoints);
    let n = ends.len() + 1;
    let m = profile.margin;
    let mut pieces: Vec<Piece<T>> = Vec::with_capacity(n);
    for i in 0..n {
        let end = if i + 1 == n { T::infinity() } else { ends[i] };
        let mut lo = profile.exponents.0.min(T::zero());
        let mut hi = T::zero();
        if let Some(h) = profile.guard.head.filter(|_| i == 0) {
            lo = lo.max(h + m);
        }
        if let Some(t) = profile.guard.tail.filter(|_| i + 1 == n) {
            hi = hi.min(t - m);
        }
        let e = if lo <= hi { uniform(rng, lo, hi) } else { hi };
        let c = match pieces.last() {
            None => log_uniform(rng, profile.coefficients.0, profile.coefficients.1),
            Some(prev) => {
                let b = prev.end;
                let drop = uniform(rng, lit::<T>(0.2), T::one());
                prev.at(b) * drop / b.powf(e)
            }
        };
        pieces.push(Piece::new(end, c, e));
    }
    TestFunction::new(PiecewisePower::new(pieces).expect("generator builds valid pieces"))
}

/// Parameters of the random weight generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightProfile<T> {
    pub segments: (usize, usize),
    pub gammas: (T, T),
    pub coefficients: (T, T),
    pub breakpoints: (T, T),
}

impl<T: Real> Default for WeightProfile<T> {
    fn default() -> Self {
        WeightProfile {
            segments: (1, 3),
            gammas: (lit(-2.5), lit(1.5)),
            coefficients: (lit(0.2), lit(5.0)),
            breakpoints: (lit(0.1), lit(10.0)),
        }
    }
}

/// Random piecewise power weight; exponents stay away from `-1`.
pub fn random_weight<T: Real, R: Rng + ?Sized>(profile: &WeightProfile<T>, rng: &mut R) -> Weight<T> {
    let n = rng.gen_range(profile.segments.0..=profile.segments.1.max(profile.segments.0));
    let ends = sorted_breakpoints(rng, n - 1, profile.breakpoints);
    let n = ends.len() + 1;
    let mut segs = Vec::with_capacity(n);
    let away: T = lit(0.05);
    for i in 0..n {
        let end = if i + 1 == n { T::infinity() } else { ends[i] };
        let lo = if i == 0 {
            profile.gammas.0.max(-T::one() + away)
        } else {
            profile.gammas.0
        };
        let mut g = uniform(rng, lo, profile.gammas.1.max(lo));
        if (g + T::one()).abs() < away {
            g = -T::one() + away;
        }
        let c = log_uniform(rng, profile.coefficients.0, profile.coefficients.1);
        segs.push((end, c, g));
    }
    Weight::new(&segs).expect("generator builds valid weights")
}

/// Critical exponent `σ` making both sides of a statement marginally divergent for `f = V^σ`.
pub fn critical_exponent<T: Real>(id: StatementId, params: &Params<T>) -> Result<T> {
    let one = T::one();
    let Params {
        p, r, alpha, beta, ..
    } = *params;
    use StatementId::*;
    Ok(match id {
        T1I | T1VI | T1IX => -one / p,
        T1II | T1III => -(alpha * p + one) / r,
        T1IV | T1V => -(alpha * p - beta * r + one) / r,
        T1VII | T1VIII => -one / (r * p),
        T3I | T3II | T3III | T4I | T4II | T4III => {
            return Err(Error::UnsupportedStatement(format!(
                "{} has no extremal family",
                id.as_str()
            )))
        }
    })
}

/// Near-extremal `f_ε = V^{σ+ε} χ_(0,t*)` with `t* = min(V^{-1}(1), b_1)`.
///
/// Below the first breakpoint `b_1` of `v`, `V = (c/k) t^k`, so `f_ε` is a single power.
pub fn extremal_family<T: Real>(
    id: StatementId,
    params: &Params<T>,
    w: &Weight<T>,
    eps: T,
) -> Result<TestFunction<T>> {
    if !(eps > T::zero()) {
        return Err(Error::Invalid(format!("epsilon must be positive (got {eps})")));
    }
    let sigma = critical_exponent(id, params)?;
    let s = sigma + eps;
    let b1 = w.breakpoints().first().copied().unwrap_or(T::infinity());
    let t_star = w.inverse_primitive(T::one()).min(b1);
    let (ck, k) = w.head_primitive();
    let piece = Piece::new(t_star, pow0(ck, s), k * s);
    let pw = if t_star.is_infinite() {
        PiecewisePower::new(vec![piece])?
    } else {
        PiecewisePower::new(vec![piece, Piece::new(T::infinity(), T::zero(), T::zero())])?
    };
    Ok(TestFunction::new(pw))
}

/// Strictly positive `f_{A,ε} ≥ f` with `‖f_{A,ε}‖_{L^p(v)} ≤ (1+ε)‖f‖_{L^p(v)}`.
///
/// Zero segments of `f` (all of them inside `[A, ∞)`) are filled with
/// `δ·min(1, t^{-d})`, `d` chosen so the filler is in `L^p(v)`, and `δ` is the
/// lower end of a bisection bracket on the exact norm budget.
pub fn positivize<T: Real>(
    f: &TestFunction<T>,
    a: T,
    eps: T,
    w: &Weight<T>,
    p: T,
) -> Result<TestFunction<T>> {
    if f.is_strictly_positive() {
        return Ok(f.clone());
    }
    if !(a > T::zero()) || !(eps > T::zero()) || !(p > T::zero()) {
        return Err(Error::Invalid(
            "positivize needs A > 0, eps > 0 and p > 0".into(),
        ));
    }
    let pw = f.piecewise();
    for (i, piece) in pw.pieces().iter().enumerate() {
        if piece.coef.is_zero() && pw.start(i) < a {
            return Err(Error::NotPositiveOnPrefix(a.to_f64().unwrap_or(f64::NAN)));
        }
    }
    let base_p = pw.powf(p).mul(w.density()).integral(T::zero(), T::infinity());
    if !base_p.is_finite() {
        return Err(Error::Invalid("positivize needs a finite L^p(v) norm".into()));
    }
    let (_, gl) = w.tail();
    let d = ((gl + T::one()) / p).max(T::zero()) + T::one();
    let filler = PiecewisePower::new(vec![
        Piece::new(T::one(), T::one(), T::zero()),
        Piece::new(T::infinity(), T::one(), -d),
    ])?;
    // filler restricted to the zero set of f
    let zero_mask = pw.map(|p| {
        if p.coef.is_zero() {
            (T::one(), T::zero())
        } else {
            (T::zero(), T::zero())
        }
    });
    let g = filler.mul(&zero_mask);
    let g_p = g.powf(p).mul(w.density()).integral(T::zero(), T::infinity());
    let budget = (T::one() + eps).powf(p) * base_p;
    let fits = |delta: T| base_p + delta.powf(p) * g_p <= budget;
    let mut lo = T::zero();
    let mut hi = T::one();
    while fits(hi) {
        lo = hi;
        hi = hi + hi;
        if hi.is_infinite() {
            break;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(lo > T::zero()) {
        return Err(Error::Invalid("no positive filler fits the budget".into()));
    }
    let filled = pw.zip(&g, |fp, gp| {
        if fp.coef.is_zero() {
            (gp.coef * lo, gp.exponent)
        } else {
            (fp.coef, fp.exponent)
        }
    });
    Ok(TestFunction::new(filled.simplify()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::integrate;
    use approx::assert_relative_eq;

    fn two_weight() -> Weight<f64> {
        Weight::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(TestFunction::power(1.0, 1.0).eval(2.0), 2.0);
        assert_eq!(TestFunction::indicator(1.0).eval(2.0), 0.0);
        assert_eq!(TestFunction::power(1.0, -1.0).eval(0.5), 2.0);
    }

    #[test]
    fn algebra_examples() {
        let f = TestFunction::power(1.0, 1.0);
        assert_eq!(f.pow(2.0).eval(3.0), 9.0);
        assert_eq!(TestFunction::constant(4.0).reciprocal().eval(7.0), 0.25);
        let t = TestFunction::constant(1.0).truncate(1.0);
        assert_eq!(t, TestFunction::indicator(1.0));
        assert!(!t.is_strictly_positive());
        assert_eq!(TestFunction::indicator(1.0).reciprocal().eval(2.0), f64::INFINITY);
        let s = f.add_const(2.0);
        assert_eq!(s.eval(3.0), 5.0);
        assert_eq!(f.scale(3.0).eval(2.0), 6.0);
    }

    #[test]
    fn guards_make_moments_finite() {
        let w = Weight::lebesgue();
        let profile = GeneratorProfile::default().with_guard(guard_for(&w, 2.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let f = sample_testfn(&profile, &mut rng);
            let g = f.pw.powf(2.0);
            let r = integrate(&crate::measure::FnPoint::new(move |t| g.eval(t), f.pw.breakpoints()), 0.0, f64::INFINITY, &Quad::with_tol(1e-8)).unwrap();
            assert!(r.value.is_finite(), "{:?}", f);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let p = GeneratorProfile::<f64>::default().with_seed(11);
        assert_eq!(random_testfn(&p), random_testfn(&p));
        let q = p.clone().with_seed(12);
        assert_ne!(random_testfn(&p), random_testfn(&q));
    }

    #[test]
    fn nonincreasing_draws() {
        let p = GeneratorProfile::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let f = random_nonincreasing(&p, &mut rng);
            assert!(f.is_nonincreasing());
            assert!(f.is_strictly_positive());
            let mut prev = f64::INFINITY;
            for k in 0..200 {
                let t = 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0);
                let v = f.eval(t);
                assert!(v <= prev * (1.0 + 1e-12));
                prev = v;
            }
        }
    }

    #[test]
    fn extremal_classical() {
        let w = Weight::lebesgue();
        let params = Params {
            p: 2.0,
            ..Params::default()
        };
        let f = extremal_family(StatementId::T1I, &params, &w, 0.05).unwrap();
        assert_relative_eq!(f.eval(0.5), 0.5f64.powf(-0.45), max_relative = 1e-14);
        assert_eq!(f.eval(2.0), 0.0);
        assert!(extremal_family(StatementId::T3I, &params, &w, 0.05).is_err());
    }

    #[test]
    fn positivize_budget() {
        let w = two_weight();
        let f = TestFunction::indicator(1.0);
        let g = positivize(&f, 1.0, 0.1, &w, 2.0).unwrap();
        assert!(g.is_strictly_positive());
        // filler is δ t^{-1} beyond 1
        assert_eq!(g.piecewise().last().exponent, -1.0);
        let base = f.lp_norm(&w, 2.0);
        let got = g.lp_norm(&w, 2.0);
        assert!(got <= 1.1 * base * (1.0 + 1e-12));
        assert!(got > base);
        for &t in &[0.3, 1.0, 2.0, 50.0] {
            assert!(g.eval(t) >= f.eval(t));
        }
        let small = positivize(&f, 1.0, 0.01, &w, 2.0).unwrap();
        assert!(small.eval(2.0) < g.eval(2.0));
        let pos = TestFunction::constant(1.0);
        assert_eq!(positivize(&pos, 1.0, 0.1, &w, 2.0).unwrap(), pos);
        let gap = TestFunction::from_segments(&[(0.5, 1.0, 0.0), (1.0, 0.0, 0.0), (f64::INFINITY, 1.0, -3.0)]).unwrap();
        assert!(matches!(positivize(&gap, 1.0, 0.1, &w, 2.0), Err(Error::NotPositiveOnPrefix(_))));
    }

    #[test]
    fn weighted_moment_routes_agree() {
        let w = Weight::new(&[(0.7, 2.0, 0.5), (f64::INFINITY, 1.0, -2.0)]).unwrap();
        let f = TestFunction::from_segments(&[(2.0, 1.5, -0.2), (f64::INFINITY, 1.0, -1.0)]).unwrap();
        let q = Quad::default();
        let got = f.weighted_moment(&w, 2.0, 0.5, &q).unwrap();
        let (wc, fc) = (w.clone(), f.clone());
        let direct = integrate_fn(
            move |t| fc.eval(t).powi(2) * wc.primitive(t).sqrt() * wc.eval(t),
            0.0,
            f64::INFINITY,
            &[0.7, 2.0],
            &q,
        )
        .unwrap();
        assert_relative_eq!(got.value, direct.value, max_relative = 1e-9);
    }
}
