//! Adaptive Gauss–Kronrod quadrature on `(a, b) ⊂ (0, ∞]`.
//!
//! Integration runs in `y = ln t`, where power-law behaviour at `0` and `∞`
//! becomes exponential. Semi-infinite ends are covered by panels of growing
//! width; once the integrand is a clean exponential in `y` the remainder is
//! added in closed form, so pure power tails are integrated exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{IntegralResult, Method, PointFn, Weight};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    /// Relative tolerance.
    pub tol: T,
    /// Maximum number of panels (each costs 15 evaluations).
    pub max_panels: usize,
}

impl<T: Real> Default for Quad<T> {
    fn default() -> Self {
        Quad {
            tol: lit(1e-10),
            max_panels: 20_000,
        }
    }
}

impl<T: Real> Quad<T> {
    pub fn with_tol(tol: T) -> Self {
        Quad {
            tol,
            ..Self::default()
        }
    }

    fn effective_tol(&self) -> T {
        self.tol.max(T::epsilon() * lit(100.0))
    }
}

/// `∫_a^b g`, in closed form when `g` is a piecewise power.
pub fn integrate<T: Real, G: PointFn<T> + ?Sized>(
    g: &G,
    a: T,
    b: T,
    q: &Quad<T>,
) -> Result<IntegralResult<T>> {
    if let Some(pw) = g.as_piecewise() {
        return Ok(IntegralResult::exact(pw.integral(a, b)));
    }
    let bps = g.breakpoints();
    integrate_fn(|t| g.eval(t), a, b, &bps, q)
}

/// `∫_a^b g` for a closure with known non-smooth points.
pub fn integrate_fn<T: Real>(
    g: impl Fn(T) -> T,
    a: T,
    b: T,
    breakpoints: &[T],
    q: &Quad<T>,
) -> Result<IntegralResult<T>> {
    if !(b > a) {
        return Ok(IntegralResult::exact(T::zero()));
    }
    let h = |y: T| -> T {
        let t = y.exp();
        let v = g(t);
        if v.is_nan() || v.is_zero() {
            T::zero()
        } else {
            v * t
        }
    };
    let mut cuts: Vec<T> = Vec::new();
    if a > T::zero() {
        cuts.push(a.ln());
    }
    for &bp in breakpoints {
        if bp > a && bp < b && bp.is_finite() {
            cuts.push(bp.ln());
        }
    }
    if b.is_finite() {
        cuts.push(b.ln());
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    if cuts.is_empty() {
        cuts.push(T::zero());
    }
    Engine::new(&h, q).run(&cuts, a.is_zero(), b.is_infinite())
}

/// `∫_a^b h(V(t)) v(t) dt`, computed as `∫_{V(a)}^{V(b)} h(u) du`.
pub fn integrate_dv<T: Real>(
    w: &Weight<T>,
    h: impl Fn(T) -> T,
    a: T,
    b: T,
    q: &Quad<T>,
) -> Result<IntegralResult<T>> {
    let va = w.primitive(a);
    let vb = w.primitive(b);
    integrate_fn(h, va, vb, &[], q)
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    lo: T,
    hi: T,
    val: T,
    err: T,
    abs: T,
}

struct ByErr<T>(Panel<T>);

impl<T: Real> PartialEq for ByErr<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.err == other.0.err
    }
}
impl<T: Real> Eq for ByErr<T> {}
impl<T: Real> PartialOrd for ByErr<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for ByErr<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .partial_cmp(&other.0.err)
            .unwrap_or(Ordering::Equal)
    }
}

/// Early exit: the integral diverges, to `-∞` when the flag is set.
struct Infinite(bool);

struct Engine<'a, T, H> {
    h: &'a H,
    tol: T,
    max_panels: usize,
    panels_used: usize,
    xgk: [T; 8],
    wgk: [T; 8],
    wg: [T; 4],
}

/// Outcome of extrapolating one semi-infinite end.
struct Tail<T> {
    rem: T,
    err: T,
}

impl<'a, T: Real, H: Fn(T) -> T> Engine<'a, T, H> {
    fn new(h: &'a H, q: &Quad<T>) -> Self {
        Engine {
            h,
            tol: q.effective_tol(),
            max_panels: q.max_panels,
            panels_used: 0,
            xgk: XGK.map(lit),
            wgk: WGK.map(lit),
            wg: WG.map(lit),
        }
    }

    fn limit(&self) -> T {
        T::log_max() * lit(0.4)
    }

    fn eval(&self, y: T) -> std::result::Result<T, Infinite> {
        let v = (self.h)(y);
        if v.is_infinite() {
            Err(Infinite(v < T::zero()))
        } else {
            Ok(v)
        }
    }

    /// QUADPACK qk15 on `[lo, hi]`.
    fn gk15(&mut self, lo: T, hi: T) -> std::result::Result<Panel<T>, Infinite> {
        self.panels_used += 1;
        let half = lit::<T>(0.5);
        let centr = half * (lo + hi);
        let hlgth = half * (hi - lo);
        let fc = self.eval(centr)?;
        let mut resg = fc * self.wg[3];
        let mut resk = fc * self.wgk[7];
        let mut resabs = resk.abs();
        let mut fv1 = [T::zero(); 7];
        let mut fv2 = [T::zero(); 7];
        for j in 0..3 {
            let jtw = 2 * j + 1;
            let absc = hlgth * self.xgk[jtw];
            let f1 = self.eval(centr - absc)?;
            let f2 = self.eval(centr + absc)?;
            fv1[jtw] = f1;
            fv2[jtw] = f2;
            resg = resg + self.wg[j] * (f1 + f2);
            resk = resk + self.wgk[jtw] * (f1 + f2);
            resabs = resabs + self.wgk[jtw] * (f1.abs() + f2.abs());
        }
        for j in 0..4 {
            let jtwm1 = 2 * j;
            let absc = hlgth * self.xgk[jtwm1];
            let f1 = self.eval(centr - absc)?;
            let f2 = self.eval(centr + absc)?;
            fv1[jtwm1] = f1;
            fv2[jtwm1] = f2;
            resk = resk + self.wgk[jtwm1] * (f1 + f2);
            resabs = resabs + self.wgk[jtwm1] * (f1.abs() + f2.abs());
        }
        let reskh = resk * half;
        let mut resasc = self.wgk[7] * (fc - reskh).abs();
        for j in 0..7 {
            resasc = resasc + self.wgk[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
        }
        let val = resk * hlgth;
        let resabs = resabs * hlgth.abs();
        let resasc = resasc * hlgth.abs();
        let mut err = ((resk - resg) * hlgth).abs();
        if !resasc.is_zero() && !err.is_zero() {
            let r = (lit::<T>(200.0) * err / resasc).powf(lit(1.5));
            err = resasc * r.min(T::one());
        }
        let floor = T::epsilon() * lit(50.0) * resabs;
        if resabs > T::min_positive_value() / (T::epsilon() * lit(50.0)) {
            err = err.max(floor);
        }
        if !val.is_finite() {
            return Err(Infinite(val < T::zero()));
        }
        Ok(Panel {
            lo,
            hi,
            val,
            err,
            abs: resabs,
        })
    }

    /// Local decay rate of `|h|` moving outward at `y` (`dir = -1` for the left end).
    fn rate(&self, y: T, dir: T, d: T) -> Option<T> {
        let a = (self.h)(y).abs();
        let b = (self.h)(y + dir * d).abs();
        if a.is_zero() || b.is_zero() || !a.is_finite() || !b.is_finite() {
            return None;
        }
        Some((a.ln() - b.ln()) / d)
    }

    /// Covers `(−∞, y0]` (dir = −1) or `[y0, ∞)` (dir = +1) with panels until the
    /// remainder can be extrapolated.
    fn tail(
        &mut self,
        y0: T,
        dir: T,
        panels: &mut Vec<Panel<T>>,
        scale: &mut T,
    ) -> std::result::Result<Option<Tail<T>>, Infinite> {
        let mut edge = y0;
        let mut width = T::one();
        let max_width: T = lit(16.0);
        let d: T = lit(0.5);
        let pure_tol: T = lit(1e-9);
        let min_rate: T = lit(1e-8);
        loop {
            let next = edge + dir * width;
            let (lo, hi) = if dir < T::zero() { (next, edge) } else { (edge, next) };
            let p = self.gk15(lo, hi)?;
            *scale = *scale + p.abs;
            panels.push(p);
            edge = next;
            width = (width + width).min(max_width);

            let h0 = self.eval(edge)?;
            if h0.is_zero() {
                // piecewise integrands vanish identically past their last breakpoint
                let h1 = self.eval(edge + dir * d)?;
                if h1.is_zero() {
                    return Ok(Some(Tail {
                        rem: T::zero(),
                        err: T::zero(),
                    }));
                }
            }
            // rate of decay in the outward direction: h(edge + dir·s) ≈ h0·e^{-λ s}
            let l1 = self.rate(edge - dir * d, dir, d);
            let l2 = self.rate(edge - dir * (d + d), dir, d);
            let beyond = edge.abs() >= self.limit();
            match (l1, l2) {
                (Some(l1), Some(l2)) => {
                    // l1 measured closer to the edge; both describe the same exponential
                    // when the integrand is a pure power there
                    let spread = (l1 - l2).abs();
                    let pure = spread <= pure_tol * l1.abs().max(T::one());
                    if pure {
                        if l1 <= min_rate {
                            return Err(Infinite(h0 < T::zero()));
                        }
                        let rem = h0 / l1;
                        let err = rem.abs() * spread / l1;
                        // a slow decay amplifies noise in the rate; cover more ground first
                        if err <= self.tol * (*scale + rem.abs()) || beyond {
                            return Ok(Some(Tail { rem, err }));
                        }
                        continue;
                    }
                    if l1 > min_rate {
                        let rem = h0 / l1;
                        let err = rem.abs() * (spread / l1).min(T::one());
                        if rem.abs() <= lit::<T>(0.01) * self.tol * *scale || beyond {
                            return Ok(Some(Tail { rem, err }));
                        }
                    } else if beyond {
                        if h0.abs() <= T::epsilon() * *scale {
                            return Ok(Some(Tail {
                                rem: T::zero(),
                                err: h0.abs(),
                            }));
                        }
                        return Err(Infinite(h0 < T::zero()));
                    }
                }
                _ => {
                    // a zero or underflow near the edge: stop only if it persists outward
                    let h1 = self.eval(edge + dir * d)?.abs();
                    let h2 = self.eval(edge + dir * (d + d))?.abs();
                    let small = T::epsilon() * *scale;
                    if (h0.abs() <= small && h1 <= small && h2 <= small) || beyond {
                        return Ok(Some(Tail {
                            rem: T::zero(),
                            err: h0.abs(),
                        }));
                    }
                }
            }
            if self.panels_used >= self.max_panels {
                return Ok(None);
            }
        }
    }

    fn run(mut self, cuts: &[T], left_open: bool, right_open: bool) -> Result<IntegralResult<T>> {
        match self.run_inner(cuts, left_open, right_open) {
            Ok(r) => r,
            Err(Infinite(neg)) => Ok(IntegralResult {
                value: if neg { T::neg_infinity() } else { T::infinity() },
                method: Method::Quadrature,
                error: T::zero(),
            }),
        }
    }

    fn run_inner(
        &mut self,
        cuts: &[T],
        left_open: bool,
        right_open: bool,
    ) -> std::result::Result<Result<IntegralResult<T>>, Infinite> {
        let mut panels: Vec<Panel<T>> = Vec::new();
        let mut scale = T::zero();
        let two: T = lit(2.0);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            let n = ((hi - lo) / two).ceil().to_usize().unwrap_or(1).clamp(1, 64);
            let step = (hi - lo) / lit(n as f64);
            for k in 0..n {
                let a = lo + step * lit(k as f64);
                let b = if k + 1 == n { hi } else { a + step };
                let p = self.gk15(a, b)?;
                scale = scale + p.abs;
                panels.push(p);
            }
        }
        let mut tails: Vec<Tail<T>> = Vec::new();
        let ends = [
            (left_open, cuts[0], -T::one()),
            (right_open, cuts[cuts.len() - 1], T::one()),
        ];
        for (open, y0, dir) in ends {
            if !open {
                continue;
            }
            match self.tail(y0, dir, &mut panels, &mut scale)? {
                Some(t) => tails.push(t),
                None => {
                    let est: T = panels.iter().map(|p| p.val).sum();
                    return Ok(Err(self.non_convergence(est, T::infinity())));
                }
            }
        }

        let mut heap: BinaryHeap<ByErr<T>> = panels.into_iter().map(ByErr).collect();
        let half: T = lit(0.5);
        loop {
            let (val, err, abs) = heap.iter().fold(
                (T::zero(), T::zero(), T::zero()),
                |(v, e, a), p| (v + p.0.val, e + p.0.err, a + p.0.abs.max(p.0.val.abs())),
            );
            let tail_rem: T = tails.iter().map(|t| t.rem).sum();
            let tail_err: T = tails.iter().map(|t| t.err).sum();
            let total = val + tail_rem;
            let target = self.tol * (abs + tail_rem.abs());
            if err + tail_err <= target || (err + tail_err).is_zero() {
                return Ok(Ok(IntegralResult {
                    value: total,
                    method: Method::Quadrature,
                    error: err + tail_err,
                }));
            }
            if err <= target * lit(0.5) && tail_err > target * lit(0.5) {
                // only the extrapolated remainder is uncertain; accept it if small
                if tail_err <= lit::<T>(10.0) * target {
                    return Ok(Ok(IntegralResult {
                        value: total,
                        method: Method::Quadrature,
                        error: err + tail_err,
                    }));
                }
                return Ok(Err(self.non_convergence(total, err + tail_err)));
            }
            if self.panels_used + 2 > self.max_panels {
                return Ok(Err(self.non_convergence(total, err + tail_err)));
            }
            // refine the worst panels, several at a time to amortise the scan
            let batch = (heap.len() / 8).clamp(1, 64);
            for _ in 0..batch {
                let Some(ByErr(p)) = heap.pop() else { break };
                if p.err.is_zero() {
                    heap.push(ByErr(p));
                    break;
                }
                let mid = half * (p.lo + p.hi);
                if !(mid > p.lo && mid < p.hi) {
                    // cannot split further in floating point
                    heap.push(ByErr(Panel { err: T::zero(), ..p }));
                    continue;
                }
                let l = self.gk15(p.lo, mid)?;
                let r = self.gk15(mid, p.hi)?;
                heap.push(ByErr(l));
                heap.push(ByErr(r));
            }
        }
    }

    fn non_convergence(&self, estimate: T, error: T) -> Error {
        Error::NonConvergence {
            tol: self.tol.to_f64().unwrap_or(f64::NAN),
            panels: self.panels_used,
            estimate: estimate.to_f64().unwrap_or(f64::NAN),
            error: error.to_f64().unwrap_or(f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FnPoint;
    use approx::assert_relative_eq;

    fn q() -> Quad<f64> {
        Quad::default()
    }

    #[test]
    fn weight_total_mass() {
        let w = Weight::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap();
        let g = FnPoint::new(move |t| w.eval(t), vec![1.0]);
        let r = integrate(&g, 0.0, f64::INFINITY, &Quad::with_tol(1e-10)).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 2e-10);
        assert_eq!(r.method, Method::Quadrature);
    }

    #[test]
    fn slow_power_with_rate_noise() {
        // t^{-0.995} on (0, 1] with a small ripple, as a tabulated integrand would carry
        let g = |t: f64| t.powf(-0.995) * (1.0 + 3e-11 * (10.0 * t.ln()).sin());
        let r = integrate_fn(g, 0.0, 1.0, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 200.0, max_relative = 1e-8);
    }

    #[test]
    fn truncated_linear() {
        let r = integrate_fn(|t: f64| if t < 2.0 { t } else { 0.0 }, 0.0, f64::INFINITY, &[2.0], &q())
            .unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn pure_power_tails_are_exact() {
        // ∫_0^1 t^{-0.99} = 100, the left tail decays at rate 0.01 only
        let r = integrate_fn(|t: f64| t.powf(-0.99), 0.0, 1.0, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 100.0, max_relative = 1e-10);
        let r = integrate_fn(|t: f64| t.powf(-1.5), 1.0, f64::INFINITY, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn divergence_is_infinite() {
        let r = integrate_fn(|t: f64| 1.0 / t, 1.0, f64::INFINITY, &[], &q()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        let r = integrate_fn(|t: f64| t.powf(-1.2), 0.0, 1.0, &[], &q()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        let r = integrate_fn(|_t: f64| 1.0, 0.0, f64::INFINITY, &[], &q()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
    }

    #[test]
    fn non_power_tails() {
        // ∫_0^1 ln(1/t)^2 = 2
        let r = integrate_fn(|t: f64| (1.0 / t).ln().powi(2), 0.0, 1.0, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
        // ∫_0^∞ e^{-t} = 1
        let r = integrate_fn(|t: f64| (-t).exp(), 0.0, f64::INFINITY, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
        // ∫_0^∞ dt / (1 + t)^2 = 1
        let r = integrate_fn(|t: f64| (1.0 + t).powi(-2), 0.0, f64::INFINITY, &[], &q()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn sign_changing() {
        // ∫_0^1 ln t = -1
        let r = integrate_fn(|t: f64| t.ln(), 0.0, 1.0, &[], &q()).unwrap();
        assert_relative_eq!(r.value, -1.0, max_relative = 1e-10);
        // ∫_0^e ln t = 0
        let r = integrate_fn(|t: f64| t.ln(), 0.0, std::f64::consts::E, &[], &q()).unwrap();
        assert!(r.value.abs() < 1e-9, "{:?}", r);
    }

    #[test]
    fn infinite_values_and_nan() {
        let r = integrate_fn(|_t: f64| f64::INFINITY, 1.0, 2.0, &[], &q()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        let r = integrate_fn(|_t: f64| f64::NAN, 1.0, 2.0, &[], &q()).unwrap();
        assert_eq!(r.value, 0.0);
        let r = integrate_fn(|t: f64| t.ln() / t, 0.0, 1.0, &[], &q()).unwrap();
        assert_eq!(r.value, f64::NEG_INFINITY);
    }

    #[test]
    fn budget_exhaustion() {
        let tight = Quad {
            tol: 1e-14,
            max_panels: 3,
        };
        let r = integrate_fn(|t: f64| (10.0 * t).sin().abs(), 1.0, 50.0, &[], &tight);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn v_substitution() {
        let w = Weight::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap();
        // ∫_0^∞ V^{1/2} v = (2/3) V(∞)^{3/2}
        let r = integrate_dv(&w, |u: f64| u.sqrt(), 0.0, f64::INFINITY, &q()).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0 * 2f64.powf(1.5), max_relative = 1e-10);
    }

    #[test]
    fn single_precision() {
        let r = integrate_fn(|t: f32| t.powf(-0.5), 0.0, 4.0, &[], &Quad::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-4);
    }
}
