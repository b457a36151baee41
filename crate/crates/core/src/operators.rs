//! Hardy, Copson, geometric, harmonic and φ-mean operators as lazy evaluators.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{Shifted, TestFunction};
use crate::measure::{integrate_fn, merge_breakpoints, PointFn, Quad, Weight};
use crate::piecewise::{power_integral, power_log_integral, Cumulative, PiecewisePower};
use crate::scalar::{div0, lit, mul0, pow0, Real};

type Eval<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Output of an operator: a pointwise evaluator with a provenance tag.
#[derive(Clone)]
pub struct OperatorOutput<T> {
    eval: Eval<T>,
    breakpoints: Vec<T>,
    provenance: String,
}

impl<T: Real> OperatorOutput<T> {
    pub fn new(
        eval: impl Fn(T) -> T + Send + Sync + 'static,
        breakpoints: Vec<T>,
        provenance: impl Into<String>,
    ) -> Self {
        OperatorOutput {
            eval: Arc::new(eval),
            breakpoints,
            provenance: provenance.into(),
        }
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// `t ↦ g(self(t))`.
    pub fn map(&self, g: impl Fn(T, T) -> T + Send + Sync + 'static, tag: &str) -> Self {
        let inner = self.eval.clone();
        OperatorOutput {
            eval: Arc::new(move |t| g(t, inner(t))),
            breakpoints: self.breakpoints.clone(),
            provenance: format!("{tag}({})", self.provenance),
        }
    }
}

impl<T: Real> fmt::Debug for OperatorOutput<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorOutput")
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl<T: Real> PointFn<T> for OperatorOutput<T> {
    fn eval(&self, t: T) -> T {
        (self.eval)(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.breakpoints.clone()
    }
}

/// Operator input: a piecewise power (exact paths) or any pointwise function.
#[derive(Clone)]
pub enum Source<T: Real> {
    Piecewise(PiecewisePower<T>),
    General(Arc<dyn PointFn<T>>),
}

impl<T: Real> Source<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            Source::Piecewise(p) => p.eval(t),
            Source::General(g) => g.eval(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Source::Piecewise(p) => p.breakpoints(),
            Source::General(g) => g.breakpoints(),
        }
    }

    fn closure(&self) -> Eval<T> {
        match self {
            Source::Piecewise(p) => {
                let p = p.clone();
                Arc::new(move |t| p.eval(t))
            }
            Source::General(g) => {
                let g = g.clone();
                Arc::new(move |t| g.eval(t))
            }
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Source::Piecewise(_) => "closed-form",
            Source::General(_) => "tabulated",
        }
    }
}

impl<T: Real> From<PiecewisePower<T>> for Source<T> {
    fn from(p: PiecewisePower<T>) -> Self {
        Source::Piecewise(p)
    }
}

impl<T: Real> From<TestFunction<T>> for Source<T> {
    fn from(f: TestFunction<T>) -> Self {
        Source::Piecewise(f.into_piecewise())
    }
}

impl<T: Real> From<&TestFunction<T>> for Source<T> {
    fn from(f: &TestFunction<T>) -> Self {
        Source::Piecewise(f.piecewise().clone())
    }
}

impl<T: Real> From<OperatorOutput<T>> for Source<T> {
    fn from(o: OperatorOutput<T>) -> Self {
        Source::General(Arc::new(o))
    }
}

impl<T: Real> From<Shifted<T>> for Source<T> {
    fn from(s: Shifted<T>) -> Self {
        Source::General(Arc::new(s))
    }
}

impl<T: Real> From<Arc<dyn PointFn<T>>> for Source<T> {
    fn from(g: Arc<dyn PointFn<T>>) -> Self {
        Source::General(g)
    }
}

/// Value of a quadrature; on non-convergence the last estimate is used.
pub(crate) fn quad_value<T: Real>(g: impl Fn(T) -> T, a: T, b: T, bps: &[T], q: &Quad<T>) -> T {
    match integrate_fn(g, a, b, bps, q) {
        Ok(r) => r.value,
        Err(Error::NonConvergence { estimate, .. }) => lit(estimate),
        Err(_) => T::zero(),
    }
}

fn default_quad<T: Real>() -> Quad<T> {
    Quad::with_tol(lit(1e-10))
}

/// Knots on a logarithmic grid spanning the breakpoints with a wide margin.
fn knot_grid<T: Real>(bps: &[T]) -> Vec<T> {
    let finite: Vec<T> = bps
        .iter()
        .copied()
        .filter(|b| *b > T::zero() && b.is_finite())
        .collect();
    let lo = finite.iter().copied().fold(T::one(), T::min).ln() - lit(20.0);
    let hi = finite.iter().copied().fold(T::one(), T::max).ln() + lit(20.0);
    let step: T = lit(0.5);
    let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0);
    let mut knots: Vec<T> = (0..=n)
        .map(|i| (lo + step * T::from_usize(i).unwrap()).exp())
        .collect();
    knots.extend(finite);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();
    knots
}

/// Running integral of a general integrand, tabulated at knots.
struct Table<T: Real> {
    knots: Vec<T>,
    acc: Vec<T>,
    g: Eval<T>,
    bps: Vec<T>,
    q: Quad<T>,
    from_right: bool,
}

impl<T: Real> Table<T> {
    fn left(g: Eval<T>, bps: Vec<T>) -> Self {
        let q = default_quad();
        let knots = knot_grid(&bps);
        let mut acc = Vec::with_capacity(knots.len());
        let mut sum = T::zero();
        let mut prev = T::zero();
        for &k in &knots {
            sum = sum + quad_value(|s| g(s), prev, k, &bps, &q);
            acc.push(sum);
            prev = k;
        }
        Table {
            knots,
            acc,
            g,
            bps,
            q,
            from_right: false,
        }
    }

    fn right(g: Eval<T>, bps: Vec<T>) -> Self {
        let q = default_quad();
        let knots = knot_grid(&bps);
        let mut acc = vec![T::zero(); knots.len()];
        let mut sum = T::zero();
        let mut next = T::infinity();
        for (i, &k) in knots.iter().enumerate().rev() {
            sum = sum + quad_value(|s| g(s), k, next, &bps, &q);
            acc[i] = sum;
            next = k;
        }
        Table {
            knots,
            acc,
            g,
            bps,
            q,
            from_right: true,
        }
    }

    fn at(&self, t: T) -> T {
        let g = &self.g;
        if self.from_right {
            let i = self.knots.partition_point(|k| *k < t);
            if i == self.knots.len() {
                return quad_value(|s| g(s), t, T::infinity(), &self.bps, &self.q);
            }
            let part = quad_value(|s| g(s), t, self.knots[i], &self.bps, &self.q);
            conv_sum(self.acc[i], part)
        } else {
            if !(t > T::zero()) {
                return T::zero();
            }
            let i = self.knots.partition_point(|k| *k <= t);
            if i == 0 {
                return quad_value(|s| g(s), T::zero(), t, &self.bps, &self.q);
            }
            let part = quad_value(|s| g(s), self.knots[i - 1], t, &self.bps, &self.q);
            conv_sum(self.acc[i - 1], part)
        }
    }
}

fn conv_sum<T: Real>(a: T, b: T) -> T {
    let s = a + b;
    if s.is_nan() {
        T::zero()
    } else {
        s
    }
}

/// `(1/V(t)) ∫_0^t f v`.
pub fn hardy_avg<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>) -> OperatorOutput<T> {
    let f = f.into();
    let bps = merge_breakpoints(&[f.breakpoints(), w.breakpoints()]);
    let tag = format!("hardy[{}]", f.label());
    let wc = w.clone();
    match f {
        Source::Piecewise(p) => {
            let cum = Cumulative::new(p.mul(w.density()));
            OperatorOutput::new(move |t| div0(cum.at(t), wc.primitive(t)), bps, tag)
        }
        Source::General(_) => {
            let fe = f.closure();
            let wi = w.clone();
            let table = Table::left(Arc::new(move |s| mul0(fe(s), wi.eval(s))), bps.clone());
            OperatorOutput::new(move |t| div0(table.at(t), wc.primitive(t)), bps, tag)
        }
    }
}

/// `∫_t^∞ f v/V`.
pub fn copson<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>) -> OperatorOutput<T> {
    let f = f.into();
    let bps = merge_breakpoints(&[f.breakpoints(), w.breakpoints()]);
    if let (Source::Piecewise(p), true) = (&f, w.density().len() == 1) {
        // single power weight: v/V = k/t exactly
        let (_, k) = w.head_primitive();
        let g = p.mul(&PiecewisePower::power(k, -T::one()));
        return OperatorOutput::new(move |t| g.integral(t, T::infinity()), bps, "copson[closed-form]");
    }
    let fe = f.closure();
    let wi = w.clone();
    let table = Table::right(
        Arc::new(move |s| mul0(fe(s), div0(wi.eval(s), wi.primitive(s)))),
        bps.clone(),
    );
    OperatorOutput::new(move |t| table.at(t), bps, "copson[tabulated]")
}

fn has_zero_piece<T: Real>(f: &Source<T>) -> bool {
    matches!(f, Source::Piecewise(p) if !p.is_strictly_positive())
}

/// `exp((1/V(t)) ∫_0^t ln(f) v)`; rejects inputs with a zero segment.
pub fn geo_mean<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>) -> Result<OperatorOutput<T>> {
    let f = f.into();
    if has_zero_piece(&f) {
        return Err(Error::NotStrictlyPositive("geometric mean input".into()));
    }
    Ok(geo_mean_conventions(f, w))
}

/// Geometric mean evaluated with `exp(ln 0) = 0` instead of rejecting zeros.
pub fn geo_mean_conventions<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>) -> OperatorOutput<T> {
    let f = f.into();
    let bps = merge_breakpoints(&[f.breakpoints(), w.breakpoints()]);
    let tag = format!("geo[{}]", f.label());
    let wc = w.clone();
    let finish = move |s: T, t: T| {
        if s.is_nan() {
            return T::zero();
        }
        let v = wc.primitive(t);
        if v.is_zero() {
            return T::zero();
        }
        (s / v).exp()
    };
    match f {
        Source::Piecewise(p) => {
            let prefix = LogPrefix::new(&p, w);
            OperatorOutput::new(move |t| finish(prefix.at(t), t), bps, tag)
        }
        Source::General(_) => {
            let fe = f.closure();
            let wi = w.clone();
            let table = Table::left(
                Arc::new(move |s| {
                    let x = fe(s);
                    if x.is_infinite() {
                        T::infinity()
                    } else if x.is_zero() {
                        -T::infinity()
                    } else {
                        x.ln() * wi.eval(s)
                    }
                }),
                bps.clone(),
            );
            OperatorOutput::new(move |t| finish(table.at(t), t), bps, tag)
        }
    }
}

/// Exact `∫_0^t ln(f) v` for piecewise `f`, via `ln(c s^e) d s^g = ln c·d s^g + e·d s^g ln s`.
pub(crate) struct LogPrefix<T> {
    segs: Vec<(T, T, T, T, T, T)>,
    prefix: Vec<T>,
}

impl<T: Real> LogPrefix<T> {
    pub(crate) fn new(f: &PiecewisePower<T>, w: &Weight<T>) -> Self {
        let zipped_f = f.refine(&w.breakpoints());
        let dens = w.density().refine(&f.breakpoints());
        let mut segs = Vec::with_capacity(zipped_f.len());
        let mut prefix = Vec::with_capacity(zipped_f.len());
        let mut acc = T::zero();
        for (i, (fp, wp)) in zipped_f.pieces().iter().zip(dens.pieces()).enumerate() {
            let a = zipped_f.start(i);
            let lnc = if fp.coef.is_zero() {
                -T::infinity()
            } else {
                fp.coef.ln()
            };
            let seg = (a, fp.end, lnc, fp.exponent, wp.coef, wp.exponent);
            if fp.end.is_finite() {
                acc = acc + Self::piece(&seg, a, fp.end);
            }
            segs.push(seg);
            prefix.push(acc);
        }
        LogPrefix { segs, prefix }
    }

    fn piece(seg: &(T, T, T, T, T, T), a: T, b: T) -> T {
        let &(_, _, lnc, e, d, g) = seg;
        let base = mul0(lnc, power_integral(d, g, a, b));
        let log = if e.is_zero() {
            T::zero()
        } else {
            e * power_log_integral(d, g, a, b)
        };
        base + log
    }

    pub(crate) fn at(&self, t: T) -> T {
        if !(t > T::zero()) {
            return T::zero();
        }
        let i = self.segs.partition_point(|s| s.1 < t);
        let i = i.min(self.segs.len() - 1);
        let before = if i == 0 { T::zero() } else { self.prefix[i - 1] };
        let seg = &self.segs[i];
        before + Self::piece(seg, seg.0, t)
    }
}

/// `(V(t) / ∫_0^t f^{-1} v)^r`, with `x/∞ = 0`; rejects inputs with a zero segment.
pub fn harm_mean<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>, r: T) -> Result<OperatorOutput<T>> {
    let f = f.into();
    if has_zero_piece(&f) {
        return Err(Error::NotStrictlyPositive("harmonic mean input".into()));
    }
    if !(r > T::zero()) {
        return Err(Error::ParameterOutOfRange(format!(
            "harmonic mean exponent must be positive (got {r})"
        )));
    }
    Ok(harm_mean_conventions(f, w, r))
}

/// Harmonic mean evaluated with the zero conventions on any input.
pub fn harm_mean_conventions<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>, r: T) -> OperatorOutput<T> {
    let f = f.into();
    let bps = merge_breakpoints(&[f.breakpoints(), w.breakpoints()]);
    let tag = format!("harm[{}]", f.label());
    let wc = w.clone();
    match f {
        Source::Piecewise(p) => {
            let cum = Cumulative::new(p.recip().mul(w.density()));
            OperatorOutput::new(
                move |t| pow0(div0(wc.primitive(t), cum.at(t)), r),
                bps,
                tag,
            )
        }
        Source::General(_) => {
            let fe = f.closure();
            let wi = w.clone();
            let table = Table::left(
                Arc::new(move |s| mul0(pow0(fe(s), -T::one()), wi.eval(s))),
                bps.clone(),
            );
            OperatorOutput::new(
                move |t| pow0(div0(wc.primitive(t), table.at(t)), r),
                bps,
                tag,
            )
        }
    }
}

/// Catalogue of admissible `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi<T> {
    /// `ln`, concave increasing.
    Ln,
    /// `s ↦ 1/s`, convex decreasing.
    Recip,
    /// `s ↦ s^θ`, `θ ∈ (0, 1)`, concave increasing.
    Power { theta: T },
}

impl<T: Real> Phi<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Phi::Power { theta } if !(theta > T::zero() && theta < T::one()) => Err(
                Error::UnsupportedPhi(format!("s^{theta} is outside the catalogue (need 0 < θ < 1)")),
            ),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, s: T) -> T {
        match *self {
            Phi::Ln => s.ln(),
            Phi::Recip => pow0(s, -T::one()),
            Phi::Power { theta } => pow0(s, theta),
        }
    }

    pub fn inverse(&self, y: T) -> T {
        match *self {
            Phi::Ln => y.exp(),
            Phi::Recip => pow0(y, -T::one()),
            Phi::Power { theta } => pow0(y, T::one() / theta),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Phi::Ln => "ln".into(),
            Phi::Recip => "recip".into(),
            Phi::Power { theta } => format!("pow({theta})"),
        }
    }
}

/// `φ^{-1}((1/V(t)) ∫_0^t φ(f) v)` for a catalogue `φ`.
pub fn phi_mean<T: Real>(f: impl Into<Source<T>>, w: &Weight<T>, phi: Phi<T>) -> Result<OperatorOutput<T>> {
    phi.validate()?;
    let f = f.into();
    if has_zero_piece(&f) {
        return Err(Error::NotStrictlyPositive("phi-mean input".into()));
    }
    Ok(match phi {
        Phi::Ln => geo_mean_conventions(f, w),
        Phi::Recip => harm_mean_conventions(f, w, T::one()),
        Phi::Power { theta } => {
            let inner: Source<T> = match f {
                Source::Piecewise(p) => Source::Piecewise(p.powf(theta)),
                Source::General(g) => {
                    let bps = g.breakpoints();
                    Source::General(Arc::new(OperatorOutput::new(
                        move |t| pow0(g.eval(t), theta),
                        bps,
                        "pow",
                    )))
                }
            };
            hardy_avg(inner, w).map(move |_, y| pow0(y, T::one() / theta), "phi-pow")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{random_weight, sample_testfn, GeneratorProfile, WeightProfile};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn two_weight() -> Weight<f64> {
        Weight::new(&[(1.0, 1.0, 0.0), (f64::INFINITY, 1.0, -2.0)]).unwrap()
    }

    #[test]
    fn hardy_examples() {
        let w = Weight::lebesgue();
        let c = hardy_avg(TestFunction::constant(3.0), &w);
        assert_relative_eq!(c.eval(7.0), 3.0, max_relative = 1e-15);
        let h = hardy_avg(TestFunction::power(1.0, 1.0), &w);
        assert_relative_eq!(h.eval(5.0), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn hardy_of_power_of_v() {
        // f = V^β on the two-piece weight: V = t on (0,1], 2 - 1/t after
        let w = two_weight();
        let beta = 0.5;
        let wc = w.clone();
        let f = OperatorOutput::new(move |t| wc.primitive(t).powf(beta), w.breakpoints(), "V^b");
        let h = hardy_avg(f, &w);
        for &t in &[0.3, 1.0, 4.0, 100.0] {
            let v = w.primitive(t);
            assert_relative_eq!(h.eval(t), v.powf(beta) / (beta + 1.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn copson_examples() {
        let w = Weight::lebesgue();
        let c = copson(TestFunction::indicator(1.0), &w);
        assert_relative_eq!(c.eval(0.25), 4f64.ln(), max_relative = 1e-14);
        assert_eq!(c.eval(2.0), 0.0);
        let d = copson(TestFunction::constant(1.0), &w);
        assert_eq!(d.eval(3.0), f64::INFINITY);
    }

    #[test]
    fn copson_tail_formula() {
        // f = V^{-β-1} with V(∞) = 2
        let w = two_weight();
        let beta = 1.0;
        let wc = w.clone();
        let f = OperatorOutput::new(move |t| wc.primitive(t).powf(-beta - 1.0), w.breakpoints(), "V");
        let c = copson(f, &w);
        for &t in &[0.2, 1.0, 3.0] {
            let v = w.primitive(t);
            let want = (v.powf(-beta - 1.0) - 2f64.powf(-beta - 1.0)) / (beta + 1.0);
            assert_relative_eq!(c.eval(t), want, max_relative = 1e-8);
        }
        assert_relative_eq!(c.eval(1.0), 0.375, max_relative = 1e-8);
    }

    #[test]
    fn copson_piecewise_multi_piece_weight() {
        let w = two_weight();
        let f = TestFunction::from_segments(&[(0.5, 2.0, 0.3), (f64::INFINITY, 1.0, -1.0)]).unwrap();
        let c = copson(&f, &w);
        let wc = w.clone();
        let fc = f.clone();
        for &t in &[0.01, 0.4, 0.9, 2.0, 30.0] {
            let direct = integrate_fn(
                |s| fc.eval(s) * wc.eval(s) / wc.primitive(s),
                t,
                f64::INFINITY,
                &[0.5, 1.0],
                &Quad::default(),
            )
            .unwrap()
            .value;
            assert_relative_eq!(c.eval(t), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn geo_examples() {
        let w = Weight::lebesgue();
        let g = geo_mean(TestFunction::constant(2.5), &w).unwrap();
        assert_relative_eq!(g.eval(3.0), 2.5, max_relative = 1e-14);
        let g = geo_mean(TestFunction::power(1.0, 1.0), &w).unwrap();
        assert_relative_eq!(g.eval(2.0), 2.0 / E, max_relative = 1e-14);
        assert!(matches!(
            geo_mean(TestFunction::indicator(1.0), &w),
            Err(Error::NotStrictlyPositive(_))
        ));
        let conv = geo_mean_conventions(TestFunction::indicator(1.0), &w);
        assert_eq!(conv.eval(0.5), 1.0);
        assert_eq!(conv.eval(2.0), 0.0);
    }

    #[test]
    fn harm_examples() {
        let w = Weight::lebesgue();
        let h = harm_mean(TestFunction::constant(3.0), &w, 2.0).unwrap();
        assert_relative_eq!(h.eval(1.5), 9.0, max_relative = 1e-14);
        let h = harm_mean(TestFunction::power(1.0, 1.0), &w, 1.5).unwrap();
        for &t in &[1e-3, 1.0, 1e3] {
            assert_eq!(h.eval(t), 0.0);
        }
    }

    #[test]
    fn phi_examples() {
        let w = two_weight();
        let f = TestFunction::from_segments(&[(0.7, 2.0, 0.4), (f64::INFINITY, 1.0, -0.5)]).unwrap();
        let geo = geo_mean(&f, &w).unwrap();
        let ln = phi_mean(&f, &w, Phi::Ln).unwrap();
        let harm = harm_mean(&f, &w, 1.0).unwrap();
        let rec = phi_mean(&f, &w, Phi::Recip).unwrap();
        for &t in &[0.1, 0.7, 3.0] {
            assert_eq!(geo.eval(t), ln.eval(t));
            assert_eq!(harm.eval(t), rec.eval(t));
        }
        let sq = phi_mean(TestFunction::constant(4.0), &w, Phi::Power { theta: 0.5 }).unwrap();
        assert_relative_eq!(sq.eval(2.0), 4.0, max_relative = 1e-14);
        assert!(matches!(
            phi_mean(&f, &w, Phi::Power { theta: 1.5 }),
            Err(Error::UnsupportedPhi(_))
        ));
    }

    #[test]
    fn general_paths_match_closed_forms() {
        let w = two_weight();
        let f = TestFunction::from_segments(&[(0.3, 1.5, -0.3), (2.0, 0.5, 0.2), (f64::INFINITY, 2.0, -1.5)]).unwrap();
        let general = |f: &TestFunction<f64>| -> Source<f64> {
            Source::General(Arc::new(f.clone()) as Arc<dyn PointFn<f64>>)
        };
        let pairs = [
            (hardy_avg(&f, &w), hardy_avg(general(&f), &w)),
            (geo_mean(&f, &w).unwrap(), geo_mean(general(&f), &w).unwrap()),
            (harm_mean(&f, &w, 1.3).unwrap(), harm_mean(general(&f), &w, 1.3).unwrap()),
        ];
        for (exact, tab) in &pairs {
            for &t in &[1e-4, 0.2, 0.3, 1.0, 5.0, 1e3] {
                assert_relative_eq!(exact.eval(t), tab.eval(t), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn jensen_chain_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let profile = GeneratorProfile::default().positive();
        for _ in 0..200 {
            let w = random_weight(&WeightProfile::default(), &mut rng);
            let f = sample_testfn(&profile, &mut rng);
            let h = hardy_avg(&f, &w);
            let g = geo_mean(&f, &w).unwrap();
            let m = harm_mean(&f, &w, 1.0).unwrap();
            let s = phi_mean(&f, &w, Phi::Power { theta: 0.3 }).unwrap();
            for &t in &[0.01, 0.3, 1.0, 4.0, 50.0] {
                let (hv, gv, mv, sv) = (h.eval(t), g.eval(t), m.eval(t), s.eval(t));
                assert!(mv <= gv * (1.0 + 1e-9), "harm {mv} > geo {gv}");
                assert!(gv <= hv * (1.0 + 1e-9), "geo {gv} > hardy {hv}");
                assert!(sv <= hv * (1.0 + 1e-9));
            }
        }
    }
}
