//! Finite-dimensional ratio maximization on a geometric grid.
//!
//! `f` is a step function on the cells of the grid and zero outside the window.
//! For every such `f` the discrete left-hand side never exceeds the true one, so
//! the discrete ratio is a lower bound for the ratio of `f` and hence for the
//! best constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{near, Kind};
use crate::measure::{integrate_fn, merge_breakpoints, Quad, Weight};
use crate::scalar::{lit, pow0, Real};
use crate::statements::{StatementId, StatementInstance};

/// Geometric grid `t_0 < … < t_n` with cell masses `w_j = V(t_{j+1}) − V(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nodes: Vec<T>,
    prim: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// `cells` geometric cells covering `[t_min, t_max]`.
    pub fn geometric(v: &Weight<T>, t_min: T, t_max: T, cells: usize) -> Result<Self> {
        if cells == 0 || !(t_min > T::zero()) || !(t_max > t_min) || !t_max.is_finite() {
            return Err(Error::Invalid(format!(
                "grid needs 0 < t_min < t_max < ∞ and at least one cell (got [{t_min}, {t_max}], {cells})"
            )));
        }
        let (l0, l1) = (t_min.ln(), t_max.ln());
        let n = lit::<T>(cells as f64);
        let mut nodes: Vec<T> = (0..=cells)
            .map(|k| (l0 + (l1 - l0) * lit::<T>(k as f64) / n).exp())
            .collect();
        nodes[0] = t_min;
        nodes[cells] = t_max;
        let prim: Vec<T> = nodes.iter().map(|&t| v.primitive(t)).collect();
        let weights = prim.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Grid {
            nodes,
            prim,
            weights,
        })
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// `V` at the nodes.
    pub fn primitive(&self) -> &[T] {
        &self.prim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// How the discrete optimum was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    PowerIteration,
    MultiplicativeUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions<T> {
    pub cells: usize,
    /// `None` picks [`default_window`].
    pub window: Option<(T, T)>,
    pub max_iter: usize,
    /// Relative change of the ratio below which the iteration stops.
    pub tol: T,
}

impl<T: Real> OracleOptions<T> {
    pub fn new(cells: usize) -> Self {
        OracleOptions {
            cells,
            window: None,
            max_iter: 20_000,
            tol: lit(1e-13),
        }
    }

    pub fn with_window(mut self, lo: T, hi: T) -> Self {
        self.window = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult<T> {
    pub n: usize,
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
    pub method: OracleMethod,
    pub window: (T, T),
}

/// `[1e-4, 1e4]`, widened to keep every breakpoint of `v` and of the outer weight two decades inside.
pub fn default_window<T: Real>(inst: &StatementInstance<T>) -> (T, T) {
    let mut bps = inst.v.breakpoints();
    if let Kind::WeightedLq { outer, .. } = &inst.rho.kind {
        bps = merge_breakpoints(&[bps, outer.breakpoints()]);
    }
    let (mut lo, mut hi) = (lit::<T>(1e-4), lit::<T>(1e4));
    let margin: T = lit(100.0);
    for b in bps.into_iter().filter(|b| b.is_finite() && *b > T::zero()) {
        lo = lo.min(b / margin);
        hi = hi.max(b * margin);
    }
    (lo, hi)
}

/// Discrete optimum on `n` cells over the default window.
pub fn discrete_oracle<T: Real>(inst: &StatementInstance<T>, n: usize) -> Result<OracleResult<T>> {
    discrete_oracle_with(inst, &OracleOptions::new(n))
}

pub fn discrete_oracle_with<T: Real>(inst: &StatementInstance<T>, opts: &OracleOptions<T>) -> Result<OracleResult<T>> {
    if opts.cells < 2 {
        return Err(Error::Invalid(format!("the oracle needs n >= 2 (got {})", opts.cells)));
    }
    inst.check()?;
    let (lo, hi) = opts.window.unwrap_or_else(|| default_window(inst));
    let grid = Grid::geometric(&inst.v, lo, hi, opts.cells)?;
    let form = Form::build(inst, &grid)?;
    let (value, converged, iterations, method) = if form.is_quadratic() {
        let (v, c, it) = form.power_iteration(opts.max_iter, opts.tol);
        (v, c, it, OracleMethod::PowerIteration)
    } else {
        let (v, c, it) = form.ascent(opts.max_iter, opts.tol);
        (v, c, it, OracleMethod::MultiplicativeUpdate)
    };
    Ok(OracleResult {
        n: opts.cells,
        value,
        converged,
        iterations,
        method,
        window: (lo, hi),
    })
}

#[derive(Debug, Clone)]
enum Num<T> {
    /// `Σ_i (a_i S_i² + 2 b_i S_i f_i + c_i f_i²) + tail·S_n²`: the exact `L²` norm of the Hardy average.
    Exact {
        a: Vec<T>,
        b: Vec<T>,
        c: Vec<T>,
        tail: T,
    },
    /// `Σ_i mass_i S_i^κ + tail·S_n^κ` with `S_i = Σ_{j<i} w_j f_j`.
    Hardy { mass: Vec<T>, tail: T, kappa: T },
    /// `head·Y^κ + Σ_i mass_i Y_i^κ` with `Y_i = Σ_{j>i} ℓ_j f_j`, `Y = Σ_j ℓ_j f_j`.
    Copson {
        mass: Vec<T>,
        head: T,
        kappa: T,
        ell: Vec<T>,
    },
}

/// Discrete ratio `N(f)^{1/q} / (Σ_j den_j f_j^s)^{1/p}`.
#[derive(Debug, Clone)]
pub(crate) struct Form<T> {
    num: Num<T>,
    w: Vec<T>,
    den: Vec<T>,
    s: T,
    p: T,
    q: T,
    start: Vec<T>,
}

fn cell_integral<T: Real>(g: impl Fn(T) -> T, a: T, b: T, bps: &[T], quad: &Quad<T>) -> Result<T> {
    let r = integrate_fn(g, a, b, bps, quad).map(|r| r.value);
    near(r)
}

impl<T: Real> Form<T> {
    pub(crate) fn build(inst: &StatementInstance<T>, grid: &Grid<T>) -> Result<Self> {
        use StatementId::*;
        let (q, outer) = match &inst.rho.kind {
            Kind::WeightedLq { q, outer } if q.is_finite() => (*q, outer),
            Kind::WeightedLq { .. } => {
                return Err(Error::UnsupportedFunctional(
                    "the oracle needs a finite outer exponent q".into(),
                ))
            }
            _ => {
                return Err(Error::UnsupportedFunctional(format!(
                    "the oracle supports weighted L^q functionals only (got {})",
                    inst.rho.name()
                )))
            }
        };
        let pr = inst.params;
        let (p, r, alpha, beta) = (pr.p, pr.r, pr.alpha, pr.beta);
        let one = T::one();
        // (Hardy?, θ, e, s, a): the argument is (op f)^θ V^e, the right side ∫ f^s V^a v
        let (hardy, theta, e, s, a) = match inst.id {
            T1I => (true, one, T::zero(), p, T::zero()),
            T1II | T1III => (false, r / p, alpha, r, alpha * p),
            T1IV | T1V => (true, r / p, alpha - beta * r / p, r, alpha * p - beta * r),
            id => {
                return Err(Error::UnsupportedStatement(format!(
                    "the oracle covers T1.i to T1.v (got {id})"
                )))
            }
        };
        let n = grid.cells();
        let t = grid.nodes();
        let vn = grid.primitive();
        let v = &inst.v;
        let quad = Quad::default();
        let bps = merge_breakpoints(&[v.breakpoints(), outer.breakpoints()]);
        let den: Vec<T> = (0..n).map(|j| v.power_moment(a, t[j], t[j + 1]).value).collect();
        let ow = |x: T| -> T { outer.eval(x) };
        let massv = |x: T, lo: T, hi: T| -> Result<T> {
            cell_integral(|u| ow(u) * pow0(v.primitive(u), x), lo, hi, &bps, &quad)
        };
        let start: Vec<T> = (0..n)
            .map(|j| {
                let m = (vn[j] * vn[j + 1]).sqrt();
                let sigma = -(a + one) / s;
                pow0(m, sigma)
            })
            .collect();
        let two: T = lit(2.0);
        let num = if inst.id == T1I && p == two && q == two {
            let mut av = Vec::with_capacity(n);
            let mut bv = Vec::with_capacity(n);
            let mut cv = Vec::with_capacity(n);
            for i in 0..n {
                let vi = vn[i];
                let (lo, hi) = (t[i], t[i + 1]);
                av.push(massv(-two, lo, hi)?);
                bv.push(cell_integral(
                    |u| {
                        let vu = v.primitive(u);
                        ow(u) * (vu - vi) / (vu * vu)
                    },
                    lo,
                    hi,
                    &bps,
                    &quad,
                )?);
                cv.push(cell_integral(
                    |u| {
                        let vu = v.primitive(u);
                        let d = (vu - vi) / vu;
                        ow(u) * d * d
                    },
                    lo,
                    hi,
                    &bps,
                    &quad,
                )?);
            }
            let tail = massv(-two, t[n], T::infinity())?;
            Num::Exact {
                a: av,
                b: bv,
                c: cv,
                tail,
            }
        } else if hardy {
            let x = (e - theta) * q;
            let mass = (0..n).map(|i| massv(x, t[i], t[i + 1])).collect::<Result<Vec<_>>>()?;
            let tail = massv(x, t[n], T::infinity())?;
            Num::Hardy {
                mass,
                tail,
                kappa: theta * q,
            }
        } else {
            let x = e * q;
            let mass = (0..n).map(|i| massv(x, t[i], t[i + 1])).collect::<Result<Vec<_>>>()?;
            let head = massv(x, T::zero(), t[0])?;
            let ell = (0..n).map(|j| (vn[j + 1] / vn[j]).ln()).collect();
            Num::Copson {
                mass,
                head,
                kappa: theta * q,
                ell,
            }
        };
        Ok(Form {
            num,
            w: grid.weights().to_vec(),
            den,
            s,
            p,
            q,
            start,
        })
    }

    fn is_quadratic(&self) -> bool {
        let two: T = lit(2.0);
        let kappa = match &self.num {
            Num::Exact { .. } => two,
            Num::Hardy { kappa, .. } | Num::Copson { kappa, .. } => *kappa,
        };
        let close = |x: T| (x - two).abs() <= lit::<T>(1e-12);
        close(kappa) && close(self.s) && close(self.p)
    }

    fn prefix(&self, f: &[T]) -> Vec<T> {
        let mut s = Vec::with_capacity(f.len() + 1);
        let mut acc = T::zero();
        s.push(acc);
        for (wj, fj) in self.w.iter().zip(f) {
            acc = acc + *wj * *fj;
            s.push(acc);
        }
        s
    }

    /// `Y_i = Σ_{j>i} ℓ_j f_j` for `i < n`, and the full sum at index `n`.
    fn suffix(ell: &[T], f: &[T]) -> Vec<T> {
        let n = f.len();
        let mut y = vec![T::zero(); n + 1];
        let mut acc = T::zero();
        for i in (0..n).rev() {
            y[i] = acc;
            acc = acc + ell[i] * f[i];
        }
        y[n] = acc;
        y
    }

    pub(crate) fn numerator(&self, f: &[T]) -> T {
        match &self.num {
            Num::Exact { a, b, c, tail } => {
                let s = self.prefix(f);
                let two: T = lit(2.0);
                let mut acc = *tail * s[f.len()] * s[f.len()];
                for i in 0..f.len() {
                    acc = acc + a[i] * s[i] * s[i] + two * b[i] * s[i] * f[i] + c[i] * f[i] * f[i];
                }
                acc
            }
            Num::Hardy { mass, tail, kappa } => {
                let s = self.prefix(f);
                let n = f.len();
                let mut acc = *tail * pow0(s[n], *kappa);
                for i in 0..n {
                    acc = acc + mass[i] * pow0(s[i], *kappa);
                }
                acc
            }
            Num::Copson {
                mass,
                head,
                kappa,
                ell,
            } => {
                let y = Self::suffix(ell, f);
                let n = f.len();
                let mut acc = *head * pow0(y[n], *kappa);
                for i in 0..n {
                    acc = acc + mass[i] * pow0(y[i], *kappa);
                }
                acc
            }
        }
    }

    fn grad_numerator(&self, f: &[T]) -> Vec<T> {
        let n = f.len();
        let two: T = lit(2.0);
        match &self.num {
            Num::Exact { a, b, c, tail } => {
                let s = self.prefix(f);
                let mut g = vec![T::zero(); n];
                let mut back = two * *tail * s[n];
                for j in (0..n).rev() {
                    g[j] = two * b[j] * s[j] + two * c[j] * f[j] + self.w[j] * back;
                    back = back + two * a[j] * s[j] + two * b[j] * f[j];
                }
                g
            }
            Num::Hardy { mass, tail, kappa } => {
                let s = self.prefix(f);
                let d = |m: T, y: T| if y > T::zero() { m * *kappa * pow0(y, *kappa - T::one()) } else { T::zero() };
                let mut g = vec![T::zero(); n];
                let mut back = d(*tail, s[n]);
                for j in (0..n).rev() {
                    g[j] = self.w[j] * back;
                    back = back + d(mass[j], s[j]);
                }
                g
            }
            Num::Copson {
                mass,
                head,
                kappa,
                ell,
            } => {
                let y = Self::suffix(ell, f);
                let d = |m: T, y: T| if y > T::zero() { m * *kappa * pow0(y, *kappa - T::one()) } else { T::zero() };
                let mut g = vec![T::zero(); n];
                let mut fwd = d(*head, y[n]);
                for j in 0..n {
                    g[j] = ell[j] * fwd;
                    fwd = fwd + d(mass[j], y[j]);
                }
                g
            }
        }
    }

    pub(crate) fn denominator(&self, f: &[T]) -> T {
        self.den
            .iter()
            .zip(f)
            .fold(T::zero(), |acc, (d, x)| acc + *d * pow0(*x, self.s))
    }

    pub(crate) fn ratio(&self, f: &[T]) -> T {
        let num = pow0(self.numerator(f), T::one() / self.q);
        let den = pow0(self.denominator(f), T::one() / self.p);
        crate::scalar::div0(num, den)
    }

    /// Largest eigenvalue of `D^{-1/2} M D^{-1/2}`, where `N(f) = fᵀMf` and `D = diag(den)`.
    fn power_iteration(&self, max_iter: usize, tol: T) -> (T, bool, usize) {
        let half: T = lit(0.5);
        let sq: Vec<T> = self.den.iter().map(|d| d.sqrt()).collect();
        let norm = |x: &[T]| x.iter().fold(T::zero(), |a, y| a + *y * *y).sqrt();
        let mut x: Vec<T> = self.start.iter().zip(&sq).map(|(f, s)| *f * *s).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|y| *y = *y / nx);
        let mut lambda = T::zero();
        let mut best = (T::zero(), x.clone());
        for it in 1..=max_iter {
            let f: Vec<T> = x.iter().zip(&sq).map(|(y, s)| *y / *s).collect();
            let g = self.grad_numerator(&f);
            let y: Vec<T> = g.iter().zip(&sq).map(|(g, s)| half * *g / *s).collect();
            let next = x.iter().zip(&y).fold(T::zero(), |a, (u, v)| a + *u * *v);
            if next > best.0 {
                best = (next, x.clone());
            }
            let ny = norm(&y);
            if !(ny > T::zero()) || !ny.is_finite() {
                break;
            }
            x = y.into_iter().map(|v| v / ny).collect();
            if (next - lambda).abs() <= tol * next {
                let f: Vec<T> = best.1.iter().zip(&sq).map(|(y, s)| *y / *s).collect();
                return (self.ratio(&f), true, it);
            }
            lambda = next;
        }
        let f: Vec<T> = best.1.iter().zip(&sq).map(|(y, s)| *y / *s).collect();
        (self.ratio(&f), false, max_iter)
    }

    /// Multiplicative ascent `f_j ← f_j·(p N_j D / (q N D_j))^η` with step control.
    fn ascent(&self, max_iter: usize, tol: T) -> (T, bool, usize) {
        let mut f = self.start.clone();
        let mut r = self.ratio(&f);
        let mut eta: T = lit(0.5);
        let mut quiet = 0usize;
        for it in 1..=max_iter {
            let num = self.numerator(&f);
            let den = self.denominator(&f);
            let g = self.grad_numerator(&f);
            let cand: Vec<T> = f
                .iter()
                .zip(&g)
                .zip(&self.den)
                .map(|((x, gj), dj)| {
                    let dd = self.s * *dj * pow0(*x, self.s - T::one());
                    let fac = self.p * *gj * den / (self.q * num * dd);
                    if fac > T::zero() && fac.is_finite() {
                        *x * fac.powf(eta)
                    } else {
                        *x
                    }
                })
                .collect();
            let rc = self.ratio(&cand);
            if rc > r {
                let gain = (rc - r) / r;
                f = cand;
                r = rc;
                eta = (eta * lit(1.5)).min(T::one());
                if gain <= tol {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            } else {
                eta = eta * lit(0.5);
                quiet += 1;
            }
            if quiet >= 20 || eta < lit(1e-12) {
                return (r, true, it);
            }
        }
        (r, false, max_iter)
    }
}
