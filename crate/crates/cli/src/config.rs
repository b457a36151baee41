use serde::{Deserialize, Serialize};

use submonotone::constants::StepId;
use submonotone::funcspace::GeneratorProfile;
use submonotone::schema::{Exponent, FunctionalSpec, InstanceSpec, Segment};
use submonotone::Params;

/// Everything a run reads. Fields a command does not use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Filled in from the command line.
    #[serde(default)]
    pub command: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub instance: Option<InstanceSpec<f64>>,
    /// Functionals for `axioms`.
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec<f64>>,
    /// Input of `eval`.
    #[serde(default)]
    pub function: Option<Vec<Segment<f64>>>,
    #[serde(default)]
    pub profile: Option<GeneratorProfile<f64>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub oracle_n: Option<usize>,
    #[serde(default)]
    pub oracle_window: Option<(f64, f64)>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub tol_quadrature: Option<f64>,
    #[serde(default)]
    pub steps: Option<Vec<StepId>>,
    /// Also run PS15 at each fixed `(p, α)` of the admissible grid.
    #[serde(default)]
    pub ps15_grid: Option<bool>,
    /// Report files aggregated by `report`.
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub self_test: bool,
}

fn seg(upto: Option<f64>, c: f64, e: f64) -> Segment<f64> {
    Segment { upto, c, e }
}

/// `v = 1` on `(0, 1]`, `t^{-2}` after, so `V(∞) = 2`.
fn two_weight() -> Vec<Segment<f64>> {
    vec![seg(Some(1.0), 1.0, 0.0), seg(None, 1.0, -2.0)]
}

fn chi(a: f64) -> Vec<Segment<f64>> {
    vec![seg(Some(a), 1.0, 0.0), seg(None, 0.0, 0.0)]
}

fn lq(q: f64, outer: Option<Vec<Segment<f64>>>) -> FunctionalSpec<f64> {
    FunctionalSpec::Lq {
        q: Exponent::of(q),
        outer,
    }
}

/// The chain configuration: `p = 2, r = 1, α = 0, β = 1`, `ρ = L²(χ_(0,1))`.
pub fn chain_instance() -> InstanceSpec<f64> {
    InstanceSpec {
        statement: "T1.i".into(),
        params: Params {
            p: 2.0,
            r: 1.0,
            alpha: 0.0,
            beta: 1.0,
            ..Params::default()
        },
        v: two_weight(),
        u: None,
        rho: lq(2.0, Some(chi(1.0))),
        alpha_override: false,
    }
}

/// `T1.i` with `p = 2`, Lebesgue `v` and unweighted `L²`.
pub fn classical_instance() -> InstanceSpec<f64> {
    InstanceSpec {
        statement: "T1.i".into(),
        params: Params::default(),
        v: vec![seg(None, 1.0, 0.0)],
        u: None,
        rho: lq(2.0, None),
        alpha_override: false,
    }
}

/// `L^1, L^2, L^∞` against the chain weight, `L^{1/2}(χ_(0,1))`, and both derived functionals with `m = 2`.
pub fn default_functionals() -> Vec<FunctionalSpec<f64>> {
    let u = vec![seg(Some(2.0), 1.0, 0.5), seg(None, 2.0, -2.5)];
    let base = Box::new(lq(2.0, Some(chi(1.0))));
    vec![
        lq(1.0, Some(two_weight())),
        lq(2.0, Some(two_weight())),
        lq(f64::INFINITY, Some(two_weight())),
        lq(0.5, Some(chi(1.0))),
        FunctionalSpec::DerivedT3 {
            base: base.clone(),
            m: 2.0,
            w: None,
            u: Some(u.clone()),
            v: Some(two_weight()),
            p: Some(2.0),
        },
        FunctionalSpec::DerivedT4 {
            base,
            m: 2.0,
            u,
            u_tilde: None,
            v: Some(two_weight()),
            p: Some(2.0),
        },
    ]
}

impl RunConfig {
    fn empty(command: &str) -> Self {
        RunConfig {
            command: command.into(),
            seed: Some(0),
            instance: None,
            functionals: Vec::new(),
            function: None,
            profile: None,
            trials: None,
            budget: None,
            oracle_n: None,
            oracle_window: None,
            samples: None,
            tol: None,
            tol_quadrature: None,
            steps: None,
            ps15_grid: None,
            inputs: Vec::new(),
            self_test: false,
        }
    }

    /// Built-in configuration of each command.
    pub fn default_for(command: &str) -> Self {
        let mut c = Self::empty(command);
        match command {
            "axioms" => {
                c.functionals = default_functionals();
                c.trials = Some(1000);
                c.tol = Some(1e-6);
            }
            "eval" => {
                c.instance = Some(classical_instance());
                c.function = Some(chi(1.0));
            }
            "estimate" => {
                c.instance = Some(classical_instance());
                c.budget = Some(10_000);
                c.oracle_n = Some(2048);
            }
            "oracle" => {
                c.instance = Some(classical_instance());
                c.oracle_n = Some(2048);
                c.oracle_window = Some((1e-4, 1e4));
            }
            "proofsteps" => {
                c.trials = Some(1000);
                c.tol = Some(1e-9);
                c.tol_quadrature = Some(1e-6);
                c.ps15_grid = Some(true);
            }
            "chain" => {
                c.instance = Some(chain_instance());
                c.samples = Some(200);
                c.tol = Some(1e-6);
            }
            _ => {}
        }
        c
    }
}
