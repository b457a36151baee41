pub mod constants;
pub mod error;
pub mod estimate;
pub mod funcspace;
pub mod functionals;
pub mod measure;
pub mod operators;
pub mod piecewise;
pub mod scalar;
pub mod schema;
pub mod statements;

pub use error::{Error, Result};

pub use constants::{chain_bound, copson_const, d_gamma, hardy_const, kappa, muckenhoupt_upper, ChainEdge};
pub use estimate::{chain_verify, discrete_oracle, lower_bound_search, ConstantEstimate};
pub use funcspace::TestFunction;
pub use functionals::Functional;
pub use measure::Weight;
pub use statements::{Params, StatementId, StatementInstance};

/// Library version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Weight64 = Weight<f64>;
pub type TestFunction64 = TestFunction<f64>;
pub type Functional64 = Functional<f64>;
pub type StatementInstance64 = StatementInstance<f64>;
pub type Weight32 = Weight<f32>;
pub type TestFunction32 = TestFunction<f32>;
pub type Functional32 = Functional<f32>;
