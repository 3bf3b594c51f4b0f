//! Maximum-likelihood community detection for the degree-corrected
//! stochastic block model on small multigraphs.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*F64` /
//! `*F32` aliases below fix the scalar for callers that do not care.

pub mod em;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod generator;
pub mod instance;
pub mod io;
pub mod likelihood;
pub mod relaxation;
pub mod rng;
pub mod scalar;

pub use em::{run_single, run_trials, EmConfig, EmVariant, TrialResult};
pub use error::{Error, Result};
pub use exact::{solve_estep_exact, solve_exact, SolveConfig, SolveReport};
pub use instance::{AffinityMatrix, Assignment, Graph, Instance, Solution, SolveStatus};
pub use likelihood::{BlockStats, LikelihoodValue};
pub use relaxation::{BoundSet, PairTerm, TangentCut};
pub use scalar::Real;

pub type AffinityMatrixF64 = AffinityMatrix<f64>;
pub type AffinityMatrixF32 = AffinityMatrix<f32>;
pub type SolveReportF64 = SolveReport<f64>;
pub type SolveReportF32 = SolveReport<f32>;
pub type TrialResultF64 = TrialResult<f64>;
pub type TrialResultF32 = TrialResult<f32>;
pub type LikelihoodValueF64 = LikelihoodValue<f64>;
pub type BoundSetF64 = BoundSet<f64>;
pub type TangentCutF64 = TangentCut<f64>;
pub type PairTermF64 = PairTerm<f64>;
