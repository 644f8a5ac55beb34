//! BSDEs driven by a marked point process whose compensator `dA φ(dx)` has a
//! predictable, possibly discontinuous `A`, solved and checked exactly on
//! finite scenario trees.

pub mod conditions;
pub mod error;
pub mod measure;
pub mod norms;
pub mod scenarios;
pub mod solver;
pub mod verification;

pub use conditions::{beta_threshold, check_main_hypothesis, detect_counterexample, ContractionProfile, FlaggedSlot};
pub use error::{Error, Result};
pub use measure::{build_tree, DoleansPath, MarkSpace, Outcome, PathIncrement, ScenarioModel, ScenarioTree};
pub use norms::{AdaptedProcess, PredictableField};
pub use scenarios::{ModelSpec, TerminalSpec};
pub use solver::{
    backward_oracle, picard_iterate, picard_solve, BsdeProblem, DrivePath, Generator, GeneratorSpec, PicardOptions,
    Solution, SolveReport,
};
pub use verification::CheckResult;
