//! Value-based analysis of iStar goal models.
//!
//! Stakeholders give every intentional element a qualitative importance and
//! a confidence in that importance. The engine turns both into a triangular
//! fuzzy number, propagates it along contribution, refinement and dependency
//! links, and ranks the elements with a fuzzy TOPSIS variant, producing a
//! local (per stakeholder) and a global value on a `[-100, 100]` scale.
//!
//! ```
//! use goalvalue_core::fuzzy::{fuzzify, Level, Tfn};
//!
//! let importance = fuzzify(Level::High, Level::Medium);
//! assert_eq!(importance, Tfn::new(0.625, 0.75, 0.875).unwrap());
//! ```

pub mod analysis;
pub mod fuzzy;
pub mod model;
pub mod propagation;
pub mod store;
pub mod synth;

pub use analysis::{analyze, analyze_detailed, explain, Analysis, AnalysisError, AnalysisResult, RankBy};
pub use fuzzy::{fuzzify, Level, Tfn};
pub use model::{GoalModel, Prioritization, ValidationReport};
pub use propagation::{build_influence_graph, propagate, PropagationConfig, PropagationResult};
pub use store::Store;
