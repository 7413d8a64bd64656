//! Free-association norms to semantic networks, spreading activation over
//! them, and the statistics used to read the results.
//!
//! The usual flow is [`norms::preprocess`] → [`netbuild::build_directed`] →
//! [`netbuild::reduce`] → [`activation::spread_batch`] →
//! [`stats::normalize`], with [`experiments`] packaging the two bundled
//! studies on top.

pub mod activation;
pub mod experiments;
pub mod lexicon;
pub mod netbuild;
pub mod norms;
pub mod stats;

pub use activation::{spread, spread_batch, ActivationMatrix, ActivationParams};
pub use lexicon::Lexicon;
pub use netbuild::SemanticNetwork;
pub use norms::{NormRow, NormsTable};
pub use stats::NormMode;
