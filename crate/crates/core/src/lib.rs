pub mod cli;
pub mod coherence;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod lda;
pub mod rng;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
