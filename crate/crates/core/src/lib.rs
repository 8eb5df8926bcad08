//! Sentence encoders built from word embeddings with the DCT-II, closed-form
//! cross-lingual sentence maps, translation retrieval and probing classifiers.
//!
//! The pipeline is:
//!
//! 1. [`embeddings`]: load a text vector file, tokenize, build the `N x d`
//!    sentence matrix.
//! 2. [`encoder`]: turn the matrix into a fixed-length vector, either the
//!    average (`AVG`) or the concatenated DCT blocks `c[0..=K]`.
//! 3. [`alignment`]: fit a linear map between two languages' encodings from a
//!    line-aligned parallel corpus.
//! 4. [`retrieval`]: score the map by cosine nearest-neighbour translation
//!    retrieval, directly or zero-shot through a pivot space.
//! 5. [`probe`]: a one-hidden-layer classifier for probing tasks.

pub mod alignment;
pub mod cli;
pub mod embeddings;
pub mod encoder;
mod error;
pub mod format;
pub mod probe;
pub mod retrieval;

pub use error::{Error, Result};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
