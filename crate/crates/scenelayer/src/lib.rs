//! Corpus storage, embedding cache, HTTP clients, report rendering and the
//! command line for five-layer driving scenarios.

pub mod cache;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod http;
pub mod pipeline;
pub mod render;
mod util;

pub use error::{Error, Result};
pub use util::bounded_map;
