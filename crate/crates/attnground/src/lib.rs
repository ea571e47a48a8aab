//! File formats, batch drivers and the command line for attention-based GUI
//! grounding. The math lives in `attnground_core`.

pub mod cli;
pub mod dump;
pub mod error;
pub mod jsonl;
pub mod ocg_build;
pub mod sweep;

pub use error::{DumpError, Error, Result};
