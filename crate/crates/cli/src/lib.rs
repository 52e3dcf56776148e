//! Command-line surface for `qpost-core`: the JSON document format and the
//! `qpost` subcommands.

pub mod commands;
pub mod document;

pub use commands::{run, Cli, Exit};
pub use document::{load, save, Document, DocumentError, Report, Witness};
