//! Word importance for LLM system prompts: the std side of promptlens.
//!
//! The engine lives in `promptlens-core`; this crate adds the HTTP provider,
//! the response cache, configuration and corpus files, reports and the CLI.

pub mod cache;
pub mod config;
pub mod corpus;
pub mod http;
pub mod report;
pub mod cli;
