//! Command-line tools and the HTTP API for bibcode capture.

pub mod cli;
pub mod http;
