//! Frontend for the collapse-free measurement engine: a line-oriented
//! experiment description language, a scenario runner with exact and
//! float backends, and text/JSON reports.
//!
//! The pipeline is [`dsl::parse`] (source to AST), [`lower::lower`] (AST
//! to an engine scenario), [`runner::run_source`] (execute), and
//! [`report`] (render).  [`emit::emit`] writes any scenario, including
//! the bundled library, back out as source the parser accepts.

pub mod cli;
pub mod dsl;
pub mod emit;
pub mod lower;
pub mod report;
pub mod runner;
