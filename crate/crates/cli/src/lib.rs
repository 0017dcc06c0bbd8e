//! File formats, configuration, the LLM client and the `routeproj`
//! command-line harness around `routeproj-core`.

pub mod args;
pub mod commands;
pub mod config;
pub mod llm;
pub mod parallel;
pub mod report;
pub mod solution_file;
pub mod strategy_file;
pub mod tsplib;
