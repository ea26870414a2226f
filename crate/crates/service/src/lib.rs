//! Command line and HTTP service for the white space engine.

pub mod api;
pub mod cli;
pub mod error;
pub mod jobs;
pub mod pipeline;
pub mod plan;
pub mod search;

pub use error::AppError;
