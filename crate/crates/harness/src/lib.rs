pub mod config;
pub mod error;
pub mod experiments;
pub mod oracles;
pub mod record;
pub mod fit;
pub mod sweep;
pub mod emit;
pub mod suites;
pub mod cli;
