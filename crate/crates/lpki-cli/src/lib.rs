//! Library surface of the `lpki` command-line tool: configuration,
//! the benchmark and attack demonstrations, the scenario engine, and
//! the TCP service front end. The binary in `main.rs` is a thin
//! dispatcher over these modules so integration tests can call them
//! directly.

pub mod attack;
pub mod baseline;
pub mod bench;
pub mod config;
pub mod scenario;
pub mod serve;
