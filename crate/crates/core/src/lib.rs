//! joulint-core: an energy-smell catalog with static detection rules, an
//! energy pair-profiling harness, and a three-step triage pipeline that maps
//! measured inefficiencies in equivalent code pairs onto the catalog.

pub mod corpus;
pub mod detect;
pub mod profile;
pub mod report;
pub mod runner;
pub mod source;
pub mod taxonomy;
pub mod triage;

pub use taxonomy::Taxonomy;
