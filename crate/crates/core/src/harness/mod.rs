//! Brute-force oracle, seeded generators, the workspace file format and the
//! differential-testing driver.

pub mod diff;
pub mod format;
pub mod generate;
pub mod oracle;
