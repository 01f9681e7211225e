//! Running strategies against simulated or recorded outcomes.

pub mod algo;
pub mod eval;
pub mod generate;
pub mod oracle;
pub mod regress;
pub mod report;
