//! Tests of independence for two binary variables built on the log odds
//! ratio and on the phi coefficient, plus a Monte Carlo harness comparing
//! their power over randomly drawn joint distributions.

pub mod assoc;
pub mod asymptotics;
pub mod error;
pub mod extended;
pub mod montecarlo;
pub mod report;
pub mod statistics;
pub mod validate;

pub use assoc::{ContingencyTable, JointDistribution, MeasurePair, Pillars};
pub use error::{Error, Result};
pub use extended::ExtReal;
pub use statistics::{Degeneracy, TestKind, TestOutcome, TestSettings, ZeroCellPolicy};
