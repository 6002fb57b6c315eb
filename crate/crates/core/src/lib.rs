//! Simulation engine for a two-stage league season with a postseason
//! assembled from stage winners and the overall top three.
//!
//! The pipeline per simulated season is:
//!
//! 1. [`schedule`] builds two single round-robin stages with complementary venues.
//! 2. [`goal_models`] draws a score for every fixture under one of five Poisson models.
//! 3. [`standings`] tallies stage and total tables and ranks them.
//! 4. [`postseason`] picks the qualifiers, classifies how they overlap and builds the bracket.
//! 5. [`montecarlo`] repeats the above and aggregates case frequencies and point statistics.

pub mod error;
pub mod goal_models;
pub mod io;
pub mod montecarlo;
pub mod postseason;
pub mod rng;
pub mod schedule;
pub mod standings;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense team identifier: the team's position in the league (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(pub u32);

impl TeamId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
