//! Conway-Maxwell-Poisson modelling of goal counts and the team-strength
//! ranking built on top of it.

pub mod cli;
pub mod cmp;
pub mod data;
pub mod fitting;
pub mod optim;
pub mod strength;

pub use cmp::{CmpError, CmpParams, SeriesControl};
pub use data::{Dataset, Direction, MatchFilter, MatchRecord};
pub use fitting::{FitError, FitReport, GoalSeries};
pub use strength::{RankingTable, TeamStrength};
