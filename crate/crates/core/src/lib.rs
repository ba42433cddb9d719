//! Constant-speed runners on a circle: exact schedule constructions, an exact
//! periodic interval algebra to verify them, a certified search for
//! simultaneous-occupancy times with irrational speeds, and idle-time
//! evaluation for patrolling schedules.

pub mod constructions;
pub mod document;
pub mod error;
pub mod kronecker;
pub mod model;
pub mod patrol;
pub mod periodic;
pub mod rational;

pub use error::{Error, Result};
pub use model::{harmonic, in_arc, position, Arc, Circle, Runner, RunnerSchedule, SpeedValue};
pub use patrol::{idle_time_estimate, idle_time_exact, IdleReport, PatrolSchedule};
pub use periodic::{occupancy, PeriodicIntervalSet};
pub use rational::Rational;
