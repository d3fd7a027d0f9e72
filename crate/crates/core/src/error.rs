use thiserror::Error;

use crate::assemble::AssembleError;
use crate::greedy::GreedyError;
use crate::instance::InstanceError;
use crate::lp::LpError;
use crate::schedule::ScheduleError;
use crate::sim::SimError;

/// Crate-level error: one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Greedy(#[from] GreedyError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl Error {
    /// True when the error signals a broken internal invariant rather than
    /// bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Lp(e) => e.is_internal(),
            Error::Assemble(e) => e.is_internal(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
