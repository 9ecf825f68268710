//! Wall-clock limits for long enumerations.

use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("time budget of {0} ms exceeded")]
pub struct BudgetExceeded(pub u64);

/// An optional deadline. The clock is only read when a deadline is set, so an unlimited budget
/// works on targets without a system clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    deadline: Option<(Instant, u64)>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn millis(ms: u64) -> Self {
        Budget { deadline: Some((Instant::now() + Duration::from_millis(ms), ms)) }
    }

    /// Reads `GPK_BUDGET_MS`; unset or unparsable means unlimited.
    pub fn from_env() -> Self {
        match std::env::var("GPK_BUDGET_MS").ok().and_then(|v| v.trim().parse().ok()) {
            Some(ms) => Self::millis(ms),
            None => Self::unlimited(),
        }
    }

    pub fn is_limited(&self) -> bool {
        self.deadline.is_some()
    }

    pub fn check(&self) -> Result<(), BudgetExceeded> {
        match self.deadline {
            Some((at, ms)) if Instant::now() >= at => Err(BudgetExceeded(ms)),
            _ => Ok(()),
        }
    }
}
