//! Resource limits for executing components. Wall-clock time is the only
//! resource modelled; enforcement is cooperative.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    #[serde(with = "crate::serde_duration")]
    timeout: Duration,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("execution timeout must be positive")]
pub struct ZeroTimeout;

impl ExecutionLimits {
    pub fn new(timeout: Duration, seed: u64) -> Result<Self, ZeroTimeout> {
        if timeout.is_zero() {
            return Err(ZeroTimeout);
        }
        Ok(ExecutionLimits { timeout, seed })
    }

    /// Far beyond anything a desk-scale execution needs.
    pub fn generous(seed: u64) -> Self {
        ExecutionLimits { timeout: Duration::from_secs(120), seed }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ExecutionLimits { seed, ..self }
    }

    pub fn start(&self) -> Deadline {
        Deadline::after(self.timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("deadline exceeded")]
pub struct TimedOut;

/// A point in time past which cooperative loops stop.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    at: Option<(Instant, Duration)>,
}

impl Deadline {
    pub fn after(timeout: Duration) -> Self {
        Deadline { at: Some((Instant::now(), timeout)) }
    }

    /// Never expires and never reads the clock; usable where no clock exists.
    pub fn unbounded() -> Self {
        Deadline { at: None }
    }

    pub fn check(&self) -> Result<(), TimedOut> {
        match self.at {
            Some((start, timeout)) if start.elapsed() > timeout => Err(TimedOut),
            _ => Ok(()),
        }
    }

    pub fn elapsed(&self) -> Duration {
        self.at.map_or(Duration::ZERO, |(start, _)| start.elapsed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_timeout_rejected() {
        assert_eq!(ExecutionLimits::new(Duration::ZERO, 0), Err(ZeroTimeout));
        assert!(ExecutionLimits::new(Duration::from_nanos(1), 0).is_ok());
    }

    #[test]
    fn deadline_expires() {
        let d = Deadline::after(Duration::from_nanos(1));
        std::thread::sleep(Duration::from_millis(1));
        assert_eq!(d.check(), Err(TimedOut));
        assert_eq!(Deadline::unbounded().check(), Ok(()));
    }
}
