//! Clocks an optimization budget can be measured on.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetClock {
    #[default]
    Wall,
    /// CPU time of the calling thread. Runs sharing a machine then get the
    /// same budget regardless of how many run at once.
    ThreadCpu,
}

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    clock: BudgetClock,
    wall: Instant,
    cpu: Duration,
}

impl Stopwatch {
    pub fn start(clock: BudgetClock) -> Self {
        Stopwatch { clock, wall: Instant::now(), cpu: thread_cpu() }
    }

    pub fn elapsed(&self) -> Duration {
        match self.clock {
            BudgetClock::Wall => self.wall.elapsed(),
            BudgetClock::ThreadCpu => thread_cpu().saturating_sub(self.cpu),
        }
    }
}

#[cfg(unix)]
fn thread_cpu() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid out-pointer for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

#[cfg(not(unix))]
fn thread_cpu() -> Duration {
    // no per-thread clock: fall back on process uptime
    static START: std::sync::OnceLock<Instant> = std::sync::OnceLock::new();
    START.get_or_init(Instant::now).elapsed()
}
