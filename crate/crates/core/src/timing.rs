//! Wall-clock and CPU-time measurement.
//!
//! CPU time is the process-wide figure, so it includes every worker thread
//! that ran while the measured closure was executing.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_s: f64,
    pub cpu_s: f64,
}

/// Total CPU time consumed by this process, all threads included.
pub fn process_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// A started stopwatch over both clocks.
#[derive(Clone, Copy, Debug)]
pub struct Stopwatch {
    wall: Instant,
    cpu: Duration,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            wall: Instant::now(),
            cpu: process_cpu_time(),
        }
    }

    pub fn wall_elapsed(&self) -> Duration {
        self.wall.elapsed()
    }

    pub fn elapsed(&self) -> Timing {
        Timing {
            wall_s: self.wall.elapsed().as_secs_f64(),
            cpu_s: process_cpu_time().saturating_sub(self.cpu).as_secs_f64(),
        }
    }
}

/// Runs `unit` and returns its output together with wall and CPU seconds.
pub fn time_algorithm<T>(unit: impl FnOnce() -> T) -> (T, Timing) {
    let watch = Stopwatch::start();
    let out = unit();
    (out, watch.elapsed())
}
