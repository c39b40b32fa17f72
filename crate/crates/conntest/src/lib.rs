//! Files, command line and wizard service for `conntest-core`.

use std::time::Instant;

use conntest_core::Clock;

pub mod cli;
pub mod io;
pub mod report;
pub mod service;

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}
