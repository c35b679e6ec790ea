//! Time sources for the coordinator. Every wait goes through a [`Clock`].

use std::sync::Mutex;
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Seconds since the clock was created.
    fn now(&self) -> f64;
    /// Waits one coordinator tick.
    fn tick(&self);
    /// True when time passes by itself.
    fn is_wall(&self) -> bool;
}

#[derive(Debug)]
pub struct WallClock {
    origin: Instant,
    tick: Duration,
}

impl WallClock {
    pub fn new() -> Self {
        Self::with_tick(Duration::from_millis(1))
    }

    pub fn with_tick(tick: Duration) -> Self {
        WallClock {
            origin: Instant::now(),
            tick,
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn tick(&self) {
        std::thread::sleep(self.tick);
    }

    fn is_wall(&self) -> bool {
        true
    }
}

/// Advances by a fixed step on every tick and never otherwise.
#[derive(Debug)]
pub struct VirtualClock {
    now: Mutex<f64>,
    step: f64,
}

impl VirtualClock {
    pub fn new(step: f64) -> Self {
        VirtualClock {
            now: Mutex::new(0.0),
            step,
        }
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        *self.now.lock().expect("clock")
    }

    fn tick(&self) {
        let mut t = self.now.lock().expect("clock");
        // keep the sum exact for integral steps
        *t = ((*t + self.step) * 1e9).round() / 1e9;
    }

    fn is_wall(&self) -> bool {
        false
    }
}

/// User plus system CPU seconds of this process and its reaped children.
pub fn cpu_seconds() -> f64 {
    fn usage(who: i32) -> f64 {
        // SAFETY: getrusage only writes into the zeroed struct we pass.
        let mut ru: libc::rusage = unsafe { std::mem::zeroed() };
        if unsafe { libc::getrusage(who, &mut ru) } != 0 {
            return 0.0;
        }
        let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 / 1e6;
        tv(ru.ru_utime) + tv(ru.ru_stime)
    }
    usage(libc::RUSAGE_SELF) + usage(libc::RUSAGE_CHILDREN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_time_only_moves_on_tick() {
        let c = VirtualClock::new(0.5);
        assert_eq!(c.now(), 0.0);
        c.tick();
        c.tick();
        assert_eq!(c.now(), 1.0);
        std::thread::sleep(Duration::from_millis(5));
        assert_eq!(c.now(), 1.0);
    }

    #[test]
    fn wall_clock_advances() {
        let c = WallClock::with_tick(Duration::from_millis(2));
        let a = c.now();
        c.tick();
        assert!(c.now() > a);
        assert!(cpu_seconds() >= 0.0);
    }
}
