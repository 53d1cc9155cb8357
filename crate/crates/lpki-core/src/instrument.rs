//! Operation counting.
//!
//! Scalar multiplication dominates the cost of every scheme here, so the
//! curve layer bumps a thread-local counter on each one. Tests and the
//! benchmark read it through [`CostMeter`] deltas to check advertised
//! operation counts and to attribute work to individual parties.

use std::cell::Cell;

thread_local! {
    static SCALAR_MULTS: Cell<u64> = const { Cell::new(0) };
}

/// Called by the curve layer once per scalar multiplication.
pub(crate) fn record_scalar_mult() {
    SCALAR_MULTS.with(|c| c.set(c.get() + 1));
}

/// Total scalar multiplications on this thread since process start.
pub fn scalar_mults_so_far() -> u64 {
    SCALAR_MULTS.with(|c| c.get())
}

/// Measures scalar multiplications across a region of code.
pub struct CostMeter {
    start: u64,
}

impl CostMeter {
    pub fn start() -> CostMeter {
        CostMeter {
            start: scalar_mults_so_far(),
        }
    }

    /// Multiplications since `start`, without stopping the meter.
    pub fn reading(&self) -> u64 {
        scalar_mults_so_far() - self.start
    }
}

/// Runs `f` and reports (result, scalar multiplications used).
pub fn metered<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let meter = CostMeter::start();
    let out = f();
    let used = meter.reading();
    (out, used)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meter_counts_deltas() {
        let before = scalar_mults_so_far();
        let (value, used) = metered(|| {
            record_scalar_mult();
            record_scalar_mult();
            41 + 1
        });
        assert_eq!(value, 42);
        assert_eq!(used, 2);
        assert_eq!(scalar_mults_so_far(), before + 2);
    }
}
