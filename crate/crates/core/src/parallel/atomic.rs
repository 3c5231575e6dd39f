use std::sync::atomic::{AtomicU64, Ordering};

/// A 64-bit float that can be shared between threads and updated lock-free.
///
/// Stored as its bit pattern in an [`AtomicU64`]; additions are
/// compare-and-swap retry loops on that pattern.
#[derive(Debug, Default)]
#[repr(transparent)]
pub struct AtomicF64 {
    bits: AtomicU64,
}

impl AtomicF64 {
    pub const fn from_bits(bits: u64) -> Self {
        Self {
            bits: AtomicU64::new(bits),
        }
    }

    pub fn new(value: f64) -> Self {
        Self::from_bits(value.to_bits())
    }

    #[inline]
    pub fn load(&self, order: Ordering) -> f64 {
        f64::from_bits(self.bits.load(order))
    }

    #[inline]
    pub fn store(&self, value: f64, order: Ordering) {
        self.bits.store(value.to_bits(), order)
    }

    /// Stores `value` and returns the previous value.
    #[inline]
    pub fn swap(&self, value: f64, order: Ordering) -> f64 {
        f64::from_bits(self.bits.swap(value.to_bits(), order))
    }

    /// Adds `delta` and returns the previous value.
    #[inline]
    pub fn fetch_add(&self, delta: f64, order: Ordering) -> f64 {
        self.fetch_add_counting(delta, order).0
    }

    /// Like [`Self::fetch_add`], also returning how many CAS attempts failed.
    pub fn fetch_add_counting(&self, delta: f64, order: Ordering) -> (f64, u64) {
        // Adding zero must leave the cell bit-identical (-0.0 + 0.0 = +0.0).
        if delta == 0.0 {
            return (self.load(order), 0);
        }
        let load_order = match order {
            Ordering::Release => Ordering::Relaxed,
            Ordering::AcqRel => Ordering::Acquire,
            o => o,
        };
        let mut current = self.bits.load(load_order);
        let mut retries = 0;
        loop {
            let new = (f64::from_bits(current) + delta).to_bits();
            match self
                .bits
                .compare_exchange_weak(current, new, order, load_order)
            {
                Ok(prev) => return (f64::from_bits(prev), retries),
                Err(actual) => {
                    current = actual;
                    retries += 1;
                }
            }
        }
    }

    pub fn into_inner(self) -> f64 {
        f64::from_bits(self.bits.into_inner())
    }
}

/// Sequentially consistent `*cell += delta`.
#[inline]
pub fn atomic_float_add(cell: &AtomicF64, delta: f64) {
    cell.fetch_add(delta, Ordering::SeqCst);
}
