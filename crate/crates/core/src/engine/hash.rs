use std::sync::atomic::{AtomicI64, AtomicU64, AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Open-addressing table of column keys with optional accumulated values.
///
/// Slots hold [`HashAccumulator::EMPTY`] or a key. Insertion claims an empty
/// slot with compare-and-set and probes linearly with wraparound, so any number
/// of threads may insert or accumulate through a shared reference.
#[derive(Debug)]
pub struct HashAccumulator {
    keys: Vec<AtomicI64>,
    vals: Vec<AtomicU64>,
    size: usize,
    unique: AtomicUsize,
    multiplier: u64,
}

impl HashAccumulator {
    pub const EMPTY: i64 = -1;

    /// Key-only table, as used by the allocation phase.
    pub fn new(table_size: usize, multiplier: u64) -> Result<Self> {
        Self::build(table_size, multiplier, false)
    }

    /// Table with a parallel value array, as used by the accumulation phase.
    pub fn with_values(table_size: usize, multiplier: u64) -> Result<Self> {
        Self::build(table_size, multiplier, true)
    }

    fn build(table_size: usize, multiplier: u64, values: bool) -> Result<Self> {
        check_size(table_size)?;
        Ok(Self {
            keys: (0..table_size)
                .map(|_| AtomicI64::new(Self::EMPTY))
                .collect(),
            vals: if values {
                (0..table_size).map(|_| AtomicU64::new(0)).collect()
            } else {
                Vec::new()
            },
            size: table_size,
            unique: AtomicUsize::new(0),
            multiplier,
        })
    }

    pub fn table_size(&self) -> usize {
        self.size
    }

    pub fn unique_count(&self) -> usize {
        self.unique.load(Ordering::Acquire)
    }

    pub fn has_values(&self) -> bool {
        !self.vals.is_empty()
    }

    /// First slot probed for `key`: `(key * multiplier) mod table_size`.
    pub fn home_slot(&self, key: usize) -> usize {
        ((key as u64).wrapping_mul(self.multiplier) as usize) & (self.size - 1)
    }

    /// Empties the table and sets its active size, growing storage if needed.
    pub fn reset(&mut self, table_size: usize) -> Result<()> {
        check_size(table_size)?;
        let used = self.size.min(self.keys.len());
        if table_size > self.keys.len() {
            self.keys = (0..table_size)
                .map(|_| AtomicI64::new(Self::EMPTY))
                .collect();
            if !self.vals.is_empty() {
                self.vals = (0..table_size).map(|_| AtomicU64::new(0)).collect();
            }
        } else {
            for k in &mut self.keys[..used] {
                *k.get_mut() = Self::EMPTY;
            }
            for v in self.vals.iter_mut().take(used) {
                *v.get_mut() = 0;
            }
        }
        self.size = table_size;
        *self.unique.get_mut() = 0;
        Ok(())
    }

    /// Inserts `key`; returns `true` iff it was not already present.
    pub fn insert(&self, key: usize) -> Result<bool> {
        self.probe(key, None)
    }

    /// Inserts `key` if absent and adds `val_a * val_b` to its value.
    pub fn insert_accumulate(&self, key: usize, val_a: f64, val_b: f64) -> Result<()> {
        debug_assert!(self.has_values(), "table has no value array");
        self.probe(key, Some(val_a * val_b)).map(|_| ())
    }

    fn probe(&self, key: usize, addend: Option<f64>) -> Result<bool> {
        let k = key as i64;
        let mask = self.size - 1;
        let mut pos = self.home_slot(key);
        for _ in 0..self.size {
            let slot = &self.keys[pos];
            let current = slot.load(Ordering::Acquire);
            if current == k {
                self.add_at(pos, addend);
                return Ok(false);
            }
            if current == Self::EMPTY {
                match slot.compare_exchange(Self::EMPTY, k, Ordering::AcqRel, Ordering::Acquire) {
                    Ok(_) => {
                        self.unique.fetch_add(1, Ordering::AcqRel);
                        self.add_at(pos, addend);
                        return Ok(true);
                    }
                    // lost the race to the same key
                    Err(winner) if winner == k => {
                        self.add_at(pos, addend);
                        return Ok(false);
                    }
                    Err(_) => {}
                }
            }
            pos = (pos + 1) & mask;
        }
        Err(Error::TableFull {
            key,
            size: self.size,
        })
    }

    fn add_at(&self, pos: usize, addend: Option<f64>) {
        let Some(x) = addend else { return };
        let cell = &self.vals[pos];
        let mut old = cell.load(Ordering::Relaxed);
        loop {
            let new = (f64::from_bits(old) + x).to_bits();
            match cell.compare_exchange_weak(old, new, Ordering::AcqRel, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => old = seen,
            }
        }
    }

    /// Slot currently holding `key`, if any.
    pub fn slot_of(&self, key: usize) -> Option<usize> {
        self.keys[..self.size]
            .iter()
            .position(|s| s.load(Ordering::Acquire) == key as i64)
    }

    pub fn value_of(&self, key: usize) -> Option<f64> {
        let pos = self.slot_of(key)?;
        self.vals
            .get(pos)
            .map(|v| f64::from_bits(v.load(Ordering::Acquire)))
    }

    /// Keys in slot order.
    pub fn keys(&self) -> Vec<usize> {
        self.keys[..self.size]
            .iter()
            .map(|s| s.load(Ordering::Acquire))
            .filter(|&k| k != Self::EMPTY)
            .map(|k| k as usize)
            .collect()
    }

    /// Appends `(key, value)` pairs in slot order; value is 0 for key-only tables.
    pub fn gather_into(&self, out: &mut Vec<(usize, f64)>) {
        for (pos, slot) in self.keys[..self.size].iter().enumerate() {
            let k = slot.load(Ordering::Acquire);
            if k != Self::EMPTY {
                let v = self
                    .vals
                    .get(pos)
                    .map_or(0.0, |v| f64::from_bits(v.load(Ordering::Acquire)));
                out.push((k as usize, v));
            }
        }
    }
}

fn check_size(table_size: usize) -> Result<()> {
    if table_size == 0 || !table_size.is_power_of_two() {
        return Err(Error::BadConfig(format!(
            "hash table size {table_size} is not a power of two"
        )));
    }
    Ok(())
}
