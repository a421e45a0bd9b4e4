use serde::{Deserialize, Serialize};

use super::trace::AccessEvent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Replacement {
    #[default]
    Lru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity_bytes: usize,
    pub line_bytes: usize,
    pub associativity: usize,
    pub replacement: Replacement,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            capacity_bytes: 128 * 1024,
            line_bytes: 64,
            associativity: 4,
            replacement: Replacement::Lru,
        }
    }
}

impl CacheConfig {
    pub fn fully_associative(capacity_bytes: usize, line_bytes: usize) -> Self {
        Self {
            capacity_bytes,
            line_bytes,
            associativity: capacity_bytes / line_bytes.max(1),
            replacement: Replacement::Lru,
        }
    }

    pub fn n_lines(&self) -> usize {
        self.capacity_bytes / self.line_bytes
    }

    pub fn n_sets(&self) -> usize {
        self.n_lines() / self.associativity
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if !self.line_bytes.is_power_of_two() {
            return bad(format!(
                "line size {} is not a power of two",
                self.line_bytes
            ));
        }
        if self.capacity_bytes == 0 || !self.capacity_bytes.is_multiple_of(self.line_bytes) {
            return bad(format!(
                "capacity {} is not a positive multiple of the line size {}",
                self.capacity_bytes, self.line_bytes
            ));
        }
        if self.associativity == 0 || !self.n_lines().is_multiple_of(self.associativity) {
            return bad(format!(
                "associativity {} does not divide {} lines",
                self.associativity,
                self.n_lines()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CacheStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    /// `hits / accesses`, or 0 with no accesses.
    pub fn hit_ratio(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }
}

/// Set-associative LRU cache over byte addresses.
#[derive(Debug, Clone)]
pub struct CacheSim {
    config: CacheConfig,
    line_shift: u32,
    n_sets: u64,
    /// Per set, resident line tags, most recently used last.
    sets: Vec<Vec<u64>>,
    stats: CacheStats,
}

impl CacheSim {
    pub fn new(config: CacheConfig) -> Result<Self> {
        config.validate()?;
        let n_sets = config.n_sets();
        Ok(Self {
            config,
            line_shift: config.line_bytes.trailing_zeros(),
            n_sets: n_sets as u64,
            sets: vec![Vec::with_capacity(config.associativity); n_sets],
            stats: CacheStats::default(),
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Returns whether the access hit.
    pub fn access(&mut self, addr: u64) -> bool {
        let line = addr >> self.line_shift;
        let set = &mut self.sets[(line % self.n_sets) as usize];
        self.stats.accesses += 1;
        if let Some(pos) = set.iter().position(|&t| t == line) {
            let t = set.remove(pos);
            set.push(t);
            self.stats.hits += 1;
            true
        } else {
            if set.len() == self.config.associativity {
                set.remove(0);
            }
            set.push(line);
            self.stats.misses += 1;
            false
        }
    }

    /// Replays the processor-visible part of a trace.
    pub fn replay<'e>(&mut self, events: impl IntoIterator<Item = &'e AccessEvent>) {
        for e in events {
            if !e.internal {
                self.access(e.addr);
            }
        }
    }
}

/// Runs a trace through a cold cache.
pub fn simulate_cache<'e>(
    events: impl IntoIterator<Item = &'e AccessEvent>,
    config: CacheConfig,
) -> Result<CacheStats> {
    let mut sim = CacheSim::new(config)?;
    sim.replay(events);
    Ok(sim.stats())
}
