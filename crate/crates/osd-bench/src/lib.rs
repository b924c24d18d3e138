//! Shared helpers for the separation benchmarks.

use osd_core::system::StandardSystem;

/// A fixed mixed corpus of small random systems.
pub fn small_corpus(count: u64) -> Vec<StandardSystem> {
    osd_core::generate::mixed_corpus(count)
}
