//! Shared inputs for the benchmarks.

use st_lab_core::{gen_random, Configuration};

/// Random configuration that is never empty of incidences.
pub fn random_config(points: usize, lines: usize, seed: u64) -> Configuration {
    gen_random(points, lines, seed).expect("valid sizes")
}
