//! Benchmarks live in `benches/`; run them with `cargo bench -p inquest-bench`.

use inquest_core::{generate_world, Difficulty, GenConfig, World};

/// Worlds shared by the benches, one per seed.
pub fn worlds(difficulty: Difficulty, n: u64) -> Vec<World> {
    (0..n).map(|s| generate_world(&GenConfig::new(difficulty, s)).expect("generated worlds are valid")).collect()
}
