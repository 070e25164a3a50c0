//! Shared fixtures for the benchmarks.

use rft_core::{grow_tree, GrowthTree, ModelSpec, RngStream};

/// A friend tree of `n` vertices from a fixed stream.
pub fn friend_tree(n: u32) -> GrowthTree {
    grow_tree(&ModelSpec::friend(), n, &mut RngStream::new(2024, 0)).expect("valid model")
}
