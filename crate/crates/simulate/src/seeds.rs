/// Odd multiplier (the 64-bit golden-ratio constant).
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replication `index`: `base XOR (index × SEED_STRIDE)`, wrapping.
///
/// `index` runs over all replications of an experiment in schedule order,
/// so replication `r` at schedule position `k` has index `k·R + r`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_mul(SEED_STRIDE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_and_base_dependent() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| replication_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(replication_seed(42, 0), 42);
        assert_ne!(replication_seed(1, 5), replication_seed(2, 5));
    }
}
