//! Record-keyed subsampling.
//!
//! Subsamples are chosen by ranking records on a hash of (stream seed,
//! record key), so a record's membership does not depend on its row
//! position. Permuting the rows of a dataset yields the same subsamples.

/// Stable 64-bit key for a record identifier (FNV-1a).
pub fn record_key(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer applied to a combination of two words.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Orders `pool` by the keyed hash of each row under `stream`.
pub fn keyed_order(pool: &[u32], row_keys: &[u64], stream: u64) -> Vec<u32> {
    let mut tagged: Vec<(u64, u64, u32)> = pool
        .iter()
        .map(|&i| (mix(stream, row_keys[i as usize]), row_keys[i as usize], i))
        .collect();
    tagged.sort_unstable_by_key(|&(h, k, _)| (h, k));
    tagged.into_iter().map(|(_, _, i)| i).collect()
}

/// The first `size` rows of `pool` under the keyed order, sorted by row.
pub fn keyed_subsample(pool: &[u32], row_keys: &[u64], stream: u64, size: usize) -> Vec<u32> {
    let mut out = keyed_order(pool, row_keys, stream);
    out.truncate(size);
    out.sort_unstable();
    out
}
