//! Stable per-run seed derivation.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one run, a pure function of its key. Adding variants or graphs
/// never changes the seed of an existing key.
pub fn derive_seed(master: u64, graph_id: &str, variant: &str, seed_index: usize) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    h = fnv1a(h, graph_id.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, variant.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, &(seed_index as u64).to_le_bytes());
    mix64(h)
}

/// Seed for generating graph `index` of a `(n, d)` setting.
pub fn graph_seed(master: u64, n: usize, d: usize, index: usize) -> u64 {
    let key = format!("graph/{n}/{d}/{index}");
    mix64(fnv1a(fnv1a(FNV_OFFSET, &master.to_le_bytes()), key.as_bytes()))
}
