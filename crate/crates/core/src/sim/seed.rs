/// SplitMix64 finalizer: a bijective 64-bit mixer with full avalanche.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replication seed.
///
/// `h = sm(master); h = sm(h ^ m); h = sm(h ^ n); h = sm(h ^ rep)` where `sm`
/// is [`splitmix64`].
pub fn mix64(master_seed: u64, m: u64, n: u64, rep: u64) -> u64 {
    let mut h = splitmix64(master_seed);
    for word in [m, n, rep] {
        h = splitmix64(h ^ word);
    }
    h
}
