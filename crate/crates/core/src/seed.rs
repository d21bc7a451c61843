//! Stable seed derivation. Streams for different cells never share a seed
//! except by a 64-bit hash collision.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a seed with one more component.
pub fn mix(seed: u64, component: u64) -> u64 {
    splitmix64(seed ^ splitmix64(component.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// FNV-1a, used to fold labels like method names into a seed.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |s, &p| mix(s, p))
}
