/// Independent RNG streams derived from one episode seed.
pub const WORLD: u64 = 0;
pub const FAULTS: u64 = 1;
pub const REPAIR_COIN: u64 = 2;
pub const SELECTOR: u64 = 3;

/// splitmix64 finaliser over the seed pair and stream id.
pub fn derive(a: u64, b: u64, stream: u64) -> u64 {
    let mut z = a ^ b.rotate_left(29) ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
