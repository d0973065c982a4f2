//! Deterministic seed derivation.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `value` into `state`. Stable across platforms and releases.
pub(crate) fn mix(state: u64, value: u64) -> u64 {
    splitmix(state ^ splitmix(value))
}

pub(crate) fn mix_all(state: u64, values: impl IntoIterator<Item = u64>) -> u64 {
    values.into_iter().fold(state, mix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_matters() {
        assert_ne!(mix_all(1, [2, 3]), mix_all(1, [3, 2]));
        assert_eq!(mix_all(7, [1, 2, 3]), mix_all(7, [1, 2, 3]));
    }
}
