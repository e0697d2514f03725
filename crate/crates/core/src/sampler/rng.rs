//! Counter-based uniform generator with fixed constants.
//!
//! Output `n` (starting at 1) of stream `(seed, stream)` is
//!
//! ```text
//! key   = mix64(seed ^ mix64(stream ^ STREAM_SALT))
//! x_n   = mix64(key + n * GOLDEN_GAMMA)          (wrapping u64 arithmetic)
//! u_n   = (x_n >> 11) * 2^-53                    in [0, 1)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Only integer operations and an
//! exact shift/scale are involved, so any language reproduces the stream.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
pub const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;
const UNIT_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// Anything that yields uniform variates on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            key: mix64(seed ^ mix64(stream ^ STREAM_SALT)),
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of values drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(
            self.key
                .wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)),
        )
    }
}

impl UniformSource for RngStream {
    fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT_SCALE
    }
}

/// Replays a fixed list of variates cyclically. Handy for hand-checked cases.
#[derive(Debug, Clone)]
pub struct FixedUniforms {
    values: Vec<f64>,
    pos: usize,
}

impl FixedUniforms {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "need at least one variate");
        Self { values, pos: 0 }
    }
}

impl UniformSource for FixedUniforms {
    fn next_uniform(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

/// Inverse-CDF walk over `weights` (which sum to `total`) in color order.
pub fn categorical(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut cumulative = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cumulative += w;
        if target < cumulative {
            return i;
        }
    }
    // rounding pushed the target past the last cumulative sum
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
