//! Portable deterministic random generator.
//!
//! Instance generation must reproduce bit-for-bit across platforms and
//! bindings, so nothing here depends on an external RNG implementation. The
//! generator is SplitMix64: output k (zero-based) is `mix(seed + (k+1)*GAMMA)`
//! where GAMMA = 0x9E3779B97F4A7C15, i.e. a pure counter scheme whose state is
//! only (seed, k).
//!
//! Derived stream layout, which consumers rely on and must not change:
//! - `uniform` maps one `u64` to [0,1) via the top 53 bits.
//! - `normal_pair` consumes exactly two uniforms (Box-Muller; the radial draw
//!   uses 1-u to stay in (0,1]).
//! - `fill_normal` consumes ceil(len/2) pairs and discards the second normal
//!   of the last pair when len is odd.
//! - `uniform_index` consumes one `u64` (Lemire multiply-shift, no rejection;
//!   the bias of at most n/2^64 is irrelevant at the n used here and keeps the
//!   draw count deterministic).

/// Deterministic 64-bit counter generator (SplitMix64).
#[derive(Clone, Debug)]
pub struct PortableRng {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in (0, 1]; safe as a logarithm argument.
    pub fn open01(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// One Box-Muller pair of independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let r = (-2.0 * self.open01().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        (r * theta.cos(), r * theta.sin())
    }

    /// Fills `buf` with standard normals per the documented pair layout.
    pub fn fill_normal(&mut self, buf: &mut [f64]) {
        let mut i = 0;
        while i + 1 < buf.len() {
            let (a, b) = self.normal_pair();
            buf[i] = a;
            buf[i + 1] = b;
            i += 2;
        }
        if i < buf.len() {
            buf[i] = self.normal_pair().0;
        }
    }

    /// Uniform index in 0..n. `n` must be nonzero.
    pub fn uniform_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform_index needs a nonempty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
