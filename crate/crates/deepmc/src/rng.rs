//! Seeded, portable pseudo-random number generation.
//!
//! Every stochastic piece of the crate (initialization, masking, data
//! splits) draws from this generator, so a run is fully determined by its
//! seed on any platform. The core is xoshiro256++ with its state filled by
//! SplitMix64, the seeding scheme recommended for the xoshiro family.
//!
//! # Algorithm
//!
//! ```text
//! next():
//!   result = rotl(s0 + s3, 23) + s0
//!   t  = s1 << 17
//!   s2 ^= s0;  s3 ^= s1;  s1 ^= s2;  s0 ^= s3
//!   s2 ^= t
//!   s3  = rotl(s3, 45)
//! ```
//!
//! Floating point uniforms use the top 53 bits (`(x >> 11) · 2⁻⁵³`), normals
//! come from the Marsaglia polar method with the spare value cached, and
//! bounded integers use rejection sampling so no modulo bias enters the
//! masking or shuffling code.

/// One step of SplitMix64; used to expand a 64-bit seed into generator state.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    /// Second output of the last polar-method round, if not yet consumed.
    spare_normal: Option<f64>,
}

impl Rng {
    /// Creates a generator whose entire stream is determined by `seed`.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for word in &mut s {
            *word = splitmix64(&mut sm);
        }
        // The all-zero state is the one fixed point of the generator. It is
        // unreachable in practice via SplitMix64, but guard anyway.
        if s == [0; 4] {
            s[0] = 0x9E3779B97F4A7C15;
        }
        Rng {
            s,
            spare_normal: None,
        }
    }

    fn from_state(s: [u64; 4]) -> Self {
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Standard normal draw via the Marsaglia polar method.
    ///
    /// Each accepted round produces two independent normals; the second is
    /// cached and returned by the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = self.uniform(-1.0, 1.0);
            let v = self.uniform(-1.0, 1.0);
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Uniform draw from `{0, 1, …, n-1}` without modulo bias.
    ///
    /// Panics if `n == 0`.
    pub fn gen_range(&mut self, n: u64) -> u64 {
        assert!(n > 0, "gen_range requires a nonempty range");
        // 2⁶⁴ mod n; draws in the final partial block of size `rem` would be
        // biased, so they are rejected.
        let rem = n.wrapping_neg() % n;
        if rem == 0 {
            return self.next_u64() % n;
        }
        let limit = u64::MAX - rem;
        loop {
            let r = self.next_u64();
            if r <= limit {
                return r % n;
            }
        }
    }

    /// Uniform draw from `{0, 1, …, n-1}` as a `usize`.
    pub fn gen_range_usize(&mut self, n: usize) -> usize {
        self.gen_range(n as u64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.gen_range_usize(i + 1);
            xs.swap(i, j);
        }
    }
}

// ─── tests ───
