//! Small numerical kernels shared across modules: log-factorial tables,
//! streaming log-sum-exp and the 64-bit avalanche mixer used for seeding.

/// `log(n!)` for `n = 0..=max`, filled once by cumulative summation.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0f64;
        for i in 1..=max {
            acc += (i as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    /// `log(n!)`. Panics if `n` exceeds the table.
    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.table[n]
    }

    /// `log C(n, r)`, or `-∞` when `r > n`.
    #[inline]
    pub fn ln_binomial(&self, n: usize, r: usize) -> f64 {
        if r > n {
            return f64::NEG_INFINITY;
        }
        self.table[n] - self.table[r] - self.table[n - r]
    }
}

/// Streaming `log Σ exp(x_i)` with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `log Σ exp(x_i)` over a slice; `-∞` for an empty or all-`-∞` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// SplitMix64 finalizer.
#[inline]
pub const fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit stream key from `(base, index)`:
/// `splitmix64(base + 0x9E3779B97F4A7C15 * (index + 1))` in wrapping arithmetic.
#[inline]
pub const fn mix64(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1))))
}

/// Maps a 64-bit word to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_factorial_small_values() {
        let lf = LogFactorials::new(20);
        assert_eq!(lf.get(0), 0.0);
        assert_eq!(lf.get(1), 0.0);
        assert!((lf.get(5) - 120f64.ln()).abs() < 1e-14);
        assert!((lf.ln_binomial(20, 15) - 15504f64.ln()).abs() < 1e-12);
        assert_eq!(lf.ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn streaming_matches_batch() {
        let xs = [-3.0, 700.0, 12.5, 699.0, f64::NEG_INFINITY, -1e3];
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.push(x);
        }
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12);
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn mixer_is_injective_on_small_range() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..10_000u64 {
            assert!(seen.insert(mix64(42, r)));
        }
        assert_eq!(splitmix64(0), 0);
        assert_ne!(mix64(0, 0), mix64(0, 1));
    }
}
