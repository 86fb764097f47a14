//! Directed Erdős–Rényi edge indicators `ε_{i,j}`, self-loops included.
//!
//! Each cell is drawn from a counter-based hash of `(seed, i, j)`, so any
//! cell is reproducible regardless of generation order and rows can be
//! generated in parallel.
//!
//! Text format (`dump` / `load`): a header line `N p seed`, then one line
//! holding the row-major `N²`-bit string as lowercase hex. Bit `i·N + j` is
//! `ε_{i,j}`; bits are packed most-significant first within each hex digit
//! and the final digit is zero-padded.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::numeric::{mix64, unit_interval};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSample {
    n: usize,
    p_bits: u64,
    seed: u64,
    words_per_row: usize,
    bits: Vec<u64>,
}

/// Uniform draw in `[0, 1)` for cell `(i, j)` under `seed`.
#[inline]
pub fn cell_uniform(seed: u64, i: usize, j: usize) -> f64 {
    unit_interval(mix64(mix64(seed, i as u64), j as u64))
}

fn validate(n: usize, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", n, "graph needs at least one vertex"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(
            "p",
            p,
            "edge probability must lie in (0, 1]",
        ));
    }
    Ok(())
}

/// Samples `ε_{i,j} ~ Bernoulli(p)` i.i.d. over all `N²` ordered pairs.
pub fn sample_graph(n: usize, p: f64, seed: u64) -> Result<GraphSample> {
    validate(n, p)?;
    let words_per_row = n.div_ceil(64);
    let mut bits = vec![0u64; n * words_per_row];
    if p == 1.0 {
        for row in bits.chunks_mut(words_per_row) {
            fill_ones(row, n);
        }
    } else {
        bits.par_chunks_mut(words_per_row)
            .enumerate()
            .for_each(|(i, row)| {
                for j in 0..n {
                    if cell_uniform(seed, i, j) < p {
                        row[j / 64] |= 1u64 << (j % 64);
                    }
                }
            });
    }
    Ok(GraphSample {
        n,
        p_bits: p.to_bits(),
        seed,
        words_per_row,
        bits,
    })
}

fn fill_ones(row: &mut [u64], n: usize) {
    for (w, word) in row.iter_mut().enumerate() {
        let live = (n - w * 64).min(64);
        *word = if live == 64 {
            u64::MAX
        } else {
            (1u64 << live) - 1
        };
    }
}

/// `Σ_{i,j} ε_{i,j}`.
pub fn edge_count(g: &GraphSample) -> u64 {
    g.bits.iter().map(|w| u64::from(w.count_ones())).sum()
}

impl GraphSample {
    /// Builds a graph from an explicit indicator function; `p` and `seed` are
    /// carried as metadata only.
    pub fn from_fn(
        n: usize,
        p: f64,
        seed: u64,
        mut edge: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        validate(n, p)?;
        let words_per_row = n.div_ceil(64);
        let mut bits = vec![0u64; n * words_per_row];
        for i in 0..n {
            for j in 0..n {
                if edge(i, j) {
                    bits[i * words_per_row + j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        Ok(Self {
            n,
            p_bits: p.to_bits(),
            seed,
            words_per_row,
            bits,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        f64::from_bits(self.p_bits)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let word = &mut self.bits[i * self.words_per_row + j / 64];
        let mask = 1u64 << (j % 64);
        if present {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
    }

    /// Bit-row `i`: bit `j` of the concatenated words is `ε_{i,j}`.
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    /// Row masks for `N ≤ 64`, one word per vertex.
    pub fn row_masks(&self) -> Option<Vec<u64>> {
        (self.words_per_row == 1).then(|| self.bits.clone())
    }

    /// Column masks for `N ≤ 64`: bit `i` of entry `j` is `ε_{i,j}`.
    pub fn column_masks(&self) -> Option<Vec<u64>> {
        if self.words_per_row != 1 {
            return None;
        }
        let mut cols = vec![0u64; self.n];
        for (i, &row) in self.bits.iter().enumerate() {
            let mut rest = row;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                cols[j] |= 1u64 << i;
                rest &= rest - 1;
            }
        }
        Some(cols)
    }

    /// Symmetrized off-diagonal weights `ε_{i,j} + ε_{j,i}` for `j ≠ i`.
    pub fn symmetric_weight(&self, i: usize, j: usize) -> i64 {
        if i == j {
            0
        } else {
            i64::from(self.edge(i, j)) + i64::from(self.edge(j, i))
        }
    }

    pub fn dump(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.p(), self.seed);
        let total = self.n * self.n;
        let mut nibble = 0u8;
        for idx in 0..total {
            let (i, j) = (idx / self.n, idx % self.n);
            nibble = (nibble << 1) | u8::from(self.edge(i, j));
            if idx % 4 == 3 {
                let _ = write!(out, "{nibble:x}");
                nibble = 0;
            }
        }
        let tail = total % 4;
        if tail != 0 {
            let _ = write!(out, "{:x}", nibble << (4 - tail));
        }
        out.push('\n');
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing graph header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "graph header `{header}` needs `N p seed`"
            )));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex count `{}`", fields[0])))?;
        let p: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad edge probability `{}`", fields[1])))?;
        let seed: u64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed `{}`", fields[2])))?;
        let body = lines.next().unwrap_or("").trim();
        let expected = (n * n).div_ceil(4);
        if body.len() != expected {
            return Err(Error::Parse(format!(
                "expected {expected} hex digits, found {}",
                body.len()
            )));
        }
        let digits = body
            .chars()
            .map(|c| c.to_digit(16).map(|d| d as u8))
            .collect::<Option<Vec<u8>>>()
            .ok_or_else(|| Error::Parse("graph body is not hexadecimal".into()))?;
        Self::from_fn(n, p, seed, |i, j| {
            let idx = i * n + j;
            digits[idx / 4] >> (3 - idx % 4) & 1 == 1
        })
    }
}
