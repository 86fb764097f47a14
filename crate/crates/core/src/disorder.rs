//! Exact disorder averages of the tilted weights
//! `T(σ) = exp(γ Σ ε_{i,j}(σ_i σ_j - m²) + βh|σ|)`.
//!
//! Edge independence turns `E T(σ)` into a product over the `N²` cells of
//! `1 - p + p e^{γ(σ_i σ_j - m²)}`. Because `σ_i σ_j` only takes the values
//! `±1`, the logarithm of each factor is exactly affine in `σ_i σ_j`, hence
//! `log E T(σ) = N² a0 + a1 |σ|² + βh|σ|`. The pair moment works the same way
//! with the four-point coefficients `b0, b1, b12`.
//!
//! All results are returned on the log scale.

use std::io::Write;

use crate::expansion::{pair_coefficients, quad_coefficients};
use crate::gibbs::ModelParams;
use crate::meanfield::{solve_magnetization, up_count};
use crate::numeric::{LogFactorials, LogSumExp};
use crate::{Error, Result};

/// Model parameters together with the centering magnetization `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltParams {
    pub params: ModelParams,
    pub m: f64,
}

impl TiltParams {
    /// Centers at the mean-field solution `m⁺(β, h)`.
    pub fn at_fixed_point(params: ModelParams) -> Result<Self> {
        let solution = solve_magnetization(params.beta, params.h)?;
        Ok(Self {
            params,
            m: solution.m,
        })
    }

    /// Arbitrary centering; the moment identities hold for any `m`.
    pub fn with_centering(params: ModelParams, m: f64) -> Self {
        Self { params, m }
    }
}

/// `log E T(σ)` for any `σ` with `|σ| = k`: `N² a0 + a1 k² + βhk`.
pub fn expected_tilt(tp: &TiltParams, k: i64) -> Result<f64> {
    let ModelParams {
        n,
        p,
        beta,
        h,
        gamma,
        ..
    } = tp.params;
    up_count(n, k)?;
    let c = pair_coefficients(p, gamma, tp.m);
    let nf = n as f64;
    let kf = k as f64;
    Ok(nf * nf * c.a0 + c.a1 * kf * kf + beta * h * kf)
}

/// Whether `(|σ|, |τ|, |στ|) = (k, l, overlap)` is realizable for `N` spins.
pub fn admissible_triple(n: usize, k: i64, l: i64, overlap: i64) -> bool {
    let ni = n as i64;
    let in_range = |v: i64| v.abs() <= ni && (ni + v) % 2 == 0;
    in_range(k)
        && in_range(l)
        && in_range(overlap)
        && (ni + k + l + overlap) % 4 == 0
        && -(ni + k) <= l + overlap
        && l + overlap <= ni + k
        && -(ni - k) <= l - overlap
        && l - overlap <= ni - k
}

/// `log E[T(σ)T(τ)] = N² b0 + b1(k² + l²) + b12 n² + βh(k + l)`.
pub fn expected_tilt_pair(tp: &TiltParams, k: i64, l: i64, overlap: i64) -> Result<f64> {
    let ModelParams {
        n,
        p,
        beta,
        h,
        gamma,
        ..
    } = tp.params;
    if !admissible_triple(n, k, l, overlap) {
        return Err(Error::InadmissibleTriple { n, k, l, overlap });
    }
    let c = quad_coefficients(p, gamma, tp.m);
    let nf = n as f64;
    let (kf, lf, of) = (k as f64, l as f64, overlap as f64);
    Ok(nf * nf * c.b0 + c.b1 * kf * kf + c.b2() * lf * lf + c.b12 * of * of + beta * h * (kf + lf))
}

/// Log-scale overlap counts `ν_N(k, l, n) = #{(σ, τ) : |σ| = k, |τ| = l, |στ| = n}`.
#[derive(Debug, Clone)]
pub struct OverlapCounter {
    n: usize,
    table: LogFactorials,
}

impl OverlapCounter {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            table: LogFactorials::new(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log ν_N(k, l, n)`, `-∞` for impossible triples.
    ///
    /// Given `|σ| = k`, the up-spins of `τ` split hypergeometrically between
    /// the `(N+k)/2` up-sites and the `(N-k)/2` down-sites of `σ`:
    /// `(N+k+l+n)/4` land on the former and `(N+l-k-n)/4` on the latter.
    pub fn log_count(&self, k: i64, l: i64, overlap: i64) -> f64 {
        if !admissible_triple(self.n, k, l, overlap) {
            return f64::NEG_INFINITY;
        }
        let ni = self.n as i64;
        let sigma_up = ((ni + k) / 2) as usize;
        let shared_up = ((ni + k + l + overlap) / 4) as usize;
        let crossed_up = ((ni + l - k - overlap) / 4) as usize;
        self.table.ln_binomial(self.n, sigma_up)
            + self.table.ln_binomial(sigma_up, shared_up)
            + self.table.ln_binomial(self.n - sigma_up, crossed_up)
    }

    /// `log P(|στ| = n | |σ| = k, |τ| = l)` for uniform `(σ, τ)`.
    pub fn log_conditional(&self, k: i64, l: i64, overlap: i64) -> f64 {
        let count = self.log_count(k, l, overlap);
        if count == f64::NEG_INFINITY {
            return count;
        }
        let ni = self.n as i64;
        count
            - self.table.ln_binomial(self.n, ((ni + k) / 2) as usize)
            - self.table.ln_binomial(self.n, ((ni + l) / 2) as usize)
    }

    /// Every realizable triple with its log count, in `(k, l, n)` order.
    pub fn table(&self) -> Vec<(i64, i64, i64, f64)> {
        let ni = self.n as i64;
        let mut rows = Vec::new();
        for k in (-ni..=ni).step_by(2) {
            for l in (-ni..=ni).step_by(2) {
                for overlap in (-ni..=ni).step_by(2) {
                    let c = self.log_count(k, l, overlap);
                    if c > f64::NEG_INFINITY {
                        rows.push((k, l, overlap, c));
                    }
                }
            }
        }
        rows
    }

    /// CSV with columns `k,l,n,log_count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["k", "l", "n", "log_count"])?;
        for (k, l, overlap, c) in self.table() {
            writer.write_record([
                k.to_string(),
                l.to_string(),
                overlap.to_string(),
                c.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `log ν_N(k, l, n)`; builds a fresh factorial table.
pub fn overlap_count(n: usize, k: i64, l: i64, overlap: i64) -> f64 {
    OverlapCounter::new(n).log_count(k, l, overlap)
}

/// `log E Z̃_N = log Σ_k C(N, (N+k)/2) E T(σ_k)`.
pub fn expected_tilted_partition(tp: &TiltParams) -> Result<f64> {
    let n = tp.params.n;
    let table = LogFactorials::new(n);
    let mut acc = LogSumExp::new();
    for up in 0..=n {
        let k = 2 * up as i64 - n as i64;
        acc.push(table.ln_binomial(n, up) + expected_tilt(tp, k)?);
    }
    Ok(acc.value())
}

/// `log E[Z̃_N²] = log Σ_{k,l,n} ν_N(k, l, n) E[T(σ)T(τ)]`.
pub fn expected_tilted_second_moment(tp: &TiltParams) -> Result<f64> {
    let counter = OverlapCounter::new(tp.params.n);
    let mut acc = LogSumExp::new();
    for (k, l, overlap, count) in counter.table() {
        acc.push(count + expected_tilt_pair(tp, k, l, overlap)?);
    }
    Ok(acc.value())
}

/// `log Z̃_N = log Z_N - γ m² Σ ε_{i,j}` for a realized graph.
pub fn tilted_log_partition(log_z: f64, edges: u64, tp: &TiltParams) -> f64 {
    log_z - tp.params.gamma * tp.m * tp.m * edges as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::SpinConfig;

    /// Brute-force average of `T(σ)` over all `2^{N²}` graphs.
    fn brute_force_tilt(params: &ModelParams, m: f64, spins: &[i8]) -> f64 {
        let n = spins.len();
        let cells = n * n;
        let k: i64 = spins.iter().map(|&s| i64::from(s)).sum();
        let mut mean = 0.0;
        for pattern in 0..1u64 << cells {
            let mut prob = 1.0;
            let mut exponent = 0.0;
            for c in 0..cells {
                let (i, j) = (c / n, c % n);
                if pattern >> c & 1 == 1 {
                    prob *= params.p;
                    exponent += params.gamma * (f64::from(spins[i] * spins[j]) - m * m);
                } else {
                    prob *= 1.0 - params.p;
                }
            }
            mean += prob * exponent.exp();
        }
        mean.ln() + params.beta * params.h * k as f64
    }

    fn brute_force_pair(params: &ModelParams, m: f64, s: &[i8], t: &[i8]) -> f64 {
        let n = s.len();
        let cells = n * n;
        let mut mean = 0.0;
        for pattern in 0..1u64 << cells {
            let mut prob = 1.0;
            let mut exponent = 0.0;
            for c in 0..cells {
                let (i, j) = (c / n, c % n);
                if pattern >> c & 1 == 1 {
                    prob *= params.p;
                    exponent += params.gamma
                        * (f64::from(s[i] * s[j]) + f64::from(t[i] * t[j]) - 2.0 * m * m);
                } else {
                    prob *= 1.0 - params.p;
                }
            }
            mean += prob * exponent.exp();
        }
        let field: i64 = s.iter().chain(t).map(|&x| i64::from(x)).sum();
        mean.ln() + params.beta * params.h * field as f64
    }

    #[test]
    fn tilt_at_p_one_is_deterministic() {
        let params = ModelParams::new(7, 1.0, 1.3, 0.2).unwrap();
        let tp = TiltParams::with_centering(params, 0.6);
        for k in [-7i64, -1, 3, 7] {
            let expected =
                params.gamma * ((k * k) as f64 - 0.36 * 49.0) + params.beta * params.h * k as f64;
            assert!((expected_tilt(&tp, k).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn tilt_vanishes_without_coupling() {
        let params = ModelParams::new(6, 0.3, 0.0, 0.0).unwrap();
        let tp = TiltParams::with_centering(params, 0.4);
        assert_eq!(expected_tilt(&tp, 2).unwrap(), 0.0);
        assert_eq!(expected_tilt_pair(&tp, 2, 0, 0).unwrap(), 0.0);
        assert!(
            (expected_tilted_partition(&tp).unwrap() - 6.0 * std::f64::consts::LN_2).abs() < 1e-12
        );
    }

    #[test]
    fn tilt_matches_sixteen_graph_average() {
        let params = ModelParams::from_gamma(2, 0.5, 0.1, 0.0).unwrap();
        let value = expected_tilt(&TiltParams::with_centering(params, 0.5), 2).unwrap();
        let oracle = brute_force_tilt(&params, 0.5, &[1, 1]);
        assert!((value - oracle).abs() < 1e-14);
    }

    #[test]
    fn pair_matches_sixteen_graph_average() {
        let params = ModelParams::from_gamma(2, 0.5, 0.1, 0.0).unwrap();
        let tp = TiltParams::with_centering(params, 0.5);
        // k = 2, l = 0, n = 0: σ = (+,+), τ = (+,-).
        let value = expected_tilt_pair(&tp, 2, 0, 0).unwrap();
        let oracle = brute_force_pair(&params, 0.5, &[1, 1], &[1, -1]);
        assert!((value - oracle).abs() < 1e-14);
    }

    #[test]
    fn pair_at_p_one() {
        let params = ModelParams::new(5, 1.0, 0.9, 0.3).unwrap();
        let tp = TiltParams::with_centering(params, 0.7);
        let (k, l, o) = (3i64, 1i64, 3i64);
        let expected = params.gamma * ((k * k + l * l) as f64 - 2.0 * 0.49 * 25.0)
            + params.beta * params.h * (k + l) as f64;
        assert!((expected_tilt_pair(&tp, k, l, o).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn brute_force_over_all_graphs_small_n() {
        // N = 3: 512 graphs, every configuration pair.
        let params = ModelParams::from_gamma(3, 0.35, 0.2, 0.15).unwrap();
        let m = 0.45;
        let tp = TiltParams::with_centering(params, m);
        for a in 0..8u64 {
            let s = SpinConfig::from_mask(3, a);
            let single = expected_tilt(&tp, s.total_spin()).unwrap();
            assert!((single - brute_force_tilt(&params, m, s.spins())).abs() < 1e-12);
            for b in 0..8u64 {
                let t = SpinConfig::from_mask(3, b);
                let overlap: i64 = s
                    .spins()
                    .iter()
                    .zip(t.spins())
                    .map(|(&x, &y)| i64::from(x * y))
                    .sum();
                let pair =
                    expected_tilt_pair(&tp, s.total_spin(), t.total_spin(), overlap).unwrap();
                assert!((pair - brute_force_pair(&params, m, s.spins(), t.spins())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_and_constraint_errors() {
        let params = ModelParams::new(4, 0.5, 1.0, 0.0).unwrap();
        let tp = TiltParams::with_centering(params, 0.3);
        assert!(matches!(expected_tilt(&tp, 1), Err(Error::Parity { .. })));
        assert!(expected_tilt(&tp, 6).is_err());
        assert!(matches!(
            expected_tilt_pair(&tp, 4, 0, 2),
            Err(Error::InadmissibleTriple { .. })
        ));
    }

    #[test]
    fn overlap_boundary_law() {
        for n in 1..=10usize {
            let counter = OverlapCounter::new(n);
            let table = LogFactorials::new(n);
            let ni = n as i64;
            for l in (-ni..=ni).step_by(2) {
                for o in (-ni..=ni).step_by(2) {
                    let c = counter.log_count(ni, l, o);
                    if o == l {
                        let expected = table.ln_binomial(n, ((ni + l) / 2) as usize);
                        assert!((c - expected).abs() < 1e-12);
                    } else {
                        assert_eq!(c, f64::NEG_INFINITY);
                    }
                }
            }
        }
    }

    #[test]
    fn overlap_row_sums() {
        for n in 1..=10usize {
            let counter = OverlapCounter::new(n);
            let table = LogFactorials::new(n);
            let ni = n as i64;
            for k in (-ni..=ni).step_by(2) {
                for l in (-ni..=ni).step_by(2) {
                    let mut acc = LogSumExp::new();
                    for o in (-ni..=ni).step_by(2) {
                        acc.push(counter.log_count(k, l, o));
                    }
                    let expected = table.ln_binomial(n, ((ni + k) / 2) as usize)
                        + table.ln_binomial(n, ((ni + l) / 2) as usize);
                    assert!((acc.value() - expected).abs() < 1e-12, "N={n} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn overlap_parity_gives_zero_count() {
        assert_eq!(overlap_count(4, 1, 0, 0), f64::NEG_INFINITY);
        assert_eq!(overlap_count(4, 2, 2, 2), f64::NEG_INFINITY);
        // 6 choices of σ, then one shared and one crossed up-spin for τ.
        assert!((overlap_count(4, 0, 0, 0) - 24f64.ln()).abs() < 1e-14);
        assert!((overlap_count(4, 0, 0, 4) - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn nu_table_csv() {
        let mut buf = Vec::new();
        OverlapCounter::new(2).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,l,n,log_count\n"));
        // 16 configuration pairs spread over the realizable triples.
        let total: f64 = text
            .lines()
            .skip(1)
            .map(|line| {
                line.rsplit(',')
                    .next()
                    .unwrap()
                    .parse::<f64>()
                    .unwrap()
                    .exp()
            })
            .sum();
        assert!((total - 16.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_partition_identity_at_p_one() {
        use crate::gibbs::curie_weiss_partition;
        let params = ModelParams::new(30, 1.0, 1.5, 0.0).unwrap();
        let tp = TiltParams::at_fixed_point(params).unwrap();
        let z = curie_weiss_partition(&params).unwrap();
        let tilted = tilted_log_partition(z.log_z, 900, &tp);
        let expected = expected_tilted_partition(&tp).unwrap();
        assert!((tilted - expected).abs() < 1e-10 * expected.abs());
    }
}
