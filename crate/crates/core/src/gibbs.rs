//! Quenched Gibbs measures on a fixed graph: the Hamiltonian
//! `H(σ) = -(1/(2Np)) Σ ε_{i,j} σ_i σ_j - h Σ σ_i`, exact partition functions
//! and the magnetization measures `L_N`, `L_N⁺`, `L_N⁻`.
//!
//! Exact enumeration walks all `2^N` configurations in Gray-code order. Every
//! configuration is binned by its up-spin count and its off-diagonal
//! interaction sum, both integers, so the sweep only increments counters;
//! the Boltzmann factors are applied once per bin in log-space afterwards.
//! Cost is `2^N` steps of a few popcounts each, which is why the default cap
//! is 22 spins.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::GraphSample;
use crate::numeric::{LogFactorials, LogSumExp};
use crate::{Error, Result};

/// Default limit on `N` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 22;
/// Largest cap accepted by [`enumerate_partition_with_cap`].
pub const MAX_ENUMERATION_CAP: usize = 32;

/// The parameter block `(N, p, β, h)` with the derived coupling `γ = β/(2Np)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub h: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(n: usize, p: f64, beta: f64, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", n, "must be positive"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid(
                "p",
                p,
                "edge probability must lie in (0, 1]",
            ));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(
                "beta",
                beta,
                "must be finite and nonnegative",
            ));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", h, "must be finite and nonnegative"));
        }
        Ok(Self {
            n,
            p,
            beta,
            h,
            gamma: beta / (2.0 * n as f64 * p),
        })
    }

    /// The same state point with `γ` held fixed: `β = γ · 2Np`.
    pub fn from_gamma(n: usize, p: f64, gamma: f64, h: f64) -> Result<Self> {
        let mut params = Self::new(n, p, gamma * 2.0 * n as f64 * p, h)?;
        params.gamma = gamma;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<i8>,
    total_spin: i64,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid("spin", bad, "spins take values -1 or +1"));
        }
        let total_spin = spins.iter().map(|&s| i64::from(s)).sum();
        Ok(Self { spins, total_spin })
    }

    pub fn all_up(n: usize) -> Self {
        Self {
            spins: vec![1; n],
            total_spin: n as i64,
        }
    }

    pub fn all_down(n: usize) -> Self {
        Self {
            spins: vec![-1; n],
            total_spin: -(n as i64),
        }
    }

    /// Spin `i` is `+1` iff bit `i` of `mask` is set.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let spins: Vec<i8> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        let total_spin = spins.iter().map(|&s| i64::from(s)).sum();
        Self { spins, total_spin }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, i: usize) -> i8 {
        self.spins[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.spins[i] = -self.spins[i];
        self.total_spin += 2 * i64::from(self.spins[i]);
    }

    /// `|σ| = Σ σ_i`, which may be negative.
    pub fn total_spin(&self) -> i64 {
        self.total_spin
    }
}

/// `H(σ) = -(1/(2Np)) Σ_{i,j} ε_{i,j} σ_i σ_j - h Σ_i σ_i`.
pub fn hamiltonian(g: &GraphSample, sigma: &SpinConfig, params: &ModelParams) -> Result<f64> {
    if g.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: g.n(),
        });
    }
    if sigma.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: sigma.len(),
        });
    }
    let mut interaction = 0i64;
    for i in 0..params.n {
        let si = i64::from(sigma.get(i));
        let mut row_sum = 0i64;
        for j in 0..params.n {
            if g.edge(i, j) {
                row_sum += i64::from(sigma.get(j));
            }
        }
        interaction += si * row_sum;
    }
    let scale = 1.0 / (2.0 * params.n as f64 * params.p);
    Ok(-scale * interaction as f64 - params.h * sigma.total_spin() as f64)
}

/// Exact partition function with the Gibbs weight grouped by total spin.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSummary {
    pub n: usize,
    /// `log Z_N`.
    pub log_z: f64,
    /// `k ↦ log Σ_{|σ| = k} e^{-βH(σ)}` for every realized `k`.
    pub log_weight_by_spin: BTreeMap<i64, f64>,
}

impl PartitionSummary {
    /// Normalized weight `μ(|σ| = k)`.
    pub fn probability(&self, k: i64) -> f64 {
        self.log_weight_by_spin
            .get(&k)
            .map_or(0.0, |&w| (w - self.log_z).exp())
    }

    /// The measure with atoms `(k - N·centering)/√N`.
    pub fn measure(&self, centering: f64, side: Side) -> WeightedMeasure {
        let nf = self.n as f64;
        let sqrt_n = nf.sqrt();
        let (factor, keep): (f64, fn(i64) -> bool) = match side {
            Side::Both => (1.0, |_| true),
            Side::Plus => (2.0, |k| k > 0),
            Side::Minus => (2.0, |k| k <= 0),
        };
        let atoms = self
            .log_weight_by_spin
            .iter()
            .filter(|(&k, _)| keep(k))
            .map(|(&k, &w)| Atom {
                position: (k as f64 - nf * centering) / sqrt_n,
                weight: factor * (w - self.log_z).exp(),
                total_spin: Some(k),
            })
            .collect();
        WeightedMeasure::from_sorted_atoms(atoms)
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if cap > MAX_ENUMERATION_CAP {
        return Err(Error::invalid(
            "cap",
            cap,
            "enumeration cap may not exceed 32",
        ));
    }
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(())
}

/// [`enumerate_partition_with_cap`] at [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate_partition(g: &GraphSample, params: &ModelParams) -> Result<PartitionSummary> {
    enumerate_partition_with_cap(g, params, DEFAULT_ENUMERATION_CAP)
}

/// Sums `e^{-βH(σ)}` over all `2^N` configurations. Visits `2^N` states, one
/// spin flip apart, at `O(1)` word operations each for `N ≤ 64`.
pub fn enumerate_partition_with_cap(
    g: &GraphSample,
    params: &ModelParams,
    cap: usize,
) -> Result<PartitionSummary> {
    check_cap(params.n, cap)?;
    if g.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: g.n(),
        });
    }
    let n = params.n;
    let histogram = interaction_histogram(g);

    let diagonal = (0..n).filter(|&i| g.edge(i, i)).count() as i64;
    let off_edges = histogram.off_edges as i64;
    let mut total = LogSumExp::new();
    let mut by_spin = BTreeMap::new();
    for up in 0..=n {
        let k = 2 * up as i64 - n as i64;
        let field = params.beta * params.h * k as f64;
        let mut acc = LogSumExp::new();
        for (bin, &count) in histogram.row(up).iter().enumerate() {
            if count == 0 {
                continue;
            }
            let interaction = 2 * bin as i64 - off_edges + diagonal;
            acc.push((count as f64).ln() + params.gamma * interaction as f64 + field);
        }
        let value = acc.value();
        if value > f64::NEG_INFINITY {
            by_spin.insert(k, value);
            total.push(value);
        }
    }
    Ok(PartitionSummary {
        n,
        log_z: total.value(),
        log_weight_by_spin: by_spin,
    })
}

/// Counts of configurations by `(up-spin count, (E_off + e_off)/2)` where
/// `E_off = Σ_{i≠j} ε_{i,j} σ_i σ_j` and `e_off` is the off-diagonal edge count.
struct InteractionHistogram {
    off_edges: usize,
    counts: Vec<u64>,
}

impl InteractionHistogram {
    fn row(&self, up: usize) -> &[u64] {
        let width = self.off_edges + 1;
        &self.counts[up * width..(up + 1) * width]
    }
}

fn interaction_histogram(g: &GraphSample) -> InteractionHistogram {
    let n = g.n();
    let rows = g.row_masks().expect("enumeration is limited to N <= 64");
    let cols = g.column_masks().expect("enumeration is limited to N <= 64");
    // Off-diagonal neighbourhoods and their sizes.
    let out: Vec<u64> = (0..n).map(|i| rows[i] & !(1u64 << i)).collect();
    let inc: Vec<u64> = (0..n).map(|i| cols[i] & !(1u64 << i)).collect();
    let degree: Vec<i64> = (0..n)
        .map(|i| i64::from(out[i].count_ones() + inc[i].count_ones()))
        .collect();
    let off_edges = out.iter().map(|w| w.count_ones() as usize).sum::<usize>();
    let width = off_edges + 1;
    let mut counts = vec![0u64; (n + 1) * width];

    // Start from all spins down: every off-diagonal product is +1.
    let mut up_mask = 0u64;
    let mut ups = 0usize;
    let mut bin = off_edges as i64;
    counts[bin as usize] += 1;
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        let bit = 1u64 << i;
        // s_i = Σ_{j≠i} (ε_{i,j} + ε_{j,i}) σ_j
        let aligned = i64::from((out[i] & up_mask).count_ones() + (inc[i] & up_mask).count_ones());
        let local = 2 * aligned - degree[i];
        let spin = if up_mask & bit != 0 { 1 } else { -1 };
        // E_off changes by -2 σ_i s_i; the bin index by half of that.
        bin -= spin * local;
        up_mask ^= bit;
        if spin == 1 {
            ups -= 1;
        } else {
            ups += 1;
        }
        counts[ups * width + bin as usize] += 1;
    }
    InteractionHistogram { off_edges, counts }
}

/// Complete-graph fast path: `Σ_k C(N, (N+k)/2) exp(βk²/(2N) + βhk)`.
pub fn curie_weiss_partition(params: &ModelParams) -> Result<PartitionSummary> {
    if params.p != 1.0 {
        return Err(Error::invalid(
            "p",
            params.p,
            "the grouped Curie-Weiss sum requires p = 1",
        ));
    }
    let n = params.n;
    let table = LogFactorials::new(n);
    let nf = n as f64;
    let mut total = LogSumExp::new();
    let mut by_spin = BTreeMap::new();
    for up in 0..=n {
        let k = 2 * up as i64 - n as i64;
        let kf = k as f64;
        let value = table.ln_binomial(n, up)
            + params.beta * kf * kf / (2.0 * nf)
            + params.beta * params.h * kf;
        by_spin.insert(k, value);
        total.push(value);
    }
    Ok(PartitionSummary {
        n,
        log_z: total.value(),
        log_weight_by_spin: by_spin,
    })
}

/// Which configurations enter the magnetization measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `|σ| > 0`, weights doubled.
    Plus,
    /// `|σ| ≤ 0`, weights doubled.
    Minus,
    /// All configurations.
    Both,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
            Side::Both => "both",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Side::Plus),
            "minus" => Ok(Side::Minus),
            "both" => Ok(Side::Both),
            other => Err(Error::invalid(
                "side",
                other,
                "expected plus, minus or both",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
    /// Total spin `k` behind the atom, for magnetization measures.
    pub total_spin: Option<i64>,
}

/// Finite atomic measure on the real line with strictly increasing positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl WeightedMeasure {
    fn from_sorted_atoms(atoms: Vec<Atom>) -> Self {
        let total_mass = atoms.iter().map(|a| a.weight).sum();
        Self { atoms, total_mass }
    }

    /// Sorts by position and merges coincident atoms.
    pub fn from_atoms(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = points.into_iter().collect();
        for &(x, w) in &points {
            if !x.is_finite() {
                return Err(Error::invalid(
                    "position",
                    x,
                    "atom positions must be finite",
                ));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(
                    "weight",
                    w,
                    "atom weights must be finite and nonnegative",
                ));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<Atom> = Vec::with_capacity(points.len());
        for (position, weight) in points {
            match atoms.last_mut() {
                Some(last) if last.position == position => last.weight += weight,
                _ => atoms.push(Atom {
                    position,
                    weight,
                    total_spin: None,
                }),
            }
        }
        Ok(Self::from_sorted_atoms(atoms))
    }

    /// Empirical measure with mass `1/len` per sample.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let w = 1.0 / samples.len() as f64;
        Self::from_atoms(samples.iter().map(|&x| (x, w)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The same measure rescaled to total mass one.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.total_mass > 0.0) {
            return Err(Error::NotNormalized {
                mass: self.total_mass,
            });
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                weight: a.weight / self.total_mass,
                ..*a
            })
            .collect();
        Ok(Self::from_sorted_atoms(atoms))
    }

    /// Mean and variance of the normalized measure.
    pub fn mean_variance(&self) -> Result<(f64, f64)> {
        if !(self.total_mass > 0.0) {
            return Err(Error::NotNormalized {
                mass: self.total_mass,
            });
        }
        let mean = integrate(self, |x| x) / self.total_mass;
        let variance = integrate(self, |x| (x - mean) * (x - mean)) / self.total_mass;
        Ok((mean, variance))
    }

    /// CSV with columns `k,position,weight`; `k` is empty for atoms without a
    /// total spin.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["k", "position", "weight"])?;
        for atom in &self.atoms {
            let k = atom.total_spin.map(|k| k.to_string()).unwrap_or_default();
            writer.write_record([k, atom.position.to_string(), atom.weight.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `∫ g dμ = Σ w_k g(x_k)`.
pub fn integrate(mu: &WeightedMeasure, g: impl Fn(f64) -> f64) -> f64 {
    mu.atoms.iter().map(|a| a.weight * g(a.position)).sum()
}

/// `L_N` (side `Both`) or `L_N^±` for one graph by exact enumeration.
pub fn magnetization_measure(
    g: &GraphSample,
    params: &ModelParams,
    centering: f64,
    side: Side,
) -> Result<WeightedMeasure> {
    Ok(enumerate_partition(g, params)?.measure(centering, side))
}
