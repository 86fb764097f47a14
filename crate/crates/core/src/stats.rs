//! Kolmogorov–Smirnov distances to centred Gaussians and the replica
//! experiments built on them.
//!
//! Replica `r` of an experiment with base seed `s` uses the graph seed
//! `mix64(s, r)` (see [`crate::numeric::mix64`]). Replicas run on the current
//! rayon pool and are folded in replica order, so reports do not depend on
//! the thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::disorder::{expected_tilted_partition, TiltParams};
use crate::gibbs::{
    curie_weiss_partition, enumerate_partition, ModelParams, Side, WeightedMeasure,
    DEFAULT_ENUMERATION_CAP,
};
use crate::graph::{edge_count, sample_graph};
use crate::mcmc::{sample_chain, ChainConfig, ChainInit};
use crate::meanfield::solve_magnetization;
use crate::numeric::mix64;
use crate::{Error, Result};

/// `Φ(x / √σ²)`, evaluated as `½ erfc(-x / √(2σ²))`.
pub fn gaussian_cdf(x: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(
            "sigma2",
            sigma2,
            "variance must be positive",
        ));
    }
    Ok(0.5 * erfc(-x / (2.0 * sigma2).sqrt()))
}

/// `sup_x |F(x) - Φ_{σ²}(x)|` for a probability measure `mu`.
///
/// The supremum of a step function against a continuous CDF is attained at a
/// jump, on one side or the other, so it suffices to check both one-sided
/// limits at every atom.
pub fn ks_distance(mu: &WeightedMeasure, sigma2: f64) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::EmptyInput);
    }
    if (mu.total_mass() - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized {
            mass: mu.total_mass(),
        });
    }
    let mut cumulative = 0.0;
    let mut sup: f64 = 0.0;
    for atom in mu.atoms() {
        let phi = gaussian_cdf(atom.position, sigma2)?;
        let left = cumulative;
        cumulative += atom.weight;
        sup = sup.max((left - phi).abs()).max((cumulative - phi).abs());
    }
    Ok(sup.min(1.0))
}

/// KS distance of the empirical measure of `samples`.
pub fn ks_distance_samples(samples: &[f64], sigma2: f64) -> Result<f64> {
    ks_distance(&WeightedMeasure::from_samples(samples)?, sigma2)
}

/// `[∫1, ∫x, ∫x²]` against `mu`.
pub fn raw_moments(mu: &WeightedMeasure) -> [f64; 3] {
    mu.atoms().iter().fold([0.0; 3], |[m0, m1, m2], a| {
        [
            m0 + a.weight,
            m1 + a.weight * a.position,
            m2 + a.weight * a.position * a.position,
        ]
    })
}

fn mean_and_unbiased_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, variance)
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mcmc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Mcmc => "mcmc",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "mcmc" => Ok(Method::Mcmc),
            other => Err(Error::invalid("method", other, "expected exact or mcmc")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    PartitionFluct,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Clt => "clt",
            ExperimentKind::PartitionFluct => "partition-fluct",
        })
    }
}

/// Every parameter an experiment reads. Fields irrelevant to a given
/// experiment are echoed but unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub h: f64,
    pub side: Side,
    pub method: Method,
    pub replicas: usize,
    pub seed: u64,
    pub sweeps: u64,
    pub burnin: u64,
    pub thin: u64,
}

impl ExperimentConfig {
    pub fn new(n: usize, p: f64, beta: f64, h: f64) -> Self {
        Self {
            n,
            p,
            beta,
            h,
            side: Side::Plus,
            method: Method::Exact,
            replicas: 1,
            seed: 0,
            sweeps: 10_000,
            burnin: 1_000,
            thin: 1,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.p, self.beta, self.h)
    }

    /// Seed of replica `r`.
    pub fn replica_seed(&self, r: usize) -> u64 {
        mix64(self.seed, r as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRow {
    pub replica: usize,
    pub seed: u64,
    pub ks: Option<f64>,
    pub mean: Option<f64>,
    pub var: Option<f64>,
    pub stat: Option<f64>,
    /// Total mass of the measure before normalization.
    pub mass: Option<f64>,
    /// `(Σ ε - pN²) / √(N² p(1-p))`.
    pub edge_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replicas: usize,
    /// Mean of replica means (clt) or of the statistic (partition-fluct).
    pub mean: f64,
    /// Mean of replica variances (clt) or unbiased variance of the statistic.
    pub variance: f64,
    /// Median replica KS distance (clt) or KS of the statistic against N(0,1).
    pub ks: f64,
    pub edge_z_mean: Option<f64>,
    pub edge_z_variance: Option<f64>,
}

fn required(rows: &[ReplicaRow], field: fn(&ReplicaRow) -> Option<f64>) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            field(r).ok_or_else(|| Error::Parse(format!("replica {} lacks a field", r.replica)))
        })
        .collect()
}

impl Aggregate {
    pub fn from_rows(kind: ExperimentKind, rows: &[ReplicaRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let count = rows.len() as f64;
        match kind {
            ExperimentKind::Clt => {
                let ks = required(rows, |r| r.ks)?;
                let means = required(rows, |r| r.mean)?;
                let vars = required(rows, |r| r.var)?;
                Ok(Self {
                    replicas: rows.len(),
                    mean: means.iter().sum::<f64>() / count,
                    variance: vars.iter().sum::<f64>() / count,
                    ks: median(&ks),
                    edge_z_mean: None,
                    edge_z_variance: None,
                })
            }
            ExperimentKind::PartitionFluct => {
                let stats = required(rows, |r| r.stat)?;
                let edges = required(rows, |r| r.edge_z)?;
                let (mean, variance) = mean_and_unbiased_variance(&stats);
                let (edge_mean, edge_variance) = mean_and_unbiased_variance(&edges);
                Ok(Self {
                    replicas: rows.len(),
                    mean,
                    variance,
                    ks: ks_distance_samples(&stats, 1.0)?,
                    edge_z_mean: Some(edge_mean),
                    edge_z_variance: Some(edge_variance),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    /// Always `"ks"`: the distance used in place of a weak-topology metric.
    pub metric: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReplicaRow>,
    pub aggregate: Aggregate,
}

fn csv_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    fn assemble(
        experiment: ExperimentKind,
        config: ExperimentConfig,
        rows: Vec<ReplicaRow>,
    ) -> Result<Self> {
        let aggregate = Aggregate::from_rows(experiment, &rows)?;
        Ok(Self {
            experiment,
            metric: "ks".to_string(),
            config,
            rows,
            aggregate,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Flat CSV with columns `replica,seed,ks,mean,var,stat`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["replica", "seed", "ks", "mean", "var", "stat"])?;
        for row in &self.rows {
            writer.write_record([
                row.replica.to_string(),
                row.seed.to_string(),
                csv_field(row.ks),
                csv_field(row.mean),
                csv_field(row.var),
                csv_field(row.stat),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let c = &self.config;
        let a = &self.aggregate;
        let mut line = format!(
            "{} N={} p={} beta={} h={} replicas={}: mean={:.6} variance={:.6} ks={:.6}",
            self.experiment, c.n, c.p, c.beta, c.h, a.replicas, a.mean, a.variance, a.ks
        );
        if let (Some(m), Some(v)) = (a.edge_z_mean, a.edge_z_variance) {
            line.push_str(&format!(" edge_z_mean={m:.6} edge_z_variance={v:.6}"));
        }
        line
    }
}

fn check_replicas(config: &ExperimentConfig) -> Result<()> {
    if config.replicas == 0 {
        return Err(Error::invalid("replicas", 0, "need at least one replica"));
    }
    Ok(())
}

/// Empirical CLT check for `L_N` or `L_N^±` against `N(0, σ²(β, h))`.
///
/// Rows report the KS distance, mean and variance of the measure rescaled to
/// unit mass, with the raw mass kept alongside. At `p = 1` with the exact
/// method there is no disorder and the closed form is used for one replica.
pub fn clt_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    check_replicas(config)?;
    let params = config.params()?;
    if config.h > 0.0 && config.side != Side::Both {
        return Err(Error::invalid(
            "side",
            config.side,
            "a positive field requires side = both",
        ));
    }
    let solution = solve_magnetization(config.beta, config.h)?;
    let sigma2 = solution.variance()?;
    let centering = match config.side {
        Side::Minus => -solution.m,
        Side::Plus | Side::Both => solution.m,
    };

    let replica = |r: usize| -> Result<ReplicaRow> {
        let seed = config.replica_seed(r);
        let measure = match config.method {
            Method::Exact if config.p == 1.0 => {
                curie_weiss_partition(&params)?.measure(centering, config.side)
            }
            Method::Exact => {
                let g = sample_graph(config.n, config.p, seed)?;
                enumerate_partition(&g, &params)?.measure(centering, config.side)
            }
            Method::Mcmc => mcmc_measure(config, &params, seed, centering)?,
        };
        let mass = measure.total_mass();
        let normalized = measure.normalized()?;
        let (mean, var) = normalized.mean_variance()?;
        Ok(ReplicaRow {
            replica: r,
            seed,
            ks: Some(ks_distance(&normalized, sigma2)?),
            mean: Some(mean),
            var: Some(var),
            stat: None,
            mass: Some(mass),
            edge_z: None,
        })
    };

    let mut config = *config;
    if config.method == Method::Exact && config.p == 1.0 {
        config.replicas = 1;
    } else if config.method == Method::Exact && config.n > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n: config.n,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let rows = (0..config.replicas)
        .into_par_iter()
        .map(replica)
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::assemble(ExperimentKind::Clt, config, rows)
}

/// Chain samples of the total spin mapped to `(k - N·centering)/√N`.
///
/// The chain starts in the targeted well; `Plus` and `Minus` keep only the
/// samples on their side of zero.
fn mcmc_measure(
    config: &ExperimentConfig,
    params: &ModelParams,
    seed: u64,
    centering: f64,
) -> Result<WeightedMeasure> {
    let g = sample_graph(config.n, config.p, seed)?;
    let init = match config.side {
        Side::Plus => ChainInit::AllUp,
        Side::Minus => ChainInit::AllDown,
        Side::Both => ChainInit::Random,
    };
    let chain = ChainConfig {
        sweeps: config.sweeps,
        burnin: config.burnin,
        thin: config.thin,
        seed: mix64(seed, 1),
        init,
    };
    let nf = config.n as f64;
    let positions: Vec<f64> = sample_chain(&g, params, &chain)?
        .into_iter()
        .map(|s| s.total_spin)
        .filter(|&k| match config.side {
            Side::Plus => k > 0,
            Side::Minus => k <= 0,
            Side::Both => true,
        })
        .map(|k| (k as f64 - nf * centering) / nf.sqrt())
        .collect();
    WeightedMeasure::from_samples(&positions)
}

/// `(log Z - log E Z̃ - βNm²/2) / √(β²m⁴(1-p)/(4p))`.
pub fn partition_fluct_stat(
    log_z: f64,
    log_ez_tilde: f64,
    params: &ModelParams,
    m: f64,
) -> Result<f64> {
    let ModelParams { n, p, beta, .. } = *params;
    let denominator = (beta * beta * m.powi(4) * (1.0 - p) / (4.0 * p)).sqrt();
    if !(denominator > 0.0) {
        return Err(Error::DegenerateVariance { denominator });
    }
    Ok((log_z - log_ez_tilde - beta * n as f64 * m * m / 2.0) / denominator)
}

/// `(Σ ε - pN²) / √(N² p(1-p))`.
pub fn edge_z_score(edges: u64, n: usize, p: f64) -> f64 {
    let cells = (n * n) as f64;
    (edges as f64 - p * cells) / (cells * p * (1.0 - p)).sqrt()
}

/// Fluctuations of `log Z_N` around the tilted annealed value, standardized.
pub fn partition_fluct_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    check_replicas(config)?;
    if config.p >= 1.0 {
        return Err(Error::invalid("p", config.p, "the statistic needs p < 1"));
    }
    let params = config.params()?;
    if config.n > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n: config.n,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let tp = TiltParams::at_fixed_point(params)?;
    let log_ez_tilde = expected_tilted_partition(&tp)?;
    // Rejects m = 0 before any enumeration.
    partition_fluct_stat(0.0, 0.0, &params, tp.m)?;

    let rows = (0..config.replicas)
        .into_par_iter()
        .map(|r| -> Result<ReplicaRow> {
            let seed = config.replica_seed(r);
            let g = sample_graph(config.n, config.p, seed)?;
            let log_z = enumerate_partition(&g, &params)?.log_z;
            Ok(ReplicaRow {
                replica: r,
                seed,
                ks: None,
                mean: None,
                var: None,
                stat: Some(partition_fluct_stat(log_z, log_ez_tilde, &params, tp.m)?),
                mass: None,
                edge_z: Some(edge_z_score(edge_count(&g), config.n, config.p)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::assemble(ExperimentKind::PartitionFluct, *config, rows)
}
