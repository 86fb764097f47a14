//! Command-line front end.
//!
//! Every subcommand accepts the same flags. A `--config FILE` holds flat
//! `key = value` lines with the flag names as keys (`#` starts a comment);
//! flags given on the command line override the file. Exit codes: 0 on
//! success, 2 on usage errors, 1 on runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::disorder::OverlapCounter;
use crate::expansion::{
    pair_coefficients, quad_coefficients, series_remainder_ratios, split_remainder_ratios,
    PairCoefficients, QuadCoefficients, SymmetricSplit,
};
use crate::gibbs::{enumerate_partition, ModelParams, Side};
use crate::graph::sample_graph;
use crate::mcmc::{sample_chain, write_samples_csv, ChainConfig, ChainInit, ChainSample};
use crate::meanfield::{solve_magnetization, MeanFieldSolution};
use crate::numeric::mix64;
use crate::stats::{clt_experiment, partition_fluct_experiment, ExperimentConfig};
use crate::{Error, Result};

pub const THREADS_ENV: &str = "DILUTE_ISING_THREADS";

const KEYS: [&str; 13] = [
    "n", "p", "beta", "h", "replicas", "seed", "side", "method", "sweeps", "burnin", "thin", "out",
    "threads",
];

#[derive(Debug, Parser)]
#[command(
    name = "dilute-ising",
    version,
    about = "Ising models on directed Erdos-Renyi graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the mean-field equation and report m and the CLT variance.
    Meanfield(Flags),
    /// Linearization coefficients and series remainder ratios.
    ExpansionCheck(Flags),
    /// Exact partition function of one sampled graph.
    Enumerate(Flags),
    /// Central-limit experiment over graph replicas.
    Clt(Flags),
    /// Standardized fluctuations of log Z over graph replicas.
    PartitionFluct(Flags),
    /// Glauber-dynamics samples of the total spin on one sampled graph.
    Mcmc(Flags),
    /// Overlap counts nu_N(k, l, n) for all admissible triples.
    NuTable(Flags),
}

impl Command {
    fn flags(&self) -> &Flags {
        match self {
            Command::Meanfield(f)
            | Command::ExpansionCheck(f)
            | Command::Enumerate(f)
            | Command::Clt(f)
            | Command::PartitionFluct(f)
            | Command::Mcmc(f)
            | Command::NuTable(f) => f,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Flags {
    /// Number of spins N
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability p in (0, 1]
    #[arg(long)]
    p: Option<f64>,
    /// Inverse temperature
    #[arg(long)]
    beta: Option<f64>,
    /// External field
    #[arg(long)]
    h: Option<f64>,
    /// Number of graph replicas
    #[arg(long)]
    replicas: Option<usize>,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Measure side: plus, minus or both
    #[arg(long)]
    side: Option<String>,
    /// Measure construction: exact or mcmc
    #[arg(long)]
    method: Option<String>,
    /// Glauber sweeps per chain
    #[arg(long)]
    sweeps: Option<u64>,
    /// Sweeps discarded before sampling
    #[arg(long)]
    burnin: Option<u64>,
    /// Sampling interval in sweeps
    #[arg(long)]
    thin: Option<u64>,
    /// Output path: `-` for JSON on stdout, `*.csv` for CSV, anything else JSON
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Flat `key = value` file supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Fully resolved parameters of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub out: Option<String>,
    pub threads: usize,
}

/// Parses a flat `key = value` file into its entries.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        entries.insert(key.to_string(), value.trim().to_string());
    }
    Ok(entries)
}

/// Config-file text that reproduces `config` when passed back via `--config`.
pub fn config_file_text(config: &ExperimentConfig) -> String {
    format!(
        "n = {}\np = {}\nbeta = {}\nh = {}\nreplicas = {}\nseed = {}\nside = {}\nmethod = {}\nsweeps = {}\nburnin = {}\nthin = {}\n",
        config.n,
        config.p,
        config.beta,
        config.h,
        config.replicas,
        config.seed,
        config.side,
        config.method,
        config.sweeps,
        config.burnin,
        config.thin
    )
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn resolve(flags: &Flags) -> Result<RunConfig> {
    let file = match &flags.config {
        Some(path) => parse_config_text(&fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    fn pick<T: std::str::FromStr + Clone>(
        file: &BTreeMap<String, String>,
        key: &str,
        flag: &Option<T>,
        default: T,
    ) -> Result<T> {
        match (flag, file.get(key)) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(text)) => parse_value(key, text),
            (None, None) => Ok(default),
        }
    }
    let defaults = ExperimentConfig::new(12, 0.5, 1.5, 0.0);
    let side: String = pick(&file, "side", &flags.side, defaults.side.to_string())?;
    let method: String = pick(&file, "method", &flags.method, defaults.method.to_string())?;
    let experiment = ExperimentConfig {
        n: pick(&file, "n", &flags.n, defaults.n)?,
        p: pick(&file, "p", &flags.p, defaults.p)?,
        beta: pick(&file, "beta", &flags.beta, defaults.beta)?,
        h: pick(&file, "h", &flags.h, defaults.h)?,
        side: side.parse()?,
        method: method.parse()?,
        replicas: pick(&file, "replicas", &flags.replicas, defaults.replicas)?,
        seed: pick(&file, "seed", &flags.seed, defaults.seed)?,
        sweeps: pick(&file, "sweeps", &flags.sweeps, defaults.sweeps)?,
        burnin: pick(&file, "burnin", &flags.burnin, defaults.burnin)?,
        thin: pick(&file, "thin", &flags.thin, defaults.thin)?,
    };
    let out = match (&flags.out, file.get("out")) {
        (Some(v), _) => Some(v.clone()),
        (None, Some(v)) => Some(v.clone()),
        (None, None) => None,
    };
    Ok(RunConfig {
        experiment,
        out,
        threads: pick(&file, "threads", &flags.threads, 0)?,
    })
}

/// Something a subcommand can write as JSON and, optionally, CSV.
trait Output {
    fn summary(&self) -> String;
    fn write_json(&self, out: &mut dyn Write) -> Result<()>;
    fn write_csv(&self, out: &mut dyn Write) -> Result<()>;
}

fn json_to<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn emit(output: &dyn Output, target: Option<&str>) -> Result<()> {
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    writeln!(stdout, "{}", output.summary())?;
    match target {
        None => {}
        Some("-") => output.write_json(&mut stdout)?,
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            let is_csv = Path::new(path)
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            if is_csv {
                output.write_csv(&mut file)?;
            } else {
                output.write_json(&mut file)?;
            }
            file.flush()?;
        }
    }
    Ok(())
}

impl Output for crate::stats::ExperimentReport {
    fn summary(&self) -> String {
        crate::stats::ExperimentReport::summary(self)
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        crate::stats::ExperimentReport::write_json(self, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        crate::stats::ExperimentReport::write_csv(self, out)
    }
}

impl Output for MeanFieldSolution {
    fn summary(&self) -> String {
        let sigma2 = self
            .sigma2
            .map_or_else(|| "undefined".to_string(), |s| format!("{s:.6}"));
        format!(
            "meanfield beta={} h={}: m={:.6} sigma2={} regime={:?}",
            self.beta, self.h, self.m, sigma2, self.regime
        )
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        json_to(self, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "h", "m", "sigma2", "residual"])?;
        w.write_record([
            self.beta.to_string(),
            self.h.to_string(),
            self.m.to_string(),
            self.sigma2.map(|s| s.to_string()).unwrap_or_default(),
            self.residual.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ExpansionReport {
    pair: PairCoefficients,
    quad: QuadCoefficients,
    series_z0: f64,
    series_ratios: Vec<f64>,
    split_gamma0: f64,
    split_z: f64,
    split_y: f64,
    split_ratios: Vec<SymmetricSplit>,
}

fn spread(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = xs.clone().next().unwrap_or(f64::NAN);
    xs.map(|x| (x / first).max(first / x)).fold(1.0, f64::max)
}

impl Output for ExpansionReport {
    fn summary(&self) -> String {
        format!(
            "expansion-check p={} gamma={}: a0={:e} a1={:e} b0={:e} b1={:e} b12={:e} series_spread={:.4} split_spread=({:.4}, {:.4})",
            self.pair.p,
            self.pair.gamma,
            self.pair.a0,
            self.pair.a1,
            self.quad.b0,
            self.quad.b1,
            self.quad.b12,
            spread(self.series_ratios.iter().copied()),
            spread(self.split_ratios.iter().map(|s| s.even)),
            spread(self.split_ratios.iter().map(|s| s.odd)),
        )
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        json_to(self, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "series_ratio",
            "split_even_ratio",
            "split_odd_ratio",
        ])?;
        for (i, (s, split)) in self
            .series_ratios
            .iter()
            .zip(&self.split_ratios)
            .enumerate()
        {
            w.write_record([
                i.to_string(),
                s.to_string(),
                split.even.to_string(),
                split.odd.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct EnumerationReport {
    n: usize,
    p: f64,
    beta: f64,
    h: f64,
    graph_seed: u64,
    side: Side,
    centering: f64,
    log_z: f64,
    log_weight_by_spin: BTreeMap<i64, f64>,
    measure: crate::gibbs::WeightedMeasure,
}

impl Output for EnumerationReport {
    fn summary(&self) -> String {
        let mean_var = self.measure.mean_variance().ok();
        let (mean, var) = mean_var.unwrap_or((f64::NAN, f64::NAN));
        format!(
            "enumerate N={} p={} beta={} h={}: log_z={:.10} side={} mass={:.6} mean={:.6} variance={:.6}",
            self.n,
            self.p,
            self.beta,
            self.h,
            self.log_z,
            self.side,
            self.measure.total_mass(),
            mean,
            var
        )
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        json_to(self, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        self.measure.write_csv(out)
    }
}

#[derive(Debug, Serialize)]
struct ChainReport {
    n: usize,
    p: f64,
    beta: f64,
    h: f64,
    graph_seed: u64,
    chain: ChainConfig,
    samples: Vec<ChainSample>,
}

impl Output for ChainReport {
    fn summary(&self) -> String {
        let count = self.samples.len() as f64;
        let mean = self
            .samples
            .iter()
            .map(|s| s.total_spin as f64)
            .sum::<f64>()
            / count;
        format!(
            "mcmc N={} p={} beta={} h={}: samples={} mean_total_spin={:.6}",
            self.n,
            self.p,
            self.beta,
            self.h,
            self.samples.len(),
            mean
        )
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        json_to(self, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write_samples_csv(&self.samples, out)
    }
}

#[derive(Debug, Serialize)]
struct NuRow {
    k: i64,
    l: i64,
    n: i64,
    log_count: f64,
}

struct NuReport {
    n: usize,
    counter: OverlapCounter,
}

impl Output for NuReport {
    fn summary(&self) -> String {
        format!(
            "nu-table N={}: triples={}",
            self.n,
            self.counter.table().len()
        )
    }
    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        let rows: Vec<NuRow> = self
            .counter
            .table()
            .into_iter()
            .map(|(k, l, n, log_count)| NuRow { k, l, n, log_count })
            .collect();
        json_to(&rows, out)
    }
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        self.counter.write_csv(out)
    }
}

fn centering_for(side: Side, m: f64) -> f64 {
    match side {
        Side::Minus => -m,
        Side::Plus | Side::Both => m,
    }
}

fn dispatch(command: &Command, run: &RunConfig) -> Result<()> {
    let c = &run.experiment;
    let out = run.out.as_deref();
    match command {
        Command::Meanfield(_) => emit(&solve_magnetization(c.beta, c.h)?, out),
        Command::ExpansionCheck(_) => {
            let params = c.params()?;
            let m = solve_magnetization(c.beta, c.h)?.m;
            let (series_z0, split_gamma0, split_z, split_y) = (0.1, 0.02, 1.0, 2.0);
            let report = ExpansionReport {
                pair: pair_coefficients(c.p, params.gamma, m),
                quad: quad_coefficients(c.p, params.gamma, m),
                series_z0,
                series_ratios: series_remainder_ratios(c.p, series_z0, 5),
                split_gamma0,
                split_z,
                split_y,
                split_ratios: split_remainder_ratios(c.p, split_gamma0, split_z, split_y, 5),
            };
            emit(&report, out)
        }
        Command::Enumerate(_) => {
            let params = c.params()?;
            let graph_seed = c.replica_seed(0);
            let g = sample_graph(c.n, c.p, graph_seed)?;
            let summary = enumerate_partition(&g, &params)?;
            let centering = centering_for(c.side, solve_magnetization(c.beta, c.h)?.m);
            let report = EnumerationReport {
                n: c.n,
                p: c.p,
                beta: c.beta,
                h: c.h,
                graph_seed,
                side: c.side,
                centering,
                measure: summary.measure(centering, c.side),
                log_z: summary.log_z,
                log_weight_by_spin: summary.log_weight_by_spin,
            };
            emit(&report, out)
        }
        Command::Clt(_) => emit(&clt_experiment(c)?, out),
        Command::PartitionFluct(_) => emit(&partition_fluct_experiment(c)?, out),
        Command::Mcmc(_) => {
            let params = ModelParams::new(c.n, c.p, c.beta, c.h)?;
            let graph_seed = c.replica_seed(0);
            let g = sample_graph(c.n, c.p, graph_seed)?;
            let chain = ChainConfig {
                sweeps: c.sweeps,
                burnin: c.burnin,
                thin: c.thin,
                seed: mix64(graph_seed, 1),
                init: match c.side {
                    Side::Plus => ChainInit::AllUp,
                    Side::Minus => ChainInit::AllDown,
                    Side::Both => ChainInit::Random,
                },
            };
            let samples = sample_chain(&g, &params, &chain)?;
            let report = ChainReport {
                n: c.n,
                p: c.p,
                beta: c.beta,
                h: c.h,
                graph_seed,
                chain,
                samples,
            };
            emit(&report, out)
        }
        Command::NuTable(_) => emit(
            &NuReport {
                n: c.n,
                counter: OverlapCounter::new(c.n),
            },
            out,
        ),
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = resolve(cli.command.flags()).and_then(|run| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(run.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(|| dispatch(&cli.command, &run))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Method;

    fn flags() -> Flags {
        Flags {
            n: None,
            p: None,
            beta: None,
            h: None,
            replicas: None,
            seed: None,
            side: None,
            method: None,
            sweeps: None,
            burnin: None,
            thin: None,
            out: None,
            threads: None,
            config: None,
        }
    }

    #[test]
    fn config_text_parsing() {
        let entries = parse_config_text("# comment\n n = 10 \n\nbeta=1.5 # trailing\n").unwrap();
        assert_eq!(entries.get("n").unwrap(), "10");
        assert_eq!(entries.get("beta").unwrap(), "1.5");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("n 10").is_err());
    }

    #[test]
    fn config_text_roundtrip() {
        let mut config = ExperimentConfig::new(14, 0.3, 0.123_456_789_012_345_6, 0.25);
        config.seed = u64::MAX;
        config.side = Side::Both;
        config.method = Method::Mcmc;
        let entries = parse_config_text(&config_file_text(&config)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, config_file_text(&config)).unwrap();
        let mut f = flags();
        f.config = Some(path);
        let resolved = resolve(&f).unwrap();
        assert_eq!(resolved.experiment, config);
        assert_eq!(entries.len(), 11);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "n = 9\nbeta = 2\n").unwrap();
        let mut f = flags();
        f.config = Some(path);
        f.n = Some(11);
        let resolved = resolve(&f).unwrap();
        assert_eq!(resolved.experiment.n, 11);
        assert_eq!(resolved.experiment.beta, 2.0);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "n = ten\n").unwrap();
        let mut f = flags();
        f.config = Some(path);
        assert!(resolve(&f).unwrap_err().is_usage());
        let mut f = flags();
        f.side = Some("up".into());
        assert!(resolve(&f).unwrap_err().is_usage());
    }
}
