//! Experiment orchestration: config files, seed fan-out, sweeps and the CSV
//! artifacts they leave behind.

pub mod gradvar;
pub mod heatmap;
pub mod stats;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::agent::{
    run_algorithm1, toy_chain_iterations, AgentConfig, CriticTarget, EpisodeStats, ExperimentTrace, GraphMode,
    PotentialSource, RunConfig, ToyConfig,
};
use crate::error::{Error, Result};
use crate::gcn::{GcnConfig, GcnModel, UNSEEN_PHI};
use crate::graph::TrajectoryGraph;
use crate::inference::{alpha_beta_potential, Collapse};
use crate::mdp::{by_name, parse_mdp, MdpSpec};
use crate::shaping::{l2_potential_for, PotentialTable, Provenance, ShapingConfig};

pub use heatmap::{config_hash, emit_heatmap, HeatmapGrid};
pub use stats::{paired_t_test, spearman, summarize, PairedTest, Summary};

/// Everything needed to run one method over a list of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Built-in environment name or path to an MDP file.
    pub env: String,
    /// `None` runs the plain actor-critic.
    pub potential: Option<Provenance>,
    pub alpha: f64,
    pub eta: f64,
    pub lambda: f64,
    pub retrain_every: usize,
    pub reset_graph: bool,
    pub graph: GraphMode,
    pub critic: CriticTarget,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: "fourrooms".into(),
            potential: Some(Provenance::Gcn),
            alpha: ShapingConfig::default().alpha,
            eta: GcnConfig::default().eta,
            lambda: AgentConfig::default().lambda,
            retrain_every: 1,
            reset_graph: false,
            graph: GraphMode::Sampled,
            critic: CriticTarget::default(),
            episodes: 300,
            seeds: (0..10).collect(),
            out: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::config(key, format!("expected true or false, got {other:?}"))),
    }
}

/// `none`/`a2c` for no shaping, otherwise a provenance name.
pub fn parse_potential(value: &str) -> Result<Option<Provenance>> {
    match value.trim() {
        "none" | "a2c" => Ok(None),
        other => other.parse().map(Some),
    }
}

/// `0,1,5` or a half-open range `0..10`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let value = value.trim();
    if let Some((lo, hi)) = value.split_once("..") {
        let (lo, hi): (u64, u64) = (parse_num("seeds", lo)?, parse_num("seeds", hi)?);
        return Ok((lo..hi).collect());
    }
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num("seeds", s)).collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, v) = (key.trim(), value.trim());
        match key {
            "env" => self.env = v.to_string(),
            "potential" => self.potential = parse_potential(v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "eta" => self.eta = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "retrain_every" | "retrain-every" => self.retrain_every = parse_num(key, v)?,
            "reset_graph" | "reset-graph" => self.reset_graph = parse_bool(key, v)?,
            "graph" => {
                self.graph = match v {
                    "sampled" => GraphMode::Sampled,
                    "full" => GraphMode::Full,
                    other => return Err(Error::config("graph", format!("expected sampled or full, got {other:?}"))),
                }
            }
            "critic" => {
                self.critic = match v {
                    "plain" => CriticTarget::Plain,
                    "mixed" => CriticTarget::Mixed,
                    other => return Err(Error::config("critic", format!("expected plain or mixed, got {other:?}"))),
                }
            }
            "episodes" => self.episodes = parse_num(key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(i + 1, "expected key = value"))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Canonical `key=value` text; [`ExperimentConfig::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let potential = self.potential.map_or("none", Provenance::as_str);
        let graph = match self.graph {
            GraphMode::Sampled => "sampled",
            GraphMode::Full => "full",
        };
        let critic = match self.critic {
            CriticTarget::Plain => "plain",
            CriticTarget::Mixed => "mixed",
        };
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut out = String::new();
        let _ = writeln!(out, "env={}", self.env);
        let _ = writeln!(out, "potential={potential}");
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "eta={}", self.eta);
        let _ = writeln!(out, "lambda={}", self.lambda);
        let _ = writeln!(out, "retrain_every={}", self.retrain_every);
        let _ = writeln!(out, "reset_graph={}", self.reset_graph);
        let _ = writeln!(out, "graph={graph}");
        let _ = writeln!(out, "critic={critic}");
        let _ = writeln!(out, "episodes={}", self.episodes);
        let _ = writeln!(out, "seeds={}", seeds.join(","));
        let _ = writeln!(out, "out={}", self.out.display());
        out
    }

    /// Short method name used for output folders.
    pub fn label(&self) -> String {
        match (self.potential, self.graph) {
            (None, _) => "a2c".into(),
            (Some(Provenance::Gcn), GraphMode::Full) => "gcn-full".into(),
            (Some(p), _) => p.as_str().into(),
        }
    }

    pub fn validate(&self) -> Result<MdpSpec> {
        let mdp = resolve_env(&self.env)?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "empty seed list"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("lambda", format!("{} outside [0, 1]", self.lambda)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", format!("{} is not a finite non-negative number", self.eta)));
        }
        if self.retrain_every == 0 {
            return Err(Error::config("retrain_every", "must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        if self.potential == Some(Provenance::L2) && mdp.layout().is_none() {
            return Err(Error::config("potential", format!("l2 needs a grid environment, {:?} is not one", self.env)));
        }
        check_writable(&self.out)?;
        Ok(mdp)
    }

    pub fn run_config(&self, mdp: &MdpSpec) -> Result<RunConfig> {
        let potential = match self.potential {
            None => PotentialSource::Disabled,
            Some(Provenance::Gcn) => PotentialSource::Gcn,
            Some(p) => PotentialSource::Fixed(fixed_potential(mdp, p)?),
        };
        Ok(RunConfig {
            agent: AgentConfig { lambda: self.lambda, critic_target: self.critic, ..AgentConfig::default() },
            gcn: GcnConfig { eta: self.eta, ..GcnConfig::default() },
            shaping: ShapingConfig { alpha: self.alpha, provenance: self.potential },
            potential,
            graph: self.graph,
            episodes: self.episodes,
            retrain_every: self.retrain_every,
            reset_graph: self.reset_graph,
        })
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::config("out", format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::config("out", format!("{}: {e}", dir.display())))?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

/// A built-in environment name, or a path to an MDP file.
pub fn resolve_env(name: &str) -> Result<MdpSpec> {
    match by_name(name) {
        Ok(mdp) => Ok(mdp),
        Err(e) => {
            let path = Path::new(name);
            if !path.is_file() {
                return Err(e);
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
            parse_mdp(stem, &std::fs::read_to_string(path)?)
        }
    }
}

/// Potentials that do not depend on the agent's experience.
pub fn fixed_potential(mdp: &MdpSpec, provenance: Provenance) -> Result<PotentialTable> {
    match provenance {
        Provenance::AlphaBeta => alpha_beta_potential(mdp, Collapse::TimeAverage),
        Provenance::L2 => l2_potential_for(mdp),
        Provenance::Constant => Ok(PotentialTable::constant(mdp.num_states(), UNSEEN_PHI)),
        Provenance::Zero => Ok(PotentialTable::zero(mdp.num_states())),
        Provenance::Gcn => Err(Error::config("potential", "gcn is learned, not fixed")),
    }
}

/// Φ_GCN trained on the MDP's full transition graph for `iterations` steps.
pub fn full_graph_gcn(mdp: &MdpSpec, cfg: &GcnConfig, iterations: usize) -> Result<PotentialTable> {
    let mut model = GcnModel::new(mdp.num_states(), GcnConfig { iterations, ..cfg.clone() });
    model.train(&TrajectoryGraph::from_mdp(mdp))
}

/// Any provenance as a table over the MDP's states; GCN goes through
/// [`full_graph_gcn`].
pub fn potential_for(mdp: &MdpSpec, provenance: Provenance, gcn: &GcnConfig, iterations: usize) -> Result<PotentialTable> {
    match provenance {
        Provenance::Gcn => full_graph_gcn(mdp, gcn, iterations),
        other => fixed_potential(mdp, other),
    }
}

pub const TRACE_HEADER: &str = "seed,episode,steps,return,cum_steps";
pub const AGGREGATE_HEADER: &str = "episode,n,mean,std,stderr";

pub fn trace_csv(trace: &ExperimentTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for e in &trace.episodes {
        let _ = writeln!(out, "{},{},{},{},{}", trace.seed, e.episode, e.steps, e.ret, e.cum_steps);
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<(u64, EpisodeStats)>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(TRACE_HEADER) {
        return Err(Error::parse(1, format!("expected header `{TRACE_HEADER}`")));
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(i + 1, "expected 5 columns"));
            }
            let bad = |what: &str| Error::parse(i + 1, format!("bad {what}"));
            Ok((
                f[0].parse().map_err(|_| bad("seed"))?,
                EpisodeStats {
                    episode: f[1].parse().map_err(|_| bad("episode"))?,
                    steps: f[2].parse().map_err(|_| bad("steps"))?,
                    ret: f[3].parse().map_err(|_| bad("return"))?,
                    cum_steps: f[4].parse().map_err(|_| bad("cum_steps"))?,
                },
            ))
        })
        .collect()
}

/// Cumulative-steps statistics across seeds at one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub episode: usize,
    pub summary: Summary,
}

pub fn aggregate(traces: &[ExperimentTrace]) -> Vec<AggregateRow> {
    let len = traces.iter().map(|t| t.episodes.len()).min().unwrap_or(0);
    (0..len)
        .map(|ep| {
            let mut acc = stats::Running::default();
            traces.iter().for_each(|t| acc.push(t.episodes[ep].cum_steps as f64));
            AggregateRow { episode: ep, summary: acc.summary() }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        let s = r.summary;
        let _ = writeln!(out, "{},{},{},{},{}", r.episode, s.n, s.mean, s.std, s.stderr);
    }
    out
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(AGGREGATE_HEADER) {
        return Err(Error::parse(1, format!("expected header `{AGGREGATE_HEADER}`")));
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(i + 1, "expected 5 columns"));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad column {k}")));
            Ok(AggregateRow {
                episode: f[0].parse().map_err(|_| Error::parse(i + 1, "bad episode"))?,
                summary: Summary {
                    n: f[1].parse().map_err(|_| Error::parse(i + 1, "bad n"))?,
                    mean: num(2)?,
                    std: num(3)?,
                    stderr: num(4)?,
                },
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct SuiteReport {
    pub label: String,
    pub dir: PathBuf,
    /// Successful runs in seed order.
    pub traces: Vec<ExperimentTrace>,
    pub failures: Vec<(u64, String)>,
    pub aggregate: Vec<AggregateRow>,
}

impl SuiteReport {
    /// Cumulative steps at the last episode, one per successful seed.
    pub fn final_cum_steps(&self) -> Vec<f64> {
        self.traces.iter().map(|t| t.total_steps() as f64).collect()
    }
}

/// Runs every seed, then writes `<out>/<label>/seed_<n>.csv`,
/// `aggregate.csv`, `config.txt`, a `failures.txt` when any seed failed, and
/// Φ heatmaps for grid environments.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let mdp = cfg.validate()?;
    let run_cfg = cfg.run_config(&mdp)?;
    let results: Vec<(u64, Result<ExperimentTrace>)> =
        cfg.seeds.par_iter().map(|&seed| (seed, run_algorithm1(&mdp, &run_cfg, seed))).collect();

    let label = cfg.label();
    let dir = cfg.out.join(&label);
    std::fs::create_dir_all(&dir)?;
    let config_text = cfg.to_text();
    std::fs::write(dir.join("config.txt"), &config_text)?;

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(trace) => {
                std::fs::write(dir.join(format!("seed_{seed}.csv")), trace_csv(&trace))?;
                traces.push(trace);
            }
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    if !failures.is_empty() {
        let text: String = failures.iter().map(|(s, e)| format!("seed {s}: {e}\n")).collect();
        std::fs::write(dir.join("failures.txt"), text)?;
    }
    let rows = aggregate(&traces);
    std::fs::write(dir.join("aggregate.csv"), aggregate_csv(&rows))?;

    if let Some(layout) = mdp.layout() {
        if let Some(phi) = traces.first().and_then(|t| t.final_potential.as_ref()) {
            emit_heatmap(phi, Some(layout), &cfg.env, phi.provenance().as_str(), &config_text, &dir)?;
        }
        if cfg.potential == Some(Provenance::Gcn) {
            let ab = alpha_beta_potential(&mdp, Collapse::TimeAverage)?;
            emit_heatmap(&ab, Some(layout), &cfg.env, "ab", &config_text, &dir)?;
        }
    }
    Ok(SuiteReport { label, dir, traces, failures, aggregate: rows })
}

pub const ALPHA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// One aggregate curve per α, written to `<out>/alpha_sweep/alpha_<α>.csv`.
/// Returns the written paths with each curve's final mean.
pub fn alpha_sweep(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<Vec<(f64, PathBuf, f64)>> {
    let sweep_dir = cfg.out.join("alpha_sweep");
    std::fs::create_dir_all(&sweep_dir)?;
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let point = ExperimentConfig { alpha, out: sweep_dir.join(format!("runs_alpha_{alpha:.1}")), ..cfg.clone() };
        let report = run_suite(&point)?;
        let path = sweep_dir.join(format!("alpha_{alpha:.1}.csv"));
        std::fs::write(&path, aggregate_csv(&report.aggregate))?;
        let last = report.aggregate.last().map_or(f64::NAN, |r| r.summary.mean);
        out.push((alpha, path, last));
    }
    Ok(out)
}

pub const ETA_GRID: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct EtaPoint {
    pub eta: f64,
    /// Dirichlet energy of the trained Φ, one per seed.
    pub energies: Vec<f64>,
    pub heatmap: Option<PathBuf>,
}

/// Trains a fresh GCN per (η, seed) on the full graph of `env` and records
/// the Dirichlet energy of the resulting Φ. Writes `eta_sweep.csv` and, for
/// grid environments, one heatmap per η from the first seed.
pub fn eta_sweep(env: &str, etas: &[f64], seeds: &[u64], iterations: usize, out: &Path) -> Result<Vec<EtaPoint>> {
    let mdp = resolve_env(env)?;
    check_writable(out)?;
    let graph = TrajectoryGraph::from_mdp(&mdp);
    let ops = graph.spectral()?;
    let mut csv = String::from("eta,seed,dirichlet_energy\n");
    let mut points = Vec::with_capacity(etas.len());
    for &eta in etas {
        let runs: Vec<Result<(f64, PotentialTable)>> = seeds
            .par_iter()
            .map(|&seed| {
                let cfg = GcnConfig { eta, seed, iterations, ..GcnConfig::default() };
                let mut model = GcnModel::new(mdp.num_states(), cfg);
                let phi = model.train(&graph)?;
                let on_nodes: Vec<f64> = ops.states().iter().map(|&s| phi.get(s)).collect();
                Ok((ops.dirichlet_energy(&on_nodes)?, phi))
            })
            .collect();
        let mut energies = Vec::with_capacity(seeds.len());
        let mut first_phi = None;
        for (&seed, run) in seeds.iter().zip(runs) {
            let (energy, phi) = run?;
            let _ = writeln!(csv, "{eta},{seed},{energy}");
            energies.push(energy);
            first_phi.get_or_insert(phi);
        }
        let heatmap = match (first_phi, mdp.layout()) {
            (Some(phi), Some(layout)) => {
                let tag = format!("gcn-eta{eta}");
                let text = format!("env={env}\neta={eta}\nseed={}\niterations={iterations}\n", seeds[0]);
                Some(emit_heatmap(&phi, Some(layout), env, &tag, &text, out)?)
            }
            _ => None,
        };
        points.push(EtaPoint { eta, energies, heatmap });
    }
    std::fs::write(out.join("eta_sweep.csv"), csv)?;
    Ok(points)
}

pub const TOY_LAMBDAS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyRow {
    pub lambda: f64,
    /// `None` when censored.
    pub plain: Option<usize>,
    pub shaped: Option<usize>,
}

/// Iterations-to-optimal on the two-arm chain under plain and shaped rewards.
pub fn run_toy_sweep(lambdas: &[f64], phi: &PotentialTable) -> Result<Vec<ToyRow>> {
    let mdp = crate::mdp::build_two_arm_chain();
    lambdas
        .par_iter()
        .map(|&lambda| {
            let cfg = ToyConfig { lambda, ..ToyConfig::default() };
            Ok(ToyRow {
                lambda,
                plain: toy_chain_iterations(&mdp, None, &cfg)?.iterations,
                shaped: toy_chain_iterations(&mdp, Some(phi), &cfg)?.iterations,
            })
        })
        .collect()
}

/// `lambda,reward,iterations,censored`; censored rows leave iterations empty.
pub fn toy_csv(rows: &[ToyRow]) -> String {
    let mut out = String::from("lambda,reward,iterations,censored\n");
    for r in rows {
        for (name, it) in [("plain", r.plain), ("shaped", r.shaped)] {
            match it {
                Some(n) => {
                    let _ = writeln!(out, "{},{name},{n},false", r.lambda);
                }
                None => {
                    let _ = writeln!(out, "{},{name},,true", r.lambda);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub spearman: f64,
    /// Largest gap after scaling each table to a maximum of 1.
    pub max_abs_diff: f64,
}

pub fn compare_potentials(a: &PotentialTable, b: &PotentialTable) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let (na, nb) = (a.max_normalized(), b.max_normalized());
    let max_abs_diff = na.iter().zip(&nb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Comparison { spearman: spearman(&a.to_vec(), &b.to_vec()), max_abs_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(out: &Path) -> ExperimentConfig {
        ExperimentConfig {
            env: "fourrooms".into(),
            potential: Some(Provenance::AlphaBeta),
            episodes: 5,
            seeds: vec![3, 1],
            out: out.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_text_roundtrip() {
        let cfg = ExperimentConfig { alpha: 0.25, seeds: vec![4, 9], graph: GraphMode::Full, ..Default::default() };
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = ExperimentConfig::parse("alpha = lots").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "alpha"));
        let err = ExperimentConfig::parse("colour = red").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "colour"));
        let cfg = ExperimentConfig { alpha: 1.5, ..quick(&std::env::temp_dir()) };
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "alpha"));
        let cfg = ExperimentConfig { seeds: vec![], ..quick(&std::env::temp_dir()) };
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "seeds"));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 7").unwrap(), vec![5, 7]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn suite_is_deterministic_and_reparseable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_suite(&quick(a.path())).unwrap();
        run_suite(&quick(b.path())).unwrap();
        let read = |d: &Path| std::fs::read_to_string(d.join("ab/aggregate.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
        let rows = parse_aggregate_csv(&read(a.path())).unwrap();
        assert_eq!(rows, ra.aggregate);
        let trace = std::fs::read_to_string(a.path().join("ab/seed_3.csv")).unwrap();
        let parsed = parse_trace_csv(&trace).unwrap();
        assert_eq!(parsed.len(), 5);
        assert_eq!(parsed[4].1, ra.traces[0].episodes[4]);
    }

    #[test]
    fn aggregate_matches_two_pass() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_suite(&ExperimentConfig { seeds: vec![0, 1, 2], ..quick(dir.path()) }).unwrap();
        for row in &report.aggregate {
            let xs: Vec<f64> = report.traces.iter().map(|t| t.episodes[row.episode].cum_steps as f64).collect();
            let two = summarize(&xs);
            assert!((two.mean - row.summary.mean).abs() < 1e-10);
            assert!((two.std - row.summary.std).abs() < 1e-10);
        }
    }

    #[test]
    fn compare_identical_and_reversed() {
        let a = PotentialTable::new(vec![0.1, 0.4, 0.3, 0.8], Provenance::Gcn).unwrap();
        let c = compare_potentials(&a, &a).unwrap();
        assert_eq!((c.spearman, c.max_abs_diff), (1.0, 0.0));
        let rev = PotentialTable::new(a.to_vec().iter().map(|x| 1.0 - x).collect(), Provenance::AlphaBeta).unwrap();
        assert!((compare_potentials(&a, &rev).unwrap().spearman + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_toy_matches_plain() {
        let mdp = crate::mdp::build_two_arm_chain();
        let rows = run_toy_sweep(&[0.5, 1.0], &PotentialTable::zero(mdp.num_states())).unwrap();
        for r in rows {
            assert_eq!(r.plain, r.shaped);
        }
    }
}
