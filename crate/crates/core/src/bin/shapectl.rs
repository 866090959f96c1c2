//! Command-line front end to the experiment harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graph_shaping::agent::{run_algorithm1, PotentialSource, RunConfig};
use graph_shaping::gcn::GcnConfig;
use graph_shaping::harness::gradvar::{gradient_variance, gradvar_csv};
use graph_shaping::harness::{
    alpha_sweep, compare_potentials, config_hash, emit_heatmap, eta_sweep, parse_potential, parse_seeds,
    potential_for, resolve_env, run_suite, run_toy_sweep, toy_csv, ExperimentConfig, ALPHA_GRID, ETA_GRID,
    TOY_LAMBDAS,
};
use graph_shaping::mdp::{build_two_arm_chain, MdpSpec};
use graph_shaping::shaping::{PotentialTable, Provenance};
use graph_shaping::{Error, Result};

#[derive(Parser)]
#[command(name = "shapectl", version, about = "Learned potential-based reward shaping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method over a list of seeds and write traces and aggregates.
    Run(RunArgs),
    /// Repeat `run` for every α in a list, one aggregate curve per α.
    AlphaSweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated α values; defaults to 0.0, 0.1, …, 1.0.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Train the GCN at several η on a fixed full graph; Dirichlet energies and heatmaps.
    EtaSweep {
        #[arg(long, default_value = "smaze")]
        env: String,
        /// Comma-separated η values; defaults to 0.1, 1, 10.
        #[arg(long)]
        etas: Option<String>,
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterations-to-optimal on the two-arm chain, plain vs shaped, per λ.
    ToySweep {
        /// Comma-separated λ values; defaults to 0.1, 0.2, …, 1.0.
        #[arg(long)]
        lambdas: Option<String>,
        /// Potential used for the shaped run: a provenance name or a `state,phi` CSV.
        #[arg(long, default_value = "ab")]
        potential: String,
        #[command(flatten)]
        gcn: GcnArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a potential as a grid heatmap (plus its `state,phi` table).
    Heatmap {
        #[arg(long)]
        env: String,
        #[arg(long, default_value = "ab")]
        potential: String,
        #[command(flatten)]
        gcn: GcnArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spearman correlation and normalized max difference of two potentials.
    Compare {
        #[arg(long)]
        env: String,
        #[arg(long, default_value = "gcn")]
        a: String,
        #[arg(long, default_value = "ab")]
        b: String,
        #[command(flatten)]
        gcn: GcnArgs,
    },
    /// Per-state policy-gradient variance with and without the potential baseline.
    Gradvar {
        #[arg(long, default_value = "fourrooms")]
        env: String,
        #[arg(long, default_value = "ab")]
        potential: String,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        /// Plain actor-critic episodes before the policy is frozen.
        #[arg(long, default_value_t = 50)]
        warmup: usize,
        #[arg(long, default_value_t = 200)]
        rollouts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        gcn: GcnArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    /// none, gcn, ab, l2, const or zero.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// `0,1,2` or `0..10`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reset_graph: bool,
    #[arg(long)]
    retrain_every: Option<usize>,
    /// sampled or full.
    #[arg(long)]
    graph: Option<String>,
    /// plain or mixed.
    #[arg(long)]
    critic: Option<String>,
}

#[derive(Args)]
struct GcnArgs {
    /// Gradient steps when a GCN potential is trained on the full graph.
    #[arg(long, default_value_t = 20000)]
    iterations: usize,
    #[arg(long, default_value_t = 10.0)]
    eta: f64,
    #[arg(long = "gcn-seed", default_value_t = 0)]
    gcn_seed: u64,
}

impl GcnArgs {
    fn config(&self) -> GcnConfig {
        GcnConfig { eta: self.eta, seed: self.gcn_seed, ..GcnConfig::default() }
    }
}

impl RunArgs {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 11] = [
            ("env", self.env.clone()),
            ("potential", self.potential.clone()),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("eta", self.eta.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("seeds", self.seeds.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("retrain_every", self.retrain_every.map(|v| v.to_string())),
            ("graph", self.graph.clone()),
            ("critic", self.critic.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.reset_graph {
            cfg.reset_graph = true;
        }
        Ok(cfg)
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Config { field: key.into(), reason: format!("bad number {v:?}") }))
        .collect()
}

/// A provenance name computed on `mdp`, or a `state,phi` CSV file.
fn load_potential(mdp: &MdpSpec, arg: &str, gcn: &GcnArgs) -> Result<PotentialTable> {
    if let Ok(Some(p)) = parse_potential(arg) {
        return potential_for(mdp, p, &gcn.config(), gcn.iterations);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(Error::Config { field: "potential".into(), reason: format!("{arg:?} is neither a provenance nor a file") });
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let provenance = stem.split('_').find_map(|t| t.parse::<Provenance>().ok()).unwrap_or(Provenance::Gcn);
    PotentialTable::from_csv(&std::fs::read_to_string(path)?, provenance)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(args) => {
            let cfg = args.experiment()?;
            let report = run_suite(&cfg)?;
            for (seed, err) in &report.failures {
                eprintln!("seed {seed} failed: {err}");
            }
            if let Some(last) = report.aggregate.last() {
                let s = last.summary;
                println!("{}: cum_steps at episode {} = {:.1} ± {:.1} (n = {})", report.label, last.episode + 1, s.mean, s.std, s.n);
            }
            println!("wrote {}", report.dir.display());
            if report.traces.is_empty() {
                return Err(Error::Config { field: "seeds".into(), reason: "every seed failed".into() });
            }
        }
        Command::AlphaSweep { run, alphas } => {
            let cfg = run.experiment()?;
            let alphas = match alphas {
                Some(text) => parse_list("alphas", &text)?,
                None => ALPHA_GRID.to_vec(),
            };
            for (alpha, path, last) in alpha_sweep(&cfg, &alphas)? {
                println!("alpha {alpha:.1}: final mean cum_steps {last:.1} -> {}", path.display());
            }
        }
        Command::EtaSweep { env, etas, seeds, iterations, out } => {
            let etas = match etas {
                Some(text) => parse_list("etas", &text)?,
                None => ETA_GRID.to_vec(),
            };
            for p in eta_sweep(&env, &etas, &parse_seeds(&seeds)?, iterations, &out)? {
                let mean = p.energies.iter().sum::<f64>() / p.energies.len() as f64;
                let map = p.heatmap.map(|h| h.display().to_string()).unwrap_or_default();
                println!("eta {}: mean dirichlet energy {mean:.6e} {map}", p.eta);
            }
        }
        Command::ToySweep { lambdas, potential, gcn, out } => {
            let lambdas = match lambdas {
                Some(text) => parse_list("lambdas", &text)?,
                None => TOY_LAMBDAS.to_vec(),
            };
            let phi = load_potential(&build_two_arm_chain(), &potential, &gcn)?;
            let rows = run_toy_sweep(&lambdas, &phi)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&out, toy_csv(&rows))?;
            print!("{}", toy_csv(&rows));
        }
        Command::Heatmap { env, potential, gcn, out } => {
            let mdp = resolve_env(&env)?;
            let phi = load_potential(&mdp, &potential, &gcn)?;
            let text = format!("env={env}\npotential={potential}\neta={}\niterations={}\nseed={}\n", gcn.eta, gcn.iterations, gcn.gcn_seed);
            let tag = phi.provenance().as_str();
            let path = emit_heatmap(&phi, mdp.layout(), &env, tag, &text, &out)?;
            let table = out.join(format!("potential_{tag}_{:016x}.csv", config_hash(&text)));
            std::fs::write(&table, phi.to_csv())?;
            println!("{}\n{}", path.display(), table.display());
        }
        Command::Compare { env, a, b, gcn } => {
            let mdp = resolve_env(&env)?;
            let c = compare_potentials(&load_potential(&mdp, &a, &gcn)?, &load_potential(&mdp, &b, &gcn)?)?;
            println!("spearman {:.4}\nmax_abs_diff {:.4}", c.spearman, c.max_abs_diff);
        }
        Command::Gradvar { env, potential, alpha, warmup, rollouts, seed, gcn, out } => {
            let mdp = resolve_env(&env)?;
            let phi = load_potential(&mdp, &potential, &gcn)?;
            let cfg = RunConfig { potential: PotentialSource::Disabled, episodes: warmup, ..RunConfig::default() };
            let agent = run_algorithm1(&mdp, &cfg, seed)?.final_agent;
            let rows = gradient_variance(&mdp, &agent, &phi, alpha, rollouts, seed)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&out, gradvar_csv(&rows))?;
            let mean = |f: fn(&_) -> f64| rows.iter().map(f).sum::<f64>() / rows.len().max(1) as f64;
            println!("states {}", rows.len());
            println!("mean var, no baseline    {:.6e}", mean(|r| r.none));
            println!("mean var, (1-α)Φ baseline {:.6e}", mean(|r| r.potential));
            println!("mean var, critic baseline {:.6e}", mean(|r| r.critic));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
