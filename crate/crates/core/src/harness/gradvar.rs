//! Empirical per-state variance of the score-function gradient under three
//! baselines: none, the scaled potential `(1 − α)Φ(s)`, and the critic.
//! Descriptive only.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{lambda_returns, rollout, AgentState, RewardStream};
use crate::error::Result;
use crate::mdp::MdpSpec;
use crate::shaping::PotentialTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVariance {
    pub state: usize,
    pub samples: usize,
    pub none: f64,
    pub potential: f64,
    pub critic: f64,
}

#[derive(Default)]
struct Acc {
    n: usize,
    // per baseline, per action component: sum and sum of squares
    sums: Vec<[f64; 3]>,
    squares: Vec<[f64; 3]>,
}

/// Rolls out `rollouts` episodes of `agent`'s fixed policy and returns the
/// trace of the gradient covariance at every state visited at least twice.
pub fn gradient_variance(
    mdp: &MdpSpec,
    agent: &AgentState,
    phi: &PotentialTable,
    alpha: f64,
    rollouts: usize,
    seed: u64,
) -> Result<Vec<StateVariance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = mdp.num_actions();
    let tau = agent.config().temperature;
    let mut acc: Vec<Acc> = (0..mdp.num_states()).map(|_| Acc::default()).collect();
    for _ in 0..rollouts {
        let episode = rollout(mdp, agent, &mut rng)?;
        let returns = lambda_returns(&episode, agent.values(), 1.0, mdp.gamma(), RewardStream::Plain);
        let mut discount = 1.0;
        for (tr, g) in episode.iter().zip(returns) {
            let pi = agent.policy(tr.state);
            let baselines = [0.0, (1.0 - alpha) * phi.get(tr.state), agent.values()[tr.state]];
            let a = &mut acc[tr.state];
            if a.sums.is_empty() {
                a.sums = vec![[0.0; 3]; na];
                a.squares = vec![[0.0; 3]; na];
            }
            a.n += 1;
            for (k, &p) in pi.iter().enumerate() {
                let score = (if k == tr.action { 1.0 } else { 0.0 } - p) / tau;
                for (b, &base) in baselines.iter().enumerate() {
                    let x = discount * (g - base) * score;
                    a.sums[k][b] += x;
                    a.squares[k][b] += x * x;
                }
            }
            discount *= mdp.gamma();
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .filter(|(_, a)| a.n >= 2)
        .map(|(state, a)| {
            let n = a.n as f64;
            let var = |b: usize| -> f64 {
                (0..na).map(|k| (a.squares[k][b] - a.sums[k][b].powi(2) / n) / (n - 1.0)).sum::<f64>().max(0.0)
            };
            StateVariance { state, samples: a.n, none: var(0), potential: var(1), critic: var(2) }
        })
        .collect())
}

pub fn gradvar_csv(rows: &[StateVariance]) -> String {
    let mut out = String::from("state,samples,var_none,var_potential,var_critic\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.state, r.samples, r.none, r.potential, r.critic);
    }
    out
}
