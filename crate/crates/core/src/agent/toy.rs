//! Reward-horizon experiment on a deterministic two-arm chain: both first
//! actions are rolled out and updated every iteration, so exploration plays
//! no part and only the speed of credit assignment is measured.

use crate::error::{Error, Result};
use crate::mdp::planning::value_iteration;
use crate::mdp::{ActionId, MdpSpec, StateId, Transition};
use crate::shaping::PotentialTable;

use super::{lambda_returns, RewardStream};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    /// Consecutive greedy-optimal iterations required to call it converged.
    pub streak: usize,
    pub max_iterations: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { lambda: 0.9, learning_rate: 0.1, streak: 10, max_iterations: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyOutcome {
    /// First iteration (1-based) of the converged streak; `None` if censored.
    pub iterations: Option<usize>,
    pub optimal_action: ActionId,
}

/// Deterministic episode from the start state: `first` then action 0.
fn arm_rollout(mdp: &MdpSpec, start: StateId, first: ActionId) -> Result<Vec<Transition>> {
    let mut out = Vec::new();
    let mut s = start;
    let mut a = first;
    for t in 0..mdp.max_steps() {
        let next = match mdp.successors(s, a) {
            [(s2, _)] => *s2,
            _ => return Err(Error::InvalidMdp(format!("transition from state {s} is not deterministic"))),
        };
        let done = mdp.is_terminal(next) || t + 1 == mdp.max_steps();
        out.push(Transition { state: s, action: a, reward: mdp.transition_reward(s, a, next), next_state: next, done });
        if done {
            break;
        }
        s = next;
        a = 0;
    }
    Ok(out)
}

/// Iterations until the greedy first action matches the optimal one for
/// `cfg.streak` consecutive iterations. Each iteration rolls out every first
/// action, computes λ-returns on the plain (or `phi`-shaped) rewards, then
/// moves `Q(start, a)` and the state values along each arm toward them.
pub fn toy_chain_iterations(mdp: &MdpSpec, phi: Option<&PotentialTable>, cfg: &ToyConfig) -> Result<ToyOutcome> {
    if !(0.0..=1.0).contains(&cfg.lambda) {
        return Err(Error::config("lambda", format!("{} outside [0, 1]", cfg.lambda)));
    }
    let start = match mdp.start_distribution().iter().position(|&p| p == 1.0) {
        Some(s) => s,
        None => return Err(Error::InvalidMdp("toy chain needs a single start state".into())),
    };
    let optimal = value_iteration(mdp, None, 1e-12, 100_000);
    let optimal_set = optimal.greedy_actions(start, 1e-12);
    if optimal_set.len() != 1 {
        return Err(Error::InvalidMdp("optimal first action is not unique".into()));
    }
    let optimal_action = optimal_set[0];
    let arms: Vec<Vec<Transition>> =
        (0..mdp.num_actions()).map(|a| arm_rollout(mdp, start, a)).collect::<Result<_>>()?;
    let stream = match phi {
        Some(p) => RewardStream::Shaped(p),
        None => RewardStream::Plain,
    };
    let mut q = vec![0.0; mdp.num_actions()];
    let mut v = vec![0.0; mdp.num_states()];
    let mut streak = 0;
    for iteration in 1..=cfg.max_iterations {
        // targets first, against the values from the previous iteration
        let targets: Vec<Vec<f64>> =
            arms.iter().map(|arm| lambda_returns(arm, &v, cfg.lambda, mdp.gamma(), stream)).collect();
        for (a, (arm, g)) in arms.iter().zip(&targets).enumerate() {
            q[a] += cfg.learning_rate * (g[0] - q[a]);
            for (tr, &target) in arm.iter().zip(g).skip(1) {
                v[tr.state] += cfg.learning_rate * (target - v[tr.state]);
            }
        }
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unique_best = q.iter().filter(|&&x| x == best).count() == 1;
        if unique_best && q[optimal_action] == best {
            streak += 1;
            if streak == cfg.streak {
                return Ok(ToyOutcome { iterations: Some(iteration + 1 - cfg.streak), optimal_action });
            }
        } else {
            streak = 0;
        }
    }
    Ok(ToyOutcome { iterations: None, optimal_action })
}
