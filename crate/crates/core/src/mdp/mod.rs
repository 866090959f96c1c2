//! Finite MDPs, the benchmark environments and a plain-text MDP file format.
//!
//! Rewards are split into a per-(state, action) part and a per-state
//! arrival part. A sampled transition `s -a-> s'` pays
//! `reward(s, a) + arrival(s')`; planning and inference use the expectation
//! over the successor distribution. Grid worlds put goal and trap rewards on
//! arrival so that "entering a trap" is what gets penalised, even under
//! action noise.

mod envs;
mod file;
mod grid;
pub mod planning;

pub use envs::{
    build_fourrooms, build_fourrooms_traps, build_smaze, build_two_arm_chain, by_name, fourrooms_with_noise,
    ACTION_NOISE, ENVIRONMENTS,
};
pub use file::{parse_mdp, write_mdp};
pub use grid::{Cell, GridAction, GridLayout};

use rand::Rng;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// Tolerance on transition row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: StateId,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct MdpSpec {
    name: String,
    num_states: usize,
    num_actions: usize,
    /// Dense kernel, index `(s * A + a) * S + s'`.
    transition: Vec<f64>,
    /// Sparse view of `transition`, one list per `(s, a)`.
    successors: Vec<Vec<(StateId, f64)>>,
    reward: Vec<f64>,
    arrival: Vec<f64>,
    expected_reward: Vec<f64>,
    gamma: f64,
    start: Vec<f64>,
    terminal: Vec<bool>,
    max_steps: usize,
    layout: Option<GridLayout>,
}

impl MdpSpec {
    /// Builds and validates an MDP. `transition` is indexed `(s * A + a) * S + s'`
    /// and `reward` is indexed `s * A + a`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        start: Vec<f64>,
        terminal: Vec<bool>,
        max_steps: usize,
    ) -> Result<Self> {
        let arrival = vec![0.0; num_states];
        Self::with_arrival(
            name, num_states, num_actions, transition, reward, arrival, gamma, start, terminal, max_steps,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_arrival(
        name: impl Into<String>,
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        arrival: Vec<f64>,
        gamma: f64,
        start: Vec<f64>,
        terminal: Vec<bool>,
        max_steps: usize,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidMdp(msg));
        if num_states == 0 || num_actions == 0 {
            return invalid("need at least one state and one action".into());
        }
        let sa = num_states * num_actions;
        if transition.len() != sa * num_states {
            return invalid(format!("transition has {} entries, expected {}", transition.len(), sa * num_states));
        }
        if reward.len() != sa {
            return invalid(format!("reward has {} entries, expected {sa}", reward.len()));
        }
        if arrival.len() != num_states || start.len() != num_states || terminal.len() != num_states {
            return invalid("per-state vectors must have num_states entries".into());
        }
        if !(0.0..1.0).contains(&gamma) {
            return invalid(format!("discount {gamma} outside [0, 1)"));
        }
        if transition.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return invalid("transition probability outside [0, 1]".into());
        }
        if reward.iter().chain(&arrival).any(|r| !r.is_finite()) {
            return invalid("non-finite reward".into());
        }
        for row in 0..sa {
            let sum: f64 = transition[row * num_states..(row + 1) * num_states].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        if start.iter().any(|p| !(0.0..=1.0).contains(p)) || (start.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return invalid("start distribution must sum to 1".into());
        }
        for s in (0..num_states).filter(|&s| terminal[s]) {
            for a in 0..num_actions {
                if transition[(s * num_actions + a) * num_states + s] != 1.0 {
                    return invalid(format!("terminal state {s} is not absorbing"));
                }
            }
        }
        let successors: Vec<Vec<(StateId, f64)>> = (0..sa)
            .map(|row| {
                transition[row * num_states..(row + 1) * num_states]
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(s2, &p)| (s2, p))
                    .collect()
            })
            .collect();
        // nothing is earned once the episode is over
        let expected_reward = (0..sa)
            .map(|row| {
                if terminal[row / num_actions] {
                    0.0
                } else {
                    reward[row] + successors[row].iter().map(|&(s2, p)| p * arrival[s2]).sum::<f64>()
                }
            })
            .collect();
        Ok(MdpSpec {
            name: name.into(),
            num_states,
            num_actions,
            transition,
            successors,
            reward,
            arrival,
            expected_reward,
            gamma,
            start,
            terminal,
            max_steps,
            layout: None,
        })
    }

    pub(crate) fn with_layout(mut self, layout: GridLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn start_distribution(&self) -> &[f64] {
        &self.start
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states).filter(|&s| self.terminal[s])
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    pub fn prob(&self, s: StateId, a: ActionId, s2: StateId) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + s2]
    }

    /// Full transition row `P(. | s, a)`.
    pub fn row(&self, s: StateId, a: ActionId) -> &[f64] {
        let i = s * self.num_actions + a;
        &self.transition[i * self.num_states..(i + 1) * self.num_states]
    }

    /// Nonzero entries of `P(. | s, a)`.
    pub fn successors(&self, s: StateId, a: ActionId) -> &[(StateId, f64)] {
        &self.successors[s * self.num_actions + a]
    }

    /// Reward paid for the specific transition `s -a-> s2`.
    pub fn transition_reward(&self, s: StateId, a: ActionId, s2: StateId) -> f64 {
        self.reward[s * self.num_actions + a] + self.arrival[s2]
    }

    /// `r(s, a)`: expected reward over successors.
    pub fn reward(&self, s: StateId, a: ActionId) -> f64 {
        self.expected_reward[s * self.num_actions + a]
    }

    pub fn arrival_reward(&self, s: StateId) -> f64 {
        self.arrival[s]
    }

    /// The per-(state, action) part of the reward, without arrival bonuses.
    pub fn action_reward(&self, s: StateId, a: ActionId) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// Copy in which every terminal state moves to one extra absorbing exit
    /// state (the last index), so a terminal is occupied for exactly one
    /// step. Returns a plain clone when there are no terminals.
    pub fn with_exit_state(&self) -> Result<MdpSpec> {
        if !self.terminal.iter().any(|&t| t) {
            return Ok(self.clone());
        }
        let (n, na) = (self.num_states, self.num_actions);
        let m = n + 1;
        let mut transition = vec![0.0; m * na * m];
        let mut reward = vec![0.0; m * na];
        for s in 0..n {
            for a in 0..na {
                let row = &mut transition[(s * na + a) * m..(s * na + a + 1) * m];
                if self.terminal[s] {
                    row[n] = 1.0;
                } else {
                    row[..n].copy_from_slice(self.row(s, a));
                    reward[s * na + a] = self.action_reward(s, a);
                }
            }
        }
        for a in 0..na {
            transition[(n * na + a) * m + n] = 1.0;
        }
        let mut arrival = self.arrival.clone();
        arrival.push(0.0);
        let mut start = self.start.clone();
        start.push(0.0);
        let mut terminal = vec![false; m];
        terminal[n] = true;
        let mut out = MdpSpec::with_arrival(
            format!("{}+exit", self.name),
            m,
            na,
            transition,
            reward,
            arrival,
            self.gamma,
            start,
            terminal,
            self.max_steps,
        )?;
        out.layout = None;
        Ok(out)
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        sample_categorical(&self.start, rng)
    }

    /// Samples one transition. `done` is set when the successor is terminal;
    /// the caller is responsible for the step budget.
    pub fn step<R: Rng + ?Sized>(&self, state: StateId, action: ActionId, rng: &mut R) -> Result<Transition> {
        if state >= self.num_states {
            return Err(Error::OutOfRange { what: "state", value: state, limit: self.num_states });
        }
        if action >= self.num_actions {
            return Err(Error::OutOfRange { what: "action", value: action, limit: self.num_actions });
        }
        if self.terminal[state] {
            return Err(Error::TerminalState(state));
        }
        let succ = self.successors(state, action);
        let next_state = if succ.len() == 1 {
            succ[0].0
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = succ[succ.len() - 1].0;
            for &(s2, p) in succ {
                acc += p;
                if u < acc {
                    pick = s2;
                    break;
                }
            }
            pick
        };
        Ok(Transition {
            state,
            action,
            reward: self.transition_reward(state, action, next_state),
            next_state,
            done: self.terminal[next_state],
        })
    }

    /// States reachable from `from` through positive-probability transitions.
    pub fn reachable_from(&self, from: StateId) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(s) = stack.pop() {
            for a in 0..self.num_actions {
                for &(s2, _) in self.successors(s, a) {
                    if !seen[s2] {
                        seen[s2] = true;
                        stack.push(s2);
                    }
                }
            }
        }
        seen
    }

    /// Random MDP with dense-ish random transition rows and rewards in [-1, 1].
    /// Used by property tests and examples.
    pub fn random<R: Rng + ?Sized>(num_states: usize, num_actions: usize, gamma: f64, rng: &mut R) -> Result<Self> {
        let mut transition = vec![0.0; num_states * num_actions * num_states];
        for row in transition.chunks_mut(num_states) {
            let mut total = 0.0;
            for p in row.iter_mut() {
                // sparsify roughly a third of the entries
                if rng.gen_bool(0.65) {
                    *p = rng.gen::<f64>();
                    total += *p;
                }
            }
            if total == 0.0 {
                row[rng.gen_range(0..num_states)] = 1.0;
            } else {
                row.iter_mut().for_each(|p| *p /= total);
                let fix: f64 = 1.0 - row.iter().sum::<f64>();
                let j = row.iter().position(|&p| p > 0.0).unwrap_or(0);
                row[j] += fix;
            }
        }
        let reward = (0..num_states * num_actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut start: Vec<f64> = (0..num_states).map(|_| rng.gen::<f64>() + 0.05).collect();
        let z: f64 = start.iter().sum();
        start.iter_mut().for_each(|p| *p /= z);
        MdpSpec::new("random", num_states, num_actions, transition, reward, gamma, start, vec![false; num_states], 100)
    }
}

/// Draws an index from unnormalised nonnegative weights.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
