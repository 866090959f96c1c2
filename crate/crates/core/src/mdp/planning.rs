//! Exact dynamic programming on small MDPs. Terminal states are worth zero.

use super::{ActionId, MdpSpec, StateId};

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Indexed `s * A + a`.
    pub q_values: Vec<f64>,
    num_actions: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl Solution {
    pub fn q(&self, s: StateId, a: ActionId) -> f64 {
        self.q_values[s * self.num_actions + a]
    }

    pub fn q_row(&self, s: StateId) -> &[f64] {
        &self.q_values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Actions within `tol` of the row maximum.
    pub fn greedy_actions(&self, s: StateId, tol: f64) -> Vec<ActionId> {
        greedy_set(self.q_row(s), tol)
    }
}

pub fn greedy_set(row: &[f64], tol: f64) -> Vec<ActionId> {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..row.len()).filter(|&a| row[a] >= best - tol).collect()
}

fn backup(mdp: &MdpSpec, rewards: &[f64], values: &[f64], s: StateId, a: ActionId) -> f64 {
    let na = mdp.num_actions();
    let future: f64 = mdp
        .successors(s, a)
        .iter()
        .map(|&(s2, p)| if mdp.is_terminal(s2) { 0.0 } else { p * values[s2] })
        .sum();
    rewards[s * na + a] + mdp.gamma() * future
}

/// Value iteration on expected rewards, or on `rewards` (indexed `s * A + a`)
/// when given. Stops when the sup-norm change drops below `tol`.
pub fn value_iteration(mdp: &MdpSpec, rewards: Option<&[f64]>, tol: f64, max_iter: usize) -> Solution {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let own: Vec<f64>;
    let rewards = match rewards {
        Some(r) => r,
        None => {
            own = (0..n * na).map(|i| mdp.reward(i / na, i % na)).collect();
            &own
        }
    };
    let mut values = vec![0.0; n];
    let mut q_values = vec![0.0; n * na];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut delta: f64 = 0.0;
        let mut next = vec![0.0; n];
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let q = backup(mdp, rewards, &values, s, a);
                q_values[s * na + a] = q;
                best = best.max(q);
            }
            next[s] = best;
            delta = delta.max((best - values[s]).abs());
        }
        values = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    for s in 0..n {
        for a in 0..na {
            q_values[s * na + a] = if mdp.is_terminal(s) { 0.0 } else { backup(mdp, rewards, &values, s, a) };
        }
    }
    Solution { values, q_values, num_actions: na, iterations, converged }
}

/// Iterative policy evaluation; `policy` is indexed `s * A + a`.
pub fn evaluate_policy(mdp: &MdpSpec, policy: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let rewards: Vec<f64> = (0..n * na).map(|i| mdp.reward(i / na, i % na)).collect();
    let mut values = vec![0.0; n];
    for _ in 0..max_iter {
        let mut delta: f64 = 0.0;
        let mut next = vec![0.0; n];
        for s in (0..n).filter(|&s| !mdp.is_terminal(s)) {
            next[s] = (0..na).map(|a| policy[s * na + a] * backup(mdp, &rewards, &values, s, a)).sum();
            delta = delta.max((next[s] - values[s]).abs());
        }
        values = next;
        if delta < tol {
            break;
        }
    }
    values
}
