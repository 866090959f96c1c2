//! Exact forward-backward message passing on the control-as-inference
//! graphical model, and the whole-trajectory optimality potential built from
//! the product of the two message families.
//!
//! With `f = σ`, a uniform action prior `p(a)` and horizon `T`:
//!
//! ```text
//! β_{T-1}(s,a) = f(r(s,a))
//! β_t(s,a)     = f(r(s,a)) Σ_{s'} P(s'|s,a) Σ_{a'} p(a') β_{t+1}(s',a')
//! α_0(s,a)     = p₀(s) p(a) E_{s₀,a₀}[f(r(s₀,a₀))]
//! α_t(s,a)     = p(a) Σ_{s⁻,a⁻} P(s|s⁻,a⁻) f(r(s⁻,a⁻)) α_{t-1}(s⁻,a⁻)
//! ```
//!
//! Each slice is normalised to sum to one and the log of the normaliser is
//! kept, so unnormalised messages can be recovered exactly.

use crate::error::{Error, Result};
use crate::gcn::sigmoid;
use crate::mdp::{ActionId, MdpSpec, StateId};
use crate::shaping::{PotentialTable, Provenance};

/// `p(O = 1 | s, a) = σ(r(s, a))` and a uniform action prior. Arrival
/// rewards count as evidence at the state they are paid on, the same place
/// the trajectory graph records them, so `r(s, a)` here is the action
/// reward plus the arrival reward of `s`.
#[derive(Debug, Clone)]
pub struct OptimalityModel {
    num_actions: usize,
    p_opt: Vec<f64>,
    action_prior: f64,
}

impl OptimalityModel {
    pub fn from_mdp(mdp: &MdpSpec) -> Self {
        let na = mdp.num_actions();
        let p_opt = (0..mdp.num_states() * na)
            .map(|i| sigmoid(mdp.action_reward(i / na, i % na) + mdp.arrival_reward(i / na)))
            .collect();
        OptimalityModel { num_actions: na, p_opt, action_prior: 1.0 / na as f64 }
    }

    pub fn p_opt(&self, s: StateId, a: ActionId) -> f64 {
        self.p_opt[s * self.num_actions + a]
    }

    pub fn action_prior(&self) -> f64 {
        self.action_prior
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Normalised message slices over `(s, a)`, one per time index.
#[derive(Debug, Clone)]
pub struct MessageTable {
    direction: Direction,
    num_states: usize,
    num_actions: usize,
    slices: Vec<Vec<f64>>,
    log_norms: Vec<f64>,
    pub converged: bool,
}

impl MessageTable {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn horizon(&self) -> usize {
        self.slices.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Normalised slice at time `t`, indexed `s * A + a`.
    pub fn slice(&self, t: usize) -> &[f64] {
        &self.slices[t]
    }

    pub fn get(&self, t: usize, s: StateId, a: ActionId) -> f64 {
        self.slices[t][s * self.num_actions + a]
    }

    /// Log of the normaliser applied to slice `t`.
    pub fn log_norm(&self, t: usize) -> f64 {
        self.log_norms[t]
    }

    /// Log of the factor that turns slice `t` back into the raw recursion value.
    pub fn log_scale(&self, t: usize) -> f64 {
        match self.direction {
            Direction::Forward => self.log_norms[..=t].iter().sum(),
            Direction::Backward => self.log_norms[t..].iter().sum(),
        }
    }

    /// Raw (unnormalised) message at `(t, s, a)`.
    pub fn unnormalized(&self, t: usize, s: StateId, a: ActionId) -> f64 {
        self.get(t, s, a) * self.log_scale(t).exp()
    }

    /// Action-marginalised slice `Σ_a m_t(s, a)`.
    pub fn state_marginal(&self, t: usize) -> Vec<f64> {
        self.slices[t].chunks(self.num_actions).map(|c| c.iter().sum()).collect()
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let z: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= z);
    z
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    Ok(())
}

/// One backward step: `f(r(s,a)) Σ_{s'} P(s'|s,a) Σ_{a'} p(a') next(s',a')`.
fn backward_step(mdp: &MdpSpec, om: &OptimalityModel, next: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    let per_state: Vec<f64> = next.chunks(na).map(|c| om.action_prior * c.iter().sum::<f64>()).collect();
    (0..mdp.num_states() * na)
        .map(|i| {
            let (s, a) = (i / na, i % na);
            let future: f64 = mdp.successors(s, a).iter().map(|&(s2, p)| p * per_state[s2]).sum();
            om.p_opt[i] * future
        })
        .collect()
}

/// One forward step: `p(a) Σ_{s⁻,a⁻} P(s|s⁻,a⁻) f(r(s⁻,a⁻)) prev(s⁻,a⁻)`.
fn forward_step(mdp: &MdpSpec, om: &OptimalityModel, prev: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    let mut arrive = vec![0.0; mdp.num_states()];
    for (i, &m) in prev.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let w = m * om.p_opt[i];
        for &(s2, p) in mdp.successors(i / na, i % na) {
            arrive[s2] += p * w;
        }
    }
    arrive.iter().flat_map(|&x| std::iter::repeat(om.action_prior * x).take(na)).collect()
}

pub fn backward_messages(mdp: &MdpSpec, om: &OptimalityModel, horizon: usize) -> Result<MessageTable> {
    check_horizon(horizon)?;
    let mut slices = vec![Vec::new(); horizon];
    let mut log_norms = vec![0.0; horizon];
    let mut current = om.p_opt.clone();
    for t in (0..horizon).rev() {
        if t + 1 < horizon {
            current = backward_step(mdp, om, &slices[t + 1]);
        }
        log_norms[t] = normalize(&mut current).ln();
        slices[t] = std::mem::take(&mut current);
    }
    Ok(MessageTable {
        direction: Direction::Backward,
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
        slices,
        log_norms,
        converged: false,
    })
}

pub fn forward_messages(mdp: &MdpSpec, om: &OptimalityModel, horizon: usize) -> Result<MessageTable> {
    check_horizon(horizon)?;
    let na = mdp.num_actions();
    let start = mdp.start_distribution();
    let expected_f: f64 = (0..mdp.num_states() * na).map(|i| start[i / na] * om.action_prior * om.p_opt[i]).sum();
    let mut current: Vec<f64> = (0..mdp.num_states() * na).map(|i| start[i / na] * om.action_prior * expected_f).collect();
    let mut slices = Vec::<Vec<f64>>::with_capacity(horizon);
    let mut log_norms = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if t > 0 {
            current = forward_step(mdp, om, &slices[t - 1]);
        }
        log_norms.push(normalize(&mut current).ln());
        slices.push(std::mem::take(&mut current));
    }
    Ok(MessageTable {
        direction: Direction::Forward,
        num_states: mdp.num_states(),
        num_actions: na,
        slices,
        log_norms,
        converged: false,
    })
}

/// How time-indexed messages are collapsed into one potential per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Collapse {
    /// Mean over `t` of the likelihood ratio at each time slot.
    #[default]
    TimeAverage,
    /// Likelihood ratio of the stationary points of the normalised recursions.
    FixedPoint,
}

/// State marginals of the uninformed process (uniform actions, no evidence),
/// in the same table layout as the forward messages.
pub fn prior_messages(mdp: &MdpSpec, om: &OptimalityModel, horizon: usize) -> Result<MessageTable> {
    let flat = OptimalityModel { num_actions: om.num_actions, p_opt: vec![1.0; om.p_opt.len()], action_prior: om.action_prior };
    forward_messages(mdp, &flat, horizon)
}

fn check_shapes(tables: [&MessageTable; 3]) -> Result<()> {
    let [a, b, c] = tables;
    for t in [b, c] {
        if t.num_states != a.num_states || t.num_actions != a.num_actions {
            return Err(Error::DimensionMismatch {
                expected: a.num_states * a.num_actions,
                actual: t.num_states * t.num_actions,
            });
        }
        if t.horizon() != a.horizon() {
            return Err(Error::DimensionMismatch { expected: a.horizon(), actual: t.horizon() });
        }
    }
    Ok(())
}

/// Potential from message tables. At every `t` the actions are summed out of
/// `α_t β_t`, giving the posterior `p(S_t = s | O)` once normalised; dividing
/// by the uninformed marginal `p(S_t = s)` turns it into the likelihood ratio
/// `p(O | S_t = s) / p(O)`. Slots the prior cannot reach are skipped, the
/// ratios are averaged over the remaining slots and the result is scaled so
/// its maximum is one.
pub fn potential_from_messages(alpha: &MessageTable, beta: &MessageTable, prior: &MessageTable) -> Result<PotentialTable> {
    check_shapes([alpha, beta, prior])?;
    let n = alpha.num_states;
    let na = alpha.num_actions;
    let mut acc = vec![0.0; n];
    let mut count = vec![0usize; n];
    for t in 0..alpha.horizon() {
        let (a, b) = (alpha.slice(t), beta.slice(t));
        let mut post: Vec<f64> = (0..n).map(|s| (0..na).map(|k| a[s * na + k] * b[s * na + k]).sum()).collect();
        let z: f64 = post.iter().sum();
        if !(z > 0.0) {
            continue;
        }
        post.iter_mut().for_each(|x| *x /= z);
        for (s, p) in prior.state_marginal(t).into_iter().enumerate() {
            if p > f64::MIN_POSITIVE {
                acc[s] += post[s] / p;
                count[s] += 1;
            }
        }
    }
    let ratio: Vec<f64> = acc.iter().zip(&count).map(|(&a, &c)| if c > 0 { a / c as f64 } else { 0.0 }).collect();
    if ratio.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("message likelihood ratio"));
    }
    let m = ratio.iter().copied().fold(0.0, f64::max);
    let values = if m > 0.0 { ratio.into_iter().map(|v| v / m).collect() } else { ratio };
    PotentialTable::new(values, Provenance::AlphaBeta)
}

fn iterate_to_fixed_point(
    mut table: MessageTable,
    step: &dyn Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> MessageTable {
    let mut current = table.slices.pop().expect("one slice");
    let mut log_norm = table.log_norms[0];
    for _ in 0..max_iter {
        let mut next = step(&current);
        log_norm = normalize(&mut next).ln();
        let diff = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        current = next;
        if diff < tol {
            table.converged = true;
            break;
        }
    }
    table.slices = vec![current];
    table.log_norms = vec![log_norm];
    table
}

/// Iterates the normalised forward, backward and prior recursions until
/// successive slices differ by less than `tol` in sup-norm. Each result is
/// a one-slice table.
pub fn fixed_point_messages(
    mdp: &MdpSpec,
    om: &OptimalityModel,
    tol: f64,
    max_iter: usize,
) -> Result<[MessageTable; 3]> {
    let flat = OptimalityModel { num_actions: om.num_actions, p_opt: vec![1.0; om.p_opt.len()], action_prior: om.action_prior };
    let alpha = iterate_to_fixed_point(forward_messages(mdp, om, 1)?, &|prev| forward_step(mdp, om, prev), tol, max_iter);
    let beta = iterate_to_fixed_point(backward_messages(mdp, om, 1)?, &|next| backward_step(mdp, om, next), tol, max_iter);
    let prior =
        iterate_to_fixed_point(forward_messages(mdp, &flat, 1)?, &|prev| forward_step(mdp, &flat, prev), tol, max_iter);
    Ok([alpha, beta, prior])
}

/// `Φ_αβ` for an MDP, using its step budget as the horizon. Terminal states
/// are routed to an exit state first so their arrival reward is observed
/// once rather than on every remaining step.
pub fn alpha_beta_potential(mdp: &MdpSpec, collapse: Collapse) -> Result<PotentialTable> {
    let n = mdp.num_states();
    let episodic = mdp.with_exit_state()?;
    let full = potential_on(&episodic, collapse)?.to_vec();
    let m = full[..n].iter().copied().fold(0.0, f64::max);
    let values = full[..n].iter().map(|v| if m > 0.0 { v / m } else { *v }).collect();
    PotentialTable::new(values, Provenance::AlphaBeta)
}

fn potential_on(mdp: &MdpSpec, collapse: Collapse) -> Result<PotentialTable> {
    let om = OptimalityModel::from_mdp(mdp);
    match collapse {
        Collapse::TimeAverage => {
            let horizon = mdp.max_steps().max(1);
            let alpha = forward_messages(mdp, &om, horizon)?;
            let beta = backward_messages(mdp, &om, horizon)?;
            let prior = prior_messages(mdp, &om, horizon)?;
            potential_from_messages(&alpha, &beta, &prior)
        }
        Collapse::FixedPoint => {
            let [alpha, beta, prior] = fixed_point_messages(mdp, &om, 1e-10, 1_000_000)?;
            potential_from_messages(&alpha, &beta, &prior)
        }
    }
}
