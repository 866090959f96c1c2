//! Potential tables and the shaping algebra `F(s, s') = γΦ(s') − Φ(s)`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mdp::{Cell, GridLayout, MdpSpec, StateId, Transition};

/// Where a potential came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Gcn,
    AlphaBeta,
    L2,
    Constant,
    Zero,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Gcn => "gcn",
            Provenance::AlphaBeta => "ab",
            Provenance::L2 => "l2",
            Provenance::Constant => "const",
            Provenance::Zero => "zero",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Provenance::Gcn),
            "ab" | "alpha-beta" => Ok(Provenance::AlphaBeta),
            "l2" => Ok(Provenance::L2),
            "const" | "constant" => Ok(Provenance::Constant),
            "zero" => Ok(Provenance::Zero),
            other => Err(Error::config("potential", format!("unknown provenance {other:?}"))),
        }
    }
}

/// A scalar potential per state. States without a value fall back to
/// `default_phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    values: Vec<Option<f64>>,
    default_phi: f64,
    provenance: Provenance,
}

impl PotentialTable {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        Self::partial(values.into_iter().map(Some).collect(), 0.0, provenance)
    }

    pub fn partial(values: Vec<Option<f64>>, default_phi: f64, provenance: Provenance) -> Result<Self> {
        if values.iter().flatten().chain([&default_phi]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential table"));
        }
        Ok(PotentialTable { values, default_phi, provenance })
    }

    pub fn zero(num_states: usize) -> Self {
        PotentialTable { values: vec![Some(0.0); num_states], default_phi: 0.0, provenance: Provenance::Zero }
    }

    pub fn constant(num_states: usize, c: f64) -> Self {
        PotentialTable { values: vec![Some(c); num_states], default_phi: 0.0, provenance: Provenance::Constant }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn default_phi(&self) -> f64 {
        self.default_phi
    }

    pub fn get(&self, s: StateId) -> f64 {
        self.values.get(s).copied().flatten().unwrap_or(self.default_phi)
    }

    pub fn is_known(&self, s: StateId) -> bool {
        matches!(self.values.get(s), Some(Some(_)))
    }

    /// Values for every state, defaults filled in.
    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|s| self.get(s)).collect()
    }

    /// Rescales so the maximum absolute value is 1 (no-op on an all-zero table).
    pub fn max_normalized(&self) -> Vec<f64> {
        let v = self.to_vec();
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            v
        } else {
            v.into_iter().map(|x| x / m).collect()
        }
    }

    /// `state,phi` CSV, one row per state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,phi\n");
        for s in 0..self.len() {
            let _ = writeln!(out, "{s},{}", self.get(s));
        }
        out
    }

    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "state,phi")) => {}
            _ => return Err(Error::parse(1, "expected header `state,phi`")),
        }
        let mut values = Vec::new();
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let (s, phi) = line.split_once(',').ok_or_else(|| Error::parse(i + 1, "expected two columns"))?;
            let s: usize = s.trim().parse().map_err(|_| Error::parse(i + 1, "bad state id"))?;
            let phi: f64 = phi.trim().parse().map_err(|_| Error::parse(i + 1, "bad phi"))?;
            if s >= values.len() {
                values.resize(s + 1, None);
            }
            values[s] = Some(phi);
        }
        Self::partial(values, 0.0, provenance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingConfig {
    /// Weight of the plain return in the mixed target.
    pub alpha: f64,
    pub provenance: Option<Provenance>,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        ShapingConfig { alpha: 0.6, provenance: Some(Provenance::Gcn) }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// `γΦ(s') − Φ(s)`, with `Φ(s') = 0` when the transition ends the episode.
pub fn shaping_bonus(phi: &PotentialTable, s: StateId, s_next: StateId, done: bool, gamma: f64) -> f64 {
    let next = if done { 0.0 } else { phi.get(s_next) };
    gamma * next - phi.get(s)
}

/// `α g + (1 − α) g_Φ`.
pub fn mix_returns(g_plain: f64, g_shaped: f64, alpha: f64) -> f64 {
    alpha * g_plain + (1.0 - alpha) * g_shaped
}

/// `1 − ‖pos(s) − pos(goal)‖ / max distance`, using the nearest goal.
pub fn l2_potential(layout: &GridLayout) -> PotentialTable {
    let goals: Vec<(f64, f64)> = layout
        .states_of_kind(Cell::Goal)
        .into_iter()
        .map(|g| {
            let (x, y) = layout.position(g);
            (x as f64, y as f64)
        })
        .collect();
    let dist: Vec<f64> = (0..layout.num_states())
        .map(|s| {
            let (x, y) = layout.position(s);
            goals.iter().map(|&(gx, gy)| (x as f64 - gx).hypot(y as f64 - gy)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let d_max = dist.iter().copied().fold(0.0, f64::max);
    let values = dist.iter().map(|d| Some(if d_max > 0.0 { 1.0 - d / d_max } else { 1.0 })).collect();
    PotentialTable { values, default_phi: 0.0, provenance: Provenance::L2 }
}

pub fn l2_potential_for(mdp: &MdpSpec) -> Result<PotentialTable> {
    mdp.layout().map(l2_potential).ok_or_else(|| Error::NotAGrid(mdp.name().to_string()))
}

/// Expected shaped reward `r(s,a) + Σ P(s'|s,a) γΦ(s') − Φ(s)`, indexed
/// `s * A + a`. Terminal successors contribute `Φ = 0`.
pub fn shaped_rewards(mdp: &MdpSpec, phi: &PotentialTable) -> Vec<f64> {
    let na = mdp.num_actions();
    (0..mdp.num_states() * na)
        .map(|i| {
            let (s, a) = (i / na, i % na);
            let next: f64 = mdp
                .successors(s, a)
                .iter()
                .map(|&(s2, p)| if mdp.is_terminal(s2) { 0.0 } else { p * phi.get(s2) })
                .sum();
            mdp.reward(s, a) + mdp.gamma() * next - phi.get(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeCheck {
    pub shaped_return: f64,
    pub plain_return: f64,
    /// `shaped − (plain − Φ(s₀))`.
    pub residual: f64,
}

/// Checks `Σ γᵗ(r_t + F_t) = Σ γᵗ r_t − Φ(s₀)` on a complete episode.
pub fn telescoping_identity_check(phi: &PotentialTable, trajectory: &[Transition], gamma: f64) -> TelescopeCheck {
    let mut plain = 0.0;
    let mut shaped = 0.0;
    let mut discount = 1.0;
    let last = trajectory.len().saturating_sub(1);
    for (t, tr) in trajectory.iter().enumerate() {
        let done = tr.done || t == last;
        plain += discount * tr.reward;
        shaped += discount * (tr.reward + shaping_bonus(phi, tr.state, tr.next_state, done, gamma));
        discount *= gamma;
    }
    let phi0 = trajectory.first().map_or(0.0, |t| phi.get(t.state));
    TelescopeCheck { shaped_return: shaped, plain_return: plain, residual: shaped - (plain - phi0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::build_fourrooms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bonus_examples() {
        let c = PotentialTable::constant(3, 0.4);
        assert!((shaping_bonus(&c, 0, 1, false, 0.9) - (0.9 - 1.0) * 0.4).abs() < 1e-15);
        assert_eq!(shaping_bonus(&PotentialTable::zero(3), 0, 2, false, 0.99), 0.0);
        let phi = PotentialTable::new(vec![0.2, 0.8], Provenance::Constant).unwrap();
        assert!((shaping_bonus(&phi, 0, 1, false, 0.99) - 0.592).abs() < 1e-12);
        assert!((shaping_bonus(&phi, 0, 1, true, 0.99) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn mixing() {
        assert_eq!(mix_returns(3.0, 7.0, 1.0), 3.0);
        assert_eq!(mix_returns(3.0, 7.0, 0.0), 7.0);
        assert!((mix_returns(10.0, 5.0, 0.6) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn l2_on_fourrooms() {
        let mdp = build_fourrooms();
        let layout = mdp.layout().unwrap();
        let phi = l2_potential(layout);
        let goal = layout.states_of_kind(Cell::Goal)[0];
        assert_eq!(phi.get(goal), 1.0);
        // (1, 1) is the farthest corner from the goal at (11, 11)
        assert_eq!(phi.get(layout.state_at(1, 1).unwrap()), 0.0);
        let mid = layout.state_at(6, 3).unwrap();
        let expected = 1.0 - (25.0f64 + 64.0).sqrt() / 200f64.sqrt();
        assert!((phi.get(mid) - expected).abs() < 1e-12);
        assert!(phi.to_vec().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn l2_rejects_non_grid() {
        assert!(matches!(l2_potential_for(&crate::mdp::build_two_arm_chain()), Err(Error::NotAGrid(_))));
    }

    fn random_episode(rng: &mut ChaCha8Rng, len: usize, n: usize) -> Vec<Transition> {
        let mut s = rng.gen_range(0..n);
        (0..len)
            .map(|t| {
                let s2 = rng.gen_range(0..n);
                let tr = Transition { state: s, action: 0, reward: rng.gen_range(-1.0..1.0), next_state: s2, done: t + 1 == len };
                s = s2;
                tr
            })
            .collect()
    }

    #[test]
    fn telescoping_zero_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ep = random_episode(&mut rng, 10, 5);
        let c = telescoping_identity_check(&PotentialTable::zero(5), &ep, 0.9);
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.shaped_return, c.plain_return);
    }

    #[test]
    fn telescoping_random_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let phi = PotentialTable::new((0..6).map(|_| rng.gen_range(-2.0..2.0)).collect(), Provenance::Constant).unwrap();
            let ep = random_episode(&mut rng, 20, 6);
            let c = telescoping_identity_check(&phi, &ep, 0.97);
            assert!(c.residual.abs() < 1e-12, "{}", c.residual);
        }
    }

    #[test]
    fn telescoping_single_step() {
        let phi = PotentialTable::new(vec![0.3, 0.9], Provenance::Constant).unwrap();
        let ep = [Transition { state: 0, action: 0, reward: 2.0, next_state: 1, done: true }];
        let c = telescoping_identity_check(&phi, &ep, 0.99);
        assert!((c.shaped_return - (2.0 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_and_defaults() {
        let phi = PotentialTable::partial(vec![Some(0.25), None, Some(0.75)], 0.5, Provenance::Gcn).unwrap();
        assert_eq!(phi.get(1), 0.5);
        assert_eq!(phi.get(99), 0.5);
        let back = PotentialTable::from_csv(&phi.to_csv(), Provenance::Gcn).unwrap();
        assert_eq!(back.to_vec(), phi.to_vec());
        assert!(PotentialTable::from_csv("s,p\n", Provenance::Gcn).is_err());
        assert!(PotentialTable::new(vec![f64::NAN], Provenance::Zero).is_err());
    }

    #[test]
    fn provenance_names() {
        for p in [Provenance::Gcn, Provenance::AlphaBeta, Provenance::L2, Provenance::Constant, Provenance::Zero] {
            assert_eq!(p.as_str().parse::<Provenance>().unwrap(), p);
        }
        assert!("magic".parse::<Provenance>().is_err());
    }
}
