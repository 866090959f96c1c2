//! Approximate state-transition graph built from sampled trajectories, and
//! the spectral operators the GCN propagates over.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mdp::{MdpSpec, StateId, Transition};

/// Rewards with magnitude at or below this are treated as zero.
pub const REWARD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeMarkers {
    pub first: bool,
    pub last: bool,
    /// Last nonzero reward observed on arrival at this state.
    pub reward: Option<f64>,
}

impl NodeMarkers {
    pub fn is_base_case(&self) -> bool {
        self.first || self.last || self.reward.is_some()
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrajectoryGraph {
    index: HashMap<StateId, usize>,
    states: Vec<StateId>,
    markers: Vec<NodeMarkers>,
    /// Undirected edges keyed by `(min, max)` node index, with visit counts.
    edges: BTreeMap<(usize, usize), u64>,
}

impl TrajectoryGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn node(&mut self, s: StateId) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(s, i);
        self.states.push(s);
        self.markers.push(NodeMarkers::default());
        i
    }

    /// Records one transition. `starts_episode` marks `t.state` as the first
    /// state of an episode; `t.done` marks `t.next_state` as the last.
    pub fn add_transition(&mut self, t: &Transition, starts_episode: bool) {
        let v = self.node(t.state);
        let w = self.node(t.next_state);
        if v != w {
            *self.edges.entry((v.min(w), v.max(w))).or_insert(0) += 1;
        }
        if starts_episode {
            self.markers[v].first = true;
        }
        if t.done {
            self.markers[w].last = true;
        }
        if t.reward.abs() > REWARD_EPS {
            self.markers[w].reward = Some(t.reward);
        }
    }

    /// Adds every transition of one episode, marking its first state.
    pub fn add_episode(&mut self, transitions: &[Transition]) {
        for (i, t) in transitions.iter().enumerate() {
            self.add_transition(t, i == 0);
        }
    }

    /// Graph of every possible transition of a known MDP: start states are
    /// marked first, terminal states last, and arrival rewards are recorded
    /// as if each transition had been sampled.
    pub fn from_mdp(mdp: &MdpSpec) -> Self {
        let mut g = Self::new();
        let start = mdp.start_distribution();
        for s in 0..mdp.num_states() {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..mdp.num_actions() {
                for &(s2, _) in mdp.successors(s, a) {
                    let t = Transition {
                        state: s,
                        action: a,
                        reward: mdp.transition_reward(s, a, s2),
                        next_state: s2,
                        done: mdp.is_terminal(s2),
                    };
                    g.add_transition(&t, start[s] > 0.0);
                }
            }
        }
        g
    }

    pub fn reset(&mut self) {
        *self = Self::new();
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.states.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// State id of each node, in insertion order.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn node_of(&self, s: StateId) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn markers(&self, node: usize) -> &NodeMarkers {
        &self.markers[node]
    }

    pub fn has_edge(&self, a: StateId, b: StateId) -> bool {
        match (self.node_of(a), self.node_of(b)) {
            (Some(v), Some(w)) => self.edges.contains_key(&(v.min(w), v.max(w))),
            _ => false,
        }
    }

    /// Edges as `(state, state, count)`.
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId, u64)> + '_ {
        self.edges.iter().map(|(&(v, w), &c)| (self.states[v], self.states[w], c))
    }

    pub fn spectral(&self) -> Result<SpectralOps> {
        SpectralOps::build(self)
    }

    /// `P_rand = D^-1 Ã`: each row uniform over the node's neighbours plus itself.
    pub fn random_walk_matrix(&self) -> Result<Matrix> {
        let ops = self.spectral()?;
        let n = ops.num_nodes();
        let mut p = Matrix::zeros(n, n);
        for v in 0..n {
            let inv = 1.0 / ops.degree(v);
            p[(v, v)] = inv;
            for &w in ops.neighbors(v) {
                p[(v, w)] = inv;
            }
        }
        Ok(p)
    }

    /// Debug dump: `v w count` edge lines, then a marker section.
    pub fn dump(&self) -> String {
        let mut out = String::from("# edges: v w count\n");
        for (v, w, c) in self.edges() {
            let _ = writeln!(out, "{v} {w} {c}");
        }
        out.push_str("# markers: state first last reward\n");
        for (i, m) in self.markers.iter().enumerate() {
            if m.is_base_case() {
                let r = m.reward.map_or_else(|| "-".to_string(), |r| r.to_string());
                let _ = writeln!(out, "{} {} {} {r}", self.states[i], u8::from(m.first), u8::from(m.last));
            }
        }
        out
    }
}

/// Ã = A + I, its degree D, and T̂ = D^-1/2 Ã D^-1/2, kept in sparse form.
#[derive(Debug, Clone)]
pub struct SpectralOps {
    states: Vec<StateId>,
    neighbors: Vec<Vec<usize>>,
    degree: Vec<f64>,
    inv_sqrt_degree: Vec<f64>,
}

impl SpectralOps {
    pub fn build(g: &TrajectoryGraph) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n = g.num_nodes();
        let mut neighbors = vec![Vec::new(); n];
        for &(v, w) in g.edges.keys() {
            neighbors[v].push(w);
            neighbors[w].push(v);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let degree: Vec<f64> = neighbors.iter().map(|l| (l.len() + 1) as f64).collect();
        let inv_sqrt_degree = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
        Ok(SpectralOps { states: g.states.clone(), neighbors, degree, inv_sqrt_degree })
    }

    /// Operators over an explicit undirected edge list on `n` nodes; node `i`
    /// stands for state `i`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = TrajectoryGraph::new();
        for s in 0..n {
            g.node(s);
        }
        for &(v, w) in edges {
            if v.max(w) >= n {
                return Err(Error::OutOfRange { what: "node", value: v.max(w), limit: n });
            }
            if v != w {
                g.edges.insert((v.min(w), v.max(w)), 1);
            }
        }
        Self::build(&g)
    }

    pub fn num_nodes(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    /// Neighbours of `v`, self excluded.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// `D_vv = sum_w Ã_vw`.
    pub fn degree(&self, v: usize) -> f64 {
        self.degree[v]
    }

    pub fn t_hat_entry(&self, v: usize, w: usize) -> f64 {
        if v == w || self.neighbors[v].binary_search(&w).is_ok() {
            self.inv_sqrt_degree[v] * self.inv_sqrt_degree[w]
        } else {
            0.0
        }
    }

    /// Dense Ã (with self-loops).
    pub fn adjacency_with_self_loops(&self) -> Matrix {
        let mut a = self.adjacency();
        for v in 0..self.num_nodes() {
            a[(v, v)] = 1.0;
        }
        a
    }

    /// Dense binary adjacency without self-loops.
    pub fn adjacency(&self) -> Matrix {
        let n = self.num_nodes();
        let mut a = Matrix::zeros(n, n);
        for v in 0..n {
            for &w in &self.neighbors[v] {
                a[(v, w)] = 1.0;
            }
        }
        a
    }

    pub fn t_hat(&self) -> Matrix {
        let n = self.num_nodes();
        let mut t = Matrix::zeros(n, n);
        for v in 0..n {
            t[(v, v)] = self.t_hat_entry(v, v);
            for &w in &self.neighbors[v] {
                t[(v, w)] = self.t_hat_entry(v, w);
            }
        }
        t
    }

    /// `T̂ · x` for a row-major `n x k` matrix.
    pub fn propagate(&self, x: &Matrix) -> Result<Matrix> {
        let n = self.num_nodes();
        if x.rows() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: x.rows() });
        }
        let k = x.cols();
        let mut out = Matrix::zeros(n, k);
        for v in 0..n {
            let dv = self.inv_sqrt_degree[v];
            let row = out.row_mut(v);
            let self_w = dv * dv;
            for (o, xv) in row.iter_mut().zip(x.row(v)) {
                *o = self_w * xv;
            }
            for &w in &self.neighbors[v] {
                let c = dv * self.inv_sqrt_degree[w];
                for (o, xw) in row.iter_mut().zip(x.row(w)) {
                    *o += c * xw;
                }
            }
        }
        Ok(out)
    }

    /// `sum_{v,w} A_vw (f_w - f_v)^2` over ordered pairs, self-loops excluded.
    pub fn dirichlet_energy(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch { expected: self.num_nodes(), actual: f.len() });
        }
        Ok(self
            .neighbors
            .iter()
            .enumerate()
            .map(|(v, ns)| ns.iter().map(|&w| (f[w] - f[v]).powi(2)).sum::<f64>())
            .sum())
    }

    /// Dirichlet energy of vector-valued node signals (one row per node),
    /// using the squared Euclidean distance between rows.
    pub fn dirichlet_energy_rows(&self, f: &Matrix) -> Result<f64> {
        if f.rows() != self.num_nodes() {
            return Err(Error::DimensionMismatch { expected: self.num_nodes(), actual: f.rows() });
        }
        let mut total = 0.0;
        for (v, ns) in self.neighbors.iter().enumerate() {
            for &w in ns {
                total += f.row(w).iter().zip(f.row(v)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
        }
        Ok(total)
    }
}

/// Row entropies `-sum_j P_ij ln P_ij` with `0 ln 0 = 0`.
pub fn entropy_rate_rows(p: &Matrix) -> Result<Vec<f64>> {
    (0..p.rows())
        .map(|i| {
            let row = p.row(i);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&x| x < 0.0) {
                return Err(Error::NotStochastic { row: i, sum });
            }
            Ok(-row.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(s: StateId, s2: StateId, r: f64, done: bool) -> Transition {
        Transition { state: s, action: 0, reward: r, next_state: s2, done }
    }

    #[test]
    fn first_transition() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(0, 1, 0.0, false), false);
        assert_eq!((g.num_nodes(), g.num_edges()), (2, 1));
        assert!(g.markers(1).reward.is_none());
    }

    #[test]
    fn self_transition_adds_no_edge() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(4, 4, 0.0, false), false);
        assert_eq!((g.num_nodes(), g.num_edges()), (1, 0));
        let ops = g.spectral().unwrap();
        assert_eq!(ops.degree(0), 1.0);
    }

    #[test]
    fn reward_marks_successor() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(3, 7, 1.0, true), true);
        let v = g.node_of(3).unwrap();
        let w = g.node_of(7).unwrap();
        assert_eq!(g.markers(w).reward, Some(1.0));
        assert!(g.markers(w).last && g.markers(v).first);
        assert!(g.markers(v).reward.is_none());
        g.add_transition(&tr(3, 7, 1e-12, false), false);
        assert_eq!(g.markers(w).reward, Some(1.0));
        g.add_transition(&tr(3, 7, -0.5, false), false);
        assert_eq!(g.markers(w).reward, Some(-0.5));
    }

    #[test]
    fn edge_counts_are_undirected() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(0, 1, 0.0, false), false);
        g.add_transition(&tr(1, 0, 0.0, false), false);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 2)]);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn two_node_operator() {
        let ops = SpectralOps::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(ops.adjacency_with_self_loops(), Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        assert_eq!((ops.degree(0), ops.degree(1)), (2.0, 2.0));
        let t = ops.t_hat();
        for v in t.as_slice() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_operator_is_one_third() {
        let ops = SpectralOps::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        for v in ops.t_hat().as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_row_is_unit() {
        let ops = SpectralOps::from_edges(3, &[(0, 1)]).unwrap();
        let t = ops.t_hat();
        assert_eq!(t.row(2), &[0.0, 0.0, 1.0]);
        assert_eq!(ops.degree(2), 1.0);
    }

    #[test]
    fn propagate_matches_dense() {
        let ops = SpectralOps::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let x = Matrix::from_vec(5, 2, (0..10).map(|i| f64::from(i) * 0.3 - 1.0).collect()).unwrap();
        let sparse = ops.propagate(&x).unwrap();
        let dense = ops.t_hat().matmul(&x).unwrap();
        assert!(sparse.max_abs_diff(&dense) < 1e-14);
    }

    #[test]
    fn dirichlet_energy_examples() {
        let ops = SpectralOps::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(ops.dirichlet_energy(&[3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ops.dirichlet_energy(&[0.0, 1.0]).unwrap(), 2.0);
        let f = [0.2, -0.7];
        let e = ops.dirichlet_energy(&f).unwrap();
        let e2 = ops.dirichlet_energy(&[0.4, -1.4]).unwrap();
        assert!((e2 - 4.0 * e).abs() < 1e-12);
        assert!(ops.dirichlet_energy(&[1.0]).is_err());
    }

    #[test]
    fn entropy_rows() {
        let p = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![1.0 / 3.0; 3]]).unwrap();
        let h = entropy_rate_rows(&p).unwrap();
        assert_eq!(h[0], 0.0);
        assert!((h[1] - 3f64.ln()).abs() < 1e-15);
        let bad = Matrix::from_rows(&[vec![0.5, 0.2]]).unwrap();
        assert!(matches!(entropy_rate_rows(&bad), Err(Error::NotStochastic { .. })));
    }

    #[test]
    fn complete_graph_walk_without_self_loops_is_log3() {
        let mut p = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in (0..4).filter(|&j| j != i) {
                p[(i, j)] = 1.0 / 3.0;
            }
        }
        for h in entropy_rate_rows(&p).unwrap() {
            assert!((h - 3f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn random_walk_rows() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(0, 1, 0.0, false), false);
        g.add_transition(&tr(5, 5, 0.0, false), false);
        let p = g.random_walk_matrix().unwrap();
        assert_eq!(p.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(p.row(2), &[0.0, 0.0, 1.0]);
        for i in 0..3 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reset_behaviour() {
        let mut g = TrajectoryGraph::new();
        g.add_transition(&tr(0, 1, 1.0, true), true);
        g.reset();
        assert!(g.is_empty());
        assert!(g.spectral().is_err());
        g.add_transition(&tr(2, 3, 0.0, false), false);
        let mut fresh = TrajectoryGraph::new();
        fresh.add_transition(&tr(2, 3, 0.0, false), false);
        assert_eq!(g.dump(), fresh.dump());
    }

    #[test]
    fn growth_without_reset_is_monotone() {
        let mut g = TrajectoryGraph::new();
        let mut last = (0, 0);
        for ep in 0..5usize {
            g.add_episode(&[tr(ep, ep + 1, 0.0, false), tr(ep + 1, ep + 2, 0.0, true)]);
            let now = (g.num_nodes(), g.num_edges());
            assert!(now.0 >= last.0 && now.1 >= last.1);
            last = now;
        }
    }

    #[test]
    fn dump_lists_edges_and_markers() {
        let mut g = TrajectoryGraph::new();
        g.add_episode(&[tr(0, 1, 0.0, false), tr(1, 2, 1.0, true)]);
        let d = g.dump();
        assert!(d.contains("0 1 1\n1 2 1\n"));
        assert!(d.contains("0 1 0 -\n"));
        assert!(d.contains("2 0 1 1\n"));
    }
}
