//! Two-layer graph convolutional network,
//! `softmax(T̂ ReLU(T̂ X W0) W1)`, trained on a trajectory graph with a
//! cross-entropy term on base-case states plus `η` times the Dirichlet
//! energy of the output rows.
//!
//! Column 0 of the output is the "optimal" class; its probability is the
//! potential `Φ(s)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{SpectralOps, TrajectoryGraph};
use crate::linalg::Matrix;
use crate::shaping::{PotentialTable, Provenance};

pub const HIDDEN: usize = 64;
pub const DEFAULT_ETA: f64 = 10.0;
pub const NUM_CLASSES: usize = 2;
/// Potential assumed for states the graph has not seen yet.
pub const UNSEEN_PHI: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnConfig {
    pub hidden: usize,
    /// Weight of the propagation loss.
    pub eta: f64,
    pub learning_rate: f64,
    /// Gradient steps per `train` call.
    pub iterations: usize,
    pub seed: u64,
    /// Keep weights between `train` calls instead of re-initialising.
    pub warm_start: bool,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig { hidden: HIDDEN, eta: DEFAULT_ETA, learning_rate: 1e-2, iterations: 200, seed: 0, warm_start: true }
    }
}

/// Node features: either one-hot indices into `input_dim` or a dense matrix.
#[derive(Debug, Clone, Copy)]
pub enum NodeFeatures<'a> {
    OneHot(&'a [usize]),
    Dense(&'a Matrix),
}

impl NodeFeatures<'_> {
    fn rows(&self) -> usize {
        match self {
            NodeFeatures::OneHot(idx) => idx.len(),
            NodeFeatures::Dense(m) => m.rows(),
        }
    }

    fn check(&self, nodes: usize, input_dim: usize) -> Result<()> {
        if self.rows() != nodes {
            return Err(Error::DimensionMismatch { expected: nodes, actual: self.rows() });
        }
        match self {
            NodeFeatures::OneHot(idx) => match idx.iter().find(|&&i| i >= input_dim) {
                Some(&bad) => Err(Error::OutOfRange { what: "feature index", value: bad, limit: input_dim }),
                None => Ok(()),
            },
            NodeFeatures::Dense(m) if m.cols() != input_dim => {
                Err(Error::DimensionMismatch { expected: input_dim, actual: m.cols() })
            }
            NodeFeatures::Dense(_) => Ok(()),
        }
    }

    /// `X · W`.
    fn times(&self, w: &Matrix) -> Result<Matrix> {
        match self {
            NodeFeatures::OneHot(idx) => {
                let mut out = Matrix::zeros(idx.len(), w.cols());
                for (r, &i) in idx.iter().enumerate() {
                    out.row_mut(r).copy_from_slice(w.row(i));
                }
                Ok(out)
            }
            NodeFeatures::Dense(m) => m.matmul(w),
        }
    }

    /// `Xᵀ · M` accumulated into a `input_dim x M.cols()` matrix.
    fn transpose_times(&self, m: &Matrix, input_dim: usize) -> Result<Matrix> {
        match self {
            NodeFeatures::OneHot(idx) => {
                let mut out = Matrix::zeros(input_dim, m.cols());
                for (r, &i) in idx.iter().enumerate() {
                    for (o, v) in out.row_mut(i).iter_mut().zip(m.row(r)) {
                        *o += v;
                    }
                }
                Ok(out)
            }
            NodeFeatures::Dense(x) => x.transpose().matmul(m),
        }
    }
}

/// Soft labels `p(O|s) = σ(r)` on base-case nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaseCaseSet {
    /// `(node index, label)`.
    pub labels: Vec<(usize, f64)>,
}

impl BaseCaseSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// First states, last states and nonzero-reward states of the graph, each
/// labelled `σ(observed reward)` (`σ(0) = 0.5` for boundary states).
pub fn select_base_cases(g: &TrajectoryGraph) -> BaseCaseSet {
    let labels = (0..g.num_nodes())
        .filter_map(|v| {
            let m = g.markers(v);
            m.is_base_case().then(|| (v, sigmoid(m.reward.unwrap_or(0.0))))
        })
        .collect();
    BaseCaseSet { labels }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub supervised: f64,
    pub propagation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w0: Matrix,
    pub w1: Matrix,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        (self.w0.frobenius_norm().powi(2) + self.w1.frobenius_norm().powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Total loss before the first step and after every accepted step.
    pub losses: Vec<f64>,
    pub final_learning_rate: f64,
}

struct ForwardCache {
    z0: Matrix,
    h: Matrix,
    y: Matrix,
}

#[derive(Debug, Clone)]
pub struct GcnModel {
    config: GcnConfig,
    input_dim: usize,
    w0: Matrix,
    w1: Matrix,
    initialized: bool,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

impl GcnModel {
    pub fn new(input_dim: usize, config: GcnConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w0 = glorot(input_dim, config.hidden, &mut rng);
        let w1 = glorot(config.hidden, NUM_CLASSES, &mut rng);
        GcnModel { config, input_dim, w0, w1, initialized: false }
    }

    pub fn from_weights(config: GcnConfig, w0: Matrix, w1: Matrix) -> Result<Self> {
        if w1.cols() != NUM_CLASSES {
            return Err(Error::DimensionMismatch { expected: NUM_CLASSES, actual: w1.cols() });
        }
        if w0.cols() != w1.rows() {
            return Err(Error::DimensionMismatch { expected: w0.cols(), actual: w1.rows() });
        }
        if !w0.is_finite() || !w1.is_finite() {
            return Err(Error::NonFinite("GCN weights"));
        }
        let config = GcnConfig { hidden: w0.cols(), ..config };
        Ok(GcnModel { input_dim: w0.rows(), config, w0, w1, initialized: true })
    }

    pub fn config(&self) -> &GcnConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn weights(&self) -> (&Matrix, &Matrix) {
        (&self.w0, &self.w1)
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.config.eta = eta;
    }

    fn run(&self, ops: &SpectralOps, x: NodeFeatures<'_>) -> Result<ForwardCache> {
        x.check(ops.num_nodes(), self.input_dim)?;
        let z0 = ops.propagate(&x.times(&self.w0)?)?;
        let mut h = z0.clone();
        h.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        let z1 = ops.propagate(&h.matmul(&self.w1)?)?;
        let mut y = z1;
        for r in 0..y.rows() {
            softmax_in_place(y.row_mut(r));
        }
        Ok(ForwardCache { z0, h, y })
    }

    /// Per-node class distribution, one row per node.
    pub fn forward(&self, ops: &SpectralOps, x: NodeFeatures<'_>) -> Result<Matrix> {
        Ok(self.run(ops, x)?.y)
    }

    fn loss_from_output(&self, ops: &SpectralOps, y: &Matrix, bases: &BaseCaseSet) -> Result<LossParts> {
        if bases.is_empty() {
            return Err(Error::NoBaseCases);
        }
        let mut supervised = 0.0;
        for &(v, p) in &bases.labels {
            if v >= y.rows() {
                return Err(Error::OutOfRange { what: "base-case node", value: v, limit: y.rows() });
            }
            supervised -= p * y[(v, 0)].ln() + (1.0 - p) * y[(v, 1)].ln();
        }
        supervised /= bases.len() as f64;
        let propagation = ops.dirichlet_energy_rows(y)?;
        Ok(LossParts { total: supervised + self.config.eta * propagation, supervised, propagation })
    }

    pub fn loss(&self, ops: &SpectralOps, x: NodeFeatures<'_>, bases: &BaseCaseSet) -> Result<LossParts> {
        let y = self.forward(ops, x)?;
        self.loss_from_output(ops, &y, bases)
    }

    /// Loss and its analytic gradient with respect to both weight matrices.
    pub fn grad(&self, ops: &SpectralOps, x: NodeFeatures<'_>, bases: &BaseCaseSet) -> Result<(LossParts, Gradients)> {
        let cache = self.run(ops, x)?;
        let parts = self.loss_from_output(ops, &cache.y, bases)?;
        let y = &cache.y;
        let n = y.rows();

        // dL/dZ1: softmax backprop of the propagation term, plus (y - t)/|B|
        let mut dz1 = Matrix::zeros(n, NUM_CLASSES);
        let eta = self.config.eta;
        for v in 0..n {
            let mut dy = [0.0; NUM_CLASSES];
            for &w in ops.neighbors(v) {
                for (c, d) in dy.iter_mut().enumerate() {
                    *d += 4.0 * eta * (y[(v, c)] - y[(w, c)]);
                }
            }
            let dot: f64 = (0..NUM_CLASSES).map(|c| dy[c] * y[(v, c)]).sum();
            for (c, d) in dy.iter().enumerate() {
                dz1[(v, c)] = y[(v, c)] * (d - dot);
            }
        }
        let inv_b = 1.0 / bases.len() as f64;
        for &(v, p) in &bases.labels {
            dz1[(v, 0)] += (y[(v, 0)] - p) * inv_b;
            dz1[(v, 1)] += (y[(v, 1)] - (1.0 - p)) * inv_b;
        }

        let d_hw = ops.propagate(&dz1)?;
        let gw1 = cache.h.transpose_matmul(&d_hw)?;
        let mut dz0 = d_hw.matmul(&self.w1.transpose())?;
        for (d, z) in dz0.as_mut_slice().iter_mut().zip(cache.z0.as_slice()) {
            if *z <= 0.0 {
                *d = 0.0;
            }
        }
        let gw0 = x.transpose_times(&ops.propagate(&dz0)?, self.input_dim)?;
        if !gw0.is_finite() || !gw1.is_finite() {
            return Err(Error::NonFinite("GCN gradient"));
        }
        Ok((parts, Gradients { w0: gw0, w1: gw1 }))
    }

    /// Gradient descent for `iterations` steps. A step that raises the loss
    /// (or produces a non-finite one) is rejected and the step size halved.
    pub fn fit(
        &mut self,
        ops: &SpectralOps,
        x: NodeFeatures<'_>,
        bases: &BaseCaseSet,
        iterations: usize,
    ) -> Result<FitReport> {
        let saved = (self.w0.clone(), self.w1.clone());
        let mut lr = self.config.learning_rate;
        let mut losses = Vec::with_capacity(iterations + 1);
        let outcome = (|| -> Result<()> {
            let (mut parts, mut grads) = self.grad(ops, x, bases)?;
            if !parts.total.is_finite() {
                return Err(Error::NonFinite("GCN loss"));
            }
            losses.push(parts.total);
            for _ in 0..iterations {
                let (w0, w1) = (self.w0.clone(), self.w1.clone());
                // the accepted candidate's gradient is reused for the next step
                let next = loop {
                    step(&mut self.w0, &w0, &grads.w0, lr);
                    step(&mut self.w1, &w1, &grads.w1, lr);
                    let candidate = match self.grad(ops, x, bases) {
                        Ok(c) => Some(c),
                        Err(Error::NonFinite(_)) => None,
                        Err(e) => return Err(e),
                    };
                    if let Some(c) = candidate.filter(|c| c.0.total.is_finite() && c.0.total <= parts.total) {
                        break c;
                    }
                    lr *= 0.5;
                    if lr < 1e-12 {
                        self.w0 = w0;
                        self.w1 = w1;
                        return Ok(());
                    }
                };
                parts = next.0;
                grads = next.1;
                losses.push(parts.total);
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            self.w0 = saved.0;
            self.w1 = saved.1;
            return Err(e);
        }
        Ok(FitReport { losses, final_learning_rate: lr })
    }

    /// Trains on a trajectory graph with one-hot state features and returns
    /// the potential table over `input_dim` states.
    pub fn train(&mut self, g: &TrajectoryGraph) -> Result<PotentialTable> {
        if self.initialized && !self.config.warm_start {
            *self = GcnModel::new(self.input_dim, self.config.clone());
        }
        self.initialized = true;
        let ops = g.spectral()?;
        let bases = select_base_cases(g);
        if bases.is_empty() {
            return Err(Error::NoBaseCases);
        }
        let x = NodeFeatures::OneHot(g.states());
        self.fit(&ops, x, &bases, self.config.iterations)?;
        self.potential(&ops)
    }

    /// Current potential over the graph's states (one-hot features).
    pub fn potential(&self, ops: &SpectralOps) -> Result<PotentialTable> {
        let y = self.forward(ops, NodeFeatures::OneHot(ops.states()))?;
        let mut values = vec![None; self.input_dim];
        for (v, &s) in ops.states().iter().enumerate() {
            values[s] = Some(y[(v, 0)]);
        }
        PotentialTable::partial(values, UNSEEN_PHI, Provenance::Gcn)
    }

    /// Flat checkpoint: `u64` rows and cols of each matrix (little endian)
    /// followed by its row-major `f64` entries.
    pub fn to_checkpoint(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in [&self.w0, &self.w1] {
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint(bytes: &[u8], config: GcnConfig) -> Result<Self> {
        let mut pos = 0;
        let mut take = |len: usize| -> Result<&[u8]> {
            let chunk = bytes.get(pos..pos + len).ok_or_else(|| Error::parse(0, "truncated checkpoint"))?;
            pos += len;
            Ok(chunk)
        };
        let mut mats = Vec::with_capacity(2);
        for _ in 0..2 {
            let rows = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
            let cols = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
            let len = rows.checked_mul(cols).ok_or_else(|| Error::parse(0, "checkpoint dims overflow"))?;
            let raw = take(len.checked_mul(8).ok_or_else(|| Error::parse(0, "checkpoint dims overflow"))?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            mats.push(Matrix::from_vec(rows, cols, data)?);
        }
        let w1 = mats.pop().expect("two matrices");
        let w0 = mats.pop().expect("two matrices");
        Self::from_weights(config, w0, w1)
    }
}

fn step(w: &mut Matrix, base: &Matrix, g: &Matrix, lr: f64) {
    for ((w, b), g) in w.as_mut_slice().iter_mut().zip(base.as_slice()).zip(g.as_slice()) {
        *w = b - lr * g;
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    row.iter_mut().for_each(|v| *v /= z);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Transition;

    fn path3() -> SpectralOps {
        SpectralOps::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn small_model(input_dim: usize, hidden: usize, seed: u64) -> GcnModel {
        GcnModel::new(input_dim, GcnConfig { hidden, seed, ..GcnConfig::default() })
    }

    #[test]
    fn outputs_are_distributions() {
        let ops = path3();
        let m = small_model(3, 8, 1);
        let y = m.forward(&ops, NodeFeatures::OneHot(&[0, 1, 2])).unwrap();
        for r in 0..3 {
            let row = y.row(r);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn zero_weights_give_half() {
        let ops = SpectralOps::from_edges(1, &[]).unwrap();
        let m = GcnModel::from_weights(GcnConfig::default(), Matrix::zeros(1, 4), Matrix::zeros(4, 2)).unwrap();
        let y = m.forward(&ops, NodeFeatures::OneHot(&[0])).unwrap();
        assert_eq!(y.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn dimension_errors() {
        let ops = path3();
        let m = small_model(3, 4, 0);
        assert!(m.forward(&ops, NodeFeatures::OneHot(&[0, 1])).is_err());
        assert!(m.forward(&ops, NodeFeatures::OneHot(&[0, 1, 5])).is_err());
        let x = Matrix::zeros(3, 2);
        assert!(m.forward(&ops, NodeFeatures::Dense(&x)).is_err());
        assert!(GcnModel::from_weights(GcnConfig::default(), Matrix::zeros(3, 4), Matrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn sigmoid_labels() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((sigmoid(1.0) + sigmoid(-1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn base_cases_from_graph() {
        let mut g = TrajectoryGraph::new();
        g.add_episode(&[
            Transition { state: 0, action: 0, reward: 0.0, next_state: 1, done: false },
            Transition { state: 1, action: 0, reward: -1.0, next_state: 2, done: false },
            Transition { state: 2, action: 0, reward: 0.0, next_state: 3, done: false },
            Transition { state: 3, action: 0, reward: 1.0, next_state: 4, done: true },
        ]);
        let b = select_base_cases(&g);
        let by_state: Vec<(usize, f64)> = b.labels.iter().map(|&(v, p)| (g.states()[v], p)).collect();
        assert_eq!(by_state.len(), 3);
        assert_eq!(by_state[0], (0, 0.5));
        assert!((by_state[1].1 - sigmoid(-1.0)).abs() < 1e-15 && by_state[1].0 == 2);
        assert!((by_state[2].1 - sigmoid(1.0)).abs() < 1e-15 && by_state[2].0 == 4);
    }

    #[test]
    fn eta_zero_total_is_supervised() {
        let ops = path3();
        let mut m = small_model(3, 8, 2);
        m.set_eta(0.0);
        let bases = BaseCaseSet { labels: vec![(0, 0.7), (2, 0.2)] };
        let l = m.loss(&ops, NodeFeatures::OneHot(&[0, 1, 2]), &bases).unwrap();
        assert_eq!(l.total, l.supervised);
        assert!(l.propagation > 0.0);
    }

    #[test]
    fn constant_output_matching_labels() {
        // zero W1 makes every row (0.5, 0.5): supervised loss is the label entropy
        let ops = path3();
        let m = GcnModel::from_weights(GcnConfig::default(), Matrix::from_vec(3, 2, vec![0.3; 6]).unwrap(), Matrix::zeros(2, 2))
            .unwrap();
        let bases = BaseCaseSet { labels: vec![(0, 0.5), (2, 0.5)] };
        let x = NodeFeatures::OneHot(&[0, 1, 2]);
        let l = m.loss(&ops, x, &bases).unwrap();
        assert!((l.supervised - 2f64.ln()).abs() < 1e-15);
        assert_eq!(l.propagation, 0.0);
        let (_, g) = m.grad(&ops, x, &bases).unwrap();
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn empty_base_cases_rejected() {
        let ops = path3();
        let m = small_model(3, 4, 0);
        assert!(matches!(
            m.loss(&ops, NodeFeatures::OneHot(&[0, 1, 2]), &BaseCaseSet::default()),
            Err(Error::NoBaseCases)
        ));
    }

    #[test]
    fn single_node_fits_its_label() {
        let ops = SpectralOps::from_edges(1, &[]).unwrap();
        let mut m = GcnModel::new(1, GcnConfig { hidden: 8, learning_rate: 0.5, seed: 3, ..GcnConfig::default() });
        let target = sigmoid(1.0);
        let bases = BaseCaseSet { labels: vec![(0, target)] };
        m.fit(&ops, NodeFeatures::OneHot(&[0]), &bases, 2000).unwrap();
        let y = m.forward(&ops, NodeFeatures::OneHot(&[0])).unwrap();
        assert!((y[(0, 0)] - target).abs() < 1e-2, "{}", y[(0, 0)]);
    }

    #[test]
    fn loss_never_increases_during_fit() {
        let ops = SpectralOps::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)]).unwrap();
        let mut m = GcnModel::new(6, GcnConfig { hidden: 16, learning_rate: 0.5, seed: 9, ..GcnConfig::default() });
        let bases = BaseCaseSet { labels: vec![(0, 0.5), (5, sigmoid(1.0)), (3, sigmoid(-1.0))] };
        let report = m.fit(&ops, NodeFeatures::OneHot(&[0, 1, 2, 3, 4, 5]), &bases, 300).unwrap();
        for w in report.losses.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = small_model(5, 6, 4);
        let back = GcnModel::from_checkpoint(&m.to_checkpoint(), GcnConfig::default()).unwrap();
        assert_eq!(back.weights(), m.weights());
        assert!(GcnModel::from_checkpoint(&m.to_checkpoint()[..20], GcnConfig::default()).is_err());
    }

    #[test]
    fn unseen_states_default_to_half() {
        let mut g = TrajectoryGraph::new();
        g.add_episode(&[Transition { state: 1, action: 0, reward: 1.0, next_state: 2, done: true }]);
        let mut m = GcnModel::new(4, GcnConfig { hidden: 8, iterations: 5, ..GcnConfig::default() });
        let phi = m.train(&g).unwrap();
        assert_eq!(phi.len(), 4);
        assert_eq!(phi.get(0), UNSEEN_PHI);
        assert!(phi.is_known(1) && phi.is_known(2) && !phi.is_known(3));
        assert!(phi.to_vec().iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
