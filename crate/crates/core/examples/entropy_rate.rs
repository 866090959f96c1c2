//! Entropy rate of the uniform random walk on a sampled trajectory graph
//! against the chain induced by the policy that produced it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graph_shaping::agent::{run_algorithm1, rollout, PotentialSource, RunConfig};
use graph_shaping::graph::{entropy_rate_rows, TrajectoryGraph};
use graph_shaping::linalg::Matrix;
use graph_shaping::mdp::build_fourrooms;

fn main() -> graph_shaping::Result<()> {
    let mdp = build_fourrooms();
    let cfg = RunConfig { potential: PotentialSource::Disabled, episodes: 100, ..RunConfig::default() };
    let agent = run_algorithm1(&mdp, &cfg, 1)?.final_agent;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let episodes: Vec<_> = (0..10).map(|_| rollout(&mdp, &agent, &mut rng)).collect::<Result<_, _>>()?;
    let mut graph = TrajectoryGraph::new();
    for ep in &episodes {
        graph.add_episode(ep);
    }

    let n = graph.num_nodes();
    let mut chain = Matrix::zeros(n, n);
    for tr in episodes.iter().flatten() {
        let (v, w) = (graph.node_of(tr.state).unwrap(), graph.node_of(tr.next_state).unwrap());
        chain[(v, w)] += 1.0;
    }
    for v in 0..n {
        let total: f64 = chain.row(v).iter().sum();
        chain.row_mut(v).iter_mut().for_each(|x| *x /= total.max(1.0));
        if total == 0.0 {
            chain[(v, v)] = 1.0;
        }
    }

    let walk = entropy_rate_rows(&graph.random_walk_matrix()?)?;
    let policy = entropy_rate_rows(&chain)?;
    let avg = |h: &[f64]| h.iter().sum::<f64>() / h.len() as f64;
    println!("{n} nodes");
    println!("mean row entropy, random walk  {:.4} nats", avg(&walk));
    println!("mean row entropy, policy chain {:.4} nats", avg(&policy));
    Ok(())
}
