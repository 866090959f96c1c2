//! Collects a few random-policy episodes on the S-maze, builds the
//! trajectory graph and fits the GCN potential, printing the loss curve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graph_shaping::agent::{rollout, AgentConfig, AgentState};
use graph_shaping::gcn::{select_base_cases, GcnConfig, GcnModel, NodeFeatures};
use graph_shaping::graph::TrajectoryGraph;
use graph_shaping::mdp::build_smaze;

fn main() -> graph_shaping::Result<()> {
    let mdp = build_smaze();
    let agent = AgentState::for_mdp(&mdp, AgentConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut graph = TrajectoryGraph::new();
    for _ in 0..20 {
        graph.add_episode(&rollout(&mdp, &agent, &mut rng)?);
    }
    println!("graph: {} nodes, {} edges", graph.num_nodes(), graph.num_edges());

    let ops = graph.spectral()?;
    let bases = select_base_cases(&graph);
    println!("base cases: {}", bases.len());
    let mut model = GcnModel::new(mdp.num_states(), GcnConfig::default());
    let report = model.fit(&ops, NodeFeatures::OneHot(graph.states()), &bases, 1000)?;
    for (i, loss) in report.losses.iter().enumerate().step_by(100) {
        println!("iter {i:>4}  loss {loss:.6}");
    }
    println!("final step size {:.2e}", report.final_learning_rate);

    let phi = model.potential(&ops)?;
    let mut ranked: Vec<(usize, f64)> = graph.states().iter().map(|&s| (s, phi.get(s))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("highest-potential states: {:?}", &ranked[..5.min(ranked.len())]);
    Ok(())
}
