//! Plain actor-critic against GCN-shaped actor-critic on FourRooms, a few
//! seeds each, reporting cumulative steps.

use graph_shaping::agent::{run_algorithm1, GraphMode, PotentialSource, RunConfig};

fn main() -> graph_shaping::Result<()> {
    let mdp = graph_shaping::mdp::build_fourrooms();
    let methods = [
        ("actor-critic", RunConfig { potential: PotentialSource::Disabled, ..RunConfig::default() }),
        ("gcn (sampled graph)", RunConfig::default()),
        ("gcn (full graph)", RunConfig { graph: GraphMode::Full, ..RunConfig::default() }),
    ];
    for (name, cfg) in methods {
        let cfg = RunConfig { episodes: 150, ..cfg };
        let totals: Vec<usize> = (0..3).map(|seed| run_algorithm1(&mdp, &cfg, seed).map(|t| t.total_steps())).collect::<Result<_, _>>()?;
        let mean = totals.iter().sum::<usize>() as f64 / totals.len() as f64;
        println!("{name:<20} cumulative steps {totals:?}  mean {mean:.0}");
    }
    Ok(())
}
