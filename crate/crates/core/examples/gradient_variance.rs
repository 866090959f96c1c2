//! Per-state variance of the policy-gradient estimate on FourRooms with no
//! baseline, the scaled forward-backward potential, and a critic.

use graph_shaping::agent::{run_algorithm1, PotentialSource, RunConfig};
use graph_shaping::harness::gradvar::gradient_variance;
use graph_shaping::inference::{alpha_beta_potential, Collapse};
use graph_shaping::mdp::build_fourrooms;

fn main() -> graph_shaping::Result<()> {
    let mdp = build_fourrooms();
    let phi = alpha_beta_potential(&mdp, Collapse::TimeAverage)?;
    let warm = RunConfig { potential: PotentialSource::Disabled, episodes: 50, ..RunConfig::default() };
    let agent = run_algorithm1(&mdp, &warm, 0)?.final_agent;
    let rows = gradient_variance(&mdp, &agent, &phi, 0.6, 200, 0)?;
    let mean = |f: fn(&graph_shaping::harness::gradvar::StateVariance) -> f64| {
        rows.iter().map(f).sum::<f64>() / rows.len() as f64
    };
    println!("{} states visited at least twice", rows.len());
    println!("no baseline   {:.3}", mean(|r| r.none));
    println!("(1-α)Φ        {:.3}", mean(|r| r.potential));
    println!("critic        {:.3}", mean(|r| r.critic));
    let lower = rows.iter().filter(|r| r.potential < r.none).count();
    println!("potential baseline lowers variance at {lower}/{} states", rows.len());
    Ok(())
}
