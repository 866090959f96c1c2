//! Loads an MDP from the plain-text format, computes its forward-backward
//! potential and trains a shaped agent on it.

use graph_shaping::agent::{run_algorithm1, PotentialSource, RunConfig};
use graph_shaping::inference::{alpha_beta_potential, Collapse};
use graph_shaping::mdp::{parse_mdp, write_mdp};

// A five-state corridor: action 0 moves right, action 1 stays put.
const CORRIDOR: &str = "\
5 2 0.95
T 0 0 1 1.0
T 1 0 2 1.0
T 2 0 3 1.0
T 3 0 4 1.0
T 0 1 0 1.0
T 1 1 1 1.0
T 2 1 2 1.0
T 3 1 3 1.0
R 3 0 1.0
F 4
M 50
";

fn main() -> graph_shaping::Result<()> {
    let mdp = parse_mdp("corridor", CORRIDOR)?;
    print!("{}", write_mdp(&mdp));
    let phi = alpha_beta_potential(&mdp, Collapse::TimeAverage)?;
    println!("potential {:?}", phi.to_vec());
    let cfg = RunConfig { potential: PotentialSource::Fixed(phi), episodes: 50, ..RunConfig::default() };
    let trace = run_algorithm1(&mdp, &cfg, 0)?;
    let steps: Vec<usize> = trace.episodes.iter().map(|e| e.steps).collect();
    println!("steps per episode, first 10: {:?}", &steps[..10]);
    println!("steps per episode, last 10:  {:?}", &steps[steps.len() - 10..]);
    Ok(())
}
