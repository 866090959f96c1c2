//! Iterations until the greedy first action is optimal on the two-arm
//! chain, with and without the forward-backward potential, across λ.

use graph_shaping::harness::{run_toy_sweep, TOY_LAMBDAS};
use graph_shaping::inference::{alpha_beta_potential, Collapse};
use graph_shaping::mdp::build_two_arm_chain;

fn main() -> graph_shaping::Result<()> {
    let phi = alpha_beta_potential(&build_two_arm_chain(), Collapse::TimeAverage)?;
    println!("lambda   plain  shaped");
    let show = |n: Option<usize>| n.map_or("censored".to_string(), |n| n.to_string());
    for row in run_toy_sweep(&TOY_LAMBDAS, &phi)? {
        println!("{:>6.1} {:>7} {:>7}", row.lambda, show(row.plain), show(row.shaped));
    }
    Ok(())
}
