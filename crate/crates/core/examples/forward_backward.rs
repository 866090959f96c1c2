//! Forward and backward messages on the two-arm chain, and the potential
//! they induce. The short left arm ends in a small reward, the long right
//! arm in a large one.

use graph_shaping::inference::{alpha_beta_potential, backward_messages, forward_messages, Collapse, OptimalityModel};
use graph_shaping::mdp::build_two_arm_chain;

// states carrying visible mass in a marginal
fn support(marginal: &[f64]) -> Vec<(usize, f64)> {
    marginal.iter().enumerate().filter(|(_, &p)| p > 1e-3).map(|(s, &p)| (s, (p * 1e3).round() / 1e3)).collect()
}

fn main() -> graph_shaping::Result<()> {
    let mdp = build_two_arm_chain();
    let om = OptimalityModel::from_mdp(&mdp);
    let horizon = 4;
    let alpha = forward_messages(&mdp, &om, horizon)?;
    let beta = backward_messages(&mdp, &om, horizon)?;
    for t in 0..horizon {
        println!("t={t}  forward {:?}", support(&alpha.state_marginal(t)));
    }
    let b0 = beta.state_marginal(0);
    println!("backward at t=0: start {:.4}, left arm {:.4}, right arm entry {:.4}", b0[0], b0[1], b0[3]);

    let phi = alpha_beta_potential(&mdp, Collapse::TimeAverage)?;
    let n = mdp.num_states();
    println!("Φ start {:.3}", phi.get(0));
    println!("Φ left arm {:.3} {:.3}", phi.get(1), phi.get(2));
    println!("Φ right arm {:.3} .. {:.3} .. {:.3}", phi.get(3), phi.get(n / 2), phi.get(n - 1));
    Ok(())
}
