//! Value iteration on a random MDP before and after shaping: optimal Q
//! shifts by exactly Φ(s) and the greedy actions stay the same.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graph_shaping::mdp::planning::value_iteration;
use graph_shaping::mdp::MdpSpec;
use graph_shaping::shaping::{shaped_rewards, PotentialTable, Provenance};

fn main() -> graph_shaping::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mdp = MdpSpec::random(6, 3, 0.9, &mut rng)?;
    let phi = PotentialTable::new((0..6).map(|_| rng.gen_range(-5.0..5.0)).collect(), Provenance::Zero)?;
    let plain = value_iteration(&mdp, None, 1e-12, 100_000);
    let shaped = value_iteration(&mdp, Some(&shaped_rewards(&mdp, &phi)), 1e-12, 100_000);
    for s in 0..mdp.num_states() {
        let shift: Vec<String> = (0..mdp.num_actions()).map(|a| format!("{:+.2e}", shaped.q(s, a) - (plain.q(s, a) - phi.get(s)))).collect();
        println!(
            "s{s}: greedy {:?} -> {:?}  residual [{}]",
            plain.greedy_actions(s, 1e-9),
            shaped.greedy_actions(s, 1e-9),
            shift.join(", ")
        );
    }
    Ok(())
}
