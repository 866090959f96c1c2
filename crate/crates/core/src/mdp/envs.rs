use crate::error::{Error, Result};

use super::{GridLayout, MdpSpec};

/// Probability that the chosen action is replaced by a uniformly random one.
pub const ACTION_NOISE: f64 = 0.1;
pub const GAMMA: f64 = 0.99;
pub const GRID_MAX_STEPS: usize = 1000;
pub const CHAIN_MAX_STEPS: usize = 450;
pub const GOAL_REWARD: f64 = 1.0;
pub const TRAP_PENALTY: f64 = -1.0;

/// Names accepted by [`by_name`].
pub const ENVIRONMENTS: [&str; 4] = ["fourrooms", "fourrooms-traps", "smaze", "two-arm-chain"];

/// 13x13 four-room layout, start square in the upper-left room, goal in the
/// lower-right room.
const FOURROOMS: &str = "\
#############
#SSS..#.....#
#SSS..#.....#
#SSS........#
#.....#.....#
#.....#.....#
##.####.....#
#.....###.###
#.....#.....#
#.....#.....#
#...........#
#.....#....G#
#############
";

/// Same rooms with five traps along the routes to the goal, none in the start
/// room. The pattern is a fixed stand-in; exact trap positions are not published.
const FOURROOMS_TRAPS: &str = "\
#############
#SSS..#.....#
#SSS..#...T.#
#SSS........#
#.....#.....#
#.....#..T..#
##.####.....#
#.....###.###
#.....#.....#
#..T..#..T..#
#...........#
#.T...#....G#
#############
";

/// S-shaped corridor maze: start in the lower-left corner, goal upper-right.
const SMAZE: &str = "\
###########
#........G#
#.........#
#.#########
#.........#
#.........#
#########.#
#.........#
#S........#
###########
";

pub fn build_fourrooms() -> MdpSpec {
    fourrooms_with_noise(ACTION_NOISE)
}

pub fn fourrooms_with_noise(noise: f64) -> MdpSpec {
    grid_env("fourrooms", FOURROOMS, noise)
}

pub fn build_fourrooms_traps() -> MdpSpec {
    grid_env("fourrooms-traps", FOURROOMS_TRAPS, ACTION_NOISE)
}

pub fn build_smaze() -> MdpSpec {
    grid_env("smaze", SMAZE, ACTION_NOISE)
}

fn grid_env(name: &str, map: &str, noise: f64) -> MdpSpec {
    GridLayout::parse(map, GOAL_REWARD, TRAP_PENALTY)
        .and_then(|layout| layout.to_mdp(name, noise, GAMMA, GRID_MAX_STEPS))
        .expect("built-in layout is valid")
}

/// Arm lengths and terminal rewards of the two-arm chain.
pub const CHAIN_LEFT_LEN: usize = 2;
pub const CHAIN_RIGHT_LEN: usize = 400;
pub const CHAIN_LEFT_REWARD: f64 = 0.1;
pub const CHAIN_RIGHT_REWARD: f64 = 10.0;

/// State 0 is the start. States `1..=2` form the left arm, `3..=402` the
/// right arm; the last cell of each arm is an absorbing terminal paying the
/// arm's reward on arrival. Action 0 enters the left arm, action 1 the
/// right; along an arm both actions advance.
pub fn build_two_arm_chain() -> MdpSpec {
    let n = 1 + CHAIN_LEFT_LEN + CHAIN_RIGHT_LEN;
    let na = 2;
    let left_first = 1;
    let left_last = CHAIN_LEFT_LEN;
    let right_first = CHAIN_LEFT_LEN + 1;
    let right_last = CHAIN_LEFT_LEN + CHAIN_RIGHT_LEN;
    let mut transition = vec![0.0; n * na * n];
    let mut set = |s: usize, a: usize, s2: usize| transition[(s * na + a) * n + s2] = 1.0;
    set(0, 0, left_first);
    set(0, 1, right_first);
    for s in 1..n {
        let next = if s == left_last || s == right_last { s } else { s + 1 };
        set(s, 0, next);
        set(s, 1, next);
    }
    let mut terminal = vec![false; n];
    terminal[left_last] = true;
    terminal[right_last] = true;
    let mut arrival = vec![0.0; n];
    arrival[left_last] = CHAIN_LEFT_REWARD;
    arrival[right_last] = CHAIN_RIGHT_REWARD;
    let mut start = vec![0.0; n];
    start[0] = 1.0;
    MdpSpec::with_arrival("two-arm-chain", n, na, transition, vec![0.0; n * na], arrival, GAMMA, start, terminal, CHAIN_MAX_STEPS)
        .expect("chain construction is valid")
}

pub fn by_name(name: &str) -> Result<MdpSpec> {
    match name {
        "fourrooms" => Ok(build_fourrooms()),
        "fourrooms-traps" => Ok(build_fourrooms_traps()),
        "smaze" => Ok(build_smaze()),
        "two-arm-chain" => Ok(build_two_arm_chain()),
        other => Err(Error::UnknownEnvironment(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::planning::value_iteration;
    use crate::mdp::{Cell, GridAction, ROW_SUM_TOL};

    fn all_grids() -> Vec<MdpSpec> {
        vec![build_fourrooms(), build_fourrooms_traps(), build_smaze()]
    }

    #[test]
    fn rows_stochastic_and_terminals_absorbing() {
        for mdp in all_grids().into_iter().chain([build_two_arm_chain()]) {
            for s in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    let row = mdp.row(s, a);
                    assert!((row.iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL, "{}", mdp.name());
                    assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
                    if mdp.is_terminal(s) {
                        assert_eq!(row[s], 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn fourrooms_dimensions() {
        let mdp = build_fourrooms();
        let layout = mdp.layout().unwrap();
        assert_eq!((layout.width(), layout.height()), (13, 13));
        assert_eq!(mdp.num_states(), 104);
        assert_eq!(mdp.num_actions(), 4);
        assert_eq!(mdp.max_steps(), 1000);
        assert_eq!(mdp.terminal_states().count(), 1);
    }

    #[test]
    fn noiseless_interior_move_is_deterministic() {
        let mdp = fourrooms_with_noise(0.0);
        let layout = mdp.layout().unwrap();
        let s = layout.state_at(2, 2).unwrap();
        let up = layout.state_at(2, 1).unwrap();
        assert_eq!(mdp.prob(s, GridAction::Up as usize, up), 1.0);
    }

    #[test]
    fn noisy_interior_move_splits_mass() {
        let mdp = build_fourrooms();
        let layout = mdp.layout().unwrap();
        let s = layout.state_at(3, 4).unwrap();
        let up = layout.state_at(3, 3).unwrap();
        let down = layout.state_at(3, 5).unwrap();
        let a = GridAction::Up as usize;
        assert!((mdp.prob(s, a, up) - (0.9 + 0.1 / 4.0)).abs() < 1e-15);
        assert!((mdp.prob(s, a, down) - 0.1 / 4.0).abs() < 1e-15);
        assert!((mdp.row(s, a).iter().sum::<f64>() - 1.0).abs() < ROW_SUM_TOL);
    }

    #[test]
    fn move_into_wall_stays_with_intended_mass() {
        let mdp = build_fourrooms();
        let layout = mdp.layout().unwrap();
        // (1, 4) has a wall to the left
        let s = layout.state_at(1, 4).unwrap();
        let a = GridAction::Left as usize;
        assert!((mdp.prob(s, a, s) - (0.9 + 0.1 / 4.0)).abs() < 1e-15);
        let noiseless = fourrooms_with_noise(0.0);
        assert_eq!(noiseless.prob(s, a, s), 1.0);
    }

    #[test]
    fn trap_and_goal_rewards() {
        let mdp = build_fourrooms_traps();
        let layout = mdp.layout().unwrap();
        let traps = layout.states_of_kind(Cell::Trap);
        assert_eq!(traps.len(), 5);
        for s in 0..mdp.num_states() {
            let expected = match layout.cell_of(s) {
                Cell::Trap => TRAP_PENALTY,
                Cell::Goal => GOAL_REWARD,
                _ => 0.0,
            };
            for s0 in 0..mdp.num_states() {
                if !mdp.is_terminal(s0) {
                    assert_eq!(mdp.transition_reward(s0, 0, s), expected);
                }
            }
        }
        let goal = layout.states_of_kind(Cell::Goal)[0];
        assert!(mdp.is_terminal(goal));
        assert!(traps.iter().all(|&t| !mdp.is_terminal(t)));
    }

    #[test]
    fn free_cells_reachable_from_every_start() {
        for mdp in all_grids() {
            let layout = mdp.layout().unwrap();
            for s in layout.states_of_kind(Cell::Start) {
                assert!(mdp.reachable_from(s).iter().all(|&r| r), "{}", mdp.name());
            }
        }
    }

    #[test]
    fn smaze_start_lower_left_goal_upper_right() {
        let mdp = build_smaze();
        let layout = mdp.layout().unwrap();
        let (sx, sy) = layout.position(layout.states_of_kind(Cell::Start)[0]);
        let (gx, gy) = layout.position(layout.states_of_kind(Cell::Goal)[0]);
        assert!(sx < gx && sy > gy);
    }

    #[test]
    fn chain_structure() {
        let mdp = build_two_arm_chain();
        assert_eq!(mdp.num_states(), 1 + 2 + 400);
        assert_eq!(mdp.arrival_reward(2), 0.1);
        assert_eq!(mdp.arrival_reward(402), 10.0);
        assert_eq!(mdp.terminal_states().collect::<Vec<_>>(), vec![2, 402]);
        assert_eq!(mdp.max_steps(), 450);
    }

    #[test]
    fn chain_optimal_action_is_right() {
        let mdp = build_two_arm_chain();
        let sol = value_iteration(&mdp, None, 1e-12, 100_000);
        let q_left = sol.q(0, 0);
        let q_right = sol.q(0, 1);
        assert!((q_left - 0.99 * 0.1).abs() < 1e-9);
        assert!((q_right - 10.0 * 0.99f64.powi(399)).abs() < 1e-9);
        assert!(q_right > q_left);
    }

    #[test]
    fn names_resolve() {
        for name in ENVIRONMENTS {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert!(by_name("atari").is_err());
    }
}
