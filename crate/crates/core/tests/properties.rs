use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graph_shaping::agent::{rollout, run_algorithm1, softmax_with_temperature, AgentConfig, AgentState, RunConfig};
use graph_shaping::gcn::{GcnConfig, GcnModel, NodeFeatures};
use graph_shaping::graph::SpectralOps;
use graph_shaping::harness::{run_suite, ExperimentConfig};
use graph_shaping::mdp::{build_fourrooms, parse_mdp, write_mdp, MdpSpec};
use graph_shaping::shaping::{telescoping_identity_check, PotentialTable, Provenance};

fn edge_list(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..n), 0..3 * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gcn_is_permutation_equivariant(
        edges in edge_list(6),
        perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        seed in 0u64..1000,
    ) {
        let ops = SpectralOps::from_edges(6, &edges).unwrap();
        let moved: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let ops_p = SpectralOps::from_edges(6, &moved).unwrap();
        let model = GcnModel::new(6, GcnConfig { hidden: 8, seed, ..GcnConfig::default() });
        let idx: Vec<usize> = (0..6).collect();
        // node perm[v] of the relabelled graph carries the features of node v
        let mut idx_p = vec![0; 6];
        for v in 0..6 {
            idx_p[perm[v]] = v;
        }
        let y = model.forward(&ops, NodeFeatures::OneHot(&idx)).unwrap();
        let y_p = model.forward(&ops_p, NodeFeatures::OneHot(&idx_p)).unwrap();
        for v in 0..6 {
            for c in 0..2 {
                prop_assert!((y[(v, c)] - y_p[(perm[v], c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn t_hat_is_symmetric_with_spectrum_in_unit_interval(n in 1usize..12, raw in prop::collection::vec((0usize..12, 0usize..12), 0..40)) {
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let t = SpectralOps::from_edges(n, &edges).unwrap().t_hat();
        let m = DMatrix::from_fn(n, n, |i, j| t[(i, j)]);
        prop_assert!((&m - m.transpose()).amax() < 1e-15);
        for ev in SymmetricEigen::new(m).eigenvalues.iter() {
            prop_assert!(*ev >= -1.0 - 1e-12 && *ev <= 1.0 + 1e-12, "eigenvalue {}", ev);
        }
    }

    #[test]
    fn policy_rows_sum_to_one(logits in prop::collection::vec(-60.0f64..60.0, 1..8), temperature in 0.01f64..5.0) {
        let p = softmax_with_temperature(&logits, temperature);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn shaped_monte_carlo_return_telescopes(seed in 0u64..500, phi_seed in 0u64..500) {
        let mdp = build_fourrooms();
        let agent = AgentState::for_mdp(&mdp, AgentConfig::default()).unwrap();
        let episode = rollout(&mdp, &agent, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(phi_seed);
        let values = (0..mdp.num_states()).map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0)).collect();
        let phi = PotentialTable::new(values, Provenance::Zero).unwrap();
        prop_assert!(telescoping_identity_check(&phi, &episode, mdp.gamma()).residual.abs() < 1e-9);
    }

    #[test]
    fn mdp_file_roundtrip(seed in 0u64..1000, ns in 1usize..6, na in 1usize..4) {
        let mdp = MdpSpec::random(ns, na, 0.95, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = parse_mdp("random", &write_mdp(&mdp)).unwrap();
        for s in 0..ns {
            for a in 0..na {
                prop_assert_eq!(back.reward(s, a), mdp.reward(s, a));
                for s2 in 0..ns {
                    prop_assert_eq!(back.prob(s, a, s2), mdp.prob(s, a, s2));
                }
            }
        }
    }
}

#[test]
fn policies_stay_normalized_during_training() {
    let mdp = build_fourrooms();
    let cfg = RunConfig { episodes: 30, ..RunConfig::default() };
    let trace = run_algorithm1(&mdp, &cfg, 4).unwrap();
    for s in 0..mdp.num_states() {
        let p = trace.final_agent.policy(s);
        approx::assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn suite_results_do_not_depend_on_worker_count() {
    let run_with = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            potential: Some(Provenance::L2),
            episodes: 8,
            seeds: vec![5, 2, 9, 0],
            out: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_suite(&cfg)).unwrap();
        std::fs::read_to_string(dir.path().join("l2/aggregate.csv")).unwrap()
    };
    assert_eq!(run_with(1), run_with(3));
}
