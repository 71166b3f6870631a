use mgrl_core::envs::{make_deterministic_reachable_mdp, make_random_mdp, shift_mdp, FreezeSpec};
use mgrl_core::mdp::{sample_trajectory, FiniteMultiGoalMdp, TransitionSample};
use mgrl_core::metrics::LearningRate;
use mgrl_core::oracle::{finite_difference_grad_j, solve_m_pi, solve_q_star, uniform_state_action, uniform_state_goal};
use mgrl_core::policy::{softmax_policy, TabularPolicy};
use mgrl_core::rng::Pcg32;
use mgrl_core::tables::{GoalDensityTable, TabularQ};
use mgrl_core::tabular::*;
use proptest::prelude::*;

fn changed(a: &[f64], b: &[f64]) -> Vec<usize> {
    (0..a.len()).filter(|&i| a[i] != b[i]).collect()
}

proptest! {
    #[test]
    fn footprints(seed in 0u64..500, s in 0usize..5, a in 0usize..3, s_next in 0usize..5, g in 0usize..5, eta in 0.01f64..1.0) {
        let mdp = make_random_mdp(5, 3, 2, 0.9, &mut Pcg32::new(seed)).unwrap();
        let mut rng = Pcg32::new(seed + 1);
        let q0 = TabularQ::from_fn(5, 3, 5, |_, _, _| rng.normal());
        let sample = TransitionSample { s, a, s_next, g };
        let idx = |x: usize| (s * 3 + a) * 5 + x;

        let mut q = q0.clone();
        uvfa_step(&mdp, &mut q, None, &sample, eta).unwrap();
        prop_assert_eq!(changed(q.values(), q0.values()), vec![idx(g)]);

        let mut q = q0.clone();
        delta_dqn_step(&mdp, &mut q, None, &sample, eta).unwrap();
        let mut expect = vec![idx(g), idx(s)];
        expect.sort();
        expect.dedup();
        prop_assert_eq!(changed(q.values(), q0.values()), expect);

        let m0 = GoalDensityTable::from_fn(5, 5, |_, _, _| rng.normal());
        for n in 1..4 {
            let states: Vec<usize> = (0..=n).map(|_| rng.below(5)).collect();
            let mut m = m0.clone();
            delta_td_n_step(&mdp, &mut m, None, &states, g, s_next, eta).unwrap();
            let touched = changed(m.values(), m0.values());
            prop_assert!(touched.len() <= n + 1);
            prop_assert!(touched.iter().all(|&i| i / 5 == states[0] * 5 + g));
        }
    }
}

#[test]
fn delta_dqn_samples_are_unbiased_at_the_fixed_point() {
    let mdp = make_random_mdp(4, 2, 3, 0.8, &mut Pcg32::new(21)).unwrap();
    let q = solve_q_star(&mdp, 1e-13, 100_000).unwrap();
    let moments =
        delta_dqn_update_moments(&mdp, &q, &q, &uniform_state_action(&mdp), 200_000, &mut Pcg32::new(0)).unwrap();
    assert!(moments.band_excess(4.0) <= 0.0, "excess {}", moments.band_excess(4.0));
    assert!(moments.std.iter().any(|&s| s > 0.0));
}

#[test]
fn delta_dqn_samples_detect_a_wrong_table() {
    let mdp = make_random_mdp(4, 2, 3, 0.8, &mut Pcg32::new(21)).unwrap();
    let mut q = solve_q_star(&mdp, 1e-13, 100_000).unwrap();
    *q.get_mut(1, 0, 2) += 1.0;
    let moments =
        delta_dqn_update_moments(&mdp, &q, &q, &uniform_state_action(&mdp), 200_000, &mut Pcg32::new(0)).unwrap();
    assert!(moments.band_excess(4.0) > 0.0);
}

#[test]
fn delta_td_samples_are_unbiased_at_m_pi() {
    let mut rng = Pcg32::new(4);
    let mdp = make_random_mdp(4, 2, 2, 0.7, &mut rng).unwrap();
    let pi = TabularPolicy::random(4, 4, 2, &mut rng);
    let m = solve_m_pi(&mdp, &pi).unwrap();
    for n in 1..=3 {
        let moments = delta_td_update_moments(
            &mdp,
            &pi,
            &m,
            &m,
            &uniform_state_goal(&mdp),
            n,
            100_000,
            &mut Pcg32::new(n as u64),
        )
        .unwrap();
        assert!(moments.band_excess(4.0) <= 0.0, "n = {n}");
    }
}

fn freeze_mdp() -> FreezeSpec {
    FreezeSpec::new(&shift_mdp(5, 2, 0.8).unwrap()).unwrap()
}

fn freeze_config() -> TrainConfig {
    let mut cfg = TrainConfig::new(200_000, 200);
    cfg.sampling = HerSampling::new(0.8, 0.8, 0.95);
    cfg.lr = LearningRate { base: 0.5, decay: 1e-3 };
    cfg.eval_interval = 50_000;
    cfg
}

fn freeze_picks(spec: &FreezeSpec, q: &TabularQ) -> usize {
    let n = spec.base_states();
    (0..n * n)
        .filter(|i| q.greedy_action(i / n, i % n) == spec.freeze_action())
        .count()
}

#[test]
fn her_prefers_the_freeze_action_and_delta_dqn_does_not() {
    let spec = freeze_mdp();
    let cfg = freeze_config();
    let her = train(TabularAlgo::Her, spec.mdp(), &cfg, 0).unwrap();
    let dqn = train(TabularAlgo::DeltaDqn, spec.mdp(), &cfg, 0).unwrap();
    assert!(freeze_picks(&spec, her.state.q().unwrap()) as f64 > 0.9 * 25.0);
    assert!((freeze_picks(&spec, dqn.state.q().unwrap()) as f64) < 0.2 * 25.0);
}

#[test]
fn her_without_relabelling_is_uvfa() {
    let spec = freeze_mdp();
    let mut cfg = freeze_config();
    cfg.updates = 20_000;
    cfg.sampling.alpha = 0.0;
    let her = train(TabularAlgo::Her, spec.mdp(), &cfg, 3).unwrap();
    let uvfa = train(TabularAlgo::Uvfa, spec.mdp(), &cfg, 3).unwrap();
    assert_eq!(her, uvfa);
}

#[test]
fn her_converges_on_a_deterministic_mdp() {
    let mdp = make_deterministic_reachable_mdp(5, 2, 0.9, &mut Pcg32::new(0)).unwrap();
    let mut cfg = TrainConfig::new(200_000, 100);
    cfg.sampling = HerSampling::new(0.8, 0.9, 0.8);
    cfg.lr = LearningRate { base: 0.5, decay: 1e-4 };
    cfg.eval_interval = 20_000;
    let out = train(TabularAlgo::Her, &mdp, &cfg, 0).unwrap();
    let last = out.rows.iter().rev().find(|r| r.metric == "sup_distance").unwrap();
    assert!(last.value < 0.05, "distance {}", last.value);
}

#[test]
fn delta_dqn_with_target_refresh_learns_the_density() {
    let mdp = make_random_mdp(5, 2, 2, 0.8, &mut Pcg32::new(0)).unwrap();
    let mut cfg = TrainConfig::new(200_000, 50);
    cfg.sampling = HerSampling::no_relabel(0.9);
    cfg.lr = LearningRate { base: 0.5, decay: 1e-3 };
    cfg.target_refresh = Some(100);
    cfg.eval_interval = 20_000;
    let out = train(TabularAlgo::DeltaDqn, &mdp, &cfg, 0).unwrap();
    let last = out.rows.iter().rev().find(|r| r.metric == "sup_distance").unwrap();
    assert!(last.value < 0.1 * 5.0, "distance {}", last.value);
}

#[test]
fn delta_td_learns_m_pi() {
    let mut rng = Pcg32::new(1);
    let mdp = make_random_mdp(4, 2, 2, 0.7, &mut rng).unwrap();
    let pi = TabularPolicy::random(4, 4, 2, &mut rng);
    for n in [1, 3] {
        let mut cfg = TrainConfig::new(300_000, 40);
        cfg.behavior = Behavior::Fixed(pi.clone());
        cfg.lr = LearningRate { base: 0.2, decay: 1e-3 };
        cfg.sampling = HerSampling::no_relabel(0.8);
        cfg.eval_interval = 10_000;
        let out = train(TabularAlgo::DeltaTd { n }, &mdp, &cfg, 0).unwrap();
        let scale = mgrl_core::tables::sup_norm(solve_m_pi(&mdp, &pi).unwrap().values());
        let d = out.rows.last().unwrap().value;
        assert!(d < 0.1 * scale, "n = {n}: {d} vs {scale}");
    }
}

#[test]
fn uvfa_distance_trends_down() {
    let mdp = make_random_mdp(6, 2, 2, 0.8, &mut Pcg32::new(6)).unwrap();
    let mut cfg = TrainConfig::new(60_000, 50);
    cfg.sampling = HerSampling::no_relabel(0.9);
    cfg.eval_interval = 2_000;
    cfg.lr = LearningRate { base: 0.3, decay: 1e-4 };
    let out = train(TabularAlgo::Uvfa, &mdp, &cfg, 0).unwrap();
    let pts: Vec<(f64, f64)> = out
        .rows
        .iter()
        .filter(|r| r.metric == "sup_distance")
        .map(|r| (r.step as f64, r.value))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope < 0.0);
}

#[test]
fn training_is_reproducible_and_zero_updates_is_a_no_op() {
    let mdp = make_random_mdp(4, 2, 2, 0.9, &mut Pcg32::new(2)).unwrap();
    let mut cfg = TrainConfig::new(5_000, 20);
    cfg.behavior = Behavior::EpsilonGreedy(0.2);
    cfg.eval_interval = 500;
    for algo in [
        TabularAlgo::Uvfa,
        TabularAlgo::Her,
        TabularAlgo::DeltaDqn,
        TabularAlgo::DeltaTd { n: 2 },
        TabularAlgo::DeltaAc,
    ] {
        let a = train(algo, &mdp, &cfg, 11).unwrap();
        let b = train(algo, &mdp, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.windows(2).all(|w| w[0].step <= w[1].step));
        let mut zero = cfg.clone();
        zero.updates = 0;
        let z = train(algo, &mdp, &zero, 11).unwrap();
        assert!(z.rows.is_empty());
        assert_eq!(z.state, initial_state(algo, &mdp));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mdp = make_random_mdp(4, 2, 2, 0.9, &mut Pcg32::new(2)).unwrap();
    let mut cfg = TrainConfig::new(10, 20);
    cfg.lr = LearningRate::constant(0.0);
    assert!(train(TabularAlgo::Uvfa, &mdp, &cfg, 0).is_err());
    let cfg = TrainConfig::new(10, 2);
    assert!(train(TabularAlgo::DeltaTd { n: 3 }, &mdp, &cfg, 0).is_err());
}

#[test]
fn divergent_rates_trip_the_guard() {
    let mdp = make_random_mdp(4, 2, 2, 0.99, &mut Pcg32::new(2)).unwrap();
    let mut cfg = TrainConfig::new(100_000, 20);
    cfg.lr = LearningRate::constant(1e6);
    let err = train(TabularAlgo::DeltaDqn, &mdp, &cfg, 0).unwrap_err();
    assert!(matches!(err, mgrl_core::Error::NonFinite { .. }), "{err:?}");
}

fn mean_actor_update(
    mdp: &FiniteMultiGoalMdp,
    logits: &[f64],
    critic: &GoalDensityTable,
    episodes: usize,
    horizon: usize,
) -> Vec<f64> {
    let (ns, ng, na) = (mdp.n_states(), mdp.n_goals(), mdp.n_actions());
    let pi = softmax_policy(ns, ng, na, logits).unwrap();
    let mut rng = Pcg32::new(0);
    let mut total = vec![0.0; logits.len()];
    for _ in 0..episodes {
        let traj = sample_trajectory(mdp, &pi, horizon, &mut rng).unwrap();
        let mut m = critic.clone();
        for t in 0..horizon {
            // every step is scored at the same θ
            let mut theta = logits.to_vec();
            delta_ac_step(mdp, &mut m, &mut theta, t, &traj.transition(t), 0, 0.0, 1.0).unwrap();
            for (acc, (new, old)) in total.iter_mut().zip(theta.iter().zip(logits)) {
                *acc += new - old;
            }
        }
    }
    total.iter().map(|x| x / episodes as f64).collect()
}

#[test]
fn averaged_actor_updates_follow_the_gradient() {
    let mut rng = Pcg32::new(5);
    let mdp = make_random_mdp(3, 2, 2, 0.7, &mut rng).unwrap();
    let logits: Vec<f64> = (0..18).map(|_| rng.normal()).collect();
    let pi = softmax_policy(3, 3, 2, &logits).unwrap();
    let m = solve_m_pi(&mdp, &pi).unwrap();
    let mc = mean_actor_update(&mdp, &logits, &m, 100_000, 60);
    let fd = finite_difference_grad_j(&mdp, &logits, 1e-5).unwrap();
    let dot: f64 = mc.iter().zip(&fd).map(|(a, b)| a * b).sum();
    let cos = dot / (mc.iter().map(|x| x * x).sum::<f64>() * fd.iter().map(|x| x * x).sum::<f64>()).sqrt();
    assert!(cos >= 0.98, "cosine {cos}");
}

#[test]
fn shifting_the_critic_changes_no_expected_actor_update() {
    // enumerate the action and the next state at one (s, g)
    let mut rng = Pcg32::new(8);
    let mdp = make_random_mdp(3, 3, 2, 0.9, &mut rng).unwrap();
    let logits: Vec<f64> = (0..27).map(|_| rng.normal()).collect();
    let pi = softmax_policy(3, 3, 3, &logits).unwrap();
    let critic = GoalDensityTable::from_fn(3, 3, |_, _, _| rng.normal());
    let shifted = GoalDensityTable::from_fn(3, 3, |s, g, x| critic.get(s, g, x) + if g == x { 7.5 } else { 0.0 });
    for s in 0..3 {
        for g in 0..3 {
            let expected = |m: &GoalDensityTable| {
                let mut out = vec![0.0; 27];
                for a in 0..3 {
                    for s_next in 0..3 {
                        let w = pi.prob(s, g, a) * mdp.p(s, a, s_next);
                        let mut theta = logits.clone();
                        delta_ac_step(
                            &mdp,
                            &mut m.clone(),
                            &mut theta,
                            2,
                            &TransitionSample { s, a, s_next, g },
                            0,
                            0.0,
                            1.0,
                        )
                        .unwrap();
                        for i in 0..27 {
                            out[i] += w * (theta[i] - logits[i]);
                        }
                    }
                }
                out
            };
            for (x, y) in expected(&critic).iter().zip(expected(&shifted)) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn actor_critic_improves_the_return() {
    let mdp = make_random_mdp(4, 2, 2, 0.8, &mut Pcg32::new(0)).unwrap();
    let mut cfg = TrainConfig::new(200_000, 30);
    cfg.lr = LearningRate::constant(0.05);
    cfg.actor_lr = LearningRate::constant(0.05);
    cfg.eval_interval = 2_000;
    let out = train(TabularAlgo::DeltaAc, &mdp, &cfg, 0).unwrap();
    let j: Vec<f64> = out.rows.iter().map(|r| r.value).collect();
    let windows: Vec<f64> = j.chunks(10).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    assert!(windows.windows(2).all(|w| w[1] >= w[0]), "{windows:?}");
    assert!(windows.last().unwrap() > &windows[0]);
}
