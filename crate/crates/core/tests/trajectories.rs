use oco_queue::analysis::{
    self, check_queue_violation_bound, check_slater_negativity, deterministic_checks,
};
use oco_queue::baselines::hindsight_solve;
use oco_queue::instances::StockInstance;
use oco_queue::solver::{self, RunOptions};
use oco_queue::{SlaterPoint, Trajectory};
use proptest::prelude::*;

fn rebuild(traj: &Trajectory, edit: impl Fn(usize, &mut oco_queue::RoundRecord)) -> Trajectory {
    Trajectory::from_parts(
        *traj.bounds(),
        *traj.params(),
        traj.seed(),
        traj.decision(1).to_vec(),
        traj.queue(1).to_vec(),
        (1..=traj.len()).map(|t| {
            let mut r = traj.round(t);
            edit(t, &mut r);
            r
        }),
    )
}

#[test]
fn rebuilt_trajectory_is_identical() {
    let p = StockInstance::Lp2d.build();
    let traj = solver::run(&p, &solver::default_params(200), 3).unwrap();
    assert_eq!(rebuild(&traj, |_, _| {}), traj);
}

#[test]
fn corrupted_queue_is_caught_at_its_round() {
    // Starting at the origin, round 1 violates the cover constraint by 1 and
    // the decision stays put, so Q(2) = 1.
    let p = StockInstance::Lp2d.build();
    let options = RunOptions {
        initial: Some(vec![0.0, 0.0]),
        ..RunOptions::default()
    };
    let traj = solver::run_with(&p, &solver::default_params(500), 1, &options).unwrap();
    assert!(deterministic_checks(&traj).iter().all(|r| r.passed));
    assert_eq!(traj.queue(2), &[1.0]);
    // Q(2) is recorded as the output of round 1.
    let bad = rebuild(&traj, |t, r| {
        if t == 1 {
            r.next_queue[0] -= 1.0;
        }
    });
    for r in check_queue_violation_bound(&bad) {
        assert!(!r.passed, "{}", r.name);
        assert_eq!(r.witness.unwrap().round, 2, "{}", r.name);
    }
}

fn regret_and_violation(horizon: usize, seed: u64) -> (f64, f64) {
    let p = StockInstance::Linear1d.build();
    let traj = solver::run(&p, &solver::default_params(horizon), seed).unwrap();
    let history: Vec<_> = (1..=horizon).map(|t| traj.realization(t).clone()).collect();
    let h = hindsight_solve(&p, &history, 1e-9).unwrap();
    let bench = analysis::benchmark_losses(&p, &traj, &h.x_star);
    let regret = analysis::regret(&traj, &bench).unwrap();
    (regret, analysis::cumulative_violation(&traj)[0].max(0.0))
}

#[test]
fn regret_is_not_much_below_zero() {
    let horizon = 4000;
    let root = (horizon as f64).sqrt();
    for seed in 1..=20 {
        let (r, _) = regret_and_violation(horizon, seed);
        assert!(r >= -3.0 * root, "seed {seed}: regret {r}");
    }
}

// With f(x) = x the hindsight point sits exactly on the averaged constraint,
// so regret is minus the cumulative constraint value.
#[test]
fn regret_mirrors_violation_on_the_linear_instance() {
    for seed in 1..=5 {
        let (r, v) = regret_and_violation(1000, seed);
        if v > 0.0 {
            assert!((r + v).abs() < 1e-6 * (1.0 + v), "seed {seed}: {r} vs {v}");
        }
    }
}

// Mean violation / sqrt(T) over seeds 1..=20. The ratio oscillates with T
// (the queue and decision trade energy with little damping) but stays O(1).
#[test]
fn violation_over_sqrt_t_is_pinned() {
    for (horizon, pinned) in [(1000, 1.6734), (4000, 0.4160)] {
        let total: f64 = (1..=20).map(|s| regret_and_violation(horizon, s).1).sum();
        let ratio = total / 20.0 / (horizon as f64).sqrt();
        assert!((ratio - pinned).abs() < 1e-3, "T = {horizon}: {ratio}");
        assert!(ratio < 2.0);
    }
}

#[test]
fn slater_negativity_holds_on_stock_instances() {
    let seeds: Vec<u64> = (1..=30).collect();
    for inst in [StockInstance::Linear1d, StockInstance::QuadraticSimplex2d, StockInstance::Lp2d] {
        let p = inst.build();
        let params = solver::default_params(400);
        let slater = p.constraints().slater_point().unwrap();
        let r = check_slater_negativity(&p, &params, &slater, &seeds, &[1, 100, 400]).unwrap();
        assert!(r.passed, "{inst}: {:?}", r.rounds);
        // Q(1) = 0, so round 1 contributes nothing.
        assert_eq!(r.rounds[0].estimate, 0.0);
    }
}

#[test]
fn slater_negativity_fails_for_an_infeasible_point() {
    // x = 0 gives E[g] = +0.5, the opposite sign of a Slater point.
    let p = StockInstance::Linear1d.build();
    let seeds: Vec<u64> = (1..=30).collect();
    let fake = SlaterPoint {
        point: vec![0.0],
        epsilon: 0.5,
    };
    let r = check_slater_negativity(&p, &solver::default_params(400), &fake, &seeds, &[200, 400]).unwrap();
    assert!(!r.passed);
}

#[test]
fn slater_negativity_at_the_boundary() {
    // x = 0.5 has E[g] = 0: with epsilon = 0 the paired mean is a zero-mean
    // sum, which the 3 SE rule accepts.
    let p = StockInstance::Linear1d.build();
    let seeds: Vec<u64> = (1..=40).collect();
    let edge = SlaterPoint {
        point: vec![0.5],
        epsilon: 0.0,
    };
    let r = check_slater_negativity(&p, &solver::default_params(400), &edge, &seeds, &[100, 400]).unwrap();
    assert!(r.passed, "{:?}", r.rounds);
}

#[test]
fn slater_negativity_is_vacuous_without_constraints() {
    let p = StockInstance::Unconstrained1d.build();
    let seeds: Vec<u64> = (1..=30).collect();
    let any = SlaterPoint {
        point: vec![0.5],
        epsilon: 1.0,
    };
    let r = check_slater_negativity(&p, &solver::default_params(100), &any, &seeds, &[10]).unwrap();
    assert!(r.passed && r.rounds.is_empty());
}

#[test]
fn slater_negativity_needs_enough_seeds() {
    let p = StockInstance::Linear1d.build();
    let slater = p.constraints().slater_point().unwrap();
    let seeds: Vec<u64> = (1..=10).collect();
    assert!(check_slater_negativity(&p, &solver::default_params(100), &slater, &seeds, &[10]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn deterministic_checks_hold_for_any_seed(
        seed in any::<u64>(),
        which in 0usize..3,
        horizon in 2usize..400,
        v_scale in 0.1f64..10.0,
        alpha_scale in 0.1f64..10.0,
    ) {
        let inst = [StockInstance::Linear1d, StockInstance::QuadraticSimplex2d, StockInstance::Lp2d][which];
        let p = inst.build();
        let base = solver::default_params(horizon);
        let params = oco_queue::AlgorithmParams::new(base.v * v_scale, base.alpha * alpha_scale, horizon).unwrap();
        let traj = solver::run(&p, &params, seed).unwrap();
        for r in deterministic_checks(&traj) {
            prop_assert!(r.passed, "{inst} {}: slack {} at {:?}", r.name, r.worst_slack, r.witness);
        }
        let d = analysis::check_decision_inequality(&traj, p.set(), 2, seed);
        prop_assert!(d.passed, "{inst} decision inequality: {}", d.worst_slack);
    }

    #[test]
    fn queues_stay_nonnegative_and_replay(seed in any::<u64>(), horizon in 1usize..300) {
        let p = StockInstance::QuadraticSimplex2d.build();
        let traj = solver::run(&p, &solver::default_params(horizon), seed).unwrap();
        let replay = traj.replay_queues();
        for t in 1..=horizon + 1 {
            prop_assert!(traj.queue(t).iter().all(|q| *q >= 0.0));
        }
        for (t, q) in replay.iter().enumerate() {
            prop_assert_eq!(q.as_slice(), traj.queue(t + 2));
        }
    }
}
