//! The lifted MILP and the mode enumeration must agree on every window.

mod common;

use dipps_core::domain::{Objective, WindowData};
use dipps_core::linearize::{build_milp, recover_schedule};
use dipps_core::milp::{solve_milp, MilpError, MilpOptions};
use dipps_core::nonlinear::{
    evaluate_constraints, solve_minlp_enumerate, window_objective, EnumerateError, EnumerateOptions,
};
use rand::Rng;

enum Outcome {
    Agree,
    BothInfeasible,
}

fn compare(w: &WindowData, objective: Objective) -> Outcome {
    let oracle = solve_minlp_enumerate(w, objective, &EnumerateOptions::default());
    let problem = build_milp(w, objective).unwrap();
    let milp = solve_milp(&problem, &MilpOptions::default());
    match (oracle, milp) {
        (Ok((sched, stats)), Ok((values, mstats))) => {
            assert!(
                (stats.objective - mstats.objective).abs() <= 1e-6,
                "oracle {} vs milp {} on {w:?}",
                stats.objective,
                mstats.objective
            );
            let recovered = recover_schedule(&problem, &values).unwrap();
            let r = evaluate_constraints(&recovered, w);
            assert!(r.max_residual <= 1e-6, "milp residual {:?}", r.worst());
            let r = evaluate_constraints(&sched, w);
            assert!(r.max_residual <= 1e-6, "oracle residual {:?}", r.worst());
            let j = window_objective(&recovered, w, objective);
            assert!((j - mstats.objective).abs() <= 1e-6, "lifted {} vs recovered {j}", mstats.objective);
            Outcome::Agree
        }
        (Err(EnumerateError::Infeasible), Err(MilpError::Infeasible)) => Outcome::BothInfeasible,
        (a, b) => panic!("disagreement on {w:?}: {:?} / {:?}", a.map(|x| x.1), b.map(|x| x.1)),
    }
}

#[test]
fn milp_matches_enumeration_on_random_windows() {
    let mut rng = common::rng(1);
    let (mut agree, mut infeasible) = (0, 0);
    for case in 0..120 {
        let steps = 1 + case % 4;
        let w = common::random_window(&mut rng, steps);
        let objective = if rng.gen_bool(0.5) { Objective::Static } else { Objective::Dynamic };
        match compare(&w, objective) {
            Outcome::Agree => agree += 1,
            Outcome::BothInfeasible => infeasible += 1,
        }
    }
    assert!(agree >= 100, "only {agree} feasible cases ({infeasible} infeasible)");
}

#[test]
fn flat_two_step_toy_agrees() {
    let mut rng = common::rng(2);
    let mut w = common::random_window(&mut rng, 2);
    w.load = vec![1.0, 1.0];
    w.pv = vec![0.0, 0.0];
    w.buy = vec![0.2, 0.2];
    w.sell = vec![0.1, 0.1];
    assert!(matches!(compare(&w, Objective::Static), Outcome::Agree | Outcome::BothInfeasible));
}
