//! Property tests over the model, the lifting, the receding-horizon loop
//! and the profile I/O.

mod common;

use dipps_core::data::{profile_from_csv, profile_to_csv};
use dipps_core::domain::{
    validate_scenario, DispatchSchedule, DispatchStep, EssParams, Flow, MicrogridParams, Modes,
    Objective, PowerProfile, ProfileKind, SellWindowMask, TariffSchedule, TimeGrid, ValidationError,
};
use dipps_core::horizon::{run_day, HorizonError, ScenarioConfig, TerminalPolicy};
use dipps_core::linearize::{build_milp, lift_product, Gate, MilpProblem};
use dipps_core::lp::{solve_lp, LpStatus};
use dipps_core::milp::{solve_milp, MilpError, MilpOptions};
use dipps_core::nonlinear::{
    evaluate_constraints, solve_minlp_enumerate, storage_powers, window_objective, EnumerateOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn series(len: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![
            8 => 0.0..5.0f64,
            1 => Just(-1.0),
            1 => Just(f64::NAN),
        ],
        len,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Validation never panics; it accepts exactly the well-formed inputs
    /// and reports every offending series.
    #[test]
    fn validation_is_total(
        steps in 1usize..6,
        load in series(0..7),
        pv in series(0..7),
        buy in series(0..7),
        capacity in prop_oneof![Just(-1.0), 0.5..20.0f64],
        grid_limit in prop_oneof![Just(0.0), 0.5..10.0f64],
    ) {
        let n = steps;
        let sell = buy.clone();
        let mask = SellWindowMask::none(n);
        let params = MicrogridParams {
            ess: EssParams::with_capacity(capacity),
            pv_capacity_kw: 1.0,
            grid_limit_kw: grid_limit,
        };
        let result = validate_scenario(
            params,
            TimeGrid::new(0, n),
            PowerProfile::new(ProfileKind::Load, load.clone()),
            PowerProfile::new(ProfileKind::Pv, pv.clone()),
            TariffSchedule { buy_price: buy.clone(), sell_price: sell },
            mask,
        );
        let ok_series = |v: &[f64]| v.len() == n && v.iter().all(|x| x.is_finite() && *x >= 0.0);
        let well_formed = ok_series(&load) && ok_series(&pv) && ok_series(&buy)
            && capacity > 0.0 && grid_limit > 0.0;
        match result {
            Ok(s) => {
                prop_assert!(well_formed);
                prop_assert_eq!(s.load().values.len(), n);
            }
            Err(errors) => {
                prop_assert!(!well_formed);
                prop_assert!(!errors.0.is_empty());
                let named = |name: &str| errors.0.iter().any(|e| match e {
                    ValidationError::LengthMismatch { series, .. } => *series == name,
                    ValidationError::InvariantViolation { field, .. } => field.starts_with(name),
                });
                if load.len() != n { prop_assert!(named("load")); }
                if pv.len() != n { prop_assert!(named("pv")); }
                if buy.len() != n { prop_assert!(named("buy_price")); }
            }
        }
    }

    /// With integral gates the envelope pins the lifted variable to the
    /// product, from both sides.
    #[test]
    fn lifted_product_is_exact_at_integral_gates(
        upper in 0.0..50.0f64,
        frac in 0.0..=1.0f64,
        b in 0u8..2,
        complement in any::<bool>(),
    ) {
        let x_val = upper * frac;
        let mut p = MilpProblem::default();
        let z = p.lp.add_var(0.0, 0.0, f64::INFINITY);
        let x = p.lp.add_var(0.0, x_val, x_val);
        let bin = p.lp.add_var(0.0, f64::from(b), f64::from(b));
        let gate = if complement { Gate::off(bin) } else { Gate::on(bin) };
        lift_product(&mut p, "z", 0, z, x, upper, gate).unwrap();
        let expected = x_val * gate.value(f64::from(b));
        for sign in [1.0, -1.0] {
            let mut lp = p.lp.clone();
            lp.objective[z] = sign;
            let sol = solve_lp(&lp).unwrap();
            prop_assert_eq!(sol.status, LpStatus::Optimal);
            prop_assert!((sol.values[z] - expected).abs() <= 1e-9,
                "z = {} expected {}", sol.values[z], expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// An empty sell mask makes the dynamic objective the static one.
    #[test]
    fn empty_mask_dynamic_equals_static(seed in any::<u64>(), steps in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = common::random_window(&mut rng, steps);
        w.mask = vec![false; steps];
        let solve = |o| build_milp(&w, o).map(|p| solve_milp(&p, &MilpOptions::default()));
        match (solve(Objective::Static).unwrap(), solve(Objective::Dynamic).unwrap()) {
            (Ok((_, s)), Ok((_, d))) => prop_assert!((s.objective - d.objective).abs() <= 1e-9),
            (Err(MilpError::Infeasible), Err(MilpError::Infeasible)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|r| r.1), b.map(|r| r.1)),
        }
    }

    /// No hand-built feasible schedule beats the enumeration optimum.
    #[test]
    fn oracle_is_never_beaten(seed in any::<u64>(), steps in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = common::random_window(&mut rng, steps);
        let objective = if rng.gen_bool(0.5) { Objective::Static } else { Objective::Dynamic };
        let best = solve_minlp_enumerate(&w, objective, &EnumerateOptions::default())
            .ok()
            .map(|(_, s)| s.objective);
        for _ in 0..40 {
            let cand = random_schedule(&mut rng, &w);
            if evaluate_constraints(&cand, &w).max_residual > 1e-9 {
                continue;
            }
            let j = window_objective(&cand, &w, objective);
            match best {
                Some(b) => prop_assert!(j >= b - 1e-7, "candidate {j} beats oracle {b}"),
                None => prop_assert!(false, "oracle says infeasible, found J = {j}"),
            }
        }
    }

    /// Committed schedules satisfy the whole-day model: SoC continuity,
    /// box and terminal value, balances, and one direction per step for
    /// the grid and for the storage.
    #[test]
    fn committed_schedules_are_feasible(seed in any::<u64>(), steps in 3usize..8, n_p in 1usize..4,
                                         every in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng, hi: f64| -> Vec<f64> {
            (0..steps).map(|_| rng.gen_range(0.0..hi)).collect()
        };
        let load = draw(&mut rng, 3.0);
        let pv = draw(&mut rng, 4.0);
        let buy: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.1..0.4)).collect();
        let sell: Vec<f64> = buy.iter().map(|b| b * rng.gen_range(0.0..0.9)).collect();
        let mut mask = SellWindowMask::none(steps);
        mask.mask = (0..steps).map(|_| rng.gen_bool(0.3)).collect();
        mask.bonus_weight = rng.gen_range(0.0..0.2);
        let scenario = validate_scenario(
            MicrogridParams {
                ess: EssParams::with_capacity(rng.gen_range(3.0..15.0)),
                pv_capacity_kw: 4.0,
                grid_limit_kw: rng.gen_range(3.0..8.0),
            },
            TimeGrid::new(0, steps),
            PowerProfile::new(ProfileKind::Load, load),
            PowerProfile::new(ProfileKind::Pv, pv),
            TariffSchedule { buy_price: buy, sell_price: sell },
            mask,
        ).unwrap();
        let objective = if rng.gen_bool(0.5) { Objective::Static } else { Objective::Dynamic };
        let mut cfg = ScenarioConfig::new(scenario.clone(), n_p, objective);
        cfg.terminal_policy = if every { TerminalPolicy::EveryWindow } else { TerminalPolicy::DayEnd };
        match run_day(&cfg) {
            Err(HorizonError::WindowInfeasible { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
            Ok(day) => {
                let r = evaluate_constraints(&day.schedule, &scenario.full_horizon());
                prop_assert!(r.max_residual <= 1e-6, "{:?}", r.worst());
                let ess = scenario.params().ess;
                for &soc in &day.schedule.soc_trajectory {
                    prop_assert!(soc >= ess.soc_min - 1e-9 && soc <= ess.soc_max + 1e-9);
                }
                for s in &day.schedule.steps {
                    prop_assert!(s.import() * s.export() <= 1e-12);
                    let (c, d) = storage_powers(s);
                    prop_assert!(c * d <= 1e-12);
                }
            }
        }
    }
}

/// Random modes, random flows that close both balances.
fn random_schedule(rng: &mut ChaCha8Rng, w: &dipps_core::domain::WindowData) -> DispatchSchedule {
    let n = w.steps();
    let mut sched = DispatchSchedule::idle(n, w.soc_start);
    let mut soc = w.soc_start;
    let gain = w.ess.charge_gain(w.dt_hours);
    let loss = w.ess.discharge_loss(w.dt_hours);
    for t in 0..n {
        let modes = Modes::from_bits(rng.gen_range(0..8));
        let on = |f: Flow| modes.gate(f);
        let mut s = DispatchStep::default();
        s.set_modes(modes);
        let (load, pv) = (w.load[t], w.pv[t]);
        let pv_l = pv.min(load) * rng.gen_range(0.0..=1.0);
        let spare = pv - pv_l;
        let share = match (on(Flow::PvToGrid), on(Flow::PvToEss)) {
            (true, true) => rng.gen_range(0.0..=1.0),
            (true, false) => 1.0,
            _ => 0.0,
        };
        s.p_pv_l = pv_l;
        s.p_pv_g = spare * share;
        s.p_pv_es = spare - s.p_pv_g;
        let rest = load - pv_l;
        let share = match (on(Flow::GridToLoad), on(Flow::EssToLoad)) {
            (true, true) => rng.gen_range(0.0..=1.0),
            (true, false) => 1.0,
            _ => 0.0,
        };
        s.p_g_l = rest * share;
        s.p_es_l = rest - s.p_g_l;
        if on(Flow::GridToEss) {
            s.p_g_es = rng.gen_range(0.0..=1.0) * w.ess.p_charge_max_kw;
        }
        if on(Flow::EssToGrid) {
            s.p_es_g = rng.gen_range(0.0..=1.0) * w.ess.p_discharge_max_kw;
        }
        let (c, d) = storage_powers(&s);
        soc += gain * c - loss * d;
        s.soc_next = soc;
        sched.steps[t] = s;
        sched.soc_trajectory[t + 1] = soc;
    }
    sched
}

proptest! {
    /// Profiles survive a CSV round trip bit for bit.
    #[test]
    fn profile_csv_round_trip_is_exact(values in prop::collection::vec(
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), 0.0..10.0f64],
        1..48,
    )) {
        let grid = TimeGrid::new(0, values.len());
        let p = PowerProfile::new(ProfileKind::Load, values.clone());
        let back = profile_from_csv(&profile_to_csv(&p, &grid), ProfileKind::Load).unwrap();
        prop_assert_eq!(back.values.len(), values.len());
        for (a, b) in back.values.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
