#![allow(dead_code)]

use dipps_core::domain::{AnchorKind, EfficiencyConvention, EssParams, SocAnchor, WindowData};
use dipps_core::lp::{LinearProgram, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed from `DIPPS_SEED`, or a fixed default.
pub fn seed() -> u64 {
    std::env::var("DIPPS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x5eed_d1bb)
}

pub fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed() ^ salt)
}

/// A random window of `steps` steps. About a third of them end at a fixed
/// SoC, a third at a SoC floor, the rest are free.
pub fn random_window(rng: &mut impl Rng, steps: usize) -> WindowData {
    let cap = rng.gen_range(4.0..15.0);
    let mut ess = EssParams::with_capacity(cap);
    if rng.gen_bool(0.3) {
        ess.convention = EfficiencyConvention::Physical;
    }
    ess.eta_c = rng.gen_range(0.85..1.0);
    ess.eta_d = rng.gen_range(0.85..1.0);
    let soc_start = rng.gen_range(ess.soc_min..ess.soc_max);
    let mut anchors = Vec::new();
    match rng.gen_range(0..3) {
        0 => anchors.push(SocAnchor {
            boundary: steps,
            kind: AnchorKind::Exactly,
            value: rng.gen_range(ess.soc_min..ess.soc_max),
        }),
        1 => anchors.push(SocAnchor {
            boundary: steps,
            kind: AnchorKind::AtLeast,
            value: rng.gen_range(ess.soc_min..ess.soc_max),
        }),
        _ => {}
    }
    let mut draw = |lo: f64, hi: f64, zero: f64| -> Vec<f64> {
        (0..steps)
            .map(|_| if rng.gen_bool(zero) { 0.0 } else { rng.gen_range(lo..hi) })
            .collect()
    };
    let load = draw(0.0, 4.0, 0.15);
    let pv = draw(0.0, 6.0, 0.35);
    let buy = draw(0.05, 0.4, 0.0);
    let sell: Vec<f64> = buy.iter().map(|b| b * rng.gen_range(0.0..1.0)).collect();
    WindowData {
        start: 0,
        dt_hours: if rng.gen_bool(0.2) { 0.5 } else { 1.0 },
        load,
        pv,
        buy,
        sell,
        mask: (0..steps).map(|_| rng.gen_bool(0.4)).collect(),
        bonus_weight: rng.gen_range(0.0..0.3),
        ess,
        grid_limit_kw: rng.gen_range(2.0..9.0),
        soc_start,
        anchors,
    }
}

/// Dense random LP that is feasible by construction (a random interior
/// point satisfies every row).
pub fn random_feasible_lp(rng: &mut impl Rng, rows: usize, cols: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let mut x0 = Vec::with_capacity(cols);
    for _ in 0..cols {
        let lo = rng.gen_range(-5.0..1.0);
        let hi = lo + rng.gen_range(0.5..8.0);
        lp.add_var(rng.gen_range(-3.0..3.0), lo, hi);
        x0.push(rng.gen_range(lo..hi));
    }
    for _ in 0..rows {
        let mut coeffs = Vec::new();
        for j in 0..cols {
            if rng.gen_bool(0.6) {
                coeffs.push((j, rng.gen_range(-4.0..4.0)));
            }
        }
        let lhs: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (rel, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Le, lhs + rng.gen_range(0.0..2.0)),
            1 => (Relation::Ge, lhs - rng.gen_range(0.0..2.0)),
            _ => (Relation::Eq, lhs),
        };
        lp.add_row(coeffs, rel, rhs);
    }
    lp
}

/// Lagrangian dual bound `bᵀy + Σ min(d_j l_j, d_j u_j)` with sign checks.
pub fn dual_bound(lp: &LinearProgram, y: &[f64]) -> Result<f64, String> {
    let mut d = lp.objective.clone();
    let mut by = 0.0;
    for (row, &yi) in lp.rows.iter().zip(y) {
        match row.relation {
            Relation::Le if yi > 1e-7 => return Err(format!("Le row dual {yi} must be ≤ 0")),
            Relation::Ge if yi < -1e-7 => return Err(format!("Ge row dual {yi} must be ≥ 0")),
            _ => {}
        }
        by += row.rhs * yi;
        for &(j, a) in &row.coeffs {
            d[j] -= a * yi;
        }
    }
    Ok(by
        + d.iter()
            .enumerate()
            .map(|(j, &dj)| if dj >= 0.0 { dj * lp.lower[j] } else { dj * lp.upper[j] })
            .sum::<f64>())
}

