//! Best-bound branch-and-bound over binary columns.
//!
//! Every node keeps its solved simplex tableau; a child clones it, fixes
//! one binary and re-solves with the dual simplex, usually in a handful of
//! pivots. Nodes are processed in batches of `workers`: the batch is
//! evaluated in parallel and merged in node order, so a fixed worker count
//! always gives the same answer.

use crate::linearize::MilpProblem;
use crate::lp::{LinearProgram, LpError, LpStatus, Reopt, Simplex};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    /// Seconds.
    pub wall_time: f64,
    pub nodes_explored: usize,
    pub lp_iterations: usize,
    pub lps_solved: usize,
    pub objective: f64,
    /// `(incumbent − best bound) / max(1, |incumbent|)` at termination.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    /// Absolute optimality gap.
    pub gap: f64,
    pub node_limit: usize,
    pub workers: usize,
    pub int_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            node_limit: 1_000_000,
            workers: 1,
            int_tol: 1e-6,
        }
    }
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("node limit reached after {0} nodes")]
    NodeLimitExceeded(usize),
    #[error("invalid option: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Incumbents must improve by more than this.
const IMPROVE_TOL: f64 = 1e-9;

struct Node {
    bound: f64,
    id: u64,
    simplex: Arc<Simplex>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the lowest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

enum Child {
    Pruned,
    Integral(f64, Vec<f64>),
    Open(f64, Simplex),
}

fn most_fractional(values: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut pick = None;
    let mut best = f64::INFINITY;
    for &j in binaries {
        let v = values[j];
        let frac = v - v.floor();
        if frac <= tol || frac >= 1.0 - tol {
            continue;
        }
        let dist = (frac - 0.5).abs();
        if dist < best {
            best = dist;
            pick = Some(j);
        }
    }
    pick
}

fn evaluate_child(
    parent: &Simplex,
    var: usize,
    value: f64,
    cutoff: Option<f64>,
    binaries: &[usize],
    tol: f64,
) -> Result<(Child, usize), LpError> {
    let mut s = parent.clone();
    let before = s.iterations();
    s.set_bounds(var, value, value);
    let outcome = s.reoptimize(cutoff)?;
    let iters = s.iterations() - before;
    let child = match outcome {
        Reopt::Infeasible | Reopt::CutOff => Child::Pruned,
        Reopt::Optimal => {
            if cutoff.is_some_and(|c| s.objective() >= c) {
                Child::Pruned
            } else if most_fractional(s.values(), binaries, tol).is_none() {
                Child::Integral(s.objective(), s.values().to_vec())
            } else {
                Child::Open(s.objective(), s)
            }
        }
    };
    Ok((child, iters))
}

/// Minimizes `lp` with the listed columns restricted to {0, 1}.
pub fn solve_binary_program(
    lp: &LinearProgram,
    binaries: &[usize],
    options: &MilpOptions,
) -> Result<(Vec<f64>, SolveStats), MilpError> {
    let started = Instant::now();
    if options.workers == 0 || !(options.gap >= 0.0) {
        return Err(MilpError::InvalidOptions("workers >= 1 and gap >= 0".into()));
    }
    let mut lp = lp.clone();
    for &j in binaries {
        lp.lower[j] = lp.lower[j].max(0.0).ceil();
        lp.upper[j] = lp.upper[j].min(1.0).floor();
    }
    let mut root = Simplex::new(&lp)?;
    let status = root.solve()?;
    let mut stats = SolveStats {
        nodes_explored: 1,
        lps_solved: 1,
        lp_iterations: root.iterations(),
        ..Default::default()
    };
    match status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(MilpError::Infeasible),
        LpStatus::Unbounded => return Err(MilpError::Unbounded),
    }

    let tol = options.int_tol;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    if most_fractional(root.values(), binaries, tol).is_none() {
        incumbent = Some((root.objective(), root.values().to_vec()));
    } else {
        heap.push(Node {
            bound: root.objective(),
            id: next_id,
            simplex: Arc::new(root),
        });
        next_id += 1;
    }

    let pool = if options.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.workers)
                .build()
                .map_err(|e| MilpError::InvalidOptions(e.to_string()))?,
        )
    } else {
        None
    };

    let mut final_bound = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
    loop {
        let cutoff = incumbent.as_ref().map(|(v, _)| v - options.gap);
        let mut batch = Vec::with_capacity(options.workers);
        while batch.len() < options.workers {
            match heap.pop() {
                Some(node) if cutoff.map_or(true, |c| node.bound < c) => batch.push(node),
                Some(node) => {
                    heap.push(node);
                    break;
                }
                None => break,
            }
        }
        if batch.is_empty() {
            if let Some(node) = heap.peek() {
                final_bound = node.bound;
            }
            break;
        }
        if stats.nodes_explored + 2 * batch.len() > options.node_limit {
            return Err(MilpError::NodeLimitExceeded(stats.nodes_explored));
        }

        let tasks: Vec<(Arc<Simplex>, usize, f64)> = batch
            .iter()
            .flat_map(|node| {
                let var = most_fractional(node.simplex.values(), binaries, tol)
                    .expect("open nodes are fractional");
                [(node.simplex.clone(), var, 0.0), (node.simplex.clone(), var, 1.0)]
            })
            .collect();
        drop(batch);
        let run = |(s, var, value): &(Arc<Simplex>, usize, f64)| {
            evaluate_child(s, *var, *value, cutoff, binaries, tol)
        };
        let results: Vec<Result<(Child, usize), LpError>> = match &pool {
            Some(p) => p.install(|| tasks.par_iter().map(run).collect()),
            None => tasks.iter().map(run).collect(),
        };
        drop(tasks);

        for r in results {
            let (child, iters) = r?;
            stats.nodes_explored += 1;
            stats.lps_solved += 1;
            stats.lp_iterations += iters;
            match child {
                Child::Pruned => {}
                Child::Integral(obj, values) => {
                    if incumbent.as_ref().map_or(true, |(v, _)| obj < v - IMPROVE_TOL) {
                        incumbent = Some((obj, values));
                    }
                }
                Child::Open(obj, simplex) => {
                    heap.push(Node {
                        bound: obj,
                        id: next_id,
                        simplex: Arc::new(simplex),
                    });
                    next_id += 1;
                }
            }
        }
    }

    let (objective, values) = incumbent.ok_or(MilpError::Infeasible)?;
    let bound = final_bound.min(objective);
    stats.objective = objective;
    stats.gap = (objective - bound).max(0.0) / objective.abs().max(1.0);
    stats.wall_time = started.elapsed().as_secs_f64();
    Ok((values, stats))
}

/// Solves a lifted scheduling MILP.
pub fn solve_milp(problem: &MilpProblem, options: &MilpOptions) -> Result<(Vec<f64>, SolveStats), MilpError> {
    solve_binary_program(&problem.lp, &problem.binaries, options)
}
