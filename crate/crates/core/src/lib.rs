//! Predictive power scheduling for a PV + battery microgrid.
//!
//! The dispatch model is a mixed-integer program whose nonlinearity comes
//! only from products of mode binaries with bounded power flows. Those
//! products are lifted exactly into linear envelope constraints, the
//! resulting MILP is solved by branch-and-bound on top of a bounded-variable
//! simplex, and a receding-horizon driver rolls the window across the day.
//!
//! Module map:
//! - [`domain`]: scenario types and validation.
//! - [`nonlinear`]: the original bilinear model, residuals, cost and the
//!   brute-force enumeration solver used as oracle.
//! - [`linearize`]: the lifted MILP builder and schedule recovery.
//! - [`lp`]: dense bounded-variable simplex.
//! - [`milp`]: best-bound branch-and-bound.
//! - [`horizon`]: receding-horizon day runs and window sweeps.
//! - [`data`]: CSV ingestion, resampling, synthetic PV/tariff, demo data.
//! - [`report`]: report assembly and CSV/JSON output.

pub mod data;
pub mod domain;
pub mod horizon;
pub mod linearize;
pub mod lp;
pub mod milp;
pub mod nonlinear;
pub mod report;
