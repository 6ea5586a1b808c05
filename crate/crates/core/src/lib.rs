//! Risk-averse generation, transmission and storage expansion planning.
//!
//! This crate builds and solves the deterministic equivalent of a two-stage
//! stochastic linear program for electricity markets. First-stage decisions
//! are capacity investments (generation, cross-border transfer capacity,
//! pumped storage); second-stage decisions are per-scenario dispatch
//! (generation, trade, pumping, load shedding). The objective blends the
//! expected second-stage operating cost with its conditional value at risk
//! through a weight `omega`, so the same model covers risk-neutral and
//! strongly risk-averse planners.
//!
//! The crate is organised along the pipeline:
//!
//! * [`domain`] -- problem data: sets, technologies, nodes, interconnectors,
//!   scenarios and settings, plus instance validation.
//! * [`finance`] -- annuities, discount factors and marginal cost composition.
//! * [`scenario`] -- construction of the scenario set by inter- and
//!   extrapolation of three anchor scenarios.
//! * [`demand`] -- stepwise load-shedding merit orders from sectoral shares
//!   and values of lack of adequacy.
//! * [`model`] -- assembly of the deterministic-equivalent LP and extraction
//!   of solutions.
//! * [`solve`] -- a bounded-variable revised simplex solver and an
//!   MPS-compatible interchange format for external solvers.
//! * [`report`] -- ex-post cost metrics, CVaR tail identification, sweeps
//!   over risk-aversion levels and flexibility settings, CSV rendering.
//!
//! Everything here is pure computation over `alloc` containers; file and
//! process handling live in the companion CLI crate. The crate builds
//! without the standard library (`--no-default-features`); the `std` feature
//! only adds wall-clock timing to solver reports.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod demand;
pub mod domain;
pub mod finance;
pub mod model;
pub mod report;
pub mod scenario;
pub mod solve;

pub use domain::{
    FinanceSettings, FlexibilitySettings, Interconnector, Node, PlanningInstance, RiskSettings,
    Scenario, Technology,
};
pub use model::{LinearProgram, PlanModel, PlanSolution, VarKey, VariableCatalog};
pub use solve::{SolveOptions, SolveReport, SolveStatus};
