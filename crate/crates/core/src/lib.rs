//! Exact optimal transport between finitely supported measures.
//!
//! The crate solves the discrete Kantorovich problem by network simplex and
//! certifies the result through dual potentials and c-cyclical
//! monotonicity. On top of the exact solver it provides
//!
//! * the increasing rearrangement for one-dimensional problems,
//! * selection of a distinguished optimal plan for distance costs by
//!   solving strictly convex perturbations `||x - y||^(1 + eps)` (and the
//!   crystalline ternary perturbation) and following them as `eps -> 0`,
//!   checked against an exact two-stage linear program,
//! * transport densities on a 2-D grid computed from exact segment/cell
//!   intersection lengths,
//! * the p-Laplacian route to the transport density and the Kantorovich
//!   potential for large `p`.
//!
//! Every routine is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the tolerances are tuned for.

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod kantorovich;
pub mod linprog;
pub mod measures;
pub mod one_dim;
pub mod optimality;
pub mod pde;
pub mod scalar;
pub mod selection;
pub mod transport_density;

pub use error::{OtError, Result, SolveError};
pub use scalar::Scalar;

pub use kantorovich::{brute_force_optimum, duality_gap, duality_gap_for, solve_kantorovich};
pub use measures::{eval_cost, make_measure, plan_cost};
pub use one_dim::monotone_rearrangement;
pub use optimality::{check_cyclical_monotonicity, check_quadratic_monotone_support, is_graph};
pub use pde::{evans_gangbo_limit, rasterize_signed_measure, solve_p_laplacian};
pub use selection::{
    exact_secondary_oracle, secondary_entropy, select_crystalline, select_monge_plan, solve_perturbed,
};
pub use transport_density::{segment_cell_lengths, transport_density_field};

pub type Measure = measures::DiscreteMeasure<f64>;
pub type Cost = measures::CostSpec<f64>;
pub type Norm = measures::Norm<f64>;
pub type Plan = measures::TransportPlan<f64>;
pub type Map = measures::MongeMap<f64>;
pub type Potentials = kantorovich::DualPotentials<f64>;
pub type Report = kantorovich::SolveReport<f64>;
pub type Monotonicity = optimality::MonotonicityReport<f64>;
pub type Selection = selection::SelectionReport<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::GridField<f64>;
pub type PdeProblem = pde::PdeProblem<f64>;
pub type EgReport = pde::EgReport<f64>;

pub type MeasureF32 = measures::DiscreteMeasure<f32>;
pub type PlanF32 = measures::TransportPlan<f32>;
