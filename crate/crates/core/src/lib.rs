//! Numerical toolkit for the randomly flashing ratchet model of Brownian motors.
//!
//! Attached particles (density `p`) feel a `1/k`-periodic potential `psi`,
//! detached ones (density `P`) diffuse freely; they switch state with rates
//! `eta` (detachment) and `nu` (attachment). The crate computes diffusive
//! means, the squeezing-ratchet fixed point, stationary and transient
//! solutions, and a particle-level Monte Carlo used as an independent check.

pub mod bvp;
pub mod diffusive_mean;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod particles;
pub mod presets;
pub mod squeeze;
pub mod stationary;
pub mod sweep;
pub mod transient;

pub use bvp::{green_function, solve_sl_neumann, SlOperator};
pub use diffusive_mean::{diffusive_mean, reflection_check, DiffusiveMeanResult};
pub use error::{RatchetError, Result};
pub use grid::{well_integrals, Grid, GridFn};
pub use linalg::{BandLu, BandMatrix, TridiagonalLu, TridiagonalSystem};
pub use model::{
    aligned_node_count, conjugate_eta, make_multi_peaked_rate, make_peaked_rate,
    make_smoothed_sawtooth, peaked_profile, Potential, RateProfile, RatchetParams,
};
pub use squeeze::{
    green_basis, perron_weights, perron_weights_from, shift_gap, squeeze_solution,
    transition_matrix, SqueezeSolution, TransitionMatrix,
};
pub use stationary::{
    renormalize, solve_collaborative, solve_stationary, transport_verdict, DensityPair,
    Direction, Normalization, RatchetOperator, TransportVerdict, WellMassReport,
};
pub use transient::{
    compare_directions, run_to_stationary, step_deterministic_flashing, step_random_flashing,
    DirectionComparison, FlashingSchedule, RelaxationRun, TransientState,
};
pub use particles::{
    compare_histogram, simulate_particles, HistogramComparison, Occupancy, ParticleEnsemble,
    ParticleRun,
};
pub use sweep::{run_sweep, SweepLattice, SweepPoint, SweepResult};
