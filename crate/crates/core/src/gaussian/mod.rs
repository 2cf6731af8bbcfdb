//! Gaussian states of the closed probe-plus-chain system and their exact evolution.

mod propagate;
mod rk4;
mod state;

pub use propagate::{evolve, propagator, ModalEvolver, NormalModes, Quadrature, SymplecticMap};
pub use rk4::rk4_reference;
pub use state::{
    chain_ground_state, initial_composite_state, reduce, squeezed_vacuum_local, symplectic_form,
    two_mode_squeezed_vacuum, uncertainty_min_eigenvalue, GaussianState, ProbeState, Squeezing,
};
