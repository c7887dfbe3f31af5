//! Exactly solvable potentials for the position-dependent-mass Schrodinger
//! equation, built through an so(2,1) potential algebra.
//!
//! The library constructs mass-deformed Scarf II, Morse and generalized
//! Poschl-Teller potentials, evaluates their closed-form bound states
//! chi_n / psi_n with energies E_n = -(k - n - 1/2)^2, and cross-validates
//! every claim along three independent routes:
//!
//! * a flux-conservative finite-difference eigensolver for
//!   H = -d/dx (1/M) d/dx + V_eff (module [`solver`]);
//! * the algebraic identities tying F, G, the potential layers and the
//!   ambiguity parameters together (module [`algebra`]);
//! * a first-order intertwining operator whose Riccati condition and
//!   spectral-shift property close the loop (module [`intertwining`]).
//!
//! The spectrum depends on the representation label k alone; deforming the
//! mass profile reshapes the potentials and wavefunctions while leaving
//! every level in place. The [`solver`] module verifies that numerically.

pub mod algebra;
pub mod error;
pub mod grid;
pub mod intertwining;
pub mod mass_profile;
pub mod solver;
pub mod wavefunctions;

pub use algebra::{
    AlgebraRealization, AmbiguityParams, ConstraintResiduals, PotentialModel, RealizationClass,
    Sign,
};
pub use error::{CoreError, Result};
pub use grid::GridFunction;
pub use intertwining::{build_intertwiner, riccati_residual, verify_intertwining, Branch,
    IntertwinerSolution};
pub use mass_profile::{MassGrids, MassProfile};
pub use solver::{
    discretize, discretize_realization, solver_domain, verify_spectrum, DiscretizedHamiltonian,
    SpectrumReport,
};
pub use wavefunctions::{
    casimir_residual, chain, chain_member, chi0, ladder_apply, EigenstateChain, LadderDirection,
};
