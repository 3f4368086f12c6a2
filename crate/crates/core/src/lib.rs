//! Causal information rate-distortion for finite-alphabet Markov sources.
//!
//! The crate computes causal realizations by a backward recursion over
//! tilting potentials followed by a forward construction of the kernels
//! `f(y_k | x_{k-κ+1}^k, y_1^{k-1})`, iterated to a fixed point in the output
//! law. A brute-force [`oracle`] and an exact conditional mutual information
//! [`structure`] checker validate the results on small instances.

pub mod budget;
pub mod distortion;
pub mod error;
pub mod joint;
pub mod logspace;
pub mod oracle;
pub mod recursion;
pub mod solver;
pub mod source;
pub mod structure;

pub use distortion::{expected_distortion, DistortionDoc, DistortionSpec};
pub use error::{IrdfError, Result};
pub use joint::JointRealization;
pub use oracle::{exhaustive_grid, oracle_descent, OracleOptions};
pub use recursion::{
    backward_pass, forward_kernels, kernels_for, stationarity_residual, CausalKernelSet, OutputLaw,
    PotentialSet,
};
pub use solver::{
    induced_joint, rate_of, solve_fixed_point, sweep, update_output_law, FixedPoint, SolverOptions,
    SolverReport, SweepOptions,
};
pub use source::{Alphabet, SourceModel, SourceModelDoc};
pub use structure::{
    check_causality, conditional_mutual_information, smallest_window, CmiReport, DEFAULT_THRESHOLD,
};
