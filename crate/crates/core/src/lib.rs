//! Weighted least-squares identification of serial-manipulator geometric
//! and elastostatic parameters under heteroscedastic measurement noise.
//!
//! The pipeline is: describe the arm ([`kinematics`]), turn measurements
//! into a stacked linear system ([`regressor`]), estimate per-configuration
//! noise dispersions ([`noise`]), and solve with OLS, WLS or the iteratively
//! reweighted loop ([`estimator`]). [`simulator`] generates synthetic studies
//! with known ground truth, and [`io`] reads and writes the text formats.

pub mod error;
pub mod estimator;
pub mod io;
pub mod kinematics;
pub mod noise;
pub mod regressor;
pub mod simulator;

pub use error::{Error, Result};
pub use nalgebra;
pub use estimator::{
    confidence_intervals, irls, ols_estimate, optimal_weights, robust_weights, wls_estimate, EstimationResult,
    IrlsOptions, Method, WeightMatrix,
};
pub use kinematics::{forward_kinematics, joint_jacobian, parameter_jacobian, JointVector, ManipulatorModel, ParamId, Pose};
pub use noise::{build_sigma, estimate_dispersions, NoiseModel};
pub use regressor::{
    elastostatic_regressor, geometric_regressor, stack_system, ComplianceParameterMap, ExperimentRecord, Mode,
    StackedSystem, Wrench,
};
pub use simulator::{monte_carlo_compare, simulate_measurements, CompareOptions, CompareReport, StudyDesign};
