//! Spectral volume (SV) solvers for 1D/2D hyperbolic conservation laws with a
//! jump-driven modal damping term that suppresses spurious oscillations near
//! discontinuities while keeping high-order accuracy in smooth regions.
//!
//! The crate is organised along the solver pipeline:
//! - [`geometry`]: structured SV meshes, control-volume layouts, quadrature
//! - [`basis`]: modal Legendre reconstruction from control-volume averages
//! - [`physics`]: governing equations (linear advection, compressible Euler)
//! - [`numflux`]: interface fluxes (smooth, local Lax-Friedrichs, HLLC)
//! - [`damping`]: per-element damping coefficients from vertex jumps
//! - [`timeint`]: explicit Runge-Kutta integrators and CFL control
//! - [`solver`]: residual assembly, boundary conditions, time marching
//! - [`analysis`]: error norms, convergence orders, exact Riemann solutions
//! - [`config`]: run configuration files and initial-condition presets

pub mod analysis;
pub mod basis;
pub mod config;
pub mod damping;
pub mod geometry;
pub mod legendre;
pub mod numflux;
pub mod physics;
pub mod solver;
pub mod timeint;

pub use basis::{Discretization1, Discretization2, ModalField1, ModalField2, SolutionState};
pub use config::RunConfig;
pub use damping::DampingField;
pub use geometry::{CvFamily, CvLayout, Mesh1D, Mesh2D, QuadratureRule};
pub use numflux::FluxKind;
pub use physics::{ConservationLaw, EulerPrim};
pub use solver::{run, BcSide, RunOutput, StepDiag};
pub use timeint::{Integrator, StepControl};
