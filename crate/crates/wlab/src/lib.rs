//! Numerical laboratory for diffusion with conductances: discrete
//! measure-weighted Sobolev calculus on the torus, generalized elliptic and
//! parabolic solvers, stochastic homogenization experiments on random
//! coefficient fields, and an exclusion particle system whose empirical
//! density is checked against the limiting nonlinear diffusion equation.
//!
//! The crate is organized around the conductance profile ([`WSpec`]): a
//! strictly increasing periodic function per axis whose jumps act as
//! membranes. Grid calculus ([`grid`]), solvers ([`elliptic`], [`parabolic`]),
//! random environments ([`env`]) and the particle system ([`exclusion`]) all
//! consume it. The [`runner`] module executes declarative experiment configs
//! and writes reproducible CSV/JSON artifacts; `src/bin/wlab.rs` is a thin
//! CLI over it.

pub mod conductance;
pub mod config;
pub mod dense;
pub mod elliptic;
pub mod env;
pub mod exclusion;
pub mod fenwick;
pub mod grid;
pub mod io;
pub mod manufactured;
pub mod parabolic;
pub mod runner;
pub mod solver;
pub mod testfns;

pub use conductance::{AxisProfile, Jump, WSpec};
pub use grid::{DiagonalField, GridFunction};
