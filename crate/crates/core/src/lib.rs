//! Planarly branched rough paths over the Hopf algebra of planar forests.
//!
//! The crate is organised bottom-up:
//!
//! - [`forest`]: decorated planar trees and forests, enumeration, text keys
//! - [`hopf`]: shuffle, left admissible cut coproduct, ★ and pairings with exact coefficients
//! - [`algebra`]: dense indexed truncated algebra used by the numerics
//! - [`rough_path`]: lifts of synthetic drivers, evaluation, bracket extension
//! - [`jet`], [`function`]: truncated Taylor arithmetic and smooth test maps
//! - [`controlled`]: controlled paths, compositions, remainders
//! - [`calculus`]: rough and Young integrals, `f_τ`, the step-N Euler scheme
//! - [`ito`]: numerical verification of the four Itô formulas
//! - [`io`]: CSV dumps

pub mod algebra;
pub mod calculus;
pub mod controlled;
pub mod driver;
pub mod error;
pub mod forest;
pub mod function;
pub mod hopf;
pub mod io;
pub mod ito;
pub mod jet;
pub mod rough_path;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use forest::{Letter, PlanarForest, PlanarTree};
pub use scalar::Real;

/// Exact rational coefficients for structural computations.
pub type Rational = num_rational::Ratio<i64>;

pub type RoughPath64 = rough_path::RoughPath<f64>;
pub type RoughPath32 = rough_path::RoughPath<f32>;
pub type ControlledPath64 = controlled::ControlledPath<f64>;
pub type ControlledPath32 = controlled::ControlledPath<f32>;
pub type DriverSpec64 = driver::DriverSpec<f64>;
pub type ExactSeries = hopf::Series<Rational>;
pub type IntSeries = hopf::Series<i64>;
