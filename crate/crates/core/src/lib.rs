//! Finite-scale machinery for games and abstract economies with private
//! information: distributions of correspondences, measurable selections,
//! purification, pure-strategy Nash search, and fixed-point equilibrium search
//! for abstract economies with countable action sets truncated to finite
//! supports.

pub mod correspondence;
pub mod dsl;
pub mod economy;
pub mod error;
pub mod game;
pub mod hull;
pub mod measure;
pub mod selection;

pub use correspondence::{ActionSet, Correspondence, MetricGrid};
pub use error::{Error, Result};
pub use measure::{Distribution, FiniteProbSpace, Labels, ProductSpace};
