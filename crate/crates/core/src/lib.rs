//! Mountain-pass solutions of forced second-order Hamiltonian systems
//! `q'' - grad K(t, q) + grad W(t, q) = f(t)` on growing periodic windows.
//!
//! The pipeline is: audit a potential ([`potential`]), discretize the action
//! on a 2k-periodic grid ([`trajectory`], [`action`]), locate a
//! mountain-pass critical point and polish it with Newton ([`mpa`]), then
//! repeat for increasing `k` and check convergence ([`continuation`]).

pub mod action;
pub mod continuation;
pub mod error;
pub mod linalg;
pub mod mpa;
pub mod potential;
pub mod trajectory;

pub use action::{ActionContext, GeometryConstants};
pub use error::{Error, Result};
pub use potential::{builtin_example, PotentialSpec};
pub use trajectory::{TimeGrid, Trajectory};
