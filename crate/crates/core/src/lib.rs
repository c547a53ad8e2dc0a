//! Twisted coverings, topological correspondences and Cartan subalgebras,
//! computed on finite Čech models.
//!
//! A space is a finite graph with a good open cover. Coverings, line bundles
//! and correspondences are presented by group-valued transition systems over
//! the cover; the operator-algebraic side (compact operators, left actions,
//! Cartan subalgebras) lives in fiberwise matrix algebras indexed by the base
//! vertices. The [`gallery`] module ships the worked examples over S¹, S²,
//! ℝP², the interval and the square.

pub mod linalg;
pub mod space;
pub mod group;
pub mod cocycle;
pub mod bundle;
pub mod cohomology;
pub mod correspondence;
pub mod atlas;
pub mod cartan;
pub mod reconstruct;
pub mod gallery;
pub mod textio;

mod par;

pub use linalg::Tolerances;
