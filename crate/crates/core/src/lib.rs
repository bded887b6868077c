//! Construction and certification of continuous approximate selections for
//! Hausdorff-continuous set-valued mappings on compact geometric domains.
//!
//! The pipeline builds, in order:
//!
//! 1. a tower of open covers of the domain whose elements carry inflated
//!    shape approximations of the mapping's values ([`cover_tower`]),
//! 2. pairwise-disjoint refinement families obtained by barycentric-star
//!    coloring of a fine subdivision ([`disjoint_refine`]),
//! 3. the level-oriented nerve of those families ([`nerve`]),
//! 4. a continuous map on the nerve realization glued from per-vertex
//!    contractions ([`homotopy`]),
//! 5. the composed selection `f = h ∘ g` together with a sampled
//!    certificate that `dist(f(x), φ(x)) < ε(x)` everywhere ([`pipeline`]).
//!
//! Every stage re-checks the inequalities it is responsible for; a selection
//! is only returned with a clean audit.

pub mod config;
pub mod cover_tower;
pub mod disjoint_refine;
pub mod error;
pub mod geometry;
pub mod homotopy;
pub mod mapping;
pub mod nerve;
pub mod pipeline;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use geometry::{BaryPoint, DomainComplex, InflatedShape, Point, Shape};
pub use mapping::{Contraction, SetValuedMap, UvWitness};
pub use pipeline::{Scenario, SelectionResult, Variant};
