//! Simplicial finite element complexes.
//!
//! The crate assembles the discrete de Rham complexes (Lagrange, edge, face
//! and discontinuous families in 2D, the Whitney quartet in 3D) and the
//! lowest-order Arnold–Winther mixed elasticity element on triangle and
//! tetrahedron meshes. On top of that sit exactness and commuting-diagram
//! audits, inf-sup monitors and a set of reproducible eigenvalue and
//! convergence experiments.
//!
//! Cell loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise.

pub mod complex;
pub mod elasticity;
pub mod elements;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod spaces;

pub use error::{Error, Result};

/// Convenient re-exports.
pub mod prelude {
    pub use crate::complex::{ComplexReport, DiscreteComplex};
    pub use crate::elements::{ElementFamily, FamilyKind};
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{DenseMatrix, SparseMatrix, Spectrum};
    pub use crate::mesh::{Mesh, Pattern};
    pub use crate::par::Execution;
    pub use crate::spaces::{BoundaryCondition, DiscreteSpace, Op};
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
