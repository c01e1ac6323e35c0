//! Laplace-Dirichlet rule-based fiber generation for ventricles and atria,
//! plus a monodomain electrophysiology solver to compare the resulting
//! fiber fields through activation maps.

pub mod atrial;
pub mod ep;
pub mod error;
pub mod fem;
pub mod frame;
pub mod laplace;
pub mod mesh;
pub mod metrics;
pub mod ventricular;

pub use error::{Error, Result};
pub use frame::{Frame, FrameField};
pub use laplace::{DirichletSpec, ScalarField, VectorField};
pub use mesh::Mesh;
