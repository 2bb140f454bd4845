//! Frame-based tensor calculus for almost complex manifolds with Norden
//! metric: classification, complex connections, curvature operators and
//! conformal changes, all in the left-invariant reduction.

pub mod cli;
pub mod conformal;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod example;
pub mod manifold;
pub mod manifold_file;
pub mod norden;
pub mod report;
pub mod tensor;

pub use error::{NordenError, Result};
pub use manifold::FrameManifold;
pub use report::{CheckRecord, Verdict, VerificationReport};
pub use tensor::{Slot, Tensor, Tolerance};
