//! Certified approximation of tensor spectral and nuclear norms.
//!
//! ```
//! # fn main() -> tensornorm::Result<()> {
//! use tensornorm::generators::gen_orthogonal_test;
//! use tensornorm::nuclear::nuclear_norm_fptas;
//! use tensornorm::spectral::spectral_norm_fptas;
//! use tensornorm::ErrorMode;
//!
//! let (t, truth) = gen_orthogonal_test(4, 10, 10, 4, 7)?;
//! let s = spectral_norm_fptas(&t, 1e-3, ErrorMode::Relative, None)?;
//! assert!(s.certified && s.lower <= truth.max_weight() + 1e-12);
//! let (n, cert) = nuclear_norm_fptas(&t, 1e-2, ErrorMode::Relative, None)?;
//! assert!(n.lower <= truth.weight_sum() && truth.weight_sum() <= n.upper + 1e-9);
//! assert!(!cert.dual_decomposition.terms.is_empty());
//! # Ok(())
//! # }
//! ```

mod barrier;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod feasibility;
pub mod generators;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod nuclear;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use estimate::{ErrorMode, NormEstimate, Witness};
pub use exec::Exec;
pub use grid::{GridKind, GridSpec, ProductPointSet, UnitPointSet};
pub use tensor::{RankOneDecomposition, RankOneTerm, RankOneTermD, Tensor3, TensorD};
