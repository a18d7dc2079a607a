//! Wachspress generalized barycentric coordinates on simple convex polytopes.
//!
//! The crate evaluates the coordinates and their exact mixed partial
//! derivatives of arbitrary order, computes the certified a-priori bounds for
//! those derivatives, measures the shape quantities that control them, and
//! ships the polygon/mesh generators and scaling studies used to probe the
//! bounds numerically in 2D.
//!
//! ```
//! use wachspress::{Polytope, WachspressBasis, MultiIndex};
//!
//! let square = Polytope::from_vertices_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
//! let basis = WachspressBasis::new(&square);
//! let phi = basis.phi_all(&[0.5, 0.5]);
//! assert!(phi.iter().all(|p| (p - 0.25).abs() < 1e-15));
//! let dxy = basis.d_phi_at(0, &MultiIndex::new(vec![1, 1]), &[0.3, 0.7]);
//! assert!((dxy - 1.0).abs() < 1e-12);
//! ```

mod dd;
pub mod error;
pub mod experiments;
pub mod multiindex;
pub mod polygen;
pub mod polytope;
pub mod wachspress;

pub use error::{Error, Result};
pub use experiments::sampling::SampleGrid;
pub use multiindex::{FdbTerm, GradedIndexSet, MultiIndex};
pub use polygen::{PolyMesh, RngStream};
pub use polytope::{Facet, Polytope, ShapeReport, Thresholds};
pub use wachspress::{BoundBreakdown, WachspressBasis};
