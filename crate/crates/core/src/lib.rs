//! Spectral stability of trade-cost metrics and N-country trade equilibria.
//!
//! A friction metric `M` on `n` countries generates freeness matrices
//! `Φ_t = (t^{m_ij})`. The metric is Mossay–Tabuchi stable when every `Φ_t`
//! with `0 < t < 1` is positive semi-definite, which happens exactly when `M`
//! is conditionally negative semi-definite, i.e. of negative type.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod freeness;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod scenario;
pub mod spectral;

pub use equilibrium::{Economy, Equilibrium, EquilibriumKind};
pub use freeness::FreenessMatrix;
pub use metric::{MetricMatrix, WeightedGraph};
pub use scenario::{MetricSpec, Scenario, StabilityGrid};
pub use spectral::{StabilityOptions, StabilityResult};
