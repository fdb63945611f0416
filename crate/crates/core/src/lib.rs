//! Decision problems, Groves/Clarke taxes and reduced tax schemes for the
//! mechanisms played by the distributed simulator.
//!
//! Everything is generic over [`Scalar`]. [`Real`] is the floating point
//! instantiation, [`Exact`] the rational one used for golden values.

pub mod catalog;
pub mod error;
pub mod mechanisms;
pub mod scalar;
pub mod tax_scheme;

pub use catalog::{Decision, Mechanism, Outcome, TypeReport};
pub use error::MechanismError;
pub use mechanisms::buy_path::{Edge, Network};
pub use mechanisms::groves::{clarke_pivot, groves_tax, vcg_tax, DecisionProblem, TaxVector};
pub use mechanisms::single_minded::IntervalBid;
pub use scalar::Scalar;
pub use tax_scheme::{apply_scheme, reduce_tax_scheme, Balances, Payee, TaxScheme, Transfer};

pub type Real = f64;
pub type Exact = num_rational::Ratio<i64>;
