//! Numerical laboratory for metric uniform distribution modulo one.

pub mod discrepancy;
pub mod error;
pub mod expr;
pub mod ext;
pub mod fit;
pub mod lab;
pub mod oscillatory;
pub mod plot;
pub mod precision;
pub mod real;
pub mod reduce;
pub mod scatter;
pub mod seeding;
pub mod sequences;
pub mod weyl;

pub use error::{Error, Result};
pub use expr::{parse_expr, Expr, TaylorJet};
pub use real::Real;

/// Double-precision instantiations of the generic numerics.
pub type Jet = TaylorJet<f64>;
pub type Discrepancy = discrepancy::Discrepancy<f64>;
pub type OscillatoryEstimate = oscillatory::OscillatoryEstimate<f64>;
pub type CesaroAverages = weyl::CesaroAverages<f64>;
