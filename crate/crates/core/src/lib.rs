//! Operator calculus on the circle: truncated quantization, star products,
//! Fourier integral operators, regularized traces, and the symbolic Weyl
//! algebra with its canonical lifted derivations — plus the Čech-winding
//! evaluation of the topological index.

pub mod exact;
pub mod fio;
pub mod jets;
pub mod lift;
pub mod operators;
pub mod series;
pub mod star;
pub mod symbols;
pub mod weyl;

pub use exact::GaussRational;
pub use series::{extrapolate_laurent, extrapolate_series, FormalSeries, HbarLadder};
pub use weyl::{Monomial, WeylElement, WeylVar};
