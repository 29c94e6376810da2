//! Symmetric tensor decompositions whose points lie on a prescribed algebraic variety.

pub mod border;
pub mod decomposer;
pub mod error;
pub mod genpoly;
pub mod io;
pub mod linalg;
pub mod multiindex;
pub mod poly;
pub mod scalar;
pub mod tensor;
pub mod vandermonde;
pub mod variety;

pub use error::{Error, Result};
pub use multiindex::MultiIndex;
pub use poly::{ParamPoly, Poly};
pub use scalar::{Field, Ring};
pub use tensor::{Decomposition, NormKind, SymTensor};

pub use num_complex::Complex64 as C64;
pub use num_rational::BigRational as Q;

pub type Tensor64 = SymTensor<C64>;
pub type QTensor = SymTensor<Q>;
pub type RealTensor = SymTensor<f64>;
pub type Poly64 = Poly<C64>;
pub type QPoly = Poly<Q>;
