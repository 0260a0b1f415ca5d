//! Numerical laboratory for mean-value identities of multiple sums over a
//! lattice and its dual.
//!
//! The crate is split into an exact layer and a floating-point layer:
//!
//! * [`intlin`] — arbitrary-precision integer/rational linear algebra
//!   (Smith/Hermite forms, primitivity, orbit canonicalization, the discrete
//!   bijections underlying the identities);
//! * [`weights`] — the weight `W(β)` attached to an integer pairing matrix,
//!   zeta products, and the closed-form congruence identity, all with
//!   explicit truncation tails;
//! * [`geom`] — real lattice geometry (duals, LLL, short-vector enumeration,
//!   the `SL_n` action and transporters), generic over the scalar type;
//! * [`ensembles`] — generators of (approximately) Haar-random covolume-one
//!   lattices;
//! * [`transforms`] — left-hand-side evaluators: Siegel transforms, multiple
//!   sums over `L` and `L*`, counting statistics, ensemble averaging;
//! * [`rhs`] — right-hand-side evaluators: explicit integrals, series
//!   assemblies, moment formulas;
//! * [`harness`] — experiment orchestration, configs, reports, persistence.
//!
//! Scalar-generic kernels are written over [`scalar::Real`] (`f32`/`f64`);
//! the concrete aliases below fix `f64` for the statistical layer.

pub mod error;
pub mod scalar;
pub mod mat;

pub mod intlin;
pub mod weights;

pub mod special;
pub mod quad;
pub mod geom;

pub mod ensembles;
pub mod transforms;
pub mod rhs;
pub mod harness;

pub use error::Error;

/// Exact integer matrix (arbitrary precision).
pub type IntMat = mat::Mat<num_bigint::BigInt>;
/// Exact rational matrix, entries kept in lowest terms.
pub type RatMat = mat::Mat<num_rational::BigRational>;
/// Real matrix over the default scalar.
pub type RealMat = mat::Mat<f64>;
/// Lattice over the default scalar.
pub type Lattice = geom::Lattice<f64>;
/// Tuple point over the default scalar.
pub type TuplePoint = geom::TuplePoint<f64>;

pub type Result<T> = std::result::Result<T, Error>;
