//! Knot energies of O'Hara type, their Monte-Carlo and polygonal
//! discretizations, and the `TL^q` transport metric on the circle `R/LZ`.
//!
//! The crate is organised by layer:
//!
//! - [`curve`]: closed curves, polygons, arc-length reparametrization and
//!   the intrinsic (shorter-arc) distance.
//! - [`sampling`]: densities on the circle, deterministic i.i.d. sampling,
//!   empirical CDF statistics and quantile transportation maps.
//! - [`energy`]: continuum, weighted and random O'Hara energies, the
//!   Kim–Kusner, Simon and cosine polygon energies, and the
//!   Sobolev–Slobodeckij finiteness check.
//! - [`transport`]: discrete and continuum `TL^q` elements, exact optimal
//!   couplings, brute-force oracles, circular `W_1` and map-based bounds.
//! - [`experiments`]: reproducible experiment drivers emitting CSV rows.
//!
//! Everything numeric is a pure function of its inputs. Pair sums run in
//! parallel over rows but are reduced in a fixed order, so results do not
//! depend on the number of threads.

#![forbid(unsafe_code)]

pub mod curve;
pub mod energy;
pub mod experiments;
pub mod numeric;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod transport;

pub use curve::{intrinsic_distance, ClosedCurve, CurveError, CurveKind, CurveSpec, Polygon};
pub use energy::{EnergyError, EnergyParams, EnergyReport};
pub use sampling::{Density, DensitySpec, SampleSet, SamplingError, TransportMap};
pub use transport::{ContinuumElement, CouplingMatrix, DiscreteElement, TransportError};
