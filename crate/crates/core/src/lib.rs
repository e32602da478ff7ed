//! Prime periodic orbit catalogs for hyperbolic flows and the truncated zeta
//! machinery evaluated on them.
//!
//! Catalogs come from three model families ([`orbits::toral`],
//! [`orbits::sft`], [`orbits::fuchsian`]). [`zeta::ZetaEngine`] expands a catalog
//! into orbit instances and evaluates Ruelle and Selberg sums, dynamical
//! determinants, mock determinants and flat traces. [`resonance`] and
//! [`counting`] consume those sums.

pub mod counting;
pub mod error;
pub mod io;
pub mod linalg;
pub mod orbits;
pub mod resonance;
pub mod sum;
pub mod zeta;

pub use counting::{
    chebyshev_functions, counting_report, entropy_estimate, lattice_step, li, pgt_error_fit, prime_counting,
    ChebyshevTable, CountingReport, EntropyEstimate, PgtFit, PgtRow, PrimeCount,
};
pub use error::{Error, Result};
pub use io::{read_catalog, read_catalog_file, write_catalog, write_catalog_file};
pub use linalg::{
    det_one_minus, exterior_trace, exterior_traces, orientation_sign, ExteriorTraceVector, Scalar, Sign, SmallMatrix,
};
pub use num_complex::Complex64;
pub use orbits::fuchsian::{bolza_group, fuchsian_catalog, punctured_torus_group, FuchsianGroup};
pub use orbits::modular::modular_torus_catalog;
pub use orbits::roof::{RoofFunction, TrigTerm};
pub use orbits::sft::{sft_catalog, Adjacency, Cocycle};
pub use orbits::toral::{toral_periodic_points, toral_suspension_catalog, IntMatrix2, RationalPoint};
pub use orbits::{
    catalog_validate, Dimensions, OrbitCatalog, OrbitInstance, PrimeOrbit, SourceDescriptor, SourceKind,
    ValidationReport,
};
pub use resonance::{
    feasible_moment_order, leading_resonance, newton_refine, winding_count, AnalyticFunction, DeterminantEvaluator,
    MockEvaluator, Rectangle, ResonanceEstimate,
};
pub use zeta::{chi_ell, MockPolynomial, TruncationPolicy, ZetaEngine};
