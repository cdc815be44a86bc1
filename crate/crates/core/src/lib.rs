//! Error terms of arithmetic summatory functions.
//!
//! The crate sieves five arithmetic functions, builds their main terms from
//! residues of the associated Dirichlet series, evaluates the error term
//! Δ(x) = Σ*_{n≤x} a_n − M(x) exactly, and measures its oscillations:
//! Lebesgue measures of threshold sets, moments, smoothed moments, and the
//! Mellin transform A(s) computed three independent ways.
//!
//! ```
//! use etlab_core::{build_main_term, sieve_table, ArithFnId, DeltaEvaluator, ZetaContext};
//!
//! let ctx = ZetaContext::new().unwrap();
//! let table = sieve_table(ArithFnId::Divisor, 100).unwrap();
//! let model = build_main_term(ArithFnId::Divisor, &ctx).unwrap();
//! let ev = DeltaEvaluator::new(&table, &model).unwrap();
//! assert!((ev.delta_at(2.5).unwrap() - 0.3232).abs() < 1e-4);
//! ```

// NaN-rejecting guards are written as `!(x >= lo)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod arith;
pub mod cache;
pub mod delta;
pub mod error;
pub mod main_term;
pub mod measure;
pub mod mellin;
pub mod numeric;
pub mod zeta;

pub use arith::{clustering_count, prefix_star, sieve_table, sieve_table_with, ArithFnId, SieveOptions, SieveTable};
pub use cache::{cache_roundtrip, read_header, read_table, write_table, CacheHeader};
pub use delta::{delta_at, scan_extrema, sign_changes, Crossing, CrossingList, DeltaEvaluator, Direction, Extrema};
pub use error::{Error, Result};
pub use main_term::{build_main_term, eval_main_term, residue_main_term, residue_main_term_sum, MainTermModel, Term};
pub use measure::{
    dyadic_growth, exponent_fit, moment, oscillation_measure, oscillation_measure_with_reference, residue_threshold,
    smoothed_second_moment, ExponentFit, MeasureReport, MomentResult, OscillationQuery, ReferenceCurve, Sign,
    SmoothedMomentQuery, SmoothedMomentResult,
};
pub use mellin::{
    contour_a, contour_a_many, contour_integral, default_kappa, mellin_closed_form, mellin_truncated,
    mellin_truncated_many, perron_estimate, perron_estimate_many, Contour, ContourSpec, MellinPoint, Method,
    PerronResult,
};
pub use zeta::{dirichlet_value, zeta, zeta_prime, DirichletSeriesId, ZetaContext};

/// Complex numbers used throughout the public API.
pub use num_complex::Complex64;
