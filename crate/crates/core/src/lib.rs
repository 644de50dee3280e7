//! Exact and approximate null distributions of the two-sample
//! Kolmogorov–Smirnov statistic `D_{m,n} = sup |F_m − G_n|`, with tools to
//! check the two-sample DKWM inequality `Pr(KS_{m,n} >= M) <= 2e^{−2M²}`.
//!
//! - [`combinatorics`]: exact binomials, log-space helpers.
//! - [`lattice`]: inside / outside / enumeration p-values for any `(m, n)`.
//! - [`equal_sample`]: the `m = n` closed form and the margin `δ_n`.
//! - [`approximations`]: DKWM bound, `β(M)`, the plug-in `S_pli`.
//! - [`scan`]: `r_max` searches and the table generators.

pub mod approximations;
pub mod combinatorics;
pub mod equal_sample;
mod error;
pub mod exec;
pub mod lattice;
pub mod scan;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use lattice::{Method, PValue, Policy, Precision, SamplePair, StatisticValue};
