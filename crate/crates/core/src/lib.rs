//! Separating favors from information in committee promotion decisions.
//!
//! Connected candidates may be promoted more often because juries favor
//! them (a shift of the promotion threshold) or because connected jurors
//! know more about them (a larger variance of the grade around what the
//! econometrician observes). Both enter a heteroscedastic probit
//!
//! ```text
//! P(promoted) = Φ[(xβ + B(n_S, n_W, x) − a_e) / (σ_v(x)·σ(n_S, n_W, x))]
//! ```
//!
//! where `n_S, n_W` count strong and weak ties to the jury. The crate
//! simulates such data, fits the model, tests nested variants and splits
//! the effect of a connection into its favor and information parts.

pub mod cli;
pub mod config;
pub mod counterfactual;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod normal;
pub mod optimizer;
pub mod report;
pub mod sim;
pub mod spec;
