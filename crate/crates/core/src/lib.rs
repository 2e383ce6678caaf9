// SPDX-License-Identifier: Apache-2.0

//! Maximum-entropy and minimum-cross-entropy distributions for belief
//! networks whose conditional constraints form directed cycles.
//!
//! The crate covers the whole pipeline:
//!
//! - [`model`]: constraint files, the directed belief network and the
//!   undirected neighbor system.
//! - [`dist`]: dense joint tables, residuals and independence checks.
//! - [`mce`]: the exact dual solver and the closed-form single-constraint
//!   updates (Jeffrey's rule and the conditional-constraint rule).
//! - [`graphops`]: cliques, acyclic hypergraphs, fill-in search and
//!   d-separation on cyclic graphs.
//! - [`consistency`]: global and decomposition-local consistency checks.
//! - [`engine`]: successive updating over a clique decomposition.
//! - [`cli`]: the `maxent-cycles` command line front end.

pub mod cli;
pub mod consistency;
pub mod dist;
pub mod engine;
pub mod graphops;
pub mod mce;
pub mod model;
