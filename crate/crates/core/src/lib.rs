//! Lifelong learning from heterogeneous demonstrations.
//!
//! This crate implements a full learning-from-demonstration pipeline around
//! three ideas:
//!
//! - **Policy mixtures**: a new demonstration is first explained as a convex
//!   combination of actions sampled from previously learned prototype
//!   policies, found by black-box search over the probability simplex that
//!   minimizes a k-nearest-neighbor estimate of the KL divergence between
//!   state marginals.
//! - **Adversarial reward decomposition**: when a mixture is not good enough,
//!   a new prototype is trained adversarially, with the discriminator reward
//!   split into a shared task head and per-strategy heads that are distilled
//!   by an L2 regularizer.
//! - **Between-class discrimination**: a loss tying the exponentiated
//!   discounted strategy returns of mixture demonstrations to the mixture
//!   weights times the pure demonstration's value, which forces strategy
//!   reward heads to discriminate between behavior styles.
//!
//! Everything is built on a tiny dense network ([`nn`]) with exact
//! reverse-mode gradients, two deterministic fixed-horizon environments
//! ([`env`]), and scripted heterogeneous demonstrators ([`demo`]). The
//! [`lifelong`] module runs the sequential mixture-vs-new-strategy
//! controller and [`metrics`] computes all evaluation quantities.
//!
//! All randomness flows through seed derivation in [`rng`]; given a config
//! and seeds, every run is bit-reproducible regardless of thread count.

pub mod config;
pub mod demo;
pub mod divergence;
pub mod env;
pub mod policy;
pub mod error;
pub mod lifelong;
pub mod metrics;
pub mod mixture;
pub mod nn;
pub mod plot;
pub mod report;
pub mod reward;
pub mod rng;
pub mod runner;
pub mod trajectory;

pub use error::{Error, Result};
