//! The book's code listings, compiled and run by `cargo test --doc`.
//!
//! mdbook cannot build listings that depend on a crate, so each chapter is
//! pulled in as the doc comment of an empty module instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/nonlinearities.md")]
pub mod nonlinearities {}
#[doc = include_str!("../../../book/src/kernels-and-forcing.md")]
pub mod kernels_and_forcing {}
#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}
#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}
#[doc = include_str!("../../../book/src/comparison.md")]
pub mod comparison {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
