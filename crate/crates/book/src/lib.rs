//! The chapters of the guide under `book/src`, included here so that
//! `cargo test` compiles and runs every Rust snippet in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/depth.md")]
pub mod depth {}

#[doc = include_str!("../../../book/src/transport.md")]
pub mod transport {}

#[doc = include_str!("../../../book/src/quantiles.md")]
pub mod quantiles {}

#[doc = include_str!("../../../book/src/breakdown.md")]
pub mod breakdown {}

#[doc = include_str!("../../../book/src/reference.md")]
pub mod reference {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
