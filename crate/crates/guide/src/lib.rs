//! The guide under `book/`, compiled so its snippets run with `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/measures.md")]
pub mod measures {}

#[doc = include_str!("../../../book/src/geodesic.md")]
pub mod geodesic {}

#[doc = include_str!("../../../book/src/null-models.md")]
pub mod null_models {}

#[doc = include_str!("../../../book/src/block-models.md")]
pub mod block_models {}

#[doc = include_str!("../../../book/src/scaling-fits.md")]
pub mod scaling_fits {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
