//! Compiles every Rust snippet of the guide in `book/src` as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/surfaces.md")]
pub mod surfaces {}

#[doc = include_str!("../../../book/src/metric.md")]
pub mod metric {}

#[doc = include_str!("../../../book/src/diffeomorphisms.md")]
pub mod diffeomorphisms {}

#[doc = include_str!("../../../book/src/geodesics.md")]
pub mod geodesics {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
