//! The guide in `book/src`, one module per chapter so that `cargo test`
//! runs every snippet as a doc-test.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}
#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}
#[doc = include_str!("../../../book/src/besov.md")]
pub mod besov {}
#[doc = include_str!("../../../book/src/parametrix.md")]
pub mod parametrix {}
#[doc = include_str!("../../../book/src/cauchy.md")]
pub mod cauchy {}
#[doc = include_str!("../../../book/src/envelopes.md")]
pub mod envelopes {}
#[doc = include_str!("../../../book/src/monte_carlo.md")]
pub mod monte_carlo {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
