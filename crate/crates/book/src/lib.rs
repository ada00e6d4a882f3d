//! Guide chapters compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/imu.md")]
pub mod imu {}

#[doc = include_str!("../../../book/src/fusion.md")]
pub mod fusion {}

#[doc = include_str!("../../../book/src/pluecker.md")]
pub mod pluecker {}

#[doc = include_str!("../../../book/src/curation.md")]
pub mod curation {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
