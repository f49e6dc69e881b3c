//! The guide's chapters, compiled so their code blocks run as doctests.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/reservoirs.md")]
pub mod reservoirs {}
#[doc = include_str!("../../book/src/conceptors.md")]
pub mod conceptors {}
#[doc = include_str!("../../book/src/diagonal.md")]
pub mod diagonal {}
#[doc = include_str!("../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../book/src/morphing.md")]
pub mod morphing {}
#[doc = include_str!("../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
