//! Runs the code samples of the guide as doctests.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/grammars.md")]
pub mod grammars {}
#[doc = include_str!("../../../book/src/templates.md")]
pub mod templates {}
#[doc = include_str!("../../../book/src/metadata.md")]
pub mod metadata {}
#[doc = include_str!("../../../book/src/queries.md")]
pub mod queries {}
#[doc = include_str!("../../../book/src/aspects.md")]
pub mod aspects {}
#[doc = include_str!("../../../book/src/antlr.md")]
pub mod antlr {}
#[doc = include_str!("../../../book/src/builders.md")]
pub mod builders {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
