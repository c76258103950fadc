//! Modular grammar definitions with externally attached metadata.
//!
//! The pipeline is: parse grammar units ([`syntax::parse_grammar`]), flatten
//! imports and templates ([`template::resolve`]), weave aspects onto the
//! result ([`aspect::apply`]) and hand the annotated grammar to a back end
//! ([`antlr::generate`], [`builder::generate_builders`]).

pub mod antlr;
pub mod aspect;
pub mod builder;
pub mod cli;
pub mod metadata;
pub mod model;
pub mod query;
pub mod span;
pub mod syntax;
pub mod template;
