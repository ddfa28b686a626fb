//! Runs the code blocks of the book as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
mod models {}
#[doc = include_str!("../../../book/src/taxonomy.md")]
mod taxonomy {}
#[doc = include_str!("../../../book/src/patching.md")]
mod patching {}
#[doc = include_str!("../../../book/src/journal.md")]
mod journal {}
#[doc = include_str!("../../../book/src/ontology.md")]
mod ontology {}
#[doc = include_str!("../../../book/src/formats.md")]
mod formats {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
#[doc = include_str!("../../../README.md")]
mod readme {}
