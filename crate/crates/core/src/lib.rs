//! Bound-entangled states, entanglement witnesses and indecomposable
//! positive maps built from unextendible product bases.
//!
//! The guide in `book/` walks through the pipeline; its code blocks run as
//! doctests of this crate.

pub mod epsilon;
pub mod error;
pub mod linalg;
pub mod posmap;
pub mod seesaw;
pub mod states;
pub mod upb;
pub mod witness;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/product_bases.md")]
    mod product_bases {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/epsilon.md")]
    mod epsilon {}
    #[doc = include_str!("../../../book/src/witnesses.md")]
    mod witnesses {}
    #[doc = include_str!("../../../book/src/positive_maps.md")]
    mod positive_maps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
}
