//! Labelled rooted trees, their Grossman-Larson and Connes-Kreimer Hopf
//! algebras, branched rough paths and Davie-type solvers for rough
//! differential equations.
//!
//! The guide under `book/` walks through each module; its snippets run as
//! doc-tests.

pub mod cli;
pub mod hopf;
pub mod poly;
pub mod rde;
pub mod roughpath;
pub mod series;
pub mod text;
pub mod tree;
pub mod verify;
pub mod words;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub struct Intro;
    #[doc = include_str!("../../../book/src/trees.md")]
    pub struct Trees;
    #[doc = include_str!("../../../book/src/hopf.md")]
    pub struct Hopf;
    #[doc = include_str!("../../../book/src/words.md")]
    pub struct Words;
    #[doc = include_str!("../../../book/src/rough-paths.md")]
    pub struct RoughPaths;
    #[doc = include_str!("../../../book/src/rde.md")]
    pub struct Rde;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
