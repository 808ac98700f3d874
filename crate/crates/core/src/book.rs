//! Compiles the guide's snippets as doctests.

#[doc = include_str!("../../../book/src/intro.md")]
pub struct Intro;

#[doc = include_str!("../../../book/src/tensors.md")]
pub struct Tensors;

#[doc = include_str!("../../../book/src/decomposition.md")]
pub struct Decomposition;

#[doc = include_str!("../../../book/src/sut.md")]
pub struct Sut;

#[doc = include_str!("../../../book/src/hout.md")]
pub struct Hout;

#[doc = include_str!("../../../book/src/experiments.md")]
pub struct Experiments;

#[doc = include_str!("../../../book/src/cli.md")]
pub struct Cli;
