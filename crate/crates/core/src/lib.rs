//! Exact combinatorics of largeness, translates and product sets on free
//! groups, lattices and the dyadic affine group.
//!
//! The crate is organized in layers:
//!
//! * [`group`] — element arithmetic (reduced words, lattice vectors, affine
//!   maps) and canonical enumeration of spheres and balls.
//! * [`measure`] — exact rational probability measures, convolution and the
//!   radial (sphere-averaged) fast path.
//! * [`boundary`] — the space of infinite reduced words: clopen cylinder
//!   unions, the hitting measure of the simple random walk, translation and
//!   Radon–Nikodym bookkeeping.
//! * [`sets`] — symbolic subsets of a group, density profiles along
//!   averaging families, and product sets within a window.
//! * [`largeness`] — certified checks of the six largeness notions
//!   (thick/syndetic/piecewise syndetic and their left variants).
//! * [`constructions`] — the named constructions: saturation search,
//!   vanishing-translate shrinkers, positive-measure closed sets with empty
//!   interior, and the composite examples built from them.
//! * [`walk`] — seeded simulation of random walks and their boundary
//!   statistics, with exact cross-checks.
//! * [`verify`] — certificate replay along independent code paths.
//! * [`parse`] — the textual grammars for words, boundary points, cylinder
//!   unions and set expressions.
//!
//! All measure-theoretic quantities are exact `BigRational`s; floating point
//! appears only in Monte Carlo summaries and in report rendering.

pub mod boundary;
pub mod constructions;
pub mod error;
pub mod group;
pub mod largeness;
pub mod measure;
pub mod parse;
pub mod sets;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use group::{
    Alphabet, GroupElement, Letter, Model, ReducedWord, ball, ball_iter, sphere, sphere_iter,
};
