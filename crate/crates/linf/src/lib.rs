//! Exact computations with weight-truncated L∞ algebras over the rationals.
//!
//! An L∞ algebra on a finite graded space `V` is stored as a square-zero
//! derivation `m` of degree +1 of the free graded-commutative algebra
//! `ŜΣ⁻¹V*`, truncated at a weight cap. Everything else in the crate is
//! built on top of that representation: Chevalley–Eilenberg complexes as
//! derivation complexes, Maurer–Cartan elements and twisting, extensions,
//! deformations over nilpotent bases, and free Lie models.
//!
//! All arithmetic is exact (`num::BigRational`). Internally every grading is
//! cohomological; homological input is converted with `V_i = V^{-i}`.
//!
//! The guide in `book/` is compiled into the [`guide`] module so that its
//! snippets run as doc-tests.

pub mod ce;
pub mod cli;
pub mod cup_def;
pub mod exact_linalg;
pub mod extensions;
pub mod graded_core;
pub mod lie_models;
pub mod linfty;
pub mod symalg;

/// Exact rational scalar used everywhere.
pub type Q = num::BigRational;

/// Integer as a rational.
pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// `n/d` as a rational.
pub fn frac(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Upper bound on enumerated basis sizes, read from `LINFTY_MAX_DIM`.
pub fn max_dim() -> usize {
    std::env::var("LINFTY_MAX_DIM")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000)
}

pub mod guide {
    //! The user guide, compiled so that its examples stay correct.

    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    pub mod conventions {}
    #[doc = include_str!("../../../book/src/representing_algebras.md")]
    pub mod representing_algebras {}
    #[doc = include_str!("../../../book/src/ce_complexes.md")]
    pub mod ce_complexes {}
    #[doc = include_str!("../../../book/src/extensions.md")]
    pub mod extensions {}
    #[doc = include_str!("../../../book/src/deformations.md")]
    pub mod deformations {}
    #[doc = include_str!("../../../book/src/lie_models.md")]
    pub mod lie_models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
