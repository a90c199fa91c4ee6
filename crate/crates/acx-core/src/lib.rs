//! Numerical toolkit for almost complex manifolds: structures and Levi
//! forms, J-holomorphic discs, Kobayashi-Royden estimates, cotangent lifts
//! and boundary scaling.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod math;
mod error;
pub use error::{Error, Result};
pub mod poly;
pub mod field;
pub mod linalg;
pub mod structure;
pub mod disc;
pub mod fixtures;
pub mod kobayashi;
pub mod maps;
pub mod cotangent;
pub mod scaling;
