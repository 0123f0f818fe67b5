//! Breuil modules with tame descent data: residue fields, truncated power series, Galois
//! cohomology of tame towers, rank one and rank two classification, and admissibility tests.

pub mod admissible;
pub mod breuil;
pub mod cohom;
pub mod error;
pub mod exactlin;
pub mod ext4;
pub mod faults;
pub mod gfq;
pub mod rank1;
pub mod rank2;
pub mod upoly;

pub use error::{Error, Result};
pub use gfq::{Field, Fq};
pub use upoly::{GroupElem, TameTower, TruncPoly, TruncRing};
