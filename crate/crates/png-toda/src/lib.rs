//! Exact transition probabilities of the polynuclear growth (PNG) Markov
//! process from general upper-semicontinuous initial data, computed as
//! Fredholm determinants of random-walk hit kernels, together with Monte
//! Carlo cross-validation and numerical verification of the integrable
//! structure carried by those determinants (2D Toda, discrete Painleve II,
//! Ablowitz-Ladik, Toeplitz/Hankel closed forms).

pub mod closedforms;
pub mod error;
pub mod fredholm;
pub mod height;
pub mod hit;
pub mod integrable;
pub mod kernel;
pub mod par;
pub mod simulate;
pub mod walk;

pub use error::{Error, Result};
pub use height::{Height, HeightFunction, ProfileSpec};
