//! Numerical machinery for the Peetre K-functional K(f, δ; L_q, W_p^ψ) with
//! 0 < p < 1: trigonometric polynomials and their quasi-norms, homogeneous
//! Fourier multipliers, de la Vallée Poussin type kernels, trigonometric and
//! band-limited quadrature, and a constructive search that certifies
//! K(f, δ) < ε by building an explicit smooth competitor g.

pub mod bandlimited;
pub mod collapse;
pub mod error;
pub mod fft;
pub mod quadrature;
mod serde_exponent;
pub mod symbols;
pub mod torus;

pub use error::{Error, Leg, Result};
pub use symbols::{CutoffProfile, HomogeneousSymbol, Multiplier};
pub use torus::{ExponentPair, GridSignal, TrigPoly};
