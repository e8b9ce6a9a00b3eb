//! Boundary geometry and weighted `∂̄` identities for domains in `C^n` given
//! by polynomial defining functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`wirtinger`]: exact polynomial algebra in `z` and `z̄`;
//! * [`hermitian`]: small dense Hermitian linear algebra;
//! * [`domain`]: gradients, Levi forms, boundary sampling, signed distance;
//! * [`upsilon`]: Hermitian matrix fields `Υ` used by the weak `Z(q)` test;
//! * [`certify`]: weak `Z(q)` reports, growth evidence, homogenization;
//! * [`forms`]: `(0,q)`-forms, `∂̄`, its weighted adjoint and quadrature.

pub mod builtins;
pub mod certify;
pub mod domain;
pub mod forms;
pub mod hermitian;
pub mod upsilon;
pub mod wirtinger;

pub use num_complex::Complex64 as C64;
