//! Space-time modal verification tools for the scalar wave equation
//! `u_tt - Δu = f` on box domains with homogeneous initial and Dirichlet data.
//!
//! Fields are finite expansions in Dirichlet Laplace eigenfunctions with
//! temporal coefficients in the exact class of trigonometric polynomials, so
//! every space-time norm is a finite sum of closed-form integrals.
//!
//! * [`eigenbasis`]: eigenpairs of boxes, Weyl constants.
//! * [`timefun`]: exact calculus of `t^p sin/cos(a t)` sums.
//! * [`oracle`]: exact solution operator, wave operator and Bochner norms.
//! * [`counterexample`]: the graph-space element whose second time derivative
//!   is not square integrable, with closed-form temporal norms.
//! * [`lsq`]: conforming least-squares solver minimizing `||□u_h - f||`.
//! * [`dualnorm`]: dual norms over the `H^{1,1}` test space and the growing
//!   stability ratio of the `H^1` formulation.
//! * [`cli`]: batch runner behind the `wavegraph` binary.

pub mod cli;
pub mod counterexample;
pub mod dualnorm;
pub mod eigenbasis;
mod error;
mod gram;
pub mod lsq;
pub mod oracle;
pub mod par;
pub mod suite;
pub mod timefun;

pub use error::{Error, Result};
pub use par::Exec;
