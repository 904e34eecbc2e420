//! Displacement Hessians of the two confined flows, applied exactly to
//! polynomials.
//!
//! `H_E` is the Hessian of the generalized entropy at the Barenblatt
//! profile (the linearized confined porous-medium flow):
//!
//! ```text
//! H_E psi = -(m-1)/2 (1-|x|^2) lap(psi) + x.grad(psi)    (m > 1)
//! H_E psi = -lap(psi) + x.grad(psi)                      (m = 1, Ornstein-Uhlenbeck)
//! ```
//!
//! `H_I`, the Hessian of the generalized Fisher information (the
//! linearized confined fourth-order flow), is the rational combination
//!
//! ```text
//! H_I = (H_E^2 + N(m-1) H_E) / (1 + N(m-1)).
//! ```
//!
//! Both preserve the space of polynomials and never raise the total
//! degree, which is what makes exact eigen-verification possible.

use thiserror::Error;

use crate::poly::MultiPoly;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OperatorError {
    #[error("diffusion exponent m must be >= 1, got {m}")]
    ExponentBelowOne { m: String },
    #[error("polynomial dimension {poly_dim} does not match requested dimension {n_dim}")]
    DimensionMismatch { poly_dim: usize, n_dim: u32 },
}

fn validate<T: Scalar>(p: &MultiPoly<T>, m: &T, n_dim: u32) -> Result<(), OperatorError> {
    if *m < T::one() {
        return Err(OperatorError::ExponentBelowOne { m: m.to_string() });
    }
    if p.dim() != n_dim as usize {
        return Err(OperatorError::DimensionMismatch {
            poly_dim: p.dim(),
            n_dim,
        });
    }
    Ok(())
}

/// Applies the porous-medium displacement Hessian `H_E`.
pub fn apply_entropy_hessian<T: Scalar>(
    p: &MultiPoly<T>,
    m: &T,
    n_dim: u32,
) -> Result<MultiPoly<T>, OperatorError> {
    validate(p, m, n_dim)?;
    let dim = p.dim();
    let lap = p.laplacian();
    let drift = p.euler_grad();
    if m.is_one() {
        return Ok(drift.sub(&lap));
    }
    // -(m-1)/2 (1-|x|^2) lap + x.grad
    let half = T::ratio(1, 2);
    let coeff = -(m.clone() - T::one()) * half;
    let bowl = MultiPoly::one(dim).sub(&MultiPoly::radius_sq(dim));
    Ok(bowl.mul(&lap).scale(&coeff).add(&drift))
}

/// Applies the fourth-order displacement Hessian `H_I` by composing
/// `H_E` twice and forming the rational combination.
pub fn apply_information_hessian<T: Scalar>(
    p: &MultiPoly<T>,
    m: &T,
    n_dim: u32,
) -> Result<MultiPoly<T>, OperatorError> {
    let he = apply_entropy_hessian(p, m, n_dim)?;
    let he2 = apply_entropy_hessian(&he, m, n_dim)?;
    let a = T::from_u32(n_dim).expect("dimension fits scalar") * (m.clone() - T::one());
    let denom = T::one() + a.clone();
    Ok(he2.add(&he.scale(&a)).scale(&(T::one() / denom)))
}
