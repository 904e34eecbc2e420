//! Spectral toolkit for the confined fourth-order diffusion family
//! (thin film at `m = 3/2`, DLSS/quantum drift-diffusion at `m = 1`) built
//! on its relation to the confined porous-medium flow.
//!
//! The library has an exact symbolic layer and a floating-point numeric
//! layer:
//!
//! * [`poly`] — sparse multivariate polynomials over any field scalar
//!   (exact rationals or floats), with the differential operators needed
//!   to apply the displacement Hessians symbolically.
//! * [`operators`] — the porous-medium displacement Hessian `H_E` and the
//!   fourth-order displacement Hessian `H_I`, applied exactly to
//!   polynomials.
//! * [`spectrum`] — closed-form eigenvalues `lambda`/`mu`, multiplicities,
//!   Hermite/hypergeometric eigenfunction constructors, eigenvalue
//!   crossings, and spectrum tables.
//! * [`profile`] — Barenblatt profiles, entropy densities, scaling
//!   constants, and the self-similar/confined change of variables.
//! * [`quadrature`] — Gauss rules weighted by the Barenblatt profile, the
//!   `H` inner product, Gram matrices, boundary-flux and Poincare checks.
//! * [`functionals`] — generalized entropy and Fisher information, the
//!   metric norm of the entropy gradient, and the entropy-information
//!   relation as a numerical identity.
//! * [`evolve`] — a 1D finite-volume harness for the confined
//!   porous-medium and fourth-order flows with Wasserstein decay-rate
//!   extraction.
//!
//! The symbolic layer is generic over the coefficient scalar through
//! [`scalar::Scalar`]; concrete aliases for the two working types live at
//! the crate root.
//!
//! ```
//! use dhspec_core::operators::{apply_entropy_hessian, apply_information_hessian};
//! use dhspec_core::spectrum::{eigenfunction, lambda_eig, mu_eig, EigenIndex};
//! use dhspec_core::rat;
//!
//! // The dilation mode at m = 2 in two dimensions is 1 - 2|x|^2 with
//! // eigenvalues lambda = 4 and mu = 8; both identities hold exactly.
//! let m = rat(2, 1);
//! let psi = eigenfunction(&EigenIndex { l: 0, n: 1, k: 1 }, &m, 2).unwrap();
//! assert_eq!(psi.to_string(), "1 - 2*x2^2 - 2*x1^2");
//!
//! let lambda = lambda_eig(0, 1, &m, 2).unwrap();
//! let mu = mu_eig(0, 1, &m, 2).unwrap();
//! assert_eq!(apply_entropy_hessian(&psi, &m, 2).unwrap(), psi.scale(&lambda));
//! assert_eq!(apply_information_hessian(&psi, &m, 2).unwrap(), psi.scale(&mu));
//! assert_eq!(mu, rat(8, 1));
//! ```

pub mod evolve;
pub mod functionals;
pub mod operators;
pub mod poly;
pub mod profile;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;

pub use poly::MultiPoly;
pub use scalar::Scalar;

/// Exact arbitrary-precision rational scalar.
pub type Rat = num_rational::BigRational;

/// Polynomial with exact rational coefficients (the symbolic carrier).
pub type RatPoly = MultiPoly<Rat>;

/// Polynomial with `f64` coefficients (the quadrature-side carrier).
pub type FloatPoly = MultiPoly<f64>;

/// Convenience constructor for an exact rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}
