//! Closed-form spectrum of the displacement Hessians.
//!
//! Eigenvalues of the porous-medium Hessian `H_E` are
//!
//! ```text
//! lambda_{l,k} = l + 2k + 2k (k + l + N/2 - 1)(m - 1),
//! ```
//!
//! indexed over `(l, k)` in `N0 x N0 \ {(0,0)}` (with `l <= 1` when
//! `N = 1`), and they convert to eigenvalues of the fourth-order Hessian
//! `H_I` through
//!
//! ```text
//! mu_{l,k} = (lambda^2 + N(m-1) lambda) / (1 + N(m-1)).
//! ```
//!
//! Shared eigenfunctions are radial hypergeometric polynomials times solid
//! harmonics for `m > 1` and Hermite polynomials for `m = 1` (equivalently,
//! after regrouping by harmonic degree, confluent-hypergeometric radial
//! factors times the same harmonics). Multiplicity in the harmonic label is
//! `N_l`, the dimension of the degree-`l` spherical-harmonic space.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::MultiPoly;
use crate::scalar::Scalar;
use crate::{rat, Rat, RatPoly};

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("eigenvalue index (l={l}, k={k}) is invalid for N={n_dim}: {reason}")]
    InvalidIndex { l: u32, k: u32, n_dim: u32, reason: &'static str },
    #[error("harmonic label n={label} out of range 1..={count} for l={l}, N={n_dim}")]
    HarmonicLabelOutOfRange { label: u32, count: u64, l: u32, n_dim: u32 },
    #[error("explicit harmonic bases are only implemented for N <= 3, got N={0}")]
    UnsupportedDimension(u32),
    #[error("diffusion exponent m must be >= 1, got {m}")]
    ExponentBelowOne { m: String },
    #[error("hypergeometric parameter c={c} is a non-positive integer")]
    InvalidHypergeometricC { c: String },
    #[error("mu must be positive, got {0}")]
    NonpositiveMu(f64),
    #[error("dimension N must be >= 1")]
    ZeroDimension,
}

type Result<T> = std::result::Result<T, SpectrumError>;

/// Label of an eigenfunction: radial index `k`, harmonic degree `l`, and
/// harmonic label `n` in `1..=N_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenIndex {
    pub l: u32,
    pub n: u32,
    pub k: u32,
}

/// Validates an `(l, k)` pair against the index set of the spectrum.
pub fn validate_pair(l: u32, k: u32, n_dim: u32) -> Result<()> {
    if n_dim == 0 {
        return Err(SpectrumError::ZeroDimension);
    }
    if l == 0 && k == 0 {
        return Err(SpectrumError::InvalidIndex {
            l,
            k,
            n_dim,
            reason: "(0,0) is excluded (constants are quotiented out)",
        });
    }
    if n_dim == 1 && l > 1 {
        return Err(SpectrumError::InvalidIndex {
            l,
            k,
            n_dim,
            reason: "harmonic degree must be 0 or 1 in one dimension",
        });
    }
    Ok(())
}

fn validate_m<T: Scalar>(m: &T) -> Result<()> {
    if *m < T::one() {
        return Err(SpectrumError::ExponentBelowOne { m: m.to_string() });
    }
    Ok(())
}

/// Eigenvalue `lambda_{l,k}` of the porous-medium displacement Hessian.
pub fn lambda_eig<T: Scalar>(l: u32, k: u32, m: &T, n_dim: u32) -> Result<T> {
    validate_pair(l, k, n_dim)?;
    validate_m(m)?;
    let base = T::from_u32(l + 2 * k).expect("index fits scalar");
    // 2k (k + l + N/2 - 1)
    let inner = T::from_u32(k + l).expect("index fits scalar") + T::ratio(n_dim as i64, 2)
        - T::one();
    let slope = T::from_u32(2 * k).expect("index fits scalar") * inner;
    Ok(base + slope * (m.clone() - T::one()))
}

/// Eigenvalue `mu_{l,k}` of the fourth-order displacement Hessian.
pub fn mu_eig<T: Scalar>(l: u32, k: u32, m: &T, n_dim: u32) -> Result<T> {
    let lambda = lambda_eig(l, k, m, n_dim)?;
    let a = T::from_u32(n_dim).expect("dimension fits scalar") * (m.clone() - T::one());
    Ok((lambda.clone() * lambda.clone() + a.clone() * lambda) / (T::one() + a))
}

/// Dimension `N_l` of the space of spherical harmonics of degree `l`.
pub fn multiplicity(l: u32, n_dim: u32) -> Result<u64> {
    if n_dim == 0 {
        return Err(SpectrumError::ZeroDimension);
    }
    if l == 0 || (l == 1 && n_dim == 1) {
        return Ok(1);
    }
    if n_dim == 1 {
        return Err(SpectrumError::InvalidIndex {
            l,
            k: 0,
            n_dim,
            reason: "harmonic degree must be 0 or 1 in one dimension",
        });
    }
    // (N + l - 3)! (N + 2l - 2) / (l! (N-2)!)
    let factorial = |v: u64| -> BigInt { (1..=v).map(BigInt::from).product() };
    let num = factorial((n_dim as u64) + (l as u64) - 3) * BigInt::from(n_dim as u64 + 2 * l as u64 - 2);
    let den = factorial(l as u64) * factorial(n_dim as u64 - 2);
    let q = num / den;
    Ok(q.to_u64().expect("multiplicity fits u64"))
}

/// One-dimensional Hermite polynomial by the recursion
/// `h_0 = 1`, `h_{n+1}(z) = z h_n(z) - h_n'(z)`.
pub fn hermite_1d(n: u32) -> RatPoly {
    let z = RatPoly::var(1, 0);
    let mut h = RatPoly::one(1);
    for _ in 0..n {
        h = z.mul(&h).sub(&h.partial(0));
    }
    h
}

/// Product Hermite polynomial `h_alpha(x) = h_{a1}(x1) ... h_{aN}(xN)`,
/// an eigenfunction of the Ornstein-Uhlenbeck operator with eigenvalue
/// `|alpha|`.
pub fn hermite(alpha: &[u32]) -> RatPoly {
    let dim = alpha.len();
    assert!(dim >= 1, "empty multi-index");
    let mut out = RatPoly::one(dim);
    for (axis, &order) in alpha.iter().enumerate() {
        let z = RatPoly::var(dim, axis);
        let mut h = RatPoly::one(dim);
        for _ in 0..order {
            h = z.mul(&h).sub(&h.partial(axis));
        }
        out = out.mul(&h);
    }
    out
}

fn check_c(c: &Rat) -> Result<()> {
    if c.is_integer() && *c <= Rat::zero() {
        return Err(SpectrumError::InvalidHypergeometricC { c: c.to_string() });
    }
    Ok(())
}

/// Coefficient list (ascending in `z`) of the terminating hypergeometric
/// series `F(-k, b; c; z)`; the Pochhammer factor `(-k)_j` kills every
/// term beyond `j = k`.
pub fn hypergeom_poly(k: u32, b: &Rat, c: &Rat) -> Result<Vec<Rat>> {
    check_c(c)?;
    let mut coeffs = Vec::with_capacity(k as usize + 1);
    let mut term = Rat::one();
    coeffs.push(term.clone());
    for j in 0..k {
        let j = rat(j as i64, 1);
        // ratio of consecutive terms: (a+j)(b+j) / ((c+j)(j+1)) with a = -k
        let a_j = rat(-(k as i64), 1) + j.clone();
        term = term * a_j * (b + j.clone()) / ((c + j.clone()) * (j + Rat::one()));
        coeffs.push(term.clone());
    }
    Ok(coeffs)
}

/// Coefficient list of the terminating confluent series `F(-k; c; z)`
/// (Kummer), the `b -> infinity` limit of [`hypergeom_poly`] under
/// `z -> z/b`. Radial factors of the `m = 1` eigenfunctions.
pub fn kummer_poly(k: u32, c: &Rat) -> Result<Vec<Rat>> {
    check_c(c)?;
    let mut coeffs = Vec::with_capacity(k as usize + 1);
    let mut term = Rat::one();
    coeffs.push(term.clone());
    for j in 0..k {
        let j = rat(j as i64, 1);
        let a_j = rat(-(k as i64), 1) + j.clone();
        term = term * a_j / ((c + j.clone()) * (j + Rat::one()));
        coeffs.push(term.clone());
    }
    Ok(coeffs)
}

/// Real part of `(x1 + i x2)^s` expanded over the rationals.
fn circle_harmonic_re(s: u32, dim: usize) -> RatPoly {
    let mut out = RatPoly::zero(dim);
    for j in (0..=s).step_by(2) {
        let sign = if j % 4 == 0 { 1 } else { -1 };
        let c = rat(sign * num_integer::binomial(s as i64, j as i64), 1);
        let mut e = vec![0u32; dim];
        e[0] = s - j;
        e[1] = j;
        out = out.add(&MultiPoly::monomial(dim, &e, c));
    }
    out
}

/// Imaginary part of `(x1 + i x2)^s` expanded over the rationals.
fn circle_harmonic_im(s: u32, dim: usize) -> RatPoly {
    let mut out = RatPoly::zero(dim);
    for j in (1..=s).step_by(2) {
        let sign = if j % 4 == 1 { 1 } else { -1 };
        let c = rat(sign * num_integer::binomial(s as i64, j as i64), 1);
        let mut e = vec![0u32; dim];
        e[0] = s - j;
        e[1] = j;
        out = out.add(&MultiPoly::monomial(dim, &e, c));
    }
    out
}

/// Zonal factor of the 3D solid harmonics: a polynomial in `x3` and `r^2`
/// with rational coefficients,
/// `sum_k (-1)^k 2^{-l} C(l,k) C(2l-2k,l) (l-2k)!/(l-2k-s)! r^{2k} x3^{l-2k-s}`.
fn zonal_factor_3d(l: u32, s: u32) -> RatPoly {
    let factorial = |v: i64| -> BigInt { (1..=v).map(BigInt::from).product() };
    let r2 = RatPoly::radius_sq(3);
    let z = RatPoly::var(3, 2);
    let mut out = RatPoly::zero(3);
    let two_pow_l: BigInt = BigInt::from(2).pow(l);
    for k in 0..=(l - s) / 2 {
        let (l, s, k) = (l as i64, s as i64, k as i64);
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let num = sign
            * BigInt::from(num_integer::binomial(l, k))
            * BigInt::from(num_integer::binomial(2 * l - 2 * k, l))
            * factorial(l - 2 * k);
        let den = two_pow_l.clone() * factorial(l - 2 * k - s);
        let coeff = Rat::new(num, den);
        out = out.add(
            &r2.pow(k as u32)
                .mul(&z.pow((l - 2 * k - s) as u32))
                .scale(&coeff),
        );
    }
    out
}

/// Homogeneous harmonic polynomial of degree `l`, label `n` in
/// `1..=N_l`, normalized to unit graded-lex leading coefficient.
///
/// Basis convention: `N = 1` uses `{1, x}`; `N = 2` uses real and
/// imaginary parts of `(x1 + i x2)^l`; `N = 3` enumerates the real solid
/// harmonics by sectoral order `s = 0, 1, ..., l` (cosine then sine
/// component for `s >= 1`).
pub fn solid_harmonic(l: u32, n_label: u32, n_dim: u32) -> Result<RatPoly> {
    if n_dim == 0 {
        return Err(SpectrumError::ZeroDimension);
    }
    if n_dim > 3 {
        return Err(SpectrumError::UnsupportedDimension(n_dim));
    }
    let count = multiplicity(l, n_dim)?;
    if n_label == 0 || u64::from(n_label) > count {
        return Err(SpectrumError::HarmonicLabelOutOfRange {
            label: n_label,
            count,
            l,
            n_dim,
        });
    }
    let dim = n_dim as usize;
    let p = match (n_dim, l) {
        (_, 0) => RatPoly::one(dim),
        (1, 1) => RatPoly::var(dim, 0),
        (2, _) => {
            if n_label == 1 {
                circle_harmonic_re(l, dim)
            } else {
                circle_harmonic_im(l, dim)
            }
        }
        (3, _) => {
            // n = 1 -> s = 0; n = 2,3 -> s = 1 (cos, sin); n = 4,5 -> s = 2; ...
            let s = n_label / 2;
            let base = zonal_factor_3d(l, s);
            if s == 0 {
                base
            } else if n_label % 2 == 0 {
                base.mul(&circle_harmonic_re(s, dim))
            } else {
                base.mul(&circle_harmonic_im(s, dim))
            }
        }
        _ => unreachable!("validated above"),
    };
    Ok(p.monic())
}

/// Shared eigenfunction of `H_E` and `H_I` for the index `(l, n, k)`.
///
/// For `m > 1` this is
/// `F(-k, 1/(m-1) + l + N/2 - 1 + k; l + N/2; r^2) Y_{l,n}(x/|x|) |x|^l`;
/// for `m = 1` the radial factor degenerates to the confluent polynomial
/// `F(-k; l + N/2; r^2/2)`, which regroups the product Hermite basis by
/// harmonic degree. Total degree is `l + 2k` in both cases.
pub fn eigenfunction(idx: &EigenIndex, m: &Rat, n_dim: u32) -> Result<RatPoly> {
    validate_pair(idx.l, idx.k, n_dim)?;
    validate_m(m)?;
    let harmonic = solid_harmonic(idx.l, idx.n, n_dim)?;
    let dim = n_dim as usize;
    let c = rat(idx.l as i64, 1) + rat(n_dim as i64, 2);
    let radial_coeffs = if m.is_one() {
        let mut coeffs = kummer_poly(idx.k, &c)?;
        // substitute z = r^2/2
        let mut pow = Rat::one();
        for coeff in coeffs.iter_mut() {
            *coeff = coeff.clone() * pow.clone();
            pow *= rat(1, 2);
        }
        coeffs
    } else {
        let b = Rat::one() / (m - &Rat::one()) + rat(idx.l as i64, 1) + rat(n_dim as i64, 2)
            - Rat::one()
            + rat(idx.k as i64, 1);
        hypergeom_poly(idx.k, &b, &c)?
    };
    let r2 = RatPoly::radius_sq(dim);
    let mut radial = RatPoly::zero(dim);
    for (j, coeff) in radial_coeffs.iter().enumerate() {
        radial = radial.add(&r2.pow(j as u32).scale(coeff));
    }
    Ok(radial.mul(&harmonic))
}

/// Converts an `H_I` eigenvalue back to the generating `H_E` eigenvalue:
/// `eps = N(m-1)/2 + sqrt(mu (1 + N(m-1)) + (N(m-1)/2)^2)` and
/// `lambda = mu (1 + N(m-1)) / eps`.
pub fn mu_to_lambda(mu: f64, m: f64, n_dim: u32) -> Result<(f64, f64)> {
    if mu <= 0.0 {
        return Err(SpectrumError::NonpositiveMu(mu));
    }
    if m < 1.0 {
        return Err(SpectrumError::ExponentBelowOne { m: m.to_string() });
    }
    let a = n_dim as f64 * (m - 1.0);
    let half_a = a / 2.0;
    let eps = half_a + (mu * (1.0 + a) + half_a * half_a).sqrt();
    let lambda = mu * (1.0 + a) / eps;
    Ok((eps, lambda))
}

/// A root in the diffusion exponent `m`, exact when rational.
#[derive(Debug, Clone, PartialEq)]
pub enum MRoot {
    Exact(Rat),
    Approximate(f64),
}

impl MRoot {
    pub fn to_f64(&self) -> f64 {
        match self {
            MRoot::Exact(r) => r.to_f64().unwrap(),
            MRoot::Approximate(v) => *v,
        }
    }
}

/// Values of `m >= 1` where two eigenvalue branches of `H_I` cross.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossingSet {
    /// The branches coincide for every admissible `m`.
    AllM,
    /// Isolated crossings, sorted ascending (possibly empty).
    Points(Vec<MRoot>),
}

fn is_perfect_square(v: &BigInt) -> Option<BigInt> {
    if v.is_negative() {
        return None;
    }
    let root = v.sqrt();
    (&root * &root == *v).then_some(root)
}

/// Solves `mu_A(m) = mu_B(m)` over `m >= 1` by clearing the common
/// denominator `1 + a` (with `a = N(m-1)`) and root-finding the resulting
/// polynomial in `a` exactly; roots with irrational values fall back to
/// the closed-form radical evaluated in floating point.
pub fn crossings(pair_a: (u32, u32), pair_b: (u32, u32), n_dim: u32) -> Result<CrossingSet> {
    validate_pair(pair_a.0, pair_a.1, n_dim)?;
    validate_pair(pair_b.0, pair_b.1, n_dim)?;
    if pair_a == pair_b {
        return Ok(CrossingSet::AllM);
    }

    // lambda(a) = (l + 2k) + 2k (k + l + N/2 - 1)/N * a, a = N(m-1).
    let lambda_line = |(l, k): (u32, u32)| -> (Rat, Rat) {
        let c0 = rat((l + 2 * k) as i64, 1);
        let c1 = rat(2 * k as i64, 1) * (rat((k + l) as i64, 1) + rat(n_dim as i64, 2) - Rat::one())
            / rat(n_dim as i64, 1);
        (c0, c1)
    };
    let (a0, a1) = lambda_line(pair_a);
    let (b0, b1) = lambda_line(pair_b);

    // P(a) = (lamA^2 + a lamA) - (lamB^2 + a lamB), a quadratic in a.
    let c0 = &a0 * &a0 - &b0 * &b0;
    let c1 = rat(2, 1) * (&a0 * &a1 - &b0 * &b1) + &a0 - &b0;
    let c2 = &a1 * &a1 - &b1 * &b1 + &a1 - &b1;

    if c0.is_zero() && c1.is_zero() && c2.is_zero() {
        return Ok(CrossingSet::AllM);
    }

    let mut roots: Vec<MRoot> = Vec::new();
    let mut push = |root: MRoot| {
        let a_val = root.to_f64();
        if a_val >= -1e-12 {
            roots.push(root);
        }
    };

    if c2.is_zero() {
        if !c1.is_zero() {
            push(MRoot::Exact(-c0 / c1));
        }
        // c2 = c1 = 0 with c0 != 0: no roots.
    } else {
        let disc = &c1 * &c1 - rat(4, 1) * &c2 * &c0;
        if disc >= Rat::zero() {
            let (num, den) = (disc.numer(), disc.denom());
            match (is_perfect_square(num), is_perfect_square(den)) {
                (Some(sn), Some(sd)) => {
                    let sqrt_disc = Rat::new(sn, sd);
                    let two_c2 = rat(2, 1) * &c2;
                    let r1 = (-&c1 - &sqrt_disc) / &two_c2;
                    let r2 = (-&c1 + &sqrt_disc) / &two_c2;
                    push(MRoot::Exact(r1.clone()));
                    if r2 != r1 {
                        push(MRoot::Exact(r2));
                    }
                }
                _ => {
                    let (c2f, c1f) = (c2.to_f64().unwrap(), c1.to_f64().unwrap());
                    let sq = disc.to_f64().unwrap().sqrt();
                    let r1 = (-c1f - sq) / (2.0 * c2f);
                    let r2 = (-c1f + sq) / (2.0 * c2f);
                    push(MRoot::Approximate(r1.min(r2)));
                    if sq > 0.0 {
                        push(MRoot::Approximate(r1.max(r2)));
                    }
                }
            }
        }
    }

    // Map a -> m = 1 + a/N and sort.
    let n_rat = rat(n_dim as i64, 1);
    let mut m_roots: Vec<MRoot> = roots
        .into_iter()
        .map(|r| match r {
            MRoot::Exact(a) => {
                let a = if a.is_negative() { Rat::zero() } else { a };
                MRoot::Exact(Rat::one() + a / &n_rat)
            }
            MRoot::Approximate(a) => MRoot::Approximate(1.0 + a.max(0.0) / n_dim as f64),
        })
        .collect();
    m_roots.sort_by(|x, y| x.to_f64().partial_cmp(&y.to_f64()).unwrap());
    m_roots.dedup_by(|x, y| (x.to_f64() - y.to_f64()).abs() < 1e-12);
    Ok(CrossingSet::Points(m_roots))
}

/// One row of the spectrum enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub l: u32,
    pub k: u32,
    pub lambda: Rat,
    pub mu: Rat,
    pub multiplicity: u64,
    pub degree: u32,
}

/// All spectrum entries with eigenfunction degree `l + 2k <= max_degree`,
/// sorted ascending by `mu` with ties broken by `(l, k)`.
pub fn spectrum_table(m: &Rat, n_dim: u32, max_degree: u32) -> Result<Vec<SpectrumEntry>> {
    validate_m(m)?;
    if n_dim == 0 {
        return Err(SpectrumError::ZeroDimension);
    }
    let mut entries = Vec::new();
    let l_max = if n_dim == 1 { 1.min(max_degree) } else { max_degree };
    for l in 0..=l_max {
        for k in 0..=(max_degree - l) / 2 {
            if l == 0 && k == 0 {
                continue;
            }
            entries.push(SpectrumEntry {
                l,
                k,
                lambda: lambda_eig(l, k, m, n_dim)?,
                mu: mu_eig(l, k, m, n_dim)?,
                multiplicity: multiplicity(l, n_dim)?,
                degree: l + 2 * k,
            });
        }
    }
    entries.sort_by(|x, y| x.mu.cmp(&y.mu).then_with(|| (x.l, x.k).cmp(&(y.l, y.k))));
    Ok(entries)
}

/// Enumerates all valid `(l, k)` pairs with `l + 2k <= max_degree`.
pub fn index_pairs(n_dim: u32, max_degree: u32) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    let l_max = if n_dim == 1 { 1.min(max_degree) } else { max_degree };
    for l in 0..=l_max {
        for k in 0..=(max_degree - l) / 2 {
            if l == 0 && k == 0 {
                continue;
            }
            pairs.push((l, k));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{apply_entropy_hessian, apply_information_hessian};
    use proptest::prelude::*;

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_eig(1, 0, &rat(7, 3), 2).unwrap(), Rat::one());
        assert_eq!(lambda_eig(0, 1, &rat(3, 2), 1).unwrap(), rat(5, 2));
        assert_eq!(lambda_eig(0, 1, &rat(2, 1), 3).unwrap(), rat(5, 1));
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_eig(1, 0, &rat(9, 4), 3).unwrap(), Rat::one());
        assert_eq!(mu_eig(0, 1, &rat(3, 2), 1).unwrap(), rat(5, 1));
        // m = 1: mu = lambda^2
        for (l, k) in [(1u32, 0u32), (0, 1), (1, 1), (0, 2)] {
            let lam = lambda_eig(l, k, &Rat::one(), 1).unwrap();
            assert_eq!(mu_eig(l, k, &Rat::one(), 1).unwrap(), &lam * &lam);
        }
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(0, 1).unwrap(), 1);
        assert_eq!(multiplicity(0, 3).unwrap(), 1);
        assert_eq!(multiplicity(2, 3).unwrap(), 5);
        assert_eq!(multiplicity(3, 2).unwrap(), 2);
        assert_eq!(multiplicity(1, 3).unwrap(), 3);
        // 2D harmonics come in cos/sin pairs; 3D ones follow 2l+1.
        for l in 1..=8 {
            assert_eq!(multiplicity(l, 2).unwrap(), 2);
            assert_eq!(multiplicity(l, 3).unwrap(), 2 * l as u64 + 1);
        }
        assert!(multiplicity(2, 1).is_err());
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(&[0]), RatPoly::one(1));
        let z = RatPoly::var(1, 0);
        assert_eq!(hermite(&[2]), z.mul(&z).sub(&RatPoly::one(1)));
        assert_eq!(hermite(&[1, 1]), RatPoly::var(2, 0).mul(&RatPoly::var(2, 1)));
        // h_3 = z^3 - 3z
        assert_eq!(hermite(&[3]), z.pow(3).sub(&z.scale(&rat(3, 1))));
    }

    #[test]
    fn hypergeom_examples() {
        assert_eq!(hypergeom_poly(0, &rat(5, 2), &rat(1, 2)).unwrap(), vec![Rat::one()]);
        let c = hypergeom_poly(1, &rat(3, 1), &rat(2, 1)).unwrap();
        assert_eq!(c, vec![Rat::one(), rat(-3, 2)]); // [1, -b/c]
        let c = hypergeom_poly(2, &rat(3, 1), &rat(1, 1)).unwrap();
        assert_eq!(c, vec![rat(1, 1), rat(-6, 1), rat(6, 1)]);
        assert!(hypergeom_poly(1, &rat(1, 1), &rat(0, 1)).is_err());
        assert!(hypergeom_poly(1, &rat(1, 1), &rat(-2, 1)).is_err());
    }

    #[test]
    fn solid_harmonics_are_harmonic_and_homogeneous() {
        for n_dim in 1..=3u32 {
            let l_max = if n_dim == 1 { 1 } else { 7 };
            for l in 0..=l_max {
                let count = multiplicity(l, n_dim).unwrap();
                for n_label in 1..=count as u32 {
                    let h = solid_harmonic(l, n_label, n_dim).unwrap();
                    assert!(h.is_harmonic(), "l={l} n={n_label} N={n_dim}");
                    assert!(h.is_homogeneous(l), "l={l} n={n_label} N={n_dim}");
                    assert_eq!(h.leading_coeff(), Rat::one());
                }
            }
        }
    }

    #[test]
    fn solid_harmonic_examples() {
        // N=3, l=1: the coordinate axes (in basis order x3, x1, x2).
        let got: Vec<_> = (1..=3)
            .map(|n| solid_harmonic(1, n, 3).unwrap())
            .collect();
        let expect = [
            RatPoly::var(3, 2),
            RatPoly::var(3, 0),
            RatPoly::var(3, 1),
        ];
        for e in &expect {
            assert!(got.contains(e));
        }
        // N=2, l=2: x1^2 - x2^2 and x1 x2 up to scale.
        let re = solid_harmonic(2, 1, 2).unwrap();
        let im = solid_harmonic(2, 2, 2).unwrap();
        let x1 = RatPoly::var(2, 0);
        let x2 = RatPoly::var(2, 1);
        assert_eq!(re, x1.mul(&x1).sub(&x2.mul(&x2)).monic());
        assert_eq!(im, x1.mul(&x2).monic());
        // N=1, l=1
        assert_eq!(solid_harmonic(1, 1, 1).unwrap(), RatPoly::var(1, 0));
        assert!(solid_harmonic(2, 1, 4).is_err());
    }

    #[test]
    fn eigenfunction_examples() {
        // (l,n,k) = (1,n,0) is the coordinate x_n for any m.
        for m in [rat(1, 1), rat(2, 1)] {
            let f = eigenfunction(&EigenIndex { l: 1, n: 2, k: 0 }, &m, 3).unwrap();
            assert!(f.is_homogeneous(1));
            assert_eq!(f.degree(), 1);
        }
        // (0,1,1) at m=2, N=2 is 1 - 2 r^2.
        let f = eigenfunction(&EigenIndex { l: 0, n: 1, k: 1 }, &rat(2, 1), 2).unwrap();
        let expect = RatPoly::one(2).sub(&RatPoly::radius_sq(2).scale(&rat(2, 1)));
        assert_eq!(f, expect);
        // k = 0 leaves the bare harmonic.
        let f = eigenfunction(&EigenIndex { l: 2, n: 1, k: 0 }, &rat(5, 4), 2).unwrap();
        assert!(f.is_harmonic());
        assert_eq!(f.degree(), 2);
    }

    #[test]
    fn eigenfunction_degree_law() {
        for n_dim in 1..=3u32 {
            for (l, k) in index_pairs(n_dim, 6) {
                for m in [rat(1, 1), rat(3, 2), rat(2, 1)] {
                    let f = eigenfunction(&EigenIndex { l, n: 1, k }, &m, n_dim).unwrap();
                    assert_eq!(f.degree(), l + 2 * k);
                    if k == 0 {
                        assert!(f.is_harmonic());
                    }
                }
            }
        }
    }

    #[test]
    fn eigen_identities_spot_check() {
        // Full sweep lives in the acceptance suite; here a couple of cases.
        for (n_dim, m, l, k) in [
            (1u32, rat(3, 2), 0u32, 1u32),
            (2, rat(2, 1), 3, 2),
            (3, rat(3, 1), 2, 1),
            (3, rat(1, 1), 2, 2),
        ] {
            let lam = lambda_eig(l, k, &m, n_dim).unwrap();
            let mu = mu_eig(l, k, &m, n_dim).unwrap();
            let f = eigenfunction(&EigenIndex { l, n: 1, k }, &m, n_dim).unwrap();
            assert_eq!(
                apply_entropy_hessian(&f, &m, n_dim).unwrap(),
                f.scale(&lam),
                "H_E eigen-identity N={n_dim} m={m} ({l},{k})"
            );
            assert_eq!(
                apply_information_hessian(&f, &m, n_dim).unwrap(),
                f.scale(&mu),
                "H_I eigen-identity N={n_dim} m={m} ({l},{k})"
            );
        }
    }

    /// At m = 1 the product-Hermite basis and the (l, k)-labelled
    /// radial x harmonic basis must span eigenspaces of equal dimension
    /// degree by degree (no canonical bijection is asserted).
    #[test]
    fn heat_eigenspace_dimensions_match_per_degree() {
        for n_dim in 1..=3u32 {
            for degree in 1..=6u32 {
                let hermite_count = {
                    // multi-indices alpha with |alpha| = degree
                    let mut count = 0u64;
                    let mut stack = vec![(Vec::new(), 0u32)];
                    while let Some((prefix, used)) = stack.pop() {
                        if prefix.len() == n_dim as usize {
                            if used == degree {
                                count += 1;
                            }
                            continue;
                        }
                        for e in 0..=(degree - used) {
                            let mut next = prefix.clone();
                            next.push(e);
                            stack.push((next, used + e));
                        }
                    }
                    count
                };
                let labelled_count: u64 = index_pairs(n_dim, degree)
                    .into_iter()
                    .filter(|&(l, k)| l + 2 * k == degree)
                    .map(|(l, _)| multiplicity(l, n_dim).unwrap())
                    .sum();
                assert_eq!(
                    hermite_count, labelled_count,
                    "eigenspace dimension mismatch at N={n_dim}, degree {degree}"
                );
            }
        }
    }

    #[test]
    fn mu_to_lambda_examples() {
        let (eps, lam) = mu_to_lambda(1.0, 1.0, 1).unwrap();
        assert!((eps - 1.0).abs() < 1e-14 && (lam - 1.0).abs() < 1e-14);
        let (eps, lam) = mu_to_lambda(5.0, 1.5, 1).unwrap();
        assert!((eps - 3.0).abs() < 1e-14);
        assert!((lam - 2.5).abs() < 1e-14);
        assert!(mu_to_lambda(-1.0, 2.0, 1).is_err());
    }

    #[test]
    fn mu_lambda_round_trip() {
        let m = rat(2, 1);
        let mu = mu_eig(0, 1, &m, 2).unwrap(); // lambda = 4, mu = 8
        assert_eq!(mu, rat(8, 1));
        let (_, lam) = mu_to_lambda(mu.to_f64().unwrap(), 2.0, 2).unwrap();
        assert!((lam - 4.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_examples() {
        // (0,1) vs (3,0): crossing exactly at m = 1 + 1/N.
        for n_dim in 1..=3u32 {
            if n_dim == 1 {
                continue; // l = 3 invalid in 1D
            }
            let set = crossings((0, 1), (3, 0), n_dim).unwrap();
            match set {
                CrossingSet::Points(pts) => {
                    assert_eq!(pts.len(), 1);
                    assert_eq!(
                        pts[0],
                        MRoot::Exact(Rat::one() + rat(1, n_dim as i64))
                    );
                }
                _ => panic!("expected isolated crossing"),
            }
        }
        // (1,0) has the constant branch mu = 1; no crossing with higher modes.
        let set = crossings((1, 0), (0, 1), 2).unwrap();
        assert_eq!(set, CrossingSet::Points(vec![]));
        // A pair crosses itself everywhere.
        assert_eq!(crossings((2, 1), (2, 1), 2).unwrap(), CrossingSet::AllM);
    }

    #[test]
    fn spectrum_table_examples() {
        // m = 1: mu-values are squares of integers.
        let t = spectrum_table(&Rat::one(), 2, 4).unwrap();
        for e in &t {
            let lam = e.lambda.to_f64().unwrap();
            assert_eq!(e.mu, &e.lambda * &e.lambda);
            assert!((lam.round() - lam).abs() < 1e-15);
        }
        // m = 3/2, N = 1, degree <= 3.
        let t = spectrum_table(&rat(3, 2), 1, 3).unwrap();
        let rows: Vec<_> = t.iter().map(|e| (e.l, e.k, e.mu.clone())).collect();
        assert_eq!(
            rows,
            vec![
                (1, 0, rat(1, 1)),
                (0, 1, rat(5, 1)),
                (1, 1, rat(15, 1)),
            ]
        );
        // First entry is always mu = 1 with multiplicity N.
        for n_dim in 1..=3u32 {
            let t = spectrum_table(&rat(7, 4), n_dim, 5).unwrap();
            assert_eq!(t[0].mu, Rat::one());
            assert_eq!((t[0].l, t[0].k), (1, 0));
            assert_eq!(t[0].multiplicity, n_dim as u64);
        }
    }

    proptest! {
        /// d(mu)/d(lambda) = (2 lambda + a)/(1 + a) > 0: mu is strictly
        /// increasing in lambda at fixed (m, N).
        #[test]
        fn mu_monotone_in_lambda(seed_a in 0u32..20, seed_b in 0u32..20, mnum in 4i64..12) {
            let m = rat(mnum, 4); // m in [1, 3)
            let n_dim = 2u32;
            let pairs = index_pairs(n_dim, 10);
            let pa = pairs[seed_a as usize % pairs.len()];
            let pb = pairs[seed_b as usize % pairs.len()];
            let la = lambda_eig(pa.0, pa.1, &m, n_dim).unwrap();
            let lb = lambda_eig(pb.0, pb.1, &m, n_dim).unwrap();
            let ma = mu_eig(pa.0, pa.1, &m, n_dim).unwrap();
            let mb = mu_eig(pb.0, pb.1, &m, n_dim).unwrap();
            if la < lb {
                prop_assert!(ma < mb);
            } else if la == lb {
                prop_assert_eq!(ma, mb);
            } else {
                prop_assert!(ma > mb);
            }
        }

        /// The minimum of mu over the index set is 1, attained at (1,0).
        #[test]
        fn mu_minimum_is_one(mnum in 4i64..16, n_dim in 1u32..4) {
            let m = rat(mnum, 4);
            for (l, k) in index_pairs(n_dim, 10) {
                let mu = mu_eig(l, k, &m, n_dim).unwrap();
                if (l, k) == (1, 0) {
                    prop_assert_eq!(mu, Rat::one());
                } else {
                    prop_assert!(mu >= Rat::one());
                }
            }
        }

        /// sign(mu_01 - mu_30) = sign(N(m-1) - 1).
        #[test]
        fn crossing_sign(mnum in 0i64..60, n_dim in 2u32..4) {
            let m = Rat::one() + rat(mnum, 20); // m in [1, 4)
            let mu01 = mu_eig(0, 1, &m, n_dim).unwrap();
            let mu30 = mu_eig(3, 0, &m, n_dim).unwrap();
            let a = rat(n_dim as i64, 1) * (&m - Rat::one());
            let lhs = (&mu01 - &mu30).to_f64().unwrap();
            let rhs = (a - Rat::one()).to_f64().unwrap();
            prop_assert_eq!(lhs.signum() as i32, rhs.signum() as i32);
        }
    }
}
