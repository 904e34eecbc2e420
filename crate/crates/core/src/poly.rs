//! Sparse multivariate polynomials with exact coefficient arithmetic.
//!
//! Terms live in a `BTreeMap` keyed by exponent multi-indices in graded
//! lexicographic order, so iteration, display and equality are all
//! deterministic. Zero coefficients are removed eagerly: two polynomials
//! are equal iff their term maps are equal.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::Rat;

/// Exponent multi-index of a monomial, ordered graded-lexicographically
/// (total degree first, then lexicographic on the exponent tuple).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn dim(&self) -> usize {
        self.0.len()
    }

    fn mul(&self, other: &Self) -> Self {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Sparse multivariate polynomial over a field scalar `T`.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly<T> {
    dim: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Scalar> MultiPoly<T> {
    pub fn zero(dim: usize) -> Self {
        MultiPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: T) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), value);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, T::one())
    }

    /// The coordinate polynomial `x_{axis+1}` (zero-based `axis`).
    pub fn var(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::unit(dim, axis), T::one());
        p
    }

    pub fn monomial(dim: usize, exponents: &[u32], coeff: T) -> Self {
        assert_eq!(exponents.len(), dim);
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::new(exponents.to_vec()), coeff);
        p
    }

    /// `|x|^2 = x_1^2 + ... + x_dim^2`.
    pub fn radius_sq(dim: usize) -> Self {
        let mut p = Self::zero(dim);
        for axis in 0..dim {
            let mut e = vec![0; dim];
            e[axis] = 2;
            p.add_term(MultiIndex::new(e), T::one());
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u32]) -> T {
        self.terms
            .get(&MultiIndex::new(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    /// Coefficient of the graded-lex highest term (zero for the zero poly).
    pub fn leading_coeff(&self) -> T {
        self.terms
            .iter()
            .next_back()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(T::zero)
    }

    fn add_term(&mut self, index: MultiIndex, coeff: T) {
        debug_assert_eq!(index.dim(), self.dim);
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(index) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                out.add_term(ia.mul(ib), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.checked_add(other).expect("dimension mismatch")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.checked_sub(other).expect("dimension mismatch")
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("dimension mismatch")
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    pub fn scale(&self, factor: &T) -> Self {
        if factor.is_zero() {
            return Self::zero(self.dim);
        }
        MultiPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (i.clone(), c.clone() * factor.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.dim);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Scale so the graded-lex leading coefficient is 1.
    pub fn monic(&self) -> Self {
        let lead = self.leading_coeff();
        if lead.is_zero() {
            return self.clone();
        }
        self.scale(&(T::one() / lead))
    }

    /// Partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> Self {
        assert!(axis < self.dim);
        let mut out = Self::zero(self.dim);
        for (idx, c) in &self.terms {
            let e = idx.exponents()[axis];
            if e == 0 {
                continue;
            }
            let mut exps = idx.exponents().to_vec();
            exps[axis] = e - 1;
            let factor = T::from_u32(e).expect("exponent fits scalar");
            out.add_term(MultiIndex::new(exps), c.clone() * factor);
        }
        out
    }

    /// `sum_i d^2 p / dx_i^2`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for axis in 0..self.dim {
            out = out.add(&self.partial(axis).partial(axis));
        }
        out
    }

    /// `x . grad p`; multiplies each monomial by its total degree.
    pub fn euler_grad(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (idx, c) in &self.terms {
            let d = idx.degree();
            if d == 0 {
                continue;
            }
            let factor = T::from_u32(d).expect("degree fits scalar");
            out.add_term(idx.clone(), c.clone() * factor);
        }
        out
    }

    /// True iff the Laplacian vanishes identically.
    pub fn is_harmonic(&self) -> bool {
        self.laplacian().is_zero()
    }

    /// True iff every term has total degree `d` (vacuously true when zero).
    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|i| i.degree() == d)
    }

    pub fn eval(&self, point: &[T]) -> T {
        assert_eq!(point.len(), self.dim);
        let mut acc = T::zero();
        for (idx, c) in &self.terms {
            let mut term = c.clone();
            for (axis, &e) in idx.exponents().iter().enumerate() {
                for _ in 0..e {
                    term *= point[axis].clone();
                }
            }
            acc += term;
        }
        acc
    }

    pub fn map_coeffs<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> MultiPoly<U> {
        let mut out = MultiPoly::zero(self.dim);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), f(c));
        }
        out
    }
}

impl MultiPoly<Rat> {
    /// Lossy conversion to the quadrature-side carrier.
    pub fn to_float(&self) -> MultiPoly<f64> {
        self.map_coeffs(|c| c.to_f64().expect("rational fits f64"))
    }
}

impl MultiPoly<f64> {
    /// Value at a point given as a plain slice, for quadrature loops.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (idx, c) in &self.terms {
            let mut term = *c;
            for (axis, &e) in idx.exponents().iter().enumerate() {
                term *= point[axis].powi(e as i32);
            }
            acc += term;
        }
        acc
    }
}

/// Text form: terms in ascending graded-lex order as `coef*x1^a x2^b`.
impl<T: Scalar> fmt::Display for MultiPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (pos, (idx, coeff)) in self.terms.iter().enumerate() {
            let negative = coeff.is_negative();
            let magnitude = coeff.abs();
            if pos == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{magnitude}")?;
            for (axis, &e) in idx.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", axis + 1)?,
                    _ => write!(f, "*x{}^{}", axis + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for MultiPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}]({})", self.dim, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, RatPoly};
    use proptest::prelude::*;

    fn x(dim: usize, axis: usize) -> RatPoly {
        RatPoly::var(dim, axis)
    }

    #[test]
    fn add_same_variable() {
        let p = x(1, 0).add(&x(1, 0));
        assert_eq!(p, x(1, 0).scale(&rat(2, 1)));
    }

    #[test]
    fn square_of_one_minus_r2_in_1d() {
        let one = RatPoly::one(1);
        let q = one.sub(&RatPoly::radius_sq(1));
        let sq = q.mul(&q);
        // 1 - 2 x^2 + x^4
        assert_eq!(sq.coeff(&[0]), rat(1, 1));
        assert_eq!(sq.coeff(&[2]), rat(-2, 1));
        assert_eq!(sq.coeff(&[4]), rat(1, 1));
        assert_eq!(sq.num_terms(), 3);
    }

    #[test]
    fn scale_by_three_halves() {
        let p = x(1, 0).mul(&x(1, 0)).scale(&rat(3, 2));
        assert_eq!(p.coeff(&[2]), rat(3, 2));
    }

    #[test]
    fn laplacian_examples() {
        let p = x(1, 0).mul(&x(1, 0));
        assert_eq!(p.laplacian(), RatPoly::constant(1, rat(2, 1)));

        let h = x(2, 0).mul(&x(2, 0)).sub(&x(2, 1).mul(&x(2, 1)));
        assert!(h.laplacian().is_zero());
        assert!(h.is_harmonic());
    }

    #[test]
    fn laplacian_of_r4_is_4n_plus_8_r2() {
        for dim in 1..=3usize {
            let r2 = RatPoly::radius_sq(dim);
            let r4 = r2.mul(&r2);
            let expect = r2.scale(&rat(4 * (dim as i64 + 2), 1));
            assert_eq!(r4.laplacian(), expect);
        }
    }

    #[test]
    fn euler_grad_examples() {
        assert!(RatPoly::constant(2, rat(7, 1)).euler_grad().is_zero());

        // x1^2 + x1 x2^3 -> 2 x1^2 + 4 x1 x2^3
        let p = MultiPoly::monomial(2, &[2, 0], rat(1, 1))
            .add(&MultiPoly::monomial(2, &[1, 3], rat(1, 1)));
        let g = p.euler_grad();
        assert_eq!(g.coeff(&[2, 0]), rat(2, 1));
        assert_eq!(g.coeff(&[1, 3]), rat(4, 1));
    }

    #[test]
    fn harmonic_checks() {
        assert!(x(2, 0).mul(&x(2, 1)).is_harmonic());
        assert!(!RatPoly::radius_sq(2).is_harmonic());
        // degree-3 solid harmonic in N=3: x^3 - 3 x y^2 (harmonic in (x,y), no z)
        let p = MultiPoly::monomial(3, &[3, 0, 0], rat(1, 1))
            .add(&MultiPoly::monomial(3, &[1, 2, 0], rat(-3, 1)));
        assert!(p.is_harmonic());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = x(1, 0).checked_add(&x(2, 0)).unwrap_err();
        assert_eq!(err, PolyError::DimensionMismatch { left: 1, right: 2 });
    }

    #[test]
    fn display_graded_lex() {
        let p = RatPoly::one(2)
            .sub(&MultiPoly::monomial(2, &[2, 0], rat(1, 2)))
            .add(&MultiPoly::monomial(2, &[1, 1], rat(3, 2)));
        assert_eq!(p.to_string(), "1 + 3/2*x1*x2 - 1/2*x1^2");
    }

    #[test]
    fn eval_matches_float_eval() {
        let p = RatPoly::radius_sq(2).scale(&rat(3, 4));
        let exact = p.eval(&[rat(1, 2), rat(1, 3)]);
        let float = p.to_float().eval_f64(&[0.5, 1.0 / 3.0]);
        assert!((exact.to_float() - float).abs() < 1e-15);
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = RatPoly> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u32..4, dim),
                -6i64..6,
                1i64..4,
            ),
            0..6,
        )
        .prop_map(move |terms| {
            let mut p = RatPoly::zero(dim);
            for (exps, num, den) in terms {
                p = p.add(&MultiPoly::monomial(dim, &exps, rat(num, den)));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn laplacian_is_linear(p in arb_poly(2), q in arb_poly(2), a in -5i64..5, b in -5i64..5) {
            let (a, b) = (rat(a, 1), rat(b, 1));
            let lhs = p.scale(&a).add(&q.scale(&b)).laplacian();
            let rhs = p.laplacian().scale(&a).add(&q.laplacian().scale(&b));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn euler_grad_scales_monomials_by_degree(exps in proptest::collection::vec(0u32..5, 3)) {
            let m = MultiPoly::monomial(3, &exps, rat(1, 1));
            let d: u32 = exps.iter().sum();
            prop_assert_eq!(m.euler_grad(), m.scale(&rat(d as i64, 1)));
        }

        #[test]
        fn mul_degree_adds(p in arb_poly(2), q in arb_poly(2)) {
            let prod = p.mul(&q);
            if !p.is_zero() && !q.is_zero() {
                prop_assert_eq!(prod.degree(), p.degree() + q.degree());
            } else {
                prop_assert!(prod.is_zero());
            }
        }
    }
}
