//! Gauss quadrature weighted by the Barenblatt profile, the `H` inner
//! product `<psi, phi>_H = int v_* grad(psi).grad(phi) dx`, Gram matrices,
//! and the numerical boundary/Poincare checks.
//!
//! Rules are radial x angular products. The radial factor absorbs
//! `v_*(r) r^{N-1}`: a Gauss-Jacobi rule in `u = r^2` for `m > 1`
//! (weight `(1-u)^{1/(m-1)} u^{(N-2)/2}` on `[0,1]`), a generalized
//! Gauss-Laguerre rule in `u = r^2/2` for `m = 1`. Angular factors are
//! antipodally symmetric (so odd radial powers integrate to exactly zero)
//! and exact for spherical harmonics up to the stated degree. All
//! summations are pairwise for bitwise reproducibility.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::operators::{apply_entropy_hessian, apply_information_hessian, OperatorError};
use crate::profile::{amplitude, barenblatt, barenblatt_grad};
use crate::{FloatPoly, Rat, RatPoly};

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("product rules are implemented for N <= 3, got N={0}")]
    UnsupportedDimension(u32),
    #[error("diffusion exponent m must be >= 1, got {0}")]
    ExponentBelowOne(f64),
    #[error("quadrature orders must be >= 1")]
    ZeroOrder,
    #[error("rule built for (m={rule_m}, N={rule_n}) used with (m={m}, N={n})")]
    RuleMismatch { rule_m: f64, rule_n: u32, m: f64, n: u32 },
    #[error("polynomial dimension {poly_dim} does not match rule dimension {rule_n}")]
    DimensionMismatch { poly_dim: usize, rule_n: u32 },
    #[error("boundary flux is defined for compactly supported profiles (m > 1)")]
    BoundaryFluxNeedsCompactSupport,
    #[error("Poincare ratio of a constant is undefined (zero H-norm)")]
    ConstantInput,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

type Result<T> = std::result::Result<T, QuadratureError>;

/// Pairwise (cascade) summation: deterministic and accurate.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1..=8 => values.iter().sum(),
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Nodes and weights of a Gauss rule from the symmetric tridiagonal
/// Jacobi matrix (Golub-Welsch).
fn golub_welsch(diag: &[f64], offdiag: &[f64], moment0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    assert!(n >= 1 && offdiag.len() == n - 1);
    if n == 1 {
        return (vec![diag[0]], vec![moment0]);
    }
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = diag[i];
    }
    for i in 0..n - 1 {
        mat[(i, i + 1)] = offdiag[i];
        mat[(i + 1, i)] = offdiag[i];
    }
    let eigen = mat.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = eigen
        .eigenvalues
        .iter()
        .copied()
        .zip(
            eigen
                .eigenvectors
                .row(0)
                .iter()
                .map(|v| v * v * moment0),
        )
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Gauss-Jacobi rule on `[-1, 1]` for the weight `(1-t)^a (1+t)^b`.
pub fn gauss_jacobi(deg: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(deg >= 1 && a > -1.0 && b > -1.0);
    let mut diag = Vec::with_capacity(deg);
    let mut off = Vec::with_capacity(deg.saturating_sub(1));
    diag.push((b - a) / (2.0 + a + b));
    for idx in 0..deg - 1 {
        let k = (idx + 1) as f64;
        let denom = 2.0 * k + a + b;
        off.push(
            2.0 / denom
                * (k * (k + a) * (k + b) * (k + a + b) / ((denom + 1.0) * (denom - 1.0))).sqrt(),
        );
        diag.push((b * b - a * a) / (denom * (denom + 2.0)));
    }
    let moment0 =
        ((a + b + 1.0) * 2.0f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0))
            .exp();
    golub_welsch(&diag, &off, moment0)
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1-u)^a u^b`.
pub fn gauss_jacobi_01(deg: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_jacobi(deg, a, b);
    let scale = 2.0f64.powf(-(a + b + 1.0));
    (
        t.iter().map(|v| 0.5 * (1.0 + v)).collect(),
        w.iter().map(|v| v * scale).collect(),
    )
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(deg: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(deg, 0.0, 0.0)
}

/// Generalized Gauss-Laguerre rule on `[0, inf)` for `u^a e^{-u}`.
pub fn gauss_laguerre(deg: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(deg >= 1 && a > -1.0);
    let diag: Vec<f64> = (0..deg).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let off: Vec<f64> = (1..deg).map(|k| ((k as f64) * (k as f64 + a)).sqrt()).collect();
    golub_welsch(&diag, &off, ln_gamma(a + 1.0).exp())
}

/// Gauss-Hermite rule on `(-inf, inf)` for `e^{-u^2}`.
pub fn gauss_hermite(deg: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(deg >= 1);
    let diag = vec![0.0; deg];
    let off: Vec<f64> = (1..deg).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&diag, &off, std::f64::consts::PI.sqrt())
}

/// Surface area of the unit sphere in dimension `N <= 3`.
pub fn surface_area(n_dim: u32) -> f64 {
    match n_dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("surface_area implemented for N <= 3"),
    }
}

/// Radial rule absorbing `v_*(r) r^{N-1}`: returns `(r_i, w_i)` with
/// `sum_i w_i f(r_i) ~ int_0^R f(r) v_*(r) r^{N-1} dr`.
pub fn radial_profile_rule(m: f64, n_dim: u32, order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1.0 && (1..=3).contains(&n_dim) && order >= 1);
    let beta = (n_dim as f64 - 2.0) / 2.0;
    if m == 1.0 {
        // u = r^2/2 against u^{N/2-1} e^{-u}
        let (u, w) = gauss_laguerre(order, n_dim as f64 / 2.0 - 1.0);
        let scale = (-0.5f64).exp() * 2.0f64.powf(beta);
        (
            u.iter().map(|v| (2.0 * v).sqrt()).collect(),
            w.iter().map(|v| v * scale).collect(),
        )
    } else {
        // u = r^2 against (1-u)^{1/(m-1)} u^{(N-2)/2}
        let (u, w) = gauss_jacobi_01(order, 1.0 / (m - 1.0), beta);
        let scale = 0.5 * amplitude(m);
        (
            u.iter().map(|v| v.sqrt()).collect(),
            w.iter().map(|v| v * scale).collect(),
        )
    }
}

/// Antipodally symmetric angular rule on the unit sphere `S^{N-1}`,
/// exact for spherical harmonics through degree `2*order + 1`; weights
/// sum to the surface area.
pub fn angular_rule(n_dim: u32, order: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    assert!((1..=3).contains(&n_dim) && order >= 1);
    match n_dim {
        1 => (
            vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            vec![1.0, 1.0],
        ),
        2 => {
            let count = 2 * (order + 1);
            let weight = 2.0 * std::f64::consts::PI / count as f64;
            let mut nodes = Vec::with_capacity(count);
            for j in 0..count {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                nodes.push([phi.cos(), phi.sin(), 0.0]);
            }
            (nodes, vec![weight; count])
        }
        3 => {
            let (cos_theta, w_theta) = gauss_legendre(order + 1);
            let n_phi = 2 * (order + 1);
            let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (c, wt) in cos_theta.iter().zip(&w_theta) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_phi as f64;
                    nodes.push([s * phi.cos(), s * phi.sin(), *c]);
                    weights.push(wt * w_phi);
                }
            }
            (nodes, weights)
        }
        _ => unreachable!(),
    }
}

/// Product quadrature rule whose weights absorb the Barenblatt profile:
/// `rule.integrate(f) ~ int f(x) v_*(x) dx` over the support of `v_*`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub m: f64,
    pub n_dim: u32,
    /// Node coordinates (first `n_dim` entries in use).
    pub nodes: Vec<[f64; 3]>,
    /// Positive weights including the profile and volume element.
    pub weights: Vec<f64>,
    /// Radius of each node.
    pub radii: Vec<f64>,
    /// Polynomials of total degree up to this are integrated exactly.
    pub exactness: u32,
}

impl QuadratureRule {
    /// Builds the rule; `radial_order` Gauss points in the radius and an
    /// angular set exact for harmonics through `2*angular_order + 1`.
    pub fn build(m: f64, n_dim: u32, radial_order: usize, angular_order: usize) -> Result<Self> {
        if m < 1.0 {
            return Err(QuadratureError::ExponentBelowOne(m));
        }
        if !(1..=3).contains(&n_dim) {
            return Err(QuadratureError::UnsupportedDimension(n_dim));
        }
        if radial_order == 0 || angular_order == 0 {
            return Err(QuadratureError::ZeroOrder);
        }
        let (r, wr) = radial_profile_rule(m, n_dim, radial_order);
        let (omega, wo) = angular_rule(n_dim, angular_order);
        let mut nodes = Vec::with_capacity(r.len() * omega.len());
        let mut weights = Vec::with_capacity(r.len() * omega.len());
        let mut radii = Vec::with_capacity(r.len() * omega.len());
        for (ri, wri) in r.iter().zip(&wr) {
            for (dir, woj) in omega.iter().zip(&wo) {
                nodes.push([ri * dir[0], ri * dir[1], ri * dir[2]]);
                weights.push(wri * woj);
                radii.push(*ri);
            }
        }
        // Radial exactness 4*order - 2 in even powers (odd powers vanish by
        // antipodal symmetry); angular exactness 2*order + 1.
        let exactness = (4 * radial_order as u32 - 2).min(2 * angular_order as u32 + 1);
        Ok(QuadratureRule {
            m,
            n_dim,
            nodes,
            weights,
            radii,
            exactness,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, q: usize) -> &[f64] {
        &self.nodes[q][..self.n_dim as usize]
    }

    /// `int f(x) v_*(x) dx`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let vals: Vec<f64> = (0..self.len())
            .map(|q| self.weights[q] * f(self.point(q)))
            .collect();
        pairwise_sum(&vals)
    }

    fn check_poly(&self, p: &FloatPoly) -> Result<()> {
        if p.dim() != self.n_dim as usize {
            return Err(QuadratureError::DimensionMismatch {
                poly_dim: p.dim(),
                rule_n: self.n_dim,
            });
        }
        Ok(())
    }

    fn check_params(&self, m: f64, n_dim: u32) -> Result<()> {
        if (self.m - m).abs() > 1e-12 || self.n_dim != n_dim {
            return Err(QuadratureError::RuleMismatch {
                rule_m: self.m,
                rule_n: self.n_dim,
                m,
                n: n_dim,
            });
        }
        Ok(())
    }
}

/// Gradient values of a polynomial at every rule node, flattened as
/// `[node][axis]`.
fn gradient_values(p: &FloatPoly, rule: &QuadratureRule) -> Vec<[f64; 3]> {
    let dim = p.dim();
    let partials: Vec<FloatPoly> = (0..dim).map(|axis| p.partial(axis)).collect();
    (0..rule.len())
        .map(|q| {
            let x = rule.point(q);
            let mut g = [0.0; 3];
            for (axis, dp) in partials.iter().enumerate() {
                g[axis] = dp.eval_f64(x);
            }
            g
        })
        .collect()
}

/// The `H` inner product `int v_* grad(psi).grad(phi) dx`. Constants have
/// zero gradient, so additive constants are quotiented out automatically.
pub fn h_inner(
    psi: &FloatPoly,
    phi: &FloatPoly,
    rule: &QuadratureRule,
    m: f64,
    n_dim: u32,
) -> Result<f64> {
    rule.check_params(m, n_dim)?;
    rule.check_poly(psi)?;
    rule.check_poly(phi)?;
    let ga = gradient_values(psi, rule);
    let gb = gradient_values(phi, rule);
    let vals: Vec<f64> = (0..rule.len())
        .map(|q| {
            rule.weights[q]
                * (0..n_dim as usize)
                    .map(|axis| ga[q][axis] * gb[q][axis])
                    .sum::<f64>()
        })
        .collect();
    Ok(pairwise_sum(&vals))
}

/// Operator inserted on the right slot of a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramOp {
    None,
    /// Porous-medium displacement Hessian `H_E`.
    Entropy,
    /// `H_E^2`.
    EntropySquared,
    /// Fourth-order displacement Hessian `H_I`.
    Information,
}

/// Gram matrix `G[i][j] = <psi_i, Op psi_j>_H`. The operator action is
/// exact (rational); only the integration is numeric.
pub fn gram(
    basis: &[RatPoly],
    rule: &QuadratureRule,
    m: &Rat,
    n_dim: u32,
    op: GramOp,
) -> Result<Vec<Vec<f64>>> {
    use num_traits::ToPrimitive;
    rule.check_params(m.to_f64().unwrap(), n_dim)?;
    let images: Vec<RatPoly> = basis
        .iter()
        .map(|p| -> Result<RatPoly> {
            Ok(match op {
                GramOp::None => p.clone(),
                GramOp::Entropy => apply_entropy_hessian(p, m, n_dim)?,
                GramOp::EntropySquared => {
                    let q = apply_entropy_hessian(p, m, n_dim)?;
                    apply_entropy_hessian(&q, m, n_dim)?
                }
                GramOp::Information => apply_information_hessian(p, m, n_dim)?,
            })
        })
        .collect::<Result<_>>()?;

    let left: Vec<Vec<[f64; 3]>> = basis
        .iter()
        .map(|p| gradient_values(&p.to_float(), rule))
        .collect();
    let right: Vec<Vec<[f64; 3]>> = images
        .iter()
        .map(|p| gradient_values(&p.to_float(), rule))
        .collect();

    let dim = n_dim as usize;
    let mut out = vec![vec![0.0; basis.len()]; basis.len()];
    let mut scratch = vec![0.0; rule.len()];
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            for (q, slot) in scratch.iter_mut().enumerate() {
                let mut dot = 0.0;
                for axis in 0..dim {
                    dot += left[i][q][axis] * right[j][q][axis];
                }
                *slot = rule.weights[q] * dot;
            }
            out[i][j] = pairwise_sum(&scratch);
        }
    }
    Ok(out)
}

/// Near-boundary flux `max_omega |v_*(r) d_r psi(r omega)|` at
/// `r = 1 - 10^{-level}`; tends to zero as `level` grows because `v_*`
/// vanishes on the boundary sphere while `grad psi` stays bounded.
pub fn boundary_flux(psi: &FloatPoly, m: f64, n_dim: u32, level: u32) -> Result<f64> {
    if m <= 1.0 {
        return Err(QuadratureError::BoundaryFluxNeedsCompactSupport);
    }
    if !(1..=3).contains(&n_dim) {
        return Err(QuadratureError::UnsupportedDimension(n_dim));
    }
    if psi.dim() != n_dim as usize {
        return Err(QuadratureError::DimensionMismatch {
            poly_dim: psi.dim(),
            rule_n: n_dim,
        });
    }
    let r = 1.0 - 10.0f64.powi(-(level as i32));
    let v = barenblatt(r, m);
    let partials: Vec<FloatPoly> = (0..psi.dim()).map(|axis| psi.partial(axis)).collect();
    let (dirs, _) = angular_rule(n_dim, 16);
    let mut worst: f64 = 0.0;
    for dir in &dirs {
        let x: Vec<f64> = dir[..n_dim as usize].iter().map(|d| d * r).collect();
        let radial_deriv: f64 = partials
            .iter()
            .zip(&dir[..n_dim as usize])
            .map(|(dp, d)| dp.eval_f64(&x) * d)
            .sum();
        worst = worst.max((v * radial_deriv).abs());
    }
    Ok(worst)
}

/// Ratio `inf_c int (1+|x|^2) v_* (psi - c)^2 dx / int v_* |grad psi|^2 dx`
/// with the optimal `c` given by the `(1+|x|^2) v_*`-weighted mean.
pub fn poincare_ratio(psi: &FloatPoly, rule: &QuadratureRule) -> Result<f64> {
    rule.check_poly(psi)?;
    let grad = gradient_values(psi, rule);
    let dim = rule.n_dim as usize;
    let denom_vals: Vec<f64> = (0..rule.len())
        .map(|q| rule.weights[q] * (0..dim).map(|a| grad[q][a] * grad[q][a]).sum::<f64>())
        .collect();
    let denom = pairwise_sum(&denom_vals);
    if denom <= 1e-300 {
        return Err(QuadratureError::ConstantInput);
    }
    let weight = |q: usize| rule.weights[q] * (1.0 + rule.radii[q] * rule.radii[q]);
    let total: Vec<f64> = (0..rule.len()).map(weight).collect();
    let mean_vals: Vec<f64> = (0..rule.len())
        .map(|q| weight(q) * psi.eval_f64(rule.point(q)))
        .collect();
    let c = pairwise_sum(&mean_vals) / pairwise_sum(&total);
    let num_vals: Vec<f64> = (0..rule.len())
        .map(|q| {
            let d = psi.eval_f64(rule.point(q)) - c;
            weight(q) * d * d
        })
        .collect();
    Ok(pairwise_sum(&num_vals) / denom)
}

/// Max-norm over rule nodes of the divergence form of `H_E` against its
/// explicit formula: `|-m v_*^{m-2} div(v_* grad psi) - (H_E psi)(x)|`,
/// with `v_*` and `grad v_*` evaluated analytically.
pub fn divergence_form_residual(
    psi: &RatPoly,
    m: &Rat,
    n_dim: u32,
    rule: &QuadratureRule,
) -> Result<f64> {
    use num_traits::ToPrimitive;
    let mf = m.to_f64().unwrap();
    rule.check_params(mf, n_dim)?;
    let psi_f = psi.to_float();
    rule.check_poly(&psi_f)?;
    let image = apply_entropy_hessian(psi, m, n_dim)?.to_float();
    let lap = psi_f.laplacian();
    let partials: Vec<FloatPoly> = (0..psi_f.dim()).map(|a| psi_f.partial(a)).collect();
    let mut worst: f64 = 0.0;
    for q in 0..rule.len() {
        let x = rule.point(q);
        let r = rule.radii[q];
        let v = barenblatt(r, mf);
        let gv = barenblatt_grad(x, mf);
        let grad_dot: f64 = partials
            .iter()
            .zip(&gv)
            .map(|(dp, g)| dp.eval_f64(x) * g)
            .sum();
        let div_form = -mf * v.powf(mf - 2.0) * (v * lap.eval_f64(x) + grad_dot);
        worst = worst.max((div_form - image.eval_f64(x)).abs());
    }
    Ok(worst)
}

/// Plain free-space quadrature on `R^N` (no profile weight): a scaled
/// tensor Gauss-Hermite grid, accurate for integrands decaying at least
/// like `exp(-|x|^2 / (2 * scale^2))`. Used for densities that are not
/// push-forwards of the Barenblatt profile.
pub fn free_space_rule(n_dim: u32, order: usize, scale: f64) -> (Vec<[f64; 3]>, Vec<f64>) {
    assert!((1..=3).contains(&n_dim) && order >= 1 && scale > 0.0);
    let (u, w) = gauss_hermite(order);
    // One-dimensional factors x = scale*u, weight = scale * w * e^{u^2}.
    let pts: Vec<f64> = u.iter().map(|v| scale * v).collect();
    let wts: Vec<f64> = u
        .iter()
        .zip(&w)
        .map(|(ui, wi)| scale * wi * (ui * ui).exp())
        .collect();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match n_dim {
        1 => {
            for (p, wt) in pts.iter().zip(&wts) {
                nodes.push([*p, 0.0, 0.0]);
                weights.push(*wt);
            }
        }
        2 => {
            for (p1, w1) in pts.iter().zip(&wts) {
                for (p2, w2) in pts.iter().zip(&wts) {
                    nodes.push([*p1, *p2, 0.0]);
                    weights.push(w1 * w2);
                }
            }
        }
        3 => {
            for (p1, w1) in pts.iter().zip(&wts) {
                for (p2, w2) in pts.iter().zip(&wts) {
                    for (p3, w3) in pts.iter().zip(&wts) {
                        nodes.push([*p1, *p2, *p3]);
                        weights.push(w1 * w2 * w3);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    (nodes, weights)
}
