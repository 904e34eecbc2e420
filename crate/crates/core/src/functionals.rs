//! Generalized entropy `E`, generalized Fisher information `I_theta`, the
//! metric norm of `grad E`, and the entropy-information relation
//!
//! ```text
//! (N(m-1)+1) I_theta(v) - 1/2 g_v(grad E(v), grad E(v))
//!     = N M            (m = 1)
//!     = N(m-1) E(v)    (m > 1)
//! ```
//!
//! evaluated as a numerical identity on families of test densities.
//!
//! Test densities with the boundary decay needed by the underlying
//! integration by parts are built as push-forwards of the Barenblatt
//! profile under maps `id + s grad(psi)` with polynomial `psi`. All their
//! integrals are pulled back to the profile's support with exact
//! polynomial Jacobians, so no sampling or inversion noise enters the
//! identity tests. For `m = 1` (full support) Gaussian mixtures are also
//! admitted and integrated on a free-space rule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::profile::{barenblatt, barenblatt_grad, derive_constants};
use crate::quadrature::{free_space_rule, pairwise_sum, QuadratureRule};
use crate::FloatPoly;

#[derive(Debug, Error, PartialEq)]
pub enum FunctionalError {
    #[error("push-forward map is not injective: det(I + s Hess psi) = {min_det} at a node")]
    NonInjective { min_det: f64 },
    #[error("Gaussian mixtures are only admissible at m = 1")]
    MixtureNeedsHeatExponent,
    #[error("mixture component sigma={sigma} too wide for the free-space rule (tail divergence)")]
    DivergentTail { sigma: f64 },
    #[error("density dimension {density} does not match rule dimension {rule}")]
    DimensionMismatch { density: u32, rule: u32 },
    #[error("generating potential must have the rule dimension")]
    BadPotential,
}

type Result<T> = std::result::Result<T, FunctionalError>;

/// One Gaussian bump `mass * (2 pi sigma^2)^{-N/2} exp(-|x-c|^2/(2 sigma^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub mass: f64,
    pub center: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub enum DensityKind {
    /// Push-forward of the Barenblatt profile under `id + s grad(psi)`.
    Pushforward { psi: FloatPoly, s: f64 },
    /// Positive mixture of Gaussians (admissible at `m = 1` only).
    GaussianMixture { components: Vec<MixtureComponent> },
}

/// A test density for the relation checks.
#[derive(Debug, Clone)]
pub struct TestDensity {
    pub label: String,
    pub n_dim: u32,
    pub kind: DensityKind,
}

impl TestDensity {
    pub fn pushforward(label: impl Into<String>, n_dim: u32, psi: FloatPoly, s: f64) -> Self {
        assert_eq!(psi.dim(), n_dim as usize);
        TestDensity {
            label: label.into(),
            n_dim,
            kind: DensityKind::Pushforward { psi, s },
        }
    }

    pub fn mixture(label: impl Into<String>, n_dim: u32, components: Vec<MixtureComponent>) -> Self {
        TestDensity {
            label: label.into(),
            n_dim,
            kind: DensityKind::GaussianMixture { components },
        }
    }

    /// The stationary profile itself (`s = 0` push-forward).
    pub fn stationary(n_dim: u32) -> Self {
        Self::pushforward("stationary", n_dim, FloatPoly::zero(n_dim as usize), 0.0)
    }

    /// Total mass: push-forwards carry the profile mass exactly; mixtures
    /// sum their component masses.
    pub fn mass(&self, rule: &QuadratureRule) -> f64 {
        match &self.kind {
            DensityKind::Pushforward { .. } => rule.integrate(|_| 1.0),
            DensityKind::GaussianMixture { components } => {
                components.iter().map(|c| c.mass).sum()
            }
        }
    }
}

/// Geometry of the push-forward at one base point.
struct Pullback {
    /// Image point `T(x) = x + s grad(psi)`.
    t: [f64; 3],
    /// Jacobian `J = I + s Hess(psi)` (symmetric).
    jac: [[f64; 3]; 3],
    /// `det J`.
    det: f64,
    /// Profile value at the base point.
    v_base: f64,
    /// Density value at the image point, `v_base / det`.
    v_val: f64,
    /// Base-coordinates gradient of `x -> v(T(x)) = v_base/det`.
    grad_v_val: [f64; 3],
}

/// Precomputed symbolic data of a push-forward density.
struct PushforwardData {
    dim: usize,
    grad_psi: Vec<FloatPoly>,
    hess_psi: Vec<Vec<FloatPoly>>,
    det_poly: FloatPoly,
    grad_det: Vec<FloatPoly>,
    s: f64,
}

impl PushforwardData {
    fn build(psi: &FloatPoly, s: f64) -> Self {
        let dim = psi.dim();
        let grad_psi: Vec<FloatPoly> = (0..dim).map(|a| psi.partial(a)).collect();
        let hess_psi: Vec<Vec<FloatPoly>> = (0..dim)
            .map(|a| (0..dim).map(|b| grad_psi[a].partial(b)).collect())
            .collect();
        // J entries as polynomials: delta_ab + s * hess_ab
        let entry = |a: usize, b: usize| -> FloatPoly {
            let h = hess_psi[a][b].scale(&s);
            if a == b {
                FloatPoly::one(dim).add(&h)
            } else {
                h
            }
        };
        let det_poly = match dim {
            1 => entry(0, 0),
            2 => entry(0, 0)
                .mul(&entry(1, 1))
                .sub(&entry(0, 1).mul(&entry(1, 0))),
            3 => {
                let minor = |r: usize, c: usize| -> FloatPoly {
                    let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                    let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
                    entry(rows[0], cols[0])
                        .mul(&entry(rows[1], cols[1]))
                        .sub(&entry(rows[0], cols[1]).mul(&entry(rows[1], cols[0])))
                };
                entry(0, 0)
                    .mul(&minor(0, 0))
                    .sub(&entry(0, 1).mul(&minor(0, 1)))
                    .add(&entry(0, 2).mul(&minor(0, 2)))
            }
            _ => panic!("push-forwards implemented for N <= 3"),
        };
        let grad_det: Vec<FloatPoly> = (0..dim).map(|a| det_poly.partial(a)).collect();
        PushforwardData {
            dim,
            grad_psi,
            hess_psi,
            det_poly,
            grad_det,
            s,
        }
    }

    fn at(&self, x: &[f64], m: f64) -> Result<Pullback> {
        let dim = self.dim;
        let mut t = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for a in 0..dim {
            t[a] = x[a] + self.s * self.grad_psi[a].eval_f64(x);
            for b in 0..dim {
                jac[a][b] = self.s * self.hess_psi[a][b].eval_f64(x);
            }
            jac[a][a] += 1.0;
        }
        let det = self.det_poly.eval_f64(x);
        if det <= 0.0 {
            return Err(FunctionalError::NonInjective { min_det: det });
        }
        let v_base = barenblatt(norm(x), m);
        let gv = barenblatt_grad(x, m);
        let mut grad_v_val = [0.0; 3];
        for a in 0..dim {
            let gd = self.grad_det[a].eval_f64(x);
            grad_v_val[a] = gv[a] / det - v_base * gd / (det * det);
        }
        Ok(Pullback {
            t,
            jac,
            det,
            v_base,
            v_val: v_base / det,
            grad_v_val,
        })
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Solves `J y = rhs` for `dim <= 3` by cofactors.
fn solve_small(j: &[[f64; 3]; 3], rhs: &[f64; 3], dim: usize) -> [f64; 3] {
    match dim {
        1 => [rhs[0] / j[0][0], 0.0, 0.0],
        2 => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            [
                (rhs[0] * j[1][1] - rhs[1] * j[0][1]) / det,
                (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det,
                0.0,
            ]
        }
        3 => {
            let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            let inv = [
                [
                    (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det,
                    (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det,
                    (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det,
                ],
                [
                    (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det,
                    (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det,
                    (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det,
                ],
                [
                    (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det,
                    (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det,
                    (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det,
                ],
            ];
            let mut y = [0.0; 3];
            for (a, row) in inv.iter().enumerate() {
                y[a] = row[0] * rhs[0] + row[1] * rhs[1] + row[2] * rhs[2];
            }
            y
        }
        _ => unreachable!(),
    }
}

fn check_density(v: &TestDensity, m: f64, rule: &QuadratureRule) -> Result<()> {
    if v.n_dim != rule.n_dim {
        return Err(FunctionalError::DimensionMismatch {
            density: v.n_dim,
            rule: rule.n_dim,
        });
    }
    if matches!(v.kind, DensityKind::GaussianMixture { .. }) && m != 1.0 {
        return Err(FunctionalError::MixtureNeedsHeatExponent);
    }
    Ok(())
}

/// Free-space grid used for mixture densities.
const FREE_RULE_ORDER: usize = 80;
const FREE_RULE_SCALE: f64 = 2.5;
/// Mixture components wider than this decay too slowly for the grid.
const MAX_MIXTURE_SIGMA: f64 = 1.4;
/// Below this the integrand limits (z ln z, |grad|^2/z) are taken as zero.
const DENSITY_FLOOR: f64 = 1e-280;

fn mixture_value_grad(components: &[MixtureComponent], x: &[f64], dim: usize) -> (f64, [f64; 3]) {
    let mut v = 0.0;
    let mut grad = [0.0; 3];
    for comp in components {
        let s2 = comp.sigma * comp.sigma;
        let norm_const = (2.0 * std::f64::consts::PI * s2).powf(-(dim as f64) / 2.0);
        let mut q = 0.0;
        for a in 0..dim {
            let d = x[a] - comp.center[a];
            q += d * d;
        }
        let val = comp.mass * norm_const * (-q / (2.0 * s2)).exp();
        v += val;
        for a in 0..dim {
            grad[a] += val * (comp.center[a] - x[a]) / s2;
        }
    }
    (v, grad)
}

fn mixture_guard(components: &[MixtureComponent]) -> Result<()> {
    for comp in components {
        if comp.sigma >= MAX_MIXTURE_SIGMA {
            return Err(FunctionalError::DivergentTail { sigma: comp.sigma });
        }
    }
    Ok(())
}

/// Integrates `f(x, v(x), grad v(x))` over free space for a mixture.
fn mixture_integral(
    components: &[MixtureComponent],
    dim: usize,
    mut f: impl FnMut(&[f64], f64, &[f64]) -> f64,
) -> f64 {
    let (nodes, weights) = free_space_rule(dim as u32, FREE_RULE_ORDER, FREE_RULE_SCALE);
    let vals: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(node, w)| {
            let x = &node[..dim];
            let (v, grad) = mixture_value_grad(components, x, dim);
            w * f(x, v, &grad[..dim])
        })
        .collect();
    pairwise_sum(&vals)
}

/// Generalized entropy `E(v) = int e(v) dy + 1/2 int |y|^2 v dy`.
pub fn entropy_e(v: &TestDensity, m: f64, rule: &QuadratureRule) -> Result<f64> {
    check_density(v, m, rule)?;
    match &v.kind {
        DensityKind::Pushforward { psi, s } => {
            let data = PushforwardData::build(psi, *s);
            let dim = data.dim;
            let mut acc = vec![0.0; rule.len()];
            for (q, slot) in acc.iter_mut().enumerate() {
                let x = &rule.nodes[q][..dim];
                let pb = data.at(x, m)?;
                let half_t2 = 0.5 * dot(&pb.t[..dim], &pb.t[..dim]);
                // e(v/D) D / v_base, written through analytic profile powers
                // so the boundary degeneracy cancels exactly.
                let internal = if m == 1.0 {
                    // ln(v_base) - ln(det); ln v_base = -1/2 - r^2/2
                    let r = rule.radii[q];
                    (-0.5 - 0.5 * r * r) - pb.det.ln()
                } else {
                    // v_base^{m-1} = (m-1)/(2m) (1-r^2); e(z) = z^m/(m-1)
                    let r = rule.radii[q];
                    (1.0 - r * r) / (2.0 * m) / pb.det.powf(m - 1.0)
                };
                *slot = rule.weights[q] * (internal + half_t2);
            }
            Ok(pairwise_sum(&acc))
        }
        DensityKind::GaussianMixture { components } => {
            mixture_guard(components)?;
            Ok(mixture_integral(components, v.n_dim as usize, |x, val, _| {
                let entropy = if val < DENSITY_FLOOR { 0.0 } else { val * val.ln() };
                entropy + 0.5 * dot(x, x) * val
            }))
        }
    }
}

/// Generalized Fisher information
/// `I_theta(v) = theta/(2m-1) int |grad(v^{m-1/2})|^2 dy + 1/2 int |y|^2 v dy`.
pub fn fisher_information(v: &TestDensity, m: f64, n_dim: u32, rule: &QuadratureRule) -> Result<f64> {
    check_density(v, m, rule)?;
    let theta = derive_constants(&m, n_dim).theta;
    match &v.kind {
        DensityKind::Pushforward { psi, s } => {
            let data = PushforwardData::build(psi, *s);
            let dim = data.dim;
            let mut acc = vec![0.0; rule.len()];
            for (q, slot) in acc.iter_mut().enumerate() {
                let x = &rule.nodes[q][..dim];
                let pb = data.at(x, m)?;
                // grad G with G = (v/D)^{m-1/2}, then push to image coords.
                let power = pb.v_val.powf(m - 1.5);
                let mut grad_g = [0.0; 3];
                for a in 0..dim {
                    grad_g[a] = (m - 0.5) * power * pb.grad_v_val[a];
                }
                let image_grad = solve_small(&pb.jac, &grad_g, dim);
                let grad_sq = dot(&image_grad[..dim], &image_grad[..dim]);
                let half_t2 = 0.5 * dot(&pb.t[..dim], &pb.t[..dim]);
                // first term integrand carries 1/v_base to cancel the rule weight
                *slot = rule.weights[q]
                    * (theta / (2.0 * m - 1.0) * grad_sq * pb.det / pb.v_base + half_t2);
            }
            Ok(pairwise_sum(&acc))
        }
        DensityKind::GaussianMixture { components } => {
            mixture_guard(components)?;
            Ok(mixture_integral(components, v.n_dim as usize, |x, val, grad| {
                // |grad sqrt(v)|^2 = |grad v|^2 / (4v)
                let fisher = if val < DENSITY_FLOOR {
                    0.0
                } else {
                    dot(grad, grad) / (4.0 * val)
                };
                theta / (2.0 * m - 1.0) * fisher + 0.5 * dot(x, x) * val
            }))
        }
    }
}

/// Metric norm of the entropy gradient,
/// `g_v(grad E, grad E) = int v |grad(e'(v) + |y|^2/2)|^2 dy`.
pub fn grad_entropy_gnorm(v: &TestDensity, m: f64, rule: &QuadratureRule) -> Result<f64> {
    check_density(v, m, rule)?;
    match &v.kind {
        DensityKind::Pushforward { psi, s } => {
            let data = PushforwardData::build(psi, *s);
            let dim = data.dim;
            let mut acc = vec![0.0; rule.len()];
            for (q, slot) in acc.iter_mut().enumerate() {
                let x = &rule.nodes[q][..dim];
                let pb = data.at(x, m)?;
                // grad Phi with Phi = e'(v/D) + |T|^2/2 in base coordinates:
                // e''(z) = m z^{m-2} (1/z at m = 1).
                let e2 = if m == 1.0 {
                    1.0 / pb.v_val
                } else {
                    m * pb.v_val.powf(m - 2.0)
                };
                let mut grad_phi = [0.0; 3];
                for a in 0..dim {
                    let mut jt = 0.0;
                    for b in 0..dim {
                        jt += pb.jac[a][b] * pb.t[b];
                    }
                    grad_phi[a] = e2 * pb.grad_v_val[a] + jt;
                }
                let image_grad = solve_small(&pb.jac, &grad_phi, dim);
                *slot = rule.weights[q] * dot(&image_grad[..dim], &image_grad[..dim]);
            }
            Ok(pairwise_sum(&acc))
        }
        DensityKind::GaussianMixture { components } => {
            mixture_guard(components)?;
            Ok(mixture_integral(components, v.n_dim as usize, |x, val, grad| {
                if val < DENSITY_FLOOR {
                    return 0.0;
                }
                // v |grad(ln v) + x|^2
                let mut sq = 0.0;
                for a in 0..x.len() {
                    let comp = grad[a] / val + x[a];
                    sq += comp * comp;
                }
                val * sq
            }))
        }
    }
}

/// Outcome of a relation check on one density.
#[derive(Debug, Clone)]
pub struct RelationReport {
    pub label: String,
    pub entropy: f64,
    pub fisher: f64,
    pub gnorm: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Relative defect of the entropy-information relation on `v`.
pub fn relation_residual(
    v: &TestDensity,
    m: f64,
    n_dim: u32,
    rule: &QuadratureRule,
) -> Result<RelationReport> {
    let entropy = entropy_e(v, m, rule)?;
    let fisher = fisher_information(v, m, n_dim, rule)?;
    let gnorm = grad_entropy_gnorm(v, m, rule)?;
    let a = n_dim as f64 * (m - 1.0);
    let lhs = (a + 1.0) * fisher - 0.5 * gnorm;
    let rhs = if m == 1.0 {
        n_dim as f64 * v.mass(rule)
    } else {
        a * entropy
    };
    Ok(RelationReport {
        label: v.label.clone(),
        entropy,
        fisher,
        gnorm,
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (1.0 + rhs.abs()),
    })
}

/// Finite-difference check of the linearization: compares the second
/// `s`-difference of `(1 + N(m-1)) I_theta(v_s)` along the push-forward
/// curve generated by `psi` with the quadratic form
/// `<H_E psi, H_E psi>_H + N(m-1) <psi, H_E psi>_H`. Returns
/// `(finite_difference, quadratic_form)`.
pub fn information_hessian_fd_check(
    psi: &crate::RatPoly,
    m: &crate::Rat,
    n_dim: u32,
    rule: &QuadratureRule,
    s_step: f64,
) -> Result<(f64, f64)> {
    use crate::operators::apply_entropy_hessian;
    use num_traits::ToPrimitive;
    let mf = m.to_f64().unwrap();
    let psi_f = psi.to_float();
    if psi_f.dim() != n_dim as usize {
        return Err(FunctionalError::BadPotential);
    }
    let at = |s: f64| -> Result<f64> {
        let density = TestDensity::pushforward("fd", n_dim, psi_f.clone(), s);
        fisher_information(&density, mf, n_dim, rule)
    };
    let a = n_dim as f64 * (mf - 1.0);
    let fd = (a + 1.0) * (at(s_step)? - 2.0 * at(0.0)? + at(-s_step)?) / (s_step * s_step);

    let image = apply_entropy_hessian(psi, m, n_dim).expect("valid operator inputs");
    let he_he = crate::quadrature::h_inner(&image.to_float(), &image.to_float(), rule, mf, n_dim)
        .expect("rule matches");
    let psi_he = crate::quadrature::h_inner(&psi_f, &image.to_float(), rule, mf, n_dim)
        .expect("rule matches");
    Ok((fd, he_he + a * psi_he))
}

/// Deterministic family of `count` admissible test densities for `(m, N)`,
/// seeded for the randomized polynomial coefficients: translations,
/// dilations, radial and non-radial polynomial push-forwards, and (at
/// `m = 1`) Gaussian mixtures.
pub fn standard_family(m: f64, n_dim: u32, count: usize, seed: u64) -> Vec<TestDensity> {
    let dim = n_dim as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::with_capacity(count);

    let linear = |axis: usize| FloatPoly::var(dim, axis);
    let r2 = FloatPoly::radius_sq(dim);

    let mut idx = 0usize;
    while family.len() < count {
        let pick = idx % if m == 1.0 { 6 } else { 5 };
        idx += 1;
        match pick {
            0 => {
                // translation along alternating axes
                let c = 0.02 + 0.1 * rng.gen::<f64>();
                let axis = idx % dim;
                family.push(TestDensity::pushforward(
                    format!("translate(axis={axis}, c={c:.4})"),
                    n_dim,
                    linear(axis),
                    c,
                ));
            }
            1 => {
                // dilation psi = r^2/2, both signs
                let s = (0.02 + 0.08 * rng.gen::<f64>()) * if idx % 2 == 0 { 1.0 } else { -1.0 };
                family.push(TestDensity::pushforward(
                    format!("dilate(s={s:.4})"),
                    n_dim,
                    r2.scale(&0.5),
                    s,
                ));
            }
            2 => {
                // radial polynomial psi = a r^2/2 + b r^4/4 (m=1 keeps it
                // quadratic so the map stays injective on all of space)
                let a = -0.5 + rng.gen::<f64>();
                if m == 1.0 {
                    let s = 0.05 + 0.05 * rng.gen::<f64>();
                    family.push(TestDensity::pushforward(
                        format!("dilate(a={a:.4})"),
                        n_dim,
                        r2.scale(&(0.5 * a)),
                        s,
                    ));
                } else {
                    let b = -0.5 + rng.gen::<f64>();
                    let psi = r2.scale(&(0.5 * a)).add(&r2.mul(&r2).scale(&(0.25 * b)));
                    family.push(TestDensity::pushforward(
                        format!("radial(a={a:.4}, b={b:.4})"),
                        n_dim,
                        psi,
                        0.1,
                    ));
                }
            }
            3 => {
                // translation combined with dilation
                let c = -0.05 + 0.1 * rng.gen::<f64>();
                let s = 0.03 + 0.05 * rng.gen::<f64>();
                let psi = linear(0).scale(&(c / s)).add(&r2.scale(&0.5));
                family.push(TestDensity::pushforward(
                    format!("translate+dilate(c={c:.4}, s={s:.4})"),
                    n_dim,
                    psi,
                    s,
                ));
            }
            4 => {
                if dim >= 2 && m > 1.0 {
                    // shear / harmonic quadratic perturbation
                    let a = -0.5 + rng.gen::<f64>();
                    let psi = if idx % 2 == 0 {
                        linear(0).mul(&linear(1)).scale(&a)
                    } else {
                        let x1 = linear(0);
                        let x2 = linear(1);
                        x1.mul(&x1).sub(&x2.mul(&x2)).scale(&(0.5 * a))
                    };
                    family.push(TestDensity::pushforward(
                        format!("shear(a={a:.4})"),
                        n_dim,
                        psi,
                        0.1,
                    ));
                } else if m > 1.0 {
                    // odd cubic in 1D
                    let a = -0.5 + rng.gen::<f64>();
                    let x = linear(0);
                    let psi = x.pow(3).scale(&(a / 3.0));
                    family.push(TestDensity::pushforward(
                        format!("cubic(a={a:.4})"),
                        n_dim,
                        psi,
                        0.1,
                    ));
                } else {
                    // m = 1: translated Gaussian of non-unit width
                    let sigma = 0.7 + 0.3 * rng.gen::<f64>();
                    let mut center = vec![0.0; dim];
                    center[0] = -0.6 + 1.2 * rng.gen::<f64>();
                    family.push(TestDensity::mixture(
                        format!("gaussian(sigma={sigma:.4})"),
                        n_dim,
                        vec![MixtureComponent {
                            mass: 1.0,
                            center,
                            sigma,
                        }],
                    ));
                }
            }
            _ => {
                // m = 1 only: two-component mixture
                let mut components = Vec::new();
                for comp in 0..2 {
                    let mut center = vec![0.0; dim];
                    center[comp % dim] = -0.7 + 1.4 * rng.gen::<f64>();
                    components.push(MixtureComponent {
                        mass: 0.3 + 0.7 * rng.gen::<f64>(),
                        center,
                        sigma: 0.7 + 0.3 * rng.gen::<f64>(),
                    });
                }
                family.push(TestDensity::mixture(
                    format!("mixture(seed niche {idx})"),
                    n_dim,
                    components,
                ));
            }
        }
    }
    family
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::scalar::Scalar;

    fn rule(m: f64, n_dim: u32) -> QuadratureRule {
        QuadratureRule::build(m, n_dim, 48, 16).unwrap()
    }

    #[test]
    fn entropy_of_stationary_profile_m2() {
        // E(v_*) = 1/15 + 1/30 = 1/10 at m = 2, N = 1.
        let r = rule(2.0, 1);
        let v = TestDensity::stationary(1);
        assert_abs_diff_eq!(entropy_e(&v, 2.0, &r).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn exact_values_m32_stationary() {
        // E(v_*) = 2/189 and I_theta(v_*) = 2/567 at m = 3/2, N = 1.
        let r = rule(1.5, 1);
        let v = TestDensity::stationary(1);
        assert_abs_diff_eq!(entropy_e(&v, 1.5, &r).unwrap(), 2.0 / 189.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fisher_information(&v, 1.5, 1, &r).unwrap(),
            2.0 / 567.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fisher_equals_n_mass_at_gaussian_ground_state() {
        // I_theta(v_*) = N M at m = 1.
        for n_dim in 1..=2u32 {
            let r = rule(1.0, n_dim);
            let v = TestDensity::stationary(n_dim);
            let mass = v.mass(&r);
            assert_abs_diff_eq!(
                fisher_information(&v, 1.0, n_dim, &r).unwrap(),
                n_dim as f64 * mass,
                epsilon = 1e-10 * mass
            );
        }
    }

    #[test]
    fn entropy_pushforward_frozen_value() {
        // psi = x^2/2 + x^4/4, s = 1/20, m = 2, N = 1: E = 0.10052412839476217
        // (computed by exact symbolic integration of the pulled-back form).
        let r = rule(2.0, 1);
        let x = FloatPoly::var(1, 0);
        let psi = x.pow(2).scale(&0.5).add(&x.pow(4).scale(&0.25));
        let v = TestDensity::pushforward("frozen", 1, psi, 0.05);
        assert_abs_diff_eq!(
            entropy_e(&v, 2.0, &r).unwrap(),
            0.10052412839476217,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gnorm_vanishes_only_at_the_ground_state() {
        let r = rule(2.0, 1);
        let star = TestDensity::stationary(1);
        assert!(grad_entropy_gnorm(&star, 2.0, &r).unwrap() <= 1e-10);

        let x = FloatPoly::var(1, 0);
        let translated = TestDensity::pushforward("shift", 1, x.clone(), 0.1);
        let g = grad_entropy_gnorm(&translated, 2.0, &r).unwrap();
        // off-center: g = M c^2
        let mass = star.mass(&r);
        assert_abs_diff_eq!(g, mass * 0.01, epsilon = 1e-12);
    }

    #[test]
    fn gnorm_of_offcenter_gaussian() {
        let r = rule(1.0, 1);
        let c = 0.4;
        let v = TestDensity::mixture(
            "offcenter",
            1,
            vec![MixtureComponent {
                mass: 1.0,
                center: vec![c],
                sigma: 1.0,
            }],
        );
        assert_abs_diff_eq!(
            grad_entropy_gnorm(&v, 1.0, &r).unwrap(),
            c * c,
            epsilon = 1e-9
        );
        // centered standard Gaussian: exact ground state direction, zero norm
        let centered = TestDensity::mixture(
            "centered",
            1,
            vec![MixtureComponent {
                mass: 1.0,
                center: vec![0.0],
                sigma: 1.0,
            }],
        );
        assert!(grad_entropy_gnorm(&centered, 1.0, &r).unwrap() <= 1e-10);
    }

    #[test]
    fn relation_residual_across_family() {
        for (m, n_dim) in [(1.0, 1u32), (1.5, 1), (2.0, 1), (1.0, 2), (1.5, 2), (2.0, 2)] {
            let r = rule(m, n_dim);
            for density in standard_family(m, n_dim, 8, 7) {
                let rep = relation_residual(&density, m, n_dim, &r).unwrap();
                assert!(
                    rep.residual <= 1e-8,
                    "m={m} N={n_dim} {}: residual {}",
                    rep.label,
                    rep.residual
                );
                // the ground state is the unique zero of the gradient norm:
                // every perturbed member has strictly positive g-norm
                assert!(
                    rep.gnorm > 1e-8,
                    "m={m} N={n_dim} {}: g-norm {} suspiciously small",
                    rep.label,
                    rep.gnorm
                );
            }
        }
    }

    #[test]
    fn mixtures_rejected_for_degenerate_diffusion() {
        let r = rule(2.0, 1);
        let v = TestDensity::mixture(
            "bad",
            1,
            vec![MixtureComponent {
                mass: 1.0,
                center: vec![0.0],
                sigma: 1.0,
            }],
        );
        assert!(matches!(
            relation_residual(&v, 2.0, 1, &r),
            Err(FunctionalError::MixtureNeedsHeatExponent)
        ));
    }

    #[test]
    fn non_injective_map_is_detected() {
        let r = rule(2.0, 1);
        let x = FloatPoly::var(1, 0);
        // psi = x^2/2 with s = -1.5 gives 1 + s psi'' = -0.5 < 0
        let v = TestDensity::pushforward("fold", 1, x.pow(2).scale(&0.5), -1.5);
        assert!(matches!(
            entropy_e(&v, 2.0, &r),
            Err(FunctionalError::NonInjective { .. })
        ));
    }

    #[test]
    fn fd_hessian_matches_quadratic_form() {
        use crate::rat;
        for (m, n_dim) in [(rat(2, 1), 1u32), (rat(3, 2), 1), (rat(1, 1), 1)] {
            let r = rule(m.to_float(), n_dim);
            // psi = x (translation) and psi = x^2/2 (dilation)
            let x = crate::RatPoly::var(1, 0);
            for psi in [x.clone(), x.pow(2).scale(&rat(1, 2))] {
                let (fd, form) =
                    information_hessian_fd_check(&psi, &m, n_dim, &r, 1e-2).unwrap();
                assert!(
                    (fd - form).abs() <= 3e-3 * form.abs().max(1e-12),
                    "m={m} fd={fd} form={form}"
                );
            }
        }
        // a non-radial direction in two dimensions (shear)
        let m = rat(2, 1);
        let r = rule(2.0, 2);
        let shear = crate::RatPoly::var(2, 0).mul(&crate::RatPoly::var(2, 1));
        let (fd, form) = information_hessian_fd_check(&shear, &m, 2, &r, 1e-2).unwrap();
        assert!(
            (fd - form).abs() <= 3e-3 * form.abs(),
            "shear fd={fd} form={form}"
        );
    }

    #[test]
    fn ground_state_minimizes_both_functionals() {
        for (m, n_dim) in [(2.0, 1u32), (1.5, 1), (1.0, 1)] {
            let r = rule(m, n_dim);
            let star = TestDensity::stationary(n_dim);
            let e_star = entropy_e(&star, m, &r).unwrap();
            let i_star = fisher_information(&star, m, n_dim, &r).unwrap();
            let dilation = FloatPoly::radius_sq(n_dim as usize).scale(&0.5);
            for s in [-0.1, -0.05, 0.05, 0.1] {
                let v = TestDensity::pushforward(format!("dilate({s})"), n_dim, dilation.clone(), s);
                assert!(
                    entropy_e(&v, m, &r).unwrap() > e_star,
                    "entropy not minimal at m={m} s={s}"
                );
                assert!(
                    fisher_information(&v, m, n_dim, &r).unwrap() > i_star,
                    "information not minimal at m={m} s={s}"
                );
            }
        }
    }
}
