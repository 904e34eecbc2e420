//! Barenblatt profiles, entropy densities, and the scaling constants that
//! connect the self-similar and confined pictures.
//!
//! The confined stationary profile `v_*` is normalized so that
//! `e'(v_*(r)) = (1 - r^2)_+ / 2` (with full equality for `m = 1`): a
//! parabola power supported on the unit ball when `m > 1`, the Gaussian
//! `exp(-1/2 - r^2/2)` when `m = 1`. The original self-similar profile
//! carries a free constant `sigma` fixed by the mass constraint; `A` and
//! `B` are the space and amplitude normalizations linking the two.

use thiserror::Error;

use crate::quadrature;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("diffusion exponent m must be >= 1, got {0}")]
    ExponentBelowOne(f64),
    #[error("entropy density needs z > 0 at m = 1, got {0}")]
    NonpositiveDensity(f64),
    #[error("entropy density needs z >= 0, got {0}")]
    NegativeDensity(f64),
    #[error("sigma must be positive for m > 1, got {0}")]
    NonpositiveSigma(f64),
    #[error("mass must be positive, got {0}")]
    NonpositiveMass(f64),
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
}

type Result<T> = std::result::Result<T, ProfileError>;

/// The rescaling constants `alpha`, `gamma^2` and `theta` as exact
/// functions of `(m, N)`; exact whenever the scalar is rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants<T> {
    /// Self-similar space/time exponent `1 / (N(2m-2) + 4)`.
    pub alpha: T,
    /// Square of the parabola coefficient,
    /// `alpha m^2 / (2 (2m-1)(N(m-1)+1))`.
    pub gamma_sq: T,
    /// Relative diffusion strength `2 m^2 / ((2m-1)(N(m-1)+1))`.
    pub theta: T,
}

/// Evaluates the three scaling constants for diffusion exponent `m` in
/// dimension `N`.
pub fn derive_constants<T: Scalar>(m: &T, n_dim: u32) -> Constants<T> {
    let one = T::one();
    let two = T::ratio(2, 1);
    let n = T::from_u32(n_dim).expect("dimension fits scalar");
    let m1 = m.clone() - one.clone();
    let alpha = one.clone() / (n.clone() * two.clone() * m1.clone() + T::ratio(4, 1));
    let confinement = n * m1 + one.clone();
    let two_m_minus_one = two.clone() * m.clone() - one;
    let theta = two.clone() * m.clone() * m.clone() / (two_m_minus_one.clone() * confinement.clone());
    let gamma_sq = alpha.clone() * m.clone() * m.clone() / (two * two_m_minus_one * confinement);
    Constants { alpha, gamma_sq, theta }
}

/// Entropy density and its derivative: `e(z) = z ln z` at `m = 1`,
/// `z^m/(m-1)` for `m > 1`; `e'(z) = ln z + 1` resp. `m z^{m-1}/(m-1)`.
pub fn entropy_density(z: f64, m: f64) -> Result<(f64, f64)> {
    if m < 1.0 {
        return Err(ProfileError::ExponentBelowOne(m));
    }
    if m == 1.0 {
        if z <= 0.0 {
            return Err(ProfileError::NonpositiveDensity(z));
        }
        return Ok((z * z.ln(), z.ln() + 1.0));
    }
    if z < 0.0 {
        return Err(ProfileError::NegativeDensity(z));
    }
    Ok((z.powf(m) / (m - 1.0), m * z.powf(m - 1.0) / (m - 1.0)))
}

/// Amplitude of the confined profile: `((m-1)/(2m))^{1/(m-1)}` for
/// `m > 1`, `e^{-1/2}` for `m = 1`.
pub fn amplitude(m: f64) -> f64 {
    if m == 1.0 {
        (-0.5f64).exp()
    } else {
        ((m - 1.0) / (2.0 * m)).powf(1.0 / (m - 1.0))
    }
}

/// The confined stationary profile `v_*(r)` (radial; independent of `N`).
pub fn barenblatt(r: f64, m: f64) -> f64 {
    if m == 1.0 {
        (-0.5 - 0.5 * r * r).exp()
    } else {
        let bowl = (1.0 - r * r).max(0.0);
        ((m - 1.0) / (2.0 * m) * bowl).powf(1.0 / (m - 1.0))
    }
}

/// Radial derivative `d v_*/dr`; zero outside the support.
pub fn barenblatt_deriv(r: f64, m: f64) -> f64 {
    if m == 1.0 {
        return -r * barenblatt(r, m);
    }
    if r >= 1.0 {
        return 0.0;
    }
    let c = (m - 1.0) / (2.0 * m);
    let p = 1.0 / (m - 1.0);
    -2.0 * r * p * c * c.powf(p - 1.0) * (1.0 - r * r).powf(p - 1.0) * 1.0f64
}

/// Gradient of `v_*` at a point (radial chain rule).
pub fn barenblatt_grad(x: &[f64], m: f64) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return vec![0.0; x.len()];
    }
    let slope = barenblatt_deriv(r, m) / r;
    x.iter().map(|v| v * slope).collect()
}

/// Normalization constants of the self-similar-to-confined rescaling:
/// `A = 2^{1/4}` (`m = 1`) or `sqrt(sigma/gamma)` (`m > 1`);
/// `B = exp(sigma - 1/2)` (`m = 1`) or `(2 sigma)^{1/(m-1)}` (`m > 1`).
pub fn scaling_ab(m: f64, n_dim: u32, sigma: f64) -> Result<(f64, f64)> {
    if m < 1.0 {
        return Err(ProfileError::ExponentBelowOne(m));
    }
    if m == 1.0 {
        return Ok((2.0f64.powf(0.25), (sigma - 0.5).exp()));
    }
    if sigma <= 0.0 {
        return Err(ProfileError::NonpositiveSigma(sigma));
    }
    let gamma = derive_constants(&m, n_dim).gamma_sq.sqrt();
    Ok(((sigma / gamma).sqrt(), (2.0 * sigma).powf(1.0 / (m - 1.0))))
}

/// Mass of the confined profile, `int v_* dx`, by radial Gauss quadrature.
pub fn profile_mass(m: f64, n_dim: u32, radial_order: usize) -> f64 {
    let (_, weights) = quadrature::radial_profile_rule(m, n_dim, radial_order);
    quadrature::surface_area(n_dim) * quadrature::pairwise_sum(&weights)
}

/// Full parameter set of the self-similar solution with the mass-fixing
/// constant `sigma` resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub m: f64,
    pub n_dim: u32,
    pub alpha: f64,
    pub gamma_sq: f64,
    pub gamma: f64,
    pub theta: f64,
    pub sigma: f64,
    /// Space normalization `A`.
    pub scale_a: f64,
    /// Amplitude normalization `B`.
    pub scale_b: f64,
    /// Total mass `M` of the self-similar profile.
    pub mass: f64,
}

const MASS_QUADRATURE_ORDER: usize = 48;

impl Params {
    /// Builds the parameter set from a given `sigma` (mass derived).
    pub fn from_sigma(m: f64, n_dim: u32, sigma: f64) -> Result<Self> {
        if m < 1.0 {
            return Err(ProfileError::ExponentBelowOne(m));
        }
        if m > 1.0 && sigma <= 0.0 {
            return Err(ProfileError::NonpositiveSigma(sigma));
        }
        let c = derive_constants(&m, n_dim);
        let (scale_a, scale_b) = scaling_ab(m, n_dim, sigma)?;
        let confined_mass = profile_mass(m, n_dim, MASS_QUADRATURE_ORDER);
        // u = (B/t^{N alpha}) v(., x/(A t^alpha)) integrates to B A^N x confined mass.
        let mass = scale_b * scale_a.powi(n_dim as i32) * confined_mass;
        Ok(Params {
            m,
            n_dim,
            alpha: c.alpha,
            gamma_sq: c.gamma_sq,
            gamma: c.gamma_sq.sqrt(),
            theta: c.theta,
            sigma,
            scale_a,
            scale_b,
            mass,
        })
    }

    /// Builds the parameter set from a prescribed total mass by monotone
    /// bisection in `sigma` (the mass map is strictly increasing).
    pub fn from_mass(m: f64, n_dim: u32, mass: f64) -> Result<Self> {
        if mass <= 0.0 {
            return Err(ProfileError::NonpositiveMass(mass));
        }
        let mass_of = |sigma: f64| -> Result<f64> { Ok(Self::from_sigma(m, n_dim, sigma)?.mass) };
        // Bracket the target.
        let (mut lo, mut hi) = if m == 1.0 { (-40.0, 40.0) } else { (1e-12, 1.0) };
        while mass_of(hi)? < mass {
            hi *= 2.0;
            assert!(hi < 1e12, "mass target not bracketed");
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass_of(mid)? < mass {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        Self::from_sigma(m, n_dim, 0.5 * (lo + hi))
    }
}

/// Direction of the self-similar/confined change of variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleDirection {
    /// `(t, x, u) -> (t_hat, x_hat, v)`.
    Forward,
    /// `(t_hat, x_hat, v) -> (t, x, u)`.
    Inverse,
}

/// Applies the change of variables
/// `u(t, x) = B t^{-N alpha} v(alpha ln t, x / (A t^alpha))` in either
/// direction; the two directions are exact inverses.
pub fn rescale_map(
    direction: RescaleDirection,
    time: f64,
    position: &[f64],
    value: f64,
    params: &Params,
) -> Result<(f64, Vec<f64>, f64)> {
    let n_alpha = params.n_dim as f64 * params.alpha;
    match direction {
        RescaleDirection::Forward => {
            if time <= 0.0 {
                return Err(ProfileError::NonpositiveTime(time));
            }
            let t_hat = params.alpha * time.ln();
            let stretch = params.scale_a * time.powf(params.alpha);
            let x_hat: Vec<f64> = position.iter().map(|&c| c / stretch).collect();
            let v = time.powf(n_alpha) * value / params.scale_b;
            Ok((t_hat, x_hat, v))
        }
        RescaleDirection::Inverse => {
            let time_orig = (time / params.alpha).exp();
            let stretch = params.scale_a * time_orig.powf(params.alpha);
            let x: Vec<f64> = position.iter().map(|&c| c * stretch).collect();
            let u = params.scale_b * value / time_orig.powf(n_alpha);
            Ok((time_orig, x, u))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Rat};
    use approx::assert_abs_diff_eq;
    use num_traits::One;

    #[test]
    fn constants_examples() {
        let c = derive_constants(&rat(3, 2), 1);
        assert_eq!(c.alpha, rat(1, 5));
        assert_eq!(c.gamma_sq, rat(3, 40));
        assert_eq!(c.theta, rat(3, 2));

        for n_dim in 1..=3 {
            assert_eq!(derive_constants(&Rat::one(), n_dim).theta, rat(2, 1));
        }

        // float route agrees with exact route
        let cf = derive_constants(&1.5f64, 1);
        assert_abs_diff_eq!(cf.alpha, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(cf.gamma_sq, 3.0 / 40.0, epsilon = 1e-15);
    }

    #[test]
    fn entropy_density_examples() {
        let (e, ep) = entropy_density(3.0, 2.0).unwrap();
        assert_abs_diff_eq!(e, 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ep, 6.0, epsilon = 1e-14);

        let (e, ep) = entropy_density(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ep, 1.0, epsilon = 1e-14);

        let (e, ep) = entropy_density(4.0, 1.5).unwrap();
        assert_abs_diff_eq!(e, 16.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ep, 6.0, epsilon = 1e-13);

        assert!(entropy_density(0.0, 1.0).is_err());
        assert!(entropy_density(-1.0, 2.0).is_err());
    }

    #[test]
    fn barenblatt_examples() {
        assert_abs_diff_eq!(barenblatt(0.0, 2.0), 0.25, epsilon = 1e-15);
        assert_eq!(barenblatt(1.0, 2.0), 0.0);
        assert_eq!(barenblatt(1.3, 1.5), 0.0);
        assert_abs_diff_eq!(
            barenblatt(0.5, 1.5),
            (1.0 - 0.25f64).powi(2) / 36.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            barenblatt(0.7, 1.0),
            (-0.5f64).exp() * (-0.245f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn normalization_residual_on_grid() {
        // e'(v_*(r)) = (1 - r^2)_+ / 2 wherever e' is defined; at m = 1 the
        // identity holds without the positive part.
        for m in [1.0, 1.25, 1.5, 2.0, 3.0] {
            let mut r = 0.0;
            while r <= 1.5 {
                let v = barenblatt(r, m);
                let target = if m == 1.0 {
                    0.5 * (1.0 - r * r)
                } else {
                    (0.5 * (1.0 - r * r)).max(0.0)
                };
                if v > 0.0 {
                    let (_, ep) = entropy_density(v, m).unwrap();
                    assert!(
                        (ep - target).abs() <= 1e-14,
                        "m={m} r={r}: {ep} vs {target}"
                    );
                } else {
                    assert!(m > 1.0 && r >= 1.0);
                }
                r += 0.01;
            }
        }
    }

    #[test]
    fn barenblatt_deriv_matches_finite_difference() {
        for m in [1.0, 1.5, 2.0] {
            for r in [0.1, 0.4, 0.8] {
                let h = 1e-6;
                let fd = (barenblatt(r + h, m) - barenblatt(r - h, m)) / (2.0 * h);
                assert_abs_diff_eq!(barenblatt_deriv(r, m), fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn scaling_examples() {
        let (a, _) = scaling_ab(1.0, 1, 0.3).unwrap();
        assert_abs_diff_eq!(a, 2.0f64.powf(0.25), epsilon = 1e-15);

        let (_, b) = scaling_ab(2.0, 1, 0.5).unwrap();
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-15);

        let gamma = derive_constants(&1.5f64, 1).gamma_sq.sqrt();
        let (a, _) = scaling_ab(1.5, 1, gamma).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);

        assert!(scaling_ab(2.0, 1, 0.0).is_err());
    }

    #[test]
    fn profile_mass_examples() {
        assert_abs_diff_eq!(profile_mass(2.0, 1, 32), 1.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(profile_mass(1.5, 1, 32), 4.0 / 135.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            profile_mass(1.0, 1, 48),
            (-0.5f64).exp() * (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mass_increases_with_sigma() {
        for m in [1.5, 2.0] {
            let mut prev = 0.0;
            for step in 1..=8 {
                let sigma = 0.2 * step as f64;
                let mass = Params::from_sigma(m, 1, sigma).unwrap().mass;
                assert!(mass > prev, "m={m} sigma={sigma}");
                prev = mass;
            }
        }
    }

    #[test]
    fn mass_inversion_round_trip() {
        for (m, n_dim) in [(1.0, 1u32), (1.5, 1), (2.0, 2)] {
            let p = Params::from_sigma(m, n_dim, 0.7).unwrap();
            let q = Params::from_mass(m, n_dim, p.mass).unwrap();
            assert_abs_diff_eq!(q.sigma, p.sigma, epsilon = 1e-9);
        }
    }

    #[test]
    fn source_mass_against_closed_form() {
        // m = 1: the source profile is exp(sigma - 1) exp(-gamma r^2).
        let sigma = 0.4;
        let p = Params::from_sigma(1.0, 1, sigma).unwrap();
        let expect = (sigma - 1.0).exp() * (std::f64::consts::PI / p.gamma).sqrt();
        assert_abs_diff_eq!(p.mass, expect, epsilon = 1e-12);
    }

    #[test]
    fn rescale_round_trip_and_fixed_point() {
        let p = Params::from_sigma(1.5, 1, 0.5).unwrap();
        let (t_hat, x_hat, v) =
            rescale_map(RescaleDirection::Forward, 2.7, &[0.4], 0.03, &p).unwrap();
        let (t, x, u) =
            rescale_map(RescaleDirection::Inverse, t_hat, &x_hat, v, &p).unwrap();
        assert_abs_diff_eq!(t, 2.7, epsilon = 1e-12);
        assert_abs_diff_eq!(x[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(u, 0.03, epsilon = 1e-14);

        // t = 1 maps to t_hat = 0.
        let (t_hat, _, _) = rescale_map(RescaleDirection::Forward, 1.0, &[0.0], 1.0, &p).unwrap();
        assert_eq!(t_hat, 0.0);

        // The self-similar solution maps forward onto the t-independent v_*:
        // u_*(t, x) = B t^{-N a} v_*(x / (A t^a)).
        for t in [0.5f64, 1.0, 3.0] {
            for x in [0.0, 0.3, 0.9] {
                let x_phys = x * p.scale_a * t.powf(p.alpha);
                let u_star =
                    p.scale_b / t.powf(p.n_dim as f64 * p.alpha) * barenblatt(x, p.m);
                let (_, x_hat, v) =
                    rescale_map(RescaleDirection::Forward, t, &[x_phys], u_star, &p).unwrap();
                assert_abs_diff_eq!(x_hat[0], x, epsilon = 1e-12);
                assert_abs_diff_eq!(v, barenblatt(x, p.m), epsilon = 1e-13);
            }
        }

        assert!(rescale_map(RescaleDirection::Forward, 0.0, &[0.0], 1.0, &p).is_err());
    }
}
