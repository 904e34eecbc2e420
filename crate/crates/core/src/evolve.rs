//! One-dimensional finite-volume harness for the confined porous-medium
//! flow `v_t = (x v + (v^m)_x)_x` and the confined fourth-order flow
//! `v_t = (x v)_x - theta (v w_x)_x` with `w = v^{m-3/2} (v^{m-1/2})_xx`,
//! plus push-forward initial data, the 1D Wasserstein distance via
//! quantile functions, and decay-rate fitting.
//!
//! Both flows are discretized in the common form `v_t = (v xi_x)_x` with a
//! flow-specific node potential `xi` (entropy-derivative plus confinement
//! for the porous-medium flow; confinement minus `theta w` for the
//! fourth-order flow). Face mobility is the harmonic mean inside the
//! support and the force-sign upwind value at support/vacuum faces: the
//! first makes a facewise-equilibrated profile an exact steady state, the
//! second lets the free boundary advance into vacuum. Zero-flux ends
//! conserve the trapezoid mass exactly. Time stepping is implicit Euler
//! with a damped Newton inner solver on the banded system.
//!
//! The `m = 1` fourth-order (DLSS) potential is evaluated through the
//! square-root substitution `w = sqrt(v)`, which is the stable way to
//! discretize that equation on positive data.

use thiserror::Error;

use crate::profile::barenblatt;
use crate::FloatPoly;

#[derive(Debug, Error, PartialEq)]
pub enum EvolveError {
    #[error("grid needs at least 8 nodes")]
    GridTooSmall,
    #[error("domain half-width must be >= 1.5 for compactly supported profiles, got {0}")]
    DomainTooSmall(f64),
    #[error("time step must be positive")]
    NonpositiveStep,
    #[error("perturbation map is not injective on the support (1 + s psi'' <= 0)")]
    NonInjective,
    #[error("Newton solver failed to converge (residual {residual:.3e} after {iters} iterations)")]
    SolverDiverged { residual: f64, iters: usize },
    #[error("positivity floor triggered on {count} of {total} nodes")]
    PositivityLoss { count: usize, total: usize },
    #[error("fourth-order stepping supports m = 1 and m = 3/2, got {0}")]
    UnsupportedExponent(f64),
    #[error("diffusion exponent m must be >= 1, got {0}")]
    ExponentBelowOne(f64),
    #[error("masses differ beyond tolerance: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("decay fit needs at least 3 positive samples in the window")]
    WindowTooSmall,
    #[error("nonpositive distance value in the fit window at t = {0}")]
    NonpositiveDistance(f64),
}

type Result<T> = std::result::Result<T, EvolveError>;

/// Uniform node-centered grid on `[-L, L]` (endpoints included).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(EvolveError::GridTooSmall);
        }
        Ok(Grid1D {
            half_width,
            n,
            h: 2.0 * half_width / (n - 1) as f64,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    /// Trapezoid cell width (half cells at the ends).
    fn cell(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Sampled nonnegative state of the 1D evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct State1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl State1D {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Self {
        assert_eq!(values.len(), grid.n);
        State1D { grid, values, time }
    }

    /// Trapezoid mass (the quantity the scheme conserves exactly).
    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    /// Trapezoid value of `int x^order v dx` for `order` in `{0, 1, 2}`.
    pub fn moment(&self, order: u32) -> f64 {
        assert!(order <= 2, "moments implemented through order 2");
        (0..self.grid.n)
            .map(|i| self.grid.cell(i) * self.grid.node(i).powi(order as i32) * self.values[i])
            .sum()
    }

    pub fn linf_diff(&self, other: &State1D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rescaled copy with the given trapezoid mass. Sampling a compactly
    /// supported profile puts O(h^2) quadrature error into the discrete
    /// mass, so reference states are mass-matched before Wasserstein
    /// comparisons.
    pub fn scaled_to_mass(&self, mass: f64) -> State1D {
        let own = self.mass();
        let factor = mass / own;
        State1D {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            time: self.time,
        }
    }
}

/// Samples the Barenblatt profile on a grid.
pub fn sample_profile(m: f64, grid: &Grid1D) -> State1D {
    let values = (0..grid.n).map(|i| barenblatt(grid.node(i).abs(), m)).collect();
    State1D::new(grid.clone(), values, 0.0)
}

/// Builds the push-forward of the profile under `T = id + s psi'` by
/// inverting `T` at every node: `v_s(T(x)) T'(x) = v_*(x)`.
pub fn pushforward_perturb(
    psi: &FloatPoly,
    s: f64,
    m: f64,
    grid: &Grid1D,
) -> Result<State1D> {
    assert_eq!(psi.dim(), 1, "generating potential must be one-dimensional");
    if m > 1.0 && grid.half_width < 1.5 {
        return Err(EvolveError::DomainTooSmall(grid.half_width));
    }
    let dpsi = psi.partial(0);
    let ddpsi = dpsi.partial(0);
    let t_of = |x: f64| x + s * dpsi.eval_f64(&[x]);
    let tp_of = |x: f64| 1.0 + s * ddpsi.eval_f64(&[x]);

    // Injectivity on the relevant region.
    let x_extent = if m > 1.0 { 1.0 } else { grid.half_width + 1.0 };
    let probes = 4096;
    for p in 0..=probes {
        let x = -x_extent + 2.0 * x_extent * p as f64 / probes as f64;
        if tp_of(x) <= 0.0 {
            return Err(EvolveError::NonInjective);
        }
    }

    let invert = |y: f64| -> Option<f64> {
        // T is strictly increasing on [-extent, extent]; bisection bracket
        // then Newton polish.
        let (mut lo, mut hi) = (-x_extent, x_extent);
        if y <= t_of(lo) || y >= t_of(hi) {
            return None;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if t_of(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..8 {
            x -= (t_of(x) - y) / tp_of(x);
        }
        Some(x.clamp(-x_extent, x_extent))
    };

    let mut values = vec![0.0; grid.n];
    for (i, value) in values.iter_mut().enumerate() {
        let y = grid.node(i);
        if let Some(x) = invert(y) {
            *value = barenblatt(x.abs(), m) / tp_of(x);
        } else if m == 1.0 {
            // outside the probed window the Gaussian tail is negligible
            *value = 0.0;
        }
    }
    Ok(State1D::new(grid.clone(), values, 0.0))
}

/// Which confined flow to step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flow {
    /// Second-order porous-medium flow with exponent `m >= 1`.
    Pme { m: f64 },
    /// Fourth-order flow; `m` restricted to `{1, 3/2}`, `theta` from the
    /// scaling constants.
    Fourth { m: f64, theta: f64 },
}

/// Unconditional acceptance level; far below the per-step truncation error.
const NEWTON_TOL: f64 = 1e-10;
/// Residual level accepted when the iteration stalls: the fourth-order
/// potential amplifies coefficient roundoff by 1/h^3, so the attainable
/// floor sits well above machine precision on fine grids.
const NEWTON_STALL_TOL: f64 = 5e-8;
const NEWTON_MAX_ITERS: usize = 40;
const POSITIVITY_FLOOR: f64 = 1e-14;
const MAX_FLOOR_FRACTION: f64 = 0.02;
/// Density clamp used inside logarithms / square roots.
const EVAL_FLOOR: f64 = 1e-300;

/// Mirror index for even reflection at the domain ends (Neumann ghosts).
fn mirror(idx: isize, n: usize) -> usize {
    let last = (n - 1) as isize;
    let mut i = idx;
    if i < 0 {
        i = -i;
    }
    if i > last {
        i = 2 * last - i;
    }
    i as usize
}

struct PotentialWorkspace {
    xi: Vec<f64>,
    /// Per node: (columns, derivatives) of `d xi_i / d v_j`, up to 5 entries.
    jac: Vec<[(usize, f64); 5]>,
}

fn potential(flow: &Flow, grid: &Grid1D, v: &[f64], ws: &mut PotentialWorkspace) {
    let n = grid.n;
    let h2 = grid.h * grid.h;
    match *flow {
        Flow::Pme { m } => {
            for i in 0..n {
                let x = grid.node(i);
                let z = v[i].max(0.0);
                let (ep, e2) = if m == 1.0 {
                    let zc = z.max(EVAL_FLOOR);
                    (zc.ln() + 1.0, 1.0 / zc)
                } else if z <= 0.0 {
                    (0.0, 0.0)
                } else {
                    (m * z.powf(m - 1.0) / (m - 1.0), m * z.powf(m - 2.0))
                };
                ws.xi[i] = ep + 0.5 * x * x;
                ws.jac[i] = [(i, e2), (i, 0.0), (i, 0.0), (i, 0.0), (i, 0.0)];
            }
        }
        Flow::Fourth { m, theta } => {
            if m == 1.0 {
                // xi = x^2/2 - theta lap(w)/w with w = sqrt(v); fourth-order
                // five-point Laplacian (exact through quintic polynomials)
                // keeps the truncation error of the smooth positive branch
                // at O(h^4).
                let w: Vec<f64> = v.iter().map(|&z| z.max(EVAL_FLOOR).sqrt()).collect();
                const STENCIL: [(isize, f64); 5] = [
                    (-2, -1.0 / 12.0),
                    (-1, 16.0 / 12.0),
                    (0, -30.0 / 12.0),
                    (1, 16.0 / 12.0),
                    (2, -1.0 / 12.0),
                ];
                for i in 0..n {
                    let x = grid.node(i);
                    let mut lap = 0.0;
                    for (offset, coeff) in STENCIL {
                        lap += coeff * w[mirror(i as isize + offset, n)];
                    }
                    lap /= h2;
                    let wi = w[i];
                    ws.xi[i] = 0.5 * x * x - theta * lap / wi;
                    // d xi_i / d v_j = -theta [ dlap/dw_j / w_i ] dw_j/dv_j
                    // plus the j = i product-rule term.
                    let mut entries = [(i, 0.0); 5];
                    for (slot, (offset, coeff)) in STENCIL.iter().enumerate() {
                        let j = mirror(i as isize + offset, n);
                        let mut d = -theta * coeff / h2 / wi / (2.0 * w[j]);
                        if j == i {
                            d += theta * lap / (wi * wi) / (2.0 * wi);
                        }
                        entries[slot] = (j, d);
                    }
                    ws.jac[i] = merge_entries(entries);
                }
            } else {
                // m = 3/2: v^{m-1/2} = v, xi = x^2/2 - theta lap(v) on the
                // compact three-point stencil (wide stencils smear the
                // contact line).
                for i in 0..n {
                    let x = grid.node(i);
                    let im = mirror(i as isize - 1, n);
                    let ip = mirror(i as isize + 1, n);
                    let vi = v[i].max(0.0);
                    let lap = (v[im].max(0.0) - 2.0 * vi + v[ip].max(0.0)) / h2;
                    ws.xi[i] = 0.5 * x * x - theta * lap;
                    let c = -theta / h2;
                    ws.jac[i] = merge_entries([
                        (im, c),
                        (i, -2.0 * c),
                        (ip, c),
                        (i, 0.0),
                        (i, 0.0),
                    ]);
                }
            }
        }
    }
}

/// Collapses duplicate columns (from reflection ghosts) by accumulation.
fn merge_entries(entries: [(usize, f64); 5]) -> [(usize, f64); 5] {
    let mut out = entries;
    for a in 0..5 {
        for b in (a + 1)..5 {
            if out[b].1 != 0.0 && out[b].0 == out[a].0 {
                out[a].1 += out[b].1;
                out[b].1 = 0.0;
            }
        }
    }
    out
}

/// Banded LU solver without pivoting, bandwidth `b` on each side.
struct Banded {
    n: usize,
    b: usize,
    /// `data[(col - row + b) * n + row]`
    data: Vec<f64>,
}

impl Banded {
    fn zeros(n: usize, b: usize) -> Self {
        Banded {
            n,
            b,
            data: vec![0.0; (2 * b + 1) * n],
        }
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.b >= row && col <= row + self.b);
        (col + self.b - row) * self.n + row
    }

    fn add(&mut self, row: usize, col: usize, value: f64) {
        let i = self.idx(row, col);
        self.data[i] += value;
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.idx(row, col)]
    }

    fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self.idx(row, col);
        self.data[i] = value;
    }

    fn solve(mut self, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let pivot = self.get(i, i);
            if !pivot.is_finite() || pivot.abs() < 1e-300 {
                return None;
            }
            for row in (i + 1)..=(i + b).min(n - 1) {
                let f = self.get(row, i) / pivot;
                if f == 0.0 {
                    continue;
                }
                for col in (i + 1)..=(i + b).min(n - 1) {
                    let update = f * self.get(i, col);
                    if update != 0.0 {
                        let v = self.get(row, col) - update;
                        self.set(row, col, v);
                    }
                }
                rhs[row] -= f * rhs[i];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for col in (i + 1)..=(i + b).min(n - 1) {
                acc -= self.get(i, col) * x[col];
            }
            x[i] = acc / self.get(i, i);
        }
        Some(x)
    }
}

/// One implicit Euler step of the chosen flow. Conserves the trapezoid
/// mass exactly (zero-flux ends, conservative flux form).
pub fn step_flow(state: &State1D, dt: f64, flow: &Flow) -> Result<State1D> {
    if dt <= 0.0 {
        return Err(EvolveError::NonpositiveStep);
    }
    match *flow {
        Flow::Pme { m } if m < 1.0 => return Err(EvolveError::ExponentBelowOne(m)),
        Flow::Fourth { m, .. } if m != 1.0 && (m - 1.5).abs() > 1e-12 => {
            return Err(EvolveError::UnsupportedExponent(m))
        }
        _ => {}
    }
    let grid = &state.grid;
    let n = grid.n;
    let h = grid.h;
    let mut v = state.values.clone();
    let v_old = &state.values;
    let mut ws = PotentialWorkspace {
        xi: vec![0.0; n],
        jac: vec![[(0, 0.0); 5]; n],
    };
    // Jacobian bandwidth: local potential for the porous-medium flow,
    // three-point stencil for the thin film, five-point for DLSS.
    let bandwidth = match *flow {
        Flow::Pme { .. } => 1,
        Flow::Fourth { m: 1.0, .. } => 3,
        Flow::Fourth { .. } => 2,
    };

    let scale = v_old.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let mut converged = false;
    let mut last_residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    let mut flux = vec![0.0; n - 1];
    for iter in 0..NEWTON_MAX_ITERS {
        potential(flow, grid, &v, &mut ws);

        // Face fluxes F_f between nodes f and f+1, and their stencils.
        flux.iter_mut().for_each(|f| *f = 0.0);
        // derivative entries: (column, value), at most 12 per face
        let mut flux_jac: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(12); n - 1];
        for f in 0..n - 1 {
            let a = v[f].max(0.0);
            let b = v[f + 1].max(0.0);
            let sum = a + b;
            if sum < EVAL_FLOOR {
                continue;
            }
            let dxi = (ws.xi[f + 1] - ws.xi[f]) / h;
            // Mobility: harmonic mean inside the support; at a vacuum face
            // upwind by the force sign (flow runs toward +x when dxi < 0).
            // The upwind branch lets the free boundary advance while a
            // profile in facewise equilibrium stays exactly fixed.
            let (mob, dmob_da, dmob_db);
            if a > 0.0 && b > 0.0 {
                // ratio form: immune to underflow of squared denormals
                let (ra, rb) = (a / sum, b / sum);
                mob = 2.0 * a * rb;
                dmob_da = 2.0 * rb * rb;
                dmob_db = 2.0 * ra * ra;
            } else if dxi < 0.0 {
                mob = a;
                dmob_da = if v[f] > 0.0 { 1.0 } else { 0.0 };
                dmob_db = 0.0;
            } else {
                mob = b;
                dmob_da = 0.0;
                dmob_db = if v[f + 1] > 0.0 { 1.0 } else { 0.0 };
            }
            flux[f] = mob * dxi;
            let entries = &mut flux_jac[f];
            entries.push((f, dmob_da * dxi));
            entries.push((f + 1, dmob_db * dxi));
            if mob != 0.0 {
                for (col, dv) in ws.jac[f + 1] {
                    if dv != 0.0 {
                        entries.push((col, mob * dv / h));
                    }
                }
                for (col, dv) in ws.jac[f] {
                    if dv != 0.0 {
                        entries.push((col, -mob * dv / h));
                    }
                }
            }
        }

        // Residual R_i = v_i - v_old_i - dt (F_i - F_{i-1}) / cell_i.
        let mut residual = vec![0.0; n];
        for i in 0..n {
            let upstream = if i > 0 { flux[i - 1] } else { 0.0 };
            let downstream = if i < n - 1 { flux[i] } else { 0.0 };
            residual[i] = v[i] - v_old[i] - dt * (downstream - upstream) / grid.cell(i);
        }
        last_residual = residual.iter().fold(0.0f64, |acc, r| {
            if r.is_finite() {
                acc.max(r.abs())
            } else {
                f64::INFINITY
            }
        });
        if last_residual <= NEWTON_TOL * scale {
            converged = true;
            break;
        }
        // Roundoff-floor stall: residual small but no longer improving.
        if last_residual <= NEWTON_STALL_TOL * scale && last_residual >= 0.25 * prev_residual {
            converged = true;
            break;
        }
        prev_residual = last_residual;
        if iter == NEWTON_MAX_ITERS - 1 {
            break;
        }

        let mut jac = Banded::zeros(n, bandwidth);
        for i in 0..n {
            jac.add(i, i, 1.0);
            let c = dt / grid.cell(i);
            if i < n - 1 {
                for &(col, dval) in &flux_jac[i] {
                    jac.add(i, col, -c * dval);
                }
            }
            if i > 0 {
                for &(col, dval) in &flux_jac[i - 1] {
                    jac.add(i, col, c * dval);
                }
            }
        }
        let delta = match jac.solve(residual) {
            Some(d) => d,
            // Singular linearization with an already-small residual: accept.
            None if last_residual <= NEWTON_STALL_TOL * scale => {
                converged = true;
                break;
            }
            None => {
                return Err(EvolveError::SolverDiverged {
                    residual: last_residual,
                    iters: iter,
                })
            }
        };
        // Damped update: keep the iterate from plunging far negative.
        let mut alpha = 1.0f64;
        for i in 0..n {
            let next = v[i] - delta[i];
            if next < -0.1 * scale {
                alpha = alpha.min((v[i] + 0.1 * scale) / delta[i]);
            }
        }
        let alpha = alpha.clamp(0.05, 1.0);
        for i in 0..n {
            v[i] -= alpha * delta[i];
        }
    }
    if !converged && last_residual > NEWTON_STALL_TOL * scale {
        return Err(EvolveError::SolverDiverged {
            residual: last_residual,
            iters: NEWTON_MAX_ITERS,
        });
    }

    // Final explicit conservative update with the converged fluxes: the
    // state is then exactly of flux-difference form, so the trapezoid mass
    // is conserved to the roundoff of the telescoping sum, independent of
    // the Newton residual.
    potential(flow, grid, &v, &mut ws);
    for f in 0..n - 1 {
        let a = v[f].max(0.0);
        let b = v[f + 1].max(0.0);
        let sum = a + b;
        if sum < EVAL_FLOOR {
            flux[f] = 0.0;
            continue;
        }
        let dxi = (ws.xi[f + 1] - ws.xi[f]) / h;
        let mob = if a > 0.0 && b > 0.0 {
            2.0 * a * (b / sum)
        } else if dxi < 0.0 {
            a
        } else {
            b
        };
        flux[f] = mob * dxi;
    }
    for i in 0..n {
        let upstream = if i > 0 { flux[i - 1] } else { 0.0 };
        let downstream = if i < n - 1 { flux[i] } else { 0.0 };
        v[i] = v_old[i] + dt * (downstream - upstream) / grid.cell(i);
    }

    // Positivity floor with violation accounting.
    let mut violations = 0usize;
    for value in v.iter_mut() {
        if *value < 0.0 {
            if *value < -POSITIVITY_FLOOR {
                violations += 1;
            }
            *value = 0.0;
        }
    }
    if violations > (MAX_FLOOR_FRACTION * n as f64).ceil() as usize {
        return Err(EvolveError::PositivityLoss {
            count: violations,
            total: n,
        });
    }

    Ok(State1D::new(grid.clone(), v, state.time + dt))
}

/// One implicit step of the confined porous-medium flow.
pub fn step_pme(state: &State1D, dt: f64, m: f64) -> Result<State1D> {
    step_flow(state, dt, &Flow::Pme { m })
}

/// One implicit step of the confined fourth-order flow.
pub fn step_fourth(state: &State1D, dt: f64, m: f64, theta: f64) -> Result<State1D> {
    step_flow(state, dt, &Flow::Fourth { m, theta })
}

/// Advances to `t_end` with target step `dt`, halving the step (up to 12
/// times) whenever the Newton solver fails.
pub fn advance(state: State1D, flow: &Flow, dt: f64, t_end: f64) -> Result<State1D> {
    let mut current = state;
    while current.time < t_end - 1e-12 {
        let step = dt.min(t_end - current.time);
        let mut sub = step;
        let mut halvings = 0;
        loop {
            match step_flow(&current, sub, flow) {
                Ok(next) => {
                    current = next;
                    break;
                }
                Err(EvolveError::SolverDiverged { .. }) if halvings < 12 => {
                    sub *= 0.5;
                    halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(current)
}

/// 1D Wasserstein-2 distance via exact integration of the difference of
/// piecewise-linear quantile functions (monotone CDF inversion on the
/// grid).
pub fn wasserstein_1d(v: &State1D, w: &State1D) -> Result<f64> {
    let mass_v = v.mass();
    let mass_w = w.mass();
    let tol = 1e-8 * mass_v.abs().max(mass_w.abs()).max(1e-300);
    if (mass_v - mass_w).abs() > tol {
        return Err(EvolveError::MassMismatch(mass_v, mass_w));
    }

    // Node CDF: cumulative trapezoid cell masses.
    let cdf = |s: &State1D| -> Vec<f64> {
        let mut acc = Vec::with_capacity(s.grid.n);
        let mut total = 0.0;
        acc.push(0.0);
        for i in 0..s.grid.n - 1 {
            total += 0.5 * s.grid.h * (s.values[i] + s.values[i + 1]);
            acc.push(total);
        }
        acc
    };
    let cv = cdf(v);
    let cw = cdf(w);
    let m_common = cv.last().unwrap().min(*cw.last().unwrap());

    // Sweep the merged breakpoints; between them both quantiles are affine,
    // so Simpson integrates the squared difference exactly.
    let quantile = |s: &State1D, c: &[f64], seg: usize, mass: f64| -> f64 {
        let dm = c[seg + 1] - c[seg];
        let x0 = s.grid.node(seg);
        if dm <= 0.0 {
            x0
        } else {
            x0 + s.grid.h * (mass - c[seg]) / dm
        }
    };

    let mut total = 0.0;
    let mut seg_v = 0usize;
    let mut seg_w = 0usize;
    let mut s_prev = 0.0f64;
    while s_prev < m_common {
        while seg_v + 2 < cv.len() && cv[seg_v + 1] <= s_prev {
            seg_v += 1;
        }
        while seg_w + 2 < cw.len() && cw[seg_w + 1] <= s_prev {
            seg_w += 1;
        }
        let s_next = cv[seg_v + 1].min(cw[seg_w + 1]).min(m_common);
        if s_next <= s_prev {
            // flat stretch of both CDFs: zero mass, no contribution
            if seg_v + 2 < cv.len() || seg_w + 2 < cw.len() {
                if cv[seg_v + 1] <= s_prev && seg_v + 2 < cv.len() {
                    seg_v += 1;
                    continue;
                }
                if cw[seg_w + 1] <= s_prev && seg_w + 2 < cw.len() {
                    seg_w += 1;
                    continue;
                }
            }
            break;
        }
        let diff = |mass: f64| {
            let a = quantile(v, &cv, seg_v, mass);
            let b = quantile(w, &cw, seg_w, mass);
            (a - b) * (a - b)
        };
        let mid = 0.5 * (s_prev + s_next);
        total += (s_next - s_prev) / 6.0 * (diff(s_prev) + 4.0 * diff(mid) + diff(s_next));
        s_prev = s_next;
    }
    Ok(total.sqrt())
}

/// Least-squares exponential decay rate on a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Decay rate (positive for a decaying signal).
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Fits `ln d = b - rate * t` over samples with `t` in `[t0, t1]`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let mut pts = Vec::new();
    for &(t, d) in series {
        if t >= window.0 - 1e-12 && t <= window.1 + 1e-12 {
            if d <= 0.0 {
                return Err(EvolveError::NonpositiveDistance(t));
            }
            pts.push((t, d.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(EvolveError::WindowTooSmall);
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let fit = mean_y + slope * (p.0 - mean_t);
            (p.1 - fit) * (p.1 - fit)
        })
        .sum();
    let r_squared = if ss_tot <= 1e-30 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        rate: -slope,
        r_squared,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{derive_constants, profile_mass};
    use approx::assert_abs_diff_eq;

    fn var_x() -> FloatPoly {
        FloatPoly::var(1, 0)
    }

    #[test]
    fn pushforward_translation_is_a_shift() {
        let grid = Grid1D::new(1.5, 601).unwrap();
        let state = pushforward_perturb(&var_x(), 0.05, 2.0, &grid).unwrap();
        for i in 0..grid.n {
            let x = grid.node(i);
            assert_abs_diff_eq!(
                state.values[i],
                barenblatt((x - 0.05).abs(), 2.0),
                epsilon = 1e-10
            );
        }
        // s = 0 reproduces the profile
        let zero = pushforward_perturb(&var_x(), 0.0, 2.0, &grid).unwrap();
        assert!(zero.linf_diff(&sample_profile(2.0, &grid)) < 1e-12);
    }

    #[test]
    fn pushforward_dilation_closed_form() {
        let grid = Grid1D::new(1.5, 601).unwrap();
        let psi = var_x().pow(2).scale(&0.5);
        let s = 0.07;
        let state = pushforward_perturb(&psi, s, 2.0, &grid).unwrap();
        for i in 0..grid.n {
            let x = grid.node(i);
            let expect = barenblatt((x / (1.0 + s)).abs(), 2.0) / (1.0 + s);
            assert_abs_diff_eq!(state.values[i], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn pushforward_rejects_folding() {
        let grid = Grid1D::new(1.5, 101).unwrap();
        let psi = var_x().pow(2).scale(&0.5);
        assert!(matches!(
            pushforward_perturb(&psi, -1.2, 2.0, &grid),
            Err(EvolveError::NonInjective)
        ));
    }

    #[test]
    fn pme_profile_is_a_fixed_point() {
        for m in [1.0, 2.0] {
            let grid = Grid1D::new(if m > 1.0 { 1.5 } else { 6.0 }, 801).unwrap();
            let star = sample_profile(m, &grid);
            let next = step_pme(&star, 1e-3, m).unwrap();
            assert!(
                next.linf_diff(&star) <= 1e-8,
                "m={m}: moved {}",
                next.linf_diff(&star)
            );
        }
    }

    #[test]
    fn pme_conserves_mass() {
        let grid = Grid1D::new(1.5, 301).unwrap();
        let mut state = pushforward_perturb(&var_x(), 0.05, 2.0, &grid).unwrap();
        let mass0 = state.mass();
        for _ in 0..1000 {
            state = step_pme(&state, 1e-3, 2.0).unwrap();
        }
        assert_abs_diff_eq!(state.mass(), mass0, epsilon = 1e-10 * mass0);
    }

    #[test]
    fn pme_heat_mean_decays_exponentially() {
        // translated Gaussian: first moment obeys d<x>/dt = -<x>
        let grid = Grid1D::new(6.0, 601).unwrap();
        let state0 = pushforward_perturb(&var_x(), 0.2, 1.0, &grid).unwrap();
        let m1_initial = state0.moment(1);
        let state = advance(state0, &Flow::Pme { m: 1.0 }, 1e-3, 1.0).unwrap();
        let expect = m1_initial * (-1.0f64).exp();
        assert!(
            (state.moment(1) - expect).abs() <= 0.01 * expect.abs(),
            "moment {} vs {}",
            state.moment(1),
            expect
        );
    }

    #[test]
    fn fourth_profile_is_near_fixed_for_thin_film() {
        let theta = derive_constants(&1.5f64, 1).theta;
        let grid = Grid1D::new(1.5, 1201).unwrap();
        let star = sample_profile(1.5, &grid);
        let state = advance(
            star.clone(),
            &Flow::Fourth { m: 1.5, theta },
            1e-3,
            1.0,
        )
        .unwrap();
        let drift = state.linf_diff(&star);
        assert!(drift <= 1e-6, "thin-film drift {drift}");
    }

    #[test]
    fn fourth_profile_is_near_fixed_for_dlss() {
        let theta = derive_constants(&1.0f64, 1).theta;
        let grid = Grid1D::new(6.0, 1001).unwrap();
        let star = sample_profile(1.0, &grid);
        let state = advance(
            star.clone(),
            &Flow::Fourth { m: 1.0, theta },
            1e-3,
            1.0,
        )
        .unwrap();
        let drift = state.linf_diff(&star);
        assert!(drift <= 1e-6, "dlss drift {drift}");
    }

    #[test]
    fn fourth_rejects_unsupported_exponent() {
        let grid = Grid1D::new(1.5, 101).unwrap();
        let star = sample_profile(2.0, &grid);
        assert!(matches!(
            step_fourth(&star, 1e-3, 2.0, 1.0),
            Err(EvolveError::UnsupportedExponent(_))
        ));
    }

    #[test]
    fn moments_of_the_profile() {
        let grid = Grid1D::new(1.5, 2001).unwrap();
        let star = sample_profile(2.0, &grid);
        assert_abs_diff_eq!(star.moment(0), profile_mass(2.0, 1, 32), epsilon = 1e-7);
        assert_abs_diff_eq!(star.moment(1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(star.moment(2), 1.0 / 15.0, epsilon = 1e-7);
    }

    #[test]
    fn wasserstein_examples() {
        let grid = Grid1D::new(1.5, 801).unwrap();
        let star = sample_profile(2.0, &grid);
        assert_eq!(wasserstein_1d(&star, &star).unwrap(), 0.0);

        // shift by c: distance |c| sqrt(M); the reference is mass-matched
        // to absorb the O(h^2) sampling error in the discrete masses.
        let c = 0.08;
        let shifted = pushforward_perturb(&var_x(), c, 2.0, &grid).unwrap();
        let star_ref = star.scaled_to_mass(shifted.mass());
        let d = wasserstein_1d(&shifted, &star_ref).unwrap();
        let expect = c * shifted.mass().sqrt();
        assert_abs_diff_eq!(d, expect, epsilon = 1e-4 * expect);

        // dilation: the optimal map is the linear map itself,
        // d^2 = s^2 int x^2 v_* dx
        let s = 0.06;
        let psi = var_x().pow(2).scale(&0.5);
        let dilated = pushforward_perturb(&psi, s, 2.0, &grid).unwrap();
        let star_ref = star.scaled_to_mass(dilated.mass());
        let d = wasserstein_1d(&dilated, &star_ref).unwrap();
        let expect = s * (1.0f64 / 15.0).sqrt();
        assert!((d - expect).abs() <= 1e-3 * expect.max(1e-12), "{d} vs {expect}");

        // mass mismatch is rejected
        let mut heavier = star.clone();
        for value in heavier.values.iter_mut() {
            *value *= 1.5;
        }
        assert!(matches!(
            wasserstein_1d(&heavier, &star),
            Err(EvolveError::MassMismatch(_, _))
        ));
    }

    #[test]
    fn rate_fit_examples() {
        // pure exponential
        let series: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, (-t).exp())
            })
            .collect();
        let fit = fit_decay_rate(&series, (1.0, 5.0)).unwrap();
        assert_abs_diff_eq!(fit.rate, 1.0, epsilon = 1e-12);
        assert!(fit.r_squared > 0.999999);

        // two-mode decay fitted on a late window
        let series: Vec<(f64, f64)> = (0..70)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, 0.9 * (-t).exp() + 0.1 * (-5.0 * t).exp())
            })
            .collect();
        let fit = fit_decay_rate(&series, (2.0, 6.0)).unwrap();
        assert!((fit.rate - 1.0).abs() <= 0.01);

        // constant series: rate 0
        let series: Vec<(f64, f64)> = (0..40).map(|i| (0.1 * i as f64, 2.0)).collect();
        let fit = fit_decay_rate(&series, (0.0, 4.0)).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.0, epsilon = 1e-14);

        // nonpositive values rejected
        let series = vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)];
        assert!(fit_decay_rate(&series, (0.0, 2.0)).is_err());
    }

    #[test]
    fn translation_mode_decays_at_unit_rate() {
        // quick version of the acceptance run: PME m = 2
        let grid = Grid1D::new(1.5, 401).unwrap();
        let mut state = pushforward_perturb(&var_x(), 0.05, 2.0, &grid).unwrap();
        let star = sample_profile(2.0, &grid).scaled_to_mass(state.mass());
        let mut series = Vec::new();
        let dt = 2e-3;
        while state.time < 3.0 {
            state = step_pme(&state, dt, 2.0).unwrap();
            series.push((state.time, wasserstein_1d(&state, &star).unwrap()));
        }
        let fit = fit_decay_rate(&series, (0.5, 3.0)).unwrap();
        assert!(
            (fit.rate - 1.0).abs() <= 0.05,
            "rate {} r2 {}",
            fit.rate,
            fit.r_squared
        );
    }
}
