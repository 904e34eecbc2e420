//! Command-line front end: spectrum tables, eigenfunction printing,
//! verification targets, crossing solver, profile sampling, the 1D PDE
//! harness, and decay-rate extraction.
//!
//! Every artifact embeds the tool version and the fully resolved run
//! configuration; identical configurations produce byte-identical output.
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;

use dhspec_core::evolve::{
    advance, fit_decay_rate, pushforward_perturb, sample_profile, wasserstein_1d, Flow, Grid1D,
    State1D,
};
use dhspec_core::functionals::{relation_residual, standard_family};
use dhspec_core::operators::{apply_entropy_hessian, apply_information_hessian};
use dhspec_core::profile::{barenblatt, derive_constants, Params};
use dhspec_core::quadrature::{
    divergence_form_residual, gram, poincare_ratio, GramOp, QuadratureRule,
};
use dhspec_core::scalar::parse_rat;
use dhspec_core::spectrum::{
    crossings, eigenfunction, index_pairs, lambda_eig, mu_eig, multiplicity, spectrum_table,
    CrossingSet, EigenIndex, MRoot,
};
use dhspec_core::{Rat, RatPoly};

const TOOL_NAME: &str = "dhspec";
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact rational flag accepted as `p/q`, a decimal, or an integer.
#[derive(Debug, Clone)]
struct RatArg {
    raw: String,
    value: Rat,
}

impl RatArg {
    fn f64(&self) -> f64 {
        self.value.to_f64().unwrap()
    }
}

impl FromStr for RatArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(RatArg {
            raw: s.to_string(),
            value: parse_rat(s)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = TOOL_NAME,
    version = TOOL_VERSION,
    about = "Spectra of the displacement Hessians of the confined thin-film/DLSS family"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate eigenvalues sorted by mu.
    Spectrum(SpectrumArgs),
    /// Print one eigenfunction with its eigenvalues.
    Eigenfunction(EigenfunctionArgs),
    /// Run a verification target; exits 1 on any failed case.
    Verify(VerifyArgs),
    /// Solve for the m-values where two eigenvalue branches cross.
    Crossings(CrossingsArgs),
    /// Sample the stationary profile; CSV rows with a JSON header.
    Profile(ProfileArgs),
    /// Integrate the 1D confined flow and record diagnostics to CSV.
    Simulate(SimulateArgs),
    /// Fit an exponential decay rate from a simulate CSV.
    Rate(RateArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Diffusion exponent (rational `p/q` or decimal), must be >= 1.
    #[arg(long = "m")]
    m: RatArg,
    /// Space dimension.
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long = "max-degree", default_value_t = 8)]
    max_degree: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigenfunctionArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long)]
    l: u32,
    /// Harmonic label in 1..=N_l.
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(subcommand)]
    target: VerifyTarget,
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Exact eigen-identities for both Hessians over all indices.
    Eigen(VerifyEigenArgs),
    /// Entropy-information relation on a family of test densities.
    Relation(VerifyRelationArgs),
    /// Divergence form of the entropy Hessian against its explicit formula.
    Operator(VerifyOperatorArgs),
    /// Eigenfunction Gram matrices: diagonality and the Hessian identity.
    Orthogonality(VerifyOrthogonalityArgs),
    /// Weighted Poincare ratios of the eigenfunction family.
    Poincare(VerifyPoincareArgs),
}

#[derive(Args)]
struct VerifyEigenArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long = "max-degree", default_value_t = 8)]
    max_degree: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyRelationArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the density family: all, translate, dilate, radial,
    /// shear, cubic, gaussian, mixture.
    #[arg(long, default_value = "all")]
    family: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyOperatorArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long = "max-degree", default_value_t = 6)]
    max_degree: u32,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyOrthogonalityArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long = "max-degree", default_value_t = 6)]
    max_degree: u32,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyPoincareArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long = "max-degree", default_value_t = 6)]
    max_degree: u32,
    /// Empirical bound the ratios must stay below.
    #[arg(long, default_value_t = 10.0)]
    bound: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrossingsArgs {
    /// Eigenvalue pair as `l,k:l,k` (repeatable).
    #[arg(long, required = true)]
    pairs: Vec<String>,
    #[arg(long = "N")]
    n_dim: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long = "m")]
    m: RatArg,
    #[arg(long = "N")]
    n_dim: u32,
    /// Evaluate at a single radius instead of a grid.
    #[arg(long)]
    at: Option<f64>,
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 1.5)]
    rmax: f64,
    /// Mass constant of the source profile (mass is derived).
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Prescribe the total mass instead; sigma is found by bisection.
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Equation {
    Pme,
    Fourth,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    eq: Equation,
    #[arg(long = "m")]
    m: RatArg,
    /// Perturbation mode `l=<l>,k=<k>` (eigenfunction of that index).
    #[arg(long, default_value = "l=1,k=0")]
    mode: String,
    /// Perturbation strength s.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Number of grid nodes.
    #[arg(long, default_value_t = 801)]
    grid: usize,
    /// Domain half-width (defaults to 1.5 for m > 1, 6 for m = 1).
    #[arg(long = "L")]
    half_width: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 4.5)]
    tmax: f64,
    /// Record every k-th step.
    #[arg(long = "sample-every", default_value_t = 5)]
    sample_every: usize,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RateArgs {
    /// CSV produced by `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value_t = 4.0)]
    t1: f64,
    /// Which diagnostic column to fit.
    #[arg(long, default_value = "wasserstein")]
    column: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

fn tool() -> Tool {
    Tool {
        name: TOOL_NAME,
        version: TOOL_VERSION,
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| format!("writing {path:?}: {e}")),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| format!("writing stdout: {e}"))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn require_m_at_least_one(m: &RatArg) -> Result<(), String> {
    if m.value < Rat::from_integer(1.into()) {
        return Err(format!(
            "invalid --m {}: the diffusion exponent must satisfy m >= 1",
            m.raw
        ));
    }
    Ok(())
}

fn rat_str(r: &Rat) -> String {
    r.to_string()
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct SpectrumRow {
    l: u32,
    k: u32,
    lambda: String,
    mu: String,
    multiplicity: u64,
    degree: u32,
}

#[derive(Serialize)]
struct SpectrumReport {
    tool: Tool,
    config: SpectrumConfig,
    entries: Vec<SpectrumRow>,
}

#[derive(Serialize)]
struct SpectrumConfig {
    m: String,
    n_dim: u32,
    max_degree: u32,
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let table =
        spectrum_table(&args.m.value, args.n_dim, args.max_degree).map_err(|e| e.to_string())?;
    let rows: Vec<SpectrumRow> = table
        .iter()
        .map(|e| SpectrumRow {
            l: e.l,
            k: e.k,
            lambda: rat_str(&e.lambda),
            mu: rat_str(&e.mu),
            multiplicity: e.multiplicity,
            degree: e.degree,
        })
        .collect();
    let content = match args.format {
        Format::Json => to_json(&SpectrumReport {
            tool: tool(),
            config: SpectrumConfig {
                m: args.m.raw.clone(),
                n_dim: args.n_dim,
                max_degree: args.max_degree,
            },
            entries: rows,
        }),
        Format::Csv => {
            let mut csv = String::new();
            let _ = writeln!(
                csv,
                "# {} {} spectrum m={} N={} max_degree={}",
                TOOL_NAME, TOOL_VERSION, args.m.raw, args.n_dim, args.max_degree
            );
            csv.push_str("l,k,lambda,mu,multiplicity,degree\n");
            for r in rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    r.l, r.k, r.lambda, r.mu, r.multiplicity, r.degree
                );
            }
            csv
        }
    };
    emit(args.out.as_ref(), &content)?;
    Ok(0)
}

// ----------------------------------------------------------- eigenfunction

#[derive(Serialize)]
struct EigenfunctionReport {
    tool: Tool,
    config: EigenfunctionConfig,
    lambda: String,
    mu: String,
    degree: u32,
    harmonic_multiplicity: u64,
    polynomial: String,
}

#[derive(Serialize)]
struct EigenfunctionConfig {
    m: String,
    n_dim: u32,
    l: u32,
    n: u32,
    k: u32,
}

fn cmd_eigenfunction(args: &EigenfunctionArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let idx = EigenIndex {
        l: args.l,
        n: args.n,
        k: args.k,
    };
    let psi = eigenfunction(&idx, &args.m.value, args.n_dim).map_err(|e| e.to_string())?;
    let lambda = lambda_eig(args.l, args.k, &args.m.value, args.n_dim).map_err(|e| e.to_string())?;
    let mu = mu_eig(args.l, args.k, &args.m.value, args.n_dim).map_err(|e| e.to_string())?;
    let report = EigenfunctionReport {
        tool: tool(),
        config: EigenfunctionConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            l: args.l,
            n: args.n,
            k: args.k,
        },
        lambda: rat_str(&lambda),
        mu: rat_str(&mu),
        degree: psi.degree(),
        harmonic_multiplicity: multiplicity(args.l, args.n_dim).map_err(|e| e.to_string())?,
        polynomial: psi.to_string(),
    };
    emit(args.out.as_ref(), &to_json(&report))?;
    Ok(0)
}

// ------------------------------------------------------------------ verify

#[derive(Serialize)]
struct VerifyCase {
    case: String,
    residual: String,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport<C: Serialize> {
    tool: Tool,
    target: &'static str,
    config: C,
    cases: Vec<VerifyCase>,
    passed: bool,
}

fn finish_verify<C: Serialize>(
    target: &'static str,
    config: C,
    cases: Vec<VerifyCase>,
    out: Option<&PathBuf>,
) -> Result<u8, String> {
    let passed = cases.iter().all(|c| c.pass);
    let report = VerifyReport {
        tool: tool(),
        target,
        config,
        cases,
        passed,
    };
    emit(out, &to_json(&report))?;
    Ok(if passed { 0 } else { 1 })
}

#[derive(Serialize)]
struct MnConfig {
    m: String,
    n_dim: u32,
    max_degree: u32,
}

fn cmd_verify_eigen(args: &VerifyEigenArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let m = &args.m.value;
    let mut cases = Vec::new();
    for (l, k) in index_pairs(args.n_dim, args.max_degree) {
        let lambda = lambda_eig(l, k, m, args.n_dim).map_err(|e| e.to_string())?;
        let mu = mu_eig(l, k, m, args.n_dim).map_err(|e| e.to_string())?;
        let count = multiplicity(l, args.n_dim).map_err(|e| e.to_string())? as u32;
        for n in 1..=count {
            let idx = EigenIndex { l, n, k };
            let psi = eigenfunction(&idx, m, args.n_dim).map_err(|e| e.to_string())?;
            let he_defect = apply_entropy_hessian(&psi, m, args.n_dim)
                .map_err(|e| e.to_string())?
                .sub(&psi.scale(&lambda));
            let hi_defect = apply_information_hessian(&psi, m, args.n_dim)
                .map_err(|e| e.to_string())?
                .sub(&psi.scale(&mu));
            let exact = he_defect.is_zero() && hi_defect.is_zero();
            cases.push(VerifyCase {
                case: format!("l={l} n={n} k={k}"),
                residual: if exact {
                    "0".to_string()
                } else {
                    format!("H_E defect: {he_defect}; H_I defect: {hi_defect}")
                },
                pass: exact,
            });
        }
    }
    finish_verify(
        "eigen",
        MnConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            max_degree: args.max_degree,
        },
        cases,
        args.out.as_ref(),
    )
}

#[derive(Serialize)]
struct RelationConfig {
    m: String,
    n_dim: u32,
    samples: usize,
    tol: f64,
    seed: u64,
    family: String,
    radial_order: usize,
    angular_order: usize,
}

fn cmd_verify_relation(args: &VerifyRelationArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let m = args.m.f64();
    let (radial_order, angular_order) = (48, 16);
    let rule = QuadratureRule::build(m, args.n_dim, radial_order, angular_order)
        .map_err(|e| e.to_string())?;
    // Oversample, then filter by the requested family label prefix.
    let pool = standard_family(m, args.n_dim, args.samples * 8, args.seed);
    let selected: Vec<_> = pool
        .into_iter()
        .filter(|d| args.family == "all" || d.label.starts_with(&args.family))
        .take(args.samples)
        .collect();
    if selected.is_empty() {
        return Err(format!(
            "family `{}` produced no densities for m={} N={}",
            args.family, args.m.raw, args.n_dim
        ));
    }
    let mut cases = Vec::new();
    for density in selected {
        let report = relation_residual(&density, m, args.n_dim, &rule).map_err(|e| e.to_string())?;
        cases.push(VerifyCase {
            case: report.label.clone(),
            residual: format!("{:e}", report.residual),
            pass: report.residual <= args.tol,
        });
    }
    finish_verify(
        "relation",
        RelationConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            samples: args.samples,
            tol: args.tol,
            seed: args.seed,
            family: args.family.clone(),
            radial_order,
            angular_order,
        },
        cases,
        args.out.as_ref(),
    )
}

#[derive(Serialize)]
struct ToleranceConfig {
    m: String,
    n_dim: u32,
    max_degree: u32,
    tol: f64,
    radial_order: usize,
    angular_order: usize,
}

fn eigenfunction_basis(m: &Rat, n_dim: u32, max_degree: u32) -> Result<Vec<RatPoly>, String> {
    let mut basis = Vec::new();
    for (l, k) in index_pairs(n_dim, max_degree) {
        let count = multiplicity(l, n_dim).map_err(|e| e.to_string())? as u32;
        for n in 1..=count {
            basis.push(
                eigenfunction(&EigenIndex { l, n, k }, m, n_dim).map_err(|e| e.to_string())?,
            );
        }
    }
    Ok(basis)
}

fn cmd_verify_operator(args: &VerifyOperatorArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let (radial_order, angular_order) = (24, 12);
    let rule = QuadratureRule::build(args.m.f64(), args.n_dim, radial_order, angular_order)
        .map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for (l, k) in index_pairs(args.n_dim, args.max_degree) {
        let count = multiplicity(l, args.n_dim).map_err(|e| e.to_string())? as u32;
        for n in 1..=count {
            let psi = eigenfunction(&EigenIndex { l, n, k }, &args.m.value, args.n_dim)
                .map_err(|e| e.to_string())?;
            let residual = divergence_form_residual(&psi, &args.m.value, args.n_dim, &rule)
                .map_err(|e| e.to_string())?;
            cases.push(VerifyCase {
                case: format!("l={l} n={n} k={k}"),
                residual: format!("{residual:e}"),
                pass: residual <= args.tol,
            });
        }
    }
    finish_verify(
        "operator",
        ToleranceConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            max_degree: args.max_degree,
            tol: args.tol,
            radial_order,
            angular_order,
        },
        cases,
        args.out.as_ref(),
    )
}

fn cmd_verify_orthogonality(args: &VerifyOrthogonalityArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let (radial_order, angular_order) = (24, 12);
    let rule = QuadratureRule::build(args.m.f64(), args.n_dim, radial_order, angular_order)
        .map_err(|e| e.to_string())?;
    let basis = eigenfunction_basis(&args.m.value, args.n_dim, args.max_degree)?;
    let g0 = gram(&basis, &rule, &args.m.value, args.n_dim, GramOp::None)
        .map_err(|e| e.to_string())?;
    let ghe = gram(&basis, &rule, &args.m.value, args.n_dim, GramOp::Entropy)
        .map_err(|e| e.to_string())?;
    let ghe2 = gram(&basis, &rule, &args.m.value, args.n_dim, GramOp::EntropySquared)
        .map_err(|e| e.to_string())?;
    let ghi = gram(&basis, &rule, &args.m.value, args.n_dim, GramOp::Information)
        .map_err(|e| e.to_string())?;

    let mut max_offdiag: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if i != j {
                max_offdiag = max_offdiag.max(g0[i][j].abs() / (g0[i][i] * g0[j][j]).sqrt());
            }
        }
    }
    let a = args.n_dim as f64 * (args.m.f64() - 1.0);
    let mut scale: f64 = 0.0;
    for row in &ghi {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    let mut max_identity: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let combo = (ghe2[i][j] + a * ghe[i][j]) / (1.0 + a);
            max_identity = max_identity.max((ghi[i][j] - combo).abs() / scale.max(1e-300));
        }
    }
    let cases = vec![
        VerifyCase {
            case: format!("H-orthogonality of {} eigenfunctions", basis.len()),
            residual: format!("{max_offdiag:e}"),
            pass: max_offdiag <= args.tol,
        },
        VerifyCase {
            case: "Gram(H_I) = (Gram(H_E^2) + N(m-1) Gram(H_E)) / (1 + N(m-1))".to_string(),
            residual: format!("{max_identity:e}"),
            pass: max_identity <= args.tol,
        },
    ];
    finish_verify(
        "orthogonality",
        ToleranceConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            max_degree: args.max_degree,
            tol: args.tol,
            radial_order,
            angular_order,
        },
        cases,
        args.out.as_ref(),
    )
}

#[derive(Serialize)]
struct PoincareConfig {
    m: String,
    n_dim: u32,
    max_degree: u32,
    bound: f64,
}

fn cmd_verify_poincare(args: &VerifyPoincareArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let rule = QuadratureRule::build(args.m.f64(), args.n_dim, 48, 12).map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for (l, k) in index_pairs(args.n_dim, args.max_degree) {
        let count = multiplicity(l, args.n_dim).map_err(|e| e.to_string())? as u32;
        for n in 1..=count {
            let psi = eigenfunction(&EigenIndex { l, n, k }, &args.m.value, args.n_dim)
                .map_err(|e| e.to_string())?;
            let ratio = poincare_ratio(&psi.to_float(), &rule).map_err(|e| e.to_string())?;
            cases.push(VerifyCase {
                case: format!("l={l} n={n} k={k}"),
                residual: format!("{ratio}"),
                pass: ratio <= args.bound,
            });
        }
    }
    finish_verify(
        "poincare",
        PoincareConfig {
            m: args.m.raw.clone(),
            n_dim: args.n_dim,
            max_degree: args.max_degree,
            bound: args.bound,
        },
        cases,
        args.out.as_ref(),
    )
}

// --------------------------------------------------------------- crossings

#[derive(Serialize)]
struct CrossingValue {
    m: String,
    exact: bool,
}

#[derive(Serialize)]
struct CrossingRow {
    pair_a: String,
    pair_b: String,
    all_m: bool,
    values: Vec<CrossingValue>,
}

#[derive(Serialize)]
struct CrossingsReport {
    tool: Tool,
    config: CrossingsConfig,
    results: Vec<CrossingRow>,
}

#[derive(Serialize)]
struct CrossingsConfig {
    n_dim: u32,
    pairs: Vec<String>,
}

fn parse_pair_spec(spec: &str) -> Result<((u32, u32), (u32, u32)), String> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| format!("pair spec `{spec}` must look like `l,k:l,k`"))?;
    let parse_one = |s: &str| -> Result<(u32, u32), String> {
        let (l, k) = s
            .split_once(',')
            .ok_or_else(|| format!("index `{s}` must look like `l,k`"))?;
        Ok((
            l.trim().parse().map_err(|_| format!("bad l in `{s}`"))?,
            k.trim().parse().map_err(|_| format!("bad k in `{s}`"))?,
        ))
    };
    Ok((parse_one(a)?, parse_one(b)?))
}

fn cmd_crossings(args: &CrossingsArgs) -> Result<u8, String> {
    let mut results = Vec::new();
    for spec in &args.pairs {
        let (pa, pb) = parse_pair_spec(spec)?;
        let set = crossings(pa, pb, args.n_dim).map_err(|e| e.to_string())?;
        let row = match set {
            CrossingSet::AllM => CrossingRow {
                pair_a: format!("{},{}", pa.0, pa.1),
                pair_b: format!("{},{}", pb.0, pb.1),
                all_m: true,
                values: Vec::new(),
            },
            CrossingSet::Points(points) => CrossingRow {
                pair_a: format!("{},{}", pa.0, pa.1),
                pair_b: format!("{},{}", pb.0, pb.1),
                all_m: false,
                values: points
                    .iter()
                    .map(|p| match p {
                        MRoot::Exact(r) => CrossingValue {
                            m: rat_str(r),
                            exact: true,
                        },
                        MRoot::Approximate(v) => CrossingValue {
                            m: format!("{v}"),
                            exact: false,
                        },
                    })
                    .collect(),
            },
        };
        results.push(row);
    }
    let report = CrossingsReport {
        tool: tool(),
        config: CrossingsConfig {
            n_dim: args.n_dim,
            pairs: args.pairs.clone(),
        },
        results,
    };
    emit(args.out.as_ref(), &to_json(&report))?;
    Ok(0)
}

// ----------------------------------------------------------------- profile

#[derive(Serialize)]
struct ProfileHeader {
    tool: Tool,
    m: String,
    n_dim: u32,
    alpha: f64,
    gamma_sq: f64,
    gamma: f64,
    theta: f64,
    sigma: f64,
    scale_a: f64,
    scale_b: f64,
    mass: f64,
}

fn cmd_profile(args: &ProfileArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let m = args.m.f64();
    let params = match args.mass {
        Some(mass) => Params::from_mass(m, args.n_dim, mass).map_err(|e| e.to_string())?,
        None => Params::from_sigma(m, args.n_dim, args.sigma).map_err(|e| e.to_string())?,
    };
    let header = ProfileHeader {
        tool: tool(),
        m: args.m.raw.clone(),
        n_dim: args.n_dim,
        alpha: params.alpha,
        gamma_sq: params.gamma_sq,
        gamma: params.gamma,
        theta: params.theta,
        sigma: params.sigma,
        scale_a: params.scale_a,
        scale_b: params.scale_b,
        mass: params.mass,
    };
    let mut content = format!(
        "# {}\nr,v\n",
        serde_json::to_string(&header).expect("serializable header")
    );
    if let Some(r) = args.at {
        let _ = writeln!(content, "{},{}", r, barenblatt(r, m));
    } else {
        for i in 0..args.points {
            let r = args.rmax * i as f64 / (args.points - 1).max(1) as f64;
            let _ = writeln!(content, "{},{}", r, barenblatt(r, m));
        }
    }
    emit(args.out.as_ref(), &content)?;
    Ok(0)
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateConfig {
    eq: String,
    m: String,
    mode_l: u32,
    mode_k: u32,
    eps: f64,
    grid: usize,
    half_width: f64,
    dt: f64,
    tmax: f64,
    sample_every: usize,
    theta: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    tool: Tool,
    config: SimulateConfig,
    rows: usize,
    final_mass: f64,
    mass_drift_rel: f64,
}

fn parse_mode(spec: &str) -> Result<(u32, u32), String> {
    let mut l = None;
    let mut k = None;
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("mode spec `{spec}` must look like `l=1,k=0`"))?;
        let parsed: u32 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad value in mode spec `{spec}`"))?;
        match key.trim() {
            "l" => l = Some(parsed),
            "k" => k = Some(parsed),
            other => return Err(format!("unknown mode key `{other}`")),
        }
    }
    match (l, k) {
        (Some(l), Some(k)) => Ok((l, k)),
        _ => Err(format!("mode spec `{spec}` must set both l and k")),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, String> {
    require_m_at_least_one(&args.m)?;
    let m = args.m.f64();
    let (mode_l, mode_k) = parse_mode(&args.mode)?;
    if args.eq == Equation::Fourth && m != 1.0 && (m - 1.5).abs() > 1e-12 {
        return Err("fourth-order runs support m = 1 and m = 3/2 only".to_string());
    }
    let half_width = args
        .half_width
        .unwrap_or(if m > 1.0 { 1.5 } else { 6.0 });
    let theta = derive_constants(&m, 1).theta;
    let flow = match args.eq {
        Equation::Pme => Flow::Pme { m },
        Equation::Fourth => Flow::Fourth { m, theta },
    };

    let grid = Grid1D::new(half_width, args.grid).map_err(|e| e.to_string())?;
    let psi = eigenfunction(
        &EigenIndex {
            l: mode_l,
            n: 1,
            k: mode_k,
        },
        &args.m.value,
        1,
    )
    .map_err(|e| e.to_string())?
    .to_float();
    let mut state = pushforward_perturb(&psi, args.eps, m, &grid).map_err(|e| e.to_string())?;
    let mass0 = state.mass();
    // mass-matched reference absorbs the O(h^2) sampling error
    let star = sample_profile(m, &grid).scaled_to_mass(mass0);

    let config = SimulateConfig {
        eq: match args.eq {
            Equation::Pme => "pme".to_string(),
            Equation::Fourth => "fourth".to_string(),
        },
        m: args.m.raw.clone(),
        mode_l,
        mode_k,
        eps: args.eps,
        grid: args.grid,
        half_width,
        dt: args.dt,
        tmax: args.tmax,
        sample_every: args.sample_every,
        theta,
    };
    let mut csv = format!(
        "# {}\nt,mass,moment1,moment2,wasserstein,linf_to_star\n",
        serde_json::to_string(&serde_json::json!({ "tool": tool(), "config": &config }))
            .expect("serializable config")
    );
    let record = |state: &State1D, csv: &mut String| -> Result<(), String> {
        let d = wasserstein_1d(state, &star).map_err(|e| e.to_string())?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            state.time,
            state.mass(),
            state.moment(1),
            state.moment(2),
            d,
            state.linf_diff(&star)
        );
        Ok(())
    };
    record(&state, &mut csv)?;
    let mut rows = 1usize;
    while state.time < args.tmax - 1e-12 {
        let target = (state.time + args.dt * args.sample_every as f64).min(args.tmax);
        state = advance(state, &flow, args.dt, target).map_err(|e| e.to_string())?;
        record(&state, &mut csv)?;
        rows += 1;
    }
    std::fs::write(&args.out, &csv).map_err(|e| format!("writing {:?}: {e}", args.out))?;

    let summary = SimulateSummary {
        tool: tool(),
        config,
        rows,
        final_mass: state.mass(),
        mass_drift_rel: (state.mass() - mass0).abs() / mass0.abs().max(1e-300),
    };
    emit(None, &to_json(&summary))?;
    Ok(0)
}

// -------------------------------------------------------------------- rate

#[derive(Serialize)]
struct RateReport {
    tool: Tool,
    config: RateConfig,
    rate: f64,
    r2: f64,
    window: (f64, f64),
}

#[derive(Serialize)]
struct RateConfig {
    input: String,
    column: String,
    t0: f64,
    t1: f64,
}

fn cmd_rate(args: &RateArgs) -> Result<u8, String> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| format!("reading {:?}: {e}", args.input))?;
    let mut header: Option<Vec<String>> = None;
    let mut series = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let names = header.as_ref().unwrap();
        let find = |name: &str| -> Result<f64, String> {
            let pos = names
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| format!("column `{name}` not found in {:?}", args.input))?;
            cols.get(pos)
                .ok_or_else(|| "short row".to_string())?
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number in column `{name}`: {e}"))
        };
        let t = find("t")?;
        let value = find(&args.column)?.abs();
        series.push((t, value));
    }
    let fit =
        fit_decay_rate(&series, (args.t0, args.t1)).map_err(|e| format!("rate fit: {e}"))?;
    let report = RateReport {
        tool: tool(),
        config: RateConfig {
            input: args.input.display().to_string(),
            column: args.column.clone(),
            t0: args.t0,
            t1: args.t1,
        },
        rate: fit.rate,
        r2: fit.r_squared,
        window: fit.window,
    };
    emit(args.out.as_ref(), &to_json(&report))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Eigenfunction(args) => cmd_eigenfunction(args),
        Command::Verify(args) => match &args.target {
            VerifyTarget::Eigen(a) => cmd_verify_eigen(a),
            VerifyTarget::Relation(a) => cmd_verify_relation(a),
            VerifyTarget::Operator(a) => cmd_verify_operator(a),
            VerifyTarget::Orthogonality(a) => cmd_verify_orthogonality(a),
            VerifyTarget::Poincare(a) => cmd_verify_poincare(a),
        },
        Command::Crossings(args) => cmd_crossings(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Rate(args) => cmd_rate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
