//! Chebyshev integral relations in x = cos θ, θ = α restricted to (0, π).
//!
//! The kernel ln|s·(h(x′) − h(x))| with h(x) = √(1−x²)/(1+x) = tan(θ/2) is
//! evaluated in θ-variables, where its singularities sit at θ′ = θ and θ′ = π.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::circle::{fourier_oracle, FourierFamily};
use crate::error::{param, Error, Result};
use crate::exec::{map_ordered, Strategy};
use crate::quad::{circle_log_integral, integrate_interval, integrate_log_singular, sinc_half, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChebKind {
    /// First kind.
    T,
    /// Second kind.
    U,
}

impl ChebKind {
    pub fn name(self) -> &'static str {
        match self {
            ChebKind::T => "T",
            ChebKind::U => "U",
        }
    }

    fn family(self) -> FourierFamily {
        match self {
            ChebKind::T => FourierFamily::Cos,
            ChebKind::U => FourierFamily::Sin,
        }
    }
}

impl std::str::FromStr for ChebKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(ChebKind::T),
            "U" | "u" => Ok(ChebKind::U),
            other => param(format!("unknown Chebyshev kind '{other}'")),
        }
    }
}

/// T_n(x) or U_n(x) by the three-term recurrence.
pub fn cheb_eval(kind: ChebKind, n: u32, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return param(format!("Chebyshev argument {x} outside [-1, 1]"));
    }
    let (mut prev, mut cur) = match kind {
        ChebKind::T => (1.0, x),
        ChebKind::U => (1.0, 2.0 * x),
    };
    if n == 0 {
        return Ok(prev);
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// h(x) = √(1−x²)/(1+x) = tan(arccos(x)/2).
pub fn half_angle_map(x: f64) -> Result<f64> {
    if !(x > -1.0 && x <= 1.0) {
        if x == -1.0 {
            return Err(Error::InfiniteMomentum { angle: PI });
        }
        return param(format!("half-angle map needs -1 < x <= 1, got {x}"));
    }
    Ok((1.0 - x * x).sqrt() / (1.0 + x))
}

/// Inverse of [`half_angle_map`]: x = (1 − h²)/(1 + h²).
pub fn half_angle_inverse(h: f64) -> Result<f64> {
    if !(h >= 0.0 && h.is_finite()) {
        return param(format!("half-angle value must be finite and >= 0, got {h}"));
    }
    Ok((1.0 - h * h) / (1.0 + h * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IdentityVariant {
    /// Prefactor −n²/(πε), measure dx′, scale √2·ε/n inside the log.
    AsPrinted,
    /// As printed but with measure dx′/√(1−x′²).
    Weighted,
    /// The circle equation restricted to sin/cos, prefactor −n/π.
    FullCircleGroundTruth,
}

impl IdentityVariant {
    pub const ALL: [IdentityVariant; 3] =
        [IdentityVariant::AsPrinted, IdentityVariant::Weighted, IdentityVariant::FullCircleGroundTruth];

    pub fn name(self) -> &'static str {
        match self {
            IdentityVariant::AsPrinted => "as_printed",
            IdentityVariant::Weighted => "weighted",
            IdentityVariant::FullCircleGroundTruth => "full_circle_ground_truth",
        }
    }

    pub fn recipe(self, n: u32, epsilon: f64) -> Recipe {
        let nf = n as f64;
        let scale = 2f64.sqrt() * epsilon / nf;
        match self {
            IdentityVariant::AsPrinted => {
                Recipe { prefactor: -nf * nf / (PI * epsilon), measure: Measure::Plain, scale }
            }
            IdentityVariant::Weighted => {
                Recipe { prefactor: -nf * nf / (PI * epsilon), measure: Measure::Chebyshev, scale }
            }
            IdentityVariant::FullCircleGroundTruth => {
                // 1/eigen_coefficient of the Fourier oracle, over −π
                Recipe { prefactor: -nf / PI, measure: Measure::FullCircle, scale }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// dx′ = sin θ′ dθ′ on (0, π).
    Plain,
    /// dx′/√(1−x′²) = dθ′ on (0, π).
    Chebyshev,
    /// dα′ on (−π, π).
    FullCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recipe {
    pub prefactor: f64,
    pub measure: Measure,
    pub scale: f64,
}

/// The integrand family in θ: T_n(cos θ) or sin θ·U_{n−1}(cos θ).
fn family_value(kind: ChebKind, n: u32, theta: f64) -> f64 {
    let x = theta.cos().clamp(-1.0, 1.0);
    match kind {
        ChebKind::T => cheb_eval(ChebKind::T, n, x).unwrap_or(f64::NAN),
        ChebKind::U => theta.sin() * cheb_eval(ChebKind::U, n - 1, x).unwrap_or(f64::NAN),
    }
}

/// Left-hand side at x: T_n(x) or √(1−x²)·U_{n−1}(x).
pub fn identity_lhs(kind: ChebKind, n: u32, x: f64) -> Result<f64> {
    Ok(match kind {
        ChebKind::T => cheb_eval(ChebKind::T, n, x)?,
        ChebKind::U => (1.0 - x * x).sqrt() * cheb_eval(ChebKind::U, n - 1, x)?,
    })
}

/// ∫₀^π w(θ′)·ln|scale·(tan(θ′/2) − tan(θ/2))| dθ′ for 0 < θ < π.
///
/// tan a − tan b = sin(a − b)/(cos a·cos b); the log splits into ln|θ′ − θ|,
/// ln(π − θ′) and smooth pieces.
pub fn half_range_log_integral<W>(w: W, theta: f64, scale: f64, spec: &QuadratureSpec) -> Result<f64>
where
    W: Fn(f64) -> f64,
{
    if !(theta > 0.0 && theta < PI) {
        return param(format!("half-range angle {theta} must lie in (0, pi)"));
    }
    let constant = scale.ln() - LN_2 - (0.5 * theta).cos().ln();
    let smooth = |t: f64| w(t) * (constant + (2.0 * sinc_half(t - theta)).ln() - sinc_half(PI - t).ln());
    let at_theta = integrate_log_singular(&w, theta, 0.0, PI, spec)?.value;
    let at_pi: f64 = integrate_log_singular(&w, PI, 0.0, PI, spec)?.value;
    let rest: f64 = integrate_interval(smooth, 0.0, PI, spec)?.value;
    Ok(at_theta - at_pi + rest)
}

/// Right-hand side of an identity at a single x.
pub fn identity_rhs(
    kind: ChebKind,
    variant: IdentityVariant,
    n: u32,
    epsilon: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let recipe = variant.recipe(n, epsilon);
    let theta = x.acos();
    let integral = match recipe.measure {
        Measure::Plain => {
            half_range_log_integral(|t| family_value(kind, n, t) * t.sin(), theta, recipe.scale, spec)?
        }
        Measure::Chebyshev => {
            half_range_log_integral(|t| family_value(kind, n, t), theta, recipe.scale, spec)?
        }
        Measure::FullCircle => {
            // sin(nα′) = sin α′·U_{n−1}(cos α′) and cos(nα′) = T_n(cos α′) on all of (−π, π)
            circle_log_integral(|t: f64| family_value(kind, n, t), theta, recipe.scale, spec)?.value
        }
    };
    Ok(recipe.prefactor * integral)
}

/// The value the ground-truth variant must reproduce: the Chebyshev value plus
/// n times the oracle's constant term (nonzero only for T).
pub fn ground_truth_lhs(kind: ChebKind, n: u32, x: f64) -> Result<f64> {
    let action = fourier_oracle(n, kind.family())?;
    Ok(identity_lhs(kind, n, x)? + n as f64 * action.constant)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub kind: ChebKind,
    pub variant: IdentityVariant,
    pub n: u32,
    pub epsilon: f64,
    pub x_grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// First-kind Chebyshev points cos((2k − 1)π/(2m)), k = 1..m.
pub fn chebyshev_points(m: usize) -> Vec<f64> {
    (1..=m).map(|k| ((2 * k - 1) as f64 * PI / (2 * m) as f64).cos()).collect()
}

pub const DEFAULT_GRID_POINTS: usize = 33;

pub fn evaluate_identity(
    kind: ChebKind,
    variant: IdentityVariant,
    n: u32,
    epsilon: f64,
    x_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<IdentityResidual> {
    evaluate_identity_with(kind, variant, n, epsilon, x_grid, spec, Strategy::default())
}

pub fn evaluate_identity_with(
    kind: ChebKind,
    variant: IdentityVariant,
    n: u32,
    epsilon: f64,
    x_grid: &[f64],
    spec: &QuadratureSpec,
    strategy: Strategy,
) -> Result<IdentityResidual> {
    if n == 0 {
        return param("identity needs n >= 1");
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return param(format!("epsilon must be positive, got {epsilon}"));
    }
    if x_grid.is_empty() {
        return param("empty x grid");
    }
    if let Some(x) = x_grid.iter().find(|x| !(x.abs() < 1.0)) {
        return param(format!("grid point {x} is not interior to (-1, 1)"));
    }
    let rows = map_ordered(strategy, x_grid, |&x| -> Result<(f64, f64)> {
        let lhs = match variant {
            IdentityVariant::FullCircleGroundTruth => ground_truth_lhs(kind, n, x)?,
            _ => identity_lhs(kind, n, x)?,
        };
        Ok((lhs, identity_rhs(kind, variant, n, epsilon, x, spec)?))
    });
    let mut lhs = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    for row in rows {
        let (l, r) = row?;
        lhs.push(l);
        rhs.push(r);
    }
    let residuals: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs()).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(IdentityResidual { kind, variant, n, epsilon, x_grid: x_grid.to_vec(), lhs, rhs, residuals, max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSweep {
    pub kind: ChebKind,
    pub variant: IdentityVariant,
    pub n: u32,
    pub x: f64,
    pub epsilons: Vec<f64>,
    pub rhs: Vec<f64>,
    /// rhs[k+1] − rhs[k].
    pub differences: Vec<f64>,
    pub spread: f64,
    pub epsilon_independent: bool,
}

pub const EPSILON_SPREAD_REL: f64 = 1e-6;

pub fn epsilon_sweep(
    kind: ChebKind,
    variant: IdentityVariant,
    n: u32,
    epsilons: &[f64],
    x: f64,
    spec: &QuadratureSpec,
) -> Result<EpsilonSweep> {
    if epsilons.is_empty() {
        return param("epsilon set is empty");
    }
    if n == 0 {
        return param("identity needs n >= 1");
    }
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return param(format!("epsilon must be positive, got {e}"));
    }
    let rhs = epsilons
        .iter()
        .map(|&e| identity_rhs(kind, variant, n, e, x, spec))
        .collect::<Result<Vec<_>>>()?;
    let differences = rhs.windows(2).map(|w| w[1] - w[0]).collect();
    let max = rhs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rhs.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(EpsilonSweep {
        kind,
        variant,
        n,
        x,
        epsilons: epsilons.to_vec(),
        rhs,
        differences,
        spread,
        epsilon_independent: spread <= EPSILON_SPREAD_REL * scale,
    })
}
