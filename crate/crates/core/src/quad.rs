//! Quadrature: Gauss–Legendre rules, global adaptive bisection, logarithmic
//! singularity subtraction, Fock compactification of line integrals and the
//! log-kernel transform of the momentum-space equation.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::model::{circle_jacobian, fock_angle, fock_momentum, CandidateEigenfunction, PhysicalParams};

/// Values that can be integrated: real or complex.
pub trait QuadValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Tolerances and panel settings for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Gauss–Legendre order of each panel; the error estimate uses order/2.
    pub base_order: usize,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, base_order: 16, max_depth: 40 }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return param("tolerances must be positive");
        }
        if !(4..=64).contains(&self.base_order) {
            return param(format!("base_order must be in 4..=64, got {}", self.base_order));
        }
        if self.max_depth < 1 {
            return param("max_depth must be >= 1");
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult<T = Complex64> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl<T: QuadValue> IntegrationResult<T> {
    fn zero() -> Self {
        Self { value: T::zero(), error_estimate: 0.0, evaluations: 0 }
    }

    fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    fn scaled(self, k: f64) -> Self {
        Self { value: self.value * k, error_estimate: self.error_estimate * k.abs(), ..self }
    }

    fn minus(self, other: Self) -> Self {
        self.combine(other.scaled(-1.0))
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Applies the rule on [a, b]. Summation runs in ascending node order.
    pub fn apply<T: QuadValue, F: Fn(f64) -> T>(&self, f: &F, a: f64, b: f64) -> T {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * *w;
        }
        acc * half
    }
}

/// Legendre roots by Newton iteration from the Tricomi initial guesses.
pub fn gauss_legendre(order: usize) -> Result<GaussRule> {
    if !(2..=64).contains(&order) {
        return param(format!("Gauss-Legendre order must be in 2..=64, got {order}"));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (pn, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = pn / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussRule { nodes, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

struct Panel<T> {
    a: f64,
    b: f64,
    depth: usize,
    value: T,
    error: f64,
}

/// Global adaptive Gauss–Legendre quadrature on [a, b].
///
/// The panel with the largest error estimate (|Q_n − Q_{n/2}|) is bisected
/// until the summed estimate is within `max(abs_tol, rel_tol·|value|)`.
/// Integrable endpoint singularities are fine: nodes never touch the ends.
pub fn integrate_interval<T, F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<IntegrationResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return param(format!("invalid interval [{a}, {b}]"));
    }
    let high = gauss_legendre(spec.base_order)?;
    let low = gauss_legendre(spec.base_order / 2)?;
    let per_panel = high.nodes.len() + low.nodes.len();
    let eval = |a: f64, b: f64, depth: usize| {
        let hi = high.apply(&f, a, b);
        let lo = low.apply(&f, a, b);
        Panel { a, b, depth, value: hi, error: (hi - lo).magnitude() }
    };

    let mut panels = vec![eval(a, b, 0)];
    let mut evaluations = per_panel;
    let max_panels = 1 << 14;
    let converged = loop {
        let total: T = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !err.is_finite() || !total.magnitude().is_finite() {
            break false;
        }
        if err <= spec.target(total.magnitude()) {
            break true;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        if panels[worst].depth >= spec.max_depth || panels.len() >= max_panels {
            break false;
        }
        let Panel { a, b, depth, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        panels.push(eval(a, mid, depth + 1));
        panels.push(eval(mid, b, depth + 1));
        evaluations += 2 * per_panel;
    };

    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
    let error_estimate = panels.iter().map(|p| p.error).sum();
    if converged {
        Ok(IntegrationResult { value, error_estimate, evaluations })
    } else {
        Err(Error::NonConvergence { estimate: value.magnitude(), error_estimate })
    }
}

/// ∫ₐᵇ f(t)·ln|t − s| dt for smooth f, by singularity subtraction:
/// ∫ (f(t) − f(s))·ln|t − s| dt + f(s)·∫ ln|t − s| dt, with the moment in
/// closed form. `s` may sit on an endpoint; outside [a, b] the integrand is
/// smooth and goes straight to [`integrate_interval`].
pub fn integrate_log_singular<T, F>(f: F, s: f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<IntegrationResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(a < b) {
        return param(format!("invalid interval [{a}, {b}]"));
    }
    if s < a || s > b {
        return integrate_interval(|t| f(t) * (t - s).abs().ln(), a, b, spec);
    }
    let fs = f(s);
    let remainder = |t: f64| {
        let d = (t - s).abs();
        if d == 0.0 {
            T::zero()
        } else {
            (f(t) - fs) * d.ln()
        }
    };
    let mut out = IntegrationResult::zero();
    if s > a {
        out = out.combine(integrate_interval(remainder, a, s, spec)?);
    }
    if s < b {
        out = out.combine(integrate_interval(remainder, s, b, spec)?);
    }
    out.value = out.value + fs * log_moment(a, b, s);
    out.evaluations += 1;
    Ok(out)
}

/// ∫ₐᵇ ln|t − s| dt in closed form.
pub fn log_moment(a: f64, b: f64, s: f64) -> f64 {
    let prim = |u: f64| if u == 0.0 { 0.0 } else { u * (u.abs().ln() - 1.0) };
    prim(b - s) - prim(a - s)
}

/// sin(d/2)/d, regular at d = 0.
pub fn sinc_half(d: f64) -> f64 {
    if d.abs() < 1e-4 {
        let d2 = d * d;
        0.5 * (1.0 - d2 / 24.0 + d2 * d2 / 1920.0)
    } else {
        (0.5 * d).sin() / d
    }
}

/// ln[cos(t/2) / ((π − t)(π + t))] on [−π, π], smooth up to the endpoints.
fn log_cos_half_regular(t: f64) -> f64 {
    if t >= 0.0 {
        (sinc_half(PI - t) / (PI + t)).ln()
    } else {
        (sinc_half(PI + t) / (PI - t)).ln()
    }
}

/// ∫₋π^π g(α′)·ln|scale·(tan(α′/2) − tan(α/2))| dα′ for |α| < π.
///
/// With scale = p0 and g = φ(p(α′))·dp/dα′ this is the line integral
/// ∫ ln|p′ − p|·φ(p′) dp′. The kernel is split into ln|α′ − α|, the two
/// endpoint logarithms ln(π ∓ α′) and a bounded remainder; each log piece goes
/// through [`integrate_log_singular`].
pub fn circle_log_integral<T, G>(g: G, alpha: f64, scale: f64, spec: &QuadratureSpec) -> Result<IntegrationResult<T>>
where
    T: QuadValue,
    G: Fn(f64) -> T,
{
    if !(alpha.abs() < PI) {
        return param(format!("kernel angle {alpha} must lie strictly inside (-pi, pi)"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return param(format!("kernel scale must be positive, got {scale}"));
    }
    let constant = scale.ln() - (0.5 * alpha).cos().ln();
    let regular = |t: f64| {
        let r = constant + sinc_half(t - alpha).abs().ln() - log_cos_half_regular(t);
        g(t) * r
    };
    let at_alpha = integrate_log_singular(&g, alpha, -PI, PI, spec)?;
    let at_plus = integrate_log_singular(&g, PI, -PI, PI, spec)?;
    let at_minus = integrate_log_singular(&g, -PI, -PI, PI, spec)?;
    let smooth = integrate_interval(regular, -PI, PI, spec)?;
    Ok(at_alpha.minus(at_plus).minus(at_minus).combine(smooth))
}

/// ∫₋∞^∞ f(p) dp through p = p0·tan(α/2), i.e. ∫₋π^π f(p(α))·(dp/dα) dα.
pub fn integrate_line_fock<T, F>(f: F, p0: f64, spec: &QuadratureSpec) -> Result<IntegrationResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(p0.is_finite() && p0 > 0.0) {
        return param(format!("p0 must be finite and positive, got {p0}"));
    }
    integrate_interval(
        |a| {
            let p = p0 * (0.5 * a).tan();
            f(p) * ((p0 * p0 + p * p) / (2.0 * p0))
        },
        -PI,
        PI,
        spec,
    )
}

/// I(p) = ∫ ln|p − p′|·φ(p′) dp′ for a candidate eigenfunction.
pub fn log_kernel_transform(f: &CandidateEigenfunction, p: f64, spec: &QuadratureSpec) -> Result<Complex64> {
    log_kernel_transform_scaled(f, p, 1.0, spec)
}

/// ∫ ln|λ(p − p′)|·φ(p′) dp′.
pub fn log_kernel_transform_scaled(
    f: &CandidateEigenfunction,
    p: f64,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if !p.is_finite() {
        return param("log-kernel transform needs a finite momentum");
    }
    let p0 = f.p0();
    let alpha = fock_angle(p, p0)?;
    let density = line_density(f);
    Ok(circle_log_integral(density, alpha, lambda * p0, spec)?.value)
}

/// φ(p(α))·dp/dα as a bounded function on [−π, π] (limit taken at ±π).
pub fn line_density(f: &CandidateEigenfunction) -> impl Fn(f64) -> Complex64 + '_ {
    move |a: f64| match fock_momentum(a, f.p0()) {
        Ok(p) => f.eval(p) * circle_jacobian(p, f.p0()).unwrap_or(0.0),
        // dp/dα = p0·(circle weight); the lifted function carries the limit
        Err(_) => f.lift(a).unwrap_or_default() * f.p0(),
    }
}

/// (√2/π)·γ·|∫φ dp| for an arbitrary momentum function.
pub fn constant_term<F>(f: F, p0: f64, params: &PhysicalParams, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let integral = integrate_line_fock(f, p0, spec)?.value;
    Ok(SQRT_2 / PI * params.euler_gamma() * integral.norm())
}

pub fn constant_term_check(f: &CandidateEigenfunction, params: &PhysicalParams, spec: &QuadratureSpec) -> Result<f64> {
    constant_term(|p| f.eval(p), f.p0(), params, spec)
}

/// (1/2π)∫₋π^π |g(α)|² dα.
pub fn circle_norm<F>(g: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    Ok(integrate_interval(|a| g(a).norm_sqr(), -PI, PI, spec)?.value / (2.0 * PI))
}

/// Circle-side norm (1/2π)∫|φ(α)|² dα of the unit-scale candidate.
pub fn normalization_check(
    n: crate::model::QuantumNumber,
    parity: crate::model::Parity,
    p0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let f = CandidateEigenfunction::new(n, parity, p0, Complex64::new(1.0, 0.0))?;
    circle_norm(|a| f.lift(a).unwrap_or_default(), spec)
}

/// The line-side expression (1/2π)∫ ((p² + p0²)/(2p0²))·|φ(p)|² dp that the
/// normalization statement equates with the circle norm.
pub fn line_side_norm(f: &CandidateEigenfunction, spec: &QuadratureSpec) -> Result<f64> {
    let p0 = f.p0();
    let w = |p: f64| (p * p + p0 * p0) / (2.0 * p0 * p0);
    Ok(integrate_line_fock(|p| w(p) * f.eval(p).norm_sqr(), p0, spec)?.value / (2.0 * PI))
}
