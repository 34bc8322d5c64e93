//! The integral operator on the circle,
//! (Lg)(α) = −(1/π)∫₋π^π ln|p0(tan(α′/2) − tan(α/2))|·g(α′) dα′,
//! its Fourier-series action, a Nyström discretization on the zero-mean
//! subspace, and the eigenfunction tests that tie it back to the line.
//!
//! The kernel splits exactly as
//! ln|2 sin((α′−α)/2)| + (ln p0 − ln 2) − ln|cos(α′/2)| − ln|cos(α/2)|.
//! Only the first (convolution) part survives projection onto zero-mean
//! functions, which is why the projected operator is free of p0.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::exec::{map_ordered, map_range, Strategy};
use crate::linalg::{dot, jacobi_eigen, SymMatrix};
use crate::model::{
    circle_weight, fock_angle, CandidateEigenfunction, Parity, PhysicalParams, QuantumNumber,
};
use crate::quad::{circle_log_integral, log_kernel_transform, QuadratureSpec};

/// ln|p0·(tan(α′/2) − tan(α/2))|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleKernel {
    pub p0: f64,
}

impl CircleKernel {
    pub fn new(p0: f64) -> Result<Self> {
        if !(p0.is_finite() && p0 > 0.0) {
            return param(format!("p0 must be finite and positive, got {p0}"));
        }
        Ok(Self { p0 })
    }

    pub fn eval(&self, alpha: f64, alpha_prime: f64) -> Result<f64> {
        if !(alpha.abs() < PI && alpha_prime.abs() < PI) {
            return Err(Error::Singular(format!("angles ({alpha}, {alpha_prime}) must lie inside (-pi, pi)")));
        }
        if alpha == alpha_prime {
            return Err(Error::Singular(format!("coincident angles {alpha}")));
        }
        Ok((self.p0 * ((0.5 * alpha_prime).tan() - (0.5 * alpha).tan())).abs().ln())
    }
}

pub fn kernel_eval(alpha: f64, alpha_prime: f64, p0: f64) -> Result<f64> {
    CircleKernel::new(p0)?.eval(alpha, alpha_prime)
}

/// The four additive pieces of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelDecomposition {
    pub convolution: f64,
    pub constant: f64,
    pub separable_source: f64,
    pub separable_target: f64,
}

impl KernelDecomposition {
    pub fn at(alpha: f64, alpha_prime: f64, p0: f64) -> Self {
        Self {
            convolution: (2.0 * (0.5 * (alpha_prime - alpha)).sin()).abs().ln(),
            constant: p0.ln() - LN_2,
            separable_source: -(0.5 * alpha_prime).cos().abs().ln(),
            separable_target: -(0.5 * alpha).cos().abs().ln(),
        }
    }

    pub fn total(&self) -> f64 {
        self.convolution + self.constant + self.separable_source + self.separable_target
    }
}

/// (L g)(α) by adaptive singular quadrature.
pub fn apply_operator<F>(g: F, alpha: f64, p0: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    Ok(-circle_log_integral(g, alpha, p0, spec)?.value / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierFamily {
    Sin,
    Cos,
}

impl FourierFamily {
    pub fn eval(self, n: u32, alpha: f64) -> f64 {
        let x = n as f64 * alpha;
        match self {
            FourierFamily::Sin => x.sin(),
            FourierFamily::Cos => x.cos(),
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            FourierFamily::Sin => Parity::Odd,
            FourierFamily::Cos => Parity::Even,
        }
    }
}

/// Predicted action L(trig(nα)) = eigen_coefficient·trig(nα) + constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierAction {
    pub n: u32,
    pub family: FourierFamily,
    pub eigen_coefficient: f64,
    pub constant: f64,
}

impl FourierAction {
    pub fn predict(&self, alpha: f64) -> f64 {
        self.eigen_coefficient * self.family.eval(self.n, alpha) + self.constant
    }
}

/// Action of L on sin(nα) and cos(nα) from the classical series
/// ln|2 sin(θ/2)| = −Σ cos(kθ)/k and ln|cos(θ/2)| = −ln 2 + Σ (−1)^{k+1} cos(kθ)/k.
///
/// The convolution part contributes 1/n to both families. The source-separable
/// part −ln|cos(α′/2)| projects cos(nα′) onto the constant (−1)^{n+1}/n and is
/// blind to sin(nα′). The target-separable part and the constant multiply
/// ∫g = 0.
pub fn fourier_oracle(n: u32, family: FourierFamily) -> Result<FourierAction> {
    if n == 0 {
        return param("Fourier oracle needs n >= 1");
    }
    let nf = n as f64;
    let constant = match family {
        FourierFamily::Sin => 0.0,
        FourierFamily::Cos => {
            if n % 2 == 1 {
                1.0 / nf
            } else {
                -1.0 / nf
            }
        }
    };
    Ok(FourierAction { n, family, eigen_coefficient: 1.0 / nf, constant })
}

/// Truncated Fourier series of the kernel (for checking the series themselves).
pub fn kernel_series(alpha: f64, alpha_prime: f64, p0: f64, terms: usize) -> f64 {
    let mut s = p0.ln() + LN_2;
    for k in 1..=terms {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s -= (kf * (alpha_prime - alpha)).cos() / kf;
        s -= sign * ((kf * alpha_prime).cos() + (kf * alpha).cos()) / kf;
    }
    s
}

/// Nyström matrix of P·L·P on the midpoint grid αⱼ = −π + (j + ½)·2π/N.
#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub nodes: Vec<f64>,
    pub p0: f64,
    /// Projected operator P·L·P.
    pub projected: SymMatrix,
    /// Unprojected operator L (convolution weights plus midpoint-sampled
    /// constant and separable parts).
    pub full: SymMatrix,
}

impl NystromSystem {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Samples g on the grid.
    pub fn sample<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        self.nodes.iter().map(|&a| g(a)).collect()
    }
}

pub fn midpoint_grid(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| -PI + (j as f64 + 0.5) * h).collect()
}

pub fn assemble(n: usize, p0: f64) -> Result<NystromSystem> {
    assemble_with(n, p0, Strategy::default())
}

/// Builds the system. The convolution part uses the trigonometric-interpolation
/// weights for ln|2 sin((α−α′)/2)| (exact on trigonometric polynomials of
/// degree < N/2); the remaining parts are sampled with the midpoint rule and
/// are annihilated by the projection.
pub fn assemble_with(n: usize, p0: f64, strategy: Strategy) -> Result<NystromSystem> {
    if !n.is_multiple_of(2) || !(16..=4096).contains(&n) {
        return param(format!("node count must be even and within 16..=4096, got {n}"));
    }
    CircleKernel::new(p0)?;
    let nodes = midpoint_grid(n);
    let h = 2.0 * PI / n as f64;
    let half = n / 2;

    // circulant entries of −(1/π)·R_k(αⱼ), indexed by the grid distance
    let circulant: Vec<f64> = map_range(strategy, half + 1, |d| {
        let theta = d as f64 * h;
        let mut s = 0.0;
        for m in 1..half {
            s += (m as f64 * theta).cos() / m as f64;
        }
        s += (half as f64 * theta).cos() / n as f64;
        2.0 * s / n as f64
    });
    let constant = p0.ln() - LN_2;
    let sep: Vec<f64> = nodes.iter().map(|&a| -(0.5 * a).cos().abs().ln()).collect();

    let rows: Vec<Vec<f64>> = map_range(strategy, n, |j| {
        (0..n)
            .map(|k| {
                let d = j.abs_diff(k);
                let conv = circulant[d.min(n - d)];
                conv - h / PI * (constant + sep[j] + sep[k])
            })
            .collect()
    });
    let full = SymMatrix::from_rows(n, rows.concat())?;
    let projected = project(&full);
    Ok(NystromSystem { nodes, p0, projected, full })
}

/// P·A·P with P = I − 11ᵀ/N, symmetrized.
fn project(a: &SymMatrix) -> SymMatrix {
    let n = a.dim();
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum::<f64>() / nf).collect();
    let col_mean: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a.get(i, j)).sum::<f64>() / nf).collect();
    let total = row_mean.iter().sum::<f64>() / nf;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, a.get(i, j) - row_mean[i] - col_mean[j] + total);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

/// (R v)ⱼ = v_{N−1−j}: the reflection α → −α on the midpoint grid.
pub fn reflect(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// max-entry norm of P·L·P·R − R·P·L·P.
pub fn reflection_commutator(system: &NystromSystem) -> f64 {
    let m = &system.projected;
    let n = m.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            // (M R)_{ij} = M_{i, N−1−j}; (R M)_{ij} = M_{N−1−i, j}
            worst = worst.max((m.get(i, n - 1 - j) - m.get(n - 1 - i, j)).abs());
        }
    }
    worst
}

/// Trigonometric interpolant of grid values, evaluated at α.
pub fn trig_interpolate(values: &[f64], alpha: f64) -> f64 {
    let n = values.len();
    let half = n / 2;
    let nodes = midpoint_grid(n);
    let mut acc = 0.0;
    for (v, a) in values.iter().zip(&nodes) {
        let d = alpha - a;
        let mut l = 1.0;
        for m in 1..half {
            l += 2.0 * (m as f64 * d).cos();
        }
        l += (half as f64 * d).cos();
        acc += v * l;
    }
    acc / n as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenMode {
    pub eigenvalue: f64,
    pub parity: Parity,
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// Trigonometric interpolant at α = π, relative to the largest entry.
    pub boundary_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumLevel {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// max − min eigenvalue within the cluster.
    pub splitting: f64,
    pub modes: Vec<EigenMode>,
}

impl SpectrumLevel {
    pub fn parities(&self) -> Vec<Parity> {
        self.modes.iter().map(|m| m.parity).collect()
    }

    pub fn has_odd_even_pair(&self) -> bool {
        let ps = self.parities();
        self.multiplicity == 2 && ps.contains(&Parity::Odd) && ps.contains(&Parity::Even)
    }
}

/// Eigenvalues (descending) clustered into degenerate levels.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorSpectrum {
    pub nodes: usize,
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<SpectrumLevel>,
    pub gap_threshold: f64,
    pub spectral_radius: f64,
    pub sweeps: usize,
}

impl OperatorSpectrum {
    /// Leading levels that carry positive eigenvalues.
    pub fn positive_levels(&self) -> impl Iterator<Item = &SpectrumLevel> {
        self.levels.iter().filter(|l| l.eigenvalue > self.gap_threshold)
    }
}

/// Relative clustering threshold for degenerate levels.
pub const DEGENERACY_REL_GAP: f64 = 1e-6;

pub fn eigensolve(system: &NystromSystem) -> Result<OperatorSpectrum> {
    let eig = jacobi_eigen(&system.projected, 60)?;
    let spectral_radius = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap_threshold = DEGENERACY_REL_GAP * spectral_radius;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..eig.values.len() {
        match clusters.last_mut() {
            Some(c) if eig.values[*c.last().unwrap()] - eig.values[k] <= gap_threshold => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let levels = clusters
        .into_iter()
        .map(|idx| {
            let vals: Vec<f64> = idx.iter().map(|&k| eig.values[k]).collect();
            let vecs: Vec<Vec<f64>> = idx.iter().map(|&k| eig.vectors[k].clone()).collect();
            let modes = split_by_parity(&vals, vecs)?;
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(SpectrumLevel {
                eigenvalue: vals.iter().sum::<f64>() / vals.len() as f64,
                multiplicity: vals.len(),
                splitting: max - min,
                modes,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(OperatorSpectrum {
        nodes: system.size(),
        eigenvalues: eig.values,
        levels,
        gap_threshold,
        spectral_radius,
        sweeps: eig.sweeps,
    })
}

/// Rotates an eigenspace basis onto reflection eigenvectors and labels them.
fn split_by_parity(values: &[f64], vectors: Vec<Vec<f64>>) -> Result<Vec<EigenMode>> {
    let k = vectors.len();
    let reflected: Vec<Vec<f64>> = vectors.iter().map(|v| reflect(v)).collect();
    let mut gram = SymMatrix::zeros(k);
    for a in 0..k {
        for b in 0..k {
            gram.set(a, b, dot(&vectors[a], &reflected[b]));
        }
    }
    let rot = jacobi_eigen(&gram, 60)?;
    let mean = values.iter().sum::<f64>() / k as f64;
    Ok((0..k)
        .map(|r| {
            let coeffs = &rot.vectors[r];
            let n = vectors[0].len();
            let vector: Vec<f64> =
                (0..n).map(|i| (0..k).map(|a| coeffs[a] * vectors[a][i]).sum()).collect();
            let parity = if rot.values[r] < 0.0 { Parity::Odd } else { Parity::Even };
            let scale = vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let boundary_value = trig_interpolate(&vector, PI) / scale;
            EigenMode {
                eigenvalue: if k == 1 { values[0] } else { mean },
                parity,
                vector,
                boundary_value,
            }
        })
        .collect())
}

/// p0² and E implied by an eigenvalue μ of L through the circle equation
/// φ = (2me²/p0²)·Lφ: p0² = 2me²·μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingQuantization {
    pub mu: f64,
    pub p0_sq: f64,
    pub energy: f64,
}

pub fn coupling_quantization(mu: f64, params: &PhysicalParams) -> Result<CouplingQuantization> {
    if !(mu > 0.0 && mu.is_finite()) {
        return param(format!("eigenvalue must be positive, got {mu}"));
    }
    let p0_sq = params.coupling() * mu;
    Ok(CouplingQuantization { mu, p0_sq, energy: -p0_sq / (2.0 * params.mass()) })
}

/// p0² implied by the line equation with the log-term prefactor √2e²/π:
/// (p² + p0²)φ = −(2√2·m·e²/π)·I and I = R·((p² + p0²)/(2p0²))·φ give
/// p0² = −(√2·m·e²/π)·R.
pub fn line_quantization(ratio: f64, params: &PhysicalParams) -> f64 {
    -(std::f64::consts::SQRT_2 * params.mass() * params.charge_sq() / PI) * ratio
}

/// Outcome of the eigenfunction ratio test on a momentum grid.
#[derive(Debug, Clone, Serialize)]
pub struct RatioTest {
    pub n: u32,
    pub parity: Parity,
    pub p0: f64,
    pub grid: Vec<f64>,
    #[serde(serialize_with = "crate::report::ser_complex_vec")]
    pub ratios: Vec<Complex64>,
    /// R at the first grid point.
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub common: Complex64,
    pub max_deviation: f64,
}

/// Momentum grid used by the ratio test: p = p0·tan(πf/2). The fractions keep
/// |sin(nα)| and |cos(nα)| away from zero for n ≤ 5.
pub const RATIO_GRID_FRACTIONS: [f64; 9] = [-0.95, -0.55, -0.45, -0.05, 0.05, 0.28, 0.45, 0.55, 0.95];

pub fn default_ratio_grid(p0: f64) -> Vec<f64> {
    RATIO_GRID_FRACTIONS.iter().map(|f| p0 * (0.5 * PI * f).tan()).collect()
}

/// R(p) = I(p) / [((p² + p0²)/(2p0²))·φ(p)] on a grid.
pub fn eigenfunction_ratio_test(
    n: QuantumNumber,
    parity: Parity,
    p0: f64,
    p_grid: &[f64],
    spec: &QuadratureSpec,
    strategy: Strategy,
) -> Result<RatioTest> {
    if p_grid.is_empty() {
        return param("ratio test needs a nonempty grid");
    }
    let f = CandidateEigenfunction::new(n, parity, p0, Complex64::new(1.0, 0.0))?;
    let ratios = map_ordered(strategy, p_grid, |&p| -> Result<Complex64> {
        let denom = f.eval(p) * circle_weight(p, p0)?;
        if denom.norm() < 1e-12 {
            return param(format!("grid point p={p} is a zero of the eigenfunction"));
        }
        Ok(log_kernel_transform(&f, p, spec)? / denom)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let common = ratios[0];
    let max_deviation = ratios.iter().map(|r| (r - common).norm()).fold(0.0, f64::max);
    Ok(RatioTest { n: n.get(), parity, p0, grid: p_grid.to_vec(), ratios, common, max_deviation })
}

/// Angle of each grid point (handy for reports).
pub fn grid_angles(p_grid: &[f64], p0: f64) -> Result<Vec<f64>> {
    p_grid.iter().map(|&p| fock_angle(p, p0)).collect()
}
