//! Residue calculus for I(p) = ∫ ln|p − p′|·φ(p′) dp′.
//!
//! With z = p′ − p and A = −p + i·p0 the candidate splits into four pole terms
//! f1..f4 (poles A, A*, −A, −A*, each of order n + 1). The closed-form residues
//! of fₖ(z)·ln²(−z) are binomial double sums; a small-circle trapezoid rule is
//! the independent oracle for them.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{param, Result};
use crate::exec::{map_ordered, Strategy};
use crate::model::{q_ratio, CandidateEigenfunction, Parity, QuantumNumber};
use crate::quad::{integrate_interval, log_kernel_transform, QuadratureSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A = −p + i·p0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleConstant {
    a: Complex64,
}

impl PoleConstant {
    pub fn new(p: f64, p0: f64) -> Result<Self> {
        if !(p0.is_finite() && p0 > 0.0) || !p.is_finite() {
            return param(format!("pole constant needs finite p and p0 > 0 (p={p}, p0={p0})"));
        }
        Ok(Self { a: Complex64::new(-p, p0) })
    }

    pub fn value(&self) -> Complex64 {
        self.a
    }

    pub fn conj(&self) -> Complex64 {
        self.a.conj()
    }

    pub fn p0(&self) -> f64 {
        self.a.im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FTerm {
    F1,
    F2,
    F3,
    F4,
}

impl FTerm {
    pub const ALL: [FTerm; 4] = [FTerm::F1, FTerm::F2, FTerm::F3, FTerm::F4];

    pub fn name(self) -> &'static str {
        match self {
            FTerm::F1 => "f1",
            FTerm::F2 => "f2",
            FTerm::F3 => "f3",
            FTerm::F4 => "f4",
        }
    }

    /// Pole location: A, A*, −A, −A*.
    pub fn pole(self, a: &PoleConstant) -> Complex64 {
        match self {
            FTerm::F1 => a.value(),
            FTerm::F2 => a.conj(),
            FTerm::F3 => -a.value(),
            FTerm::F4 => -a.conj(),
        }
    }

    /// The companion point in the numerator, (z − companion)^{n−1}.
    fn companion(self, a: &PoleConstant) -> Complex64 {
        match self {
            FTerm::F1 => a.conj(),
            FTerm::F2 => a.value(),
            FTerm::F3 => -a.conj(),
            FTerm::F4 => -a.value(),
        }
    }

    /// fₖ(z) = (z − companion)^{n−1} / (z − pole)^{n+1}.
    pub fn eval(self, n: u32, a: &PoleConstant, z: Complex64) -> Complex64 {
        (z - self.companion(a)).powu(n - 1) / (z - self.pole(a)).powu(n + 1)
    }

    /// Sign with which the term enters F^±.
    pub fn sign_in(self, parity: Parity) -> f64 {
        match self {
            FTerm::F1 | FTerm::F3 => 1.0,
            FTerm::F2 | FTerm::F4 => parity.sign(),
        }
    }
}

/// F^±(z) = f1 ± f2 + f3 ± f4.
pub fn f_combined(n: u32, parity: Parity, a: &PoleConstant, z: Complex64) -> Complex64 {
    FTerm::ALL.iter().map(|t| t.eval(n, a, z) * t.sign_in(parity)).sum()
}

/// N in ln(z1·z2) = ln z1 + ln z2 + 2πi·N for principal logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BranchCount(pub i8);

pub fn branch_count(z1: Complex64, z2: Complex64) -> Result<BranchCount> {
    if z1 == Complex64::new(0.0, 0.0) || z2 == Complex64::new(0.0, 0.0) {
        return param("branch count is undefined for zero arguments");
    }
    let s = z1.arg() + z2.arg();
    Ok(BranchCount(if s > PI {
        -1
    } else if s > -PI {
        0
    } else {
        1
    }))
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Σ_{l=1}^{m−1} 1/(l(m − l)), exact; zero for m < 2.
pub fn inner_harmonic(m: u32) -> Ratio<i64> {
    (1..m as i64).fold(Ratio::from_integer(0), |acc, l| acc + Ratio::new(1, l * (m as i64 - l)))
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The printed closed-form residue of fₖ(z)·ln²(−z) at its pole:
///
/// −2·w^{n−1}·L·Σₖ C(n−1,k)·σ^{n−k}/((n−k)·wᵏ·B^{n−k})
///   + w^{n−1}·Σₖ C(n−1,k)·σ^{n−k}/(wᵏ·B^{n−k})·Σₗ 1/(l(n−k−l))
///
/// with (w, B, L, σ) = (2ip0, A, ln(−A), −1), (−2ip0, A*, ln(−A*), −1),
/// (−2ip0, A, ln A, +1), (2ip0, A*, ln A*, +1) for f1..f4. All logarithms are
/// principal; the same template serves both signs of p.
pub fn residue_closed_form(term: FTerm, n: QuantumNumber, p: f64, p0: f64) -> Result<Complex64> {
    let a = PoleConstant::new(p, p0)?;
    let two_ip0 = 2.0 * I * p0;
    let (w, b, log, sigma) = match term {
        FTerm::F1 => (two_ip0, a.value(), (-a.value()).ln(), -1.0),
        FTerm::F2 => (-two_ip0, a.conj(), (-a.conj()).ln(), -1.0),
        FTerm::F3 => (-two_ip0, a.value(), a.value().ln(), 1.0),
        FTerm::F4 => (two_ip0, a.conj(), a.conj().ln(), 1.0),
    };
    let n = n.get();
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut harmonic_sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let m = n - k;
        let c = binomial((n - 1) as u64, k as u64) as f64;
        let sig = if m % 2 == 1 { sigma } else { 1.0 };
        let base = c * sig / (w.powu(k) * b.powu(m));
        log_sum += base / m as f64;
        harmonic_sum += base * ratio_to_f64(inner_harmonic(m));
    }
    let wn = w.powu(n - 1);
    Ok(-2.0 * wn * log * log_sum + wn * harmonic_sum)
}

/// Residue of g at z0 from the trapezoid rule on a circle of radius r.
pub fn contour_residue<G: Fn(Complex64) -> Complex64>(g: G, z0: Complex64, r: f64, points: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64);
        acc += g(z0 + r * e) * (r * e);
    }
    acc / points as f64
}

/// Oracle radius min(p0, |p| + p0)/4 around each pole.
pub fn oracle_radius(p: f64, p0: f64) -> f64 {
    p0.min(p.abs() + p0) / 4.0
}

pub const ORACLE_POINTS: usize = 2048;

/// Contour-oracle residue of fₖ(z)·ln²(−z).
pub fn residue_oracle(term: FTerm, n: QuantumNumber, p: f64, p0: f64) -> Result<Complex64> {
    let a = PoleConstant::new(p, p0)?;
    let nn = n.get();
    let g = |z: Complex64| term.eval(nn, &a, z) * (-z).ln().powu(2);
    Ok(contour_residue(g, term.pole(&a), oracle_radius(p, p0), ORACLE_POINTS))
}

/// Both printed layers of the residue sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueSum {
    /// Res(f1) ± Res(f2) + Res(f3) ± Res(f4) from the closed forms.
    pub four_term: Complex64,
    /// (−1)^{n+1}·(π/(n·p0))·[qⁿ ± q⁻ⁿ].
    pub printed_final: Complex64,
}

impl ResidueSum {
    pub fn difference(&self) -> Complex64 {
        self.four_term - self.printed_final
    }
}

pub fn printed_final_sum(n: QuantumNumber, p: f64, p0: f64, parity: Parity) -> Result<Complex64> {
    let f = CandidateEigenfunction::new(n, parity, p0, Complex64::new(1.0, 0.0))?;
    let sign = if n.get().is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok(f.bracket(p) * (sign * PI / (n.as_f64() * p0)))
}

pub fn residue_sum(n: QuantumNumber, p: f64, p0: f64, parity: Parity) -> Result<ResidueSum> {
    let mut four_term = Complex64::new(0.0, 0.0);
    for t in FTerm::ALL {
        four_term += residue_closed_form(t, n, p, p0)? * t.sign_in(parity);
    }
    Ok(ResidueSum { four_term, printed_final: printed_final_sum(n, p, p0, parity)? })
}

/// I from the printed final residue formula: (−1)ⁿ·p0²·½·ΣRes.
pub fn appendix_i(n: QuantumNumber, p: f64, p0: f64, parity: Parity) -> Result<Complex64> {
    let sign = if n.get().is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(printed_final_sum(n, p, p0, parity)? * (sign * p0 * p0 * 0.5))
}

/// I from the keyhole contour applied to ∫₀^∞ G(w)·ln w dw with
/// G(z) = (−1)ⁿ·p0²·F(z): I = −½·(−1)ⁿ·p0²·ΣRes[F·ln²(−z)]. The extra terms of
/// the keyhole vanish because ∫φ = 0 and F decays like z⁻².
pub fn keyhole_i(n: QuantumNumber, p: f64, p0: f64, parity: Parity) -> Result<Complex64> {
    let sign = if n.get().is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(residue_sum(n, p, p0, parity)?.four_term * (-0.5 * sign * p0 * p0))
}

/// ∮ F^±(z)·ln²(−z) dz over |z| = R, parametrized by −z = R·e^{iθ}.
pub fn large_circle_integral(
    n: QuantumNumber,
    parity: Parity,
    p: f64,
    p0: f64,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let a = PoleConstant::new(p, p0)?;
    let nn = n.get();
    let integrand = |theta: f64| {
        let e = Complex64::from_polar(1.0, theta);
        let z = -radius * e;
        let log = Complex64::new(radius.ln(), theta);
        f_combined(nn, parity, &a, z) * log * log * (-I * radius * e)
    };
    Ok(integrate_interval(integrand, -PI, PI, spec)?.value)
}

/// One row of the appendix-vs-quadrature table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosscheckRow {
    pub n: u32,
    pub parity: Parity,
    pub p: f64,
    pub p0: f64,
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub appendix: Complex64,
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub quadrature: Complex64,
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub ratio: Complex64,
}

pub fn crosscheck_appendix(
    n: QuantumNumber,
    p_set: &[f64],
    p0_set: &[f64],
    parity: Parity,
    spec: &QuadratureSpec,
    strategy: Strategy,
) -> Result<Vec<CrosscheckRow>> {
    let points: Vec<(f64, f64)> = p0_set.iter().flat_map(|&p0| p_set.iter().map(move |&p| (p, p0))).collect();
    map_ordered(strategy, &points, |&(p, p0)| {
        let f = CandidateEigenfunction::new(n, parity, p0, Complex64::new(1.0, 0.0))?;
        let appendix = appendix_i(n, p, p0, parity)?;
        let quadrature = log_kernel_transform(&f, p, spec)?;
        Ok(CrosscheckRow { n: n.get(), parity, p, p0, appendix, quadrature, ratio: appendix / quadrature })
    })
    .into_iter()
    .collect()
}

/// Branch bookkeeping for splitting ln(−A) = ln(−1) + ln A (and the conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchBookkeeping {
    pub p: f64,
    pub minus_a: BranchCount,
    pub minus_a_conj: BranchCount,
}

pub fn branch_bookkeeping(p: f64, p0: f64) -> Result<BranchBookkeeping> {
    let a = PoleConstant::new(p, p0)?;
    let minus_one = Complex64::new(-1.0, 0.0);
    Ok(BranchBookkeeping {
        p,
        minus_a: branch_count(minus_one, a.value())?,
        minus_a_conj: branch_count(minus_one, a.conj())?,
    })
}

/// q-form of the candidate, exposed for parity checks.
pub fn q_power(p: f64, p0: f64, n: u32) -> Complex64 {
    q_ratio(p, p0).powu(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CandidateEigenfunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qn(n: i64) -> QuantumNumber {
        QuantumNumber::new(n).unwrap()
    }

    #[test]
    fn branch_count_examples() {
        let e = |t: f64| Complex64::from_polar(1.0, t);
        assert_eq!(branch_count(e(PI / 2.0), e(3.0 * PI / 4.0)).unwrap(), BranchCount(-1));
        assert_eq!(branch_count(e(0.0), e(0.0)).unwrap(), BranchCount(0));
        assert_eq!(branch_count(e(-3.0 * PI / 4.0), e(-3.0 * PI / 4.0)).unwrap(), BranchCount(1));
        assert!(branch_count(Complex64::new(0.0, 0.0), e(1.0)).is_err());
    }

    #[test]
    fn branch_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let z1 = Complex64::from_polar(rng.random_range(0.01..100.0), rng.random_range(-PI..PI));
            let z2 = Complex64::from_polar(rng.random_range(0.01..100.0), rng.random_range(-PI..PI));
            let n = branch_count(z1, z2).unwrap().0 as f64;
            let defect = (z1 * z2).ln() - z1.ln() - z2.ln() - 2.0 * PI * I * n;
            assert!(defect.norm() < 1e-14, "{z1} {z2}: {defect}");
        }
    }

    #[test]
    fn inner_harmonic_values() {
        assert_eq!(inner_harmonic(1), Ratio::from_integer(0));
        assert_eq!(inner_harmonic(2), Ratio::from_integer(1));
        assert_eq!(inner_harmonic(3), Ratio::new(1, 1));
        assert_eq!(inner_harmonic(4), Ratio::new(11, 12));
    }

    #[test]
    fn n1_residue_is_log_derivative() {
        // Res_{z=A} ln²(−z)/(z − A)² = 2·ln(−A)/A
        let a = Complex64::new(1.0, 1.0);
        let got = residue_closed_form(FTerm::F1, qn(1), -1.0, 1.0).unwrap();
        assert!((got - 2.0 * (-a).ln() / a).norm() < 1e-15);
    }

    #[test]
    fn closed_forms_match_contour_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = rng.random_range(-3.0..3.0);
            let p0 = rng.random_range(0.3..3.0);
            for n in 1..=5 {
                for t in FTerm::ALL {
                    let closed = residue_closed_form(t, qn(n), p, p0).unwrap();
                    let oracle = residue_oracle(t, qn(n), p, p0).unwrap();
                    let err = (closed - oracle).norm() / closed.norm().max(1.0);
                    assert!(err < 1e-9, "{t:?} n={n} p={p} p0={p0}: {closed} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn f3_example() {
        let closed = residue_closed_form(FTerm::F3, qn(2), -0.7, 1.0).unwrap();
        let oracle = residue_oracle(FTerm::F3, qn(2), -0.7, 1.0).unwrap();
        assert!((closed - oracle).norm() < 1e-9);
    }

    #[test]
    fn combined_f_matches_candidate() {
        // (−1)ⁿ p0² F(z) = φ(z + p) + φ(−z + p)
        for parity in Parity::BOTH {
            for n in 1..=4 {
                let (p, p0) = (-0.4, 1.3);
                let f = CandidateEigenfunction::unit(n, parity, p0).unwrap();
                let a = PoleConstant::new(p, p0).unwrap();
                for z in [0.3, -1.7, 2.2] {
                    let lhs = f_combined(n, parity, &a, Complex64::new(z, 0.0))
                        * (if n % 2 == 0 { 1.0 } else { -1.0 } * p0 * p0);
                    let rhs = f.eval(z + p) + f.eval(-z + p);
                    assert!((lhs - rhs).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn printed_final_examples() {
        let v = printed_final_sum(qn(1), 1.0, 1.0, Parity::Odd).unwrap();
        assert!((v - Complex64::new(0.0, -2.0 * PI)).norm() < 1e-14);
        assert!(printed_final_sum(qn(1), 1.0, 1.0, Parity::Even).unwrap().norm() < 1e-15);
        let v = printed_final_sum(qn(2), 0.0, 1.0, Parity::Even).unwrap();
        assert!((v - Complex64::new(-PI, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn appendix_examples() {
        let v = appendix_i(qn(1), 1.0, 1.0, Parity::Odd).unwrap();
        assert!((v - Complex64::new(0.0, PI)).norm() < 1e-14);
        assert_eq!(appendix_i(qn(1), 0.0, 1.0, Parity::Odd).unwrap().norm(), 0.0);
        for n in 1..=4 {
            for parity in Parity::BOTH {
                let a = appendix_i(qn(n), 0.8, 1.5, parity).unwrap();
                let b = appendix_i(qn(n), -0.8, 1.5, parity).unwrap();
                assert!((b - a * parity.sign()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn keyhole_matches_quadrature_for_both_parities() {
        let spec = QuadratureSpec::default();
        for parity in Parity::BOTH {
            for n in 1..=4 {
                for (p, p0) in [(0.5, 1.0), (-1.3, 0.5), (2.0, 2.0)] {
                    let f = CandidateEigenfunction::unit(n, parity, p0).unwrap();
                    let quad = log_kernel_transform(&f, p, &spec).unwrap();
                    let key = keyhole_i(qn(n as i64), p, p0, parity).unwrap();
                    assert!((quad - key).norm() < 1e-8 * quad.norm().max(1.0), "{parity:?} n={n}: {quad} vs {key}");
                }
            }
        }
    }

    #[test]
    fn large_circle_vanishes() {
        let spec = QuadratureSpec::default();
        let at = |parity, r| large_circle_integral(qn(2), parity, 0.4, 1.0, r, &spec).unwrap().norm();
        // odd: the 1/z² parts cancel, leaving O(ln R/R³)
        let (a, b) = (at(Parity::Odd, 1e3), at(Parity::Odd, 1e4));
        let rate = |r: f64| r.ln().powi(2) / (r * r);
        assert!(a < rate(1e3) && b < rate(1e4), "{a} {b}");
        // even: 4/z² survives, ∮ z⁻² ln²(−z) dz = O(ln R/R)
        let (a, b) = (at(Parity::Even, 1e3), at(Parity::Even, 1e4));
        let expected = (1e4f64.ln() / 1e3f64.ln()) / 10.0;
        assert!(((b / a) / expected - 1.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn f1_n1_matches_oracle_tightly() {
        for p in [-2.5, -0.3, 0.0, 0.7, 4.0] {
            let closed = residue_closed_form(FTerm::F1, qn(1), p, 1.0).unwrap();
            let oracle = residue_oracle(FTerm::F1, qn(1), p, 1.0).unwrap();
            assert!((closed - oracle).norm() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn four_term_sum_against_printed_final() {
        // measured relation: Σ = −printed for odd, −printed − 2π/(n·p0) for even
        for n in 1..=4 {
            for (p, p0) in [(0.5, 1.0), (-1.3, 0.5), (2.0, 2.0)] {
                for parity in Parity::BOTH {
                    let s = residue_sum(qn(n), p, p0, parity).unwrap();
                    let shift = match parity {
                        Parity::Odd => 0.0,
                        Parity::Even => 2.0 * PI / (n as f64 * p0),
                    };
                    let expect = -s.printed_final - shift;
                    assert!((s.four_term - expect).norm() < 1e-9, "{parity:?} n={n} p={p} p0={p0}");
                }
            }
        }
    }

    #[test]
    fn printed_layers_agree_at_unit_p0() {
        let mut worst = (0.0f64, 0, 0.0, Parity::Odd);
        for n in 1..=4 {
            for p in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
                for parity in Parity::BOTH {
                    let d = residue_sum(qn(n), p, 1.0, parity).unwrap().difference().norm();
                    if d > worst.0 {
                        worst = (d, n, p, parity);
                    }
                }
            }
        }
        assert!(worst.0 <= 1e-9, "four-term sum minus printed final: {:.3e} at n={}, p={}, {:?}", worst.0, worst.1, worst.2, worst.3);
    }

    #[test]
    fn bookkeeping_by_sign() {
        for p in [-2.0, -0.1, 0.1, 2.0] {
            let b = branch_bookkeeping(p, 1.0).unwrap();
            // Arg(−1) = π plus Arg A ∈ (0, π) always exceeds π
            assert_eq!(b.minus_a, BranchCount(-1));
            assert_eq!(b.minus_a_conj, BranchCount(0));
        }
    }
}
