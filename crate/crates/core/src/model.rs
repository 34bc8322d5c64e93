//! Domain types for the momentum-space Coulomb problem: physical parameters,
//! the Fock line-to-circle map, the closed-form candidate eigenfunctions and
//! the printed spectrum.
//!
//! Conventions: ħ = 1, momenta and masses are the regulator-scaled
//! dimensionless quantities, and the circle angle obeys
//! e^{iα} = (p0 + ip)/(p0 − ip), so that q = (p0 − ip)/(p0 + ip) = e^{−iα}.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Scaled mass, squared charge and regulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    mass: f64,
    charge_sq: f64,
    regulator: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, charge_sq: f64, regulator: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("charge_sq", charge_sq), ("regulator", regulator)] {
            if !(v.is_finite() && v > 0.0) {
                return param(format!("{name} must be finite and positive, got {v}"));
            }
        }
        Ok(Self { mass, charge_sq, regulator })
    }

    /// Builds parameters from a physical mass and a regulator: m = ε·m'.
    pub fn scaled(physical_mass: f64, charge_sq: f64, regulator: f64) -> Result<Self> {
        Self::new(regulator * physical_mass, charge_sq, regulator)
    }

    /// m = e² = ε = 1.
    pub fn unit() -> Self {
        Self { mass: 1.0, charge_sq: 1.0, regulator: 1.0 }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge_sq(&self) -> f64 {
        self.charge_sq
    }

    pub fn regulator(&self) -> f64 {
        self.regulator
    }

    pub fn euler_gamma(&self) -> f64 {
        EULER_GAMMA
    }

    /// 2·m·e², the prefactor of the log-kernel term after multiplying by 2m.
    pub fn coupling(&self) -> f64 {
        2.0 * self.mass * self.charge_sq
    }
}

/// Principal quantum number n ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct QuantumNumber(u32);

impl QuantumNumber {
    pub fn new(n: i64) -> Result<Self> {
        if n < 1 || n > u32::MAX as i64 {
            return param(format!("quantum number must be >= 1, got {n}"));
        }
        Ok(Self(n as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

/// Parity under p → −p (equivalently α → −α).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Sine family, φ⁻.
    Odd,
    /// Cosine family, φ⁺.
    Even,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Odd, Parity::Even];

    /// +1 for even, −1 for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(Parity::Odd),
            "even" => Ok(Parity::Even),
            other => param(format!("unknown parity '{other}' (expected odd|even)")),
        }
    }
}

/// q = (p0 − ip)/(p0 + ip), unimodular for real p.
pub fn q_ratio(p: f64, p0: f64) -> Complex64 {
    Complex64::new(p0, -p) / Complex64::new(p0, p)
}

/// Closed-form momentum eigenfunction
/// φ(p) = scale · p0²/(p² + p0²) · [qⁿ ± q⁻ⁿ].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateEigenfunction {
    pub n: QuantumNumber,
    pub parity: Parity,
    p0: f64,
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub scale: Complex64,
}

impl CandidateEigenfunction {
    pub fn new(n: QuantumNumber, parity: Parity, p0: f64, scale: Complex64) -> Result<Self> {
        if !(p0.is_finite() && p0 > 0.0) {
            return param(format!("p0 must be finite and positive, got {p0}"));
        }
        Ok(Self { n, parity, p0, scale })
    }

    /// Unit-scale candidate for a positive quantum number.
    pub fn unit(n: u32, parity: Parity, p0: f64) -> Result<Self> {
        Self::new(QuantumNumber::new(n as i64)?, parity, p0, Complex64::new(1.0, 0.0))
    }

    /// Accepts any nonzero integer n. Under n → −n the bracket is unchanged for
    /// the even family and negated for the odd one; the sign goes into `scale`.
    pub fn from_signed(n: i64, parity: Parity, p0: f64, scale: Complex64) -> Result<Self> {
        let qn = QuantumNumber::new(n.abs())?;
        let sign = if n < 0 && parity == Parity::Odd { -1.0 } else { 1.0 };
        Self::new(qn, parity, p0, scale * sign)
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// The bracket qⁿ ± q⁻ⁿ.
    pub fn bracket(&self, p: f64) -> Complex64 {
        let n = self.n.get();
        let qn = q_ratio(p, self.p0).powu(n);
        let qinv = (Complex64::new(self.p0, p) / Complex64::new(self.p0, -p)).powu(n);
        match self.parity {
            Parity::Even => qn + qinv,
            Parity::Odd => qn - qinv,
        }
    }

    /// φ(p). Infinite momenta evaluate to zero.
    pub fn eval(&self, p: f64) -> Complex64 {
        if p.is_infinite() {
            return Complex64::new(0.0, 0.0);
        }
        let p0sq = self.p0 * self.p0;
        self.scale * (p0sq / (p * p + p0sq)) * self.bracket(p)
    }

    /// φ(α) = ((p0² + p²)/(2p0²))·φ(p), with the analytic limit at α = ±π.
    pub fn lift(&self, alpha: f64) -> Result<Complex64> {
        if !(alpha.abs() <= PI) {
            return param(format!("angle {alpha} outside [-pi, pi]"));
        }
        if alpha.abs() == PI {
            // q → −1, so the bracket is (−1)ⁿ(1 ± 1) and the weighted prefactor → 1/2.
            let sgn = if self.n.get().is_multiple_of(2) { 1.0 } else { -1.0 };
            let bracket = match self.parity {
                Parity::Even => 2.0 * sgn,
                Parity::Odd => 0.0,
            };
            return Ok(self.scale * (0.5 * bracket));
        }
        let p = fock_momentum(alpha, self.p0)?;
        Ok(self.eval(p) * circle_weight(p, self.p0)?)
    }

    /// φ(α) evaluated straight from the trigonometric form:
    /// −i·scale·sin(nα) (odd) or scale·cos(nα) (even).
    pub fn circle_form(&self, alpha: f64) -> Complex64 {
        let na = self.n.as_f64() * alpha;
        match self.parity {
            Parity::Odd => self.scale * Complex64::new(0.0, -na.sin()),
            Parity::Even => self.scale * na.cos(),
        }
    }
}

/// Fock angle α = 2·atan(p/p0) ∈ [−π, π]; p may be ±∞.
pub fn fock_angle(p: f64, p0: f64) -> Result<f64> {
    check_p0(p0)?;
    if p.is_nan() {
        return param("momentum is NaN");
    }
    Ok(2.0 * (p / p0).atan())
}

/// Inverse map p = p0·tan(α/2).
pub fn fock_momentum(alpha: f64, p0: f64) -> Result<f64> {
    check_p0(p0)?;
    if !(alpha.abs() <= PI) {
        return param(format!("angle {alpha} outside [-pi, pi]"));
    }
    if alpha.abs() == PI {
        return Err(Error::InfiniteMomentum { angle: alpha });
    }
    Ok(p0 * (0.5 * alpha).tan())
}

/// dp/dα = (p0² + p²)/(2p0).
pub fn circle_jacobian(p: f64, p0: f64) -> Result<f64> {
    check_p0(p0)?;
    Ok((p0 * p0 + p * p) / (2.0 * p0))
}

/// The circle wavefunction weight (p0² + p²)/(2p0²) used to define φ(α).
///
/// Equals `circle_jacobian / p0`; the two coincide only at p0 = 1.
pub fn circle_weight(p: f64, p0: f64) -> Result<f64> {
    check_p0(p0)?;
    Ok((p0 * p0 + p * p) / (2.0 * p0 * p0))
}

pub fn lift_to_circle(f: &CandidateEigenfunction, alpha: f64) -> Result<Complex64> {
    f.lift(alpha)
}

pub fn eval_momentum_eigenfunction(
    n: QuantumNumber,
    parity: Parity,
    p0: f64,
    scale: Complex64,
    p: f64,
) -> Result<Complex64> {
    Ok(CandidateEigenfunction::new(n, parity, p0, scale)?.eval(p))
}

/// One level of a spectrum: p0 and E = −p0²/(2m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub n: QuantumNumber,
    pub p0: f64,
    pub energy: f64,
}

impl SpectrumEntry {
    pub fn from_p0_sq(n: QuantumNumber, p0_sq: f64, params: &PhysicalParams) -> Self {
        Self { n, p0: p0_sq.sqrt(), energy: -p0_sq / (2.0 * params.mass()) }
    }

    pub fn p0_sq(&self) -> f64 {
        self.p0 * self.p0
    }
}

/// The printed spectrum p0² = 2m²e⁴/n², E = −me⁴/n².
pub fn paper_spectrum(n: QuantumNumber, params: &PhysicalParams) -> SpectrumEntry {
    let m = params.mass();
    let e4 = params.charge_sq() * params.charge_sq();
    let nn = n.as_f64() * n.as_f64();
    SpectrumEntry { n, p0: (2.0 * m * m * e4 / nn).sqrt(), energy: -m * e4 / nn }
}

/// Keeps the candidates that vanish at infinite momentum (the sine family),
/// preserving order.
pub fn filter_physical(candidates: &[CandidateEigenfunction]) -> Vec<CandidateEigenfunction> {
    candidates.iter().copied().filter(vanishes_at_infinity).collect()
}

fn vanishes_at_infinity(f: &CandidateEigenfunction) -> bool {
    let at = |a: f64| f.lift(a).map(|v| v.norm()).unwrap_or(f64::INFINITY);
    at(PI) == 0.0 && at(-PI) == 0.0
}

/// max over the grid of |φ(p, p0) − φ(cp, cp0)|.
pub fn scale_invariance_check(
    n: QuantumNumber,
    parity: Parity,
    p0: f64,
    c: f64,
    p_grid: &[f64],
) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return param(format!("scaling factor must be positive, got {c}"));
    }
    let one = Complex64::new(1.0, 0.0);
    let f = CandidateEigenfunction::new(n, parity, p0, one)?;
    let g = CandidateEigenfunction::new(n, parity, c * p0, one)?;
    Ok(p_grid.iter().map(|&p| (f.eval(p) - g.eval(c * p)).norm()).fold(0.0, f64::max))
}

fn check_p0(p0: f64) -> Result<()> {
    if p0.is_finite() && p0 > 0.0 {
        Ok(())
    } else {
        param(format!("p0 must be finite and positive, got {p0}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fock_angle_examples() {
        assert_eq!(fock_angle(0.0, 1.0).unwrap(), 0.0);
        for p0 in [0.3, 1.0, 7.0] {
            assert!((fock_angle(p0, p0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        }
        assert_eq!(fock_angle(f64::INFINITY, 1.0).unwrap(), PI);
        assert_eq!(fock_angle(f64::NEG_INFINITY, 1.0).unwrap(), -PI);
        assert!(fock_angle(1.0, 0.0).is_err());
        assert!(fock_angle(1.0, -2.0).is_err());
    }

    #[test]
    fn fock_momentum_examples() {
        assert_eq!(fock_momentum(0.0, 1.0).unwrap(), 0.0);
        assert!((fock_momentum(FRAC_PI_2, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((fock_momentum(-FRAC_PI_2, 1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(fock_momentum(PI, 1.0), Err(Error::InfiniteMomentum { .. })));
        assert!(matches!(fock_momentum(3.5, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(circle_jacobian(0.0, 1.0).unwrap(), 0.5);
        assert_eq!(circle_jacobian(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(circle_jacobian(3.0, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        for p0 in [0.5, 2.0, 3.0] {
            for alpha in [-2.5, -0.4, 0.0, 1.1, 2.9] {
                let h = 1e-6;
                let fd = (fock_momentum(alpha + h, p0).unwrap()
                    - fock_momentum(alpha - h, p0).unwrap())
                    / (2.0 * h);
                let p = fock_momentum(alpha, p0).unwrap();
                let j = circle_jacobian(p, p0).unwrap();
                assert!((fd - j).abs() < 1e-7 * j.max(1.0), "{fd} vs {j}");
            }
        }
    }

    #[test]
    fn eigenfunction_examples() {
        let odd = CandidateEigenfunction::unit(1, Parity::Odd, 1.0).unwrap();
        let even = CandidateEigenfunction::unit(1, Parity::Even, 1.0).unwrap();
        assert!(odd.eval(0.0).norm() < 1e-16);
        assert!((odd.eval(1.0) - c(0.0, -1.0)).norm() < 1e-15);
        assert!(even.eval(1.0).norm() < 1e-15);
    }

    #[test]
    fn lift_examples() {
        let odd = CandidateEigenfunction::unit(1, Parity::Odd, 1.0).unwrap();
        assert_eq!(odd.lift(0.0).unwrap(), c(0.0, 0.0));
        assert!((odd.lift(FRAC_PI_2).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let even = CandidateEigenfunction::unit(2, Parity::Even, 1.0).unwrap();
        assert_eq!(even.lift(PI).unwrap(), c(1.0, 0.0));
        assert!(odd.lift(3.2).is_err());
    }

    #[test]
    fn lift_matches_circle_form_and_limit() {
        for n in 1..=6 {
            for parity in Parity::BOTH {
                let f = CandidateEigenfunction::new(
                    QuantumNumber::new(n).unwrap(),
                    parity,
                    1.7,
                    c(0.3, -1.2),
                )
                .unwrap();
                for k in -20..=20 {
                    let a = k as f64 * PI / 21.0;
                    assert!((f.lift(a).unwrap() - f.circle_form(a)).norm() < 1e-13);
                }
                for a in [PI, -PI] {
                    assert!((f.lift(a).unwrap() - f.circle_form(a)).norm() < 1e-14);
                    let near = a * (1.0 - 1e-9);
                    assert!((f.lift(near).unwrap() - f.lift(a).unwrap()).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn negative_quantum_numbers_fold() {
        let one = c(1.0, 0.0);
        let odd = CandidateEigenfunction::from_signed(-3, Parity::Odd, 1.0, one).unwrap();
        assert_eq!(odd.n.get(), 3);
        assert_eq!(odd.scale, c(-1.0, 0.0));
        let even = CandidateEigenfunction::from_signed(-3, Parity::Even, 1.0, one).unwrap();
        assert_eq!(even.scale, one);
        assert!(CandidateEigenfunction::from_signed(0, Parity::Odd, 1.0, one).is_err());
        assert!(QuantumNumber::new(0).is_err());
    }

    #[test]
    fn paper_spectrum_examples() {
        let one = QuantumNumber::new(1).unwrap();
        let two = QuantumNumber::new(2).unwrap();
        let s1 = paper_spectrum(one, &PhysicalParams::unit());
        assert!((s1.p0_sq() - 2.0).abs() < 1e-15);
        assert_eq!(s1.energy, -1.0);
        let s2 = paper_spectrum(two, &PhysicalParams::unit());
        assert!((s2.p0_sq() - 0.5).abs() < 1e-15);
        assert_eq!(s2.energy, -0.25);
        let heavy = PhysicalParams::new(2.0, 1.0, 1.0).unwrap();
        assert_eq!(paper_spectrum(one, &heavy).energy, -2.0);
        // E = −p0²/(2m) holds for the printed values
        for s in [s1, s2] {
            assert!((s.energy + s.p0_sq() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN).is_err());
        let p = PhysicalParams::scaled(3.0, 1.0, 0.01).unwrap();
        assert!((p.mass() - 0.03).abs() < 1e-16);
        assert_eq!(PhysicalParams::unit().coupling(), 2.0);
    }

    #[test]
    fn filter_examples() {
        let o1 = CandidateEigenfunction::unit(1, Parity::Odd, 1.0).unwrap();
        let e1 = CandidateEigenfunction::unit(1, Parity::Even, 1.0).unwrap();
        let e3 = CandidateEigenfunction::unit(3, Parity::Even, 1.0).unwrap();
        assert_eq!(filter_physical(&[o1, e1]), vec![o1]);
        assert!(filter_physical(&[e3]).is_empty());
        assert!(filter_physical(&[]).is_empty());
        assert_eq!(e3.lift(PI).unwrap().norm(), 1.0);
    }

    #[test]
    fn scale_invariance_examples() {
        let grid = [0.0, 1.0, -1.0, 5.0, -5.0];
        let one = QuantumNumber::new(1).unwrap();
        let four = QuantumNumber::new(4).unwrap();
        assert!(scale_invariance_check(one, Parity::Odd, 1.0, 2.0, &grid).unwrap() <= 1e-12);
        assert!(scale_invariance_check(four, Parity::Even, 0.5, 10.0, &grid).unwrap() <= 1e-12);
        assert_eq!(scale_invariance_check(one, Parity::Odd, 1.0, 1.0, &grid).unwrap(), 0.0);
        assert!(scale_invariance_check(one, Parity::Odd, 1.0, 0.0, &grid).is_err());
    }

    fn candidate() -> impl Strategy<Value = CandidateEigenfunction> {
        (1u32..8, any::<bool>(), 0.05f64..20.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(
            |(n, odd, p0, re, im)| {
                let parity = if odd { Parity::Odd } else { Parity::Even };
                CandidateEigenfunction::new(QuantumNumber::new(n as i64).unwrap(), parity, p0, c(re, im))
                    .unwrap()
            },
        )
    }

    #[test]
    fn roundtrip_full_declared_range() {
        let mut worst = (0.0f64, 0.0, 0.0);
        for p0 in [0.1, 1.0, 10.0] {
            for k in -600..=600 {
                let p = (k as f64 / 100.0).signum() * 10f64.powf((k as f64).abs() / 100.0) - (k as f64).signum();
                let back = fock_momentum(fock_angle(p, p0).unwrap(), p0).unwrap();
                let rel = (back - p).abs() / (1.0 + p.abs());
                if rel > worst.0 {
                    worst = (rel, p, p0);
                }
            }
        }
        assert!(worst.0 <= 1e-10, "relative round-trip error {:.3e} at p={}, p0={}", worst.0, worst.1, worst.2);
    }

    proptest! {
        #[test]
        fn roundtrip_within_conditioning(p in -1e6f64..1e6, k in 0usize..3) {
            // rounding α costs |dp/dα|·ulp(α), i.e. about (p²/p0)·2e-16
            let p0 = [0.1, 1.0, 10.0][k];
            let back = fock_momentum(fock_angle(p, p0).unwrap(), p0).unwrap();
            let floor = 4.0 * f64::EPSILON * circle_jacobian(p, p0).unwrap();
            prop_assert!((back - p).abs() <= 1e-10 * (1.0 + p.abs()) + floor);
        }

        #[test]
        fn angle_trig_identities(p in -1e4f64..1e4, p0 in 0.01f64..100.0) {
            let a = fock_angle(p, p0).unwrap();
            let d = p0 * p0 + p * p;
            let (s, co) = (2.0 * p0 * p / d, (p0 * p0 - p * p) / d);
            prop_assert!((s * s + co * co - 1.0).abs() < 1e-14);
            prop_assert!((a.sin() - s).abs() < 1e-12);
            prop_assert!((a.cos() - co).abs() < 1e-12);
        }

        #[test]
        fn angle_is_increasing(p in -1e3f64..1e3, dp in 1e-6f64..10.0, p0 in 0.1f64..10.0) {
            prop_assert!(fock_angle(p + dp, p0).unwrap() > fock_angle(p, p0).unwrap());
        }

        #[test]
        fn q_is_unimodular(p in -1e6f64..1e6, p0 in 0.01f64..100.0) {
            prop_assert!((q_ratio(p, p0).norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn parity_and_decay(f in candidate(), p in -50.0f64..50.0) {
            let s = f.parity.sign();
            prop_assert!((f.eval(-p) - f.eval(p) * s).norm() < 1e-14 * (1.0 + f.scale.norm()));
            let p0 = f.p0();
            let bound = 2.0 * f.scale.norm() * p0 * p0 / (p * p + p0 * p0);
            prop_assert!(f.eval(p).norm() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn filter_is_idempotent(fs in proptest::collection::vec(candidate(), 0..10)) {
            let once = filter_physical(&fs);
            prop_assert_eq!(filter_physical(&once), once.clone());
            prop_assert!(once.iter().all(|f| f.parity == Parity::Odd));
            let odd: Vec<_> = fs.iter().copied().filter(|f| f.parity == Parity::Odd).collect();
            prop_assert_eq!(once, odd);
        }
    }
}
