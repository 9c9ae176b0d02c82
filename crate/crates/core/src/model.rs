//! Exact probability laws of the hidden-variable model and the quantum
//! reference they reproduce.
//!
//! Each particle carries a unit polarization vector; the joint outcome law
//! conditioned on the pair `(u, v)` factorizes into two Malus-type terms,
//!
//! ```text
//! P(sigma, tau | u, v, {a, b}) = 1/4 (1 + sigma u.a)(1 + tau v.b),
//! ```
//!
//! and averaging over the atomic distribution of [`crate::distribution`]
//! yields the singlet table `1/4 (1 - sigma*tau a.b)` exactly.

use serde::{Deserialize, Serialize};

use crate::distribution::{build_distribution, PairDist};
use crate::geometry::{dot, Settings, UnitVec3};

/// A dichotomic measurement result, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    /// The result as a real factor, `+1.0` or `-1.0`.
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Row/column index used by tables: `Plus -> 0`, `Minus -> 1`.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_positive(positive: bool) -> Sign {
        if positive {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Signed direction: `Plus * v = v`, `Minus * v = -v`, both exact.
impl std::ops::Mul<UnitVec3> for Sign {
    type Output = UnitVec3;

    fn mul(self, rhs: UnitVec3) -> UnitVec3 {
        match self {
            Sign::Plus => rhs,
            Sign::Minus => -rhs,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_i8((*self).into())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        match i8::deserialize(de)? {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(serde::de::Error::custom(format!(
                "expected +1 or -1, got {other}"
            ))),
        }
    }
}

/// The pair of station results `(sigma, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub sigma: Sign,
    pub tau: Sign,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome { sigma: Sign::Plus, tau: Sign::Plus },
        Outcome { sigma: Sign::Plus, tau: Sign::Minus },
        Outcome { sigma: Sign::Minus, tau: Sign::Plus },
        Outcome { sigma: Sign::Minus, tau: Sign::Minus },
    ];

    pub fn new(sigma: Sign, tau: Sign) -> Self {
        Outcome { sigma, tau }
    }

    /// Product `sigma * tau` as a real factor.
    pub fn product(self) -> f64 {
        self.sigma.value() * self.tau.value()
    }
}

/// The hidden polarization vectors carried by the two particles.
///
/// `u` rides with the particle headed to station A, `v` with the one headed
/// to B. Nothing at this level ties `u` to `-v`; that constraint lives in
/// the distribution the pair is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenPair {
    pub u: UnitVec3,
    pub v: UnitVec3,
}

impl HiddenPair {
    pub fn new(u: UnitVec3, v: UnitVec3) -> Self {
        HiddenPair { u, v }
    }

    /// The anticorrelated pair `(p, -p)`.
    pub fn anticorrelated(p: UnitVec3) -> Self {
        HiddenPair { u: p, v: -p }
    }
}

/// The 2x2 probability table over `(sigma, tau)`, with optional standard
/// errors when the entries are empirical frequencies.
///
/// Rows are indexed by `sigma` in the order `+1, -1`, columns by `tau` in
/// the same order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    p: [[f64; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stderr: Option<[[f64; 2]; 2]>,
}

impl JointTable {
    /// Builds an exact table by evaluating `f` on each outcome.
    pub fn from_fn(mut f: impl FnMut(Outcome) -> f64) -> Self {
        let mut p = [[0.0; 2]; 2];
        for out in Outcome::ALL {
            p[out.sigma.index()][out.tau.index()] = f(out);
        }
        JointTable { p, stderr: None }
    }

    /// Builds an empirical table with per-cell standard errors.
    pub fn with_stderr(p: [[f64; 2]; 2], stderr: [[f64; 2]; 2]) -> Self {
        JointTable { p, stderr: Some(stderr) }
    }

    pub fn p(&self, out: Outcome) -> f64 {
        self.p[out.sigma.index()][out.tau.index()]
    }

    pub fn stderr(&self, out: Outcome) -> Option<f64> {
        self.stderr.map(|s| s[out.sigma.index()][out.tau.index()])
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn total(&self) -> f64 {
        Outcome::ALL.iter().map(|&o| self.p(o)).sum()
    }

    /// The correlator `E = sum_{sigma,tau} sigma*tau P(sigma, tau)`.
    pub fn correlator(&self) -> f64 {
        Outcome::ALL.iter().map(|&o| o.product() * self.p(o)).sum()
    }

    /// Largest absolute per-cell difference to another table.
    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        Outcome::ALL
            .iter()
            .map(|&o| (self.p(o) - other.p(o)).abs())
            .fold(0.0, f64::max)
    }
}

/// Joint outcome probability conditioned on the hidden pair:
/// `1/4 (1 + sigma u.a)(1 + tau v.b)`.
pub fn p_joint_given_hv(out: Outcome, hv: HiddenPair, s: Settings) -> f64 {
    0.25 * ((1.0 + out.sigma.value() * dot(hv.u, s.a)) * (1.0 + out.tau.value() * dot(hv.v, s.b)))
}

/// Station A marginal conditioned on the hidden pair:
/// `1/2 (1 + sigma u.a)`.
///
/// Reads neither `v` nor `b`: Setting Independence and Malus's law hold by
/// construction.
pub fn p_marginal_a(sigma: Sign, hv: HiddenPair, s: Settings) -> f64 {
    0.5 * (1.0 + sigma.value() * dot(hv.u, s.a))
}

/// Station B probability conditioned on A's result and the hidden pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    /// The closed-form value `1/2 (1 + tau v.b)`.
    pub value: f64,
    /// True when the conditioning marginal `P(sigma | u, v, {a,b})` is zero,
    /// i.e. the ratio definition `P(sigma,tau)/P(sigma)` is 0/0 there. The
    /// closed form above is defined everywhere and is what `value` reports.
    pub degenerate: bool,
}

/// Conditional probability of B's result given A's:
/// `1/2 (1 + tau v.b)`, independent of `sigma` (Outcome Independence in
/// closed form).
///
/// When `p_marginal_a(sigma, ..) = 0` the ratio definition degenerates; the
/// returned [`Conditional::degenerate`] flag reports it.
pub fn p_cond_b_given_a(tau: Sign, sigma: Sign, hv: HiddenPair, s: Settings) -> Conditional {
    Conditional {
        value: 0.5 * (1.0 + tau.value() * dot(hv.v, s.b)),
        degenerate: p_marginal_a(sigma, hv, s) == 0.0,
    }
}

/// Averages the joint law over an arbitrary atomic distribution:
/// `sum_i w_i P(sigma, tau | u_i, v_i, s)`.
///
/// Exposed separately from [`p_joint_averaged`] so checkers can feed in
/// modified distributions (for instance the unnormalized variant whose
/// correlator comes out four times too small).
pub fn average_joint_over(d: &PairDist, out: Outcome, s: Settings) -> f64 {
    d.atoms()
        .iter()
        .map(|atom| atom.weight * p_joint_given_hv(out, atom.point, s))
        .sum()
}

/// Model prediction for the observable joint probability: the atom-weighted
/// average of [`p_joint_given_hv`] over the distribution for `s`.
///
/// Evaluates the sum over atoms rather than a closed form; the independent
/// closed-form reference is [`qm_singlet_joint`], which this equals within
/// rounding.
pub fn p_joint_averaged(out: Outcome, s: Settings) -> f64 {
    average_joint_over(&build_distribution(s), out, s)
}

/// Correlator of an averaged joint over an arbitrary distribution.
pub fn correlator_over(d: &PairDist, s: Settings) -> f64 {
    Outcome::ALL
        .iter()
        .map(|&o| o.product() * average_joint_over(d, o, s))
        .sum()
}

/// Model correlator `E(a, b) = sum sigma*tau P(sigma,tau)`; equals `-a.b`.
pub fn correlator(s: Settings) -> f64 {
    correlator_over(&build_distribution(s), s)
}

/// Quantum reference for the singlet: `1/4 (1 - sigma*tau a.b)`.
///
/// Deliberately computed straight from the closed form, independent of the
/// distribution machinery, so it can serve as the oracle for
/// [`p_joint_averaged`].
pub fn qm_singlet_joint(out: Outcome, s: Settings) -> f64 {
    0.25 * (1.0 - out.product() * dot(s.a, s.b))
}

/// Exact joint table of the model at `s`, via the averaged law.
pub fn exact_joint_table(s: Settings) -> JointTable {
    JointTable::from_fn(|out| p_joint_averaged(out, s))
}

#[cfg(test)]
mod qm_oracle {
    //! Independent quantum-mechanical oracle: evaluates the singlet joint
    //! probability as `Tr[rho (Pi_sigma^a x Pi_tau^b)]` with hand-rolled
    //! complex 2x2/4x4 arithmetic, no shared code with the closed form.

    use super::*;

    #[derive(Clone, Copy)]
    pub struct C(pub f64, pub f64);

    impl C {
        fn mul(self, o: C) -> C {
            C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
        }
        fn add(self, o: C) -> C {
            C(self.0 + o.0, self.1 + o.1)
        }
    }

    /// Projector (I + s n.pauli)/2 onto the spin-s eigenstate along n.
    fn projector(s: f64, n: UnitVec3) -> [[C; 2]; 2] {
        let (nx, ny, nz) = (n.x(), n.y(), n.z());
        [
            [C(0.5 * (1.0 + s * nz), 0.0), C(0.5 * s * nx, -0.5 * s * ny)],
            [C(0.5 * s * nx, 0.5 * s * ny), C(0.5 * (1.0 - s * nz), 0.0)],
        ]
    }

    /// Singlet probability: <psi| Pi_a x Pi_b |psi> with
    /// |psi> = (|01> - |10>)/sqrt(2).
    pub fn singlet_prob(out: Outcome, s: Settings) -> f64 {
        let pa = projector(out.sigma.value(), s.a);
        let pb = projector(out.tau.value(), s.b);
        // Kronecker product entries indexed by (i,k),(j,l); amplitudes of
        // |psi> over |00>,|01>,|10>,|11>.
        let amp = [0.0, 1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        let mut acc = C(0.0, 0.0);
        for row in 0..4 {
            for col in 0..4 {
                let (i, k) = (row / 2, row % 2);
                let (j, l) = (col / 2, col % 2);
                let m = pa[i][j].mul(pb[k][l]);
                // conj(amp[row]) * M * amp[col]; amplitudes are real.
                acc = acc.add(C(amp[row] * m.0 * amp[col], amp[row] * m.1 * amp[col]));
            }
        }
        assert!(acc.1.abs() < 1e-14, "probability should be real");
        acc.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::build_unnormalized_distribution;
    use crate::geometry::{planar_direction, random_direction};
    use crate::rng::stream_from_seed;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn settings_xy() -> Settings {
        Settings::new(UnitVec3::X, UnitVec3::Y)
    }

    /// Hidden pair with u.a = cu and v.b = cv for a = x, b = y.
    fn pair_with_overlaps(cu: f64, cv: f64) -> HiddenPair {
        let u = UnitVec3::new(cu, 0.0, (1.0 - cu * cu).sqrt()).unwrap();
        let v = UnitVec3::new(0.0, cv, (1.0 - cv * cv).sqrt()).unwrap();
        HiddenPair::new(u, v)
    }

    #[test]
    fn joint_given_hv_saturates_when_aligned() {
        let s = settings_xy();
        let hv = HiddenPair::new(s.a, s.b);
        let out = Outcome::new(Sign::Plus, Sign::Plus);
        assert_eq!(p_joint_given_hv(out, hv, s), 1.0);
    }

    #[test]
    fn joint_given_hv_unbiased_when_orthogonal() {
        let s = settings_xy();
        let hv = HiddenPair::new(UnitVec3::Z, UnitVec3::Z);
        for out in Outcome::ALL {
            assert_eq!(p_joint_given_hv(out, hv, s), 0.25);
        }
    }

    #[test]
    fn joint_given_hv_generic_value() {
        // 1/4 * (1 + 0.5) * (1 - 0.5) = 0.1875
        let s = settings_xy();
        let hv = pair_with_overlaps(0.5, -0.5);
        let out = Outcome::new(Sign::Plus, Sign::Plus);
        assert!((p_joint_given_hv(out, hv, s) - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn marginal_a_examples() {
        let s = settings_xy();
        assert_eq!(p_marginal_a(Sign::Plus, HiddenPair::new(s.a, s.b), s), 1.0);
        let orth = HiddenPair::new(UnitVec3::Z, s.b);
        assert_eq!(p_marginal_a(Sign::Plus, orth, s), 0.5);
        // sigma = -1, u.a = 0.6 -> 0.2
        let hv = pair_with_overlaps(0.6, 0.0);
        assert!((p_marginal_a(Sign::Minus, hv, s) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn marginal_a_matches_joint_sum() {
        let mut rng = stream_from_seed(5);
        for _ in 0..200 {
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            let hv = HiddenPair::new(random_direction(&mut rng), random_direction(&mut rng));
            for sigma in Sign::BOTH {
                let summed: f64 = Sign::BOTH
                    .iter()
                    .map(|&tau| p_joint_given_hv(Outcome::new(sigma, tau), hv, s))
                    .sum();
                assert!((summed - p_marginal_a(sigma, hv, s)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conditional_examples() {
        let s = settings_xy();
        let aligned = HiddenPair::new(UnitVec3::Z, s.b);
        for sigma in Sign::BOTH {
            assert_eq!(p_cond_b_given_a(Sign::Plus, sigma, aligned, s).value, 1.0);
        }
        let orth = HiddenPair::new(UnitVec3::Z, UnitVec3::Z);
        for sigma in Sign::BOTH {
            assert_eq!(p_cond_b_given_a(Sign::Minus, sigma, orth, s).value, 0.5);
        }
        // tau = +1, v.b = -0.5: both sigma give 0.25.
        let hv = pair_with_overlaps(0.3, -0.5);
        let plus = p_cond_b_given_a(Sign::Plus, Sign::Plus, hv, s);
        let minus = p_cond_b_given_a(Sign::Plus, Sign::Minus, hv, s);
        assert!((plus.value - 0.25).abs() < 1e-15);
        assert_eq!(plus.value, minus.value);
    }

    #[test]
    fn conditional_flags_degenerate_marginal() {
        let s = settings_xy();
        // u = -a with sigma = +1 makes the conditioning marginal vanish.
        let hv = HiddenPair::new(-s.a, s.b);
        let c = p_cond_b_given_a(Sign::Plus, Sign::Plus, hv, s);
        assert!(c.degenerate);
        assert_eq!(c.value, 1.0);
        // Any nonzero marginal must not be flagged.
        let ok = p_cond_b_given_a(Sign::Plus, Sign::Minus, hv, s);
        assert!(!ok.degenerate);
    }

    #[test]
    fn averaged_joint_matches_singlet_examples() {
        // Equal settings, sigma = tau = +1: perfect anticorrelation.
        let eq = Settings::new(UnitVec3::X, UnitVec3::X);
        assert!(p_joint_averaged(Outcome::new(Sign::Plus, Sign::Plus), eq).abs() < 1e-15);
        // Orthogonal settings: every cell 1/4.
        let s = settings_xy();
        for out in Outcome::ALL {
            assert!((p_joint_averaged(out, s) - 0.25).abs() < 1e-15);
        }
        // a.b = 1/2 (60 degrees), equal signs: 1/8.
        let s60 = Settings::from_angle(FRAC_PI_3).unwrap();
        for out in [Outcome::new(Sign::Plus, Sign::Plus), Outcome::new(Sign::Minus, Sign::Minus)] {
            assert!((p_joint_averaged(out, s60) - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_examples() {
        let eq = Settings::new(UnitVec3::Y, UnitVec3::Y);
        assert!((correlator(eq) + 1.0).abs() < 1e-15);
        assert!(correlator(settings_xy()).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_distribution_quarters_the_correlator() {
        // Regression for the known-broken variant: with total weight 1/4 the
        // correlator shrinks to -a.b/4.
        let mut rng = stream_from_seed(11);
        for _ in 0..50 {
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            let flawed = build_unnormalized_distribution(s);
            let e = correlator_over(&flawed, s);
            assert!((e + crate::geometry::dot(s.a, s.b) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qm_reference_examples() {
        let anti = Settings::new(UnitVec3::X, -UnitVec3::X);
        assert!((qm_singlet_joint(Outcome::new(Sign::Plus, Sign::Plus), anti) - 0.5).abs() < 1e-15);
        let mut rng = stream_from_seed(3);
        let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
        let total: f64 = Outcome::ALL.iter().map(|&o| qm_singlet_joint(o, s)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qm_reference_agrees_with_projector_oracle() {
        // Frozen-oracle check: the closed form must match the density-matrix
        // evaluation Tr[rho Pi x Pi] on a grid of settings.
        let mut rng = stream_from_seed(17);
        let mut max_dev: f64 = 0.0;
        for _ in 0..100 {
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            for out in Outcome::ALL {
                let dev = (qm_singlet_joint(out, s) - qm_oracle::singlet_prob(out, s)).abs();
                max_dev = max_dev.max(dev);
            }
        }
        assert!(max_dev < 1e-12, "max deviation from projector oracle: {max_dev}");
    }

    #[test]
    fn averaged_matches_qm_on_grid() {
        // 10x10 settings grid, all outcomes, within 1e-12.
        let mut max_dev: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let a = planar_direction(i as f64 * FRAC_PI_2 / 3.0).unwrap();
                let b = planar_direction(0.3 + j as f64 * FRAC_PI_3 / 2.0).unwrap();
                let s = Settings::new(a, b);
                for out in Outcome::ALL {
                    max_dev = max_dev.max((p_joint_averaged(out, s) - qm_singlet_joint(out, s)).abs());
                }
            }
        }
        assert!(max_dev <= 1e-12, "max |averaged - qm| = {max_dev}");
    }

    #[test]
    fn marginal_a_is_bit_identical_under_remote_setting_change() {
        let mut rng = stream_from_seed(23);
        for _ in 0..100 {
            let a = random_direction(&mut rng);
            let hv = HiddenPair::new(random_direction(&mut rng), random_direction(&mut rng));
            let s1 = Settings::new(a, random_direction(&mut rng));
            let s2 = Settings::new(a, random_direction(&mut rng));
            for sigma in Sign::BOTH {
                assert_eq!(
                    p_marginal_a(sigma, hv, s1).to_bits(),
                    p_marginal_a(sigma, hv, s2).to_bits()
                );
            }
        }
    }

    #[test]
    fn joint_table_helpers() {
        let t = exact_joint_table(settings_xy());
        assert!((t.total() - 1.0).abs() < 1e-12);
        assert!(t.correlator().abs() < 1e-12);
        assert_eq!(t.stderr(Outcome::new(Sign::Plus, Sign::Plus)), None);
    }

    proptest! {
        #[test]
        fn joint_normalizes_over_outcomes(seed in any::<u64>()) {
            let mut rng = stream_from_seed(seed);
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            let hv = HiddenPair::new(random_direction(&mut rng), random_direction(&mut rng));
            let total: f64 = Outcome::ALL.iter().map(|&o| p_joint_given_hv(o, hv, s)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn joint_factorizes_exactly(seed in any::<u64>()) {
            // The joint uses only power-of-two scalings of the same two
            // factors, so marginal * conditional reproduces it bit for bit.
            let mut rng = stream_from_seed(seed);
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            let hv = HiddenPair::new(random_direction(&mut rng), random_direction(&mut rng));
            for out in Outcome::ALL {
                let joint = p_joint_given_hv(out, hv, s);
                let marg = p_marginal_a(out.sigma, hv, s);
                let cond = p_cond_b_given_a(out.tau, out.sigma, hv, s).value;
                prop_assert_eq!(joint.to_bits(), (marg * cond).to_bits());
            }
        }

        #[test]
        fn correlator_is_bounded_and_equals_minus_dot(seed in any::<u64>()) {
            let mut rng = stream_from_seed(seed);
            let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
            let e = correlator(s);
            prop_assert!(e.abs() <= 1.0 + 1e-12);
            prop_assert!((e + dot(s.a, s.b)).abs() < 1e-12);
        }
    }
}
