//! System parameters and the closed-form scalar quantities of the stationary
//! three-mode output state: mode occupations, the squeeze parameter, the
//! phonon number distribution, the conditional pair distribution and the
//! entanglement of the two optical modes before any measurement.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// The two driving parameters of the system.
///
/// `c1` is the red-detuned (beam splitter) cooperativity and `c2` the
/// blue-detuned (two-mode squeezing) one. Construction enforces
/// `1 + c1 - c2 > 0`; every downstream routine assumes a validated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cooperativities {
    c1: f64,
    c2: f64,
}

impl Cooperativities {
    /// Validates and builds a system point.
    ///
    /// Zero cooperativities are accepted: they give the vacuum (or a product
    /// state) and serve as trivial anchors.
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        check_nonneg("c1", c1)?;
        check_nonneg("c2", c2)?;
        let margin = 1.0 + c1 - c2;
        if margin <= 0.0 {
            return Err(Error::Unstable { c1, c2, margin });
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `1 + c1 - c2`, strictly positive for a valid point.
    pub fn stability_margin(&self) -> f64 {
        1.0 + self.c1 - self.c2
    }
}

fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be >= 0",
        });
    }
    Ok(())
}

/// Mean output quanta of the two cavities and the mechanics, plus the
/// squeeze parameter `zeta = n1 / (1 + n2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOccupations {
    pub n1: f64,
    pub n2: f64,
    pub nm: f64,
    pub zeta: f64,
}

/// Output occupations of the stationary state.
///
/// `n2` is assembled as `n1 + nm` so the bookkeeping identity holds to the
/// last bit; it agrees with `4 c2 (c1 + 1) / (1 + c1 - c2)^2` to rounding.
pub fn occupations(coop: &Cooperativities) -> ModeOccupations {
    let (c1, c2) = (coop.c1, coop.c2);
    let d = coop.stability_margin().powi(2);
    let n1 = 4.0 * c1 * c2 / d;
    let nm = 4.0 * c2 / d;
    let zeta = 4.0 * c1 * c2 / (1.0 + c1 + c2).powi(2);
    ModeOccupations {
        n1,
        n2: n1 + nm,
        nm,
        zeta,
    }
}

/// Probability of finding `q` phonons in the mechanical output,
/// `nm^q / (1 + nm)^(1 + q)`.
pub fn phonon_prob(occ: &ModeOccupations, q: usize) -> f64 {
    geometric_prob(occ.nm, q)
}

/// Thermal (geometric) distribution with mean `mean`.
pub(crate) fn geometric_prob(mean: f64, k: usize) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as f64;
    (k * mean.ln() - (1.0 + k) * mean.ln_1p()).exp()
}

/// The conditional photon-number distribution of one cavity given `q`
/// phonons: `f_p(q) = C(p + q, p) zeta^p (1 - zeta)^(1 + q)`, a negative
/// binomial law in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistribution {
    zeta: f64,
    q: usize,
}

impl PairDistribution {
    pub fn new(zeta: f64, q: usize) -> Result<Self> {
        check_zeta(zeta)?;
        Ok(Self { zeta, q })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn offset(&self) -> usize {
        self.q
    }

    /// `ln f_p(q)`; `-inf` where the coefficient vanishes.
    pub fn ln_coeff(&self, p: usize) -> f64 {
        if self.zeta == 0.0 {
            return if p == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let q = self.q as u64;
        let p64 = p as u64;
        ln_binomial(p64 + q, p64)
            + p as f64 * self.zeta.ln()
            + (1.0 + q as f64) * (-self.zeta).ln_1p()
    }

    pub fn coeff(&self, p: usize) -> f64 {
        self.ln_coeff(p).exp()
    }

    /// Schmidt amplitude `sqrt(f_p(q))`.
    pub fn amplitude(&self, p: usize) -> f64 {
        (0.5 * self.ln_coeff(p)).exp()
    }

    /// Upper bound of `f_{p+1} / f_p` for every index at or beyond `p`.
    ///
    /// The ratio `zeta (p + q + 1) / (p + 1)` is nonincreasing in `p`.
    pub(crate) fn ratio_bound(&self, p: usize) -> f64 {
        self.zeta * (p + self.q + 1) as f64 / (p + 1) as f64
    }
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&zeta) || !zeta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "zeta",
            value: zeta,
            reason: "must lie in [0, 1)",
        });
    }
    Ok(())
}

/// `f_p(q)` for a pair distribution.
pub fn pair_coeff(dist: &PairDistribution, p: usize) -> f64 {
    dist.coeff(p)
}

/// Coefficient of `|p, p + q, q>` in the three-mode output state,
/// `sqrt(P_q f_p(q))`.
pub fn three_mode_amplitude(coop: &Cooperativities, p: usize, q: usize) -> f64 {
    let occ = occupations(coop);
    let prob = phonon_prob(&occ, q);
    if prob == 0.0 {
        return 0.0;
    }
    let dist = PairDistribution { zeta: occ.zeta, q };
    (0.5 * (prob.ln() + dist.ln_coeff(p))).exp()
}

/// Mean and standard deviation of `p` under `f_p(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub kappa: f64,
    pub sigma: f64,
    /// Set when `zeta = 0`: the distribution is a point mass at `p = 0`.
    pub degenerate: bool,
}

pub fn gaussian_moments(zeta: f64, q: usize) -> Result<GaussianMoments> {
    check_zeta(zeta)?;
    if zeta == 0.0 {
        return Ok(GaussianMoments {
            kappa: 0.0,
            sigma: 0.0,
            degenerate: true,
        });
    }
    let n = 1.0 + q as f64;
    Ok(GaussianMoments {
        kappa: zeta * n / (1.0 - zeta),
        sigma: (zeta * n).sqrt() / (1.0 - zeta),
        degenerate: false,
    })
}

/// Logarithmic negativity in nats. Always nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntanglementValue(f64);

impl EntanglementValue {
    pub const ZERO: Self = Self(0.0);

    /// Wraps a computed log-negativity, clamping rounding-level negatives.
    pub fn from_nats(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("log-negativity"));
        }
        Ok(Self(value.max(0.0)))
    }

    /// For values that are finite by construction.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(value.is_finite());
        Self(value.max(0.0))
    }

    pub fn nats(self) -> f64 {
        self.0
    }
}

impl From<EntanglementValue> for f64 {
    fn from(v: EntanglementValue) -> f64 {
        v.0
    }
}

/// Entanglement between the two cavity outputs with the mechanics traced
/// out (a two-mode squeezed thermal state).
pub fn pre_measurement_entanglement(coop: &Cooperativities) -> Result<EntanglementValue> {
    let (c1, c2) = (coop.c1, coop.c2);
    let a = c2 * (c1 + c2);
    let b = (1.0 + c1).powi(2) + c1 * c2;
    let denom = a + b + 2.0 * c2 * (1.0 + 2.0 * c1) - 4.0 * (a * b).sqrt();
    let ratio = coop.stability_margin().powi(2) / denom;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::NonFinite("pre-measurement log argument"));
    }
    EntanglementValue::from_nats(ratio.ln())
}

/// Value approached by [`pre_measurement_entanglement`] as `c2 -> c1 + 1`.
pub fn instability_limit_entanglement(c1: f64) -> EntanglementValue {
    EntanglementValue((2.0 * c1 + 1.0).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(c1: f64, c2: f64) -> Cooperativities {
        Cooperativities::new(c1, c2).unwrap()
    }

    #[test]
    fn occupations_at_reference_point() {
        let occ = occupations(&point(10.0, 2.0));
        assert_relative_eq!(occ.n1, 80.0 / 81.0, max_relative = 1e-15);
        assert_relative_eq!(occ.n2, 88.0 / 81.0, max_relative = 1e-15);
        assert_relative_eq!(occ.nm, 8.0 / 81.0, max_relative = 1e-15);
        assert_relative_eq!(occ.zeta, 80.0 / 169.0, max_relative = 1e-15);
        assert_eq!(occ.n2 - occ.n1 - occ.nm, 0.0);
        assert_relative_eq!(occ.zeta, occ.n1 / (1.0 + occ.n2), max_relative = 1e-15);
    }

    #[test]
    fn vacuum_without_blue_drive() {
        let occ = occupations(&point(10.0, 0.0));
        assert_eq!((occ.n1, occ.n2, occ.nm, occ.zeta), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(phonon_prob(&occ, 0), 1.0);
        assert_eq!(phonon_prob(&occ, 3), 0.0);
        assert_eq!(three_mode_amplitude(&point(10.0, 0.0), 0, 0), 1.0);
        assert_eq!(three_mode_amplitude(&point(10.0, 0.0), 1, 0), 0.0);
        assert_eq!(three_mode_amplitude(&point(10.0, 0.0), 0, 2), 0.0);
    }

    #[test]
    fn rejects_unstable_point() {
        let err = Cooperativities::new(5.0, 6.0).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
        assert!(err.to_string().contains("stability violated"));
        assert!(Cooperativities::new(-1.0, 0.5).is_err());
        assert!(Cooperativities::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn phonon_prob_values() {
        let occ = occupations(&point(10.0, 2.0));
        assert_relative_eq!(phonon_prob(&occ, 0), 81.0 / 89.0, max_relative = 1e-14);
        let total: f64 = (0..=200).map(|q| phonon_prob(&occ, q)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_coeff_values() {
        let dist = PairDistribution::new(80.0 / 169.0, 0).unwrap();
        assert_relative_eq!(pair_coeff(&dist, 0), 89.0 / 169.0, max_relative = 1e-14);
        let flat = PairDistribution::new(0.0, 5).unwrap();
        assert_eq!(pair_coeff(&flat, 0), 1.0);
        assert_eq!(pair_coeff(&flat, 1), 0.0);
        assert!(PairDistribution::new(1.0, 0).is_err());
    }

    #[test]
    fn pair_coeff_survives_large_indices() {
        // C(700, 500) overflows f64; its log-domain product does not.
        let dist = PairDistribution::new(0.7, 200).unwrap();
        let v = pair_coeff(&dist, 500);
        assert!(v.is_finite() && v > 0.0 && v < 1.0);
    }

    #[test]
    fn amplitude_at_origin() {
        let a = three_mode_amplitude(&point(10.0, 2.0), 0, 0);
        assert_relative_eq!(a, 9.0 / 13.0, max_relative = 1e-14);
    }

    #[test]
    fn moments_examples() {
        let m = gaussian_moments(80.0 / 169.0, 0).unwrap();
        assert_relative_eq!(m.kappa, 80.0 / 89.0, max_relative = 1e-14);
        let m = gaussian_moments(0.5, 1).unwrap();
        assert_relative_eq!(m.kappa, 2.0, max_relative = 1e-15);
        assert_relative_eq!(m.sigma, 2.0, max_relative = 1e-15);
        let m = gaussian_moments(0.0, 4).unwrap();
        assert!(m.degenerate && m.kappa == 0.0 && m.sigma == 0.0);
    }

    #[test]
    fn pre_measurement_reference_value() {
        // ln(81 / (24 + 141 + 84 - 4 sqrt(3384)))
        let expected = (81.0 / (249.0 - 4.0 * 3384f64.sqrt())).ln();
        let e = pre_measurement_entanglement(&point(10.0, 2.0)).unwrap();
        assert_relative_eq!(e.nats(), expected, max_relative = 1e-13);
        assert_relative_eq!(e.nats(), 1.602_586_937_503_288, max_relative = 1e-12);
    }

    #[test]
    fn pre_measurement_limits() {
        assert_eq!(
            pre_measurement_entanglement(&point(10.0, 0.0))
                .unwrap()
                .nats(),
            0.0
        );
        assert!(
            pre_measurement_entanglement(&point(10.0, 1e-9))
                .unwrap()
                .nats()
                < 1e-3
        );
        let near = pre_measurement_entanglement(&point(10.0, 11.0 - 1e-3)).unwrap();
        assert!((near.nats() - instability_limit_entanglement(10.0).nats()).abs() < 1e-4);
        assert_relative_eq!(instability_limit_entanglement(10.0).nats(), 21f64.ln());
    }
}
