//! The three phonon-counting channels and their post-measurement states.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::model::{
    geometric_prob, occupations, phonon_prob, Cooperativities, EntanglementValue, ModeOccupations,
    PairDistribution,
};
use crate::negativity::{
    log_negativity, NegativityReport, TwoModeLadderMixture, TwoModeLadderPure,
};
use crate::truncation::{amplitude_sum, find_cutoff, TruncationPolicy};

/// Detection efficiency of the phonon counter, `0 < mu <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DetectorEfficiency(f64);

impl DetectorEfficiency {
    pub const PERFECT: Self = Self(1.0);

    pub fn new(mu: f64) -> Result<Self> {
        if mu > 0.0 && mu <= 1.0 {
            Ok(Self(mu))
        } else {
            Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "must lie in (0, 1]",
            })
        }
    }

    pub fn mu(self) -> f64 {
        self.0
    }

    pub fn is_perfect(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for DetectorEfficiency {
    type Error = Error;
    fn try_from(mu: f64) -> Result<Self> {
        Self::new(mu)
    }
}

impl From<DetectorEfficiency> for f64 {
    fn from(mu: DetectorEfficiency) -> f64 {
        mu.0
    }
}

/// A post-measurement state with the probability of the outcome that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioned<S> {
    pub state: S,
    pub probability: f64,
}

/// State after counting exactly `q` phonons.
pub fn perfect_post_state(
    coop: &Cooperativities,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<Conditioned<TwoModeLadderPure>> {
    policy.check_outcome(q)?;
    let occ = occupations(coop);
    let dist = PairDistribution::new(occ.zeta, q)?;
    Ok(Conditioned {
        state: TwoModeLadderPure::from_distribution(&dist, 1.0, policy),
        probability: phonon_prob(&occ, q),
    })
}

/// `2 ln sum_p sqrt(f_p(q))`, summed until the remaining tail is below the
/// last digit.
pub fn perfect_entanglement(coop: &Cooperativities, q: usize) -> EntanglementValue {
    let zeta = occupations(coop).zeta;
    schmidt_sum_entanglement(zeta, q)
}

pub(crate) fn schmidt_sum_entanglement(zeta: f64, q: usize) -> EntanglementValue {
    // zeta comes from validated cooperativities and always lies in [0, 1).
    let dist = PairDistribution::new(zeta, q).expect("zeta in [0, 1)");
    let (sum, _) = amplitude_sum(&dist);
    EntanglementValue::clamped(2.0 * sum.ln())
}

/// `ln(sqrt(8 pi zeta (1 + q)) / (1 - zeta))` before clamping. Accurate
/// only for large `q`; it is negative for weak squeezing.
pub(crate) fn gaussian_raw(zeta: f64, q: usize) -> f64 {
    0.5 * (8.0 * std::f64::consts::PI * zeta * (1.0 + q as f64)).ln() - (-zeta).ln_1p()
}

/// Large-`q` approximation of [`perfect_entanglement`] obtained by
/// replacing the pair distribution with a Gaussian.
pub fn perfect_entanglement_gaussian(
    coop: &Cooperativities,
    q: usize,
) -> Result<EntanglementValue> {
    let zeta = occupations(coop).zeta;
    if zeta == 0.0 {
        return Err(Error::Degenerate(
            "Gaussian approximation undefined at zeta = 0",
        ));
    }
    EntanglementValue::from_nats(gaussian_raw(zeta, q))
}

/// Probability that a detector of efficiency `mu` reports `q` phonons,
/// `(nm mu)^q / (1 + nm mu)^(1 + q)`.
pub fn imperfect_outcome_prob(occ: &ModeOccupations, mu: DetectorEfficiency, q: usize) -> f64 {
    geometric_prob(occ.nm * mu.0, q)
}

/// `(1 - mu) nm / (1 + nm)`, the expansion parameter of the imperfect channel.
pub fn imperfect_epsilon(occ: &ModeOccupations, mu: DetectorEfficiency) -> f64 {
    (1.0 - mu.0) * occ.nm / (1.0 + occ.nm)
}

/// Probability that `s` phonons were present given that `q` were reported.
pub fn imperfect_weight(occ: &ModeOccupations, mu: DetectorEfficiency, q: usize, s: usize) -> f64 {
    ln_imperfect_weight(occ, mu, q, s).exp()
}

fn ln_imperfect_weight(occ: &ModeOccupations, mu: DetectorEfficiency, q: usize, s: usize) -> f64 {
    if s < q {
        return f64::NEG_INFINITY;
    }
    if s == q {
        return (1.0 + q as f64) * ((occ.nm * mu.0).ln_1p() - occ.nm.ln_1p());
    }
    if occ.nm == 0.0 || mu.is_perfect() {
        return f64::NEG_INFINITY;
    }
    let extra = (s - q) as f64;
    extra * (occ.nm.ln() + (-mu.0).ln_1p()) + (1.0 + q as f64) * (occ.nm * mu.0).ln_1p()
        - (1.0 + s as f64) * occ.nm.ln_1p()
        + ln_binomial(s as u64, q as u64)
}

const OFFSET_LIMIT: usize = 1_000_000;

/// Truncates a weight sequence starting at `start` with the given ratio
/// bound; returns the retained weights and the weight left out.
fn truncated_weights(
    ln_weight: impl Fn(usize) -> f64,
    ratio: impl Fn(usize) -> f64,
    start: usize,
    policy: &TruncationPolicy,
) -> (Vec<f64>, f64) {
    let cut = find_cutoff(
        &ln_weight,
        ratio,
        start,
        policy.eps_trunc,
        start + OFFSET_LIMIT,
    );
    let weights: Vec<f64> = (start..=cut.last).map(|s| ln_weight(s).exp()).collect();
    let deficit = (1.0 - weights.iter().sum::<f64>()).max(0.0);
    (weights, deficit)
}

/// Weights `eta(s)`, `s = q, q + 1, ...`, of the imperfect post-state and the
/// weight left beyond the cutoff.
pub fn imperfect_weights(
    occ: &ModeOccupations,
    mu: DetectorEfficiency,
    q: usize,
    policy: &TruncationPolicy,
) -> (Vec<f64>, f64) {
    let eps = imperfect_epsilon(occ, mu);
    truncated_weights(
        |s| ln_imperfect_weight(occ, mu, q, s),
        |s| eps * (s + 1) as f64 / (s + 1 - q) as f64,
        q,
        policy,
    )
}

/// Mixed optical state after a detector of efficiency `mu` reports `q`.
pub fn imperfect_post_state(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<Conditioned<TwoModeLadderMixture>> {
    policy.check_outcome(q)?;
    let occ = occupations(coop);
    let (weights, deficit) = imperfect_weights(&occ, mu, q, policy);
    Ok(Conditioned {
        state: TwoModeLadderMixture::from_pair_family(occ.zeta, q, weights, deficit, policy)?,
        probability: imperfect_outcome_prob(&occ, mu, q),
    })
}

/// Log-negativity of the full imperfect post-state from its partial
/// transpose.
pub fn imperfect_entanglement_numeric(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<NegativityReport> {
    let post = imperfect_post_state(coop, mu, q, policy)?;
    log_negativity(&post.state, policy)
}

/// The two cavity modes with the mechanics traced out.
pub fn traced_two_mode_state(
    coop: &Cooperativities,
    policy: &TruncationPolicy,
) -> Result<TwoModeLadderMixture> {
    let occ = occupations(coop);
    let r = occ.nm / (1.0 + occ.nm);
    let (weights, deficit) = truncated_weights(
        |s| {
            let p = phonon_prob(&occ, s);
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln()
            }
        },
        |_| r,
        0,
        policy,
    );
    TwoModeLadderMixture::from_pair_family(occ.zeta, 0, weights, deficit, policy)
}

/// Entanglement after a no-click: the perfect-count value at `q = 0`.
pub fn off_entanglement(coop: &Cooperativities) -> EntanglementValue {
    perfect_entanglement(coop, 0)
}

/// Probability of the off outcome, `P_0`.
pub fn off_probability(coop: &Cooperativities) -> f64 {
    phonon_prob(&occupations(coop), 0)
}

/// Probability of the on outcome, `1 - P_0`.
pub fn on_probability(coop: &Cooperativities) -> f64 {
    let nm = occupations(coop).nm;
    nm / (1.0 + nm)
}

/// Weight `P_k (1 + nm) / nm` of `k >= 1` phonons given a click.
pub fn on_weight(occ: &ModeOccupations, k: usize) -> f64 {
    ln_on_weight(occ, k).exp()
}

fn ln_on_weight(occ: &ModeOccupations, k: usize) -> f64 {
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    (k - 1) as f64 * occ.nm.ln() - k as f64 * occ.nm.ln_1p()
}

fn on_weights(
    coop: &Cooperativities,
    policy: &TruncationPolicy,
) -> Result<(ModeOccupations, Vec<f64>, f64)> {
    let occ = occupations(coop);
    if occ.nm == 0.0 {
        return Err(Error::Degenerate(
            "on outcome has zero probability when nm = 0",
        ));
    }
    let r = occ.nm / (1.0 + occ.nm);
    let (w, deficit) = truncated_weights(|k| ln_on_weight(&occ, k), |_| r, 1, policy);
    Ok((occ, w, deficit))
}

/// Optical state after a click of an on/off detector.
pub fn on_post_state(
    coop: &Cooperativities,
    policy: &TruncationPolicy,
) -> Result<Conditioned<TwoModeLadderMixture>> {
    let (occ, weights, deficit) = on_weights(coop, policy)?;
    Ok(Conditioned {
        state: TwoModeLadderMixture::from_pair_family(occ.zeta, 1, weights, deficit, policy)?,
        probability: on_probability(coop),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnMethod {
    /// Partial-transpose negativity of the on state.
    Numeric,
    /// Weighted average of the perfect-count values over `k >= 1`.
    Average,
    /// As `Average` with the Gaussian approximation for each term.
    AverageGaussian,
}

/// Entanglement associated with the on outcome.
pub fn on_entanglement(
    coop: &Cooperativities,
    method: OnMethod,
    policy: &TruncationPolicy,
) -> Result<EntanglementValue> {
    match method {
        OnMethod::Numeric => {
            let post = on_post_state(coop, policy)?;
            Ok(log_negativity(&post.state, policy)?.value)
        }
        OnMethod::Average => {
            let (occ, w, _) = on_weights(coop, policy)?;
            let avg = w
                .iter()
                .enumerate()
                .map(|(i, wk)| wk * schmidt_sum_entanglement(occ.zeta, i + 1).nats())
                .sum();
            EntanglementValue::from_nats(avg)
        }
        OnMethod::AverageGaussian => {
            let (occ, w, _) = on_weights(coop, policy)?;
            let avg = w
                .iter()
                .enumerate()
                .map(|(i, wk)| wk * gaussian_raw(occ.zeta, i + 1))
                .sum();
            EntanglementValue::from_nats(avg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(c1: f64, c2: f64) -> Cooperativities {
        Cooperativities::new(c1, c2).unwrap()
    }

    fn mu(v: f64) -> DetectorEfficiency {
        DetectorEfficiency::new(v).unwrap()
    }

    #[test]
    fn efficiency_bounds() {
        assert!(DetectorEfficiency::new(0.0).is_err());
        assert!(DetectorEfficiency::new(1.5).is_err());
        assert!(DetectorEfficiency::new(f64::NAN).is_err());
        assert!(DetectorEfficiency::new(1.0).unwrap().is_perfect());
    }

    #[test]
    fn perfect_post_state_examples() {
        let policy = TruncationPolicy::default();
        let vac = perfect_post_state(&point(10.0, 0.0), 0, &policy).unwrap();
        assert_eq!(vac.state.coeffs(), &[1.0]);
        let ref0 = perfect_post_state(&point(10.0, 2.0), 0, &policy).unwrap();
        let c = ref0.state.coeffs();
        assert_relative_eq!(c[0], (89.0f64 / 169.0).sqrt(), max_relative = 1e-14);
        let root = (80.0f64 / 169.0).sqrt();
        for k in 1..10 {
            assert_relative_eq!(c[k] / c[k - 1], root, max_relative = 1e-12);
        }
        let ref2 = perfect_post_state(&point(10.0, 2.0), 2, &policy).unwrap();
        assert!((ref2.state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_entanglement_values() {
        let coop = point(10.0, 2.0);
        let zeta = 80.0f64 / 169.0;
        let closed = ((1.0 + zeta.sqrt()) / (1.0 - zeta.sqrt())).ln();
        assert!((perfect_entanglement(&coop, 0).nats() - closed).abs() < 1e-12);
        assert!((closed - 1.688_375_919_557_654).abs() < 1e-12);
        assert_eq!(perfect_entanglement(&point(3.0, 0.0), 7).nats(), 0.0);
        assert!((perfect_entanglement(&coop, 1).nats() - 2.070_024_365_629_684).abs() < 1e-12);
    }

    #[test]
    fn gaussian_examples() {
        let g = perfect_entanglement_gaussian(&point(10.0, 2.0), 0)
            .unwrap()
            .nats();
        let zeta = 80.0f64 / 169.0;
        assert_relative_eq!(
            g,
            ((8.0 * std::f64::consts::PI * zeta).sqrt() / (89.0 / 169.0)).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            gaussian_raw(0.5, 1),
            (2.0 * (8.0 * std::f64::consts::PI).sqrt()).ln(),
            max_relative = 1e-14
        );
        assert!(perfect_entanglement_gaussian(&point(10.0, 0.0), 3).is_err());
    }

    #[test]
    fn outcome_probabilities() {
        let occ = occupations(&point(10.0, 2.0));
        for q in 0..6 {
            assert_eq!(
                imperfect_outcome_prob(&occ, DetectorEfficiency::PERFECT, q),
                phonon_prob(&occ, q)
            );
        }
        assert_relative_eq!(
            imperfect_outcome_prob(&occ, mu(0.6), 0),
            1.0 / (1.0 + 0.6 * 8.0 / 81.0),
            max_relative = 1e-15
        );
        let total: f64 = (0..200)
            .map(|q| imperfect_outcome_prob(&occ, mu(0.6), q))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_prob_matches_binomial_thinning() {
        let occ = occupations(&point(10.0, 5.0));
        let m: f64 = 0.7;
        for q in 0..5u64 {
            let direct: f64 = (q..400)
                .map(|s| {
                    phonon_prob(&occ, s as usize)
                        * (ln_binomial(s, q)
                            + q as f64 * m.ln()
                            + (s - q) as f64 * (1.0f64 - m).ln())
                        .exp()
                })
                .sum();
            let closed = imperfect_outcome_prob(&occ, mu(m), q as usize);
            assert!((direct - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn imperfect_weights_normalized() {
        let policy = TruncationPolicy::default();
        let occ = occupations(&point(10.0, 5.0));
        let (w, deficit) = imperfect_weights(&occ, mu(0.9), 2, &policy);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(deficit < policy.eps_trunc);
        let (w1, d1) = imperfect_weights(&occ, DetectorEfficiency::PERFECT, 2, &policy);
        assert_eq!((w1.as_slice(), d1), (&[1.0][..], 0.0));
    }

    #[test]
    fn traced_and_on_weights() {
        let policy = TruncationPolicy::default();
        let traced = traced_two_mode_state(&point(10.0, 2.0), &policy).unwrap();
        assert!((traced.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let vac = traced_two_mode_state(&point(10.0, 0.0), &policy).unwrap();
        assert_eq!(vac.weights(), &[1.0]);
        let on = on_post_state(&point(100.0, 5.0), &policy).unwrap();
        let w = on.state.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let nm = occupations(&point(100.0, 5.0)).nm;
        assert_relative_eq!(w[0] / w[1], (1.0 + nm) / nm, max_relative = 1e-12);
        assert!(on_post_state(&point(100.0, 0.0), &policy).is_err());
        assert!(on_entanglement(&point(100.0, 0.0), OnMethod::Average, &policy).is_err());
    }

    #[test]
    fn off_is_perfect_at_zero() {
        let coop = point(10.0, 2.0);
        assert_eq!(off_entanglement(&coop), perfect_entanglement(&coop, 0));
        assert_eq!(off_entanglement(&point(4.0, 0.0)).nats(), 0.0);
        assert!((off_probability(&coop) + on_probability(&coop) - 1.0).abs() < 1e-15);
    }
}
