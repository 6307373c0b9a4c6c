//! Perturbative entanglement after an imperfect count.
//!
//! Near `mu = 1` the imperfect post-state is dominated by the `s = q`
//! component; the `s = q + 1` and `s = q + 2` components are treated as a
//! perturbation of its partial transpose. The small parameter is
//! `epsilon = (1 - mu) nm / (1 + nm)`.

use serde::{Deserialize, Serialize};

use crate::channels::{
    imperfect_epsilon, imperfect_weight, schmidt_sum_entanglement, DetectorEfficiency,
};
use crate::error::{Error, Result};
use crate::model::{
    occupations, Cooperativities, EntanglementValue, ModeOccupations, PairDistribution,
};
use crate::negativity::{log_negativity, NegativityReport, TwoModeLadderMixture};
use crate::truncation::{amplitude_sum, find_cutoff, TruncationPolicy};

/// Posterior weights of `s = q, q + 1, q + 2` and their small-epsilon forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaWeights {
    pub q: usize,
    pub epsilon: f64,
    /// `eta(q)`, `eta(q + 1)`, `eta(q + 2)` from the binomial-thinning posterior.
    pub exact: [f64; 3],
    /// The same weights written in terms of `epsilon` (algebraically equal).
    pub closed: [f64; 3],
    /// Second-order Taylor expansions in `epsilon`.
    pub expansion: [f64; 3],
}

impl EtaWeights {
    pub fn eta_q(&self) -> f64 {
        self.exact[0]
    }

    pub fn eta_q1(&self) -> f64 {
        self.exact[1]
    }

    pub fn eta_q2(&self) -> f64 {
        self.exact[2]
    }

    /// `1 - eta(q) - eta(q+1) - eta(q+2)`, of order `epsilon^3`.
    pub fn residual(&self) -> f64 {
        1.0 - self.exact.iter().sum::<f64>()
    }

    /// Largest `|exact - expansion|` over the three weights.
    pub fn expansion_gap(&self) -> f64 {
        self.exact
            .iter()
            .zip(&self.expansion)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn eta_weights(occ: &ModeOccupations, mu: DetectorEfficiency, q: usize) -> EtaWeights {
    let eps = imperfect_epsilon(occ, mu);
    let n = q as f64 + 1.0;
    let base = (n * (-eps).ln_1p()).exp();
    EtaWeights {
        q,
        epsilon: eps,
        exact: [0, 1, 2].map(|k| imperfect_weight(occ, mu, q, q + k)),
        closed: [base, n * eps * base, 0.5 * n * (n + 1.0) * eps * eps * base],
        expansion: [
            1.0 - n * eps + 0.5 * q as f64 * n * eps * eps,
            n * eps - n * n * eps * eps,
            0.5 * n * (n + 1.0) * eps * eps,
        ],
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn require_squeezing(zeta: f64) -> Result<()> {
    if zeta == 0.0 {
        return Err(Error::Degenerate(
            "second-order coupling undefined at zeta = 0",
        ));
    }
    Ok(())
}

fn ln_g(at_q: &PairDistribution, at_q1: &PairDistribution, p1: usize, p2: usize) -> f64 {
    let num = at_q1.ln_coeff(p1) + at_q1.ln_coeff(p2);
    let d1 = 0.5 * (at_q.ln_coeff(p1) + at_q.ln_coeff(p2 + 1));
    let d2 = 0.5 * (at_q.ln_coeff(p1 + 1) + at_q.ln_coeff(p2));
    num - log_add(d1, d2)
}

/// Second-order coupling between the `(p1, p2)` and neighbouring
/// eigenvectors of the unperturbed partial transpose.
pub fn g_coupling(zeta: f64, q: usize, p1: usize, p2: usize) -> Result<f64> {
    let at_q = PairDistribution::new(zeta, q)?;
    require_squeezing(zeta)?;
    let at_q1 = PairDistribution::new(zeta, q + 1)?;
    Ok(ln_g(&at_q, &at_q1, p1, p2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaFactor {
    /// Double sum of `g` over the truncation window over `(sum sqrt f)^2`.
    pub direct: f64,
    /// Gaussian-integral estimate `sqrt((1 + zeta q) / (zeta + zeta q)) / 2`.
    pub gaussian: f64,
    /// Last photon number in the summation window.
    pub p_max: usize,
}

const OMEGA_WINDOW_LIMIT: usize = 20_000;

/// Sums needed for the second-order correction at squeeze parameter `zeta`.
fn coupling_sums(zeta: f64, q: usize, policy: &TruncationPolicy) -> Result<(f64, f64, usize)> {
    let at_q = PairDistribution::new(zeta, q)?;
    require_squeezing(zeta)?;
    let at_q1 = PairDistribution::new(zeta, q + 1)?;
    // g carries two f(q + 1) factors; the window follows their amplitude tail.
    let p_max = find_cutoff(
        |k| 0.5 * at_q1.ln_coeff(k),
        |k| at_q1.ratio_bound(k).sqrt(),
        0,
        policy.eps_amp,
        OMEGA_WINDOW_LIMIT,
    )
    .last;
    let ln_f0: Vec<f64> = (0..=p_max + 1).map(|p| at_q.ln_coeff(p)).collect();
    let ln_f1: Vec<f64> = (0..=p_max).map(|p| at_q1.ln_coeff(p)).collect();
    let mut g_sum = 0.0;
    for p1 in 0..=p_max {
        let mut row = 0.0;
        for p2 in 0..=p_max {
            let d = log_add(
                0.5 * (ln_f0[p1] + ln_f0[p2 + 1]),
                0.5 * (ln_f0[p1 + 1] + ln_f0[p2]),
            );
            row += (ln_f1[p1] + ln_f1[p2] - d).exp();
        }
        g_sum += row;
    }
    let amp: f64 = (0..=p_max).map(|p| (0.5 * ln_f0[p]).exp()).sum();
    Ok((g_sum, amp * amp, p_max))
}

pub fn omega_factor(
    coop: &Cooperativities,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<OmegaFactor> {
    let zeta = occupations(coop).zeta;
    let (g_sum, amp_sq, p_max) = coupling_sums(zeta, q, policy)?;
    Ok(OmegaFactor {
        direct: g_sum / amp_sq,
        gaussian: omega_gaussian(zeta, q),
        p_max,
    })
}

pub fn omega_gaussian(zeta: f64, q: usize) -> f64 {
    let q = q as f64;
    0.5 * ((1.0 + zeta * q) / (zeta + zeta * q)).sqrt()
}

/// A perturbative estimate, clamped at zero when the correction overshoots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeEstimate {
    pub value: EntanglementValue,
    pub raw: f64,
    pub clamped: bool,
    /// `epsilon (q + 1) < 0.1`, where the expansion tracks the numerics.
    pub trusted: bool,
}

const TRUST_LIMIT: f64 = 0.1;

fn estimate(raw: f64, eps: f64, q: usize) -> Result<PerturbativeEstimate> {
    if !raw.is_finite() {
        return Err(Error::NonFinite("perturbative estimate"));
    }
    Ok(PerturbativeEstimate {
        value: EntanglementValue::clamped(raw),
        raw,
        clamped: raw < 0.0,
        trusted: eps * (q as f64 + 1.0) < TRUST_LIMIT,
    })
}

/// `E_N(q) - (q + 1) epsilon`.
pub fn first_order_entanglement(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
) -> Result<PerturbativeEstimate> {
    let occ = occupations(coop);
    let eps = imperfect_epsilon(&occ, mu);
    let e = schmidt_sum_entanglement(occ.zeta, q).nats();
    estimate(e - (q as f64 + 1.0) * eps, eps, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    /// Double sum over the truncation window.
    Direct,
    /// Gaussian-integral estimate.
    Gaussian,
    /// The large-`q` limit `1/2`.
    Half,
}

/// `E_N(q) + (q + 1) epsilon [ (q Omega + Omega - 1) epsilon / 2 - 1 ]`.
pub fn second_order_entanglement(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
    mode: OmegaMode,
    policy: &TruncationPolicy,
) -> Result<PerturbativeEstimate> {
    let occ = occupations(coop);
    let eps = imperfect_epsilon(&occ, mu);
    let omega = match mode {
        OmegaMode::Half => 0.5,
        OmegaMode::Gaussian => {
            require_squeezing(occ.zeta)?;
            omega_gaussian(occ.zeta, q)
        }
        OmegaMode::Direct => omega_factor(coop, q, policy)?.direct,
    };
    let e = schmidt_sum_entanglement(occ.zeta, q).nats();
    let n = q as f64 + 1.0;
    estimate(e + n * eps * (0.5 * (n * omega - 1.0) * eps - 1.0), eps, q)
}

/// Perturbative sums of the negative eigenvalues of the imperfect
/// partial transpose, before the logarithm is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSums {
    pub eta: EtaWeights,
    /// `((sum sqrt f)^2 - 1) eta(q) / 2`
    pub zero: f64,
    /// `-eta(q + 1) / 2`
    pub first: f64,
    /// `eta(q + 1)^2 / (4 eta(q)) sum g`
    pub second: f64,
    /// `-eta(q + 2) / 2`, the diagonal shift from the `s = q + 2` component.
    pub second_diagonal: f64,
}

impl PerturbationSums {
    /// `ln(1 + 2 N)` keeping corrections through `order` (0, 1 or 2).
    pub fn log_negativity(&self, order: usize) -> f64 {
        let mut n = self.zero;
        if order >= 1 {
            n += self.first;
        }
        if order >= 2 {
            n += self.second + self.second_diagonal;
        }
        (2.0 * n).ln_1p()
    }
}

pub fn perturbation_sums(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<PerturbationSums> {
    let occ = occupations(coop);
    let eta = eta_weights(&occ, mu, q);
    let (amp, _) = amplitude_sum(&PairDistribution::new(occ.zeta, q)?);
    let second = if eta.eta_q1() == 0.0 {
        0.0
    } else {
        let (g_sum, _, _) = coupling_sums(occ.zeta, q, policy)?;
        eta.eta_q1().powi(2) / (4.0 * eta.eta_q()) * g_sum
    };
    Ok(PerturbationSums {
        eta,
        zero: 0.5 * (amp * amp - 1.0) * eta.eta_q(),
        first: -0.5 * eta.eta_q1(),
        second,
        second_diagonal: -0.5 * eta.eta_q2(),
    })
}

/// Numeric log-negativity of the imperfect post-state cut to its `s = q`
/// and `s = q + 1` components, weights left unnormalized.
pub fn two_term_negativity(
    coop: &Cooperativities,
    mu: DetectorEfficiency,
    q: usize,
    policy: &TruncationPolicy,
) -> Result<NegativityReport> {
    let occ = occupations(coop);
    let eta = eta_weights(&occ, mu, q);
    let weights = vec![eta.eta_q(), eta.eta_q1()];
    let deficit = 1.0 - eta.eta_q() - eta.eta_q1();
    let mix = TwoModeLadderMixture::from_pair_family(occ.zeta, q, weights, deficit, policy)?;
    log_negativity(&mix, policy)
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
    fn eta_at_unit_efficiency() {
        let occ = occupations(&point(10.0, 2.0));
        let w = eta_weights(&occ, DetectorEfficiency::PERFECT, 3);
        assert_eq!(w.exact, [1.0, 0.0, 0.0]);
        assert_eq!(w.epsilon, 0.0);
    }

    #[test]
    fn eta_epsilon_example() {
        let occ = occupations(&point(10.0, 2.0));
        let w = eta_weights(&occ, mu(0.9), 0);
        assert_relative_eq!(w.epsilon, 8.0 / 890.0, max_relative = 1e-12);
        for k in 0..3 {
            assert_relative_eq!(w.exact[k], w.closed[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn expansion_sums_to_one() {
        for q in [0usize, 3, 10] {
            let n = q as f64 + 1.0;
            let eps = 0.01;
            let e = [
                1.0 - n * eps + 0.5 * q as f64 * n * eps * eps,
                n * eps - n * n * eps * eps,
                0.5 * n * (n + 1.0) * eps * eps,
            ];
            assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn g_symmetric_and_positive() {
        for &(p1, p2) in &[(0, 0), (0, 3), (2, 7), (10, 4)] {
            let a = g_coupling(0.4, 2, p1, p2).unwrap();
            let b = g_coupling(0.4, 2, p2, p1).unwrap();
            assert_eq!(a, b);
            assert!(a > 0.0);
        }
        assert!(g_coupling(0.0, 2, 0, 0).is_err());
    }

    #[test]
    fn half_mode_matches_quadratic_form() {
        let coop = point(10.0, 2.0);
        let policy = TruncationPolicy::default();
        let occ = occupations(&coop);
        let m = mu(0.95);
        let eps = imperfect_epsilon(&occ, m);
        for q in [0usize, 1, 4] {
            let e = schmidt_sum_entanglement(occ.zeta, q).nats();
            let qf = q as f64;
            let expected = e - (qf + 1.0) * eps + (qf * qf - 1.0) / 4.0 * eps * eps;
            let got = second_order_entanglement(&coop, m, q, OmegaMode::Half, &policy).unwrap();
            assert!((got.raw - expected).abs() < 1e-14);
        }
        let one = second_order_entanglement(&coop, m, 1, OmegaMode::Half, &policy).unwrap();
        let first = first_order_entanglement(&coop, m, 1).unwrap();
        assert!((one.raw - first.raw).abs() < 1e-15);
    }

    #[test]
    fn orders_collapse_at_unit_efficiency() {
        let coop = point(10.0, 5.0);
        let policy = TruncationPolicy::default();
        for q in 0..4 {
            let e = schmidt_sum_entanglement(occupations(&coop).zeta, q);
            assert_eq!(
                first_order_entanglement(&coop, DetectorEfficiency::PERFECT, q)
                    .unwrap()
                    .value,
                e
            );
            for mode in [OmegaMode::Direct, OmegaMode::Gaussian, OmegaMode::Half] {
                let s =
                    second_order_entanglement(&coop, DetectorEfficiency::PERFECT, q, mode, &policy)
                        .unwrap();
                assert_eq!(s.value, e);
            }
        }
    }

    #[test]
    fn clamps_overshoot() {
        let coop = point(0.1, 0.5);
        let est = first_order_entanglement(&coop, mu(0.01), 30).unwrap();
        assert!(est.raw < 0.0);
        assert!(est.clamped && !est.trusted);
        assert_eq!(est.value.nats(), 0.0);
    }

    #[test]
    fn sums_reproduce_expanded_forms() {
        // Expanding the logarithm of the resummed expression to second order
        // in epsilon recovers the closed second-order estimate.
        let coop = point(10.0, 5.0);
        let policy = TruncationPolicy::default();
        let m = mu(0.999);
        let sums = perturbation_sums(&coop, m, 2, &policy).unwrap();
        let eps = sums.eta.epsilon;
        let second = second_order_entanglement(&coop, m, 2, OmegaMode::Direct, &policy).unwrap();
        assert!((sums.log_negativity(2) - second.raw).abs() < 50.0 * eps.powi(3));
        let first = first_order_entanglement(&coop, m, 2).unwrap();
        assert!((sums.log_negativity(1) - first.raw).abs() < 50.0 * eps.powi(2));
    }
}
