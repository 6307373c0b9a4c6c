//! Fock-space truncation.
//!
//! Every infinite sum in the crate is cut with a rigorous geometric tail
//! bound: a sequence `t(n)` whose successive ratio `t(n+1)/t(n)` is
//! nonincreasing satisfies `sum_{k>n} t(k) <= t(n+1) / (1 - r(n+1))` once
//! `r(n+1) < 1`. The discarded mass is never renormalized away; it is carried
//! alongside the retained terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PairDistribution;

/// Knobs controlling every truncated sum and matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Probability mass that may be discarded from any distribution.
    pub eps_trunc: f64,
    /// Weighted Schmidt-amplitude tail that may be discarded from a ladder
    /// component. Controls the error of negativities (they are linear in
    /// the amplitudes, not in the probabilities).
    pub eps_amp: f64,
    /// Largest partial-transpose block dimension; caps the photon cutoff at
    /// `max_block_dim - 1`.
    pub max_block_dim: usize,
    /// Eigenvalues below `-eps_eig * |block|` count as negative.
    pub eps_eig: f64,
    /// Largest accepted measurement outcome.
    pub q_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            eps_trunc: 1e-12,
            eps_amp: 1e-10,
            max_block_dim: 200,
            eps_eig: 1e-12,
            q_max: 200,
        }
    }
}

impl TruncationPolicy {
    pub fn with_eps_trunc(mut self, eps: f64) -> Self {
        self.eps_trunc = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must lie in (0, 1)",
                })
            }
        };
        positive("eps_trunc", self.eps_trunc)?;
        positive("eps_amp", self.eps_amp)?;
        positive("eps_eig", self.eps_eig)?;
        if self.max_block_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "max_block_dim",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    pub fn check_outcome(&self, q: usize) -> Result<()> {
        if q > self.q_max {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q as f64,
                reason: "exceeds q_max",
            });
        }
        Ok(())
    }
}

/// Result of a tail search: the last retained index and a bound on the sum
/// of everything after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub last: usize,
    pub tail: f64,
}

/// Bound on `sum_{k > n} t(k)` given `ln t` and a nonincreasing ratio bound
/// `ratio(k) >= t(k+1)/t(k)`.
pub(crate) fn tail_after(
    ln_term: &impl Fn(usize) -> f64,
    ratio: &impl Fn(usize) -> f64,
    n: usize,
) -> f64 {
    let next = ln_term(n + 1);
    if next == f64::NEG_INFINITY {
        return 0.0;
    }
    let r = ratio(n + 1);
    if r >= 1.0 {
        return f64::INFINITY;
    }
    next.exp() / (1.0 - r)
}

/// Smallest `n >= start` whose tail bound is `<= eps`, or `limit` with its
/// (possibly larger) tail when the budget runs out first.
pub(crate) fn find_cutoff(
    ln_term: impl Fn(usize) -> f64,
    ratio: impl Fn(usize) -> f64,
    start: usize,
    eps: f64,
    limit: usize,
) -> Cutoff {
    let mut n = start;
    loop {
        let tail = tail_after(&ln_term, &ratio, n);
        if tail <= eps || n >= limit {
            return Cutoff { last: n, tail };
        }
        n += 1;
    }
}

/// Tail bounds of a pair distribution after photon number `p`:
/// `(sum_{k>p} f_k, sum_{k>p} sqrt(f_k))`.
pub(crate) fn pair_tails(dist: &PairDistribution, p: usize) -> (f64, f64) {
    let ln = |k| dist.ln_coeff(k);
    let ln_half = |k| 0.5 * dist.ln_coeff(k);
    let r = |k| dist.ratio_bound(k);
    let r_half = |k| dist.ratio_bound(k).sqrt();
    (tail_after(&ln, &r, p), tail_after(&ln_half, &r_half, p))
}

/// Photon cutoff for a ladder component carrying mixture weight `weight`.
///
/// Both the weighted mass tail and the weighted amplitude tail must fall
/// below their budgets; the result is capped at `max_block_dim - 1`.
pub(crate) fn ladder_cutoff(
    dist: &PairDistribution,
    weight: f64,
    policy: &TruncationPolicy,
) -> usize {
    let cap = policy.max_block_dim - 1;
    let w = weight.max(f64::MIN_POSITIVE);
    let mass = find_cutoff(
        |k| dist.ln_coeff(k),
        |k| dist.ratio_bound(k),
        0,
        policy.eps_trunc / w,
        cap,
    );
    let amp = find_cutoff(
        |k| 0.5 * dist.ln_coeff(k),
        |k| dist.ratio_bound(k).sqrt(),
        mass.last,
        policy.eps_amp / w,
        cap,
    );
    amp.last
}

/// `sum_p sqrt(f_p(q))` to the last representable digit, with the bound on
/// the omitted tail.
pub(crate) fn amplitude_sum(dist: &PairDistribution) -> (f64, f64) {
    const HARD_LIMIT: usize = 50_000_000;
    let mut sum = 0.0;
    let mut p = 0;
    loop {
        sum += dist.amplitude(p);
        let (_, amp_tail) = pair_tails(dist, p);
        if amp_tail <= 1e-17 * sum || p >= HARD_LIMIT {
            return (sum, amp_tail);
        }
        p += 1;
    }
}
