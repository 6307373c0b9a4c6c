//! Logarithmic negativity of two-mode ladder states.
//!
//! A ladder mixture `sum_s w(s) |Psi_s><Psi_s|` with
//! `|Psi_s> = sum_p c_p(s) |p, p + s>` only couples Fock states with equal
//! total quanta, so its partial transpose splits into independent blocks
//! labelled by `Q = a + a' + s`. Rows and columns of a block are indexed by
//! the first-mode photon number `a`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EntanglementValue, PairDistribution};
use crate::truncation::{ladder_cutoff, pair_tails, TruncationPolicy};

const NORM_TOL: f64 = 1e-10;

/// Pure state `sum_p c_p |p, p + offset>` with `c_p >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeLadderPure {
    offset: usize,
    coeffs: Vec<f64>,
    tail_mass: f64,
    tail_amplitude: f64,
}

impl TwoModeLadderPure {
    /// An explicit, fully resolved state. `sum c_p^2` must be 1 within 1e-10.
    pub fn new(offset: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_tail(offset, coeffs, 0.0, 0.0)
    }

    /// A truncated state whose discarded tail carries `tail_mass` of
    /// probability and `tail_amplitude` of summed amplitude.
    pub fn with_tail(
        offset: usize,
        coeffs: Vec<f64>,
        tail_mass: f64,
        tail_amplitude: f64,
    ) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyState);
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidParameter {
                name: "coeff",
                value: coeffs
                    .iter()
                    .copied()
                    .find(|c| !c.is_finite() || *c < 0.0)
                    .unwrap(),
                reason: "Schmidt coefficients must be finite and >= 0",
            });
        }
        let norm: f64 = coeffs.iter().map(|c| c * c).sum();
        if (norm + tail_mass - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: norm,
                reason: "squared coefficients plus tail must sum to 1",
            });
        }
        Ok(Self {
            offset,
            coeffs,
            tail_mass,
            tail_amplitude,
        })
    }

    /// Schmidt coefficients `sqrt(f_p(q))` of a pair distribution, cut by
    /// `policy` for a component of mixture weight `weight`.
    pub fn from_distribution(
        dist: &PairDistribution,
        weight: f64,
        policy: &TruncationPolicy,
    ) -> Self {
        let p_max = ladder_cutoff(dist, weight, policy);
        let coeffs: Vec<f64> = (0..=p_max).map(|p| dist.amplitude(p)).collect();
        let (tail_mass, tail_amplitude) = pair_tails(dist, p_max);
        Self {
            offset: dist.offset(),
            coeffs,
            tail_mass,
            tail_amplitude,
        }
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn p_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Bound on the probability discarded by truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Bound on `sum c_p` over the discarded indices.
    pub fn tail_amplitude(&self) -> f64 {
        self.tail_amplitude
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Ensemble `sum_s w(s) |Psi_s><Psi_s|` over consecutive offsets
/// `s = s_min ..= s_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeLadderMixture {
    s_min: usize,
    weights: Vec<f64>,
    states: Vec<TwoModeLadderPure>,
    weight_deficit: f64,
}

impl TwoModeLadderMixture {
    /// `states[i]` must have offset `s_min + i`; weights plus the declared
    /// deficit must sum to 1.
    pub fn new(
        s_min: usize,
        weights: Vec<f64>,
        states: Vec<TwoModeLadderPure>,
        weight_deficit: f64,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyState);
        }
        if weights.len() != states.len() {
            return Err(Error::InvalidParameter {
                name: "states",
                value: states.len() as f64,
                reason: "one state per weight required",
            });
        }
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: w,
                reason: "weights must be finite and >= 0",
            });
        }
        if states
            .iter()
            .enumerate()
            .any(|(i, st)| st.offset != s_min + i)
        {
            return Err(Error::InvalidParameter {
                name: "offset",
                value: s_min as f64,
                reason: "component offsets must run consecutively from s_min",
            });
        }
        let total: f64 = weights.iter().sum();
        if (total + weight_deficit - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "weights",
                value: total,
                reason: "weights plus deficit must sum to 1",
            });
        }
        Ok(Self {
            s_min,
            weights,
            states,
            weight_deficit,
        })
    }

    /// One-component mixture.
    pub fn pure(state: TwoModeLadderPure) -> Self {
        Self {
            s_min: state.offset,
            weights: vec![1.0],
            states: vec![state],
            weight_deficit: 0.0,
        }
    }

    /// Mixture whose component at offset `s` is the pair-distribution state
    /// `sqrt(f_p(s))` for squeeze parameter `zeta`.
    pub fn from_pair_family(
        zeta: f64,
        s_min: usize,
        weights: Vec<f64>,
        weight_deficit: f64,
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        let states = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let dist = PairDistribution::new(zeta, s_min + i)?;
                Ok(TwoModeLadderPure::from_distribution(&dist, w, policy))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(s_min, weights, states, weight_deficit)
    }

    pub fn s_min(&self) -> usize {
        self.s_min
    }

    pub fn s_max(&self) -> usize {
        self.s_min + self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[TwoModeLadderPure] {
        &self.states
    }

    /// Weight discarded beyond `s_max`.
    pub fn weight_deficit(&self) -> f64 {
        self.weight_deficit
    }

    /// Bound on the total trace missing from the truncated density matrix.
    pub fn trace_deficit(&self) -> f64 {
        self.weight_deficit
            + self
                .weights
                .iter()
                .zip(&self.states)
                .map(|(w, st)| w * st.tail_mass)
                .sum::<f64>()
    }

    /// Bound on the weighted amplitude discarded from the components.
    pub fn amplitude_deficit(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.states)
            .map(|(w, st)| w * st.tail_amplitude)
            .sum()
    }

    fn q_max(&self) -> usize {
        self.states
            .iter()
            .map(|st| st.offset + 2 * st.p_max())
            .max()
            .unwrap_or(self.s_min)
    }
}

/// One block of the partial transpose at fixed total quanta.
///
/// Row `i` corresponds to first-mode photon number `first_index + i`. Rows
/// outside the stored range are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PtBlock {
    pub total_quanta: usize,
    pub first_index: usize,
    pub matrix: DMatrix<f64>,
}

impl PtBlock {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.matrix;
        (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
    }
}

fn build_block(mix: &TwoModeLadderMixture, total: usize) -> Option<PtBlock> {
    // Range of first-mode photon numbers touched by any component.
    let mut lo = usize::MAX;
    let mut hi = 0;
    for st in mix.states.iter().take_while(|st| st.offset <= total) {
        let rest = total - st.offset;
        let a_lo = rest.saturating_sub(st.p_max());
        let a_hi = st.p_max().min(rest);
        if a_lo <= a_hi {
            lo = lo.min(a_lo);
            hi = hi.max(a_hi);
        }
    }
    if lo > hi {
        return None;
    }
    let dim = hi - lo + 1;
    let mut m = DMatrix::zeros(dim, dim);
    let mut nonzero = false;
    for (st, &w) in mix.states.iter().zip(&mix.weights) {
        if st.offset > total {
            break;
        }
        let rest = total - st.offset;
        let c = &st.coeffs;
        let a_lo = rest.saturating_sub(st.p_max());
        let a_hi = st.p_max().min(rest);
        // a <= a' half; the mirror is copied so the matrix is exactly symmetric.
        for a in a_lo..=a_hi {
            let b = rest - a;
            if b < a {
                break;
            }
            let v = w * c[a] * c[b];
            nonzero |= v != 0.0;
            m[(a - lo, b - lo)] = v;
            m[(b - lo, a - lo)] = v;
        }
    }
    nonzero.then_some(PtBlock {
        total_quanta: total,
        first_index: lo,
        matrix: m,
    })
}

/// All nonzero partial-transpose blocks, in increasing total quanta.
pub fn build_pt_blocks(mix: &TwoModeLadderMixture) -> Vec<PtBlock> {
    (mix.s_min..=mix.q_max())
        .filter_map(|q| build_block(mix, q))
        .collect()
}

const MAX_SWEEPS_PER_DIM: usize = 1000;

/// Eigenvalues and orthonormal eigenvectors (as columns) of a block.
pub fn block_eigenpairs(block: &PtBlock) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let dim = block.dim();
    let eig = SymmetricEigen::try_new(
        block.matrix.clone(),
        f64::EPSILON,
        MAX_SWEEPS_PER_DIM * dim.max(1),
    )
    .ok_or(Error::NoConvergence {
        total_quanta: block.total_quanta,
        dim,
    })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            total_quanta: block.total_quanta,
            dim,
        });
    }
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Eigenvalues of a block (unordered).
///
/// Skips eigenvector accumulation. The implicit Wilkinson-shift QR
/// iteration behind it always converges for symmetric input, so the only
/// failure left to report is a non-finite result.
pub fn block_eigenvalues(block: &PtBlock) -> Result<Vec<f64>> {
    if block.dim() == 1 {
        return Ok(vec![block.matrix[(0, 0)]]);
    }
    let vals = block.matrix.symmetric_eigenvalues();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            total_quanta: block.total_quanta,
            dim: block.dim(),
        });
    }
    Ok(vals.iter().copied().collect())
}

/// Largest `|M v - lambda v|` over the eigenpairs, relative to `|M|`.
pub fn eigen_residual(block: &PtBlock) -> Result<f64> {
    let (vals, vecs) = block_eigenpairs(block)?;
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm == 0.0 {
        return Ok(0.0);
    }
    let worst = (0..vals.len())
        .map(|k| {
            let v = vecs.column(k);
            (&block.matrix * v - v * vals[k]).norm()
        })
        .fold(0.0f64, f64::max);
    Ok(worst / norm)
}

/// `2 ln sum_p c_p`, the log-negativity of a pure ladder state.
pub fn schmidt_log_negativity(state: &TwoModeLadderPure) -> Result<EntanglementValue> {
    if state.coeffs.is_empty() {
        return Err(Error::EmptyState);
    }
    let sum: f64 = state.coeffs.iter().sum();
    EntanglementValue::from_nats(2.0 * sum.ln())
}

/// Log-negativity together with the truncation bookkeeping behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub value: EntanglementValue,
    /// Sum of the magnitudes of the negative eigenvalues.
    pub negativity: f64,
    /// Trace of the retained partial transpose (equals that of the state).
    pub captured_trace: f64,
    /// Bound on the trace missing from the truncated state.
    pub trace_deficit: f64,
    /// Bound on the weighted Schmidt amplitude discarded from the components.
    pub amplitude_deficit: f64,
    pub blocks: usize,
    pub largest_block: usize,
}

struct BlockStats {
    negative: f64,
    trace: f64,
    dim: usize,
}

fn block_stats(block: &PtBlock, eps_eig: f64) -> Result<BlockStats> {
    let vals = block_eigenvalues(block)?;
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = -eps_eig * norm;
    let negative = vals.iter().filter(|&&v| v < cut).map(|v| -v).sum();
    Ok(BlockStats {
        negative,
        trace: block.trace(),
        dim: block.dim(),
    })
}

/// `ln(1 + 2 N)` where `N` sums the negative partial-transpose eigenvalues.
///
/// Blocks are solved in parallel; their contributions are added in order
/// of total quanta so the result does not depend on scheduling.
pub fn log_negativity(
    mix: &TwoModeLadderMixture,
    policy: &TruncationPolicy,
) -> Result<NegativityReport> {
    let stats: Vec<Option<BlockStats>> = (mix.s_min..=mix.q_max())
        .into_par_iter()
        .map(|q| match build_block(mix, q) {
            Some(b) => block_stats(&b, policy.eps_eig).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let mut negativity = 0.0;
    let mut captured_trace = 0.0;
    let mut blocks = 0;
    let mut largest_block = 0;
    for s in stats.iter().flatten() {
        negativity += s.negative;
        captured_trace += s.trace;
        blocks += 1;
        largest_block = largest_block.max(s.dim);
    }
    Ok(NegativityReport {
        value: EntanglementValue::from_nats((2.0 * negativity).ln_1p())?,
        negativity,
        captured_trace,
        trace_deficit: mix.trace_deficit(),
        amplitude_deficit: mix.amplitude_deficit(),
        blocks,
        largest_block,
    })
}
