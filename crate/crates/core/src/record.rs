//! A single evaluated measurement outcome with entanglement values from
//! every requested method.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{
    imperfect_post_state, off_entanglement, off_probability, on_entanglement, on_post_state,
    perfect_entanglement, perfect_entanglement_gaussian, perfect_post_state, DetectorEfficiency,
    OnMethod,
};
use crate::error::Result;
use crate::model::{occupations, pre_measurement_entanglement, Cooperativities, EntanglementValue};
use crate::negativity::{
    log_negativity, NegativityReport, TwoModeLadderMixture, TwoModeLadderPure,
};
use crate::perturbation::{
    first_order_entanglement, second_order_entanglement, OmegaMode, PerturbativeEstimate,
};
use crate::truncation::TruncationPolicy;

/// Ways of obtaining an entanglement value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Schmidt sum of the perfect-count state.
    Exact,
    /// Partial-transpose eigensolve of the channel's post-state.
    Eigensolve,
    /// Gaussian approximation of the Schmidt sum.
    Gaussian,
    Pert1,
    Pert2,
    /// Closed form before any measurement.
    Pre,
    /// Off outcome of an on/off detector.
    Off,
    OnoffNumeric,
    OnoffAverage,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Exact,
        Method::Eigensolve,
        Method::Gaussian,
        Method::Pert1,
        Method::Pert2,
        Method::Pre,
        Method::Off,
        Method::OnoffNumeric,
        Method::OnoffAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Eigensolve => "eigensolve",
            Method::Gaussian => "gaussian",
            Method::Pert1 => "pert1",
            Method::Pert2 => "pert2",
            Method::Pre => "pre",
            Method::Off => "off",
            Method::OnoffNumeric => "onoff-numeric",
            Method::OnoffAverage => "onoff-average",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                format!(
                    "unknown method '{s}' (expected one of {})",
                    known.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Perfect,
    Imperfect,
    Off,
    On,
}

/// What was measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    /// A counter of efficiency `mu` reported `q` phonons.
    Count {
        mu: DetectorEfficiency,
        q: usize,
    },
    Off,
    On,
}

impl Measurement {
    pub fn channel(&self) -> Channel {
        match self {
            Measurement::Count { mu, .. } if mu.is_perfect() => Channel::Perfect,
            Measurement::Count { .. } => Channel::Imperfect,
            Measurement::Off => Channel::Off,
            Measurement::On => Channel::On,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PostState {
    Pure(TwoModeLadderPure),
    Mixture(TwoModeLadderMixture),
}

/// One method's result for a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodValue {
    /// Nonnegative log-negativity in nats; absent when it cannot be computed.
    pub value: Option<EntanglementValue>,
    /// Whether the value describes this channel (rather than a reference).
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trusted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MethodValue {
    fn plain(value: EntanglementValue, applicable: bool) -> Self {
        Self {
            value: Some(value),
            applicable,
            raw: None,
            clamped: None,
            trusted: None,
            note: None,
        }
    }

    fn missing(note: impl Into<String>) -> Self {
        Self {
            value: None,
            applicable: false,
            raw: None,
            clamped: None,
            trusted: None,
            note: Some(note.into()),
        }
    }

    fn noted(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }

    fn perturbative(est: PerturbativeEstimate) -> Self {
        Self {
            value: Some(est.value),
            applicable: true,
            raw: Some(est.raw),
            clamped: Some(est.clamped),
            trusted: Some(est.trusted),
            note: None,
        }
    }
}

/// Truncation bookkeeping of the numeric evaluations behind a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub policy: TruncationPolicy,
    pub trace_deficit: f64,
    pub amplitude_deficit: f64,
    pub largest_block: usize,
}

impl TruncationSummary {
    fn absorb(&mut self, r: &NegativityReport) {
        self.trace_deficit = self.trace_deficit.max(r.trace_deficit);
        self.amplitude_deficit = self.amplitude_deficit.max(r.amplitude_deficit);
        self.largest_block = self.largest_block.max(r.largest_block);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub channel: Channel,
    pub c1: f64,
    pub c2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<usize>,
    pub probability: f64,
    pub entanglement: BTreeMap<Method, MethodValue>,
    pub truncation: TruncationSummary,
    #[serde(skip)]
    pub post_state: PostState,
}

impl MeasurementRecord {
    pub fn evaluate(
        coop: &Cooperativities,
        measurement: Measurement,
        methods: &[Method],
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        let channel = measurement.channel();
        let zeta = occupations(coop).zeta;
        let mut trunc = TruncationSummary {
            policy: *policy,
            trace_deficit: 0.0,
            amplitude_deficit: 0.0,
            largest_block: 0,
        };
        let (probability, post_state, mu, outcome) = match measurement {
            Measurement::Count { mu, q } if mu.is_perfect() => {
                let post = perfect_post_state(coop, q, policy)?;
                (
                    post.probability,
                    PostState::Pure(post.state),
                    Some(1.0),
                    Some(q),
                )
            }
            Measurement::Count { mu, q } => {
                let post = imperfect_post_state(coop, mu, q, policy)?;
                (
                    post.probability,
                    PostState::Mixture(post.state),
                    Some(mu.mu()),
                    Some(q),
                )
            }
            Measurement::Off => {
                let post = perfect_post_state(coop, 0, policy)?;
                (
                    off_probability(coop),
                    PostState::Pure(post.state),
                    None,
                    None,
                )
            }
            Measurement::On => {
                let post = on_post_state(coop, policy)?;
                (post.probability, PostState::Mixture(post.state), None, None)
            }
        };

        let mut entanglement = BTreeMap::new();
        for &method in methods {
            let v = match (method, measurement) {
                (Method::Pre, _) => MethodValue::plain(pre_measurement_entanglement(coop)?, true)
                    .noted("before measurement"),
                (Method::Exact, Measurement::Count { mu, q }) => {
                    let v = MethodValue::plain(perfect_entanglement(coop, q), mu.is_perfect());
                    if mu.is_perfect() {
                        v
                    } else {
                        v.noted("perfect-count reference")
                    }
                }
                (Method::Exact | Method::Off, Measurement::Off) => {
                    MethodValue::plain(off_entanglement(coop), true)
                }
                (Method::Eigensolve, _) => {
                    let report = match &post_state {
                        PostState::Pure(st) => {
                            log_negativity(&TwoModeLadderMixture::pure(st.clone()), policy)?
                        }
                        PostState::Mixture(m) => log_negativity(m, policy)?,
                    };
                    trunc.absorb(&report);
                    MethodValue::plain(report.value, true)
                }
                (Method::Gaussian, Measurement::Count { mu, q }) => {
                    gaussian_value(coop, zeta, q, mu.is_perfect())?
                }
                (Method::Gaussian, Measurement::Off) => gaussian_value(coop, zeta, 0, true)?,
                (Method::Gaussian, Measurement::On) => MethodValue::plain(
                    on_entanglement(coop, OnMethod::AverageGaussian, policy)?,
                    false,
                )
                .noted("average over k >= 1 of the Gaussian approximation"),
                (Method::Pert1, Measurement::Count { mu, q }) => {
                    MethodValue::perturbative(first_order_entanglement(coop, mu, q)?)
                }
                (Method::Pert2, Measurement::Count { mu, q }) => {
                    if zeta == 0.0 && !mu.is_perfect() {
                        MethodValue::missing("second order undefined without squeezing")
                    } else {
                        MethodValue::perturbative(second_order_entanglement(
                            coop,
                            mu,
                            q,
                            OmegaMode::Direct,
                            policy,
                        )?)
                    }
                }
                (Method::OnoffNumeric, Measurement::On) => {
                    let PostState::Mixture(m) = &post_state else {
                        unreachable!()
                    };
                    let report = log_negativity(m, policy)?;
                    trunc.absorb(&report);
                    MethodValue::plain(report.value, true)
                }
                (Method::OnoffNumeric, Measurement::Off) => {
                    MethodValue::plain(off_entanglement(coop), true)
                }
                (Method::OnoffAverage, Measurement::On) => {
                    MethodValue::plain(on_entanglement(coop, OnMethod::Average, policy)?, true)
                }
                (m, _) => {
                    MethodValue::missing(format!("{m} does not apply to the {channel:?} channel"))
                }
            };
            entanglement.insert(method, v);
        }

        Ok(Self {
            channel,
            c1: coop.c1(),
            c2: coop.c2(),
            mu,
            outcome,
            probability,
            entanglement,
            truncation: trunc,
            post_state,
        })
    }
}

fn gaussian_value(
    coop: &Cooperativities,
    zeta: f64,
    q: usize,
    applicable: bool,
) -> Result<MethodValue> {
    if zeta == 0.0 {
        return Ok(MethodValue::missing(
            "Gaussian approximation undefined without squeezing",
        ));
    }
    let v = perfect_entanglement_gaussian(coop, q)?;
    Ok(MethodValue {
        raw: Some(crate::channels::gaussian_raw(zeta, q)),
        ..MethodValue::plain(v, applicable).noted("large-q approximation")
    })
}
