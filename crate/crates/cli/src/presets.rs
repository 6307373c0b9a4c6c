//! Figure presets and the dataset manifest.

use entconc_core::{Method, TruncationPolicy};
use serde::Serialize;

use crate::sweep::{Axis, AxisRange, SweepConfig, BASE_COLUMNS};

pub const SCHEMA_VERSION: &str = "entconc-csv/1";

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub column: String,
    pub label: String,
}

impl Curve {
    fn new(column: &str, label: &str) -> Self {
        Self {
            column: column.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub figure: u8,
    pub description: &'static str,
    pub config: SweepConfig,
    /// Columns the renderer draws, in legend order.
    pub curves: Vec<Curve>,
}

fn config(
    c1: f64,
    c2: Option<f64>,
    q: usize,
    mu: Vec<f64>,
    axis: Axis,
    range: (f64, f64, f64),
    methods: &[Method],
) -> SweepConfig {
    SweepConfig {
        c1: Some(c1),
        c2,
        q,
        mu,
        axis,
        range: AxisRange {
            start: range.0,
            stop: range.1,
            step: range.2,
        },
        methods: methods.to_vec(),
        policy: TruncationPolicy::default(),
    }
}

pub fn preset(name: &str) -> Option<Preset> {
    use Method::*;
    let p = match name {
        "fig2" => Preset {
            name: "fig2",
            figure: 2,
            description: "entanglement versus detected phonon number q",
            config: config(
                10.0,
                Some(2.0),
                0,
                vec![0.6, 0.9],
                Axis::Q,
                (0.0, 30.0, 1.0),
                &[Pre, Exact, Gaussian, Eigensolve],
            ),
            curves: vec![
                Curve::new("e_pre", "before measurement"),
                Curve::new("e_perfect", "perfect detection"),
                Curve::new("e_gauss", "Gaussian approximation"),
                Curve::new("e_imperfect_numeric_mu0.6", "mu = 0.6"),
                Curve::new("e_imperfect_numeric_mu0.9", "mu = 0.9"),
            ],
        },
        "fig3" => Preset {
            name: "fig3",
            figure: 3,
            description: "entanglement versus detector efficiency mu",
            config: config(
                10.0,
                Some(5.0),
                2,
                vec![],
                Axis::Mu,
                (0.5, 1.0, 0.01),
                &[Pre, Exact, Eigensolve, Pert1, Pert2, OnoffNumeric],
            ),
            curves: vec![
                Curve::new("e_perfect", "perfect detection"),
                Curve::new("e_pre", "before measurement"),
                Curve::new("e_on_numeric", "on"),
                Curve::new("e_off", "off"),
                Curve::new("e_imperfect_numeric", "numerical"),
                Curve::new("e_pert1", "first order"),
                Curve::new("e_pert2", "second order"),
            ],
        },
        "fig4" => {
            let mus = [0.9, 0.99, 0.999];
            let mut curves = Vec::new();
            for (col, label) in [
                ("e_imperfect_numeric", "numerical"),
                ("e_pert1", "first order"),
                ("e_pert2", "second order"),
            ] {
                for m in mus {
                    curves.push(Curve::new(
                        &format!("{col}_mu{m}"),
                        &format!("{label}, mu = {m}"),
                    ));
                }
            }
            Preset {
                name: "fig4",
                figure: 4,
                description: "entanglement versus q at several detector efficiencies",
                config: config(
                    10.0,
                    Some(3.0),
                    0,
                    mus.to_vec(),
                    Axis::Q,
                    (0.0, 30.0, 1.0),
                    &[Eigensolve, Pert1, Pert2],
                ),
                curves,
            }
        }
        "fig5" => Preset {
            name: "fig5",
            figure: 5,
            description: "on/off detection versus C2",
            config: config(
                100.0,
                None,
                0,
                vec![1.0],
                Axis::C2,
                (1.0, 20.0, 1.0),
                &[Pre, OnoffNumeric, OnoffAverage],
            ),
            curves: vec![
                Curve::new("e_on_numeric", "on, numerical"),
                Curve::new("e_on_average", "on, average"),
                Curve::new("e_pre", "before measurement"),
            ],
        },
        _ => return None,
    };
    Some(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: &'static str,
    pub columns: Vec<&'static str>,
    pub column_suffix: &'static str,
    pub presets: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: &'static str,
    pub figure: u8,
    pub description: &'static str,
    pub parameters: Parameters,
    pub axis: Axis,
    pub range: AxisRange,
    pub methods: Vec<String>,
    pub columns: Vec<String>,
    pub curves: Vec<Curve>,
}

/// Fixed parameters of a preset; the swept one is absent.
#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<f64>,
}

pub fn manifest() -> Manifest {
    let presets = PRESET_NAMES
        .iter()
        .map(|n| {
            let p = preset(n).expect("known preset");
            let c = &p.config;
            let counts = c.methods.iter().any(|m| {
                matches!(
                    m,
                    Method::Eigensolve
                        | Method::Pert1
                        | Method::Pert2
                        | Method::Exact
                        | Method::Gaussian
                )
            });
            ManifestEntry {
                name: p.name,
                figure: p.figure,
                description: p.description,
                parameters: Parameters {
                    c1: (c.axis != Axis::C1).then_some(c.c1).flatten(),
                    c2: (c.axis != Axis::C2).then_some(c.c2).flatten(),
                    q: (c.axis != Axis::Q && counts).then_some(c.q),
                    mu: if counts { c.mu.clone() } else { vec![] },
                },
                axis: c.axis,
                range: c.range,
                methods: c.methods.iter().map(|m| m.to_string()).collect(),
                columns: c.columns().into_iter().map(|c| c.name).collect(),
                curves: p.curves,
            }
        })
        .collect();
    Manifest {
        schema_version: SCHEMA_VERSION,
        columns: BASE_COLUMNS.to_vec(),
        column_suffix: "_mu<efficiency> when several efficiencies share one table",
        presets,
    }
}
