//! Sweep configuration, column layout and row evaluation.

use std::fmt;
use std::str::FromStr;

use entconc_core::{
    first_order_entanglement, imperfect_entanglement_numeric, imperfect_outcome_prob,
    log_negativity, occupations, off_entanglement, on_entanglement, on_post_state, on_probability,
    perfect_entanglement, perfect_entanglement_gaussian, phonon_prob, pre_measurement_entanglement,
    second_order_entanglement, Cooperativities, DetectorEfficiency, Error, Method, OmegaMode,
    OnMethod, TruncationPolicy,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Q,
    Mu,
    C1,
    C2,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Q => "q",
            Axis::Mu => "mu",
            Axis::C1 => "c1",
            Axis::C2 => "c2",
        }
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "q" => Ok(Axis::Q),
            "mu" => Ok(Axis::Mu),
            "c1" => Ok(Axis::C1),
            "c2" => Ok(Axis::C2),
            _ => Err(format!("unknown axis '{s}' (expected q, mu, c1 or c2)")),
        }
    }
}

/// Inclusive range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for AxisRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(format!("range '{s}' must look like start:stop[:step]"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number '{t}' in range '{s}'"))
        };
        Ok(AxisRange {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: if parts.len() == 3 {
                num(parts[2])?
            } else {
                1.0
            },
        })
    }
}

impl fmt::Display for AxisRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Values of the swept axis, in order. Float axes are generated as
/// `start + i step` and rounded to 12 decimals so that e.g. 0.5:1:0.01 ends
/// exactly at 1.
pub fn axis_values(axis: Axis, range: &AxisRange) -> Result<Vec<f64>, CliError> {
    let AxisRange { start, stop, step } = *range;
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(CliError::Invalid(format!("range {range} is not finite")));
    }
    if step <= 0.0 {
        return Err(CliError::Invalid(format!(
            "range step must be > 0, got {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Invalid(format!(
            "range stop {stop} is below start {start}"
        )));
    }
    if axis == Axis::Q {
        let int = |v: f64| v >= 0.0 && v.fract() == 0.0;
        if !(int(start) && int(stop) && int(step)) {
            return Err(CliError::Invalid(format!(
                "q range {range} must use nonnegative integers"
            )));
        }
        let (a, b, s) = (start as usize, stop as usize, step as usize);
        return Ok((a..=b).step_by(s).map(|q| q as f64).collect());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(CliError::Invalid(format!(
            "range {range} has too many points"
        )));
    }
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Fixed values; the swept one is ignored.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub q: usize,
    pub mu: Vec<f64>,
    pub axis: Axis,
    pub range: AxisRange,
    pub methods: Vec<Method>,
    #[serde(skip)]
    pub policy: TruncationPolicy,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Invalid("no methods requested".into()));
        }
        if self.axis != Axis::C1 && self.c1.is_none() {
            return Err(CliError::Invalid(
                "--c1 is required unless c1 is swept".into(),
            ));
        }
        if self.axis != Axis::C2 && self.c2.is_none() {
            return Err(CliError::Invalid(
                "--c2 is required unless c2 is swept".into(),
            ));
        }
        if self.axis == Axis::Mu && self.mu.len() > 1 {
            return Err(CliError::Invalid(
                "--mu takes no list when mu is swept".into(),
            ));
        }
        if self.axis != Axis::Mu && self.mu.is_empty() {
            return Err(CliError::Invalid("--mu needs at least one value".into()));
        }
        for &m in &self.mu {
            DetectorEfficiency::new(m)?;
        }
        self.policy.validate()?;
        axis_values(self.axis, &self.range)?;
        Ok(())
    }

    fn has_count_methods(&self) -> bool {
        self.methods
            .iter()
            .any(|m| matches!(m, Method::Eigensolve | Method::Pert1 | Method::Pert2))
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    /// Ordered column layout. Efficiency-dependent columns get a `_mu<value>`
    /// suffix when more than one efficiency is requested.
    pub fn columns(&self) -> Vec<Column> {
        let per_mu: Vec<Option<f64>> = if self.axis == Axis::Mu || self.mu.len() == 1 {
            vec![None]
        } else {
            self.mu.iter().copied().map(Some).collect()
        };
        let mut cols = vec![Column::new(ColumnKind::Axis, None)];
        let mut push = |kind: ColumnKind, wanted: bool, dependent: bool| {
            if !wanted {
                return;
            }
            if dependent {
                for &m in &per_mu {
                    cols.push(Column::new(kind, m));
                }
            } else {
                cols.push(Column::new(kind, None));
            }
        };
        let on = self.wants(Method::OnoffNumeric);
        push(ColumnKind::Pre, self.wants(Method::Pre), false);
        push(ColumnKind::Perfect, self.wants(Method::Exact), false);
        push(ColumnKind::Gauss, self.wants(Method::Gaussian), false);
        push(
            ColumnKind::ImperfectNumeric,
            self.wants(Method::Eigensolve),
            true,
        );
        push(ColumnKind::Pert1, self.wants(Method::Pert1), true);
        push(ColumnKind::Pert2, self.wants(Method::Pert2), true);
        push(ColumnKind::Off, self.wants(Method::Off) || on, false);
        push(ColumnKind::OnNumeric, on, false);
        push(
            ColumnKind::OnAverage,
            self.wants(Method::OnoffAverage),
            false,
        );
        match self.probability_kind() {
            Some(ProbKind::Count) => push(ColumnKind::Prob, true, true),
            Some(_) => push(ColumnKind::Prob, true, false),
            None => {}
        }
        cols.push(Column::new(ColumnKind::TruncDeficit, None));
        cols
    }

    fn probability_kind(&self) -> Option<ProbKind> {
        if self.has_count_methods() {
            Some(ProbKind::Count)
        } else if self.wants(Method::Exact) || self.wants(Method::Gaussian) {
            Some(ProbKind::Perfect)
        } else if self.wants(Method::OnoffNumeric) || self.wants(Method::OnoffAverage) {
            Some(ProbKind::On)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProbKind {
    Count,
    Perfect,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Axis,
    Pre,
    Perfect,
    Gauss,
    ImperfectNumeric,
    Pert1,
    Pert2,
    Off,
    OnNumeric,
    OnAverage,
    Prob,
    TruncDeficit,
}

impl ColumnKind {
    pub fn base_name(self) -> &'static str {
        match self {
            ColumnKind::Axis => "axis",
            ColumnKind::Pre => "e_pre",
            ColumnKind::Perfect => "e_perfect",
            ColumnKind::Gauss => "e_gauss",
            ColumnKind::ImperfectNumeric => "e_imperfect_numeric",
            ColumnKind::Pert1 => "e_pert1",
            ColumnKind::Pert2 => "e_pert2",
            ColumnKind::Off => "e_off",
            ColumnKind::OnNumeric => "e_on_numeric",
            ColumnKind::OnAverage => "e_on_average",
            ColumnKind::Prob => "prob",
            ColumnKind::TruncDeficit => "trunc_deficit",
        }
    }
}

/// All base column names in output order.
pub const BASE_COLUMNS: [&str; 12] = [
    "axis",
    "e_pre",
    "e_perfect",
    "e_gauss",
    "e_imperfect_numeric",
    "e_pert1",
    "e_pert2",
    "e_off",
    "e_on_numeric",
    "e_on_average",
    "prob",
    "trunc_deficit",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    #[serde(skip)]
    pub kind: ColumnKind,
    #[serde(skip)]
    pub mu: Option<f64>,
}

impl Column {
    fn new(kind: ColumnKind, mu: Option<f64>) -> Self {
        let name = match mu {
            Some(m) => format!("{}_mu{m}", kind.base_name()),
            None => kind.base_name().to_string(),
        };
        Self { name, kind, mu }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: Axis,
    pub columns: Vec<Column>,
    /// One row per axis value; `None` marks a value that is undefined at
    /// that point (for instance the Gaussian form without squeezing).
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable, CliError> {
    cfg.validate()?;
    let columns = cfg.columns();
    let xs = axis_values(cfg.axis, &cfg.range)?;
    let rows = xs
        .par_iter()
        .map(|&x| {
            evaluate_row(cfg, &columns, x)
                .map_err(|e| e.context(format!("at {} = {x}", cfg.axis.name())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        axis: cfg.axis,
        columns,
        rows,
    })
}

/// Undefined-at-this-point errors become empty cells; everything else aborts.
fn optional<T>(r: entconc_core::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn evaluate_row(
    cfg: &SweepConfig,
    columns: &[Column],
    x: f64,
) -> Result<Vec<Option<f64>>, CliError> {
    let c1 = if cfg.axis == Axis::C1 {
        x
    } else {
        cfg.c1.unwrap_or_default()
    };
    let c2 = if cfg.axis == Axis::C2 {
        x
    } else {
        cfg.c2.unwrap_or_default()
    };
    let q = if cfg.axis == Axis::Q {
        x as usize
    } else {
        cfg.q
    };
    let default_mu = if cfg.axis == Axis::Mu { x } else { cfg.mu[0] };
    let coop = Cooperativities::new(c1, c2)?;
    let occ = occupations(&coop);
    let policy = &cfg.policy;
    let mu_of = |col: &Column| DetectorEfficiency::new(col.mu.unwrap_or(default_mu));

    let mut deficit: f64 = 0.0;
    let mut on_numeric = None;
    if cfg.wants(Method::OnoffNumeric) {
        if let Some(post) = optional(on_post_state(&coop, policy))? {
            let report = log_negativity(&post.state, policy)?;
            deficit = deficit.max(report.trace_deficit);
            on_numeric = Some(report.value.nats());
        }
    }

    let mut row = Vec::with_capacity(columns.len());
    for col in columns {
        let v = match col.kind {
            ColumnKind::Axis => Some(x),
            ColumnKind::Pre => Some(pre_measurement_entanglement(&coop)?.nats()),
            ColumnKind::Perfect => {
                policy.check_outcome(q)?;
                Some(perfect_entanglement(&coop, q).nats())
            }
            ColumnKind::Gauss => {
                optional(perfect_entanglement_gaussian(&coop, q))?.map(|v| v.nats())
            }
            ColumnKind::ImperfectNumeric => {
                let report = imperfect_entanglement_numeric(&coop, mu_of(col)?, q, policy)?;
                deficit = deficit.max(report.trace_deficit);
                Some(report.value.nats())
            }
            ColumnKind::Pert1 => Some(
                first_order_entanglement(&coop, mu_of(col)?, q)?
                    .value
                    .nats(),
            ),
            ColumnKind::Pert2 => optional(second_order_entanglement(
                &coop,
                mu_of(col)?,
                q,
                OmegaMode::Direct,
                policy,
            ))?
            .map(|e| e.value.nats()),
            ColumnKind::Off => Some(off_entanglement(&coop).nats()),
            ColumnKind::OnNumeric => on_numeric,
            ColumnKind::OnAverage => {
                optional(on_entanglement(&coop, OnMethod::Average, policy))?.map(|v| v.nats())
            }
            ColumnKind::Prob => Some(match cfg.probability_kind() {
                Some(ProbKind::Count) => imperfect_outcome_prob(&occ, mu_of(col)?, q),
                Some(ProbKind::Perfect) => phonon_prob(&occ, q),
                _ => on_probability(&coop),
            }),
            // filled below, once every numeric evaluation has reported
            ColumnKind::TruncDeficit => None,
        };
        row.push(v);
    }
    if let Some(last) = row.last_mut() {
        *last = Some(deficit);
    }
    Ok(row)
}
