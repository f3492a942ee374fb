//! Assemblages `{σ_{b|y}}` of subnormalized conditional states on the
//! trusted qubit.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::qubit::HermitianOp;
use crate::shape::{format_digits, parse_digits, ScenarioShape};
use crate::tol::Tolerances;

/// Members `σ_{b|y}` stored at flat offset `y * output_strings + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    shape: ScenarioShape,
    members: Vec<HermitianOp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FindingKind {
    NonFinite { b: String, y: String },
    Positivity { b: String, y: String, min_eigenvalue: f64 },
    Normalization { y: String, total_trace: f64 },
    NoSignaling { y: String, deviation: f64 },
}

/// One failed invariant, with the offending index and its magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    #[serde(flatten)]
    pub kind: FindingKind,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.kind {
            FindingKind::NonFinite { b, y } => write!(f, "{tag}: σ(b={b}|y={y}) has non-finite entries"),
            FindingKind::Positivity { b, y, min_eigenvalue } => write!(
                f,
                "{tag}: σ(b={b}|y={y}) is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})"
            ),
            FindingKind::Normalization { y, total_trace } => {
                write!(f, "{tag}: traces for y={y} sum to {total_trace:.12} instead of 1")
            }
            FindingKind::NoSignaling { y, deviation } => write!(
                f,
                "{tag}: reduced state for y={y} differs from y=0 by {deviation:.3e} (signaling)"
            ),
        }
    }
}

/// True when no finding is an error.
pub fn is_valid(findings: &[Finding]) -> bool {
    findings.iter().all(|f| f.severity != Severity::Error)
}

impl Assemblage {
    pub fn new(shape: ScenarioShape, members: Vec<HermitianOp>) -> Result<Self> {
        let expected = shape.output_strings() * shape.input_strings();
        if members.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} members supplied, shape requires {expected}",
                members.len()
            )));
        }
        Ok(Self { shape, members })
    }

    /// Builds an assemblage from a function of `(b, y)` flat indices.
    pub fn from_fn(shape: ScenarioShape, mut f: impl FnMut(usize, usize) -> HermitianOp) -> Self {
        let nb = shape.output_strings();
        let members = (0..shape.input_strings())
            .flat_map(|y| (0..nb).map(move |b| (b, y)))
            .map(|(b, y)| f(b, y))
            .collect();
        Self { shape, members }
    }

    pub fn shape(&self) -> &ScenarioShape {
        &self.shape
    }

    /// `σ_{b|y}` by flat indices; panics when out of range.
    #[inline]
    pub fn member(&self, b: usize, y: usize) -> &HermitianOp {
        &self.members[y * self.shape.output_strings() + b]
    }

    pub fn try_member(&self, b: usize, y: usize) -> Result<&HermitianOp> {
        let (nb, ny) = (self.shape.output_strings(), self.shape.input_strings());
        if b >= nb || y >= ny {
            return Err(Error::IndexOutOfRange(format!("(b={b}, y={y}) outside {nb}×{ny}")));
        }
        Ok(self.member(b, y))
    }

    /// Iterates `(b, y, σ_{b|y})`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &HermitianOp)> + '_ {
        let nb = self.shape.output_strings();
        self.members.iter().enumerate().map(move |(i, op)| (i % nb, i / nb, op))
    }

    /// `P(b|y) = Tr σ_{b|y}`.
    pub fn conditional_probability(&self, b: usize, y: usize) -> Result<f64> {
        Ok(self.try_member(b, y)?.trace())
    }

    /// `Σ_b σ_{b|y}`.
    pub fn reduced_state(&self, y: usize) -> HermitianOp {
        (0..self.shape.output_strings()).map(|b| *self.member(b, y)).sum()
    }

    /// Every member multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            members: self.members.iter().map(|&m| m * c).collect(),
        }
    }

    /// Member-wise `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("mixing assemblages of different shapes".into()));
        }
        Ok(Self {
            shape: self.shape.clone(),
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| a * w + b * (1.0 - w))
                .collect(),
        })
    }

    /// Largest entrywise member difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    fn b_label(&self, b: usize) -> String {
        format_digits(&self.shape.decode_outputs(b), self.shape.outputs_per_party())
    }

    fn y_label(&self, y: usize) -> String {
        format_digits(&self.shape.decode_inputs(y), self.shape.inputs_per_party())
    }

    /// Checks positivity, normalization and no-signaling with default tolerances.
    pub fn validate(&self, strict_no_signaling: bool) -> Vec<Finding> {
        self.validate_with(strict_no_signaling, &Tolerances::default())
    }

    /// An empty result means every invariant holds. No-signaling failures are
    /// warnings unless `strict_no_signaling` is set.
    pub fn validate_with(&self, strict_no_signaling: bool, tol: &Tolerances) -> Vec<Finding> {
        let mut out = Vec::new();
        for (b, y, op) in self.iter() {
            if !op.is_finite() {
                out.push(Finding {
                    severity: Severity::Error,
                    kind: FindingKind::NonFinite {
                        b: self.b_label(b),
                        y: self.y_label(y),
                    },
                });
                continue;
            }
            let min_eigenvalue = op.min_eigenvalue();
            if min_eigenvalue < -tol.psd {
                out.push(Finding {
                    severity: Severity::Error,
                    kind: FindingKind::Positivity {
                        b: self.b_label(b),
                        y: self.y_label(y),
                        min_eigenvalue,
                    },
                });
            }
        }
        for y in 0..self.shape.input_strings() {
            let total_trace = self.reduced_state(y).trace();
            if !((total_trace - 1.0).abs() <= tol.nrm) {
                out.push(Finding {
                    severity: Severity::Error,
                    kind: FindingKind::Normalization {
                        y: self.y_label(y),
                        total_trace,
                    },
                });
            }
        }
        let reference = self.reduced_state(0);
        let severity = if strict_no_signaling {
            Severity::Error
        } else {
            Severity::Warning
        };
        for y in 1..self.shape.input_strings() {
            let deviation = self.reduced_state(y).max_abs_diff(&reference);
            if !(deviation <= tol.ns) {
                out.push(Finding {
                    severity,
                    kind: FindingKind::NoSignaling {
                        y: self.y_label(y),
                        deviation,
                    },
                });
            }
        }
        out
    }

    /// Canonical JSON document: `shape` followed by `members` keyed
    /// `"b=<digits>|y=<digits>"` in flat index order (y outer, b inner).
    pub fn to_json_value(&self) -> Value {
        let mut members = Map::new();
        for (b, y, op) in self.iter() {
            let key = format!("b={}|y={}", self.b_label(b), self.y_label(y));
            members.insert(key, serde_json::to_value(op).expect("operator serializes"));
        }
        let mut doc = Map::new();
        doc.insert("shape".into(), serde_json::to_value(&self.shape).expect("shape serializes"));
        doc.insert("members".into(), Value::Object(members));
        Value::Object(doc)
    }

    /// Byte-stable pretty serialization with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            shape: ScenarioShape,
            members: Map<String, Value>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let shape = doc.shape;
        let (nb, ny) = (shape.output_strings(), shape.input_strings());
        let mut slots: Vec<Option<HermitianOp>> = vec![None; nb * ny];
        for (key, value) in doc.members {
            let (b, y) = parse_member_key(&key, &shape)?;
            let op: HermitianOp = serde_json::from_value(value)
                .map_err(|e| Error::Format(format!("member `{key}`: {e}")))?;
            if slots[y * nb + b].replace(op).is_some() {
                return Err(Error::Format(format!("duplicate member `{key}`")));
            }
        }
        let members = slots
            .into_iter()
            .enumerate()
            .map(|(i, op)| {
                op.ok_or_else(|| {
                    let (b, y) = (i % nb, i / nb);
                    Error::ShapeMismatch(format!(
                        "missing member b={}|y={}",
                        format_digits(&shape.decode_outputs(b), shape.outputs_per_party()),
                        format_digits(&shape.decode_inputs(y), shape.inputs_per_party())
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape, members)
    }
}

fn parse_member_key(key: &str, shape: &ScenarioShape) -> Result<(usize, usize)> {
    let bad = || Error::Format(format!("member key `{key}` is not of the form b=<digits>|y=<digits>"));
    let (b_part, y_part) = key.split_once('|').ok_or_else(bad)?;
    let b_digits = b_part.strip_prefix("b=").ok_or_else(bad)?;
    let y_digits = y_part.strip_prefix("y=").ok_or_else(bad)?;
    let b = shape
        .encode_outputs(&parse_digits(b_digits, shape.outputs_per_party())?)
        .map_err(|e| Error::ShapeMismatch(format!("member `{key}`: {e}")))?;
    let y = shape
        .encode_inputs(&parse_digits(y_digits, shape.inputs_per_party())?)
        .map_err(|e| Error::ShapeMismatch(format!("member `{key}`: {e}")))?;
    Ok((b, y))
}
