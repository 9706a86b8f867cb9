//! JSON file formats for systems and reduction reports.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::exactalg::{RMatrix, Rational};
use crate::qpmodel::{QpSystem, Ranks};
use crate::reductions::{FirstIntegral, Quadrature, ReductionReport};
use crate::transforms::{projection_for, ProjectionOperator, TraceStep, TransformStep};

/// A system on disk. Rationals are strings such as `"3"`, `"-1/2"`.
///
/// When `shift` is present the stored system is in the translated
/// variables `x = u + shift`, where `u` are the user's coordinates; initial
/// points given on the command line are in `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub variables: Vec<String>,
    pub lambda: Vec<Rational>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Rational>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<Rational>>,
}

impl SystemFile {
    pub fn from_system(sys: &QpSystem, shift: Option<Vec<Rational>>) -> Self {
        SystemFile {
            variables: sys.var_names.clone(),
            lambda: sys.lambda.clone(),
            a: sys.a.row_vecs(),
            b: sys.b.row_vecs(),
            shift,
        }
    }

    /// Checks the grids against `variables` and builds the system.
    pub fn to_system(&self) -> Result<QpSystem, String> {
        if self.variables.is_empty() {
            return Err("variables: at least one variable is required".into());
        }
        self.build()
    }

    /// Like [`SystemFile::to_system`] but also accepts a system whose
    /// variables have all been decoupled, as a report output may be.
    fn build(&self) -> Result<QpSystem, String> {
        let n = self.variables.len();
        let m = self.b.len();
        for (i, v) in self.variables.iter().enumerate() {
            if v.is_empty() {
                return Err(format!("variables[{i}]: empty name"));
            }
            if self.variables[..i].contains(v) {
                return Err(format!("variables[{i}]: duplicate name {v:?}"));
            }
        }
        if self.lambda.len() != n {
            return Err(format!("lambda: expected {n} entries, got {}", self.lambda.len()));
        }
        if self.a.len() != n {
            return Err(format!("A: expected {n} rows, got {}", self.a.len()));
        }
        if let Some(i) = self.a.iter().position(|r| r.len() != m) {
            return Err(format!(
                "A[{i}]: expected {m} entries (one per row of B), got {}",
                self.a[i].len()
            ));
        }
        if let Some(j) = self.b.iter().position(|r| r.len() != n) {
            return Err(format!("B[{j}]: expected {n} entries, got {}", self.b[j].len()));
        }
        if let Some(s) = &self.shift {
            if s.len() != n {
                return Err(format!("shift: expected {n} entries, got {}", s.len()));
            }
        }
        let sys = QpSystem {
            var_names: self.variables.clone(),
            lambda: self.lambda.clone(),
            a: RMatrix::try_from_rows(self.a.clone(), Some(m)).expect("rows checked"),
            b: RMatrix::try_from_rows(self.b.clone(), Some(n)).expect("rows checked"),
        };
        sys.check_shapes().map_err(|e| e.to_string())?;
        Ok(sys)
    }

    pub fn shift_f64(&self) -> Option<Vec<f64>> {
        self.shift.as_ref().map(|s| s.iter().map(|v| v.to_f64()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralEntry {
    pub label: String,
    pub variables: Vec<String>,
    pub exponents: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Rational>,
}

impl From<&FirstIntegral> for IntegralEntry {
    fn from(fi: &FirstIntegral) -> Self {
        IntegralEntry {
            label: fi.monomial(),
            variables: fi.variables.clone(),
            exponents: fi.exponents.clone(),
            constant: fi.constant.clone(),
        }
    }
}

impl From<&IntegralEntry> for FirstIntegral {
    fn from(e: &IntegralEntry) -> Self {
        FirstIntegral {
            variables: e.variables.clone(),
            exponents: e.exponents.clone(),
            constant: e.constant.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankSummary {
    pub before: Ranks,
    pub after: Ranks,
}

/// A reduction report on disk. Applying `trace` to the canonical form of
/// `input` reproduces `output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub pipeline: String,
    pub input: SystemFile,
    pub output: SystemFile,
    pub trace: Vec<TraceStep>,
    pub quadratures: Vec<Quadrature>,
    pub first_integrals: Vec<IntegralEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionOperator>,
    pub ranks: RankSummary,
}

impl ReportFile {
    pub fn from_report(pipeline: &str, rep: &ReductionReport, shift: Option<Vec<Rational>>) -> Self {
        ReportFile {
            pipeline: pipeline.to_string(),
            input: SystemFile::from_system(&rep.input, shift),
            output: SystemFile::from_system(&rep.output, None),
            trace: rep.trace.clone(),
            quadratures: rep.quadratures.clone(),
            first_integrals: rep.first_integrals.iter().map(IntegralEntry::from).collect(),
            projection: rep.projection.clone(),
            ranks: RankSummary {
                before: rep.input.ranks(),
                after: rep.output.ranks(),
            },
        }
    }

    /// Rebuilds the report and checks that it replays.
    pub fn to_report(&self) -> Result<ReductionReport, CliError> {
        let input = self
            .input
            .to_system()
            .map_err(|e| CliError::Replay(format!("input.{e}")))?;
        let output = self
            .output
            .build()
            .map_err(|e| CliError::Replay(format!("output.{e}")))?;
        let rep = ReductionReport {
            input,
            output,
            trace: self.trace.clone(),
            quadratures: self.quadratures.clone(),
            first_integrals: self.first_integrals.iter().map(FirstIntegral::from).collect(),
            projection: self.projection.clone(),
        };
        let replayed = rep
            .replay()
            .map_err(|e| CliError::Replay(format!("trace does not apply to the input: {e}")))?;
        if replayed != rep.output {
            return Err(CliError::Replay(
                "replaying the trace does not reproduce the output".into(),
            ));
        }
        if let Some(p) = &rep.projection {
            let last_c = rep.trace.iter().rev().find_map(|s| match &s.op {
                TransformStep::Quasimonomial { c, .. } => Some(c),
                _ => None,
            });
            let expected = last_c.and_then(|c| projection_for(c, p.retained, c.rows()).ok());
            if expected.as_ref() != Some(p) {
                return Err(CliError::Replay(
                    "projection does not match the final transformation".into(),
                ));
            }
        }
        let ranks = RankSummary {
            before: rep.input.ranks(),
            after: rep.output.ranks(),
        };
        if ranks != self.ranks {
            return Err(CliError::Replay("rank summary does not match the systems".into()));
        }
        Ok(rep)
    }
}

/// Reads and strictly parses a JSON file. Errors name the file, the field
/// path and the line.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            inner.to_string()
        } else {
            format!("field `{path}`: {inner}")
        }
    })?;
    de.end().map_err(|e| e.to_string())?;
    Ok(value)
}

/// Loads a system file: the system and its optional shift.
pub fn load_system(path: &Path) -> Result<(QpSystem, SystemFile), CliError> {
    let file: SystemFile = read_json(path)?;
    let sys = file
        .to_system()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok((sys, file))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
