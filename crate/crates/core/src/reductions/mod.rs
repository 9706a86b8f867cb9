//! Reduction pipelines: standard form, Lotka-Volterra form and unimonomial
//! form. Each pipeline returns a [`ReductionReport`] whose trace replays
//! exactly from the input.

mod lotka_volterra;
mod standard;
mod unimonomial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::{inverse, rank, RMatrix, Rational};
use crate::qpmodel::QpSystem;
use crate::transforms::{Dims, PermuteAxis, ProjectionOperator, TraceStep, TransformStep};

pub use lotka_volterra::{lv_first_integrals, to_lotka_volterra, to_lotka_volterra_prioritized};
pub use standard::{
    first_integrals_from_m, maximize_rank_a, maximize_rank_b, maximize_rank_m, reduce_to_m_ge_n, standardize,
};
pub use unimonomial::{to_unimonomial, to_unimonomial_prioritized, verify_projection_invariance, ProjectionFinding};

/// One term `coefficient * prod y^exponents` of a quadrature integrand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureTerm {
    pub coefficient: Rational,
    pub exponents: Vec<Rational>,
}

/// A split-off variable `w` with `d ln w / dt = lambda + sum_j c_j prod y^e_j`,
/// where `y` ranges over the retained variables `over`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    pub variable: String,
    pub over: Vec<String>,
    pub lambda: Rational,
    pub terms: Vec<QuadratureTerm>,
}

/// A conserved quantity `prod x_i^e_i` over the named variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstIntegral {
    pub variables: Vec<String>,
    pub exponents: Vec<Rational>,
    /// Value of the integral when it is fixed by construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Rational>,
}

impl FirstIntegral {
    /// `prod x_i^e_i` at a positive point.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(e, v)| e.to_f64() * v.ln())
            .sum::<f64>()
            .exp()
    }

    /// Human-readable monomial such as `x1 x2^-1 x3^2`.
    pub fn monomial(&self) -> String {
        let parts: Vec<String> = self
            .variables
            .iter()
            .zip(&self.exponents)
            .filter(|(_, e)| !e.is_zero())
            .map(|(v, e)| if e.is_one() { v.clone() } else { format!("{v}^{e}") })
            .collect();
        parts.join(" ")
    }
}

/// How many auxiliary variables an embedding step may introduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    None,
    Partial(usize),
    Full,
}

impl EmbedMode {
    /// Number of added variables for a standard system with `n` variables
    /// and `m` quasimonomials.
    pub fn added(self, n: usize, m: usize) -> Result<usize> {
        let excess = m.saturating_sub(n);
        match self {
            EmbedMode::None => Ok(0),
            EmbedMode::Full => Ok(excess),
            EmbedMode::Partial(k) if k >= 1 && k < excess => Ok(k),
            EmbedMode::Partial(k) => Err(Error::BadMode(format!("partial={k} needs 1 <= k < m - n = {excess}"))),
        }
    }
}

impl fmt::Display for EmbedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedMode::None => f.write_str("none"),
            EmbedMode::Full => f.write_str("full"),
            EmbedMode::Partial(k) => write!(f, "partial={k}"),
        }
    }
}

impl FromStr for EmbedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(EmbedMode::None),
            "full" => Ok(EmbedMode::Full),
            _ => s
                .strip_prefix("partial=")
                .and_then(|k| k.parse().ok())
                .map(EmbedMode::Partial)
                .ok_or_else(|| Error::BadMode(format!("expected none, full or partial=k, got {s:?}"))),
        }
    }
}

/// Result of a reduction: the input, the output, and everything needed to
/// get from one to the other and back.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub input: QpSystem,
    pub output: QpSystem,
    pub trace: Vec<TraceStep>,
    pub quadratures: Vec<Quadrature>,
    pub first_integrals: Vec<FirstIntegral>,
    pub projection: Option<ProjectionOperator>,
}

impl ReductionReport {
    /// A report with an empty trace. The output is the canonical form of
    /// the input.
    pub fn identity(sys: &QpSystem) -> Self {
        ReductionReport {
            input: sys.clone(),
            output: sys.canonicalize(),
            trace: Vec::new(),
            quadratures: Vec::new(),
            first_integrals: Vec::new(),
            projection: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.trace.is_empty()
    }

    /// Applies `op` to the current output and records it.
    pub(crate) fn push(&mut self, op: TransformStep) -> Result<()> {
        let before = Dims::of(&self.output);
        let next = op.apply(&self.output)?;
        self.trace.push(TraceStep {
            op,
            before,
            after: Dims::of(&next),
        });
        self.output = next;
        Ok(())
    }

    /// Records a permutation unless it is the identity.
    pub(crate) fn push_permutation(&mut self, axis: PermuteAxis, order: Vec<usize>) -> Result<()> {
        if order.iter().enumerate().all(|(i, &j)| i == j) {
            return Ok(());
        }
        self.push(TransformStep::Permute { axis, order })
    }

    /// Appends a report that starts where this one ends.
    pub(crate) fn then(mut self, next: ReductionReport) -> Self {
        debug_assert_eq!(next.input.canonicalize(), self.output);
        self.output = next.output;
        self.trace.extend(next.trace);
        self.quadratures.extend(next.quadratures);
        self.first_integrals.extend(next.first_integrals);
        if next.projection.is_some() {
            self.projection = next.projection;
        }
        self
    }

    /// Every intermediate system, starting with the canonical input.
    pub fn stages(&self) -> Result<Vec<QpSystem>> {
        let mut cur = self.input.canonicalize();
        let mut out = vec![cur.clone()];
        for (i, step) in self.trace.iter().enumerate() {
            if Dims::of(&cur) != step.before {
                return Err(Error::dims(
                    "trace",
                    format!(
                        "step {i} ({}) expects {:?}, found {:?}",
                        step.op.kind(),
                        step.before,
                        Dims::of(&cur)
                    ),
                ));
            }
            cur = step.op.apply(&cur)?;
            if Dims::of(&cur) != step.after {
                return Err(Error::dims(
                    "trace",
                    format!(
                        "step {i} ({}) produces {:?}, recorded {:?}",
                        step.op.kind(),
                        Dims::of(&cur),
                        step.after
                    ),
                ));
            }
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Re-applies the trace to the input.
    pub fn replay(&self) -> Result<QpSystem> {
        Ok(self.stages()?.pop().expect("at least the input stage"))
    }

    /// True when the trace reproduces the recorded output exactly.
    pub fn replays(&self) -> bool {
        self.replay().is_ok_and(|out| out == self.output)
    }
}

/// Matrix `L` with `ln y = L ln x`, where `x` are the input variables and
/// `y` the variables after `trace`. Embedded variables get zero rows.
pub(crate) fn log_map(trace: &[TraceStep], n0: usize) -> Result<RMatrix> {
    let mut l = RMatrix::identity(n0);
    for step in trace {
        l = match &step.op {
            TransformStep::Quasimonomial { c, .. } => inverse(c)?.mul(&l),
            TransformStep::Permute {
                axis: PermuteAxis::Variables,
                order,
            } => l.select_rows(order),
            TransformStep::Decouple { retained, .. } => l.select_rows(&(0..*retained).collect::<Vec<_>>()),
            TransformStep::EmbedConstants { names, .. } | TransformStep::EmbedDecoupled { names, .. } => {
                l.vstack(&RMatrix::zeros(names.len(), n0))
            }
            TransformStep::NewTime { .. }
            | TransformStep::Permute {
                axis: PermuteAxis::Quasimonomials,
                ..
            } => l,
        };
    }
    Ok(l)
}

/// Greedy scan in `order`: a row is taken when it raises the rank of the
/// rows taken so far, or, while fewer than `slack` such rows have been
/// taken, when it does not. Stops after `target` rows.
pub(crate) fn greedy_select(rows: &[Vec<Rational>], order: &[usize], target: usize, slack: usize) -> Vec<usize> {
    let width = rows.first().map_or(0, Vec::len);
    let mut taken = Vec::new();
    let mut acc = RMatrix::zeros(0, width);
    let mut current = 0;
    let mut dependent = 0;
    for &j in order {
        if taken.len() == target {
            break;
        }
        let mut trial = acc.clone();
        trial.push_row(rows[j].clone());
        let r = rank(&trial);
        if r > current || dependent < slack {
            if r == current {
                dependent += 1;
            }
            current = r;
            acc = trial;
            taken.push(j);
        }
    }
    taken
}

/// Extends a priority list to an order over all of `0..m`: listed indices
/// first, the rest ascending.
pub(crate) fn full_priority(priority: &[usize], m: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; m];
    let mut order = Vec::with_capacity(m);
    for &j in priority {
        if j >= m || seen[j] {
            return Err(Error::BadMode(format!(
                "priority index {j} is out of range or repeated"
            )));
        }
        seen[j] = true;
        order.push(j);
    }
    order.extend((0..m).filter(|&j| !seen[j]));
    Ok(order)
}

pub(crate) fn require_standard(sys: &QpSystem) -> Result<()> {
    if sys.is_standard() {
        return Ok(());
    }
    let r = sys.ranks();
    Err(Error::NotStandardized(format!(
        "n={} m={} rank(A)={} rank(B)={} rank(M)={}",
        sys.n(),
        sys.m(),
        r.a,
        r.b,
        r.m
    )))
}
