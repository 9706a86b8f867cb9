//! Format-preserving manipulations of quasipolynomial systems.
//!
//! Each manipulation is a [`TransformStep`]: a plain value holding the
//! defining matrices, which can be serialized, inspected and re-applied.
//! Applying a step always returns a canonicalized system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::{inverse, rank, RMatrix, Rational};
use crate::qpmodel::QpSystem;

/// Which index set a permutation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermuteAxis {
    Variables,
    Quasimonomials,
}

/// Why trailing variables are being split off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoupleRole {
    /// The dropped variables do not enter any quasimonomial; each one is
    /// recovered afterwards by a quadrature.
    Quadrature,
    /// The dropped variables have identically zero rates and are constants
    /// of motion. They are fixed at 1 in the retained system.
    Constant,
}

/// One recorded transformation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformStep {
    /// `x_i = prod_k y_k^C_ik`; optionally renames the new variables.
    Quasimonomial {
        c: RMatrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
    },
    /// `dt = prod_i x_i^beta_i dt'`.
    NewTime { beta: Vec<Rational> },
    /// Appends variables that stay constant: `B -> (B | extra_b)`, `M` padded with zero rows.
    EmbedConstants { extra_b: RMatrix, names: Vec<String> },
    /// Appends variables the original ones do not see: `B -> (B | 0)`, `M` stacked over `extra_m`.
    EmbedDecoupled { extra_m: RMatrix, names: Vec<String> },
    /// Reorders variables or quasimonomials; position `i` takes old index `order[i]`.
    Permute { axis: PermuteAxis, order: Vec<usize> },
    /// Keeps the first `retained` variables and splits off the rest.
    Decouple { retained: usize, role: DecoupleRole },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
}

impl Dims {
    pub fn of(sys: &QpSystem) -> Self {
        Dims { n: sys.n(), m: sys.m() }
    }
}

/// A step together with the dimensions it maps between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub op: TransformStep,
    pub before: Dims,
    pub after: Dims,
}

impl TransformStep {
    pub fn kind(&self) -> &'static str {
        match self {
            TransformStep::Quasimonomial { .. } => "quasimonomial",
            TransformStep::NewTime { .. } => "new_time",
            TransformStep::EmbedConstants { .. } => "embed_constants",
            TransformStep::EmbedDecoupled { .. } => "embed_decoupled",
            TransformStep::Permute { .. } => "permute",
            TransformStep::Decouple { .. } => "decouple",
        }
    }

    /// Applies the step and canonicalizes.
    pub fn apply(&self, sys: &QpSystem) -> Result<QpSystem> {
        Ok(self.apply_raw(sys)?.canonicalize())
    }

    /// Applies the step without canonicalizing.
    pub(crate) fn apply_raw(&self, sys: &QpSystem) -> Result<QpSystem> {
        sys.check_shapes()?;
        let (n, m) = (sys.n(), sys.m());
        match self {
            TransformStep::Quasimonomial { c, names } => {
                if c.rows() != n || c.cols() != n {
                    return Err(Error::dims(
                        "C",
                        format!("expected {n}x{n}, got {}x{}", c.rows(), c.cols()),
                    ));
                }
                let c_inv = inverse(c)?;
                let var_names = match names {
                    Some(v) if v.len() == n => v.clone(),
                    Some(v) => return Err(Error::dims("names", format!("{} names for {n} variables", v.len()))),
                    None => sys.var_names.clone(),
                };
                Ok(QpSystem {
                    var_names,
                    lambda: c_inv.mul_vec(&sys.lambda),
                    a: c_inv.mul(&sys.a),
                    b: sys.b_matrix().mul(c),
                })
            }
            TransformStep::NewTime { beta } => {
                if beta.len() != n {
                    return Err(Error::dims("beta", format!("expected {n} entries, got {}", beta.len())));
                }
                let mut b = RMatrix::zeros(0, n);
                for j in 0..m {
                    b.push_row(sys.b.row(j).iter().zip(beta).map(|(x, y)| x + y).collect());
                }
                let mut a = sys.a.clone();
                let mut lambda = sys.lambda.clone();
                if sys.lambda.iter().any(|v| !v.is_zero()) {
                    b.push_row(beta.clone());
                    a = a.hstack(&RMatrix::column_vector(&sys.lambda));
                    lambda = vec![Rational::zero(); n];
                }
                Ok(QpSystem {
                    var_names: sys.var_names.clone(),
                    lambda,
                    a,
                    b,
                })
            }
            TransformStep::EmbedConstants { extra_b, names } => {
                let p = names.len();
                if extra_b.rows() != m || (m > 0 && extra_b.cols() != p) {
                    return Err(Error::dims(
                        "extra_b",
                        format!("expected {m}x{p}, got {}x{}", extra_b.rows(), extra_b.cols()),
                    ));
                }
                let extra = if m == 0 { RMatrix::zeros(0, p) } else { extra_b.clone() };
                let mut var_names = sys.var_names.clone();
                var_names.extend(names.iter().cloned());
                Ok(QpSystem {
                    var_names,
                    lambda: [sys.lambda.clone(), vec![Rational::zero(); p]].concat(),
                    a: sys.a.vstack(&RMatrix::zeros(p, m)),
                    b: sys.b_matrix().hstack(&extra),
                })
            }
            TransformStep::EmbedDecoupled { extra_m, names } => {
                let p = names.len();
                let extra = if p == 0 {
                    RMatrix::zeros(0, m + 1)
                } else {
                    extra_m.clone()
                };
                if extra.rows() != p || extra.cols() != m + 1 {
                    return Err(Error::dims(
                        "extra_m",
                        format!("expected {p}x{}, got {}x{}", m + 1, extra_m.rows(), extra_m.cols()),
                    ));
                }
                let mut var_names = sys.var_names.clone();
                var_names.extend(names.iter().cloned());
                let tail: Vec<usize> = (1..=m).collect();
                Ok(QpSystem {
                    var_names,
                    lambda: [sys.lambda.clone(), extra.column(0)].concat(),
                    a: sys.a.vstack(&extra.select_cols(&tail)),
                    b: sys.b_matrix().hstack(&RMatrix::zeros(m, p)),
                })
            }
            TransformStep::Permute { axis, order } => {
                let len = match axis {
                    PermuteAxis::Variables => n,
                    PermuteAxis::Quasimonomials => m,
                };
                check_permutation(order, len)?;
                Ok(match axis {
                    PermuteAxis::Variables => QpSystem {
                        var_names: order.iter().map(|&i| sys.var_names[i].clone()).collect(),
                        lambda: order.iter().map(|&i| sys.lambda[i].clone()).collect(),
                        a: sys.a.select_rows(order),
                        b: sys.b_matrix().select_cols(order),
                    },
                    PermuteAxis::Quasimonomials => QpSystem {
                        var_names: sys.var_names.clone(),
                        lambda: sys.lambda.clone(),
                        a: sys.a.select_cols(order),
                        b: sys.b_matrix().select_rows(order),
                    },
                })
            }
            TransformStep::Decouple { retained, role } => {
                let r = *retained;
                if r > n {
                    return Err(Error::dims("retained", format!("{r} exceeds {n} variables")));
                }
                let dropped: Vec<usize> = (r..n).collect();
                match role {
                    DecoupleRole::Quadrature => {
                        if !sys.b_matrix().select_cols(&dropped).is_zero() {
                            return Err(Error::NotApplicable {
                                op: "decouple",
                                reason: "a split-off variable still enters a quasimonomial".into(),
                            });
                        }
                    }
                    DecoupleRole::Constant => {
                        if !sys.composed().select_rows(&dropped).is_zero() {
                            return Err(Error::NotApplicable {
                                op: "decouple",
                                reason: "a split-off variable has a nonzero rate".into(),
                            });
                        }
                    }
                }
                let keep: Vec<usize> = (0..r).collect();
                Ok(QpSystem {
                    var_names: sys.var_names[..r].to_vec(),
                    lambda: sys.lambda[..r].to_vec(),
                    a: sys.a.select_rows(&keep),
                    b: sys.b_matrix().select_cols(&keep),
                })
            }
        }
    }
}

fn check_permutation(order: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if order.len() != len {
        return Err(Error::dims(
            "order",
            format!("permutation of length {} for {len} items", order.len()),
        ));
    }
    for &i in order {
        if i >= len || std::mem::replace(&mut seen[i], true) {
            return Err(Error::dims("order", format!("{order:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Names `prefix1, prefix2, ...` that do not collide with `taken`.
pub(crate) fn fresh_names(taken: &[String], prefix: &str, count: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        let candidate = format!("{prefix}{k}");
        if !taken.contains(&candidate) && !out.contains(&candidate) {
            out.push(candidate);
        }
        k += 1;
    }
    out
}

/// `B' = B C`, `A' = C^-1 A`, `lambda' = C^-1 lambda`.
pub fn quasimonomial_transform(sys: &QpSystem, c: &RMatrix) -> Result<QpSystem> {
    TransformStep::Quasimonomial {
        c: c.clone(),
        names: None,
    }
    .apply(sys)
}

/// Time rescaling `dt = prod x^beta dt'`: every exponent row shifts by
/// `beta`, and a nonzero `lambda` becomes a quasimonomial with exponents `beta`.
pub fn new_time_transform(sys: &QpSystem, beta: &[Rational]) -> Result<QpSystem> {
    TransformStep::NewTime { beta: beta.to_vec() }.apply(sys)
}

/// Adds `extra_b.cols()` constant variables (initial value 1).
pub fn embed_constants(sys: &QpSystem, extra_b: &RMatrix) -> Result<QpSystem> {
    let names = fresh_names(&sys.var_names, "w", extra_b.cols());
    TransformStep::EmbedConstants {
        extra_b: extra_b.clone(),
        names,
    }
    .apply(sys)
}

/// Adds `extra_m.rows()` variables that the original ones do not couple to.
pub fn embed_decoupled(sys: &QpSystem, extra_m: &RMatrix) -> Result<QpSystem> {
    if extra_m.rows() > 0 && extra_m.cols() != sys.m() + 1 {
        return Err(Error::dims(
            "extra_m",
            format!("expected {} columns, got {}", sys.m() + 1, extra_m.cols()),
        ));
    }
    let names = fresh_names(&sys.var_names, "w", extra_m.rows());
    TransformStep::EmbedDecoupled {
        extra_m: extra_m.clone(),
        names,
    }
    .apply(sys)
}

/// Coordinates of `x` after the quasimonomial transformation `C`:
/// `ln y = C^-1 ln x`.
pub fn map_point(x: &[f64], c: &RMatrix) -> Result<Vec<f64>> {
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(Error::NonPositiveState { index, value });
    }
    if c.rows() != x.len() || !c.is_square() {
        return Err(Error::dims(
            "C",
            format!("{}x{} for a point of length {}", c.rows(), c.cols(), x.len()),
        ));
    }
    let c_inv = inverse(c)?.to_f64();
    Ok(c_inv
        .iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .filter(|(e, _)| **e != 0.0)
                .map(|(e, v)| v.powf(*e))
                .product()
        })
        .collect())
}

/// Log-space projection that recovers the original coordinates from a
/// transformed, embedded system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionOperator {
    pub matrix: RMatrix,
    pub retained: usize,
}

impl ProjectionOperator {
    pub fn is_idempotent(&self) -> bool {
        self.matrix.mul(&self.matrix) == self.matrix
    }

    pub fn rank(&self) -> usize {
        rank(&self.matrix)
    }

    /// Rows past `retained` that are not identically zero.
    pub fn nonzero_spurious_rows(&self) -> Vec<usize> {
        (self.retained..self.matrix.rows())
            .filter(|&i| self.matrix.row(i).iter().any(|v| !v.is_zero()))
            .collect()
    }

    /// Applies the projection to a vector of logarithms.
    pub fn apply_logs(&self, logs: &[f64]) -> Vec<f64> {
        self.matrix
            .to_f64()
            .iter()
            .map(|row| row.iter().zip(logs).map(|(p, l)| p * l).sum())
            .collect()
    }
}

/// `P' = C^-1 P_n C` with `P_n = diag(I_retained, 0)`.
pub fn projection_for(c: &RMatrix, retained: usize, total: usize) -> Result<ProjectionOperator> {
    if c.rows() != total || !c.is_square() || retained > total {
        return Err(Error::dims(
            "C",
            format!("{}x{} for total {total}, retained {retained}", c.rows(), c.cols()),
        ));
    }
    let c_inv = inverse(c)?;
    let mut pn = RMatrix::zeros(total, total);
    for i in 0..retained {
        pn[(i, i)] = Rational::one();
    }
    let p = c_inv.mul(&pn).mul(c);
    let op = ProjectionOperator { matrix: p, retained };
    debug_assert!(op.is_idempotent());
    Ok(op)
}
