//! Quasipolynomial systems `x_i' = x_i (lambda_i + sum_j A_ij prod_k x_k^B_jk)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::{rank, RMatrix, Rational};

/// A quasipolynomial ODE system with `n` variables and `m` quasimonomials.
///
/// `a` is `n x m` (column `j` holds the coefficients of quasimonomial `j`),
/// `b` is `m x n` (row `j` holds its exponents). The constant rates `lambda`
/// are kept apart from the quasimonomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpSystem {
    pub var_names: Vec<String>,
    pub lambda: Vec<Rational>,
    pub a: RMatrix,
    pub b: RMatrix,
}

/// `rank(A)`, `rank(B)`, `rank(M)` of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ranks {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

impl QpSystem {
    /// Builds and validates a system.
    pub fn new(var_names: Vec<String>, lambda: Vec<Rational>, a: RMatrix, b: RMatrix) -> Result<Self> {
        let sys = QpSystem {
            var_names,
            lambda,
            a,
            b,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Variables named `x1..xn`.
    pub fn with_default_names(lambda: Vec<Rational>, a: RMatrix, b: RMatrix) -> Result<Self> {
        let names = default_names("x", lambda.len());
        Self::new(names, lambda, a, b)
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.b.rows()
    }

    /// Dimension consistency. An empty system is rejected.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::dims("lambda", "system has no variables"));
        }
        self.check_shapes()
    }

    /// Shape checks only; zero-variable systems (everything decoupled) pass.
    pub(crate) fn check_shapes(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if self.var_names.len() != n {
            return Err(Error::dims(
                "variables",
                format!("{} names for {} variables", self.var_names.len(), n),
            ));
        }
        if self.a.rows() != n || self.a.cols() != m {
            return Err(Error::dims(
                "A",
                format!("expected {}x{}, got {}x{}", n, m, self.a.rows(), self.a.cols()),
            ));
        }
        if m > 0 && self.b.cols() != n {
            return Err(Error::dims(
                "B",
                format!("expected {}x{}, got {}x{}", m, n, self.b.rows(), self.b.cols()),
            ));
        }
        Ok(())
    }

    /// The composed matrix `M = (lambda | A)`.
    pub fn composed(&self) -> RMatrix {
        RMatrix::column_vector(&self.lambda).hstack(&self.a)
    }

    /// `B * M`, which every quasimonomial transformation leaves unchanged.
    pub fn class_invariant(&self) -> RMatrix {
        self.b_matrix().mul(&self.composed())
    }

    /// `B` with its column count pinned to `n` even when `m = 0`.
    pub(crate) fn b_matrix(&self) -> RMatrix {
        if self.m() == 0 {
            RMatrix::zeros(0, self.n())
        } else {
            self.b.clone()
        }
    }

    pub fn ranks(&self) -> Ranks {
        Ranks {
            a: rank(&self.a),
            b: rank(&self.b_matrix()),
            m: rank(&self.composed()),
        }
    }

    /// `m >= n` and `rank(A) = rank(B) = rank(M) = n`.
    pub fn is_standard(&self) -> bool {
        let n = self.n();
        let r = self.ranks();
        self.m() >= n && r.a == n && r.b == n && r.m == n
    }

    /// Number of nonlinear terms: the nonzero entries of `A`.
    pub fn term_count(&self) -> usize {
        self.a.count_nonzero()
    }

    /// The vector field at a strictly positive point, in floating point.
    pub fn evaluate_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::dims(
                "state",
                format!("expected {} components, got {}", self.n(), x.len()),
            ));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
            return Err(Error::NonPositiveState { index, value });
        }
        let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let b = self.b.to_f64();
        let monomials: Vec<f64> = b
            .iter()
            .map(|row| row.iter().zip(&logs).map(|(e, l)| e * l).sum::<f64>().exp())
            .collect();
        let a = self.a.to_f64();
        Ok((0..self.n())
            .map(|i| {
                let rate: f64 = self.lambda[i].to_f64() + a[i].iter().zip(&monomials).map(|(c, q)| c * q).sum::<f64>();
                x[i] * rate
            })
            .collect())
    }

    /// Normal form: zero-exponent quasimonomials fold into `lambda`,
    /// repeated exponent rows merge, and quasimonomials whose coefficient
    /// column vanishes are dropped. Survivors keep first-occurrence order.
    pub fn canonicalize(&self) -> QpSystem {
        let plan = CanonPlan::of(self);
        let (lambda, a_rows) = plan.apply(&self.lambda, &self.a.row_vecs());
        QpSystem {
            var_names: self.var_names.clone(),
            lambda,
            a: RMatrix::try_from_rows(a_rows, Some(plan.kept_rows.len())).expect("rectangular"),
            b: plan.b_matrix(self.n()),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonicalize() == *self
    }
}

pub fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Scalars the canonical merge plan can be replayed on.
pub(crate) trait Coeff: Clone {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
}

impl Coeff for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
}

/// The merge decisions of [`QpSystem::canonicalize`], computed once from
/// exact data so they can be replayed on other coefficient types.
#[derive(Debug, Clone)]
pub(crate) struct CanonPlan {
    /// For each input quasimonomial: `None` folds into lambda, `Some(k)`
    /// merges into slot `k`.
    slots: Vec<Option<usize>>,
    /// Surviving slots, in order, with their exponent rows.
    kept_slots: Vec<usize>,
    kept_rows: Vec<Vec<Rational>>,
}

impl CanonPlan {
    pub(crate) fn of(sys: &QpSystem) -> Self {
        let mut index: HashMap<Vec<Rational>, usize> = HashMap::new();
        let mut slot_rows: Vec<Vec<Rational>> = Vec::new();
        let mut slots = Vec::with_capacity(sys.m());
        for j in 0..sys.m() {
            let row = sys.b.row(j);
            if row.iter().all(Rational::is_zero) {
                slots.push(None);
                continue;
            }
            let k = *index.entry(row.to_vec()).or_insert_with(|| {
                slot_rows.push(row.to_vec());
                slot_rows.len() - 1
            });
            slots.push(Some(k));
        }
        let mut merged = vec![vec![Rational::zero(); sys.n()]; slot_rows.len()];
        for (j, slot) in slots.iter().enumerate() {
            if let Some(k) = slot {
                for (i, acc) in merged[*k].iter_mut().enumerate() {
                    *acc += &sys.a[(i, j)];
                }
            }
        }
        let kept_slots: Vec<usize> = (0..slot_rows.len())
            .filter(|&k| merged[k].iter().any(|v| !v.is_zero()))
            .collect();
        let kept_rows = kept_slots.iter().map(|&k| slot_rows[k].clone()).collect();
        CanonPlan {
            slots,
            kept_slots,
            kept_rows,
        }
    }

    pub(crate) fn b_matrix(&self, n: usize) -> RMatrix {
        RMatrix::try_from_rows(self.kept_rows.clone(), Some(n)).expect("rectangular")
    }

    /// Largest merged coefficient, in absolute value, in a slot the plan
    /// drops. Zero when the plan is exact for these coefficients.
    pub(crate) fn discarded_weight(&self, a_rows: &[Vec<f64>]) -> f64 {
        let nslots = self.slots.iter().flatten().max().map_or(0, |k| k + 1);
        let mut worst: f64 = 0.0;
        for row in a_rows {
            let mut merged = vec![0.0; nslots];
            for (j, slot) in self.slots.iter().enumerate() {
                if let Some(k) = slot {
                    merged[*k] += row[j];
                }
            }
            for (k, v) in merged.iter().enumerate() {
                if !self.kept_slots.contains(&k) {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Applies the merge to `(lambda, A)` given as per-variable rows.
    pub(crate) fn apply<T: Coeff>(&self, lambda: &[T], a_rows: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
        let nslots = self.slots.iter().flatten().max().map_or(0, |k| k + 1);
        let mut lambda = lambda.to_vec();
        let mut rows = Vec::with_capacity(a_rows.len());
        for (i, row) in a_rows.iter().enumerate() {
            let mut merged = vec![T::zero(); nslots];
            for (j, slot) in self.slots.iter().enumerate() {
                match slot {
                    None => lambda[i] = lambda[i].add(&row[j]),
                    Some(k) => merged[*k] = merged[*k].add(&row[j]),
                }
            }
            rows.push(self.kept_slots.iter().map(|&k| merged[k].clone()).collect());
        }
        (lambda, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{q, qi};
    use crate::fixtures;

    #[test]
    fn brusselator_validates() {
        assert!(fixtures::brusselator().validate().is_ok());
    }

    #[test]
    fn wrong_a_width_rejected() {
        let mut s = fixtures::brusselator();
        s.a = s.a.hstack(&RMatrix::zeros(2, 1));
        assert!(matches!(s.validate(), Err(Error::DimensionMismatch { field: "A", .. })));
    }

    #[test]
    fn empty_system_rejected() {
        let s = QpSystem {
            var_names: vec![],
            lambda: vec![],
            a: RMatrix::zeros(0, 0),
            b: RMatrix::zeros(0, 0),
        };
        assert!(matches!(s.validate(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn field_of_square() {
        let s =
            QpSystem::with_default_names(vec![qi(0)], RMatrix::from_i64(&[&[1]]), RMatrix::from_i64(&[&[1]])).unwrap();
        assert_eq!(s.evaluate_field(&[2.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn field_of_morse_at_unit_point() {
        let f = fixtures::morse().evaluate_field(&[1.0, 1.0, 1.0]).unwrap();
        assert!(f[0].abs() < 1e-15);
        assert!((f[1] + 4.0).abs() < 1e-14);
        assert!(f[2].abs() < 1e-15);
    }

    #[test]
    fn field_rejects_boundary() {
        let s = fixtures::morse();
        assert_eq!(
            s.evaluate_field(&[1.0, 0.0, 1.0]),
            Err(Error::NonPositiveState { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn zero_exponent_row_folds_into_lambda() {
        let s = QpSystem::with_default_names(
            vec![qi(1), qi(2)],
            RMatrix::from_i64(&[&[3, 1], &[4, 0]]),
            RMatrix::from_i64(&[&[0, 0], &[1, 1]]),
        )
        .unwrap();
        let c = s.canonicalize();
        assert_eq!(c.lambda, vec![qi(4), qi(6)]);
        assert_eq!(c.a, RMatrix::from_i64(&[&[1], &[0]]));
        assert_eq!(c.b, RMatrix::from_i64(&[&[1, 1]]));
    }

    #[test]
    fn duplicate_rows_merge_and_zero_columns_drop() {
        let s = QpSystem::with_default_names(
            vec![qi(0)],
            RMatrix::from_rows(vec![vec![q(1, 2), qi(2), q(1, 2), qi(0)]]),
            RMatrix::from_i64(&[&[1], &[-1], &[1], &[3]]),
        )
        .unwrap();
        let c = s.canonicalize();
        assert_eq!(c.a, RMatrix::from_i64(&[&[1, 2]]));
        assert_eq!(c.b, RMatrix::from_i64(&[&[1], &[-1]]));
        assert_eq!(c.canonicalize(), c);
    }

    #[test]
    fn cancelling_duplicates_vanish() {
        let s = QpSystem::with_default_names(
            vec![qi(0)],
            RMatrix::from_i64(&[&[1, -1]]),
            RMatrix::from_i64(&[&[2], &[2]]),
        )
        .unwrap();
        let c = s.canonicalize();
        assert_eq!(c.m(), 0);
        assert_eq!(c.a.rows(), 1);
        assert_eq!(c.a.cols(), 0);
    }

    #[test]
    fn class_invariant_of_morse() {
        let expected = RMatrix::from_i64(&[
            &[0, -1, 1, 2, -6, 0],
            &[0, -1, 1, 0, 0, 0],
            &[1, 0, 0, -2, 6, -1],
            &[2, 0, 0, -2, 6, -2],
            &[0, 0, 0, 2, -6, 0],
        ]);
        assert_eq!(fixtures::morse().class_invariant(), expected);
    }

    #[test]
    fn class_invariant_of_lv_is_m() {
        let lv = fixtures::morse_lv();
        assert!(lv.b.is_identity());
        assert_eq!(lv.class_invariant(), lv.composed());
    }
}
