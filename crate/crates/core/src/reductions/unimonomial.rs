use std::fmt;

use super::{full_priority, greedy_select, require_standard, EmbedMode, ReductionReport};
use crate::error::{Error, Result};
use crate::exactalg::{RMatrix, Rational};
use crate::qpmodel::{default_names, QpSystem};
use crate::transforms::{fresh_names, projection_for, PermuteAxis, TransformStep};

/// Reduction to unimonomial form in the default priority order.
pub fn to_unimonomial(sys: &QpSystem, mode: EmbedMode) -> Result<ReductionReport> {
    to_unimonomial_prioritized(sys, mode, &[])
}

/// Reduction to unimonomial form: `C` is an invertible block of columns of
/// `A` (of the embedded `A` when `mode` adds variables), so the transformed
/// coefficient block is the identity.
///
/// The first `n` independent columns in `priority` order form the block.
/// Each added variable carries one of the next unassigned quasimonomials
/// with unit coefficient, and the projection back to the original
/// variables is attached to the report.
pub fn to_unimonomial_prioritized(sys: &QpSystem, mode: EmbedMode, priority: &[usize]) -> Result<ReductionReport> {
    sys.check_shapes()?;
    let mut rep = ReductionReport::identity(sys);
    let cur = rep.output.clone();
    require_standard(&cur)?;
    let (n, m) = (cur.n(), cur.m());
    let k = mode.added(n, m)?;
    let order = full_priority(priority, m)?;

    let mut selected = greedy_select(&cur.a.transpose().row_vecs(), &order, n, 0);
    if selected.len() < n {
        return Err(Error::SingularBlock { n });
    }
    selected.sort_unstable();
    let extras: Vec<usize> = order
        .iter()
        .copied()
        .filter(|j| !selected.contains(j))
        .take(k)
        .collect();
    let mut qorder = selected.clone();
    qorder.extend(&extras);
    let rest: Vec<usize> = (0..m).filter(|j| !qorder.contains(j)).collect();
    qorder.extend(rest);
    rep.push_permutation(PermuteAxis::Quasimonomials, qorder)?;

    if k > 0 {
        let mut extra_m = RMatrix::zeros(k, m + 1);
        for t in 0..k {
            extra_m[(t, 1 + n + t)] = Rational::one();
        }
        let names = fresh_names(&rep.output.var_names, "w", k);
        rep.push(TransformStep::EmbedDecoupled { extra_m, names })?;
    }
    let c = rep.output.a.select_cols(&(0..n + k).collect::<Vec<_>>());
    rep.push(TransformStep::Quasimonomial {
        c: c.clone(),
        names: Some(default_names("z", n + k)),
    })?;
    if k > 0 {
        rep.projection = Some(projection_for(&c, n, n + k)?);
    }
    Ok(rep)
}

/// Why a projection does not reduce to discarding the added variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionFinding {
    Missing,
    /// 0-based rows past the retained block that are not zero.
    SpuriousRows(Vec<usize>),
}

impl fmt::Display for ProjectionFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionFinding::Missing => f.write_str("report carries no projection"),
            ProjectionFinding::SpuriousRows(rows) => {
                let rows: Vec<String> = rows.iter().map(|r| (r + 1).to_string()).collect();
                write!(f, "projection rows {} are not zero", rows.join(", "))
            }
        }
    }
}

/// Checks that the rows of the projection past the retained variables
/// vanish, so retrieving the original dynamics only means dropping the
/// added variables.
pub fn verify_projection_invariance(report: &ReductionReport) -> Result<(), ProjectionFinding> {
    let p = report.projection.as_ref().ok_or(ProjectionFinding::Missing)?;
    let rows = p.nonzero_spurious_rows();
    if rows.is_empty() {
        Ok(())
    } else {
        Err(ProjectionFinding::SpuriousRows(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{q, qi};
    use crate::fixtures;

    #[test]
    fn brusselator_without_embedding() {
        let rep = to_unimonomial(&fixtures::brusselator(), EmbedMode::None).unwrap();
        let expected = RMatrix::from_rows(vec![
            vec![qi(-3), qi(1), qi(0), qi(1), qi(0)],
            vec![qi(0), qi(0), qi(1), qi(0), q(-1, 2)],
        ]);
        assert_eq!(rep.output.composed(), expected);
        assert!(rep.projection.is_none());
        assert_eq!(verify_projection_invariance(&rep), Err(ProjectionFinding::Missing));
    }

    #[test]
    fn brusselator_full_embedding() {
        let rep = to_unimonomial(&fixtures::brusselator(), EmbedMode::Full).unwrap();
        assert_eq!(rep.output.n(), 4);
        assert!(rep.output.a.is_identity());
        let p = rep.projection.as_ref().unwrap();
        let expected = RMatrix::from_rows(vec![
            vec![qi(1), qi(0), qi(1), qi(0)],
            vec![qi(0), qi(1), qi(0), q(-1, 2)],
            vec![qi(0); 4],
            vec![qi(0); 4],
        ]);
        assert_eq!(p.matrix, expected);
        assert_eq!(verify_projection_invariance(&rep), Ok(()));
        assert!(rep.replays());
    }

    #[test]
    fn brusselator_partial_embedding() {
        let s = fixtures::brusselator();
        let rep = to_unimonomial(&s, EmbedMode::Partial(1)).unwrap();
        let p = &rep.projection.as_ref().unwrap().matrix;
        assert_eq!(*p, RMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 0], &[0, 0, 0]]));
        assert_eq!(verify_projection_invariance(&rep), Ok(()));

        let rep = to_unimonomial_prioritized(&s, EmbedMode::Partial(1), &[0, 1, 3, 2]).unwrap();
        let p = &rep.projection.as_ref().unwrap().matrix;
        let expected = RMatrix::from_rows(vec![
            vec![qi(1), qi(0), qi(0)],
            vec![qi(0), qi(1), q(-1, 2)],
            vec![qi(0); 3],
        ]);
        assert_eq!(*p, expected);
        assert_eq!(verify_projection_invariance(&rep), Ok(()));
        assert!(rep.replays());
    }

    #[test]
    fn three_wave_term_counts() {
        let s = fixtures::three_wave();
        assert_eq!(to_unimonomial(&s, EmbedMode::None).unwrap().output.term_count(), 6);
        let full = to_unimonomial(&s, EmbedMode::Full).unwrap();
        assert_eq!(full.output.term_count(), 4);
        assert!(full.output.a.is_identity());
    }

    #[test]
    fn coupled_embedding_breaks_invariance() {
        let mut rep = ReductionReport::identity(&fixtures::brusselator());
        rep.push(TransformStep::EmbedDecoupled {
            extra_m: RMatrix::from_i64(&[&[0, 0, 1, 1, 0]]),
            names: vec!["w1".into()],
        })
        .unwrap();
        let c = rep.output.a.select_cols(&[0, 1, 2]);
        rep.push(TransformStep::Quasimonomial {
            c: c.clone(),
            names: None,
        })
        .unwrap();
        rep.projection = Some(projection_for(&c, 2, 3).unwrap());
        let finding = verify_projection_invariance(&rep).unwrap_err();
        assert_eq!(finding, ProjectionFinding::SpuriousRows(vec![2]));
        assert_eq!(finding.to_string(), "projection rows 3 are not zero");
    }

    #[test]
    fn singular_block_reported() {
        // rank(A) = 1 < n, so the input is rejected before block selection.
        assert!(matches!(
            to_unimonomial(&fixtures::rank_deficient_a(), EmbedMode::None),
            Err(Error::NotStandardized(_))
        ));
    }
}
