use super::{
    first_integrals_from_m, full_priority, greedy_select, require_standard, EmbedMode, FirstIntegral, ReductionReport,
};
use crate::error::{Error, Result};
use crate::exactalg::{inverse, rank, row_dependencies, select_independent_rows, RMatrix, Rational};
use crate::qpmodel::{default_names, QpSystem};
use crate::transforms::{fresh_names, PermuteAxis, TransformStep};

/// Reduction to Lotka-Volterra form (`B = I`) in the default priority order.
pub fn to_lotka_volterra(sys: &QpSystem, mode: EmbedMode) -> Result<ReductionReport> {
    to_lotka_volterra_prioritized(sys, mode, &[])
}

/// Reduction to Lotka-Volterra form.
///
/// With `n + k` quasimonomials made quadratic (`k` from `mode`), the rows
/// of `B` are chosen by scanning `priority` (then the remaining indices):
/// a row is taken if it raises the rank, or while fewer than `k` rows that
/// do not have been taken. `k` constant variables complete the chosen block
/// of `B` to an invertible matrix, and `C` is its inverse.
pub fn to_lotka_volterra_prioritized(sys: &QpSystem, mode: EmbedMode, priority: &[usize]) -> Result<ReductionReport> {
    sys.check_shapes()?;
    let mut rep = ReductionReport::identity(sys);
    let cur = rep.output.clone();
    require_standard(&cur)?;
    if cur.b.is_identity() {
        return Ok(rep);
    }
    let (n, m) = (cur.n(), cur.m());
    let k = mode.added(n, m)?;
    let order = full_priority(priority, m)?;

    let mut chosen = if k == m - n {
        (0..m).collect()
    } else {
        greedy_select(&cur.b.row_vecs(), &order, n + k, k)
    };
    chosen.sort_unstable();
    let mut qorder = chosen.clone();
    qorder.extend((0..m).filter(|j| !chosen.contains(j)));
    rep.push_permutation(PermuteAxis::Quasimonomials, qorder)?;

    let head: Vec<usize> = (0..n + k).collect();
    if k > 0 {
        let block = rep.output.b.select_rows(&head);
        let mut extra_b = RMatrix::zeros(m, k);
        let mut span = block.transpose();
        let mut added = 0;
        for i in 0..n + k {
            if added == k {
                break;
            }
            let mut e = vec![Rational::zero(); n + k];
            e[i] = Rational::one();
            let mut trial = span.clone();
            trial.push_row(e);
            if rank(&trial) > n + added {
                span = trial;
                extra_b[(i, added)] = Rational::one();
                added += 1;
            }
        }
        let names = fresh_names(&rep.output.var_names, "w", k);
        rep.push(TransformStep::EmbedConstants { extra_b, names })?;
    }
    let c = inverse(&rep.output.b.select_rows(&head))?;
    rep.push(TransformStep::Quasimonomial {
        c,
        names: Some(default_names("xi", n + k)),
    })?;

    if k > 0 && k == m - n {
        rep.first_integrals = lv_first_integrals(&cur)?;
    } else if k > 0 {
        rep.first_integrals = first_integrals_from_m(&rep.output)
            .into_iter()
            .map(|fi| FirstIntegral {
                constant: Some(Rational::one()),
                ..fi
            })
            .collect();
    }
    Ok(rep)
}

/// The `m - n` conserved quantities of the full Lotka-Volterra embedding,
/// over its variables `xi1..xim`. Each non-pivot row `B_i = sum_j a_ij B_p(j)`
/// gives `xi_i^-1 prod_j xi_p(j)^a_ij = 1`.
pub fn lv_first_integrals(sys: &QpSystem) -> Result<Vec<FirstIntegral>> {
    let (n, m) = (sys.n(), sys.m());
    if m <= n {
        return Err(Error::NotApplicable {
            op: "lv_first_integrals",
            reason: format!("m = {m} does not exceed n = {n}"),
        });
    }
    let b = sys.b_matrix();
    let pivots = select_independent_rows(&b);
    let alpha = row_dependencies(&b, &pivots)?;
    let variables = default_names("xi", m);
    Ok((0..m)
        .filter(|i| !pivots.contains(i))
        .enumerate()
        .map(|(row, i)| {
            let mut e = vec![Rational::zero(); m];
            e[i] = -Rational::one();
            for (j, &p) in pivots.iter().enumerate() {
                e[p] = alpha[(row, j)].clone();
            }
            FirstIntegral {
                variables: variables.clone(),
                exponents: e,
                constant: Some(Rational::one()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{q, qi};
    use crate::fixtures;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn morse_full_embedding() {
        let rep = to_lotka_volterra(&fixtures::morse(), EmbedMode::Full).unwrap();
        assert!(rep.output.b.is_identity());
        let m_lv = RMatrix::from_i64(&[
            &[0, -1, 1, 2, -6, 0],
            &[0, -1, 1, 0, 0, 0],
            &[1, 0, 0, -2, 6, -1],
            &[2, 0, 0, -2, 6, -2],
            &[0, 0, 0, 2, -6, 0],
        ]);
        assert_eq!(rep.output.composed(), m_lv);
        assert_eq!(rank(&m_lv), 3);
        assert_eq!(rep.first_integrals.len(), 2);
        assert_eq!(rep.first_integrals[0].exponents, ints(&[1, -1, 2, -1, 0]));
        assert_eq!(rep.first_integrals[1].exponents, ints(&[1, -1, 0, 0, -1]));
        assert!(rep.replays());
    }

    #[test]
    fn morse_without_embedding() {
        let rep = to_lotka_volterra(&fixtures::morse(), EmbedMode::None).unwrap();
        assert_eq!(rep.output.n(), 3);
        assert_eq!(rep.output.b.select_rows(&[0, 1, 2]), RMatrix::identity(3));
        assert!(rep.first_integrals.is_empty());
        assert!(rep.replays());
    }

    #[test]
    fn exciton_full_embedding() {
        let s = fixtures::exciton();
        let rep = to_lotka_volterra(&s, EmbedMode::Full).unwrap();
        assert!(rep.output.b.is_identity());
        assert_eq!(rep.output.a.row(0), ints(&[-1, 1, 0, 0, 0, 0]).as_slice());
        assert_eq!(rep.output.a.row(3), ints(&[0, 0, 0, 0, -2, 2]).as_slice());
        assert_eq!(rep.output.composed(), s.class_invariant());

        let fis = lv_first_integrals(&s).unwrap();
        assert_eq!(fis.len(), 3);
        let listed = RMatrix::from_rows(vec![
            vec![qi(0), qi(1), q(1, 2), q(1, 2), qi(-1), qi(0)],
            vec![qi(0), qi(1), q(-1, 2), q(3, 2), qi(0), qi(-1)],
            vec![qi(1), qi(0), q(1, 2), qi(0), qi(0), qi(0)],
        ]);
        let ours = RMatrix::from_rows(fis.iter().map(|f| f.exponents.clone()).collect());
        assert_eq!(rank(&ours.vstack(&listed)), 3);
    }

    #[test]
    fn identity_exponents_give_identity_report() {
        let lv = QpSystem::with_default_names(
            ints(&[1, -1]),
            RMatrix::from_i64(&[&[0, -1], &[1, 0]]),
            RMatrix::identity(2),
        )
        .unwrap();
        for mode in [EmbedMode::None, EmbedMode::Full, EmbedMode::Partial(1)] {
            assert!(to_lotka_volterra(&lv, mode).unwrap().is_identity());
        }
    }

    #[test]
    fn partial_embedding_of_brusselator() {
        let rep = to_lotka_volterra(&fixtures::brusselator(), EmbedMode::Partial(1)).unwrap();
        assert_eq!(rep.output.n(), 3);
        assert_eq!(rep.output.b.select_rows(&[0, 1, 2]), RMatrix::identity(3));
        assert_eq!(rep.first_integrals.len(), 1);
        assert_eq!(rep.first_integrals[0].constant, Some(qi(1)));
        assert!(rep.replays());
        for k in [0, 2, 5] {
            assert!(matches!(
                to_lotka_volterra(&fixtures::brusselator(), EmbedMode::Partial(k)),
                Err(Error::BadMode(_))
            ));
        }
    }

    #[test]
    fn requires_standard_form() {
        assert!(matches!(
            to_lotka_volterra(&fixtures::morse_lv(), EmbedMode::Full),
            Err(Error::NotStandardized(_))
        ));
        assert!(matches!(
            lv_first_integrals(&fixtures::rank_deficient_a()),
            Err(Error::NotApplicable { .. })
        ));
    }
}
