use super::{log_map, FirstIntegral, Quadrature, QuadratureTerm, ReductionReport};
use crate::error::{Error, Result};
use crate::exactalg::{kernel_basis, rank, row_dependencies, select_independent_rows, RMatrix, Rational};
use crate::qpmodel::QpSystem;
use crate::transforms::{new_time_transform, DecoupleRole, PermuteAxis, TransformStep};

fn primed(names: &[String]) -> Vec<String> {
    names.iter().map(|s| format!("{s}'")).collect()
}

fn push_change_of_variables(rep: &mut ReductionReport, c: RMatrix) -> Result<()> {
    if c.is_identity() {
        return Ok(());
    }
    let names = Some(primed(&rep.output.var_names));
    rep.push(TransformStep::Quasimonomial { c, names })
}

fn pivots_first(pivots: &[usize], n: usize) -> Vec<usize> {
    let mut order = pivots.to_vec();
    order.extend((0..n).filter(|i| !pivots.contains(i)));
    order
}

/// Splits off `n - rank(B)` variables that no quasimonomial depends on.
fn split_kernel(sys: &QpSystem) -> Result<ReductionReport> {
    let mut rep = ReductionReport::identity(sys);
    let n = rep.output.n();
    let b = rep.output.b_matrix();
    let r = rank(&b);
    if r == n {
        return Ok(rep);
    }
    let pivots = select_independent_rows(&b.transpose());
    rep.push_permutation(PermuteAxis::Variables, pivots_first(&pivots, n))?;

    // C = ( I_r | kernel ) on top of ( 0 | I ), so that B C = (B_r | 0).
    let kernel = kernel_basis(&rep.output.b_matrix());
    let mut c = RMatrix::zeros(n, n);
    for i in 0..r {
        c[(i, i)] = Rational::one();
    }
    for (k, v) in kernel.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            c[(i, r + k)] = x.clone();
        }
    }
    push_change_of_variables(&mut rep, c)?;

    let t = &rep.output;
    let over = t.var_names[..r].to_vec();
    for k in r..n {
        let terms = (0..t.m())
            .filter(|&j| !t.a[(k, j)].is_zero())
            .map(|j| QuadratureTerm {
                coefficient: t.a[(k, j)].clone(),
                exponents: t.b.row(j)[..r].to_vec(),
            })
            .collect();
        rep.quadratures.push(Quadrature {
            variable: t.var_names[k].clone(),
            over: over.clone(),
            lambda: t.lambda[k].clone(),
            terms,
        });
    }
    rep.push(TransformStep::Decouple {
        retained: r,
        role: DecoupleRole::Quadrature,
    })?;
    Ok(rep)
}

/// For `m < n`: a change of variables built from a kernel basis of `B`
/// leaves `rank(B)` variables coupled; the others become quadratures.
pub fn reduce_to_m_ge_n(sys: &QpSystem) -> Result<ReductionReport> {
    sys.check_shapes()?;
    if sys.canonicalize().m() >= sys.n() {
        return Err(Error::NotApplicable {
            op: "reduce_to_m_ge_n",
            reason: format!("m = {} is not below n = {}", sys.m(), sys.n()),
        });
    }
    split_kernel(sys)
}

/// Makes `rank(B) = n` by splitting off quadrature variables.
pub fn maximize_rank_b(sys: &QpSystem) -> Result<ReductionReport> {
    sys.check_shapes()?;
    split_kernel(sys)
}

/// Conserved quantities from linear dependencies among the rows of
/// `M = (lambda | A)`: if row `k` equals `sum_i g_i row_p(i)`, then
/// `x_k^-1 prod_i x_p(i)^g_i` is constant.
pub fn first_integrals_from_m(sys: &QpSystem) -> Vec<FirstIntegral> {
    let m = sys.composed();
    let n = sys.n();
    let pivots = select_independent_rows(&m);
    if pivots.len() == n {
        return Vec::new();
    }
    let gamma = row_dependencies(&m, &pivots).expect("greedy pivots span the row space");
    (0..n)
        .filter(|i| !pivots.contains(i))
        .enumerate()
        .map(|(k, row)| {
            let mut e = vec![Rational::zero(); n];
            e[row] = -Rational::one();
            for (i, &p) in pivots.iter().enumerate() {
                e[p] = gamma[(k, i)].clone();
            }
            FirstIntegral {
                variables: sys.var_names.clone(),
                exponents: e,
                constant: None,
            }
        })
        .collect()
}

/// Makes `rank(M) = n`: the change of variables with inverse
/// `[[I, 0], [-G, I]]` zeroes the dependent rows of `M`, and those
/// variables, now constants of motion, are split off.
pub fn maximize_rank_m(sys: &QpSystem) -> Result<ReductionReport> {
    sys.check_shapes()?;
    let mut rep = ReductionReport::identity(sys);
    let n = rep.output.n();
    let m = rep.output.composed();
    let pivots = select_independent_rows(&m);
    let r = pivots.len();
    if r == n {
        return Ok(rep);
    }
    let integrals = first_integrals_from_m(&rep.output);
    rep.push_permutation(PermuteAxis::Variables, pivots_first(&pivots, n))?;
    let gamma = row_dependencies(&rep.output.composed(), &(0..r).collect::<Vec<_>>())?;
    let mut c = RMatrix::identity(n);
    for k in 0..n - r {
        for i in 0..r {
            c[(r + k, i)] = gamma[(k, i)].clone();
        }
    }
    push_change_of_variables(&mut rep, c)?;
    debug_assert!(rep.output.composed().select_rows(&(r..n).collect::<Vec<_>>()).is_zero());
    rep.push(TransformStep::Decouple {
        retained: r,
        role: DecoupleRole::Constant,
    })?;
    rep.first_integrals = integrals;
    Ok(rep)
}

/// Makes `rank(A) = n` by a new-time transformation with `beta = -B_j`,
/// taking the first row `j` of the input's `B` that works.
pub fn maximize_rank_a(sys: &QpSystem) -> Result<ReductionReport> {
    sys.check_shapes()?;
    let mut rep = ReductionReport::identity(sys);
    let cur = rep.output.clone();
    let n = cur.n();
    if rank(&cur.a) == n {
        return Ok(rep);
    }
    if rank(&cur.composed()) < n {
        return Err(Error::NotApplicable {
            op: "maximize_rank_a",
            reason: "rank(M) is not maximal".into(),
        });
    }
    for j in 0..sys.m() {
        let beta: Vec<Rational> = sys.b.row(j).iter().map(|v| -v).collect();
        let t = new_time_transform(&cur, &beta)?;
        if rank(&t.a) == n {
            rep.push(TransformStep::NewTime { beta })?;
            return Ok(rep);
        }
    }
    Err(Error::NoSuitableRow)
}

/// Brings a system to standard form: `m >= n` and
/// `rank(A) = rank(B) = rank(M) = n`. First integrals are reported over the
/// input variables.
pub fn standardize(sys: &QpSystem) -> Result<ReductionReport> {
    sys.validate()?;
    let mut rep = ReductionReport::identity(sys);
    for _ in 0..2 * sys.n() + 2 {
        let cur = &rep.output;
        if cur.is_standard() {
            return Ok(rep);
        }
        let n = cur.n();
        let ranks = cur.ranks();
        let mut stage = if cur.m() < n {
            reduce_to_m_ge_n(cur)?
        } else if ranks.b < n {
            maximize_rank_b(cur)?
        } else if ranks.m < n {
            maximize_rank_m(cur)?
        } else {
            maximize_rank_a(cur)?
        };
        let l = log_map(&rep.trace, rep.input.n())?;
        for fi in &mut stage.first_integrals {
            fi.exponents = RMatrix::from_rows(vec![fi.exponents.clone()]).mul(&l).row(0).to_vec();
            fi.variables = rep.input.var_names.clone();
        }
        rep = rep.then(stage);
    }
    Err(Error::NotApplicable {
        op: "standardize",
        reason: "rank conditions not reached".into(),
    })
}
