//! Numeric equivalence between a system and its recast form.
//!
//! The recast system is rebuilt in floating point alongside the exact
//! trace. The exact stages fix the structure (which quasimonomials merge or
//! vanish); the float copy carries the actual values of constants of motion
//! that the exact pipeline normalizes to 1. The recast system is integrated
//! in its own time together with the quadrature variables and the physical
//! time, every sample is lifted back to the input coordinates, and the
//! input system is integrated to the same physical times for comparison.

use serde::Serialize;

use super::dopri::{self, Record, Settings};
use super::{check_conservation, check_start, FloatSystem, TimeLabel, Trajectory};
use crate::error::{Error, Result};
use crate::exactalg::inverse;
use crate::qpmodel::{CanonPlan, QpSystem};
use crate::reductions::{FirstIntegral, ReductionReport};
use crate::transforms::{DecoupleRole, PermuteAxis, TransformStep};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralDrift {
    pub integral: FirstIntegral,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// Largest `|ln x_original - ln x_retrieved|` over samples and variables.
    pub max_abs_log_error: f64,
    pub integral_drifts: Vec<IntegralDrift>,
    /// Physical time reached by the last compared sample.
    pub horizon: f64,
    pub samples: usize,
}

impl EquivalenceReport {
    pub fn worst(&self) -> f64 {
        self.integral_drifts
            .iter()
            .map(|d| d.drift)
            .fold(self.max_abs_log_error, f64::max)
    }
}

/// How to recover the logarithms of one stage from the next.
#[derive(Debug, Clone)]
enum Lift {
    Same,
    Linear(Vec<Vec<f64>>),
    Permute(Vec<usize>),
    Truncate(usize),
    Accumulated { start: usize, count: usize },
    Fixed(Vec<f64>),
}

impl Lift {
    fn apply(&self, cur: &[f64], acc: &[f64]) -> Vec<f64> {
        match self {
            Lift::Same => cur.to_vec(),
            Lift::Linear(c) => c.iter().map(|row| dot(row, cur)).collect(),
            Lift::Permute(order) => {
                let mut prev = vec![0.0; cur.len()];
                for (i, &j) in order.iter().enumerate() {
                    prev[j] = cur[i];
                }
                prev
            }
            Lift::Truncate(keep) => cur[..*keep].to_vec(),
            Lift::Accumulated { start, count } => [cur, &acc[*start..start + count]].concat(),
            Lift::Fixed(logs) => [cur, logs.as_slice()].concat(),
        }
    }
}

/// `d ln w / dt_s` for a split-off variable, over the retained variables of
/// stage `stage`.
#[derive(Debug, Clone)]
struct QuadratureRate {
    stage: usize,
    lambda: f64,
    coefficients: Vec<f64>,
    exponents: Vec<Vec<f64>>,
}

struct Replay {
    last: FloatSystem,
    lifts: Vec<Lift>,
    /// `beta` of each new-time step, by step index.
    new_time: Vec<Option<Vec<f64>>>,
    rates: Vec<QuadratureRate>,
    final_logs: Vec<f64>,
    accumulators: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn mat_rows(m: &[Vec<f64>], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    m.iter()
        .map(|mrow| {
            (0..cols)
                .map(|j| mrow.iter().zip(rows).map(|(c, r)| c * r[j]).sum())
                .collect()
        })
        .collect()
}

fn mismatch(reason: String) -> Error {
    Error::NotApplicable {
        op: "compare_recast",
        reason,
    }
}

/// Replays the trace in floating point from `ln x0`.
fn float_replay(stages: &[QpSystem], trace: &[TransformStep], x0: &[f64]) -> Result<Replay> {
    let first = FloatSystem::of(&stages[0]);
    let (mut lambda, mut a) = (first.lambda, first.a);
    let mut logs: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    let mut lifts = Vec::with_capacity(trace.len());
    let mut new_time = vec![None; trace.len()];
    let mut rates = Vec::new();
    let mut accumulators = Vec::new();

    for (i, op) in trace.iter().enumerate() {
        let before = &stages[i];
        let raw = op.apply_raw(before)?;
        let n = before.n();
        match op {
            TransformStep::Quasimonomial { c, .. } => {
                let c_inv = inverse(c)?.to_f64();
                lambda = mat_vec(&c_inv, &lambda);
                a = mat_rows(&c_inv, &a);
                logs = mat_vec(&c_inv, &logs);
                lifts.push(Lift::Linear(c.to_f64()));
            }
            TransformStep::NewTime { beta } => {
                let scale = lambda.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if raw.m() > before.m() {
                    for (row, l) in a.iter_mut().zip(&lambda) {
                        row.push(*l);
                    }
                    lambda = vec![0.0; n];
                } else if lambda.iter().any(|v| v.abs() > 1e-9 * scale) {
                    return Err(mismatch("constant rates vanish exactly but not numerically".into()));
                }
                new_time[i] = Some(beta.iter().map(|b| b.to_f64()).collect());
                lifts.push(Lift::Same);
            }
            TransformStep::EmbedConstants { names, .. } => {
                let m = before.m();
                lambda.extend(std::iter::repeat_n(0.0, names.len()));
                a.extend(std::iter::repeat_n(vec![0.0; m], names.len()));
                logs.extend(std::iter::repeat_n(0.0, names.len()));
                lifts.push(Lift::Truncate(n));
            }
            TransformStep::EmbedDecoupled { extra_m, names } => {
                for row in extra_m.to_f64() {
                    lambda.push(row[0]);
                    a.push(row[1..].to_vec());
                }
                logs.extend(std::iter::repeat_n(0.0, names.len()));
                lifts.push(Lift::Truncate(n));
            }
            TransformStep::Permute { axis, order } => match axis {
                PermuteAxis::Variables => {
                    lambda = order.iter().map(|&j| lambda[j]).collect();
                    a = order.iter().map(|&j| a[j].clone()).collect();
                    logs = order.iter().map(|&j| logs[j]).collect();
                    lifts.push(Lift::Permute(order.clone()));
                }
                PermuteAxis::Quasimonomials => {
                    a = a.iter().map(|row| order.iter().map(|&j| row[j]).collect()).collect();
                    lifts.push(Lift::Same);
                }
            },
            TransformStep::Decouple { retained, role } => {
                let r = *retained;
                match role {
                    DecoupleRole::Quadrature => {
                        let exponents = raw.b.to_f64();
                        for k in r..n {
                            rates.push(QuadratureRate {
                                stage: i + 1,
                                lambda: lambda[k],
                                coefficients: a[k].clone(),
                                exponents: exponents.clone(),
                            });
                        }
                        lifts.push(Lift::Accumulated {
                            start: accumulators.len(),
                            count: n - r,
                        });
                        accumulators.extend_from_slice(&logs[r..]);
                    }
                    DecoupleRole::Constant => {
                        let b = before.b.to_f64();
                        for row in a.iter_mut() {
                            for (j, v) in row.iter_mut().enumerate() {
                                *v *= dot(&b[j][r..], &logs[r..]).exp();
                            }
                        }
                        lifts.push(Lift::Fixed(logs[r..].to_vec()));
                    }
                }
                lambda.truncate(r);
                a.truncate(r);
                logs.truncate(r);
            }
        }
        let plan = CanonPlan::of(&raw);
        let scale = a.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let lost = plan.discarded_weight(&a);
        if lost > 1e-9 * scale {
            return Err(mismatch(format!(
                "step {i} ({}) drops a term of size {lost:e} that only vanishes for unit constants of motion",
                op.kind()
            )));
        }
        let (l, rows) = plan.apply(&lambda, &a);
        lambda = l;
        a = rows;
        let after = &stages[i + 1];
        debug_assert_eq!(
            (lambda.len(), a.first().map_or(after.m(), Vec::len)),
            (after.n(), after.m())
        );
    }
    let last = FloatSystem {
        lambda,
        a,
        b: stages.last().expect("stages").b.to_f64(),
    };
    Ok(Replay {
        last,
        lifts,
        new_time,
        rates,
        final_logs: logs,
        accumulators,
    })
}

impl Replay {
    /// Logarithms of every stage, input first.
    fn stage_logs(&self, final_logs: &[f64], acc: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.lifts.len() + 1];
        out[self.lifts.len()] = final_logs.to_vec();
        for i in (0..self.lifts.len()).rev() {
            out[i] = self.lifts[i].apply(&out[i + 1], acc);
        }
        out
    }

    /// `dt_s / dtau` for every stage `s`.
    fn time_factors(&self, stage_logs: &[Vec<f64>]) -> Vec<f64> {
        let steps = self.lifts.len();
        let mut fac = vec![1.0; steps + 1];
        for s in (0..steps).rev() {
            fac[s] = fac[s + 1]
                * self.new_time[s]
                    .as_ref()
                    .map_or(1.0, |beta| dot(beta, &stage_logs[s]).exp());
        }
        fac
    }

    /// Augmented field over `(z, accumulators, t)`.
    fn field(&self, y: &[f64]) -> Option<Vec<f64>> {
        let nf = self.final_logs.len();
        let z = &y[..nf];
        if z.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return None;
        }
        let acc = &y[nf..nf + self.accumulators.len()];
        let logs: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        let stage_logs = self.stage_logs(&logs, acc);
        let fac = self.time_factors(&stage_logs);
        let mut out: Vec<f64> = self.last.log_rates(&logs).iter().zip(z).map(|(r, v)| r * v).collect();
        for q in &self.rates {
            let y_logs = &stage_logs[q.stage];
            let rate = q.lambda
                + q.coefficients
                    .iter()
                    .zip(&q.exponents)
                    .map(|(c, e)| c * dot(e, y_logs).exp())
                    .sum::<f64>();
            out.push(rate * fac[q.stage - 1]);
        }
        out.push(fac[0]);
        Some(out)
    }
}

/// Replaces an event step that overshot `t_end` in physical time by one
/// that ends on it, found by Newton iteration on the step length.
fn land_on_horizon(
    replay: &Replay,
    sol: &mut dopri::Solution,
    t_index: usize,
    t_end: f64,
    tol: f64,
    positive: usize,
) -> Result<()> {
    let len = sol.states.len();
    if len < 2 || sol.states[len - 1][t_index] <= t_end * (1.0 + 1e-12) {
        return Ok(());
    }
    let start = sol.states[len - 2].clone();
    let tau0 = sol.times[len - 2];
    let rate = |y: &[f64]| replay.field(y).map(|f| f[t_index]).filter(|r| *r > 0.0);
    let Some(r0) = rate(&start) else {
        return Ok(());
    };
    let mut dtau = (t_end - start[t_index]) / r0;
    let mut end = start.clone();
    for _ in 0..8 {
        if dtau <= 0.0 {
            break;
        }
        let settings = Settings::new(tol * 1e-2, positive);
        end = dopri::integrate(|y| replay.field(y), &start, dtau, &settings)?
            .states
            .pop()
            .expect("initial point");
        let gap = t_end - end[t_index];
        if gap.abs() <= 1e-13 * t_end.max(1.0) {
            break;
        }
        let Some(r) = rate(&end) else { break };
        dtau += gap / r;
    }
    sol.times[len - 1] = tau0 + dtau;
    sol.states[len - 1] = end;
    Ok(())
}

/// Integrates `original` and the recast system of `report` from `x0` and
/// compares them in log coordinates at common physical times up to `t_end`.
///
/// Added variables start at 1; every other initial value is mapped through
/// the trace. Drifts are reported for first integrals over either the input
/// or the output variables.
pub fn compare_recast(
    original: &QpSystem,
    report: &ReductionReport,
    x0: &[f64],
    t_end: f64,
    tol: f64,
) -> Result<EquivalenceReport> {
    original.check_shapes()?;
    check_start(x0, original.n(), t_end, tol)?;
    if report.input != *original {
        return Err(Error::dims("report", "report input differs from the original system"));
    }
    let stages = report.stages()?;
    let ops: Vec<TransformStep> = report.trace.iter().map(|s| s.op.clone()).collect();
    let replay = float_replay(&stages, &ops, x0)?;

    let nf = replay.final_logs.len();
    let nacc = replay.accumulators.len();
    let mut y0: Vec<f64> = replay.final_logs.iter().map(|l| l.exp()).collect();
    y0.extend_from_slice(&replay.accumulators);
    y0.push(0.0);
    let t_index = nf + nacc;

    let reparametrized = replay.new_time.iter().any(Option::is_some);
    let mut settings = Settings::new(tol, nf);
    let tau_end = if reparametrized {
        settings.event = Some((t_index, t_end));
        f64::INFINITY
    } else {
        t_end
    };
    let mut sol = dopri::integrate(|y| replay.field(y), &y0, tau_end, &settings)?;
    if reparametrized {
        land_on_horizon(&replay, &mut sol, t_index, t_end, tol, nf)?;
    }

    let mut times = Vec::new();
    let mut retrieved = Vec::new();
    let mut recast_states = Vec::new();
    for (&tau, y) in sol.times.iter().zip(&sol.states) {
        let t = if reparametrized { y[t_index] } else { tau };
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        let mut logs: Vec<f64> = y[..nf].iter().map(|v| v.ln()).collect();
        if let Some(p) = report.projection.as_ref().filter(|p| p.matrix.rows() == nf) {
            logs = p.apply_logs(&logs);
        }
        let stage_logs = replay.stage_logs(&logs, &y[nf..t_index]);
        times.push(t);
        retrieved.push(stage_logs[0].clone());
        recast_states.push(y[..nf].to_vec());
    }

    // Samples at distinct increasing times, the first one at t = 0.
    let stops: Vec<f64> = times.iter().copied().skip(1).collect();
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut settings = Settings::new(tol, original.n());
    settings.stops = stops;
    settings.record = Record::Stops;
    let f = FloatSystem::of(original);
    let reference = if horizon > 0.0 {
        dopri::integrate(|x| f.field(x), x0, horizon, &settings)?
    } else {
        dopri::Solution {
            times: vec![0.0],
            states: vec![x0.to_vec()],
        }
    };
    if reference.times.len() != times.len() {
        return Err(mismatch(format!(
            "{} reference samples for {} recast samples",
            reference.times.len(),
            times.len()
        )));
    }

    let max_abs_log_error = reference
        .states
        .iter()
        .zip(&retrieved)
        .flat_map(|(x, logs)| x.iter().zip(logs).map(|(v, l)| (v.ln() - l).abs()))
        .fold(0.0, f64::max);

    let original_traj = Trajectory {
        times: reference.times,
        states: reference.states,
        time_label: TimeLabel::Original,
    };
    let recast_traj = Trajectory {
        times: sol.times[..recast_states.len()].to_vec(),
        states: recast_states,
        time_label: if reparametrized {
            TimeLabel::Reparametrized
        } else {
            TimeLabel::Original
        },
    };
    let integral_drifts = report
        .first_integrals
        .iter()
        .filter_map(|fi| {
            let traj = if fi.variables == report.output.var_names && recast_traj.states[0].len() == fi.exponents.len() {
                &recast_traj
            } else if fi.variables == original.var_names {
                &original_traj
            } else {
                return None;
            };
            Some(IntegralDrift {
                integral: fi.clone(),
                drift: check_conservation(traj, fi),
            })
        })
        .collect();

    Ok(EquivalenceReport {
        max_abs_log_error,
        integral_drifts,
        horizon,
        samples: times.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::reductions::{standardize, to_lotka_volterra, to_unimonomial, EmbedMode};

    #[test]
    fn identity_report_is_exact() {
        let s = fixtures::brusselator();
        let rep = ReductionReport::identity(&s);
        let eq = compare_recast(&s, &rep, &[1.0, 0.5], 2.0, 1e-10).unwrap();
        assert!(eq.max_abs_log_error <= 1e-8, "{}", eq.max_abs_log_error);
        assert!(eq.samples > 10);
    }

    #[test]
    fn brusselator_unimonomial() {
        let s = fixtures::brusselator();
        let rep = to_unimonomial(&s, EmbedMode::Full).unwrap();
        let eq = compare_recast(&s, &rep, &[1.0, 0.5], 3.0, 1e-9).unwrap();
        assert!(eq.max_abs_log_error <= 1e-5, "{}", eq.max_abs_log_error);
        assert!((eq.horizon - 3.0).abs() < 1e-12);
    }

    #[test]
    fn morse_lotka_volterra() {
        let s = fixtures::morse();
        let rep = to_lotka_volterra(&s, EmbedMode::Full).unwrap();
        let eq = compare_recast(&s, &rep, &[1.0, 1.2, 0.35], 2.0, 1e-9).unwrap();
        assert!(eq.max_abs_log_error <= 1e-5, "{}", eq.max_abs_log_error);
        assert_eq!(eq.integral_drifts.len(), 2);
        assert!(eq.integral_drifts.iter().all(|d| d.drift < 1e-6));
    }

    #[test]
    fn new_time_and_constants_of_motion() {
        let s = fixtures::rank_deficient_a();
        let rep = standardize(&s).unwrap();
        let eq = compare_recast(&s, &rep, &[0.5, 0.7], 1.0, 1e-9).unwrap();
        assert!(eq.max_abs_log_error <= 1e-5, "{}", eq.max_abs_log_error);

        let s = fixtures::morse_lv();
        let rep = standardize(&s).unwrap();
        let eq = compare_recast(&s, &rep, &[1.2, 1.0, 0.29, 0.1, 1.2], 2.0, 1e-9).unwrap();
        assert!(eq.max_abs_log_error <= 1e-5, "{}", eq.max_abs_log_error);
        assert_eq!(eq.integral_drifts.len(), 2);
    }

    #[test]
    fn rejects_foreign_report() {
        let rep = ReductionReport::identity(&fixtures::morse());
        assert!(compare_recast(&fixtures::brusselator(), &rep, &[1.0, 1.0], 1.0, 1e-9).is_err());
    }
}
