//! Dormand-Prince 5(4) for autonomous systems, with FSAL and a standard
//! step-size controller.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Smallest value a component flagged positive may take.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Record {
    /// Every accepted step.
    All,
    /// The initial point and the requested stop times only.
    Stops,
}

#[derive(Debug, Clone)]
pub(crate) struct Settings {
    pub tol: f64,
    /// The leading `positive` components must stay above the floor.
    pub positive: usize,
    /// Sorted times the integrator lands on exactly.
    pub stops: Vec<f64>,
    pub record: Record,
    /// Stop once component `.0` reaches `.1`.
    pub event: Option<(usize, f64)>,
}

impl Settings {
    pub fn new(tol: f64, positive: usize) -> Self {
        Settings {
            tol,
            positive,
            stops: Vec::new(),
            record: Record::All,
            event: None,
        }
    }
}

#[derive(Debug)]
pub(crate) struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

fn weighted_rms(v: &[f64], y: &[f64], y2: &[f64], tol: f64) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y.iter().zip(y2))
        .map(|(e, (a, b))| {
            let sc = tol + tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / v.len().max(1) as f64).sqrt()
}

fn axpy(y: &[f64], h: f64, terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// Integrates the autonomous system `y' = rhs(y)` from 0 to `t_end`.
/// `rhs` returns `None` where the field is undefined; such steps are
/// retried with a smaller step.
pub(crate) fn integrate<F>(mut rhs: F, y0: &[f64], t_end: f64, s: &Settings) -> Result<Solution>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let dim = y0.len();
    let below_floor = |y: &[f64]| y[..s.positive].iter().any(|v| v.is_nan() || *v < POSITIVITY_FLOOR);
    if below_floor(y0) {
        return Err(Error::PositivityLost { t: 0.0 });
    }
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut k1 = rhs(&y).ok_or(Error::PositivityLost { t: 0.0 })?;
    if dim == 0 || t_end <= 0.0 {
        return Ok(Solution { times, states });
    }

    let mut h = initial_step(&mut rhs, &y, &k1, s.tol).min(t_end);
    let mut stops = s.stops.iter().copied().filter(|&v| v > 0.0 && v <= t_end).peekable();
    let mut last_rejected = false;
    let mut left_orthant = false;

    #[allow(clippy::needless_range_loop)]
    for _ in 0..MAX_STEPS {
        let target = stops.peek().copied().unwrap_or(t_end).min(t_end);
        let mut landing = false;
        if t + h >= target - 1e-14 * target.abs().max(1.0) {
            h = target - t;
            landing = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(if left_orthant {
                Error::PositivityLost { t }
            } else {
                Error::StepFailure { t }
            });
        }

        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        let mut failed = false;
        for i in 1..7 {
            let terms: Vec<(&[f64], f64)> = (0..i).map(|j| (k[j].as_slice(), A[i][j])).collect();
            let yi = axpy(&y, h, &terms);
            if below_floor(&yi) {
                left_orthant = true;
                failed = true;
                break;
            }
            match rhs(&yi) {
                Some(v) if v.iter().all(|x| x.is_finite()) => k.push(v),
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        let terms: Vec<(&[f64], f64)> = (0..6).map(|j| (k[j].as_slice(), A[6][j])).collect();
        let y_new = axpy(&y, h, &terms);
        let err_vec: Vec<f64> = (0..dim)
            .map(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>())
            .collect();
        let err = weighted_rms(&err_vec, &y, &y_new, s.tol);
        if !err.is_finite() {
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            t = if landing { target } else { t + h };
            y = y_new;
            k1 = k.swap_remove(6);
            if below_floor(&y) {
                return Err(Error::PositivityLost { t });
            }
            let at_stop = landing && stops.peek().is_some_and(|&v| v == target);
            if at_stop {
                stops.next();
            }
            if s.record == Record::All || at_stop || (landing && target == t_end) {
                times.push(t);
                states.push(y.clone());
            }
            if let Some((idx, value)) = s.event {
                if y[idx] >= value {
                    if s.record == Record::Stops && times.last() != Some(&t) {
                        times.push(t);
                        states.push(y.clone());
                    }
                    break;
                }
            }
            if landing && target >= t_end {
                break;
            }
            let mut factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            left_orthant = false;
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    if t < t_end && s.event.is_none() {
        return Err(Error::StepFailure { t });
    }
    Ok(Solution { times, states })
}

fn initial_step<F>(rhs: &mut F, y0: &[f64], f0: &[f64], tol: f64) -> f64
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let d0 = weighted_rms(y0, y0, y0, tol);
    let d1 = weighted_rms(f0, y0, y0, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let Some(f1) = rhs(&y1) else {
        return h0;
    };
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = weighted_rms(&diff, y0, y0, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
