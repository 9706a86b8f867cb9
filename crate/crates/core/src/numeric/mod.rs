//! Floating-point verification: integration of quasipolynomial systems,
//! first-integral drift, and equivalence of recast systems.

mod dopri;
mod recast;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpmodel::QpSystem;
use crate::reductions::FirstIntegral;

pub use dopri::POSITIVITY_FLOOR;
pub use recast::{compare_recast, EquivalenceReport, IntegralDrift};

/// Which clock a trajectory is sampled against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeLabel {
    Original,
    Reparametrized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub time_label: TimeLabel,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("a trajectory holds at least its initial point")
    }
}

/// Float copy of a system: `lambda` and `A` in `f64`, exponents as rows.
#[derive(Debug, Clone)]
pub(crate) struct FloatSystem {
    pub lambda: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl FloatSystem {
    pub fn of(sys: &QpSystem) -> Self {
        FloatSystem {
            lambda: sys.lambda.iter().map(|v| v.to_f64()).collect(),
            a: sys.a.to_f64(),
            b: sys.b.to_f64(),
        }
    }

    /// `d ln x_i / dt` given `ln x`.
    pub fn log_rates(&self, logs: &[f64]) -> Vec<f64> {
        let monomials: Vec<f64> = self
            .b
            .iter()
            .map(|row| row.iter().zip(logs).map(|(e, l)| e * l).sum::<f64>().exp())
            .collect();
        self.lambda
            .iter()
            .zip(&self.a)
            .map(|(l, row)| l + row.iter().zip(&monomials).map(|(c, q)| c * q).sum::<f64>())
            .collect()
    }

    /// The vector field at a positive point, `None` elsewhere.
    pub fn field(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return None;
        }
        let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        Some(self.log_rates(&logs).iter().zip(x).map(|(r, v)| r * v).collect())
    }
}

fn check_start(x0: &[f64], n: usize, t_end: f64, tol: f64) -> Result<()> {
    if x0.len() != n {
        return Err(Error::dims("x0", format!("expected {n} components, got {}", x0.len())));
    }
    if let Some((index, &value)) = x0.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(Error::NonPositiveState { index, value });
    }
    if t_end.is_nan() || t_end <= 0.0 || tol.is_nan() || tol <= 0.0 {
        return Err(Error::dims(
            "horizon",
            format!("t_end = {t_end} and tol = {tol} must be positive"),
        ));
    }
    Ok(())
}

/// Adaptive Dormand-Prince integration with absolute and relative
/// tolerance `tol`. Fails with `PositivityLost` if a component drops below
/// [`POSITIVITY_FLOOR`].
pub fn integrate(sys: &QpSystem, x0: &[f64], t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_at(sys, x0, t_end, tol, &[])
}

/// Like [`integrate`], additionally landing exactly on each of `stops`.
pub fn integrate_at(sys: &QpSystem, x0: &[f64], t_end: f64, tol: f64, stops: &[f64]) -> Result<Trajectory> {
    sys.check_shapes()?;
    check_start(x0, sys.n(), t_end, tol)?;
    let f = FloatSystem::of(sys);
    let mut settings = dopri::Settings::new(tol, sys.n());
    settings.stops = stops.to_vec();
    let sol = dopri::integrate(|x| f.field(x), x0, t_end, &settings)?;
    Ok(Trajectory {
        times: sol.times,
        states: sol.states,
        time_label: TimeLabel::Original,
    })
}

/// `max |F(x(t)) / F(x(0)) - 1|` along the trajectory.
pub fn check_conservation(traj: &Trajectory, fi: &FirstIntegral) -> f64 {
    let Some(first) = traj.states.first() else {
        return 0.0;
    };
    let v0 = fi.value(first);
    traj.states
        .iter()
        .map(|x| (fi.value(x) / v0 - 1.0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{qi, RMatrix};
    use crate::fixtures;
    use crate::reductions::first_integrals_from_m;

    #[test]
    fn pure_decay() {
        let s = QpSystem::new(
            vec!["x".into()],
            vec![qi(-1)],
            RMatrix::zeros(1, 0),
            RMatrix::zeros(0, 1),
        )
        .unwrap();
        let tr = integrate(&s, &[1.0], 1.0, 1e-10).unwrap();
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() <= 1e-9);
    }

    #[test]
    fn logistic_fixed_point() {
        let s =
            QpSystem::with_default_names(vec![qi(1)], RMatrix::from_i64(&[&[-1]]), RMatrix::from_i64(&[&[1]])).unwrap();
        let tr = integrate(&s, &[1.0], 3.0, 1e-10).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 1.0));
    }

    #[test]
    fn blowup_loses_positivity() {
        let err = integrate(&fixtures::blowup(), &[1.0], 2.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::PositivityLost { .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_start() {
        let s = fixtures::brusselator();
        assert!(matches!(
            integrate(&s, &[1.0, 0.0], 1.0, 1e-9),
            Err(Error::NonPositiveState { index: 1, .. })
        ));
        assert!(integrate(&s, &[1.0], 1.0, 1e-9).is_err());
        assert!(integrate(&s, &[1.0, 1.0], -1.0, 1e-9).is_err());
    }

    #[test]
    fn morse_lv_integrals_are_conserved() {
        let s = fixtures::morse_lv();
        let x0 = [1.2, 1.0, 0.29, 0.1, 1.2];
        let tr = integrate(&s, &x0, 2.0, 1e-9).unwrap();
        for fi in first_integrals_from_m(&s) {
            assert!(check_conservation(&tr, &fi) < 1e-6);
        }
        let wrong = FirstIntegral {
            variables: s.var_names.clone(),
            exponents: vec![qi(1), qi(0), qi(0), qi(0), qi(0)],
            constant: None,
        };
        assert!(check_conservation(&tr, &wrong) > 1e-3);
    }
}
