#![allow(dead_code)]

use std::path::PathBuf;

use qprecast::{QpSystem, RMatrix, Rational};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
}

/// Initial point and horizon for each fixture, inside the positive orthant
/// for the whole run.
pub fn start_of(name: &str) -> (Vec<f64>, f64) {
    match name {
        "morse" => (vec![1.0, 1.2, 0.35], 2.0),
        "morse_lv" => (vec![1.2, 1.0, 0.29, 0.1, 1.2], 2.0),
        "exciton" => (vec![0.8, 1.2, 0.45], 1.0),
        "brusselator" => (vec![1.0, 0.5], 3.0),
        "three_wave" => (vec![0.5, 0.4, 0.6], 1.0),
        "rank_deficient_a" => (vec![0.5, 0.7], 1.0),
        "blowup" => (vec![2.0], 1.0),
        other => panic!("no start for {other}"),
    }
}

pub fn imat(rows: &[&[i64]]) -> Vec<Vec<i64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

/// Plain integer matrix product.
pub fn imul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()
        })
        .collect()
}

pub fn rmat(v: &[Vec<i64>]) -> RMatrix {
    let rows: Vec<&[i64]> = v.iter().map(Vec::as_slice).collect();
    RMatrix::from_i64(&rows)
}

pub fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from(x)).collect()
}

/// `x_i (lambda_i + sum_j A_ij prod_k x_k^B_jk)` evaluated term by term.
#[allow(clippy::needless_range_loop)]
pub fn field(sys: &QpSystem, x: &[f64]) -> Vec<f64> {
    let n = sys.n();
    let m = sys.m();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut rate = sys.lambda[i].to_f64();
        for j in 0..m {
            let mut mono = 1.0;
            for k in 0..n {
                mono *= x[k].powf(sys.b[(j, k)].to_f64());
            }
            rate += sys.a[(i, j)].to_f64() * mono;
        }
        out[i] = x[i] * rate;
    }
    out
}

/// Classical fixed-step Runge-Kutta; the reference for trajectories.
pub fn rk4(sys: &QpSystem, x0: &[f64], t_end: f64, steps: usize) -> Vec<f64> {
    let h = t_end / steps as f64;
    let mut x = x0.to_vec();
    let shift = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for _ in 0..steps {
        let k1 = field(sys, &x);
        let k2 = field(sys, &shift(&x, &k1, h / 2.0));
        let k3 = field(sys, &shift(&x, &k2, h / 2.0));
        let k4 = field(sys, &shift(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}
