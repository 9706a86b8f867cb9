//! Reference systems, instantiated with rational parameters.
//!
//! The same systems ship as JSON under `fixtures/` for the CLI; a test keeps
//! the two in sync.

use crate::exactalg::{qi, RMatrix, Rational};
use crate::qpmodel::{default_names, QpSystem};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn z() -> Rational {
    Rational::zero()
}

/// Morse oscillator after translation by `c` and the substitution
/// `z = exp(-alpha x)`: quasimonomials `x^-1 y`, `x^-1`, `y^-1 z`, `y^-1 z^2`, `y`.
pub fn morse_with(alpha: Rational, c: Rational, a: Rational, b: Rational) -> QpSystem {
    let ab = &a * &b;
    QpSystem::new(
        names(&["x", "y", "z"]),
        vec![z(), z(), &alpha * &c],
        RMatrix::from_rows(vec![
            vec![qi(1), -&c, z(), z(), z()],
            vec![z(), z(), a.clone(), -ab, z()],
            vec![z(), z(), z(), z(), -alpha],
        ]),
        RMatrix::from_i64(&[&[-1, 1, 0], &[-1, 0, 0], &[0, -1, 1], &[0, -1, 2], &[0, 1, 0]]),
    )
    .expect("morse fixture")
}

/// `alpha = 1, c = 1, a = 2, b = 3`.
pub fn morse() -> QpSystem {
    morse_with(qi(1), qi(1), qi(2), qi(3))
}

/// Five-variable Lotka-Volterra form of [`morse`]: `B = I`, `M = B * M_morse`.
pub fn morse_lv() -> QpSystem {
    let m = morse().class_invariant();
    lv_from_composed(&m, default_names("xi", m.rows()))
}

fn lv_from_composed(m: &RMatrix, names: Vec<String>) -> QpSystem {
    let n = m.rows();
    let lambda = m.column(0);
    let a = m.select_cols(&(1..m.cols()).collect::<Vec<_>>());
    QpSystem::new(names, lambda, a, RMatrix::identity(n)).expect("lv fixture")
}

/// Electron-hole/exciton oscillator with `x3 = (1 + q x2)^-1` and kinetic
/// exponent `order`. Quasimonomials: `x1^-1`, `x1 x2`, `x1^2`, `x3^order`,
/// `x1^2 x2 x3`, `x2 x3^(order+1)`.
pub fn exciton_with(g: Rational, c: Rational, k: Rational, q: Rational, order: i64) -> QpSystem {
    QpSystem::new(
        names(&["x1", "x2", "x3"]),
        vec![z(), z(), z()],
        RMatrix::from_rows(vec![
            vec![g, -&c, z(), z(), z(), z()],
            vec![z(), z(), c.clone(), -&k, z(), z()],
            vec![z(), z(), z(), z(), -(&c * &q), &q * &k],
        ]),
        RMatrix::from_i64(&[
            &[-1, 0, 0],
            &[1, 1, 0],
            &[2, 0, 0],
            &[0, 0, order],
            &[2, 1, 1],
            &[0, 1, order + 1],
        ]),
    )
    .expect("exciton fixture")
}

/// `g = c = k = q = 1`, kinetic exponent 2.
pub fn exciton() -> QpSystem {
    exciton_with(qi(1), qi(1), qi(1), qi(1), 2)
}

/// Brusselator with quasimonomials `x1 x2`, `x1 x2^-1`, `x1^-1`, `x1^2`.
///
/// The coefficient of `x1^2` in the second equation is `-1`, following the
/// embedded coefficient matrix used for the unimonomial reduction.
pub fn brusselator_with(a: Rational, b: Rational) -> QpSystem {
    QpSystem::new(
        names(&["x1", "x2"]),
        vec![-(&b + &qi(1)), z()],
        RMatrix::from_rows(vec![vec![qi(1), z(), a, z()], vec![z(), b, z(), qi(-1)]]),
        RMatrix::from_i64(&[&[1, 1], &[1, -1], &[-1, 0], &[2, 0]]),
    )
    .expect("brusselator fixture")
}

/// `a = 1, b = 2`.
pub fn brusselator() -> QpSystem {
    brusselator_with(qi(1), qi(2))
}

/// Three-wave interaction: competition terms `x_j^2` with matrix `n`, growth
/// rates `lambda`, and resonance `gamma x1^-1 x2 x3` in the first equation.
pub fn three_wave_with(n: &RMatrix, lambda: Vec<Rational>, gamma: Rational) -> QpSystem {
    assert_eq!((n.rows(), n.cols()), (3, 3));
    let resonance = RMatrix::column_vector(&[gamma, z(), z()]);
    QpSystem::new(
        names(&["x1", "x2", "x3"]),
        lambda,
        n.hstack(&resonance),
        RMatrix::from_i64(&[&[2, 0, 0], &[0, 2, 0], &[0, 0, 2], &[-1, 1, 1]]),
    )
    .expect("three-wave fixture")
}

/// `N = [[1,2,1],[0,1,1],[1,0,2]]`, `lambda = (-1,-1,-1)`, `gamma = 1`.
pub fn three_wave() -> QpSystem {
    three_wave_with(
        &RMatrix::from_i64(&[&[1, 2, 1], &[0, 1, 1], &[1, 0, 2]]),
        vec![qi(-1), qi(-1), qi(-1)],
        qi(1),
    )
}

/// `rank(M) = 2` but `rank(A) = 1`: standardizing needs a new-time step.
pub fn rank_deficient_a() -> QpSystem {
    QpSystem::new(
        names(&["u", "v"]),
        vec![qi(1), qi(0)],
        RMatrix::from_i64(&[&[-1, -1], &[-1, -1]]),
        RMatrix::identity(2),
    )
    .expect("rank-deficient fixture")
}

/// `x' = -1`: reaches the boundary of the positive orthant at `t = x(0)`.
pub fn blowup() -> QpSystem {
    QpSystem::new(
        names(&["x"]),
        vec![z()],
        RMatrix::from_i64(&[&[-1]]),
        RMatrix::from_i64(&[&[-1]]),
    )
    .expect("blow-up fixture")
}

/// Every shipped fixture with its file stem.
pub fn all() -> Vec<(&'static str, QpSystem)> {
    vec![
        ("morse", morse()),
        ("morse_lv", morse_lv()),
        ("exciton", exciton()),
        ("brusselator", brusselator()),
        ("three_wave", three_wave()),
        ("rank_deficient_a", rank_deficient_a()),
        ("blowup", blowup()),
    ]
}
