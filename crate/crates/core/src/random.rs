//! Seeded generators of random systems for property checks.

use rand::Rng;

use crate::exactalg::{determinant, q, qi, RMatrix, Rational};
use crate::numeric::integrate;
use crate::qpmodel::QpSystem;

/// Which structural defect a generated system should have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deficiency {
    None,
    /// `m < n`.
    FewQuasimonomials,
    RankB,
    RankM,
    /// `rank(A) < n` with `rank(M) = n`.
    RankA,
}

impl Deficiency {
    pub const ALL: [Deficiency; 5] = [
        Deficiency::None,
        Deficiency::FewQuasimonomials,
        Deficiency::RankB,
        Deficiency::RankM,
        Deficiency::RankA,
    ];
}

fn int_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, bound: i64) -> RMatrix {
    let data = (0..rows)
        .map(|_| (0..cols).map(|_| qi(rng.gen_range(-bound..=bound))).collect())
        .collect();
    RMatrix::try_from_rows(data, Some(cols)).expect("rectangular")
}

fn sixteenths<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> RMatrix {
    let data = (0..rows)
        .map(|_| (0..cols).map(|_| q(rng.gen_range(-3..=3), 16)).collect())
        .collect();
    RMatrix::try_from_rows(data, Some(cols)).expect("rectangular")
}

fn split_m(m: &RMatrix) -> (Vec<Rational>, RMatrix) {
    let tail: Vec<usize> = (1..m.cols()).collect();
    (m.column(0), m.select_cols(&tail))
}

/// A canonical system in standard form with `n <= max_n`, `m <= max_m` and
/// integer entries in `[-3, 3]`.
pub fn standard_system<R: Rng>(rng: &mut R, max_n: usize, max_m: usize) -> QpSystem {
    loop {
        let n = rng.gen_range(1..=max_n);
        let m = rng.gen_range(n..=max_m.max(n));
        let lambda = int_matrix(rng, 1, n, 3).row(0).to_vec();
        let a = int_matrix(rng, n, m, 3);
        let b = int_matrix(rng, m, n, 3);
        let s = QpSystem::with_default_names(lambda, a, b).expect("consistent shapes");
        if s.is_canonical() && s.is_standard() {
            return s;
        }
    }
}

/// An invertible integer matrix with entries in `[-3, 3]`.
pub fn invertible_matrix<R: Rng>(rng: &mut R, n: usize) -> RMatrix {
    loop {
        let c = int_matrix(rng, n, n, 3);
        if !determinant(&c).expect("square").is_zero() {
            return c;
        }
    }
}

/// A canonical system with the requested defect. Coefficients are
/// multiples of 1/16 in `[-3/16, 3/16]` and exponents small integers.
/// Draws whose trajectory from `(1, ..., 1)` leaves the positive orthant
/// before `t = 1` are rejected.
pub fn deficient_system<R: Rng>(rng: &mut R, kind: Deficiency) -> QpSystem {
    loop {
        let n = rng.gen_range(if kind == Deficiency::None { 1 } else { 2 }..=4);
        let m = match kind {
            Deficiency::FewQuasimonomials => rng.gen_range(1..n),
            _ => rng.gen_range(n..=6),
        };
        let b = match kind {
            Deficiency::RankB => {
                let r = rng.gen_range(1..n);
                int_matrix(rng, m, r, 1).mul(&int_matrix(rng, r, n, 1))
            }
            _ => int_matrix(rng, m, n, 1),
        };
        let composed = match kind {
            Deficiency::RankM => {
                let r = rng.gen_range(1..n);
                int_matrix(rng, n, r, 1).mul(&sixteenths(rng, r, m + 1))
            }
            Deficiency::RankA => {
                let a = int_matrix(rng, n, n - 1, 1).mul(&sixteenths(rng, n - 1, m));
                RMatrix::column_vector(sixteenths(rng, 1, n).row(0)).hstack(&a)
            }
            _ => sixteenths(rng, n, m + 1),
        };
        let (lambda, a) = split_m(&composed);
        let s = QpSystem::with_default_names(lambda, a, b)
            .expect("consistent shapes")
            .canonicalize();
        if s.m() == 0 {
            continue;
        }
        let r = s.ranks();
        let n = s.n();
        let ok = match kind {
            Deficiency::None => s.is_standard(),
            Deficiency::FewQuasimonomials => s.m() < n,
            Deficiency::RankB => s.m() >= n && r.b < n,
            Deficiency::RankM => s.m() >= n && r.b == n && r.m < n,
            Deficiency::RankA => s.m() >= n && r.b == n && r.m == n && r.a < n,
        };
        if ok && integrate(&s, &vec![1.0; n], 1.0, 1e-8).is_ok() {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_honour_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let s = standard_system(&mut rng, 4, 6);
            assert!(s.is_standard() && s.n() <= 4 && s.m() <= 6);
            let c = invertible_matrix(&mut rng, s.n());
            assert!(!determinant(&c).unwrap().is_zero());
            for kind in Deficiency::ALL {
                let d = deficient_system(&mut rng, kind);
                assert!(d.is_canonical());
                assert_eq!(d.is_standard(), kind == Deficiency::None);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = standard_system(&mut ChaCha8Rng::seed_from_u64(3), 4, 6);
        let b = standard_system(&mut ChaCha8Rng::seed_from_u64(3), 4, 6);
        assert_eq!(a, b);
    }
}
