//! Seeded random instances for differential and invariance testing.
//!
//! Instance `i` of a suite depends only on `(seed, i)`, so suites can be
//! sharded across threads and regenerated piecemeal.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quadratic::{ProblemInstance, QuadraticFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `B = lambda A` with generic `A` and linear terms.
    Dependent,
    /// `A`, `B` drawn independently.
    Independent,
    /// `B = lambda A` with singular `A`; `a` may leave the range of `A`.
    RankDeficient,
    /// `B = lambda A`, `A` with a single eigenvalue of one sign, and `c`
    /// chosen so the compressed matrix is semidefinite or indefinite.
    OneNegative,
}

pub(crate) fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-r..r))
}

fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
    (&m + m.transpose()) * 0.5
}

/// Orthogonal factor of a random square matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let qr = m.qr();
        if qr.r().diagonal().iter().all(|d| d.abs() > 1e-3) {
            return qr.q();
        }
    }
}

fn with_spectrum(q: &DMatrix<f64>, eig: &[f64]) -> DMatrix<f64> {
    let m = q * DMatrix::from_diagonal(&DVector::from_column_slice(eig)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.3..3.0)
}

fn nonzero_lambda(rng: &mut ChaCha8Rng) -> f64 {
    let l: f64 = rng.gen_range(0.2..3.0);
    if rng.gen_bool(0.5) {
        l
    } else {
        -l
    }
}

fn pair(a: DMatrix<f64>, av: DVector<f64>, a0: f64, b: DMatrix<f64>, bv: DVector<f64>, b0: f64) -> ProblemInstance {
    let f = QuadraticFunction::from_symmetric(a, av, a0);
    let g = QuadraticFunction::from_symmetric(b, bv, b0);
    ProblemInstance::with_defaults(f, g).expect("generated instance is valid")
}

/// Instance `index` of the suite keyed by `seed`.
///
/// Even indices force `B = lambda A`, cycling through the three dependent
/// kinds; odd indices draw `A` and `B` independently. Dimensions range over
/// `2..=6`.
pub fn random_instance(seed: u64, index: u64) -> (InstanceKind, ProblemInstance) {
    let mut rng = rng_for(seed, index);
    let n = rng.gen_range(2..=6usize);
    let kind = if index % 2 == 1 {
        InstanceKind::Independent
    } else {
        match (index / 2) % 3 {
            0 => InstanceKind::Dependent,
            1 => InstanceKind::RankDeficient,
            _ => InstanceKind::OneNegative,
        }
    };
    let a0 = rng.gen_range(-3.0..3.0);
    let b0 = rng.gen_range(-3.0..3.0);
    let p = match kind {
        InstanceKind::Independent => {
            let a = symmetric(&mut rng, n);
            let b = symmetric(&mut rng, n);
            let av = uniform_vec(&mut rng, n, 2.0);
            let bv = uniform_vec(&mut rng, n, 2.0);
            pair(a, av, a0, b, bv, b0)
        }
        InstanceKind::Dependent => {
            let a = symmetric(&mut rng, n);
            let lambda = nonzero_lambda(&mut rng);
            let av = uniform_vec(&mut rng, n, 2.0);
            let bv = uniform_vec(&mut rng, n, 2.0);
            let b = &a * lambda;
            pair(a, av, a0, b, bv, b0)
        }
        InstanceKind::RankDeficient => {
            let q = random_orthogonal(&mut rng, n);
            let rank = rng.gen_range(1..n);
            let mut eig = vec![0.0; n];
            for e in eig.iter_mut().take(rank) {
                *e = if rng.gen_bool(0.6) { -magnitude(&mut rng) } else { magnitude(&mut rng) };
            }
            let a = with_spectrum(&q, &eig);
            let lambda = nonzero_lambda(&mut rng);
            let in_range_a = rng.gen_bool(0.5);
            let in_range_c = rng.gen_bool(0.7);
            let av = if in_range_a {
                &a * uniform_vec(&mut rng, n, 1.0)
            } else {
                uniform_vec(&mut rng, n, 1.0)
            };
            let c = if in_range_c {
                &a * uniform_vec(&mut rng, n, 1.0)
            } else {
                uniform_vec(&mut rng, n, 1.0)
            };
            let bv = &av * lambda + c;
            let b = &a * lambda;
            pair(a, av, a0, b, bv, b0)
        }
        InstanceKind::OneNegative => {
            let q = random_orthogonal(&mut rng, n);
            let mut eig: Vec<f64> = (0..n).map(|_| magnitude(&mut rng)).collect();
            eig[0] = -magnitude(&mut rng);
            // Occasionally leave a kernel direction among the positive part.
            if n > 2 && rng.gen_bool(0.25) {
                eig[n - 1] = 0.0;
            }
            // c = A z has A restricted to ker(c^T) semidefinite iff z^T A z < 0.
            let want_semidefinite = rng.gen_bool(0.5);
            let mut z = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            z[0] = if want_semidefinite {
                rng.gen_range(2.0..4.0)
            } else {
                rng.gen_range(-0.1..0.1)
            };
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let eig: Vec<f64> = eig.iter().map(|e| e * sign).collect();
            let a = with_spectrum(&q, &eig);
            let c = &a * (&q * z);
            let av = &a * uniform_vec(&mut rng, n, 1.0);
            let lambda = nonzero_lambda(&mut rng);
            let bv = &av * lambda + c;
            let b = &a * lambda;
            pair(a, av, a0, b, bv, b0)
        }
    };
    (kind, p)
}

/// Random invertible matrix with condition number bounded by construction.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, n);
    let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose()
}
