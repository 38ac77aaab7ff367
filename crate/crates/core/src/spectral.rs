//! Tolerance-aware symmetric eigen machinery: inertia, null-space bases,
//! range membership, pseudoinverse quadratic forms, semidefiniteness and
//! pencil dependence.
//!
//! Every sign or rank decision is made against a threshold scaled by the
//! spectral norm of the matrix at hand, so the same tolerance behaves the
//! same way on `A` and on `10 * A`.

use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns paired with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub spectral_norm: f64,
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }

    pub fn rank(&self) -> usize {
        self.n_neg + self.n_pos
    }

    /// Inertia of the negated matrix.
    pub fn negated(self) -> Self {
        Self {
            n_neg: self.n_pos,
            n_zero: self.n_zero,
            n_pos: self.n_neg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Definiteness {
    Psd,
    Nsd,
    Indefinite,
    Zero,
}

impl Definiteness {
    pub fn is_psd(self) -> bool {
        matches!(self, Self::Psd | Self::Zero)
    }

    pub fn is_nsd(self) -> bool {
        matches!(self, Self::Nsd | Self::Zero)
    }

    fn from_inertia(i: Inertia) -> Self {
        match (i.n_neg, i.n_pos) {
            (0, 0) => Self::Zero,
            (0, _) => Self::Psd,
            (_, 0) => Self::Nsd,
            _ => Self::Indefinite,
        }
    }
}

/// Outcome of testing `v in R(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeMembership {
    pub member: bool,
    /// `||(I - P) v||` with `P` the projector onto the numerical range.
    pub residual: f64,
    /// Minimum-norm solution of `A y = v`, present when `member`.
    pub solution: Option<DVector<f64>>,
}

fn digest(a: &DMatrix<f64>) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    a.nrows().hash(&mut h);
    a.ncols().hash(&mut h);
    for v in a.iter() {
        v.to_bits().hash(&mut h);
    }
    format!("{}x{}:{:016x}", a.nrows(), a.ncols(), h.finish())
}

/// Symmetric eigen-decomposition with eigenvalues sorted ascending.
pub fn eigh(a: &DMatrix<f64>) -> Result<SpectralData> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(SpectralData {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
            spectral_norm: 0.0,
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure { digest: digest(a) });
    }
    let eig = SymmetricEigen::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::ConvergenceFailure { digest: digest(a) })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // Fix the sign so the largest-magnitude entry is positive.
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    let spectral_norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        spectral_norm,
    })
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalue `l` counts negative when `l < -tol * max(1, ||A||_2)`,
    /// positive when `l > tol * max(1, ||A||_2)`, zero otherwise.
    pub fn inertia(&self, tol_eig: f64) -> Inertia {
        let threshold = tol_eig * self.spectral_norm.max(1.0);
        let mut out = Inertia {
            n_neg: 0,
            n_zero: 0,
            n_pos: 0,
        };
        for &l in self.eigenvalues.iter() {
            if l < -threshold {
                out.n_neg += 1;
            } else if l > threshold {
                out.n_pos += 1;
            } else {
                out.n_zero += 1;
            }
        }
        out
    }

    pub fn definiteness(&self, tol_psd: f64) -> Definiteness {
        Definiteness::from_inertia(self.inertia(tol_psd))
    }

    fn rank_cutoff(&self, tol_rank: f64) -> f64 {
        tol_rank * self.spectral_norm
    }

    /// Indices of eigenpairs that span the numerical range.
    fn range_indices(&self, tol_rank: f64) -> impl Iterator<Item = usize> + '_ {
        let cutoff = self.rank_cutoff(tol_rank);
        (0..self.dim()).filter(move |&i| self.eigenvalues[i].abs() > cutoff)
    }

    pub fn range_membership(&self, v: &DVector<f64>, tol_rank: f64) -> Result<RangeMembership> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut projected = DVector::zeros(self.dim());
        let mut solution = DVector::zeros(self.dim());
        for i in self.range_indices(tol_rank) {
            let q = self.eigenvectors.column(i);
            let coeff = q.dot(v);
            projected.axpy(coeff, &q, 1.0);
            solution.axpy(coeff / self.eigenvalues[i], &q, 1.0);
        }
        let residual = (v - projected).norm();
        let member = residual <= tol_rank * v.norm().max(1.0);
        Ok(RangeMembership {
            member,
            residual,
            solution: member.then_some(solution),
        })
    }

    /// `w^T M^+ w`, summing only eigenpairs above the rank cutoff.
    pub fn pseudoinverse_form(&self, w: &DVector<f64>, tol_rank: f64) -> Result<f64> {
        let check = self.range_membership(w, tol_rank)?;
        if !check.member {
            return Err(Error::OutOfRange {
                residual: check.residual,
            });
        }
        Ok(self
            .range_indices(tol_rank)
            .map(|i| {
                let c = self.eigenvectors.column(i).dot(w);
                c * c / self.eigenvalues[i]
            })
            .sum())
    }

    /// Orthonormal basis of the numerical null space (columns).
    pub fn null_space(&self, tol_rank: f64) -> DMatrix<f64> {
        let cutoff = self.rank_cutoff(tol_rank);
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&i| self.eigenvalues[i].abs() <= cutoff)
            .collect();
        DMatrix::from_fn(self.dim(), idx.len(), |r, c| self.eigenvectors[(r, idx[c])])
    }
}

pub fn inertia(s: &SpectralData, tol_eig: f64) -> Inertia {
    s.inertia(tol_eig)
}

/// Orthonormal basis of `{x : c^T x = 0}` as the columns of an `n x (n-1)`
/// matrix, taken from the Householder reflector that maps `c` onto an axis.
pub fn null_space_basis(c: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = c.len();
    let norm = c.norm();
    if n == 0 || norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    // Reflect c onto -sign(c_k) ||c|| e_k where k is its largest entry.
    let (k, _) = c
        .iter()
        .enumerate()
        .fold((0, -1.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let mut v = c.clone();
    v[k] += c[k].signum() * norm;
    let vv = v.dot(&v);
    let mut h = DMatrix::identity(n, n);
    h -= (&v * v.transpose()) * (2.0 / vv);
    let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    Ok(DMatrix::from_fn(n, n - 1, |r, col| h[(r, keep[col])]))
}

pub fn range_membership(a: &DMatrix<f64>, v: &DVector<f64>, tol_rank: f64) -> Result<RangeMembership> {
    eigh(a)?.range_membership(v, tol_rank)
}

pub fn psd_check(m: &DMatrix<f64>, tol_psd: f64) -> Result<Definiteness> {
    Ok(eigh(m)?.definiteness(tol_psd))
}

/// Returns `lambda` with `B = lambda A` when the Frobenius projection residual
/// `||B - lambda* A||_F` is within `tol_dep * max(||A||_F, ||B||_F)`.
pub fn pencil_dependence(a: &DMatrix<f64>, b: &DMatrix<f64>, tol_dep: f64) -> Result<Option<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let aa = a.dot(a);
    if aa == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let lambda = a.dot(b) / aa;
    let residual = (b - a * lambda).norm();
    let scale = a.norm().max(b.norm());
    Ok((residual <= tol_dep * scale).then_some(lambda))
}

pub fn apply_pseudoinverse(m: &DMatrix<f64>, w: &DVector<f64>, tol_rank: f64) -> Result<f64> {
    eigh(m)?.pseudoinverse_form(w, tol_rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn check_decomposition(a: &DMatrix<f64>, s: &SpectralData) {
        let n = a.nrows();
        let q = &s.eigenvectors;
        let orth = (q.transpose() * q - DMatrix::identity(n, n)).norm();
        assert!(orth <= 1e-8, "orthogonality defect {orth}");
        let rebuilt = q * DMatrix::from_diagonal(&s.eigenvalues) * q.transpose();
        assert!((a - rebuilt).norm() <= 1e-8 * a.norm().max(1.0));
        for w in s.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigh_examples() {
        let a = crate::curated::four_dim_pencil().f.quad().clone();
        let s = eigh(&a).unwrap();
        check_decomposition(&a, &s);
        for (got, want) in s.eigenvalues.iter().zip([-1.0, 0.0, 1.0, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }

        let s = eigh(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.eigenvalues.as_slice(), &[1.0, 1.0, 1.0]);

        let s = eigh(&diag(&[5.0, -2.0])).unwrap();
        assert_eq!(s.eigenvalues.as_slice(), &[-2.0, 5.0]);
        assert_relative_eq!(s.eigenvectors[(1, 0)].abs(), 1.0);
        assert_relative_eq!(s.eigenvectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 0)] = f64::NAN;
        assert!(matches!(eigh(&a), Err(Error::ConvergenceFailure { .. })));
    }

    #[test]
    fn inertia_examples() {
        let a = crate::curated::four_dim_pencil().f.quad().clone();
        let i = eigh(&a).unwrap().inertia(1e-9);
        assert_eq!((i.n_neg, i.n_zero, i.n_pos), (1, 1, 2));

        let zero = eigh(&DMatrix::zeros(2, 2)).unwrap().inertia(1e-9);
        assert_eq!((zero.n_neg, zero.n_zero, zero.n_pos), (0, 2, 0));
    }

    #[test]
    fn compressed_matrix_of_four_dim_pencil() {
        let p = crate::curated::four_dim_pencil();
        let a = p.f.quad();
        let c = p.g.linear() - p.f.linear() * 2.0;
        let v = null_space_basis(&c).unwrap();
        let compressed = v.transpose() * a * &v;
        let s = eigh(&compressed).unwrap();
        let i = s.inertia(1e-9);
        assert_eq!((i.n_neg, i.n_zero, i.n_pos), (0, 1, 2));
        assert_eq!(s.definiteness(1e-9), Definiteness::Psd);

        // The printed (non-orthonormal) basis reproduces the printed spectrum.
        let r = 1.0 / 2f64.sqrt();
        let expected_v = DMatrix::from_row_slice(4, 3, &[r, -4.0, r, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((c.transpose() * &expected_v).norm() < 1e-12);
        let ps = eigh(&(expected_v.transpose() * a * &expected_v)).unwrap();
        let sq = 53f64.sqrt();
        for (got, want) in ps.eigenvalues.iter().zip([0.0, (9.0 - sq) / 2.0, (9.0 + sq) / 2.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-9);
        }

        // Same column span as the printed basis.
        let proj = |m: &DMatrix<f64>| m * (m.transpose() * m).try_inverse().unwrap() * m.transpose();
        assert!((proj(&v) - proj(&expected_v)).norm() < 1e-10);
    }

    #[test]
    fn null_space_basis_examples() {
        let c = DVector::from_vec(vec![2.0, -1.0]);
        let v = null_space_basis(&c).unwrap();
        assert_eq!(v.shape(), (2, 1));
        let expected = DVector::from_vec(vec![1.0, 2.0]) / 5f64.sqrt();
        let col = v.column(0).into_owned();
        assert!((&col - &expected).norm() < 1e-12 || (&col + &expected).norm() < 1e-12);

        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v = null_space_basis(&e1).unwrap();
        assert_eq!(v.shape(), (3, 2));
        assert!(v.row(0).norm() < 1e-15);
        assert!((v.transpose() * &v - DMatrix::identity(2, 2)).norm() < 1e-14);

        assert!(matches!(null_space_basis(&DVector::zeros(3)), Err(Error::ZeroVector)));
        assert_eq!(null_space_basis(&DVector::from_vec(vec![3.0])).unwrap().shape(), (1, 0));
    }

    #[test]
    fn range_membership_examples() {
        let p = crate::curated::four_dim_pencil();
        let a = p.f.quad();
        let rm = range_membership(a, p.f.linear(), 1e-9).unwrap();
        assert!(rm.member);
        let y = rm.solution.unwrap();
        assert!((a * &y - p.f.linear()).norm() <= 1e-8);
        let r = 1.0 / 2f64.sqrt();
        let expected_y1 = DVector::from_vec(vec![-1.0, r, -1.0, r]);
        assert!((a * &expected_y1 - p.f.linear()).norm() <= 1e-12);

        let rm = range_membership(&diag(&[1.0, 0.0]), &DVector::from_vec(vec![0.0, 1.0]), 1e-9).unwrap();
        assert!(!rm.member);
        assert!(rm.solution.is_none());

        let inv = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let v = DVector::from_vec(vec![-4.0, 7.5]);
        let rm = range_membership(&inv, &v, 1e-9).unwrap();
        assert!(rm.member);
        assert!((&inv * rm.solution.unwrap() - v).norm() < 1e-12);
    }

    #[test]
    fn psd_check_examples() {
        assert_eq!(psd_check(&diag(&[0.6]), 1e-9).unwrap(), Definiteness::Psd);
        assert_eq!(psd_check(&diag(&[1.0, -1.0]), 1e-9).unwrap(), Definiteness::Indefinite);
        assert_eq!(psd_check(&diag(&[-1.0, 0.0]), 1e-9).unwrap(), Definiteness::Nsd);
        assert_eq!(psd_check(&DMatrix::zeros(2, 2), 1e-9).unwrap(), Definiteness::Zero);
        assert_eq!(psd_check(&DMatrix::zeros(0, 0), 1e-9).unwrap(), Definiteness::Zero);

        // saddle pair: V = (1, 2)/sqrt(5), V^T diag(-1, 1) V = 3/5.
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]) / 5f64.sqrt();
        let m = v.transpose() * diag(&[-1.0, 1.0]) * &v;
        assert_relative_eq!(m[(0, 0)], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn pencil_dependence_examples() {
        let a = diag(&[-1.0, 1.0]);
        let b = diag(&[-2.0, 2.0]);
        assert_eq!(pencil_dependence(&a, &b, 1e-9).unwrap(), Some(2.0));

        let a = diag(&[1.0, 1.0, 0.0]);
        let b = diag(&[-1.0, 1.0, 0.0]);
        assert_eq!(pencil_dependence(&a, &b, 1e-9).unwrap(), None);

        assert_eq!(pencil_dependence(&a, &DMatrix::zeros(3, 3), 1e-9).unwrap(), Some(0.0));
        assert!(matches!(
            pencil_dependence(&DMatrix::zeros(3, 3), &a, 1e-9),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn pseudoinverse_examples() {
        let m = diag(&[2.0, 0.0]);
        assert_eq!(apply_pseudoinverse(&m, &DVector::from_vec(vec![4.0, 0.0]), 1e-9).unwrap(), 8.0);
        assert_eq!(apply_pseudoinverse(&m, &DVector::zeros(2), 1e-9).unwrap(), 0.0);
        assert!(matches!(
            apply_pseudoinverse(&m, &DVector::from_vec(vec![0.0, 1.0]), 1e-9),
            Err(Error::OutOfRange { .. })
        ));
    }

    fn sym(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_row_slice(n, n, &v);
            (&m + m.transpose()) * 0.5
        })
    }

    fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_filter_map("rank deficient", move |v| {
            let m = DMatrix::from_row_slice(n, n, &v);
            let qr = m.qr();
            let r = qr.r();
            if (0..n).any(|i| r[(i, i)].abs() < 1e-3) {
                return None;
            }
            Some(qr.q())
        })
    }

    fn well_conditioned(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            DMatrix::from_row_slice(n, n, &v) * 0.3 + DMatrix::identity(n, n)
        })
    }

    /// Matrix with controlled rank and exactly zero remaining eigenvalues.
    fn with_spectrum(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        (
            orthogonal(n),
            proptest::collection::vec(prop_oneof![-3.0f64..-0.2, 0.2f64..3.0, Just(0.0)], n),
        )
            .prop_map(|(q, l)| {
                let m = &q * DMatrix::from_diagonal(&DVector::from_vec(l)) * q.transpose();
                (&m + m.transpose()) * 0.5
            })
    }

    proptest! {
        #[test]
        fn eigh_invariants(a in sym(5)) {
            let s = eigh(&a).unwrap();
            check_decomposition(&a, &s);
        }

        #[test]
        fn inertia_is_orthogonally_invariant(a in with_spectrum(4), q in orthogonal(4)) {
            let b = q.transpose() * &a * &q;
            let b = (&b + b.transpose()) * 0.5;
            prop_assert_eq!(eigh(&a).unwrap().inertia(1e-9), eigh(&b).unwrap().inertia(1e-9));
        }

        #[test]
        fn congruence_preserves_definiteness(
            a in with_spectrum(4),
            c in proptest::collection::vec(-1.0f64..1.0, 4),
            r in well_conditioned(3),
        ) {
            let c = DVector::from_vec(c);
            prop_assume!(c.norm() > 1e-2);
            let v = null_space_basis(&c).unwrap();
            let m1 = v.transpose() * &a * &v;
            let vr = &v * &r;
            let m2 = vr.transpose() * &a * &vr;
            let m2 = (&m2 + m2.transpose()) * 0.5;
            prop_assert_eq!(psd_check(&m1, 1e-9).unwrap(), psd_check(&m2, 1e-9).unwrap());
        }

        #[test]
        fn pencil_recovers_scale(a in sym(4), s in -10.0f64..10.0) {
            prop_assume!(a.norm() > 1e-3);
            let lambda = pencil_dependence(&a, &(&a * s), 1e-9).unwrap().unwrap();
            prop_assert!((lambda - s).abs() <= 1e-12 * s.abs().max(1.0));
        }

        #[test]
        fn image_vectors_are_in_range(a in with_spectrum(5), y in proptest::collection::vec(-3.0f64..3.0, 5)) {
            let v = &a * DVector::from_vec(y);
            prop_assert!(range_membership(&a, &v, 1e-9).unwrap().member);
        }

        #[test]
        fn null_space_basis_is_orthonormal_complement(c in proptest::collection::vec(-5.0f64..5.0, 1..7)) {
            let c = DVector::from_vec(c);
            prop_assume!(c.norm() > 1e-6);
            let v = null_space_basis(&c).unwrap();
            let k = c.len() - 1;
            prop_assert!((v.transpose() * &v - DMatrix::identity(k, k)).norm() < 1e-12);
            for j in 0..k {
                prop_assert!(c.dot(&v.column(j)).abs() <= 1e-10 * c.norm());
            }
        }

        #[test]
        fn pseudoinverse_form_matches_closed_form(
            q in orthogonal(4),
            l in proptest::collection::vec(prop_oneof![0.2f64..4.0, Just(0.0)], 4),
            y in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let m = &q * DMatrix::from_diagonal(&DVector::from_vec(l)) * q.transpose();
            let m = (&m + m.transpose()) * 0.5;
            // For w = M y, w^T M^+ w = y^T M M^+ M y = y^T M y.
            let y = DVector::from_vec(y);
            let w = &m * &y;
            let got = apply_pseudoinverse(&m, &w, 1e-9).unwrap();
            let want = y.dot(&w);
            prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
    }
}
