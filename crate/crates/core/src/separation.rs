//! Separation of quadratic level sets by hyperplanes and by other quadratic
//! level sets, with explicit witness points.
//!
//! A level set `{h = 0}` separates `{f = 0}` when `{f = 0}` splits into two
//! non-empty pieces on which `h` has strictly opposite signs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadratic::{QuadraticFunction, ToleranceSet};
use crate::spectral::{self, eigh, Definiteness, Inertia, SpectralData};

/// `h(x) = c^T x + c0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub c: DVector<f64>,
    pub c0: f64,
}

impl AffineForm {
    pub fn new(c: DVector<f64>, c0: f64) -> Self {
        Self { c, c0 }
    }

    pub fn from_slice(c: &[f64], c0: f64) -> Self {
        Self::new(DVector::from_column_slice(c), c0)
    }

    /// The affine part of `q`: gradient `2a`, constant `a0`.
    pub fn from_quadratic(q: &QuadraticFunction) -> Self {
        Self::new(q.linear() * 2.0, q.constant())
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + self.c0
    }

    /// Closest point of `{h = 0}` to the origin; the origin when `c = 0`.
    pub fn foot_point(&self) -> DVector<f64> {
        let cc = self.c.dot(&self.c);
        if cc == 0.0 {
            DVector::zeros(self.dim())
        } else {
            &self.c * (-self.c0 / cc)
        }
    }
}

/// The three conditions of the hyperplane separation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationCondition {
    /// One negative eigenvalue, linear term in range.
    #[serde(rename = "(i)")]
    OneNegativeDirection,
    /// Hyperplane normal nonzero and in range.
    #[serde(rename = "(ii)")]
    NormalInRange,
    /// Compressed matrix PSD, compressed gradient in range, positive margin.
    #[serde(rename = "(iii)")]
    PositiveMargin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    pub sigma: i8,
    pub failed: Vec<SeparationCondition>,
    pub inertia: Inertia,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed: Option<Definiteness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub near_degenerate: bool,
}

impl BranchDiagnostics {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub separates: bool,
    /// Sign of the successful branch, `f_bar = sigma * f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<i8>,
    /// Foot point of the hyperplane.
    pub x0: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_bar: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Set when some branch failed only because its margin was within tolerance of zero.
    pub near_degenerate: bool,
    pub branches: Vec<BranchDiagnostics>,
}

/// A pair of points on `{f = alpha}` on strictly opposite sides of `{h = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: f64,
    pub h_u: f64,
    pub h_v: f64,
    /// `f(u) - alpha`, `f(v) - alpha` as evaluated.
    pub residual_u: f64,
    pub residual_v: f64,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `V^T M V`, symmetrized.
pub(crate) fn compress(m: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(v.transpose() * m * v)
}

struct BranchOutcome {
    diag: BranchDiagnostics,
    w_bar: Option<DVector<f64>>,
}

fn test_branch(
    f: &QuadraticFunction,
    h: &AffineForm,
    sigma: i8,
    spec_a: &SpectralData,
    basis: Option<&DMatrix<f64>>,
    x0: &DVector<f64>,
    tol: &ToleranceSet,
) -> Result<BranchOutcome> {
    let s = f64::from(sigma);
    let abar = f.quad() * s;
    let lin_bar = f.linear() * s;
    let spec_bar = negate_if(spec_a, sigma);
    let inertia = spec_bar.inertia(tol.tol_eig);
    let mut failed = Vec::new();

    let a_in_range = spec_bar.range_membership(&lin_bar, tol.tol_rank)?.member;
    if inertia.n_neg != 1 || !a_in_range {
        failed.push(SeparationCondition::OneNegativeDirection);
    }

    let c_nonzero = basis.is_some();
    let c_in_range = spec_bar.range_membership(&h.c, tol.tol_rank)?.member;
    if !c_nonzero || !c_in_range {
        failed.push(SeparationCondition::NormalInRange);
    }

    let mut compressed = None;
    let mut margin = None;
    let mut near_degenerate = false;
    let mut w_bar = None;
    match basis {
        Some(v) => {
            let m = compress(&abar, v);
            let spec_m = eigh(&m)?;
            let def = spec_m.definiteness(tol.tol_psd);
            compressed = Some(def);
            let w = v.transpose() * (&abar * x0 + &lin_bar);
            let fbar_x0 = s * f.eval_unchecked(x0);
            let in_range = spec_m.range_membership(&w, tol.tol_rank)?.member;
            if def.is_psd() && in_range {
                let value = fbar_x0 - spec_m.pseudoinverse_form(&w, tol.tol_rank)?;
                let threshold = tol.tol_psd * fbar_x0.abs().max(1.0);
                margin = Some(value);
                near_degenerate = value.abs() <= threshold;
                if value <= threshold {
                    failed.push(SeparationCondition::PositiveMargin);
                }
            } else {
                failed.push(SeparationCondition::PositiveMargin);
            }
            w_bar = Some(w);
        }
        None => failed.push(SeparationCondition::PositiveMargin),
    }

    Ok(BranchOutcome {
        diag: BranchDiagnostics {
            sigma,
            failed,
            inertia,
            compressed,
            margin,
            near_degenerate,
        },
        w_bar,
    })
}

fn negate_if(s: &SpectralData, sigma: i8) -> SpectralData {
    if sigma > 0 {
        return s.clone();
    }
    let n = s.dim();
    let eigenvalues = DVector::from_iterator(n, (0..n).rev().map(|i| -s.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| s.eigenvectors[(r, n - 1 - c)]);
    SpectralData {
        eigenvalues,
        eigenvectors,
        spectral_norm: s.spectral_norm,
    }
}

/// Decides whether the hyperplane `{h = 0}` separates `{f = 0}`.
///
/// Both sign branches `f_bar = f` and `f_bar = -f` are tried in that order;
/// the first branch meeting all three conditions is reported. A zero normal
/// `h.c = 0` never separates.
pub fn affine_separates_quadratic(
    f: &QuadraticFunction,
    h: &AffineForm,
    tol: &ToleranceSet,
) -> Result<SeparationReport> {
    check_dim(f.dim(), h.dim())?;
    let spec_a = eigh(f.quad())?;
    let basis = if h.c.norm() > 0.0 {
        Some(spectral::null_space_basis(&h.c)?)
    } else {
        None
    };
    let x0 = h.foot_point();

    let mut branches = Vec::with_capacity(2);
    let mut winner: Option<(i8, Option<DVector<f64>>, Option<f64>)> = None;
    for sigma in [1i8, -1] {
        let out = test_branch(f, h, sigma, &spec_a, basis.as_ref(), &x0, tol)?;
        if out.diag.passed() && winner.is_none() {
            winner = Some((sigma, out.w_bar.clone(), out.diag.margin));
        }
        branches.push(out.diag);
    }
    let near_degenerate = branches.iter().any(|b| b.near_degenerate);
    Ok(match winner {
        Some((sigma, w, margin)) => SeparationReport {
            separates: true,
            sigma: Some(sigma),
            x0: x0.iter().copied().collect(),
            w_bar: w.map(|w| w.iter().copied().collect()),
            margin,
            near_degenerate,
            branches,
        },
        None => SeparationReport {
            separates: false,
            sigma: None,
            x0: x0.iter().copied().collect(),
            w_bar: None,
            margin: None,
            near_degenerate,
            branches,
        },
    })
}

/// Checks on one sign branch for the existence of separating levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBranch {
    pub sigma: i8,
    /// One negative eigenvalue of `sigma * A`, and `a in R(A)`.
    pub b1: bool,
    /// `c in R(A)`, `c != 0`.
    pub b2: bool,
    /// `V^T (sigma A) V` positive semidefinite.
    pub b3: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed: Option<Definiteness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelExistence {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<i8>,
    /// Level of `h = c^T x + c0` whose hyperplane separates `{f = alpha}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub branches: Vec<LevelBranch>,
}

/// Decides whether some hyperplane `{c^T x + c0 = gamma}` separates some
/// level set `{f = alpha}`, and if so constructs such a pair `(gamma, alpha)`
/// whose separation margin is exactly one.
pub fn exists_separating_affine_levels(
    f: &QuadraticFunction,
    c: &DVector<f64>,
    c0: f64,
    tol: &ToleranceSet,
) -> Result<LevelExistence> {
    check_dim(f.dim(), c.len())?;
    let spec_a = eigh(f.quad())?;
    let a_in_range = spec_a.range_membership(f.linear(), tol.tol_rank)?.member;
    let c_nonzero = c.norm() > 0.0;
    let c_in_range = spec_a.range_membership(c, tol.tol_rank)?.member;
    let basis = if c_nonzero {
        Some(spectral::null_space_basis(c)?)
    } else {
        None
    };

    let mut branches = Vec::with_capacity(2);
    for sigma in [1i8, -1] {
        let inertia = negate_if(&spec_a, sigma).inertia(tol.tol_eig);
        let compressed = match &basis {
            Some(v) => Some(eigh(&compress(&(f.quad() * f64::from(sigma)), v))?.definiteness(tol.tol_psd)),
            None => None,
        };
        branches.push(LevelBranch {
            sigma,
            b1: inertia.n_neg == 1 && a_in_range,
            b2: c_nonzero && c_in_range,
            b3: compressed.is_some_and(Definiteness::is_psd),
            compressed,
        });
    }

    let Some(chosen) = branches.iter().find(|b| b.b1 && b.b2 && b.b3) else {
        return Ok(LevelExistence {
            exists: false,
            sigma: None,
            gamma: None,
            alpha: None,
            branches,
        });
    };
    let sigma = chosen.sigma;
    let s = f64::from(sigma);
    let v = basis.as_ref().expect("b2 implies c != 0");

    // u0 solves A_bar u0 = a_bar, hence V^T a_bar = V^T A_bar u0.
    let abar = f.quad() * s;
    let lin_bar = f.linear() * s;
    let spec_bar = negate_if(&spec_a, sigma);
    let u0 = spec_bar
        .range_membership(&lin_bar, tol.tol_rank)?
        .solution
        .ok_or_else(|| Error::Internal("linear term left the range".into()))?;
    let cc = c.dot(c);
    let gamma0 = c.dot(&u0);
    let gamma = c0 - gamma0;
    let x_gamma = c * (-gamma0 / cc);

    let m = compress(&abar, v);
    let spec_m = eigh(&m)?;
    let w = v.transpose() * (&abar * &x_gamma + &lin_bar);
    let q = spec_m.pseudoinverse_form(&w, tol.tol_rank)?;
    // sigma * (f(x_gamma) - alpha) - q = 1.
    let alpha = f.eval_unchecked(&x_gamma) - s * (1.0 + q);

    Ok(LevelExistence {
        exists: true,
        sigma: Some(sigma),
        gamma: Some(gamma),
        alpha: Some(alpha),
        branches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub separates: bool,
    /// `B = lambda A` for the separated function's `A`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// The reduced hyperplane `-lambda (f - alpha) + (g - beta)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperplane: Option<AffineForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SeparationReport>,
}

impl DirectionReport {
    fn rejected(reason: &str, lambda: Option<f64>) -> Self {
        Self {
            separates: false,
            lambda,
            reason: Some(reason.to_string()),
            hyperplane: None,
            report: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPairSeparation {
    pub alpha: f64,
    pub beta: f64,
    /// `{g = beta}` separates `{f = alpha}`.
    pub g_separates_f: bool,
    /// `{f = alpha}` separates `{g = beta}`.
    pub f_separates_g: bool,
    pub g_over_f: DirectionReport,
    pub f_over_g: DirectionReport,
}

pub(crate) fn matrix_negligible(m: &DMatrix<f64>, scale: f64, tol: f64) -> bool {
    m.norm() <= tol * scale
}

/// Normal of the reduced hyperplane, with rounding-level vectors flushed to zero.
pub(crate) fn reduced_normal(a: &DVector<f64>, b: &DVector<f64>, lambda: f64, tol_rank: f64) -> DVector<f64> {
    let c = b - a * lambda;
    let scale = (lambda.abs() * a.norm() + b.norm()).max(1.0);
    if c.norm() <= tol_rank * scale {
        DVector::zeros(c.len())
    } else {
        c
    }
}

/// Whether `{by = by_level}` separates `{sep = sep_level}`.
fn direction(
    sep: &QuadraticFunction,
    sep_level: f64,
    by: &QuadraticFunction,
    by_level: f64,
    tol: &ToleranceSet,
) -> Result<DirectionReport> {
    let scale = sep.quad().norm().max(by.quad().norm());
    if matrix_negligible(sep.quad(), scale, tol.tol_dep) {
        return Ok(DirectionReport::rejected("separated level set is affine", None));
    }
    let Some(lambda) = spectral::pencil_dependence(sep.quad(), by.quad(), tol.tol_dep)? else {
        return Ok(DirectionReport::rejected("quadratic parts are linearly independent", None));
    };
    let shifted = sep.shifted(sep_level);
    let combined = QuadraticFunction::linear_combination(-lambda, &shifted, 1.0, &by.shifted(by_level))?;
    let residual = combined.quad().norm();
    if residual > 2.0 * tol.tol_dep * scale {
        return Err(Error::NotReducible { residual });
    }
    let c = reduced_normal(sep.linear(), by.linear(), lambda, tol.tol_rank) * 2.0;
    let h = AffineForm::new(c, combined.constant());
    let report = affine_separates_quadratic(&shifted, &h, tol)?;
    Ok(DirectionReport {
        separates: report.separates,
        lambda: Some(lambda),
        reason: None,
        hyperplane: Some(h),
        report: Some(report),
    })
}

/// Decides both `{g = beta}` separates `{f = alpha}` and the reverse.
pub fn level_pair_separation(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    alpha: f64,
    beta: f64,
    tol: &ToleranceSet,
) -> Result<LevelPairSeparation> {
    check_dim(f.dim(), g.dim())?;
    let scale = f.quad().norm().max(g.quad().norm());
    if matrix_negligible(f.quad(), scale, tol.tol_dep) && matrix_negligible(g.quad(), scale, tol.tol_dep) {
        let both = || DirectionReport::rejected("both functions are affine", None);
        return Ok(LevelPairSeparation {
            alpha,
            beta,
            g_separates_f: false,
            f_separates_g: false,
            g_over_f: both(),
            f_over_g: both(),
        });
    }
    let g_over_f = direction(f, alpha, g, beta, tol)?;
    let f_over_g = direction(g, beta, f, alpha, tol)?;
    Ok(LevelPairSeparation {
        alpha,
        beta,
        g_separates_f: g_over_f.separates,
        f_separates_g: f_over_g.separates,
        g_over_f,
        f_over_g,
    })
}

/// Builds two points of `{f = 0}` on opposite sides of `{h = 0}` by walking
/// from the foot point along the negative-curvature eigenvector.
///
/// The returned pair is ordered so that `h(u) < 0 < h(v)`.
pub fn construct_separation_witness(
    f: &QuadraticFunction,
    h: &AffineForm,
    report: &SeparationReport,
    tol: &ToleranceSet,
) -> Result<SeparationWitness> {
    check_dim(f.dim(), h.dim())?;
    let sigma = match (report.separates, report.sigma) {
        (true, Some(s)) => s,
        _ => return Err(Error::InvalidReport("report does not certify separation".into())),
    };
    if report.x0.len() != f.dim() {
        return Err(Error::InvalidReport("foot point has the wrong dimension".into()));
    }
    let s = f64::from(sigma);
    let abar = f.quad() * s;
    let spec = eigh(&abar)?;
    let lambda_neg = spec.eigenvalues[0];
    if spec.inertia(tol.tol_eig).n_neg != 1 {
        return Err(Error::InvalidReport("branch matrix lacks a unique negative eigenvalue".into()));
    }
    let e = spec.eigenvectors.column(0).into_owned();
    let x0 = DVector::from_column_slice(&report.x0);

    // f_bar(x0 + t e) = p t^2 + 2 q t + r.
    let p = lambda_neg;
    let q = e.dot(&(&abar * &x0 + f.linear() * s));
    let r = s * f.eval_unchecked(&x0);
    let disc = q * q - p * r;
    if !(disc > 0.0) || !(r > 0.0) {
        return Err(Error::RootFailure(format!(
            "restricted quadratic has no sign change (discriminant {disc:e}, value {r:e})"
        )));
    }
    let slope = h.c.dot(&e);
    if slope.abs() <= tol.tol_rank * h.c.norm() {
        return Err(Error::RootFailure("eigenvector is parallel to the hyperplane".into()));
    }
    let root = disc.sqrt();
    let big = -(q + q.signum() * root);
    let big = if big == 0.0 { -root } else { big };
    let (mut t1, mut t2) = (big / p, r / big);
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
    }
    let mut u = &x0 + &e * t1;
    let mut v = &x0 + &e * t2;
    let (mut h_u, mut h_v) = (h.evaluate(&u), h.evaluate(&v));
    if h_u > h_v {
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut h_u, &mut h_v);
    }
    Ok(SeparationWitness {
        residual_u: f.eval_unchecked(&u),
        residual_v: f.eval_unchecked(&v),
        u: u.iter().copied().collect(),
        v: v.iter().copied().collect(),
        alpha: 0.0,
        h_u,
        h_v,
    })
}
