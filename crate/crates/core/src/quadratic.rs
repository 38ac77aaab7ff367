//! Quadratic functions `x -> x^T A x + 2 a^T x + a0` and problem instances.
//!
//! The linear coefficient is stored as `a`, i.e. *half* of the gradient of the
//! linear part. Every file format in this crate uses the same convention and
//! says so in its `convention` field.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The function form used by all serialized instances.
pub const CONVENTION: &str = "x^T A x + 2 a^T x + a0";

/// A real quadratic function `q(x) = x^T A x + 2 a^T x + a0` on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    quad: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadraticFunction {
    /// Builds a quadratic function from a square matrix, which is symmetrized
    /// as `(M + M^T) / 2`.
    ///
    /// Rejects `M` when `||M - M^T||_F > tol_sym * max(1, ||M||_F)`.
    pub fn new(m: DMatrix<f64>, a: DVector<f64>, a0: f64, tol_sym: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if a.len() != m.nrows() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: a.len(),
            });
        }
        let deviation = (&m - m.transpose()).norm();
        let allowed = tol_sym * m.norm().max(1.0);
        if deviation > allowed {
            return Err(Error::AsymmetricInput { deviation, allowed });
        }
        let quad = (&m + m.transpose()) * 0.5;
        Ok(Self::from_symmetric(quad, a, a0))
    }

    /// Convenience constructor from row-major data.
    pub fn from_rows(rows: &[&[f64]], a: &[f64], a0: f64) -> Result<Self> {
        let n = rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Self::new(m, DVector::from_column_slice(a), a0, ToleranceSet::default().tol_sym)
    }

    /// Caller guarantees `quad` is exactly symmetric.
    pub(crate) fn from_symmetric(quad: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Self {
        debug_assert_eq!(quad.nrows(), linear.len());
        Self {
            quad,
            linear,
            constant,
        }
    }

    /// An affine function `2 a^T x + a0`.
    pub fn affine(a: DVector<f64>, a0: f64) -> Self {
        let n = a.len();
        Self::from_symmetric(DMatrix::zeros(n, n), a, a0)
    }

    pub fn zero(n: usize) -> Self {
        Self::affine(DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// The symmetric quadratic coefficient `A`.
    pub fn quad(&self) -> &DMatrix<f64> {
        &self.quad
    }

    /// Half the linear coefficient, `a`.
    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.quad * x)) + 2.0 * self.linear.dot(x) + self.constant
    }

    /// The homogeneous part `x -> x^T A x`.
    pub fn homogeneous_part(&self) -> Self {
        let n = self.dim();
        Self::from_symmetric(self.quad.clone(), DVector::zeros(n), 0.0)
    }

    /// `eta * f + theta * g`, componentwise.
    pub fn linear_combination(eta: f64, f: &Self, theta: f64, g: &Self) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: g.dim(),
            });
        }
        Ok(Self::from_symmetric(
            &f.quad * eta + &g.quad * theta,
            &f.linear * eta + &g.linear * theta,
            eta * f.constant + theta * g.constant,
        ))
    }

    /// `s * q`.
    pub fn scaled(&self, s: f64) -> Self {
        Self::from_symmetric(&self.quad * s, &self.linear * s, self.constant * s)
    }

    /// `q - level`.
    pub fn shifted(&self, level: f64) -> Self {
        Self::from_symmetric(self.quad.clone(), self.linear.clone(), self.constant - level)
    }

    /// The function `x -> q(T x + shift)`.
    pub fn substitute(&self, t: &DMatrix<f64>, shift: &DVector<f64>) -> Result<Self> {
        let n = self.dim();
        if t.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.nrows(),
            });
        }
        if shift.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: shift.len(),
            });
        }
        let quad = t.transpose() * &self.quad * t;
        let quad = (&quad + quad.transpose()) * 0.5;
        let linear = t.transpose() * (&self.quad * shift + &self.linear);
        let constant = self.eval_unchecked(shift);
        Ok(Self::from_symmetric(quad, linear, constant))
    }

    /// True when `||A||_F <= tol * max(1, ||a||)`.
    pub fn is_affine(&self, tol: f64) -> bool {
        self.quad.norm() <= tol * self.linear.norm().max(1.0)
    }
}

/// Numerical thresholds for every rank and sign decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Symmetry check on input matrices.
    pub tol_sym: f64,
    /// Pencil linear dependence `B = lambda A`.
    pub tol_dep: f64,
    /// Eigenvalue sign classification, relative to the spectral norm.
    pub tol_eig: f64,
    /// Range membership and rank cutoff.
    pub tol_rank: f64,
    /// Semidefiniteness margin, and the strict margin of the separation test.
    pub tol_psd: f64,
    /// Witness verification.
    pub tol_residual: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            tol_sym: 1e-10,
            tol_dep: 1e-9,
            tol_eig: 1e-9,
            tol_rank: 1e-9,
            tol_psd: 1e-9,
            tol_residual: 1e-7,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tol_sym", self.tol_sym),
            ("tol_dep", self.tol_dep),
            ("tol_eig", self.tol_eig),
            ("tol_rank", self.tol_rank),
            ("tol_psd", self.tol_psd),
            ("tol_residual", self.tol_residual),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }

    pub fn with_overrides(mut self, o: &ToleranceOverrides) -> Self {
        let pick = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        pick(&mut self.tol_sym, o.tol_sym);
        pick(&mut self.tol_dep, o.tol_dep);
        pick(&mut self.tol_eig, o.tol_eig);
        pick(&mut self.tol_rank, o.tol_rank);
        pick(&mut self.tol_psd, o.tol_psd);
        pick(&mut self.tol_residual, o.tol_residual);
        self
    }
}

/// Partial tolerance settings, as found in problem files and on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_sym: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_dep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_psd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
}

/// A pair of quadratic functions on the same space, plus tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub f: QuadraticFunction,
    pub g: QuadraticFunction,
    pub tolerances: ToleranceSet,
}

impl ProblemInstance {
    pub fn new(f: QuadraticFunction, g: QuadraticFunction, tolerances: ToleranceSet) -> Result<Self> {
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: g.dim(),
            });
        }
        if f.dim() == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        tolerances.validate()?;
        Ok(Self { f, g, tolerances })
    }

    pub fn with_defaults(f: QuadraticFunction, g: QuadraticFunction) -> Result<Self> {
        Self::new(f, g, ToleranceSet::default())
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// The same instance with `f` and `g` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            f: self.g.clone(),
            g: self.f.clone(),
            tolerances: self.tolerances,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> ProblemFile {
        let defaults = ToleranceSet::default();
        let t = &self.tolerances;
        let diff = |a: f64, b: f64| if a != b { Some(a) } else { None };
        ProblemFile {
            convention: Some(CONVENTION.to_string()),
            name: None,
            n: self.dim(),
            f: QuadraticFile::from(&self.f),
            g: QuadraticFile::from(&self.g),
            tolerances: ToleranceOverrides {
                tol_sym: diff(t.tol_sym, defaults.tol_sym),
                tol_dep: diff(t.tol_dep, defaults.tol_dep),
                tol_eig: diff(t.tol_eig, defaults.tol_eig),
                tol_rank: diff(t.tol_rank, defaults.tol_rank),
                tol_psd: diff(t.tol_psd, defaults.tol_psd),
                tol_residual: diff(t.tol_residual, defaults.tol_residual),
            },
        }
    }
}

/// On-disk problem format.
///
/// ```json
/// {"n": 2,
///  "f": {"A": [[-1, 0], [0, 1]], "a": [0, 0], "a0": 0},
///  "g": {"A": [[-2, 0], [0, 2]], "a": [2, -1], "a0": 0},
///  "tolerances": {"tol_eig": 1e-9}}
/// ```
///
/// `a` is half of the linear coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub f: QuadraticFile,
    pub g: QuadraticFile,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticFile {
    #[serde(rename = "A")]
    pub quad: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub a0: f64,
}

impl From<&QuadraticFunction> for QuadraticFile {
    fn from(q: &QuadraticFunction) -> Self {
        let n = q.dim();
        Self {
            quad: (0..n)
                .map(|i| (0..n).map(|j| q.quad[(i, j)]).collect())
                .collect(),
            a: q.linear.iter().copied().collect(),
            a0: q.constant,
        }
    }
}

impl QuadraticFile {
    fn build(&self, n: usize, tol_sym: f64) -> Result<QuadraticFunction> {
        if self.quad.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.quad.len(),
            });
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.quad.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        if self.a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.a.len(),
            });
        }
        let all_finite = m.iter().chain(self.a.iter()).all(|v| v.is_finite()) && self.a0.is_finite();
        if !all_finite {
            return Err(Error::InvalidInstance("non-finite coefficient".into()));
        }
        QuadraticFunction::new(m, DVector::from_column_slice(&self.a), self.a0, tol_sym)
    }
}

impl ProblemFile {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        if let Some(c) = &self.convention {
            if c != CONVENTION {
                return Err(Error::InvalidInstance(format!(
                    "unsupported convention `{c}`, expected `{CONVENTION}`"
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        let tolerances = ToleranceSet::default().with_overrides(&self.tolerances);
        tolerances.validate()?;
        let f = self.f.build(self.n, tolerances.tol_sym)?;
        let g = self.g.build(self.n, tolerances.tol_sym)?;
        ProblemInstance::new(f, g, tolerances)
    }
}
