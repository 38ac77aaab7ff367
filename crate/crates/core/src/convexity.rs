//! Convexity decision for the joint range `R(f, g) = {(f(x), g(x))}`.
//!
//! [`check_convexity`] runs the four-step pencil / inertia procedure and, for
//! non-convex ranges, returns two attained range points `M`, `N` with an
//! unattained point `K` strictly between them. [`check_flores_bazan`] is an
//! independent decision through the `d = (d1, d2)` certificate conditions
//! (C1)-(C4), used for differential testing via [`cross_check`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadratic::{ProblemInstance, QuadraticFunction, ToleranceSet};
use crate::separation::{
    self, affine_separates_quadratic, compress, construct_separation_witness, exists_separating_affine_levels,
    matrix_negligible, reduced_normal, AffineForm,
};
use crate::spectral::{self, eigh, Definiteness, Inertia};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Convex,
    Nonconvex,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Convex => "CONVEX",
            Verdict::Nonconvex => "NONCONVEX",
        })
    }
}

/// Numeric evidence attached to one decision step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inertia: Option<Inertia>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed_eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definiteness: Option<Definiteness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: String,
    pub condition: String,
    pub outcome: bool,
    pub evidence: Evidence,
}

impl DecisionRecord {
    fn new(step: &str, condition: &str, outcome: bool, evidence: Evidence) -> Self {
        Self {
            step: step.to_string(),
            condition: condition.to_string(),
            outcome,
            evidence,
        }
    }
}

/// Which function's level set is split by the other in a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelAxis {
    /// `M`, `N`, `K` share their first coordinate: `{g = beta}` splits `{f = alpha}`.
    F,
    /// `M`, `N`, `K` share their second coordinate.
    G,
}

/// Two attained range points and an unattained point strictly between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconvexityWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "M")]
    pub m: [f64; 2],
    #[serde(rename = "N")]
    pub n: [f64; 2],
    #[serde(rename = "K")]
    pub k: [f64; 2],
    pub axis: LevelAxis,
}

/// Residual verification of a [`NonconvexityWitness`] against its instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// `|q(u) - level|`, `|q(v) - level|` for the function whose level set is split.
    pub level_residual_u: f64,
    pub level_residual_v: f64,
    pub level_bound: f64,
    /// `(p(u) - other) (p(v) - other)` for the splitting function.
    pub sign_product: f64,
    /// Position of `K` on the segment `M -> N`.
    pub segment_parameter: f64,
    pub colinearity_residual: f64,
    /// `M`, `N` agree with re-evaluation at `u`, `v`.
    pub attained_residual: f64,
    pub valid: bool,
}

impl NonconvexityWitness {
    pub fn verify(&self, p: &ProblemInstance) -> Result<WitnessCheck> {
        let u = DVector::from_column_slice(&self.u);
        let v = DVector::from_column_slice(&self.v);
        let (fu, gu) = (p.f.evaluate(&u)?, p.g.evaluate(&u)?);
        let (fv, gv) = (p.f.evaluate(&v)?, p.g.evaluate(&v)?);
        let (level, other, su, sv, lu, lv) = match self.axis {
            LevelAxis::F => (self.k[0], self.k[1], gu, gv, fu, fv),
            LevelAxis::G => (self.k[1], self.k[0], fu, fv, gu, gv),
        };
        let level_bound = p.tolerances.tol_residual * level.abs().max(1.0);
        let level_residual_u = (lu - level).abs();
        let level_residual_v = (lv - level).abs();
        let sign_product = (su - other) * (sv - other);

        let attained_residual = [fu - self.m[0], gu - self.m[1], fv - self.n[0], gv - self.n[1]]
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));

        let dir = [self.n[0] - self.m[0], self.n[1] - self.m[1]];
        let rel = [self.k[0] - self.m[0], self.k[1] - self.m[1]];
        let len2 = dir[0] * dir[0] + dir[1] * dir[1];
        let segment_parameter = if len2 > 0.0 {
            (rel[0] * dir[0] + rel[1] * dir[1]) / len2
        } else {
            f64::NAN
        };
        let colinearity_residual = if len2 > 0.0 {
            (dir[0] * rel[1] - dir[1] * rel[0]).abs() / len2.sqrt()
        } else {
            f64::INFINITY
        };
        let scale = self.k[0].abs().max(self.k[1].abs()).max(1.0);
        let valid = level_residual_u <= level_bound
            && level_residual_v <= level_bound
            && sign_product < 0.0
            && segment_parameter > 0.0
            && segment_parameter < 1.0
            && colinearity_residual <= p.tolerances.tol_residual * scale
            && attained_residual <= p.tolerances.tol_residual * scale;
        Ok(WitnessCheck {
            level_residual_u,
            level_residual_v,
            level_bound,
            sign_product,
            segment_parameter,
            colinearity_residual,
            attained_residual,
            valid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    pub verdict: Verdict,
    /// `f` and `g` were exchanged because `A = 0 != B`; all reported pairs are
    /// in the caller's original order.
    pub swapped: bool,
    pub path: Vec<DecisionRecord>,
    /// Sign branch: `+1` when `A` (after any swap) has one negative eigenvalue.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<i8>,
    /// `B = lambda A` after any swap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `(alpha, beta)` with `{f = alpha}` and `{g = beta}` separated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NonconvexityWitness>,
}

impl ConvexityCertificate {
    fn convex(swapped: bool, path: Vec<DecisionRecord>) -> Self {
        Self {
            verdict: Verdict::Convex,
            swapped,
            path,
            sigma: None,
            lambda: None,
            levels: None,
            witness: None,
        }
    }
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Decides convexity of `R(f, g)` and certifies non-convexity.
pub fn check_convexity(p: &ProblemInstance) -> Result<ConvexityCertificate> {
    let tol = p.tolerances;
    tol.validate()?;
    if p.f.dim() != p.g.dim() {
        return Err(Error::InvalidInstance("f and g live on different spaces".into()));
    }
    let mut path = Vec::new();

    // Step 0.
    let scale = p.f.quad().norm().max(p.g.quad().norm());
    let a_zero = matrix_negligible(p.f.quad(), scale, tol.tol_dep);
    let b_zero = matrix_negligible(p.g.quad(), scale, tol.tol_dep);
    let lin_zero = p.f.linear().norm().max(p.g.linear().norm()) <= tol.tol_rank;
    if a_zero && b_zero {
        let condition = if lin_zero { "constant map" } else { "A = B = 0 (affine map)" };
        path.push(DecisionRecord::new("step0", condition, true, Evidence::default()));
        return Ok(ConvexityCertificate::convex(false, path));
    }
    if lin_zero {
        path.push(DecisionRecord::new(
            "step0",
            "a = b = 0 (homogeneous pair)",
            true,
            Evidence::default(),
        ));
        return Ok(ConvexityCertificate::convex(false, path));
    }
    path.push(DecisionRecord::new(
        "step0",
        "A = B = 0 or a = b = 0",
        false,
        Evidence::default(),
    ));
    let swapped = a_zero;
    let (f, g) = if swapped {
        path.push(DecisionRecord::new("step0", "A = 0 != B, swap f and g", true, Evidence::default()));
        (&p.g, &p.f)
    } else {
        (&p.f, &p.g)
    };
    let a = f.quad();

    // Step 1.
    let lambda = spectral::pencil_dependence(a, g.quad(), tol.tol_dep)?;
    let pencil_residual = {
        let l = a.dot(g.quad()) / a.dot(a);
        (g.quad() - a * l).norm()
    };
    path.push(DecisionRecord::new(
        "step1",
        "B = lambda A",
        lambda.is_some(),
        Evidence {
            lambda,
            residual: Some(pencil_residual),
            ..Evidence::default()
        },
    ));
    let Some(lambda) = lambda else {
        return Ok(ConvexityCertificate::convex(swapped, path));
    };

    // Step 2.
    let c = reduced_normal(f.linear(), g.linear(), lambda, tol.tol_rank);
    let spec_a = eigh(a)?;
    let inertia_a = spec_a.inertia(tol.tol_eig);
    let a_in_range = spec_a.range_membership(f.linear(), tol.tol_rank)?.member;
    let c_in_range = spec_a.range_membership(&c, tol.tol_rank)?.member;
    let c_nonzero = c.norm() > 0.0;
    let step2 = c_nonzero && a_in_range && c_in_range;
    path.push(DecisionRecord::new(
        "step2",
        "c = -lambda a + b != 0, a in R(A), c in R(A)",
        step2,
        Evidence {
            c: Some(to_vec(&c)),
            eigenvalues: Some(to_vec(&spec_a.eigenvalues)),
            inertia: Some(inertia_a),
            ..Evidence::default()
        },
    ));
    if !step2 {
        return Ok(ConvexityCertificate::convex(swapped, path));
    }

    // Step 3.
    let v = spectral::null_space_basis(&c)?;
    let spec_m = eigh(&compress(a, &v))?;
    let def = spec_m.definiteness(tol.tol_psd);
    let case_a = inertia_a.n_neg == 1 && def.is_psd();
    let case_b = inertia_a.n_pos == 1 && def.is_nsd();
    let sigma = if case_a {
        Some(1i8)
    } else if case_b {
        Some(-1)
    } else {
        None
    };
    path.push(DecisionRecord::new(
        "step3",
        "one negative eigenvalue and V^T A V >= 0, or one positive eigenvalue and V^T A V <= 0",
        sigma.is_some(),
        Evidence {
            inertia: Some(inertia_a),
            compressed_eigenvalues: Some(to_vec(&spec_m.eigenvalues)),
            definiteness: Some(def),
            sigma,
            ..Evidence::default()
        },
    ));
    let Some(sigma) = sigma else {
        return Ok(ConvexityCertificate::convex(swapped, path));
    };

    let (alpha, beta, witness) = build_witness(f, g, lambda, &c, sigma, &tol)?;
    let (levels, witness) = if swapped {
        (
            [beta, alpha],
            NonconvexityWitness {
                m: [witness.m[1], witness.m[0]],
                n: [witness.n[1], witness.n[0]],
                k: [witness.k[1], witness.k[0]],
                axis: LevelAxis::G,
                ..witness
            },
        )
    } else {
        ([alpha, beta], witness)
    };
    Ok(ConvexityCertificate {
        verdict: Verdict::Nonconvex,
        swapped,
        path,
        sigma: Some(sigma),
        lambda: Some(lambda),
        levels: Some(levels),
        witness: Some(witness),
    })
}

/// Levels and an `(M, N, K)` triple for a pair already known to be non-convex.
fn build_witness(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    lambda: f64,
    c: &DVector<f64>,
    sigma: i8,
    tol: &ToleranceSet,
) -> Result<(f64, f64, NonconvexityWitness)> {
    // The hyperplane -lambda f + g = 2 c^T x + c0.
    let normal = c * 2.0;
    let c0 = -lambda * f.constant() + g.constant();
    let levels = exists_separating_affine_levels(f, &normal, c0, tol)?;
    let (Some(gamma), Some(alpha)) = (levels.gamma, levels.alpha) else {
        return Err(Error::Internal("level construction disagrees with the inertia test".into()));
    };
    if levels.sigma != Some(sigma) {
        return Err(Error::Internal(format!(
            "level construction chose branch {:?}, decision chose {sigma}",
            levels.sigma
        )));
    }
    let beta = lambda * alpha + gamma;
    let f_alpha = f.shifted(alpha);
    let h = AffineForm::new(normal, c0 - gamma);
    let report = affine_separates_quadratic(&f_alpha, &h, tol)?;
    if !report.separates {
        return Err(Error::Internal("constructed levels do not separate".into()));
    }
    let sw = construct_separation_witness(&f_alpha, &h, &report, tol)?;
    let u = DVector::from_column_slice(&sw.u);
    let v = DVector::from_column_slice(&sw.v);
    let witness = NonconvexityWitness {
        m: [f.eval_unchecked(&u), g.eval_unchecked(&u)],
        n: [f.eval_unchecked(&v), g.eval_unchecked(&v)],
        k: [alpha, beta],
        u: sw.u,
        v: sw.v,
        axis: LevelAxis::F,
    };
    Ok((alpha, beta, witness))
}

/// Outcome of one (C1)-(C4) condition for one candidate `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbCondition {
    pub candidate: String,
    pub condition: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbReport {
    pub verdict: Verdict,
    /// Certificate `d` in the caller's `(f, g)` order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub swapped: bool,
    pub conditions: Vec<FbCondition>,
}

/// Independent decision through the certificate conditions
/// (C1) `a, b` orthogonal to `N(A) ∩ N(B)`, (C2) `d2 A = d1 B`,
/// (C3) `-d` attained by the homogeneous parts, (C4) the linear parts are
/// transversal to `d` wherever the homogeneous parts hit `-d`.
///
/// Candidates are `d+ = (1, lambda)` then `d- = (-1, -lambda)`.
pub fn check_flores_bazan(p: &ProblemInstance) -> Result<FbReport> {
    let tol = p.tolerances;
    tol.validate()?;
    if p.f.dim() != p.g.dim() {
        return Err(Error::InvalidInstance("f and g live on different spaces".into()));
    }
    let mut conditions = Vec::new();
    let mut note = |candidate: &str, condition: &str, holds: bool, detail: String| {
        conditions.push(FbCondition {
            candidate: candidate.to_string(),
            condition: condition.to_string(),
            holds,
            detail,
        });
    };

    // C2.
    let (na, nb) = (p.f.quad().norm(), p.g.quad().norm());
    let scale = na.max(nb);
    if scale == 0.0 || (na <= tol.tol_dep * scale && nb <= tol.tol_dep * scale) {
        note("any", "C3", false, "homogeneous parts vanish, only d = 0 is attained".into());
        return Ok(FbReport {
            verdict: Verdict::Convex,
            d: None,
            lambda: None,
            swapped: false,
            conditions,
        });
    }
    let swapped = na <= tol.tol_dep * scale;
    let (f, g) = if swapped { (&p.g, &p.f) } else { (&p.f, &p.g) };
    let (a, b) = (f.quad(), g.quad());
    // Householder QR of [vec A, vec B]: |r22| is the distance of B from span(A).
    let stacked = DMatrix::from_fn(a.len(), 2, |i, j| if j == 0 { a[i] } else { b[i] });
    let r = stacked.qr().r();
    // With a single entry the two matrices are always proportional.
    let residual = if r.nrows() > 1 { r[(1, 1)].abs() } else { 0.0 };
    let dependent = residual <= tol.tol_dep * scale;
    note(
        "any",
        "C2",
        dependent,
        format!("distance of B from span(A) = {residual:e}"),
    );
    if !dependent {
        return Ok(FbReport {
            verdict: Verdict::Convex,
            d: None,
            lambda: None,
            swapped,
            conditions,
        });
    }
    let lambda = r[(0, 1)] / r[(0, 0)];

    // C1: projections onto N(A) = N(A) ∩ N(B) vanish.
    let spec = eigh(a)?;
    let kernel = spec.null_space(tol.tol_rank);
    let leak_a = (kernel.transpose() * f.linear()).norm();
    let leak_b = (kernel.transpose() * g.linear()).norm();
    let c1 = leak_a <= tol.tol_rank * f.linear().norm().max(1.0) && leak_b <= tol.tol_rank * g.linear().norm().max(1.0);
    note(
        "any",
        "C1",
        c1,
        format!("kernel components |P a| = {leak_a:e}, |P b| = {leak_b:e}"),
    );

    let inertia = spec.inertia(tol.tol_eig);
    let c = reduced_normal(f.linear(), g.linear(), lambda, tol.tol_rank);
    let kernel_of_c = if c.norm() > 0.0 {
        spectral::null_space_basis(&c)?
    } else {
        DMatrix::identity(c.len(), c.len())
    };
    let restricted = eigh(&compress(a, &kernel_of_c))?.definiteness(tol.tol_psd);

    let mut certificate = None;
    for (name, sign) in [("d+", 1.0), ("d-", -1.0)] {
        // C3: u^T A u = -sign is solvable.
        let c3 = if sign > 0.0 { inertia.n_neg >= 1 } else { inertia.n_pos >= 1 };
        note(name, "C3", c3, format!("inertia of A = {inertia:?}"));
        // C4: no u with c^T u = 0 reaches u^T A u = -sign.
        let transversal = if sign > 0.0 {
            restricted.is_psd()
        } else {
            restricted.is_nsd()
        };
        let single = if sign > 0.0 { inertia.n_neg == 1 } else { inertia.n_pos == 1 };
        let c4 = transversal && single;
        note(
            name,
            "C4",
            c4,
            format!("A restricted to ker(c^T) is {restricted:?}, |c| = {:e}", c.norm()),
        );
        if c1 && c3 && c4 && certificate.is_none() {
            certificate = Some([sign, sign * lambda]);
        }
    }

    let d = certificate.map(|d| if swapped { [d[1], d[0]] } else { d });
    Ok(FbReport {
        verdict: if d.is_some() { Verdict::Nonconvex } else { Verdict::Convex },
        d,
        lambda: Some(lambda),
        swapped,
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub agree: bool,
    pub b_verdict: Verdict,
    pub c_verdict: Verdict,
    /// Both evidence trails, filled only on disagreement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<CrossCheckDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckDiagnostics {
    pub certificate: ConvexityCertificate,
    pub fb_report: FbReport,
}

/// Runs both decision procedures and compares their verdicts.
pub fn cross_check(p: &ProblemInstance) -> Result<CrossCheck> {
    let certificate = check_convexity(p)?;
    let fb_report = check_flores_bazan(p)?;
    let agree = certificate.verdict == fb_report.verdict;
    Ok(CrossCheck {
        agree,
        b_verdict: certificate.verdict,
        c_verdict: fb_report.verdict,
        diagnostics: (!agree).then_some(CrossCheckDiagnostics { certificate, fb_report }),
    })
}

/// Re-export for callers that only need the level-pair test alongside the
/// decision procedures.
pub use separation::level_pair_separation;
