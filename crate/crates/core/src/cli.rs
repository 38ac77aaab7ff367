//! The `qrange` command-line interface.
//!
//! Exit status: 0 on success (the verdict is in the output), 1 on usage
//! errors, 2 on invalid input or unwritable output, 3 when the two decision
//! procedures disagree, 4 when an internal invariant fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::convexity::{check_convexity, check_flores_bazan, cross_check, CrossCheck, Verdict, WitnessCheck};
use crate::curated::{self, CuratedCase};
use crate::error::{Error, Result};
use crate::generate::random_instance;
use crate::quadratic::{ProblemInstance, ToleranceOverrides, ToleranceSet};
use crate::range_oracle::{
    detect_holes, emit_plot_data, sample_range, HoleReport, SampleMode, DEFAULT_BOX, DEFAULT_COVERAGE_RADIUS,
    DEFAULT_RESOLUTION,
};
use crate::report::to_canonical_json;
use crate::separation::level_pair_separation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qrange", version, about = "Convexity of the joint range of two quadratic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide convexity and print the decision path and certificate.
    Check(InputArgs),
    /// Decide convexity through the d-certificate conditions.
    FbCheck(InputArgs),
    /// Run both decision procedures and compare (exit 3 on disagreement).
    CrossCheck(CrossCheckArgs),
    /// Test whether the level sets {f = alpha} and {g = beta} separate each other.
    Separate(SeparateArgs),
    /// Produce and verify a non-convexity witness.
    Witness(InputArgs),
    /// Sample the range, look for holes and write plot data.
    Sample(SampleArgs),
    /// Run the bundled regression cases and print a pass/fail table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TolArgs {
    #[arg(long, value_name = "TOL")]
    pub tol_eig: Option<f64>,
    #[arg(long, value_name = "TOL")]
    pub tol_dep: Option<f64>,
    #[arg(long, value_name = "TOL")]
    pub tol_rank: Option<f64>,
    #[arg(long, value_name = "TOL")]
    pub tol_psd: Option<f64>,
}

impl TolArgs {
    fn overrides(&self) -> ToleranceOverrides {
        ToleranceOverrides {
            tol_eig: self.tol_eig,
            tol_dep: self.tol_dep,
            tol_rank: self.tol_rank,
            tol_psd: self.tol_psd,
            ..ToleranceOverrides::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Problem file (JSON).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CrossCheckArgs {
    /// Problem file; omit together with `--random` to run a generated suite.
    #[arg(long, value_name = "PATH", required_unless_present = "random", conflicts_with = "random")]
    pub input: Option<PathBuf>,
    /// Number of seeded random instances to compare.
    #[arg(long, value_name = "COUNT")]
    pub random: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Samples are drawn from [-box, box]^n.
    #[arg(long = "box", default_value_t = DEFAULT_BOX)]
    pub domain_box: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Coverage radius in cell diagonals.
    #[arg(long, default_value_t = DEFAULT_COVERAGE_RADIUS)]
    pub radius: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub mode: ModeArg,
    /// Sample CSV path; the hull and hole sidecars are written beside it.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Grid,
}

impl From<ModeArg> for SampleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Uniform => SampleMode::UniformRandom,
            ModeArg::Grid => SampleMode::Grid,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    tolerances: ToleranceSet,
    result: T,
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. }
            | Error::AsymmetricInput { .. }
            | Error::InvalidTolerance { .. }
            | Error::InvalidInstance(_)
            | Error::ZeroVector
            | Error::ZeroMatrix
            | Error::OutOfRange { .. }
            | Error::DegenerateCloud
            | Error::Io(_)
            | Error::Json(_) => EXIT_INPUT,
            Error::ConvergenceFailure { .. }
            | Error::InvalidReport(_)
            | Error::RootFailure(_)
            | Error::NotReducible { .. }
            | Error::Internal(_) => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Result of running one command: the rendered report and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
}

fn load(path: &Path, tol: &TolArgs) -> Result<ProblemInstance> {
    let mut p = ProblemInstance::load(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidInstance(format!("cannot read {}: {io}", path.display())),
        other => other,
    })?;
    p.tolerances = p.tolerances.with_overrides(&tol.overrides());
    p.tolerances.validate()?;
    Ok(p)
}

fn render<T: Serialize>(
    command: &str,
    input: Option<&Path>,
    tolerances: ToleranceSet,
    result: &T,
    format: Format,
    text: impl FnOnce(&mut String),
) -> Result<String> {
    match format {
        Format::Json => {
            let env = Envelope {
                command,
                input: input.map(|p| p.display().to_string()),
                tolerances,
                result,
            };
            let mut s = to_canonical_json(&env)?;
            s.push('\n');
            Ok(s)
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "command: {command}");
            if let Some(p) = input {
                let _ = writeln!(s, "input: {}", p.display());
            }
            let t = tolerances;
            let _ = writeln!(
                s,
                "tolerances: sym={:e} dep={:e} eig={:e} rank={:e} psd={:e} residual={:e}",
                t.tol_sym, t.tol_dep, t.tol_eig, t.tol_rank, t.tol_psd, t.tol_residual
            );
            text(&mut s);
            Ok(s)
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", items.join(", "))
}

#[derive(Serialize)]
struct WitnessOutput {
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<crate::convexity::NonconvexityWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<WitnessCheck>,
}

#[derive(Serialize)]
struct SampleOutput {
    count: usize,
    domain_box: f64,
    seed: u64,
    mode: SampleMode,
    degenerate_cloud: bool,
    suspected_nonconvex: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    holes: Option<HoleReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    files: Vec<String>,
}

#[derive(Serialize)]
struct SuiteOutput {
    seed: u64,
    instances: u64,
    agreements: u64,
    nonconvex: u64,
    disagreements: Vec<SuiteDisagreement>,
}

#[derive(Serialize)]
struct SuiteDisagreement {
    index: u64,
    report: CrossCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceRow {
    pub case: String,
    pub check: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

fn row(case: &str, check: &str, expected: String, observed: String, pass: bool) -> ReproduceRow {
    ReproduceRow {
        case: case.to_string(),
        check: check.to_string(),
        expected,
        observed,
        pass,
    }
}

/// Evaluates one bundled case; every failure becomes a failing row.
pub fn reproduce_case(c: &CuratedCase, tol: ToleranceSet, samples: usize, seed: u64, resolution: usize) -> Vec<ReproduceRow> {
    let mut rows = Vec::new();
    let mut p = c.instance();
    p.tolerances = tol;
    let name = c.name;
    match check_convexity(&p) {
        Ok(cert) => {
            rows.push(row(
                name,
                "verdict",
                c.verdict.to_string(),
                cert.verdict.to_string(),
                cert.verdict == c.verdict,
            ));
            if let Some(want) = c.lambda.filter(|_| c.verdict == Verdict::Nonconvex) {
                let got = cert.lambda;
                let pass = got.is_some_and(|l| (l - want).abs() <= 1e-12 * want.abs().max(1.0));
                rows.push(row(name, "lambda", format!("{want}"), format!("{got:?}"), pass));
            }
            if cert.verdict == Verdict::Nonconvex {
                let (observed, pass) = match cert.witness.as_ref().map(|w| w.verify(&p)) {
                    Some(Ok(check)) => (if check.valid { "valid" } else { "invalid" }.to_string(), check.valid),
                    Some(Err(e)) => (e.to_string(), false),
                    None => ("missing".to_string(), false),
                };
                rows.push(row(name, "witness", "valid".into(), observed, pass));
            }
        }
        Err(e) => rows.push(row(name, "verdict", c.verdict.to_string(), e.to_string(), false)),
    }
    match cross_check(&p) {
        Ok(r) => rows.push(row(
            name,
            "cross-check",
            "agree".into(),
            if r.agree { "agree" } else { "disagree" }.into(),
            r.agree,
        )),
        Err(e) => rows.push(row(name, "cross-check", "agree".into(), e.to_string(), false)),
    }
    for s in c.separations {
        let label = format!("separate({}, {})", s.alpha, s.beta);
        let expected = format!("g|f={} f|g={}", s.g_separates_f, s.f_separates_g);
        match level_pair_separation(&p.f, &p.g, s.alpha, s.beta, &p.tolerances) {
            Ok(r) => {
                let observed = format!("g|f={} f|g={}", r.g_separates_f, r.f_separates_g);
                let pass = r.g_separates_f == s.g_separates_f && r.f_separates_g == s.f_separates_g;
                rows.push(row(name, &label, expected, observed, pass));
            }
            Err(e) => rows.push(row(name, &label, expected, e.to_string(), false)),
        }
    }
    let suspected = sample_range(&p, c.sample_box, samples, seed, SampleMode::UniformRandom)
        .and_then(|s| detect_holes(&s, resolution, DEFAULT_COVERAGE_RADIUS))
        .map(|h| h.suspected_nonconvex);
    let observed = match &suspected {
        Ok(true) => "holes".to_string(),
        Ok(false) => "no holes".to_string(),
        Err(Error::DegenerateCloud) => "degenerate cloud".to_string(),
        Err(e) => e.to_string(),
    };
    let want = c.verdict == Verdict::Nonconvex;
    let pass = match suspected {
        Ok(s) => s == want,
        Err(Error::DegenerateCloud) => !want,
        Err(_) => false,
    };
    rows.push(row(
        name,
        "sampling oracle",
        if want { "holes" } else { "no holes" }.into(),
        observed,
        pass,
    ));
    rows
}

fn reproduce_rows(args: &ReproduceArgs, tol: ToleranceSet) -> Vec<ReproduceRow> {
    let run = |c: &CuratedCase| reproduce_case(c, tol, args.samples, args.seed, args.resolution);
    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<ReproduceRow>> = {
        use rayon::prelude::*;
        curated::CASES.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<ReproduceRow>> = curated::CASES.iter().map(run).collect();
    nested.into_iter().flatten().collect()
}

fn run_suite(count: u64, seed: u64, tol: &TolArgs) -> Result<SuiteOutput> {
    let one = |i: u64| -> Result<(u64, CrossCheck)> {
        let (_, mut p) = random_instance(seed, i);
        p.tolerances = p.tolerances.with_overrides(&tol.overrides());
        p.tolerances.validate()?;
        Ok((i, cross_check(&p)?))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(u64, CrossCheck)>> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(u64, CrossCheck)>> = (0..count).map(one).collect();
    let mut out = SuiteOutput {
        seed,
        instances: count,
        agreements: 0,
        nonconvex: 0,
        disagreements: Vec::new(),
    };
    for r in results {
        let (index, report) = r?;
        if report.b_verdict == Verdict::Nonconvex {
            out.nonconvex += 1;
        }
        if report.agree {
            out.agreements += 1;
        } else {
            out.disagreements.push(SuiteDisagreement { index, report });
        }
    }
    Ok(out)
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> std::result::Result<Outcome, Failure> {
    let (out, text, code) = match &cli.command {
        Command::Check(a) => {
            let p = load(&a.input, &a.tol)?;
            let cert = check_convexity(&p)?;
            let text = render("check", Some(&a.input), p.tolerances, &cert, a.out.format, |s| {
                let _ = writeln!(s, "verdict: {}", cert.verdict);
                if cert.swapped {
                    let _ = writeln!(s, "swapped: f and g exchanged internally");
                }
                for r in &cert.path {
                    let _ = writeln!(s, "  {} [{}] {}", r.step, if r.outcome { "yes" } else { "no" }, r.condition);
                }
                if let (Some(l), Some(sig), Some(lv)) = (cert.lambda, cert.sigma, cert.levels) {
                    let _ = writeln!(s, "lambda: {l}\nsigma: {sig}\nlevels: {}", fmt_vec(&lv));
                }
                if let Some(w) = &cert.witness {
                    let _ = writeln!(s, "M = {}  N = {}  K = {}", fmt_vec(&w.m), fmt_vec(&w.n), fmt_vec(&w.k));
                }
            })?;
            (&a.out, text, EXIT_OK)
        }
        Command::FbCheck(a) => {
            let p = load(&a.input, &a.tol)?;
            let fb = check_flores_bazan(&p)?;
            let text = render("fb-check", Some(&a.input), p.tolerances, &fb, a.out.format, |s| {
                let _ = writeln!(s, "verdict: {}", fb.verdict);
                if let Some(d) = fb.d {
                    let _ = writeln!(s, "d: {}", fmt_vec(&d));
                }
                for c in &fb.conditions {
                    let _ = writeln!(s, "  {} {} {}: {}", c.candidate, c.condition, if c.holds { "holds" } else { "fails" }, c.detail);
                }
            })?;
            (&a.out, text, EXIT_OK)
        }
        Command::CrossCheck(a) => {
            if let Some(count) = a.random {
                let suite = run_suite(count, a.seed, &a.tol)?;
                let code = if suite.disagreements.is_empty() { EXIT_OK } else { EXIT_DISAGREE };
                let tol = ToleranceSet::default().with_overrides(&a.tol.overrides());
                let text = render("cross-check", None, tol, &suite, a.out.format, |s| {
                    let _ = writeln!(
                        s,
                        "instances: {}  agreements: {}  nonconvex: {}",
                        suite.instances, suite.agreements, suite.nonconvex
                    );
                    for d in &suite.disagreements {
                        let _ = writeln!(s, "  disagreement at index {}", d.index);
                    }
                })?;
                (&a.out, text, code)
            } else {
                let input = a.input.as_ref().expect("clap enforces --input");
                let p = load(input, &a.tol)?;
                let r = cross_check(&p)?;
                let code = if r.agree { EXIT_OK } else { EXIT_DISAGREE };
                let text = render("cross-check", Some(input), p.tolerances, &r, a.out.format, |s| {
                    let _ = writeln!(s, "check: {}\nfb-check: {}\nagree: {}", r.b_verdict, r.c_verdict, r.agree);
                })?;
                (&a.out, text, code)
            }
        }
        Command::Separate(a) => {
            let p = load(&a.input, &a.tol)?;
            let r = level_pair_separation(&p.f, &p.g, a.alpha, a.beta, &p.tolerances)?;
            let text = render("separate", Some(&a.input), p.tolerances, &r, a.out.format, |s| {
                let _ = writeln!(s, "alpha: {}  beta: {}", r.alpha, r.beta);
                let _ = writeln!(s, "{{g = beta}} separates {{f = alpha}}: {}", r.g_separates_f);
                let _ = writeln!(s, "{{f = alpha}} separates {{g = beta}}: {}", r.f_separates_g);
            })?;
            (&a.out, text, EXIT_OK)
        }
        Command::Witness(a) => {
            let p = load(&a.input, &a.tol)?;
            let cert = check_convexity(&p)?;
            let verification = cert.witness.as_ref().map(|w| w.verify(&p)).transpose()?;
            if verification.as_ref().is_some_and(|v| !v.valid) {
                return Err(Error::Internal("constructed witness fails verification".into()).into());
            }
            let result = WitnessOutput {
                verdict: cert.verdict,
                levels: cert.levels,
                witness: cert.witness,
                verification,
            };
            let text = render("witness", Some(&a.input), p.tolerances, &result, a.out.format, |s| {
                let _ = writeln!(s, "verdict: {}", result.verdict);
                match (&result.witness, &result.verification) {
                    (Some(w), Some(v)) => {
                        let _ = writeln!(s, "u = {}\nv = {}", fmt_vec(&w.u), fmt_vec(&w.v));
                        let _ = writeln!(s, "M = {}  N = {}  K = {}", fmt_vec(&w.m), fmt_vec(&w.n), fmt_vec(&w.k));
                        let _ = writeln!(
                            s,
                            "level residuals {:e} {:e} (bound {:e}), sign product {:e}, K at t = {}",
                            v.level_residual_u, v.level_residual_v, v.level_bound, v.sign_product, v.segment_parameter
                        );
                    }
                    _ => {
                        let _ = writeln!(s, "no witness: the range is convex");
                    }
                }
            })?;
            (&a.out, text, EXIT_OK)
        }
        Command::Sample(a) => {
            let p = load(&a.input, &a.tol)?;
            let sample = sample_range(&p, a.domain_box, a.samples, a.seed, a.mode.into())?;
            let (holes, degenerate) = match detect_holes(&sample, a.resolution, a.radius) {
                Ok(h) => (Some(h), false),
                Err(Error::DegenerateCloud) => (None, true),
                Err(e) => return Err(e.into()),
            };
            let mut files = Vec::new();
            if let Some(csv) = &a.csv {
                let empty;
                let report = match &holes {
                    Some(h) => h,
                    None => {
                        empty = degenerate_report(a.resolution, a.radius);
                        &empty
                    }
                };
                files = emit_plot_data(&sample, report, csv)?
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect();
            }
            let result = SampleOutput {
                count: sample.count,
                domain_box: sample.domain_box,
                seed: sample.seed,
                mode: sample.mode,
                degenerate_cloud: degenerate,
                suspected_nonconvex: holes.as_ref().is_some_and(|h| h.suspected_nonconvex),
                holes,
                files,
            };
            let text = render("sample", Some(&a.input), p.tolerances, &result, a.out.format, |s| {
                let _ = writeln!(s, "samples: {} in [-{}, {}]^{}", result.count, result.domain_box, result.domain_box, p.dim());
                let _ = writeln!(s, "suspected non-convex: {}", result.suspected_nonconvex);
                if let Some(h) = &result.holes {
                    let _ = writeln!(s, "hole cells: {}  largest cluster: {}", h.hole_cells.len(), h.largest_cluster);
                }
                if result.degenerate_cloud {
                    let _ = writeln!(s, "cloud is degenerate (no interior)");
                }
                for f in &result.files {
                    let _ = writeln!(s, "wrote {f}");
                }
            })?;
            (&a.out, text, EXIT_OK)
        }
        Command::Reproduce(a) => {
            let tol = ToleranceSet::default().with_overrides(&a.tol.overrides());
            tol.validate()?;
            let rows = reproduce_rows(a, tol);
            let all = rows.iter().all(|r| r.pass);
            let text = render("reproduce", None, tol, &rows, a.out.format, |s| {
                let w = rows.iter().map(|r| r.case.len()).max().unwrap_or(4);
                let wc = rows.iter().map(|r| r.check.len()).max().unwrap_or(5);
                for r in &rows {
                    let _ = writeln!(
                        s,
                        "{:<w$}  {:<wc$}  {}  expected {}, observed {}",
                        r.case,
                        r.check,
                        if r.pass { "PASS" } else { "FAIL" },
                        r.expected,
                        r.observed
                    );
                }
                let _ = writeln!(s, "{}", if all { "all rows PASS" } else { "some rows FAIL" });
            })?;
            (&a.out, text, if all { EXIT_OK } else { EXIT_INTERNAL })
        }
    };
    match &out.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure {
                code: EXIT_INPUT,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            Ok(Outcome { code, text: String::new() })
        }
        None => Ok(Outcome { code, text }),
    }
}

fn degenerate_report(resolution: usize, coverage_radius: f64) -> HoleReport {
    HoleReport {
        suspected_nonconvex: false,
        hole_cells: Vec::new(),
        hull_vertices: Vec::new(),
        resolution,
        coverage_radius,
        largest_cluster: 0,
        frame: crate::range_oracle::Frame {
            origin: [0.0, 0.0],
            extent: [1.0, 1.0],
        },
    }
}

fn configure_threads() -> std::result::Result<(), Failure> {
    let Ok(raw) = std::env::var("QRANGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        code: EXIT_USAGE,
        message: format!("QRANGE_THREADS must be a positive integer, got `{raw}`"),
    })?;
    #[cfg(feature = "parallel")]
    {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Reports go to standard output, diagnostics to standard
/// error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.text);
            outcome.code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
