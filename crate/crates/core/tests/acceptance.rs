//! Acceptance criteria. Runs as a plain binary so every criterion prints
//! exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qrange::convexity::{check_convexity, check_flores_bazan, LevelAxis, NonconvexityWitness, Verdict};
use qrange::curated;
use qrange::generate::{random_instance, random_invertible};
use qrange::quadratic::{ProblemInstance, QuadraticFunction};
use qrange::range_oracle::{detect_holes, sample_range, SampleMode};
use qrange::separation::{affine_separates_quadratic, level_pair_separation, AffineForm};
use qrange::spectral::{eigh, null_space_basis, Definiteness};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

/// Checks a witness directly against the instance with the stated bounds.
fn witness_ok(p: &ProblemInstance, w: &NonconvexityWitness, levels: [f64; 2]) -> Result<(), String> {
    let u = DVector::from_column_slice(&w.u);
    let v = DVector::from_column_slice(&w.v);
    let (fu, gu, fv, gv) = (
        p.f.evaluate(&u).unwrap(),
        p.g.evaluate(&u).unwrap(),
        p.f.evaluate(&v).unwrap(),
        p.g.evaluate(&v).unwrap(),
    );
    let [alpha, beta] = levels;
    ensure(w.k == levels, format!("K {:?} differs from the levels {levels:?}", w.k))?;
    // The split level set is f's unless f and g were exchanged internally.
    let (lu, lv, level, su, sv, other) = match w.axis {
        LevelAxis::F => (fu, fv, alpha, gu, gv, beta),
        LevelAxis::G => (gu, gv, beta, fu, fv, alpha),
    };
    let bound = 1e-7 * level.abs().max(1.0);
    ensure(
        (lu - level).abs() <= bound && (lv - level).abs() <= bound,
        format!("level residuals {:e} {:e} exceed {bound:e}", lu - level, lv - level),
    )?;
    ensure((su - other) * (sv - other) < 0.0, "no sign change across the level pair")?;
    let (m, n) = ([fu, gu], [fv, gv]);
    let d = [n[0] - m[0], n[1] - m[1]];
    let r = [alpha - m[0], beta - m[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (r[0] * d[0] + r[1] * d[1]) / len2;
    let off = (d[0] * r[1] - d[1] * r[0]).abs() / len2.sqrt();
    ensure(
        t > 0.0 && t < 1.0 && off <= 1e-7 * alpha.abs().max(beta.abs()).max(1.0),
        format!("K not strictly inside MN: t = {t}, offset = {off:e}"),
    )
}

fn nonconvex_with_witness(p: &ProblemInstance) -> Result<f64, String> {
    let cert = check_convexity(p).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Nonconvex, format!("verdict {}", cert.verdict))?;
    witness_ok(p, cert.witness.as_ref().ok_or("missing witness")?, cert.levels.ok_or("missing levels")?)?;
    Ok(cert.lambda.ok_or("missing lambda")?)
}

fn criterion_1() -> Outcome {
    let p = curated::saddle_pair();
    let (cert, dt) = timed(|| check_convexity(&p).unwrap());
    ensure(cert.verdict == Verdict::Nonconvex, format!("verdict {}", cert.verdict))?;
    let lambda = cert.lambda.ok_or("no lambda")?;
    ensure((lambda - 2.0).abs() <= 1e-12, format!("lambda = {lambda}"))?;
    ensure(dt < Duration::from_millis(100), format!("took {dt:?}"))?;
    Ok(format!("NONCONVEX, lambda = {lambda}, {dt:?}"))
}

fn criterion_2() -> Outcome {
    let p = curated::four_dim_pencil();
    let cert = check_convexity(&p).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Nonconvex, format!("verdict {}", cert.verdict))?;
    let a = p.f.quad();
    let eig = eigh(a).unwrap().eigenvalues;
    for (got, want) in eig.iter().zip([-1.0, 0.0, 1.0, 1.0]) {
        ensure((got - want).abs() <= 1e-9, format!("eigenvalues of A {eig:?}"))?;
    }

    // Basis-invariant facts with the implementation's own orthonormal V.
    let lambda = cert.lambda.unwrap();
    let c = p.g.linear() - p.f.linear() * lambda;
    let v = null_space_basis(&c).unwrap();
    let s = eigh(&(v.transpose() * a * &v)).unwrap();
    ensure(s.definiteness(1e-9) == Definiteness::Psd, "V^T A V is not PSD")?;
    ensure(s.inertia(1e-9).rank() == 2, format!("rank of V^T A V is {}", s.inertia(1e-9).rank()))?;
    let step3 = cert.path.iter().find(|r| r.step == "step3").ok_or("no step3 record")?;
    ensure(step3.evidence.definiteness == Some(Definiteness::Psd), "certificate does not record PSD")?;

    // The printed basis, used verbatim, gives the printed spectrum.
    let r = 1.0 / 2f64.sqrt();
    let printed = DMatrix::from_row_slice(4, 3, &[r, -4.0, r, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    ensure((c.transpose() * &printed).norm() <= 1e-12, "printed basis is not orthogonal to c")?;
    let ps = eigh(&(printed.transpose() * a * &printed)).unwrap().eigenvalues;
    let sq = 53f64.sqrt();
    for (got, want) in ps.iter().zip([0.0, (9.0 - sq) / 2.0, (9.0 + sq) / 2.0]) {
        ensure((got - want).abs() <= 1e-9, format!("printed-basis spectrum {ps:?}"))?;
    }
    Ok(format!("NONCONVEX, eig(A) = {:?}, V^T A V PSD rank 2", eig.as_slice()))
}

fn criterion_3() -> Outcome {
    let cert = check_convexity(&curated::half_plane()).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Convex, format!("verdict {}", cert.verdict))?;
    let last = cert.path.last().ok_or("empty path")?;
    ensure(last.step == "step1" && !last.outcome, format!("decided at {} ({})", last.step, last.condition))?;
    Ok("CONVEX at the pencil step".into())
}

fn criterion_4() -> Outcome {
    let p = curated::rotated_saddle();
    let lambda = nonconvex_with_witness(&p)?;
    let r = level_pair_separation(&p.f, &p.g, -4.0, 2.0, &p.tolerances).map_err(|e| e.to_string())?;
    ensure(r.g_separates_f && r.f_separates_g, format!("g|f = {}, f|g = {}", r.g_separates_f, r.f_separates_g))?;
    Ok(format!("NONCONVEX (lambda = {lambda:.12}), mutual separation at (-4, 2)"))
}

fn criterion_5() -> Outcome {
    let tol = Default::default();
    let no_sep_hyperbola = QuadraticFunction::from_rows(&[&[-1.0, 0.0], &[0.0, 4.0]], &[0.0, 0.0], 0.0).unwrap();
    let sep_hyperbola = QuadraticFunction::from_rows(&[&[-1.0, 0.0], &[0.0, 4.0]], &[0.0, 0.0], -1.0).unwrap();
    let mut slowest = Duration::ZERO;
    let (r, dt) = timed(|| affine_separates_quadratic(&no_sep_hyperbola, &AffineForm::from_slice(&[2.0, -1.0], 0.0), &tol).unwrap());
    slowest = slowest.max(dt);
    ensure(!r.separates, "2x - y separates -x^2 + 4y^2")?;
    let (r, dt) = timed(|| affine_separates_quadratic(&sep_hyperbola, &AffineForm::from_slice(&[1.0, -5.0], 0.0), &tol).unwrap());
    slowest = slowest.max(dt);
    ensure(r.separates, "x - 5y does not separate -x^2 + 4y^2 - 1")?;
    let p = curated::shifted_hyperbolas();
    let (r, dt) = timed(|| level_pair_separation(&p.f, &p.g, 0.0, 0.0, &p.tolerances).unwrap());
    slowest = slowest.max(dt);
    ensure(r.g_separates_f, "no separation at (0, 0)")?;
    let (r, dt) = timed(|| level_pair_separation(&p.f, &p.g, 2.0, 0.0, &p.tolerances).unwrap());
    slowest = slowest.max(dt);
    ensure(!r.g_separates_f && !r.f_separates_g, "separation reported at (2, 0)")?;
    ensure(slowest < Duration::from_millis(100), format!("slowest query {slowest:?}"))?;
    Ok(format!("4/4 verdicts, slowest {slowest:?}"))
}

const SUITE_SEED: u64 = 20_240_601;

fn criterion_6() -> Outcome {
    let (result, dt) = timed(|| {
        let mut agree = 0;
        let mut nonconvex = 0;
        for i in 0..500 {
            let (_, p) = random_instance(SUITE_SEED, i);
            let b = check_convexity(&p).map_err(|e| format!("instance {i}: {e}"))?;
            let c = check_flores_bazan(&p).map_err(|e| format!("instance {i}: {e}"))?;
            if b.verdict == c.verdict {
                agree += 1;
            }
            if b.verdict == Verdict::Nonconvex {
                nonconvex += 1;
            }
        }
        Ok::<_, String>((agree, nonconvex))
    });
    let (agree, nonconvex) = result?;
    ensure(agree == 500, format!("{agree}/500 agree"))?;
    ensure(dt < Duration::from_secs(10), format!("took {dt:?}"))?;
    Ok(format!("500/500 agree ({nonconvex} non-convex), {dt:?}"))
}

fn criterion_7() -> Outcome {
    let mut checked = 0;
    let mut curated_cases = vec![
        ("saddle_pair", curated::saddle_pair()),
        ("four_dim_pencil", curated::four_dim_pencil()),
        ("rotated_saddle", curated::rotated_saddle()),
        ("no_sep_hyperbola", curated::affine_no_separation()),
        ("sep_hyperbola", curated::affine_separation()),
        ("shifted_pair", curated::shifted_hyperbolas()),
    ];
    curated_cases.push(("sep_hyperbola swapped", curated::affine_separation().swapped()));
    for (name, p) in &curated_cases {
        nonconvex_with_witness(p).map_err(|e| format!("{name}: {e}"))?;
        checked += 1;
    }
    for i in 0..500 {
        let (_, p) = random_instance(SUITE_SEED, i);
        let cert = check_convexity(&p).map_err(|e| e.to_string())?;
        if cert.verdict == Verdict::Nonconvex {
            witness_ok(&p, cert.witness.as_ref().unwrap(), cert.levels.unwrap()).map_err(|e| format!("random {i}: {e}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} witnesses valid"))
}

fn nonzero(rng: &mut ChaCha8Rng, r: f64) -> f64 {
    loop {
        let s: f64 = rng.gen_range(-r..r);
        if s.abs() > 1e-3 {
            return s;
        }
    }
}

fn verdict(p: &ProblemInstance) -> Verdict {
    check_convexity(p).unwrap().verdict
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut transforms = 0;
    for case in curated::CASES {
        let p = case.instance();
        let base = verdict(&p);
        let n = p.dim();
        for k in 0..50 {
            let t = random_invertible(&mut rng, n);
            let q = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let sub = ProblemInstance::with_defaults(p.f.substitute(&t, &q).unwrap(), p.g.substitute(&t, &q).unwrap()).unwrap();
            ensure(verdict(&sub) == base, format!("{}: substitution {k} changes the verdict", case.name))?;

            let (s, tt) = (nonzero(&mut rng, 10.0), nonzero(&mut rng, 10.0));
            let scaled = ProblemInstance::with_defaults(p.f.scaled(s), p.g.scaled(tt)).unwrap();
            ensure(verdict(&scaled) == base, format!("{}: scaling ({s}, {tt}) changes the verdict", case.name))?;

            let (c1, c2) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let shifted = ProblemInstance::with_defaults(p.f.shifted(c1), p.g.shifted(c2)).unwrap();
            ensure(verdict(&shifted) == base, format!("{}: shift ({c1}, {c2}) changes the verdict", case.name))?;
            transforms += 3;
        }
        ensure(verdict(&p.swapped()) == base, format!("{}: swap changes the verdict", case.name))?;
        transforms += 1;
    }
    Ok(format!("{transforms} transformed instances keep their verdict"))
}

fn criterion_9() -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut lines = Vec::new();
    for name in ["saddle_pair", "rotated_saddle", "four_dim_pencil", "half_plane"] {
        let case = curated::case(name).unwrap();
        let p = case.instance();
        let want = verdict(&p) == Verdict::Nonconvex;
        let (h, dt) = timed(|| {
            let s = sample_range(&p, case.sample_box, 100_000, 1, SampleMode::UniformRandom).unwrap();
            detect_holes(&s, 200, 2.0).unwrap()
        });
        slowest = slowest.max(dt);
        ensure(
            h.suspected_nonconvex == want,
            format!("{name}: oracle says {}, analytic verdict {}", h.suspected_nonconvex, want),
        )?;
        ensure(dt < Duration::from_secs(5), format!("{name}: took {dt:?}"))?;
        lines.push(format!("{name}={}", h.largest_cluster));
    }
    Ok(format!("4/4 agree (largest hole clusters {}), slowest {slowest:?}", lines.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("saddle pair regression", criterion_1),
        ("four-dimensional pencil regression", criterion_2),
        ("half-plane regression", criterion_3),
        ("rotated saddle regression", criterion_4),
        ("separation suite", criterion_5),
        ("differential suite", criterion_6),
        ("witness suite", criterion_7),
        ("invariance suite", criterion_8),
        ("sampling corroboration", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
