use qrange::convexity::{check_convexity, Verdict};
use qrange::curated;
use qrange::range_oracle::{detect_holes, sample_range, SampleMode, DEFAULT_COVERAGE_RADIUS};

#[test]
fn emitted_points_match_regeneration() {
    for name in ["saddle_pair", "four_dim_pencil"] {
        let case = curated::case(name).unwrap();
        let p = case.instance();
        for mode in [SampleMode::UniformRandom, SampleMode::Grid] {
            let s = sample_range(&p, case.sample_box, 20_000, 3, mode).unwrap();
            for i in (0..s.count).step_by(20).take(1000) {
                assert_eq!(s.regenerate(&p, i).unwrap(), s.points[i], "{name} {mode:?} {i}");
            }
        }
    }
}

#[test]
fn oracle_matches_verdict_on_curated_suite() {
    for name in ["saddle_pair", "rotated_saddle", "four_dim_pencil", "half_plane", "shifted_hyperbolas"] {
        let case = curated::case(name).unwrap();
        let p = case.instance();
        let s = sample_range(&p, case.sample_box, 100_000, 11, SampleMode::UniformRandom).unwrap();
        let h = detect_holes(&s, 200, DEFAULT_COVERAGE_RADIUS).unwrap();
        let nonconvex = check_convexity(&p).unwrap().verdict == Verdict::Nonconvex;
        assert_eq!(h.suspected_nonconvex, nonconvex, "{name}");
    }
}

#[test]
fn witness_point_sits_in_an_empty_part_of_the_hull() {
    for case in curated::CASES {
        let p = case.instance();
        let cert = check_convexity(&p).unwrap();
        let Some(levels) = cert.levels else { continue };
        let s = sample_range(&p, case.sample_box, 100_000, 5, SampleMode::UniformRandom).unwrap();
        let h = detect_holes(&s, 200, DEFAULT_COVERAGE_RADIUS).unwrap();
        assert!(h.hull_contains(levels), "{}: K outside the hull", case.name);
        let clearance = h.clearance(&s, levels);
        assert!(clearance > DEFAULT_COVERAGE_RADIUS / 2.0, "{}: clearance {clearance}", case.name);
    }
}

#[test]
fn regeneration_is_bit_identical_across_runs() {
    let p = curated::rotated_saddle();
    let a = sample_range(&p, 5.0, 50_000, 99, SampleMode::UniformRandom).unwrap();
    let b = sample_range(&p, 5.0, 50_000, 99, SampleMode::UniformRandom).unwrap();
    assert!(a.points.iter().zip(&b.points).all(|(x, y)| x[0].to_bits() == y[0].to_bits() && x[1].to_bits() == y[1].to_bits()));
}
