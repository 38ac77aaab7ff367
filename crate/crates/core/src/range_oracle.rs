//! Empirical view of the joint range: sampling, hull-hole analysis and CSV
//! export.
//!
//! The hole detector is a heuristic. It misses holes that lie outside the
//! image of the sampling box and can report spurious ones where the sampling
//! density of the image is very uneven. It is used to corroborate the exact
//! decision, never to replace it.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::rng_for;
use crate::quadratic::ProblemInstance;

pub const DEFAULT_BOX: f64 = 5.0;
pub const DEFAULT_RESOLUTION: usize = 200;
/// Coverage radius in cell diagonals.
pub const DEFAULT_COVERAGE_RADIUS: f64 = 2.0;
/// Smallest 4-connected cluster of hole cells that counts as a hole.
pub const DEFAULT_MIN_CLUSTER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SampleMode {
    UniformRandom,
    Grid,
}

impl std::str::FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" | "uniform_random" => Ok(SampleMode::UniformRandom),
            "grid" => Ok(SampleMode::Grid),
            other => Err(format!("unknown sampling mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSample {
    pub points: Vec<[f64; 2]>,
    pub domain_box: f64,
    pub count: usize,
    pub seed: u64,
    pub mode: SampleMode,
    /// Marks samples whose argument lies in the inner half-box
    /// `[-box/2, box/2]^n`. Empty means every sample counts as core.
    #[serde(skip)]
    pub core: Vec<bool>,
}

/// Draws the argument `x` behind sample `index`.
///
/// Uniform samples come from a ChaCha stream keyed by `(seed, index)`, so any
/// subset of the cloud can be regenerated independently. Grid samples use
/// `k = ceil(count^(1/n))` nodes per axis and take `count` evenly spaced nodes
/// of the full grid in lexicographic order.
pub fn sample_argument(n: usize, domain_box: f64, count: usize, seed: u64, mode: SampleMode, index: usize) -> Result<DVector<f64>> {
    if index >= count {
        return Err(Error::InvalidInstance(format!("sample index {index} out of {count}")));
    }
    match mode {
        SampleMode::UniformRandom => {
            let mut rng = rng_for(seed, index as u64);
            Ok(DVector::from_fn(n, |_, _| rng.gen_range(-domain_box..=domain_box)))
        }
        SampleMode::Grid => {
            let k = grid_side(n, count);
            let total = (k as u128).pow(n as u32);
            let mut node = (index as u128 * total) / count as u128;
            let mut x = DVector::zeros(n);
            for axis in (0..n).rev() {
                let j = (node % k as u128) as f64;
                node /= k as u128;
                x[axis] = if k == 1 {
                    0.0
                } else {
                    -domain_box + 2.0 * domain_box * j / (k - 1) as f64
                };
            }
            Ok(x)
        }
    }
}

fn grid_side(n: usize, count: usize) -> usize {
    let mut k = (count as f64).powf(1.0 / n as f64).round().max(1.0) as usize;
    let reaches = |k: usize| (k as u128).checked_pow(n as u32).is_none_or(|t| t >= count as u128);
    while !reaches(k) {
        k += 1;
    }
    while k > 1 && reaches(k - 1) {
        k -= 1;
    }
    k
}

fn check_sampling(domain_box: f64, count: usize, n: usize, mode: SampleMode) -> Result<()> {
    if !(domain_box.is_finite() && domain_box > 0.0) {
        return Err(Error::InvalidInstance(format!("sampling box must be positive, got {domain_box}")));
    }
    if count == 0 {
        return Err(Error::InvalidInstance("sample count must be at least 1".into()));
    }
    if mode == SampleMode::Grid && (grid_side(n, count) as u128).checked_pow(n as u32).is_none() {
        return Err(Error::InvalidInstance("grid too large".into()));
    }
    Ok(())
}

/// Samples `count` points `(f(x), g(x))` with `x` in `[-box, box]^n`.
pub fn sample_range(p: &ProblemInstance, domain_box: f64, count: usize, seed: u64, mode: SampleMode) -> Result<RangeSample> {
    let n = p.dim();
    check_sampling(domain_box, count, n, mode)?;
    let point = |i: usize| -> ([f64; 2], bool) {
        let x = sample_argument(n, domain_box, count, seed, mode, i).expect("index in range");
        let core = x.amax() <= 0.5 * domain_box;
        ([p.f.eval_unchecked(&x), p.g.eval_unchecked(&x)], core)
    };
    #[cfg(feature = "parallel")]
    let (points, core) = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(point).unzip()
    };
    #[cfg(not(feature = "parallel"))]
    let (points, core) = (0..count).map(point).unzip();
    Ok(RangeSample {
        points,
        domain_box,
        count,
        seed,
        mode,
        core,
    })
}

impl RangeSample {
    /// Recomputes sample `index` from the instance.
    pub fn regenerate(&self, p: &ProblemInstance, index: usize) -> Result<[f64; 2]> {
        let x = sample_argument(p.dim(), self.domain_box, self.count, self.seed, self.mode, index)?;
        Ok([p.f.evaluate(&x)?, p.g.evaluate(&x)?])
    }
}

/// Affine map from the cloud's bounding box onto the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

impl Frame {
    pub fn to_unit(&self, p: [f64; 2]) -> [f64; 2] {
        [(p[0] - self.origin[0]) / self.extent[0], (p[1] - self.origin[1]) / self.extent[1]]
    }

    pub fn from_unit(&self, p: [f64; 2]) -> [f64; 2] {
        [self.origin[0] + p[0] * self.extent[0], self.origin[1] + p[1] * self.extent[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleReport {
    pub suspected_nonconvex: bool,
    /// Centers of uncovered interior cells, in range coordinates.
    pub hole_cells: Vec<[f64; 2]>,
    /// Counter-clockwise hull, in range coordinates.
    pub hull_vertices: Vec<[f64; 2]>,
    pub resolution: usize,
    /// Coverage radius in cell diagonals of the normalized grid.
    pub coverage_radius: f64,
    pub largest_cluster: usize,
    /// Distances and cells are measured after mapping the bounding box of the
    /// core samples onto the unit square.
    pub frame: Frame,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull without collinear vertices (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn polygon_area(hull: &[[f64; 2]]) -> f64 {
    let n = hull.len();
    (0..n).map(|i| cross([0.0, 0.0], hull[i], hull[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Smallest signed distance from `p` to the edges of a counter-clockwise hull;
/// positive inside.
pub fn hull_depth(hull: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = hull.len();
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, p) / len
        })
        .fold(f64::INFINITY, f64::min)
}

/// Bounding-box frame and unit-square hull of `points`, or `None` when the
/// points have no two-dimensional extent.
fn frame_and_hull(points: &[[f64; 2]]) -> Option<(Frame, Vec<[f64; 2]>)> {
    if points.len() < 3 {
        return None;
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = [hi[0] - lo[0], hi[1] - lo[1]];
    let spread = extent[0].max(extent[1]).max(lo[0].abs()).max(lo[1].abs()).max(1.0);
    if extent[0] <= 1e-12 * spread || extent[1] <= 1e-12 * spread {
        return None;
    }
    let frame = Frame { origin: lo, extent };
    let unit: Vec<[f64; 2]> = points.iter().map(|&p| frame.to_unit(p)).collect();
    let hull = convex_hull(&unit);
    (hull.len() >= 3 && polygon_area(&hull) > 1e-12).then_some((frame, hull))
}

/// Flags cells of the hull's interior that no sample comes close to.
///
/// The hull is taken over the core samples (arguments in the inner half-box),
/// whose images are surrounded by densely sampled territory; the sparse tail
/// produced by the corners of the box would otherwise show up as spurious
/// holes. The bounding box of the core is mapped onto the unit square and
/// split into `resolution x resolution` cells. A cell is a hole cell when its
/// center lies at least one cell diagonal inside the hull and no sample, core
/// or not, is within `coverage_radius` cell diagonals of it.
pub fn detect_holes(s: &RangeSample, resolution: usize, coverage_radius: f64) -> Result<HoleReport> {
    detect_holes_with(s, resolution, coverage_radius, DEFAULT_MIN_CLUSTER)
}

pub fn detect_holes_with(s: &RangeSample, resolution: usize, coverage_radius: f64, min_cluster: usize) -> Result<HoleReport> {
    if resolution < 2 {
        return Err(Error::InvalidInstance(format!("resolution must be at least 2, got {resolution}")));
    }
    if !(coverage_radius.is_finite() && coverage_radius > 0.0) {
        return Err(Error::InvalidInstance(format!("coverage radius must be positive, got {coverage_radius}")));
    }
    if s.points.len() < 3 {
        return Err(Error::DegenerateCloud);
    }
    if s.points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::InvalidInstance("sample contains non-finite values".into()));
    }
    let core: Vec<[f64; 2]> = if s.core.len() == s.points.len() {
        s.points.iter().zip(&s.core).filter(|(_, &c)| c).map(|(&p, _)| p).collect()
    } else {
        s.points.clone()
    };
    let (frame, hull) = frame_and_hull(&core)
        .or_else(|| frame_and_hull(&s.points))
        .ok_or(Error::DegenerateCloud)?;
    let unit: Vec<[f64; 2]> = s.points.iter().map(|&p| frame.to_unit(p)).collect();

    let res = resolution;
    let h = 1.0 / res as f64;
    let diag = h * std::f64::consts::SQRT_2;
    let radius = coverage_radius * diag;
    let center = |i: usize, j: usize| [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];

    let mut covered = vec![false; res * res];
    let reach = (radius / h).ceil() as isize;
    for p in &unit {
        let ci = (p[0] / h).floor() as isize;
        let cj = (p[1] / h).floor() as isize;
        for i in (ci - reach).max(0)..=(ci + reach).min(res as isize - 1) {
            for j in (cj - reach).max(0)..=(cj + reach).min(res as isize - 1) {
                let c = center(i as usize, j as usize);
                if (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) <= radius * radius {
                    covered[i as usize * res + j as usize] = true;
                }
            }
        }
    }

    let mut hole = vec![false; res * res];
    for i in 0..res {
        for j in 0..res {
            if !covered[i * res + j] && hull_depth(&hull, center(i, j)) >= diag {
                hole[i * res + j] = true;
            }
        }
    }

    let mut largest_cluster = 0;
    let mut seen = vec![false; res * res];
    for start in 0..res * res {
        if !hole[start] || seen[start] {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(cell) = queue.pop_front() {
            size += 1;
            let (i, j) = (cell / res, cell % res);
            let mut visit = |ni: usize, nj: usize| {
                let nc = ni * res + nj;
                if hole[nc] && !seen[nc] {
                    seen[nc] = true;
                    queue.push_back(nc);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < res {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < res {
                visit(i, j + 1);
            }
        }
        largest_cluster = largest_cluster.max(size);
    }

    let hole_cells = (0..res * res)
        .filter(|&c| hole[c])
        .map(|c| frame.from_unit(center(c / res, c % res)))
        .collect();
    Ok(HoleReport {
        suspected_nonconvex: largest_cluster >= min_cluster.max(1),
        hole_cells,
        hull_vertices: hull.iter().map(|&p| frame.from_unit(p)).collect(),
        resolution,
        coverage_radius,
        largest_cluster,
        frame,
    })
}

impl HoleReport {
    /// Whether `p` (range coordinates) lies inside the hull.
    pub fn hull_contains(&self, p: [f64; 2]) -> bool {
        let hull: Vec<[f64; 2]> = self.hull_vertices.iter().map(|&v| self.frame.to_unit(v)).collect();
        hull_depth(&hull, self.frame.to_unit(p)) > 0.0
    }

    /// Distance from `p` to the closest sample, in cell diagonals of the
    /// normalized grid.
    pub fn clearance(&self, s: &RangeSample, p: [f64; 2]) -> f64 {
        let q = self.frame.to_unit(p);
        let d2 = s
            .points
            .iter()
            .map(|&x| {
                let x = self.frame.to_unit(x);
                (x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)
            })
            .fold(f64::INFINITY, f64::min);
        d2.sqrt() * self.resolution as f64 / std::f64::consts::SQRT_2
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_pairs(path: &Path, rows: &[[f64; 2]]) -> Result<()> {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str("fx,gx\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", fmt17(r[0]), fmt17(r[1]));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("range");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Writes the samples to `path` and the hull and hole cells to
/// `<stem>_hull.csv` and `<stem>_holes.csv` beside it. Returns the three paths.
pub fn emit_plot_data(s: &RangeSample, h: &HoleReport, path: impl AsRef<Path>) -> Result<[PathBuf; 3]> {
    let path = path.as_ref();
    let hull_path = sidecar(path, "hull");
    let holes_path = sidecar(path, "holes");
    write_pairs(path, &s.points)?;
    write_pairs(&hull_path, &h.hull_vertices)?;
    write_pairs(&holes_path, &h.hole_cells)?;
    Ok([path.to_path_buf(), hull_path, holes_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::QuadraticFunction;

    fn constant_pair() -> ProblemInstance {
        let f = QuadraticFunction::affine(DVector::zeros(3), 1.5);
        let g = QuadraticFunction::affine(DVector::zeros(3), -2.0);
        ProblemInstance::with_defaults(f, g).unwrap()
    }

    #[test]
    fn constant_pair_collapses_to_a_point() {
        let s = sample_range(&constant_pair(), 2.0, 50, 1, SampleMode::UniformRandom).unwrap();
        assert_eq!(s.points.len(), 50);
        assert!(s.points.iter().all(|p| *p == [1.5, -2.0]));
        assert!(matches!(detect_holes(&s, 50, 2.0), Err(Error::DegenerateCloud)));
    }

    #[test]
    fn equal_functions_lie_on_the_diagonal() {
        let p = crate::curated::saddle_pair();
        let p = ProblemInstance::with_defaults(p.f.clone(), p.f.clone()).unwrap();
        for mode in [SampleMode::UniformRandom, SampleMode::Grid] {
            let s = sample_range(&p, 3.0, 400, 9, mode).unwrap();
            assert!(s.points.iter().all(|q| q[0] == q[1]));
            assert!(matches!(detect_holes(&s, 50, 2.0), Err(Error::DegenerateCloud)));
        }
    }

    #[test]
    fn sampling_is_reproducible_and_regenerable() {
        let p = crate::curated::rotated_saddle();
        let a = sample_range(&p, 5.0, 2000, 42, SampleMode::UniformRandom).unwrap();
        let b = sample_range(&p, 5.0, 2000, 42, SampleMode::UniformRandom).unwrap();
        assert_eq!(a, b);
        for i in (0..2000).step_by(97) {
            assert_eq!(a.regenerate(&p, i).unwrap(), a.points[i]);
        }
        let c = sample_range(&p, 5.0, 2000, 43, SampleMode::UniformRandom).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn grid_covers_corners_and_has_requested_count() {
        assert_eq!(grid_side(2, 100), 10);
        assert_eq!(grid_side(2, 101), 11);
        assert_eq!(grid_side(3, 1), 1);
        assert_eq!(grid_side(3, 27), 3);
        let first = sample_argument(2, 1.0, 100, 0, SampleMode::Grid, 0).unwrap();
        let last = sample_argument(2, 1.0, 100, 0, SampleMode::Grid, 99).unwrap();
        assert_eq!(first.as_slice(), &[-1.0, -1.0]);
        assert_eq!(last.as_slice(), &[1.0, 1.0]);
        let s = sample_range(&crate::curated::four_dim_pencil(), 1.0, 777, 0, SampleMode::Grid).unwrap();
        assert_eq!(s.points.len(), 777);
        assert!(sample_range(&constant_pair(), 1.0, 0, 0, SampleMode::Grid).is_err());
        assert!(sample_range(&constant_pair(), -1.0, 5, 0, SampleMode::Grid).is_err());
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0], [0.2, 0.7]];
        let hull = convex_hull(&pts);
        assert_eq!(hull, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-15);
        assert!((hull_depth(&hull, [0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!(hull_depth(&hull, [1.5, 0.5]) < 0.0);
    }

    fn annulus(inner: f64, count: usize) -> RangeSample {
        let mut rng = rng_for(5, 0);
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r2: f64 = p[0] * p[0] + p[1] * p[1];
            if r2 <= 1.0 && r2 >= inner * inner {
                points.push(p);
            }
        }
        RangeSample {
            points,
            domain_box: 1.0,
            count,
            seed: 5,
            mode: SampleMode::UniformRandom,
            core: Vec::new(),
        }
    }

    #[test]
    fn annulus_has_a_hole_and_disk_has_none() {
        let ring = detect_holes(&annulus(0.4, 20_000), 100, 2.0).unwrap();
        assert!(ring.suspected_nonconvex);
        assert!(ring.hole_cells.iter().all(|c| c[0].hypot(c[1]) < 0.4));
        assert!(ring.hull_contains([0.0, 0.0]));
        let disk = detect_holes(&annulus(0.0, 20_000), 100, 2.0).unwrap();
        assert!(!disk.suspected_nonconvex, "{}", disk.largest_cluster);
    }

    #[test]
    fn hole_cells_respect_margin_and_radius() {
        let s = annulus(0.5, 5_000);
        let r = detect_holes(&s, 60, 1.5).unwrap();
        let hull: Vec<[f64; 2]> = r.hull_vertices.iter().map(|&v| r.frame.to_unit(v)).collect();
        let diag = std::f64::consts::SQRT_2 / 60.0;
        for &c in &r.hole_cells {
            assert!(hull_depth(&hull, r.frame.to_unit(c)) >= diag * (1.0 - 1e-12));
            assert!(r.clearance(&s, c) > 1.5);
        }
    }

    #[test]
    fn plot_files_have_headers_and_precision() {
        let dir = tempfile::tempdir().unwrap();
        let s = annulus(0.0, 200);
        let mut h = detect_holes(&s, 20, 2.0).unwrap();
        h.hole_cells.clear();
        let [samples, hull, holes] = emit_plot_data(&s, &h, dir.path().join("cloud.csv")).unwrap();
        let text = std::fs::read_to_string(&samples).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("fx,gx"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, s.points[0].to_vec());
        assert_eq!(text.lines().count(), 201);
        assert!(hull.ends_with("cloud_hull.csv"));
        assert_eq!(std::fs::read_to_string(holes).unwrap(), "fx,gx\n");
    }
}
