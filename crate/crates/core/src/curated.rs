//! Worked instances bundled with the crate.
//!
//! Each case ships as a JSON problem file under `data/` and is compiled in, so
//! the regression table behind `qrange reproduce` needs no external files.

use crate::convexity::Verdict;
use crate::quadratic::ProblemInstance;

/// Expected outcome of a level-pair separation query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCheck {
    pub alpha: f64,
    pub beta: f64,
    pub g_separates_f: bool,
    pub f_separates_g: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CuratedCase {
    pub name: &'static str,
    pub source: &'static str,
    pub verdict: Verdict,
    /// Pencil ratio `B = lambda A`, when one exists.
    pub lambda: Option<f64>,
    pub separations: &'static [LevelCheck],
    /// Half-width of the sampling box for the range oracle.
    pub sample_box: f64,
}

impl CuratedCase {
    pub fn instance(&self) -> ProblemInstance {
        ProblemInstance::from_json(self.source).expect("bundled instance is valid")
    }
}

const SADDLE_PAIR: &str = include_str!("../data/saddle_pair.json");
const SADDLE_PAIR_HOMOGENEOUS: &str = include_str!("../data/saddle_pair_homogeneous.json");
const HALF_PLANE: &str = include_str!("../data/half_plane.json");
const AFFINE_NO_SEPARATION: &str = include_str!("../data/affine_no_separation.json");
const AFFINE_SEPARATION: &str = include_str!("../data/affine_separation.json");
const SHIFTED_HYPERBOLAS: &str = include_str!("../data/shifted_hyperbolas.json");
const ROTATED_SADDLE: &str = include_str!("../data/rotated_saddle.json");
const FOUR_DIM_PENCIL: &str = include_str!("../data/four_dim_pencil.json");

pub const CASES: &[CuratedCase] = &[
    CuratedCase {
        name: "saddle_pair",
        source: SADDLE_PAIR,
        verdict: Verdict::Nonconvex,
        lambda: Some(2.0),
        separations: &[],
        sample_box: 3.0,
    },
    CuratedCase {
        name: "saddle_pair_homogeneous",
        source: SADDLE_PAIR_HOMOGENEOUS,
        verdict: Verdict::Convex,
        lambda: None,
        separations: &[],
        sample_box: 3.0,
    },
    CuratedCase {
        name: "half_plane",
        source: HALF_PLANE,
        verdict: Verdict::Convex,
        lambda: None,
        separations: &[],
        sample_box: 5.0,
    },
    CuratedCase {
        name: "affine_no_separation",
        source: AFFINE_NO_SEPARATION,
        verdict: Verdict::Nonconvex,
        lambda: Some(0.0),
        separations: &[LevelCheck {
            alpha: 0.0,
            beta: 0.0,
            g_separates_f: false,
            f_separates_g: false,
        }],
        sample_box: 3.0,
    },
    CuratedCase {
        name: "affine_separation",
        source: AFFINE_SEPARATION,
        verdict: Verdict::Nonconvex,
        lambda: Some(0.0),
        separations: &[LevelCheck {
            alpha: 0.0,
            beta: 0.0,
            g_separates_f: true,
            f_separates_g: false,
        }],
        sample_box: 3.0,
    },
    CuratedCase {
        name: "shifted_hyperbolas",
        source: SHIFTED_HYPERBOLAS,
        verdict: Verdict::Nonconvex,
        lambda: Some(1.0),
        separations: &[
            LevelCheck {
                alpha: 0.0,
                beta: 0.0,
                g_separates_f: true,
                f_separates_g: true,
            },
            LevelCheck {
                alpha: 2.0,
                beta: 0.0,
                g_separates_f: false,
                f_separates_g: false,
            },
        ],
        sample_box: 3.0,
    },
    CuratedCase {
        name: "rotated_saddle",
        source: ROTATED_SADDLE,
        verdict: Verdict::Nonconvex,
        lambda: Some(-0.577_350_269_189_625_8),
        separations: &[LevelCheck {
            alpha: -4.0,
            beta: 2.0,
            g_separates_f: true,
            f_separates_g: true,
        }],
        sample_box: 5.0,
    },
    CuratedCase {
        name: "four_dim_pencil",
        source: FOUR_DIM_PENCIL,
        verdict: Verdict::Nonconvex,
        lambda: Some(2.0),
        separations: &[],
        sample_box: 3.0,
    },
];

pub fn case(name: &str) -> Option<&'static CuratedCase> {
    CASES.iter().find(|c| c.name == name)
}

fn load(name: &str) -> ProblemInstance {
    case(name).expect("known case").instance()
}

pub fn saddle_pair() -> ProblemInstance {
    load("saddle_pair")
}

pub fn saddle_pair_homogeneous() -> ProblemInstance {
    load("saddle_pair_homogeneous")
}

pub fn half_plane() -> ProblemInstance {
    load("half_plane")
}

pub fn affine_no_separation() -> ProblemInstance {
    load("affine_no_separation")
}

pub fn affine_separation() -> ProblemInstance {
    load("affine_separation")
}

pub fn shifted_hyperbolas() -> ProblemInstance {
    load("shifted_hyperbolas")
}

pub fn rotated_saddle() -> ProblemInstance {
    load("rotated_saddle")
}

pub fn four_dim_pencil() -> ProblemInstance {
    load("four_dim_pencil")
}
