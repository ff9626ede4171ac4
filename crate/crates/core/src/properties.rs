//! The five global property verdicts for a sample and their dependencies.
//!
//! Conventions for degenerate inputs:
//! - a non-compact or non-lattice polyhedron is reported as not normal;
//! - a lower-dimensional polytope is neither reflexive nor smooth;
//! - a smooth reflexive polytope of dimension at most 8 is normal without
//!   enumeration, since every such polytope is lattice-equivalent to a
//!   member of the smooth reflexive classification, all of which are normal.

use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

pub use crate::normality::STREAM_FACTOR;
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, primitive, Matrix, Rat};
use crate::polytope::{
    bounding_box, facet_enumeration, facet_indices, lattice_points_in_box, vertex_enumeration,
    Hull, HRep, LinearSystem, VRep, VertexData,
};

/// Which of the two sample encodings a matrix uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Rows `w` encode inequalities `1 + w . x >= 0`.
    Hyperplane,
    /// Rows are points; the polytope is their convex hull.
    ConvexHull,
}

/// Largest dimension for which smooth reflexive implies normal is known.
pub const SMOOTH_REFLEXIVE_NORMAL_MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalVerdict {
    Normal,
    NotNormal,
    /// Some dilation had more lattice points than the enumeration cap.
    Unverified,
}

/// Outcome of the decomposition check, with a witness on failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalityCheck {
    Normal,
    /// `witness` is a lattice point of `k P` that is not a sum of a lattice
    /// point of `(k-1) P` and one of `P`. Absent when `P` is not a bounded
    /// lattice polytope at all.
    NotNormal { k: i64, witness: Option<Vec<i64>> },
    Unverified,
}

impl NormalityCheck {
    pub fn verdict(&self) -> NormalVerdict {
        match self {
            NormalityCheck::Normal => NormalVerdict::Normal,
            NormalityCheck::NotNormal { .. } => NormalVerdict::NotNormal,
            NormalityCheck::Unverified => NormalVerdict::Unverified,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyReport {
    pub compact: bool,
    pub lattice: bool,
    pub reflexive: bool,
    pub smooth: bool,
    pub normal: NormalVerdict,
    pub all_correct: bool,
    pub ill_formed: bool,
}

impl PropertyReport {
    pub fn ill_formed() -> Self {
        Self {
            compact: false,
            lattice: false,
            reflexive: false,
            smooth: false,
            normal: NormalVerdict::NotNormal,
            all_correct: false,
            ill_formed: true,
        }
    }

    fn new(compact: bool, lattice: bool, reflexive: bool, smooth: bool, normal: NormalVerdict) -> Self {
        Self {
            compact,
            lattice,
            reflexive,
            smooth,
            normal,
            all_correct: compact && lattice && reflexive && smooth && normal == NormalVerdict::Normal,
            ill_formed: false,
        }
    }

    pub fn is_normal(&self) -> bool {
        self.normal == NormalVerdict::Normal
    }
}

pub fn check_compact(vd: &VertexData) -> bool {
    vd.is_bounded()
}

pub fn check_lattice(vd: &VertexData) -> bool {
    vd.is_lattice()
}

/// A polytope together with the data the checks share.
#[derive(Clone, Debug)]
pub enum Subject {
    Hyperplane { hrep: HRep, vertex_data: VertexData },
    ConvexHull(Hull),
}

impl Subject {
    pub fn from_hrep(hrep: HRep) -> Result<Self> {
        let vertex_data = vertex_enumeration(&hrep)?;
        Ok(Subject::Hyperplane { hrep, vertex_data })
    }

    pub fn from_vrep(vrep: &VRep) -> Result<Self> {
        Ok(Subject::ConvexHull(facet_enumeration(vrep)?))
    }

    pub fn vertex_data(&self) -> &VertexData {
        match self {
            Subject::Hyperplane { vertex_data, .. } => vertex_data,
            Subject::ConvexHull(hull) => &hull.vertex_data,
        }
    }

    /// Inequalities the vertex tight sets refer to.
    pub fn system(&self) -> LinearSystem {
        match self {
            Subject::Hyperplane { hrep, .. } => hrep.system(),
            Subject::ConvexHull(hull) => hull.facets.system(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vertex_data().dim
    }
}

/// Reflexivity.
///
/// A constant-one H-representation is reflexive as soon as it is a compact
/// full-dimensional lattice polytope. A hull is reflexive when it has exactly
/// one interior lattice point and every facet sits at lattice distance one
/// from it.
pub fn check_reflexive(subject: &Subject) -> bool {
    let vd = subject.vertex_data();
    if !(check_compact(vd) && check_lattice(vd) && vd.full_dim) {
        return false;
    }
    match subject {
        Subject::Hyperplane { .. } => true,
        Subject::ConvexHull(hull) => {
            let system = hull.facets.system();
            let Ok((lo, hi)) = bounding_box(vd, 1) else {
                return false;
            };
            // cap 1: a second interior point already rules reflexivity out
            let interior = match lattice_points_in_box(&system, &lo, &hi, true, 1) {
                Ok(points) => points,
                Err(_) => return false,
            };
            let [center] = interior.as_slice() else {
                return false;
            };
            hull.facets
                .facets
                .iter()
                .all(|f| f.value_at_int(center).is_one())
        }
    }
}

/// Smoothness: compact, full-dimensional, lattice, every vertex simple, and
/// at every vertex the primitive edge directions form a lattice basis.
pub fn check_smooth(system: &LinearSystem, vd: &VertexData) -> bool {
    if !(check_compact(vd) && check_lattice(vd) && vd.full_dim) || vd.vertices.is_empty() {
        return false;
    }
    let d = system.dim;
    let facets: BTreeSet<usize> = facet_indices(system, vd).into_iter().collect();
    for tight in &vd.tight_sets {
        let active: Vec<usize> = tight.iter().copied().filter(|i| facets.contains(i)).collect();
        if active.len() != d {
            return false;
        }
        let normals: Vec<Vec<Rat>> = active
            .iter()
            .map(|&i| {
                system.inequalities[i]
                    .normal
                    .iter()
                    .map(|x| Rat::from_integer(x.clone()))
                    .collect()
            })
            .collect();
        let Ok(a) = Matrix::from_rows(&normals) else {
            return false;
        };
        let Ok(inv) = inverse(&a) else {
            return false;
        };
        // edge directions are the columns of the inverse normal matrix
        let edges: Vec<Vec<_>> = match inv
            .transpose()
            .rows()
            .map(primitive)
            .collect::<Result<Vec<_>>>()
        {
            Ok(e) => e,
            Err(_) => return false,
        };
        let Ok(e) = Matrix::from_rows(&edges) else {
            return false;
        };
        match det(&e) {
            Ok(value) if value.abs().is_one() => {}
            _ => return false,
        }
    }
    true
}

/// Whether every lattice point of `kP` is a sum of `k` lattice points of `P`.
///
/// Full-dimensional polytopes go through a triangulation of `P`, which only
/// inspects the fundamental parallelepipeds of its simplices. Anything else
/// falls back to [`check_normal_by_dilation`].
pub fn check_normal(system: &LinearSystem, vd: &VertexData, cap: usize) -> NormalityCheck {
    if !(check_compact(vd) && check_lattice(vd)) || vd.vertices.is_empty() {
        return NormalityCheck::NotNormal { k: 1, witness: None };
    }
    if vd.full_dim {
        return crate::normality::check_normal_triangulated(system, vd, cap);
    }
    check_normal_by_dilation(system, vd, cap)
}

/// Normality by inductive decomposition: for `k = 2 ..= max(1, d - 1)` every
/// lattice point of `kP` must be a lattice point of `(k-1)P` plus one of `P`.
///
/// Enumerates every dilation, so it is only practical in low dimension.
pub fn check_normal_by_dilation(system: &LinearSystem, vd: &VertexData, cap: usize) -> NormalityCheck {
    if !(check_compact(vd) && check_lattice(vd)) || vd.vertices.is_empty() {
        return NormalityCheck::NotNormal { k: 1, witness: None };
    }
    let d = system.dim as i64;
    let points_of = |k: i64| -> Result<Vec<Vec<i64>>> {
        let (lo, hi) = bounding_box(vd, k)?;
        lattice_points_in_box(&system.dilate(k)?, &lo, &hi, false, cap)
    };
    let base = match points_of(1) {
        Ok(p) => p,
        Err(Error::CapExceeded(_) | Error::Overflow) => return NormalityCheck::Unverified,
        Err(_) => return NormalityCheck::NotNormal { k: 1, witness: None },
    };
    let mut previous: HashSet<Vec<i64>> = base.iter().cloned().collect();
    let mut diff = vec![0i64; system.dim];
    for k in 2..=(d - 1).max(1) {
        let current = match points_of(k) {
            Ok(p) => p,
            Err(_) => return NormalityCheck::Unverified,
        };
        for x in &current {
            let decomposes = base.iter().any(|p| {
                for ((slot, a), b) in diff.iter_mut().zip(x).zip(p) {
                    *slot = a - b;
                }
                previous.contains(&diff)
            });
            if !decomposes {
                return NormalityCheck::NotNormal {
                    k,
                    witness: Some(x.clone()),
                };
            }
        }
        previous = current.into_iter().collect();
    }
    NormalityCheck::Normal
}

/// Runs every check on one sample given as raw rows.
///
/// Ragged or empty input, or a dimension beyond the supported range, is
/// reported as ill-formed with every flag false.
pub fn check_all(rows: &[Vec<i64>], rep: Representation, cap: usize) -> PropertyReport {
    let Ok(matrix) = Matrix::from_rows(rows) else {
        return PropertyReport::ill_formed();
    };
    check_matrix(&matrix, rep, cap)
}

pub fn check_matrix(matrix: &Matrix<i64>, rep: Representation, cap: usize) -> PropertyReport {
    let subject = match rep {
        Representation::Hyperplane => Subject::from_hrep(HRep::new(matrix.clone())),
        Representation::ConvexHull => Subject::from_vrep(&VRep::new(matrix.clone())),
    };
    match subject {
        Ok(subject) => check_subject(&subject, cap),
        Err(_) => PropertyReport::ill_formed(),
    }
}

pub fn check_subject(subject: &Subject, cap: usize) -> PropertyReport {
    let vd = subject.vertex_data();
    let system = subject.system();
    let compact = check_compact(vd);
    let lattice = check_lattice(vd);
    let reflexive = check_reflexive(subject);
    let smooth = check_smooth(&system, vd);
    let normal = if !(compact && lattice) {
        NormalVerdict::NotNormal
    } else if smooth && reflexive && subject.dim() <= SMOOTH_REFLEXIVE_NORMAL_MAX_DIM {
        NormalVerdict::Normal
    } else {
        check_normal(&system, vd, cap).verdict()
    };
    PropertyReport::new(compact, lattice, reflexive, smooth, normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{lattice_points, DEFAULT_CAP};

    fn rows(r: &[&[i64]]) -> Vec<Vec<i64>> {
        r.iter().map(|x| x.to_vec()).collect()
    }

    fn hexagon() -> Vec<Vec<i64>> {
        rows(&[&[0, 1], &[0, -1], &[-1, 0], &[1, 0], &[1, -1], &[-1, 1]])
    }

    fn h_subject(r: &[&[i64]]) -> Subject {
        Subject::from_hrep(HRep::from_rows(&rows(r)).unwrap()).unwrap()
    }

    fn v_subject(r: &[&[i64]]) -> Subject {
        Subject::from_vrep(&VRep::from_rows(&rows(r)).unwrap()).unwrap()
    }

    const REEVE: &[&[i64]] = &[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[1, 1, 2]];

    #[test]
    fn hexagon_passes_everything() {
        let report = check_all(&hexagon(), Representation::Hyperplane, DEFAULT_CAP);
        assert!(report.all_correct, "{report:?}");
        assert!(!report.ill_formed);
    }

    #[test]
    fn compactness() {
        assert!(check_compact(h_subject(&[&[1, 0], &[0, 1]]).vertex_data()) == false);
        let report = check_all(&rows(&[&[1, 0], &[0, 1]]), Representation::Hyperplane, DEFAULT_CAP);
        assert!(!report.compact && !report.smooth && !report.reflexive);
        assert_eq!(report.normal, NormalVerdict::NotNormal);
    }

    #[test]
    fn half_integral_vertex_is_not_lattice() {
        let s = h_subject(&[&[-2, 0], &[0, -1], &[1, 1]]);
        assert!(check_compact(s.vertex_data()));
        assert!(!check_lattice(s.vertex_data()));
        assert!(s
            .vertex_data()
            .vertices
            .contains(&vec![Rat::new(1.into(), 2.into()), Rat::from_integer(1.into())]));
        let report = check_subject(&s, DEFAULT_CAP);
        assert!(!report.lattice && !report.smooth && !report.reflexive && !report.all_correct);
    }

    #[test]
    fn triangle_is_smooth_and_p2_hull_is_not() {
        let t = h_subject(&[&[-1, 0], &[0, -1], &[1, 1]]);
        assert!(check_smooth(&t.system(), t.vertex_data()));
        let p2 = v_subject(&[&[1, 0], &[0, 1], &[-1, -1]]);
        assert!(!check_smooth(&p2.system(), p2.vertex_data()));
        assert!(check_reflexive(&p2));
    }

    #[test]
    fn reeve_is_neither_reflexive_nor_normal() {
        let reeve = v_subject(REEVE);
        assert!(!check_reflexive(&reeve));
        let check = check_normal(&reeve.system(), reeve.vertex_data(), DEFAULT_CAP);
        assert_eq!(
            check,
            NormalityCheck::NotNormal {
                k: 2,
                witness: Some(vec![1, 1, 1])
            }
        );
    }

    #[test]
    fn hexagon_normal_by_decomposition() {
        let h = h_subject(&[&[0, 1], &[0, -1], &[-1, 0], &[1, 0], &[1, -1], &[-1, 1]]);
        // d = 2: the range of k is empty, so normality is immediate
        assert_eq!(
            check_normal(&h.system(), h.vertex_data(), DEFAULT_CAP),
            NormalityCheck::Normal
        );
    }

    #[test]
    fn cube_normal_in_3d() {
        let cube = h_subject(&[&[1, 0, 0], &[-1, 0, 0], &[0, 1, 0], &[0, -1, 0], &[0, 0, 1], &[0, 0, -1]]);
        assert_eq!(
            check_normal(&cube.system(), cube.vertex_data(), DEFAULT_CAP),
            NormalityCheck::Normal
        );
        assert_eq!(
            check_normal_by_dilation(&cube.system(), cube.vertex_data(), DEFAULT_CAP),
            NormalityCheck::Normal
        );
        // 125 points in 2P, and pulled simplices of volume 8
        assert_eq!(
            check_normal_by_dilation(&cube.system(), cube.vertex_data(), 100),
            NormalityCheck::Unverified
        );
        // normalized volume 48 against a streaming budget of zero
        assert_eq!(
            check_normal(&cube.system(), cube.vertex_data(), 0),
            NormalityCheck::Unverified
        );
    }

    #[test]
    fn reeve_witness_agrees_across_methods() {
        for r in 2..6 {
            let reeve = v_subject(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[1, 1, r]]);
            let fast = check_normal(&reeve.system(), reeve.vertex_data(), DEFAULT_CAP);
            let slow = check_normal_by_dilation(&reeve.system(), reeve.vertex_data(), DEFAULT_CAP);
            assert_eq!(fast.verdict(), NormalVerdict::NotNormal);
            assert_eq!(slow.verdict(), NormalVerdict::NotNormal);
            let NormalityCheck::NotNormal { k, witness: Some(x) } = fast else {
                panic!("no witness");
            };
            let points = lattice_points(&reeve.system(), DEFAULT_CAP).unwrap();
            let kp = reeve.system().dilate(k).unwrap();
            assert!(kp.contains_int(&x));
            assert!(k == 2 && !points.iter().any(|p| {
                let rest: Vec<i64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
                reeve.system().contains_int(&rest)
            }));
        }
    }

    #[test]
    fn ragged_rows_are_ill_formed() {
        let report = check_all(&rows(&[&[1, 0], &[0, 1, 1]]), Representation::Hyperplane, DEFAULT_CAP);
        assert_eq!(report, PropertyReport::ill_formed());
        assert!(!report.all_correct);
        assert_eq!(check_all(&[], Representation::ConvexHull, DEFAULT_CAP), PropertyReport::ill_formed());
    }

    #[test]
    fn lower_dimensional_hull() {
        let report = check_all(&rows(&[&[0, 0], &[1, 0], &[2, 0]]), Representation::ConvexHull, DEFAULT_CAP);
        assert!(report.compact && report.lattice);
        assert!(!report.reflexive && !report.smooth && !report.all_correct);
        assert_eq!(report.normal, NormalVerdict::Normal);
    }

    #[test]
    fn duplicate_rows_do_not_break_smoothness() {
        let t = h_subject(&[&[-1, 0], &[0, -1], &[1, 1], &[1, 1]]);
        assert!(check_smooth(&t.system(), t.vertex_data()));
    }

    #[test]
    fn eight_d_pair() {
        let left = rows(&[
            &[-1, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0, -1],
            &[0, -1, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, -1, 0, 0, 0],
            &[0, 0, 0, 0, -1, 1, 0, 1],
            &[0, 0, 0, 0, 0, -1, 0, 0],
            &[0, 0, -1, 0, 0, 0, 0, 0],
            &[0, 0, 0, -1, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, -1, 0],
            &[1, 1, 1, 1, 0, -4, 1, 1],
            &[0, 0, 0, 0, 1, 0, 0, -1],
        ]);
        let mut right = left.clone();
        right[10][6] = 1;
        let l = check_all(&left, Representation::Hyperplane, DEFAULT_CAP);
        assert!(l.all_correct, "{l:?}");
        let r = check_all(&right, Representation::Hyperplane, DEFAULT_CAP);
        assert!(r.compact);
        assert!(!r.lattice && !r.reflexive && !r.smooth && !r.all_correct);
        assert_eq!(r.normal, NormalVerdict::NotNormal);
    }
}
