//! Polytope representations and exact vertex/facet enumeration.
//!
//! An [`HRep`] row `w` stands for the inequality `1 + w . x >= 0`; a
//! [`VRep`] is the convex hull of its rows. Both come straight from sample
//! matrices, so duplicate and redundant rows are legal and are pruned by the
//! enumeration, not rejected.

mod lattice;

pub(crate) use lattice::{search_box, Row};

pub use lattice::{
    bounding_box, interior_lattice_points, lattice_points, lattice_points_in_box, DEFAULT_CAP,
};

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::cone;
use crate::error::{Error, Result};
use crate::linalg::{dot, make_primitive, rank, Int, IntVec, Matrix, Rat, RatVec};

/// Largest ambient dimension accepted by the enumeration routines.
pub const MAX_DIM: usize = 16;

/// Polytope given by inequalities `1 + w . x >= 0`, one row `w` each.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HRep {
    rows: Matrix<i64>,
}

impl HRep {
    pub fn new(rows: Matrix<i64>) -> Self {
        Self { rows }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Matrix<i64> {
        &self.rows
    }

    pub fn system(&self) -> LinearSystem {
        LinearSystem {
            dim: self.dim(),
            inequalities: self
                .rows
                .rows()
                .map(|w| Halfspace {
                    normal: w.iter().map(|&x| Int::from(x)).collect(),
                    offset: Int::one(),
                })
                .collect(),
            equations: Vec::new(),
        }
    }
}

/// Polytope given as the convex hull of its rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VRep {
    points: Matrix<i64>,
}

impl VRep {
    pub fn new(points: Matrix<i64>) -> Self {
        Self { points }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Matrix<i64> {
        &self.points
    }
}

/// The affine inequality `offset + normal . x >= 0` (or `= 0` for equations).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Halfspace {
    pub normal: IntVec,
    pub offset: Int,
}

impl Halfspace {
    pub fn value_at(&self, x: &[Rat]) -> Rat {
        crate::linalg::dot_rat(&self.normal, x) + Rat::from_integer(self.offset.clone())
    }

    pub fn value_at_int(&self, x: &[i64]) -> Int {
        self.normal
            .iter()
            .zip(x)
            .map(|(a, &b)| a * b)
            .sum::<Int>()
            + &self.offset
    }

    /// The hyperplane scaled to coprime integer coefficients.
    fn normalized(&self) -> (Int, IntVec) {
        let mut all: IntVec = std::iter::once(self.offset.clone())
            .chain(self.normal.iter().cloned())
            .collect();
        make_primitive(&mut all);
        let offset = all.remove(0);
        (offset, all)
    }
}

/// An arbitrary finite system of affine inequalities and equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    pub dim: usize,
    pub inequalities: Vec<Halfspace>,
    pub equations: Vec<Halfspace>,
}

impl LinearSystem {
    /// The system of `kP`: every constant term multiplied by `k`.
    pub fn dilate(&self, k: i64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidDilation(k));
        }
        let scale = |h: &Halfspace| Halfspace {
            normal: h.normal.clone(),
            offset: &h.offset * k,
        };
        Ok(Self {
            dim: self.dim,
            inequalities: self.inequalities.iter().map(scale).collect(),
            equations: self.equations.iter().map(scale).collect(),
        })
    }

    pub fn contains_int(&self, x: &[i64]) -> bool {
        self.inequalities
            .iter()
            .all(|h| !h.value_at_int(x).is_negative())
            && self.equations.iter().all(|h| h.value_at_int(x).is_zero())
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.inequalities
            .iter()
            .all(|h| !h.value_at(x).is_negative())
            && self.equations.iter().all(|h| h.value_at(x).is_zero())
    }
}

impl From<&HRep> for LinearSystem {
    fn from(h: &HRep) -> Self {
        h.system()
    }
}

impl From<&GeneralHRep> for LinearSystem {
    fn from(g: &GeneralHRep) -> Self {
        LinearSystem {
            dim: g.dim,
            inequalities: g.facets.clone(),
            equations: g.equations.clone(),
        }
    }
}

/// Irredundant facet description produced by [`facet_enumeration`].
///
/// Every facet normal is primitive. `equations` is nonempty exactly when the
/// hull is lower-dimensional; facets are then relative to the affine hull.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralHRep {
    pub dim: usize,
    pub facets: Vec<Halfspace>,
    pub equations: Vec<Halfspace>,
}

impl GeneralHRep {
    pub fn system(&self) -> LinearSystem {
        self.into()
    }
}

/// Vertices, their tight constraints, and recession directions of a polyhedron.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexData {
    pub dim: usize,
    pub vertices: Vec<RatVec>,
    /// Per vertex, indices of the inequalities that hold with equality.
    pub tight_sets: Vec<Vec<usize>>,
    /// Primitive extreme-ray directions; empty iff the polyhedron is bounded.
    pub rays: Vec<IntVec>,
    pub full_dim: bool,
}

impl VertexData {
    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn is_lattice(&self) -> bool {
        self.vertices
            .iter()
            .all(|v| v.iter().all(|x| x.is_integer()))
    }

    /// Vertices as machine integers, if all are integral and fit.
    pub fn integer_vertices(&self) -> Option<Vec<Vec<i64>>> {
        self.vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| {
                        if x.is_integer() {
                            i64::try_from(x.to_integer()).ok()
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Result of [`facet_enumeration`]: the facets plus the companion vertex data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hull {
    pub facets: GeneralHRep,
    pub vertex_data: VertexData,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        Err(Error::DimensionTooLarge(dim))
    } else {
        Ok(())
    }
}

/// Vertices, tight sets and extreme rays of `{x : 1 + w . x >= 0}`.
pub fn vertex_enumeration(h: &HRep) -> Result<VertexData> {
    vertex_enumeration_system(&h.system())
}

/// Vertex enumeration for an arbitrary system, by double description on the
/// homogenization `{(t, x) : t >= 0, offset t + normal . x >= 0}`.
pub fn vertex_enumeration_system(system: &LinearSystem) -> Result<VertexData> {
    let d = system.dim;
    check_dim(d)?;
    let homogenize = |h: &Halfspace| -> IntVec {
        std::iter::once(h.offset.clone())
            .chain(h.normal.iter().cloned())
            .collect()
    };
    let mut constraints = Vec::with_capacity(1 + system.inequalities.len() + 2 * system.equations.len());
    let mut t_axis = vec![Int::zero(); d + 1];
    t_axis[0] = Int::one();
    constraints.push(t_axis);
    constraints.extend(system.inequalities.iter().map(homogenize));
    for eq in &system.equations {
        let c = homogenize(eq);
        constraints.push(c.iter().map(|x| -x).collect());
        constraints.push(c);
    }

    let cone = cone::generators(d + 1, &constraints);
    if !cone.rays.iter().any(|r| r[0].is_positive()) {
        return Err(Error::EmptyPolyhedron);
    }

    let mut all_generators: Vec<IntVec> = cone.rays.clone();
    all_generators.extend(cone.lineality.iter().cloned());
    let full_dim = rank(&all_generators) == d + 1;

    let mut rays: Vec<IntVec> = cone
        .rays
        .iter()
        .filter(|r| r[0].is_zero())
        .map(|r| r[1..].to_vec())
        .collect();

    let mut vertices = Vec::new();
    let mut tight_sets = Vec::new();
    if cone.lineality.is_empty() {
        for r in cone.rays.iter().filter(|r| r[0].is_positive()) {
            let t = &r[0];
            let tight = system
                .inequalities
                .iter()
                .enumerate()
                .filter(|(_, h)| (&h.offset * t + dot(&h.normal, &r[1..])).is_zero())
                .map(|(i, _)| i)
                .collect();
            vertices.push(
                r[1..]
                    .iter()
                    .map(|x| Rat::new(x.clone(), t.clone()))
                    .collect::<RatVec>(),
            );
            tight_sets.push(tight);
        }
    } else {
        // No vertices: the polyhedron contains a line.
        for l in &cone.lineality {
            rays.push(l[1..].to_vec());
            rays.push(l[1..].iter().map(|x| -x).collect());
        }
    }
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].cmp(&vertices[b]));
    let vertices = order.iter().map(|&i| vertices[i].clone()).collect();
    let tight_sets = order.iter().map(|&i| std::mem::take(&mut tight_sets[i])).collect();
    rays.sort();
    rays.dedup();

    Ok(VertexData {
        dim: d,
        vertices,
        tight_sets,
        rays,
        full_dim,
    })
}

/// Irredundant facets of the convex hull of the given points.
///
/// The polar cone `{(c, a) : c + a . p >= 0 for all points p}` is
/// enumerated by double description; its lineality gives the affine-hull
/// equations and its extreme rays the facets. Duplicate and interior input
/// points are absorbed.
pub fn facet_enumeration(v: &VRep) -> Result<Hull> {
    let d = v.dim();
    check_dim(d)?;
    let points: BTreeSet<Vec<i64>> = v.points().rows().map(<[i64]>::to_vec).collect();
    let points: Vec<Vec<i64>> = points.into_iter().collect();
    let constraints: Vec<IntVec> = points
        .iter()
        .map(|p| {
            std::iter::once(Int::one())
                .chain(p.iter().map(|&x| Int::from(x)))
                .collect()
        })
        .collect();
    let cone = cone::generators(d + 1, &constraints);

    let to_halfspace = |g: &IntVec| Halfspace {
        offset: g[0].clone(),
        normal: g[1..].to_vec(),
    };
    let equations: Vec<Halfspace> = cone.lineality.iter().map(to_halfspace).collect();
    let mut facets: Vec<Halfspace> = cone
        .rays
        .iter()
        .map(to_halfspace)
        .filter(|h| points.iter().any(|p| h.value_at_int(p).is_zero()))
        .map(|mut h| {
            let g = crate::linalg::gcd_slice(&h.normal);
            if !g.is_zero() && !g.is_one() && h.offset.is_multiple_of(&g) {
                for x in h.normal.iter_mut() {
                    *x = &*x / &g;
                }
                h.offset = &h.offset / &g;
            }
            h
        })
        .collect();
    facets.sort();
    facets.dedup();

    let mut vertices = Vec::new();
    let mut tight_sets = Vec::new();
    for p in &points {
        let tight: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter(|(_, h)| h.value_at_int(p).is_zero())
            .map(|(i, _)| i)
            .collect();
        let normals: Vec<IntVec> = tight
            .iter()
            .map(|&i| facets[i].normal.clone())
            .chain(equations.iter().map(|e| e.normal.clone()))
            .collect();
        if rank(&normals) == d {
            vertices.push(p.iter().map(|&x| Rat::from_integer(x.into())).collect());
            tight_sets.push(tight);
        }
    }

    Ok(Hull {
        vertex_data: VertexData {
            dim: d,
            vertices,
            tight_sets,
            rays: Vec::new(),
            full_dim: equations.is_empty(),
        },
        facets: GeneralHRep {
            dim: d,
            facets,
            equations,
        },
    })
}

/// Indices of the inequalities that define facets, one per distinct facet.
///
/// Duplicates (same hyperplane up to positive scaling) keep their first
/// occurrence; redundant inequalities are dropped.
pub fn facet_indices(system: &LinearSystem, vd: &VertexData) -> Vec<usize> {
    let target_rank = if vd.full_dim {
        system.dim
    } else {
        // Facets of a lower-dimensional polyhedron are not needed by any caller.
        return Vec::new();
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, h) in system.inequalities.iter().enumerate() {
        let mut generators: Vec<IntVec> = Vec::new();
        for (v, tight) in vd.vertices.iter().zip(&vd.tight_sets) {
            if tight.contains(&i) {
                let lcm = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
                generators.push(
                    std::iter::once(lcm.clone())
                        .chain(v.iter().map(|x| x.numer() * (&lcm / x.denom())))
                        .collect(),
                );
            }
        }
        for r in &vd.rays {
            if dot(&h.normal, r).is_zero() {
                generators.push(std::iter::once(Int::zero()).chain(r.iter().cloned()).collect());
            }
        }
        if rank(&generators) == target_rank && seen.insert(h.normalized()) {
            out.push(i);
        }
    }
    out
}

/// The dual of a constant-one H-representation: the hull of its rows.
pub fn dual(h: &HRep) -> VRep {
    VRep::new(h.rows().clone())
}
