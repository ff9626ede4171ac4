//! Copy detection, row-permutation matching and lattice equivalence.
//!
//! Two lattice polytopes are equivalent when `x -> U x + t` with `U`
//! unimodular and `t` integral maps the vertices of one onto the other.
//! The search fixes a vertex `v0` of `P` and `d` neighbours of it that span
//! the space, then tries every compatible image of these anchors in `Q`.
//! Each full anchor assignment determines `(U, t)`, which is kept only when
//! it is integral, unimodular and maps the vertex set onto the vertex set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::dataset::{serialize, Sample};
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, rank, Int, IntVec, Matrix, Rat};
use crate::polytope::{facet_enumeration, vertex_enumeration, HRep, VRep};
use crate::properties::Representation;

/// Byte-identical serialized matrices of a training set.
#[derive(Clone, Debug, Default)]
pub struct CopySet {
    strings: HashSet<String>,
}

impl CopySet {
    pub fn new(training: &[Sample]) -> Self {
        Self {
            strings: training.iter().map(|s| serialize(&s.matrix)).collect(),
        }
    }

    pub fn contains(&self, matrix: &Matrix<i64>) -> bool {
        self.strings.contains(&serialize(matrix))
    }
}

/// True iff the serialized matrix equals that of some training sample.
pub fn exact_copy(matrix: &Matrix<i64>, training: &[Sample]) -> bool {
    let s = serialize(matrix);
    training.iter().any(|t| serialize(&t.matrix) == s)
}

/// True iff the two matrices have the same multiset of rows.
pub fn row_permutation_match(a: &Matrix<i64>, b: &Matrix<i64>) -> bool {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return false;
    }
    let mut ra = a.to_rows();
    let mut rb = b.to_rows();
    ra.sort_unstable();
    rb.sort_unstable();
    ra == rb
}

/// A full-description lattice polytope: vertices, primitive facets, and the
/// incidence data the equivalence search uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Vec<i64>>,
    /// `(a, c)` with `a . x + c >= 0`, `a` primitive.
    facets: Vec<(Vec<i64>, i64)>,
    /// `pairing[i][f] = a_f . v_i + c_f`, the lattice distance of vertex `i`
    /// from facet `f`.
    pairing: Vec<Vec<i64>>,
    neighbors: Vec<Vec<usize>>,
    full_dim: bool,
}

impl LatticePolytope {
    /// Convex hull of integer points; non-vertices are discarded.
    pub fn from_points(points: &[Vec<i64>]) -> Result<Self> {
        let hull = facet_enumeration(&VRep::from_rows(points)?)?;
        let dim = hull.facets.dim;
        let vertices = hull
            .vertex_data
            .integer_vertices()
            .ok_or(Error::NonLatticeVertex)?;
        let to_i64 = |x: &Int| i64::try_from(x).map_err(|_| Error::Overflow);
        let facets = hull
            .facets
            .facets
            .iter()
            .map(|h| Ok((h.normal.iter().map(to_i64).collect::<Result<Vec<_>>>()?, to_i64(&h.offset)?)))
            .collect::<Result<Vec<_>>>()?;
        let pairing: Vec<Vec<i64>> = vertices
            .iter()
            .map(|v| facets.iter().map(|(a, c)| dot_i64(a, v) + c).collect())
            .collect();

        let n = vertices.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let common: Vec<usize> = (0..facets.len())
                    .filter(|&f| pairing[i][f] == 0 && pairing[j][f] == 0)
                    .collect();
                let blocked = (0..n)
                    .filter(|&k| k != i && k != j)
                    .any(|k| common.iter().all(|&f| pairing[k][f] == 0));
                if !blocked {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        Ok(Self {
            dim,
            vertices,
            facets,
            pairing,
            neighbors,
            full_dim: hull.vertex_data.full_dim,
        })
    }

    /// The polytope `{x : 1 + w . x >= 0}`; must be bounded with integral vertices.
    pub fn from_hrep(hrep: &HRep) -> Result<Self> {
        let vd = vertex_enumeration(hrep)?;
        if !vd.is_bounded() {
            return Err(Error::Unbounded);
        }
        let vertices = vd.integer_vertices().ok_or(Error::NonLatticeVertex)?;
        Self::from_points(&vertices)
    }

    pub fn from_matrix(matrix: &Matrix<i64>, rep: Representation) -> Result<Self> {
        match rep {
            Representation::Hyperplane => Self::from_hrep(&HRep::new(matrix.clone())),
            Representation::ConvexHull => Self::from_points(&matrix.to_rows()),
        }
    }

    pub fn from_sample(sample: &Sample) -> Result<Self> {
        Self::from_matrix(&sample.matrix, sample.rep)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[(Vec<i64>, i64)] {
        &self.facets
    }

    pub fn neighbors(&self, vertex: usize) -> &[usize] {
        &self.neighbors[vertex]
    }

    pub fn is_full_dim(&self) -> bool {
        self.full_dim
    }

    /// Counts plus the sorted multiset of `a . v + c - 1` over all facet and
    /// vertex pairs. For a reflexive polytope with its interior point at the
    /// origin every `c` is one and the values are the plain pairings `a . v`.
    pub fn invariant_key(&self) -> InvariantKey {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for row in &self.pairing {
            for &x in row {
                *counts.entry(x - 1).or_insert(0) += 1;
            }
        }
        InvariantKey {
            n_vertices: self.vertices.len(),
            n_facets: self.facets.len(),
            pairing: counts.into_iter().collect(),
        }
    }

    fn signature(&self, vertex: usize) -> Vec<i64> {
        let mut s = self.pairing[vertex].clone();
        s.sort_unstable();
        s
    }

    fn common_facets(&self, i: usize, j: usize) -> usize {
        (0..self.facets.len())
            .filter(|&f| self.pairing[i][f] == 0 && self.pairing[j][f] == 0)
            .count()
    }

    fn lattice_length(&self, i: usize, j: usize) -> i64 {
        self.vertices[i]
            .iter()
            .zip(&self.vertices[j])
            .fold(0i64, |g, (a, b)| g.gcd(&(a - b)))
    }
}

fn dot_i64(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lattice-equivalence invariant used to shortlist candidates.
///
/// The pairing multiset is stored as `(value, multiplicity)` in increasing
/// value order. Serialized as `nv/nf/value:count,value:count,...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InvariantKey {
    pub n_vertices: usize,
    pub n_facets: usize,
    pub pairing: Vec<(i64, usize)>,
}

impl fmt::Display for InvariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/", self.n_vertices, self.n_facets)?;
        for (i, (v, c)) in self.pairing.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}:{c}")?;
        }
        Ok(())
    }
}

impl FromStr for InvariantKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid invariant key {s:?}"));
        let mut parts = s.splitn(3, '/');
        let n_vertices = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let n_facets = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let rest = parts.next().ok_or_else(bad)?;
        let pairing = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|pair| {
                    let (v, c) = pair.split_once(':').ok_or_else(bad)?;
                    Ok((v.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            n_vertices,
            n_facets,
            pairing,
        })
    }
}

/// `x -> U x + t` with `U` unimodular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceWitness {
    pub u: Matrix<i64>,
    pub t: Vec<i64>,
}

impl EquivalenceWitness {
    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        (0..self.u.nrows())
            .map(|i| dot_i64(self.u.row(i), x) + self.t[i])
            .collect()
    }

    /// Re-checks the witness from scratch: `det U = +-1` and the image of the
    /// vertex set of `p` is exactly the vertex set of `q`.
    pub fn verify(&self, p: &LatticePolytope, q: &LatticePolytope) -> bool {
        let d = p.dim;
        if q.dim != d || self.u.nrows() != d || self.u.ncols() != d || self.t.len() != d {
            return false;
        }
        match det(&self.u.to_int()) {
            Ok(x) if x.abs().is_one() => {}
            _ => return false,
        }
        if p.vertices.len() != q.vertices.len() {
            return false;
        }
        let mut image: Vec<Vec<i64>> = p.vertices.iter().map(|v| self.apply(v)).collect();
        image.sort_unstable();
        image == q.vertices
    }

    /// The inverse map `x -> U^-1 x - U^-1 t`.
    pub fn inverse(&self) -> Result<Self> {
        let inv = inverse(&self.u.to_int().to_rat())?;
        let rows = inv
            .to_rows()
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| {
                        if !x.is_integer() {
                            return Err(Error::Inconsistency("witness is not unimodular".into()));
                        }
                        i64::try_from(x.to_integer()).map_err(|_| Error::Overflow)
                    })
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let u = Matrix::from_rows(&rows)?;
        let t = (0..u.nrows()).map(|i| -dot_i64(u.row(i), &self.t)).collect();
        Ok(Self { u, t })
    }
}

/// Searches for a witness mapping `p` onto `q`. Only full-dimensional
/// polytopes are compared; anything else yields `None`.
pub fn equivalent(p: &LatticePolytope, q: &LatticePolytope) -> Option<EquivalenceWitness> {
    if p.dim != q.dim
        || !p.full_dim
        || !q.full_dim
        || p.vertices.len() != q.vertices.len()
        || p.facets.len() != q.facets.len()
    {
        return None;
    }
    if p.invariant_key() != q.invariant_key() {
        return None;
    }
    let d = p.dim;
    let p_sigs: Vec<Vec<i64>> = (0..p.vertices.len()).map(|i| p.signature(i)).collect();
    let q_sigs: Vec<Vec<i64>> = (0..q.vertices.len()).map(|i| q.signature(i)).collect();
    let class_size = |sig: &Vec<i64>| q_sigs.iter().filter(|s| *s == sig).count();

    // v0: the vertex with the rarest signature.
    let v0 = (0..p.vertices.len()).min_by_key(|&i| (class_size(&p_sigs[i]), i))?;
    if class_size(&p_sigs[v0]) == 0 {
        return None;
    }
    let anchors = choose_anchors(p, v0)?;
    let neighbor_anchor: Vec<bool> = anchors
        .iter()
        .map(|&a| p.neighbors[v0].contains(&a))
        .collect();

    // B_P has columns v_i - v0; adj(B_P) = det * B_P^-1.
    let bp: Vec<Vec<i64>> = (0..d)
        .map(|r| anchors.iter().map(|&a| p.vertices[a][r] - p.vertices[v0][r]).collect())
        .collect();
    let bp = Matrix::from_rows(&bp).ok()?;
    let det_p = det(&bp.to_int()).ok()?;
    let inv = inverse(&bp.to_int().to_rat()).ok()?;
    let det_rat = Rat::from_integer(det_p.clone());
    let adj: Vec<Vec<Int>> = inv
        .to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|x| (x * &det_rat).to_integer()).collect())
        .collect();

    let q_set: HashSet<&[i64]> = q.vertices.iter().map(Vec::as_slice).collect();
    let search = AnchorSearch {
        p,
        q,
        p_sigs: &p_sigs,
        q_sigs: &q_sigs,
        v0,
        anchors: &anchors,
        neighbor_anchor: &neighbor_anchor,
        adj: &adj,
        det_p: &det_p,
        q_set: &q_set,
    };
    for w0 in 0..q.vertices.len() {
        if q_sigs[w0] != p_sigs[v0] {
            continue;
        }
        let mut assigned = Vec::with_capacity(d);
        if let Some(w) = search.extend(w0, &mut assigned) {
            if w.verify(p, q) {
                return Some(w);
            }
        }
    }
    None
}

/// `d` vertices whose differences from `v0` are linearly independent,
/// neighbours of `v0` first.
fn choose_anchors(p: &LatticePolytope, v0: usize) -> Option<Vec<usize>> {
    let d = p.dim;
    let diff = |i: usize| -> IntVec {
        p.vertices[i]
            .iter()
            .zip(&p.vertices[v0])
            .map(|(a, b)| Int::from(a - b))
            .collect()
    };
    let mut chosen = Vec::new();
    let mut span: Vec<IntVec> = Vec::new();
    let others = (0..p.vertices.len()).filter(|i| *i != v0 && !p.neighbors[v0].contains(i));
    for i in p.neighbors[v0].iter().copied().chain(others) {
        if chosen.len() == d {
            break;
        }
        span.push(diff(i));
        if rank(&span) == span.len() {
            chosen.push(i);
        } else {
            span.pop();
        }
    }
    (chosen.len() == d).then_some(chosen)
}

struct AnchorSearch<'a> {
    p: &'a LatticePolytope,
    q: &'a LatticePolytope,
    p_sigs: &'a [Vec<i64>],
    q_sigs: &'a [Vec<i64>],
    v0: usize,
    anchors: &'a [usize],
    neighbor_anchor: &'a [bool],
    adj: &'a [Vec<Int>],
    det_p: &'a Int,
    q_set: &'a HashSet<&'a [i64]>,
}

impl AnchorSearch<'_> {
    fn extend(&self, w0: usize, assigned: &mut Vec<usize>) -> Option<EquivalenceWitness> {
        let k = assigned.len();
        if k == self.anchors.len() {
            return self.solve(w0, assigned);
        }
        let v = self.anchors[k];
        let candidates: Vec<usize> = if self.neighbor_anchor[k] {
            self.q.neighbors[w0].clone()
        } else {
            (0..self.q.vertices.len()).collect()
        };
        for w in candidates {
            if w == w0 || assigned.contains(&w) || self.q_sigs[w] != self.p_sigs[v] {
                continue;
            }
            let pairs_ok = std::iter::once((self.v0, w0))
                .chain(self.anchors[..k].iter().copied().zip(assigned.iter().copied()))
                .all(|(pv, qw)| {
                    self.p.lattice_length(v, pv) == self.q.lattice_length(w, qw)
                        && self.p.common_facets(v, pv) == self.q.common_facets(w, qw)
                });
            if !pairs_ok {
                continue;
            }
            assigned.push(w);
            let found = self.extend(w0, assigned);
            assigned.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// `U = B_Q adj(B_P) / det(B_P)`, `t = w0 - U v0`, then the vertex map.
    fn solve(&self, w0: usize, assigned: &[usize]) -> Option<EquivalenceWitness> {
        let d = self.p.dim;
        let q = &self.q.vertices;
        let mut u = Vec::with_capacity(d);
        for r in 0..d {
            let bq_row: Vec<i64> = assigned.iter().map(|&w| q[w][r] - q[w0][r]).collect();
            let mut row = Vec::with_capacity(d);
            for c in 0..d {
                let num: Int = (0..d).map(|m| Int::from(bq_row[m]) * &self.adj[m][c]).sum();
                let (quot, rem) = num.div_rem(self.det_p);
                if !rem.is_zero() {
                    return None;
                }
                row.push(i64::try_from(&quot).ok()?);
            }
            u.push(row);
        }
        let u = Matrix::from_rows(&u).ok()?;
        let v0 = &self.p.vertices[self.v0];
        let t: Vec<i64> = (0..d)
            .map(|i| q[w0][i] - dot_i64(u.row(i), v0))
            .collect();
        let witness = EquivalenceWitness { u, t };
        self.p
            .vertices
            .iter()
            .all(|v| self.q_set.contains(witness.apply(v).as_slice()))
            .then_some(witness)
    }
}

/// Training-sample ids grouped by invariant key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetIndex {
    map: BTreeMap<InvariantKey, Vec<usize>>,
}

impl DatasetIndex {
    /// Keys every sample in parallel; fails if any sample is not a bounded
    /// lattice polytope.
    pub fn build(training: &[Sample]) -> Result<Self> {
        let keys = training
            .par_iter()
            .map(|s| Ok((LatticePolytope::from_sample(s)?.invariant_key(), s.id)))
            .collect::<Result<Vec<_>>>()?;
        let mut map: BTreeMap<InvariantKey, Vec<usize>> = BTreeMap::new();
        for (key, id) in keys {
            map.entry(key).or_default().push(id);
        }
        for ids in map.values_mut() {
            ids.sort_unstable();
        }
        Ok(Self { map })
    }

    pub fn candidates(&self, key: &InvariantKey) -> &[usize] {
        self.map.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn n_keys(&self) -> usize {
        self.map.len()
    }

    pub fn n_samples(&self) -> usize {
        self.map.values().map(Vec::len).sum()
    }

    /// One line per key: the key, a tab, then space-separated ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, ids) in &self.map {
            out.push_str(&key.to_string());
            out.push('\t');
            let ids: Vec<String> = ids.iter().map(usize::to_string).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, ids) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("index line without tab: {line:?}")))?;
            let ids = ids
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad id {x:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            map.insert(key.parse()?, ids);
        }
        Ok(Self { map })
    }
}

fn lookup(training: &[Sample], id: usize) -> Option<&Sample> {
    match training.get(id) {
        Some(s) if s.id == id => Some(s),
        _ => training
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &training[i])
            .or_else(|| training.iter().find(|s| s.id == id)),
    }
}

/// First training sample (by id) equivalent to `p`, with its witness.
pub fn find_equivalent_in_index(
    p: &LatticePolytope,
    index: &DatasetIndex,
    training: &[Sample],
) -> Option<(usize, EquivalenceWitness)> {
    let key = p.invariant_key();
    for &id in index.candidates(&key) {
        let Some(sample) = lookup(training, id) else {
            continue;
        };
        let Ok(q) = LatticePolytope::from_sample(sample) else {
            continue;
        };
        if let Some(w) = equivalent(p, &q) {
            return Some((id, w));
        }
    }
    None
}
