//! Normality of full-dimensional lattice polytopes through a triangulation.
//!
//! The cone over `P` is covered by the cones over the simplices of a pulling
//! triangulation. Every lattice point of such a cone is a nonnegative integer
//! combination of the simplex generators `(s_i, 1)` plus one point of the
//! half-open fundamental parallelepiped, so the Hilbert basis of the cone over
//! `P` lies among the generators and those parallelepiped points, in degree at
//! most `d - 1`.
//!
//! A parallelepiped point `(x, k)` passes if `x - p` lies in `(k-1)P` for some
//! lattice point `p` of `P`. If every point of degree `2 ..= d - 1` passes, no
//! Hilbert basis element of degree two or more is irreducible, so `P` is
//! normal. A point that fails is a sum of no `k` lattice points of `P`.
//!
//! The work is proportional to the normalized volume of `P`, with nothing
//! stored per point.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::rc::Rc;

use crate::linalg::{hnf, Int, Matrix};
use crate::polytope::{facet_indices, search_box, LinearSystem, Row, VertexData};
use crate::properties::NormalityCheck;

/// How many more parallelepiped points than stored lattice points the
/// streaming check may visit under the same cap.
pub const STREAM_FACTOR: usize = 500;

/// Decides normality of a full-dimensional bounded lattice polytope.
///
/// Gives `Unverified` when the normalized volume exceeds
/// `cap * STREAM_FACTOR` or the arithmetic leaves 64 bits.
pub(crate) fn check_normal_triangulated(
    system: &LinearSystem,
    vd: &VertexData,
    cap: usize,
) -> NormalityCheck {
    let d = system.dim;
    let Some(vertices) = vd.integer_vertices() else {
        return NormalityCheck::NotNormal { k: 1, witness: None };
    };
    if d < 3 {
        return NormalityCheck::Normal;
    }
    let facet_ids = facet_indices(system, vd);
    let mut facets = Vec::with_capacity(facet_ids.len());
    for &i in &facet_ids {
        let h = &system.inequalities[i];
        let normal: Option<Vec<i64>> = h.normal.iter().map(|x| i64::try_from(x).ok()).collect();
        let (Some(normal), Ok(offset)) = (normal, i64::try_from(&h.offset)) else {
            return NormalityCheck::Unverified;
        };
        facets.push((normal, offset));
    }
    let incidence: Vec<Vec<usize>> = facet_ids
        .iter()
        .map(|&f| (0..vertices.len()).filter(|&v| vd.tight_sets[v].contains(&f)).collect())
        .collect();

    let mut tri = Triangulator {
        vertices: &vertices,
        incidence: &incidence,
        memo: HashMap::new(),
    };
    let all: Vec<usize> = (0..vertices.len()).collect();
    let simplices = tri.pull(&all, d);

    let mut cells = Vec::new();
    let mut volume: u128 = 0;
    let limit = (cap as u128).saturating_mul(STREAM_FACTOR as u128);
    for simplex in simplices.iter() {
        match Cell::new(simplex, &vertices) {
            Ok(Some(cell)) => {
                volume += cell.m as u128;
                if volume > limit {
                    return NormalityCheck::Unverified;
                }
                cells.push(cell);
            }
            Ok(None) => {}
            Err(()) => return NormalityCheck::Unverified,
        }
    }

    let mut decomposer = Decomposer::new(&vertices, &facets);
    let mut values = vec![0i64; facets.len()];
    for cell in &cells {
        let slacks: Vec<Vec<i64>> = cell.simplex.iter().map(|&i| decomposer.slack(&vertices[i])).collect();
        // sum_i lambda_i slack_i stays below n m max(slack)
        let widest = slacks.iter().flatten().copied().max().unwrap_or(0);
        if (cell.m as i128) * (widest as i128 + 1) * (d as i128 + 1) > i64::MAX as i128 {
            return NormalityCheck::Unverified;
        }
        let mut witness = None;
        cell.for_each_point(2..d as i64, |lambda, k| {
            for (f, v) in values.iter_mut().enumerate() {
                *v = lambda.iter().zip(&slacks).map(|(l, s)| l * s[f]).sum::<i64>() / cell.m;
            }
            if decomposer.decomposes(&values, k, &slacks, || cell.point(lambda)) {
                ControlFlow::Continue(())
            } else {
                witness = Some((k, cell.point(lambda)));
                ControlFlow::Break(())
            }
        });
        if let Some((k, x)) = witness {
            return NormalityCheck::NotNormal { k, witness: Some(x) };
        }
    }
    NormalityCheck::Normal
}

/// Pulling triangulation over vertex-index sets, memoized per face.
struct Triangulator<'a> {
    vertices: &'a [Vec<i64>],
    /// Per facet of the polytope, the sorted indices of its vertices.
    incidence: &'a [Vec<usize>],
    memo: HashMap<Vec<usize>, Rc<Vec<Vec<usize>>>>,
}

impl Triangulator<'_> {
    /// Simplices of a face of dimension `dim` given by its sorted vertex set.
    fn pull(&mut self, face: &[usize], dim: usize) -> Rc<Vec<Vec<usize>>> {
        if let Some(hit) = self.memo.get(face) {
            return hit.clone();
        }
        let out = if dim == 0 || face.len() == dim + 1 {
            vec![face.to_vec()]
        } else {
            let apex = face[0];
            let mut out = Vec::new();
            for sub in self.subfacets(face, dim) {
                if sub.binary_search(&apex).is_ok() {
                    continue;
                }
                for s in self.pull(&sub, dim - 1).iter() {
                    let mut simplex = Vec::with_capacity(dim + 1);
                    simplex.push(apex);
                    simplex.extend_from_slice(s);
                    out.push(simplex);
                }
            }
            out
        };
        let out = Rc::new(out);
        self.memo.insert(face.to_vec(), out.clone());
        out
    }

    /// Facets of a face: its intersections with polytope facets that drop
    /// the dimension by exactly one.
    fn subfacets(&self, face: &[usize], dim: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for inc in self.incidence {
            let sub: Vec<usize> = face.iter().copied().filter(|v| inc.binary_search(v).is_ok()).collect();
            if sub.len() < dim || sub.len() == face.len() || out.contains(&sub) {
                continue;
            }
            if affine_dim(self.vertices, &sub) == dim - 1 {
                out.insert(sub);
            }
        }
        out
    }
}

fn affine_dim(vertices: &[Vec<i64>], set: &[usize]) -> usize {
    let base = &vertices[set[0]];
    let mut rows: Vec<Vec<i128>> = set[1..]
        .iter()
        .map(|&i| vertices[i].iter().zip(base).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    let cols = base.len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[c];
            if f == 0 {
                continue;
            }
            let g = gcd(pivot[c], f);
            let (a, b) = (pivot[c] / g, f / g);
            for (x, y) in row.iter_mut().zip(&pivot) {
                *x = *x * a - y * b;
            }
            let content = row.iter().fold(0, |acc, &x| gcd(acc, x));
            if content > 1 {
                row.iter_mut().for_each(|x| *x /= content);
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Determinant and adjugate of a square integer matrix by fraction-free
/// Gauss-Jordan elimination. `None` on a singular matrix or overflow.
fn det_adjugate(m: &[Vec<i64>]) -> Option<(i128, Vec<Vec<i128>>)> {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<i128> = row.iter().map(|&x| x as i128).collect();
            r.extend((0..n).map(|j| i128::from(i == j)));
            r
        })
        .collect();
    let mut prev = 1i128;
    let mut swaps = 0;
    for k in 0..n {
        let p = (k..n).find(|&r| a[r][k] != 0)?;
        if p != k {
            a.swap(p, k);
            swaps += 1;
        }
        let pivot_row = a[k].clone();
        let pivot = pivot_row[k];
        for (i, row) in a.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let f = row[k];
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = pivot.checked_mul(*x)?.checked_sub(f.checked_mul(*y)?)? / prev;
            }
        }
        prev = pivot;
    }
    // rows were permuted, so the left block is det(PM) I and the right block
    // is det(PM) M^-1
    let flip = if swaps % 2 == 0 { 1 } else { -1 };
    let adj = a
        .into_iter()
        .map(|row| row[n..].iter().map(|&x| x * flip).collect())
        .collect();
    Some((prev * flip, adj))
}

/// The fundamental parallelepiped of one non-unimodular simplex.
struct Cell {
    simplex: Vec<usize>,
    /// Rows `(s_i, 1)` over the simplex vertices `s_i`.
    generators: Vec<Vec<i64>>,
    /// Index of the generator lattice, the normalized volume of the simplex.
    m: i64,
    /// Coefficients of each unit vector in the generator basis, as
    /// numerators over `m` reduced into `[0, m)`.
    steps: Vec<Vec<i64>>,
    /// `(diag_j - 1) * steps_j` reduced, undone when coordinate `j` wraps.
    wraps: Vec<Vec<i64>>,
    /// Diagonal of a triangular basis of the generator lattice; the box
    /// `0 <= z_j < diag_j` holds one representative per coset.
    diag: Vec<i64>,
}

impl Cell {
    /// `Ok(None)` for a unimodular simplex, `Err` on overflow.
    fn new(simplex: &[usize], vertices: &[Vec<i64>]) -> std::result::Result<Option<Self>, ()> {
        let generators: Vec<Vec<i64>> = simplex
            .iter()
            .map(|&i| {
                let mut g = vertices[i].clone();
                g.push(1);
                g
            })
            .collect();
        let (det, adj) = det_adjugate(&generators).ok_or(())?;
        if det.abs() == 1 {
            return Ok(None);
        }
        let m = i64::try_from(det.abs()).map_err(|_| ())?;
        let steps: Vec<Vec<i64>> = adj
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&a| (a * det.signum()).rem_euclid(m as i128) as i64)
                    .collect()
            })
            .collect();
        let lattice = Matrix::from_rows(&generators).map_err(|_| ())?.map(|&x| Int::from(x));
        let (h, _) = hnf(&lattice);
        let diag: Vec<i64> = (0..generators.len())
            .map(|j| i64::try_from(h.get(j, j)).map_err(|_| ()))
            .collect::<std::result::Result<_, _>>()?;
        let wraps = steps
            .iter()
            .zip(&diag)
            .map(|(row, &dj)| {
                row.iter()
                    .map(|&s| ((dj as i128 - 1) * s as i128).rem_euclid(m as i128) as i64)
                    .collect()
            })
            .collect();
        Ok(Some(Cell {
            simplex: simplex.to_vec(),
            generators,
            m,
            steps,
            wraps,
            diag,
        }))
    }

    /// The point `x` of the parallelepiped point with numerators `lambda`.
    fn point(&self, lambda: &[i64]) -> Vec<i64> {
        let d = self.generators.len() - 1;
        (0..d)
            .map(|j| {
                let num: i128 = lambda
                    .iter()
                    .zip(&self.generators)
                    .map(|(&l, g)| l as i128 * g[j] as i128)
                    .sum();
                (num / self.m as i128) as i64
            })
            .collect()
    }

    /// Visits the numerators of the parallelepiped points whose degree lies
    /// in `degrees`, with that degree, until `visit` breaks.
    fn for_each_point(
        &self,
        degrees: std::ops::Range<i64>,
        mut visit: impl FnMut(&[i64], i64) -> ControlFlow<()>,
    ) {
        let n = self.generators.len();
        let m = self.m;
        let lo = degrees.start * m;
        let hi = degrees.end * m;
        let mut z = vec![0i64; n];
        let mut lambda = vec![0i64; n];
        let mut sum = 0i64;
        loop {
            if sum >= lo && sum < hi && visit(&lambda, sum / m).is_break() {
                return;
            }
            // odometer over the coset box
            let mut j = 0;
            loop {
                if j == n {
                    return;
                }
                z[j] += 1;
                if z[j] < self.diag[j] {
                    for (l, s) in lambda.iter_mut().zip(&self.steps[j]) {
                        *l += s;
                        if *l >= m {
                            *l -= m;
                        }
                    }
                    break;
                }
                z[j] = 0;
                for (l, w) in lambda.iter_mut().zip(&self.wraps[j]) {
                    *l -= w;
                    if *l < 0 {
                        *l += m;
                    }
                }
                j += 1;
            }
            sum = lambda.iter().sum();
        }
    }
}

/// Number of recently successful summands kept as hints.
const RECENT: usize = 32;

/// Existence of a lattice point `p` of `P` with `x - p` in `(k-1)P`, phrased
/// through facet values: `a . (x - p) + (k-1) c = (a . x + k c) - (a . p + c)`.
struct Decomposer {
    facets: Vec<(Vec<i64>, i64)>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    /// Rows of `P` followed by rows of `x - (k-1)P`; only offsets change.
    rows: Vec<Row>,
    /// Facet values of summands that worked lately, most recent first.
    recent: Vec<Vec<i64>>,
}

impl Decomposer {
    fn new(vertices: &[Vec<i64>], facets: &[(Vec<i64>, i64)]) -> Self {
        let d = vertices[0].len();
        let lo = (0..d).map(|j| vertices.iter().map(|v| v[j]).min().unwrap()).collect();
        let hi = (0..d).map(|j| vertices.iter().map(|v| v[j]).max().unwrap()).collect();
        let wide = |a: &[i64], sign: i128| a.iter().map(|&x| sign * x as i128).collect();
        let mut rows: Vec<Row> = facets
            .iter()
            .map(|(a, c)| Row {
                coeffs: wide(a, 1),
                offset: *c as i128,
                strict: false,
            })
            .collect();
        rows.extend(facets.iter().map(|(a, _)| Row {
            coeffs: wide(a, -1),
            offset: 0,
            strict: false,
        }));
        Decomposer {
            facets: facets.to_vec(),
            lo,
            hi,
            rows,
            recent: Vec::new(),
        }
    }

    /// Facet values `a . p + c` of a point.
    fn slack(&self, p: &[i64]) -> Vec<i64> {
        self.facets
            .iter()
            .map(|(a, c)| a.iter().zip(p).map(|(ai, pi)| ai * pi).sum::<i64>() + c)
            .collect()
    }

    /// `values` are the facet values `a . x + k c` of the point; `hints` are
    /// facet values of lattice points of `P` to try before searching, and
    /// `point` recovers `x` for the search.
    fn decomposes(
        &mut self,
        values: &[i64],
        k: i64,
        hints: &[Vec<i64>],
        point: impl FnOnce() -> Vec<i64>,
    ) -> bool {
        let fits = |h: &Vec<i64>| values.iter().zip(h).all(|(v, s)| v >= s);
        if let Some(i) = self.recent.iter().position(fits) {
            self.recent[..=i].rotate_right(1);
            return true;
        }
        if hints.iter().any(fits) {
            return true;
        }
        let x = point();
        let nf = self.facets.len();
        for ((row, (_, c)), v) in self.rows[nf..].iter_mut().zip(&self.facets).zip(values) {
            row.offset = (v - c) as i128;
        }
        let lo: Vec<i64> = (0..x.len())
            .map(|j| self.lo[j].max(x[j] - (k - 1) * self.hi[j]))
            .collect();
        let hi: Vec<i64> = (0..x.len())
            .map(|j| self.hi[j].min(x[j] - (k - 1) * self.lo[j]))
            .collect();
        let mut found = None;
        search_box(&self.rows, &lo, &hi, &mut |p| {
            found = Some(p.to_vec());
            ControlFlow::Break(())
        });
        let Some(p) = found else {
            return false;
        };
        if self.recent.len() == RECENT {
            self.recent.pop();
        }
        let s = self.slack(&p);
        self.recent.insert(0, s);
        true
    }
}
