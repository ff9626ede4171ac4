//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's algorithms: vertices come
//! from all square subsystems solved by Cramer's rule, facets from all
//! hyperplanes through `d` points, and smoothness and normality are checked
//! straight from their definitions.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use polygen_core::dataset::{parse_samples, Sample};
use polygen_core::equivalence::{equivalent, LatticePolytope};
use polygen_core::linalg::Matrix;
use polygen_core::properties::Representation;
use rand::{Rng, RngCore};

pub const HEXAGON_H: &str = "  0  1
  0  -1
  -1 0
  1  0
  1 -1
  -1 1
";

pub const HEXAGON_VERTICES: [[i64; 2]; 6] = [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]];

pub const PAIR1_H: &str = " 0 0 0 0 0 0 1
 0 0 0 0 0 0 -1
 -1 0 0 0 0 0 0
 0 -1 0 0 0 0 0
 0 0 -1 0 0 0 0
 0 0 0 -1 0 0 0
 0 0 0 0 -1 0 0
 0 0 0 0 0 -1 0
 1 1 1 1 1 1 6
";

pub const PAIR1_V: &str = " 1 1 1 1 1 1 1
 -12 1 1 1 1 1 1
 1 -12 1 1 1 1 1
 1 1 -12 1 1 1 1
 1 1 1 -12 1 1 1
 1 1 1 1 -12 1 1
 1 1 1 1 1 -12 1
 1 1 1 1 1 0 -1
 1 1 1 1 0 1 -1
 1 1 1 0 1 1 -1
 1 1 0 1 1 1 -1
 1 0 1 1 1 1 -1
 0 1 1 1 1 1 -1
 1 1 1 1 1 1 -1
";

pub const PAIR2_H: &str = " 0 0 0 0 -1 1 0
 0 0 0 0 -1 0 0
 0 -1 0 0 0 0 0
 -1 0 0 0 0 0 0
 0 0 -1 0 0 0 0
 0 0 0 -1 0 0 0
 0 0 0 0 0 0 -1
 0 0 0 0 0 -1 0
 0 0 0 0 0 1 0
 1 1 1 1 1 -6 1
";

pub const PAIR2_V: &str = " 1 1 1 1 1 1 0
 1 1 1 1 1 0 1
 -6 1 1 1 1 0 1
 1 -6 1 1 1 0 1
 1 1 -6 1 1 0 1
 1 1 1 -6 1 0 1
 1 1 1 1 0 1 1
 1 1 1 0 1 1 1
 1 1 0 1 1 1 1
 1 0 1 1 1 1 1
 0 1 1 1 1 1 1
 1 1 1 1 1 1 1
 1 1 1 1 0 -1 1
 -11 1 1 1 0 -1 1
 1 -11 1 1 0 -1 1
 1 1 -11 1 0 -1 1
 1 1 1 -11 0 -1 1
 1 1 1 1 -12 -1 1
 1 1 1 1 1 0 -6
 1 1 1 1 0 -1 -11
";

pub const EIGHT_D_LEFT: &str = " -1 0 0 0 0 0 0 0
 0 0 0 0 0 0 0 -1
 0 -1 0 0 0 0 0 0
 0 0 0 0 -1 0 0 0
 0 0 0 0 -1 1 0 1
 0 0 0 0 0 -1 0 0
 0 0 -1 0 0 0 0 0
 0 0 0 -1 0 0 0 0
 0 0 0 0 0 0 -1 0
 1 1 1 1 0 -4 1 1
 0 0 0 0 1 0 0 -1
";

pub const EIGHT_D_RIGHT: &str = " -1 0 0 0 0 0 0 0
 0 0 0 0 0 0 0 -1
 0 -1 0 0 0 0 0 0
 0 0 0 0 -1 0 0 0
 0 0 0 0 -1 1 0 1
 0 0 0 0 0 -1 0 0
 0 0 -1 0 0 0 0 0
 0 0 0 -1 0 0 0 0
 0 0 0 0 0 0 -1 0
 1 1 1 1 0 -4 1 1
 0 0 0 0 1 0 1 -1
";

pub fn one(text: &str, rep: Representation) -> Sample {
    let mut v = parse_samples(text, rep).expect("fixture parses");
    assert_eq!(v.len(), 1);
    v.remove(0)
}

pub fn sorted_rows(m: &Matrix<i64>) -> Vec<Vec<i64>> {
    let mut r = m.to_rows();
    r.sort();
    r
}

pub fn matrix(rows: &[Vec<i64>]) -> Matrix<i64> {
    Matrix::from_rows(rows).expect("rectangular")
}

// ---------------------------------------------------------------------------
// small exact helpers

/// Determinant by cofactor expansion along the first row.
pub fn det_cofactor(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * det_cofactor(&minor)
            })
            .sum(),
    }
}

/// Rank as the size of the largest non-vanishing minor (fine for d <= 4).
pub fn rank_by_minors(vectors: &[Vec<i64>], d: usize) -> usize {
    for r in (1..=d.min(vectors.len())).rev() {
        for rows in combinations(vectors.len(), r) {
            for cols in combinations(d, r) {
                let m: Vec<Vec<i128>> = rows
                    .iter()
                    .map(|&i| cols.iter().map(|&j| vectors[i][j] as i128).collect())
                    .collect();
                if det_cofactor(&m) != 0 {
                    return r;
                }
            }
        }
    }
    0
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, x| g.gcd(x))
}

// ---------------------------------------------------------------------------
// oracles

/// Affine inequality `offset + normal . x >= 0`.
pub type Ineq = (Vec<i64>, i64);

pub fn hrep_rows_to_ineqs(rows: &[Vec<i64>]) -> Vec<Ineq> {
    rows.iter().map(|w| (w.clone(), 1)).collect()
}

/// Vertices of `{x : offset + a . x >= 0}`: feasible unique solutions of
/// every `d x d` subsystem taken with equality.
pub fn oracle_vertices(ineqs: &[Ineq], d: usize) -> BTreeSet<Vec<BigRational>> {
    let mut out = BTreeSet::new();
    for subset in combinations(ineqs.len(), d) {
        let a: Vec<Vec<i128>> = subset.iter().map(|&i| ineqs[i].0.iter().map(|&x| x as i128).collect()).collect();
        let b: Vec<i128> = subset.iter().map(|&i| -(ineqs[i].1 as i128)).collect();
        let det = det_cofactor(&a);
        if det == 0 {
            continue;
        }
        let x: Vec<BigRational> = (0..d)
            .map(|j| {
                let mut aj = a.clone();
                for (row, bi) in aj.iter_mut().zip(&b) {
                    row[j] = *bi;
                }
                BigRational::new(BigInt::from(det_cofactor(&aj)), BigInt::from(det))
            })
            .collect();
        let feasible = ineqs.iter().all(|(n, c)| {
            let v: BigRational = n
                .iter()
                .zip(&x)
                .map(|(ni, xi)| xi * BigInt::from(*ni))
                .sum::<BigRational>()
                + BigRational::from_integer(BigInt::from(*c));
            v >= BigRational::from_integer(BigInt::from(0))
        });
        if feasible {
            out.insert(x);
        }
    }
    out
}

/// Facets of the hull of full-dimensional integer points, `d` in 2..=3:
/// hyperplanes through `d` affinely independent points with every point on
/// one side. Normals primitive.
pub fn oracle_facets(points: &[Vec<i64>], d: usize) -> Vec<Ineq> {
    assert!(d == 2 || d == 3);
    let mut out = BTreeSet::new();
    for subset in combinations(points.len(), d) {
        let p0 = &points[subset[0]];
        let diffs: Vec<Vec<i64>> = subset[1..]
            .iter()
            .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect())
            .collect();
        let mut normal: Vec<i64> = if d == 2 {
            vec![-diffs[0][1], diffs[0][0]]
        } else {
            let (u, v) = (&diffs[0], &diffs[1]);
            vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
        };
        let g = gcd_all(&normal);
        if g == 0 {
            continue;
        }
        normal.iter_mut().for_each(|x| *x /= g);
        let c = -dot(&normal, p0);
        let values: Vec<i64> = points.iter().map(|p| dot(&normal, p) + c).collect();
        if values.iter().all(|&v| v >= 0) {
            out.insert((normal, c));
        } else if values.iter().all(|&v| v <= 0) {
            out.insert((normal.iter().map(|x| -x).collect(), -c));
        }
    }
    out.into_iter().collect()
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vertices among `points`: those where the tight facet normals have rank d.
pub fn oracle_hull_vertices(points: &[Vec<i64>], facets: &[Ineq], d: usize) -> Vec<Vec<i64>> {
    let set: BTreeSet<Vec<i64>> = points.iter().cloned().collect();
    set.into_iter()
        .filter(|p| {
            let tight: Vec<Vec<i64>> = facets
                .iter()
                .filter(|(n, c)| dot(n, p) + c == 0)
                .map(|(n, _)| n.clone())
                .collect();
            rank_by_minors(&tight, d) == d
        })
        .collect()
}

/// Smoothness from the definition: two vertices span an edge when the
/// facets tight at both have rank `d - 1`; every vertex needs exactly `d`
/// edges whose primitive directions have determinant +-1.
pub fn oracle_smooth(vertices: &[Vec<i64>], facets: &[Ineq], d: usize) -> bool {
    let tight = |p: &Vec<i64>| -> Vec<usize> {
        (0..facets.len()).filter(|&f| dot(&facets[f].0, p) + facets[f].1 == 0).collect()
    };
    let tights: Vec<Vec<usize>> = vertices.iter().map(tight).collect();
    for (i, v) in vertices.iter().enumerate() {
        let mut dirs = Vec::new();
        for (j, w) in vertices.iter().enumerate() {
            if i == j {
                continue;
            }
            let common: Vec<Vec<i64>> = tights[i]
                .iter()
                .filter(|f| tights[j].contains(f))
                .map(|&f| facets[f].0.clone())
                .collect();
            if rank_by_minors(&common, d) == d - 1 {
                let mut dir: Vec<i64> = w.iter().zip(v).map(|(a, b)| a - b).collect();
                let g = gcd_all(&dir);
                dir.iter_mut().for_each(|x| *x /= g);
                dirs.push(dir);
            }
        }
        if dirs.len() != d {
            return false;
        }
        let m: Vec<Vec<i128>> = dirs.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        if det_cofactor(&m).abs() != 1 {
            return false;
        }
    }
    true
}

/// Lattice points of `k P` by scanning the dilated bounding box.
pub fn scan_points(vertices: &[Vec<i64>], facets: &[Ineq], d: usize, k: i64) -> Vec<Vec<i64>> {
    let lo: Vec<i64> = (0..d).map(|j| vertices.iter().map(|v| v[j]).min().unwrap() * k).collect();
    let hi: Vec<i64> = (0..d).map(|j| vertices.iter().map(|v| v[j]).max().unwrap() * k).collect();
    let mut out = Vec::new();
    let mut p = lo.clone();
    loop {
        if facets.iter().all(|(n, c)| dot(n, &p) + c * k >= 0) {
            out.push(p.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if p[i] < hi[i] {
                p[i] += 1;
                break;
            }
            p[i] = lo[i];
        }
    }
}

/// Whether every lattice point of `k P` is a sum of `k` lattice points of
/// `P`, for `k = 2, 3`, via iterated sumsets.
pub fn oracle_normal_k23(vertices: &[Vec<i64>], facets: &[Ineq], d: usize) -> bool {
    let l1 = scan_points(vertices, facets, d, 1);
    let mut sums: HashSet<Vec<i64>> = l1.iter().cloned().collect();
    for k in 2..=3 {
        let mut next = HashSet::new();
        for s in &sums {
            for p in &l1 {
                next.insert(s.iter().zip(p).map(|(a, b)| a + b).collect::<Vec<i64>>());
            }
        }
        sums = next;
        if !scan_points(vertices, facets, d, k).iter().all(|x| sums.contains(x)) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// random generation

/// Random points in `[-r, r]^d` whose hull is full-dimensional.
pub fn random_full_dim_points<R: RngCore>(rng: &mut R, d: usize, n: usize, r: i64) -> Vec<Vec<i64>> {
    loop {
        let pts: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-r..=r)).collect())
            .collect();
        let diffs: Vec<Vec<i64>> = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
            .collect();
        if rank_by_minors(&diffs, d) == d {
            return pts;
        }
    }
}

/// A unimodular matrix as a product of random elementary operations.
pub fn random_unimodular<R: RngCore>(rng: &mut R, d: usize, steps: usize) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    if d == 1 {
        if rng.gen_bool(0.5) {
            u[0][0] = -1;
        }
        return u;
    }
    for _ in 0..steps {
        let i = rng.gen_range(0..d);
        let mut j = rng.gen_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        match rng.gen_range(0..3) {
            0 => u.swap(i, j),
            1 => u[i].iter_mut().for_each(|x| *x = -*x),
            _ => {
                let s = if rng.gen_bool(0.5) { 1 } else { -1 };
                let row_j = u[j].clone();
                for (a, b) in u[i].iter_mut().zip(row_j) {
                    *a += s * b;
                }
            }
        }
    }
    u
}

pub fn apply_affine(u: &[Vec<i64>], t: &[i64], x: &[i64]) -> Vec<i64> {
    u.iter().zip(t).map(|(row, ti)| dot(row, x) + ti).collect()
}

// ---------------------------------------------------------------------------
// reflexive polygons

fn cross(a: &[i64], b: &[i64]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn half(p: &[i64]) -> u8 {
    u8::from(!(p[1] > 0 || (p[1] == 0 && p[0] > 0)))
}

/// Lattice polygons with vertices in `[-b, b]^2` whose only interior lattice
/// point is the origin, as counter-clockwise vertex lists.
///
/// Vertices are chained in angular order around the origin. Every vertex is
/// primitive (the open segment to the origin is interior) and every fan
/// triangle `(0, a, b)` has no interior lattice point, counted by Pick's
/// formula. Each polygon is produced once, starting from its smallest-angle
/// vertex.
pub fn polygons_with_one_interior_point(b: i64) -> Vec<Vec<Vec<i64>>> {
    let mut pts: Vec<Vec<i64>> = Vec::new();
    for x in -b..=b {
        for y in -b..=b {
            if (x, y) != (0, 0) && x.gcd(&y) == 1 {
                pts.push(vec![x, y]);
            }
        }
    }
    pts.sort_by(|p, q| half(p).cmp(&half(q)).then_with(|| 0.cmp(&cross(p, q))));
    let empty_fan = |a: &[i64], c: &[i64]| {
        let area2 = cross(a, c);
        let boundary = 2 + (a[0] - c[0]).gcd(&(a[1] - c[1]));
        area2 > 0 && area2 - boundary + 2 == 0
    };
    let left_turn = |a: &[i64], m: &[i64], c: &[i64]| {
        cross(&[m[0] - a[0], m[1] - a[1]], &[c[0] - m[0], c[1] - m[1]]) > 0
    };
    let mut out = Vec::new();
    let mut chain: Vec<usize> = Vec::new();
    fn go(
        pts: &[Vec<i64>],
        chain: &mut Vec<usize>,
        out: &mut Vec<Vec<Vec<i64>>>,
        empty_fan: &dyn Fn(&[i64], &[i64]) -> bool,
        left_turn: &dyn Fn(&[i64], &[i64], &[i64]) -> bool,
    ) {
        let last = *chain.last().unwrap();
        let first = chain[0];
        if chain.len() >= 3
            && empty_fan(&pts[last], &pts[first])
            && left_turn(&pts[chain[chain.len() - 2]], &pts[last], &pts[first])
            && left_turn(&pts[last], &pts[first], &pts[chain[1]])
        {
            out.push(chain.iter().map(|&i| pts[i].clone()).collect());
        }
        for next in last + 1..pts.len() {
            if !empty_fan(&pts[last], &pts[next]) {
                continue;
            }
            if chain.len() >= 2 && !left_turn(&pts[chain[chain.len() - 2]], &pts[last], &pts[next]) {
                continue;
            }
            chain.push(next);
            go(pts, chain, out, empty_fan, left_turn);
            chain.pop();
        }
    }
    for start in 0..pts.len() {
        chain.push(start);
        go(&pts, &mut chain, &mut out, &empty_fan, &left_turn);
        chain.pop();
    }
    out
}

/// Representatives of the equivalence classes among `polys`, in first-seen order.
pub fn dedupe_by_equivalence(polys: &[Vec<Vec<i64>>]) -> Vec<LatticePolytope> {
    let mut reps: Vec<LatticePolytope> = Vec::new();
    for poly in polys {
        let p = LatticePolytope::from_points(poly).expect("lattice polygon");
        if !reps.iter().any(|q| equivalent(&p, q).is_some()) {
            reps.push(p);
        }
    }
    reps
}

/// The five smooth reflexive polygons in hyperplane form.
pub fn smooth_polygons_h() -> Vec<Vec<Vec<i64>>> {
    vec![
        vec![vec![-1, 0], vec![0, -1], vec![1, 1]],
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1], vec![1, 1]],
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1], vec![1, 1], vec![-1, -1]],
        vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![-1, 0]],
    ]
}

/// Cartesian product in hyperplane form: rows of each factor padded with zeros.
pub fn product_h(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let (da, db) = (a[0].len(), b[0].len());
    a.iter()
        .map(|r| r.iter().copied().chain(std::iter::repeat(0).take(db)).collect())
        .chain(b.iter().map(|r| std::iter::repeat(0).take(da).chain(r.iter().copied()).collect()))
        .collect()
}

/// A synthetic training set of pairwise inequivalent smooth reflexive
/// polytopes in hyperplane form: the five smooth polygons, their pairwise
/// products, triple products of the first three, and the 7d and 8d fixtures.
pub fn synthetic_training_set() -> Vec<Sample> {
    let polys = smooth_polygons_h();
    let mut mats: Vec<Vec<Vec<i64>>> = polys.clone();
    for i in 0..polys.len() {
        for j in i..polys.len() {
            mats.push(product_h(&polys[i], &polys[j]));
        }
    }
    for i in 0..3 {
        for j in i..3 {
            for k in j..3 {
                mats.push(product_h(&product_h(&polys[i], &polys[j]), &polys[k]));
            }
        }
    }
    for text in [PAIR1_H, PAIR2_H, EIGHT_D_LEFT] {
        mats.push(one(text, Representation::Hyperplane).matrix.to_rows());
    }
    mats.into_iter()
        .enumerate()
        .map(|(id, rows)| Sample {
            id,
            rep: Representation::Hyperplane,
            matrix: matrix(&rows),
        })
        .collect()
}
