//! Lattice points of bounded polyhedra.
//!
//! Points are enumerated coordinate by coordinate inside the vertex bounding
//! box. At each level every constraint tightens the range of the current
//! coordinate using the best case over the remaining box, so the search
//! only visits prefixes that can still be completed.

use std::ops::ControlFlow;

use super::{vertex_enumeration_system, LinearSystem, VertexData};
use crate::error::{Error, Result};
use crate::linalg::Int;

/// Default upper bound on the number of lattice points enumerated at once.
pub const DEFAULT_CAP: usize = 2_000_000;

/// All integer points of a bounded polyhedron, boundary included.
pub fn lattice_points(system: &LinearSystem, cap: usize) -> Result<Vec<Vec<i64>>> {
    let vd = vertex_enumeration_system(system)?;
    let (lo, hi) = bounding_box(&vd, 1)?;
    lattice_points_in_box(system, &lo, &hi, false, cap)
}

/// Integer points at which every inequality is strict (equations still hold).
pub fn interior_lattice_points(system: &LinearSystem, cap: usize) -> Result<Vec<Vec<i64>>> {
    let vd = vertex_enumeration_system(system)?;
    let (lo, hi) = bounding_box(&vd, 1)?;
    lattice_points_in_box(system, &lo, &hi, true, cap)
}

/// Integer bounding box of `k` times the vertex set.
pub fn bounding_box(vd: &VertexData, k: i64) -> Result<(Vec<i64>, Vec<i64>)> {
    if !vd.is_bounded() || vd.vertices.is_empty() {
        return Err(Error::Unbounded);
    }
    let d = vd.dim;
    let k = Int::from(k);
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for j in 0..d {
        let scaled = vd.vertices.iter().map(|v| &v[j] * &k);
        let min = scaled.clone().min().expect("nonempty");
        let max = scaled.max().expect("nonempty");
        lo.push(i64::try_from(min.floor().to_integer()).map_err(|_| Error::Overflow)?);
        hi.push(i64::try_from(max.ceil().to_integer()).map_err(|_| Error::Overflow)?);
    }
    Ok((lo, hi))
}

/// One constraint `offset + coeffs . x >= min_value` of a box search, with
/// `min_value` one for strict rows and zero otherwise.
pub(crate) struct Row {
    pub coeffs: Vec<i128>,
    pub offset: i128,
    pub strict: bool,
}

/// Integer points of the system inside `[lo, hi]`, lexicographically ordered.
///
/// With `strict`, inequalities must hold strictly; equations are always exact.
/// Fails with [`Error::CapExceeded`] once more than `cap` points are found.
pub fn lattice_points_in_box(
    system: &LinearSystem,
    lo: &[i64],
    hi: &[i64],
    strict: bool,
    cap: usize,
) -> Result<Vec<Vec<i64>>> {
    let to_i128 = |x: &Int| i128::try_from(x).map_err(|_| Error::Overflow);
    let mut rows = Vec::new();
    for h in &system.inequalities {
        rows.push(Row {
            coeffs: h.normal.iter().map(to_i128).collect::<Result<_>>()?,
            offset: to_i128(&h.offset)?,
            strict,
        });
    }
    for h in &system.equations {
        let coeffs: Vec<i128> = h.normal.iter().map(to_i128).collect::<Result<_>>()?;
        let offset = to_i128(&h.offset)?;
        rows.push(Row {
            coeffs: coeffs.iter().map(|c| -c).collect(),
            offset: -offset,
            strict: false,
        });
        rows.push(Row {
            coeffs,
            offset,
            strict: false,
        });
    }
    let mut out = Vec::new();
    let mut overflow = false;
    search_box(&rows, lo, hi, &mut |p| {
        if out.len() == cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        out.push(p.to_vec());
        ControlFlow::Continue(())
    });
    if overflow {
        return Err(Error::CapExceeded(cap));
    }
    Ok(out)
}

/// Visits the integer points of `rows` inside `[lo, hi]` in lexicographic
/// order until `visit` breaks. Returns whether it broke.
pub(crate) fn search_box(
    rows: &[Row],
    lo: &[i64],
    hi: &[i64],
    visit: &mut dyn FnMut(&[i64]) -> ControlFlow<()>,
) -> bool {
    let d = lo.len();
    // tail[r][i] = max over the box of sum_{j >= i} coeff_j x_j
    let tail: Vec<Vec<i128>> = rows
        .iter()
        .map(|row| {
            let mut t = vec![0i128; d + 1];
            for j in (0..d).rev() {
                let a = row.coeffs[j];
                t[j] = t[j + 1] + (a * lo[j] as i128).max(a * hi[j] as i128);
            }
            t
        })
        .collect();
    let mut search = Search {
        rows,
        tail: &tail,
        lo,
        hi,
        point: vec![0; d],
        partial: rows.iter().map(|r| r.offset).collect(),
        visit,
    };
    search.descend(0).is_break()
}

struct Search<'a> {
    rows: &'a [Row],
    tail: &'a [Vec<i128>],
    lo: &'a [i64],
    hi: &'a [i64],
    point: Vec<i64>,
    partial: Vec<i128>,
    visit: &'a mut dyn FnMut(&[i64]) -> ControlFlow<()>,
}

impl Search<'_> {
    fn descend(&mut self, level: usize) -> ControlFlow<()> {
        if level == self.point.len() {
            return (self.visit)(&self.point);
        }
        let mut lo = self.lo[level] as i128;
        let mut hi = self.hi[level] as i128;
        for (r, row) in self.rows.iter().enumerate() {
            let a = row.coeffs[level];
            // need partial + a x + tail >= min_value
            let min_value = i128::from(row.strict);
            let rhs = min_value - self.partial[r] - self.tail[r][level + 1];
            if a == 0 {
                if rhs > 0 {
                    return ControlFlow::Continue(());
                }
            } else if a > 0 {
                lo = lo.max(div_ceil(rhs, a));
            } else {
                hi = hi.min(div_floor(rhs, a));
            }
            if lo > hi {
                return ControlFlow::Continue(());
            }
        }
        for x in lo..=hi {
            self.point[level] = x as i64;
            for (r, row) in self.rows.iter().enumerate() {
                self.partial[r] += row.coeffs[level] * x;
            }
            let res = self.descend(level + 1);
            for (r, row) in self.rows.iter().enumerate() {
                self.partial[r] -= row.coeffs[level] * x;
            }
            res?;
        }
        ControlFlow::Continue(())
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}
