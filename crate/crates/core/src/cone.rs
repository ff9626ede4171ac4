//! Incremental double description for polyhedral cones `{y : a_i . y >= 0}`.
//!
//! Generators are kept as primitive integer vectors: new rays are positive
//! integer combinations of two adjacent rays, so no rationals are needed.
//! Lineality is handled explicitly, which lets the same routine compute
//! both vertex enumeration (cones that may contain lines) and facet
//! enumeration (polar cones of lower-dimensional hulls).

use num_traits::{Signed, Zero};

use crate::linalg::{dot, make_primitive, Int, IntVec};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64).max(1)],
        }
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn intersection(&self, other: &Self) -> Self {
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub(crate) fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }
}

#[derive(Clone, Debug)]
struct Ray {
    v: IntVec,
    zeros: BitSet,
}

/// Generators of a polyhedral cone: `cone = span(lineality) + cone(rays)`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Cone {
    pub lineality: Vec<IntVec>,
    pub rays: Vec<IntVec>,
}

/// Computes generators of `{y in R^dim : c . y >= 0 for every c in constraints}`.
///
/// Rays are returned modulo the lineality space: each ray is some
/// representative of an extreme ray of the pointed quotient cone.
pub(crate) fn generators(dim: usize, constraints: &[IntVec]) -> Cone {
    let m = constraints.len();
    let mut lineality: Vec<IntVec> = (0..dim)
        .map(|i| {
            let mut e = vec![Int::zero(); dim];
            e[i] = Int::from(1);
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (k, a) in constraints.iter().enumerate() {
        debug_assert_eq!(a.len(), dim);
        if let Some(pos) = lineality.iter().position(|l| !dot(a, l).is_zero()) {
            let mut l = lineality.swap_remove(pos);
            let mut al = dot(a, &l);
            if al.is_negative() {
                for x in l.iter_mut() {
                    *x = -&*x;
                }
                al = -al;
            }
            for other in lineality.iter_mut() {
                let ao = dot(a, other);
                if !ao.is_zero() {
                    combine_into(other, &al, &l, &ao);
                }
            }
            for r in rays.iter_mut() {
                let ar = dot(a, &r.v);
                if !ar.is_zero() {
                    combine_into(&mut r.v, &al, &l, &ar);
                }
                r.zeros.insert(k);
            }
            // l is tight on every earlier constraint, loose on this one.
            let mut zeros = BitSet::new(m);
            for j in 0..k {
                zeros.insert(j);
            }
            rays.push(Ray { v: l, zeros });
            continue;
        }

        let values: Vec<Int> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len());
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (i, s) in values.iter().enumerate() {
            if s.is_positive() {
                positive.push(i);
                next.push(rays[i].clone());
            } else if s.is_zero() {
                let mut r = rays[i].clone();
                r.zeros.insert(k);
                next.push(r);
            } else {
                negative.push(i);
            }
        }
        for &p in &positive {
            for &n in &negative {
                let common = rays[p].zeros.intersection(&rays[n].zeros);
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(i, r)| i == p || i == n || !common.is_subset(&r.zeros));
                if !adjacent {
                    continue;
                }
                // (a.p) n - (a.n) p lies on the hyperplane a . y = 0.
                let mut v: IntVec = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(xn, xp)| &values[p] * xn - &values[n] * xp)
                    .collect();
                make_primitive(&mut v);
                let mut zeros = common;
                zeros.insert(k);
                next.push(Ray { v, zeros });
            }
        }
        rays = next;
    }

    for l in lineality.iter_mut() {
        make_primitive(l);
    }
    Cone {
        lineality,
        rays: rays
            .into_iter()
            .map(|mut r| {
                make_primitive(&mut r.v);
                r.v
            })
            .collect(),
    }
}

/// `target <- coef_l * target - coef_t * l`, then made primitive.
fn combine_into(target: &mut IntVec, coef_l: &Int, l: &[Int], coef_t: &Int) {
    for (x, y) in target.iter_mut().zip(l) {
        *x = coef_l * &*x - coef_t * y;
    }
    make_primitive(target);
}
