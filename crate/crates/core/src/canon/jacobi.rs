//! Reduction modulo the Jacobi identity
//! `f[x,y,e]f[e,z,w] + f[y,z,e]f[e,x,w] + f[z,x,e]f[e,y,w] = 0`.
//!
//! All relations reachable from the input monomials are collected, then the
//! input is reduced against an echelon basis of their span whose pivots are
//! the largest monomials. The residue contains no pivot monomial, so it is
//! unique and does not depend on the order in which relations were found.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};

use super::{canonicalize, unit_key};
use crate::expr::{Expression, Index, Monomial, Tensor, Q};

/// Closure size beyond which the reduction gives up on further relations.
const CLOSURE_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct JacobiStats {
    pub relations: usize,
    pub eliminations: usize,
    /// f pairs sharing two indices (Casimir contractions), left unreduced.
    pub casimir_pairs: usize,
    pub truncated: bool,
}

type Row = BTreeMap<Monomial, Q>;

pub fn reduce_jacobi(e: &Expression) -> Expression {
    reduce_jacobi_traced(e).0
}

pub fn reduce_jacobi_traced(e: &Expression) -> (Expression, JacobiStats) {
    let mut stats = JacobiStats::default();
    let e = canonicalize(e);
    let mut seen: BTreeSet<Monomial> = BTreeSet::new();
    let mut queue: VecDeque<Monomial> = VecDeque::new();
    for m in &e.terms {
        let k = unit_key(m);
        if seen.insert(k.clone()) {
            queue.push_back(k);
        }
    }
    let mut basis: BTreeMap<Monomial, Row> = BTreeMap::new();
    while let Some(m) = queue.pop_front() {
        if seen.len() > CLOSURE_CAP {
            stats.truncated = true;
            break;
        }
        for rel in relations(&m, &mut stats) {
            for k in rel.keys() {
                if seen.insert(k.clone()) {
                    queue.push_back(k.clone());
                }
            }
            stats.relations += 1;
            insert_row(&mut basis, rel);
        }
    }
    let mut row: Row = BTreeMap::new();
    for m in &e.terms {
        *row.entry(unit_key(m)).or_insert_with(Q::zero) += m.coeff.q;
    }
    stats.eliminations += reduce(&basis, &mut row);
    let terms = row
        .into_iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(mut m, q)| {
            m.coeff.q = q;
            m
        })
        .collect();
    (Expression::from_terms(terms), stats)
}

fn reduce(basis: &BTreeMap<Monomial, Row>, row: &mut Row) -> usize {
    let mut n = 0;
    let mut cursor: Option<Monomial> = None;
    loop {
        let next = match &cursor {
            None => row.keys().next_back().cloned(),
            Some(c) => row.range(..c.clone()).next_back().map(|(k, _)| k.clone()),
        };
        let Some(k) = next else { break };
        cursor = Some(k.clone());
        let q = row[&k];
        if q.is_zero() {
            row.remove(&k);
            continue;
        }
        if let Some(b) = basis.get(&k) {
            for (bk, bq) in b {
                let slot = row.entry(bk.clone()).or_insert_with(Q::zero);
                *slot -= q * bq;
            }
            row.remove(&k);
            n += 1;
        }
    }
    row.retain(|_, q| !q.is_zero());
    n
}

fn insert_row(basis: &mut BTreeMap<Monomial, Row>, mut row: Row) {
    reduce(basis, &mut row);
    let Some((pivot, pq)) = row.iter().next_back().map(|(k, q)| (k.clone(), *q)) else {
        return;
    };
    for q in row.values_mut() {
        *q /= pq;
    }
    basis.insert(pivot, row);
}

/// Rotate `ix` cyclically (sign-preserving) so that `target` sits at `at`.
fn rotate(ix: &[Index; 3], target: usize, at: usize) -> [Index; 3] {
    let shift = (target + 3 - at) % 3;
    [ix[shift % 3].clone(), ix[(shift + 1) % 3].clone(), ix[(shift + 2) % 3].clone()]
}

fn relations(m: &Monomial, stats: &mut JacobiStats) -> Vec<Row> {
    let fs: Vec<usize> = m
        .tensors
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t, Tensor::Structure(_)))
        .map(|(k, _)| k)
        .collect();
    let mut out = Vec::new();
    for (a, &i) in fs.iter().enumerate() {
        for &j in &fs[a + 1..] {
            let (Tensor::Structure(fi), Tensor::Structure(fj)) = (&m.tensors[i], &m.tensors[j]) else {
                unreachable!()
            };
            let shared: Vec<(usize, usize)> = (0..3)
                .flat_map(|p| (0..3).map(move |q| (p, q)))
                .filter(|&(p, q)| fi[p].key().is_some() && fi[p].key() == fj[q].key())
                .collect();
            if shared.len() >= 2 {
                stats.casimir_pairs += 1;
                continue;
            }
            let [(p, q)] = shared[..] else { continue };
            let [x, y, e] = rotate(fi, p, 2);
            let [_, z, w] = rotate(fj, q, 0);
            let channel = |l: [&Index; 3], r: [&Index; 3]| {
                let mut mm = m.clone();
                mm.tensors[i] = Tensor::Structure([l[0].clone(), l[1].clone(), l[2].clone()]);
                mm.tensors[j] = Tensor::Structure([r[0].clone(), r[1].clone(), r[2].clone()]);
                mm.coeff.q = Q::one();
                mm
            };
            let rel = Expression::from_terms(vec![
                channel([&x, &y, &e], [&e, &z, &w]),
                channel([&y, &z, &e], [&e, &x, &w]),
                channel([&z, &x, &e], [&e, &y, &w]),
            ]);
            let c = canonicalize(&rel);
            if c.is_empty() {
                continue;
            }
            let mut row = Row::new();
            for t in c.terms {
                let q = t.coeff.q;
                row.insert(unit_key(&t), q);
            }
            out.push(row);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Context;

    fn red(s: &str) -> Expression {
        let cx = Context::builtin();
        reduce_jacobi(&cx.defs.substitute(&cx.parse(s).unwrap()))
    }

    #[test]
    fn jacobi_sum_vanishes() {
        let e = red("f[b,c,d]*f[d,a,e] + f[c,a,d]*f[d,b,e] + f[a,b,d]*f[d,c,e]");
        assert!(e.is_empty(), "{e}");
    }

    #[test]
    fn single_f_is_untouched() {
        assert_eq!(red("f[a,b,c]").to_string(), "f[a,b,c]");
    }

    #[test]
    fn idempotent() {
        let e = red("f[a,b,d]*f[d,c,e] + 2*f[c,a,d]*f[d,b,e]");
        assert!(!e.is_empty());
        assert_eq!(reduce_jacobi(&e), e);
    }

    #[test]
    fn gauge_variation_of_yang_mills_term() {
        let e = red("2*g*f[a,c,b]*F[^mu,^nu;a]*F[mu,nu;c]*omega[b]");
        assert!(e.is_empty(), "{e}");
    }
}
