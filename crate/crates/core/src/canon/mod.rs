//! Normal forms for expressions.
//!
//! [`canonicalize`] contracts metrics and deltas, then finds the
//! lexicographically least arrangement of each monomial over factor orders,
//! slot permutations of `f`/`g`/`delta`, derivative orders and dummy labels.
//! Like monomials are merged afterwards. [`reduce_jacobi`] quotients the
//! result by the Jacobi relations between pairs of structure constants.

mod constraints;
mod jacobi;

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::expr::{Atom, Coeff, Expression, Index, IndexKey, IndexKind, Label, Monomial, Name, Tensor, Q};

pub use constraints::{is_zero, is_zero_with, Certificate, CertificateKind, Constraint, ConstraintSet, ReductionTrace};
pub use jacobi::{reduce_jacobi, reduce_jacobi_traced, JacobiStats};

/// Order of field symbols inside a canonical monomial.
fn symbol_rank(name: &str) -> u8 {
    match name {
        "A" => 0,
        "B" => 1,
        "j" => 2,
        "cbar" => 3,
        "c" => 4,
        _ => 5,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum ClassKey {
    Tensor(u8),
    Atom {
        rank: u8,
        name: Name,
        nderiv: usize,
        nl: usize,
        na: usize,
        odd: bool,
        constant: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Tok {
    Explicit(u8),
    Dummy(u32),
    Free(IndexKind, Name, bool),
}

#[derive(Clone, Debug)]
enum Factor {
    T(Tensor),
    A(Atom, usize),
}

impl Factor {
    fn class(&self) -> ClassKey {
        match self {
            Factor::T(Tensor::Structure(_)) => ClassKey::Tensor(0),
            Factor::T(Tensor::Metric(_)) => ClassKey::Tensor(1),
            Factor::T(Tensor::Delta(_)) => ClassKey::Tensor(2),
            Factor::A(a, _) => ClassKey::Atom {
                rank: symbol_rank(&a.name),
                name: a.name.clone(),
                nderiv: a.derivs.len(),
                nl: a.lorentz.len(),
                na: a.adjoint.len(),
                odd: a.odd,
                constant: a.constant,
            },
        }
    }

    /// Slot arrangements as (index list, sign flip).
    fn arrangements(&self) -> Vec<(Vec<Index>, bool)> {
        match self {
            Factor::T(Tensor::Structure([x, y, z])) => vec![
                (vec![x.clone(), y.clone(), z.clone()], false),
                (vec![y.clone(), z.clone(), x.clone()], false),
                (vec![z.clone(), x.clone(), y.clone()], false),
                (vec![y.clone(), x.clone(), z.clone()], true),
                (vec![x.clone(), z.clone(), y.clone()], true),
                (vec![z.clone(), y.clone(), x.clone()], true),
            ],
            Factor::T(Tensor::Metric([x, y]) | Tensor::Delta([x, y])) => {
                vec![(vec![x.clone(), y.clone()], false), (vec![y.clone(), x.clone()], false)]
            }
            Factor::A(a, _) => {
                let tail: Vec<Index> = a.lorentz.iter().chain(&a.adjoint).cloned().collect();
                permutations(&a.derivs)
                    .into_iter()
                    .map(|mut d| {
                        d.extend(tail.iter().cloned());
                        (d, false)
                    })
                    .collect()
            }
        }
    }

    fn rebuild(&self, ix: Vec<Index>) -> Factor {
        match self {
            Factor::T(Tensor::Structure(_)) => Factor::T(Tensor::Structure([ix[0].clone(), ix[1].clone(), ix[2].clone()])),
            Factor::T(Tensor::Metric(_)) => Factor::T(Tensor::Metric([ix[0].clone(), ix[1].clone()])),
            Factor::T(Tensor::Delta(_)) => Factor::T(Tensor::Delta([ix[0].clone(), ix[1].clone()])),
            Factor::A(a, k) => {
                let nd = a.derivs.len();
                let nl = a.lorentz.len();
                let mut b = a.clone();
                b.derivs = ix[..nd].to_vec();
                b.lorentz = ix[nd..nd + nl].to_vec();
                b.adjoint = ix[nd + nl..].to_vec();
                Factor::A(b, *k)
            }
        }
    }
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Counts of elementary rewrites performed, for certificates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct CanonStats {
    pub antisymmetry_signs: usize,
    pub contractions: usize,
    pub merged: usize,
}

/// Unique normal form up to graded reordering, relabeling, f antisymmetry and
/// metric/delta contraction.
pub fn canonicalize(e: &Expression) -> Expression {
    canonicalize_traced(e).0
}

pub fn canonicalize_traced(e: &Expression) -> (Expression, CanonStats) {
    let mut stats = CanonStats::default();
    let mut acc: BTreeMap<Monomial, Q> = BTreeMap::new();
    for m in &e.terms {
        if let Some(c) = canonical_monomial(m, &mut stats) {
            let q = c.coeff.q;
            let mut key = c;
            key.coeff.q = Q::one();
            let slot = acc.entry(key).or_insert_with(Q::zero);
            if !slot.is_zero() {
                stats.merged += 1;
            }
            *slot += q;
        }
    }
    let terms = acc
        .into_iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(mut m, q)| {
            m.coeff.q = q;
            m
        })
        .collect();
    (Expression::from_terms(terms), stats)
}

fn metric_value(x: &Index, y: &Index) -> Option<Q> {
    let (Label::Explicit(a), Label::Explicit(b)) = (&x.label, &y.label) else {
        return None;
    };
    if a != b {
        return Some(Q::zero());
    }
    if x.up != y.up || *a == 0 {
        Some(Q::one())
    } else {
        Some(-Q::one())
    }
}

/// Contract metrics and deltas with a dummy slot, evaluate explicit ones, and
/// lower explicit Lorentz components. Returns `None` when the monomial vanishes.
fn contract(m: &Monomial, stats: &mut CanonStats) -> Option<Monomial> {
    let mut m = m.clone();
    if m.coeff.q.is_zero() {
        return None;
    }
    'outer: loop {
        let counts = m.index_counts();
        for ti in 0..m.tensors.len() {
            let t = m.tensors[ti].clone();
            match &t {
                Tensor::Structure(ix) => {
                    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                        let same = match (&ix[p].label, &ix[q].label) {
                            (Label::Explicit(a), Label::Explicit(b)) => a == b,
                            (Label::Named(a), Label::Named(b)) => a == b,
                            _ => false,
                        };
                        if same {
                            return None;
                        }
                    }
                }
                Tensor::Metric([x, y]) | Tensor::Delta([x, y]) => {
                    let is_metric = matches!(t, Tensor::Metric(_));
                    if let Some(v) = metric_value(x, y) {
                        if v.is_zero() {
                            return None;
                        }
                        let v = if is_metric { v } else { Q::one() };
                        m.coeff.q *= v;
                        m.tensors.remove(ti);
                        stats.contractions += 1;
                        continue 'outer;
                    }
                    if x.key().is_some() && x.key() == y.key() {
                        if is_metric {
                            m.coeff.q *= Q::from_integer(4);
                            m.tensors.remove(ti);
                            stats.contractions += 1;
                            continue 'outer;
                        }
                        continue;
                    }
                    let pick = [(y, x), (x, y)]
                        .into_iter()
                        .find(|(d, _)| d.key().is_some_and(|k| counts.get(&k) == Some(&2)));
                    if let Some((dummy, other)) = pick {
                        let dk = dummy.key().unwrap();
                        let other = other.clone();
                        m.tensors.remove(ti);
                        m.map_indices(|idx| {
                            if idx.key().as_ref() == Some(&dk) {
                                *idx = other.clone();
                            }
                        });
                        stats.contractions += 1;
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    let mut flips = 0usize;
    for a in &mut m.atoms {
        for idx in a.indices_mut() {
            if idx.kind == IndexKind::Lorentz && idx.up {
                if let Label::Explicit(v) = idx.label {
                    idx.up = false;
                    if v != 0 {
                        flips += 1;
                    }
                }
            }
        }
    }
    if flips % 2 == 1 {
        m.coeff.q = -m.coeff.q;
    }
    Some(m)
}

#[derive(Clone)]
struct State {
    used: Vec<bool>,
    labels: Vec<(IndexKey, u32)>,
    sign: bool,
    placed: Vec<Factor>,
}

fn label_of(labels: &[(IndexKey, u32)], k: &IndexKey) -> Option<u32> {
    labels.iter().find(|(x, _)| x == k).map(|(_, v)| *v)
}

fn canonical_monomial(m: &Monomial, stats: &mut CanonStats) -> Option<Monomial> {
    let m = contract(m, stats)?;
    let counts = m.index_counts();
    let mut factors: Vec<Factor> = m.tensors.iter().cloned().map(Factor::T).collect();
    let mut odd_rank = 0usize;
    for a in &m.atoms {
        let k = if a.odd {
            odd_rank += 1;
            odd_rank
        } else {
            0
        };
        factors.push(Factor::A(a.clone(), k));
    }
    let classes: Vec<ClassKey> = factors.iter().map(Factor::class).collect();
    let mut order: Vec<ClassKey> = classes.clone();
    order.sort();

    let mut states = vec![State {
        used: vec![false; factors.len()],
        labels: Vec::new(),
        sign: false,
        placed: Vec::new(),
    }];
    for class in &order {
        let mut best: Option<Vec<Tok>> = None;
        let mut next: HashMap<(Vec<bool>, Vec<(IndexKey, u32)>), State> = HashMap::new();
        for st in &states {
            for (fi, f) in factors.iter().enumerate() {
                if st.used[fi] || &classes[fi] != class {
                    continue;
                }
                for (ix, flip) in f.arrangements() {
                    let mut labels = st.labels.clone();
                    let mut toks = Vec::with_capacity(ix.len());
                    for idx in &ix {
                        let t = match (&idx.label, idx.key()) {
                            (Label::Explicit(v), _) => Tok::Explicit(*v),
                            (_, Some(k)) if counts.get(&k) == Some(&2) => match label_of(&labels, &k) {
                                Some(l) => Tok::Dummy(l),
                                None => {
                                    let l = labels.len() as u32 + 1;
                                    labels.push((k, l));
                                    Tok::Dummy(l)
                                }
                            },
                            (Label::Named(n), _) => Tok::Free(idx.kind, n.clone(), idx.up),
                        };
                        toks.push(t);
                    }
                    match &best {
                        Some(b) if toks > *b => continue,
                        Some(b) if toks < *b => next.clear(),
                        _ => {}
                    }
                    best = Some(toks);
                    let mut sign = st.sign ^ flip;
                    if let Factor::A(_, r) = f {
                        if *r > 0 {
                            let inv = st
                                .placed
                                .iter()
                                .filter(|p| matches!(p, Factor::A(_, q) if *q > *r))
                                .count();
                            sign ^= inv % 2 == 1;
                        }
                    }
                    let mut used = st.used.clone();
                    used[fi] = true;
                    let mut sorted_labels = labels.clone();
                    sorted_labels.sort();
                    let key = (used.clone(), sorted_labels);
                    if let Some(prev) = next.get(&key) {
                        if prev.sign != sign {
                            // Two relabelings of the same monomial with opposite
                            // signs: it equals its own negative.
                            return None;
                        }
                        continue;
                    }
                    let mut placed = st.placed.clone();
                    placed.push(f.rebuild(ix));
                    next.insert(
                        key,
                        State {
                            used,
                            labels,
                            sign,
                            placed,
                        },
                    );
                }
            }
        }
        let mut v: Vec<State> = next.into_values().collect();
        v.sort_by(|a, b| a.labels.cmp(&b.labels));
        states = v;
    }
    let first_sign = states[0].sign;
    if states.iter().any(|s| s.sign != first_sign) {
        return None;
    }
    let st = &states[0];
    if st.placed.iter().any(|f| matches!(f, Factor::T(Tensor::Structure(_)))) {
        stats.antisymmetry_signs += usize::from(first_sign);
    }
    let mut out = Monomial::scalar(m.coeff.clone());
    if first_sign {
        out.coeff.q = -out.coeff.q;
    }
    for f in &st.placed {
        match f {
            Factor::T(t) => out.tensors.push(t.clone()),
            Factor::A(a, _) => out.atoms.push(a.clone()),
        }
    }
    let mut seen: HashMap<IndexKey, ()> = HashMap::new();
    out.map_indices(|idx| {
        let Some(k) = idx.key() else { return };
        let Some(l) = label_of(&st.labels, &k) else { return };
        let first = seen.insert(k, ()).is_none();
        idx.label = Label::Named(format!("#{l}").into());
        if idx.kind == IndexKind::Lorentz {
            idx.up = first;
        }
    });
    Some(out)
}

/// Dagger: reverse factor order, conjugate `i`; every implemented field is
/// hermitian and couplings are real.
pub fn hermitian_conjugate(e: &Expression) -> Expression {
    let terms = e
        .terms
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.atoms.reverse();
            m.coeff = m.coeff.conj();
            m
        })
        .collect();
    canonicalize(&Expression::from_terms(terms))
}

/// Structural equality of canonical forms.
pub fn equivalent(a: &Expression, b: &Expression) -> bool {
    canonicalize(&a.sub(b)).is_empty()
}

pub(crate) fn unit_key(m: &Monomial) -> Monomial {
    let mut k = m.clone();
    k.coeff = Coeff { q: Q::one(), ..k.coeff };
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Context;

    fn canon(s: &str) -> String {
        let cx = Context::builtin();
        let e = cx.defs.substitute(&cx.parse(s).unwrap());
        canonicalize(&e).to_string()
    }

    #[test]
    fn antisymmetry_and_relabeling() {
        assert_eq!(canon("f[b,a,c] + f[a,b,c]"), "0");
        assert_eq!(canon("d[mu]A[^mu;a] - d[nu]A[^nu;a]"), "0");
        assert_eq!(canon("cbar[a]*c[b] + c[b]*cbar[a]"), "0");
        assert_eq!(canon("f[a,a,b]*B[b]"), "0");
    }

    #[test]
    fn graded_order() {
        assert_eq!(canon("c[a]*cbar[b]"), "-cbar[b]*c[a]");
        assert_eq!(canon("B[a]*A[mu;b]"), "A[mu;b]*B[a]");
        assert_eq!(canon("c[1]*c[1]"), "0");
        assert_eq!(canon("c[a]*c[a]"), "0");
        assert_eq!(canon("f[a,b,c]*c[b]*c[c]"), "f[#1,#2,a]*c[#1]*c[#2]");
        assert_eq!(canon("f[a,b,c]*c[c]*c[b]"), "-f[#1,#2,a]*c[#1]*c[#2]");
    }

    #[test]
    fn metric_contraction() {
        assert_eq!(canon("g[mu,nu]*A[^nu;a]"), "A[mu;a]");
        assert_eq!(canon("g[^mu,^nu]*d[mu]B*A[nu]"), "A[^#1]*d[#1]B");
        assert_eq!(canon("g[mu,^mu]*B"), "4*B");
        assert_eq!(canon("g[1,1]*B"), "-B");
        assert_eq!(canon("A[^1]"), "-A[1]");
        assert_eq!(canon("delta[a,b]*delta[b,c]*B[c]"), "B[a]");
    }

    #[test]
    fn idempotent_and_hermitian() {
        let cx = Context::builtin();
        let l_fp = cx.defs.substitute(&cx.parse("-i*d[^mu]cbar[a]*(D[mu;a,b]c[b])").unwrap());
        let c = canonicalize(&l_fp);
        assert_eq!(canonicalize(&c), c);
        assert_eq!(hermitian_conjugate(&c), c);
        let e = cx.parse("i*cbar[a]*c[a]").unwrap();
        assert_eq!(hermitian_conjugate(&e), canonicalize(&e));
    }
}
