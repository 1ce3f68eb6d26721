//! Graded indexed expressions: the data model shared by every other module.
//!
//! An [`Expression`] is a sum of [`Monomial`]s. A monomial is an exact
//! coefficient times a bag of commuting numeric tensors (structure constants,
//! metrics, Kronecker deltas) times an *ordered* list of field atoms. The order
//! of atoms matters only through the Grassmann signs of odd atoms; the
//! canonicalizer is the one place that reorders them.

pub mod defs;
mod format;
pub mod parse;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

pub use defs::DefinitionTable;
pub use parse::{Context, FieldDecl};

pub type Name = Arc<str>;
/// Exact rational coefficients.
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn qr(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("index arity mismatch for `{symbol}`: expected [{expected}], found [{found}]")]
    Arity {
        symbol: String,
        expected: String,
        found: String,
    },
    #[error("index `{0}` appears more than twice in one monomial")]
    RepeatedIndex(String),
    #[error("lorentz index `{0}` is contracted without one upper and one lower position")]
    DummyPosition(String),
    #[error("explicit component {value} out of range for {kind:?} index")]
    ComponentRange { kind: IndexKind, value: i64 },
    #[error("free-index signature mismatch: `{left}` vs `{right}`")]
    SignatureMismatch { left: String, right: String },
    #[error("cyclic definition involving `{0}`")]
    CyclicDefinition(String),
    #[error("`{0}` is not a pure ghost-number / grading expression")]
    MixedGrading(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexKind {
    Lorentz,
    Adjoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Explicit(u8),
    Named(Name),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binding {
    Free,
    Dummy,
}

/// A Lorentz or adjoint index. Adjoint indices are position-free and always
/// carry `up == false`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index {
    pub kind: IndexKind,
    pub label: Label,
    pub up: bool,
}

impl Index {
    pub fn lorentz(name: &str, up: bool) -> Self {
        Index {
            kind: IndexKind::Lorentz,
            label: Label::Named(name.into()),
            up,
        }
    }

    pub fn adjoint(name: &str) -> Self {
        Index {
            kind: IndexKind::Adjoint,
            label: Label::Named(name.into()),
            up: false,
        }
    }

    pub fn explicit(kind: IndexKind, value: u8, up: bool) -> Self {
        Index {
            kind,
            label: Label::Explicit(value),
            up: up && kind == IndexKind::Lorentz,
        }
    }

    pub fn name(&self) -> Option<&Name> {
        match &self.label {
            Label::Named(n) => Some(n),
            Label::Explicit(_) => None,
        }
    }

    /// Identity of the index ignoring its position.
    pub fn key(&self) -> Option<IndexKey> {
        self.name().map(|n| (self.kind, n.clone()))
    }

    pub fn raised(&self, up: bool) -> Self {
        let mut i = self.clone();
        if i.kind == IndexKind::Lorentz {
            i.up = up;
        }
        i
    }

    pub fn flipped(&self) -> Self {
        self.raised(!self.up)
    }
}

pub type IndexKey = (IndexKind, Name);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tensor {
    /// Totally antisymmetric structure constant f[a,b,c].
    Structure([Index; 3]),
    /// Minkowski metric g with arbitrary index positions; mixed positions act as delta.
    Metric([Index; 2]),
    /// Kronecker delta on adjoint indices.
    Delta([Index; 2]),
}

impl Tensor {
    pub fn indices(&self) -> &[Index] {
        match self {
            Tensor::Structure(ix) => ix,
            Tensor::Metric(ix) | Tensor::Delta(ix) => ix,
        }
    }

    pub fn indices_mut(&mut self) -> &mut [Index] {
        match self {
            Tensor::Structure(ix) => ix,
            Tensor::Metric(ix) | Tensor::Delta(ix) => ix,
        }
    }
}

/// A field symbol with its derivative multi-index and own indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: Name,
    pub derivs: Vec<Index>,
    pub lorentz: Vec<Index>,
    pub adjoint: Vec<Index>,
    pub odd: bool,
    /// Constant parameters (global transformation parameters) have vanishing derivatives.
    pub constant: bool,
}

impl Atom {
    pub fn new(name: &str, lorentz: Vec<Index>, adjoint: Vec<Index>, odd: bool) -> Self {
        Atom {
            name: name.into(),
            derivs: Vec::new(),
            lorentz,
            adjoint,
            odd,
            constant: false,
        }
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.lorentz.len(), self.adjoint.len())
    }

    pub fn indices(&self) -> impl Iterator<Item = &Index> {
        self.derivs.iter().chain(&self.lorentz).chain(&self.adjoint)
    }

    pub fn indices_mut(&mut self) -> impl Iterator<Item = &mut Index> {
        self.derivs
            .iter_mut()
            .chain(self.lorentz.iter_mut())
            .chain(self.adjoint.iter_mut())
    }

    /// Same symbol and arity.
    pub fn same_symbol(&self, other: &Atom) -> bool {
        self.name == other.name && self.arity() == other.arity()
    }

    pub fn with_derivative(&self, idx: Index) -> Atom {
        let mut a = self.clone();
        a.derivs.push(idx);
        a.derivs.sort();
        a
    }
}

/// Formal commuting symbols tracked by exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coupling {
    G,
    E,
    Alpha,
    /// Abelian gauge parameter `a`.
    GaugeA,
}

impl Coupling {
    pub const ALL: [Coupling; 4] = [Coupling::G, Coupling::E, Coupling::Alpha, Coupling::GaugeA];

    pub fn symbol(self) -> &'static str {
        match self {
            Coupling::G => "g",
            Coupling::E => "e",
            Coupling::Alpha => "alpha",
            Coupling::GaugeA => "a",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Coupling> {
        Coupling::ALL.into_iter().find(|c| c.symbol() == s)
    }
}

/// `q * i^imag * prod(coupling^pow)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coeff {
    pub q: Q,
    pub imag: bool,
    pub pow: [i32; 4],
}

impl Coeff {
    pub fn one() -> Self {
        Coeff {
            q: Q::one(),
            imag: false,
            pow: [0; 4],
        }
    }

    pub fn rational(q: Q) -> Self {
        Coeff { q, ..Coeff::one() }
    }

    pub fn i() -> Self {
        Coeff {
            imag: true,
            ..Coeff::one()
        }
    }

    pub fn coupling(c: Coupling, power: i32) -> Self {
        let mut k = Coeff::one();
        k.pow[c as usize] = power;
        k
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        let mut q = self.q * other.q;
        if self.imag && other.imag {
            q = -q;
        }
        let mut pow = self.pow;
        for (p, o) in pow.iter_mut().zip(other.pow) {
            *p += o;
        }
        Coeff {
            q,
            imag: self.imag ^ other.imag,
            pow,
        }
    }

    pub fn scaled(&self, s: Q) -> Coeff {
        Coeff {
            q: self.q * s,
            ..self.clone()
        }
    }

    pub fn conj(&self) -> Coeff {
        Coeff {
            q: if self.imag { -self.q } else { self.q },
            ..self.clone()
        }
    }

    /// The coefficient with `q` normalized to one; monomials that differ only
    /// in `q` are "like" monomials.
    pub fn unit(&self) -> Coeff {
        Coeff {
            q: Q::one(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub coeff: Coeff,
    pub tensors: Vec<Tensor>,
    pub atoms: Vec<Atom>,
}

impl Monomial {
    pub fn scalar(coeff: Coeff) -> Self {
        Monomial {
            coeff,
            tensors: Vec::new(),
            atoms: Vec::new(),
        }
    }

    pub fn atom(atom: Atom) -> Self {
        Monomial {
            coeff: Coeff::one(),
            tensors: Vec::new(),
            atoms: vec![atom],
        }
    }

    pub fn tensor(t: Tensor) -> Self {
        Monomial {
            coeff: Coeff::one(),
            tensors: vec![t],
            atoms: Vec::new(),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = &Index> {
        self.tensors
            .iter()
            .flat_map(|t| t.indices().iter())
            .chain(self.atoms.iter().flat_map(|a| a.indices()))
    }

    pub fn map_indices(&mut self, mut f: impl FnMut(&mut Index)) {
        for t in &mut self.tensors {
            t.indices_mut().iter_mut().for_each(&mut f);
        }
        for a in &mut self.atoms {
            a.indices_mut().for_each(&mut f);
        }
    }

    /// Number of odd atoms.
    pub fn grassmann_degree(&self) -> usize {
        self.atoms.iter().filter(|a| a.odd).count()
    }

    pub fn ghost_number(&self) -> i32 {
        self.atoms
            .iter()
            .map(|a| match &*a.name {
                "c" => 1,
                "cbar" => -1,
                _ => 0,
            })
            .sum()
    }

    pub fn index_counts(&self) -> BTreeMap<IndexKey, usize> {
        let mut counts = BTreeMap::new();
        for idx in self.indices() {
            if let Some(k) = idx.key() {
                *counts.entry(k).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn dummies(&self) -> HashSet<IndexKey> {
        self.index_counts()
            .into_iter()
            .filter(|(_, n)| *n == 2)
            .map(|(k, _)| k)
            .collect()
    }

    /// Free indices in order of first appearance, with their positions.
    pub fn free_indices(&self) -> Vec<Index> {
        let counts = self.index_counts();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for idx in self.indices() {
            if let Some(k) = idx.key() {
                if counts[&k] == 1 && seen.insert(k) {
                    out.push(idx.clone());
                }
            }
        }
        out
    }

    pub fn binding(&self, idx: &Index) -> Option<Binding> {
        let k = idx.key()?;
        match self.index_counts().get(&k) {
            Some(2) => Some(Binding::Dummy),
            Some(_) => Some(Binding::Free),
            None => None,
        }
    }

    pub fn names(&self) -> HashSet<IndexKey> {
        self.indices().filter_map(Index::key).collect()
    }

    /// Rename dummy indices that collide with `avoid` to fresh `#n` names.
    pub fn rename_dummies_avoiding(&mut self, avoid: &HashSet<IndexKey>) {
        let dummies = self.dummies();
        let clashes: Vec<IndexKey> = dummies.iter().filter(|k| avoid.contains(*k)).cloned().collect();
        if clashes.is_empty() {
            return;
        }
        let mut next = max_hash_label(avoid.iter().chain(self.names().iter())) + 1;
        let mut map: HashMap<IndexKey, Name> = HashMap::new();
        for k in clashes {
            map.insert(k, format!("#{next}").into());
            next += 1;
        }
        self.map_indices(|idx| {
            if let Some(k) = idx.key() {
                if let Some(n) = map.get(&k) {
                    idx.label = Label::Named(n.clone());
                }
            }
        });
    }

    /// Rename every dummy to a fresh `#n` name not present in `avoid`.
    pub fn freshen_dummies(&mut self, avoid: &HashSet<IndexKey>) {
        let dummies = self.dummies();
        if dummies.is_empty() {
            return;
        }
        let mut next = max_hash_label(avoid.iter().chain(self.names().iter())) + 1;
        let mut sorted: Vec<_> = dummies.into_iter().collect();
        sorted.sort();
        let mut map = HashMap::new();
        for k in sorted {
            map.insert(k, Name::from(format!("#{next}")));
            next += 1;
        }
        self.map_indices(|idx| {
            if let Some(k) = idx.key() {
                if let Some(n) = map.get(&k) {
                    idx.label = Label::Named(n.clone());
                }
            }
        });
    }

    /// Graded-free product: factor lists are concatenated, dummies alpha-renamed.
    pub fn concat(&self, rhs: &Monomial) -> Monomial {
        let mut l = self.clone();
        l.rename_dummies_avoiding(&rhs.names());
        let mut r = rhs.clone();
        r.rename_dummies_avoiding(&l.names());
        l.coeff = l.coeff.mul(&r.coeff);
        l.tensors.extend(r.tensors);
        l.atoms.extend(r.atoms);
        l
    }

    /// Product for written input: user-named dummies are kept as written so
    /// that a thrice-repeated index is caught by validation; only generated
    /// `#n` dummies are renamed apart.
    pub fn concat_written(&self, rhs: &Monomial) -> Monomial {
        let generated = |m: &Monomial| -> HashSet<IndexKey> {
            m.names().into_iter().filter(|(_, n)| n.starts_with('#')).collect()
        };
        let mut l = self.clone();
        l.rename_dummies_avoiding(&generated(rhs));
        let mut r = rhs.clone();
        r.rename_dummies_avoiding(&generated(&l));
        l.coeff = l.coeff.mul(&r.coeff);
        l.tensors.extend(r.tensors);
        l.atoms.extend(r.atoms);
        l
    }

    /// Replace the atom at `pos` by `replacement`, keeping atom order.
    /// `sign_flip` multiplies by -1 (graded Leibniz for odd variations).
    pub fn splice(&self, pos: usize, replacement: &Expression, sign_flip: bool) -> Vec<Monomial> {
        let mut host = self.clone();
        let removed = host.atoms.remove(pos);
        let mut host_names = host.names();
        host_names.extend(removed.indices().filter_map(Index::key));
        replacement
            .terms
            .iter()
            .map(|rep| {
                let mut rep = rep.clone();
                // Only the replacement's dummies are private; its free indices
                // are exactly the removed atom's slots.
                rep.rename_dummies_avoiding(&host_names);
                let mut h = host.clone();
                h.rename_dummies_avoiding(&rep.names());
                let mut m = Monomial {
                    coeff: h.coeff.mul(&rep.coeff),
                    tensors: h.tensors,
                    atoms: Vec::with_capacity(h.atoms.len() + rep.atoms.len()),
                };
                m.tensors.extend(rep.tensors);
                m.atoms.extend(h.atoms[..pos].iter().cloned());
                m.atoms.extend(rep.atoms);
                m.atoms.extend(h.atoms[pos..].iter().cloned());
                if sign_flip {
                    m.coeff.q = -m.coeff.q;
                }
                m
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ExprError> {
        let mut seen: HashMap<IndexKey, Vec<bool>> = HashMap::new();
        for idx in self.indices() {
            if let Label::Explicit(v) = idx.label {
                let ok = match idx.kind {
                    IndexKind::Lorentz => v <= 3,
                    IndexKind::Adjoint => (1..=8).contains(&v),
                };
                if !ok {
                    return Err(ExprError::ComponentRange {
                        kind: idx.kind,
                        value: v as i64,
                    });
                }
            }
            if let Some(k) = idx.key() {
                seen.entry(k).or_default().push(idx.up);
            }
        }
        for ((kind, name), ups) in seen {
            if ups.len() > 2 {
                return Err(ExprError::RepeatedIndex(name.to_string()));
            }
            if kind == IndexKind::Lorentz && ups.len() == 2 && ups[0] == ups[1] {
                return Err(ExprError::DummyPosition(name.to_string()));
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub(crate) fn max_hash_label<'a>(keys: impl Iterator<Item = &'a IndexKey>) -> usize {
    keys.filter_map(|(_, n)| n.strip_prefix('#').and_then(|s| s.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
}

/// Ghost number of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhostNumber {
    Pure(i32),
    Mixed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Expression {
    pub terms: Vec<Monomial>,
}

impl Expression {
    pub fn zero() -> Self {
        Expression { terms: Vec::new() }
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Expression { terms: vec![m] }
    }

    pub fn from_terms(terms: Vec<Monomial>) -> Self {
        Expression { terms }
    }

    pub fn constant(q: Q) -> Self {
        if q.is_zero() {
            return Expression::zero();
        }
        Expression::from_monomial(Monomial::scalar(Coeff::rational(q)))
    }

    pub fn atom(a: Atom) -> Self {
        Expression::from_monomial(Monomial::atom(a))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Expression) -> Expression {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Expression { terms }
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expression {
        self.scale(&Coeff::rational(-Q::one()))
    }

    pub fn scale(&self, k: &Coeff) -> Expression {
        if k.q.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: m.coeff.mul(k),
                    ..m.clone()
                })
                .collect(),
        }
    }

    pub fn scale_q(&self, s: Q) -> Expression {
        self.scale(&Coeff::rational(s))
    }

    /// Distributes over sums and concatenates factor lists without reordering.
    pub fn multiply(&self, rhs: &Expression) -> Expression {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for l in &self.terms {
            for r in &rhs.terms {
                terms.push(l.concat(r));
            }
        }
        Expression { terms }
    }

    /// Product of written factors, see [`Monomial::concat_written`].
    pub fn multiply_written(&self, rhs: &Expression) -> Expression {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for l in &self.terms {
            for r in &rhs.terms {
                terms.push(l.concat_written(r));
            }
        }
        Expression { terms }
    }

    /// Leibniz rule; derivatives carry no grading.
    pub fn derivative(&self, idx: &Index) -> Expression {
        let mut terms = Vec::new();
        for m in &self.terms {
            let mut m = m.clone();
            if let Some(k) = idx.key() {
                let mut avoid = HashSet::new();
                avoid.insert(k);
                m.rename_dummies_avoiding(&avoid);
            }
            for (pos, a) in m.atoms.iter().enumerate() {
                if a.constant {
                    continue;
                }
                let mut d = m.clone();
                d.atoms[pos] = a.with_derivative(idx.clone());
                terms.push(d);
            }
        }
        Expression { terms }
    }

    pub fn ghost_number(&self) -> GhostNumber {
        let mut it = self.terms.iter().map(Monomial::ghost_number);
        let Some(first) = it.next() else {
            return GhostNumber::Pure(0);
        };
        if it.all(|n| n == first) {
            GhostNumber::Pure(first)
        } else {
            GhostNumber::Mixed
        }
    }

    /// Grassmann parity when every monomial agrees.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.iter().map(|m| m.grassmann_degree() % 2 == 1);
        let first = it.next().unwrap_or(false);
        it.all(|p| p == first).then_some(first)
    }

    pub fn free_indices(&self) -> Vec<Index> {
        self.terms.first().map(Monomial::free_indices).unwrap_or_default()
    }

    /// Sorted `(kind, name, up)` signature of the free indices.
    pub fn signature(&self) -> Vec<(IndexKind, Name, bool)> {
        signature_of(self.terms.first())
    }

    pub fn validate(&self) -> Result<(), ExprError> {
        let mut sig: Option<(Vec<(IndexKind, Name, bool)>, &Monomial)> = None;
        for m in &self.terms {
            m.validate()?;
            let s = signature_of(Some(m));
            match &sig {
                None => sig = Some((s, m)),
                Some((s0, m0)) if *s0 != s => {
                    return Err(ExprError::SignatureMismatch {
                        left: Expression::from_monomial((*m0).clone()).to_string(),
                        right: Expression::from_monomial(m.clone()).to_string(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Rename a free index (all positions) to `to`, optionally flipping its position.
    pub fn rename_free(&self, from: &Index, to: &Index) -> Expression {
        let Some(fk) = from.key() else {
            return self.clone();
        };
        let flip = from.kind == IndexKind::Lorentz && from.up != to.up;
        let mut out = self.clone();
        for m in &mut out.terms {
            if let Some(tk) = to.key() {
                if tk != fk && m.dummies().contains(&tk) {
                    let mut avoid = HashSet::new();
                    avoid.insert(tk);
                    m.rename_dummies_avoiding(&avoid);
                }
            }
            m.map_indices(|idx| {
                if idx.key().as_ref() == Some(&fk) {
                    let up = if flip { !idx.up } else { idx.up };
                    *idx = Index {
                        kind: to.kind,
                        label: to.label.clone(),
                        up: up && to.kind == IndexKind::Lorentz,
                    };
                }
            });
        }
        out
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.iter().flat_map(|m| m.atoms.iter())
    }
}

fn signature_of(m: Option<&Monomial>) -> Vec<(IndexKind, Name, bool)> {
    let mut s: Vec<_> = m
        .map(|m| {
            m.free_indices()
                .into_iter()
                .filter_map(|i| i.key().map(|(k, n)| (k, n, i.up)))
                .collect()
        })
        .unwrap_or_default();
    s.sort();
    s
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format::write_expression(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format::write_monomial(self, f, true)
    }
}
