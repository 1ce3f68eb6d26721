//! Zero testing, optionally modulo current-conservation constraints.
//!
//! A constraint says that the divergence of a source, `d[mu]j[^mu;a]`, equals
//! a given expression. Zero testing rewrites every atom in which a derivative
//! index contracts the source's own Lorentz index (with any further
//! derivatives) by the corresponding derivative of that expression. The host
//! monomial minus the rewritten atom is the multiplier of the constraint.

use serde::Serialize;

use super::{canonicalize_traced, reduce_jacobi_traced, CanonStats, JacobiStats};
use crate::expr::{Atom, Context, Expression, Index, Monomial, Name};

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub field: Name,
    /// Adjoint parameter of the divergence, `None` for an Abelian source.
    pub param: Option<Index>,
    /// What the divergence equals.
    pub value: Expression,
}

impl Constraint {
    /// `d[mu]j[^mu] = 0`.
    pub fn abelian_current() -> Self {
        Constraint {
            name: "d[mu]j[^mu] = 0".into(),
            field: "j".into(),
            param: None,
            value: Expression::zero(),
        }
    }

    /// `D[mu;a,b]j[^mu;b] = 0`, i.e. `d[mu]j[^mu;a] = -g*f[a,c,b]*A[mu;c]*j[^mu;b]`.
    pub fn covariant_current() -> Self {
        let cx = Context::builtin();
        Constraint {
            name: "D[mu;a,b]j[^mu;b] = 0".into(),
            field: "j".into(),
            param: Some(Index::adjoint("a")),
            value: cx.parse("-g*f[a,c,b]*A[mu;c]*j[^mu;b]").expect("constraint value"),
        }
    }

    fn matches(&self, a: &Atom) -> Option<usize> {
        if a.name != self.field || a.lorentz.len() != 1 || a.adjoint.len() != usize::from(self.param.is_some()) {
            return None;
        }
        let k = a.lorentz[0].key()?;
        a.derivs.iter().position(|d| d.key().as_ref() == Some(&k))
    }

    /// The constraint as an expression that must vanish, with free adjoint
    /// index `a` when non-Abelian.
    pub fn expression(&self) -> Expression {
        let mu = Index::lorentz("%mu", false);
        let mut a = Atom::new(&self.field, vec![mu.raised(true)], self.param.iter().cloned().collect(), false);
        a = a.with_derivative(mu);
        let mut e = Expression::atom(a).sub(&self.value);
        for m in &mut e.terms {
            m.freshen_dummies(&Default::default());
        }
        e
    }

    /// The value instantiated for a concrete source atom (derivatives excluded).
    fn value_for(&self, a: &Atom) -> Expression {
        match (&self.param, a.adjoint.first()) {
            (Some(p), Some(target)) => {
                let tmp = Index::adjoint("%a");
                self.value.rename_free(p, &tmp).rename_free(&tmp, target)
            }
            _ => self.value.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn none() -> Self {
        ConstraintSet::default()
    }

    pub fn abelian() -> Self {
        ConstraintSet {
            constraints: vec![Constraint::abelian_current()],
        }
    }

    pub fn covariant() -> Self {
        ConstraintSet {
            constraints: vec![Constraint::covariant_current()],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.name.clone()).collect()
    }

    /// Rewrite every constrained divergence. Returns the rewritten expression
    /// and, per use, the constraint name and the multiplier monomial.
    pub fn rewrite(&self, e: &Expression) -> (Expression, Vec<(String, Monomial)>) {
        let mut used = Vec::new();
        let mut work: Vec<Monomial> = e.terms.clone();
        let mut out = Vec::new();
        let mut budget = 10_000usize;
        while let Some(m) = work.pop() {
            let hit = m.atoms.iter().enumerate().find_map(|(pos, a)| {
                self.constraints
                    .iter()
                    .find_map(|c| c.matches(a).map(|d| (pos, c, d)))
            });
            match hit {
                Some((pos, c, d)) if budget > 0 => {
                    budget -= 1;
                    let a = &m.atoms[pos];
                    let mut rep = c.value_for(a);
                    for (k, idx) in a.derivs.iter().enumerate() {
                        if k != d {
                            rep = rep.derivative(idx);
                        }
                    }
                    let mut mult = m.clone();
                    mult.atoms.remove(pos);
                    used.push((c.name.clone(), mult));
                    work.extend(m.splice(pos, &rep, false));
                }
                _ => out.push(m),
            }
        }
        out.reverse();
        (Expression::from_terms(out), used)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    ExactZero,
    ElVanishing,
    ConstraintReduced,
    NonzeroWitness,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReductionTrace {
    pub contractions: usize,
    pub antisymmetry_signs: usize,
    pub merged: usize,
    pub jacobi_relations: usize,
    pub jacobi_eliminations: usize,
    pub casimir_pairs: usize,
    pub constraint_rewrites: usize,
}

impl ReductionTrace {
    fn absorb(&mut self, c: CanonStats, j: JacobiStats) {
        self.contractions += c.contractions;
        self.antisymmetry_signs += c.antisymmetry_signs;
        self.merged += c.merged;
        self.jacobi_relations += j.relations;
        self.jacobi_eliminations += j.eliminations;
        self.casimir_pairs += j.casimir_pairs;
    }

    pub fn add(&mut self, o: &ReductionTrace) {
        self.contractions += o.contractions;
        self.antisymmetry_signs += o.antisymmetry_signs;
        self.merged += o.merged;
        self.jacobi_relations += o.jacobi_relations;
        self.jacobi_eliminations += o.jacobi_eliminations;
        self.casimir_pairs += o.casimir_pairs;
        self.constraint_rewrites += o.constraint_rewrites;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub used_constraints: Vec<String>,
    /// `constraint: multiplier` pairs, one per rewrite.
    pub multipliers: Vec<String>,
    pub trace: ReductionTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(kind: CertificateKind) -> Self {
        Certificate {
            kind,
            used_constraints: Vec::new(),
            multipliers: Vec::new(),
            trace: ReductionTrace::default(),
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.kind != CertificateKind::NonzeroWitness
    }

    /// Fold another certificate into this one; the weaker kind wins.
    pub fn merge(&mut self, o: &Certificate) {
        use CertificateKind::*;
        self.kind = match (self.kind, o.kind) {
            (NonzeroWitness, _) | (_, NonzeroWitness) => NonzeroWitness,
            (ConstraintReduced, _) | (_, ConstraintReduced) => ConstraintReduced,
            (ElVanishing, _) | (_, ElVanishing) => ElVanishing,
            _ => ExactZero,
        };
        for c in &o.used_constraints {
            if !self.used_constraints.contains(c) {
                self.used_constraints.push(c.clone());
            }
        }
        self.multipliers.extend(o.multipliers.iter().cloned());
        self.trace.add(&o.trace);
        if self.witness.is_none() {
            self.witness = o.witness.clone();
        }
        self.notes.extend(o.notes.iter().cloned());
    }
}

fn normal_form(e: &Expression, trace: &mut ReductionTrace) -> Expression {
    let (c, cs) = canonicalize_traced(e);
    let (r, js) = reduce_jacobi_traced(&c);
    trace.absorb(cs, js);
    r
}

/// Decide `e == 0` (modulo `cs`), returning the certificate.
pub fn is_zero(e: &Expression, cs: &ConstraintSet) -> (bool, Certificate) {
    let (ok, cert, _) = is_zero_with(e, cs);
    (ok, cert)
}

/// As [`is_zero`], also returning the reduced residual.
pub fn is_zero_with(e: &Expression, cs: &ConstraintSet) -> (bool, Certificate, Expression) {
    let mut trace = ReductionTrace::default();
    let r = normal_form(e, &mut trace);
    if r.is_empty() {
        let mut cert = Certificate::new(CertificateKind::ExactZero);
        cert.trace = trace;
        return (true, cert, r);
    }
    let mut residual = r;
    let mut cert = Certificate::new(CertificateKind::NonzeroWitness);
    if !cs.is_empty() {
        let (rw, used) = cs.rewrite(&residual);
        if !used.is_empty() {
            trace.constraint_rewrites += used.len();
            for (name, mult) in &used {
                if !cert.used_constraints.contains(name) {
                    cert.used_constraints.push(name.clone());
                }
                cert.multipliers.push(format!("{name}: {}", Expression::from_monomial(mult.clone())));
            }
            residual = normal_form(&rw, &mut trace);
            if residual.is_empty() {
                cert.kind = CertificateKind::ConstraintReduced;
                cert.trace = trace;
                return (true, cert, residual);
            }
        }
    }
    cert.witness = residual.terms.first().map(|m| Expression::from_monomial(m.clone()).to_string());
    cert.used_constraints.clear();
    cert.multipliers.clear();
    cert.trace = trace;
    (false, cert, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Context;

    #[test]
    fn plain_nonzero_has_witness() {
        let cx = Context::builtin();
        let (ok, cert) = is_zero(&cx.parse("A[mu;a]").unwrap(), &ConstraintSet::none());
        assert!(!ok);
        assert_eq!(cert.kind, CertificateKind::NonzeroWitness);
        assert_eq!(cert.witness.as_deref(), Some("A[mu;a]"));
    }

    #[test]
    fn abelian_divergence_reduces() {
        let cx = Context::builtin();
        let e = cx.parse("e*d[nu]d[mu]j[^mu]").unwrap();
        let (ok, cert) = is_zero(&e, &ConstraintSet::abelian());
        assert!(ok);
        assert_eq!(cert.kind, CertificateKind::ConstraintReduced);
        assert_eq!(cert.multipliers.len(), 1);
        let (ok, _) = is_zero(&e, &ConstraintSet::none());
        assert!(!ok);
    }

    #[test]
    fn covariant_divergence_reduces() {
        let cx = Context::builtin();
        let e = cx.defs.substitute(&cx.parse("D[mu;a,b]j[^mu;b]").unwrap());
        let (ok, cert) = is_zero(&e, &ConstraintSet::covariant());
        assert!(ok, "{cert:?}");
        let d = e.derivative(&Index::lorentz("nu", false));
        let (ok, _) = is_zero(&d, &ConstraintSet::covariant());
        assert!(ok);
    }

    #[test]
    fn constraint_expression_shape() {
        let c = Constraint::covariant_current();
        let e = c.expression();
        assert_eq!(e.len(), 2);
        assert_eq!(e.free_indices().len(), 1);
    }
}
