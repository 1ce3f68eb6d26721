//! Total derivatives, Euler-Lagrange operators, transformations and Noether
//! currents.
//!
//! Derivatives with respect to odd fields are left derivatives: the varied
//! atom is first moved to the front of its monomial, collecting a sign for
//! every odd atom it passes. Transformations with an odd parameter are stored
//! with the parameter stripped; their Leibniz rule picks up a sign for every
//! odd atom standing before the varied one.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::canon::{canonicalize, is_zero, Certificate, CertificateKind, ConstraintSet};
use crate::expr::{
    defs::Definition, Atom, Context, ExprError, Expression, Index, IndexKey, Monomial, Name, Tensor,
};

#[derive(Debug, Error)]
pub enum VarError {
    #[error("transformation `{0}` is not a symmetry: variation is not a total derivative")]
    NotASymmetry(String),
    #[error("no improvement term found for `{0}`")]
    NoImprovement(String),
    #[error("`{0}` enters the lagrangian with more than one derivative")]
    HigherOrder(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub fn total_derivative(e: &Expression, mu: &Index) -> Expression {
    e.derivative(mu)
}

/// `expr` varied once: the factor that replaces an occurrence of `field`
/// with indices `occ`, i.e. metrics and deltas linking the occurrence's
/// indices to the flipped indices of `field`.
fn link(occ: &Atom, field: &Atom) -> Vec<Tensor> {
    let mut t = Vec::new();
    for (o, f) in occ.lorentz.iter().zip(&field.lorentz) {
        t.push(Tensor::Metric([o.clone(), f.flipped()]));
    }
    for (o, f) in occ.adjoint.iter().zip(&field.adjoint) {
        t.push(Tensor::Delta([o.clone(), f.clone()]));
    }
    t
}

fn field_keys(field: &Atom) -> HashSet<IndexKey> {
    field.indices().filter_map(Index::key).collect()
}

/// Monomial with the atom at `pos` taken out by a left derivative.
fn strip(m: &Monomial, pos: usize, field: &Atom) -> Monomial {
    let occ = &m.atoms[pos];
    let mut out = m.clone();
    let before_odd = m.atoms[..pos].iter().filter(|a| a.odd).count();
    if occ.odd && before_odd % 2 == 1 {
        out.coeff.q = -out.coeff.q;
    }
    out.atoms.remove(pos);
    out.tensors.extend(link(occ, field));
    out
}

fn prepared(l: &Expression, avoid: &HashSet<IndexKey>) -> Vec<Monomial> {
    l.terms
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.rename_dummies_avoiding(avoid);
            m
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ElResult {
    pub expr: Expression,
    /// The varied field does not occur in the density.
    pub absent: bool,
}

/// `dL/dphi - d_mu dL/d(d_mu phi) + ...`, summed over every occurrence. The
/// result carries the varied field's indices with Lorentz positions flipped.
pub fn euler_lagrange(l: &Expression, field: &Atom) -> ElResult {
    let avoid = field_keys(field);
    let mut terms = Vec::new();
    let mut absent = true;
    for m in prepared(l, &avoid) {
        for (pos, a) in m.atoms.iter().enumerate() {
            if !a.same_symbol(field) {
                continue;
            }
            absent = false;
            let base = strip(&m, pos, field);
            let mut part = Expression::from_monomial(base);
            for d in &a.derivs {
                part = part.derivative(d).neg();
            }
            terms.extend(part.terms);
        }
    }
    ElResult {
        expr: canonicalize(&Expression::from_terms(terms)),
        absent,
    }
}

/// `dL/d(d_lambda phi)` with free `^lambda`.
pub fn momentum(l: &Expression, field: &Atom, lambda: &Index) -> Result<Expression, VarError> {
    let mut avoid = field_keys(field);
    avoid.extend(lambda.key());
    let mut terms = Vec::new();
    for m in prepared(l, &avoid) {
        for (pos, a) in m.atoms.iter().enumerate() {
            if !a.same_symbol(field) || a.derivs.is_empty() {
                continue;
            }
            if a.derivs.len() > 1 {
                return Err(VarError::HigherOrder(a.name.to_string()));
            }
            let mut t = strip(&m, pos, field);
            t.tensors.push(Tensor::Metric([a.derivs[0].clone(), lambda.raised(true)]));
            terms.push(t);
        }
    }
    Ok(canonicalize(&Expression::from_terms(terms)))
}

/// An infinitesimal transformation, field symbol to variation.
#[derive(Clone, Debug)]
pub struct TransformationRule {
    pub name: String,
    /// Parity of the (stripped) parameter.
    pub odd: bool,
    rules: BTreeMap<(Name, usize, usize), Definition>,
    /// Symbols declared invariant (variation zero) on purpose.
    invariant: HashSet<(Name, usize, usize)>,
}

impl TransformationRule {
    pub fn new(name: &str, odd: bool) -> Self {
        TransformationRule {
            name: name.into(),
            odd,
            rules: BTreeMap::new(),
            invariant: HashSet::new(),
        }
    }

    /// Add `pattern -> image`, both in the input language; `image` may be "0".
    pub fn with(mut self, cx: &Context, pattern: &str, image: &str) -> Result<Self, ExprError> {
        let pat = cx.parse(pattern)?;
        let atom = match pat.terms.as_slice() {
            [m] if m.atoms.len() == 1 && m.tensors.is_empty() && m.atoms[0].derivs.is_empty() => m.atoms[0].clone(),
            _ => {
                return Err(ExprError::Syntax {
                    pos: 0,
                    msg: format!("rule pattern `{pattern}` is not a single field"),
                })
            }
        };
        let body = cx.defs.substitute(&cx.parse(image)?);
        let key = (atom.name.clone(), atom.lorentz.len(), atom.adjoint.len());
        if body.is_empty() {
            self.invariant.insert(key);
            return Ok(self);
        }
        let def = Definition {
            name: atom.name.clone(),
            lorentz: atom.lorentz.clone(),
            adjoint: atom.adjoint.clone(),
            operand: None,
            odd: body.parity().unwrap_or(false),
            body,
        };
        self.rules.insert(key, def);
        Ok(self)
    }

    pub fn has_rule(&self, a: &Atom) -> bool {
        let k = (a.name.clone(), a.lorentz.len(), a.adjoint.len());
        self.rules.contains_key(&k) || self.invariant.contains(&k)
    }

    /// Variation of a single atom (derivatives included), `None` if invariant.
    pub fn vary_atom(&self, a: &Atom) -> Option<Expression> {
        let def = self.rules.get(&(a.name.clone(), a.lorentz.len(), a.adjoint.len()))?;
        let mut e = def.instantiate(&a.lorentz, &a.adjoint);
        for d in &a.derivs {
            e = e.derivative(d);
        }
        Some(e)
    }

    pub fn rule_symbols(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .rules
            .values()
            .map(|d| {
                let img = &d.body;
                let a = Atom::new(&d.name, d.lorentz.clone(), d.adjoint.clone(), false);
                format!("{} -> {}", crate::expr::Expression::atom(a), img)
            })
            .collect();
        v.sort();
        v
    }
}

#[derive(Clone, Debug)]
pub struct Variation {
    pub expr: Expression,
    /// Field symbols met without a rule; treated as invariant.
    pub unruled: Vec<String>,
}

pub fn apply_transformation(e: &Expression, t: &TransformationRule) -> Expression {
    apply_transformation_flagged(e, t).expr
}

pub fn apply_transformation_flagged(e: &Expression, t: &TransformationRule) -> Variation {
    let mut terms = Vec::new();
    let mut unruled = Vec::new();
    for m in &e.terms {
        for (pos, a) in m.atoms.iter().enumerate() {
            if a.constant {
                continue;
            }
            let Some(img) = t.vary_atom(a) else {
                if !t.has_rule(a) {
                    let s = format!("{}[{};{}]", a.name, a.lorentz.len(), a.adjoint.len());
                    if !unruled.contains(&s) {
                        unruled.push(s);
                    }
                }
                continue;
            };
            let flip = t.odd && m.atoms[..pos].iter().filter(|x| x.odd).count() % 2 == 1;
            terms.extend(m.splice(pos, &img, flip));
        }
    }
    Variation {
        expr: Expression::from_terms(terms),
        unruled,
    }
}

/// Every non-constant field symbol in `e`, as a pattern atom with private index names.
pub fn field_patterns(e: &Expression) -> Vec<Atom> {
    let mut seen = BTreeMap::new();
    for a in e.atoms() {
        if a.constant {
            continue;
        }
        seen.entry((a.name.clone(), a.lorentz.len(), a.adjoint.len())).or_insert(a.odd);
    }
    seen.into_iter()
        .map(|((name, nl, na), odd)| {
            let lor = (0..nl).map(|k| Index::lorentz(&format!("%l{k}"), false)).collect();
            let adj = (0..na).map(|k| Index::adjoint(&format!("%a{k}"))).collect();
            Atom::new(&name, lor, adj, odd)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TotalDerivative {
    pub holds: bool,
    pub certificate: Certificate,
    /// `K^lambda` with `expr = d_lambda K^lambda` (modulo constraints), when found.
    pub k: Option<Expression>,
}

const IBP_STEPS: usize = 64;

/// Whether `e` is a divergence. Without constraints this is the statement
/// that every Euler-Lagrange derivative vanishes. A divergence modulo
/// constraints is not detected by that test, so an integration-by-parts
/// search for `K` runs as well.
pub fn is_total_derivative(e: &Expression, cs: &ConstraintSet) -> TotalDerivative {
    let lambda = Index::lorentz("lambda", true);
    let c = canonicalize(e);
    if c.is_empty() {
        return TotalDerivative {
            holds: true,
            certificate: Certificate::new(CertificateKind::ExactZero),
            k: Some(Expression::zero()),
        };
    }
    let mut el_cert = Certificate::new(CertificateKind::ElVanishing);
    let mut el_ok = true;
    for f in field_patterns(&c) {
        let el = euler_lagrange(&c, &f).expr;
        let (ok, cert) = is_zero(&el, &ConstraintSet::none());
        el_cert.notes.push(format!("EL[{}]: {}", f.name, if ok { "0" } else { "nonzero" }));
        if !ok {
            el_ok = false;
            el_cert.witness.get_or_insert_with(|| cert.witness.clone().unwrap_or_default());
        }
        el_cert.trace.add(&cert.trace);
    }
    let search = find_improvement(&c, cs, &lambda);
    match (el_ok, search) {
        (true, Some((k, _))) => TotalDerivative {
            holds: true,
            certificate: el_cert,
            k: Some(k),
        },
        (true, None) => TotalDerivative {
            holds: true,
            certificate: el_cert,
            k: None,
        },
        (false, Some((k, cert))) => {
            let mut cert = cert;
            cert.notes.push("divergence found by integration by parts".into());
            TotalDerivative {
                holds: cert.holds(),
                certificate: cert,
                k: Some(k),
            }
        }
        (false, None) => {
            el_cert.kind = CertificateKind::NonzeroWitness;
            TotalDerivative {
                holds: false,
                certificate: el_cert,
                k: None,
            }
        }
    }
}

/// Peel derivatives off the highest-order atoms until nothing (modulo
/// constraints) is left. Returns `K` with free `^lambda`.
fn find_improvement(e: &Expression, cs: &ConstraintSet, lambda: &Index) -> Option<(Expression, Certificate)> {
    let lower = lambda.raised(false);
    let mut rest = canonicalize(e);
    let mut k = Expression::zero();
    for _ in 0..IBP_STEPS {
        let (ok, cert, residual) = crate::canon::is_zero_with(&rest, cs);
        if ok {
            return Some((canonicalize(&k), cert));
        }
        rest = residual;
        let pick = rest
            .terms
            .iter()
            .flat_map(|m| {
                m.atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| !a.derivs.is_empty())
                    .map(move |(p, a)| (a.derivs.len(), m, p))
            })
            .max_by_key(|(n, _, _)| *n);
        let (_, m, pos) = pick?;
        let mut kt = m.clone();
        let rho = kt.atoms[pos].derivs.remove(0);
        // rho now appears once: rename it to lambda with the partner's position.
        let partner_up = !rho.up;
        let from = rho.raised(partner_up);
        let kexpr = Expression::from_monomial(kt).rename_free(&from, &lambda.raised(partner_up));
        let kexpr = if partner_up {
            kexpr
        } else {
            // partner was lower: raise through the metric so K carries ^lambda
            Expression::from_monomial(Monomial {
                tensors: vec![Tensor::Metric([lambda.clone(), Index::lorentz("%r", true)])],
                ..Monomial::scalar(crate::expr::Coeff::one())
            })
            .multiply(&kexpr.rename_free(&lambda.raised(false), &Index::lorentz("%r", false)))
        };
        let kexpr = canonicalize(&kexpr);
        k = k.add(&kexpr);
        rest = canonicalize(&rest.sub(&kexpr.derivative(&lower)));
    }
    None
}

#[derive(Clone, Debug)]
pub struct NoetherCurrent {
    /// `J^lambda` with free `^lambda`.
    pub current: Expression,
    /// Improvement `K^lambda` subtracted from the canonical current.
    pub improvement: Expression,
    pub certificate: Certificate,
}

/// `J^lambda = sum_phi delta(phi) * dL/d(d_lambda phi) - K^lambda`.
pub fn noether_current(l: &Expression, t: &TransformationRule, cs: &ConstraintSet) -> Result<NoetherCurrent, VarError> {
    let lambda = Index::lorentz("lambda", true);
    let dl = canonicalize(&apply_transformation(l, t));
    let td = is_total_derivative(&dl, cs);
    if !td.holds {
        return Err(VarError::NotASymmetry(t.name.clone()));
    }
    let k = match td.k {
        Some(k) => k,
        None => return Err(VarError::NoImprovement(t.name.clone())),
    };
    let mut j = Expression::zero();
    for f in field_patterns(l) {
        let Some(df) = t.vary_atom(&f) else { continue };
        let pi = momentum(l, &f, &lambda.raised(false))?;
        j = j.add(&df.multiply(&pi));
    }
    let current = canonicalize(&j.sub(&k));
    Ok(NoetherCurrent {
        current,
        improvement: k,
        certificate: td.certificate,
    })
}

/// Off-shell identity `d_lambda J^lambda + sum_phi delta(phi) * EL_phi = 0`.
pub fn noether_identity_check(l: &Expression, t: &TransformationRule, cs: &ConstraintSet) -> Result<(bool, Certificate), VarError> {
    let nc = noether_current(l, t, cs)?;
    let mut total = nc.current.derivative(&Index::lorentz("lambda", false));
    for f in field_patterns(l) {
        let Some(df) = t.vary_atom(&f) else { continue };
        let el = euler_lagrange(l, &f).expr;
        total = total.add(&df.multiply(&el));
    }
    let (ok, mut cert) = is_zero(&total, cs);
    cert.notes.push(format!("current: {}", nc.current));
    if !nc.improvement.is_empty() {
        cert.notes.push(format!("improvement: {}", nc.improvement));
    }
    Ok((ok, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx() -> Context {
        let mut cx = Context::builtin();
        cx.load("field phi[] even").unwrap();
        cx
    }

    fn p(s: &str) -> Expression {
        let cx = cx();
        cx.defs.substitute(&cx.parse(s).unwrap())
    }

    fn atom(s: &str) -> Atom {
        p(s).terms[0].atoms[0].clone()
    }

    fn same(a: &Expression, b: &Expression) -> bool {
        is_zero(&a.sub(b), &ConstraintSet::none()).0
    }

    #[test]
    fn leibniz() {
        let mu = Index::lorentz("mu", false);
        let e = total_derivative(&p("A[nu;a]*B[b]"), &mu);
        assert_eq!(e.to_string(), "d[mu]A[nu;a]*B[b] + A[nu;a]*d[mu]B[b]");
        assert!(total_derivative(&p("3"), &mu).is_empty());
        let e = total_derivative(&p("cbar[a]*c[a]"), &mu);
        assert_eq!(e.to_string(), "d[mu]cbar[a]*c[a] + cbar[a]*d[mu]c[a]");
    }

    #[test]
    fn scalar_wave_operator() {
        let el = euler_lagrange(&p("1/2*d[mu]phi*d[^mu]phi"), &atom("phi")).expr;
        assert!(same(&el, &p("-d[mu]d[^mu]phi")), "{el}");
    }

    #[test]
    fn maxwell_with_source() {
        let l = p("-1/4*F[mu,nu]*F[^mu,^nu] + e*A[mu]*j[^mu]");
        let el = euler_lagrange(&l, &atom("A[nu]")).expr;
        assert!(same(&el, &p("d[mu]F[^mu,^nu] + e*j[^nu]")), "{el}");
        assert!(euler_lagrange(&l, &atom("B")).absent);
    }

    #[test]
    fn el_linear() {
        let a = p("d[mu]A[nu]*d[^mu]A[^nu]");
        let b = p("A[mu]*j[^mu]*B");
        let f = atom("A[rho]");
        let lhs = euler_lagrange(&p("2*d[mu]A[nu]*d[^mu]A[^nu] - 3*A[mu]*j[^mu]*B"), &f).expr;
        let rhs = euler_lagrange(&a, &f).expr.scale_q(crate::expr::q(2)).sub(&euler_lagrange(&b, &f).expr.scale_q(crate::expr::q(3)));
        assert!(same(&lhs, &rhs));
    }

    #[test]
    fn divergence_detection() {
        let td = is_total_derivative(&p("d[mu](A[^mu;a]*B[a])"), &ConstraintSet::none());
        assert!(td.holds);
        let td = is_total_derivative(&p("A[mu;a]*A[^mu;a]"), &ConstraintSet::none());
        assert!(!td.holds);
        let k = td.k;
        assert!(k.is_none());
    }

    #[test]
    fn abelian_shift_identity() {
        let cx = cx();
        let l = p("-1/4*F[mu,nu]*F[^mu,^nu] + e*A[mu]*j[^mu]");
        let t = TransformationRule::new("shift", false).with(&cx, "A[mu]", "d[mu]omega").unwrap();
        let (ok, cert) = noether_identity_check(&l, &t, &ConstraintSet::abelian()).unwrap();
        assert!(ok, "{cert:?}");
        assert!(noether_current(&l, &t, &ConstraintSet::none()).is_err());
    }
}
