//! Named definitions (`F[mu,nu;a] := ...`) and their expansion.
//!
//! Field macros such as `F` stay as atoms until [`DefinitionTable::substitute`]
//! expands them; operator macros such as `D[mu;a,b](X)` are expanded as soon as
//! they are parsed, since their operand is an arbitrary factor.

use std::collections::{BTreeMap, HashSet};

use super::{Expression, ExprError, Index, Label, Name};

#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: Name,
    pub lorentz: Vec<Index>,
    pub adjoint: Vec<Index>,
    /// Placeholder symbol for operator macros.
    pub operand: Option<Name>,
    pub body: Expression,
    pub odd: bool,
}

impl Definition {
    pub fn arity(&self) -> (usize, usize) {
        (self.lorentz.len(), self.adjoint.len())
    }

    /// Body with parameters replaced by `lor` / `adj`. Positions flip where the
    /// argument's position differs from the header's.
    pub fn instantiate(&self, lor: &[Index], adj: &[Index]) -> Expression {
        let params: Vec<&Index> = self.lorentz.iter().chain(&self.adjoint).collect();
        let args: Vec<&Index> = lor.iter().chain(adj).collect();
        let mut body = self.body.clone();
        // Two phases so that a parameter renamed onto another parameter's name
        // cannot capture it.
        let temps: Vec<Index> = params
            .iter()
            .enumerate()
            .map(|(k, p)| Index {
                kind: p.kind,
                label: Label::Named(format!("%p{k}").into()),
                up: p.up,
            })
            .collect();
        for (p, t) in params.iter().zip(&temps) {
            body = body.rename_free(p, t);
        }
        for (t, a) in temps.iter().zip(&args) {
            body = body.rename_free(t, a);
        }
        // Internal dummies become generated names so they never meet
        // user-written indices.
        let avoid: HashSet<_> = args.iter().filter_map(|a| a.key()).collect();
        for m in &mut body.terms {
            m.freshen_dummies(&avoid);
        }
        body
    }

    /// Expand an operator macro applied to `operand`.
    pub fn instantiate_operator(&self, lor: &[Index], adj: &[Index], operand: &Expression) -> Expression {
        let body = self.instantiate(lor, adj);
        let Some(ph) = &self.operand else {
            return body;
        };
        let mut out = Vec::new();
        for m in &body.terms {
            let Some(pos) = m.atoms.iter().position(|a| &a.name == ph) else {
                out.push(m.clone());
                continue;
            };
            let mut rep = operand.clone();
            for d in &m.atoms[pos].derivs {
                rep = rep.derivative(d);
            }
            out.extend(m.splice(pos, &rep, false));
        }
        Expression::from_terms(out)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DefinitionTable {
    defs: BTreeMap<(Name, usize, usize), Definition>,
}

impl DefinitionTable {
    pub fn get(&self, name: &str, nl: usize, na: usize) -> Option<&Definition> {
        self.defs.get(&(Name::from(name), nl, na))
    }

    pub fn arities<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.defs
            .keys()
            .filter(move |(n, _, _)| &**n == name)
            .map(|(_, l, a)| (*l, *a))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Definition> {
        self.defs.values()
    }

    /// Insert, rejecting definitions that would make expansion cyclic.
    pub fn insert(&mut self, def: Definition) -> Result<(), ExprError> {
        let key = (def.name.clone(), def.lorentz.len(), def.adjoint.len());
        let previous = self.defs.insert(key.clone(), def);
        if self.reaches(&key, &key, &mut HashSet::new()) {
            match previous {
                Some(p) => {
                    self.defs.insert(key.clone(), p);
                }
                None => {
                    self.defs.remove(&key);
                }
            }
            return Err(ExprError::CyclicDefinition(key.0.to_string()));
        }
        Ok(())
    }

    fn reaches(&self, from: &(Name, usize, usize), target: &(Name, usize, usize), seen: &mut HashSet<(Name, usize, usize)>) -> bool {
        let Some(d) = self.defs.get(from) else {
            return false;
        };
        for a in d.body.atoms() {
            let k = (a.name.clone(), a.lorentz.len(), a.adjoint.len());
            if &k == target {
                return true;
            }
            if seen.insert(k.clone()) && self.reaches(&k, target, seen) {
                return true;
            }
        }
        false
    }

    /// Expand every field-macro atom, including those inside other bodies.
    pub fn substitute(&self, e: &Expression) -> Expression {
        let mut work: Vec<_> = e.terms.clone();
        let mut out = Vec::new();
        while let Some(m) = work.pop() {
            let hit = m.atoms.iter().enumerate().find_map(|(pos, a)| {
                self.get(&a.name, a.lorentz.len(), a.adjoint.len())
                    .filter(|d| d.operand.is_none())
                    .map(|d| (pos, d))
            });
            match hit {
                None => out.push(m),
                Some((pos, d)) => {
                    let a = &m.atoms[pos];
                    let mut rep = d.instantiate(&a.lorentz, &a.adjoint);
                    for idx in &a.derivs {
                        rep = rep.derivative(idx);
                    }
                    work.extend(m.splice(pos, &rep, false));
                }
            }
        }
        out.reverse();
        Expression::from_terms(out)
    }
}

/// Expand all definitions known to `defs`.
pub fn substitute_definitions(e: &Expression, defs: &DefinitionTable) -> Expression {
    defs.substitute(e)
}
