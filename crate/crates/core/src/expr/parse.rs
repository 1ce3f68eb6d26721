//! Input language for expressions, field declarations and definitions.
//!
//! ```text
//! stmt   := decl | defn | expr
//! decl   := "field" NAME "[" sig "]" ("odd"|"even") ["const"]
//! defn   := NAME "[" sig "]" ["(" NAME ")"] ":=" expr
//! expr   := ["+"|"-"] term (("+"|"-") term)*
//! term   := factor ("*" factor)*
//! factor := INT ["/" INT] | "i" | COUPLING ["^" ["-"] INT]
//!         | "d[" IDX "]" factor | "(" expr ")" | NAME ["[" idx-list "]"] [operand]
//! ```
//!
//! Upper Lorentz indices carry a leading caret (`^mu`). Index lists without a
//! `;` are resolved against the symbol's declared arity, so `B[a]` and
//! `j[mu]` need no separator. In declarations and definition headers the
//! part before `;` is always Lorentz.

use std::collections::{BTreeMap, HashSet};

use super::{
    defs::{Definition, DefinitionTable},
    Atom, Coeff, Coupling, ExprError, Expression, Index, IndexKind, Label, Monomial, Name, Tensor, Q,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: Name,
    pub n_lorentz: usize,
    pub n_adjoint: usize,
    pub odd: bool,
    pub constant: bool,
}

impl FieldDecl {
    pub fn new(name: &str, n_lorentz: usize, n_adjoint: usize, odd: bool) -> Self {
        FieldDecl {
            name: name.into(),
            n_lorentz,
            n_adjoint,
            odd,
            constant: false,
        }
    }
}

type SymKey = (Name, usize, usize);

/// Declared fields plus the definition table. Parsing is relative to a context.
#[derive(Clone, Debug)]
pub struct Context {
    decls: BTreeMap<SymKey, FieldDecl>,
    pub defs: DefinitionTable,
}

const RESERVED: &[&str] = &["d", "i", "f", "g", "delta", "field"];

impl Default for Context {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Context {
    pub fn empty() -> Self {
        Context {
            decls: BTreeMap::new(),
            defs: DefinitionTable::default(),
        }
    }

    /// A, B, c, cbar, j (Abelian and adjoint variants), gauge parameters
    /// omega and theta, and the F / D definitions.
    pub fn builtin() -> Self {
        let mut cx = Context::empty();
        let src = "\
field A[mu;a] even
field A[mu] even
field B[;a] even
field B[] even
field c[;a] odd
field cbar[;a] odd
field j[mu;a] even
field j[mu] even
field omega[;a] even
field omega[] even
field theta[;a] even const
F[mu,nu;a] := d[mu]A[nu;a] - d[nu]A[mu;a] + g*f[a,b,c]*A[mu;b]*A[nu;c]
F[mu,nu] := d[mu]A[nu] - d[nu]A[mu]
D[mu;a,b](X) := d[mu](delta[a,b]*X) + g*f[a,c,b]*A[mu;c]*X";
        cx.load(src).expect("builtin context");
        cx
    }

    pub fn declare(&mut self, decl: FieldDecl) {
        self.decls
            .insert((decl.name.clone(), decl.n_lorentz, decl.n_adjoint), decl);
    }

    pub fn decls(&self) -> impl Iterator<Item = &FieldDecl> {
        self.decls.values()
    }

    /// Declared (non-macro) fields.
    pub fn fields(&self) -> Vec<FieldDecl> {
        self.decls.values().cloned().collect()
    }

    pub fn lookup(&self, name: &str, nl: usize, na: usize) -> Option<&FieldDecl> {
        self.decls.get(&(Name::from(name), nl, na))
    }

    /// Load newline-separated declarations and definitions.
    pub fn load(&mut self, text: &str) -> Result<(), ExprError> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            self.statement(line)?;
        }
        Ok(())
    }

    /// Process one statement; expressions are parsed and returned.
    pub fn statement(&mut self, text: &str) -> Result<Option<Expression>, ExprError> {
        let toks = lex(text)?;
        if matches!(toks.first(), Some((Tok::Ident(s), _)) if s == "field") {
            self.declaration(&toks, text.len())?;
            return Ok(None);
        }
        if toks.iter().any(|(t, _)| *t == Tok::Define) {
            self.definition(&toks, text.len())?;
            return Ok(None);
        }
        self.parse_tokens(toks, text.len()).map(Some)
    }

    /// Parse a single expression.
    pub fn parse(&self, text: &str) -> Result<Expression, ExprError> {
        let toks = lex(text)?;
        self.parse_tokens(toks, text.len())
    }

    fn parse_tokens(&self, toks: Vec<(Tok, usize)>, end: usize) -> Result<Expression, ExprError> {
        let mut p = Parser {
            cx: self,
            toks,
            pos: 0,
            end,
            placeholder: None,
        };
        let e = p.expr()?;
        p.expect_end()?;
        e.validate()?;
        Ok(e)
    }

    fn declaration(&mut self, toks: &[(Tok, usize)], end: usize) -> Result<(), ExprError> {
        let mut p = Parser {
            cx: self,
            toks: toks.to_vec(),
            pos: 1,
            end,
            placeholder: None,
        };
        let name = p.ident()?;
        check_name(&name, p.here())?;
        let (lor, adj) = p.header_sig()?;
        let stat = p.ident()?;
        let odd = match stat.as_str() {
            "odd" => true,
            "even" => false,
            _ => return Err(p.err("expected `odd` or `even`")),
        };
        let constant = if p.peek().is_some() {
            match p.ident()?.as_str() {
                "const" => true,
                _ => return Err(p.err("expected `const` or end of declaration")),
            }
        } else {
            false
        };
        p.expect_end()?;
        self.declare(FieldDecl {
            name: name.into(),
            n_lorentz: lor.len(),
            n_adjoint: adj.len(),
            odd,
            constant,
        });
        Ok(())
    }

    fn definition(&mut self, toks: &[(Tok, usize)], end: usize) -> Result<(), ExprError> {
        let split = toks.iter().position(|(t, _)| *t == Tok::Define).unwrap();
        let mut head = Parser {
            cx: self,
            toks: toks[..split].to_vec(),
            pos: 0,
            end,
            placeholder: None,
        };
        let name = head.ident()?;
        check_name(&name, head.here())?;
        let (lor, adj) = head.header_sig()?;
        let operand = if head.eat(&Tok::LParen) {
            let op = head.ident()?;
            head.expect(&Tok::RParen)?;
            Some(Name::from(op))
        } else {
            None
        };
        head.expect_end()?;

        let mut body_cx = self.clone();
        if let Some(op) = &operand {
            body_cx.declare(FieldDecl::new(op, 0, 0, false));
        }
        let mut body_p = Parser {
            cx: &body_cx,
            toks: toks[split + 1..].to_vec(),
            pos: 0,
            end,
            placeholder: operand.clone(),
        };
        let body = body_p.expr()?;
        body_p.expect_end()?;
        body.validate()?;
        let odd = match body.parity() {
            Some(p) => p,
            None => return Err(ExprError::MixedGrading(name)),
        };
        let def = Definition {
            name: name.as_str().into(),
            lorentz: lor,
            adjoint: adj,
            operand,
            body,
            odd,
        };
        self.defs.insert(def)?;
        Ok(())
    }
}

fn check_name(name: &str, pos: usize) -> Result<(), ExprError> {
    if RESERVED.contains(&name) || Coupling::from_symbol(name).is_some() || name.starts_with('#') {
        return Err(ExprError::Syntax {
            pos,
            msg: format!("`{name}` is reserved"),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Caret,
    Define,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        let start = i;
        let tok = match ch {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '^' => Tok::Caret,
            ':' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    Tok::Define
                } else {
                    return Err(ExprError::Syntax {
                        pos: i,
                        msg: "expected `:=`".into(),
                    });
                }
            }
            c if c.is_ascii_digit() => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let v = text[start..=i].parse::<i128>().map_err(|e| ExprError::Syntax {
                    pos: start,
                    msg: e.to_string(),
                })?;
                Tok::Int(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '#' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            c => {
                return Err(ExprError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct RawIndex {
    up: bool,
    label: Label,
    pos: usize,
}

struct Parser<'a> {
    cx: &'a Context,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    placeholder: Option<Name>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ExprError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {t:?}")))
        }
    }

    fn expect_end(&self) -> Result<(), ExprError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
        }
    }

    fn ident(&mut self) -> Result<String, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut sign = Q::from_integer(1);
        if self.eat(&Tok::Minus) {
            sign = -sign;
        } else {
            self.eat(&Tok::Plus);
        }
        let mut acc = self.term()?.scale_q(sign);
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(&self.term()?);
            } else if self.eat(&Tok::Minus) {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut acc = self.factor()?;
        while self.eat(&Tok::Star) {
            let rhs = self.factor()?;
            acc = acc.multiply_written(&rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expression, ExprError> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let mut v = Q::from_integer(n);
                if self.eat(&Tok::Slash) {
                    match self.peek().cloned() {
                        Some(Tok::Int(d)) if d != 0 => {
                            self.pos += 1;
                            v /= Q::from_integer(d);
                        }
                        _ => return Err(self.err("expected nonzero integer denominator")),
                    }
                }
                Ok(Expression::constant(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let bracket = self.peek() == Some(&Tok::LBrack);
                if !bracket {
                    if name == "i" {
                        return Ok(Expression::from_monomial(Monomial::scalar(Coeff::i())));
                    }
                    if let Some(c) = Coupling::from_symbol(&name) {
                        let mut power = 1i32;
                        if self.eat(&Tok::Caret) {
                            let neg = self.eat(&Tok::Minus);
                            match self.peek().cloned() {
                                Some(Tok::Int(n)) => {
                                    self.pos += 1;
                                    power = if neg { -(n as i32) } else { n as i32 };
                                }
                                _ => return Err(self.err("expected integer exponent")),
                            }
                        }
                        return Ok(Expression::from_monomial(Monomial::scalar(Coeff::coupling(c, power))));
                    }
                    return self.symbol(&name, Vec::new(), None, start);
                }
                self.pos += 1;
                let (items, semi) = self.index_list()?;
                match name.as_str() {
                    "d" => {
                        if items.len() != 1 || semi.is_some() {
                            return Err(ExprError::Syntax {
                                pos: start,
                                msg: "d[...] takes exactly one lorentz index".into(),
                            });
                        }
                        let idx = to_index(&items[0], IndexKind::Lorentz)?;
                        let inner = self.factor()?;
                        Ok(inner.derivative(&idx))
                    }
                    "f" | "g" | "delta" => self.tensor(&name, &items, semi, start),
                    _ => self.symbol(&name, items, semi, start),
                }
            }
            _ => Err(self.err("expected factor")),
        }
    }

    /// Parses the bracket contents after `[`, consuming `]`.
    fn index_list(&mut self) -> Result<(Vec<RawIndex>, Option<usize>), ExprError> {
        let mut items = Vec::new();
        let mut semi = None;
        if self.eat(&Tok::RBrack) {
            return Ok((items, semi));
        }
        loop {
            if self.peek() == Some(&Tok::Semi) {
                if semi.is_some() {
                    return Err(self.err("more than one `;`"));
                }
                self.pos += 1;
                semi = Some(items.len());
                if self.eat(&Tok::RBrack) {
                    return Ok((items, semi));
                }
                continue;
            }
            let pos = self.here();
            let up = self.eat(&Tok::Caret);
            let label = match self.peek().cloned() {
                Some(Tok::Ident(s)) => Label::Named(s.into()),
                Some(Tok::Int(v)) if (0..=255).contains(&v) => Label::Explicit(v as u8),
                _ => return Err(self.err("expected index")),
            };
            self.pos += 1;
            items.push(RawIndex { up, label, pos });
            if self.eat(&Tok::RBrack) {
                return Ok((items, semi));
            }
            if !self.eat(&Tok::Comma) && self.peek() != Some(&Tok::Semi) {
                return Err(self.err("expected `,`, `;` or `]`"));
            }
        }
    }

    fn header_sig(&mut self) -> Result<(Vec<Index>, Vec<Index>), ExprError> {
        if !self.eat(&Tok::LBrack) {
            return Ok((Vec::new(), Vec::new()));
        }
        let (items, semi) = self.index_list()?;
        let split = semi.unwrap_or(items.len());
        let lor = items[..split]
            .iter()
            .map(|r| to_index(r, IndexKind::Lorentz))
            .collect::<Result<Vec<_>, _>>()?;
        let adj = items[split..]
            .iter()
            .map(|r| to_index(r, IndexKind::Adjoint))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((lor, adj))
    }

    fn tensor(&mut self, name: &str, items: &[RawIndex], semi: Option<usize>, start: usize) -> Result<Expression, ExprError> {
        let (kind, n) = match name {
            "f" => (IndexKind::Adjoint, 3),
            "g" => (IndexKind::Lorentz, 2),
            _ => (IndexKind::Adjoint, 2),
        };
        if items.len() != n || semi.is_some_and(|s| s != 0 && s != n) {
            return Err(ExprError::Arity {
                symbol: name.into(),
                expected: n.to_string(),
                found: items.len().to_string(),
            });
        }
        let _ = start;
        let ix = items
            .iter()
            .map(|r| to_index(r, kind))
            .collect::<Result<Vec<_>, _>>()?;
        let t = match name {
            "f" => Tensor::Structure([ix[0].clone(), ix[1].clone(), ix[2].clone()]),
            "g" => Tensor::Metric([ix[0].clone(), ix[1].clone()]),
            _ => Tensor::Delta([ix[0].clone(), ix[1].clone()]),
        };
        Ok(Expression::from_monomial(Monomial::tensor(t)))
    }

    fn symbol(&mut self, name: &str, items: Vec<RawIndex>, semi: Option<usize>, start: usize) -> Result<Expression, ExprError> {
        let candidates: Vec<(usize, usize)> = match semi {
            Some(s) => vec![(s, items.len() - s)],
            None => {
                let n = items.len();
                if n == 0 {
                    vec![(0, 0)]
                } else {
                    vec![(n, 0), (0, n)]
                }
            }
        };
        let defs = &self.cx.defs;
        for (nl, na) in candidates.iter().copied() {
            if let Some(def) = defs.get(name, nl, na) {
                let (lor, adj) = split_indices(&items, nl)?;
                if def.operand.is_some() {
                    let operand = self.factor()?;
                    return Ok(def.instantiate_operator(&lor, &adj, &operand));
                }
                let mut atom = Atom::new(name, lor, adj, def.odd);
                atom.constant = false;
                return Ok(Expression::atom(atom));
            }
            if let Some(decl) = self.cx.lookup(name, nl, na) {
                let (lor, adj) = split_indices(&items, nl)?;
                let mut atom = Atom::new(name, lor, adj, decl.odd);
                atom.constant = decl.constant;
                return Ok(Expression::atom(atom));
            }
        }
        let known = self
            .cx
            .decls
            .keys()
            .filter(|(n, _, _)| &**n == name)
            .map(|(_, l, a)| format!("{l};{a}"))
            .chain(defs.arities(name).map(|(l, a)| format!("{l};{a}")))
            .collect::<Vec<_>>();
        if known.is_empty() && self.placeholder.as_deref() != Some(name) {
            return Err(ExprError::Undeclared(name.into()));
        }
        let _ = start;
        Err(ExprError::Arity {
            symbol: name.into(),
            expected: known.join(" | "),
            found: match semi {
                Some(s) => format!("{};{}", s, items.len() - s),
                None => items.len().to_string(),
            },
        })
    }
}

fn split_indices(items: &[RawIndex], nl: usize) -> Result<(Vec<Index>, Vec<Index>), ExprError> {
    let lor = items[..nl]
        .iter()
        .map(|r| to_index(r, IndexKind::Lorentz))
        .collect::<Result<Vec<_>, _>>()?;
    let adj = items[nl..]
        .iter()
        .map(|r| to_index(r, IndexKind::Adjoint))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lor, adj))
}

fn to_index(r: &RawIndex, kind: IndexKind) -> Result<Index, ExprError> {
    if kind == IndexKind::Adjoint && r.up {
        return Err(ExprError::Syntax {
            pos: r.pos,
            msg: "adjoint indices carry no position".into(),
        });
    }
    if let Label::Explicit(v) = r.label {
        let ok = match kind {
            IndexKind::Lorentz => v <= 3,
            IndexKind::Adjoint => (1..=8).contains(&v),
        };
        if !ok {
            return Err(ExprError::ComponentRange { kind, value: v as i64 });
        }
    }
    Ok(Index {
        kind,
        label: r.label.clone(),
        up: r.up,
    })
}

/// Field names referenced anywhere in `e`.
pub fn referenced_symbols(e: &Expression) -> HashSet<(Name, usize, usize)> {
    e.atoms()
        .map(|a| (a.name.clone(), a.lorentz.len(), a.adjoint.len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx() -> Context {
        Context::builtin()
    }

    #[test]
    fn parses_basic_forms() {
        let e = cx().parse("d[mu]F[^mu,^nu;a] + g*j[^nu;a]").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.to_string(), "d[mu]F[^mu,^nu;a] + g*j[^nu;a]");
        let e = cx().parse("-1/2*F[mu,nu;a]*F[^mu,^nu;a]").unwrap();
        assert_eq!(e.to_string(), "-1/2*F[mu,nu;a]*F[^mu,^nu;a]");
        let e = cx().parse("i*alpha^-1*B*B").unwrap();
        assert_eq!(e.to_string(), "i*alpha^-1*B*B");
    }

    #[test]
    fn covariant_derivative_expands() {
        let e = cx().parse("D[mu;a,b]c[b]").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.to_string(), "delta[a,b]*d[mu]c[b] + g*f[a,#1,b]*A[mu;#1]*c[b]");
        let e = cx().parse("D[^mu;a,b](d[mu]cbar[b])").unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.validate().is_ok());
    }

    #[test]
    fn field_macros_substitute() {
        let cx = cx();
        let e = cx.parse("F[mu,nu;a]").unwrap();
        let s = cx.defs.substitute(&e);
        assert_eq!(s.to_string(), "d[mu]A[nu;a] - d[nu]A[mu;a] + g*f[a,#1,#2]*A[mu;#1]*A[nu;#2]");
        let e = cx.parse("d[^mu]F[mu,nu;b]").unwrap();
        let s = cx.defs.substitute(&e);
        assert_eq!(s.len(), 4);
        s.validate().unwrap();
        let e = cx.parse("F[^b,nu;b]").unwrap();
        let s = cx.defs.substitute(&e);
        s.validate().unwrap();
        assert!(s.to_string().contains("A[^b;b]"), "{s}");
    }

    #[test]
    fn rejects_bad_input() {
        let cx = cx();
        assert!(matches!(cx.parse("Q[a]"), Err(ExprError::Undeclared(_))));
        assert!(matches!(cx.parse("A[mu,nu;a]"), Err(ExprError::Arity { .. })));
        assert!(matches!(cx.parse("A[mu;a]*A[mu;a]"), Err(ExprError::DummyPosition(_))));
        assert!(matches!(cx.parse("A[mu;a]*A[^mu;a]*B[a]"), Err(ExprError::RepeatedIndex(_))));
        assert!(matches!(cx.parse("A[mu;a] + B[a]"), Err(ExprError::SignatureMismatch { .. })));
        assert!(matches!(cx.parse("A[4;a]"), Err(ExprError::ComponentRange { .. })));
        assert!(matches!(cx.parse("B[9]"), Err(ExprError::ComponentRange { .. })));
        assert!(matches!(cx.parse("A[mu;a] +"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn declarations_and_cycles() {
        let mut cx = Context::empty();
        cx.load("field phi[] even\nfield psi[;a] odd\nP[] := phi*phi").unwrap();
        assert_eq!(cx.parse("psi[a]*P").unwrap().parity(), Some(true));
        let err = cx.load("P2[] := P\nP[] := P2");
        assert!(matches!(err, Err(ExprError::CyclicDefinition(_))));
        // the rejected redefinition leaves the old one in place
        assert_eq!(cx.defs.substitute(&cx.parse("P").unwrap()).to_string(), "phi*phi");
    }
}
