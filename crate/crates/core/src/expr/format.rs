use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Atom, Coupling, Expression, Index, Label, Monomial, Tensor};

pub(super) fn write_expression(e: &Expression, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.terms.is_empty() {
        return f.write_str("0");
    }
    for (k, m) in e.terms.iter().enumerate() {
        if k == 0 {
            write_monomial(m, f, true)?;
        } else {
            f.write_str(if m.coeff.q.is_negative() { " - " } else { " + " })?;
            write_monomial(m, f, false)?;
        }
    }
    Ok(())
}

pub(super) fn write_monomial(m: &Monomial, f: &mut fmt::Formatter<'_>, signed: bool) -> fmt::Result {
    let mut parts: Vec<String> = Vec::new();
    let q = if signed { m.coeff.q } else { m.coeff.q.abs() };
    let has_factors = m.coeff.imag
        || m.coeff.pow.iter().any(|p| *p != 0)
        || !m.tensors.is_empty()
        || !m.atoms.is_empty();
    let mut prefix = "";
    if q == -super::Q::one() && has_factors {
        prefix = "-";
    } else if !q.is_one() || !has_factors {
        parts.push(q.to_string());
    }
    if m.coeff.imag {
        parts.push("i".into());
    }
    for c in Coupling::ALL {
        match m.coeff.pow[c as usize] {
            0 => {}
            1 => parts.push(c.symbol().into()),
            p => parts.push(format!("{}^{}", c.symbol(), p)),
        }
    }
    for t in &m.tensors {
        parts.push(tensor_string(t));
    }
    for a in &m.atoms {
        parts.push(atom_string(a));
    }
    write!(f, "{prefix}{}", parts.join("*"))
}

pub fn index_string(i: &Index) -> String {
    let mut s = String::new();
    if i.up {
        s.push('^');
    }
    match &i.label {
        Label::Explicit(v) => write!(s, "{v}").unwrap(),
        Label::Named(n) => s.push_str(n),
    }
    s
}

fn join(ix: &[Index]) -> String {
    ix.iter().map(index_string).collect::<Vec<_>>().join(",")
}

pub fn tensor_string(t: &Tensor) -> String {
    match t {
        Tensor::Structure(ix) => format!("f[{}]", join(ix)),
        Tensor::Metric(ix) => format!("g[{}]", join(ix)),
        Tensor::Delta(ix) => format!("delta[{}]", join(ix)),
    }
}

pub fn atom_string(a: &Atom) -> String {
    let mut s = String::new();
    for d in &a.derivs {
        write!(s, "d[{}]", index_string(d)).unwrap();
    }
    s.push_str(&a.name);
    match (a.lorentz.is_empty(), a.adjoint.is_empty()) {
        (true, true) => {}
        (true, false) => write!(s, "[{}]", join(&a.adjoint)).unwrap(),
        (false, true) => write!(s, "[{}]", join(&a.lorentz)).unwrap(),
        (false, false) => write!(s, "[{};{}]", join(&a.lorentz), join(&a.adjoint)).unwrap(),
    }
    s
}
