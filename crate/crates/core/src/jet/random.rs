use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    L,
    A,
}

struct Template {
    head: &'static str,
    lorentz: usize,
    adjoint: usize,
    odd: bool,
    tensor: bool,
}

const TEMPLATES: [Template; 12] = [
    Template { head: "A", lorentz: 1, adjoint: 1, odd: false, tensor: false },
    Template { head: "B", lorentz: 0, adjoint: 1, odd: false, tensor: false },
    Template { head: "c", lorentz: 0, adjoint: 1, odd: true, tensor: false },
    Template { head: "cbar", lorentz: 0, adjoint: 1, odd: true, tensor: false },
    Template { head: "j", lorentz: 1, adjoint: 1, odd: false, tensor: false },
    Template { head: "omega", lorentz: 0, adjoint: 1, odd: false, tensor: false },
    Template { head: "A", lorentz: 1, adjoint: 0, odd: false, tensor: false },
    Template { head: "B", lorentz: 0, adjoint: 0, odd: false, tensor: false },
    Template { head: "f", lorentz: 0, adjoint: 3, odd: false, tensor: true },
    Template { head: "g", lorentz: 2, adjoint: 0, odd: false, tensor: true },
    Template { head: "delta", lorentz: 0, adjoint: 2, odd: false, tensor: true },
    Template { head: "f", lorentz: 0, adjoint: 3, odd: false, tensor: true },
];

struct Factor {
    t: &'static Template,
    derivs: usize,
}

/// Signature shared by all terms: free Lorentz indices (name, up) and free adjoint names.
struct Signature {
    lorentz: Vec<(&'static str, bool)>,
    adjoint: Vec<&'static str>,
}

fn term(rng: &mut impl Rng, sig: &Signature) -> String {
    let mut factors: Vec<Factor> = Vec::new();
    let n = rng.gen_range(1..=4);
    let mut odd = 0;
    while factors.len() < n {
        let t = &TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
        if t.odd && odd >= 3 {
            continue;
        }
        odd += usize::from(t.odd);
        let derivs = if t.tensor { 0 } else { rng.gen_range(0..=2usize).saturating_sub(rng.gen_range(0..=1)) };
        factors.push(Factor { t, derivs });
    }
    let count = |fs: &[Factor], k: Kind| -> usize {
        fs.iter()
            .map(|f| match k {
                Kind::L => f.t.lorentz + f.derivs,
                Kind::A => f.t.adjoint,
            })
            .sum()
    };
    // Fix parities so that the non-free slots pair up into dummies.
    while count(&factors, Kind::L) < sig.lorentz.len() || (count(&factors, Kind::L) - sig.lorentz.len()) % 2 == 1 {
        match factors.iter_mut().find(|f| !f.t.tensor && f.derivs < 2) {
            Some(f) => f.derivs += 1,
            None => factors.push(Factor { t: &TEMPLATES[6], derivs: 0 }),
        }
    }
    while count(&factors, Kind::A) < sig.adjoint.len() || (count(&factors, Kind::A) - sig.adjoint.len()) % 2 == 1 {
        factors.push(Factor { t: &TEMPLATES[rng.gen_range(0..2) * 4 + 1], derivs: 0 });
    }
    let mut lslots: Vec<(usize, usize)> = Vec::new();
    let mut aslots: Vec<(usize, usize)> = Vec::new();
    for (k, f) in factors.iter().enumerate() {
        for s in 0..f.derivs + f.t.lorentz {
            lslots.push((k, s));
        }
        for s in 0..f.t.adjoint {
            aslots.push((k, s));
        }
    }
    lslots.shuffle(rng);
    aslots.shuffle(rng);
    let mut lnames: Vec<Vec<String>> = factors.iter().map(|f| vec![String::new(); f.derivs + f.t.lorentz]).collect();
    let mut anames: Vec<Vec<String>> = factors.iter().map(|f| vec![String::new(); f.t.adjoint]).collect();
    let mut it = lslots.into_iter();
    for (name, up) in &sig.lorentz {
        let (k, s) = it.next().expect("enough slots");
        lnames[k][s] = format!("{}{name}", if *up { "^" } else { "" });
    }
    let rest: Vec<_> = it.collect();
    for (n, pair) in rest.chunks(2).enumerate() {
        let up = rng.gen::<bool>();
        let explicit = rng.gen_ratio(1, 8);
        for (m, &(k, s)) in pair.iter().enumerate() {
            lnames[k][s] = if explicit {
                let v = rng.gen_range(0..4);
                format!("{}{v}", if rng.gen() { "^" } else { "" })
            } else {
                format!("{}l{n}", if (m == 0) == up { "^" } else { "" })
            };
        }
    }
    let mut it = aslots.into_iter();
    for name in &sig.adjoint {
        let (k, s) = it.next().expect("enough slots");
        anames[k][s] = name.to_string();
    }
    let rest: Vec<_> = it.collect();
    for (n, pair) in rest.chunks(2).enumerate() {
        let explicit = rng.gen_ratio(1, 8);
        for &(k, s) in pair {
            anames[k][s] = if explicit { rng.gen_range(1..=3).to_string() } else { format!("x{n}") };
        }
    }
    let mut parts = Vec::new();
    let num: i32 = rng.gen_range(1..=5) * if rng.gen() { 1 } else { -1 };
    let den: i32 = rng.gen_range(1..=3);
    parts.push(if den == 1 { num.to_string() } else { format!("{num}/{den}") });
    if rng.gen_ratio(1, 3) {
        parts.push("i".into());
    }
    for c in ["g", "e", "alpha"] {
        if rng.gen_ratio(1, 4) {
            parts.push(c.into());
        }
    }
    for (k, f) in factors.iter().enumerate() {
        let mut s = String::new();
        for d in &lnames[k][..f.derivs] {
            s.push_str(&format!("d[{d}]"));
        }
        let lor = &lnames[k][f.derivs..];
        s.push_str(f.t.head);
        if f.t.tensor {
            let all: Vec<&String> = lor.iter().chain(&anames[k]).collect();
            s.push_str(&format!("[{}]", all.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(",")));
        } else if f.t.adjoint == 0 && f.t.lorentz > 0 {
            s.push_str(&format!("[{}]", lor.join(",")));
        } else if f.t.lorentz + f.t.adjoint > 0 {
            s.push_str(&format!("[{};{}]", lor.join(","), anames[k].join(",")));
        }
        parts.push(s);
    }
    parts.join("*")
}

/// Random well-formed expression over the built-in fields: up to four terms
/// sharing one free-index signature, derivatives of order at most two.
/// Explicit adjoint components stay within 1..=3, valid for every group.
pub fn random_expression_source(rng: &mut impl Rng) -> String {
    let mut sig = Signature { lorentz: Vec::new(), adjoint: Vec::new() };
    if rng.gen_ratio(1, 2) {
        sig.lorentz.push(("mu", rng.gen()));
    }
    if rng.gen_ratio(1, 2) {
        sig.adjoint.push("a");
    }
    let n = rng.gen_range(1..=4);
    let mut out = String::new();
    for k in 0..n {
        let t = term(rng, &sig);
        match t.strip_prefix('-') {
            Some(rest) if k > 0 => {
                out.push_str(" - ");
                out.push_str(rest);
            }
            _ => {
                if k > 0 {
                    out.push_str(" + ");
                }
                out.push_str(&t);
            }
        }
    }
    out
}
