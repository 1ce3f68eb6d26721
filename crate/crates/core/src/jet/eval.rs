use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::grassmann::{sort_generators, DEFAULT_DEGREE_CAP};
use super::point::{multi_index_id, sample_jet_point, trial_seed, JetPoint};
use super::{GroupData, GrassmannValue, JetError};
use crate::canon::ConstraintSet;
use crate::expr::{Coeff, Expression, IndexKey, IndexKind, Label, Monomial, Tensor};

/// Explicit components for free indices: Lorentz 0..=3, adjoint 1..=dim.
pub type Assignment = Vec<(IndexKey, u8)>;

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Fixed(u8),
}

#[derive(Clone, Debug)]
enum Factor {
    Structure([Slot; 3]),
    /// Metric with both indices in the same position, otherwise a Kronecker delta.
    Metric([Slot; 2], bool),
    Delta([Slot; 2]),
    Atom {
        field: usize,
        derivs: Vec<(Slot, bool)>,
        lorentz: Vec<(Slot, bool)>,
        adjoint: Vec<Slot>,
        odd: bool,
        /// Variables first bound by this atom, with their ranges.
        fresh: Vec<(usize, u8)>,
    },
}

/// A monomial compiled against a point: explicit sums over its indices.
#[derive(Clone, Debug)]
struct Plan {
    coeff: Complex64,
    vars: usize,
    free: Vec<(IndexKey, usize)>,
    factors: Vec<Factor>,
}

fn coeff_value(c: &Coeff, p: &JetPoint) -> Complex64 {
    let q = c.q.numer().to_f64().unwrap_or(f64::NAN) / c.q.denom().to_f64().unwrap_or(f64::NAN);
    let mut v = q;
    for (k, &n) in c.pow.iter().enumerate() {
        v *= p.couplings[k].powi(n);
    }
    if c.imag {
        Complex64::new(0.0, v)
    } else {
        Complex64::new(v, 0.0)
    }
}

fn eta(mu: u8) -> f64 {
    if mu == 0 {
        1.0
    } else {
        -1.0
    }
}

fn compile(m: &Monomial, p: &JetPoint, dim: usize) -> Result<Plan, JetError> {
    let mut vars: HashMap<IndexKey, usize> = HashMap::new();
    let mut kinds: Vec<IndexKind> = Vec::new();
    let mut slot = |idx: &crate::expr::Index| -> Result<Slot, JetError> {
        match &idx.label {
            Label::Explicit(v) => match idx.kind {
                IndexKind::Lorentz if *v < 4 => Ok(Slot::Fixed(*v)),
                IndexKind::Adjoint if *v >= 1 && usize::from(*v) <= dim => Ok(Slot::Fixed(v - 1)),
                _ => Err(JetError::ComponentRange(*v)),
            },
            Label::Named(_) => {
                let k = idx.key().expect("named");
                let n = vars.len();
                let id = *vars.entry(k).or_insert(n);
                if id == kinds.len() {
                    kinds.push(idx.kind);
                }
                Ok(Slot::Var(id))
            }
        }
    };
    let mut factors = Vec::new();
    for t in &m.tensors {
        factors.push(match t {
            Tensor::Structure(ix) => Factor::Structure([slot(&ix[0])?, slot(&ix[1])?, slot(&ix[2])?]),
            Tensor::Metric(ix) => Factor::Metric([slot(&ix[0])?, slot(&ix[1])?], ix[0].up == ix[1].up),
            Tensor::Delta(ix) => Factor::Delta([slot(&ix[0])?, slot(&ix[1])?]),
        });
    }
    for a in &m.atoms {
        let field = p
            .field_id(&a.name, a.lorentz.len(), a.adjoint.len())
            .ok_or_else(|| JetError::UnknownField(a.name.to_string()))?;
        if a.derivs.len() > super::point::MAX_ORDER {
            return Err(JetError::OrderTooHigh(a.derivs.len()));
        }
        factors.push(Factor::Atom {
            field,
            derivs: a.derivs.iter().map(|i| Ok((slot(i)?, i.up))).collect::<Result<_, JetError>>()?,
            lorentz: a.lorentz.iter().map(|i| Ok((slot(i)?, i.up))).collect::<Result<_, JetError>>()?,
            adjoint: a.adjoint.iter().map(&mut slot).collect::<Result<_, JetError>>()?,
            odd: a.odd,
            fresh: Vec::new(),
        });
    }
    if m.grassmann_degree() > DEFAULT_DEGREE_CAP {
        return Err(JetError::Degree(m.grassmann_degree()));
    }
    let free: Vec<(IndexKey, usize)> = m
        .free_indices()
        .iter()
        .map(|i| {
            let k = i.key().expect("named free index");
            let id = vars[&k];
            (k, id)
        })
        .collect();
    // Work out which variables each atom binds for the first time, in order.
    let mut bound = vec![false; kinds.len()];
    for (_, id) in &free {
        bound[*id] = true;
    }
    for f in &mut factors {
        let mark = |s: &Slot, bound: &mut Vec<bool>| {
            if let Slot::Var(v) = s {
                bound[*v] = true;
            }
        };
        match f {
            Factor::Structure(s) => s.iter().for_each(|s| mark(s, &mut bound)),
            Factor::Metric(s, _) | Factor::Delta(s) => s.iter().for_each(|s| mark(s, &mut bound)),
            Factor::Atom { derivs, lorentz, adjoint, fresh, .. } => {
                let all = derivs.iter().map(|x| x.0).chain(lorentz.iter().map(|x| x.0)).chain(adjoint.iter().copied());
                for s in all.collect::<Vec<_>>() {
                    if let Slot::Var(v) = s {
                        if !bound[v] {
                            bound[v] = true;
                            let range = if kinds[v] == IndexKind::Lorentz { 4 } else { dim as u8 };
                            fresh.push((v, range));
                        }
                    }
                }
            }
        }
    }
    Ok(Plan {
        coeff: coeff_value(&m.coeff, p),
        vars: kinds.len(),
        free,
        factors,
    })
}

struct Walk<'a> {
    p: &'a JetPoint,
    g: &'a GroupData,
    plan: &'a Plan,
    bind: Vec<Option<u8>>,
    gens: Vec<u32>,
    body: f64,
    soul: HashMap<Vec<u32>, f64>,
    err: Option<JetError>,
}

impl Walk<'_> {
    fn get(&self, s: Slot) -> Option<u8> {
        match s {
            Slot::Fixed(v) => Some(v),
            Slot::Var(v) => self.bind[v],
        }
    }

    /// Try to unify slot `s` with value `v`; returns the variable newly bound.
    fn unify(&mut self, s: Slot, v: u8) -> Result<Option<usize>, ()> {
        match s {
            Slot::Fixed(x) => (x == v).then_some(None).ok_or(()),
            Slot::Var(k) => match self.bind[k] {
                Some(x) => (x == v).then_some(None).ok_or(()),
                None => {
                    self.bind[k] = Some(v);
                    Ok(Some(k))
                }
            },
        }
    }

    fn unify_all(&mut self, pairs: &[(Slot, u8)], acc: f64, k: usize) {
        let mut newly = Vec::new();
        let mut ok = true;
        for &(s, v) in pairs {
            match self.unify(s, v) {
                Ok(Some(n)) => newly.push(n),
                Ok(None) => {}
                Err(()) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            self.go(k + 1, acc);
        }
        for n in newly {
            self.bind[n] = None;
        }
    }

    fn go(&mut self, k: usize, acc: f64) {
        if self.err.is_some() || acc == 0.0 {
            return;
        }
        let Some(f) = self.plan.factors.get(k) else {
            if self.gens.is_empty() {
                self.body += acc;
            } else {
                let mut g = self.gens.clone();
                if let Some(sign) = sort_generators(&mut g) {
                    *self.soul.entry(g).or_default() += sign * acc;
                }
            }
            return;
        };
        match f {
            Factor::Structure(s) => {
                let s = *s;
                for &(a, b, c, v) in self.g.nonzero() {
                    self.unify_all(&[(s[0], a), (s[1], b), (s[2], c)], acc * v, k);
                }
            }
            Factor::Metric(s, same) => {
                let (s, same) = (*s, *same);
                for mu in 0..4u8 {
                    let w = if same { eta(mu) } else { 1.0 };
                    self.unify_all(&[(s[0], mu), (s[1], mu)], acc * w, k);
                }
            }
            Factor::Delta(s) => {
                let s = *s;
                for a in 0..self.g.dim as u8 {
                    self.unify_all(&[(s[0], a), (s[1], a)], acc, k);
                }
            }
            Factor::Atom { fresh, .. } => {
                let fresh = fresh.clone();
                self.atom(k, &fresh, 0, acc);
            }
        }
    }

    fn atom(&mut self, k: usize, fresh: &[(usize, u8)], depth: usize, acc: f64) {
        if let Some(&(v, range)) = fresh.get(depth) {
            for x in 0..range {
                self.bind[v] = Some(x);
                self.atom(k, fresh, depth + 1, acc);
            }
            self.bind[v] = None;
            return;
        }
        let Factor::Atom { field, derivs, lorentz, adjoint, odd, .. } = &self.plan.factors[k] else {
            unreachable!()
        };
        let mut sign = 1.0;
        let mut counts = [0u8; 4];
        for &(s, up) in derivs {
            let mu = self.get(s).expect("bound");
            counts[usize::from(mu)] += 1;
            if up {
                sign *= eta(mu);
            }
        }
        let mut lor = [0u8; 4];
        for (n, &(s, up)) in lorentz.iter().enumerate() {
            let mu = self.get(s).expect("bound");
            lor[n] = mu;
            if up {
                sign *= eta(mu);
            }
        }
        let mut adj = [0u8; 4];
        for (n, &s) in adjoint.iter().enumerate() {
            adj[n] = self.get(s).expect("bound");
        }
        let Some(d) = multi_index_id(&counts) else {
            self.err = Some(JetError::OrderTooHigh(derivs.len()));
            return;
        };
        let fj = &self.p.fields[*field];
        let off = fj.offset(d, &lor[..lorentz.len()], &adj[..adjoint.len()]);
        let val = fj.values[off];
        if *odd {
            self.gens.push(fj.gen_base.expect("odd field has generators") + off as u32);
            self.go(k + 1, acc * sign * val);
            self.gens.pop();
        } else {
            self.go(k + 1, acc * sign * val);
        }
    }
}

fn run_plan(plan: &Plan, p: &JetPoint, g: &GroupData, asg: &Assignment) -> Result<GrassmannValue, JetError> {
    let mut bind = vec![None; plan.vars];
    for (key, id) in &plan.free {
        let (_, v) = asg
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| JetError::Unassigned(key.1.to_string()))?;
        let v = match key.0 {
            IndexKind::Lorentz if *v < 4 => *v,
            IndexKind::Adjoint if *v >= 1 && usize::from(*v) <= g.dim => v - 1,
            _ => return Err(JetError::ComponentRange(*v)),
        };
        bind[*id] = Some(v);
    }
    let mut w = Walk {
        p,
        g,
        plan,
        bind,
        gens: Vec::new(),
        body: 0.0,
        soul: HashMap::new(),
        err: None,
    };
    w.go(0, 1.0);
    if let Some(e) = w.err {
        return Err(e);
    }
    let mut out = GrassmannValue::zero();
    out.add_term(Vec::new(), plan.coeff * w.body);
    let soul: BTreeMap<_, _> = w.soul.into_iter().collect();
    for (s, v) in soul {
        out.add_term(s, plan.coeff * v);
    }
    Ok(out)
}

fn check_group(p: &JetPoint, g: &GroupData) -> Result<(), JetError> {
    if p.dim != g.dim {
        return Err(JetError::GroupMismatch(p.dim, g.dim));
    }
    Ok(())
}

/// Evaluate with explicit components for the free indices.
pub fn evaluate_at(e: &Expression, p: &JetPoint, g: &GroupData, asg: &Assignment) -> Result<GrassmannValue, JetError> {
    check_group(p, g)?;
    let mut out = GrassmannValue::zero();
    for m in &e.terms {
        let plan = compile(m, p, g.dim)?;
        out = &out + &run_plan(&plan, p, g, asg)?;
    }
    Ok(out)
}

/// Evaluate an expression without free indices.
pub fn evaluate(e: &Expression, p: &JetPoint, g: &GroupData) -> Result<GrassmannValue, JetError> {
    evaluate_at(e, p, g, &Vec::new())
}

/// Every assignment of explicit components to the free indices of `e`.
pub fn assignments(e: &Expression, dim: usize) -> Vec<Assignment> {
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for idx in e.free_indices() {
        let key = idx.key().expect("named free index");
        let range: Vec<u8> = match idx.kind {
            IndexKind::Lorentz => (0..4).collect(),
            IndexKind::Adjoint => (1..=dim as u8).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|a| {
                let key = key.clone();
                range.iter().map(move |&v| {
                    let mut a = a.clone();
                    a.push((key.clone(), v));
                    a
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub group: String,
    pub trials: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

struct TrialStats {
    max: f64,
    sum: f64,
    count: usize,
    scale: f64,
}

fn run_trial(e: &Expression, g: &GroupData, seed: u64, cs: &ConstraintSet, asgs: &[Assignment]) -> Result<TrialStats, JetError> {
    let p = sample_jet_point(seed, g, cs)?;
    let plans: Vec<Plan> = e.terms.iter().map(|m| compile(m, &p, g.dim)).collect::<Result<_, _>>()?;
    let mut st = TrialStats {
        max: 0.0,
        sum: 0.0,
        count: 0,
        scale: 0.0,
    };
    for asg in asgs {
        let mut total = GrassmannValue::zero();
        for plan in &plans {
            let v = run_plan(plan, &p, g, asg)?;
            st.scale = st.scale.max(v.max_abs());
            total = &total + &v;
        }
        let r = total.max_abs();
        st.max = st.max.max(r);
        st.sum += r;
        st.count += 1;
    }
    Ok(st)
}

/// Evaluate `e` at `trials` random jet points for every free-index
/// assignment. Residuals are normalized by the largest single-monomial
/// magnitude seen over the whole run.
pub fn numeric_identity_check(
    e: &Expression,
    g: &GroupData,
    trials: usize,
    seed: u64,
    tol: f64,
    cs: &ConstraintSet,
) -> Result<ResidualReport, JetError> {
    let asgs = assignments(e, g.dim);
    let stats: Vec<TrialStats> = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(e, g, trial_seed(seed, k as u64), cs, &asgs))
        .collect::<Result<_, _>>()?;
    let scale = stats.iter().map(|s| s.scale).fold(0.0, f64::max);
    let max = stats.iter().map(|s| s.max).fold(0.0, f64::max);
    let sum: f64 = stats.iter().map(|s| s.sum).sum();
    let count: usize = stats.iter().map(|s| s.count).sum();
    let norm = if scale > 0.0 { scale } else { 1.0 };
    let max_residual = max / norm;
    let mean_residual = if count > 0 { sum / count as f64 / norm } else { 0.0 };
    Ok(ResidualReport {
        group: g.name.into(),
        trials,
        seed,
        max_residual,
        mean_residual,
        tol,
        passed: max_residual < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Index, IndexKind};
    use crate::suite::ex;

    #[test]
    fn explicit_values() {
        let g = GroupData::su2();
        let p = sample_jet_point(42, &g, &ConstraintSet::none()).unwrap();
        let v = evaluate(&ex("g*f[1,2,3]"), &p, &g).unwrap();
        assert_eq!(v.body().re, p.couplings[0]);
        assert!(evaluate(&ex("c[1]*c[1]"), &p, &g).unwrap().terms.is_empty());
        let q = sample_jet_point(42, &g, &ConstraintSet::none()).unwrap();
        assert_eq!(p.fields[0].values, q.fields[0].values);
        assert_eq!(p.couplings, q.couplings);
    }

    #[test]
    fn metric_signs() {
        let g = GroupData::su2();
        let p = sample_jet_point(1, &g, &ConstraintSet::none()).unwrap();
        let a = |k: u8| evaluate(&ex(&format!("A[{k}]")), &p, &g).unwrap().body().re;
        let sq = evaluate(&ex("A[mu]*A[^mu]"), &p, &g).unwrap().body().re;
        let expect = a(0) * a(0) - a(1) * a(1) - a(2) * a(2) - a(3) * a(3);
        assert!((sq - expect).abs() < 1e-14);
        let gm = evaluate(&ex("g[mu,^mu]"), &p, &g).unwrap().body().re;
        assert_eq!(gm, 4.0);
        assert_eq!(evaluate(&ex("g[^0,^0] + g[1,1]"), &p, &g).unwrap().body().re, 0.0);
    }

    #[test]
    fn order_cap() {
        let g = GroupData::su2();
        let p = sample_jet_point(1, &g, &ConstraintSet::none()).unwrap();
        assert!(evaluate(&ex("d[0]d[1]d[2]B[1]"), &p, &g).is_ok());
        assert_eq!(evaluate(&ex("d[0]d[1]d[2]d[3]B[1]"), &p, &g), Err(JetError::OrderTooHigh(4)));
        assert!(matches!(evaluate(&ex("A[mu;a]"), &p, &g), Err(JetError::Unassigned(_))));
    }

    #[test]
    fn constraints_hold_at_sampled_points() {
        for (g, cs) in [(GroupData::su2(), ConstraintSet::abelian()), (GroupData::su3(), ConstraintSet::covariant())] {
            let p = sample_jet_point(9, &g, &cs).unwrap();
            let mut e = cs.constraints[0].expression();
            for k in 0..3 {
                let mut worst: f64 = 0.0;
                for a in assignments(&e, g.dim) {
                    worst = worst.max(evaluate_at(&e, &p, &g, &a).unwrap().max_abs());
                }
                assert!(worst < 1e-12, "order {k}: {worst}");
                e = e.derivative(&Index::explicit(IndexKind::Lorentz, k as u8, k % 2 == 1));
            }
            let free = sample_jet_point(9, &g, &ConstraintSet::none()).unwrap();
            let e = cs.constraints[0].expression();
            let a = assignments(&e, g.dim).remove(0);
            assert!(evaluate_at(&e, &free, &g, &a).unwrap().max_abs() > 1e-6);
        }
    }

    #[test]
    fn commutator_identity_and_mutation() {
        let e = ex("D[mu;a,c](D[nu;c,b]X[b]) - D[nu;a,c](D[mu;c,b]X[b]) + g*f[a,b,q]*F[mu,nu;q]*X[b]");
        let r = numeric_identity_check(&e, &GroupData::su2(), 100, 3, 1e-12, &ConstraintSet::none()).unwrap();
        assert!(r.passed, "{r:?}");
        let expansion = ex("2*g*f[a,c,b]*F[^mu,^nu;a]*F[mu,nu;c]*omega[b]");
        let r = numeric_identity_check(&expansion, &GroupData::su3(), 100, 3, 1e-12, &ConstraintSet::none()).unwrap();
        assert!(r.passed, "{r:?}");
        // One sign flipped inside the second field strength.
        let bad = ex("2*g*f[a,c,b]*F[^mu,^nu;a]*(d[mu]A[nu;c] - d[nu]A[mu;c] - g*f[c,d,e]*A[mu;d]*A[nu;e])*omega[b]");
        let r = numeric_identity_check(&bad, &GroupData::su3(), 50, 3, 1e-12, &ConstraintSet::none()).unwrap();
        assert!(r.max_residual > 1e-3, "{r:?}");
    }

    #[test]
    fn reports_are_deterministic() {
        let e = ex("f[a,b,c]*A[mu;b]*A[nu;c]");
        let a = numeric_identity_check(&e, &GroupData::su3(), 8, 11, 1e-10, &ConstraintSet::none()).unwrap();
        let b = numeric_identity_check(&e, &GroupData::su3(), 8, 11, 1e-10, &ConstraintSet::none()).unwrap();
        assert_eq!(a, b);
        assert!(!a.passed);
    }
}
